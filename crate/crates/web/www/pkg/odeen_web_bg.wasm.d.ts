/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_game_free: (a: number, b: number) => void;
export const canonicalRule: (a: number, b: number) => [number, number, number, number];
export const describeStructure: (a: number, b: number) => [number, number, number, number];
export const evaluate: (a: number, b: number, c: number, d: number) => [number, number, number];
export const explore: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const game_guess: (a: number, b: number, c: number) => [number, number, number, number];
export const game_new: (a: number, b: number) => number;
export const game_probe: (a: number, b: number, c: number) => [number, number, number];
export const game_reveal: (a: number) => [number, number, number, number];
export const game_reveals: (a: number) => [number, number];
export const game_status: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
