/* tslint:disable */
/* eslint-disable */

/**
 * A game against a secret rule, played entirely in the page.
 */
export class Game {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Verdict JSON: `{"verdict", "counterexample"?, "secret"?, "error"?}`.
     */
    guess(rule: string): string;
    constructor(easy: boolean, seed: number);
    probe(structure: string): boolean;
    /**
     * Ends the game and returns the secret.
     */
    reveal(): string;
    /**
     * Revealed `(structure, label)` pairs as JSON `[{"s","y"}]`.
     */
    reveals(): string;
    status(): string;
}

/**
 * `{"canonical", "index", "category"}` as JSON, or throws the syntax error.
 */
export function canonicalRule(rule: string): string;

/**
 * Cells of a structure as JSON `[{"color","shape"}]`.
 */
export function describeStructure(structure: string): string;

export function evaluate(rule: string, structure: string): boolean;

/**
 * Rule extension summary as JSON.
 */
export function explore(rule: string, samples: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_game_free: (a: number, b: number) => void;
    readonly canonicalRule: (a: number, b: number) => [number, number, number, number];
    readonly describeStructure: (a: number, b: number) => [number, number, number, number];
    readonly evaluate: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly explore: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly game_guess: (a: number, b: number, c: number) => [number, number, number, number];
    readonly game_new: (a: number, b: number) => number;
    readonly game_probe: (a: number, b: number, c: number) => [number, number, number];
    readonly game_reveal: (a: number) => [number, number, number, number];
    readonly game_reveals: (a: number) => [number, number];
    readonly game_status: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
