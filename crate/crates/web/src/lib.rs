//! WebAssembly bindings for a single-page demo: evaluate a rule on a
//! structure, explore a rule's extension over the universe, and play a game
//! against a secret rule.
//!
//! Each binding wraps a plain Rust function returning `Result<_, String>`
//! so the logic is testable natively.

use odeen_core::rng::{derive_seed, seeded, Rng};
use odeen_core::service::{Difficulty, GameSession, GuessResult};
use odeen_core::universe::{Cell, Color, PieceShape};
use odeen_core::{parse, Interpreter, Structure, StructureIndex};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Parse result: the canonical text or the syntax error.
#[derive(Debug, Serialize, PartialEq, Eq)]
pub struct Canonical {
    pub canonical: String,
    pub index: usize,
    pub category: String,
}

pub fn canonicalize(rule: &str) -> Result<Canonical, String> {
    let ast = parse(rule).map_err(|e| e.to_string())?;
    Ok(Canonical {
        canonical: ast.render(),
        index: ast.index().get(),
        category: format!("{:?}", ast.category()).to_lowercase(),
    })
}

pub fn evaluate_text(rule: &str, structure: &str) -> Result<bool, String> {
    let ast = parse(rule).map_err(|e| e.to_string())?;
    let s = Structure::parse(structure).map_err(|e| e.to_string())?;
    Ok(Interpreter::default().evaluate(&ast, &s))
}

#[derive(Debug, Serialize, PartialEq, Eq)]
pub struct Extension {
    pub canonical: String,
    /// Structures satisfying the rule.
    pub weight: usize,
    pub total: usize,
    pub positives: Vec<String>,
    pub negatives: Vec<String>,
}

/// Counts the rule's positives and draws up to `samples` examples of each label.
pub fn explore_rule(rule: &str, samples: usize, seed: u64) -> Result<Extension, String> {
    use rand::seq::index::sample;
    let ast = parse(rule).map_err(|e| e.to_string())?;
    let row = Interpreter::default().evaluate_row(&ast);
    let ones: Vec<usize> = row.iter_ones().collect();
    let zeros: Vec<usize> = row.not().iter_ones().collect();
    let mut rng = seeded(seed);
    let pick = |pool: &[usize], rng: &mut Rng| -> Vec<String> {
        let n = samples.min(pool.len());
        let mut chosen: Vec<usize> = sample(rng, pool.len(), n).into_iter().map(|i| pool[i]).collect();
        chosen.sort_unstable();
        chosen.into_iter().map(|i| Structure::from_index(StructureIndex::new(i).expect("row bit inside universe")).render()).collect()
    };
    Ok(Extension {
        canonical: ast.render(),
        weight: ones.len(),
        total: ones.len() + zeros.len(),
        positives: pick(&ones, &mut rng),
        negatives: pick(&zeros, &mut rng),
    })
}

/// One cell as the page draws it.
#[derive(Debug, Serialize, PartialEq, Eq)]
pub struct CellView {
    pub color: Option<&'static str>,
    pub shape: Option<&'static str>,
}

pub fn describe_structure(structure: &str) -> Result<Vec<CellView>, String> {
    let s = Structure::parse(structure).map_err(|e| e.to_string())?;
    Ok(s.cells()
        .iter()
        .map(|c: &Cell| CellView {
            color: c.color().map(|col| match col {
                Color::Red => "red",
                Color::Blue => "blue",
            }),
            shape: c.shape().map(|sh| match sh {
                PieceShape::Square => "square",
                PieceShape::PyramidUp => "up",
                PieceShape::PyramidDown => "down",
            }),
        })
        .collect())
}

fn to_js<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("view types serialize")
}

/// `{"canonical", "index", "category"}` as JSON, or throws the syntax error.
#[wasm_bindgen(js_name = canonicalRule)]
pub fn canonical_rule(rule: &str) -> Result<String, JsError> {
    canonicalize(rule).map(|c| to_js(&c)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn evaluate(rule: &str, structure: &str) -> Result<bool, JsError> {
    evaluate_text(rule, structure).map_err(|e| JsError::new(&e))
}

/// Rule extension summary as JSON.
#[wasm_bindgen]
pub fn explore(rule: &str, samples: u32, seed: u32) -> Result<String, JsError> {
    explore_rule(rule, samples as usize, seed as u64).map(|e| to_js(&e)).map_err(|e| JsError::new(&e))
}

/// Cells of a structure as JSON `[{"color","shape"}]`.
#[wasm_bindgen(js_name = describeStructure)]
pub fn describe_structure_js(structure: &str) -> Result<String, JsError> {
    describe_structure(structure).map(|c| to_js(&c)).map_err(|e| JsError::new(&e))
}

/// A game against a secret rule, played entirely in the page.
#[wasm_bindgen]
pub struct Game {
    session: GameSession,
    interpreter: Interpreter,
}

impl Game {
    pub fn create(easy: bool, seed: u64) -> Game {
        let interpreter = Interpreter::default();
        let difficulty = if easy { Difficulty::Easy } else { Difficulty::Normal };
        let session = GameSession::random(difficulty, &interpreter, &mut seeded(derive_seed(seed, 0x0de3)));
        Game { session, interpreter }
    }

    pub fn probe_text(&mut self, structure: &str) -> Result<bool, String> {
        self.session.probe_text(structure).map_err(|e| e.to_string())
    }

    pub fn guess_text(&mut self, rule: &str) -> Result<GuessResult, String> {
        self.session.guess(rule, &self.interpreter).map_err(|e| e.to_string())
    }

    pub fn session(&self) -> &GameSession {
        &self.session
    }
}

#[wasm_bindgen]
impl Game {
    #[wasm_bindgen(constructor)]
    pub fn new(easy: bool, seed: u32) -> Game {
        Game::create(easy, seed as u64)
    }

    /// Revealed `(structure, label)` pairs as JSON `[{"s","y"}]`.
    pub fn reveals(&self) -> String {
        to_js(&self.session.revealed())
    }

    pub fn status(&self) -> String {
        format!("{:?}", self.session.status()).to_lowercase()
    }

    pub fn probe(&mut self, structure: &str) -> Result<bool, JsError> {
        self.probe_text(structure).map_err(|e| JsError::new(&e))
    }

    /// Verdict JSON: `{"verdict", "counterexample"?, "secret"?, "error"?}`.
    pub fn guess(&mut self, rule: &str) -> Result<String, JsError> {
        self.guess_text(rule).map(|r| to_js(&r)).map_err(|e| JsError::new(&e))
    }

    /// Ends the game and returns the secret.
    pub fn reveal(&mut self) -> Result<String, JsError> {
        self.session.abandon().map_err(|e| JsError::new(&e.to_string()))?;
        Ok(self.session.disclosed_secret().unwrap_or_default())
    }
}
