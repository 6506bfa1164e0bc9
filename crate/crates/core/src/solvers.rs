//! Solvers for unexplained games.
//!
//! * [`exhaustive_solve`] keeps every rule consistent with the board.
//! * [`crn_solve`] draws `t` conjectures from a [`ConjectureSource`], scores
//!   each by its hit rate on the board under a [`RuleInterpreter`], and
//!   answers with the best one (or, in strict mode, only with a conjecture
//!   that explains the whole board).
//!
//! Cost counters follow the closed forms `r·b·I + s·I` (exhaustive) and
//! `t·CG + t·b·I + s·I` (conjecture/verify).

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{Board, BoardEntry, Game};
use crate::error::SolverError;
use crate::grammar::{parse, rule_count, sample_rule, RuleAst, RuleIndex};
use crate::interpreter::Interpreter;
use crate::rng::{derive_seed_str, seeded};
use crate::semantics::World;
use crate::serde_labels;
use crate::universe::Structure;

/// Counts of conjecture-generator invocations and interpreter
/// `(rule, structure)` evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostCounter {
    pub cg_calls: u64,
    pub i_calls: u64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Answer with the conjecture of highest hit rate.
    #[default]
    BestHitRate,
    /// Answer only with a conjecture of hit rate 1, else unknown.
    Strict,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    FirstGenerated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub t: usize,
    pub mode: Mode,
    pub tie_break: TieBreak,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { t: 300, mode: Mode::BestHitRate, tie_break: TieBreak::FirstGenerated }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// An explanation string; it may be outside the grammar when a learned
    /// interpreter accepted it.
    Rule(String),
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub outcome: Outcome,
    /// Tags for the game's eval structures; `None` when unknown.
    pub tags: Option<Vec<bool>>,
    pub costs: CostCounter,
    /// Distinct conjecture strings drawn (0 for the exhaustive solver).
    pub distinct_conjectures: usize,
    /// Board hit rate of the chosen conjecture.
    pub hit_rate: Option<f64>,
}

impl Prediction {
    pub fn unknown(costs: CostCounter) -> Self {
        Prediction { outcome: Outcome::Unknown, tags: None, costs, distinct_conjectures: 0, hit_rate: None }
    }

    pub fn rule_text(&self) -> Option<&str> {
        match &self.outcome {
            Outcome::Rule(text) => Some(text),
            Outcome::Unknown => None,
        }
    }

    /// The predicted rule, when it is a sentence of the grammar.
    pub fn rule(&self) -> Option<RuleAst> {
        self.rule_text().and_then(|t| parse(t).ok())
    }

    pub fn is_unknown(&self) -> bool {
        self.outcome == Outcome::Unknown
    }

    pub fn record(&self, game_id: &str) -> PredictionRecord {
        PredictionRecord {
            game_id: game_id.to_string(),
            rule: self.rule_text().map(str::to_string),
            tags: self.tags.clone(),
            costs: Some(self.costs),
        }
    }
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub game_id: String,
    pub rule: Option<String>,
    #[serde(with = "serde_labels::optional_many")]
    pub tags: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<CostCounter>,
}

/// Produces candidate explanation strings for a board.
pub trait ConjectureSource {
    fn name(&self) -> &str;

    /// Exactly `n` conjectures, in generation order.
    fn conjectures(&mut self, board: &Board, n: usize, seed: u64) -> Result<Vec<String>, SolverError>;
}

/// Tags structures according to an explanation string.
pub trait RuleInterpreter {
    /// `Ok(None)` when the interpreter cannot read the rule.
    fn interpret(&mut self, rule: &str, structures: &[Structure]) -> Result<Option<Vec<bool>>, SolverError>;
}

/// Uniformly random grammar rules from a ChaCha8 stream seeded per request.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformSampler;

impl UniformSampler {
    pub fn sample(n: usize, seed: u64) -> Vec<String> {
        let mut rng = seeded(seed);
        (0..n).map(|_| sample_rule(&mut rng).render()).collect()
    }
}

impl ConjectureSource for UniformSampler {
    fn name(&self) -> &str {
        "uniform"
    }

    fn conjectures(&mut self, _board: &Board, n: usize, seed: u64) -> Result<Vec<String>, SolverError> {
        Ok(Self::sample(n, seed))
    }
}

/// All rules in canonical order, cycling if more are requested.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnumerationSource;

impl ConjectureSource for EnumerationSource {
    fn name(&self) -> &str {
        "enumeration"
    }

    fn conjectures(&mut self, _board: &Board, n: usize, _seed: u64) -> Result<Vec<String>, SolverError> {
        let total = rule_count();
        Ok((0..n)
            .map(|i| RuleIndex::new(i % total).expect("index below rule count").rule().render())
            .collect())
    }
}

/// Knows the secret rule behind every board it was built from.
#[derive(Debug, Clone, Default)]
pub struct OracleSource {
    secrets: HashMap<Vec<BoardEntry>, String>,
}

impl OracleSource {
    pub fn from_games<'a>(games: impl IntoIterator<Item = &'a Game>) -> Self {
        OracleSource {
            secrets: games
                .into_iter()
                .map(|g| (g.board.entries().to_vec(), g.secret_rule.render()))
                .collect(),
        }
    }
}

impl ConjectureSource for OracleSource {
    fn name(&self) -> &str {
        "oracle"
    }

    fn conjectures(&mut self, board: &Board, n: usize, _seed: u64) -> Result<Vec<String>, SolverError> {
        let secret = self
            .secrets
            .get(board.entries())
            .ok_or_else(|| SolverError::Source("oracle does not know this board".into()))?;
        Ok(vec![secret.clone(); n])
    }
}

/// The hard-coded interpreter: rejects anything outside the grammar.
#[derive(Debug, Clone, Copy, Default)]
pub struct HardCodedInterpreter {
    pub interpreter: Interpreter,
}

impl RuleInterpreter for HardCodedInterpreter {
    fn interpret(&mut self, rule: &str, structures: &[Structure]) -> Result<Option<Vec<bool>>, SolverError> {
        Ok(parse(rule)
            .ok()
            .map(|ast| structures.iter().map(|s| self.interpreter.evaluate(&ast, s)).collect()))
    }
}

/// Same answers as [`HardCodedInterpreter`], read from the semantic matrix.
#[derive(Debug, Clone, Copy)]
pub struct MatrixInterpreter<'a> {
    pub world: &'a World,
}

impl RuleInterpreter for MatrixInterpreter<'_> {
    fn interpret(&mut self, rule: &str, structures: &[Structure]) -> Result<Option<Vec<bool>>, SolverError> {
        Ok(parse(rule).ok().map(|ast| self.world.labels(ast.index(), structures)))
    }
}

/// Fraction of board entries whose label the interpreter reproduces; 0 for
/// rules the interpreter rejects.
pub fn hit_rate(rule: &str, board: &Board, interpreter: &mut dyn RuleInterpreter) -> Result<f64, SolverError> {
    if board.is_empty() {
        return Ok(0.0);
    }
    let structures: Vec<Structure> = board.structures().collect();
    Ok(match interpreter.interpret(rule, &structures)? {
        Some(labels) => {
            check_label_count(&labels, structures.len())?;
            let hits = labels.iter().zip(board.entries()).filter(|(l, e)| **l == e.y).count();
            hits as f64 / board.len() as f64
        }
        None => 0.0,
    })
}

fn check_label_count(labels: &[bool], expected: usize) -> Result<(), SolverError> {
    if labels.len() == expected {
        Ok(())
    } else {
        Err(SolverError::Protocol(format!("interpreter returned {} labels for {expected} structures", labels.len())))
    }
}

/// Keeps every rule consistent with the board and answers with the
/// smallest-index survivor. No survivor means the board is corrupt: unknown.
pub fn exhaustive_solve(game: &Game, world: &World) -> Prediction {
    let start = Instant::now();
    let m = world.matrix();
    let board = game.board.entries();
    let survivor = (0..m.rule_count())
        .map(|i| RuleIndex::new(i).expect("index below rule count"))
        .find(|&r| board.iter().all(|e| m.bit(r, e.s.index()) == e.y));
    let mut costs = CostCounter {
        cg_calls: 0,
        i_calls: (m.rule_count() * board.len()) as u64,
        wall_seconds: 0.0,
    };
    let prediction = match survivor {
        Some(rule) => {
            costs.i_calls += game.eval_structures.len() as u64;
            Prediction {
                outcome: Outcome::Rule(rule.rule().render()),
                tags: Some(world.labels(rule, &game.eval_structures)),
                costs,
                distinct_conjectures: 0,
                hit_rate: Some(1.0),
            }
        }
        None => Prediction::unknown(costs),
    };
    Prediction {
        costs: CostCounter { wall_seconds: start.elapsed().as_secs_f64(), ..prediction.costs },
        ..prediction
    }
}

/// Conjecture-then-verify with `cfg.t` conjectures.
pub fn crn_solve(
    game: &Game,
    source: &mut dyn ConjectureSource,
    interpreter: &mut dyn RuleInterpreter,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<Prediction, SolverError> {
    let start = Instant::now();
    let t = cfg.t.max(1);
    let conjectures = source.conjectures(&game.board, t, seed)?;
    if conjectures.len() != t {
        return Err(SolverError::Source(format!(
            "{} returned {} conjectures, {t} requested",
            source.name(),
            conjectures.len()
        )));
    }
    let structures: Vec<Structure> = game.board.structures().collect();
    let b = structures.len();
    let mut costs = CostCounter { cg_calls: t as u64, i_calls: 0, wall_seconds: 0.0 };
    let mut best: Option<(usize, usize)> = None;
    for (i, text) in conjectures.iter().enumerate() {
        costs.i_calls += b as u64;
        let Some(labels) = interpreter.interpret(text, &structures)? else { continue };
        check_label_count(&labels, b)?;
        let hits = labels.iter().zip(game.board.entries()).filter(|(l, e)| **l == e.y).count();
        if best.is_none_or(|(_, h)| hits > h) {
            best = Some((i, hits));
        }
    }
    let distinct_conjectures = conjectures.iter().collect::<HashSet<_>>().len();
    let chosen = best.filter(|&(_, hits)| cfg.mode == Mode::BestHitRate || hits == b);
    let prediction = match chosen {
        Some((i, hits)) => {
            let text = &conjectures[i];
            let tags = interpreter
                .interpret(text, &game.eval_structures)?
                .ok_or_else(|| SolverError::Protocol(format!("interpreter rejected {text:?} on the eval set")))?;
            check_label_count(&tags, game.eval_structures.len())?;
            costs.i_calls += game.eval_structures.len() as u64;
            Prediction {
                outcome: Outcome::Rule(text.clone()),
                tags: Some(tags),
                costs,
                distinct_conjectures,
                hit_rate: Some(if b == 0 { 0.0 } else { hits as f64 / b as f64 }),
            }
        }
        None => Prediction { distinct_conjectures, ..Prediction::unknown(costs) },
    };
    Ok(Prediction {
        costs: CostCounter { wall_seconds: start.elapsed().as_secs_f64(), ..prediction.costs },
        ..prediction
    })
}

/// Per-game seed for conjecture sources.
pub fn game_seed(base: u64, game: &Game) -> u64 {
    derive_seed_str(base, &game.game_id)
}

/// For each `t` in `1..=t_max`, the fraction of games whose secret's
/// equivalence class appears among the first `t` conjectures.
pub fn cumulative_discovery_curve(
    games: &[Game],
    source: &mut dyn ConjectureSource,
    world: &World,
    t_max: usize,
    seed: u64,
) -> Result<Vec<f64>, SolverError> {
    let t_max = t_max.max(1);
    let mut first_hit = vec![0usize; t_max + 1];
    for game in games {
        let secret = game.secret_index();
        let conjectures = source.conjectures(&game.board, t_max, game_seed(seed, game))?;
        let found = conjectures
            .iter()
            .position(|c| parse(c).is_ok_and(|ast| world.equivalent(ast.index(), secret)));
        if let Some(i) = found {
            first_hit[i + 1] += 1;
        }
    }
    let total = games.len().max(1) as f64;
    let mut running = 0;
    Ok((1..=t_max)
        .map(|t| {
            running += first_hit[t];
            running as f64 / total
        })
        .collect())
}

/// Closed-form interpreter calls for the conjecture/verify solver.
pub fn crn_interpreter_calls(t: usize, board: usize, eval: usize) -> u64 {
    (t * board + eval) as u64
}

/// Closed-form interpreter calls for the exhaustive solver.
pub fn exhaustive_interpreter_calls(rules: usize, board: usize, eval: usize) -> u64 {
    (rules * board + eval) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Scripted(Vec<&'static str>);

    impl ConjectureSource for Scripted {
        fn name(&self) -> &str {
            "scripted"
        }

        fn conjectures(&mut self, _board: &Board, n: usize, _seed: u64) -> Result<Vec<String>, SolverError> {
            Ok(self.0.iter().cycle().take(n).map(|s| s.to_string()).collect())
        }
    }

    fn tiny_game(rule: &str, board: &[&str], eval: &[&str]) -> Game {
        let ast = parse(rule).unwrap();
        let interp = Interpreter::default();
        let entries = board
            .iter()
            .map(|s| {
                let s = Structure::parse(s).unwrap();
                BoardEntry { s, y: interp.evaluate(&ast, &s) }
            })
            .collect();
        let eval_structures: Vec<Structure> = eval.iter().map(|s| Structure::parse(s).unwrap()).collect();
        let eval_labels = eval_structures.iter().map(|s| interp.evaluate(&ast, s)).collect();
        Game { game_id: "tiny".into(), secret_rule: ast, board: Board::new(entries), eval_structures, eval_labels }
    }

    #[test]
    fn hit_rate_examples() {
        let game = tiny_game("at_least 1 red", &["Q.....", "q.....", "......", "QQ...."], &[]);
        let mut interp = HardCodedInterpreter::default();
        assert_eq!(hit_rate("at_least 1 red", &game.board, &mut interp).unwrap(), 1.0);
        assert_eq!(hit_rate("zero red", &game.board, &mut interp).unwrap(), 0.0);
        assert_eq!(hit_rate("zero blue", &game.board, &mut interp).unwrap(), 0.75);
        assert_eq!(hit_rate("at least one red", &game.board, &mut interp).unwrap(), 0.0);
    }

    #[test]
    fn best_mode_takes_first_argmax() {
        let game = tiny_game("at_least 1 red", &["Q.....", "q.....", "......", "QQ...."], &["Q....q"]);
        let mut source = Scripted(vec!["zero blue", "garbage words", "at_least 1 block", "zero blue"]);
        let cfg = SolverConfig { t: 4, ..Default::default() };
        let p = crn_solve(&game, &mut source, &mut HardCodedInterpreter::default(), &cfg, 0).unwrap();
        // "zero blue" and "at_least 1 block" both hit 3/4; the first one wins
        assert_eq!(p.rule_text(), Some("zero blue"));
        assert_eq!(p.hit_rate, Some(0.75));
        assert_eq!(p.tags, Some(vec![false]));
        assert_eq!(p.distinct_conjectures, 3);
        assert_eq!(p.costs.cg_calls, 4);
        assert_eq!(p.costs.i_calls, 4 * 4 + 1);
    }

    #[test]
    fn strict_mode_admits_ignorance() {
        let game = tiny_game("at_least 1 red", &["Q.....", "q.....", "......", "QQ...."], &["Q....q"]);
        let cfg = SolverConfig { t: 3, mode: Mode::Strict, ..Default::default() };
        let mut source = Scripted(vec!["zero blue", "at_least 1 block"]);
        let p = crn_solve(&game, &mut source, &mut HardCodedInterpreter::default(), &cfg, 0).unwrap();
        assert!(p.is_unknown());
        assert_eq!(p.tags, None);
        assert_eq!(p.costs.i_calls, 3 * 4);
        let mut source = Scripted(vec!["zero blue", "at_least 1 red pyramid or at_least 1 red"]);
        let p = crn_solve(&game, &mut source, &mut HardCodedInterpreter::default(), &cfg, 0).unwrap();
        assert_eq!(p.rule_text(), Some("at_least 1 red pyramid or at_least 1 red"));
        assert_eq!(p.hit_rate, Some(1.0));
    }

    #[test]
    fn all_rejected_conjectures_give_unknown() {
        let game = tiny_game("zero red", &["Q.....", "......"], &["q....."]);
        let mut source = Scripted(vec!["at least one pointing up"]);
        let cfg = SolverConfig { t: 2, ..Default::default() };
        let p = crn_solve(&game, &mut source, &mut HardCodedInterpreter::default(), &cfg, 0).unwrap();
        assert!(p.is_unknown());
    }

    #[test]
    fn uniform_sampler_is_seeded() {
        assert_eq!(UniformSampler::sample(20, 9), UniformSampler::sample(20, 9));
        assert_ne!(UniformSampler::sample(20, 9), UniformSampler::sample(20, 10));
        for text in UniformSampler::sample(50, 1) {
            assert_eq!(parse(&text).unwrap().render(), text);
        }
    }

    #[test]
    fn closed_form_costs() {
        assert_eq!(crn_interpreter_calls(300, 32, 1176), 10_776);
        assert_eq!(crn_interpreter_calls(10, 32, 1176), 1_496);
    }

    #[test]
    fn record_json_shape() {
        let p = Prediction::unknown(CostCounter::default());
        let line = serde_json::to_string(&p.record("g1")).unwrap();
        assert!(line.starts_with(r#"{"game_id":"g1","rule":null,"tags":null"#), "{line}");
        let back: PredictionRecord = serde_json::from_str(r#"{"game_id":"g","rule":"zero red","tags":[0,1]}"#).unwrap();
        assert_eq!(back.tags, Some(vec![false, true]));
        assert_eq!(back.costs, None);
    }
}
