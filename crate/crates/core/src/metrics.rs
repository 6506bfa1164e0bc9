//! Scoring: Nearest Rule Score, tag accuracy and rule accuracy.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bits::get_bit;
use crate::dataset::Game;
use crate::error::MetricsError;
use crate::grammar::{parse, RuleAst};
use crate::par;
use crate::semantics::World;
use crate::solvers::PredictionRecord;

pub type TagVector = Vec<bool>;

pub fn hamming(v: &[bool], w: &[bool]) -> Result<usize, MetricsError> {
    if v.len() != w.len() {
        return Err(MetricsError::LengthMismatch(v.len(), w.len()));
    }
    Ok(v.iter().zip(w).filter(|(a, b)| a != b).count())
}

/// `true` when `v` is strictly closer to the secret's tags than to every
/// other tag vector some rule realizes on the game's eval structures.
pub fn nrs_game(v: Option<&[bool]>, game: &Game, world: &World) -> bool {
    let Some(v) = v else { return false };
    let golden = &game.eval_labels;
    let Ok(best) = hamming(v, golden) else { return false };
    if best == 0 {
        return true;
    }
    let columns: Vec<usize> = game.eval_structures.iter().map(|s| s.index().get()).collect();
    !(0..world.classes().len()).any(|class| {
        let row = world.representative_row(class);
        let mut distance = 0;
        let mut same_as_golden = true;
        for (i, &col) in columns.iter().enumerate() {
            let bit = get_bit(row, col);
            if bit != v[i] {
                distance += 1;
                if distance > best {
                    return false;
                }
            }
            same_as_golden &= bit == golden[i];
        }
        !same_as_golden
    })
}

/// `(ℓ − d(v, w*)) / ℓ`.
pub fn t_acc(v: &[bool], game: &Game) -> Result<f64, MetricsError> {
    let l = game.eval_labels.len();
    let d = hamming(v, &game.eval_labels)?;
    Ok(if l == 0 { 1.0 } else { (l - d) as f64 / l as f64 })
}

pub fn r_acc_game(predicted: Option<&RuleAst>, golden: &RuleAst, world: &World) -> bool {
    predicted.is_some_and(|p| world.equivalent(p.index(), golden.index()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreOptions {
    /// Tag every eval structure of an unknown game with the board's
    /// majority label and count it towards T-Acc.
    pub majority_fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameScore {
    pub nrs: bool,
    pub t_acc: Option<f64>,
    pub r_acc: bool,
    pub unknown: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub games: usize,
    pub nrs: f64,
    pub t_acc: f64,
    pub r_acc: f64,
    pub unknown_rate: f64,
    /// Games counted in the T-Acc mean.
    pub tagged: usize,
    pub mean_cg_calls: Option<f64>,
    pub mean_i_calls: Option<f64>,
    pub mean_wall_seconds: Option<f64>,
}

pub fn score_game(game: &Game, prediction: &PredictionRecord, world: &World, options: ScoreOptions) -> Result<GameScore, MetricsError> {
    let unknown = prediction.tags.is_none();
    let fallback;
    let tags = match &prediction.tags {
        Some(tags) => Some(tags.as_slice()),
        None if options.majority_fallback => {
            let label = game.board.positive_rate() > 0.5;
            fallback = vec![label; game.eval_labels.len()];
            Some(fallback.as_slice())
        }
        None => None,
    };
    let t_acc = tags.map(|v| t_acc(v, game)).transpose()?;
    let predicted = prediction.rule.as_deref().and_then(|t| parse(t).ok());
    Ok(GameScore {
        nrs: !unknown && nrs_game(tags, game, world),
        t_acc,
        r_acc: r_acc_game(predicted.as_ref(), &game.secret_rule, world),
        unknown,
    })
}

pub fn score_run(games: &[Game], predictions: &[PredictionRecord], world: &World) -> Result<MetricsReport, MetricsError> {
    score_run_with(games, predictions, world, ScoreOptions::default())
}

pub fn score_run_with(
    games: &[Game],
    predictions: &[PredictionRecord],
    world: &World,
    options: ScoreOptions,
) -> Result<MetricsReport, MetricsError> {
    if games.len() != predictions.len() {
        return Err(MetricsError::CountMismatch { games: games.len(), predictions: predictions.len() });
    }
    let by_id: HashMap<&str, &Game> = games.iter().map(|g| (g.game_id.as_str(), g)).collect();
    let mut pairs = Vec::with_capacity(games.len());
    for p in predictions {
        let game = by_id.get(p.game_id.as_str()).ok_or_else(|| MetricsError::UnknownGame(p.game_id.clone()))?;
        pairs.push((*game, p));
    }
    let scores = par::map_slice(&pairs, |(g, p)| score_game(g, p, world, options));
    let scores = scores.into_iter().collect::<Result<Vec<_>, _>>()?;

    let n = games.len();
    let frac = |count: usize| if n == 0 { 0.0 } else { count as f64 / n as f64 };
    let tagged: Vec<f64> = scores.iter().filter_map(|s| s.t_acc).collect();
    let costs: Vec<_> = predictions.iter().filter_map(|p| p.costs).collect();
    let mean_cost = |f: &dyn Fn(&crate::solvers::CostCounter) -> f64| {
        (!costs.is_empty()).then(|| costs.iter().map(f).sum::<f64>() / costs.len() as f64)
    };
    Ok(MetricsReport {
        games: n,
        nrs: frac(scores.iter().filter(|s| s.nrs).count()),
        t_acc: if tagged.is_empty() { 0.0 } else { tagged.iter().sum::<f64>() / tagged.len() as f64 },
        r_acc: frac(scores.iter().filter(|s| s.r_acc).count()),
        unknown_rate: frac(scores.iter().filter(|s| s.unknown).count()),
        tagged: tagged.len(),
        mean_cg_calls: mean_cost(&|c| c.cg_calls as f64),
        mean_i_calls: mean_cost(&|c| c.i_calls as f64),
        mean_wall_seconds: mean_cost(&|c| c.wall_seconds),
    })
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>, prec: usize| v.map_or("-".to_string(), |x| format!("{x:.prec$}"));
        let rows = [
            ("games", self.games.to_string()),
            ("NRS", format!("{:.4}", self.nrs)),
            ("T-Acc", format!("{:.4}", self.t_acc)),
            ("R-Acc", format!("{:.4}", self.r_acc)),
            ("unknown", format!("{:.4}", self.unknown_rate)),
            ("tagged", self.tagged.to_string()),
            ("mean CG calls", opt(self.mean_cg_calls, 1)),
            ("mean I calls", opt(self.mean_i_calls, 1)),
            ("mean seconds", opt(self.mean_wall_seconds, 5)),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (key, value) in rows {
            writeln!(f, "{key:<width$}  {value:>12}")?;
        }
        Ok(())
    }
}
