//! Reproducible training/test splits.
//!
//! Training games pair a rule with `m` labelled structures; test games pair
//! a rule with a `k`-structure board built the Zendo way (pairs of
//! near-identical structures with opposite tags first, then the most
//! informative structures until only the secret's equivalence class fits).
//! Every game also carries `l` held-out evaluation structures.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::bits::{self, ColumnCounter, ROW_WORDS};
use crate::error::DatasetError;
use crate::grammar::{enumerate_rules, rule_count, Num, Quantifier, RuleAst, RuleCategory, RuleIndex, Token};
use crate::par;
use crate::rng::{derive_seed, derive_seed_str, seeded, Rng};
use crate::semantics::World;
use crate::serde_labels;
use crate::universe::{Cell, Structure, StructureIndex, STRUCTURE_COUNT, STRUCTURE_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoardEntry {
    pub s: Structure,
    #[serde(with = "serde_labels::one")]
    pub y: bool,
}

/// Labelled observations of one phenomenon, without duplicate structures.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Board(Vec<BoardEntry>);

impl Board {
    pub fn new(entries: Vec<BoardEntry>) -> Self {
        Board(entries)
    }

    /// Labels each structure with `rule`'s row.
    pub fn labelled(world: &World, rule: RuleIndex, structures: impl IntoIterator<Item = Structure>) -> Self {
        Board(structures.into_iter().map(|s| BoardEntry { s, y: world.label(rule, &s) }).collect())
    }

    pub fn entries(&self) -> &[BoardEntry] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn structures(&self) -> impl Iterator<Item = Structure> + '_ {
        self.0.iter().map(|e| e.s)
    }

    pub fn observations(&self) -> impl Iterator<Item = (Structure, bool)> + Clone + '_ {
        self.0.iter().map(|e| (e.s, e.y))
    }

    pub fn positive_rate(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.iter().filter(|e| e.y).count() as f64 / self.0.len() as f64
    }

    pub fn has_duplicates(&self) -> bool {
        let mut seen = HashSet::new();
        !self.0.iter().all(|e| seen.insert(e.s))
    }
}

/// A secret rule, its board, and held-out structures to tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Game {
    pub game_id: String,
    #[serde(rename = "rule", with = "serde_labels::rule_text")]
    pub secret_rule: RuleAst,
    pub board: Board,
    #[serde(rename = "eval")]
    pub eval_structures: Vec<Structure>,
    #[serde(rename = "eval_y", with = "serde_labels::many")]
    pub eval_labels: Vec<bool>,
}

impl Game {
    pub fn secret_index(&self) -> RuleIndex {
        self.secret_rule.index()
    }

    /// Checks labels against the matrix and board/eval disjointness.
    pub fn verify(&self, world: &World) -> Result<(), String> {
        let secret = self.secret_index();
        if self.board.has_duplicates() {
            return Err(format!("{}: duplicate board structure", self.game_id));
        }
        if let Some(e) = self.board.entries().iter().find(|e| world.label(secret, &e.s) != e.y) {
            return Err(format!("{}: board label of {} disagrees with the rule", self.game_id, e.s));
        }
        if self.eval_structures.len() != self.eval_labels.len() {
            return Err(format!("{}: eval and eval_y lengths differ", self.game_id));
        }
        let on_board: HashSet<Structure> = self.board.structures().collect();
        for (s, &y) in self.eval_structures.iter().zip(&self.eval_labels) {
            if on_board.contains(s) {
                return Err(format!("{}: eval structure {s} is on the board", self.game_id));
            }
            if world.label(secret, s) != y {
                return Err(format!("{}: eval label of {s} disagrees with the rule", self.game_id));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Training rules.
    pub n: usize,
    /// Training board size.
    pub m: usize,
    /// Test games.
    pub s: usize,
    /// Test board size.
    pub k: usize,
    /// Held-out structures per game.
    pub l: usize,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { n: 1438, m: 1000, s: 1132, k: 32, l: 1176, seed: 0 }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |msg: &str| Err(DatasetError::Config(msg.to_string()));
        if self.n == 0 || self.m == 0 || self.s == 0 || self.l == 0 {
            return bad("n, m, s and l must be positive");
        }
        if self.k < 2 {
            return bad("k must be at least 2");
        }
        if self.l + self.k > STRUCTURE_COUNT || self.l + self.m > STRUCTURE_COUNT {
            return bad("board plus eval structures exceed the universe");
        }
        Ok(())
    }
}

/// Number of label-discordant similar pairs opening a test board.
pub const SEED_PAIRS: usize = 5;

/// Attempts per test game before giving up on a rule.
pub const MAX_TEST_ATTEMPTS: u64 = 8;

fn is_exactly_two(qty: Quantifier) -> bool {
    qty == Quantifier::Exactly(Num::Two)
}

/// Whether the canonical text contains the bigram `exactly 2`.
pub fn contains_exactly_two(rule: &RuleAst) -> bool {
    match rule {
        RuleAst::Simple(p) => is_exactly_two(p.qty),
        RuleAst::Relational(p) => is_exactly_two(p.qty),
        RuleAst::Conj { left, right, .. } => is_exactly_two(left.qty) || is_exactly_two(right.qty),
    }
}

/// `at_least 2 X and at_most 2 X`, in either order.
pub fn is_spelled_out_exactly_two(rule: &RuleAst) -> bool {
    use crate::grammar::Connective;
    match rule {
        RuleAst::Conj { left, op: Connective::And, right } if left.obj == right.obj => {
            let pair = (left.qty, right.qty);
            pair == (Quantifier::AtLeast(Num::Two), Quantifier::AtMost(Num::Two))
                || pair == (Quantifier::AtMost(Num::Two), Quantifier::AtLeast(Num::Two))
        }
        _ => false,
    }
}

/// Rules allowed in a training set.
pub fn training_eligible(rule: &RuleAst) -> bool {
    !contains_exactly_two(rule) && !is_spelled_out_exactly_two(rule)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum CoverageItem {
    Token(Token),
    Category(RuleCategory),
}

fn coverage_items(rule: &RuleAst) -> Vec<CoverageItem> {
    let mut items: Vec<CoverageItem> = rule.tokens().into_iter().map(CoverageItem::Token).collect();
    items.push(CoverageItem::Category(rule.category()));
    items
}

/// Picks `n` training rules: a greedy cover of every terminal and every
/// top-level production, then uniform fill without replacement.
pub fn select_training_rules(n: usize, rng: &mut Rng) -> Result<Vec<RuleIndex>, DatasetError> {
    let mut eligible: Vec<RuleAst> = enumerate_rules().filter(training_eligible).collect();
    if n > eligible.len() {
        return Err(DatasetError::Config(format!(
            "n = {n} exceeds the {} training-eligible rules",
            eligible.len()
        )));
    }
    eligible.shuffle(rng);
    let mut uncovered: HashSet<CoverageItem> = Token::terminals()
        .into_iter()
        .map(CoverageItem::Token)
        .chain(RuleCategory::ALL.into_iter().map(CoverageItem::Category))
        .collect();
    let mut chosen = Vec::new();
    let mut rest = Vec::with_capacity(eligible.len());
    for rule in eligible {
        let items = coverage_items(&rule);
        if items.iter().any(|i| uncovered.contains(i)) {
            for i in &items {
                uncovered.remove(i);
            }
            chosen.push(rule.index());
        } else {
            rest.push(rule.index());
        }
    }
    if !uncovered.is_empty() {
        return Err(DatasetError::Config(format!("cannot cover {uncovered:?} with eligible rules")));
    }
    if chosen.len() > n {
        return Err(DatasetError::Config(format!(
            "covering every token and construct needs {} rules, but n = {n}",
            chosen.len()
        )));
    }
    let fill = index::sample(rng, rest.len(), n - chosen.len());
    chosen.extend(fill.into_iter().map(|i| rest[i]));
    chosen.sort_unstable();
    Ok(chosen)
}

/// Number of equivalence classes consistent with the board.
pub fn verify_representativity(board: &Board, world: &World) -> usize {
    world.consistent_classes(board.observations()).count()
}

fn surviving_rivals(world: &World, secret: RuleIndex, board: &Board) -> Vec<usize> {
    let own = world.classes().class_id(secret);
    world.consistent_classes(board.observations()).filter(|&c| c != own).collect()
}

/// The structure on which the most rival classes disagree with the secret;
/// ties broken at random.
fn best_separator(world: &World, secret: RuleIndex, rivals: &[usize], rng: &mut Rng) -> Option<Structure> {
    let secret_row = world.matrix().row_words(secret);
    let mut counter = ColumnCounter::new(ROW_WORDS);
    for &c in rivals {
        counter.add_xor(world.representative_row(c), secret_row);
    }
    let counts = counter.counts(STRUCTURE_COUNT);
    let best = counts.iter().copied().max().filter(|&m| m > 0)?;
    let ties: Vec<usize> = (0..STRUCTURE_COUNT).filter(|&i| counts[i] == best).collect();
    let pick = *ties.choose(rng)?;
    Some(StructureIndex::new_unchecked(pick).structure())
}

fn neighbours(s: &Structure, distance: usize) -> Vec<Structure> {
    let mut out = Vec::new();
    let mutate = |s: Structure, p: usize| {
        Cell::ALL.into_iter().filter(move |&c| c != s.cell(p)).map(move |c| s.with_cell(p, c))
    };
    for p in 0..STRUCTURE_LEN {
        for one in mutate(*s, p) {
            if distance == 1 {
                out.push(one);
            } else {
                for q in p + 1..STRUCTURE_LEN {
                    out.extend(mutate(one, q));
                }
            }
        }
    }
    out
}

/// Up to `pairs` disjoint pairs of structures differing in one cell (two if
/// none exist) whose labels differ. Constant rules have no such pair; they
/// get label-agnostic one-cell pairs instead.
fn similar_discordant_pairs(
    world: &World,
    secret: RuleIndex,
    pairs: usize,
    rng: &mut Rng,
) -> Vec<(Structure, Structure)> {
    let row = world.matrix().row_words(secret);
    let ones = bits::popcount(row);
    let minority_label = ones <= STRUCTURE_COUNT - ones;
    let minority_len = if minority_label { ones } else { STRUCTURE_COUNT - ones };
    let mut used: HashSet<Structure> = HashSet::new();
    let mut found = Vec::with_capacity(pairs);
    if minority_len > 0 {
        let mut candidates: Vec<usize> =
            (0..STRUCTURE_COUNT).filter(|&i| bits::get_bit(row, i) == minority_label).collect();
        candidates.shuffle(rng);
        for distance in [1, 2] {
            for &i in &candidates {
                if found.len() == pairs {
                    break;
                }
                let x = StructureIndex::new_unchecked(i).structure();
                if used.contains(&x) {
                    continue;
                }
                let mut near = neighbours(&x, distance);
                near.shuffle(rng);
                if let Some(y) = near
                    .into_iter()
                    .find(|y| !used.contains(y) && bits::get_bit(row, y.index().get()) != minority_label)
                {
                    used.insert(x);
                    used.insert(y);
                    found.push((x, y));
                }
            }
        }
    }
    while found.len() < pairs {
        let x = StructureIndex::new_unchecked(rng.gen_range(0..STRUCTURE_COUNT)).structure();
        let mut near = neighbours(&x, 1);
        near.shuffle(rng);
        if used.contains(&x) {
            continue;
        }
        if let Some(y) = near.into_iter().find(|y| !used.contains(y)) {
            used.insert(x);
            used.insert(y);
            found.push((x, y));
        }
    }
    found
}

fn pad_randomly(world: &World, secret: RuleIndex, board: &mut Vec<BoardEntry>, size: usize, rng: &mut Rng) {
    let mut present: HashSet<Structure> = board.iter().map(|e| e.s).collect();
    while board.len() < size {
        let s = StructureIndex::new_unchecked(rng.gen_range(0..STRUCTURE_COUNT)).structure();
        if present.insert(s) {
            board.push(BoardEntry { s, y: world.label(secret, &s) });
        }
    }
}

/// Test board: similar discordant pairs, then greedy disambiguation, then
/// random padding. Fails when `k` entries cannot isolate the secret's class.
pub fn make_test_board(world: &World, secret: RuleIndex, k: usize, rng: &mut Rng) -> Result<Board, DatasetError> {
    let pairs = SEED_PAIRS.min(k / 2);
    let seed_pairs = similar_discordant_pairs(world, secret, pairs, rng);
    let mut entries: Vec<BoardEntry> = seed_pairs
        .into_iter()
        .flat_map(|(a, b)| [a, b])
        .map(|s| BoardEntry { s, y: world.label(secret, &s) })
        .collect();
    let mut rivals = surviving_rivals(world, secret, &Board(entries.clone()));
    while !rivals.is_empty() && entries.len() < k {
        let Some(s) = best_separator(world, secret, &rivals, rng) else { break };
        let y = world.label(secret, &s);
        entries.push(BoardEntry { s, y });
        let index = s.index().get();
        rivals.retain(|&c| bits::get_bit(world.representative_row(c), index) == y);
    }
    if !rivals.is_empty() {
        return Err(DatasetError::Generation {
            rule: secret.rule().render(),
            reason: format!("{} rival classes remain after {k} structures", rivals.len()),
        });
    }
    pad_randomly(world, secret, &mut entries, k, rng);
    Ok(Board(entries))
}

/// Training board: `m` uniform structures, with separating structures
/// substituted in until the secret's class is the only consistent one.
pub fn make_training_board(world: &World, secret: RuleIndex, m: usize, rng: &mut Rng) -> Result<Board, DatasetError> {
    let picks = index::sample(rng, STRUCTURE_COUNT, m.min(STRUCTURE_COUNT));
    let mut board = Board::labelled(world, secret, picks.into_iter().map(|i| StructureIndex::new_unchecked(i).structure()));
    let mut pinned = vec![false; board.len()];
    loop {
        let rivals = surviving_rivals(world, secret, &board);
        if rivals.is_empty() {
            return Ok(board);
        }
        let free: Vec<usize> = (0..board.len()).filter(|&i| !pinned[i]).collect();
        let (Some(&slot), Some(s)) = (free.choose(rng), best_separator(world, secret, &rivals, rng)) else {
            return Err(DatasetError::Generation {
                rule: secret.rule().render(),
                reason: format!("{} rival classes remain with every entry pinned", rivals.len()),
            });
        };
        board.0[slot] = BoardEntry { s, y: world.label(secret, &s) };
        pinned[slot] = true;
    }
}

/// `l` structures sampled uniformly from outside the board.
pub fn sample_eval(board: &Board, l: usize, rng: &mut Rng) -> Vec<Structure> {
    let on_board: HashSet<Structure> = board.structures().collect();
    let draw = (l + board.len()).min(STRUCTURE_COUNT);
    index::sample(rng, STRUCTURE_COUNT, draw)
        .into_iter()
        .map(|i| StructureIndex::new_unchecked(i).structure())
        .filter(|s| !on_board.contains(s))
        .take(l)
        .collect()
}

fn assemble(world: &World, game_id: String, secret: RuleIndex, board: Board, l: usize, rng: &mut Rng) -> Game {
    let eval_structures = sample_eval(&board, l, rng);
    let eval_labels = world.labels(secret, &eval_structures);
    Game { game_id, secret_rule: secret.rule(), board, eval_structures, eval_labels }
}

pub fn make_training_game(world: &World, id: String, secret: RuleIndex, cfg: &SplitConfig, seed: u64) -> Result<Game, DatasetError> {
    let mut rng = seeded(seed);
    let board = make_training_board(world, secret, cfg.m, &mut rng)?;
    Ok(assemble(world, id, secret, board, cfg.l, &mut rng))
}

/// Builds a test game, retrying with derived seeds; returns the game and the
/// number of retries it took.
pub fn make_test_game(world: &World, id: String, secret: RuleIndex, cfg: &SplitConfig, seed: u64) -> Result<(Game, u64), DatasetError> {
    let mut last = None;
    for attempt in 0..MAX_TEST_ATTEMPTS {
        let mut rng = seeded(derive_seed(seed, attempt));
        match make_test_board(world, secret, cfg.k, &mut rng) {
            Ok(board) => return Ok((assemble(world, id, secret, board, cfg.l, &mut rng), attempt)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMeta {
    pub config: SplitConfig,
    pub rule_count: usize,
    pub class_count: usize,
    pub train_games: usize,
    pub test_games: usize,
    pub train_classes: usize,
    pub test_classes: usize,
    pub train_exactly_2: usize,
    pub test_exactly_2: usize,
    pub test_regenerations: u64,
    pub mean_train_positive_rate: f64,
    pub mean_test_positive_rate: f64,
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Vec<Game>,
    pub test: Vec<Game>,
    pub meta: SplitMeta,
}

fn mean_positive_rate(games: &[Game]) -> f64 {
    if games.is_empty() {
        return 0.0;
    }
    games.iter().map(|g| g.board.positive_rate()).sum::<f64>() / games.len() as f64
}

fn distinct_classes(world: &World, games: &[Game]) -> usize {
    games.iter().map(|g| world.classes().class_id(g.secret_index())).collect::<HashSet<_>>().len()
}

/// Generates a full split; a pure function of `cfg` and the matrix.
pub fn generate_split(cfg: &SplitConfig, world: &World) -> Result<Split, DatasetError> {
    cfg.validate()?;
    if world.matrix().rule_count() != rule_count() {
        return Err(DatasetError::Config("matrix does not match the grammar".into()));
    }
    let train_rules = select_training_rules(cfg.n, &mut seeded(derive_seed_str(cfg.seed, "train-rules")))?;
    let train_classes: HashSet<usize> = train_rules.iter().map(|&r| world.classes().class_id(r)).collect();
    let candidates: Vec<RuleIndex> = (0..rule_count())
        .map(|i| RuleIndex::new(i).expect("index below rule count"))
        .filter(|&r| !train_classes.contains(&world.classes().class_id(r)))
        .collect();
    if candidates.len() < cfg.s {
        return Err(DatasetError::Config(format!(
            "only {} rules fall outside the training classes, {} test games requested",
            candidates.len(),
            cfg.s
        )));
    }
    let mut test_rules: Vec<RuleIndex> =
        index::sample(&mut seeded(derive_seed_str(cfg.seed, "test-rules")), candidates.len(), cfg.s)
            .into_iter()
            .map(|i| candidates[i])
            .collect();
    test_rules.sort_unstable();

    let train_seed = derive_seed_str(cfg.seed, "train-games");
    let train = par::map_range(train_rules.len(), |i| {
        let rule = train_rules[i];
        make_training_game(world, format!("train-{i:05}"), rule, cfg, derive_seed(train_seed, rule.get() as u64))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let test_seed = derive_seed_str(cfg.seed, "test-games");
    let test_results = par::map_range(test_rules.len(), |i| {
        let rule = test_rules[i];
        make_test_game(world, format!("test-{i:05}"), rule, cfg, derive_seed(test_seed, rule.get() as u64))
    });
    let mut test = Vec::with_capacity(test_results.len());
    let mut test_regenerations = 0;
    for result in test_results {
        let (game, retries) = result?;
        test_regenerations += retries;
        test.push(game);
    }

    let meta = SplitMeta {
        config: *cfg,
        rule_count: rule_count(),
        class_count: world.classes().len(),
        train_games: train.len(),
        test_games: test.len(),
        train_classes: distinct_classes(world, &train),
        test_classes: distinct_classes(world, &test),
        train_exactly_2: train.iter().filter(|g| contains_exactly_two(&g.secret_rule)).count(),
        test_exactly_2: test.iter().filter(|g| contains_exactly_two(&g.secret_rule)).count(),
        test_regenerations,
        mean_train_positive_rate: mean_positive_rate(&train),
        mean_test_positive_rate: mean_positive_rate(&test),
    };
    Ok(Split { train, test, meta })
}

pub const TRAIN_FILE: &str = "train.jsonl";
pub const TEST_FILE: &str = "test.jsonl";
pub const META_FILE: &str = "meta.json";

pub fn write_games<W: Write>(games: &[Game], mut out: W) -> Result<(), DatasetError> {
    for g in games {
        serde_json::to_writer(&mut out, g)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_games<R: BufRead>(input: R) -> Result<Vec<Game>, DatasetError> {
    let mut games = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let game = serde_json::from_str(&line)
            .map_err(|e| DatasetError::Format { line: i + 1, message: e.to_string() })?;
        games.push(game);
    }
    Ok(games)
}

pub fn load_games(path: &Path) -> Result<Vec<Game>, DatasetError> {
    read_games(BufReader::new(File::open(path)?))
}

pub fn write_split(split: &Split, dir: &Path) -> Result<(), DatasetError> {
    std::fs::create_dir_all(dir)?;
    write_games(&split.train, BufWriter::new(File::create(dir.join(TRAIN_FILE))?))?;
    write_games(&split.test, BufWriter::new(File::create(dir.join(TEST_FILE))?))?;
    let mut meta = BufWriter::new(File::create(dir.join(META_FILE))?);
    serde_json::to_writer_pretty(&mut meta, &split.meta)?;
    meta.write_all(b"\n")?;
    meta.flush()?;
    Ok(())
}
