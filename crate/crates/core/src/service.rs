//! A game master for live play: probe structures, read the master's tags,
//! and guess the secret rule.
//!
//! [`GameSession`] holds the rules of play and needs no clock or storage, so
//! it also runs in the browser. [`GameMaster`] keeps many sessions behind
//! ids and can persist them to an append-only JSONL log.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::bits::BitRow;
use crate::dataset::BoardEntry;
use crate::error::ServiceError;
use crate::grammar::{parse, rule_count, RuleAst, RuleIndex, SimpleProp};
use crate::interpreter::Interpreter;
use crate::rng::{seeded, Rng};
use crate::semantics::{AtomTable, World};
use crate::universe::{Structure, StructureIndex, STRUCTURE_COUNT};

/// Anything that can produce a rule's full row.
pub trait RowOracle: Send + Sync {
    fn row(&self, rule: &RuleAst) -> BitRow;
}

impl RowOracle for AtomTable {
    fn row(&self, rule: &RuleAst) -> BitRow {
        AtomTable::row(self, rule)
    }
}

impl RowOracle for World {
    fn row(&self, rule: &RuleAst) -> BitRow {
        self.matrix().row(rule.index())
    }
}

impl RowOracle for Interpreter {
    fn row(&self, rule: &RuleAst) -> BitRow {
        self.evaluate_row(rule)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    /// Secrets drawn from simple propositions only.
    Easy,
    #[default]
    Normal,
}

impl Difficulty {
    fn pool_size(self) -> usize {
        match self {
            Difficulty::Easy => SimpleProp::COUNT,
            Difficulty::Normal => rule_count(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Open,
    Won,
    Abandoned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Equivalent,
    NotEquivalent,
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuessRecord {
    pub rule: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<BoardEntry>,
}

/// Response to a guess.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuessResult {
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<BoardEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secret: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One game against a secret rule.
#[derive(Debug, Clone)]
pub struct GameSession {
    secret: RuleIndex,
    row: BitRow,
    revealed: Vec<BoardEntry>,
    guesses: Vec<GuessRecord>,
    status: Status,
}

impl GameSession {
    /// Draws a secret whose row is neither all-false nor all-true and reveals
    /// one positive and one negative structure.
    pub fn random(difficulty: Difficulty, oracle: &dyn RowOracle, rng: &mut Rng) -> Self {
        loop {
            let secret = RuleIndex::new(rng.gen_range(0..difficulty.pool_size())).expect("pool within rule count");
            if let Some(session) = GameSession::new(secret, oracle.row(&secret.rule()), rng) {
                return session;
            }
        }
    }

    /// `None` when the row has no positive or no negative witness.
    pub fn new(secret: RuleIndex, row: BitRow, rng: &mut Rng) -> Option<Self> {
        let positive = random_with_label(&row, true, rng)?;
        let negative = random_with_label(&row, false, rng)?;
        let mut revealed = vec![BoardEntry { s: positive, y: true }, BoardEntry { s: negative, y: false }];
        if rng.gen_bool(0.5) {
            revealed.swap(0, 1);
        }
        Some(GameSession { secret, row, revealed, guesses: Vec::new(), status: Status::Open })
    }

    /// Rebuilds a session from recorded reveals, checking every label.
    pub fn restore(secret: RuleIndex, row: BitRow, revealed: Vec<BoardEntry>) -> Result<Self, ServiceError> {
        if let Some(e) = revealed.iter().find(|e| row.get(e.s.index().get()) != e.y) {
            return Err(ServiceError::Log(format!("recorded label of {} disagrees with the secret", e.s)));
        }
        Ok(GameSession { secret, row, revealed, guesses: Vec::new(), status: Status::Open })
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn revealed(&self) -> &[BoardEntry] {
        &self.revealed
    }

    pub fn guesses(&self) -> &[GuessRecord] {
        &self.guesses
    }

    pub fn secret(&self) -> RuleIndex {
        self.secret
    }

    /// The secret text once the game is over.
    pub fn disclosed_secret(&self) -> Option<String> {
        (self.status != Status::Open).then(|| self.secret.rule().render())
    }

    fn ensure_open(&self) -> Result<(), ServiceError> {
        match self.status {
            Status::Open => Ok(()),
            _ => Err(ServiceError::Closed(format!("{:?}", self.status).to_lowercase())),
        }
    }

    /// The master's tag for `s`; repeated probes return the stored label.
    pub fn probe(&mut self, s: Structure) -> Result<(bool, bool), ServiceError> {
        self.ensure_open()?;
        if let Some(e) = self.revealed.iter().find(|e| e.s == s) {
            return Ok((e.y, false));
        }
        let y = self.row.get(s.index().get());
        self.revealed.push(BoardEntry { s, y });
        Ok((y, true))
    }

    pub fn probe_text(&mut self, text: &str) -> Result<bool, ServiceError> {
        let s = Structure::parse(text).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        self.probe(s).map(|(y, _)| y)
    }

    pub fn guess(&mut self, text: &str, oracle: &dyn RowOracle) -> Result<GuessResult, ServiceError> {
        self.ensure_open()?;
        let ast = match parse(text) {
            Ok(ast) => ast,
            Err(e) => {
                return Ok(GuessResult {
                    verdict: Verdict::Malformed,
                    counterexample: None,
                    secret: None,
                    error: Some(e.to_string()),
                })
            }
        };
        let record = match self.row.first_difference(&oracle.row(&ast)) {
            None => GuessRecord { rule: ast.render(), verdict: Verdict::Equivalent, counterexample: None },
            Some(i) => {
                let s = Structure::from_index(StructureIndex::new(i).expect("difference inside universe"));
                let entry = BoardEntry { s, y: self.row.get(i) };
                GuessRecord { rule: ast.render(), verdict: Verdict::NotEquivalent, counterexample: Some(entry) }
            }
        };
        self.apply_guess(record.clone());
        Ok(GuessResult {
            verdict: record.verdict,
            counterexample: record.counterexample,
            secret: self.disclosed_secret(),
            error: None,
        })
    }

    fn apply_guess(&mut self, record: GuessRecord) {
        if let Some(c) = record.counterexample {
            if !self.revealed.iter().any(|e| e.s == c.s) {
                self.revealed.push(c);
            }
        }
        if record.verdict == Verdict::Equivalent {
            self.status = Status::Won;
        }
        self.guesses.push(record);
    }

    pub fn abandon(&mut self) -> Result<(), ServiceError> {
        self.ensure_open()?;
        self.status = Status::Abandoned;
        Ok(())
    }
}

fn random_with_label(row: &BitRow, label: bool, rng: &mut Rng) -> Option<Structure> {
    for _ in 0..256 {
        let i = rng.gen_range(0..STRUCTURE_COUNT);
        if row.get(i) == label {
            return Some(Structure::from_index(StructureIndex::new(i).ok()?));
        }
    }
    // Rare or absent label: pick uniformly among the exact witnesses.
    let witnesses: Vec<usize> = if label { row.iter_ones().collect() } else { row.not().iter_ones().collect() };
    if witnesses.is_empty() {
        return None;
    }
    let i = witnesses[rng.gen_range(0..witnesses.len())];
    Some(Structure::from_index(StructureIndex::new(i).ok()?))
}

/// What clients may see of a session. The secret is present only once the
/// session is closed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub status: Status,
    pub difficulty: Difficulty,
    pub created_at: u64,
    pub reveals: Vec<BoardEntry>,
    pub guesses: Vec<GuessRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secret: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub status: Status,
    pub difficulty: Difficulty,
    pub created_at: u64,
    pub reveals: usize,
    pub guesses: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum LogEvent {
    Created {
        session_id: String,
        secret: String,
        difficulty: Difficulty,
        created_at: u64,
        reveals: Vec<BoardEntry>,
    },
    Probed { session_id: String, entry: BoardEntry },
    Guessed { session_id: String, guess: GuessRecord },
    Abandoned { session_id: String },
}

struct Entry {
    difficulty: Difficulty,
    created_at: u64,
    game: GameSession,
}

impl Entry {
    fn view(&self, id: &str) -> SessionView {
        SessionView {
            session_id: id.to_string(),
            status: self.game.status(),
            difficulty: self.difficulty,
            created_at: self.created_at,
            reveals: self.game.revealed().to_vec(),
            guesses: self.game.guesses().to_vec(),
            secret: self.game.disclosed_secret(),
        }
    }

    fn summary(&self, id: &str) -> SessionSummary {
        SessionSummary {
            session_id: id.to_string(),
            status: self.game.status(),
            difficulty: self.difficulty,
            created_at: self.created_at,
            reveals: self.game.revealed().len(),
            guesses: self.game.guesses().len(),
        }
    }
}

pub const SESSION_LOG: &str = "sessions.jsonl";

/// Concurrent session store. Operations on one session are serialized by its
/// own lock; the row oracle is shared read-only.
pub struct GameMaster {
    oracle: Arc<dyn RowOracle>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Entry>>>>,
    rng: Mutex<Rng>,
    log: Option<Mutex<File>>,
}

impl GameMaster {
    pub fn new(oracle: Arc<dyn RowOracle>, seed: u64) -> Self {
        GameMaster { oracle, sessions: Mutex::new(HashMap::new()), rng: Mutex::new(seeded(seed)), log: None }
    }

    /// Replays `dir/sessions.jsonl` if present and appends new events to it.
    pub fn with_log(oracle: Arc<dyn RowOracle>, seed: u64, dir: &Path) -> Result<Self, ServiceError> {
        std::fs::create_dir_all(dir)?;
        let path: PathBuf = dir.join(SESSION_LOG);
        let mut master = GameMaster::new(oracle, seed);
        if path.exists() {
            master.replay(BufReader::new(File::open(&path)?))?;
        }
        master.log = Some(Mutex::new(OpenOptions::new().create(true).append(true).open(&path)?));
        Ok(master)
    }

    fn replay<R: BufRead>(&mut self, input: R) -> Result<(), ServiceError> {
        let sessions = self.sessions.get_mut().expect("unshared during replay");
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event: LogEvent =
                serde_json::from_str(&line).map_err(|e| ServiceError::Log(format!("line {}: {e}", n + 1)))?;
            let missing = |id: &str| ServiceError::Log(format!("line {}: unknown session {id:?}", n + 1));
            match event {
                LogEvent::Created { session_id, secret, difficulty, created_at, reveals } => {
                    let ast = parse(&secret).map_err(|e| ServiceError::Log(format!("line {}: {e}", n + 1)))?;
                    let game = GameSession::restore(ast.index(), self.oracle.row(&ast), reveals)?;
                    sessions.insert(session_id, Arc::new(Mutex::new(Entry { difficulty, created_at, game })));
                }
                LogEvent::Probed { session_id, entry } => {
                    let e = sessions.get(&session_id).ok_or_else(|| missing(&session_id))?;
                    e.lock().expect("session lock").game.probe(entry.s)?;
                }
                LogEvent::Guessed { session_id, guess } => {
                    let e = sessions.get(&session_id).ok_or_else(|| missing(&session_id))?;
                    e.lock().expect("session lock").game.apply_guess(guess);
                }
                LogEvent::Abandoned { session_id } => {
                    let e = sessions.get(&session_id).ok_or_else(|| missing(&session_id))?;
                    e.lock().expect("session lock").game.abandon()?;
                }
            }
        }
        Ok(())
    }

    fn record(&self, event: &LogEvent) -> Result<(), ServiceError> {
        if let Some(log) = &self.log {
            let mut file = log.lock().expect("log lock");
            let mut line = serde_json::to_string(event).expect("events serialize");
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.flush()?;
        }
        Ok(())
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Entry>>, ServiceError> {
        self.sessions
            .lock()
            .expect("store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    pub fn create_session(&self, difficulty: Difficulty) -> Result<SessionView, ServiceError> {
        let (id, game) = {
            let mut rng = self.rng.lock().expect("rng lock");
            let game = GameSession::random(difficulty, self.oracle.as_ref(), &mut rng);
            let sessions = self.sessions.lock().expect("store lock");
            let id = loop {
                let id = format!("{:016x}", rng.gen::<u64>());
                if !sessions.contains_key(&id) {
                    break id;
                }
            };
            (id, game)
        };
        let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let entry = Entry { difficulty, created_at, game };
        self.record(&LogEvent::Created {
            session_id: id.clone(),
            secret: entry.game.secret().rule().render(),
            difficulty,
            created_at,
            reveals: entry.game.revealed().to_vec(),
        })?;
        let view = entry.view(&id);
        self.sessions.lock().expect("store lock").insert(id, Arc::new(Mutex::new(entry)));
        Ok(view)
    }

    pub fn get_session(&self, id: &str) -> Result<SessionView, ServiceError> {
        let entry = self.entry(id)?;
        let view = entry.lock().expect("session lock").view(id);
        Ok(view)
    }

    pub fn list_sessions(&self) -> Vec<SessionSummary> {
        let entries: Vec<(String, Arc<Mutex<Entry>>)> =
            self.sessions.lock().expect("store lock").iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let mut out: Vec<SessionSummary> =
            entries.iter().map(|(id, e)| e.lock().expect("session lock").summary(id)).collect();
        out.sort_by(|a, b| (a.created_at, &a.session_id).cmp(&(b.created_at, &b.session_id)));
        out
    }

    pub fn probe(&self, id: &str, structure: &str) -> Result<bool, ServiceError> {
        let s = Structure::parse(structure).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        let entry = self.entry(id)?;
        let mut entry = entry.lock().expect("session lock");
        let (y, new) = entry.game.probe(s)?;
        if new {
            self.record(&LogEvent::Probed { session_id: id.to_string(), entry: BoardEntry { s, y } })?;
        }
        Ok(y)
    }

    pub fn guess(&self, id: &str, rule: &str) -> Result<GuessResult, ServiceError> {
        let entry = self.entry(id)?;
        let mut entry = entry.lock().expect("session lock");
        let result = entry.game.guess(rule, self.oracle.as_ref())?;
        if let Some(guess) = entry.game.guesses().last().filter(|_| result.verdict != Verdict::Malformed) {
            self.record(&LogEvent::Guessed { session_id: id.to_string(), guess: guess.clone() })?;
        }
        Ok(result)
    }

    pub fn abandon(&self, id: &str) -> Result<SessionView, ServiceError> {
        let entry = self.entry(id)?;
        let mut entry = entry.lock().expect("session lock");
        entry.game.abandon()?;
        self.record(&LogEvent::Abandoned { session_id: id.to_string() })?;
        Ok(entry.view(id))
    }
}
