//! External conjecture generators and interpreters speaking newline-delimited
//! JSON over stdin/stdout.
//!
//! ```text
//! -> {"op":"hello"}
//! <- {"name":"my-cg","roles":["conjecture"]}
//! -> {"op":"conjecture","board":[{"s":"Q.....","y":1}],"n":3,"seed":7}
//! <- {"rule":"..."}            (exactly n lines)
//! -> {"op":"interpret","rule":"...","structures":["Q....."]}
//! <- {"labels":[1]}            (or {"labels":null} to reject the rule)
//! ```
//!
//! Any other line from the plugin is a protocol error.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dataset::{Board, BoardEntry};
use crate::error::SolverError;
use crate::serde_labels;
use crate::solvers::{ConjectureSource, RuleInterpreter};
use crate::universe::Structure;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Conjecture,
    Interpret,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Request {
    Hello,
    Conjecture { board: Vec<BoardEntry>, n: usize, seed: u64 },
    Interpret { rule: String, structures: Vec<Structure> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hello {
    pub name: String,
    pub roles: Vec<Role>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjectureLine {
    pub rule: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelsLine {
    #[serde(with = "serde_labels::optional_many")]
    pub labels: Option<Vec<bool>>,
}

/// A running plugin process.
pub struct PluginProcess {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    hello: Hello,
}

impl PluginProcess {
    /// Runs `command` through `sh -c` and performs the handshake.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, SolverError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| SolverError::Process(format!("cannot start {command:?}: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut plugin = PluginProcess {
            child,
            stdin,
            lines,
            timeout,
            hello: Hello { name: String::new(), roles: Vec::new() },
        };
        plugin.send(&Request::Hello)?;
        plugin.hello = plugin.receive()?;
        Ok(plugin)
    }

    pub fn hello(&self) -> &Hello {
        &self.hello
    }

    pub fn has_role(&self, role: Role) -> bool {
        self.hello.roles.contains(&role)
    }

    fn require(&self, role: Role) -> Result<(), SolverError> {
        if self.has_role(role) {
            Ok(())
        } else {
            Err(SolverError::Protocol(format!("plugin {:?} does not declare the {role:?} role", self.hello.name)))
        }
    }

    fn send(&mut self, request: &Request) -> Result<(), SolverError> {
        let mut line = serde_json::to_string(request).expect("requests serialize");
        line.push('\n');
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| SolverError::Process(format!("cannot write to plugin: {e}")))
    }

    fn receive<T: for<'de> Deserialize<'de>>(&mut self) -> Result<T, SolverError> {
        let line = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(SolverError::Process(format!("cannot read from plugin: {e}"))),
            Err(RecvTimeoutError::Timeout) => return Err(SolverError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                let status = self.child.try_wait().ok().flatten();
                return Err(SolverError::Process(match status {
                    Some(status) => format!("plugin exited ({status})"),
                    None => "plugin closed its output".into(),
                }));
            }
        };
        serde_json::from_str(&line).map_err(|e| SolverError::Protocol(format!("unexpected line {line:?}: {e}")))
    }
}

impl Drop for PluginProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl ConjectureSource for PluginProcess {
    fn name(&self) -> &str {
        &self.hello.name
    }

    fn conjectures(&mut self, board: &Board, n: usize, seed: u64) -> Result<Vec<String>, SolverError> {
        self.require(Role::Conjecture)?;
        self.send(&Request::Conjecture { board: board.entries().to_vec(), n, seed })?;
        (0..n).map(|_| self.receive::<ConjectureLine>().map(|c| c.rule)).collect()
    }
}

impl RuleInterpreter for PluginProcess {
    fn interpret(&mut self, rule: &str, structures: &[Structure]) -> Result<Option<Vec<bool>>, SolverError> {
        self.require(Role::Interpret)?;
        self.send(&Request::Interpret { rule: rule.to_string(), structures: structures.to_vec() })?;
        let labels = self.receive::<LabelsLine>()?.labels;
        if let Some(l) = &labels {
            if l.len() != structures.len() {
                return Err(SolverError::Protocol(format!(
                    "{} labels for {} structures",
                    l.len(),
                    structures.len()
                )));
            }
        }
        Ok(labels)
    }
}

/// Serves the plugin side of the protocol until `input` ends. Requests for a
/// role without an implementation, and malformed requests, end the loop with
/// an error.
pub fn serve<R: BufRead, W: Write>(
    name: &str,
    mut source: Option<&mut dyn ConjectureSource>,
    mut interpreter: Option<&mut dyn RuleInterpreter>,
    input: R,
    mut output: W,
) -> Result<(), SolverError> {
    let mut roles = Vec::new();
    if source.is_some() {
        roles.push(Role::Conjecture);
    }
    if interpreter.is_some() {
        roles.push(Role::Interpret);
    }
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Request = serde_json::from_str(&line)
            .map_err(|e| SolverError::Protocol(format!("bad request {line:?}: {e}")))?;
        match request {
            Request::Hello => write_line(&mut output, &Hello { name: name.to_string(), roles: roles.clone() })?,
            Request::Conjecture { board, n, seed } => {
                let source = source
                    .as_deref_mut()
                    .ok_or_else(|| SolverError::Protocol("conjecture role not served".into()))?;
                for rule in source.conjectures(&Board::new(board), n, seed)? {
                    write_line(&mut output, &ConjectureLine { rule })?;
                }
            }
            Request::Interpret { rule, structures } => {
                let interpreter = interpreter
                    .as_deref_mut()
                    .ok_or_else(|| SolverError::Protocol("interpret role not served".into()))?;
                let labels = interpreter.interpret(&rule, &structures)?;
                write_line(&mut output, &LabelsLine { labels })?;
            }
        }
        output.flush()?;
    }
    Ok(())
}

fn write_line<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<(), SolverError> {
    serde_json::to_writer(&mut *out, value).map_err(|e| SolverError::Io(e.into()))?;
    out.write_all(b"\n")?;
    Ok(())
}
