use std::time::Duration;

use odeen_core::dataset::{Board, BoardEntry};
use odeen_core::plugin::{PluginProcess, Role};
use odeen_core::solvers::{ConjectureSource, RuleInterpreter};
use odeen_core::{SolverError, Structure};
use proptest::prelude::*;

const HELLO: &str = r#"{"name":"fake","roles":["conjecture","interpret"]}"#;
const SHORT: Duration = Duration::from_secs(5);

/// A plugin that answers the handshake, then prints `lines` after reading
/// one request, then waits for input to close.
fn scripted(lines: &[&str]) -> String {
    let mut script = format!("read _; echo '{HELLO}'; read _; ");
    for line in lines {
        script.push_str(&format!("printf '%s\\n' '{}'; ", line.replace('\'', r"'\''")));
    }
    script.push_str("cat > /dev/null");
    script
}

fn board() -> Board {
    Board::new(vec![BoardEntry { s: Structure::parse("Q.....").unwrap(), y: true }])
}

fn structures() -> Vec<Structure> {
    vec![Structure::parse("q.....").unwrap(), Structure::parse("Q.....").unwrap()]
}

#[test]
fn well_behaved_plugin() {
    let mut p = PluginProcess::spawn(&scripted(&[r#"{"rule":"zero red"}"#, r#"{"rule":"at least one"}"#]), SHORT).unwrap();
    assert_eq!(p.hello().name, "fake");
    assert!(p.has_role(Role::Interpret));
    assert_eq!(p.conjectures(&board(), 2, 1).unwrap(), vec!["zero red", "at least one"]);

    let mut p = PluginProcess::spawn(&scripted(&[r#"{"labels":[1,0]}"#]), SHORT).unwrap();
    assert_eq!(p.interpret("zero red", &structures()).unwrap(), Some(vec![true, false]));
    let mut p = PluginProcess::spawn(&scripted(&[r#"{"labels":null}"#]), SHORT).unwrap();
    assert_eq!(p.interpret("nonsense", &structures()).unwrap(), None);
}

#[test]
fn missing_role_is_refused() {
    let script = r#"read _; echo '{"name":"cg","roles":["conjecture"]}'; cat > /dev/null"#;
    let mut p = PluginProcess::spawn(script, SHORT).unwrap();
    assert!(matches!(p.interpret("zero red", &structures()), Err(SolverError::Protocol(_))));
}

#[test]
fn bad_handshakes() {
    assert!(matches!(PluginProcess::spawn("read _; echo hi; cat >/dev/null", SHORT), Err(SolverError::Protocol(_))));
    assert!(matches!(PluginProcess::spawn("exit 0", SHORT), Err(SolverError::Process(_))));
    assert!(matches!(
        PluginProcess::spawn("sleep 5", Duration::from_millis(200)),
        Err(SolverError::Timeout(_))
    ));
}

#[test]
fn short_and_wrong_answers() {
    // Exits after one of two conjectures.
    let script = format!("read _; echo '{HELLO}'; read _; echo '{{\"rule\":\"zero red\"}}'");
    let mut p = PluginProcess::spawn(&script, SHORT).unwrap();
    assert!(matches!(p.conjectures(&board(), 2, 0), Err(SolverError::Process(_))));

    let mut p = PluginProcess::spawn(&scripted(&[r#"{"labels":[1]}"#]), SHORT).unwrap();
    assert!(matches!(p.interpret("zero red", &structures()), Err(SolverError::Protocol(_))));

    let mut p = PluginProcess::spawn(&scripted(&[r#"{"labels":[1,0]}"#]), SHORT).unwrap();
    assert!(matches!(p.conjectures(&board(), 1, 0), Err(SolverError::Protocol(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn garbage_lines_are_protocol_errors(line in "[ -~]{0,40}") {
        prop_assume!(serde_json::from_str::<serde_json::Value>(&line).map_or(true, |v| v.get("rule").is_none()));
        let mut p = PluginProcess::spawn(&scripted(&[&line]), SHORT).unwrap();
        let result = p.conjectures(&board(), 1, 0);
        prop_assert!(matches!(result, Err(SolverError::Protocol(_))), "{:?}", result);
    }

    #[test]
    fn truncated_lines_are_protocol_errors(cut in 1usize..15) {
        let line = r#"{"labels":[1,0]}"#;
        let mut p = PluginProcess::spawn(&scripted(&[&line[..line.len() - cut]]), SHORT).unwrap();
        let result = p.interpret("zero red", &structures());
        prop_assert!(matches!(result, Err(SolverError::Protocol(_))), "{:?}", result);
    }
}
