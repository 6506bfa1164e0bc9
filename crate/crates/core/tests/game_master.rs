use std::sync::Arc;

use odeen_core::service::{Difficulty, GameMaster, RowOracle, Status, Verdict};
use odeen_core::{evaluate, parse, Interpreter, ServiceError, Structure};

fn oracle() -> Arc<dyn RowOracle> {
    Arc::new(Interpreter::default())
}

#[test]
fn open_sessions_hide_the_secret() {
    let gm = GameMaster::new(oracle(), 1);
    for difficulty in [Difficulty::Easy, Difficulty::Normal] {
        let view = gm.create_session(difficulty).unwrap();
        assert_eq!(view.status, Status::Open);
        assert_eq!(view.reveals.len(), 2);
        assert_ne!(view.reveals[0].y, view.reveals[1].y);
        let json = serde_json::to_string(&gm.get_session(&view.session_id).unwrap()).unwrap();
        assert!(!json.contains("secret"), "{json}");
        let guess = serde_json::to_string(&gm.guess(&view.session_id, "zero red pyramid").unwrap()).unwrap();
        if !guess.contains("\"equivalent\"") {
            assert!(!guess.contains("secret"), "{guess}");
        }
    }
    let ids: Vec<String> = gm.list_sessions().into_iter().map(|s| s.session_id).collect();
    assert_eq!(ids.len(), 2);
    assert_ne!(ids[0], ids[1]);
}

#[test]
fn counterexamples_are_genuine_and_a_win_closes_the_game() {
    let gm = GameMaster::new(oracle(), 2);
    let view = gm.create_session(Difficulty::Easy).unwrap();
    let id = view.session_id;
    let mut secret = None;
    // Easy secrets are simple propositions: try them all until one wins.
    for text in odeen_core::enumerate_rules().take(98).map(|r| r.render()) {
        let result = gm.guess(&id, &text).unwrap();
        match result.verdict {
            Verdict::Equivalent => {
                secret = result.secret;
                break;
            }
            Verdict::NotEquivalent => {
                let c = result.counterexample.unwrap();
                let guess = parse(&text).unwrap();
                assert_ne!(evaluate(&guess, &c.s), c.y);
            }
            Verdict::Malformed => unreachable!(),
        }
    }
    let secret = parse(&secret.expect("some simple rule wins")).unwrap();
    let view = gm.get_session(&id).unwrap();
    assert_eq!(view.status, Status::Won);
    assert!(view.secret.is_some());
    for e in &view.reveals {
        assert_eq!(evaluate(&secret, &e.s), e.y);
    }
    assert!(matches!(gm.probe(&id, "......"), Err(ServiceError::Closed(_))));
    assert!(matches!(gm.abandon(&id), Err(ServiceError::Closed(_))));
}

#[test]
fn errors_map_to_statuses() {
    let gm = GameMaster::new(oracle(), 3);
    let id = gm.create_session(Difficulty::Normal).unwrap().session_id;
    let e = gm.probe(&id, "ab").unwrap_err();
    assert_eq!(e.status(), 400);
    assert_eq!(gm.get_session("missing").unwrap_err().status(), 404);
    gm.abandon(&id).unwrap();
    assert_eq!(gm.probe(&id, "......").unwrap_err().status(), 409);
}

#[test]
fn log_replay_restores_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let (id, reveals) = {
        let gm = GameMaster::with_log(oracle(), 4, dir.path()).unwrap();
        let id = gm.create_session(Difficulty::Normal).unwrap().session_id;
        gm.probe(&id, "QQ....").unwrap();
        gm.probe(&id, "......").unwrap();
        gm.guess(&id, "zero red and zero blue").unwrap();
        gm.guess(&id, "not a rule").unwrap();
        let other = gm.create_session(Difficulty::Easy).unwrap().session_id;
        gm.abandon(&other).unwrap();
        let view = gm.get_session(&id).unwrap();
        (id, view)
    };
    let gm = GameMaster::with_log(oracle(), 99, dir.path()).unwrap();
    assert_eq!(gm.get_session(&id).unwrap(), reveals);
    assert_eq!(gm.list_sessions().len(), 2);
    assert!(gm.list_sessions().iter().any(|s| s.status == Status::Abandoned));
    assert!(gm.probe(&id, "q.....").is_ok());
    let s = Structure::parse("q.....").unwrap();
    assert!(gm.get_session(&id).unwrap().reveals.iter().any(|e| e.s == s));
}

#[test]
fn corrupt_log_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join(odeen_core::service::SESSION_LOG), "{\"event\":\"probed\"}\n").unwrap();
    assert!(matches!(GameMaster::with_log(oracle(), 0, dir.path()), Err(ServiceError::Log(_))));
}
