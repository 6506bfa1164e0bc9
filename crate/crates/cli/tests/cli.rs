use std::path::Path;
use std::process::{Command, Output};

use odeen_core::dataset::{load_games, TEST_FILE};
use odeen_core::metrics::MetricsReport;

fn odeen(data_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odeen"))
        .arg("--data-dir")
        .arg(data_dir)
        .args(args)
        .env_remove("ODEEN_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn ok(output: Output) -> String {
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    String::from_utf8(output.stdout).unwrap()
}

fn score(dir: &Path, games: &Path, predictions: &Path) -> MetricsReport {
    let text = ok(odeen(dir, &["score", "--json", "--games", games.to_str().unwrap(), "--predictions", predictions.to_str().unwrap()]));
    serde_json::from_str(&text).unwrap()
}

#[test]
fn stats_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(odeen(dir.path(), &["enumerate", "--stats"]));
    for needle in ["117649", "98", "4116", "19208", "23422", "24794", "1372"] {
        assert!(text.contains(needle), "{needle} missing from\n{text}");
    }
    assert_eq!(odeen(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(odeen(dir.path(), &["solve", "--t", "zero"]).status.code(), Some(1));
    assert_eq!(odeen(dir.path(), &["--help"]).status.code(), Some(0));
    let missing = odeen(dir.path(), &["score", "--games", "nope.jsonl", "--predictions", "nope.jsonl"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn full_pipeline_through_the_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let built = ok(odeen(dir, &["matrix", "build"]));
    assert!(built.contains("23422 rules"), "{built}");
    let stats = ok(odeen(dir, &["matrix", "stats"]));
    assert!(stats.contains("classes") && stats.contains("reported band"), "{stats}");

    let split = dir.join("split");
    ok(odeen(dir, &["--seed", "3", "dataset", "gen", "--n", "40", "--m", "100", "--k", "32", "--s", "25", "--l", "200", "--out", split.to_str().unwrap()]));
    let games = split.join(TEST_FILE);
    let first = std::fs::read(&games).unwrap();
    ok(odeen(dir, &["--seed", "3", "--threads", "2", "dataset", "gen", "--n", "40", "--m", "100", "--k", "32", "--s", "25", "--l", "200", "--out", split.to_str().unwrap()]));
    assert_eq!(std::fs::read(&games).unwrap(), first, "regeneration must be byte-identical");
    assert_eq!(load_games(&games).unwrap().len(), 25);

    let exhaustive = dir.join("exhaustive.jsonl");
    ok(odeen(dir, &["solve", "--solver", "exhaustive", "--games", games.to_str().unwrap(), "--out", exhaustive.to_str().unwrap()]));
    let report = score(dir, &games, &exhaustive);
    assert_eq!((report.nrs, report.t_acc, report.r_acc), (1.0, 1.0, 1.0));

    // In-process uniform sampler and the same sampler behind the stdio bridge.
    let inproc = dir.join("inproc.jsonl");
    let bridged = dir.join("bridged.jsonl");
    let plugin = format!("'{}' plugin", env!("CARGO_BIN_EXE_odeen"));
    ok(odeen(dir, &["solve", "--t", "120", "--games", games.to_str().unwrap(), "--out", inproc.to_str().unwrap()]));
    ok(odeen(dir, &["solve", "--t", "120", "--games", games.to_str().unwrap(), "--out", bridged.to_str().unwrap(), "--plugin", &plugin, "--interpreter-plugin", &plugin]));
    let strip = |p: &Path| -> Vec<(Option<String>, Option<Vec<bool>>, u64, u64)> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .map(|l| {
                let r: odeen_core::solvers::PredictionRecord = serde_json::from_str(l).unwrap();
                let c = r.costs.unwrap();
                (r.rule, r.tags, c.cg_calls, c.i_calls)
            })
            .collect()
    };
    assert_eq!(strip(&inproc), strip(&bridged));
    for (_, _, cg, i) in strip(&inproc) {
        assert_eq!((cg, i), (120, 120 * 32 + 200));
    }

    let oracle = dir.join("oracle.jsonl");
    ok(odeen(dir, &["solve", "--generator", "oracle", "--mode", "strict", "--t", "1", "--games", games.to_str().unwrap(), "--out", oracle.to_str().unwrap()]));
    let report = score(dir, &games, &oracle);
    assert_eq!((report.nrs, report.t_acc, report.r_acc, report.unknown_rate), (1.0, 1.0, 1.0, 0.0));
    let table = ok(odeen(dir, &["score", "--games", games.to_str().unwrap(), "--predictions", oracle.to_str().unwrap()]));
    assert!(table.contains("NRS") && table.contains("1.0000"), "{table}");

    let train = split.join("train.jsonl");
    let mismatched = odeen(dir, &["score", "--games", train.to_str().unwrap(), "--predictions", oracle.to_str().unwrap()]);
    assert_eq!(mismatched.status.code(), Some(2));

    let broken = odeen(dir, &["solve", "--games", games.to_str().unwrap(), "--out", dir.join("x").to_str().unwrap(), "--plugin", "echo nonsense"]);
    assert_eq!(broken.status.code(), Some(3));

    let curve = ok(odeen(dir, &["curve", "--generator", "enumeration", "--t-max", "23422", "--games", games.to_str().unwrap()]));
    let last = curve.lines().last().unwrap();
    assert_eq!(last, "23422,1.000000");

    let export = dir.join("export");
    ok(odeen(dir, &["matrix", "export", "--out", export.to_str().unwrap()]));
    let rules_csv = std::fs::read_to_string(export.join("rule_weights.csv")).unwrap();
    assert_eq!(rules_csv.lines().count(), 23_423);
    assert!(rules_csv.lines().nth(1).unwrap().starts_with("0,at_least 1 red,"));
}
