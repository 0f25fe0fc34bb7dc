use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ban_router(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ban-router"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const TRIVIAL: &str = "instance 2 0\ncosts 3 3\nedge 0 1 4\n";

#[test]
fn trivial_query_prints_one_route() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.txt"), TRIVIAL).unwrap();
    let out = ban_router(&["query", "g.txt", "-q", "0 1 0 10"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["pareto_size"], 1);
    assert_eq!(value["routes"][0]["cost"], 12);
    assert_eq!(value["routes"][0]["route"]["R"], serde_json::json!([0, 1]));
}

#[test]
fn empty_pareto_set_is_success() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.txt"), TRIVIAL).unwrap();
    let out = ban_router(&["query", "g.txt", "-q", "1 0 0 10", "--format", "csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 1);
}

#[test]
fn parse_error_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.txt"), "instance 2 0\ncosts 1 1\nedge 0 1 x\n").unwrap();
    let out = ban_router(&["validate", "bad.txt"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn invalid_arguments_and_queries() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.txt"), TRIVIAL).unwrap();
    assert_eq!(ban_router(&["query", "g.txt", "-q", "0 7 0 10"], dir.path()).status.code(), Some(3));
    assert_eq!(ban_router(&["query", "g.txt"], dir.path()).status.code(), Some(3));
    assert_eq!(ban_router(&["query", "g.txt", "-q", "0 1 0 10", "--iteration-cap", "0"], dir.path()).status.code(), Some(3));
    assert_eq!(ban_router(&["frobnicate"], dir.path()).status.code(), Some(3));
}

#[test]
fn geojson_without_coordinates_is_explicit() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.txt"), TRIVIAL).unwrap();
    let out = ban_router(&["query", "g.txt", "-q", "0 1 0 10", "--format", "geojson"], dir.path());
    assert_ne!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("no coordinates"));
}

#[test]
fn cap_and_guard_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let gen = ban_router(&["gen", "exponential", "--k", "4", "-o", "e.txt", "--query-out", "q.txt"], dir.path());
    assert_eq!(gen.status.code(), Some(0), "{}", stderr(&gen));
    let capped = ban_router(&["query", "e.txt", "--queries", "q.txt", "--iteration-cap", "3"], dir.path());
    assert_eq!(capped.status.code(), Some(4));
    let guarded = ban_router(&["verify", "e.txt", "--queries", "q.txt", "--state-limit", "10"], dir.path());
    assert_eq!(guarded.status.code(), Some(5));
    let ok = ban_router(&["verify", "e.txt", "--queries", "q.txt"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
}

#[test]
fn verify_random_tractable_instances() {
    let dir = tempfile::tempdir().unwrap();
    for seed in ["1", "2", "3"] {
        let gen = ban_router(
            &[
                "gen", "random", "--vertices", "10", "--edges", "25", "--ban-density", "0.5", "--horizon", "60",
                "--time-per-unit", "3", "--costs", "2,2,1", "--rating-mix", "0.7,0.3", "--seed", seed, "-o", "r.txt",
            ],
            dir.path(),
        );
        assert_eq!(gen.status.code(), Some(0), "{}", stderr(&gen));
        let queries = ban_router(&["gen", "queries", "r.txt", "--sources", "4", "--ranks", "1,2,3", "--t-max", "60", "--seed", seed, "-o", "q.txt"], dir.path());
        assert_eq!(queries.status.code(), Some(0));
        let out = ban_router(&["verify", "r.txt", "--queries", "q.txt"], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}{}", stdout(&out), stderr(&out));
    }
}

#[test]
fn verify_names_query_count() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.txt"), TRIVIAL).unwrap();
    fs::write(dir.path().join("q.txt"), "query 0 1 0 10\nquery 1 0 0 10\nquery 0 0 2 5 0\n").unwrap();
    let out = ban_router(&["verify", "g.txt", "--queries", "q.txt"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("3 queries agree"));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gen", "random", "--vertices", "50", "--edges", "150", "--seed", "9"];
    let a = stdout(&ban_router(&args, dir.path()));
    let b = stdout(&ban_router(&args, dir.path()));
    assert_eq!(a, b);
    fs::write(dir.path().join("r.txt"), &a).unwrap();
    let q = ["gen", "queries", "r.txt", "--sources", "3", "--ranks", "3,4", "--t-max", "400", "--seed", "9"];
    let qa = stdout(&ban_router(&q, dir.path()));
    assert_eq!(qa, stdout(&ban_router(&q, dir.path())));
    fs::write(dir.path().join("q.txt"), &qa).unwrap();
    let run = ["query", "r.txt", "--queries", "q.txt", "--format", "json"];
    assert_eq!(stdout(&ban_router(&run, dir.path())), stdout(&ban_router(&run, dir.path())));
}

#[test]
fn bench_ch_and_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ban_router(&["gen", "random", "--vertices", "200", "--edges", "700", "--ban-density", "0.3", "-o", "r.txt"], p);
    ban_router(&["gen", "queries", "r.txt", "--sources", "4", "--ranks", "3,5", "--t-max", "400", "-o", "q.txt"], p);
    let built = ban_router(&["ch-build", "r.txt", "-o", "r.ch"], p);
    assert_eq!(built.status.code(), Some(0), "{}", stderr(&built));
    let bench = ban_router(&["bench", "r.txt", "--queries", "q.txt", "--ch", "r.ch", "--csv-out", "rep.csv", "--threads", "2"], p);
    assert_eq!(bench.status.code(), Some(0), "{}", stderr(&bench));
    let table = stdout(&bench);
    assert!(table.contains("hierarchy=true") && table.contains("median runtime"));
    let csv = fs::read_to_string(p.join("rep.csv")).unwrap();
    let query_count = fs::read_to_string(p.join("q.txt")).unwrap().lines().filter(|l| l.starts_with("query")).count();
    assert!(query_count > 0);
    assert_eq!(csv.lines().count(), query_count + 1);
    assert!(csv.lines().nth(1).unwrap().split(',').nth(3) == Some("3"));
    let summary = stdout(&ban_router(&["summarize", "rep.csv"], p));
    let aggregate: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(summary.lines().collect::<Vec<_>>(), aggregate);

    fs::write(p.join("other.txt"), TRIVIAL).unwrap();
    let stale = ban_router(&["query", "other.txt", "-q", "0 1 0 9", "--ch", "r.ch"], p);
    assert_eq!(stale.status.code(), Some(2));
}

#[test]
fn gadgets_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = ban_router(&["gen", "partition", "--numbers", "3,1,2", "-d", "1", "--c0", "2", "-o", "p.txt", "--query-out", "q.txt"], p);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(fs::read_to_string(p.join("p.txt")).unwrap().contains("# threshold 13"));
    let oracle = stdout(&ban_router(&["oracle", "p.txt", "--queries", "q.txt", "--format", "csv"], p));
    assert!(oracle.lines().any(|l| l == "13,13"), "{oracle}");
    assert_eq!(ban_router(&["gen", "partition", "--numbers", "3,1", "-d", "2", "--c0", "1"], p).status.code(), Some(3));

    fs::write(p.join("f.txt"), "instance 2 2\ncosts 4 4 1 0\nrating 0 2\nrating 1 1\nedge 0 1 3 4 6 8 9 11 12\n").unwrap();
    let ttf = stdout(&ban_router(&["ttf", "f.txt", "--edge", "0", "--t-max", "20"], p));
    assert!(ttf.contains("# convex 4 8 11") && ttf.contains("# concave 6 9 12") && ttf.contains("# discontinuous 10 13 15"), "{ttf}");
    let profile = ban_router(&["profile", "f.txt", "-q", "0 1 0 20", "--vertex", "1", "--no-astar"], p);
    assert_eq!(profile.status.code(), Some(0), "{}", stderr(&profile));
    assert!(stdout(&profile).starts_with("start,cost,slope,parent\n3,12,"));
    assert_eq!(ban_router(&["ttf", "f.txt", "--edge", "4", "--t-max", "20"], p).status.code(), Some(3));
}
