use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pramdb"))
}

struct Dir(PathBuf);

impl Dir {
    fn new(tag: &str) -> Dir {
        let d = std::env::temp_dir().join(format!("pramdb-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        Dir(d)
    }

    fn file(&self, name: &str, text: &str) -> String {
        let p = self.0.join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    }
}

impl Drop for Dir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn triangle_db(d: &Dir, setting: &str) -> String {
    d.file("R.csv", "A,B\n1,2\n2,3\n3,1\n1,3\n");
    d.file("S.csv", "B,C\n2,3\n3,1\n1,2\n3,3\n");
    d.file("T.csv", "A,C\n1,3\n2,1\n3,2\n");
    d.file(
        "db.json",
        &format!(
            r#"{{"setting": "{setting}", "relations": [
                {{"name": "R", "file": "R.csv"}}, {{"name": "S", "file": "S.csv"}}, {{"name": "T", "file": "T.csv"}}]}}"#
        ),
    )
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn report(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn single_atom_verifies() {
    let d = Dir::new("atom");
    let db = triangle_db(&d, "dictionary");
    let q = d.file("q.dl", "Q(a,b) :- R(a,b).\n");
    let o = run(&["eval", &db, &q, "--verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["oracle_match"], true);
    assert_eq!(r["result_cardinality"], 4);
    assert_eq!(r["report_version"], 1);
}

#[test]
fn triangle_through_every_evaluator() {
    let d = Dir::new("tri");
    let db = triangle_db(&d, "dictionary");
    let q = d.file("q.dl", "Q(a,b,c) :- R(a,b), S(b,c), T(a,c).\n");
    let ghd = d.file(
        "g.json",
        r#"{"nodes": [{"id": 0, "chi": ["a","b","c"], "mu": ["R","S"]}, {"id": 1, "chi": ["a","c"], "mu": ["T"]}],
            "edges": [[0, 1]], "root": 0}"#,
    );
    let out = d.0.join("res.csv");
    for extra in [vec!["--evaluator", "wcoj", "--attr-order", "c,a,b"], vec!["--evaluator", "ghd", "--ghd", &ghd]] {
        let mut args = vec!["eval", &db, &q, "--verify", "--result", out.to_str().unwrap()];
        args.extend(extra);
        let o = run(&args);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(report(&o)["oracle_match"], true);
        let csv = std::fs::read_to_string(&out).unwrap();
        let mut lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.remove(0), "a,b,c");
        lines.sort();
        assert_eq!(lines, ["1,2,3", "1,3,3", "2,3,1", "3,1,2"]);
    }
}

#[test]
fn invalid_ghd_is_a_fault() {
    let d = Dir::new("badghd");
    let db = triangle_db(&d, "dictionary");
    let q = d.file("q.dl", "Q(a,b,c) :- R(a,b), S(b,c), T(a,c).\n");
    // `a` occurs in bags 0 and 2 but not in bag 1 between them.
    let ghd = d.file(
        "g.json",
        r#"{"nodes": [{"id": 0, "chi": ["a","b"], "mu": ["R"]}, {"id": 1, "chi": ["b","c"], "mu": ["S"]},
                      {"id": 2, "chi": ["a","c"], "mu": ["T"]}],
            "edges": [[0, 1], [1, 2]], "root": 0}"#,
    );
    let o = run(&["eval", &db, &q, "--evaluator", "ghd", "--ghd", &ghd]);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("g.json"));
}

#[test]
fn bad_inputs_fail_with_messages() {
    let d = Dir::new("bad");
    let db = triangle_db(&d, "dictionary");
    let q = d.file("q.dl", "Q(a,b) :- R(a,b), Missing(b).\n");
    let o = run(&["eval", &db, &q]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Missing"));

    let q = d.file("p.dl", "Q(a,b :- R(a,b).\n");
    assert_eq!(run(&["eval", &db, &q]).status.code(), Some(2));
    assert_eq!(run(&["eval", "nope.json", &q]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn plans_in_each_setting() {
    let d = Dir::new("plan");
    let p = d.file("p.txt", "(diff R (project (A B) (sjoin R S)))\n");
    for setting in ["dictionary", "general"] {
        let db = triangle_db(&d, setting);
        let o = run(&["eval", &db, &p, "--verify"]);
        assert_eq!(o.status.code(), Some(0), "{setting}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(report(&o)["oracle_match"], true);
    }
    // Without an ordered_by entry the ordered setting has no order to use.
    let db = triangle_db(&d, "ordered");
    let o = run(&["eval", &db, &p, "--plan-mode", "ordered"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("order"));
}

#[test]
fn bench_and_primitives() {
    let o = run(&["bench", "evens-vs-odds", "--sizes", "32,64", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3, "{text}");

    let o = run(&["primitives", "prefix-sums", "--n", "300", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&o)["passed"], true);
    assert_eq!(run(&["primitives", "nonsense"]).status.code(), Some(2));
}
