use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn htf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htf"))
        .args(args)
        .output()
        .expect("run htf")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn matrix(dir: &Path) -> std::path::PathBuf {
    let m = dir.join("m.txt");
    let p = dir.join("p.txt");
    let out = htf(&[
        "generate",
        "--n",
        "20000",
        "--sigma",
        "8",
        "--grid",
        "48",
        "--seed",
        "3",
        "-o",
        s(&p),
        "--matrix-out",
        s(&m),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    m
}

#[test]
fn release_is_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let m = matrix(dir.path());
    for method in ["htf", "ug", "ag", "quadtree", "kdtree", "singular", "flat"] {
        let a = dir.path().join(format!("{method}-a.txt"));
        let b = dir.path().join(format!("{method}-b.txt"));
        for out in [&a, &b] {
            let o = htf(&[
                "release",
                "--matrix",
                s(&m),
                "--method",
                method,
                "--eps-tot",
                "0.5",
                "--seed",
                "9",
                "-o",
                s(out),
            ]);
            assert!(
                o.status.success(),
                "{method}: {}",
                String::from_utf8_lossy(&o.stderr)
            );
        }
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "{method}");
        let la = fs::read_to_string(dir.path().join(format!("{method}-a.txt.ledger.csv"))).unwrap();
        assert!(la.starts_with("seq,label,path,level,eps\n"));
    }
}

#[test]
fn points_and_ingest_agree() {
    let dir = tempfile::tempdir().unwrap();
    let m = matrix(dir.path());
    let m2 = dir.path().join("m2.txt");
    let o = htf(&[
        "ingest",
        "--points",
        s(&dir.path().join("p.txt")),
        "--bounds",
        "0,0,48,48",
        "--grid",
        "48",
        "-o",
        s(&m2),
    ]);
    assert!(o.status.success());
    assert_eq!(fs::read(&m).unwrap(), fs::read(&m2).unwrap());
}

#[test]
fn ingest_reports_dropped_points() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.txt");
    fs::write(&p, "# two points\n0.5,0.5\n7,-1\n").unwrap();
    let m = dir.path().join("m.txt");
    let o = htf(&[
        "ingest",
        "--points",
        s(&p),
        "--bounds",
        "0,0,2,2",
        "--grid",
        "2",
        "-o",
        s(&m),
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("1 points"));
    assert_eq!(fs::read_to_string(&m).unwrap(), "2 2 1\n1 0\n0 0\n");
}

#[test]
fn invalid_budget_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let m = matrix(dir.path());
    let out = dir.path().join("h.txt");
    let o = htf(&[
        "release",
        "--matrix",
        s(&m),
        "--eps-tot",
        "0.00001",
        "-o",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert!(!dir.path().join("h.txt.ledger.csv").exists());

    let o = htf(&[
        "release",
        "--matrix",
        s(&m),
        "--eps-tot",
        "-1",
        "--method",
        "ug",
        "-o",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.txt");
    let o = htf(&[
        "release",
        "--matrix",
        s(&missing),
        "-o",
        s(&dir.path().join("h.txt")),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.txt"));
}

#[test]
fn malformed_input_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.txt");
    fs::write(&m, "2 2 3\n1 x\n0 0\n").unwrap();
    let o = htf(&[
        "release",
        "--matrix",
        s(&m),
        "-o",
        s(&dir.path().join("h.txt")),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn evaluate_writes_one_row_per_query() {
    let dir = tempfile::tempdir().unwrap();
    let m = matrix(dir.path());
    let h = dir.path().join("h.txt");
    assert!(
        htf(&["release", "--matrix", s(&m), "--eps-tot", "1", "-o", s(&h)])
            .status
            .success()
    );
    let report = dir.path().join("r.csv");
    let wl = dir.path().join("w.txt");
    let o = htf(&[
        "evaluate",
        "--hist",
        s(&h),
        "--matrix",
        s(&m),
        "--queries",
        "37",
        "--size",
        "4%",
        "--shape",
        "square",
        "--workload-out",
        s(&wl),
        "-o",
        s(&report),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "query_id,true,answer,rel_err");
    assert_eq!(lines.len(), 1 + 37 + 1);
    assert!(lines[38].starts_with("# summary: queries=37"));

    // a saved workload reproduces the same report
    let again = dir.path().join("r2.csv");
    let o = htf(&[
        "evaluate",
        "--hist",
        s(&h),
        "--matrix",
        s(&m),
        "--workload",
        s(&wl),
        "-o",
        s(&again),
    ]);
    assert!(o.status.success());
    assert_eq!(fs::read(&report).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn config_file_sets_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let m = matrix(dir.path());
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# release settings\nmethod = ug\neps-tot = 0.2\nseed = 4\n",
    )
    .unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    assert!(htf(&[
        "release",
        "--config",
        s(&cfg),
        "--matrix",
        s(&m),
        "-o",
        s(&a)
    ])
    .status
    .success());
    assert!(htf(&[
        "release",
        "--matrix",
        s(&m),
        "--method",
        "ug",
        "--eps-tot",
        "0.2",
        "--seed",
        "4",
        "-o",
        s(&b)
    ])
    .status
    .success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(fs::read_to_string(&a).unwrap().starts_with("48 48 0.2 "));

    let c = dir.path().join("c.txt");
    assert!(htf(&[
        "release",
        "--config",
        s(&cfg),
        "--matrix",
        s(&m),
        "--eps-tot",
        "0.7",
        "-o",
        s(&c)
    ])
    .status
    .success());
    assert!(fs::read_to_string(&c).unwrap().starts_with("48 48 0.7 "));
}

#[test]
fn sweep_writes_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let m = matrix(dir.path());
    let out = dir.path().join("sweep.csv");
    let summary = dir.path().join("summary.csv");
    let o = htf(&[
        "sweep",
        "--matrix",
        s(&m),
        "--methods",
        "htf,ug,quadtree-geo,kdtree-uniform",
        "--eps",
        "0.1,1",
        "--sizes",
        "5%,10%",
        "--queries",
        "30",
        "--seeds",
        "1,2,3",
        "-o",
        s(&out),
        "--summary",
        s(&summary),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(&out).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4 * 2 * 2 * 3);
    assert!(rows.lines().skip(1).all(|l| l.ends_with(',')));
    let summary = fs::read_to_string(&summary).unwrap();
    assert_eq!(summary.lines().count(), 1 + 4 * 2 * 2);
    assert!(summary.lines().skip(1).all(|l| l.ends_with(",3")));
}

#[test]
fn unknown_sweep_method_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let m = matrix(dir.path());
    let o = htf(&[
        "sweep",
        "--matrix",
        s(&m),
        "--methods",
        "htf,nope",
        "--seeds",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = htf(&[
        "sweep",
        "--matrix",
        s(&m),
        "--methods",
        "ug-geo",
        "--seeds",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
