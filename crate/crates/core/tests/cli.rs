use std::path::Path;
use std::process::{Command, Output};

fn combwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_combwalk"))
        .args(args)
        .output()
        .expect("spawn combwalk")
}

fn ok(args: &[&str]) -> String {
    let out = combwalk(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    combwalk(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_on_every_subcommand() {
    for sub in [
        vec![],
        vec!["simulate"],
        vec!["oracle"],
        vec!["oracle", "return"],
        vec!["oracle", "meetings"],
        vec!["oracle", "persite"],
        vec!["oracle", "distribution"],
        vec!["oracle", "identities"],
        vec!["stats"],
        vec!["fit"],
        vec!["verify"],
    ] {
        let mut args = sub.clone();
        args.push("--help");
        assert_eq!(code(&args), 0, "{args:?}");
    }
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(
        code(&[
            "simulate",
            "--graph",
            "comb:line",
            "--steps",
            "10",
            "--replicas",
            "0",
            "--seed",
            "1"
        ]),
        2
    );
    assert_eq!(
        code(&[
            "simulate",
            "--graph",
            "comb:line",
            "--steps",
            "10",
            "--replicas",
            "3"
        ]),
        2
    );
    assert_eq!(
        code(&[
            "simulate",
            "--graph",
            "nope",
            "--steps",
            "10",
            "--replicas",
            "3",
            "--seed",
            "1"
        ]),
        2
    );
    assert_eq!(
        code(&[
            "simulate",
            "--graph",
            "line",
            "--steps",
            "10",
            "--replicas",
            "3",
            "--seed",
            "1",
            "--alpha",
            "0.5"
        ]),
        2
    );
    assert_eq!(code(&["bogus"]), 2);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let args = |p: &Path, w: &str| {
        ok(&[
            "simulate",
            "--graph",
            "comb:line",
            "--steps",
            "65536",
            "--replicas",
            "40",
            "--seed",
            "7",
            "--workers",
            w,
            "--output",
            s(p),
        ])
    };
    args(&a, "1");
    args(&b, "4");
    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    assert_eq!(ta.iter().filter(|&&c| c == b'\n').count(), 40);
    assert!(!dir.path().join("a.jsonl.partial").exists());
}

#[test]
fn ladder_runs_deep() {
    let out = ok(&[
        "simulate",
        "--graph",
        "biased-ladder",
        "--steps",
        "100000",
        "--replicas",
        "2",
        "--seed",
        "1",
    ]);
    assert_eq!(out.lines().count(), 2);
    assert!(out.contains("\"spine_moves\""));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "# small run\ngraph = \"comb:cycle:4\"\nsteps = 32\nreplicas = 5\nseed = 3\nconstruction = \"geometric-clock\"\n",
    )
    .unwrap();
    let a = ok(&["simulate", "--config", s(&cfg)]);
    assert_eq!(a.lines().count(), 5);
    let b = ok(&["simulate", "--config", s(&cfg), "--replicas", "2"]);
    assert_eq!(b.lines().count(), 2);
    assert!(a.starts_with(b.lines().next().unwrap()));
    std::fs::write(
        &cfg,
        "graph = \"line\"\nsteps = 3\nreplicas = 1\nseed = 1\ncolour = \"red\"\n",
    )
    .unwrap();
    assert_eq!(code(&["simulate", "--config", s(&cfg)]), 2);
}

#[test]
fn oracle_return_rows() {
    let out = ok(&["oracle", "return", "--graph", "comb:line", "--nmax", "2048"]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("n,value"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 1024);
    assert!(rows[0].starts_with("2,0.375"));
    assert!(!out.contains('\r'));
    let line = ok(&["oracle", "return", "--graph", "line", "--nmax", "4"]);
    assert_eq!(line, "n,value\n2,0.5\n4,0.375\n");
}

#[test]
fn identities_pass() {
    let out = ok(&["verify"]);
    assert!(out.starts_with("check,residual,pass\n"));
    assert!(out.lines().skip(1).all(|l| l.ends_with(",true")));
    assert_eq!(ok(&["oracle", "identities"]), out);
}

#[test]
fn meetings_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    ok(&[
        "oracle",
        "meetings",
        "--graph",
        "comb:line",
        "--nmax",
        "2048",
        "--output",
        s(&csv),
    ]);
    let fit = ok(&["fit", "--input", s(&csv), "--range", "256:2048"]);
    let row: Vec<f64> = fit
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((row[0] - 0.25).abs() <= 0.05, "{fit}");
}

#[test]
fn distribution_csv() {
    let out = ok(&[
        "oracle",
        "distribution",
        "--graph",
        "cycle:4",
        "--nmax",
        "1",
    ]);
    assert_eq!(out, "vertex,probability\n(1),0.5\n(3),0.5\n");
    let out = ok(&[
        "oracle",
        "distribution",
        "--graph",
        "comb:line",
        "--nmax",
        "2",
    ]);
    assert!(out.contains("\"(0,0)\",0.375"));
}

#[test]
fn fit_degenerate_exit_5() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    std::fs::write(&csv, "n,value\n1,1\n2,0\n4,1\n").unwrap();
    assert_eq!(code(&["fit", "--input", s(&csv)]), 5);
    std::fs::write(&csv, "n,value\n1,1\n2,1\n").unwrap();
    assert_eq!(code(&["fit", "--input", s(&csv)]), 5);
    std::fs::write(&csv, "n,value\n1,1\n2,2\n4,4\n").unwrap();
    assert!(ok(&["fit", "--input", s(&csv)]).contains("\n1,0,0,1,4,3\n"));
}

#[test]
fn budget_exit_3() {
    let out = Command::new(env!("CARGO_BIN_EXE_combwalk"))
        .args(["oracle", "return", "--graph", "comb:line", "--nmax", "400"])
        .env("COMBWALK_MEMORY_BUDGET", "64K")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(
        code(&[
            "oracle",
            "return",
            "--graph",
            "grid2d",
            "--nmax",
            "400",
            "--memory-budget",
            "1M"
        ]),
        3
    );
}

#[test]
fn stats_on_empty_input_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("e.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = ok(&[
        "stats",
        "--input",
        s(&empty),
        "--r-range",
        "0:3",
        "--k-range",
        "0:2",
    ]);
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("r,k,Z_mean,A_prob,W_mean,W_given_A,count,cond_count")
    );
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!((f[2], f[3]), ("0", "0"), "{l}");
    }
}

#[test]
fn stats_schema_mismatch_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"replica\":0}\n").unwrap();
    assert_eq!(code(&["stats", "--input", s(&bad)]), 4);
    std::fs::write(&bad, "not json\n").unwrap();
    assert_eq!(code(&["stats", "--input", s(&bad)]), 4);
}

#[test]
fn shards_merge_byte_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.jsonl");
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let base = [
        "simulate",
        "--graph",
        "comb:line",
        "--steps",
        "4096",
        "--seed",
        "11",
        "--alpha",
        "0.75,0.9",
    ];
    let run = |extra: &[&str], out: &Path| {
        let mut args: Vec<&str> = base.to_vec();
        args.extend_from_slice(extra);
        args.extend_from_slice(&["--output", s(out)]);
        ok(&args);
    };
    run(&["--replicas", "300"], &full);
    run(&["--replicas", "120"], &a);
    run(&["--replicas", "180", "--first-replica", "120"], &b);
    let reports = ["--dyadic", "-", "--growth", "-", "--lil", "-"];
    let mut one = vec!["stats", "--input", s(&full)];
    one.extend_from_slice(&reports);
    let mut two = vec!["stats", "--input", s(&a), s(&b)];
    two.extend_from_slice(&reports);
    assert_eq!(ok(&one), ok(&two));
    let mut swapped = vec!["stats", "--input", s(&b), s(&a)];
    swapped.extend_from_slice(&reports);
    assert_eq!(ok(&one), ok(&swapped));
}

#[test]
fn comparative_growth_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut inputs = Vec::new();
    for (i, g) in ["line", "grid2d", "comb:line", "biased-ladder"]
        .iter()
        .enumerate()
    {
        let p = dir.path().join(format!("{i}.jsonl"));
        ok(&[
            "simulate",
            "--graph",
            g,
            "--steps",
            "1024",
            "--replicas",
            "20",
            "--seed",
            "5",
            "--output",
            s(&p),
        ]);
        inputs.push(p);
    }
    let mut args = vec!["stats", "--input"];
    args.extend(inputs.iter().map(|p| s(p)));
    args.extend(["--growth", "-"]);
    let out = ok(&args);
    assert!(out.starts_with("graph,t,mean_meetings,survival_frac\n"));
    for g in ["line", "grid2d", "comb:line", "biased-ladder"] {
        assert_eq!(
            out.lines()
                .filter(|l| l.starts_with(&format!("{g},")))
                .count(),
            11
        );
    }
}

#[test]
fn drift_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("l.jsonl");
    ok(&[
        "simulate",
        "--graph",
        "biased-ladder",
        "--steps",
        "2000",
        "--replicas",
        "50",
        "--seed",
        "2",
        "--checkpoints",
        "every:100",
        "--track-positions",
        "--output",
        s(&p),
    ]);
    let out = ok(&["stats", "--input", s(&p), "--drift", "-"]);
    let row: Vec<f64> = out
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((row[2] - 1.0 / 3.0).abs() < 0.05, "{out}");
    let c = dir.path().join("c.jsonl");
    ok(&[
        "simulate",
        "--graph",
        "comb:line",
        "--steps",
        "20",
        "--replicas",
        "2",
        "--seed",
        "2",
        "--output",
        s(&c),
    ]);
    assert_eq!(code(&["stats", "--input", s(&c), "--drift", "-"]), 4);
}
