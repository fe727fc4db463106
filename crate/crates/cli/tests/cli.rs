use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hecke_equidist::ingest::cache::{request_key, Cache};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hecke-equidist"));
    for var in [
        "HECKE_EQUIDIST_CONFIG",
        "HECKE_EQUIDIST_ENDPOINT",
        "HECKE_EQUIDIST_CACHE_DIR",
        "HECKE_EQUIDIST_OFFLINE",
    ] {
        cmd.env_remove(var);
    }
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn psi_new_value() {
    let o = run(&["psi", "--N", "12", "--f", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "4\n");
    assert_eq!(
        stdout(&run(&["psi", "--N", "8", "--f", "4", "--kind", "new"])),
        "0\n"
    );
    assert_eq!(stdout(&run(&["psi", "--N", "12", "--kind", "psi"])), "24\n");
    assert_eq!(
        stdout(&run(&[
            "psi", "--N", "11", "--kind", "main", "--m", "1", "--k", "2"
        ])),
        "5/6\n"
    );
}

#[test]
fn predict_moment() {
    let o = run(&["predict", "--p", "2", "--n", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "1/4\n");
    assert_eq!(stdout(&run(&["predict", "--p", "3", "--n", "5"])), "0\n");
    assert_eq!(
        stdout(&run(&[
            "predict", "--p", "5", "--n", "6", "--N", "7", "--k", "4"
        ])),
        "1/125\n"
    );
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--bogus"]).status.code(), Some(64));
    assert_eq!(run(&["psi"]).status.code(), Some(64));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(
        run(&["predict", "--p", "4", "--n", "2"]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["predict", "--p", "2", "--n", "2", "--N", "8", "--f", "4"])
            .status
            .code(),
        Some(1)
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    let header = std::fs::read_to_string(fixture("family.jsonl"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    std::fs::write(
        &bad,
        format!("{header}\n{{\"level\":9,\"weight\":2,\"char\":\"9.1\",\"p\":3,\"lambda\":0.1}}\n"),
    )
    .unwrap();
    let o = run(&["analyze", "--in", bad.to_str().unwrap(), "--p", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(
        err.contains("line 2") && err.contains("p divides N"),
        "{err}"
    );
}

#[test]
fn analyze_fixture_family() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let moments = dir.path().join("moments.csv");
    let o = run(&[
        "analyze",
        "--in",
        fixture("family.jsonl").to_str().unwrap(),
        "--p",
        "2",
        "--nmax",
        "10",
        "--out",
        report.to_str().unwrap(),
        "--moments-csv",
        moments.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let family = v["family"].as_array().unwrap();
    assert_eq!(family.len(), 3);
    let sizes: Vec<u64> = family.iter().map(|s| s["size"].as_u64().unwrap()).collect();
    assert_eq!(sizes, vec![50, 200, 800]);
    for s in family {
        assert!(s["ks"].as_f64().unwrap() < 0.2);
        assert_eq!(s["moments"]["rows"].as_array().unwrap().len(), 11);
    }
    assert!(v["trend"]["ks_strictly_decreasing"].is_boolean());
    let csv = std::fs::read_to_string(&moments).unwrap();
    assert!(csv.starts_with("N,k,char_label,p,n,empirical_moment,predicted_moment,abs_error\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 11);
}

#[test]
fn sample_is_reproducible() {
    let a = run(&["sample", "--p", "3", "--sizes", "500", "--seed", "7"]);
    let b = run(&["sample", "--p", "3", "--sizes", "500", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 500);
    assert_ne!(
        a.stdout,
        run(&["sample", "--p", "3", "--sizes", "500", "--seed", "8"]).stdout
    );

    let dir = tempfile::tempdir().unwrap();
    let (x, y) = (dir.path().join("x.jsonl"), dir.path().join("y.jsonl"));
    for path in [&x, &y] {
        let o = run(&[
            "sample",
            "--p",
            "2",
            "--sizes",
            "50,200,800",
            "--seed",
            "42",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let committed = std::fs::read(fixture("family.jsonl")).unwrap();
    assert_eq!(std::fs::read(&x).unwrap(), committed);
    assert_eq!(std::fs::read(&y).unwrap(), committed);
}

#[test]
fn tables() {
    let o = run(&["density", "--p", "inf", "--points", "5"]);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "x,density");
    assert_eq!(rows[3], "0.0000000000000000e0,3.1830988618379069e-1");
    let text = stdout(&run(&["cdf", "--p", "5", "--points", "3"]));
    assert_eq!(
        text.lines().last().unwrap(),
        "2.0000000000000000e0,1.0000000000000000e0"
    );
    let text = stdout(&run(&["moments", "--p", "2", "--nmax", "20"]));
    for line in text.lines().skip(1) {
        let err: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(err <= 1e-10, "{line}");
    }
}

#[test]
fn check_suite_passes() {
    let o = run(&["check"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn fetch_offline_from_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache_dir = dir.path().join("cache");
    let config = dir.path().join("config.toml");
    std::fs::write(
        &config,
        format!(
            "endpoint = \"http://db.invalid/api\"\nurl_template = \"{{endpoint}}/{{N}}/{{k}}/{{c}}\"\ncache_dir = {:?}\n",
            cache_dir.display().to_string()
        ),
    )
    .unwrap();
    let cache = Cache::new(&cache_dir);
    let endpoint = "http://db.invalid/api";
    cache
        .put(
            &request_key(endpoint, "http://db.invalid/api/11/2/1"),
            r#"{"data":[{"label":"11.2.a.a","dim":1,"traces":[1,-2,-1]}]}"#,
        )
        .unwrap();

    let mut outputs = Vec::new();
    for name in ["a.jsonl", "b.jsonl"] {
        let out = dir.path().join(name);
        let o = bin()
            .args([
                "fetch",
                "--N",
                "11",
                "--k",
                "2",
                "--p",
                "3",
                "--out",
                out.to_str().unwrap(),
                "--config",
            ])
            .arg(&config)
            .env("HECKE_EQUIDIST_OFFLINE", "1")
            .output()
            .unwrap();
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.contains("\"ap\":[-1.0,0.0]"));

    let missing = dir.path().join("m.jsonl");
    let o = bin()
        .args([
            "fetch",
            "--N",
            "13",
            "--k",
            "2",
            "--p",
            "3",
            "--offline",
            "--out",
            missing.to_str().unwrap(),
            "--config",
        ])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}
