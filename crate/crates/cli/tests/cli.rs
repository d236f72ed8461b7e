use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ringlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringlab")).args(args).output().unwrap()
}

fn run_config(dir: &Path, name: &str, text: &str, extra: &[&str]) -> Output {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    let out = dir.join("out");
    let mut args = vec!["run", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ringlab(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn csv_body(dir: &Path, kind: &str) -> String {
    let text = fs::read_to_string(dir.join("out").join(format!("{kind}.csv"))).unwrap();
    assert!(text.starts_with("# ringlab"));
    text.lines().skip(1).collect::<Vec<_>>().join("\n")
}

#[test]
fn inspect_examples() {
    let o = ringlab(&["inspect", "--modulus", "8"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("q = 8, additive invariants [8] (cyclic), 4 units"));
    let o = ringlab(&["inspect", "--field", "Q(i)", "--modulus", "9"]);
    assert!(stdout(&o).contains("q = 81, additive invariants [9, 9]"));
    assert!(stdout(&o).contains("72 units"));
}

#[test]
fn composite_inspect_shows_crt() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ring.toml");
    fs::write(
        &path,
        "kind = \"inspect\"\n[ring]\nfield = \"Q(i)\"\nprimes = [{ p = 3, exponent = 1 }, { p = 5, g = [2, 1], exponent = 1 }]\n",
    )
    .unwrap();
    let o = ringlab(&["inspect", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("q = 45"));
    assert!(stdout(&o).contains("CRT:"));
}

#[test]
fn identity_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(dir.path(), "id.toml", "kind = \"identity-suite\"\n[params]\nmeasures_per_ring = 4\n", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(csv_body(dir.path(), "identity-suite").lines().skip(1).all(|l| l.ends_with("true")));
}

#[test]
fn decay_on_units_of_z9() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "kind = \"decay\"\n[ring]\nmodulus = 9\n[params]\nexpect_max_below = 1e-12\nmeasures = [{ kind = \"units\" }]\n";
    let o = run_config(dir.path(), "decay.toml", cfg, &[]);
    assert_eq!(o.status.code(), Some(0));
    let body = csv_body(dir.path(), "decay");
    let row: Vec<&str> = body.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert_eq!(row[1].parse::<f64>().unwrap(), 0.0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/decay.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);
}

#[test]
fn failed_assertion_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "kind = \"decay\"\n[ring]\nmodulus = 9\n[params]\nexpect_max_below = 0.5\nmeasures = [{ kind = \"dirac\", at = 1 }]\n";
    let o = run_config(dir.path(), "decay.toml", cfg, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(dir.path().join("out/decay.json").exists());
}

#[test]
fn generation_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "kind = \"generation\"\n[ring]\nmodulus = 7\n[params]\nelements = [1, 6]\n";
    let o = run_config(dir.path(), "gen.toml", cfg, &[]);
    assert_eq!(o.status.code(), Some(0));
    let body = csv_body(dir.path(), "generation");
    assert!(body.starts_with("q,tau,r1_cap,r2_cap,r1,r2,outer,inner,cover_size,verified"));
    assert!(body.lines().nth(1).unwrap().starts_with("7,1,4,6,1,3,"));
}

#[test]
fn seeded_runs_are_reproducible() {
    let cfg = "kind = \"covering\"\n[ring]\nmodulus = 11\n[params]\ngamma = 0.0999\nsamples = 5\n";
    let bodies: Vec<String> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let o = run_config(dir.path(), "cov.toml", cfg, &["--seed", "17", "--threads", "2"]);
            assert_eq!(o.status.code(), Some(0));
            csv_body(dir.path(), "covering")
        })
        .collect();
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[0].lines().count(), 6);
}

#[test]
fn glueing_on_z105() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "kind = \"glueing\"\n[ring]\nmodulus = 105\n[params]\nmeasures = [{ kind = \"uniform\" }, { kind = \"units\" }]\n";
    let o = run_config(dir.path(), "glue.toml", cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("accepted components [0, 1, 2]"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/glueing.json")).unwrap()).unwrap();
    assert_eq!(summary["report"]["ledger"]["chain_holds"], true);
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(dir.path(), "bad.toml", "kind = \"decay\"\nbogus = 1\n", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
    let o = run_config(dir.path(), "noring.toml", "kind = \"decay\"\n[params]\nmeasures = []\n", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[ring]"));
    let o = run_config(dir.path(), "badparam.toml", "kind = \"generation\"\n[ring]\nmodulus = 7\n[params]\nelements = [1]\nextra = 2\n", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(ringlab(&["run"]).status.code(), Some(1));
    assert_eq!(ringlab(&["inspect", "--modulus", "1"]).status.code(), Some(1));
}
