use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scatterlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn scatterlab")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const MOTION: &str = "schema = 1\nname = \"m\"\nseed = 1\n[localmotion]\n";

#[test]
fn passing_scenario_exits_zero_and_writes_manifest() {
    let d = tempfile::tempdir().unwrap();
    let f = write(d.path(), "m.toml", MOTION);
    let o = run(&["localmotion", "--scenario", &f], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = std::fs::read_to_string(d.path().join("m/manifest.csv")).unwrap();
    for file in ["scenario.resolved.toml", "witness.csv", "checks.csv"] {
        assert!(manifest.contains(file), "{manifest}");
    }
}

#[test]
fn failing_check_exits_one_and_names_it() {
    let d = tempfile::tempdir().unwrap();
    let f = write(d.path(), "x.toml", "schema = 1\nname = \"x\"\nseed = 1\n[xsection]\nborn_tolerance = 1e-9\n");
    let o = run(&["xsection", "--scenario", &f], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("born.rutherford_relative_error"));
}

#[test]
fn configuration_problems_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let bad_mass = write(
        d.path(),
        "p.toml",
        "schema = 1\nname = \"p\"\nseed = 1\n[partition]\ncases = [{ masses = [1.0, -2.0, 3.0], dim = 3 }]\n",
    );
    let o = run(&["partition", "--scenario", &bad_mass], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("partition.cases[0].masses[1]"));

    let motion = write(d.path(), "m.toml", MOTION);
    assert_eq!(run(&["partition", "--scenario", &motion], d.path()).status.code(), Some(2), "family mismatch");
    assert_eq!(run(&["evolve", "--scenario", "/nonexistent.toml"], d.path()).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"], d.path()).status.code(), Some(2));
    assert_eq!(run(&[], d.path()).status.code(), Some(2));
}

#[test]
fn unknown_keys_warn_unless_strict() {
    let d = tempfile::tempdir().unwrap();
    let f = write(d.path(), "m.toml", &format!("{MOTION}epsilonz = [0.1]\n"));
    let loose = run(&["localmotion", "--scenario", &f], d.path());
    assert_eq!(loose.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&loose.stderr).contains("localmotion.epsilonz"));
    let strict = run(&["localmotion", "--strict", "--scenario", &f], d.path());
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn empty_scenario_directory_prints_usage() {
    let d = tempfile::tempdir().unwrap();
    let empty = d.path().join("none");
    std::fs::create_dir(&empty).unwrap();
    let o = run(&["all", "--scenario", empty.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("Usage"));
}

#[test]
fn seed_override_changes_seeded_artifacts_only() {
    let d = tempfile::tempdir().unwrap();
    let f = write(d.path(), "u.toml", "schema = 1\nname = \"u\"\nseed = 1\n[uncertainty]\nrandom_states = 3\n[uncertainty.time_energy]\nstates = 2\npoints = 16\n");
    let a = d.path().join("a");
    let b = d.path().join("b");
    assert_eq!(run(&["uncertainty", "--scenario", &f], &a).status.code(), Some(0));
    assert_eq!(run(&["uncertainty", "--seed", "2", "--scenario", &f], &b).status.code(), Some(0));
    let read = |p: &Path| std::fs::read(p.join("u/products.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
    let resolved = std::fs::read_to_string(b.join("u/scenario.resolved.toml")).unwrap();
    assert!(resolved.contains("seed = 2"));
}
