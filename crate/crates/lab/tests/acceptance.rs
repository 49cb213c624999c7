//! Runs every shipped scenario twice, once in-process and once through the
//! command-line binary, and prints one PASS/FAIL line per acceptance
//! criterion. Exits nonzero if any criterion fails.

use scatterlab::report::{read_manifest, RunReport};
use scatterlab::{run_all, scenario_files};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Duration;

const DFT_BUDGET: Duration = Duration::from_secs(10);

struct Criterion {
    id: usize,
    title: &'static str,
    scenario: &'static str,
    prefixes: &'static [&'static str],
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, title: "DFT unitarity and inversion", scenario: "evolve", prefixes: &["dft."] },
    Criterion { id: 2, title: "free Gaussian vs closed form", scenario: "evolve", prefixes: &["gaussian."] },
    Criterion { id: 3, title: "spectral-trace Plancherel", scenario: "evolve", prefixes: &["plancherel."] },
    Criterion { id: 4, title: "far-field resolvent asymptotics", scenario: "evolve", prefixes: &["far_field."] },
    Criterion { id: 5, title: "propagation estimate slopes", scenario: "propdecay", prefixes: &[""] },
    Criterion { id: 6, title: "local time defect", scenario: "localtime", prefixes: &[""] },
    Criterion { id: 7, title: "uncertainty products", scenario: "uncertainty", prefixes: &[""] },
    Criterion { id: 8, title: "short-range wave operators", scenario: "waveop-short", prefixes: &[""] },
    Criterion { id: 9, title: "eikonal phase and orbits", scenario: "eikonal", prefixes: &[""] },
    Criterion { id: 10, title: "long-range modified wave operator", scenario: "waveop-coulomb", prefixes: &[""] },
    Criterion { id: 11, title: "many-body partition of unity", scenario: "partition", prefixes: &[""] },
    Criterion {
        id: 12,
        title: "Born/Rutherford and relativistic factors",
        scenario: "xsection",
        prefixes: &["born.", "relativistic.", "kinetic."],
    },
    Criterion { id: 13, title: "clock laws", scenario: "xsection", prefixes: &["clock."] },
    Criterion { id: 14, title: "local-motion witness", scenario: "localmotion", prefixes: &[""] },
];

fn line(id: usize, pass: bool, title: &str, detail: &str) -> bool {
    println!("criterion {id:>2} {}  {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn judge(c: &Criterion, reports: &[RunReport]) -> bool {
    let Some(r) = reports.iter().find(|r| r.scenario == c.scenario) else {
        return line(c.id, false, c.title, &format!("scenario {} did not run", c.scenario));
    };
    let checks: Vec<_> =
        r.checks.iter().filter(|k| c.prefixes.iter().any(|p| k.name.starts_with(p))).collect();
    let mut pass = !checks.is_empty() && checks.iter().all(|k| k.pass);
    let mut detail = match checks.iter().find(|k| !k.pass) {
        Some(k) => format!("{} = {:e} violates {}", k.name, k.value, k.bound),
        None => format!("{} checks in {}", checks.len(), c.scenario),
    };
    if c.id == 1 {
        let timed: Vec<_> = r.timings.iter().filter(|(l, _)| l.starts_with("dft.")).collect();
        let slow = timed.iter().find(|(_, d)| *d >= DFT_BUDGET);
        pass &= !timed.is_empty() && slow.is_none();
        let worst = timed.iter().map(|(_, d)| *d).max().unwrap_or_default();
        detail = match slow {
            Some((l, d)) => format!("{l} took {d:.2?} (budget {DFT_BUDGET:?})"),
            None => format!("{detail}, slowest transform {worst:.2?}"),
        };
    }
    line(c.id, pass, c.title, &detail)
}

/// Byte-identical manifests between the in-process and the CLI run.
fn determinism(reports: &[RunReport], cli_out: &Path, cli_ok: bool) -> bool {
    let title = "CLI determinism";
    if !cli_ok {
        return line(15, false, title, "command-line run failed");
    }
    for r in reports {
        let name = r.dir.file_name().expect("output dir");
        let (a, b) = (std::fs::read(&r.manifest), std::fs::read(cli_out.join(name).join("manifest.csv")));
        match (a, b) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(_), Ok(_)) => return line(15, false, title, &format!("manifests differ for {}", r.scenario)),
            _ => return line(15, false, title, &format!("manifest missing for {}", r.scenario)),
        }
        // the manifest must describe the files actually on disk
        let listed = read_manifest(&r.manifest).expect("readable manifest");
        for e in listed {
            let bytes = std::fs::read(r.dir.join(&e.file)).expect("listed artifact");
            if scatterlab::report::sha256_hex(&bytes) != e.sha256 {
                return line(15, false, title, &format!("{}/{} does not match its hash", r.scenario, e.file));
            }
        }
    }
    line(15, true, title, &format!("{} scenarios, manifests byte-identical across two runs", reports.len()))
}

fn main() -> ExitCode {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let files = scenario_files(&dir).expect("scenario directory");
    let first = tempfile::tempdir().expect("temp dir");
    let second = tempfile::tempdir().expect("temp dir");
    let threads = scatterlab::thread_cap();

    let results = run_all(&files, first.path(), true, None, threads).expect("shipped scenarios load");
    let mut reports = Vec::new();
    for r in results {
        match r {
            Ok(r) => reports.push(r),
            Err(e) => println!("scenario error: {e}"),
        }
    }

    let status = Command::new(env!("CARGO_BIN_EXE_scatterlab"))
        .args(["all", "--strict", "--scenario"])
        .arg(&dir)
        .arg("--out")
        .arg(second.path())
        .output()
        .expect("spawn scatterlab");

    let mut all = true;
    for c in CRITERIA {
        all &= judge(c, &reports);
    }
    all &= determinism(&reports, second.path(), status.status.success());
    if all {
        println!("acceptance: all 15 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
