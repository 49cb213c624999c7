//! Scenario-driven batch runner for `scatterlab-core`.
//!
//! A scenario file selects one family of checks. Running it writes CSV
//! artifacts, a resolved copy of the scenario and `checks.csv` into its
//! own directory, then a manifest with the SHA-256 of every file.

pub mod oracle;
pub mod report;
pub mod runners;
pub mod scenario;

use report::{write_outputs, Artifact, RunReport, Table};
use scenario::{parse_scenario, ConfigError, Family, Parsed};
use std::path::{Path, PathBuf};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "SCATTERLAB_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Config { path: String, source: ConfigError },
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("scenario '{scenario}' ({family}): {failure}")]
    Compute { scenario: String, family: &'static str, failure: runners::Failure },
    #[error("scenario '{scenario}': writing outputs: {source}")]
    Write { scenario: String, source: std::io::Error },
}

impl RunError {
    /// Configuration problems map to exit status 2, everything else to 1.
    pub fn is_config(&self) -> bool {
        matches!(self, RunError::Config { .. } | RunError::Read { .. })
    }
}

/// Thread cap from [`THREADS_ENV`], defaulting to the available cores.
pub fn thread_cap() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Reads and validates a scenario file, applying a seed override.
pub fn load_scenario(path: &Path, strict: bool, seed: Option<u64>) -> Result<Parsed, RunError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Read { path: shown.clone(), source })?;
    let mut parsed = parse_scenario(&text, strict).map_err(|source| RunError::Config { path: shown, source })?;
    if seed.is_some() {
        parsed.scenario.seed = seed;
    }
    Ok(parsed)
}

/// Runs a validated scenario and writes its outputs under `out`.
pub fn run_scenario(parsed: &Parsed, out: &Path, threads: usize) -> Result<RunReport, RunError> {
    let s = &parsed.scenario;
    let family = s.family().section();
    let outcome = runners::run_family(s, threads).map_err(|failure| RunError::Compute {
        scenario: s.name.clone(),
        family,
        failure,
    })?;
    let mut files = vec![Artifact { file: "scenario.resolved.toml".into(), bytes: s.resolved_toml().into_bytes() }];
    files.extend(outcome.artifacts);
    let mut checks = Table::new("checks.csv", &["check", "value", "bound", "pass"]);
    for c in &outcome.checks {
        checks.row(cells![c.name.as_str(), c.value, c.bound.as_str(), c.pass]);
    }
    files.push(checks.finish());
    let dir = out.join(s.output_dir());
    let (manifest, entries) =
        write_outputs(&dir, &files).map_err(|source| RunError::Write { scenario: s.name.clone(), source })?;
    Ok(RunReport {
        scenario: s.name.clone(),
        family,
        dir,
        manifest,
        entries,
        checks: outcome.checks,
        timings: outcome.timings,
        warnings: parsed.unknown.clone(),
    })
}

/// Scenario files (`*.toml`) in `dir`, sorted by name.
pub fn scenario_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml") && p.is_file())
        .collect();
    files.sort();
    Ok(files)
}

/// Loads every scenario first, so a bad file stops the batch before any
/// work starts, then runs them on up to `threads` workers. Each scenario
/// owns its output directory. Results come back in file order.
pub fn run_all(
    files: &[PathBuf],
    out: &Path,
    strict: bool,
    seed: Option<u64>,
    threads: usize,
) -> Result<Vec<Result<RunReport, RunError>>, RunError> {
    let parsed = files.iter().map(|f| load_scenario(f, strict, seed)).collect::<Result<Vec<_>, _>>()?;
    let mut dirs: Vec<&str> = parsed.iter().map(|p| p.scenario.output_dir()).collect();
    dirs.sort_unstable();
    if let Some(w) = dirs.windows(2).find(|w| w[0] == w[1]) {
        return Err(RunError::Config {
            path: out.display().to_string(),
            source: ConfigError::Invalid(vec![scenario::FieldError {
                field: "output".into(),
                message: format!("two scenarios write to '{}'", w[0]),
            }]),
        });
    }
    let workers = threads.clamp(1, parsed.len().max(1));
    let inner = (threads / workers).max(1);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut results: Vec<Option<Result<RunReport, RunError>>> = (0..parsed.len()).map(|_| None).collect();
    let slots = std::sync::Mutex::new(&mut results);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                let Some(p) = parsed.get(i) else { break };
                let r = run_scenario(p, out, inner);
                slots.lock().expect("result slots")[i] = Some(r);
            });
        }
    });
    Ok(results.into_iter().map(|r| r.expect("every scenario ran")).collect())
}

/// Families in subcommand order, for usage text.
pub fn families() -> impl Iterator<Item = Family> {
    Family::ALL.into_iter()
}
