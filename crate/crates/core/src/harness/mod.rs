//! Sweeps, result files and summaries.

pub mod calibrate;
pub mod config;
pub mod stats;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::calibration::Calibration;
use crate::error::{invalid, Error, Result};
use crate::lasvegas::{run_lasvegas, Outcome};
use crate::engine::RunOptions;
use crate::rng::Tag;
pub use config::ExperimentConfig;
pub use stats::SummaryStats;

pub const CSV_HEADER: &str = "algo,n,epsilon,seed,trial,time,max_energy,mean_energy,iterations,status";
pub const WORKERS_ENV: &str = "MACLEADER_WORKERS";

/// Thread pool sized by `MACLEADER_WORKERS`, or by the machine if unset.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| invalid(format!("{WORKERS_ENV} must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(invalid(format!("{WORKERS_ENV} must be positive")));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| invalid(format!("thread pool: {e}")))
}

pub fn trial_seed(master: u64, n: u64, trial: u64) -> u64 {
    Tag::new("trial").with(master).with(n).with(trial).value()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub n: u64,
    pub seed: u64,
    pub trial: u64,
    /// `None` when the watchdog fired.
    pub outcome: Option<Outcome>,
}

/// Runs every `(n, trial)` of the configuration; rows come back in
/// `(n, trial)` order whatever the scheduling.
pub fn run_trials(cfg: &ExperimentConfig, cal: &Calibration) -> Result<Vec<TrialRow>> {
    cfg.validate()?;
    cal.validate()?;
    let jobs: Vec<(u64, u64)> = cfg
        .n
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect();
    let opts = RunOptions::new(cfg.model).watchdog(cfg.watchdog);
    worker_pool()?.install(|| {
        jobs.par_iter()
            .map(|&(n, trial)| {
                let seed = trial_seed(cfg.master_seed, n, trial);
                let outcome = match run_lasvegas(cfg.algo, n as usize, cal, seed, opts) {
                    Ok(o) => Some(o),
                    Err(Error::WatchdogExceeded { .. }) => None,
                    Err(e) => return Err(e),
                };
                Ok(TrialRow { n, seed, trial, outcome })
            })
            .collect()
    })
}

pub fn write_csv<W: Write>(mut w: W, cfg: &ExperimentConfig, rows: &[TrialRow]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    let eps = cfg.epsilon().map(|e| format!("{e:?}")).unwrap_or_default();
    for r in rows {
        let head = format!("{},{},{eps},{},{}", cfg.algo.name(), r.n, r.seed, r.trial);
        match &r.outcome {
            Some(o) => writeln!(
                w,
                "{head},{},{},{:.6},{},ok",
                o.time,
                o.max_energy(),
                o.mean_energy(),
                o.iterations
            )?,
            None => writeln!(w, "{head},{},,,,timeout", cfg.watchdog)?,
        }
    }
    Ok(())
}

pub fn manifest(cfg: &ExperimentConfig, cal: &Calibration) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "code_version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "config_hash = {}", cfg.hash());
    let _ = writeln!(s, "calibration_hash = {}", cal.hash());
    s.push_str("\n[config]\n");
    s.push_str(&cfg.to_text());
    s.push_str("\n[calibration]\n");
    s.push_str(&cal.to_text());
    s
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut p = output.as_os_str().to_owned();
    p.push(".manifest");
    PathBuf::from(p)
}

/// Runs the sweep and, if the configuration names an output file, writes
/// the CSV there and the manifest next to it.
pub fn run_sweep(cfg: &ExperimentConfig, cal: &Calibration) -> Result<Vec<TrialRow>> {
    let rows = run_trials(cfg, cal)?;
    if let Some(out) = &cfg.output {
        let mut buf = Vec::new();
        write_csv(&mut buf, cfg, &rows)?;
        std::fs::write(out, buf)?;
        std::fs::write(manifest_path(out), manifest(cfg, cal))?;
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub algo: String,
    pub n: u64,
    pub epsilon: String,
    pub trials: usize,
    pub timeouts: usize,
    pub time: Option<SummaryStats>,
    pub max_energy: Option<SummaryStats>,
    pub mean_energy: Option<SummaryStats>,
    pub iterations: Option<SummaryStats>,
}

/// Per-(algo, n, epsilon) statistics of a result CSV.
pub fn summarize(csv: &str) -> Result<Vec<Summary>> {
    let mut lines = csv.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `{CSV_HEADER}`"),
            })
        }
    }
    type Key = (String, u64, String);
    let mut groups: BTreeMap<Key, ([Vec<f64>; 4], usize, usize)> = BTreeMap::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: i + 1, msg };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(err(format!("expected 10 fields, found {}", f.len())));
        }
        let n: u64 = f[1].parse().map_err(|e| err(format!("n: {e}")))?;
        let g = groups
            .entry((f[0].to_string(), n, f[2].to_string()))
            .or_insert_with(Default::default);
        g.1 += 1;
        match f[9] {
            "ok" => {
                for (k, col) in [5, 6, 7, 8].into_iter().enumerate() {
                    let v: f64 = f[col].parse().map_err(|e| err(format!("column {}: {e}", col + 1)))?;
                    g.0[k].push(v);
                }
            }
            "timeout" => g.2 += 1,
            other => return Err(err(format!("unknown status `{other}`"))),
        }
    }
    Ok(groups
        .into_iter()
        .map(|((algo, n, epsilon), (cols, trials, timeouts))| Summary {
            algo,
            n,
            epsilon,
            trials,
            timeouts,
            time: SummaryStats::of(&cols[0]),
            max_energy: SummaryStats::of(&cols[1]),
            mean_energy: SummaryStats::of(&cols[2]),
            iterations: SummaryStats::of(&cols[3]),
        })
        .collect())
}

pub fn format_summary(rows: &[Summary]) -> String {
    let mut s = String::from("algo,n,epsilon,trials,timeouts,metric,mean,stderr,median,p95,min,max\n");
    for r in rows {
        for (name, st) in [
            ("time", r.time),
            ("max_energy", r.max_energy),
            ("mean_energy", r.mean_energy),
            ("iterations", r.iterations),
        ] {
            if let Some(st) = st {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{name},{:.4},{:.4},{},{},{},{}",
                    r.algo, r.n, r.epsilon, r.trials, r.timeouts, st.mean, st.stderr, st.median, st.p95, st.min, st.max
                );
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::plan::Algorithm;

    #[test]
    fn one_trial_gives_one_row_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(Algorithm::NoCd, vec![5], 1, 3);
        cfg.output = Some(dir.path().join("r.csv"));
        let cal = Calibration::default();
        run_sweep(&cfg, &cal).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.lines().nth(1).unwrap().ends_with(",ok"));
        let m = std::fs::read_to_string(dir.path().join("r.csv.manifest")).unwrap();
        assert!(m.contains(&cfg.hash()) && m.contains(&cal.hash()));
    }

    #[test]
    fn sweeps_are_reproducible() {
        let cfg = ExperimentConfig::new(Algorithm::SenderCd { eps: 1.0 }, vec![2, 9], 3, 11);
        let cal = Calibration::default();
        let render = || {
            let mut v = Vec::new();
            write_csv(&mut v, &cfg, &run_trials(&cfg, &cal).unwrap()).unwrap();
            v
        };
        assert_eq!(render(), render());
    }

    #[test]
    fn timeouts_are_recorded() {
        let mut cfg = ExperimentConfig::new(Algorithm::NoCd, vec![4], 2, 1);
        cfg.watchdog = 10;
        let rows = run_trials(&cfg, &Calibration::default()).unwrap();
        assert!(rows.iter().all(|r| r.outcome.is_none()));
        let mut v = Vec::new();
        write_csv(&mut v, &cfg, &rows).unwrap();
        let s = summarize(std::str::from_utf8(&v).unwrap()).unwrap();
        assert_eq!((s[0].trials, s[0].timeouts), (2, 2));
        assert!(s[0].time.is_none());
    }

    #[test]
    fn summary_of_two_rows() {
        let csv = format!("{CSV_HEADER}\nx,4,,1,0,1,2,1.5,1,ok\nx,4,,2,1,3,2,1.5,1,ok\n");
        let s = summarize(&csv).unwrap();
        let t = s[0].time.unwrap();
        assert_eq!((t.mean, t.stderr), (2.0, 1.0));
        assert_eq!(s[0].max_energy.unwrap().stderr, 0.0);
    }

    #[test]
    fn malformed_rows_name_their_line() {
        let csv = format!("{CSV_HEADER}\nx,4,,1,0,1,2,1.5,1,ok\nx,4,,1,0,abc,2,1.5,1,ok\n");
        assert!(matches!(summarize(&csv), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(summarize("a,b\n"), Err(Error::Parse { line: 1, .. })));
    }
}
