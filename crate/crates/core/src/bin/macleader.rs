use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use macleader::adversary::hitting::{build_hitting_multiset, verify_hitting_fraction, VerifyMode};
use macleader::adversary::table::ActionTable;
use macleader::adversary::{
    certify_no_success, energy_profile, expected_matches, find_matching_sequence, iteration_end,
    lasvegas_silent_energy, lowest_energy_half,
};
use macleader::calibration::Calibration;
use macleader::channel::{CdModel, DEFAULT_WATCHDOG};
use macleader::derandomize::{describe, export_action_table, search_seed};
use macleader::engine::plan::PlanBook;
use macleader::engine::{execute, RunOptions};
use macleader::harness::calibrate::{calibrate, CalibrationTargets};
use macleader::harness::config::{native_model, parse_algo};
use macleader::harness::{format_summary, run_sweep, summarize, write_csv, ExperimentConfig, TrialRow};
use macleader::lasvegas::partition::build_partition_family;
use macleader::rng::Keying;
use macleader::{Error, Result};

#[derive(Parser)]
#[command(name = "macleader", version, about = "Leader election on a simulated multiple-access channel")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exhaustive,
    Sampled,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one election and print its outcome.
    Run {
        #[arg(long, default_value = "nocd-lv")]
        algo: String,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        model: Option<String>,
        #[arg(long, default_value_t = DEFAULT_WATCHDOG)]
        watchdog: u64,
        #[arg(long)]
        calibration: Option<PathBuf>,
        /// Write a per-round CSV trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run many trials and write a result CSV plus manifest.
    Sweep {
        /// Configuration file; the flags below are ignored when given.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "nocd-lv")]
        algo: String,
        /// Comma separated sizes.
        #[arg(long, value_delimiter = ',')]
        n: Vec<u64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long, required_unless_present = "config")]
        seed: Option<u64>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long, default_value_t = DEFAULT_WATCHDOG)]
        watchdog: u64,
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summary statistics of a result CSV.
    Summarize {
        #[arg(long)]
        input: PathBuf,
    },
    /// Fix the free constants by simulation and write a calibration file.
    Calibrate {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Structural parameters are taken from this file.
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
    /// Search and certify a deterministic election for an ID space.
    Derandomize {
        #[arg(long = "N")]
        big_n: u64,
        #[arg(long)]
        ntilde: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        max_tries: u64,
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the silent action table of the certified algorithm.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Run the matching-sequence adversary on an action table.
    Adversary {
        #[arg(long)]
        table: PathBuf,
        /// Use every ID instead of the lower-energy half.
        #[arg(long)]
        full: bool,
    },
    /// Mean silent-trace energy of an iterative algorithm.
    ProfileSilent {
        #[arg(long, default_value = "nocd-lv")]
        algo: String,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Comma separated iteration counts.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        iterations: Vec<u32>,
        #[arg(long, default_value_t = 64)]
        devices: usize,
        #[arg(long, default_value_t = 4)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Fraction of small subsets isolated by a partition family.
    VerifyPartitions {
        #[arg(long = "N")]
        big_n: u64,
        #[arg(long)]
        b: u64,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        c_k: f64,
        #[arg(long, default_value_t = 4)]
        max_size: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Build a hitting multiset and report the largest hit fraction.
    HittingSet {
        #[arg(long = "N")]
        big_n: u32,
        #[arg(long, default_value_t = 256)]
        reps: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
        mode: Mode,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
}

fn load_cal(path: &Option<PathBuf>) -> Result<Calibration> {
    match path {
        Some(p) => Calibration::load(p),
        None => Ok(Calibration::default()),
    }
}

fn model_or(name: &Option<String>, default: CdModel) -> Result<CdModel> {
    match name {
        Some(m) => CdModel::parse(m).ok_or_else(|| Error::InvalidParams(format!("unknown model `{m}`"))),
        None => Ok(default),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cmd {
        Cmd::Run {
            algo,
            n,
            epsilon,
            seed,
            model,
            watchdog,
            calibration,
            trace,
        } => {
            let algo = parse_algo(&algo, epsilon)?;
            let cal = load_cal(&calibration)?;
            let mut cfg = ExperimentConfig::new(algo, vec![n], 1, seed);
            cfg.model = model_or(&model, native_model(algo))?;
            cfg.watchdog = watchdog;
            cfg.validate()?;
            let opts = RunOptions::new(cfg.model).watchdog(watchdog).record(trace.is_some());
            let book = PlanBook::iterative(algo, cal.clone(), seed);
            let row = match execute(&book, n as usize, &Keying::Shared(seed), opts) {
                Ok((sim, tr)) => {
                    if let (Some(path), Some(tr)) = (&trace, tr) {
                        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
                        tr.write_csv(&mut f)?;
                        f.flush()?;
                    }
                    Some(macleader::lasvegas::Outcome {
                        leader: sim.leader,
                        time: sim.time,
                        energy: sim.ledger,
                        iterations: sim.iterations,
                    })
                }
                Err(Error::WatchdogExceeded { .. }) => None,
                Err(e) => return Err(e),
            };
            let rows = [TrialRow {
                n,
                seed,
                trial: 0,
                outcome: row,
            }];
            write_csv(&mut out, &cfg, &rows)?;
        }
        Cmd::Sweep {
            config,
            algo,
            n,
            epsilon,
            trials,
            seed,
            model,
            watchdog,
            calibration,
            out: output,
        } => {
            let cfg = match config {
                Some(p) => ExperimentConfig::load(&p)?,
                None => {
                    let algo = parse_algo(&algo, epsilon)?;
                    let mut cfg = ExperimentConfig::new(algo, n, trials, seed.expect("required by clap"));
                    cfg.model = model_or(&model, native_model(algo))?;
                    cfg.watchdog = watchdog;
                    cfg.calibration = calibration;
                    cfg.output = output;
                    cfg.validate()?;
                    cfg
                }
            };
            let cal = load_cal(&cfg.calibration)?;
            let rows = run_sweep(&cfg, &cal)?;
            if cfg.output.is_none() {
                write_csv(&mut out, &cfg, &rows)?;
            } else {
                let timeouts = rows.iter().filter(|r| r.outcome.is_none()).count();
                writeln!(out, "{} trials, {timeouts} timeouts", rows.len())?;
            }
        }
        Cmd::Summarize { input } => {
            let s = summarize(&std::fs::read_to_string(input)?)?;
            write!(out, "{}", format_summary(&s))?;
        }
        Cmd::Calibrate {
            seed,
            out: path,
            base,
            trials,
        } => {
            let base = load_cal(&base)?;
            let targets = CalibrationTargets {
                trials,
                ..CalibrationTargets::new(seed)
            };
            let cal = calibrate(&targets, &base)?;
            std::fs::write(&path, cal.to_text())?;
            write!(out, "{}", cal.to_text())?;
        }
        Cmd::Derandomize {
            big_n,
            ntilde,
            seed,
            max_tries,
            calibration,
            out: path,
            table,
        } => {
            let cal = load_cal(&calibration)?;
            let cert = search_seed(big_n, ntilde, &cal, max_tries, seed)?;
            writeln!(
                out,
                "N = {big_n}, ntilde = {ntilde}, f = {}, master seed {} after {} tries: {}",
                cert.f,
                cert.master_seed,
                cert.tries,
                describe(&cert.verdict)
            )?;
            if let Some(p) = path {
                std::fs::write(p, cert.to_text())?;
            }
            if let Some(p) = table {
                let t = export_action_table(&cert.phi, ntilde, &cal, cert.verdict.time)?;
                std::fs::write(p, t.to_string())?;
            }
        }
        Cmd::Adversary { table, full } => {
            let t = ActionTable::load(&table)?;
            let subset: Vec<usize> = if full { (0..t.n()).collect() } else { lowest_energy_half(&t) };
            let m = find_matching_sequence(&t, &subset);
            let k = energy_profile(&t);
            writeln!(out, "energy profile: {k:?}")?;
            writeln!(out, "candidates: {subset:?}")?;
            writeln!(out, "matched: {:?}", m.matched)?;
            writeln!(
                out,
                "size {} (expected at least {:.6})",
                m.matched.len(),
                expected_matches(&t, &subset)
            )?;
            let ok = certify_no_success(&t, &m.matched, t.t());
            writeln!(out, "no successful round inside matched set: {ok}")?;
        }
        Cmd::ProfileSilent {
            algo,
            epsilon,
            iterations,
            devices,
            trials,
            seed,
            calibration,
        } => {
            let algo = parse_algo(&algo, epsilon)?;
            let cal = load_cal(&calibration)?;
            writeln!(out, "iterations,t,mean_energy")?;
            for i in iterations {
                let e = lasvegas_silent_energy(algo, &cal, i, devices, trials, seed)?;
                writeln!(out, "{i},{},{e:.4}", iteration_end(algo, &cal, i)?)?;
            }
        }
        Cmd::VerifyPartitions {
            big_n,
            b,
            eps,
            c_k,
            max_size,
            seed,
        } => {
            let fam = build_partition_family(u128::from(big_n), b, eps, c_k, seed)?;
            let frac = fam.hitting_fraction(max_size)?;
            writeln!(out, "K = {}, isolated fraction of subsets up to size {max_size}: {frac:.6}", fam.k)?;
        }
        Cmd::HittingSet {
            big_n,
            reps,
            seed,
            mode,
            samples,
        } => {
            let h = build_hitting_multiset(big_n, reps, seed)?;
            let mode = match mode {
                Mode::Exhaustive => VerifyMode::Exhaustive,
                Mode::Sampled => VerifyMode::Sampled { samples, seed },
            };
            let f = verify_hitting_fraction(&h, mode)?;
            writeln!(
                out,
                "{} sets, largest hit fraction {f:.6} (times log2 N: {:.4})",
                h.len(),
                f * f64::from(big_n.trailing_zeros())
            )?;
        }
    }
    Ok(())
}
