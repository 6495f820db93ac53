//! Fixes the free constants by Monte Carlo runs.

use rayon::prelude::*;

use crate::adversary::hitting::{build_hitting_multiset, verify_hitting_fraction, VerifyMode};
use crate::calibration::Calibration;
use crate::channel::CdModel;
use crate::engine::RunOptions;
use crate::error::{Error, Result};
use crate::harness::worker_pool;
use crate::lasvegas::{nocd_lasvegas, sendercd_subroutine};
use crate::proto::basic_elect;
use crate::rng::{Keying, Tag};

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationTargets {
    /// Estimates at which the single election must meet `f / 2`, each run
    /// with the smallest size it covers, `ñ/2 + 1`.
    pub n_tildes: Vec<u64>,
    pub f: f64,
    pub trials: u64,
    pub c0_step: f64,
    pub c0_max: f64,
    /// No-CD runs at `energy_n` devices that fix `c_e`.
    pub energy_n: usize,
    pub energy_trials: u64,
    pub hitting_n: u32,
    pub hitting_reps: u32,
    /// Subroutine size for `sub_energy` and `c_g`.
    pub sub_d: u64,
    pub sub_trials: u64,
    pub guard_trials: u64,
    pub seed: u64,
}

impl CalibrationTargets {
    pub fn new(seed: u64) -> Self {
        CalibrationTargets {
            n_tildes: vec![2, 8, 64, 1024],
            f: 0.25,
            trials: 10_000,
            c0_step: 1.0,
            c0_max: 64.0,
            energy_n: 256,
            energy_trials: 100,
            hitting_n: 16,
            hitting_reps: 256,
            sub_d: 8,
            sub_trials: 10_000_000,
            guard_trials: 100_000,
            seed,
        }
    }
}

/// Upper end of the population scan for `c_g`.
pub const GUARD_MAX_N: usize = 4096;

fn seed_for(label: &str, seed: u64, a: u64, trial: u64) -> u64 {
    Tag::new(label).with(seed).with(a).with(trial).value()
}

/// Smallest multiple of the step at which `elect` fails at most `f/2` of
/// the time for every estimate. `elect(cal, ñ, n, seed)` reports success.
pub fn sweep_c0<F>(targets: &CalibrationTargets, base: &Calibration, elect: F) -> Result<f64>
where
    F: Fn(&Calibration, u64, usize, u64) -> Result<bool> + Sync,
{
    let pool = worker_pool()?;
    let allowed = (targets.f / 2.0 * targets.trials as f64).floor() as u64;
    let mut k = 1;
    loop {
        let c0 = targets.c0_step * f64::from(k);
        if c0 > targets.c0_max {
            return Err(Error::CalibrationDiverged(format!(
                "no c0 up to {} meets failure {} at f = {}",
                targets.c0_max,
                targets.f / 2.0,
                targets.f
            )));
        }
        let cal = Calibration { c0, ..base.clone() };
        let mut ok = true;
        for &nt in &targets.n_tildes {
            let n = (nt / 2 + 1) as usize;
            let fails: Vec<bool> = pool.install(|| {
                (0..targets.trials)
                    .into_par_iter()
                    .map(|t| elect(&cal, nt, n, seed_for("calibrate-c0", targets.seed, nt, t)).map(|s| !s))
                    .collect::<Result<_>>()
            })?;
            if fails.iter().filter(|&&x| x).count() as u64 > allowed {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(c0);
        }
        k += 1;
    }
}

fn basic_succeeds(cal: &Calibration, n_tilde: u64, n: usize, seed: u64, f: f64) -> Result<bool> {
    let o = basic_elect(n, n_tilde, f, cal, &Keying::Shared(seed), RunOptions::new(CdModel::NoCd))?;
    Ok(o.leaders[0].len() == 1)
}

/// Largest energy of a non-elected device and the failure count over
/// `trials` runs of the subroutine with `n` devices.
pub fn subroutine_profile(d: u64, n: usize, cal: &Calibration, trials: u64, seed: u64) -> Result<(u64, u64)> {
    let opts = RunOptions::new(CdModel::SenderCd);
    let per_trial: Vec<(u64, bool)> = worker_pool()?.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let o = sendercd_subroutine(d, n, cal, seed_for("calibrate-sub", seed, n as u64, t), opts)?;
                let worst = (0..n as u32)
                    .filter(|v| !o.leaders.contains(v))
                    .map(|v| o.energy[v as usize])
                    .max()
                    .unwrap_or(0);
                Ok((worst, o.leaders.len() != 1))
            })
            .collect::<Result<_>>()
    })?;
    Ok((
        per_trial.iter().map(|x| x.0).max().unwrap_or(0),
        per_trial.iter().filter(|x| x.1).count() as u64,
    ))
}

fn round_up(x: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (x * s).ceil() / s
}

/// Full calibration run. Structural parameters (`energy_cap`, `c_rep`,
/// `c_k`, `listen_ids`, `id_factor`) are taken from `base`.
pub fn calibrate(targets: &CalibrationTargets, base: &Calibration) -> Result<Calibration> {
    base.validate()?;
    let f = targets.f;
    let c0 = sweep_c0(targets, base, |cal, nt, n, s| basic_succeeds(cal, nt, n, s, f))?;
    let mut cal = Calibration {
        c0,
        seed: targets.seed,
        ..base.clone()
    };

    let loglog = (targets.energy_n as f64).log2().log2();
    let mut energy = 0.0;
    for t in 0..targets.energy_trials {
        let o = nocd_lasvegas(targets.energy_n, &cal, seed_for("calibrate-energy", targets.seed, 0, t))?;
        energy += o.max_energy() as f64;
    }
    cal.c_e = round_up(energy / targets.energy_trials as f64 / loglog, 1);

    let h = build_hitting_multiset(targets.hitting_n, targets.hitting_reps, targets.seed)?;
    let frac = verify_hitting_fraction(&h, VerifyMode::Exhaustive)?;
    cal.c_h = round_up(frac * f64::from(targets.hitting_n.trailing_zeros()), 3);

    let (worst, _) = subroutine_profile(targets.sub_d, 2, &cal, targets.sub_trials, targets.seed)?;
    cal.sub_energy = worst;

    let d = targets.sub_d as f64;
    let target = targets.guard_trials as f64 * d.powi(-3);
    let mut largest = 0;
    for n in 2..=GUARD_MAX_N {
        let (_, fails) = subroutine_profile(targets.sub_d, n, &cal, targets.guard_trials, targets.seed)?;
        if fails as f64 > target {
            break;
        }
        largest = n;
    }
    if largest == 0 {
        return Err(Error::CalibrationDiverged("the subroutine misses its failure target already at n = 2".into()));
    }
    cal.c_g = round_up(largest as f64 / d.log2().powi(2), 3);
    cal.validate()?;
    Ok(cal)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> CalibrationTargets {
        CalibrationTargets {
            n_tildes: vec![2, 8],
            trials: 200,
            c0_max: 8.0,
            ..CalibrationTargets::new(seed)
        }
    }

    #[test]
    fn never_electing_diverges() {
        let r = sweep_c0(&small(1), &Calibration::default(), |_, _, _, _| Ok(false));
        assert!(matches!(r, Err(Error::CalibrationDiverged(_))));
    }

    #[test]
    fn sweep_is_reproducible() {
        let t = small(4);
        let cal = Calibration::default();
        let run = || sweep_c0(&t, &cal, |c, nt, n, s| basic_succeeds(c, nt, n, s, t.f)).unwrap();
        assert_eq!(run(), run());
    }
}
