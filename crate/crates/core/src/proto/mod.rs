//! Leader election with a network-size estimate.

pub mod assign;
pub mod balls;
pub mod basic;
pub mod multi;
pub mod tournament;

use crate::calibration::Calibration;
use crate::channel::CdModel;
use crate::engine::plan::{IterationPlan, PlanBook};
use crate::engine::{execute, RunOptions};
use crate::error::{invalid, Result};
use crate::rng::Keying;
use basic::BasicPlan;
use multi::{MultiPlan, PairSpec};
use tournament::{MatchRule, Medium, TourneyPlan};

#[derive(Clone, Debug, PartialEq)]
pub struct ElectionOutcome {
    /// Leaders of each instance, in instance order.
    pub leaders: Vec<Vec<u32>>,
    /// Fixed schedule length in rounds.
    pub time: u64,
    pub energy: Vec<u64>,
}

impl ElectionOutcome {
    pub fn max_energy(&self) -> u64 {
        self.energy.iter().copied().max().unwrap_or(0)
    }

    pub fn mean_energy(&self) -> f64 {
        self.energy.iter().sum::<u64>() as f64 / self.energy.len().max(1) as f64
    }
}

pub fn log2_exact(n_tilde: u64) -> Result<u32> {
    if n_tilde < 2 || !n_tilde.is_power_of_two() {
        return Err(invalid("size estimate must be a power of two, at least 2"));
    }
    Ok(n_tilde.trailing_zeros())
}

/// Runs a prepared multi-instance stage with `n` devices.
pub fn run_multi(plan: MultiPlan, n: usize, keys: &Keying, opts: RunOptions) -> Result<ElectionOutcome> {
    let time = plan.len;
    let book = PlanBook::fixed(vec![IterationPlan::standalone(plan, None)]);
    let (sim, _) = execute(&book, n, keys, opts)?;
    Ok(ElectionOutcome {
        leaders: sim.slot_winners.into_iter().next().unwrap_or_default(),
        time,
        energy: sim.ledger,
    })
}

/// Single election for estimate `n_tilde` with failure target `f`.
pub fn basic_elect(n: usize, n_tilde: u64, f: f64, cal: &Calibration, keys: &Keying, opts: RunOptions) -> Result<ElectionOutcome> {
    if !(f > 0.0 && f < 1.0) {
        return Err(invalid("f must lie in (0, 1)"));
    }
    let plan = BasicPlan::new(log2_exact(n_tilde)?, -f.log2(), cal)?;
    run_multi(MultiPlan::from_plans(vec![plan]), n, keys, opts)
}

pub fn multi_instance(n: usize, pairs: &[PairSpec], cal: &Calibration, seed: u64, opts: RunOptions) -> Result<ElectionOutcome> {
    if pairs.is_empty() {
        return Err(invalid("need at least one pair"));
    }
    run_multi(MultiPlan::from_pairs(pairs, cal)?, n, &Keying::Shared(seed), opts)
}

/// ID assignment alone for `n` participants over `[id_factor * n_prime]`.
/// Returns each device's ID (if any) and the energy ledger.
pub fn assign_ids(n: usize, n_prime: u64, cal: &Calibration, seed: u64) -> Result<(Vec<Option<u64>>, Vec<u64>)> {
    if n_prime < 2 {
        return Err(invalid("n' must be at least 2"));
    }
    let space = cal.id_factor * n_prime;
    let keys = Keying::Shared(seed);
    let mut tx = Vec::with_capacity(n);
    let mut ls = Vec::with_capacity(n);
    for d in 0..n as u32 {
        let mut s = keys.device(d).stream(basic::assign_tag(0, 0));
        let (t, l) = assign::draw_ids(&mut s, space, cal.listen_ids);
        tx.push(t);
        ls.push(l);
    }
    let devices: Vec<u32> = (0..n as u32).collect();
    let mut ledger = vec![0; n];
    let got = assign::play(
        space,
        &devices,
        &tx,
        &ls,
        Medium::new(CdModel::NoCd, false),
        &mut ledger,
        &mut assign::AssignScratch::default(),
    );
    let mut ids = vec![None; n];
    for (id, d) in got {
        ids[d as usize] = Some(id);
    }
    Ok((ids, ledger))
}

/// Capped No-CD tournament over `[space]`; device `k` holds `ids[k]`.
/// Returns the winner's position and the energy ledger.
pub fn dense_elect(ids: &[u64], space: u64, energy_cap: u32) -> Result<(Option<usize>, Vec<u64>)> {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != ids.len() || ids.iter().any(|&x| x >= space) {
        return Err(invalid("IDs must be distinct and inside the space"));
    }
    let plan = TourneyPlan {
        start: 0,
        space,
        rule: MatchRule::Listen,
        cap: energy_cap,
    };
    let entrants: Vec<(u64, u32)> = ids.iter().enumerate().map(|(k, &x)| (x, k as u32)).collect();
    let mut ledger = vec![0; ids.len()];
    let w = tournament::play(&plan, &entrants, Medium::new(CdModel::NoCd, false), &mut ledger);
    Ok((w.first().map(|&k| k as usize), ledger))
}
