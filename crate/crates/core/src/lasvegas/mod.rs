//! Las Vegas leader election for No-CD and Sender-CD channels.
//!
//! Iteration `i` runs one size-estimate election per pair of its schedule,
//! lets every slot leader grab the slot number as an ID, elects one of them
//! by tournament and announces the winner. Sender-CD iterations additionally
//! run the partition subroutine, whose leader takes the last slot.

pub mod partition;
pub mod schedule;
pub mod subroutine;

use crate::calibration::Calibration;
use crate::channel::CdModel;
use crate::engine::plan::{Algorithm, IterationPlan, PlanBook};
use crate::engine::{execute, RunOptions, SimResult};
use crate::error::{invalid, Result};
use crate::rng::Keying;
use subroutine::SubPlan;

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub leader: Option<u32>,
    pub time: u64,
    pub energy: Vec<u64>,
    pub iterations: u32,
}

impl Outcome {
    pub fn max_energy(&self) -> u64 {
        self.energy.iter().copied().max().unwrap_or(0)
    }

    pub fn mean_energy(&self) -> f64 {
        if self.energy.is_empty() {
            return 0.0;
        }
        self.energy.iter().sum::<u64>() as f64 / self.energy.len() as f64
    }

    fn from_sim(s: SimResult) -> Self {
        Outcome {
            leader: s.leader,
            time: s.time,
            energy: s.ledger,
            iterations: s.iterations,
        }
    }
}

/// Runs an iterative algorithm with `n` devices keyed by `seed`. The
/// partition family is derived from the same seed.
pub fn run_lasvegas(algo: Algorithm, n: usize, cal: &Calibration, seed: u64, opts: RunOptions) -> Result<Outcome> {
    if n < 2 {
        return Err(invalid("need at least two devices"));
    }
    cal.validate()?;
    let book = PlanBook::iterative(algo, cal.clone(), seed);
    let (sim, _) = execute(&book, n, &Keying::Shared(seed), opts)?;
    Ok(Outcome::from_sim(sim))
}

pub fn nocd_lasvegas(n: usize, cal: &Calibration, seed: u64) -> Result<Outcome> {
    run_lasvegas(Algorithm::NoCd, n, cal, seed, RunOptions::new(CdModel::NoCd))
}

pub fn sendercd_lasvegas(n: usize, epsilon: f64, cal: &Calibration, seed: u64) -> Result<Outcome> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid("epsilon must lie in (0, 1]"));
    }
    run_lasvegas(
        Algorithm::SenderCd { eps: epsilon },
        n,
        cal,
        seed,
        RunOptions::new(CdModel::SenderCd),
    )
}

/// Runs the partition subroutine alone with `n` devices.
pub fn sendercd_subroutine(d: u64, n: usize, cal: &Calibration, seed: u64, opts: RunOptions) -> Result<SubroutineOutcome> {
    let plan = SubPlan::new(d, cal, seed)?;
    let multi = crate::proto::multi::MultiPlan::from_plans(Vec::new());
    let book = PlanBook::fixed(vec![IterationPlan::standalone(multi, Some(plan))]);
    let (sim, _) = execute(&book, n, &Keying::Shared(seed), opts)?;
    Ok(SubroutineOutcome {
        leaders: sim.slot_winners[0][0].clone(),
        time: plan.len(),
        energy: sim.ledger,
        partitions: plan.family.k,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubroutineOutcome {
    pub leaders: Vec<u32>,
    pub time: u64,
    pub energy: Vec<u64>,
    pub partitions: u32,
}
