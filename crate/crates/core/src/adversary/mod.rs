//! Lower-bound machinery for deterministic and silent executions.
//!
//! Given an action table, the adversary picks one common action per round
//! and keeps every ID whose non-idle actions all agree with it. No round can
//! then see a lone transmitter next to a listener inside the kept set, so the
//! algorithm cannot succeed on any subset of it.

pub mod hitting;
pub mod table;

use crate::channel::{run, CdModel, DeviceProgram, Horizon, RunConfig};
use crate::engine::plan::{Algorithm, PlanBook};
use crate::engine::{execute, RunOptions};
use crate::calibration::Calibration;
use crate::error::{invalid, Result};
use crate::rng::{Keying, Tag};
use table::{Act, ActionTable};

/// `k_j`: non-idle rounds of every ID.
pub fn energy_profile(table: &ActionTable) -> Vec<u32> {
    (0..table.n())
        .map(|j| table.row(j).iter().filter(|&&a| a != Act::Idle).count() as u32)
        .collect()
}

/// The `floor(N/2)` IDs of lowest energy, ties broken by ID.
pub fn lowest_energy_half(table: &ActionTable) -> Vec<usize> {
    let k = energy_profile(table);
    let mut ids: Vec<usize> = (0..table.n()).collect();
    ids.sort_by_key(|&j| (k[j], j));
    ids.truncate(table.n() / 2);
    ids.sort_unstable();
    ids
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingSequence {
    /// One of `Transmit` or `Listen` per round.
    pub b: Vec<Act>,
    /// Sorted IDs whose actions match `b`.
    pub matched: Vec<usize>,
}

/// True iff every non-idle action of `id` equals the sequence entry.
pub fn matches(table: &ActionTable, id: usize, b: &[Act]) -> bool {
    table.row(id).iter().zip(b).all(|(&a, &x)| a == Act::Idle || a == x)
}

/// Greedy choice of `b` by conditional expectation over `subset`.
///
/// With the remaining rounds uniform, ID `j` survives with probability
/// `2^-r_j` where `r_j` counts its non-idle rounds still ahead. Each round
/// takes the action that keeps the sum of these probabilities largest, so the
/// final count never drops below the starting sum `sum_j 2^-k_j`.
pub fn find_matching_sequence(table: &ActionTable, subset: &[usize]) -> MatchingSequence {
    let k = energy_profile(table);
    let mut remaining: Vec<u32> = subset.iter().map(|&j| k[j]).collect();
    let mut alive = vec![true; subset.len()];
    let mut b = Vec::with_capacity(table.t());
    for i in 0..table.t() {
        let mut score = [0.0f64; 2];
        for (s, choice) in [Act::Transmit, Act::Listen].into_iter().enumerate() {
            for (x, &j) in subset.iter().enumerate() {
                if !alive[x] {
                    continue;
                }
                match table.get(j, i) {
                    Act::Idle => score[s] += (-f64::from(remaining[x])).exp2(),
                    a if a == choice => score[s] += (-f64::from(remaining[x] - 1)).exp2(),
                    _ => {}
                }
            }
        }
        let choice = if score[0] >= score[1] { Act::Transmit } else { Act::Listen };
        for (x, &j) in subset.iter().enumerate() {
            match table.get(j, i) {
                Act::Idle => {}
                a if a == choice => remaining[x] -= 1,
                _ => alive[x] = false,
            }
        }
        b.push(choice);
    }
    let mut matched: Vec<usize> = subset
        .iter()
        .zip(&alive)
        .filter(|(_, &a)| a)
        .map(|(&j, _)| j)
        .collect();
    matched.sort_unstable();
    MatchingSequence { b, matched }
}

/// `sum_j 2^-k_j` over `subset`.
pub fn expected_matches(table: &ActionTable, subset: &[usize]) -> f64 {
    let k = energy_profile(table);
    subset.iter().map(|&j| (-f64::from(k[j])).exp2()).sum()
}

/// True iff no round among the first `t` has exactly one transmitter and at
/// least one listener inside `v`.
pub fn certify_no_success(table: &ActionTable, v: &[usize], t: usize) -> bool {
    (0..t.min(table.t())).all(|i| {
        let mut tx = 0;
        let mut rx = 0;
        for &j in v {
            match table.get(j, i) {
                Act::Transmit => tx += 1,
                Act::Listen => rx += 1,
                Act::Idle => {}
            }
        }
        !(tx == 1 && rx > 0)
    })
}

/// Mean per-device energy in the first `t` rounds with every listener
/// hearing silence. `make` builds the devices of one trial from its seed.
pub fn silent_trace_energy<P, F>(mut make: F, t: u64, trials: u64, seed: u64) -> Result<f64>
where
    P: DeviceProgram,
    F: FnMut(u64) -> Vec<P>,
{
    if t == 0 || trials == 0 {
        return Err(invalid("need t >= 1 and at least one trial"));
    }
    let mut total = 0.0;
    for k in 0..trials {
        let mut programs: Vec<Horizon<P>> = make(trial_seed(seed, k))
            .into_iter()
            .map(|inner| Horizon { inner, t })
            .collect();
        let trace = run(&mut programs, RunConfig::new(CdModel::NoCd).silent(true).watchdog(t))?;
        total += trace.ledger.mean();
    }
    Ok(total / trials as f64)
}

pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    Tag::new("silent-trial").with(seed).with(trial).value()
}

/// Round at which iteration `iterations` of `algo` ends.
pub fn iteration_end(algo: Algorithm, cal: &Calibration, iterations: u32) -> Result<u64> {
    if iterations == 0 {
        return Ok(0);
    }
    let book = PlanBook::iterative(algo, cal.clone(), 0);
    Ok(book.get(iterations as usize - 1)?.map_or(0, |p| p.end))
}

/// Silent-trace energy of an iterative algorithm over its first
/// `iterations` iterations, computed collectively. Devices do not interact
/// under silence, so `devices` only sets the sample size per trial.
pub fn lasvegas_silent_energy(
    algo: Algorithm,
    cal: &Calibration,
    iterations: u32,
    devices: usize,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    if iterations == 0 || trials == 0 || devices == 0 {
        return Err(invalid("need iterations, trials and devices >= 1"));
    }
    let model = match algo {
        Algorithm::NoCd => CdModel::NoCd,
        Algorithm::SenderCd { .. } => CdModel::SenderCd,
    };
    let mut total = 0.0;
    for k in 0..trials {
        let s = trial_seed(seed, k);
        let full = PlanBook::iterative(algo, cal.clone(), s);
        let plans = (0..iterations as usize)
            .map(|i| full.get(i).map(|p| (*p.expect("iterative books never end")).clone()))
            .collect::<Result<Vec<_>>>()?;
        let book = PlanBook::fixed(plans);
        let (sim, _) = execute(&book, devices, &Keying::Shared(s), RunOptions::new(model).silent(true).watchdog(u64::MAX))?;
        total += sim.ledger.iter().sum::<u64>() as f64 / devices as f64;
    }
    Ok(total / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Scripted;

    fn table(rows: &[&str]) -> ActionTable {
        ActionTable::parse(&format!("{} {}\n{}\n", rows.len(), rows[0].len(), rows.join("\n"))).unwrap()
    }

    #[test]
    fn profile_counts_non_idle_rounds() {
        assert_eq!(energy_profile(&ActionTable::idle(3, 5)), vec![0, 0, 0]);
        let t = table(&["TIII", "TTII", "TTTI", "TTTT"]);
        assert_eq!(energy_profile(&t), vec![1, 2, 3, 4]);
    }

    #[test]
    fn idle_table_matches_everything() {
        let t = ActionTable::idle(6, 4);
        let m = find_matching_sequence(&t, &[0, 1, 2]);
        assert_eq!(m.matched, vec![0, 1, 2]);
    }

    #[test]
    fn single_round_example() {
        let t = table(&["T", "T", "L", "I"]);
        let m = find_matching_sequence(&t, &[0, 1, 2, 3]);
        assert_eq!(m.b, vec![Act::Transmit]);
        assert_eq!(m.matched, vec![0, 1, 3]);
        assert!(m.matched.len() as f64 >= expected_matches(&t, &[0, 1, 2, 3]));
    }

    #[test]
    fn certificate_examples() {
        let t = table(&["IITI", "IILI"]);
        assert!(!certify_no_success(&t, &[0, 1], 4));
        assert!(certify_no_success(&t, &[0, 1], 2));
        assert!(certify_no_success(&t, &[0], 4));
        assert!(certify_no_success(&t, &[1], 4));
    }

    #[test]
    fn idle_programs_spend_nothing() {
        let e = silent_trace_energy(|_| vec![Scripted::new(vec![crate::channel::Action::Idle; 8]); 3], 8, 4, 1).unwrap();
        assert_eq!(e, 0.0);
    }
}
