//! Collective executor.
//!
//! Plays whole stages for all devices at once instead of stepping rounds. It
//! draws from the same tagged streams as [`crate::engine::device::Device`] and
//! applies the same channel rules, so outcomes, times and energy ledgers agree
//! with the round-by-round runner exactly; it is only much faster.

use std::sync::Arc;

use crate::channel::CdModel;
use crate::engine::plan::PlanBook;
use crate::error::{Error, Result};
use crate::lasvegas::subroutine::play_subroutine;
use crate::proto::basic::{play_instance, Scratch};
use crate::proto::multi::{group_tag, instance_ctx};
use crate::proto::tournament::{self, Medium};
use crate::rng::Keying;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimResult {
    /// Device that announced itself, if the run terminated.
    pub leader: Option<u32>,
    /// Termination round (1-based) or, without termination, the length of
    /// the schedule that was played.
    pub time: u64,
    pub iterations: u32,
    pub ledger: Vec<u64>,
    /// Per played iteration: winners of every slot (instances, then the
    /// subroutine slot if any).
    pub slot_winners: Vec<Vec<Vec<u32>>>,
}

pub fn simulate(
    book: &Arc<PlanBook>,
    n: usize,
    keys: &Keying,
    model: CdModel,
    silent: bool,
    watchdog: u64,
) -> Result<SimResult> {
    let medium = Medium::new(model, silent);
    let mut ledger = vec![0u64; n];
    let mut scratch = Scratch::default();
    let mut slot_winners = Vec::new();
    let mut played_until = 0;
    let mut chosen: Vec<Vec<u32>> = Vec::new();
    for k in 0.. {
        let Some(plan) = book.get(k)? else { break };
        if let Some(a) = plan.announce {
            if a >= watchdog {
                return Err(Error::WatchdogExceeded { rounds: watchdog });
            }
        }
        let ctx = plan.ctx();
        let instances = &plan.multi.instances;
        chosen.iter_mut().for_each(Vec::clear);
        chosen.resize_with(instances.len(), Vec::new);
        for (g, members) in plan.multi.groups.iter().enumerate() {
            let tag = group_tag(ctx, g as u64);
            for d in 0..n as u32 {
                let u = keys.device(d).stream(tag).unit();
                let mut acc = 0.0;
                for &i in members {
                    acc += instances[i].plan.participation.min(1.0);
                    if u < acc {
                        chosen[i].push(d);
                        break;
                    }
                }
            }
        }
        let mut grabbed: Vec<Option<u64>> = vec![None; n];
        let mut winners_here = Vec::with_capacity(instances.len() + 1);
        for (i, inst) in instances.iter().enumerate() {
            let w = if chosen[i].is_empty() {
                Vec::new()
            } else {
                play_instance(
                    &inst.plan,
                    instance_ctx(ctx, i),
                    &chosen[i],
                    keys,
                    medium,
                    &mut ledger,
                    &mut scratch,
                )
            };
            for &d in &w {
                grabbed[d as usize].get_or_insert(i as u64);
            }
            winners_here.push(w);
        }
        if let Some((sub, _)) = &plan.sub {
            let all: Vec<u32> = (0..n as u32).collect();
            let w = play_subroutine(sub, ctx, &all, keys, medium, &mut ledger);
            for &d in &w {
                grabbed[d as usize].get_or_insert(plan.sub_slot());
            }
            winners_here.push(w);
        }
        slot_winners.push(winners_here);
        played_until = plan.end;
        let (Some(part2), Some(announce)) = (plan.part2, plan.announce) else {
            continue;
        };
        let entrants: Vec<(u64, u32)> = grabbed
            .iter()
            .enumerate()
            .filter_map(|(d, g)| g.map(|id| (id, d as u32)))
            .collect();
        let winners = tournament::play(&part2, &entrants, medium, &mut ledger);
        for e in ledger.iter_mut() {
            *e += 1;
        }
        assert!(winners.len() <= 1, "two devices claimed leadership");
        if let Some(&w) = winners.first() {
            return Ok(SimResult {
                leader: Some(w),
                time: announce + 1,
                iterations: plan.index,
                ledger,
                slot_winners,
            });
        }
    }
    Ok(SimResult {
        leader: None,
        time: played_until,
        iterations: slot_winners.len() as u32,
        ledger,
        slot_winners,
    })
}
