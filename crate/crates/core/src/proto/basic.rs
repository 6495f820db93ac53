//! Leader election with a size estimate and a target failure probability.
//!
//! A block is an ID assignment over `[N']` followed by a capped tournament over
//! the same space. With `n' <= ñ` each device joins with probability
//! `0.9 n'/ñ` and one block runs. Otherwise every device joins, `n' = ñ`, and
//! the block repeats; between repetitions one stop round lets a freshly
//! elected leader silence everyone else.

use crate::calibration::Calibration;
use crate::channel::{Action, Feedback, Message};
use crate::error::{invalid, Result};
use crate::proto::assign::{self, AssignDevice, AssignScratch};
use crate::proto::tournament::{self, MatchRule, Medium, TourneyDevice, TourneyPlan};
use crate::rng::{DeviceRng, Keying, Tag};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasicPlan {
    /// ñ = 2^log_n_tilde.
    pub log_n_tilde: u32,
    /// log2(1/f).
    pub log_inv_f: f64,
    pub n_prime: u64,
    /// N' = id_factor * n'.
    pub id_space: u64,
    /// Probability that a device takes part.
    pub participation: f64,
    pub repeated: bool,
    pub blocks: u64,
    pub listen_ids: u32,
    pub energy_cap: u32,
}

pub const TAG_STOP: u16 = 3;

impl BasicPlan {
    pub fn new(log_n_tilde: u32, log_inv_f: f64, cal: &Calibration) -> Result<Self> {
        if log_n_tilde == 0 {
            return Err(invalid("size estimate must be at least 2"));
        }
        if !(log_inv_f > 0.0 && log_inv_f.is_finite()) {
            return Err(invalid("target failure must lie in (0, 1)"));
        }
        let n_prime = ((cal.c0 * log_inv_f).ceil() as u64).max(2);
        let n_tilde = (log_n_tilde < 64).then(|| 1u64 << log_n_tilde);
        let repeated = matches!(n_tilde, Some(t) if n_prime > t);
        let (n_prime, participation, blocks) = match n_tilde {
            Some(t) if repeated => {
                let c = (cal.c_rep * log_inv_f / t as f64).ceil().max(1.0) as u64;
                (t, 1.0, c)
            }
            _ => (
                n_prime,
                0.9 * n_prime as f64 * (-(log_n_tilde as f64)).exp2(),
                1,
            ),
        };
        Ok(BasicPlan {
            log_n_tilde,
            log_inv_f,
            n_prime,
            id_space: cal.id_factor * n_prime,
            participation,
            repeated,
            blocks,
            listen_ids: cal.listen_ids,
            energy_cap: cal.energy_cap,
        })
    }

    pub fn block_len(&self) -> u64 {
        3 * self.id_space - 1
    }

    /// Offset of block `b` from the start of the instance.
    pub fn block_start(&self, b: u64) -> u64 {
        b * (self.block_len() + 1)
    }

    pub fn stop_round(&self, b: u64) -> Option<u64> {
        (self.repeated && b + 1 < self.blocks).then(|| self.block_start(b) + self.block_len())
    }

    pub fn len(&self) -> u64 {
        self.blocks * self.block_len() + self.blocks.saturating_sub(1) * u64::from(self.repeated)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest energy any single device can spend in the instance.
    pub fn energy_bound(&self) -> u64 {
        let depth = u64::from(64 - (self.id_space - 1).leading_zeros());
        let block = 2 + 2 * u64::from(self.listen_ids) + depth.min(u64::from(self.energy_cap));
        self.blocks * block + self.blocks.saturating_sub(1) * u64::from(self.repeated)
    }

    pub fn tourney(&self, instance_start: u64, b: u64) -> TourneyPlan {
        TourneyPlan {
            start: instance_start + self.block_start(b) + 2 * self.id_space,
            space: self.id_space,
            rule: MatchRule::Listen,
            cap: self.energy_cap,
        }
    }
}

pub fn assign_tag(ctx: u64, block: u64) -> Tag {
    Tag::new("assign").with(ctx).with(block)
}

#[derive(Clone, Debug)]
enum Phase {
    Assign(AssignDevice),
    Tourney(TourneyDevice),
    Stop { leader: bool, acted: bool },
    Done,
}

/// A participant's run of one instance.
#[derive(Clone, Debug)]
pub struct InstanceDevice {
    plan: BasicPlan,
    start: u64,
    ctx: u64,
    rng: DeviceRng,
    me: u32,
    block: u64,
    phase: Phase,
    leader: bool,
}

impl InstanceDevice {
    pub fn new(plan: BasicPlan, start: u64, ctx: u64, rng: DeviceRng, me: u32) -> Self {
        let mut dev = InstanceDevice {
            plan,
            start,
            ctx,
            rng,
            me,
            block: 0,
            phase: Phase::Done,
            leader: false,
        };
        dev.begin_block();
        dev
    }

    fn begin_block(&mut self) {
        let mut s = self.rng.stream(assign_tag(self.ctx, self.block));
        let (t, ls) = assign::draw_ids(&mut s, self.plan.id_space, self.plan.listen_ids);
        let at = self.start + self.plan.block_start(self.block);
        self.phase = Phase::Assign(AssignDevice::new(at, t, ls, self.me));
    }

    fn end_block(&mut self, leader: bool) {
        if self.plan.stop_round(self.block).is_some() {
            self.phase = Phase::Stop { leader, acted: false };
        } else {
            self.leader = leader;
            self.phase = Phase::Done;
        }
    }

    pub fn next_round(&mut self) -> Option<u64> {
        loop {
            match &mut self.phase {
                Phase::Assign(a) => {
                    if let Some(r) = a.next_round() {
                        return Some(r);
                    }
                    match a.assigned() {
                        Some(id) => {
                            let plan = self.plan.tourney(self.start, self.block);
                            let msg = Message::new(self.me, 0, id);
                            self.phase = Phase::Tourney(TourneyDevice::new(&plan, id, msg));
                        }
                        None => self.end_block(false),
                    }
                }
                Phase::Tourney(t) => {
                    if let Some(r) = t.next_round() {
                        return Some(r);
                    }
                    let won = t.won();
                    self.end_block(won);
                }
                Phase::Stop { acted: false, .. } => {
                    return Some(self.start + self.plan.stop_round(self.block).expect("stop round"));
                }
                Phase::Stop { .. } => unreachable!("stop phase resolved in observe"),
                Phase::Done => return None,
            }
        }
    }

    pub fn act(&mut self) -> Action {
        match &mut self.phase {
            Phase::Assign(a) => a.act(),
            Phase::Tourney(t) => t.act(),
            Phase::Stop { leader, acted } => {
                *acted = true;
                if *leader {
                    Action::Transmit(Message::new(self.me, TAG_STOP, 0))
                } else {
                    Action::Listen
                }
            }
            Phase::Done => Action::Idle,
        }
    }

    pub fn observe(&mut self, feedback: Feedback) {
        match &mut self.phase {
            Phase::Assign(a) => a.observe(feedback),
            Phase::Tourney(t) => t.observe(feedback),
            Phase::Stop { leader, .. } => {
                if *leader {
                    self.leader = true;
                    self.phase = Phase::Done;
                } else if feedback.message().is_some() {
                    self.phase = Phase::Done;
                } else {
                    self.block += 1;
                    self.begin_block();
                }
            }
            Phase::Done => {}
        }
    }

    pub fn is_leader(&self) -> bool {
        self.leader
    }
}

/// Reusable buffers for [`play_instance`].
#[derive(Default)]
pub struct Scratch {
    pub assign: AssignScratch,
    tx: Vec<u64>,
    listening: Vec<Vec<u64>>,
    seen: Vec<u32>,
    mark: u32,
}

impl Scratch {
    fn next_mark(&mut self, space: usize) -> u32 {
        if self.seen.len() != space || self.mark == u32::MAX {
            self.seen.clear();
            self.seen.resize(space, 0);
            self.mark = 0;
        }
        self.mark += 1;
        self.mark
    }
}

/// Run one instance for `participants` collectively, charging the ledger.
/// Returns every device that ends as this instance's leader.
pub fn play_instance(
    plan: &BasicPlan,
    ctx: u64,
    participants: &[u32],
    keys: &Keying,
    medium: Medium,
    ledger: &mut [u64],
    scratch: &mut Scratch,
) -> Vec<u32> {
    let mut active: Vec<u32> = participants.to_vec();
    let mut leaders = Vec::new();
    for b in 0..plan.blocks {
        if active.is_empty() {
            break;
        }
        scratch.tx.clear();
        scratch.listening.resize_with(active.len(), Vec::new);
        let tag = assign_tag(ctx, b);
        for (k, &d) in active.iter().enumerate() {
            let mut s = keys.device(d).stream(tag);
            let t = s.below(plan.id_space);
            scratch.tx.push(t);
            let mark = scratch.next_mark(plan.id_space as usize);
            assign::draw_listening_marked(
                &mut s,
                plan.id_space,
                t,
                plan.listen_ids,
                &mut scratch.seen,
                mark,
                &mut scratch.listening[k],
            );
        }
        let assigned = assign::play(
            plan.id_space,
            &active,
            &scratch.tx,
            &scratch.listening[..active.len()],
            medium,
            ledger,
            &mut scratch.assign,
        );
        let winners = tournament::play(&plan.tourney(0, b), &assigned, medium, ledger);
        leaders.extend_from_slice(&winners);
        if plan.stop_round(b).is_none() {
            break;
        }
        for &d in &active {
            ledger[d as usize] += 1;
        }
        if medium.heard(winners.len()) {
            break;
        }
        active.retain(|d| !winners.contains(d));
    }
    leaders
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_branches() {
        let cal = Calibration { c0: 14.0, ..Calibration::default() };
        let p = BasicPlan::new(10, 2.0, &cal).unwrap();
        assert!(!p.repeated);
        assert_eq!(p.n_prime, 28);
        assert_eq!(p.blocks, 1);
        assert!((p.participation - 0.9 * 28.0 / 1024.0).abs() < 1e-15);
        let q = BasicPlan::new(1, 2.0, &cal).unwrap();
        assert!(q.repeated);
        assert_eq!(q.n_prime, 2);
        assert_eq!(q.id_space, 200);
        assert_eq!(q.blocks, 14);
        assert_eq!(q.len(), 14 * 599 + 13);
    }
}
