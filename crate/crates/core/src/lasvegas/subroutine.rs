//! Sender-CD election through a family of partitions.
//!
//! Each device draws an ID in `[d^4]`. For every partition of the family the
//! devices spend `b = d` scan rounds: a device transmits in the round of its
//! part and learns from the echo whether it was alone there. Lone devices use
//! their part as a fresh ID in a collision tournament over `[b]`, and a final
//! stop round lets the winner silence everyone. Each partition takes `2b`
//! rounds.

use crate::calibration::Calibration;
use crate::channel::{Action, Feedback, Message};
use crate::error::{invalid, Result};
use crate::lasvegas::partition::{build_partition_family, PartitionFamily};
use crate::proto::tournament::{self, MatchRule, Medium, TourneyDevice, TourneyPlan};
use crate::rng::{DeviceRng, Keying, Tag};

pub const TAG_SCAN: u16 = 10;
pub const TAG_SUB_STOP: u16 = 11;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubPlan {
    pub d: u64,
    pub family: PartitionFamily,
}

/// `d^4`, or 0 (meaning 2^128) when it does not fit.
pub fn id_space(d: u64) -> u128 {
    u128::from(d).checked_pow(4).unwrap_or(0)
}

impl SubPlan {
    pub fn new(d: u64, cal: &Calibration, family_seed: u64) -> Result<Self> {
        if d < 2 {
            return Err(invalid("subroutine needs d >= 2"));
        }
        let family = build_partition_family(id_space(d), d, 0.5, cal.c_k, family_seed)?;
        Ok(SubPlan { d, family })
    }

    pub fn b(&self) -> u64 {
        self.family.b
    }

    pub fn partition_len(&self) -> u64 {
        2 * self.b()
    }

    pub fn len(&self) -> u64 {
        u64::from(self.family.k) * self.partition_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tourney(&self, start: u64, i: u32) -> TourneyPlan {
        TourneyPlan {
            start: start + u64::from(i) * self.partition_len() + self.b(),
            space: self.b(),
            rule: MatchRule::Collide,
            cap: u32::MAX,
        }
    }

    pub fn stop_round(&self, start: u64, i: u32) -> u64 {
        start + (u64::from(i) + 1) * self.partition_len() - 1
    }
}

pub fn id_tag(ctx: u64) -> Tag {
    Tag::new("subroutine-id").with(ctx)
}

pub fn draw_id(rng: &DeviceRng, ctx: u64, plan: &SubPlan) -> u128 {
    rng.stream(id_tag(ctx)).below_u128(plan.family.n)
}

#[derive(Clone, Debug)]
enum Phase {
    Scan { acted: bool },
    Tourney(TourneyDevice),
    Stop { leader: bool, acted: bool },
    Done,
}

#[derive(Clone, Debug)]
pub struct SubDevice {
    plan: SubPlan,
    start: u64,
    x: u128,
    i: u32,
    phase: Phase,
    leader: bool,
    me: u32,
}

impl SubDevice {
    pub fn new(plan: SubPlan, start: u64, x: u128, me: u32) -> Self {
        SubDevice {
            plan,
            start,
            x,
            i: 0,
            phase: if plan.family.k == 0 {
                Phase::Done
            } else {
                Phase::Scan { acted: false }
            },
            leader: false,
            me,
        }
    }

    fn part(&self) -> u64 {
        self.plan.family.part(self.i, self.x)
    }

    pub fn next_round(&mut self) -> Option<u64> {
        loop {
            match &self.phase {
                Phase::Scan { acted: false } => {
                    return Some(self.start + u64::from(self.i) * self.plan.partition_len() + self.part())
                }
                Phase::Tourney(t) => {
                    if let Some(r) = t.next_round() {
                        return Some(r);
                    }
                    self.phase = Phase::Stop {
                        leader: t.won(),
                        acted: false,
                    };
                }
                Phase::Stop { acted: false, .. } => return Some(self.plan.stop_round(self.start, self.i)),
                Phase::Scan { acted: true } | Phase::Stop { acted: true, .. } => {
                    unreachable!("resolved in observe")
                }
                Phase::Done => return None,
            }
        }
    }

    pub fn act(&mut self) -> Action {
        let me = self.me;
        let part = self.part();
        match &mut self.phase {
            Phase::Scan { acted } => {
                *acted = true;
                Action::Transmit(Message::new(me, TAG_SCAN, part))
            }
            Phase::Tourney(t) => t.act(),
            Phase::Stop { leader, acted } => {
                *acted = true;
                if *leader {
                    Action::Transmit(Message::new(me, TAG_SUB_STOP, part))
                } else {
                    Action::Listen
                }
            }
            Phase::Done => Action::Idle,
        }
    }

    pub fn observe(&mut self, feedback: Feedback) {
        let heard = feedback.message().is_some();
        match &mut self.phase {
            Phase::Scan { .. } => {
                self.phase = if heard {
                    let plan = self.plan.tourney(self.start, self.i);
                    let part = self.part();
                    Phase::Tourney(TourneyDevice::new(&plan, part, Message::new(self.me, 0, part)))
                } else {
                    Phase::Stop {
                        leader: false,
                        acted: false,
                    }
                };
            }
            Phase::Tourney(t) => t.observe(feedback),
            Phase::Stop { leader, .. } => {
                if *leader {
                    self.leader = true;
                    self.phase = Phase::Done;
                } else if heard {
                    self.phase = Phase::Done;
                } else {
                    self.i += 1;
                    self.phase = if self.i == self.plan.family.k {
                        Phase::Done
                    } else {
                        Phase::Scan { acted: false }
                    };
                }
            }
            Phase::Done => {}
        }
    }

    pub fn is_leader(&self) -> bool {
        self.leader
    }
}

/// Collective run over `devices`; returns every device that ends as leader.
pub fn play_subroutine(
    plan: &SubPlan,
    ctx: u64,
    devices: &[u32],
    keys: &Keying,
    medium: Medium,
    ledger: &mut [u64],
) -> Vec<u32> {
    let ids: Vec<(u32, u128)> = devices
        .iter()
        .map(|&d| (d, draw_id(&keys.device(d), ctx, plan)))
        .collect();
    let mut active = ids;
    let mut leaders = Vec::new();
    let mut slots: Vec<(u64, u32)> = Vec::with_capacity(active.len());
    for i in 0..plan.family.k {
        if active.is_empty() {
            break;
        }
        slots.clear();
        slots.extend(active.iter().map(|&(d, x)| (plan.family.part(i, x), d)));
        slots.sort_unstable();
        for &(_, d) in &slots {
            ledger[d as usize] += 1;
        }
        let mut entrants = Vec::new();
        let mut k = 0;
        while k < slots.len() {
            let mut e = k + 1;
            while e < slots.len() && slots[e].0 == slots[k].0 {
                e += 1;
            }
            if medium.echoed(e - k) {
                entrants.push(slots[k]);
            }
            k = e;
        }
        let winners = tournament::play(&plan.tourney(0, i), &entrants, medium, ledger);
        for &(d, _) in &active {
            ledger[d as usize] += 1;
        }
        leaders.extend_from_slice(&winners);
        if medium.heard(winners.len()) {
            break;
        }
        active.retain(|(d, _)| !winners.contains(d));
    }
    leaders
}

/// Collision tournament over `[b]` for distinct `ids`; the device index of a
/// participant is its position in `ids`.
pub fn sendercd_unique_elect(ids: &[u64], b: u64) -> Result<(Option<usize>, Vec<u64>)> {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != ids.len() || ids.iter().any(|&x| x >= b) {
        return Err(invalid("IDs must be distinct and below b"));
    }
    let plan = TourneyPlan {
        start: 0,
        space: b,
        rule: MatchRule::Collide,
        cap: u32::MAX,
    };
    let entrants: Vec<(u64, u32)> = ids.iter().enumerate().map(|(k, &x)| (x, k as u32)).collect();
    let mut ledger = vec![0; ids.len()];
    let medium = Medium::new(crate::channel::CdModel::SenderCd, false);
    let winners = tournament::play(&plan, &entrants, medium, &mut ledger);
    Ok((winners.first().map(|&w| w as usize), ledger))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unique_elect_examples() {
        let (w, e) = sendercd_unique_elect(&[5], 8).unwrap();
        assert_eq!((w, e), (Some(0), vec![3]));
        let (w, _) = sendercd_unique_elect(&[2, 6], 8).unwrap();
        assert_eq!(w, Some(0));
        for mask in 1u32..256 {
            let ids: Vec<u64> = (0..8).filter(|b| mask >> b & 1 == 1).collect();
            let (w, _) = sendercd_unique_elect(&ids, 8).unwrap();
            assert_eq!(w, Some(0));
        }
    }
}
