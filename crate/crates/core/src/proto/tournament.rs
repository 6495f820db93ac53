//! Binary tournaments over an ID space `[0, space)`.
//!
//! The tree splits `[lo, hi)` at `mid = lo + (hi - lo) / 2` until single IDs
//! remain, giving `space - 1` matches. Matches are scheduled in post-order, so
//! both children finish before their parent. In each match the survivor of the
//! lower half transmits. In [`MatchRule::Listen`] the upper survivor listens
//! and drops out if it hears a message. In [`MatchRule::Collide`] the upper
//! survivor transmits as well and stays in only if it hears its own echo.

use crate::channel::{Action, Feedback, Message};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchRule {
    Listen,
    Collide,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TourneyPlan {
    pub start: u64,
    pub space: u64,
    pub rule: MatchRule,
    /// Maximum number of actions a device takes; on reaching it the device
    /// drops out for good.
    pub cap: u32,
}

impl TourneyPlan {
    pub fn len(&self) -> u64 {
        self.space.saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Matches played by `id`, in round order, as `(round, is_lower)`.
    pub fn path(&self, id: u64) -> Vec<(u64, bool)> {
        debug_assert!(id < self.space);
        let (mut lo, mut hi, mut base) = (0u64, self.space, 0u64);
        let mut out = Vec::new();
        while hi - lo >= 2 {
            let mid = lo + (hi - lo) / 2;
            let round = self.start + base + (hi - lo) - 2;
            let lower = id < mid;
            out.push((round, lower));
            if lower {
                hi = mid;
            } else {
                base += mid - lo - 1;
                lo = mid;
            }
        }
        out.reverse();
        out
    }
}

/// One device's side of a tournament.
#[derive(Clone, Debug)]
pub struct TourneyDevice {
    path: Vec<(u64, bool)>,
    next: usize,
    alive: bool,
    spent: u32,
    cap: u32,
    rule: MatchRule,
    msg: Message,
}

impl TourneyDevice {
    pub fn new(plan: &TourneyPlan, id: u64, msg: Message) -> Self {
        TourneyDevice {
            path: plan.path(id),
            next: 0,
            alive: true,
            spent: 0,
            cap: plan.cap,
            rule: plan.rule,
            msg,
        }
    }

    pub fn next_round(&self) -> Option<u64> {
        if self.alive {
            self.path.get(self.next).map(|p| p.0)
        } else {
            None
        }
    }

    pub fn act(&mut self) -> Action {
        if self.spent >= self.cap {
            self.alive = false;
            return Action::Idle;
        }
        self.spent += 1;
        let lower = self.path[self.next].1;
        if lower || self.rule == MatchRule::Collide {
            Action::Transmit(self.msg)
        } else {
            Action::Listen
        }
    }

    pub fn observe(&mut self, feedback: Feedback) {
        let lower = self.path[self.next].1;
        self.next += 1;
        if lower {
            return;
        }
        let heard = feedback.message().is_some();
        self.alive = match self.rule {
            MatchRule::Listen => !heard,
            MatchRule::Collide => heard,
        };
    }

    pub fn finished(&self) -> bool {
        !self.alive || self.next == self.path.len()
    }

    /// Survived every match (meaningful once finished).
    pub fn won(&self) -> bool {
        self.alive && self.next == self.path.len()
    }
}

/// Channel behaviour as seen by the collective simulators.
#[derive(Clone, Copy, Debug)]
pub struct Medium {
    pub silent: bool,
    pub echo: bool,
}

impl Medium {
    pub fn new(model: crate::channel::CdModel, silent: bool) -> Self {
        let echo = matches!(
            model,
            crate::channel::CdModel::StrongCd | crate::channel::CdModel::SenderCd
        );
        Medium { silent, echo }
    }

    /// Does a listener receive a message when `transmitters` transmit?
    pub fn heard(&self, transmitters: usize) -> bool {
        !self.silent && transmitters == 1
    }

    /// Does a transmitter receive its own message back?
    pub fn echoed(&self, transmitters: usize) -> bool {
        self.echo && self.heard(transmitters)
    }
}

/// Play a tournament for all entrants at once. `entrants` holds `(id, device)`
/// pairs. Returns every device that survives all its matches; outside the
/// silent harness there is at most one.
pub fn play(plan: &TourneyPlan, entrants: &[(u64, u32)], medium: Medium, ledger: &mut [u64]) -> Vec<u32> {
    let mut sorted = entrants.to_vec();
    sorted.sort_unstable();
    rec(plan, 0, plan.space, &sorted, medium, ledger)
        .into_iter()
        .map(|(d, _)| d)
        .collect()
}

fn rec(
    plan: &TourneyPlan,
    lo: u64,
    hi: u64,
    ents: &[(u64, u32)],
    medium: Medium,
    ledger: &mut [u64],
) -> Vec<(u32, u32)> {
    if ents.is_empty() {
        return Vec::new();
    }
    if hi - lo == 1 {
        return ents.iter().map(|&(_, d)| (d, 0)).collect();
    }
    let mid = lo + (hi - lo) / 2;
    let split = ents.partition_point(|&(id, _)| id < mid);
    let lower = rec(plan, lo, mid, &ents[..split], medium, ledger);
    let upper = rec(plan, mid, hi, &ents[split..], medium, ledger);
    let step = |side: Vec<(u32, u32)>, ledger: &mut [u64]| -> Vec<(u32, u32)> {
        side.into_iter()
            .filter(|&(_, spent)| spent < plan.cap)
            .map(|(d, spent)| {
                ledger[d as usize] += 1;
                (d, spent + 1)
            })
            .collect()
    };
    let mut lower = step(lower, ledger);
    let upper = step(upper, ledger);
    let transmitters = lower.len()
        + if plan.rule == MatchRule::Collide {
            upper.len()
        } else {
            0
        };
    let upper_stays = match plan.rule {
        MatchRule::Listen => !medium.heard(transmitters),
        MatchRule::Collide => medium.echoed(transmitters),
    };
    if upper_stays {
        lower.extend(upper);
    }
    lower
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{run, CdModel, DeviceProgram, RunConfig, Status};

    struct Entrant(TourneyDevice);

    impl DeviceProgram for Entrant {
        fn status(&self) -> Status {
            Status::Undecided
        }
        fn next_wake(&mut self, _from: u64) -> Option<u64> {
            self.0.next_round()
        }
        fn act(&mut self, _round: u64) -> Action {
            self.0.act()
        }
        fn observe(&mut self, _round: u64, fb: Feedback) {
            self.0.observe(fb)
        }
    }

    fn plan(space: u64, rule: MatchRule, cap: u32) -> TourneyPlan {
        TourneyPlan { start: 0, space, rule, cap }
    }

    fn via_channel(p: &TourneyPlan, ids: &[u64], model: CdModel) -> (Vec<u32>, Vec<u64>) {
        let mut devs: Vec<Entrant> = ids
            .iter()
            .enumerate()
            .map(|(i, &id)| Entrant(TourneyDevice::new(p, id, Message::new(i as u32, 0, id))))
            .collect();
        let t = run(&mut devs, RunConfig::new(model)).unwrap();
        let winners = devs
            .iter()
            .enumerate()
            .filter(|(_, d)| d.0.won())
            .map(|(i, _)| i as u32)
            .collect();
        (winners, t.ledger.0)
    }

    #[test]
    fn post_order_rounds_cover_every_match_once() {
        for space in 1..40u64 {
            let p = plan(space, MatchRule::Listen, u32::MAX);
            let mut rounds: Vec<u64> = (0..space).flat_map(|id| p.path(id)).map(|x| x.0).collect();
            rounds.sort_unstable();
            rounds.dedup();
            assert_eq!(rounds, (0..p.len()).collect::<Vec<_>>());
            for id in 0..space {
                let path = p.path(id);
                assert!(path.windows(2).all(|w| w[0].0 < w[1].0));
            }
        }
    }

    #[test]
    fn two_entrants_in_eight_hand_check() {
        // IDs 3 and 7 (1-based) are 2 and 6 here.
        let p = plan(8, MatchRule::Listen, u32::MAX);
        let (w, ledger) = via_channel(&p, &[2, 6], CdModel::NoCd);
        assert_eq!(w, vec![0]);
        assert_eq!(ledger, vec![3, 3]);
    }

    #[test]
    fn full_space_elects_lowest_and_stays_within_two_per_id() {
        let p = plan(8, MatchRule::Listen, u32::MAX);
        let ids: Vec<u64> = (0..8).collect();
        let (w, ledger) = via_channel(&p, &ids, CdModel::NoCd);
        assert_eq!(w, vec![0]);
        assert!(ledger.iter().sum::<u64>() <= 16);
    }

    #[test]
    fn collective_play_matches_channel_exhaustively() {
        for rule in [MatchRule::Listen, MatchRule::Collide] {
            let model = match rule {
                MatchRule::Listen => CdModel::NoCd,
                MatchRule::Collide => CdModel::SenderCd,
            };
            for cap in [2u32, 3, u32::MAX] {
                let p = plan(9, rule, cap);
                for mask in 1u32..(1 << 9) {
                    let ids: Vec<u64> = (0..9).filter(|b| mask >> b & 1 == 1).collect();
                    let (w, ledger) = via_channel(&p, &ids, model);
                    let ents: Vec<(u64, u32)> =
                        ids.iter().enumerate().map(|(i, &id)| (id, i as u32)).collect();
                    let mut l2 = vec![0; ids.len()];
                    let w2 = play(&p, &ents, Medium::new(model, false), &mut l2);
                    assert_eq!(w, w2, "mask {mask:b}");
                    assert_eq!(ledger, l2, "mask {mask:b}");
                    assert!(w.len() <= 1);
                    if cap == u32::MAX {
                        assert_eq!(w, vec![0]);
                    }
                }
            }
        }
    }
}
