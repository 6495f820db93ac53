//! Per-device state machine driven by the generic channel runner.

use std::sync::Arc;

use crate::channel::{Action, DeviceProgram, Feedback, Message, Status};
use crate::engine::plan::{IterationPlan, PlanBook};
use crate::error::Error;
use crate::lasvegas::subroutine::{draw_id, SubDevice};
use crate::proto::basic::InstanceDevice;
use crate::proto::multi::instance_ctx;
use crate::proto::tournament::TourneyDevice;
use crate::rng::DeviceRng;

pub const TAG_ANNOUNCE: u16 = 20;

#[derive(Clone, Debug)]
enum Stage {
    Begin,
    Instances {
        chosen: Vec<usize>,
        pos: usize,
        cur: Option<InstanceDevice>,
    },
    Sub(SubDevice),
    Part2(Option<TourneyDevice>),
    Announce { winner: bool, acted: bool },
    Finished,
}

#[derive(Clone, Debug)]
pub struct Device {
    book: Arc<PlanBook>,
    rng: DeviceRng,
    me: u32,
    /// Position of the current iteration in the book.
    it: usize,
    plan: Option<Arc<IterationPlan>>,
    stage: Stage,
    status: Status,
    grabbed: Option<u64>,
    /// `(iteration position, slot)` for every slot this device won.
    pub slots: Vec<(usize, u64)>,
    pub error: Option<Error>,
}

impl Device {
    pub fn new(book: Arc<PlanBook>, rng: DeviceRng, me: u32) -> Self {
        Device {
            book,
            rng,
            me,
            it: 0,
            plan: None,
            stage: Stage::Begin,
            status: Status::Undecided,
            grabbed: None,
            slots: Vec::new(),
            error: None,
        }
    }

    /// Position of the iteration the device is in (or finished in).
    pub fn iteration(&self) -> usize {
        self.it
    }

    fn win_slot(&mut self, slot: u64) {
        self.slots.push((self.it, slot));
        if self.grabbed.is_none() {
            self.grabbed = Some(slot);
        }
    }

    fn after_instances(&mut self, plan: &IterationPlan) {
        self.stage = match plan.sub {
            Some((sub, start)) => {
                let x = draw_id(&self.rng, plan.ctx(), &sub);
                Stage::Sub(SubDevice::new(sub, start, x, self.me))
            }
            None => self.part2(plan),
        };
    }

    fn part2(&mut self, plan: &IterationPlan) -> Stage {
        match (plan.part2, self.grabbed) {
            (Some(t), Some(id)) => Stage::Part2(Some(TourneyDevice::new(&t, id, Message::new(self.me, 0, id)))),
            (Some(_), None) => Stage::Part2(None),
            (None, _) => self.next_iteration(),
        }
    }

    fn next_iteration(&mut self) -> Stage {
        self.it += 1;
        self.plan = None;
        self.grabbed = None;
        Stage::Begin
    }
}

impl DeviceProgram for Device {
    fn status(&self) -> Status {
        self.status
    }

    fn next_wake(&mut self, _from: u64) -> Option<u64> {
        loop {
            let plan = self.plan.clone();
            match &mut self.stage {
                Stage::Begin => match self.book.get(self.it) {
                    Ok(Some(p)) => {
                        let chosen = p.multi.choose(&self.rng, p.ctx());
                        self.plan = Some(p);
                        self.stage = Stage::Instances {
                            chosen,
                            pos: 0,
                            cur: None,
                        };
                    }
                    Ok(None) => self.stage = Stage::Finished,
                    Err(e) => {
                        self.error = Some(e);
                        self.stage = Stage::Finished;
                    }
                },
                Stage::Instances { chosen, pos, cur } => {
                    let plan = plan.expect("plan");
                    if let Some(c) = cur {
                        if let Some(r) = c.next_round() {
                            return Some(r);
                        }
                        let k = chosen[*pos];
                        let won = c.is_leader();
                        *cur = None;
                        *pos += 1;
                        if won {
                            self.win_slot(k as u64);
                        }
                        continue;
                    }
                    if *pos < chosen.len() {
                        let k = chosen[*pos];
                        let inst = &plan.multi.instances[k];
                        *cur = Some(InstanceDevice::new(
                            inst.plan,
                            plan.multi_start + inst.offset,
                            instance_ctx(plan.ctx(), k),
                            self.rng,
                            self.me,
                        ));
                    } else {
                        self.after_instances(&plan);
                    }
                }
                Stage::Sub(s) => {
                    if let Some(r) = s.next_round() {
                        return Some(r);
                    }
                    let plan = plan.expect("plan");
                    if s.is_leader() {
                        self.win_slot(plan.sub_slot());
                    }
                    self.stage = self.part2(&plan);
                }
                Stage::Part2(t) => {
                    if let Some(r) = t.as_ref().and_then(|t| t.next_round()) {
                        return Some(r);
                    }
                    let winner = t.as_ref().is_some_and(|t| t.won());
                    self.stage = Stage::Announce { winner, acted: false };
                }
                Stage::Announce { acted: false, .. } => {
                    return plan.and_then(|p| p.announce);
                }
                Stage::Announce { acted: true, .. } => unreachable!("resolved in observe"),
                Stage::Finished => return None,
            }
        }
    }

    fn act(&mut self, _round: u64) -> Action {
        match &mut self.stage {
            Stage::Instances { cur: Some(c), .. } => c.act(),
            Stage::Sub(s) => s.act(),
            Stage::Part2(Some(t)) => t.act(),
            Stage::Announce { winner, acted } => {
                *acted = true;
                if *winner {
                    self.status = Status::Leader;
                    Action::Transmit(Message::new(self.me, TAG_ANNOUNCE, 0))
                } else {
                    Action::Listen
                }
            }
            _ => Action::Idle,
        }
    }

    fn observe(&mut self, _round: u64, feedback: Feedback) {
        match &mut self.stage {
            Stage::Instances { cur: Some(c), .. } => c.observe(feedback),
            Stage::Sub(s) => s.observe(feedback),
            Stage::Part2(Some(t)) => t.observe(feedback),
            Stage::Announce { winner, .. } => {
                if *winner {
                    self.stage = Stage::Finished;
                } else if feedback.message().is_some() {
                    self.status = Status::NonLeader;
                    self.stage = Stage::Finished;
                } else {
                    self.stage = self.next_iteration();
                }
            }
            _ => {}
        }
    }
}
