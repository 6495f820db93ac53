//! Round layouts shared by every device and by both executors.

use std::sync::{Arc, Mutex};

use crate::calibration::Calibration;
use crate::error::Result;
use crate::lasvegas::schedule::{nocd_schedule, sendercd_schedule};
use crate::lasvegas::subroutine::SubPlan;
use crate::proto::multi::MultiPlan;
use crate::proto::tournament::{MatchRule, TourneyPlan};
use crate::rng::Tag;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Algorithm {
    NoCd,
    SenderCd { eps: f64 },
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::NoCd => "nocd-lv",
            Algorithm::SenderCd { .. } => "sendercd-lv",
        }
    }
}

/// One iteration: pair instances, optional subroutine, then the election
/// among slot leaders and the announce round. Standalone protocols use the
/// first two stages only.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationPlan {
    /// 1-based for iterative algorithms, 0 for standalone protocols.
    pub index: u32,
    pub start: u64,
    pub log_deadline: u32,
    pub multi: MultiPlan,
    pub multi_start: u64,
    pub sub: Option<(SubPlan, u64)>,
    pub part2: Option<TourneyPlan>,
    pub announce: Option<u64>,
    pub end: u64,
}

impl IterationPlan {
    pub fn ctx(&self) -> u64 {
        u64::from(self.index)
    }

    /// Slot taken by the subroutine leader.
    pub fn sub_slot(&self) -> u64 {
        self.multi.instances.len() as u64
    }

    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn standalone(multi: MultiPlan, sub: Option<SubPlan>) -> Self {
        let sub_start = multi.len;
        let end = sub_start + sub.map_or(0, |s| s.len());
        IterationPlan {
            index: 0,
            start: 0,
            log_deadline: 0,
            multi,
            multi_start: 0,
            sub: sub.map(|s| (s, sub_start)),
            part2: None,
            announce: None,
            end,
        }
    }
}

fn family_seed(base: u64, iteration: u32) -> u64 {
    Tag::new("family").with(base).with(u64::from(iteration)).value()
}

pub fn build_iteration(
    algo: Algorithm,
    index: u32,
    start: u64,
    cal: &Calibration,
    family_base: u64,
) -> Result<IterationPlan> {
    let (spec, sub) = match algo {
        Algorithm::NoCd => (nocd_schedule(index)?, false),
        Algorithm::SenderCd { eps } => (sendercd_schedule(index, eps)?, true),
    };
    let multi = MultiPlan::from_pairs(&spec.pairs, cal)?;
    let mut at = start + multi.len;
    let sub = if sub {
        let plan = SubPlan::new(1u64 << spec.log_deadline, cal, family_seed(family_base, index))?;
        let s = at;
        at += plan.len();
        Some((plan, s))
    } else {
        None
    };
    let slots = multi.instances.len() as u64 + u64::from(sub.is_some());
    let part2 = TourneyPlan {
        start: at,
        space: slots.max(1),
        rule: match algo {
            Algorithm::NoCd => MatchRule::Listen,
            Algorithm::SenderCd { .. } => MatchRule::Collide,
        },
        cap: u32::MAX,
    };
    at += part2.len();
    Ok(IterationPlan {
        index,
        start,
        log_deadline: spec.log_deadline,
        multi,
        multi_start: start,
        sub,
        part2: Some(part2),
        announce: Some(at),
        end: at + 1,
    })
}

#[derive(Debug)]
enum Kind {
    Fixed(Vec<Arc<IterationPlan>>),
    Iterative {
        algo: Algorithm,
        cal: Calibration,
        family_base: u64,
        built: Mutex<Vec<Arc<IterationPlan>>>,
    },
}

/// The sequence of iterations a protocol runs through, built lazily.
#[derive(Debug)]
pub struct PlanBook {
    kind: Kind,
}

impl PlanBook {
    pub fn fixed(plans: Vec<IterationPlan>) -> Arc<Self> {
        Arc::new(PlanBook {
            kind: Kind::Fixed(plans.into_iter().map(Arc::new).collect()),
        })
    }

    pub fn iterative(algo: Algorithm, cal: Calibration, family_base: u64) -> Arc<Self> {
        Arc::new(PlanBook {
            kind: Kind::Iterative {
                algo,
                cal,
                family_base,
                built: Mutex::new(Vec::new()),
            },
        })
    }

    /// The `k`-th iteration (0-based position), or `None` past the end.
    pub fn get(&self, k: usize) -> Result<Option<Arc<IterationPlan>>> {
        match &self.kind {
            Kind::Fixed(v) => Ok(v.get(k).cloned()),
            Kind::Iterative {
                algo,
                cal,
                family_base,
                built,
            } => {
                let mut built = built.lock().expect("plan cache poisoned");
                while built.len() <= k {
                    let start = built.last().map_or(0, |p| p.end);
                    let p = build_iteration(*algo, built.len() as u32 + 1, start, cal, *family_base)?;
                    built.push(Arc::new(p));
                }
                Ok(Some(built[k].clone()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iterations_are_contiguous() {
        let book = PlanBook::iterative(Algorithm::NoCd, Calibration::default(), 1);
        let a = book.get(0).unwrap().unwrap();
        let b = book.get(1).unwrap().unwrap();
        assert_eq!(a.start, 0);
        assert_eq!(b.start, a.end);
        assert_eq!(a.announce, Some(a.end - 1));
        assert_eq!(a.part2.unwrap().space, 1);
        assert_eq!(b.part2.unwrap().space, 3);
    }
}
