//! Several size-estimate elections run back to back.
//!
//! Instances are packed into groups whose participation probabilities sum to
//! at most one. A device draws once per group and joins at most one instance
//! of that group, which bounds its energy by the number of groups.

use crate::calibration::Calibration;
use crate::error::{invalid, Result};
use crate::proto::basic::BasicPlan;
use crate::rng::{DeviceRng, Tag};

/// A size estimate ñ = 2^log_n_tilde with target failure 2^-c.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PairSpec {
    pub log_n_tilde: u32,
    pub c: u64,
}

impl PairSpec {
    pub fn new(log_n_tilde: u32, c: u64) -> Self {
        PairSpec { log_n_tilde, c }
    }
}

const MASS_SLACK: f64 = 1e-9;

/// Pack probabilities into groups of mass at most one.
///
/// Items are taken in index order and appended to the open group while it
/// stays within mass one; otherwise the open group is closed and a new one
/// starts. Items above one half form a group on their own. Every closed group
/// therefore carries mass at least one half and only the final open group
/// may fall below it.
pub fn pack_groups(p: &[f64]) -> Result<Vec<Vec<usize>>> {
    if let Some(bad) = p.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
        return Err(invalid(format!("probability {bad} outside (0, 1]")));
    }
    Ok(pack(p))
}

pub(crate) fn pack(p: &[f64]) -> Vec<Vec<usize>> {
    let mut groups = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    let mut mass = 0.0;
    for (i, &x) in p.iter().enumerate() {
        if x > 0.5 {
            groups.push(vec![i]);
        } else if mass + x > 1.0 + MASS_SLACK {
            groups.push(std::mem::replace(&mut open, vec![i]));
            mass = x;
        } else {
            open.push(i);
            mass += x;
        }
    }
    if !open.is_empty() {
        groups.push(open);
    }
    groups
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub pair: Option<PairSpec>,
    pub plan: BasicPlan,
    /// Offset from the start of the multi-instance stage.
    pub offset: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiPlan {
    pub instances: Vec<Instance>,
    pub groups: Vec<Vec<usize>>,
    pub len: u64,
}

impl MultiPlan {
    pub fn from_pairs(pairs: &[PairSpec], cal: &Calibration) -> Result<Self> {
        let plans = pairs
            .iter()
            .map(|p| {
                if p.c == 0 {
                    return Err(invalid("failure exponent must be at least 1"));
                }
                BasicPlan::new(p.log_n_tilde, p.c as f64, cal)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut m = Self::from_plans(plans);
        for (inst, p) in m.instances.iter_mut().zip(pairs) {
            inst.pair = Some(*p);
        }
        Ok(m)
    }

    pub fn from_plans(plans: Vec<BasicPlan>) -> Self {
        let probs: Vec<f64> = plans.iter().map(|p| p.participation.min(1.0)).collect();
        let groups = pack(&probs);
        let mut offset = 0;
        let instances = plans
            .into_iter()
            .map(|plan| {
                let inst = Instance {
                    pair: None,
                    plan,
                    offset,
                };
                offset += plan.len();
                inst
            })
            .collect();
        MultiPlan {
            instances,
            groups,
            len: offset,
        }
    }

    /// Instances device `rng` joins, in increasing order.
    pub fn choose(&self, rng: &DeviceRng, ctx: u64) -> Vec<usize> {
        let mut out = Vec::new();
        for (g, members) in self.groups.iter().enumerate() {
            let u = rng.stream(group_tag(ctx, g as u64)).unit();
            let mut acc = 0.0;
            for &i in members {
                acc += self.instances[i].plan.participation.min(1.0);
                if u < acc {
                    out.push(i);
                    break;
                }
            }
        }
        out.sort_unstable();
        out
    }
}

pub fn group_tag(ctx: u64, group: u64) -> Tag {
    Tag::new("group").with(ctx).with(group)
}

/// Context value identifying instance `k` of stage `ctx`.
pub fn instance_ctx(ctx: u64, k: usize) -> u64 {
    (ctx << 32) | k as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packing_examples() {
        assert_eq!(pack_groups(&[1.0]).unwrap(), vec![vec![0]]);
        let g = pack_groups(&[0.05; 100]).unwrap();
        assert_eq!(g.len(), 5);
        assert!(g.iter().all(|x| x.len() == 20));
        // Next-fit keeps 0.9 together before starting a new group.
        assert_eq!(
            pack_groups(&[0.3, 0.3, 0.3, 0.2]).unwrap(),
            vec![vec![0, 1, 2], vec![3]]
        );
        assert!(pack_groups(&[0.0]).is_err());
        assert!(pack_groups(&[1.5]).is_err());
    }

    #[test]
    fn large_items_do_not_close_a_light_group() {
        let g = pack_groups(&[0.2, 0.9, 0.2]).unwrap();
        assert_eq!(g, vec![vec![1], vec![0, 2]]);
    }
}
