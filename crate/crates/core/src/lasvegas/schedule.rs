//! Deadlines and per-iteration pair lists.

use crate::error::{invalid, Result};
use crate::proto::multi::PairSpec;

/// Largest deadline exponent whose pair list we are willing to materialize.
pub const MAX_LOG_DEADLINE: u32 = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IterationSpec {
    pub index: u32,
    /// d_i = 2^log_deadline.
    pub log_deadline: u32,
    pub pairs: Vec<PairSpec>,
}

/// d_i = 2^i with pairs (2^j, 2) for j = 1 .. d_i - 1.
pub fn nocd_schedule(i: u32) -> Result<IterationSpec> {
    if i == 0 {
        return Err(invalid("iterations are numbered from 1"));
    }
    if i > MAX_LOG_DEADLINE {
        return Err(invalid(format!("iteration {i} is too large to build")));
    }
    let d = 1u64 << i;
    Ok(IterationSpec {
        index: i,
        log_deadline: i,
        pairs: (1..d).map(|j| PairSpec::new(j as u32, 2)).collect(),
    })
}

/// Exponent e_i with d_i = 2^e_i = 2^ceil((1 + eps)^i); e_0 = 0.
pub fn sender_log_deadline(i: u32, eps: f64) -> u32 {
    if i == 0 {
        return 0;
    }
    let x = (1.0 + eps).powi(i as i32);
    (x - 1e-9).ceil().min(u32::MAX as f64) as u32
}

/// m*_{i,j} = 2 ceil(log2 d_i - log2 j), clamped at zero.
pub fn m_star(log_deadline: u32, j: u64) -> u64 {
    let floor_log = 63 - u64::from(j.leading_zeros());
    // ceil(e - log2 j) = e - floor(log2 j) for every j >= 1.
    2 * u64::from(log_deadline).saturating_sub(floor_log)
}

/// ceil(2^(j/2)), saturating.
pub fn half_power_ceil(j: u64) -> u64 {
    if j >= 126 {
        return u64::MAX;
    }
    let x = 1u128 << j;
    let r = x.isqrt();
    let r = if r * r < x { r + 1 } else { r };
    u64::try_from(r).unwrap_or(u64::MAX)
}

/// m_{i,j} = min(ceil(2^(j/2)), m*_{i,j}); zero for i = 0.
pub fn m_value(log_deadline: u32, j: u64) -> u64 {
    if log_deadline == 0 {
        return 0;
    }
    half_power_ceil(j).min(m_star(log_deadline, j))
}

/// Pairs (2^j, c_{i,j}) with c_{i,j} = m_{i,j} - m_{i-1,j} > 0.
pub fn sendercd_schedule(i: u32, eps: f64) -> Result<IterationSpec> {
    if i == 0 {
        return Err(invalid("iterations are numbered from 1"));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid("epsilon must lie in (0, 1]"));
    }
    let e = sender_log_deadline(i, eps);
    let prev = sender_log_deadline(i - 1, eps);
    if e > MAX_LOG_DEADLINE {
        return Err(invalid(format!("iteration {i} is too large to build")));
    }
    let mut pairs = Vec::new();
    for j in 1..(1u64 << e) {
        let c = m_value(e, j) - m_value(prev, j).min(m_value(e, j));
        debug_assert!(m_value(prev, j) <= m_value(e, j));
        if c > 0 {
            pairs.push(PairSpec::new(j as u32, c));
        }
    }
    Ok(IterationSpec {
        index: i,
        log_deadline: e,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn as_tuples(s: &IterationSpec) -> Vec<(u64, u64)> {
        s.pairs.iter().map(|p| (1u64 << p.log_n_tilde, p.c)).collect()
    }

    #[test]
    fn nocd_examples() {
        let s = nocd_schedule(1).unwrap();
        assert_eq!((s.log_deadline, as_tuples(&s)), (1, vec![(2, 2)]));
        let s = nocd_schedule(2).unwrap();
        assert_eq!(as_tuples(&s), vec![(2, 2), (4, 2), (8, 2)]);
    }

    #[test]
    fn sender_first_two_iterations() {
        let s = sendercd_schedule(1, 1.0).unwrap();
        assert_eq!(s.log_deadline, 2);
        assert_eq!(as_tuples(&s), vec![(2, 2), (4, 2), (8, 2)]);
        let s = sendercd_schedule(2, 1.0).unwrap();
        assert_eq!(s.log_deadline, 4);
        let t = as_tuples(&s);
        assert!(!t.iter().any(|p| p.0 == 2));
        assert!(t.contains(&(16, 4)));
        assert_eq!(&t[..5], &[(8, 1), (16, 4), (32, 4), (64, 4), (128, 4)]);
        assert!(t[5..].iter().all(|&(_, c)| c == 2));
        assert_eq!(t.last().unwrap().0, 1 << 15);
    }

    #[test]
    fn half_powers() {
        assert_eq!(half_power_ceil(1), 2);
        assert_eq!(half_power_ceil(2), 2);
        assert_eq!(half_power_ceil(3), 3);
        assert_eq!(half_power_ceil(5), 6);
        assert_eq!(half_power_ceil(8), 16);
    }
}
