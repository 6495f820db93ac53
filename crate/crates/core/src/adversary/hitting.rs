//! Random multisets of large subsets that no single set hits often.
//!
//! `F` hits `H` when `|F ∩ H| = 1`. For every size `2^j` between `sqrt(N)`
//! and `N` the multiset holds `reps` uniform subsets of that size; any fixed
//! `F` then hits only a small fraction of them.

use crate::error::{invalid, Error, Result};
use crate::rng::{derive_stream, Tag};

/// Largest `N` the exhaustive verifier accepts.
pub const EXHAUSTIVE_MAX_N: u32 = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HittingMultiset {
    pub n: u32,
    pub reps: u32,
    /// Bitsets over `[N]`, 64 IDs per word.
    sets: Vec<Vec<u64>>,
}

fn words(n: u32) -> usize {
    (n as usize).div_ceil(64)
}

impl HittingMultiset {
    pub fn from_sets(n: u32, sets: &[Vec<u32>]) -> Result<Self> {
        let mut out = Vec::with_capacity(sets.len());
        for s in sets {
            let mut w = vec![0u64; words(n)];
            for &x in s {
                if x >= n {
                    return Err(invalid(format!("element {x} outside [{n}]")));
                }
                w[x as usize / 64] |= 1 << (x % 64);
            }
            out.push(w);
        }
        Ok(HittingMultiset { n, reps: 1, sets: out })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn members(&self, k: usize) -> Vec<u32> {
        (0..self.n)
            .filter(|&x| self.sets[k][x as usize / 64] >> (x % 64) & 1 == 1)
            .collect()
    }

    pub fn sizes(&self) -> Vec<u32> {
        self.sets
            .iter()
            .map(|w| w.iter().map(|x| x.count_ones()).sum())
            .collect()
    }

    /// Fraction of the multiset hit by the bitset `f`.
    pub fn hit_fraction(&self, f: &[u64]) -> f64 {
        let hits = self
            .sets
            .iter()
            .filter(|h| h.iter().zip(f).map(|(a, b)| (a & b).count_ones()).sum::<u32>() == 1)
            .count();
        hits as f64 / self.sets.len().max(1) as f64
    }
}

pub fn build_hitting_multiset(n: u32, reps: u32, seed: u64) -> Result<HittingMultiset> {
    if n < 4 || !n.is_power_of_two() {
        return Err(invalid("N must be a power of two, at least 4"));
    }
    if reps == 0 {
        return Err(invalid("reps must be positive"));
    }
    let log_n = n.trailing_zeros();
    let mut sets = Vec::with_capacity(((log_n - log_n.div_ceil(2) + 1) * reps) as usize);
    let mut perm: Vec<u32> = (0..n).collect();
    for j in log_n.div_ceil(2)..=log_n {
        let size = 1usize << j;
        for r in 0..reps {
            let mut s = derive_stream(seed, u64::from(j), Tag::new("hitting").with(u64::from(r)));
            for i in 0..size {
                let k = i + s.below((n as usize - i) as u64) as usize;
                perm.swap(i, k);
            }
            let mut w = vec![0u64; words(n)];
            for &x in &perm[..size] {
                w[x as usize / 64] |= 1 << (x % 64);
            }
            sets.push(w);
        }
    }
    Ok(HittingMultiset { n, reps, sets })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    /// Every `F` in `2^[N]`.
    Exhaustive,
    /// `samples` uniform random `F`.
    Sampled { samples: u64, seed: u64 },
}

/// Largest fraction of the multiset hit by a single `F`.
pub fn verify_hitting_fraction(h: &HittingMultiset, mode: VerifyMode) -> Result<f64> {
    match mode {
        VerifyMode::Exhaustive => {
            if h.n > EXHAUSTIVE_MAX_N {
                return Err(Error::EnumerationTooLarge(format!(
                    "2^{} subsets; the exhaustive scan stops at N = {EXHAUSTIVE_MAX_N}",
                    h.n
                )));
            }
            let masks: Vec<u32> = h.sets.iter().map(|w| w[0] as u32).collect();
            let best = (0u32..1 << h.n)
                .map(|f| masks.iter().filter(|&&m| (m & f).count_ones() == 1).count())
                .max()
                .unwrap_or(0);
            Ok(best as f64 / masks.len().max(1) as f64)
        }
        VerifyMode::Sampled { samples, seed } => {
            let mut s = derive_stream(seed, 0, Tag::new("hitting-sample"));
            let mut best = 0.0f64;
            let mut f = vec![0u64; words(h.n)];
            for _ in 0..samples {
                for (i, w) in f.iter_mut().enumerate() {
                    let bits = (h.n as usize - 64 * i).min(64);
                    *w = s.next_u64() & if bits == 64 { u64::MAX } else { (1 << bits) - 1 };
                }
                best = best.max(h.hit_fraction(&f));
            }
            Ok(best)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_follow_the_power_classes() {
        let h = build_hitting_multiset(4, 8, 1).unwrap();
        let mut sizes = h.sizes();
        sizes.dedup();
        assert_eq!(sizes, vec![2, 4]);
        let h = build_hitting_multiset(16, 256, 1).unwrap();
        assert_eq!(h.len(), 3 * 256);
        assert!(h.sizes().iter().all(|&s| (4..=16).contains(&s)));
        let h = build_hitting_multiset(8, 2, 1).unwrap();
        assert_eq!(h.sizes(), vec![4, 4, 8, 8]);
        assert!(build_hitting_multiset(12, 2, 1).is_err());
    }

    #[test]
    fn degenerate_and_empty() {
        let h = HittingMultiset::from_sets(4, &[vec![0, 1, 2, 3]]).unwrap();
        assert_eq!(verify_hitting_fraction(&h, VerifyMode::Exhaustive).unwrap(), 1.0);
        assert_eq!(h.hit_fraction(&[0]), 0.0);
    }

    #[test]
    fn exhaustive_agrees_with_bitset_path() {
        let h = build_hitting_multiset(8, 16, 5).unwrap();
        let direct = (0u64..256).map(|f| h.hit_fraction(&[f])).fold(0.0, f64::max);
        assert_eq!(verify_hitting_fraction(&h, VerifyMode::Exhaustive).unwrap(), direct);
        let sampled = verify_hitting_fraction(&h, VerifyMode::Sampled { samples: 2000, seed: 1 }).unwrap();
        assert!(sampled <= direct);
    }

    #[test]
    fn exhaustive_refuses_large_n() {
        let h = build_hitting_multiset(32, 1, 1).unwrap();
        assert!(matches!(
            verify_hitting_fraction(&h, VerifyMode::Exhaustive),
            Err(Error::EnumerationTooLarge(_))
        ));
    }
}
