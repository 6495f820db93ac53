//! Pseudorandom partition families of an ID space.
//!
//! Partition `i` sends ID `x` to a part in `[b]` chosen by hashing
//! `(seed, i, x)`, so the family is shared knowledge without being stored.
//! [`PartitionFamily::table`] materializes it for small spaces.

use crate::error::{invalid, Error, Result};
use crate::rng::{derive_stream, Tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartitionFamily {
    /// ID space size; 0 stands for 2^128.
    pub n: u128,
    pub b: u64,
    pub k: u32,
    pub seed: u64,
}

fn log2_space(n: u128) -> f64 {
    if n == 0 {
        128.0
    } else {
        (n as f64).log2()
    }
}

/// K = ceil(c_k / eps_tilde * log_b N).
pub fn partition_count(n: u128, b: u64, eps_tilde: f64, c_k: f64) -> u32 {
    let x = c_k / eps_tilde * log2_space(n) / (b as f64).log2();
    (x - 1e-9).ceil().max(1.0) as u32
}

pub fn build_partition_family(n: u128, b: u64, eps_tilde: f64, c_k: f64, seed: u64) -> Result<PartitionFamily> {
    if b < 2 {
        return Err(invalid("need at least two parts"));
    }
    if n != 0 && n < u128::from(b) {
        return Err(invalid("ID space smaller than the number of parts"));
    }
    if !(eps_tilde > 0.0 && eps_tilde <= 1.0) {
        return Err(invalid("eps_tilde must lie in (0, 1]"));
    }
    Ok(PartitionFamily {
        n,
        b,
        k: partition_count(n, b, eps_tilde, c_k),
        seed,
    })
}

impl PartitionFamily {
    pub fn part(&self, i: u32, x: u128) -> u64 {
        let tag = Tag::new("partition").with(x as u64).with((x >> 64) as u64);
        derive_stream(self.seed, u64::from(i), tag).below(self.b)
    }

    /// K x N table of parts.
    pub fn table(&self) -> Result<Vec<Vec<u64>>> {
        if self.n == 0 || self.n > 1 << 24 {
            return Err(Error::EnumerationTooLarge("partition table".into()));
        }
        Ok((0..self.k)
            .map(|i| (0..self.n).map(|x| self.part(i, x)).collect())
            .collect())
    }

    /// Fraction of nonempty subsets of size at most `max_size` that some
    /// part of some partition isolates (exactly one member inside).
    pub fn hitting_fraction(&self, max_size: usize) -> Result<f64> {
        let table = self.table()?;
        let n = self.n as usize;
        if n > 64 {
            return Err(Error::EnumerationTooLarge("subset enumeration above 64 IDs".into()));
        }
        let mut total = 0u64;
        let mut hit = 0u64;
        let mut subset = Vec::new();
        let mut counts = vec![0u32; self.b as usize];
        for size in 1..=max_size.min(n) {
            let mut ok = |v: &[usize]| {
                total += 1;
                let isolated = table.iter().any(|row| {
                    counts.iter_mut().for_each(|c| *c = 0);
                    for &x in v {
                        counts[row[x] as usize] += 1;
                    }
                    counts.iter().any(|&c| c == 1)
                });
                if isolated {
                    hit += 1;
                }
            };
            for_each_subset(n, size, &mut subset, 0, &mut ok);
        }
        Ok(hit as f64 / total as f64)
    }
}

fn for_each_subset(n: usize, size: usize, cur: &mut Vec<usize>, from: usize, f: &mut impl FnMut(&[usize])) {
    if cur.len() == size {
        f(cur);
        return;
    }
    for x in from..n {
        if n - x < size - cur.len() {
            break;
        }
        cur.push(x);
        for_each_subset(n, size, cur, x + 1, f);
        cur.pop();
    }
}
