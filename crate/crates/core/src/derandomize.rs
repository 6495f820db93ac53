//! Deterministic No-CD election for an ID space `[N]` by exhaustive search.
//!
//! A seed map gives every ID its own random stream. With the stream fixed,
//! the size-estimate election becomes a deterministic algorithm, and it is
//! certified by running it on every subset whose size fits the estimate.
//! The failure target is chosen so that the union bound over all those
//! subsets stays below one, hence some seed map works for all of them.

use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::adversary::table::{Act, ActionTable};
use crate::calibration::Calibration;
use crate::channel::{run, CdModel, Horizon, RunConfig};
use crate::engine::device::Device;
use crate::engine::plan::{IterationPlan, PlanBook};
use crate::engine::{execute, Executor, RunOptions};
use crate::error::{invalid, Error, Result};
use crate::proto::basic::BasicPlan;
use crate::proto::log2_exact;
use crate::proto::multi::MultiPlan;
use crate::rng::{derive_stream, DeviceRng, Keying, Tag};

/// Largest number of subsets the verifier enumerates.
pub const MAX_SUBSETS: u64 = 1 << 22;

fn binomial(n: u64, k: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

fn check_sizes(n: u64, n_tilde: u64) -> Result<()> {
    log2_exact(n_tilde)?;
    if n_tilde > n {
        return Err(invalid("size estimate exceeds the ID space"));
    }
    Ok(())
}

/// `sum C(N, n)` over `ñ/2 < n <= ñ`.
pub fn subset_count(n: u64, n_tilde: u64) -> Result<BigUint> {
    check_sizes(n, n_tilde)?;
    Ok((n_tilde / 2 + 1..=n_tilde).map(|k| binomial(n, k)).sum())
}

/// `1 / (1 + sum C(N, n))`, exactly.
pub fn target_failure(n: u64, n_tilde: u64) -> Result<BigRational> {
    let c = subset_count(n, n_tilde)?;
    Ok(BigRational::new(1.into(), (c + BigUint::one()).into()))
}

/// Per-ID keys; ID `x` draws from the stream keyed by `keys[x]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedMap {
    pub keys: Vec<u64>,
}

impl SeedMap {
    /// Candidate map number `master`.
    pub fn candidate(n: u64, master: u64) -> Self {
        SeedMap {
            keys: (0..n).map(|x| derive_stream(master, x, Tag::new("seed-map")).next_u64()).collect(),
        }
    }

    pub fn n(&self) -> u64 {
        self.keys.len() as u64
    }

    pub fn rng(&self, id: u32) -> DeviceRng {
        DeviceRng::new(self.keys[id as usize], 0)
    }

    fn keying(&self, subset: &[u32]) -> Keying {
        Keying::PerDevice(subset.iter().map(|&x| self.keys[x as usize]).collect())
    }
}

/// The election every seed map drives.
pub fn election_plan(n: u64, n_tilde: u64, cal: &Calibration) -> Result<BasicPlan> {
    let f = target_failure(n, n_tilde)?;
    let inv = f.recip().to_integer();
    let log_inv_f = inv.to_f64().unwrap_or(f64::INFINITY).log2();
    BasicPlan::new(log2_exact(n_tilde)?, log_inv_f, cal)
}

fn election_book(plan: BasicPlan) -> Arc<PlanBook> {
    PlanBook::fixed(vec![IterationPlan::standalone(MultiPlan::from_plans(vec![plan]), None)])
}

/// All subsets of `[n]` with `lo <= size <= hi`, by size and then
/// lexicographically.
pub fn subsets(n: u32, lo: u32, hi: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for size in lo..=hi.min(n) {
        let mut cur: Vec<u32> = (0..size).collect();
        loop {
            out.push(cur.clone());
            let Some(i) = (0..size as usize).rev().find(|&i| cur[i] < n - size + i as u32) else {
                break;
            };
            cur[i] += 1;
            for k in i + 1..size as usize {
                cur[k] = cur[k - 1] + 1;
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    /// First subset (in enumeration order) without exactly one leader.
    pub counterexample: Option<Vec<u32>>,
    pub subsets: u64,
    /// Round count of the election.
    pub time: u64,
    /// Largest per-device energy over all subsets checked.
    pub max_energy: u64,
}

impl Verdict {
    pub fn certified(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Check `elect` on every subset of `[N]` with `ñ/2 < |V| <= ñ`. `elect`
/// returns the number of leaders and the largest energy spent.
pub fn verify_with<F>(n: u64, n_tilde: u64, time: u64, elect: F) -> Result<Verdict>
where
    F: Fn(&[u32]) -> Result<(usize, u64)> + Sync,
{
    let count = subset_count(n, n_tilde)?;
    if count > BigUint::from(MAX_SUBSETS) {
        return Err(Error::EnumerationTooLarge(format!("{count} subsets of [{n}]")));
    }
    let all = subsets(n as u32, n_tilde as u32 / 2 + 1, n_tilde as u32);
    let results: Vec<(usize, u64)> = all.par_iter().map(|v| elect(v)).collect::<Result<_>>()?;
    let counterexample = results.iter().position(|r| r.0 != 1).map(|i| all[i].clone());
    Ok(Verdict {
        counterexample,
        subsets: all.len() as u64,
        time,
        max_energy: results.iter().map(|r| r.1).max().unwrap_or(0),
    })
}

pub fn verify_all_subsets(phi: &SeedMap, n_tilde: u64, cal: &Calibration) -> Result<Verdict> {
    let plan = election_plan(phi.n(), n_tilde, cal)?;
    let book = election_book(plan);
    let opts = RunOptions::new(CdModel::NoCd).executor(Executor::Population);
    verify_with(phi.n(), n_tilde, plan.len(), |v| {
        let (sim, _) = execute(&book, v.len(), &phi.keying(v), opts)?;
        Ok((sim.slot_winners[0][0].len(), sim.ledger.iter().copied().max().unwrap_or(0)))
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub n: u64,
    pub n_tilde: u64,
    pub f: BigRational,
    pub master_seed: u64,
    pub calibration_hash: String,
    pub tries: u64,
    pub phi: SeedMap,
    pub verdict: Verdict,
}

/// Try candidate maps `seed, seed + 1, ...` until one is certified.
pub fn search_seed(n: u64, n_tilde: u64, cal: &Calibration, max_tries: u64, seed: u64) -> Result<Certificate> {
    check_sizes(n, n_tilde)?;
    for k in 0..max_tries {
        let master = seed.wrapping_add(k);
        let phi = SeedMap::candidate(n, master);
        let verdict = verify_all_subsets(&phi, n_tilde, cal)?;
        if verdict.certified() {
            return Ok(Certificate {
                n,
                n_tilde,
                f: target_failure(n, n_tilde)?,
                master_seed: master,
                calibration_hash: cal.hash(),
                tries: k + 1,
                phi,
                verdict,
            });
        }
    }
    Err(Error::Exhausted(max_tries))
}

impl Certificate {
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "N = {}", self.n)?;
        writeln!(w, "ntilde = {}", self.n_tilde)?;
        writeln!(w, "f = {}", self.f)?;
        writeln!(w, "master_seed = {}", self.master_seed)?;
        writeln!(w, "calibration = {}", self.calibration_hash)?;
        writeln!(w, "subsets = {}", self.verdict.subsets)?;
        writeln!(w, "time = {}", self.verdict.time)?;
        writeln!(w, "max_energy = {}", self.verdict.max_energy)?;
        for (x, k) in self.phi.keys.iter().enumerate() {
            writeln!(w, "{x} {k:016x}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut v = Vec::new();
        self.write(&mut v).expect("writing to memory");
        String::from_utf8(v).expect("ascii")
    }
}

/// Reads the per-ID keys back from a certificate.
pub fn read_certificate_keys(text: &str) -> Result<SeedMap> {
    let mut keys = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.contains('=') || line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: i + 1, msg };
        let (id, key) = line.trim().split_once(' ').ok_or_else(|| err("expected `id key`".into()))?;
        let id: usize = id.parse().map_err(|e| err(format!("id: {e}")))?;
        if id != keys.len() {
            return Err(err(format!("expected id {}", keys.len())));
        }
        keys.push(u64::from_str_radix(key, 16).map_err(|e| err(format!("key: {e}")))?);
    }
    Ok(SeedMap { keys })
}

/// Actions of every ID, run alone with silent feedback, for the first `t`
/// rounds of the election.
pub fn export_action_table(phi: &SeedMap, n_tilde: u64, cal: &Calibration, t: u64) -> Result<ActionTable> {
    let plan = election_plan(phi.n(), n_tilde, cal)?;
    if t > plan.len() {
        return Err(invalid(format!("t = {t} exceeds the election length {}", plan.len())));
    }
    let book = election_book(plan);
    let mut table = ActionTable::idle(phi.keys.len(), t as usize);
    if t == 0 {
        return Ok(table);
    }
    for x in 0..phi.keys.len() as u32 {
        let mut p = [Horizon {
            inner: Device::new(book.clone(), phi.rng(x), x),
            t,
        }];
        let trace = run(&mut p, RunConfig::new(CdModel::NoCd).silent(true).record(true).watchdog(t))?;
        for r in &trace.rounds {
            for &(_, a, _) in &r.entries {
                table.set(x as usize, r.round as usize, Act::from_action(&a));
            }
        }
    }
    Ok(table)
}

/// Exact reconstruction check: `1/f - 1` equals the subset count.
pub fn failure_matches_count(f: &BigRational, n: u64, n_tilde: u64) -> Result<bool> {
    if f.is_zero() {
        return Ok(false);
    }
    let back = f.recip() - BigRational::one();
    Ok(back.is_integer() && back.to_integer() == subset_count(n, n_tilde)?.into())
}

/// Short description of a verdict for logs.
pub fn describe(v: &Verdict) -> String {
    let mut s = String::new();
    match &v.counterexample {
        None => {
            let _ = write!(s, "certified on {} subsets", v.subsets);
        }
        Some(c) => {
            let _ = write!(s, "fails on {c:?}");
        }
    }
    let _ = write!(s, ", time {}, max energy {}", v.time, v.max_energy);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(a: u64, b: u64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn target_failure_examples() {
        assert_eq!(target_failure(4, 2).unwrap(), frac(1, 7));
        assert_eq!(target_failure(8, 4).unwrap(), frac(1, 127));
        assert_eq!(target_failure(8, 2).unwrap(), frac(1, 29));
        assert!(target_failure(4, 8).is_err());
        assert!(target_failure(8, 3).is_err());
        let f = target_failure(200, 64).unwrap();
        assert!(failure_matches_count(&f, 200, 64).unwrap());
    }

    #[test]
    fn subsets_are_enumerated_in_order() {
        let s = subsets(4, 2, 2);
        assert_eq!(s, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(subsets(8, 3, 4).len(), 56 + 70);
    }

    #[test]
    fn never_electing_gives_the_first_subset() {
        let v = verify_with(4, 2, 0, |_| Ok((0, 0))).unwrap();
        assert_eq!(v.counterexample, Some(vec![0, 1]));
    }

    #[test]
    fn too_many_subsets_are_refused() {
        let r = verify_with(64, 32, 0, |_| Ok((1, 0)));
        assert!(matches!(r, Err(Error::EnumerationTooLarge(_))));
    }

    #[test]
    fn certificate_keys_round_trip() {
        let cal = Calibration::default();
        let c = search_seed(4, 2, &cal, 50, 3).unwrap();
        let text = c.to_text();
        assert!(text.starts_with("N = 4\nntilde = 2\nf = 1/7\n"));
        assert_eq!(read_certificate_keys(&text).unwrap(), c.phi);
    }
}
