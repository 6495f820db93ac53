//! Monte Carlo check of the good-bins-with-one-ball bound.

use crate::error::{invalid, Result};
use crate::rng::{derive_stream, Stream, Tag};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallsParams {
    pub bins: u64,
    pub balls: u64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub t: f64,
}

impl BallsParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..1.0).contains(&x);
        if self.bins == 0 || self.balls == 0 {
            return Err(invalid("need at least one bin and one ball"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) || !unit(self.beta) || !unit(self.gamma) || !unit(self.t) {
            return Err(invalid("alpha in (0,1], beta, gamma, t in [0,1)"));
        }
        if self.alpha <= 2.0 * self.beta + self.gamma {
            return Err(invalid("need alpha > 2 beta + gamma"));
        }
        if self.t >= self.alpha - 2.0 * self.beta - self.gamma {
            return Err(invalid("need t < alpha - 2 beta - gamma"));
        }
        if (self.beta * self.bins as f64 - self.balls as f64).abs() > 1e-6 * self.bins as f64 {
            return Err(invalid("balls must equal beta * bins"));
        }
        Ok(())
    }

    /// Good bins holding exactly one ball needed for success.
    pub fn threshold(&self) -> u64 {
        let x = (self.alpha - 2.0 * self.beta - self.gamma - self.t) * self.balls as f64;
        (x - 1e-9).ceil().max(0.0) as u64
    }

    /// Bins each ball may not use.
    pub fn excluded(&self) -> u64 {
        (self.gamma * self.bins as f64).round() as u64
    }

    /// 1 - exp(-t^2 n / 2).
    pub fn bound(&self) -> f64 {
        1.0 - (-self.t * self.t * self.balls as f64 / 2.0).exp()
    }
}

/// One ball: uniform over all bins except `excluded` random ones.
fn throw(s: &mut Stream, bins: u64, excluded: u64, scratch: &mut Vec<u64>) -> u64 {
    scratch.clear();
    while (scratch.len() as u64) < excluded {
        let b = s.below(bins);
        if !scratch.contains(&b) {
            scratch.push(b);
        }
    }
    loop {
        let b = s.below(bins);
        if !scratch.contains(&b) {
            return b;
        }
    }
}

/// Fraction of trials in which at least `threshold()` good bins hold exactly
/// one ball.
pub fn balls_mc_check(p: &BallsParams, good: &[bool], trials: u64, seed: u64) -> Result<f64> {
    p.validate()?;
    if good.len() as u64 != p.bins {
        return Err(invalid("good-bin mask must cover every bin"));
    }
    let good_count = good.iter().filter(|&&g| g).count() as f64;
    if good_count < p.alpha * p.bins as f64 - 1e-9 {
        return Err(invalid("fewer than alpha * bins good bins"));
    }
    if p.excluded() >= p.bins {
        return Err(invalid("every bin excluded"));
    }
    let need = p.threshold();
    let mut load = vec![0u32; p.bins as usize];
    let mut landed = Vec::with_capacity(p.balls as usize);
    let mut scratch = Vec::new();
    let mut ok = 0u64;
    for trial in 0..trials {
        let mut s = derive_stream(seed, trial, Tag::new("balls"));
        landed.clear();
        for _ in 0..p.balls {
            let b = throw(&mut s, p.bins, p.excluded(), &mut scratch);
            load[b as usize] += 1;
            landed.push(b);
        }
        let singles = landed
            .iter()
            .filter(|&&b| load[b as usize] == 1 && good[b as usize])
            .count() as u64;
        if singles >= need {
            ok += 1;
        }
        for &b in &landed {
            load[b as usize] = 0;
        }
    }
    Ok(ok as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_ball_always_isolated() {
        let p = BallsParams {
            bins: 10,
            balls: 1,
            alpha: 1.0,
            beta: 0.1,
            gamma: 0.0,
            t: 0.0,
        };
        assert_eq!(balls_mc_check(&p, &[true; 10], 200, 1).unwrap(), 1.0);
    }

    #[test]
    fn rejects_infeasible_parameters() {
        let p = BallsParams {
            bins: 10,
            balls: 5,
            alpha: 1.0,
            beta: 0.5,
            gamma: 0.0,
            t: 0.0,
        };
        assert!(balls_mc_check(&p, &[true; 10], 1, 1).is_err());
    }
}
