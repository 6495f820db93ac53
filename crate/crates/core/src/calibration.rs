//! Tunable constants and their on-disk format.
//!
//! The file is line based, `key = value`, with `#` comments. Unknown keys are
//! rejected so that typos do not silently fall back to defaults.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    /// n' = max(2, ceil(c0 * log2(1/f))).
    pub c0: f64,
    /// Per-device action budget inside one dense election.
    pub energy_cap: u32,
    /// Block repetitions in the small-estimate branch: ceil(c_rep * log2(1/f) / ñ).
    pub c_rep: f64,
    /// Partition count multiplier of the Sender-CD subroutine.
    pub c_k: f64,
    /// Population guard of the Sender-CD subroutine: n <= c_g * log2(d)^2.
    pub c_g: f64,
    /// Energy constant: mean max energy <= c_e * log2(log2(n)) for the No-CD algorithm.
    pub c_e: f64,
    /// Hitting-multiset constant: max hit fraction <= c_h / log2(N).
    pub c_h: f64,
    /// Largest energy of a device the Sender-CD subroutine did not elect.
    pub sub_energy: u64,
    pub listen_ids: u32,
    pub id_factor: u64,
    /// Seed of the calibration run that produced these values.
    pub seed: u64,
}

/// Values of the shipped calibration file (`calibration/default.txt`).
impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            c0: 23.0,
            energy_cap: 32,
            c_rep: 14.0,
            c_k: 1.0,
            c_g: 3.223,
            c_e: 736.9,
            c_h: 2.428,
            sub_energy: 19,
            listen_ids: 30,
            id_factor: 100,
            seed: 1,
        }
    }
}

const KEYS: [&str; 11] = [
    "c0",
    "energy_cap",
    "c_rep",
    "c_k",
    "c_g",
    "c_e",
    "c_h",
    "sub_energy",
    "listen_ids",
    "id_factor",
    "seed",
];

impl Calibration {
    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(invalid("c0 must be positive"));
        }
        if self.energy_cap < 2 {
            return Err(invalid("energy_cap must be at least 2"));
        }
        if !(self.c_rep >= 1.0 && self.c_rep.is_finite()) {
            return Err(invalid("c_rep must be at least 1"));
        }
        for (name, v) in [("c_k", self.c_k), ("c_g", self.c_g), ("c_e", self.c_e), ("c_h", self.c_h)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        if self.listen_ids == 0 {
            return Err(invalid("listen_ids must be positive"));
        }
        if self.id_factor < 2 {
            return Err(invalid("id_factor must be at least 2"));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cal = Calibration::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: i + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let float = || value.parse::<f64>().map_err(|e| err(format!("{key}: {e}")));
            match key {
                "c0" => cal.c0 = float()?,
                "c_rep" => cal.c_rep = float()?,
                "c_k" => cal.c_k = float()?,
                "c_g" => cal.c_g = float()?,
                "c_e" => cal.c_e = float()?,
                "c_h" => cal.c_h = float()?,
                "energy_cap" => {
                    cal.energy_cap = value.parse().map_err(|e| err(format!("{key}: {e}")))?
                }
                "listen_ids" => {
                    cal.listen_ids = value.parse().map_err(|e| err(format!("{key}: {e}")))?
                }
                "id_factor" => {
                    cal.id_factor = value.parse().map_err(|e| err(format!("{key}: {e}")))?
                }
                "sub_energy" => {
                    cal.sub_energy = value.parse().map_err(|e| err(format!("{key}: {e}")))?
                }
                "seed" => cal.seed = value.parse().map_err(|e| err(format!("{key}: {e}")))?,
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        cal.validate()?;
        Ok(cal)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Canonical text: fixed key order, shortest round-trip float formatting.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let v = match key {
                "c0" => format!("{:?}", self.c0),
                "energy_cap" => self.energy_cap.to_string(),
                "c_rep" => format!("{:?}", self.c_rep),
                "c_k" => format!("{:?}", self.c_k),
                "c_g" => format!("{:?}", self.c_g),
                "c_e" => format!("{:?}", self.c_e),
                "c_h" => format!("{:?}", self.c_h),
                "listen_ids" => self.listen_ids.to_string(),
                "id_factor" => self.id_factor.to_string(),
                "sub_energy" => self.sub_energy.to_string(),
                "seed" => self.seed.to_string(),
                _ => unreachable!(),
            };
            let _ = writeln!(s, "{key} = {v}");
        }
        s
    }

    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.to_text().as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matches_the_shipped_file() {
        let shipped = include_str!("../../../calibration/default.txt");
        assert_eq!(Calibration::parse(shipped).unwrap(), Calibration::default());
        assert_eq!(Calibration::default().to_text(), shipped);
    }

    #[test]
    fn text_round_trip() {
        let mut cal = Calibration::default();
        cal.c0 = 13.5;
        cal.energy_cap = 40;
        let back = Calibration::parse(&cal.to_text()).unwrap();
        assert_eq!(back, cal);
        assert_eq!(back.hash(), cal.hash());
    }

    #[test]
    fn comments_and_partial_files() {
        let cal = Calibration::parse("# header\n\nc0 = 9 # inline\n").unwrap();
        assert_eq!(cal.c0, 9.0);
        assert_eq!(cal.energy_cap, Calibration::default().energy_cap);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(
            Calibration::parse("c00 = 1"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            Calibration::parse("energy_cap = 1"),
            Err(Error::InvalidParams(_))
        ));
    }
}
