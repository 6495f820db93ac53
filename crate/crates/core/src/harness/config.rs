//! Experiment configuration, stored as `key = value` lines.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::calibration::hex;
use crate::channel::{CdModel, DEFAULT_WATCHDOG};
use crate::engine::plan::Algorithm;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub algo: Algorithm,
    pub n: Vec<u64>,
    pub trials: u64,
    pub master_seed: u64,
    pub model: CdModel,
    pub watchdog: u64,
    pub calibration: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

pub fn parse_algo(name: &str, epsilon: Option<f64>) -> Result<Algorithm> {
    match name {
        "nocd-lv" => Ok(Algorithm::NoCd),
        "sendercd-lv" => Ok(Algorithm::SenderCd {
            eps: epsilon.unwrap_or(1.0),
        }),
        _ => Err(invalid(format!("unknown algorithm `{name}` (nocd-lv, sendercd-lv)"))),
    }
}

/// The model an algorithm is written for.
pub fn native_model(algo: Algorithm) -> CdModel {
    match algo {
        Algorithm::NoCd => CdModel::NoCd,
        Algorithm::SenderCd { .. } => CdModel::SenderCd,
    }
}

impl ExperimentConfig {
    pub fn new(algo: Algorithm, n: Vec<u64>, trials: u64, master_seed: u64) -> Self {
        ExperimentConfig {
            algo,
            n,
            trials,
            master_seed,
            model: native_model(algo),
            watchdog: DEFAULT_WATCHDOG,
            calibration: None,
            output: None,
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self.algo {
            Algorithm::SenderCd { eps } => Some(eps),
            Algorithm::NoCd => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.n.is_empty() || self.n.iter().any(|&n| n < 2) {
            return Err(invalid("every n must be at least 2"));
        }
        if self.n.iter().any(|&n| n > u64::from(u32::MAX)) {
            return Err(invalid("n must fit in 32 bits"));
        }
        if let Some(eps) = self.epsilon() {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(invalid("epsilon must lie in (0, 1]"));
            }
            if !matches!(self.model, CdModel::SenderCd | CdModel::StrongCd) {
                return Err(invalid("the Sender-CD algorithm needs transmitters to hear their own message"));
            }
        }
        if self.watchdog == 0 {
            return Err(invalid("watchdog must be positive"));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut algo = None;
        let mut epsilon = None;
        let mut n = Vec::new();
        let mut trials = 1;
        let mut seed = None;
        let mut model = None;
        let mut watchdog = DEFAULT_WATCHDOG;
        let mut calibration = None;
        let mut output = None;
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
            let int = |v: &str| v.trim().parse::<u64>().map_err(|e| err(format!("{key}: {e}")));
            match key {
                "algo" => algo = Some(value.to_string()),
                "epsilon" => epsilon = Some(value.parse::<f64>().map_err(|e| err(format!("{key}: {e}")))?),
                "n" => n = value.split(',').map(int).collect::<Result<_>>()?,
                "trials" => trials = int(value)?,
                "seed" => seed = Some(int(value)?),
                "model" => {
                    model = Some(CdModel::parse(value).ok_or_else(|| err(format!("unknown model `{value}`")))?)
                }
                "watchdog" => watchdog = int(value)?,
                "calibration" => calibration = Some(PathBuf::from(value)),
                "output" => output = Some(PathBuf::from(value)),
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        let algo = parse_algo(algo.as_deref().ok_or_else(|| invalid("missing `algo`"))?, epsilon)?;
        let mut cfg = ExperimentConfig::new(algo, n, trials, seed.ok_or_else(|| invalid("missing `seed`"))?);
        if let Some(m) = model {
            cfg.model = m;
        }
        cfg.watchdog = watchdog;
        cfg.calibration = calibration;
        cfg.output = output;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "algo = {}", self.algo.name());
        if let Some(e) = self.epsilon() {
            let _ = writeln!(s, "epsilon = {e:?}");
        }
        let ns: Vec<String> = self.n.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "n = {}", ns.join(","));
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.master_seed);
        let _ = writeln!(s, "model = {}", self.model.name());
        let _ = writeln!(s, "watchdog = {}", self.watchdog);
        if let Some(p) = &self.calibration {
            let _ = writeln!(s, "calibration = {}", p.display());
        }
        if let Some(p) = &self.output {
            let _ = writeln!(s, "output = {}", p.display());
        }
        s
    }

    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.to_text().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::new(Algorithm::SenderCd { eps: 0.5 }, vec![4, 256], 3, 9);
        cfg.output = Some("out.csv".into());
        let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_invalid() {
        assert!(ExperimentConfig::parse("algo = nocd-lv\nn = 1\nseed = 1").is_err());
        assert!(ExperimentConfig::parse("algo = nocd-lv\nn = 4\ntrials = 0\nseed = 1").is_err());
        assert!(ExperimentConfig::parse("algo = nocd-lv\nn = 4").is_err());
        assert!(ExperimentConfig::parse("algo = sendercd-lv\nepsilon = 2\nn = 4\nseed = 1").is_err());
        assert!(ExperimentConfig::parse("algo = sendercd-lv\nmodel = no-cd\nn = 4\nseed = 1").is_err());
        assert!(matches!(
            ExperimentConfig::parse("algo = nocd-lv\nn = 4\nseed = 1\nbogus = 2"),
            Err(Error::Parse { line: 4, .. })
        ));
    }
}
