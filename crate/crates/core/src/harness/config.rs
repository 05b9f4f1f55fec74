use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::lattice_spacing;
use crate::scalar::log_star;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Covariance,
    ZerosCount,
    PairScaling,
    LatticeMatch,
    Conditions,
    Intensity,
    SigmaAudit,
    GAudit,
    Mz,
    Bessel,
    Reconstruct,
    WeightProbe,
}

impl Kind {
    pub const ALL: [Kind; 12] = [
        Kind::Covariance,
        Kind::ZerosCount,
        Kind::PairScaling,
        Kind::LatticeMatch,
        Kind::Conditions,
        Kind::Intensity,
        Kind::SigmaAudit,
        Kind::GAudit,
        Kind::Mz,
        Kind::Bessel,
        Kind::Reconstruct,
        Kind::WeightProbe,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Covariance => "covariance",
            Kind::ZerosCount => "zeros-count",
            Kind::PairScaling => "pair-scaling",
            Kind::LatticeMatch => "lattice-match",
            Kind::Conditions => "conditions",
            Kind::Intensity => "intensity",
            Kind::SigmaAudit => "sigma-audit",
            Kind::GAudit => "g-audit",
            Kind::Mz => "mz",
            Kind::Bessel => "bessel",
            Kind::Reconstruct => "reconstruct",
            Kind::WeightProbe => "weight-probe",
        }
    }

    /// Kinds that simulate a GEF zero set in `B_R(0)` (sampled on `R + 0.5`).
    fn samples_gef(self) -> bool {
        !matches!(self, Kind::Covariance | Kind::Intensity | Kind::SigmaAudit)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Kind::ALL.iter().map(|k| k.as_str()).collect();
                Error::Config(format!("unknown kind '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// Experiment description; unset numeric parameters take per-kind defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default, alias = "L", skip_serializing_if = "Option::is_none")]
    pub intensity: Option<f64>,
    #[serde(default, alias = "R", skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, alias = "d", skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Auxiliary numeric knobs (`m_trunc`, `probes`, `mc_samples`, ...).
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default = "default_output")]
    pub output_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

fn default_trials() -> usize {
    1
}

fn default_output() -> String {
    "records.jsonl".to_string()
}

impl ExperimentConfig {
    pub fn new(kind: Kind) -> Self {
        Self {
            kind,
            intensity: None,
            radius: None,
            degree: None,
            p: None,
            trials: 1,
            master_seed: 0,
            tolerances: BTreeMap::new(),
            radii: None,
            output_path: default_output(),
            jobs: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Fill per-kind defaults and check module preconditions.
    pub fn resolve(&self) -> Result<Resolved> {
        let k = self.kind;
        let degree = self.degree.unwrap_or(8);
        let l = self.intensity.unwrap_or(match k {
            Kind::GAudit | Kind::Reconstruct => 2.0,
            Kind::Bessel => 1.5,
            Kind::Mz => log_star(degree as f64).powf(1.1),
            _ => 1.0,
        });
        let r = self.radius.unwrap_or(match k {
            Kind::ZerosCount => 5.0,
            Kind::PairScaling => 11.5,
            Kind::LatticeMatch | Kind::Conditions | Kind::WeightProbe => 8.0,
            Kind::Covariance => 2.0,
            Kind::Intensity => 1.0,
            Kind::SigmaAudit => 4.0,
            Kind::GAudit | Kind::Reconstruct => 11.5,
            Kind::Mz => (2.0 * degree as f64).sqrt(),
            Kind::Bessel => (degree as f64 + 3.0).sqrt() + 2.0,
        });
        let p = self.p.unwrap_or(2.0);
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(l > 0.0 && l <= 16.0) {
            return Err(Error::Config(format!("intensity must lie in (0, 16], got {l}")));
        }
        if !(r > 0.0) {
            return Err(Error::Config(format!("radius must be positive, got {r}")));
        }
        if k.samples_gef() && r + 0.5 > 12.0 {
            return Err(Error::Config(format!("radius {r} too large: GEF samples need R + 0.5 <= 12")));
        }
        if !(p >= 1.0) {
            return Err(Error::Config(format!("p must be >= 1, got {p}")));
        }
        if degree > 64 {
            return Err(Error::Config(format!("degree {degree} exceeds 64")));
        }
        let spacing = lattice_spacing(l);
        let needs_window = matches!(k, Kind::LatticeMatch | Kind::Conditions | Kind::GAudit | Kind::Reconstruct);
        if needs_window && r - 3.0 * spacing <= 2.0 {
            return Err(Error::Config(format!("radius {r} leaves no matching window at intensity {l}")));
        }
        if matches!(k, Kind::Reconstruct) && l <= 1.0 {
            return Err(Error::Config("reconstruction needs intensity > 1".into()));
        }
        if matches!(k, Kind::Bessel) && r * r < degree as f64 + 3.0 {
            return Err(Error::Config(format!("bessel needs R^2 >= d + 3, got R = {r}")));
        }
        if matches!(k, Kind::Intensity) && r >= 2.0 {
            return Err(Error::Config("intensity points must lie in B_tau(0) with tau = 2".into()));
        }
        let radii = self.radii.clone().unwrap_or_else(|| vec![0.3, 0.35, 0.4, 0.45, 0.5]);
        if matches!(k, Kind::PairScaling) && (radii.len() < 4 || radii.iter().any(|x| !(*x > 0.0 && *x <= 0.5))) {
            return Err(Error::Config("pair-scaling needs at least 4 radii in (0, 0.5]".into()));
        }
        Ok(Resolved {
            kind: k,
            intensity: l,
            radius: r,
            degree,
            p,
            trials: self.trials,
            master_seed: self.master_seed,
            tolerances: self.tolerances.clone(),
            radii,
        })
    }
}

/// A validated configuration with all defaults filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub kind: Kind,
    pub intensity: f64,
    pub radius: f64,
    pub degree: usize,
    pub p: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub radii: Vec<f64>,
}

impl Resolved {
    pub fn tol(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }

    /// Parameter echo stored with every record.
    pub fn parameters(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        m.insert("intensity".to_string(), self.intensity);
        m.insert("radius".to_string(), self.radius);
        m.insert("degree".to_string(), self.degree as f64);
        m.insert("p".to_string(), self.p);
        for (k, v) in &self.tolerances {
            m.insert(format!("tol.{k}"), *v);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_defaults() {
        let c = ExperimentConfig::from_json(r#"{"kind": "zeros-count", "L": 1.0, "trials": 3, "master_seed": 7}"#).unwrap();
        let r = c.resolve().unwrap();
        assert_eq!((r.kind, r.radius, r.trials), (Kind::ZerosCount, 5.0, 3));
        assert!(ExperimentConfig::from_json(r#"{"kind": "nope"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"kind": "mz", "bogus": 1}"#).is_err());
        let mut c = ExperimentConfig::new(Kind::Mz);
        c.degree = Some(32);
        let r = c.resolve().unwrap();
        assert!((r.radius - 8.0).abs() < 1e-12);
        c.trials = 0;
        assert!(c.resolve().is_err());
        for k in Kind::ALL {
            assert_eq!(k.as_str().parse::<Kind>().unwrap(), k);
            assert!(ExperimentConfig::new(k).resolve().is_ok(), "{k}");
        }
    }
}
