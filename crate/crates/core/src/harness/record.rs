use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::Kind;

/// `stable hash(master_seed, trial_index)`: a splitmix64 step. The map
/// `i -> master + i * GAMMA` is injective modulo 2^64 (GAMMA is odd) and the
/// finalizer is a bijection, so seeds never collide for a fixed master.
pub fn derived_seed(master_seed: u64, trial_index: u64) -> u64 {
    const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = master_seed.wrapping_add(trial_index.wrapping_mul(GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub derived_seed: u64,
    pub kind: Kind,
    pub parameters: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, f64>,
    pub pass: BTreeMap<String, bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub n: usize,
    pub mean: f64,
    pub std_err: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub kind: Kind,
    pub trials: usize,
    pub errors: usize,
    pub parameters: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, MetricSummary>,
    pub pass_rates: BTreeMap<String, f64>,
    /// Pooled quantities that are not per-trial averages (fitted slopes...).
    pub extras: BTreeMap<String, f64>,
    pub gates: BTreeMap<String, bool>,
}

impl Summary {
    pub fn all_gates_pass(&self) -> bool {
        self.gates.values().all(|g| *g)
    }
}

/// One line of a records file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Line {
    Trial(TrialRecord),
    Summary(Summary),
}

/// Wall-time sidecar entry (kept out of the science payload).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub trial_index: u64,
    pub wall_ms: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut metrics = BTreeMap::new();
        metrics.insert("count".to_string(), 25.0);
        let line = Line::Trial(TrialRecord {
            trial_index: 3,
            derived_seed: derived_seed(1, 3),
            kind: Kind::ZerosCount,
            parameters: BTreeMap::new(),
            metrics,
            pass: BTreeMap::new(),
            error: None,
        });
        let s = serde_json::to_string(&line).unwrap();
        assert!(s.starts_with(r#"{"type":"trial""#));
        assert_eq!(serde_json::from_str::<Line>(&s).unwrap(), line);
    }

    #[test]
    fn seeds_distinct_on_a_million_indices() {
        let mut v: Vec<u64> = (0..1_000_000u64).map(|i| derived_seed(42, i)).collect();
        v.sort_unstable();
        v.dedup();
        assert_eq!(v.len(), 1_000_000);
    }
}
