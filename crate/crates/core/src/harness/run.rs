use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, Kind, Resolved};
use super::experiments::run_trial;
use super::record::{derived_seed, Line, MetricSummary, Summary, Timing, TrialRecord};
use crate::error::{Error, Result};
use crate::pairs::fit_pair_counts;
use crate::stats::{mean, quantile, std_err};

/// Records, summary and (segregated) wall times of one run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
    pub timings: Vec<Timing>,
}

impl RunOutput {
    /// The science payload: one JSON object per trial, then the summary.
    pub fn payload(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            writeln!(s, "{}", serde_json::to_string(&Line::Trial(r.clone())).expect("serializable")).unwrap();
        }
        writeln!(s, "{}", serde_json::to_string(&Line::Summary(self.summary.clone())).expect("serializable")).unwrap();
        s
    }

    /// Write the payload to `path` and wall times to `<path>.timing.jsonl`.
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.payload())?;
        let mut t = String::new();
        for x in &self.timings {
            writeln!(t, "{}", serde_json::to_string(x)?).unwrap();
        }
        std::fs::write(timing_path(path), t)?;
        Ok(())
    }

    pub fn passed(&self) -> bool {
        self.summary.all_gates_pass()
    }
}

pub fn timing_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".timing.jsonl");
    PathBuf::from(s)
}

/// Run every trial (concurrently on up to `jobs` threads) and summarise.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<RunOutput> {
    let cfg = config.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
    let params = cfg.parameters();
    let results: Vec<(TrialRecord, Timing)> = pool.install(|| {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|i| {
                let seed = derived_seed(cfg.master_seed, i);
                let start = Instant::now();
                let outcome = run_trial(&cfg, seed);
                let wall_ms = start.elapsed().as_secs_f64() * 1e3;
                let (metrics, pass, error) = match outcome {
                    Ok(o) => (finite(o.metrics), o.pass, None),
                    Err(e) => (BTreeMap::new(), BTreeMap::new(), Some(e.to_string())),
                };
                let rec = TrialRecord {
                    trial_index: i,
                    derived_seed: seed,
                    kind: cfg.kind,
                    parameters: params.clone(),
                    metrics,
                    pass,
                    error,
                };
                (rec, Timing { trial_index: i, wall_ms })
            })
            .collect()
    });
    let (records, timings): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let summary = summarize(&cfg, &records);
    Ok(RunOutput {
        records,
        summary,
        timings,
    })
}

/// JSON has no representation for NaN/inf; such values are dropped.
fn finite(m: BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    m.into_iter().filter(|(_, v)| v.is_finite()).collect()
}

pub fn metric_summary(values: &[f64]) -> MetricSummary {
    let se = std_err(values);
    MetricSummary {
        n: values.len(),
        mean: mean(values),
        std_err: if se.is_finite() { se } else { 0.0 },
        q05: quantile(values, 0.05),
        median: quantile(values, 0.5),
        q95: quantile(values, 0.95),
    }
}

pub fn summarize(cfg: &Resolved, records: &[TrialRecord]) -> Summary {
    let ok: Vec<&TrialRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    let mut by_metric: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut by_flag: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in &ok {
        for (k, v) in &r.metrics {
            by_metric.entry(k).or_default().push(*v);
        }
        for (k, v) in &r.pass {
            let e = by_flag.entry(k).or_default();
            e.0 += *v as usize;
            e.1 += 1;
        }
    }
    let metrics: BTreeMap<String, MetricSummary> = by_metric.iter().map(|(k, v)| (k.to_string(), metric_summary(v))).collect();
    let pass_rates: BTreeMap<String, f64> = by_flag
        .iter()
        .map(|(k, (p, n))| (k.to_string(), *p as f64 / *n as f64))
        .collect();
    let mut extras = BTreeMap::new();
    let mut gates = BTreeMap::new();
    gates.insert("no_trial_errors".to_string(), ok.len() == records.len());
    let rate = |k: &str| pass_rates.get(k).copied().unwrap_or(0.0);
    match cfg.kind {
        Kind::Covariance => {
            gates.insert("gamma_psd".into(), rate("gamma_psd") == 1.0);
            gates.insert("confluent_vandermonde".into(), rate("mv") == 1.0);
        }
        Kind::ZerosCount => {
            if let Some(m) = metrics.get("count") {
                let expected = cfg.intensity * cfg.radius * cfg.radius;
                gates.insert("mean_count".into(), (m.mean - expected).abs() <= 3.0 * m.std_err.max(f64::MIN_POSITIVE));
            }
            gates.insert("certification_rate".into(), rate("certified") >= 0.99);
        }
        Kind::PairScaling => {
            for (label, lo, hi) in [("gef", 3.5, 4.5), ("poisson", 1.7, 2.3)] {
                let pooled = |rs: &[&TrialRecord]| {
                    let area: f64 = rs.iter().filter_map(|r| r.metrics.get(&format!("{label}.area"))).sum();
                    let counts: Vec<u64> = cfg
                        .radii
                        .iter()
                        .map(|r| {
                            rs.iter()
                                .filter_map(|x| x.metrics.get(&format!("{label}.pairs@{r}")))
                                .sum::<f64>() as u64
                        })
                        .collect();
                    fit_pair_counts(&cfg.radii, &counts, area)
                };
                let fit = pooled(&ok);
                if let Ok(f) = &fit {
                    extras.insert(format!("{label}.slope"), f.slope);
                    if f.slope_se.is_finite() {
                        extras.insert(format!("{label}.slope_se"), f.slope_se);
                    }
                    // cumulative counts are correlated across radii, so the
                    // regression error understates the spread; jackknife over
                    // blocks of trials instead
                    let blocks = ok.len().min(20);
                    if blocks >= 2 {
                        let leave_out: Vec<f64> = (0..blocks)
                            .filter_map(|b| {
                                let rest: Vec<&TrialRecord> = ok.iter().enumerate().filter(|(i, _)| i % blocks != b).map(|(_, r)| *r).collect();
                                pooled(&rest).ok().map(|f| f.slope)
                            })
                            .collect();
                        if leave_out.len() == blocks {
                            let m = mean(&leave_out);
                            let ss: f64 = leave_out.iter().map(|x| (x - m) * (x - m)).sum();
                            extras.insert(format!("{label}.slope_se_jackknife"), ((blocks as f64 - 1.0) / blocks as f64 * ss).sqrt());
                        }
                    }
                }
                let within = fit.map(|f| f.slope >= lo && f.slope <= hi).unwrap_or(false);
                gates.insert(format!("{label}_slope"), within);
            }
            gates.insert("ensemble_size".into(), ok.len() >= 100);
        }
        Kind::LatticeMatch => {
            gates.insert("optimal_assignment".into(), rate("optimal") == 1.0);
        }
        Kind::Conditions | Kind::Bessel | Kind::WeightProbe => {}
        Kind::Intensity => {
            gates.insert("bound".into(), rate("bound") == 1.0);
            if pass_rates.contains_key("mc_within_3se") {
                gates.insert("mc_agreement".into(), rate("mc_within_3se") >= 0.95);
            }
        }
        Kind::SigmaAudit => {
            gates.insert("positive".into(), rate("positive") == 1.0);
        }
        Kind::GAudit => {
            gates.insert("simple_zeros".into(), rate("simple_zeros") == 1.0);
            gates.insert("inf_positive".into(), rate("inf_positive") == 1.0);
        }
        Kind::Mz => {
            gates.insert("lower_positive".into(), rate("lower_positive") >= 0.95);
        }
        Kind::Reconstruct => {
            gates.insert("accurate".into(), rate("accurate") >= 0.8);
            gates.insert("monotone".into(), rate("monotone") == 1.0);
        }
    }
    Summary {
        kind: cfg.kind,
        trials: records.len(),
        errors: records.len() - ok.len(),
        parameters: cfg.parameters(),
        metrics,
        pass_rates,
        extras,
        gates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_trial_gives_one_record_and_summary() {
        let mut c = ExperimentConfig::new(Kind::Covariance);
        c.master_seed = 5;
        let out = run_experiment(&c, 1).unwrap();
        let payload = out.payload();
        assert_eq!(payload.lines().count(), 2);
        let lines: Vec<Line> = payload.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert!(matches!(lines[0], Line::Trial(_)) && matches!(lines[1], Line::Summary(_)));
    }

    #[test]
    fn parallel_equals_serial() {
        let mut c = ExperimentConfig::new(Kind::Intensity);
        c.trials = 6;
        c.tolerances.insert("mc_samples".into(), 2e4);
        let a = run_experiment(&c, 1).unwrap().payload();
        let b = run_experiment(&c, 3).unwrap().payload();
        assert_eq!(a, b);
    }

    #[test]
    fn trial_errors_are_captured() {
        let mut c = ExperimentConfig::new(Kind::Covariance);
        c.tolerances.insert("k".into(), 9.0);
        c.trials = 2;
        let out = run_experiment(&c, 1).unwrap();
        assert!(out.records.iter().all(|r| r.error.is_some()));
        assert_eq!(out.summary.errors, 2);
        assert!(!out.passed());
    }
}
