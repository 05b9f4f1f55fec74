use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Kind;
use super::record::{Line, TrialRecord};
use super::run::metric_summary;
use crate::error::{Error, Result};
use crate::pairs::fit_pair_counts;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Csv,
    PlotData,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "plot-data" => Ok(Self::PlotData),
            _ => Err(Error::Config(format!("unknown report format '{s}' (expected csv or plot-data)"))),
        }
    }
}

/// Parsed records file: trial lines plus the number of lines skipped.
#[derive(Clone, Debug, Default)]
pub struct Records {
    pub trials: Vec<TrialRecord>,
    pub summaries: usize,
    pub skipped: usize,
}

pub fn parse_records(text: &str) -> Records {
    let mut out = Records::default();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match serde_json::from_str::<Line>(line) {
            Ok(Line::Trial(t)) => out.trials.push(t),
            Ok(Line::Summary(_)) => out.summaries += 1,
            Err(_) => out.skipped += 1,
        }
    }
    out
}

pub fn read_records(path: &Path) -> Result<Records> {
    Ok(parse_records(&std::fs::read_to_string(path)?))
}

/// Trials sharing a kind and parameter echo.
type GroupKey = (Kind, String);

fn param_key(p: &BTreeMap<String, f64>) -> String {
    p.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

fn groups(trials: &[TrialRecord]) -> BTreeMap<GroupKey, Vec<&TrialRecord>> {
    let mut g: BTreeMap<GroupKey, Vec<&TrialRecord>> = BTreeMap::new();
    for t in trials {
        g.entry((t.kind, param_key(&t.parameters))).or_default().push(t);
    }
    g
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Summary table: one row per (kind, parameters), with mean / standard
/// error / median columns for every metric and pass rates for every flag.
pub fn summary_csv(records: &Records) -> Result<String> {
    let g = groups(&records.trials);
    let mut metric_names = std::collections::BTreeSet::new();
    let mut flag_names = std::collections::BTreeSet::new();
    for t in &records.trials {
        metric_names.extend(t.metrics.keys().cloned());
        flag_names.extend(t.pass.keys().cloned());
    }
    let mut header = vec!["kind".to_string(), "parameters".into(), "trials".into(), "errors".into()];
    for m in &metric_names {
        header.extend([format!("{m}.mean"), format!("{m}.se"), format!("{m}.median")]);
    }
    for f in &flag_names {
        header.push(format!("{f}.pass_rate"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(csv_error)?;
    for ((kind, params), ts) in &g {
        let errors = ts.iter().filter(|t| t.error.is_some()).count();
        let mut row = vec![kind.to_string(), params.clone(), ts.len().to_string(), errors.to_string()];
        for m in &metric_names {
            let v: Vec<f64> = ts.iter().filter_map(|t| t.metrics.get(m).copied()).collect();
            if v.is_empty() {
                row.extend([String::new(), String::new(), String::new()]);
            } else {
                let s = metric_summary(&v);
                row.extend([s.mean.to_string(), s.std_err.to_string(), s.median.to_string()]);
            }
        }
        for f in &flag_names {
            let v: Vec<bool> = ts.iter().filter_map(|t| t.pass.get(f).copied()).collect();
            row.push(if v.is_empty() {
                String::new()
            } else {
                (v.iter().filter(|x| **x).count() as f64 / v.len() as f64).to_string()
            });
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    finish(w)
}

/// Long-format series `(series, x, y, y_err)`. Pair-scaling groups give
/// `log radius` against `log pair density` with a fitted-slope row; other
/// groups give each metric against the trial index.
pub fn plot_data_csv(records: &Records) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["series", "x", "y", "y_err"]).map_err(csv_error)?;
    for ((kind, params), ts) in groups(&records.trials) {
        let ok: Vec<&&TrialRecord> = ts.iter().filter(|t| t.error.is_none()).collect();
        if kind == Kind::PairScaling {
            for label in ["gef", "poisson"] {
                let prefix = format!("{label}.pairs@");
                let mut radii: Vec<f64> = ok
                    .iter()
                    .flat_map(|t| t.metrics.keys())
                    .filter_map(|k| k.strip_prefix(&prefix).and_then(|r| r.parse().ok()))
                    .collect();
                radii.sort_by(f64::total_cmp);
                radii.dedup();
                let area: f64 = ok.iter().filter_map(|t| t.metrics.get(&format!("{label}.area"))).sum();
                let counts: Vec<u64> = radii
                    .iter()
                    .map(|r| ok.iter().filter_map(|t| t.metrics.get(&format!("{prefix}{r}"))).sum::<f64>() as u64)
                    .collect();
                let series = format!("pair-scaling[{params}]/{label}");
                for (r, c) in radii.iter().zip(&counts) {
                    if *c > 0 {
                        let y = (*c as f64 / area).ln();
                        let rec = [series.clone(), r.ln().to_string(), y.to_string(), (1.0 / (*c as f64).sqrt()).to_string()];
                        w.write_record(&rec).map_err(csv_error)?;
                    }
                }
                if let Ok(fit) = fit_pair_counts(&radii, &counts, area) {
                    let rec = [format!("{series}/slope"), String::new(), fit.slope.to_string(), fit.slope_se.to_string()];
                    w.write_record(&rec).map_err(csv_error)?;
                }
            }
            continue;
        }
        for t in &ok {
            for (m, v) in &t.metrics {
                let rec = [format!("{kind}[{params}]/{m}"), t.trial_index.to_string(), v.to_string(), String::new()];
                w.write_record(&rec).map_err(csv_error)?;
            }
        }
    }
    finish(w)
}

pub fn render(records: &Records, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => summary_csv(records),
        ReportFormat::PlotData => plot_data_csv(records),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_experiment, ExperimentConfig};

    #[test]
    fn empty_input_gives_header_only() {
        let r = parse_records("");
        assert_eq!(summary_csv(&r).unwrap().lines().count(), 1);
        assert_eq!(plot_data_csv(&r).unwrap(), "series,x,y,y_err\n");
    }

    #[test]
    fn malformed_lines_are_counted() {
        let mut c = ExperimentConfig::new(Kind::Covariance);
        c.trials = 3;
        let mut text = run_experiment(&c, 1).unwrap().payload();
        text.push_str("{not json\n{\"type\":\"trial\"}\n");
        let r = parse_records(&text);
        assert_eq!((r.trials.len(), r.summaries, r.skipped), (3, 1, 2));
        let csv = summary_csv(&r).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.contains("mv_rel_err.mean"));
    }
}
