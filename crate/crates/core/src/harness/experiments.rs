use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Kind, Resolved};
use super::record::derived_seed;
use crate::conditions::condition_report;
use crate::error::{Error, Result};
use crate::gef::sample_gef;
use crate::gfunc::{g_bound_audit, good_set, simple_zero_check, GFunction};
use crate::intensity::{confluent_determinants, gamma_matrix, rho_bound_audit, rho_k, rho_k_oracle, GafModel};
use crate::lattice::{lattice_spacing, match_lattice, site, LatticeMatching};
use crate::linalg::hermitian_eigenvalues;
use crate::pairs::{pair_counts, poisson_process};
use crate::profile::GrowthProfile;
use crate::sampling::{bessel_audit, frame_bounds_p2, reconstruct, weight_optimality_probe, WeightProfile};
use crate::sigma::{sigma_lower_audit, AuditGrid};
use crate::zeros::{find_zeros, ZeroSet};
use crate::Complex64;

/// Metrics and pass flags of one trial.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub metrics: BTreeMap<String, f64>,
    pub pass: BTreeMap<String, bool>,
}

impl Outcome {
    fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    fn flag(&mut self, name: &str, value: bool) {
        self.pass.insert(name.to_string(), value);
    }
}

/// Sub-seed for an independent auxiliary stream of the same trial.
fn sub_seed(seed: u64, stream: u64) -> u64 {
    derived_seed(seed, stream.wrapping_add(1 << 40))
}

fn gef_zeros(l: f64, r: f64, seed: u64) -> Result<ZeroSet> {
    find_zeros(&sample_gef(l, r + 0.5, 1e-12, seed)?, r)
}

fn uniform_in_disk(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    let r = radius * rng.random::<f64>().sqrt();
    Complex64::from_polar(r, 2.0 * PI * rng.random::<f64>())
}

fn window(cfg: &Resolved) -> f64 {
    cfg.radius - 3.0 * lattice_spacing(cfg.intensity)
}

fn matched(cfg: &Resolved, seed: u64) -> Result<(ZeroSet, LatticeMatching)> {
    let zeros = gef_zeros(cfg.intensity, cfg.radius, seed)?;
    let m = match_lattice(&zeros, cfg.intensity, window(cfg))?;
    Ok((zeros, m))
}

fn points_count(cfg: &Resolved, default: f64, max: usize) -> Result<usize> {
    let k = cfg.tol("k", default);
    if !(k >= 1.0 && k <= max as f64 && k.fract() == 0.0) {
        return Err(Error::Config(format!("k must be an integer in [1, {max}], got {k}")));
    }
    Ok(k as usize)
}

pub fn run_trial(cfg: &Resolved, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    match cfg.kind {
        Kind::Covariance => covariance(cfg, seed, &mut out)?,
        Kind::ZerosCount => {
            let z = gef_zeros(cfg.intensity, cfg.radius, seed)?;
            out.metric("count", z.count_with_multiplicity() as f64);
            out.metric("expected", cfg.intensity * cfg.radius * cfg.radius);
            out.flag("certified", z.certified);
        }
        Kind::PairScaling => {
            let radii = &cfg.radii;
            let z = gef_zeros(cfg.intensity, cfg.radius, seed)?;
            let poisson = poisson_process(cfg.intensity / PI, cfg.radius, sub_seed(seed, 0));
            for (label, set) in [("gef", &z), ("poisson", &poisson)] {
                let (counts, area) = pair_counts(set, radii);
                out.metric(&format!("{label}.area"), area);
                for (r, c) in radii.iter().zip(counts) {
                    out.metric(&format!("{label}.pairs@{r}"), c as f64);
                }
            }
        }
        Kind::LatticeMatch => {
            let (_, m) = matched(cfg, seed)?;
            let n = m.pairs.len().max(1) as f64;
            out.metric("matched", m.pairs.len() as f64);
            out.metric("unmatched_zeros", m.unmatched_zeros.len() as f64);
            out.metric("unmatched_sites", m.unmatched_sites.len() as f64);
            out.metric("mean_sq_displacement", m.total_squared_displacement() / n);
            out.metric("max_displacement", m.displacements.iter().map(|x| x.norm()).fold(0.0, f64::max));
            out.metric("certificate_gap", m.certificate_gap);
            out.flag("optimal", m.certificate_gap <= 1e-9);
        }
        Kind::Conditions => {
            let (z, m) = matched(cfg, seed)?;
            let profile = GrowthProfile::new(cfg.tol("beta", 1.0));
            let rep = condition_report(&z, &m, &profile, cfg.tol("r_offset", 0.0));
            out.metric("lattice_violations", rep.lattice_violations.len() as f64);
            out.metric("checked_pairs", rep.checked_pairs as f64);
            out.metric("bad_shifted", rep.separation_shifted.bad_points.len() as f64);
            out.metric("bad_plain", rep.separation_plain.bad_points.len() as f64);
            out.metric("ratio_shifted", rep.separation_shifted.max_ratio);
            out.metric("ratio_plain", rep.separation_plain.max_ratio);
            out.flag("perturbed_lattice", rep.passes());
        }
        Kind::Intensity => intensity(cfg, seed, &mut out)?,
        Kind::SigmaAudit => {
            let per_side = cfg.tol("grid", 113.0) as usize;
            let a = sigma_lower_audit(cfg.intensity, &AuditGrid::new(cfg.radius, per_side).with_seed(seed))?;
            out.metric("empirical_c", a.empirical_c);
            out.metric("points", a.points as f64);
            out.flag("positive", a.pass);
        }
        Kind::GAudit => g_audit(cfg, seed, &mut out)?,
        Kind::Mz => {
            let z = gef_zeros(cfg.intensity, cfg.radius, seed)?;
            let fb = frame_bounds_p2(&z.points, cfg.degree);
            let positive = !fb.rank_deficient && fb.lower > 1e-13 * fb.upper;
            out.metric("zeros", z.len() as f64);
            out.metric("lower", fb.lower);
            out.metric("upper", fb.upper);
            if positive {
                out.metric("ratio", fb.condition());
            }
            out.flag("lower_positive", positive);
        }
        Kind::Bessel => {
            let z = gef_zeros(cfg.intensity, cfg.radius, seed)?;
            let probes = cfg.tol("probes", 20.0) as usize;
            let b = bessel_audit(&z, cfg.degree, cfg.p, probes, sub_seed(seed, 0))?;
            out.metric("max_ratio", b.max_ratio);
            out.metric("normalized", b.normalized);
        }
        Kind::Reconstruct => reconstruction(cfg, seed, &mut out)?,
        Kind::WeightProbe => {
            let z = gef_zeros(cfg.intensity, cfg.radius, seed)?;
            let w = WeightProfile::new(cfg.tol("c_hat", 1e-3));
            let region = cfg.tol("region", cfg.radius - 1.0);
            let probe = weight_optimality_probe(&z, region, None, cfg.p, &w)?;
            out.metric("hole_radius", probe.hole_radius);
            out.metric("sum", probe.sum);
            out.metric("weighted_sum", probe.weighted_sum);
            out.metric("center_modulus", probe.center.norm());
        }
    }
    Ok(out)
}

fn covariance(cfg: &Resolved, seed: u64, out: &mut Outcome) -> Result<()> {
    let k = points_count(cfg, 3.0, 4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Complex64> = (0..k).map(|_| uniform_in_disk(&mut rng, cfg.radius)).collect();
    let gamma = gamma_matrix(&GafModel::gef(cfg.intensity), &pts)?.gamma();
    let eig = hermitian_eigenvalues(&gamma);
    let top = eig.iter().copied().fold(0.0, f64::max);
    let low = eig.iter().copied().fold(f64::INFINITY, f64::min);
    out.metric("gamma_hermitian_defect", gamma.hermitian_defect());
    out.metric("gamma_min_eig_rel", low / top);
    out.flag("gamma_psd", low >= -1e-10 * top);
    let det = confluent_determinants(&pts)?;
    let mv = (det.det_mv - det.det_mv_direct).norm() / det.det_mv.norm();
    out.metric("mv_rel_err", mv);
    out.flag("mv", mv < cfg.tol("rel_tol", 1e-8));
    if let (Some(c), Some(d)) = (det.det_mc, det.det_mc_direct) {
        out.metric("mc_rel_err", (Complex64::new(c, 0.0) - d).norm() / c.abs());
    }
    Ok(())
}

fn intensity(cfg: &Resolved, seed: u64, out: &mut Outcome) -> Result<()> {
    let k = points_count(cfg, 2.0, 3)?;
    let tau = cfg.tol("tau", 2.0);
    let model = GafModel::gef(cfg.intensity);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Complex64> = (0..k).map(|_| uniform_in_disk(&mut rng, cfg.radius)).collect();
    let rho = rho_k(&model, &pts)?;
    out.metric("rho", rho);
    let audit = rho_bound_audit(&model, &pts, tau)?;
    out.metric("bound_log_rhs", audit.log_rhs);
    out.flag("bound", audit.pass);
    if k <= 2 {
        let samples = cfg.tol("mc_samples", 1e5) as usize;
        let mc = rho_k_oracle(&model, &pts, samples, sub_seed(seed, 0))?;
        let z = (mc.value - rho) / mc.std_err;
        out.metric("mc", mc.value);
        out.metric("mc_std_err", mc.std_err);
        out.metric("mc_z", z);
        out.flag("mc_within_3se", z.abs() <= 3.0);
    }
    Ok(())
}

fn g_function(cfg: &Resolved, seed: u64, m_trunc: f64, query: f64) -> Result<GFunction> {
    let (zeros, m) = matched(cfg, seed)?;
    let profile = GrowthProfile::new(cfg.tol("beta", 1.0));
    let part = good_set(&zeros, &m, &profile);
    GFunction::new(&zeros, &part, m_trunc, query)
}

fn g_audit(cfg: &Resolved, seed: u64, out: &mut Outcome) -> Result<()> {
    let grid_radius = cfg.tol("grid_radius", 4.0);
    let g = g_function(cfg, seed, cfg.tol("m_trunc", 7.0), grid_radius + 1.0)?;
    let check = simple_zero_check(&g, cfg.tol("trusted_radius", grid_radius), 32, sub_seed(seed, 0))?;
    out.metric("zeros_checked", check.zeros_checked as f64);
    out.metric("free_checked", check.free_checked as f64);
    out.flag("simple_zeros", check.passes());
    let profile = GrowthProfile::new(cfg.tol("beta", 1.0));
    let grid = AuditGrid::new(grid_radius, cfg.tol("grid", 64.0) as usize).with_seed(sub_seed(seed, 1));
    let a = g_bound_audit(&g, &profile, cfg.tol("c_hat", 1.0), &grid)?;
    out.metric("inf_ratio", a.inf_ratio);
    out.metric("inf_normalized", a.inf_normalized);
    out.metric("sup_small", a.sup_small);
    out.metric("sup_constant", a.sup_constant);
    out.flag("inf_positive", a.inf_ratio > 0.0);
    Ok(())
}

fn reconstruction(cfg: &Resolved, seed: u64, out: &mut Outcome) -> Result<()> {
    let ball = cfg.tol("ball", 2.0);
    let step = cfg.tol("step", 0.2);
    let n = (ball / step).round() as i64;
    let queries: Vec<Complex64> = (-n..=n)
        .flat_map(|a| (-n..=n).map(move |b| Complex64::new(a as f64 * step, b as f64 * step)))
        .filter(|z| z.norm() <= ball + 1e-12)
        .collect();
    let (zeros, m) = matched(cfg, seed)?;
    let profile = GrowthProfile::new(cfg.tol("beta", 1.0));
    let part = good_set(&zeros, &m, &profile);
    let high = cfg.tol("m_trunc", 7.0);
    let low = cfg.tol("m_low", 4.0);
    let threshold = cfg.tol("threshold", 1e-2);
    let monotone_tol = cfg.tol("monotone_tol", 1e-3);
    let targets: [(&str, fn(Complex64) -> Complex64); 2] = [("one", |_| Complex64::new(1.0, 0.0)), ("e1", |z| z)];
    let mut accurate = true;
    let mut monotone = true;
    for (name, f) in targets {
        let mut errs = Vec::new();
        for mt in [high, low] {
            // g' is evaluated at every data zero, so g must be valid out to the farthest one
            let cutoff = mt.min(part.window_radius);
            let query = part
                .good
                .iter()
                .filter(|(i, _)| site(cfg.intensity, *i).norm() <= cutoff)
                .map(|(_, z)| zeros.points[*z].norm())
                .fold(ball, f64::max)
                + 0.25;
            let g = GFunction::new(&zeros, &part, mt, query)?;
            let samples = g.factors().iter().map(|fa| (fa.index, f(fa.zero))).collect();
            let rec = reconstruct(&samples, &g, &queries)?;
            let err = queries
                .iter()
                .zip(&rec.values)
                .map(|(q, v)| (v - f(*q)).norm() * (-0.5 * q.norm_sqr()).exp())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        out.metric(&format!("err_{name}_high"), errs[0]);
        out.metric(&format!("err_{name}_low"), errs[1]);
        accurate &= errs[0] < threshold;
        monotone &= errs[0] <= errs[1] + monotone_tol;
    }
    out.metric("good_indices", part.good.len() as f64);
    out.flag("accurate", accurate);
    out.flag("monotone", monotone);
    Ok(())
}
