use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use super::config::{ExperimentConfig, Kind};
use super::report::{parse_records, summary_csv};
use super::run::run_experiment;
use crate::error::Result;
use crate::fock::{bargmann_shift, chernoff_tail_bound, concentration_eigenvalue, fock_norm, tail_mass, FockFunction, QuadratureSpec};
use crate::gef::{sample_gef, GefSample};
use crate::gfunc::{good_set, GFunction};
use crate::intensity::{confluent_determinants, gamma_matrix, rho_bound_audit, rho_k, GafModel};
use crate::lattice::{lattice_spacing, match_lattice, site, sites_in_disk};
use crate::profile::GrowthProfile;
use crate::sampling::{bessel_audit, discrete_sum, frame_bounds_p2, probe_bounds, reconstruct};
use crate::separation::{nearest_separation, product_separation};
use crate::sigma::weierstrass_sigma;
use crate::zeros::{find_zeros, winding_count, ZeroSet};
use crate::Complex64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    /// Error text when the check could not run.
    pub detail: Option<String>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

type Check = (&'static str, fn() -> Result<bool>);

const CHECKS: &[Check] = &[
    ("fock.evaluate-constant", || Ok(FockFunction::<f64>::one().evaluate(c(3.0, 4.0))? == c(1.0, 0.0))),
    ("fock.evaluate-e1", || Ok(FockFunction::<f64>::monomial(1).evaluate(c(2.0, 0.0))? == c(2.0, 0.0))),
    ("fock.shifted-constant", || {
        let f = FockFunction::<f64>::one().with_shift_center(c(1.0, 0.0));
        Ok(close(f.evaluate(c(1.0, 0.0))?.re, 0.5f64.exp(), 1e-12))
    }),
    ("fock.norm-of-one", || {
        let f = FockFunction::<f64>::one();
        let mut ok = true;
        for p in [1.0, 2.0] {
            ok &= close(fock_norm(&f, p, &QuadratureSpec::for_function(&f, p))?.value, 1.0, 1e-10);
        }
        Ok(ok)
    }),
    ("fock.shift-inverse", || {
        let f = FockFunction::<f64>::new(vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.7, 0.0)])?;
        let a = c(0.8, -0.4);
        let back = bargmann_shift(&bargmann_shift(&f, a), -a);
        Ok(back.coefficients().iter().zip(f.coefficients()).all(|(x, y)| (x - y).norm() < 1e-12))
    }),
    ("fock.shift-isometry", || {
        let f = bargmann_shift(&FockFunction::<f64>::monomial(3), c(2.0, 1.0));
        Ok(close(f.coefficient_norm(), 1.0, 1e-10))
    }),
    ("fock.eigenvalue-closed-forms", || {
        let l0 = concentration_eigenvalue(0, 1.7f64)?;
        let l1 = concentration_eigenvalue(1, 2.0f64)?;
        Ok(close(l0, 1.0 - (-1.7f64 * 1.7).exp(), 1e-14) && close(l1, 1.0 - 5.0 * (-4.0f64).exp(), 1e-14))
    }),
    ("fock.chernoff", || {
        let b0 = chernoff_tail_bound(1.0f64, 0)?;
        let b4 = chernoff_tail_bound(3.0f64, 4)?;
        Ok(close(b0, (-1.0f64).exp(), 1e-14) && b4 >= 1.0 - concentration_eigenvalue(4, 3.0)? && close(b4, 0.172_686_2, 1e-6))
    }),
    ("fock.tail-of-one", || {
        let f = FockFunction::<f64>::one();
        let t = tail_mass(&f, 3.0, 2.0, &QuadratureSpec::for_function(&f, 2.0))?;
        Ok(close(t.numeric, (-9.0f64).exp(), 1e-10) && t.holds())
    }),
    ("gef.determinism-and-tail", || {
        let a = sample_gef(1.0, 5.0, 1e-12, 3)?;
        let b = sample_gef(1.0, 5.0, 1e-12, 3)?;
        Ok(a.truncation() >= 98 && a.tail_certificate() < 1e-12 && a.log_magnitudes() == b.log_magnitudes() && a.phases() == b.phases())
    }),
    ("zeros.injected-quadratic", || {
        let s = GefSample::from_coefficients(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 4.0)?;
        let z = find_zeros(&s, 2.0)?;
        let mut re: Vec<f64> = z.points.iter().map(|p| p.re).collect();
        re.sort_by(f64::total_cmp);
        Ok(z.certified && re.len() == 2 && close(re[0], -1.0, 1e-10) && close(re[1], 1.0, 1e-10))
    }),
    ("zeros.winding", || {
        let cube = GefSample::from_coefficients(&[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 4.0)?;
        let pair = GefSample::from_coefficients(&[c(1.0, 0.0), c(-2.5, 0.0), c(1.0, 0.0)], 4.0)?;
        Ok(winding_count(&cube, 1.0)? == 3 && winding_count(&pair, 1.0)? == 1)
    }),
    ("separation.examples", || {
        let s = nearest_separation(&[c(0.0, 0.0), c(0.3, 0.0), c(1.0, 0.0)])?;
        let p = product_separation(&[c(0.0, 0.0), c(0.3, 0.0), c(0.4, 0.0)]);
        let iso = product_separation(&[c(0.0, 0.0), c(5.0, 0.0)]);
        Ok(close(s[0], 0.3, 1e-15) && close(s[2], 0.7, 1e-15) && close(p[0], 0.12, 1e-15) && iso[0] == 1.0)
    }),
    ("lattice.exact-and-jittered", || {
        let l = 1.0;
        let pts: Vec<Complex64> = sites_in_disk(l, 9.0).into_iter().map(|i| site(l, i)).collect();
        let exact = match_lattice(&ZeroSet::from_points(pts.clone(), 9.0), l, 3.5)?;
        let h = 0.01 * lattice_spacing(l);
        let jit: Vec<Complex64> = pts.iter().map(|z| z + c(h, 0.0)).collect();
        let m = match_lattice(&ZeroSet::from_points(jit, 9.0), l, 3.5)?;
        let max = m.displacements.iter().map(|x| x.norm()).fold(0.0, f64::max);
        Ok(exact.displacements.iter().all(|x| x.norm() == 0.0) && close(max, 0.01 * PI.sqrt(), 1e-12))
    }),
    ("profile.r0", || Ok(GrowthProfile::default().r0() == 2.0)),
    ("intensity.gamma-at-origin", || {
        let g = gamma_matrix(&GafModel::gef(1.0), &[c(0.0, 0.0)])?.gamma();
        let h = gamma_matrix(&GafModel::Hyperbolic, &[c(0.0, 0.0)])?.gamma();
        let id = [[1.0, 0.0], [0.0, 1.0]];
        let eq = |m: &crate::linalg::CMatrix<f64>| (0..2).all(|i| (0..2).all(|j| (m[(i, j)] - c(id[i][j], 0.0)).norm() < 1e-14));
        Ok(eq(&g) && eq(&h))
    }),
    ("intensity.truncated-block", || {
        let b = gamma_matrix(&GafModel::truncated(vec![1.0, 1.0])?, &[c(1.0, 0.0)])?;
        Ok(b.a[(0, 0)] == c(2.0, 0.0) && b.b[(0, 0)] == c(1.0, 0.0) && b.d[(0, 0)] == c(1.0, 0.0))
    }),
    ("intensity.confluent", || {
        let d = confluent_determinants(&[c(0.0, 0.0), c(1.0, 0.0)])?;
        let one = confluent_determinants(&[c(0.0, 0.0)])?;
        let rep = confluent_determinants(&[c(0.3, 0.1), c(0.3, 0.1)])?;
        Ok(close(d.det_mv.re, -1.0, 1e-12) && close(d.det_mv_direct.re, -1.0, 1e-12) && one.det_mc == Some(1.0) && rep.det_mv.norm() == 0.0)
    }),
    ("intensity.rho1", || {
        let mut ok = true;
        for l in [0.5, 1.0, 1.5, 2.0] {
            ok &= close(rho_k(&GafModel::gef(l), &[c(0.7, -0.2)])?, l / PI, 1e-12);
        }
        Ok(ok)
    }),
    ("intensity.bound-diagonal", || {
        let a = rho_bound_audit(&GafModel::gef(1.0), &[c(0.4, 0.0), c(0.4, 0.0)], 2.0)?;
        Ok(a.pass && a.lhs == 0.0)
    }),
    ("sigma.zeros-and-origin", || {
        let on = weierstrass_sigma(site(1.0, (2, -1)), 1.0, 1e-10)?;
        let small = weierstrass_sigma(c(1e-6, 0.0), 1.0, 1e-10)?;
        Ok(on.norm() == 0.0 && close((small / 1e-6).re, 1.0, 1e-9))
    }),
    ("sampling.discrete-sums", || {
        let one = discrete_sum(&FockFunction::one(), &[c(0.0, 0.0)], 2.0, None);
        let e1 = discrete_sum(&FockFunction::monomial(1), &[c(0.0, 0.0)], 2.0, None);
        let l = 1.0;
        let lat: Vec<Complex64> = sites_in_disk(l, 20.0).into_iter().map(|i| site(l, i)).collect();
        let theta = discrete_sum(&FockFunction::one(), &lat, 2.0, None);
        Ok(one == 1.0 && e1 == 0.0 && close(theta, 1.180_340_599_016_096, 1e-9))
    }),
    ("sampling.frame-examples", || {
        let f0 = frame_bounds_p2(&[c(0.0, 0.0)], 0);
        let f1 = frame_bounds_p2(&[c(0.0, 0.0), c(1.0, 0.0)], 1);
        let e = (-1.0f64).exp();
        let (mid, rad) = (0.5 * (1.0 + 2.0 * e), (0.25 + e * e).sqrt());
        Ok(f0.lower == 1.0 && f0.upper == 1.0 && close(f1.lower, mid - rad, 1e-14) && close(f1.upper, mid + rad, 1e-14))
    }),
    ("sampling.probe-constant-case", || {
        let pts = [c(0.2, 0.1), c(-1.0, 0.4), c(0.5, -2.0)];
        let b = probe_bounds(&pts, 0, 3.0, 8, 1)?;
        Ok(b.upper - b.lower < 1e-10)
    }),
    ("sampling.bessel-empty", || Ok(bessel_audit(&ZeroSet::from_points(vec![], 4.0), 8, 2.0, 4, 0)?.max_ratio == 0.0)),
    ("sampling.zero-samples", || {
        let l = 2.0;
        let pts: Vec<Complex64> = sites_in_disk(l, 12.0).into_iter().map(|i| site(l, i)).collect();
        let z = ZeroSet::from_points(pts, 12.0);
        let m = match_lattice(&z, l, 8.0)?;
        let g = GFunction::new(&z, &good_set(&z, &m, &GrowthProfile::default()), 6.0, 7.0)?;
        let samples: BTreeMap<_, _> = g.factors().iter().map(|f| (f.index, c(0.0, 0.0))).collect();
        let r = reconstruct(&samples, &g, &[c(0.5, 0.5), c(-1.0, 0.2)])?;
        Ok(r.values.iter().all(|v| v.norm() == 0.0))
    }),
    ("harness.single-trial", || {
        let out = run_experiment(&ExperimentConfig::new(Kind::Covariance), 1)?;
        Ok(out.payload().lines().count() == 2)
    }),
    ("harness.rerun-identical", || {
        let mut cfg = ExperimentConfig::new(Kind::ZerosCount);
        cfg.trials = 3;
        cfg.radius = Some(3.0);
        Ok(run_experiment(&cfg, 1)?.payload() == run_experiment(&cfg, 2)?.payload())
    }),
    ("harness.empty-report", || Ok(summary_csv(&parse_records(""))?.lines().count() == 1)),
];

/// Run the quick example checks.
pub fn selftest() -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, f)| match f() {
            Ok(pass) => CheckResult { name, pass, detail: None },
            Err(e) => CheckResult {
                name,
                pass: false,
                detail: Some(e.to_string()),
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let failed: Vec<CheckResult> = selftest().into_iter().filter(|r| !r.pass).collect();
        assert!(failed.is_empty(), "{failed:?}");
    }
}
