//! The good/bad partition of a matched zero set and the canonical product
//! `g(z) = prod_{A} (1 - z/z_mn) exp(z/z_mn + z^2/(2 lam_mn^2))` over the
//! good indices, with lattice sites standing in beyond the data window.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{lattice_spacing, site, LatticeMatching};
use crate::profile::GrowthProfile;
use crate::separation::product_separation;
use crate::sigma::{AuditGrid, TailSeries};
use crate::zeros::ZeroSet;

/// Bad points `E` and good indices `A` of a matched window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodSetPartition {
    /// Zero indices with `S_Z(z) <= S(|z|)` inside the window.
    pub bad: Vec<usize>,
    /// `(lattice index, zero index)` with `|lam| >= r0` and the zero not bad.
    pub good: Vec<((i64, i64), usize)>,
    pub r0: f64,
    pub window_radius: f64,
    pub intensity: f64,
    pub profile: GrowthProfile,
}

impl GoodSetPartition {
    pub fn zero_for(&self, index: (i64, i64)) -> Option<usize> {
        self.good.iter().find(|p| p.0 == index).map(|p| p.1)
    }
}

pub fn good_set(zeros: &ZeroSet, matching: &LatticeMatching, profile: &GrowthProfile) -> GoodSetPartition {
    let sep = product_separation(&zeros.points);
    let window = matching.window_radius;
    let bad: Vec<usize> = (0..zeros.len())
        .filter(|&i| {
            let r = zeros.points[i].norm();
            r <= window && sep[i] <= profile.s(r)
        })
        .collect();
    let bad_set: HashSet<usize> = bad.iter().copied().collect();
    let r0 = profile.r0();
    let good = matching
        .pairs
        .iter()
        .filter(|(s, z)| site(matching.intensity, *s).norm() >= r0 && !bad_set.contains(z))
        .copied()
        .collect();
    GoodSetPartition {
        bad,
        good,
        r0,
        window_radius: window,
        intensity: matching.intensity,
        profile: *profile,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GFactor {
    pub index: (i64, i64),
    pub zero: Complex64,
    pub site: Complex64,
}

/// `log[(1 - z/w) exp(z/w + z^2/(2 lam^2))]`.
fn log_factor(z: Complex64, w: Complex64, lam: Complex64) -> Complex64 {
    let u = z / w;
    ((w - z) / w).ln() + u + z * z / (2.0 * lam * lam)
}

/// The canonical product of a good set, prepared for evaluation on
/// `|z| <= query_radius`.
#[derive(Clone, Debug)]
pub struct GFunction {
    intensity: f64,
    /// Zeros are used for good indices with `|lam| <= cutoff`.
    cutoff: f64,
    query_radius: f64,
    factors: Vec<GFactor>,
    by_index: BTreeMap<(i64, i64), usize>,
    /// Sites with `cutoff < |lam| <= tail.cutoff`.
    lattice: Vec<Complex64>,
    tail: TailSeries,
}

impl GFunction {
    /// `m_trunc` beyond the window radius falls back to the window.
    pub fn new(zeros: &ZeroSet, partition: &GoodSetPartition, m_trunc: f64, query_radius: f64) -> Result<Self> {
        if !(m_trunc > 0.0 && query_radius > 0.0) {
            return Err(Error::Domain("truncation and query radius must be positive".into()));
        }
        let l = partition.intensity;
        let cutoff = m_trunc.min(partition.window_radius);
        let mut factors: Vec<GFactor> = partition
            .good
            .iter()
            .map(|&(index, z)| GFactor {
                index,
                zero: zeros.points[z],
                site: site(l, index),
            })
            .filter(|f| f.site.norm() <= cutoff)
            .collect();
        factors.sort_by_key(|f| f.index);
        let by_index = factors.iter().enumerate().map(|(i, f)| (f.index, i)).collect();
        let tail = TailSeries::for_radius(l, query_radius, 1e-15, cutoff + lattice_spacing(l));
        debug_assert!(query_radius < tail.valid_radius());
        let s = lattice_spacing(l);
        let m = (tail.cutoff / s).ceil() as i64 + 1;
        let mut lattice = Vec::new();
        for a in -m..=m {
            for b in -m..=m {
                let w = site(l, (a, b));
                let r = w.norm();
                if r > cutoff && r <= tail.cutoff {
                    lattice.push(w);
                }
            }
        }
        Ok(Self {
            intensity: l,
            cutoff,
            query_radius,
            factors,
            by_index,
            lattice,
            tail,
        })
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn query_radius(&self) -> f64 {
        self.query_radius
    }

    /// Factors built from zeros, sorted by lattice index.
    pub fn factors(&self) -> &[GFactor] {
        &self.factors
    }

    /// Zeros of `g` within `radius` (data zeros and lattice stand-ins).
    pub fn zeros_within(&self, radius: f64) -> Vec<Complex64> {
        self.factors
            .iter()
            .map(|f| f.zero)
            .chain(self.lattice.iter().copied())
            .filter(|z| z.norm() <= radius)
            .collect()
    }

    fn check_domain(&self, z: Complex64) -> Result<()> {
        if z.norm() > self.query_radius {
            return Err(Error::OutOfDomain {
                modulus: z.norm(),
                validity_radius: self.query_radius,
            });
        }
        Ok(())
    }

    fn log_eval_skipping(&self, z: Complex64, skip: Option<usize>) -> Complex64 {
        let mut acc = self.tail.log(z);
        for (i, f) in self.factors.iter().enumerate() {
            if Some(i) != skip {
                acc += log_factor(z, f.zero, f.site);
            }
        }
        for w in &self.lattice {
            acc += log_factor(z, *w, *w);
        }
        acc
    }

    /// Index of the data zero sitting exactly at `z`, if any.
    pub fn zero_index_at(&self, z: Complex64) -> Option<(i64, i64)> {
        self.factors.iter().find(|f| f.zero == z).map(|f| f.index)
    }

    /// `log g(z)`; the real part is `-inf` at a zero of `g`.
    pub fn log_eval(&self, z: Complex64) -> Result<Complex64> {
        self.check_domain(z)?;
        if self.zero_index_at(z).is_some() || self.lattice.contains(&z) {
            return Ok(Complex64::new(f64::NEG_INFINITY, 0.0));
        }
        Ok(self.log_eval_skipping(z, None))
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let l = self.log_eval(z)?;
        if l.re == f64::NEG_INFINITY {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if l.re > 709.0 {
            return Err(Error::Overflow { log_magnitude: l.re });
        }
        Ok(l.exp())
    }

    /// `log g'(z_mn)` at the simple zero of a good index.
    pub fn log_derivative_at(&self, index: (i64, i64)) -> Result<Complex64> {
        let &i = self
            .by_index
            .get(&index)
            .ok_or_else(|| Error::Domain(format!("index {index:?} is not a zero of g within the cutoff")))?;
        let f = self.factors[i];
        if f.zero == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain(format!("invariant violated: good index {index:?} has a zero at the origin")));
        }
        self.check_domain(f.zero)?;
        let own = (-f.zero.inv()).ln() + 1.0 + f.zero * f.zero / (2.0 * f.site * f.site);
        Ok(own + self.log_eval_skipping(f.zero, Some(i)))
    }

    pub fn derivative_at(&self, index: (i64, i64)) -> Result<Complex64> {
        Ok(self.log_derivative_at(index)?.exp())
    }

    /// Distance from `z` to the nearest zero of `g`.
    pub fn distance_to_zeros(&self, z: Complex64) -> f64 {
        self.factors
            .iter()
            .map(|f| f.zero)
            .chain(self.lattice.iter().copied())
            .map(|w| (z - w).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Winding number of `g` around a circle, refining the sampling until
    /// every phase step is below `pi/4`.
    pub fn winding(&self, center: Complex64, radius: f64) -> Result<i64> {
        let mut n = 64usize;
        loop {
            let logs: Vec<Complex64> = (0..n)
                .map(|k| self.log_eval(center + Complex64::from_polar(radius, 2.0 * PI * k as f64 / n as f64)))
                .collect::<Result<_>>()?;
            if logs.iter().any(|l| l.re == f64::NEG_INFINITY) {
                return Err(Error::ContourThroughZero {
                    radius,
                    min_modulus: 0.0,
                });
            }
            let mut total = 0.0;
            let mut max_step: f64 = 0.0;
            for k in 0..n {
                let d = logs[(k + 1) % n].im - logs[k].im;
                let step = d - 2.0 * PI * (d / (2.0 * PI)).round();
                max_step = max_step.max(step.abs());
                total += step;
            }
            if max_step < PI / 4.0 {
                return Ok((total / (2.0 * PI)).round() as i64);
            }
            if n >= 1 << 16 {
                return Err(Error::NonConvergence {
                    iterations: n,
                    unconverged: 1,
                    trace: vec![max_step],
                });
            }
            n *= 2;
        }
    }
}

/// Winding-number check that the data zeros of `g` in the trusted disk are
/// simple and that sampled zero-free points carry no zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimpleZeroReport {
    pub zeros_checked: usize,
    pub simple: usize,
    pub free_checked: usize,
    pub free_clean: usize,
    pub failures: Vec<Complex64>,
}

impl SimpleZeroReport {
    pub fn passes(&self) -> bool {
        self.failures.is_empty() && self.simple == self.zeros_checked && self.free_clean == self.free_checked
    }
}

pub fn simple_zero_check(g: &GFunction, trusted_radius: f64, free_samples: usize, seed: u64) -> Result<SimpleZeroReport> {
    let all = g.zeros_within(g.query_radius);
    let targets: Vec<Complex64> = g.factors.iter().map(|f| f.zero).filter(|z| z.norm() <= trusted_radius).collect();
    let nearest_other = |z: Complex64| {
        all.iter()
            .filter(|w| **w != z)
            .map(|w| (z - w).norm())
            .fold(f64::INFINITY, f64::min)
    };
    let mut failures = Vec::new();
    let mut simple = 0;
    for z in &targets {
        let r = (0.3 * nearest_other(*z)).min(0.1);
        match g.winding(*z, r) {
            Ok(1) => simple += 1,
            _ => failures.push(*z),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut free_clean = 0;
    let mut free_checked = 0;
    let mut attempts = 0;
    while free_checked < free_samples && attempts < 100 * free_samples.max(1) {
        attempts += 1;
        let z = Complex64::from_polar(
            trusted_radius * rng.random::<f64>().sqrt(),
            2.0 * PI * rng.random::<f64>(),
        );
        let d = g.distance_to_zeros(z);
        if d < 0.05 {
            continue;
        }
        free_checked += 1;
        match g.winding(z, (0.4 * d).min(0.2)) {
            Ok(0) => free_clean += 1,
            _ => failures.push(z),
        }
    }
    Ok(SimpleZeroReport {
        zeros_checked: targets.len(),
        simple,
        free_checked,
        free_clean,
        failures,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GBoundAudit {
    /// `inf |e^{-L|z|^2/2} g(z)| / d(z, zeros of g)`.
    pub inf_ratio: f64,
    /// The same, divided by `exp(-C beta (T(1)^2 log*^4 T(1) + |z|^2 / log* T(1)))`.
    pub inf_normalized: f64,
    /// `sup |g|` on `|z| <= sqrt(2 pi / L)`.
    pub sup_small: f64,
    /// `ln(sup_small) / T(1)`, to compare with the constant in `e^{C T(1)}`.
    pub sup_constant: f64,
    pub points: usize,
}

/// Grid audit of the lower and upper bounds on `g`.
pub fn g_bound_audit(g: &GFunction, profile: &GrowthProfile, c_hat: f64, grid: &AuditGrid) -> Result<GBoundAudit> {
    let l = g.intensity;
    let t1 = profile.t(1.0);
    let lt = crate::scalar::log_star(t1);
    let avoid = g.zeros_within(grid.radius + 1.0);
    let pts = grid.points(&avoid);
    if pts.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, got: 0 });
    }
    let lower: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|z| {
            let lg = g.log_eval(*z)?;
            let v = lg.re - 0.5 * l * z.norm_sqr() - g.distance_to_zeros(*z).ln();
            let shape = -c_hat * profile.beta * (t1 * t1 * lt.powi(4) + z.norm_sqr() / lt);
            Ok((v, v - shape))
        })
        .collect::<Result<_>>()?;
    let inf_log = lower.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
    let inf_norm = lower.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let small = AuditGrid {
        radius: (2.0 * PI / l).sqrt(),
        ..*grid
    };
    let small_pts = small.points(&[]);
    let sup_log = small_pts
        .par_iter()
        .map(|z| g.log_eval(*z).map(|v| v.re))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(GBoundAudit {
        inf_ratio: inf_log.exp(),
        inf_normalized: inf_norm.exp(),
        sup_small: sup_log.exp(),
        sup_constant: sup_log / t1,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{match_lattice, sites_in_disk};
    use crate::sigma::sigma_theta;

    fn lattice_fixture(l: f64) -> (ZeroSet, GoodSetPartition) {
        let pts = sites_in_disk(l, 14.0).into_iter().map(|i| site(l, i)).collect();
        let z = ZeroSet::from_points(pts, 14.0);
        let m = match_lattice(&z, l, 8.0).unwrap();
        let p = good_set(&z, &m, &GrowthProfile::default());
        (z, p)
    }

    #[test]
    fn exact_lattice_partition() {
        let (_, p) = lattice_fixture(1.0);
        assert!(p.bad.is_empty());
        assert_eq!(p.r0, 2.0);
        let expected = sites_in_disk(1.0, 8.0).into_iter().filter(|i| site(1.0, *i).norm() >= 2.0).count();
        assert_eq!(p.good.len(), expected);
    }

    #[test]
    fn close_pair_is_bad() {
        let l = 1.0;
        let mut pts: Vec<Complex64> = sites_in_disk(l, 14.0).into_iter().map(|i| site(l, i)).collect();
        let target = site(l, (2, 1));
        pts.push(target + Complex64::new(1e-9, 0.0));
        let z = ZeroSet::from_points(pts, 14.0);
        let m = match_lattice(&z, l, 8.0).unwrap();
        let p = good_set(&z, &m, &GrowthProfile::default());
        let bad: Vec<Complex64> = p.bad.iter().map(|&i| z.points[i]).collect();
        assert_eq!(bad.len(), 2);
        assert!(bad.iter().all(|w| (w - target).norm() < 1e-8));
    }

    #[test]
    fn lattice_g_matches_sigma() {
        let l = 1.0;
        let (z, p) = lattice_fixture(l);
        let g = GFunction::new(&z, &p, 8.0, 4.0).unwrap();
        assert_eq!(g.eval(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(1.0, 0.0));
        let near: Vec<Complex64> = sites_in_disk(l, 2.0)
            .into_iter()
            .map(|i| site(l, i))
            .filter(|w| w.norm() > 0.0)
            .collect();
        for zq in [Complex64::new(0.4, 0.9), Complex64::new(-2.2, 1.3), Complex64::new(3.1, -1.7)] {
            let direct = g.log_eval(zq).unwrap().re;
            let mut via = sigma_theta(zq, l).norm().ln() - zq.norm().ln();
            for w in &near {
                via -= log_factor(zq, *w, *w).re;
            }
            assert!((direct - via).abs() < 1e-8, "{zq}: {direct} vs {via}");
        }
    }

    #[test]
    fn derivative_limit_and_zero() {
        let l = 2.0;
        let (z, p) = lattice_fixture(l);
        let g = GFunction::new(&z, &p, 6.0, 5.0).unwrap();
        let f = *g.factors().iter().find(|f| f.zero.norm() < 4.0).unwrap();
        assert_eq!(g.eval(f.zero).unwrap(), Complex64::new(0.0, 0.0));
        let d = g.derivative_at(f.index).unwrap();
        let mut est = Complex64::new(0.0, 0.0);
        for k in 0..4 {
            let h = Complex64::from_polar(1e-4, PI / 2.0 * k as f64);
            est += g.eval(f.zero + h).unwrap() / h / 4.0;
        }
        assert!((est - d).norm() < 1e-6 * d.norm());
    }

    #[test]
    fn single_factor_derivative() {
        let l = 1.0;
        let lam = site(l, (2, 0));
        let zero = lam + Complex64::new(0.1, -0.05);
        let z = ZeroSet::from_points(vec![zero], 30.0);
        let p = GoodSetPartition {
            bad: vec![],
            good: vec![((2, 0), 0)],
            r0: 2.0,
            window_radius: 3.6,
            intensity: l,
            profile: GrowthProfile::default(),
        };
        let g = GFunction::new(&z, &p, 3.6, 4.0).unwrap();
        let rest = g.log_eval_skipping(zero, Some(0));
        let closed = (-zero.inv()) * (1.0 + zero * zero / (2.0 * lam * lam)).exp() * rest.exp();
        assert!((g.derivative_at((2, 0)).unwrap() - closed).norm() < 1e-12 * closed.norm());
    }

    #[test]
    fn simple_zeros_on_lattice() {
        let (z, p) = lattice_fixture(2.0);
        let g = GFunction::new(&z, &p, 8.0, 6.0).unwrap();
        let r = simple_zero_check(&g, 5.0, 20, 1).unwrap();
        assert!(r.passes(), "{r:?}");
        assert!(r.zeros_checked > 20);
    }

    #[test]
    fn bound_audit_positive() {
        let (z, p) = lattice_fixture(2.0);
        let g = GFunction::new(&z, &p, 8.0, 4.5).unwrap();
        let a = g_bound_audit(&g, &GrowthProfile::default(), 1.0, &AuditGrid::new(4.0, 64)).unwrap();
        assert!(a.inf_ratio > 0.0 && a.sup_small.is_finite());
        assert!(a.sup_constant < 10.0);
    }
}
