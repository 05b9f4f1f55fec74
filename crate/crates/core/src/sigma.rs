//! Weierstrass sigma function of the square lattice `sqrt(pi/L) Z^2`.
//!
//! The product is grouped over the orbits `{lam, i lam, -lam, -i lam}`, where
//! the exponential factors cancel and each orbit contributes `1 - z^4/lam^4`.
//! Beyond a cutoff `C` the remaining log-product is the power series
//! `-sum_j z^{4j}/(4j) sum_{|lam|>C} lam^{-4j}` (all other lattice moments
//! vanish by symmetry), with the moments taken from Eisenstein series.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{lattice_spacing, site};

/// `G_k(i) = sum' (m + i n)^{-k}` for `k` in {4, 8, 12}.
fn unit_eisenstein(k: u32) -> f64 {
    let zeta = match k {
        4 => PI.powi(4) / 90.0,
        8 => PI.powi(8) / 9450.0,
        12 => 691.0 * PI.powi(12) / 638_512_875.0,
        _ => unreachable!("only multiples of four up to 12"),
    };
    let fact: f64 = (1..k).map(f64::from).product();
    let scale = 2.0 * (2.0 * PI).powi(k as i32) / fact;
    let mut q_sum = 0.0;
    for n in 1..=20u32 {
        let divisor_sum: f64 = (1..=n).filter(|d| n % d == 0).map(|d| f64::from(d).powi(k as i32 - 1)).sum();
        q_sum += divisor_sum * (-2.0 * PI * f64::from(n)).exp();
    }
    2.0 * zeta + scale * q_sum
}

/// Lattice moments `sum' lam^{-4j}`, `j = 1, 2, 3`.
pub fn lattice_moments(intensity: f64) -> [f64; 3] {
    let s = lattice_spacing(intensity);
    [4, 8, 12].map(|k| unit_eisenstein(k) * s.powi(-(k as i32)))
}

fn sites_within(intensity: f64, radius: f64) -> impl Iterator<Item = ((i64, i64), Complex64)> {
    let s = lattice_spacing(intensity);
    let m = (radius / s).ceil() as i64 + 1;
    (-m..=m)
        .flat_map(move |a| (-m..=m).map(move |b| (a, b)))
        .map(move |idx| (idx, site(intensity, idx)))
        .filter(move |(_, w)| w.norm() <= radius)
}

/// Number of terms `z^{4j}` kept in the tail series.
const TAIL_TERMS: usize = 12;

/// Power-series tail of the canonical product over `|lam| > C`.
#[derive(Clone, Debug)]
pub(crate) struct TailSeries {
    pub cutoff: f64,
    intensity: f64,
    /// `sum_{|lam|>C} lam^{-4j}`, `j = 1..=TAIL_TERMS`.
    moments: Vec<f64>,
}

impl TailSeries {
    pub fn new(intensity: f64, cutoff: f64) -> Self {
        let full = lattice_moments(intensity);
        let mut inner = [Complex64::new(0.0, 0.0); 3];
        // higher moments converge fast enough to sum directly over C < |lam| <= 4C
        let mut outer = vec![Complex64::new(0.0, 0.0); TAIL_TERMS];
        for (idx, w) in sites_within(intensity, 4.0 * cutoff) {
            if idx == (0, 0) {
                continue;
            }
            let w4 = w.powu(4).inv();
            let mut p = w4;
            if w.norm() <= cutoff {
                for slot in inner.iter_mut() {
                    *slot += p;
                    p *= w4;
                }
            } else {
                for slot in outer.iter_mut() {
                    *slot += p;
                    p *= w4;
                }
            }
        }
        // all these sums are real by conjugation symmetry
        let moments = (0..TAIL_TERMS)
            .map(|j| if j < 3 { full[j] - inner[j].re } else { outer[j].re })
            .collect();
        Self {
            cutoff,
            intensity,
            moments,
        }
    }

    /// Smallest cutoff `>= min_cutoff` whose neglected terms are below
    /// `tol` for `|z| <= radius`.
    pub fn for_radius(intensity: f64, radius: f64, tol: f64, min_cutoff: f64) -> Self {
        let s = lattice_spacing(intensity);
        let mut c = min_cutoff.max(2.0 * radius + 4.0 * s + 1.0);
        while Self::remainder_bound(intensity, c, radius) > tol {
            c *= 1.25;
        }
        Self::new(intensity, c)
    }

    /// Bound on the dropped terms `sum_{j>TAIL_TERMS} r^{4j}/(4j) sum_{|lam|>C} |lam|^{-4j}`
    /// plus the moments' truncation at `4C` (each site owns a cell of area `s^2`).
    fn remainder_bound(intensity: f64, cutoff: f64, r: f64) -> f64 {
        let rho = cutoff - SQRT_2 * lattice_spacing(intensity);
        if rho <= r {
            return f64::INFINITY;
        }
        let sum_from = |rho: f64, j0: usize| {
            let x = r / rho;
            let mut total = 0.0;
            for j in j0..400 {
                let m = 4.0 * j as f64;
                let term = 4.0 * intensity * rho * rho * x.powf(m) / (m * (m - 2.0));
                total += term;
                if term < 1e-30 * total.max(1e-300) {
                    break;
                }
            }
            total
        };
        let far = 4.0 * cutoff - SQRT_2 * lattice_spacing(intensity);
        sum_from(rho, TAIL_TERMS + 1) + sum_from(far, 4)
    }

    pub fn log(&self, z: Complex64) -> Complex64 {
        let z4 = z.powu(4);
        let mut zp = z4;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, m) in self.moments.iter().enumerate() {
            acc -= zp * *m / (4.0 * (j + 1) as f64);
            zp *= z4;
        }
        acc
    }

    pub fn valid_radius(&self) -> f64 {
        self.cutoff - SQRT_2 * lattice_spacing(self.intensity)
    }
}

/// Nearest lattice index to `z` (by rounding) and its distance.
pub fn nearest_site(intensity: f64, z: Complex64) -> ((i64, i64), f64) {
    let s = lattice_spacing(intensity);
    let (m0, n0) = ((z.re / s).round() as i64, (z.im / s).round() as i64);
    let mut best = ((m0, n0), f64::INFINITY);
    for dm in -1..=1 {
        for dn in -1..=1 {
            let idx = (m0 + dm, n0 + dn);
            let d = (z - site(intensity, idx)).norm();
            if d < best.1 {
                best = (idx, d);
            }
        }
    }
    best
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(Error::Domain(format!("tol must lie in (0, 1e-4], got {tol}")));
    }
    Ok(())
}

/// `log sigma(z)` by the orbit product (real part `-inf` on the lattice).
pub fn log_sigma(z: Complex64, intensity: f64, tol: f64) -> Result<Complex64> {
    check_tol(tol)?;
    if !(intensity > 0.0) {
        return Err(Error::Domain(format!("intensity must be positive, got {intensity}")));
    }
    if nearest_site(intensity, z).1 == 0.0 {
        return Ok(Complex64::new(f64::NEG_INFINITY, 0.0));
    }
    let tail = TailSeries::for_radius(intensity, z.norm(), tol, 0.0);
    Ok(orbit_log_product(z, intensity, tail.cutoff) + tail.log(z))
}

/// `log z + sum over orbit representatives with |lam| <= cutoff`.
fn orbit_log_product(z: Complex64, intensity: f64, cutoff: f64) -> Complex64 {
    let mut acc = z.ln();
    let i = Complex64::new(0.0, 1.0);
    for ((m, n), lam) in sites_within(intensity, cutoff) {
        // one representative per orbit: m >= 1, n >= 0
        if m < 1 || n < 0 {
            continue;
        }
        // 1 - z^4/lam^4 as the product of the four linear factors
        let mut f = Complex64::new(1.0, 0.0);
        let mut w = lam;
        for _ in 0..4 {
            f *= (w - z) / w;
            w *= i;
        }
        acc += f.ln();
    }
    acc
}

/// The Weierstrass sigma function; exactly zero on the lattice.
pub fn weierstrass_sigma(z: Complex64, intensity: f64, tol: f64) -> Result<Complex64> {
    let l = log_sigma(z, intensity, tol)?;
    if l.re == f64::NEG_INFINITY {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if l.re > 709.0 {
        return Err(Error::Overflow { log_magnitude: l.re });
    }
    Ok(l.exp())
}

/// `sigma` through the Jacobi theta function `theta_1` with nome `e^{-pi}`:
/// `sigma(z) = (s/pi) e^{L z^2/2} theta_1(pi z/s) / theta_1'(0)`.
pub fn sigma_theta(z: Complex64, intensity: f64) -> Complex64 {
    let s = lattice_spacing(intensity);
    let v = z * (PI / s);
    let mut theta = Complex64::new(0.0, 0.0);
    let mut theta_prime0 = 0.0;
    let growth = v.im.abs();
    for n in 0..200 {
        let h = (n as f64 + 0.5).powi(2);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let qn = (-PI * h).exp();
        let odd = (2 * n + 1) as f64;
        theta += sign * qn * (v * odd).sin();
        theta_prime0 += sign * qn * odd;
        if -PI * h + odd * growth < -45.0 && n > 2 {
            break;
        }
    }
    (s / PI) * (intensity * z * z / 2.0).exp() * theta / theta_prime0
}

/// Jittered square grid restricted to a disk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditGrid {
    pub radius: f64,
    pub per_side: usize,
    pub seed: u64,
    /// Points closer than this to an excluded point are dropped.
    pub exclusion: f64,
}

impl AuditGrid {
    pub fn new(radius: f64, per_side: usize) -> Self {
        Self {
            radius,
            per_side,
            seed: 0,
            exclusion: 1e-6,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn points(&self, avoid: &[Complex64]) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let h = 2.0 * self.radius / self.per_side as f64;
        let mut out = Vec::with_capacity(self.per_side * self.per_side);
        for a in 0..self.per_side {
            for b in 0..self.per_side {
                let jitter = Complex64::new(rng.random_range(-0.25..0.25), rng.random_range(-0.25..0.25)) * h;
                let z = Complex64::new(-self.radius + (a as f64 + 0.5) * h, -self.radius + (b as f64 + 0.5) * h) + jitter;
                if z.norm() > self.radius {
                    continue;
                }
                if avoid.iter().any(|w| (z - w).norm() < self.exclusion) {
                    continue;
                }
                out.push(z);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaAudit {
    /// `inf |e^{-L|z|^2/2} sigma(z)| / d(z, lattice)` over the grid.
    pub empirical_c: f64,
    pub worst_point: Complex64,
    pub points: usize,
    pub pass: bool,
}

/// Lower-bound audit of the normalised sigma function against the
/// distance to the lattice (theta route, parallel over grid points).
pub fn sigma_lower_audit(intensity: f64, grid: &AuditGrid) -> Result<SigmaAudit> {
    if !(intensity > 0.0) {
        return Err(Error::Domain(format!("intensity must be positive, got {intensity}")));
    }
    let sites: Vec<Complex64> = sites_within(intensity, grid.radius + 1.0).map(|(_, w)| w).collect();
    let pts = grid.points(&sites);
    if pts.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, got: 0 });
    }
    let (log_ratio, worst) = pts
        .par_iter()
        .map(|z| {
            let d = nearest_site(intensity, *z).1;
            let v = sigma_theta(*z, intensity).norm().ln() - 0.5 * intensity * z.norm_sqr() - d.ln();
            (v, *z)
        })
        .reduce(
            || (f64::INFINITY, Complex64::new(0.0, 0.0)),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && (b.1.re, b.1.im) < (a.1.re, a.1.im)) { b } else { a },
        );
    let c = log_ratio.exp();
    Ok(SigmaAudit {
        empirical_c: c,
        worst_point: worst,
        points: pts.len(),
        pass: c > 0.0 && c.is_finite(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eisenstein_g4_closed_form() {
        // G_4(i) = Gamma(1/4)^8 / (960 pi^2)
        let gamma_quarter: f64 = 3.625_609_908_221_908;
        let expected = gamma_quarter.powi(8) / (960.0 * PI * PI);
        assert!((unit_eisenstein(4) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn zeros_and_origin() {
        let l = 1.0;
        for idx in [(1, 0), (2, -3), (0, 4)] {
            assert_eq!(weierstrass_sigma(site(l, idx), l, 1e-10).unwrap(), Complex64::new(0.0, 0.0));
        }
        let z = Complex64::new(1e-7, 2e-7);
        let r = weierstrass_sigma(z, l, 1e-10).unwrap() / z;
        assert!((r - 1.0).norm() < 1e-12);
        assert!(weierstrass_sigma(z, l, 1e-3).is_err());
    }

    #[test]
    fn product_matches_theta() {
        for l in [0.7, 1.0, 2.0] {
            for z in [Complex64::new(0.3, 0.2), Complex64::new(-2.1, 1.4), Complex64::new(3.0, -2.5)] {
                let a = weierstrass_sigma(z, l, 1e-12).unwrap();
                let b = sigma_theta(z, l);
                assert!((a - b).norm() < 1e-9 * b.norm(), "L={l} z={z}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn odd_and_stable_under_cutoff() {
        let l = 1.5;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let z = Complex64::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
            let a = weierstrass_sigma(z, l, 1e-10).unwrap();
            let b = weierstrass_sigma(-z, l, 1e-10).unwrap();
            assert!((a + b).norm() <= 1e-9 * a.norm());
            let t = TailSeries::for_radius(l, z.norm(), 1e-8, 0.0);
            let t2 = TailSeries::new(l, 2.0 * t.cutoff);
            let lo = orbit_log_product(z, l, t.cutoff) + t.log(z);
            let hi = orbit_log_product(z, l, t2.cutoff) + t2.log(z);
            assert!((lo.re - hi.re).abs() < 1e-8);
        }
    }

    #[test]
    fn lower_audit_positive_and_stable() {
        let coarse = sigma_lower_audit(1.0, &AuditGrid::new(4.0, 113)).unwrap();
        assert!(coarse.points > 9_500 && coarse.pass);
        let fine = sigma_lower_audit(1.0, &AuditGrid::new(4.0, 226)).unwrap();
        assert!(((fine.empirical_c - coarse.empirical_c) / coarse.empirical_c).abs() < 0.1);
    }
}
