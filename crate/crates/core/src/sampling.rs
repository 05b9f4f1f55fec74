//! Discrete sampling sums over zero sets, Marcinkiewicz–Zygmund frame
//! bounds for polynomials, Bessel-type audits and reconstruction through
//! the canonical product.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{fock_norm, FockFunction, QuadratureSpec};
use crate::gfunc::GFunction;
use crate::holes::{distance_to_set, largest_empty_disk};
use crate::lattice::sites_in_disk;
use crate::lattice::site;
use crate::linalg::{hermitian_eigenvalues, CMatrix};
use crate::scalar::{ln_factorial_table, log_star};
use crate::zeros::ZeroSet;

/// `omega(r) = exp(C sqrt(log* r) log*(log* r)^6)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub c_hat: f64,
}

impl WeightProfile {
    pub fn new(c_hat: f64) -> Self {
        Self { c_hat }
    }

    pub fn log_omega(&self, r: f64) -> f64 {
        let l = log_star(r);
        self.c_hat * l.sqrt() * log_star(l).powi(6)
    }

    pub fn omega(&self, r: f64) -> f64 {
        self.log_omega(r).exp()
    }
}

/// `sum_z w(|z|) |f(z)|^p e^{-p|z|^2/2}`, term by term in log space.
pub fn discrete_sum(f: &FockFunction<f64>, zeros: &[Complex64], p: f64, weight: Option<&WeightProfile>) -> f64 {
    zeros
        .iter()
        .map(|z| {
            let lw = weight.map_or(0.0, |w| w.log_omega(z.norm()));
            (p * f.log_weighted_modulus(*z) + lw).exp()
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameMethod {
    GramExact,
    /// One-sided empirical witnesses: `lower >= A_d`, `upper <= B_d`.
    ProbeBracket,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
    pub degree: usize,
    pub p: f64,
    pub method: FrameMethod,
    pub rank_deficient: bool,
}

impl FrameBounds {
    pub fn condition(&self) -> f64 {
        self.upper / self.lower
    }
}

/// `e_n(z) e^{-|z|^2/2}` for `n = 0..=d`.
fn weighted_basis(z: Complex64, d: usize, lnf: &[f64]) -> Vec<Complex64> {
    if z == Complex64::new(0.0, 0.0) {
        let mut v = vec![Complex64::new(0.0, 0.0); d + 1];
        v[0] = Complex64::new(1.0, 0.0);
        return v;
    }
    let (r, t) = z.to_polar();
    let lr = r.ln();
    (0..=d)
        .map(|n| Complex64::from_polar((n as f64 * lr - 0.5 * lnf[n] - 0.5 * r * r).exp(), n as f64 * t))
        .collect()
}

/// `G_mn = sum_z e_m(z) conj(e_n(z)) e^{-|z|^2}`.
pub fn gram_matrix(zeros: &[Complex64], d: usize) -> CMatrix<f64> {
    let lnf = ln_factorial_table(d + 1);
    let mut g = CMatrix::zeros(d + 1, d + 1);
    for z in zeros {
        let b = weighted_basis(*z, d, &lnf);
        for m in 0..=d {
            for n in 0..=d {
                g[(m, n)] += b[m] * b[n].conj();
            }
        }
    }
    g
}

/// Exact `p = 2` bounds from the Gram matrix eigenvalues.
pub fn frame_bounds_p2(zeros: &[Complex64], d: usize) -> FrameBounds {
    let ev = hermitian_eigenvalues(&gram_matrix(zeros, d));
    let rank_deficient = zeros.len() <= d;
    FrameBounds {
        lower: if rank_deficient { 0.0 } else { ev[0].max(0.0) },
        upper: ev[d].max(0.0),
        degree: d,
        p: 2.0,
        method: FrameMethod::GramExact,
        rank_deficient,
    }
}

/// Ratio of the discrete sum to `||f||_p^p` for coefficient vectors.
struct RatioEval<'a> {
    zeros: &'a [Complex64],
    p: f64,
    gram: Option<CMatrix<f64>>,
}

impl RatioEval<'_> {
    fn ratio(&self, c: &[Complex64]) -> Result<f64> {
        if let Some(g) = &self.gram {
            // sum |sum_n c_n e_n(z)|^2 e^{-|z|^2} = c^T G conj(c)
            let cc: Vec<Complex64> = c.iter().map(|x| x.conj()).collect();
            let gc = g.mul_vec(&cc);
            let num: f64 = c.iter().zip(&gc).map(|(a, b)| (a * b).re).sum();
            let den: f64 = c.iter().map(|x| x.norm_sqr()).sum();
            return Ok(num / den);
        }
        let f = FockFunction::new(c.to_vec())?;
        let q = QuadratureSpec::for_function(&f, self.p);
        let norm = fock_norm(&f, self.p, &q)?.value;
        Ok(discrete_sum(&f, self.zeros, self.p, None) / norm.powf(self.p))
    }
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = (0..=d)
        .map(|_| {
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            Complex64::new(a, b)
        })
        .collect();
    let n = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    c.iter_mut().for_each(|x| *x /= n);
    c
}

/// Coordinate-wise pattern search on the real and imaginary parts.
fn refine(eval: &RatioEval, mut c: Vec<Complex64>, mut best: f64, maximize: bool, rounds: usize) -> Result<f64> {
    let better = |a: f64, b: f64| if maximize { a > b } else { a < b };
    let mut step = 0.3;
    for _ in 0..rounds {
        let mut improved = false;
        for k in 0..c.len() {
            for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                for sign in [1.0, -1.0] {
                    let mut trial = c.clone();
                    trial[k] += dir * (sign * step);
                    let r = eval.ratio(&trial)?;
                    if better(r, best) {
                        best = r;
                        c = trial;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(best)
}

/// Empirical bracket for general `p` from random unit-norm polynomials,
/// refining the extreme candidates by local search.
pub fn probe_bounds(zeros: &[Complex64], d: usize, p: f64, probes: usize, seed: u64) -> Result<FrameBounds> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p must be >= 1, got {p}")));
    }
    if probes == 0 {
        return Err(Error::InsufficientPoints { needed: 1, got: 0 });
    }
    let eval = RatioEval {
        zeros,
        p,
        gram: (p == 2.0).then(|| gram_matrix(zeros, d)),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scored: Vec<(f64, Vec<Complex64>)> = Vec::with_capacity(probes);
    for _ in 0..probes {
        let c = random_unit(&mut rng, d);
        scored.push((eval.ratio(&c)?, c));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let rounds = if p == 2.0 { 12 } else { 3 };
    let keep = if p == 2.0 { 3 } else { 1 };
    let mut lower = scored[0].0;
    let mut upper = scored[scored.len() - 1].0;
    if d > 0 {
        for (r, c) in scored.iter().take(keep) {
            lower = lower.min(refine(&eval, c.clone(), *r, false, rounds)?);
        }
        for (r, c) in scored.iter().rev().take(keep) {
            upper = upper.max(refine(&eval, c.clone(), *r, true, rounds)?);
        }
    }
    Ok(FrameBounds {
        lower,
        upper,
        degree: d,
        p,
        method: FrameMethod::ProbeBracket,
        rank_deficient: zeros.len() <= d,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselReport {
    pub degree: usize,
    pub p: f64,
    pub max_ratio: f64,
    /// `max_ratio / sqrt(log* d)`.
    pub normalized: f64,
}

/// Largest probed ratio `sum / ||f||_p^p` over degree-`d` polynomials.
pub fn bessel_audit(zeros: &ZeroSet, d: usize, p: f64, probes: usize, seed: u64) -> Result<BesselReport> {
    let needed = (d as f64 + 3.0).sqrt();
    if zeros.disk_radius < needed {
        return Err(Error::Domain(format!(
            "zero set radius {} below sqrt(d + 3) = {needed}",
            zeros.disk_radius
        )));
    }
    let max_ratio = if zeros.is_empty() {
        0.0
    } else {
        probe_bounds(&zeros.points, d, p, probes, seed)?.upper
    };
    Ok(BesselReport {
        degree: d,
        p,
        max_ratio,
        normalized: max_ratio / log_star(d as f64).sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub values: Vec<Complex64>,
    /// Heuristic (uncertified) size of the truncated part of the series.
    pub tail_bound: f64,
}

/// `f(z) = sum_A f(z_mn) / g'(z_mn) * g(z) / (z - z_mn)` over the good
/// indices kept by `g`.
pub fn reconstruct(samples: &BTreeMap<(i64, i64), Complex64>, g: &GFunction, queries: &[Complex64]) -> Result<Reconstruction> {
    let l = g.intensity();
    if !(l > 1.0) {
        return Err(Error::Domain(format!("reconstruction needs L > 1, got {l}")));
    }
    let missing: Vec<(i64, i64)> = g
        .factors()
        .iter()
        .map(|f| f.index)
        .filter(|i| !samples.contains_key(i))
        .collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteData(missing));
    }
    let terms: Vec<(Complex64, Complex64, Complex64)> = g
        .factors()
        .iter()
        .map(|f| Ok((f.zero, samples[&f.index], g.log_derivative_at(f.index)?)))
        .collect::<Result<_>>()?;
    let values = queries
        .iter()
        .map(|q| {
            if let Some((_, v, _)) = terms.iter().find(|(z, _, _)| (q - z).norm() < 1e-8) {
                return Ok(*v);
            }
            let lg = g.log_eval(*q)?;
            Ok(terms
                .iter()
                .map(|(z, v, ld)| *v * (lg - ld - (q - z).ln()).exp())
                .sum())
        })
        .collect::<Result<Vec<Complex64>>>()?;
    let max_weight = terms
        .iter()
        .map(|(z, v, _)| v.norm() * (-0.5 * z.norm_sqr()).exp())
        .fold(0.0, f64::max);
    let m = g.cutoff();
    let far = (m + 2.0 * (60.0 / (l - 1.0)).sqrt() + 2.0).max(2.0 * m);
    let tail: f64 = sites_in_disk(l, far)
        .into_iter()
        .map(|i| site(l, i).norm())
        .filter(|r| *r > m)
        .map(|r| (-(l - 1.0) * r * r / 4.0).exp())
        .sum();
    Ok(Reconstruction {
        values,
        tail_bound: tail * max_weight,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightProbe {
    pub center: Complex64,
    pub hole_radius: f64,
    /// `sum_z |T_a 1(z)|^p e^{-p|z|^2/2}` (the norm of `T_a 1` is 1).
    pub sum: f64,
    pub weighted_sum: f64,
}

/// Discrete sum of the normalised reproducing kernel `T_a 1` centred in a
/// hole of the zero set (the largest empty disk when `a` is not given).
pub fn weight_optimality_probe(zeros: &ZeroSet, region: f64, a: Option<Complex64>, p: f64, weight: &WeightProfile) -> Result<WeightProbe> {
    if region > zeros.disk_radius {
        return Err(Error::Domain(format!("region {region} exceeds zero-set radius {}", zeros.disk_radius)));
    }
    let (center, hole) = match a {
        Some(a) if a.norm() <= region => (a, distance_to_set(a, &zeros.points)),
        Some(a) => {
            return Err(Error::Domain(format!("|a| = {} outside the region {region}", a.norm())));
        }
        None => largest_empty_disk(&zeros.points, region, 128),
    };
    let f = crate::fock::bargmann_shift(&FockFunction::one(), center);
    Ok(WeightProbe {
        center,
        hole_radius: hole,
        sum: discrete_sum(&f, &zeros.points, p, None),
        weighted_sum: discrete_sum(&f, &zeros.points, p, Some(weight)),
    })
}
