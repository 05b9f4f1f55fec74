//! Zeros of truncated GEF samples: Aberth–Ehrlich iteration on a rescaled
//! polynomial, Newton polishing and an argument-principle count.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gef::{eval_gef, GefSample};

/// Largest accepted residual `|F*(z)|` on a certified zero set.
pub const RESIDUAL_THRESHOLD: f64 = 1e-8;
/// Roots closer than this are merged into one point with multiplicity.
pub const MERGE_DISTANCE: f64 = 1e-7;
const MAX_SWEEPS: usize = 600;
const CONTOUR_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroSource {
    pub seed: u64,
    pub intensity: f64,
    pub truncation: usize,
}

/// Zeros of a sample inside `|z| <= disk_radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub points: Vec<Complex64>,
    pub multiplicities: Vec<usize>,
    /// Points within `1e-9` of the boundary circle.
    pub on_boundary: Vec<bool>,
    pub disk_radius: f64,
    pub source: Option<ZeroSource>,
    pub certified: bool,
    pub residuals: Vec<f64>,
    /// Winding count and the (possibly nudged) contour radius it refers to.
    pub winding: Option<(usize, f64)>,
    pub diagnostic: Option<String>,
}

impl ZeroSet {
    /// Plain point set (fixtures, lattices, Poisson samples).
    pub fn from_points(points: Vec<Complex64>, disk_radius: f64) -> Self {
        let n = points.len();
        Self {
            on_boundary: points.iter().map(|z| (z.norm() - disk_radius).abs() <= 1e-9).collect(),
            multiplicities: vec![1; n],
            residuals: vec![0.0; n],
            points,
            disk_radius,
            source: None,
            certified: false,
            winding: None,
            diagnostic: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of zeros counted with multiplicity.
    pub fn count_with_multiplicity(&self) -> usize {
        self.multiplicities.iter().sum()
    }
}

/// Polynomial in `w` with coefficients `b_k` normalised so `max |b_k| = 1`.
struct ScaledPoly {
    b: Vec<Complex64>,
    abs_b: Vec<f64>,
}

impl ScaledPoly {
    fn from_sample(sample: &GefSample, scale: f64) -> Option<Self> {
        let ls = scale.ln();
        let lm: Vec<f64> = sample
            .log_magnitudes()
            .iter()
            .enumerate()
            .map(|(k, m)| m + k as f64 * ls)
            .collect();
        let max = lm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // coefficients below e^-700 of the largest cannot move roots in |w| <= 1
        let degree = lm.iter().rposition(|m| m - max > -700.0)?;
        let b: Vec<Complex64> = (0..=degree)
            .map(|k| sample.phases()[k] * (lm[k] - max).exp())
            .collect();
        let abs_b = b.iter().map(|c| c.norm()).collect();
        Some(Self { b, abs_b })
    }

    fn degree(&self) -> usize {
        self.b.len() - 1
    }

    /// `(p(w), p'(w)/p(w)` computed stably, backward-error scale `sum |b_k||w|^k`)`.
    fn newton_data(&self, w: Complex64) -> (Complex64, f64) {
        let n = self.degree();
        if w.norm() <= 1.0 {
            let mut p = self.b[n];
            let mut dp = Complex64::new(0.0, 0.0);
            let mut scale = self.abs_b[n];
            let aw = w.norm();
            for k in (0..n).rev() {
                dp = dp * w + p;
                p = p * w + self.b[k];
                scale = scale * aw + self.abs_b[k];
            }
            (p / dp, (p.norm() / scale))
        } else {
            // p(w) = w^n q(1/w), q reversed
            let u = w.inv();
            let mut q = self.b[0];
            let mut dq = Complex64::new(0.0, 0.0);
            let mut scale = self.abs_b[0];
            let au = u.norm();
            for k in 1..=n {
                dq = dq * u + q;
                q = q * u + self.b[k];
                scale = scale * au + self.abs_b[k];
            }
            // p'/p = u (n - u q'/q)
            let ratio = u * (n as f64 - u * dq / q);
            (ratio.inv(), q.norm() / scale)
        }
    }
}

/// Initial guesses from the upper convex hull of `(k, log|b_k|)`.
fn newton_polygon_guesses(poly: &ScaledPoly) -> Vec<Complex64> {
    let n = poly.degree();
    let pts: Vec<(f64, f64)> = poly
        .abs_b
        .iter()
        .enumerate()
        .filter(|(_, a)| **a > 0.0)
        .map(|(k, a)| (k as f64, a.ln()))
        .collect();
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut guesses = Vec::with_capacity(n);
    let lowest = hull[0].0 as usize;
    // zero coefficients at the bottom are exact roots at the origin
    guesses.extend((0..lowest).map(|m| Complex64::from_polar(1e-3, 2.0 * PI * m as f64 / lowest as f64 + 0.4)));
    for (e, pair) in hull.windows(2).enumerate() {
        let (i, j) = (pair[0], pair[1]);
        let count = (j.0 - i.0) as usize;
        let radius = ((i.1 - j.1) / (j.0 - i.0)).exp();
        for m in 0..count {
            let angle = 2.0 * PI * m as f64 / count as f64 + 2.0 * PI * e as f64 / n as f64 + 0.4;
            guesses.push(Complex64::from_polar(radius, angle));
        }
    }
    guesses
}

/// Simultaneous Aberth–Ehrlich iteration. Roots with `|w| <= keep_radius`
/// must converge; far roots only matter through their repulsion terms.
fn aberth(poly: &ScaledPoly, keep_radius: f64) -> Result<Vec<Complex64>> {
    let n = poly.degree();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut w = newton_polygon_guesses(poly);
    let mut done = vec![false; n];
    let mut trace = Vec::new();
    for _ in 0..MAX_SWEEPS {
        let mut max_corr: f64 = 0.0;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (ratio, backward) = poly.newton_data(w[i]);
            if backward <= 64.0 * f64::EPSILON || !ratio.re.is_finite() {
                done[i] = true;
                continue;
            }
            let mut repulsion = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    repulsion += (w[i] - w[j]).inv();
                }
            }
            let corr = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !corr.re.is_finite() || !corr.im.is_finite() {
                continue;
            }
            w[i] -= corr;
            let size = corr.norm() / w[i].norm().max(1.0);
            max_corr = max_corr.max(size);
            if size <= 4.0 * f64::EPSILON {
                done[i] = true;
            }
        }
        trace.push(max_corr);
        if done.iter().all(|d| *d) {
            return Ok(w);
        }
    }
    let unconverged = (0..n).filter(|&i| !done[i] && w[i].norm() <= keep_radius).count();
    if unconverged == 0 {
        return Ok(w);
    }
    Err(Error::NonConvergence {
        iterations: MAX_SWEEPS,
        unconverged,
        trace,
    })
}

/// Newton steps on the full sample; a step is kept only if it lowers `|F*|`.
fn polish(sample: &GefSample, z0: Complex64) -> (Complex64, f64) {
    let residual = |z: Complex64| eval_gef(sample, z, true).map(|v| v.norm()).unwrap_or(f64::INFINITY);
    let mut z = z0;
    let mut r = residual(z);
    for _ in 0..8 {
        let (v, d, _) = sample.scaled_value_and_derivative(z);
        if d.norm() == 0.0 {
            break;
        }
        let step = v / d;
        let cand = z - step;
        let rc = residual(cand);
        if rc < r {
            z = cand;
            r = rc;
        } else {
            break;
        }
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    (z, r)
}

fn merge_clusters(points: &[(Complex64, f64)]) -> Vec<(Complex64, usize, f64)> {
    let mut out: Vec<(Complex64, usize, f64)> = Vec::new();
    for &(z, r) in points {
        if let Some(c) = out.iter_mut().find(|c| (c.0 - z).norm() < MERGE_DISTANCE) {
            c.0 = (c.0 * c.1 as f64 + z) / (c.1 + 1) as f64;
            c.1 += 1;
            c.2 = c.2.max(r);
        } else {
            out.push((z, 1, r));
        }
    }
    out
}

/// All zeros of the sample in `|z| <= radius`, certified against the
/// argument principle.
pub fn find_zeros(sample: &GefSample, radius: f64) -> Result<ZeroSet> {
    let scale = radius + 0.5;
    if !(radius > 0.0) || scale > sample.validity_radius() + 1e-12 {
        return Err(Error::Domain(format!(
            "need 0 < R and R + 0.5 <= validity radius {} (R = {radius})",
            sample.validity_radius()
        )));
    }
    let poly = ScaledPoly::from_sample(sample, scale).ok_or_else(|| Error::Domain("zero polynomial".into()))?;
    let roots_w = aberth(&poly, radius / scale * 1.05)?;
    let winding = winding_count_detailed(sample, radius);
    let candidates: Vec<Complex64> = roots_w.iter().map(|w| w * scale).collect();
    let polished: Vec<(Complex64, f64)> = candidates
        .iter()
        .filter(|z| z.norm() <= radius * 1.1 + 0.1)
        .map(|z| polish(sample, *z))
        .collect();
    let merged = merge_clusters(&polished);
    let source = Some(ZeroSource {
        seed: sample.seed(),
        intensity: sample.intensity(),
        truncation: sample.truncation(),
    });
    let inside: Vec<&(Complex64, usize, f64)> = merged.iter().filter(|c| c.0.norm() <= radius + 1e-9).collect();
    let mut set = ZeroSet {
        points: inside.iter().map(|c| c.0).collect(),
        multiplicities: inside.iter().map(|c| c.1).collect(),
        on_boundary: inside.iter().map(|c| (c.0.norm() - radius).abs() <= 1e-9).collect(),
        disk_radius: radius,
        source,
        certified: false,
        residuals: inside.iter().map(|c| c.2).collect(),
        winding: None,
        diagnostic: None,
    };
    match winding {
        Ok((count, used)) => {
            let in_contour: usize = merged.iter().filter(|c| c.0.norm() <= used).map(|c| c.1).sum();
            set.winding = Some((count, used));
            let residual_ok = set.residuals.iter().all(|r| *r < RESIDUAL_THRESHOLD);
            if count == in_contour && residual_ok {
                set.certified = true;
            } else if count != in_contour {
                set.diagnostic = Some(format!(
                    "winding count {count} on |z| = {used} but {in_contour} roots found inside"
                ));
            } else {
                set.diagnostic = Some("residual above threshold".into());
            }
            if sample.seed() != 0 && set.multiplicities.iter().any(|m| *m > 1) {
                let note = "multiple root in a random sample (likely numerical)";
                set.diagnostic = Some(match set.diagnostic.take() {
                    Some(d) => format!("{d}; {note}"),
                    None => note.to_string(),
                });
            }
        }
        Err(e) => set.diagnostic = Some(e.to_string()),
    }
    Ok(set)
}

/// Argument increment of `F*` along `|z| = r` and the smallest modulus seen.
fn contour_winding(sample: &GefSample, r: f64) -> Result<(f64, f64)> {
    let n0 = (8 * sample.truncation()).clamp(256, 8192);
    let at = |t: f64| eval_gef(sample, Complex64::from_polar(r, t), true);
    let mut total = 0.0;
    let mut min_mod = f64::INFINITY;
    let mut prev_t = 0.0;
    let mut prev = at(0.0)?;
    min_mod = min_mod.min(prev.norm());
    for k in 1..=n0 {
        let t = 2.0 * PI * k as f64 / n0 as f64;
        let v = at(t)?;
        let (inc, m) = refine(&at, prev_t, prev, t, v, 0)?;
        total += inc;
        min_mod = min_mod.min(m).min(v.norm());
        prev_t = t;
        prev = v;
    }
    Ok((total, min_mod))
}

fn refine(
    at: &impl Fn(f64) -> Result<Complex64>,
    t0: f64,
    v0: Complex64,
    t1: f64,
    v1: Complex64,
    depth: usize,
) -> Result<(f64, f64)> {
    let step = (v1 / v0).arg();
    if step.abs() < FRAC_PI_4 || depth >= 40 {
        return Ok((step, v0.norm().min(v1.norm())));
    }
    let tm = 0.5 * (t0 + t1);
    let vm = at(tm)?;
    let (a, ma) = refine(at, t0, v0, tm, vm, depth + 1)?;
    let (b, mb) = refine(at, tm, vm, t1, v1, depth + 1)?;
    Ok((a + b, ma.min(mb)))
}

fn winding_count_detailed(sample: &GefSample, radius: f64) -> Result<(usize, f64)> {
    if !(radius > 0.0) || radius + 0.1 > sample.validity_radius() + 1e-12 {
        return Err(Error::Domain(format!(
            "need R + 0.1 <= validity radius {} (R = {radius})",
            sample.validity_radius()
        )));
    }
    let (total, min_mod) = contour_winding(sample, radius)?;
    if min_mod >= CONTOUR_FLOOR {
        return Ok((round_winding(total), radius));
    }
    let mut worst = min_mod;
    for j in 1..=4 {
        for sign in [1.0, -1.0] {
            let r = radius * (1.0 + sign * 0.003 * j as f64);
            if r + 0.1 > sample.validity_radius() {
                continue;
            }
            let (total, m) = contour_winding(sample, r)?;
            if m >= CONTOUR_FLOOR {
                return Ok((round_winding(total), r));
            }
            worst = worst.max(m);
        }
    }
    Err(Error::ContourThroughZero {
        radius,
        min_modulus: worst,
    })
}

fn round_winding(total: f64) -> usize {
    (total / (2.0 * PI)).round().max(0.0) as usize
}

/// Number of zeros of `F` inside `|z| = R` (or a nudged radius when the
/// contour passes too close to a zero; see [`winding_count_with_radius`]).
pub fn winding_count(sample: &GefSample, radius: f64) -> Result<usize> {
    winding_count_detailed(sample, radius).map(|(c, _)| c)
}

/// Winding count together with the contour radius actually used.
pub fn winding_count_with_radius(sample: &GefSample, radius: f64) -> Result<(usize, f64)> {
    winding_count_detailed(sample, radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gef::sample_gef;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quadratic() {
        let s = GefSample::from_coefficients(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 3.0).unwrap();
        let z = find_zeros(&s, 2.0).unwrap();
        assert!(z.certified, "{:?}", z.diagnostic);
        let mut pts = z.points.clone();
        pts.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((pts[0] - c(-1.0, 0.0)).norm() < 1e-14 && (pts[1] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn triple_root() {
        let s = GefSample::from_coefficients(&[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 3.0).unwrap();
        let z = find_zeros(&s, 1.0).unwrap();
        assert_eq!(z.count_with_multiplicity(), 3);
        assert!(z.points.iter().all(|p| p.norm() < 1e-5));
        assert_eq!(winding_count(&s, 1.0).unwrap(), 3);
        assert!(z.certified);
    }

    #[test]
    fn winding_examples() {
        for k in 0..5 {
            let mut coef = vec![c(0.0, 0.0); k + 1];
            coef[k] = c(1.0, 0.0);
            let s = GefSample::from_coefficients(&coef, 4.0).unwrap();
            assert_eq!(winding_count(&s, 1.7).unwrap(), k);
        }
        // (z - 0.5)(z - 2) = z^2 - 2.5 z + 1
        let s = GefSample::from_coefficients(&[c(1.0, 0.0), c(-2.5, 0.0), c(1.0, 0.0)], 4.0).unwrap();
        assert_eq!(winding_count(&s, 1.0).unwrap(), 1);
    }

    #[test]
    fn gef_zeros_certified() {
        for seed in 1..6 {
            let s = sample_gef(1.0, 4.0, 1e-12, seed).unwrap();
            let z = find_zeros(&s, 4.0).unwrap();
            assert!(z.certified, "seed {seed}: {:?}", z.diagnostic);
            assert!(z.residuals.iter().all(|r| *r < RESIDUAL_THRESHOLD));
        }
    }
}
