//! k-point intensities of zeros of Gaussian analytic functions
//! `F(z) = sum_n a_n zeta_n z^n`: covariance blocks, confluent determinants,
//! the Kac–Rice/permanent formula, a Monte Carlo oracle and the explicit
//! intensity bound.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, determinant, permanent, CMatrix, Lu, MAX_PERMANENT_SIZE};
use crate::scalar::ln_factorial;

#[derive(Clone, Debug, PartialEq)]
pub enum GafModel {
    /// `a_n = L^{n/2} / sqrt(n!)`.
    Gef { intensity: f64 },
    /// `a_n = 1`; covariance `1 / (1 - z conj(w))`.
    Hyperbolic,
    /// Finitely many nonnegative coefficients.
    Truncated(Vec<f64>),
}

impl GafModel {
    pub fn gef(intensity: f64) -> Self {
        GafModel::Gef { intensity }
    }

    pub fn truncated(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::Domain("coefficients must be finite and nonnegative".into()));
        }
        Ok(GafModel::Truncated(a))
    }

    /// `a_n`.
    pub fn coefficient(&self, n: usize) -> f64 {
        match self {
            GafModel::Gef { intensity } => (0.5 * n as f64 * intensity.ln() - 0.5 * ln_factorial::<f64>(n)).exp(),
            GafModel::Hyperbolic => 1.0,
            GafModel::Truncated(a) => a.get(n).copied().unwrap_or(0.0),
        }
    }
}

/// Covariance of `(F(z_1..z_k), F'(z_1..z_k))`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceBlock {
    pub k: usize,
    /// `E[F(z_i) conj F(z_j)]`.
    pub a: CMatrix<f64>,
    /// `E[F(z_i) conj F'(z_j)]`.
    pub b: CMatrix<f64>,
    /// `E[F'(z_i) conj F'(z_j)]`.
    pub d: CMatrix<f64>,
    /// True when two points coincide (the block is singular).
    pub coincident: bool,
}

impl CovarianceBlock {
    /// `[[A, B], [B*, D]]`.
    pub fn gamma(&self) -> CMatrix<f64> {
        CMatrix::block(&self.a, &self.b, &self.b.adjoint(), &self.d)
    }

    /// `D - B* A^{-1} B`, the conditional covariance of the derivatives.
    pub fn schur_complement(&self) -> Result<CMatrix<f64>> {
        if self.coincident {
            return Err(Error::CoincidentPoints);
        }
        let lu = Lu::new(&self.a);
        if lu.is_singular() {
            return Err(Error::CoincidentPoints);
        }
        let ainv_b = {
            let mut out = CMatrix::zeros(self.k, self.k);
            for j in 0..self.k {
                let col: Vec<Complex64> = (0..self.k).map(|i| self.b[(i, j)]).collect();
                let x = lu.solve(&col)?;
                for i in 0..self.k {
                    out[(i, j)] = x[i];
                }
            }
            out
        };
        Ok(self.d.sub(&self.b.adjoint().matmul(&ainv_b)))
    }
}

fn has_coincident(points: &[Complex64]) -> bool {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i] == points[j] {
                return true;
            }
        }
    }
    false
}

/// Covariance block at the given points.
pub fn gamma_matrix(model: &GafModel, points: &[Complex64]) -> Result<CovarianceBlock> {
    let k = points.len();
    if k == 0 {
        return Err(Error::InsufficientPoints { needed: 1, got: 0 });
    }
    if matches!(model, GafModel::Hyperbolic) {
        if let Some(z) = points.iter().find(|z| z.norm() >= 1.0) {
            return Err(Error::Domain(format!(
                "hyperbolic covariance diverges at |z| = {} >= 1",
                z.norm()
            )));
        }
    }
    let one = Complex64::new(1.0, 0.0);
    let (a, b, d) = match model {
        GafModel::Gef { intensity: l } => {
            let l = *l;
            let e = |i: usize, j: usize| (l * points[i] * points[j].conj()).exp();
            (
                CMatrix::from_fn(k, k, e),
                CMatrix::from_fn(k, k, |i, j| l * points[i] * e(i, j)),
                CMatrix::from_fn(k, k, |i, j| l * (one + l * points[i] * points[j].conj()) * e(i, j)),
            )
        }
        GafModel::Hyperbolic => {
            let q = |i: usize, j: usize| one - points[i] * points[j].conj();
            (
                CMatrix::from_fn(k, k, |i, j| q(i, j).inv()),
                CMatrix::from_fn(k, k, |i, j| points[i] / q(i, j).powu(2)),
                CMatrix::from_fn(k, k, |i, j| (one + points[i] * points[j].conj()) / q(i, j).powu(3)),
            )
        }
        GafModel::Truncated(coef) => {
            let a2: Vec<f64> = coef.iter().map(|x| x * x).collect();
            let sum = |i: usize, j: usize, kind: u8| {
                let x = points[i] * points[j].conj();
                let mut acc = Complex64::new(0.0, 0.0);
                for (n, w) in a2.iter().enumerate() {
                    let nf = n as f64;
                    acc += match kind {
                        0 => *w * x.powu(n as u32),
                        1 if n >= 1 => *w * nf * points[i] * x.powu(n as u32 - 1),
                        2 if n >= 1 => *w * nf * nf * x.powu(n as u32 - 1),
                        _ => Complex64::new(0.0, 0.0),
                    };
                }
                acc
            };
            (
                CMatrix::from_fn(k, k, |i, j| sum(i, j, 0)),
                CMatrix::from_fn(k, k, |i, j| sum(i, j, 1)),
                CMatrix::from_fn(k, k, |i, j| sum(i, j, 2)),
            )
        }
    };
    Ok(CovarianceBlock {
        k,
        a,
        b,
        d,
        coincident: has_coincident(points),
    })
}

/// Closed-form and direct (LU) determinants of the confluent Vandermonde
/// and Cauchy matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfluentDeterminants {
    pub det_mv: Complex64,
    pub det_mv_direct: Complex64,
    pub det_mc: Option<f64>,
    pub det_mc_direct: Option<Complex64>,
}

/// The `2k x 2k` confluent Vandermonde matrix (values over derivatives).
pub fn confluent_vandermonde(points: &[Complex64]) -> CMatrix<f64> {
    let k = points.len();
    CMatrix::from_fn(2 * k, 2 * k, |r, j| {
        if r < k {
            points[r].powu(j as u32)
        } else if j == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            j as f64 * points[r - k].powu(j as u32 - 1)
        }
    })
}

/// The `2k x 2k` confluent Cauchy matrix (the hyperbolic covariance block).
pub fn confluent_cauchy(points: &[Complex64]) -> Result<CMatrix<f64>> {
    Ok(gamma_matrix(&GafModel::Hyperbolic, points)?.gamma())
}

pub fn confluent_determinants(points: &[Complex64]) -> Result<ConfluentDeterminants> {
    let k = points.len();
    let mut prod = Complex64::new(1.0, 0.0);
    let mut prod_abs8 = 1.0;
    for i in 0..k {
        for j in i + 1..k {
            let d = points[j] - points[i];
            prod *= d.powu(4);
            prod_abs8 *= d.norm().powi(8);
        }
    }
    let sign = if (k * (k.saturating_sub(1)) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let det_mv = prod * sign;
    let det_mv_direct = determinant(&confluent_vandermonde(points));
    let inside = points.iter().all(|z| z.norm() < 1.0);
    let (det_mc, det_mc_direct) = if inside {
        let mut denom = Complex64::new(1.0, 0.0);
        for zi in points {
            for zj in points {
                denom *= (Complex64::new(1.0, 0.0) - zi * zj.conj()).powu(4);
            }
        }
        // the denominator is real and positive (a product over conjugate pairs)
        (Some(prod_abs8 / denom.re), Some(determinant(&confluent_cauchy(points)?)))
    } else {
        (None, None)
    };
    Ok(ConfluentDeterminants {
        det_mv,
        det_mv_direct,
        det_mc,
        det_mc_direct,
    })
}

/// `det M_C` closed form; requires all points in the unit disc.
pub fn cauchy_determinant(points: &[Complex64]) -> Result<f64> {
    if let Some(z) = points.iter().find(|z| z.norm() >= 1.0) {
        return Err(Error::Domain(format!("M_C needs |z| < 1, got {}", z.norm())));
    }
    Ok(confluent_determinants(points)?.det_mc.expect("inside the disc"))
}

/// `rho_k = per(D - B* A^{-1} B) / (pi^k det A)`.
pub fn rho_k(model: &GafModel, points: &[Complex64]) -> Result<f64> {
    let k = points.len();
    if k > MAX_PERMANENT_SIZE {
        return Err(Error::Unsupported(format!("k = {k} exceeds {MAX_PERMANENT_SIZE}")));
    }
    let block = gamma_matrix(model, points)?;
    let schur = block.schur_complement()?;
    let per = permanent(&schur)?;
    let det_a = Lu::new(&block.a).determinant();
    if !(det_a.re > 0.0) {
        return Err(Error::CoincidentPoints);
    }
    let scale: f64 = (0..k).map(|i| schur[(i, i)].re.abs()).product();
    let mut value = per.re / (std::f64::consts::PI.powi(k as i32) * det_a.re);
    if value < 0.0 && per.re.abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE) {
        value = 0.0;
    }
    Ok(value)
}

/// Determinantal closed form for the hyperbolic zeros:
/// `pi^{-k} det[(1 - z_i conj z_j)^{-2}]`.
pub fn hyperbolic_rho_closed_form(points: &[Complex64]) -> Result<f64> {
    if let Some(z) = points.iter().find(|z| z.norm() >= 1.0) {
        return Err(Error::Domain(format!("needs |z| < 1, got {}", z.norm())));
    }
    let k = points.len();
    let m = CMatrix::from_fn(k, k, |i, j| (Complex64::new(1.0, 0.0) - points[i] * points[j].conj()).powu(2).inv());
    Ok(determinant(&m).re / std::f64::consts::PI.powi(k as i32))
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
    pub samples: usize,
}

const ORACLE_BLOCK: usize = 10_000;
/// Inflation of the proposal covariance relative to the conditional one.
const PROPOSAL_INFLATION: f64 = 1.25;

/// Importance-sampling estimate of
/// `(1/(pi^{2k} det Gamma)) int |eta_1..eta_k|^2 exp(-<Gamma^{-1} eta', eta'>) dA^k(eta)`,
/// `eta' = (0, .., 0, eta)`, drawing `eta` from a complex Gaussian with
/// covariance `c (Gamma^{-1})_{DD}^{-1}`, `c > 1`.
pub fn rho_k_oracle(model: &GafModel, points: &[Complex64], samples: usize, seed: u64) -> Result<McEstimate> {
    let k = points.len();
    if k > 2 {
        return Err(Error::Unsupported(format!("Monte Carlo oracle limited to k <= 2 (got {k})")));
    }
    if samples < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: samples });
    }
    let block = gamma_matrix(model, points)?;
    // (Gamma^{-1})_{DD} is the inverse of the Schur complement of A
    let cond_cov = block.schur_complement()?;
    let precision = Lu::new(&cond_cov).inverse()?;
    let det_a = Lu::new(&block.a).determinant().re;
    let det_s = Lu::new(&cond_cov).determinant().re;
    let det_gamma = det_a * det_s;
    if !(det_gamma > 0.0) {
        return Err(Error::CoincidentPoints);
    }
    let proposal = cond_cov.scale(PROPOSAL_INFLATION);
    let chol = cholesky(&proposal)?;
    let det_prop = det_s * PROPOSAL_INFLATION.powi(k as i32);
    let pi = std::f64::consts::PI;
    let proposal_precision = precision.scale(1.0 / PROPOSAL_INFLATION);
    let blocks = samples.div_ceil(ORACLE_BLOCK);
    let partial: Vec<(f64, f64, usize)> = (0..blocks)
        .into_par_iter()
        .map(|bi| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(bi as u64);
            let n = ORACLE_BLOCK.min(samples - bi * ORACLE_BLOCK);
            let (mut s1, mut s2) = (0.0, 0.0);
            let mut xi = vec![Complex64::new(0.0, 0.0); k];
            for _ in 0..n {
                for x in xi.iter_mut() {
                    let g1: f64 = StandardNormal.sample(&mut rng);
                    let g2: f64 = StandardNormal.sample(&mut rng);
                    *x = Complex64::new(g1, g2) * std::f64::consts::FRAC_1_SQRT_2;
                }
                let eta = chol.mul_vec(&xi);
                let quad = quadratic_form(&precision, &eta);
                let quad_prop = quadratic_form(&proposal_precision, &eta);
                let prod: f64 = eta.iter().map(|e| e.norm_sqr()).product();
                // integrand / proposal density
                let w = prod * (-quad + quad_prop).exp() * pi.powi(k as i32) * det_prop;
                s1 += w;
                s2 += w * w;
            }
            (s1, s2, n)
        })
        .collect();
    let (mut s1, mut s2, mut n) = (0.0, 0.0, 0usize);
    for (a, b, c) in partial {
        s1 += a;
        s2 += b;
        n += c;
    }
    let norm = pi.powi(2 * k as i32) * det_gamma;
    let mean = s1 / n as f64;
    let var = (s2 / n as f64 - mean * mean).max(0.0) * n as f64 / (n - 1) as f64;
    Ok(McEstimate {
        value: mean / norm,
        std_err: (var / n as f64).sqrt() / norm,
        samples: n,
    })
}

fn quadratic_form(m: &CMatrix<f64>, v: &[Complex64]) -> f64 {
    let mv = m.mul_vec(v);
    v.iter().zip(&mv).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Product bound audit: `(lhs, rhs, lhs <= rhs)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundAudit {
    pub lhs: f64,
    pub rhs: f64,
    /// `ln rhs` (the bound itself may overflow).
    pub log_rhs: f64,
    pub pass: bool,
}

/// Compare `rho_k` with the explicit bound
/// `(sup_n a_n (2 tau)^n / min_{n<2k} a_n)^{4k} prod_{i<j} |z_i - z_j|^2`
/// (for the GEF: `(2k)^{4k^2} e^{8 tau^2 L k} max(1, L^{-4k^2}) prod |z_i - z_j|^2`).
pub fn rho_bound_audit(model: &GafModel, points: &[Complex64], tau: f64) -> Result<BoundAudit> {
    let k = points.len();
    if !(tau >= 2.0) {
        return Err(Error::Domain(format!("tau must be >= 2, got {tau}")));
    }
    if let Some(z) = points.iter().find(|z| z.norm() >= tau) {
        return Err(Error::Domain(format!("point {z} outside B_tau(0)")));
    }
    let mut log_pairs = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            log_pairs += 2.0 * (points[i] - points[j]).norm().ln();
        }
    }
    let kf = k as f64;
    let log_const = match model {
        GafModel::Gef { intensity: l } => {
            4.0 * kf * kf * (2.0 * kf).ln() + 8.0 * tau * tau * l * kf + (4.0 * kf * kf * (-l.ln())).max(0.0)
        }
        GafModel::Hyperbolic => f64::INFINITY,
        GafModel::Truncated(a) => {
            let min = (0..2 * k).map(|n| a.get(n).copied().unwrap_or(0.0)).fold(f64::INFINITY, f64::min);
            if min == 0.0 {
                return Err(Error::DegenerateModel(format!(
                    "a coefficient a_n with n < 2k = {} vanishes",
                    2 * k
                )));
            }
            let sup = a
                .iter()
                .enumerate()
                .map(|(n, x)| x.ln() + n as f64 * (2.0 * tau).ln())
                .fold(f64::NEG_INFINITY, f64::max);
            4.0 * kf * (sup - min.ln())
        }
    };
    if let GafModel::Gef { .. } = model {
        // min over n < 2k of the coefficient must be positive: always true
    }
    let log_rhs = log_const + log_pairs;
    let rhs = log_rhs.exp();
    let lhs = if has_coincident(points) { 0.0 } else { rho_k(model, points)? };
    Ok(BoundAudit {
        lhs,
        rhs,
        log_rhs,
        pass: lhs <= rhs || (lhs == 0.0 && log_rhs == f64::NEG_INFINITY),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gamma_examples() {
        let g = gamma_matrix(&GafModel::gef(1.0), &[c(0.0, 0.0)]).unwrap().gamma();
        assert_eq!(g, CMatrix::identity(2));
        let h = gamma_matrix(&GafModel::Hyperbolic, &[c(0.0, 0.0)]).unwrap().gamma();
        assert_eq!(h, CMatrix::identity(2));
        let t = gamma_matrix(&GafModel::truncated(vec![1.0, 1.0]).unwrap(), &[c(1.0, 0.0)]).unwrap();
        assert_eq!((t.a[(0, 0)], t.b[(0, 0)], t.d[(0, 0)]), (c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)));
        assert!(gamma_matrix(&GafModel::Hyperbolic, &[c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn gef_closed_form_matches_series() {
        let l = 1.7;
        let pts = [c(0.3, -0.4), c(-0.8, 0.2), c(0.1, 0.9)];
        let closed = gamma_matrix(&GafModel::gef(l), &pts).unwrap().gamma();
        let coeffs: Vec<f64> = (0..80).map(|n| GafModel::gef(l).coefficient(n)).collect();
        let series = gamma_matrix(&GafModel::Truncated(coeffs), &pts).unwrap().gamma();
        assert!(closed.sub(&series).norm() < 1e-12 * closed.norm());
    }

    #[test]
    fn confluent_examples() {
        let d = confluent_determinants(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(d.det_mv, c(-1.0, 0.0));
        assert!((d.det_mv_direct - c(-1.0, 0.0)).norm() < 1e-14);
        assert!(d.det_mc.is_none());
        let d = confluent_determinants(&[c(0.0, 0.0)]).unwrap();
        assert_eq!(d.det_mc, Some(1.0));
        let w = c(0.2, 0.1);
        assert_eq!(confluent_determinants(&[w, w]).unwrap().det_mv, c(0.0, 0.0));
        assert!(cauchy_determinant(&[c(1.2, 0.0)]).is_err());
    }

    #[test]
    fn rho_one_examples() {
        for l in [0.5, 1.0, 1.5, 2.0] {
            for z in [c(0.0, 0.0), c(1.0, -2.0)] {
                let r = rho_k(&GafModel::gef(l), &[z]).unwrap();
                assert!((r - l / std::f64::consts::PI).abs() < 1e-12 * l);
            }
        }
        assert!((rho_k(&GafModel::Hyperbolic, &[c(0.0, 0.0)]).unwrap() - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        let z = c(0.5, 0.3);
        let expected = 1.0 / (std::f64::consts::PI * (1.0 - z.norm_sqr()).powi(2));
        assert!((rho_k(&GafModel::Hyperbolic, &[z]).unwrap() - expected).abs() < 1e-12 * expected);
        assert!(matches!(rho_k(&GafModel::gef(1.0), &[z, z]), Err(Error::CoincidentPoints)));
    }

    #[test]
    fn bound_examples() {
        let a = rho_bound_audit(&GafModel::gef(1.0), &[c(0.0, 0.0)], 2.0).unwrap();
        assert!((a.lhs - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!((a.log_rhs - (16f64.ln() + 32.0)).abs() < 1e-12);
        assert!(a.pass);
        let w = c(0.5, 0.5);
        let a = rho_bound_audit(&GafModel::gef(1.0), &[w, w], 2.0).unwrap();
        assert_eq!((a.lhs, a.rhs), (0.0, 0.0));
        assert!(a.pass);
        let t = GafModel::truncated(vec![1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(rho_bound_audit(&t, &[c(0.1, 0.0)], 2.0), Err(Error::DegenerateModel(_))));
    }

    #[test]
    fn oracle_k1() {
        let est = rho_k_oracle(&GafModel::gef(1.0), &[c(0.4, 0.1)], 200_000, 3).unwrap();
        let exact = 1.0 / std::f64::consts::PI;
        assert!((est.value - exact).abs() < 3.0 * est.std_err + 1e-12, "{est:?}");
        assert!(rho_k_oracle(&GafModel::gef(1.0), &[c(0.0, 0.0); 3], 10, 0).is_err());
    }
}
