//! Truncated samples of the Gaussian entire function
//! `F_L(z) = sum_n zeta_n (sqrt(L) z)^n / sqrt(n!)`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::CompensatedSum;

/// Default relative tolerance for the discarded tail.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;
/// Hard cap on the truncation degree.
pub const MAX_TRUNCATION: usize = 5000;

/// `zeta_n` for a given seed: a pure function of `(seed, n)`.
///
/// Each index gets its own ChaCha stream, so growing the truncation never
/// changes earlier coefficients. Convention: `zeta = (g1 + i g2)/sqrt(2)`,
/// hence `E|zeta|^2 = 1`.
pub fn standard_complex_normal(seed: u64, n: u64) -> Complex64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n);
    let g1: f64 = StandardNormal.sample(&mut rng);
    let g2: f64 = StandardNormal.sample(&mut rng);
    Complex64::new(g1, g2) * std::f64::consts::FRAC_1_SQRT_2
}

/// A truncated GEF realisation. Coefficients are stored as unit phase and
/// log-magnitude so large degrees never overflow.
#[derive(Clone, Debug, PartialEq)]
pub struct GefSample {
    intensity: f64,
    seed: u64,
    phases: Vec<Complex64>,
    log_magnitudes: Vec<f64>,
    validity_radius: f64,
    tail_certificate: f64,
}

impl GefSample {
    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Index of the last retained coefficient.
    pub fn truncation(&self) -> usize {
        self.phases.len() - 1
    }

    pub fn validity_radius(&self) -> f64 {
        self.validity_radius
    }

    /// Relative sup bound of the discarded tail on the validity disc.
    pub fn tail_certificate(&self) -> f64 {
        self.tail_certificate
    }

    pub fn log_magnitudes(&self) -> &[f64] {
        &self.log_magnitudes
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    /// `c_n` as an ordinary complex number (may underflow to zero).
    pub fn coefficient(&self, n: usize) -> Complex64 {
        self.phases[n] * self.log_magnitudes[n].exp()
    }

    /// Test hook: a deterministic polynomial `sum c_n z^n` treated as a
    /// sample of intensity 1 (bypasses the RNG).
    pub fn from_coefficients(coefficients: &[Complex64], validity_radius: f64) -> Result<Self> {
        if coefficients.is_empty() || coefficients.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
            return Err(Error::Domain("need a nonzero coefficient".into()));
        }
        if coefficients.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Domain("coefficients must be finite".into()));
        }
        let (phases, log_magnitudes) = coefficients
            .iter()
            .map(|c| {
                let r = c.norm();
                if r == 0.0 {
                    (Complex64::new(1.0, 0.0), f64::NEG_INFINITY)
                } else {
                    (c / r, r.ln())
                }
            })
            .unzip();
        Ok(Self {
            intensity: 1.0,
            seed: 0,
            phases,
            log_magnitudes,
            validity_radius,
            tail_certificate: 0.0,
        })
    }

    /// Term-wise log magnitudes and phases of `c_n z^n`.
    fn terms(&self, z: Complex64) -> (Vec<f64>, Vec<Complex64>) {
        let lz = z.norm().ln();
        let unit = if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
        let mut lm = Vec::with_capacity(self.phases.len());
        let mut ph = Vec::with_capacity(self.phases.len());
        let mut u = Complex64::new(1.0, 0.0);
        for (n, (p, m)) in self.phases.iter().zip(&self.log_magnitudes).enumerate() {
            let log_zn = if n == 0 { 0.0 } else { n as f64 * lz };
            lm.push(m + log_zn);
            ph.push(p * u);
            u *= unit;
            // keep the running phase on the unit circle
            if n % 64 == 63 {
                u /= u.norm();
            }
        }
        (lm, ph)
    }

    /// `ln|F|`-scale sum: returns `(S, shift)` with `F(z) = S * exp(shift)`.
    fn scaled_value(&self, z: Complex64) -> (Complex64, f64) {
        let (lm, ph) = self.terms(z);
        scaled_sum(&lm, &ph)
    }

    /// `(F e^{-s}, F' e^{-s}, s)` for one common scale `s`.
    pub fn scaled_value_and_derivative(&self, z: Complex64) -> (Complex64, Complex64, f64) {
        let (lm, ph) = self.terms(z);
        let (v, s) = scaled_sum(&lm, &ph);
        // F'(z) = sum n c_n z^{n-1}: term log magnitudes m_n + (n-1) ln|z| + ln n
        let lz = z.norm().ln();
        let unit = if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
        let mut dlm = Vec::with_capacity(lm.len());
        let mut dph = Vec::with_capacity(lm.len());
        let mut u = Complex64::new(1.0, 0.0);
        for n in 1..self.phases.len() {
            let log_zn1 = if n == 1 { 0.0 } else { (n - 1) as f64 * lz };
            dlm.push(self.log_magnitudes[n] + log_zn1 + (n as f64).ln());
            dph.push(self.phases[n] * u);
            u *= unit;
            if n % 64 == 0 {
                u /= u.norm();
            }
        }
        if dlm.is_empty() {
            return (v, Complex64::new(0.0, 0.0), s);
        }
        let (d, ds) = scaled_sum(&dlm, &dph);
        let rel = ds - s;
        let d = if rel < -745.0 { Complex64::new(0.0, 0.0) } else { d * rel.exp() };
        (v, d, s)
    }
}

/// Compensated sum of `exp(lm_k) ph_k`, ascending by magnitude, scaled by the
/// largest term.
fn scaled_sum(lm: &[f64], ph: &[Complex64]) -> (Complex64, f64) {
    let shift = lm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return (Complex64::new(0.0, 0.0), 0.0);
    }
    let mut order: Vec<usize> = (0..lm.len()).filter(|&k| lm[k] - shift > -745.0).collect();
    order.sort_by(|&a, &b| lm[a].total_cmp(&lm[b]));
    let mut acc = CompensatedSum::<f64>::new();
    for k in order {
        acc.add(ph[k] * (lm[k] - shift).exp());
    }
    (acc.value(), shift)
}

/// `ln(sum_{n > N} |zeta_n| x^n / sqrt(n!))` with drawn moduli up to `2N` and
/// the envelope `6 sqrt(log n)` beyond.
fn log_tail_bound(seed: u64, truncation: usize, log_x: f64, ln_fact: &mut Vec<f64>) -> f64 {
    let mut terms = Vec::new();
    let mut n = truncation + 1;
    loop {
        while ln_fact.len() <= n {
            let k = ln_fact.len();
            let prev = ln_fact[k - 1];
            ln_fact.push(prev + (k as f64).ln());
        }
        let modulus = if n <= 2 * truncation {
            standard_complex_normal(seed, n as u64).norm()
        } else {
            6.0 * (n as f64).ln().max(1.0).sqrt()
        };
        let t = modulus.ln() + n as f64 * log_x - 0.5 * ln_fact[n];
        terms.push(t);
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // terms eventually decay faster than geometrically
        if n > 2 * truncation && t < max - 50.0 {
            break;
        }
        n += 1;
    }
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Draw a truncated GEF sample of intensity `L` valid on `|z| <= R + 1`.
pub fn sample_gef(intensity: f64, radius: f64, tol: f64, seed: u64) -> Result<GefSample> {
    if !(intensity > 0.0 && intensity <= 16.0) {
        return Err(Error::Domain(format!("intensity must lie in (0, 16], got {intensity}")));
    }
    if !(radius > 0.0 && radius <= 12.0) {
        return Err(Error::Domain(format!("radius must lie in (0, 12], got {radius}")));
    }
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::Domain(format!("tolerance must lie in (0, 1e-6], got {tol}")));
    }
    let validity = radius + 1.0;
    let x2 = intensity * validity * validity;
    let log_x = 0.5 * x2.ln();
    let mut n = (std::f64::consts::E * x2).ceil() as usize;
    let log_budget = tol.ln() + x2 / 2.0;
    let mut ln_fact = vec![0.0];
    let log_tail = loop {
        if n > MAX_TRUNCATION {
            return Err(Error::Resource(format!(
                "truncation degree {n} exceeds the cap {MAX_TRUNCATION}; reduce L*R^2 (L = {intensity}, R = {radius})"
            )));
        }
        let t = log_tail_bound(seed, n, log_x, &mut ln_fact);
        if t < log_budget {
            break t;
        }
        n += (n / 8).max(4);
    };
    while ln_fact.len() <= n {
        let k = ln_fact.len();
        let prev = ln_fact[k - 1];
        ln_fact.push(prev + (k as f64).ln());
    }
    let half_log_l = 0.5 * intensity.ln();
    let (phases, log_magnitudes) = (0..=n)
        .map(|k| {
            let zeta = standard_complex_normal(seed, k as u64);
            let r = zeta.norm();
            (zeta / r, r.ln() + k as f64 * half_log_l - 0.5 * ln_fact[k])
        })
        .unzip();
    Ok(GefSample {
        intensity,
        seed,
        phases,
        log_magnitudes,
        validity_radius: validity,
        tail_certificate: (log_tail - x2 / 2.0).exp(),
    })
}

/// `F(z)`, or `F*(z) = e^{-L|z|^2/2} F(z)` when `normalized`.
pub fn eval_gef(sample: &GefSample, z: Complex64, normalized: bool) -> Result<Complex64> {
    let modulus = z.norm();
    if modulus > sample.validity_radius {
        return Err(Error::OutOfDomain {
            modulus,
            validity_radius: sample.validity_radius,
        });
    }
    let (s, mut shift) = sample.scaled_value(z);
    if normalized {
        shift -= sample.intensity * modulus * modulus / 2.0;
    }
    if shift > 709.0 {
        return Err(Error::Overflow {
            log_magnitude: shift + s.norm().ln(),
        });
    }
    Ok(s * shift.exp())
}
