//! Fock-space numerics: functions expanded in the normalized monomials
//! `e_n(z) = z^n / sqrt(n!)`, optionally composed with a Bargmann–Fock shift,
//! their weighted `L^p` norms, the spectrum of the disc concentration
//! operator and the accompanying tail bounds.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_interval;
use crate::scalar::{abs2, log_star, Scalar};

/// Threshold on `|conj(a) z|` above which evaluation switches to log space.
const LOG_PATH_THRESHOLD: f64 = 700.0;

/// Default constant used for the analytic tail bound on polynomial norms.
/// Deliberately generous; [`TailMass::empirical_constant`] reports what a
/// given function actually needs.
pub const DEFAULT_TAIL_CONSTANT: f64 = 10.0;

/// `f(z) = exp(conj(a) z - |a|^2/2) * sum_n c_n (z - a)^n / sqrt(n!)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockFunction<T: Scalar> {
    coefficients: Vec<Complex<T>>,
    shift_center: Complex<T>,
    alpha: T,
}

impl<T: Scalar> FockFunction<T> {
    /// Polynomial `sum_n c_n e_n` with no shift and `alpha = 1`.
    pub fn new(coefficients: Vec<Complex<T>>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::Domain("a Fock function needs at least one coefficient".into()));
        }
        if coefficients.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Domain("coefficients must be finite".into()));
        }
        Ok(Self {
            coefficients,
            shift_center: Complex::new(T::zero(), T::zero()),
            alpha: T::one(),
        })
    }

    /// The basis element `e_n`.
    pub fn monomial(n: usize) -> Self {
        let mut c = vec![Complex::new(T::zero(), T::zero()); n + 1];
        c[n] = Complex::new(T::one(), T::zero());
        Self::new(c).expect("finite")
    }

    /// The constant function 1.
    pub fn one() -> Self {
        Self::monomial(0)
    }

    pub fn with_shift_center(mut self, a: Complex<T>) -> Self {
        self.shift_center = a;
        self
    }

    pub fn with_alpha(mut self, alpha: T) -> Result<Self> {
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.coefficients
    }

    pub fn shift_center(&self) -> Complex<T> {
        self.shift_center
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    fn is_unshifted(&self) -> bool {
        self.shift_center.re == T::zero() && self.shift_center.im == T::zero()
    }

    /// `(sum |c_n|^2)^{1/2}`, the `F^2` norm for `alpha = 1`.
    pub fn coefficient_norm(&self) -> T {
        self.coefficients.iter().fold(T::zero(), |acc, c| acc + abs2(*c)).sqrt()
    }

    /// `sum_n c_n w^n / sqrt(n!)` by Horner's rule in the shifted variable.
    fn polynomial_part(&self, w: Complex<T>) -> Complex<T> {
        let d = self.degree();
        let mut acc = self.coefficients[d];
        for n in (0..d).rev() {
            let scale = T::from_usize_lossy(n + 1).sqrt();
            acc = self.coefficients[n] + acc * w / scale;
        }
        acc
    }

    /// Complex exponent `conj(a) z - |a|^2/2` of the shift factor.
    fn shift_exponent(&self, z: Complex<T>) -> Complex<T> {
        let a = self.shift_center;
        a.conj() * z - Complex::new(abs2(a) / T::lit(2.0), T::zero())
    }

    /// `f(z)`.
    pub fn evaluate(&self, z: Complex<T>) -> Result<Complex<T>> {
        let p = self.polynomial_part(z - self.shift_center);
        if !p.re.is_finite() || !p.im.is_finite() {
            return Err(Error::Overflow {
                log_magnitude: f64::INFINITY,
            });
        }
        let e = self.shift_exponent(z);
        let big = (self.shift_center.conj() * z).norm() > T::lit(LOG_PATH_THRESHOLD);
        let value = if big {
            let log_mod = p.norm().ln() + e.re;
            if log_mod > T::max_value().ln() {
                return Err(Error::Overflow {
                    log_magnitude: log_mod.to_f64_lossy(),
                });
            }
            Complex::from_polar(log_mod.exp(), p.arg() + e.im)
        } else {
            p * e.exp()
        };
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::Overflow {
                log_magnitude: (p.norm().ln() + e.re).to_f64_lossy(),
            });
        }
        Ok(value)
    }

    /// `ln(|f(z)| e^{-alpha |z|^2 / 2})`, computed without forming `f(z)`.
    pub fn log_weighted_modulus(&self, z: Complex<T>) -> T {
        let p = self.polynomial_part(z - self.shift_center);
        p.norm().ln() + self.shift_exponent(z).re - self.alpha * abs2(z) / T::lit(2.0)
    }

    /// Upper envelope of `ln |f(z)|` on `|z| = rho`, from coefficient moduli.
    fn log_modulus_envelope(&self, rho: T) -> T {
        let a = self.shift_center.norm();
        let w = rho + a;
        let d = self.degree();
        let mut acc = self.coefficients[d].norm();
        for n in (0..d).rev() {
            acc = self.coefficients[n].norm() + acc * w / T::from_usize_lossy(n + 1).sqrt();
        }
        acc.ln() + a * rho - a * a / T::lit(2.0)
    }
}

/// Discretisation of the weighted area integral over a centred disc.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec<T: Scalar> {
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    pub cutoff_radius: T,
    /// Largest acceptable analytic tail bound (relative to the norm).
    pub tail_budget: T,
    /// Constant in the polynomial tail estimate.
    pub tail_constant: T,
}

impl<T: Scalar> QuadratureSpec<T> {
    /// Default cutoff `sqrt(d + 10 sqrt(d log* d) + 25)` for degree `d`.
    pub fn default_cutoff(degree: usize) -> T {
        let d = T::from_usize_lossy(degree);
        (d + T::lit(10.0) * (d * log_star(d)).sqrt() + T::lit(25.0)).sqrt()
    }

    /// Rule sized for `f` and exponent `p`. The cutoff is never smaller than
    /// [`Self::default_cutoff`] and is enlarged until the tail exponent
    /// `p (r^2 - d - d log(r^2/d)) / 2` reaches 40 (which matters for `p < 2`)
    /// and the analytic tail bound is within half the budget.
    pub fn for_function(f: &FockFunction<T>, p: T) -> Self {
        let d = f.degree();
        let df = T::from_usize_lossy(d);
        let shift = f.shift_center.norm();
        let p_eff = if p.is_infinite() { T::lit(2.0) } else { p.min(T::lit(64.0)) };
        let budget = T::lit(1e-6);
        let constant = T::lit(DEFAULT_TAIL_CONSTANT);
        // the analytic tail bound checked by `fock_norm` must also fit the budget
        let analytic = |r: T| {
            p_eff / (T::lit(2.0) * T::PI()) * constant * r * r * (-tail_exponent(r, d) / T::lit(2.0)).exp()
        };
        let mut r = Self::default_cutoff(d);
        while r * r <= df
            || p_eff * tail_exponent(r, d) / T::lit(2.0) < T::lit(40.0)
            || analytic(r) > T::lit(0.5) * budget
        {
            r += T::lit(0.25);
        }
        let cutoff = r + shift;
        let cf = cutoff.to_f64_lossy();
        let pf = p_eff.to_f64_lossy();
        let radial = 96 + (16.0 * cf * pf.sqrt()).ceil() as usize;
        let smooth = (p_eff.to_f64_lossy().fract() == 0.0) && pf >= 2.0;
        let harmonic = pf * (d as f64 + shift.to_f64_lossy() * cf + 4.0);
        let mut angular = 64 + 2 * harmonic.ceil() as usize;
        if !smooth {
            angular *= 4;
        }
        let radial = if smooth { radial } else { radial * 3 };
        Self {
            radial_nodes: radial,
            angular_nodes: angular,
            cutoff_radius: cutoff,
            tail_budget: budget,
            tail_constant: constant,
        }
    }

    fn validate(&self, f: &FockFunction<T>) -> Result<T> {
        if self.radial_nodes == 0 || self.angular_nodes == 0 {
            return Err(Error::InvalidQuadrature("node counts must be positive".into()));
        }
        if !(self.tail_budget > T::zero()) {
            return Err(Error::InvalidQuadrature("tail budget must be positive".into()));
        }
        let effective = self.cutoff_radius - f.shift_center.norm();
        let d = T::from_usize_lossy(f.degree());
        if !(effective > T::zero()) || effective * effective <= d {
            return Err(Error::InvalidQuadrature(format!(
                "cutoff {} (effective {}) too small for degree {}: need r^2 > d",
                self.cutoff_radius,
                effective,
                f.degree()
            )));
        }
        Ok(effective)
    }
}

/// `r^2 - d - d log(r^2 / d)`, with the `d = 0` limit `r^2`.
pub fn tail_exponent<T: Scalar>(r: T, d: usize) -> T {
    let r2 = r * r;
    if d == 0 {
        return r2;
    }
    let df = T::from_usize_lossy(d);
    r2 - df - df * (r2 / df).ln()
}

/// Result of a norm computation: `value` excludes the mass outside the
/// cutoff disc, which is at most `tail_bound` (in units of `value^p`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate<T: Scalar> {
    pub value: T,
    pub tail_bound: T,
}

/// Weighted norm `((p alpha / 2 pi) int |f|^p e^{-p alpha |z|^2/2} dA)^{1/p}`,
/// or the sup-norm of `|f| e^{-alpha|z|^2/2}` when `p` is infinite.
pub fn fock_norm<T: Scalar>(f: &FockFunction<T>, p: T, q: &QuadratureSpec<T>) -> Result<NormEstimate<T>> {
    if !(p >= T::one()) {
        return Err(Error::Domain(format!("norm exponent must be >= 1, got {p}")));
    }
    if p == T::lit(2.0) && f.is_unshifted() && f.alpha == T::one() {
        return Ok(NormEstimate {
            value: f.coefficient_norm(),
            tail_bound: T::zero(),
        });
    }
    let effective = q.validate(f)?;
    if p.is_infinite() {
        return Ok(NormEstimate {
            value: sup_norm(f, q),
            tail_bound: T::zero(),
        });
    }
    let mass = disc_mass(f, p, q);
    let value = mass.powf(T::one() / p);
    let d = f.degree();
    let bound = p / (T::lit(2.0) * T::PI())
        * q.tail_constant
        * effective
        * effective
        * (-tail_exponent(effective, d) / T::lit(2.0)).exp()
        * mass;
    if bound > q.tail_budget * mass.max(T::min_positive_value()) {
        return Err(Error::InvalidQuadrature(format!(
            "analytic tail bound {bound} exceeds budget {} relative to mass {mass}",
            q.tail_budget
        )));
    }
    Ok(NormEstimate { value, tail_bound: bound })
}

/// `(p alpha / 2 pi) int_{|z| <= cutoff} |f|^p e^{-p alpha |z|^2 / 2} dA`.
fn disc_mass<T: Scalar>(f: &FockFunction<T>, p: T, q: &QuadratureSpec<T>) -> T {
    annulus_mass(f, p, T::zero(), q.cutoff_radius, q.radial_nodes, q.angular_nodes)
}

fn annulus_mass<T: Scalar>(f: &FockFunction<T>, p: T, r_in: T, r_out: T, radial: usize, angular: usize) -> T {
    let (nodes, weights) = gauss_legendre_interval::<T>(radial, r_in, r_out);
    let dtheta = T::lit(2.0) * T::PI() / T::from_usize_lossy(angular);
    let dirs: Vec<Complex<T>> = (0..angular)
        .map(|k| Complex::from_polar(T::one(), dtheta * T::from_usize_lossy(k)))
        .collect();
    let mut total = T::zero();
    for (r, w) in nodes.iter().zip(&weights) {
        let mut ring = T::zero();
        for dir in &dirs {
            let z = *dir * *r;
            ring += (p * f.log_weighted_modulus(z)).exp();
        }
        total += *w * *r * ring * dtheta;
    }
    p * f.alpha / (T::lit(2.0) * T::PI()) * total
}

fn sup_norm<T: Scalar>(f: &FockFunction<T>, q: &QuadratureSpec<T>) -> T {
    let radial = q.radial_nodes.max(8);
    let angular = q.angular_nodes.max(8);
    let dr = q.cutoff_radius / T::from_usize_lossy(radial);
    let dtheta = T::lit(2.0) * T::PI() / T::from_usize_lossy(angular);
    let mut candidates: Vec<(T, Complex<T>)> = Vec::with_capacity(radial * angular + 1);
    candidates.push((f.log_weighted_modulus(Complex::new(T::zero(), T::zero())), Complex::new(T::zero(), T::zero())));
    for i in 1..=radial {
        let r = dr * T::from_usize_lossy(i);
        for k in 0..angular {
            let z = Complex::from_polar(r, dtheta * T::from_usize_lossy(k));
            candidates.push((f.log_weighted_modulus(z), z));
        }
    }
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut best = candidates[0].0;
    let step0 = dr.max(q.cutoff_radius * dtheta);
    for &(v0, z0) in candidates.iter().take(8) {
        let (v, _) = pattern_ascent(|z| f.log_weighted_modulus(z), z0, v0, step0);
        best = best.max(v);
    }
    best.exp()
}

/// Compass search maximising `g` from `z0`, halving the step to `1e-10`.
fn pattern_ascent<T: Scalar>(g: impl Fn(Complex<T>) -> T, z0: Complex<T>, v0: T, step0: T) -> (T, Complex<T>) {
    let dirs = [
        Complex::new(T::one(), T::zero()),
        Complex::new(-T::one(), T::zero()),
        Complex::new(T::zero(), T::one()),
        Complex::new(T::zero(), -T::one()),
    ];
    let (mut z, mut v, mut step) = (z0, v0, step0);
    while step > T::lit(1e-10) {
        let mut improved = false;
        for d in &dirs {
            let cand = z + *d * step;
            let cv = g(cand);
            if cv > v {
                z = cand;
                v = cv;
                improved = true;
            }
        }
        if !improved {
            step /= T::lit(2.0);
        }
    }
    (v, z)
}

/// Compose a Bargmann–Fock shift: `T_b T_a = e^{(a conj(b) - conj(a) b)/2} T_{a+b}`.
pub fn bargmann_shift<T: Scalar>(f: &FockFunction<T>, b: Complex<T>) -> FockFunction<T> {
    let a = f.shift_center;
    let phase_exponent = (a * b.conj() - a.conj() * b) / T::lit(2.0);
    let phase = phase_exponent.exp();
    FockFunction {
        coefficients: f.coefficients.iter().map(|c| *c * phase).collect(),
        shift_center: a + b,
        alpha: f.alpha,
    }
}

/// `lambda_n(R) = P(Poisson(R^2) > n)`, the eigenvalue of the concentration
/// operator on `B_R(0)` for `e_n`.
pub fn concentration_eigenvalue<T: Scalar>(n: usize, radius: T) -> Result<T> {
    if !(radius > T::zero()) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    let x = radius * radius;
    let ln_x = x.ln();
    let nf = T::from_usize_lossy(n);
    if nf >= x {
        // upper tail: terms decrease past the mode, sum them directly
        let mut log_term = -x;
        for k in 1..=n + 1 {
            log_term += ln_x - T::from_usize_lossy(k).ln();
        }
        let mut sum = T::zero();
        let mut k = n + 1;
        loop {
            let term = log_term.exp();
            sum += term;
            if term <= sum * T::epsilon() * T::lit(0.01) || term == T::zero() {
                break;
            }
            k += 1;
            log_term += ln_x - T::from_usize_lossy(k).ln();
        }
        Ok(sum.min(T::one()))
    } else {
        let mut log_term = -x;
        let mut cdf = log_term.exp();
        for k in 1..=n {
            log_term += ln_x - T::from_usize_lossy(k).ln();
            cdf += log_term.exp();
        }
        Ok((T::one() - cdf).max(T::zero()))
    }
}

/// `exp(-(R^2 - d - d log(R^2/d)))`, an upper bound for `1 - lambda_d(R)`.
pub fn chernoff_tail_bound<T: Scalar>(radius: T, d: usize) -> Result<T> {
    let r2 = radius * radius;
    if !(r2 > T::from_usize_lossy(d)) {
        return Err(Error::Domain(format!(
            "Chernoff bound needs R^2 > d (R^2 = {r2}, d = {d})"
        )));
    }
    Ok((-tail_exponent(radius, d)).exp())
}

/// Tail of the normalized weighted mass outside `B_r(0)` together with the
/// polynomial tail estimate `(p/2pi) C r^2 e^{-(r^2-d-d log(r^2/d))/2} ||f||_p^p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailMass<T: Scalar> {
    pub numeric: T,
    pub bound: T,
    pub constant: T,
    /// `||f||_p^p` used in the bound.
    pub norm_pow: T,
}

impl<T: Scalar> TailMass<T> {
    pub fn holds(&self) -> bool {
        self.numeric <= self.bound
    }

    /// Smallest constant for which the bound would still hold.
    pub fn empirical_constant(&self) -> T {
        if self.bound == T::zero() {
            return T::zero();
        }
        self.numeric / (self.bound / self.constant)
    }
}

/// Normalized weighted mass of `f` outside `B_r(0)`.
pub fn tail_mass<T: Scalar>(f: &FockFunction<T>, r: T, p: T, q: &QuadratureSpec<T>) -> Result<TailMass<T>> {
    let d = f.degree();
    if !(r * r > T::from_usize_lossy(d)) {
        return Err(Error::Domain(format!("tail estimate needs r^2 > deg f (r = {r}, d = {d})")));
    }
    if !(p >= T::one()) || p.is_infinite() {
        return Err(Error::Domain(format!("tail mass needs finite p >= 1, got {p}")));
    }
    // integrate outwards until the envelope falls 60 e-folds below its value at r
    let start = p * (f.log_modulus_envelope(r) - f.alpha * r * r / T::lit(2.0)) + r.ln();
    let mut r_out = r + T::one();
    while p * (f.log_modulus_envelope(r_out) - f.alpha * r_out * r_out / T::lit(2.0)) + r_out.ln() > start - T::lit(60.0) {
        r_out += T::one();
    }
    let width = (r_out - r).to_f64_lossy();
    let radial = q.radial_nodes.max(64) + (24.0 * width * p.to_f64_lossy().sqrt()).ceil() as usize;
    let angular = q.angular_nodes.max(64);
    let numeric = annulus_mass(f, p, r, r_out, radial, angular);
    let norm_pow = fock_norm(f, p, &QuadratureSpec::for_function(f, p))?.value.powf(p);
    let bound = p / (T::lit(2.0) * T::PI()) * q.tail_constant * r * r * (-tail_exponent(r, d) / T::lit(2.0)).exp() * norm_pow;
    Ok(TailMass {
        numeric,
        bound,
        constant: q.tail_constant,
        norm_pow,
    })
}
