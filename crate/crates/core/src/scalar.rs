//! Scalar abstraction shared by the deterministic numerics.
//!
//! The analytic kernels (Fock norms, concentration spectra, determinants,
//! permanents, separation statistics) are written once against [`Scalar`]
//! and instantiated for `f32` and `f64`. The Monte Carlo layers above them
//! work in `f64` only.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point type usable by the generic kernels.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `log_*(x) = max(1, log x)`.
#[inline]
pub fn log_star<T: Scalar>(x: T) -> T {
    if x <= T::zero() {
        return T::one();
    }
    x.ln().max(T::one())
}

/// `ln(n!)` by direct summation; exact enough for the moderate `n` used here.
pub fn ln_factorial<T: Scalar>(n: usize) -> T {
    let mut acc = T::zero();
    for k in 2..=n {
        acc += T::from_usize_lossy(k).ln();
    }
    acc
}

/// Table of `ln(k!)` for `k = 0..=n`.
pub fn ln_factorial_table(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Complex number with squared modulus helper kept close to the scalar trait.
#[inline]
pub fn abs2<T: Scalar>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}

/// Neumaier compensated accumulator for complex sums.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<T: Scalar> {
    sum: Complex<T>,
    comp: Complex<T>,
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: Complex::new(T::zero(), T::zero()),
            comp: Complex::new(T::zero(), T::zero()),
        }
    }

    #[inline]
    pub fn add(&mut self, x: Complex<T>) {
        self.sum.re = neumaier_step(self.sum.re, x.re, &mut self.comp.re);
        self.sum.im = neumaier_step(self.sum.im, x.im, &mut self.comp.im);
    }

    #[inline]
    pub fn value(&self) -> Complex<T> {
        self.sum + self.comp
    }
}

#[inline]
fn neumaier_step<T: Scalar>(sum: T, x: T, comp: &mut T) -> T {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *comp += (sum - t) + x;
    } else {
        *comp += (x - t) + sum;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_star_floor() {
        assert_eq!(log_star(0.5_f64), 1.0);
        assert_eq!(log_star(std::f64::consts::E), 1.0);
        assert!((log_star(100.0_f64) - 100.0_f64.ln()).abs() < 1e-15);
        assert_eq!(log_star(-3.0_f32), 1.0);
    }

    #[test]
    fn factorial_logs_agree() {
        let table = ln_factorial_table(20);
        for (n, v) in table.iter().enumerate() {
            assert!((ln_factorial::<f64>(n) - v).abs() < 1e-12);
        }
        assert!((table[5] - 120.0_f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::<f64>::new();
        acc.add(Complex::new(1e16, 0.0));
        for _ in 0..10 {
            acc.add(Complex::new(1.0, 1.0));
        }
        acc.add(Complex::new(-1e16, 0.0));
        assert_eq!(acc.value(), Complex::new(10.0, 10.0));
    }
}
