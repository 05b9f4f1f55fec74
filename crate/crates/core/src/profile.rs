//! Growth profile `T`, threshold `S` and count scale `kappa` governing the
//! perturbed-lattice and separation conditions.

use serde::{Deserialize, Serialize};

use crate::scalar::log_star;

/// `T(r) = log*(r)^{1/4} log*(log*(r))`, `S(r) = exp(-T^2 log*(T)^4)`,
/// `kappa(r) = r^2 / log*(r)^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    pub beta: f64,
}

impl Default for GrowthProfile {
    fn default() -> Self {
        Self { beta: 1.0 }
    }
}

impl GrowthProfile {
    pub fn new(beta: f64) -> Self {
        Self { beta }
    }

    pub fn t(&self, r: f64) -> f64 {
        let l = log_star(r);
        l.powf(0.25) * log_star(l)
    }

    /// `-log S(r)`.
    pub fn neg_log_s(&self, r: f64) -> f64 {
        let t = self.t(r);
        t * t * log_star(t).powi(4)
    }

    pub fn s(&self, r: f64) -> f64 {
        (-self.neg_log_s(r)).exp()
    }

    pub fn kappa(&self, r: f64) -> f64 {
        let l = log_star(r);
        r * r / (l * l)
    }

    /// The solution of `2 T(r) = r` in `[2, 1e6]`, by bisection.
    pub fn r0(&self) -> f64 {
        let h = |r: f64| 2.0 * self.t(r) - r;
        let (mut lo, mut hi) = (2.0, 1e6);
        if h(lo).abs() < 1e-12 {
            return lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r0_is_two() {
        let p = GrowthProfile::default();
        let r0 = p.r0();
        assert_eq!(r0, 2.0);
        assert!((2.0 * p.t(r0) - r0).abs() < 1e-10);
    }

    #[test]
    fn shapes() {
        let p = GrowthProfile::default();
        let mut prev_t = 0.0;
        let mut prev_s = f64::INFINITY;
        for i in 0..400 {
            let r = 0.5 * 1.05f64.powi(i);
            let t = p.t(r);
            let s = p.s(r);
            assert!(t >= 1.0 && t >= prev_t);
            assert!(s <= prev_s);
            assert!((-s.ln() - p.neg_log_s(r)).abs() <= 1e-12 * p.neg_log_s(r));
            prev_t = t;
            prev_s = s;
        }
        assert_eq!(p.t(2.0), 1.0);
        assert_eq!(p.kappa(2.0), 4.0);
    }
}
