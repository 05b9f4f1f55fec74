//! Empirical checks of the perturbed-lattice condition and the separation
//! condition on a finite window.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::lattice::{site, LatticeMatching};
use crate::profile::GrowthProfile;
use crate::separation::product_separation;
use crate::zeros::ZeroSet;

/// Outcome of the separation check for one threshold convention.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationCheck {
    pub label: String,
    /// Indices of points whose product separation falls below the threshold.
    pub bad_points: Vec<usize>,
    /// `max #{bad w in B_r(c)} / kappa(r)` over the centre grid.
    pub max_ratio: f64,
    pub worst_center: Complex64,
    pub worst_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Matched pairs with `|z - lambda| > T(|lambda| + R)`.
    pub lattice_violations: Vec<((i64, i64), usize)>,
    pub checked_pairs: usize,
    /// Threshold `S(2e|w| + R)`.
    pub separation_shifted: SeparationCheck,
    /// Threshold `S(|w|)`.
    pub separation_plain: SeparationCheck,
}

impl ConditionReport {
    pub fn passes(&self) -> bool {
        self.lattice_violations.is_empty()
    }
}

/// Hexagonal grid of centres with pitch `pitch` covering `|c| <= radius`.
pub fn hex_centers(radius: f64, pitch: f64) -> Vec<Complex64> {
    let dy = pitch * 3f64.sqrt() / 2.0;
    let rows = (radius / dy).ceil() as i64;
    let cols = (radius / pitch).ceil() as i64 + 1;
    let mut out = Vec::new();
    for j in -rows..=rows {
        let offset = if j.rem_euclid(2) == 1 { pitch / 2.0 } else { 0.0 };
        for i in -cols..=cols {
            let c = Complex64::new(i as f64 * pitch + offset, j as f64 * dy);
            if c.norm() <= radius {
                out.push(c);
            }
        }
    }
    out
}

/// Perturbed-lattice and separation report. Only points at distance at
/// least 1 from the boundary of the zero disc enter the separation check
/// (their product separation is complete).
pub fn condition_report(zeros: &ZeroSet, matching: &LatticeMatching, profile: &GrowthProfile, r_offset: f64) -> ConditionReport {
    let lattice_violations: Vec<((i64, i64), usize)> = matching
        .pairs
        .iter()
        .filter(|(s, z)| {
            let lambda = site(matching.intensity, *s);
            (zeros.points[*z] - lambda).norm() > profile.t(lambda.norm() + r_offset)
        })
        .copied()
        .collect();
    let sep = product_separation(&zeros.points);
    let trusted: Vec<usize> = (0..zeros.len())
        .filter(|&i| zeros.points[i].norm() <= zeros.disk_radius - 1.0)
        .collect();
    let window = matching.window_radius;
    let shifted: Vec<usize> = trusted
        .iter()
        .copied()
        .filter(|&i| sep[i] <= profile.s(2.0 * std::f64::consts::E * zeros.points[i].norm() + r_offset))
        .collect();
    let plain: Vec<usize> = trusted
        .iter()
        .copied()
        .filter(|&i| sep[i] <= profile.s(zeros.points[i].norm()))
        .collect();
    // T is nondecreasing, so this radius is admissible at every centre
    let r_min = profile.t(std::f64::consts::E * window + r_offset);
    ConditionReport {
        checked_pairs: matching.pairs.len(),
        lattice_violations,
        separation_shifted: ball_counts("S(2e|w| + R)", &shifted, zeros, window, r_min, profile),
        separation_plain: ball_counts("S(|w|)", &plain, zeros, window, r_min, profile),
    }
}

fn ball_counts(label: &str, bad: &[usize], zeros: &ZeroSet, window: f64, r_min: f64, profile: &GrowthProfile) -> SeparationCheck {
    let mut best = (0.0, Complex64::new(0.0, 0.0), r_min);
    for mult in [1.0, 2.0, 4.0] {
        let r = r_min * mult;
        for c in hex_centers(window, r / 2.0) {
            let count = bad.iter().filter(|&&i| (zeros.points[i] - c).norm() < r).count();
            let ratio = count as f64 / profile.kappa(r);
            if ratio > best.0 {
                best = (ratio, c, r);
            }
        }
    }
    SeparationCheck {
        label: label.to_string(),
        bad_points: bad.to_vec(),
        max_ratio: best.0,
        worst_center: best.1,
        worst_radius: best.2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{match_lattice, sites_in_disk};

    fn lattice_set(l: f64, r: f64) -> ZeroSet {
        let pts = sites_in_disk(l, r).into_iter().map(|i| site(l, i)).collect();
        ZeroSet::from_points(pts, r)
    }

    #[test]
    fn exact_lattice_is_clean() {
        for l in [1.0, 2.0] {
            let z = lattice_set(l, 12.0);
            let m = match_lattice(&z, l, 6.0).unwrap();
            let r = condition_report(&z, &m, &GrowthProfile::default(), 20.0);
            assert!(r.lattice_violations.is_empty());
            assert!(r.separation_shifted.bad_points.is_empty());
            assert!(r.separation_plain.bad_points.is_empty());
        }
    }

    #[test]
    fn doubled_point_is_flagged() {
        let mut z = lattice_set(1.0, 12.0);
        let target = site(1.0, (1, 1));
        z.points.push(target);
        z.multiplicities.push(1);
        z.residuals.push(0.0);
        z.on_boundary.push(false);
        let m = match_lattice(&z, 1.0, 6.0).unwrap();
        let r = condition_report(&z, &m, &GrowthProfile::default(), 20.0);
        assert!(!r.separation_shifted.bad_points.is_empty());
        for i in &r.separation_shifted.bad_points {
            assert_eq!(z.points[*i], target);
        }
        assert!(r.separation_shifted.max_ratio > 0.0);
    }
}
