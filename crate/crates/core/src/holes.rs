//! Largest empty disc with centre in a given region.

use num_complex::Complex64;

/// Distance from `c` to the nearest point (infinite for an empty set).
pub fn distance_to_set(c: Complex64, points: &[Complex64]) -> f64 {
    points.iter().map(|z| (c - z).norm()).fold(f64::INFINITY, f64::min)
}

fn circumcenter(a: Complex64, b: Complex64, c: Complex64) -> Option<Complex64> {
    let d = 2.0 * (a.re * (b.im - c.im) + b.re * (c.im - a.im) + c.re * (a.im - b.im));
    if d.abs() < 1e-300 {
        return None;
    }
    let (a2, b2, c2) = (a.norm_sqr(), b.norm_sqr(), c.norm_sqr());
    Some(Complex64::new(
        (a2 * (b.im - c.im) + b2 * (c.im - a.im) + c2 * (a.im - b.im)) / d,
        (a2 * (c.re - b.re) + b2 * (a.re - c.re) + c2 * (b.re - a.re)) / d,
    ))
}

/// `(centre, radius)` of the largest disc free of points whose centre lies
/// in `|c| <= region`. A grid search locates candidate maxima of the
/// distance function; each is snapped to the circumcentre of its three
/// nearest points (a Voronoi vertex) when that stays in the region.
pub fn largest_empty_disk(points: &[Complex64], region: f64, resolution: usize) -> (Complex64, f64) {
    let n = resolution.max(8);
    let h = 2.0 * region / n as f64;
    let mut cand: Vec<(f64, Complex64)> = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            let c = Complex64::new(-region + h * i as f64, -region + h * j as f64);
            if c.norm() <= region {
                cand.push((distance_to_set(c, points), c));
            }
        }
    }
    cand.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = cand[0];
    for &(_, c) in cand.iter().take(32) {
        let mut near: Vec<(f64, Complex64)> = points.iter().map(|z| ((c - z).norm(), *z)).collect();
        if near.len() < 3 {
            break;
        }
        near.select_nth_unstable_by(2, |a, b| a.0.total_cmp(&b.0));
        near[..3].sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(v) = circumcenter(near[0].1, near[1].1, near[2].1) {
            if v.norm() <= region {
                let r = distance_to_set(v, points);
                if r > best.0 {
                    best = (r, v);
                }
            }
        }
    }
    (best.1, best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{lattice_spacing, site, sites_in_disk};

    #[test]
    fn lattice_covering_radius() {
        let l = 1.0;
        let pts: Vec<Complex64> = sites_in_disk(l, 10.0).into_iter().map(|i| site(l, i)).collect();
        let (_, r) = largest_empty_disk(&pts, 5.0, 64);
        let expected = lattice_spacing(l) / 2f64.sqrt();
        assert!((r - expected).abs() < 1e-12, "{r} vs {expected}");
    }

    #[test]
    fn planted_hole() {
        let l = 1.0;
        let pts: Vec<Complex64> = sites_in_disk(l, 10.0)
            .into_iter()
            .map(|i| site(l, i))
            .filter(|z| (z - Complex64::new(1.0, 0.5)).norm() > 3.0)
            .collect();
        let (c, r) = largest_empty_disk(&pts, 5.0, 64);
        assert!(r >= 3.0 && (c - Complex64::new(1.0, 0.5)).norm() < r);
    }
}
