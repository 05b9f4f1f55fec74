//! The square lattice `sqrt(pi/L) Z^2` and the minimum-displacement
//! matching of zeros to lattice sites.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assignment::solve_assignment;
use crate::error::{Error, Result};
use crate::scalar::log_star;
use crate::zeros::ZeroSet;

/// Cost assigned to edges longer than the candidate cutoff.
const FORBIDDEN: f64 = 1e12;

pub fn lattice_spacing(intensity: f64) -> f64 {
    (std::f64::consts::PI / intensity).sqrt()
}

/// Lattice site `sqrt(pi/L) (m + i n)`.
pub fn site(intensity: f64, index: (i64, i64)) -> Complex64 {
    let s = lattice_spacing(intensity);
    Complex64::new(s * index.0 as f64, s * index.1 as f64)
}

/// All indices with `|lambda_mn| <= radius`, in row-major order.
pub fn sites_in_disk(intensity: f64, radius: f64) -> Vec<(i64, i64)> {
    let s = lattice_spacing(intensity);
    let k = (radius / s).floor() as i64;
    let mut out = Vec::new();
    for m in -k..=k {
        for n in -k..=k {
            if site(intensity, (m, n)).norm() <= radius {
                out.push((m, n));
            }
        }
    }
    out
}

/// Matching between zeros and lattice sites of a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeMatching {
    pub intensity: f64,
    pub lattice_spacing: f64,
    pub window_radius: f64,
    /// `(lattice index, zero index)`.
    pub pairs: Vec<((i64, i64), usize)>,
    /// `xi = sqrt(L) (z - lambda)`, aligned with `pairs`.
    pub displacements: Vec<Complex64>,
    pub unmatched_zeros: Vec<usize>,
    pub unmatched_sites: Vec<(i64, i64)>,
    /// Largest dual-feasibility violation of the assignment (0 when optimal).
    pub certificate_gap: f64,
}

impl LatticeMatching {
    pub fn total_squared_displacement(&self) -> f64 {
        self.displacements.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn zero_for(&self, index: (i64, i64)) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == index).map(|p| p.1)
    }
}

/// Minimum total squared displacement matching of the lattice sites in
/// `B_window(0)` to zeros in the buffered disc `B_{window + 3 spacing}(0)`.
pub fn match_lattice(zeros: &ZeroSet, intensity: f64, window: f64) -> Result<LatticeMatching> {
    let spacing = lattice_spacing(intensity);
    let buffer = 3.0 * spacing;
    if window + buffer > zeros.disk_radius + 1e-12 {
        return Err(Error::Domain(format!(
            "window {window} plus buffer {buffer} exceeds the zero-set radius {}",
            zeros.disk_radius
        )));
    }
    let sites = sites_in_disk(intensity, window);
    let zero_idx: Vec<usize> = (0..zeros.len())
        .filter(|&i| zeros.points[i].norm() <= window + buffer)
        .collect();
    let cutoff = 6.0 * spacing * log_star(window);
    let edge = |s: (i64, i64), z: usize| {
        let d = zeros.points[z] - site(intensity, s);
        if d.norm() <= cutoff {
            intensity * d.norm_sqr()
        } else {
            FORBIDDEN
        }
    };
    // rows must not outnumber columns
    let transpose = sites.len() > zero_idx.len();
    let cost: Vec<Vec<f64>> = if transpose {
        zero_idx.iter().map(|&z| sites.iter().map(|&s| edge(s, z)).collect()).collect()
    } else {
        sites.iter().map(|&s| zero_idx.iter().map(|&z| edge(s, z)).collect()).collect()
    };
    let a = solve_assignment(&cost);
    let gap = a.certificate_gap(&cost) / (1.0 + a.total_cost.abs().min(FORBIDDEN));
    let mut raw: Vec<((i64, i64), usize)> = a
        .row_to_col
        .iter()
        .enumerate()
        .map(|(r, &c)| if transpose { (sites[c], zero_idx[r]) } else { (sites[r], zero_idx[c]) })
        .filter(|(s, z)| edge(*s, *z) < FORBIDDEN)
        .collect();
    raw.sort();
    let matched_sites: std::collections::HashSet<(i64, i64)> = raw.iter().map(|p| p.0).collect();
    let matched_zeros: std::collections::HashSet<usize> = raw.iter().map(|p| p.1).collect();
    Ok(LatticeMatching {
        intensity,
        lattice_spacing: spacing,
        window_radius: window,
        displacements: raw
            .iter()
            .map(|(s, z)| intensity.sqrt() * (zeros.points[*z] - site(intensity, *s)))
            .collect(),
        pairs: raw,
        unmatched_zeros: zero_idx.into_iter().filter(|z| !matched_zeros.contains(z)).collect(),
        unmatched_sites: sites.into_iter().filter(|s| !matched_sites.contains(s)).collect(),
        certificate_gap: gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_lattice_has_zero_displacements() {
        let l = 1.0;
        let idx = sites_in_disk(l, 12.0);
        let pts = idx.iter().map(|&i| site(l, i)).collect();
        let z = ZeroSet::from_points(pts, 12.0);
        let m = match_lattice(&z, l, 6.0).unwrap();
        assert!(m.displacements.iter().all(|x| x.norm() < 1e-12));
        assert!(m.unmatched_sites.is_empty());
        assert_eq!(m.pairs.len(), sites_in_disk(l, 6.0).len());
        assert!(m.certificate_gap < 1e-9);
    }

    #[test]
    fn window_precondition() {
        let z = ZeroSet::from_points(vec![Complex64::new(0.0, 0.0)], 5.0);
        assert!(match_lattice(&z, 1.0, 4.0).is_err());
    }
}
