//! Small-distance pair counts and their power-law exponent.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::separation::GridIndex;
use crate::stats::fit_line_weighted;
use crate::zeros::ZeroSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairScaling {
    pub radii: Vec<f64>,
    /// Ordered pairs at distance `< radius` per unit area.
    pub density: Vec<f64>,
    pub raw_counts: Vec<u64>,
    pub slope: f64,
    pub slope_se: f64,
    /// Radii dropped from the fit because no pair was seen.
    pub excluded: Vec<f64>,
}

/// Ordered pairs `(z, w)` with `|z - w| < radius` and `z` in the inner disc
/// (buffer 1) of one set, per radius, with the inner-disc area.
pub fn pair_counts(set: &ZeroSet, radii: &[f64]) -> (Vec<u64>, f64) {
    let mut counts = vec![0u64; radii.len()];
    let inner = set.disk_radius - 1.0;
    if inner <= 0.0 || radii.is_empty() {
        return (counts, 0.0);
    }
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    let grid = GridIndex::new(&set.points, rmax.max(0.05));
    for (i, z) in set.points.iter().enumerate() {
        if z.norm() > inner {
            continue;
        }
        for j in grid.candidates_within(*z, rmax) {
            if j == i {
                continue;
            }
            let d = (z - set.points[j]).norm();
            for (k, r) in radii.iter().enumerate() {
                if d < *r {
                    counts[k] += 1;
                }
            }
        }
    }
    (counts, std::f64::consts::PI * inner * inner)
}

/// Fit `log N` against `log radius` from pooled counts over a total area,
/// weighting each radius by its count (inverse Poisson variance of `log N`).
pub fn fit_pair_counts(radii: &[f64], counts: &[u64], area: f64) -> Result<PairScaling> {
    if radii.len() < 4 || radii.iter().any(|r| !(*r > 0.0 && *r <= 0.5)) {
        return Err(Error::Domain("need at least 4 radii in (0, 0.5]".into()));
    }
    if counts.len() != radii.len() || !(area > 0.0) {
        return Err(Error::Domain("counts must align with radii over a positive area".into()));
    }
    let density: Vec<f64> = counts.iter().map(|c| *c as f64 / area).collect();
    let (mut x, mut y, mut w, mut excluded) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (k, r) in radii.iter().enumerate() {
        if counts[k] == 0 {
            excluded.push(*r);
        } else {
            x.push(r.ln());
            y.push(density[k].ln());
            // Poisson counts: var(log N) ~ 1/N
            w.push(counts[k] as f64);
        }
    }
    if x.len() < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: x.len() });
    }
    let fit = fit_line_weighted(&x, &y, &w);
    Ok(PairScaling {
        radii: radii.to_vec(),
        density,
        raw_counts: counts.to_vec(),
        slope: fit.slope,
        slope_se: fit.slope_se,
        excluded,
    })
}

/// Pair counts pooled over the ensemble, fitted on a log-log scale.
pub fn pair_count_scaling(ensemble: &[ZeroSet], radii: &[f64]) -> Result<PairScaling> {
    if ensemble.len() < 100 {
        return Err(Error::InsufficientPoints {
            needed: 100,
            got: ensemble.len(),
        });
    }
    if radii.len() < 4 || radii.iter().any(|r| !(*r > 0.0 && *r <= 0.5)) {
        return Err(Error::Domain("need at least 4 radii in (0, 0.5]".into()));
    }
    let mut counts = vec![0u64; radii.len()];
    let mut area = 0.0;
    for set in ensemble {
        let (c, a) = pair_counts(set, radii);
        counts.iter_mut().zip(c).for_each(|(t, x)| *t += x);
        area += a;
    }
    fit_pair_counts(radii, &counts, area)
}

/// Homogeneous Poisson process of the given intensity in `B_radius(0)`.
pub fn poisson_process(intensity: f64, radius: f64, seed: u64) -> ZeroSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = intensity * std::f64::consts::PI * radius * radius;
    let n = Poisson::new(mean).expect("positive mean").sample(&mut rng) as usize;
    let pts = (0..n)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let t = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            Complex64::from_polar(r, t)
        })
        .collect();
    ZeroSet::from_points(pts, radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubled_fixture_is_flat() {
        // every point duplicated at distance 0.01, otherwise well separated
        let ensemble: Vec<ZeroSet> = (0..100)
            .map(|_| {
                let mut pts = Vec::new();
                for m in -3..=3 {
                    for n in -3..=3 {
                        let z = Complex64::new(m as f64 * 1.5, n as f64 * 1.5);
                        pts.push(z);
                        pts.push(z + Complex64::new(0.01, 0.0));
                    }
                }
                ZeroSet::from_points(pts, 5.0)
            })
            .collect();
        let s = pair_count_scaling(&ensemble, &[0.05, 0.1, 0.2, 0.4]).unwrap();
        assert!(s.slope.abs() < 1e-12, "{s:?}");
    }

    #[test]
    fn rejects_bad_input() {
        let e = vec![ZeroSet::from_points(vec![], 3.0); 10];
        assert!(pair_count_scaling(&e, &[0.1, 0.2, 0.3, 0.4]).is_err());
        let e = vec![ZeroSet::from_points(vec![], 3.0); 100];
        assert!(pair_count_scaling(&e, &[0.1, 0.2, 0.3]).is_err());
        assert!(pair_count_scaling(&e, &[0.1, 0.2, 0.3, 0.7]).is_err());
    }
}
