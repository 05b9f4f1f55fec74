//! Nearest-neighbour and product separation of finite planar point sets.

use std::collections::HashMap;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform bucket grid over the plane.
pub struct GridIndex<T: Scalar> {
    cell: T,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl<T: Scalar> GridIndex<T> {
    pub fn new(points: &[Complex<T>], cell: T) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, z) in points.iter().enumerate() {
            buckets.entry(Self::key_for(cell, *z)).or_default().push(i);
        }
        Self { cell, buckets }
    }

    fn key_for(cell: T, z: Complex<T>) -> (i64, i64) {
        (
            (z.re / cell).floor().to_i64().unwrap_or(0),
            (z.im / cell).floor().to_i64().unwrap_or(0),
        )
    }

    pub fn key(&self, z: Complex<T>) -> (i64, i64) {
        Self::key_for(self.cell, z)
    }

    pub fn cell(&self) -> T {
        self.cell
    }

    /// Indices in the `(2 ring + 1)^2` block of cells centred on `key`.
    pub fn block(&self, key: (i64, i64), ring: i64) -> impl Iterator<Item = usize> + '_ {
        (-ring..=ring).flat_map(move |dx| {
            (-ring..=ring).flat_map(move |dy| {
                self.buckets
                    .get(&(key.0 + dx, key.1 + dy))
                    .into_iter()
                    .flatten()
                    .copied()
            })
        })
    }

    /// Indices on the boundary ring of cells at Chebyshev distance `ring`.
    fn ring(&self, key: (i64, i64), ring: i64) -> Vec<usize> {
        let mut out = Vec::new();
        for dx in -ring..=ring {
            for dy in -ring..=ring {
                if dx.abs().max(dy.abs()) != ring {
                    continue;
                }
                if let Some(b) = self.buckets.get(&(key.0 + dx, key.1 + dy)) {
                    out.extend_from_slice(b);
                }
            }
        }
        out
    }

    /// Indices of points within distance `< r` of `z` (candidates, unfiltered).
    pub fn candidates_within(&self, z: Complex<T>, r: T) -> impl Iterator<Item = usize> + '_ {
        let ring = (r / self.cell).ceil().to_i64().unwrap_or(1).max(1);
        self.block(self.key(z), ring)
    }
}

/// `s(z) = min_{w != z} |z - w|` for every point.
pub fn nearest_separation<T: Scalar>(points: &[Complex<T>]) -> Result<Vec<T>> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: n });
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for z in points {
        lo = Complex::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = Complex::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    // square bounding box so collinear sets still get a sensible cell
    let side = (hi.re - lo.re).max(hi.im - lo.im);
    let mut cell = side / T::from_usize_lossy(n).sqrt();
    if !(cell > T::zero()) || !cell.is_finite() {
        cell = T::one();
    }
    let grid = GridIndex::new(points, cell);
    let max_ring = (side / cell).ceil().to_i64().unwrap_or(0) + 1;
    let out = points
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let key = grid.key(*z);
            let mut best = T::infinity();
            let mut ring = 0;
            loop {
                for j in grid.ring(key, ring) {
                    if j != i {
                        best = best.min((*z - points[j]).norm());
                    }
                }
                // every point beyond this ring is at least `ring * cell` away
                if best <= T::from_i64(ring).unwrap() * cell || ring > max_ring {
                    break;
                }
                ring += 1;
            }
            best
        })
        .collect();
    Ok(out)
}

/// `S(z) = prod_{w in B_1(z), w != z} |z - w|`; points are distinguished by
/// index so exact duplicates give 0.
pub fn product_separation<T: Scalar>(points: &[Complex<T>]) -> Vec<T> {
    let grid = GridIndex::new(points, T::one());
    points
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let mut prod = T::one();
            for j in grid.block(grid.key(*z), 1) {
                if j == i {
                    continue;
                }
                let d = (*z - points[j]).norm();
                if d < T::one() {
                    prod *= d;
                }
            }
            prod
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    #[test]
    fn nearest_examples() {
        let s = nearest_separation(&[C::new(0.0, 0.0), C::new(0.5, 0.0)]).unwrap();
        assert_eq!(s, vec![0.5, 0.5]);
        let s = nearest_separation(&[C::new(0.0, 0.0), C::new(0.3, 0.0), C::new(1.0, 0.0)]).unwrap();
        assert!((s[0] - 0.3).abs() < 1e-15 && (s[1] - 0.3).abs() < 1e-15 && (s[2] - 0.7).abs() < 1e-15);
        assert!(matches!(nearest_separation(&[C::new(0.0, 0.0)]), Err(Error::InsufficientPoints { .. })));
    }

    #[test]
    fn product_examples() {
        assert_eq!(product_separation(&[C::new(0.0, 0.0), C::new(5.0, 0.0)]), vec![1.0, 1.0]);
        let s = product_separation(&[C::new(0.0, 0.0), C::new(0.3, 0.0), C::new(0.0, 0.4)]);
        assert!((s[0] - 0.12).abs() < 1e-15);
        let dup = product_separation(&[C::new(1.0, 1.0), C::new(1.0, 1.0)]);
        assert_eq!(dup, vec![0.0, 0.0]);
    }

    #[test]
    fn single_precision() {
        let s = nearest_separation(&[Complex::<f32>::new(0.0, 0.0), Complex::new(0.25, 0.0)]).unwrap();
        assert_eq!(s, vec![0.25f32, 0.25]);
    }
}
