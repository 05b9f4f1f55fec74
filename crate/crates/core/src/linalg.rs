//! Small dense complex linear algebra: LU determinants and inverses,
//! Hermitian eigenvalues by cyclic Jacobi rotations, Cholesky factors and
//! Ryser permanents. Matrices here are at most a few hundred wide.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{abs2, Scalar};

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + other[(i, j)])
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * s)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + abs2(*z)).sqrt()
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Assemble `[[a, b], [c, d]]` from four blocks.
    pub fn block(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        let (n, m) = (a.rows, a.cols);
        Self::from_fn(n + c.rows, m + b.cols, |i, j| match (i < n, j < m) {
            (true, true) => a[(i, j)],
            (true, false) => b[(i, j - m)],
            (false, true) => c[(i - n, j)],
            (false, false) => d[(i - n, j - m)],
        })
    }

    pub fn submatrix(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(row0 + i, col0 + j)])
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(Complex::new(T::zero(), T::zero()), |acc, j| acc + self[(i, j)] * v[j])
            })
            .collect()
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorisation with partial pivoting, `P A = L U`, stored compactly.
#[derive(Clone, Debug)]
pub struct Lu<T: Scalar> {
    lu: CMatrix<T>,
    perm: Vec<usize>,
    sign: T,
    singular: bool,
}

impl<T: Scalar> Lu<T> {
    pub fn new(a: &CMatrix<T>) -> Self {
        assert!(a.is_square(), "LU requires a square matrix");
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let mut singular = false;
        for k in 0..n {
            let mut pivot = k;
            let mut best = lu[(k, k)].norm();
            for i in k + 1..n {
                let v = lu[(i, k)].norm();
                if v > best {
                    best = v;
                    pivot = i;
                }
            }
            if best == T::zero() {
                singular = true;
                continue;
            }
            if pivot != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(pivot, j)];
                    lu[(pivot, j)] = tmp;
                }
                perm.swap(k, pivot);
                sign = -sign;
            }
            let inv = Complex::new(T::one(), T::zero()) / lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] * inv;
                lu[(i, k)] = factor;
                if factor.re == T::zero() && factor.im == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - factor * u;
                }
            }
        }
        Self { lu, perm, sign, singular }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn determinant(&self) -> Complex<T> {
        if self.singular {
            return Complex::new(T::zero(), T::zero());
        }
        let mut det = Complex::new(self.sign, T::zero());
        for i in 0..self.lu.rows {
            det = det * self.lu[(i, i)];
        }
        det
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if self.singular {
            return Err(Error::Domain("singular matrix".into()));
        }
        let n = self.lu.rows;
        let mut x: Vec<Complex<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                x[i] = x[i] - l * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                x[i] = x[i] - u * x[j];
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<CMatrix<T>> {
        let n = self.lu.rows;
        let mut out = CMatrix::zeros(n, n);
        let mut e = vec![Complex::new(T::zero(), T::zero()); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = Complex::new(T::zero(), T::zero()));
            e[j] = Complex::new(T::one(), T::zero());
            let col = self.solve(&e)?;
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        Ok(out)
    }
}

/// Determinant by LU with partial pivoting.
pub fn determinant<T: Scalar>(a: &CMatrix<T>) -> Complex<T> {
    Lu::new(a).determinant()
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations,
/// returned in ascending order.
pub fn hermitian_eigenvalues<T: Scalar>(a: &CMatrix<T>) -> Vec<T> {
    assert!(a.is_square(), "eigenvalues need a square matrix");
    let n = a.rows;
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)].im = T::zero();
    }
    let total = m.norm().max(T::min_positive_value());
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off += abs2(m[(p, q)]);
            }
        }
        if off.sqrt() <= eps * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= eps * eps * total {
                    continue;
                }
                let phase = apq / r;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (T::lit(2.0) * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                let pc = phase.conj();
                // columns: A <- A U with U = [[c, s], [-s*conj(e), c*conj(e)]]
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * c - akq * pc * s;
                    m[(k, q)] = akp * s + akq * pc * c;
                }
                // rows: A <- U^* A
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = apk * c - aqk * phase * s;
                    m[(q, k)] = apk * s + aqk * phase * c;
                }
                m[(p, q)] = Complex::new(T::zero(), T::zero());
                m[(q, p)] = Complex::new(T::zero(), T::zero());
                m[(p, p)].im = T::zero();
                m[(q, q)].im = T::zero();
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| m[(i, i)].re).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    ev
}

/// Lower Cholesky factor `L` with `A = L L^*` for Hermitian positive definite `A`.
pub fn cholesky<T: Scalar>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    let n = a.rows;
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= abs2(l[(j, k)]);
        }
        if !(d > T::zero()) {
            return Err(Error::Domain("matrix is not positive definite".into()));
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex::new(djj, T::zero());
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Largest matrix size accepted by [`permanent`].
pub const MAX_PERMANENT_SIZE: usize = 8;

/// Permanent via Ryser's inclusion-exclusion formula with Gray-code row-sum updates.
pub fn permanent<T: Scalar>(a: &CMatrix<T>) -> Result<Complex<T>> {
    let n = a.rows;
    if !a.is_square() {
        return Err(Error::Domain("permanent needs a square matrix".into()));
    }
    if n > MAX_PERMANENT_SIZE {
        return Err(Error::Unsupported(format!("permanent of size {n} exceeds cap {MAX_PERMANENT_SIZE}")));
    }
    if n == 0 {
        return Ok(Complex::new(T::one(), T::zero()));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let mut row_sums = vec![zero; n];
    let mut in_set = vec![false; n];
    let mut total = zero;
    let mut size = 0usize;
    for k in 1u32..(1u32 << n) {
        let j = k.trailing_zeros() as usize;
        if in_set[j] {
            in_set[j] = false;
            size -= 1;
            for i in 0..n {
                row_sums[i] = row_sums[i] - a[(i, j)];
            }
        } else {
            in_set[j] = true;
            size += 1;
            for i in 0..n {
                row_sums[i] = row_sums[i] + a[(i, j)];
            }
        }
        let prod = row_sums.iter().fold(Complex::new(T::one(), T::zero()), |acc, v| acc * *v);
        if size % 2 == 0 {
            total = total + prod;
        } else {
            total = total - prod;
        }
    }
    Ok(if n % 2 == 0 { total } else { -total })
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn permanent_brute(a: &CMatrix<f64>) -> C {
        fn rec(a: &CMatrix<f64>, row: usize, used: &mut Vec<bool>) -> C {
            if row == a.rows() {
                return c(1.0, 0.0);
            }
            let mut s = c(0.0, 0.0);
            for j in 0..a.cols() {
                if !used[j] {
                    used[j] = true;
                    s += a[(row, j)] * rec(a, row + 1, used);
                    used[j] = false;
                }
            }
            s
        }
        rec(a, 0, &mut vec![false; a.cols()])
    }

    #[test]
    fn determinant_of_known_matrix() {
        let m = CMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)],
        ]);
        let d = determinant(&m);
        assert!((d - c(-1.0, 0.0)).norm() < 1e-14, "{d}");
    }

    #[test]
    fn inverse_roundtrip() {
        let m = CMatrix::from_fn(4, 4, |i, j| c((i * 3 + j) as f64 * 0.3 + if i == j { 4.0 } else { 0.0 }, (i as f64) - (j as f64) * 0.5));
        let inv = Lu::new(&m).inverse().unwrap();
        let id = m.matmul(&inv);
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - c(e, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_two_by_two_closed_form() {
        let a = 1.0 + (-1.0f64).exp();
        let b = (-1.0f64).exp();
        let m = CMatrix::from_rows(&[vec![c(a, 0.0), c(b, 0.0)], vec![c(b, 0.0), c(b, 0.0)]]);
        let ev = hermitian_eigenvalues(&m);
        let tr = a + b;
        let det = a * b - b * b;
        let disc = (tr * tr / 4.0 - det).sqrt();
        assert!((ev[0] - (tr / 2.0 - disc)).abs() < 1e-14);
        assert!((ev[1] - (tr / 2.0 + disc)).abs() < 1e-14);
    }

    #[test]
    fn jacobi_complex_hermitian() {
        // eigenvalues of [[2, i], [-i, 2]] are 1 and 3
        let m = CMatrix::from_rows(&[vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(2.0, 0.0)]]);
        let ev = hermitian_eigenvalues(&m);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_trace_and_determinant_preserved() {
        let b = CMatrix::from_fn(6, 6, |i, j| c(((i + 1) * (j + 2)) as f64 % 7.0 - 3.0, ((i * j) % 5) as f64 - 2.0));
        let h = b.adjoint().matmul(&b).add(&CMatrix::identity(6));
        let ev = hermitian_eigenvalues(&h);
        let trace: f64 = (0..6).map(|i| h[(i, i)].re).sum();
        assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-10 * trace.abs());
        let det = determinant(&h).re;
        let prod: f64 = ev.iter().product();
        assert!((prod - det).abs() < 1e-8 * det.abs().max(1.0));
        assert!(ev[0] >= -1e-10);
    }

    #[test]
    fn cholesky_reconstructs() {
        let b = CMatrix::from_fn(3, 3, |i, j| c((i + j) as f64 + if i == j { 3.0 } else { 0.0 }, (i as f64) - (j as f64)));
        let h = b.adjoint().matmul(&b);
        let l = cholesky(&h).unwrap();
        let back = l.matmul(&l.adjoint());
        assert!(back.sub(&h).norm() < 1e-12 * h.norm());
    }

    #[test]
    fn ryser_matches_brute_force() {
        for n in 1..=6 {
            let m = CMatrix::from_fn(n, n, |i, j| c(((i * 7 + j * 3) % 5) as f64 - 1.5, ((i + 2 * j) % 3) as f64 * 0.5));
            let p = permanent(&m).unwrap();
            let q = permanent_brute(&m);
            assert!((p - q).norm() <= 1e-10 * q.norm().max(1.0), "n={n}: {p} vs {q}");
        }
    }

    #[test]
    fn permanent_of_ones_is_factorial() {
        let m = CMatrix::<f64>::from_fn(5, 5, |_, _| c(1.0, 0.0));
        assert!((permanent(&m).unwrap().re - 120.0).abs() < 1e-10);
        assert!(permanent(&CMatrix::<f64>::identity(9)).is_err());
    }
}
