//! Dense linear algebra for small matrices and a fixed-step RK4 integrator.
//!
//! Everything here is sized for desk-scale problems (a few dozen rows at
//! most). Storage is row-major `Vec<f64>`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Smallest admissible pivot magnitude after row exchange.
pub const PIVOT_EPS: f64 = 1e-12;
/// Maximum tolerated asymmetry for routines that require symmetric input.
pub const SYM_EPS: f64 = 1e-10;
/// Relative residual bound promised by [`lu_solve`].
pub const RESID_TOL: f64 = 1e-10;
/// Off-diagonal Frobenius norm at which Jacobi sweeps stop.
pub const JACOBI_OFF_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from row slices. Panics on ragged input; intended for
    /// literals.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn column(values: &[f64]) -> Self {
        Matrix {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn row_vector(values: &[f64]) -> Self {
        Matrix {
            rows: 1,
            cols: values.len(),
            data: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, k: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * k).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "mul_vec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest |a_ij − a_ji|; `INFINITY` for non-square input.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn symmetric_part(&self) -> Matrix {
        (self + &self.transpose()).scale(0.5)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        Lu::factor(self)?.inverse()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Matrix,
    perm: Vec<usize>,
    min_pivot: f64,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let (p, big) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if big < PIVOT_EPS {
                return Err(Error::SingularMatrix {
                    column: k,
                    pivot: big,
                });
            }
            min_pivot = min_pivot.min(big);
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor != 0.0 {
                    for j in (k + 1)..n {
                        lu[(i, j)] -= factor * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Lu {
            n,
            lu,
            perm,
            min_pivot,
        })
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn determinant(&self) -> f64 {
        let mut swaps = 0;
        let mut seen = vec![false; self.n];
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                j = self.perm[j];
                len += 1;
            }
            swaps += len - 1;
        }
        let sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
        sign * (0..self.n).map(|i| self.lu[(i, i)]).product::<f64>()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::Dimension(format!(
                "rhs has length {}, expected {n}",
                b.len()
            )));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = dot(&self.lu.row(i)[..i], &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s = dot(&self.lu.row(i)[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.n;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn lu_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    Lu::factor(a)?.solve(b)
}

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi
/// rotations.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    let asym = a.asymmetry();
    if asym > SYM_EPS {
        return Err(Error::NotSymmetric(asym));
    }
    let n = a.rows;
    let mut m = a.symmetric_part();
    let scale = m.frobenius_norm().max(1.0);
    let off = |m: &Matrix| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = off(&m) < JACOBI_OFF_TOL * scale;
    let mut sweep = 0;
    while !converged {
        if sweep == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                what: "Jacobi eigenvalue sweep",
                iterations: sweep,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
        sweep += 1;
        converged = off(&m) < JACOBI_OFF_TOL * scale;
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    Ok(eig)
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Largest singular value.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    let gram = if a.rows <= a.cols {
        a * &a.transpose()
    } else {
        &a.transpose() * a
    };
    let eig = symmetric_eigenvalues(&gram)?;
    Ok(eig.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Smallest singular value of a square matrix.
pub fn min_singular_value(a: &Matrix) -> Result<f64> {
    let eig = symmetric_eigenvalues(&(&a.transpose() * a))?;
    Ok(eig.first().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Coefficients of `det(λI − A)`, lowest degree first, leading 1 last
/// (Faddeev–LeVerrier).
pub fn characteristic_polynomial(a: &Matrix) -> Vec<f64> {
    let n = a.rows;
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut m = Matrix::zeros(n, n);
    for k in 1..=n {
        let mut next = a * &m;
        for i in 0..n {
            next[(i, i)] += coeffs[n - k + 1];
        }
        m = next;
        coeffs[n - k] = -(a * &m).trace() / k as f64;
    }
    coeffs
}

/// Complex roots of a monic polynomial given lowest-degree-first
/// (Durand–Kerner with a Newton polish).
pub fn polynomial_roots(monic: &[f64]) -> Result<Vec<Complex64>> {
    let n = monic.len().saturating_sub(1);
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = monic[n];
    let c: Vec<f64> = monic.iter().map(|v| v / lead).collect();
    let eval = |z: Complex64| c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &k| acc * z + k);
    let deriv = |z: Complex64| {
        c.iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, (k, &ck)| acc * z + ck * k as f64)
    };
    let radius = 1.0 + c[..n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * radius.min(2.0)).collect();

    const MAX_ITER: usize = 2000;
    let mut iter = 0;
    loop {
        let mut change = 0.0f64;
        for i in 0..n {
            let zi = roots[i];
            let denom = roots
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .fold(Complex64::new(1.0, 0.0), |acc, (_, zj)| acc * (zi - zj));
            if denom.norm() == 0.0 {
                roots[i] += Complex64::new(1e-8, 1e-8);
                change = f64::INFINITY;
                continue;
            }
            let step = eval(zi) / denom;
            roots[i] = zi - step;
            change = change.max(step.norm());
        }
        iter += 1;
        if change < 1e-15 * radius {
            break;
        }
        if iter >= MAX_ITER {
            // multiple roots converge only linearly; accept if residuals are small
            let worst = roots.iter().map(|z| eval(*z).norm()).fold(0.0, f64::max);
            if worst < 1e-8 * radius.powi(n as i32) {
                break;
            }
            return Err(Error::NoConvergence {
                what: "polynomial root iteration",
                iterations: iter,
            });
        }
    }
    for z in roots.iter_mut() {
        for _ in 0..3 {
            let d = deriv(*z);
            if d.norm() < 1e-14 {
                break;
            }
            *z -= eval(*z) / d;
        }
    }
    Ok(roots)
}

/// Eigenvalues of a general square matrix via its characteristic polynomial.
/// Adequate for the n ≤ ~8 matrices used for internal models.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return Err(Error::Dimension("eigenvalues need a square matrix".into()));
    }
    polynomial_roots(&characteristic_polynomial(a))
}

/// Right-hand side of an autonomous or time-varying ODE `ẋ = f(t, x)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]);
}

impl<F> OdeSystem for (usize, F)
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.0
    }
    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        (self.1)(t, x, dx)
    }
}

/// Classical fourth-order Runge–Kutta with reusable stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `x` in place from `t` to `t + h`.
    pub fn step<S: OdeSystem + ?Sized>(&mut self, sys: &S, t: f64, x: &mut [f64], h: f64) -> Result<()> {
        let n = x.len();
        debug_assert_eq!(n, sys.dim());
        let bad = |k: &[f64]| k.iter().any(|v| !v.is_finite());

        sys.rhs(t, x, &mut self.k1);
        if bad(&self.k1) {
            return Err(Error::NonFiniteState { t });
        }
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        sys.rhs(t + 0.5 * h, &self.tmp, &mut self.k2);
        if bad(&self.k2) {
            return Err(Error::NonFiniteState { t });
        }
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        sys.rhs(t + 0.5 * h, &self.tmp, &mut self.k3);
        if bad(&self.k3) {
            return Err(Error::NonFiniteState { t });
        }
        for i in 0..n {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        sys.rhs(t + h, &self.tmp, &mut self.k4);
        if bad(&self.k4) {
            return Err(Error::NonFiniteState { t });
        }
        for i in 0..n {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        if bad(x) {
            return Err(Error::NonFiniteState { t: t + h });
        }
        Ok(())
    }
}

/// One RK4 step returning the new state.
pub fn rk4_step<S: OdeSystem + ?Sized>(sys: &S, t: f64, x: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let mut out = x.to_vec();
    Rk4::new(x.len()).step(sys, t, &mut out, h)?;
    Ok(out)
}

/// Integrates from `t0` over `steps` steps of size `h`; returns the final state.
pub fn integrate<S: OdeSystem + ?Sized>(sys: &S, t0: f64, x0: &[f64], h: f64, steps: usize) -> Result<Vec<f64>> {
    let mut x = x0.to_vec();
    let mut rk = Rk4::new(x.len());
    for k in 0..steps {
        rk.step(sys, t0 + k as f64 * h, &mut x, h)?;
    }
    Ok(x)
}

/// Least-squares slope of `ys` against `ts`. `None` with fewer than two
/// distinct abscissae.
pub fn ls_slope(ts: &[f64], ys: &[f64]) -> Option<f64> {
    let n = ts.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mt = ts.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = ts.iter().map(|t| (t - mt) * (t - mt)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = ts.iter().zip(ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lu_solve_examples() {
        let x = lu_solve(&Matrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
        let x = lu_solve(&Matrix::from_rows(&[[2.0, 0.0], [0.0, 4.0]]), &[2.0, 8.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
        let x = lu_solve(&Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]), &[3.0, 5.0]).unwrap();
        assert_eq!(x, vec![5.0, 3.0]);
    }

    #[test]
    fn lu_rejects_singular() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(matches!(lu_solve(&a, &[1.0, 1.0]), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn determinant_tracks_row_swaps() {
        let a = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        assert_abs_diff_eq!(Lu::factor(&a).unwrap().determinant(), -1.0);
        let b = Matrix::from_rows(&[[0.0, 0.0, 2.0], [0.0, 3.0, 0.0], [5.0, 0.0, 0.0]]);
        assert_abs_diff_eq!(Lu::factor(&b).unwrap().determinant(), -30.0, epsilon = 1e-12);
    }

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(symmetric_eigenvalues(&Matrix::identity(3)).unwrap(), vec![1.0; 3]);
        assert_eq!(
            symmetric_eigenvalues(&Matrix::diag(&[3.0, 1.0, 2.0])).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        let c4 = Matrix::from_rows(&[
            [2.0, -1.0, 0.0, -1.0],
            [-1.0, 2.0, -1.0, 0.0],
            [0.0, -1.0, 2.0, -1.0],
            [-1.0, 0.0, -1.0, 2.0],
        ]);
        let eig = symmetric_eigenvalues(&c4).unwrap();
        for (got, want) in eig.iter().zip([0.0, 2.0, 2.0, 4.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn eigenvalues_reject_asymmetric() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]);
        assert!(matches!(symmetric_eigenvalues(&a), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn kron_examples() {
        let k = kron(&Matrix::identity(2), &Matrix::from_rows(&[[5.0]]));
        assert_eq!(k, Matrix::diag(&[5.0, 5.0]));
        assert_eq!(kron(&Matrix::identity(2), &Matrix::identity(2)), Matrix::identity(4));
        let k = kron(&Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]), &Matrix::from_rows(&[[2.0]]));
        assert_eq!(k, Matrix::from_rows(&[[0.0, 2.0], [2.0, 0.0]]));
    }

    #[test]
    fn rk4_examples() {
        let zero = (1, |_t: f64, _x: &[f64], dx: &mut [f64]| dx[0] = 0.0);
        assert_eq!(rk4_step(&zero, 0.0, &[7.0], 0.1).unwrap(), vec![7.0]);

        let decay = (1, |_t: f64, x: &[f64], dx: &mut [f64]| dx[0] = -x[0]);
        // stages: k1=-1, k2=-0.95, k3=-0.9525, k4=-0.90475
        let x = rk4_step(&decay, 0.0, &[1.0], 0.1).unwrap();
        assert_abs_diff_eq!(x[0], 0.904_837_5, epsilon = 1e-12);

        let rot = (2, |_t: f64, v: &[f64], dv: &mut [f64]| {
            dv[0] = v[1];
            dv[1] = -v[0];
        });
        let h = 1e-3;
        let steps = (std::f64::consts::FRAC_PI_2 / h).floor() as usize;
        let mut v = integrate(&rot, 0.0, &[1.0, 0.0], h, steps).unwrap();
        let rest = std::f64::consts::FRAC_PI_2 - steps as f64 * h;
        v = rk4_step(&rot, steps as f64 * h, &v, rest).unwrap();
        assert_abs_diff_eq!(v[0], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(v[1], -1.0, epsilon = 1e-8);
    }

    #[test]
    fn rk4_flags_non_finite() {
        let blow = (1, |_t: f64, _x: &[f64], dx: &mut [f64]| dx[0] = f64::NAN);
        assert!(matches!(rk4_step(&blow, 0.0, &[1.0], 0.1), Err(Error::NonFiniteState { .. })));
    }

    #[test]
    fn characteristic_polynomial_of_companion() {
        let m = Matrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-3.0, -7.0, -5.0]]);
        let c = characteristic_polynomial(&m);
        for (got, want) in c.iter().zip([3.0, 7.0, 5.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn roots_of_known_polynomials() {
        // λ(λ²+1)(λ²+4) = λ⁵ + 5λ³ + 4λ
        let mut r = polynomial_roots(&[0.0, 4.0, 0.0, 5.0, 0.0, 1.0]).unwrap();
        r.sort_by(|a, b| a.im.total_cmp(&b.im));
        let want = [-2.0, -1.0, 0.0, 1.0, 2.0];
        for (z, w) in r.iter().zip(want) {
            assert_abs_diff_eq!(z.re, 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(z.im, w, epsilon = 1e-10);
        }
        let mut r = polynomial_roots(&[120.0, 274.0, 225.0, 85.0, 15.0, 1.0]).unwrap();
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        for (z, w) in r.iter().zip([-5.0, -4.0, -3.0, -2.0, -1.0]) {
            assert_abs_diff_eq!(z.re, w, epsilon = 1e-9);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn slope_of_line() {
        let ts = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = ts.iter().map(|t| 1.0 - 2.0 * t).collect();
        assert_abs_diff_eq!(ls_slope(&ts, &ys).unwrap(), -2.0, epsilon = 1e-14);
        assert!(ls_slope(&[1.0], &[1.0]).is_none());
    }
}
