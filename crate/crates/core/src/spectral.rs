//! Small dense matrices and the Perron root of nonnegative matrices.
//!
//! Matrices here are tiny (one row per vertex type), so everything is plain
//! `O(n^3)` arithmetic. Only the Perron root and vector are ever needed, which
//! power iteration on `A + I` delivers: the shift keeps the Perron vector,
//! moves the root to `ρ(A) + 1` and removes the periodic eigenvalues of the
//! same modulus that stall the unshifted iteration.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

/// Default 1-norm eigen-residual tolerance for power iteration.
pub const POWER_TOL: f64 = 1e-12;
/// Default iteration cap for power iteration.
pub const POWER_MAX_ITER: usize = 1_000_000;
/// Pivots smaller than this (relative to the largest entry) count as zero.
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },
    #[error("matrix is singular: no usable pivot in column {column}")]
    Singular { column: usize },
    #[error("matrix has a negative entry at ({row}, {col})")]
    Negative { row: usize, col: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("Perron root {rho} outside the row-sum bounds [{lo}, {hi}]")]
    RowSumBound { rho: f64, lo: f64, hi: f64 },
}

/// Square dense `f64` matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix rows must be square");
        Self::from_fn(n, |i, j| rows[i][j])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(self.n, |i, j| s * self[(i, j)])
    }

    pub fn add(&self, other: &Matrix) -> Self {
        assert_eq!(self.n, other.n);
        Self::from_fn(self.n, |i, j| self[(i, j)] + other[(i, j)])
    }

    pub fn sub(&self, other: &Matrix) -> Self {
        assert_eq!(self.n, other.n);
        Self::from_fn(self.n, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn mul(&self, other: &Matrix) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| v[i] * self[(i, j)]).sum())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check_nonnegative(&self) -> Result<(), SpectralError> {
        for i in 0..self.n {
            for j in 0..self.n {
                if self[(i, j)] < 0.0 {
                    return Err(SpectralError::Negative { row: i, col: j });
                }
            }
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let cells: Vec<String> = self.row(i).iter().map(|x| format!("{x:>12.6}")).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

impl serde::Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

/// Exact twin of [`Matrix`] over arbitrary-precision rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    n: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(n: usize) -> Self {
        RationalMatrix {
            n,
            data: vec![Rational::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { Rational::one() } else { Rational::zero() })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Rational) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        RationalMatrix { n, data }
    }

    /// Entries given as `(numerator, denominator)` pairs.
    pub fn from_ratios(rows: &[Vec<(i64, i64)>]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |i, j| {
            let (p, q) = rows[i][j];
            Rational::new(p.into(), q.into())
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn to_f64(&self) -> Matrix {
        Matrix::from_fn(self.n, |i, j| self[(i, j)].to_f64().unwrap_or(f64::NAN))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].clone())
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Self::from_fn(self.n, |i, j| &self[(i, j)] * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_fn(self.n, |i, j| &self[(i, j)] + &other[(i, j)])
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_fn(self.n, |i, j| &self[(i, j)] - &other[(i, j)])
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| {
            (0..n).fold(Rational::zero(), |acc, k| acc + &self[(i, k)] * &other[(k, j)])
        })
    }

    /// Exact Gauss-Jordan inverse; any nonzero pivot is acceptable.
    pub fn inverse(&self) -> Result<Self, SpectralError> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !a[(r, col)].is_zero())
                .ok_or(SpectralError::Singular { column: col })?;
            if pivot != col {
                a.swap_rows(pivot, col);
                inv.swap_rows(pivot, col);
            }
            let p = a[(col, col)].clone();
            for j in 0..n {
                a[(col, j)] = &a[(col, j)] / &p;
                inv[(col, j)] = &inv[(col, j)] / &p;
            }
            for r in 0..n {
                if r == col || a[(r, col)].is_zero() {
                    continue;
                }
                let factor = a[(r, col)].clone();
                for j in 0..n {
                    let da = &factor * &a[(col, j)];
                    let di = &factor * &inv[(col, j)];
                    a[(r, j)] -= da;
                    inv[(r, j)] -= di;
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, r1: usize, r2: usize) {
        for j in 0..self.n {
            self.data.swap(r1 * self.n + j, r2 * self.n + j);
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|q| !q.is_negative())
    }
}

impl Index<(usize, usize)> for RationalMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let cells: Vec<String> = (0..self.n).map(|j| format!("{:>8}", self[(i, j)].to_string())).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

impl serde::Serialize for RationalMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)].to_string()).collect())
            .collect();
        rows.serialize(s)
    }
}

/// Settings for [`perron`]. Defaults: residual `1e-12`, at most `10^6`
/// iterations.
#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration {
            tol: POWER_TOL,
            max_iter: POWER_MAX_ITER,
        }
    }
}

/// Perron root and unit-1-norm Perron vector of a nonnegative matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Perron {
    pub root: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Power iteration on `A + I`, stopped once `‖A v − ρ v‖₁ ≤ tol · max(ρ, 1)`.
pub fn perron(a: &Matrix, settings: PowerIteration) -> Result<Perron, SpectralError> {
    a.check_nonnegative()?;
    let n = a.dim();
    if n == 0 {
        return Err(SpectralError::Dimension(0, 0));
    }
    let shifted = a.add(&Matrix::identity(n));
    let mut v = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for iter in 1..=settings.max_iter {
        let w = shifted.mul_vec(&v);
        let norm: f64 = w.iter().sum();
        v = w.into_iter().map(|x| x / norm).collect();
        let av = a.mul_vec(&v);
        let rho = av.iter().sum::<f64>();
        residual = av.iter().zip(&v).map(|(x, y)| (x - rho * y).abs()).sum();
        if residual <= settings.tol * rho.max(1.0) {
            let root = rho.max(0.0);
            check_row_sum_bounds(a, root)?;
            return Ok(Perron {
                root,
                vector: v,
                iterations: iter,
            });
        }
    }
    Err(SpectralError::NoConvergence {
        iterations: settings.max_iter,
        residual,
        last_iterate: v,
    })
}

fn check_row_sum_bounds(a: &Matrix, rho: f64) -> Result<(), SpectralError> {
    let sums = a.row_sums();
    let lo = sums.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-9 * hi.max(1.0);
    if rho < lo - slack || rho > hi + slack {
        return Err(SpectralError::RowSumBound { rho, lo, hi });
    }
    Ok(())
}

/// Perron root `ρ(A)` of a nonnegative matrix, to residual `tol`.
pub fn spectral_radius(a: &Matrix, tol: f64) -> Result<f64, SpectralError> {
    perron(
        a,
        PowerIteration {
            tol,
            ..PowerIteration::default()
        },
    )
    .map(|p| p.root)
}

/// Positive right Perron vector, normalized to unit 1-norm.
pub fn perron_vector(a: &Matrix, tol: f64) -> Result<Vec<f64>, SpectralError> {
    perron(
        a,
        PowerIteration {
            tol,
            ..PowerIteration::default()
        },
    )
    .map(|p| p.vector)
}

/// Gaussian elimination with partial pivoting.
pub fn inverse(a: &Matrix) -> Result<Matrix, SpectralError> {
    let n = a.dim();
    let scale = a.data.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let mut m = a.clone();
    let mut inv = Matrix::identity(n);
    for col in 0..n {
        let (pivot, best) = (col..n)
            .map(|r| (r, m[(r, col)].abs()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= PIVOT_TOL * scale {
            return Err(SpectralError::Singular { column: col });
        }
        if pivot != col {
            for j in 0..n {
                m.data.swap(pivot * n + j, col * n + j);
                inv.data.swap(pivot * n + j, col * n + j);
            }
        }
        let p = m[(col, col)];
        for j in 0..n {
            m[(col, j)] /= p;
            inv[(col, j)] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = m[(r, col)];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                m[(r, j)] -= factor * m[(col, j)];
                inv[(r, j)] -= factor * inv[(col, j)];
            }
        }
    }
    Ok(inv)
}

/// `I + (D − I)(I − M)⁻¹`, whose Perron root is the leaf growth rate `γ`.
pub fn gamma_matrix(d: &Matrix, m: &Matrix) -> Result<Matrix, SpectralError> {
    if d.dim() != m.dim() {
        return Err(SpectralError::Dimension(d.dim(), m.dim()));
    }
    let id = Matrix::identity(d.dim());
    let v = inverse(&id.sub(m))?;
    Ok(id.add(&d.sub(&id).mul(&v)))
}

/// Exact twin of [`gamma_matrix`].
pub fn gamma_matrix_exact(d: &RationalMatrix, m: &RationalMatrix) -> Result<RationalMatrix, SpectralError> {
    if d.dim() != m.dim() {
        return Err(SpectralError::Dimension(d.dim(), m.dim()));
    }
    let id = RationalMatrix::identity(d.dim());
    let v = id.sub(m).inverse()?;
    Ok(id.add(&d.sub(&id).mul(&v)))
}

/// `γ = (α−1)ψ/(α−ψ)`: the Perron root of `I + (D−I)(I − D/α)⁻¹` when
/// `ρ(D) = ψ`.
pub fn gamma_closed_form(psi: f64, alpha: f64) -> Result<f64, SpectralError> {
    if psi == alpha {
        return Err(SpectralError::Domain(format!("psi equals alpha ({alpha})")));
    }
    Ok((alpha - 1.0) * psi / (alpha - psi))
}

/// Primitivity test on the support graph: some power of `A` strictly
/// positive, with the Wielandt bound `(n−1)² + 1` on the exponent.
pub fn is_primitive(a: &Matrix) -> bool {
    let n = a.dim();
    let support: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| a[(i, j)] > 0.0).collect()).collect();
    let mut power = support.clone();
    let bound = (n - 1) * (n - 1) + 1;
    for _ in 1..bound.max(1) {
        if power.iter().flatten().all(|&x| x) {
            return true;
        }
        power = bool_mul(&power, &support);
    }
    power.iter().flatten().all(|&x| x)
}

fn bool_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).any(|k| a[i][k] && b[k][j])).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn appendix_m() -> Matrix {
        Matrix::from_rows(&[
            vec![0.6, 0.6, 0.8, 0.0, 0.0],
            vec![0.5, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.5, 0.0],
            vec![0.0, 0.0, 0.0, 0.0, 0.5],
            vec![0.0, 0.5, 0.0, 0.0, 0.0],
        ])
    }

    #[test]
    fn appendix_radii() {
        let rho = spectral_radius(&appendix_m(), POWER_TOL).unwrap();
        assert!((rho - 0.967).abs() < 5e-4, "{rho}");
        let bar = Matrix::from_rows(&[vec![0.75, 0.75], vec![0.5, 0.0]]);
        let rho = spectral_radius(&bar, POWER_TOL).unwrap();
        assert!((rho - 1.093).abs() < 5e-4, "{rho}");
    }

    #[test]
    fn identity_radius_and_vector() {
        for n in 1..5 {
            let id = Matrix::identity(n);
            assert_eq!(spectral_radius(&id, POWER_TOL).unwrap(), 1.0);
            assert_eq!(perron_vector(&id, POWER_TOL).unwrap(), vec![1.0 / n as f64; n]);
        }
    }

    #[test]
    fn periodic_matrix_converges_thanks_to_shift() {
        let swap = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let p = perron(&swap, PowerIteration::default()).unwrap();
        assert_eq!(p.root, 1.0);
        assert_eq!(p.vector, vec![0.5, 0.5]);
    }

    /// Closed-form 2x2 oracle: for [[0,a],[b,0]] the root is sqrt(ab) and the
    /// eigenvector is proportional to (a, sqrt(ab)).
    #[test]
    fn two_by_two_against_closed_form() {
        let a = Matrix::from_rows(&[vec![0.0, 2.0], vec![1.0, 0.0]]);
        let p = perron(&a, PowerIteration::default()).unwrap();
        let root = 2f64.sqrt();
        assert!((p.root - root).abs() < 1e-11);
        let (x, y) = (2.0, root);
        let expect = [x / (x + y), y / (x + y)];
        assert!((p.vector[0] - expect[0]).abs() < 1e-11);
        assert!((p.vector[1] - expect[1]).abs() < 1e-11);
        assert!((expect[0] - 2.0 / (2.0 + root)).abs() < 1e-15);
    }

    #[test]
    fn rejects_negative_entries() {
        let a = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
        assert!(matches!(spectral_radius(&a, POWER_TOL), Err(SpectralError::Negative { row: 0, col: 1 })));
    }

    #[test]
    fn reports_non_convergence() {
        let a = appendix_m();
        let err = perron(&a, PowerIteration { tol: 0.0, max_iter: 5 }).unwrap_err();
        match err {
            SpectralError::NoConvergence {
                iterations,
                last_iterate,
                ..
            } => {
                assert_eq!(iterations, 5);
                assert_eq!(last_iterate.len(), 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inverse_small_cases() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.5, 0.0]]);
        let v = inverse(&Matrix::identity(2).sub(&m)).unwrap();
        // adjugate of [[1,-1],[-1/2,1]] over det 1/2
        assert!(v.max_abs_diff(&Matrix::from_rows(&[vec![2.0, 2.0], vec![1.0, 2.0]])) < 1e-14);
        assert_eq!(inverse(&Matrix::identity(3)).unwrap(), Matrix::identity(3));

        let bar = Matrix::from_rows(&[vec![0.75, 0.75], vec![0.5, 0.0]]);
        let v = inverse(&Matrix::identity(2).sub(&bar)).unwrap();
        // I - M̄ = [[1/4,-3/4],[-1/2,1]], det = 1/4 - 3/8 = -1/8
        let expect = Matrix::from_rows(&[vec![-8.0, -6.0], vec![-4.0, -2.0]]);
        assert!(v.max_abs_diff(&expect) < 1e-13);
    }

    #[test]
    fn singular_pivot_is_named() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(inverse(&a).unwrap_err(), SpectralError::Singular { column: 1 });
        let q = RationalMatrix::from_ratios(&[vec![(1, 1), (2, 1)], vec![(2, 1), (4, 1)]]);
        assert_eq!(q.inverse().unwrap_err(), SpectralError::Singular { column: 1 });
    }

    #[test]
    fn exact_inverse() {
        let i_minus_m = RationalMatrix::from_ratios(&[vec![(1, 1), (-1, 1)], vec![(-1, 2), (1, 1)]]);
        let v = i_minus_m.inverse().unwrap();
        assert_eq!(v, RationalMatrix::from_ratios(&[vec![(2, 1), (2, 1)], vec![(1, 1), (2, 1)]]));
        assert_eq!(i_minus_m.mul(&v), RationalMatrix::identity(2));
    }

    #[test]
    fn gamma_matrix_cases() {
        let g = gamma_matrix(&Matrix::from_rows(&[vec![2.0]]), &Matrix::from_rows(&[vec![2.0 / 3.0]])).unwrap();
        assert!((g[(0, 0)] - 4.0).abs() < 1e-12);

        let d = Matrix::from_rows(&[vec![0.0, 2.0], vec![1.0, 0.0]]);
        let g = gamma_matrix(&d, &d.scale(0.5)).unwrap();
        let gamma = spectral_radius(&g, POWER_TOL).unwrap();
        assert!((gamma - (1.0 + 2f64.sqrt())).abs() < 1e-10);

        let id = Matrix::identity(1);
        let g = gamma_matrix(&id, &Matrix::from_rows(&[vec![0.5]])).unwrap();
        assert_eq!(g, Matrix::identity(1));
    }

    #[test]
    fn gamma_closed_form_cases() {
        assert_eq!(gamma_closed_form(1.5, 2.0).unwrap(), 3.0);
        assert_eq!(gamma_closed_form(1.0, 3.0).unwrap(), 1.0);
        assert_eq!(gamma_closed_form(1.0, 0.5).unwrap(), 1.0);
        let s = 2f64.sqrt();
        assert!((gamma_closed_form(s, 2.0).unwrap() - 2.414_213_56).abs() < 1e-8);
        assert!(matches!(gamma_closed_form(2.0, 2.0), Err(SpectralError::Domain(_))));
    }

    #[test]
    fn primitivity() {
        assert!(is_primitive(&appendix_m()));
        assert!(!is_primitive(&Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])));
        assert!(is_primitive(&Matrix::from_rows(&[vec![0.0, 1.0], vec![0.5, 0.0]]).add(&Matrix::from_rows(&[vec![0.1, 0.0], vec![0.0, 0.0]]))));
        assert!(is_primitive(&Matrix::from_rows(&[vec![0.5]])));
        assert!(!is_primitive(&Matrix::from_rows(&[vec![0.0]])));
    }
}
