//! Dense complex linear algebra on small Hilbert spaces.
//!
//! Basis indices follow a single convention throughout the crate: particle 1
//! is the most significant digit, so `|j1 j2 j3>` with per-particle dimension
//! `D` maps to `j1*D^2 + j2*D + j3`.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest Hilbert dimension any operation will build.
pub const MAX_DIM: usize = 10_000;

/// Absolute Hermiticity tolerance for unit-scale matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be a square.
    pub fn from_row_major(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self { dim, data: entries })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        Self::from_fn(dim, |r, c| Complex64::new(rows[r][c], 0.0))
    }

    /// `|v><v|`
    pub fn outer(v: &[Complex64]) -> Self {
        Self::from_fn(v.len(), |r, c| v[r] * v[c].conj())
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)])
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[r * n..(r + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok((0..self.dim)
            .map(|r| {
                self.data[r * self.dim..(r + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<Complex64> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut acc = ZERO;
        for r in 0..n {
            for k in 0..n {
                acc += self.data[r * n + k] * other.data[k * n + r];
            }
        }
        Ok(acc)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest elementwise modulus of `A - A^dagger`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() < tol
    }

    /// `(A + A^dagger) / 2`
    pub fn symmetrized(&self) -> Self {
        Self::from_fn(self.dim, |r, c| (self[(r, c)] + self[(c, r)].conj()) * 0.5)
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix dimensions must agree")
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for r in 0..self.dim {
            write!(f, "  ")?;
            for c in 0..self.dim {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product with `a` as the more significant factor.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = a
        .dim
        .checked_mul(b.dim)
        .filter(|&d| d <= MAX_DIM)
        .ok_or(Error::TooLarge {
            dim: a.dim.saturating_mul(b.dim),
            max: MAX_DIM,
        })?;
    Ok(ComplexMatrix::from_fn(dim, |r, c| {
        a[(r / b.dim, c / b.dim)] * b[(r % b.dim, c % b.dim)]
    }))
}

/// Mixed-radix helper for per-particle basis digits (most significant first).
#[derive(Debug, Clone)]
pub(crate) struct Radix {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl Radix {
    pub(crate) fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidSubsystem(format!(
                "per-particle dimensions must be nonempty and positive, got {dims:?}"
            )));
        }
        let mut strides = vec![1; dims.len()];
        let mut total: usize = 1;
        for k in (0..dims.len()).rev() {
            strides[k] = total;
            total = total.checked_mul(dims[k]).filter(|&t| t <= MAX_DIM).ok_or(
                Error::TooLarge {
                    dim: usize::MAX,
                    max: MAX_DIM,
                },
            )?;
        }
        Ok(Self {
            dims: dims.to_vec(),
            strides,
            total,
        })
    }

    #[inline]
    pub(crate) fn digit(&self, index: usize, k: usize) -> usize {
        (index / self.strides[k]) % self.dims[k]
    }

    fn check(&self, rho: &ComplexMatrix) -> Result<()> {
        if rho.dim() != self.total {
            return Err(Error::DimensionMismatch {
                expected: self.total,
                found: rho.dim(),
            });
        }
        Ok(())
    }
}

/// Reduced state on the particles in `keep`, tracing out the rest.
///
/// The kept particles stay in their original relative order.
pub fn partial_trace(rho: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let radix = Radix::new(dims)?;
    radix.check(rho)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.is_empty() {
        return Err(Error::InvalidSubsystem("keep set is empty".into()));
    }
    if let Some(&bad) = kept.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::InvalidSubsystem(format!(
            "particle index {bad} out of range for {} particles",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();

    let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let reduced_index = |i: usize| {
        kept.iter()
            .fold(0usize, |acc, &k| acc * dims[k] + radix.digit(i, k))
    };
    let traced_key = |i: usize| {
        traced
            .iter()
            .fold(0usize, |acc, &k| acc * dims[k] + radix.digit(i, k))
    };

    let n = rho.dim();
    let red: Vec<usize> = (0..n).map(reduced_index).collect();
    let key: Vec<usize> = (0..n).map(traced_key).collect();
    let mut out = ComplexMatrix::zeros(out_dim);
    for i in 0..n {
        for j in 0..n {
            if key[i] == key[j] {
                out[(red[i], red[j])] += rho[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Transposes the indices of one particle, leaving the rest untouched.
pub fn partial_transpose(
    rho: &ComplexMatrix,
    dims: &[usize],
    subsystem: usize,
) -> Result<ComplexMatrix> {
    let radix = Radix::new(dims)?;
    radix.check(rho)?;
    if subsystem >= dims.len() {
        return Err(Error::InvalidSubsystem(format!(
            "particle index {subsystem} out of range for {} particles",
            dims.len()
        )));
    }
    let stride = radix.strides[subsystem];
    Ok(ComplexMatrix::from_fn(rho.dim(), |r, c| {
        let dr = radix.digit(r, subsystem);
        let dc = radix.digit(c, subsystem);
        let src_r = r - dr * stride + dc * stride;
        let src_c = c - dc * stride + dr * stride;
        rho[(src_r, src_c)]
    }))
}

/// Spectrum of a Hermitian matrix in ascending order with matching
/// orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k]` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: Vec<Vec<Complex64>>,
}

impl EigenResult {
    pub fn min(&self) -> (f64, &[Complex64]) {
        (self.eigenvalues[0], &self.eigenvectors[0])
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Full eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
///
/// The input is symmetrized before iterating; inputs whose deviation from
/// Hermiticity exceeds `HERMITIAN_TOL` (scaled by the largest entry when that
/// exceeds one) are rejected.
pub fn eig_hermitian(a: &ComplexMatrix) -> Result<EigenResult> {
    let n = a.dim();
    let scale = a.max_abs().max(1.0);
    let deviation = a.hermitian_deviation();
    if deviation >= HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { deviation });
    }
    if n == 0 {
        return Ok(EigenResult {
            eigenvalues: vec![],
            eigenvectors: vec![],
        });
    }

    let mut m = a.symmetrized();
    for i in 0..n {
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
    }
    let mut v = ComplexMatrix::identity(n);

    let total_norm = m.frobenius_norm();
    let threshold = (f64::EPSILON * total_norm).powi(2);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| m[(r, c)].norm_sqr())
            .sum();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 || mag * mag <= threshold / (n * n) as f64 {
                    continue;
                }
                rotate(&mut m, &mut v, p, q, apq, mag);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]));

    let eigenvalues = order.iter().map(|&k| diag[k]).collect();
    let eigenvectors = order
        .iter()
        .map(|&k| (0..n).map(|r| v[(r, k)]).collect())
        .collect();
    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
    })
}

/// One Jacobi step zeroing `m[p][q]`. The unitary is a phase on column `q`
/// (making the pivot real) followed by a real Givens rotation.
fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, apq: Complex64, mag: f64) {
    let n = m.dim();
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    // f64::signum(0.0) == 1.0, which picks the 45 degree rotation for equal diagonals.
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // phase = e^{-i arg(apq)}
    let phase = apq.conj() / mag;

    // U block: [[c, s], [-s*phase, c*phase]]
    let u_qp = -phase * s;
    let u_qq = phase * c;

    // columns: M <- M U
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * c + mkq * u_qp;
        m[(k, q)] = mkp * s + mkq * u_qq;
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c + vkq * u_qp;
        v[(k, q)] = vkp * s + vkq * u_qq;
    }
    // rows: M <- U^dagger M
    let cu_qp = u_qp.conj();
    let cu_qq = u_qq.conj();
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = mpk * c + mqk * cu_qp;
        m[(q, k)] = mpk * s + mqk * cu_qq;
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::diagonal(&[1.0, -1.0])
    }

    fn bell() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::outer(&[c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)])
    }

    #[test]
    fn identity_tensor_identity() {
        let i4 = tensor(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(i4, ComplexMatrix::identity(4));
    }

    #[test]
    fn zz_on_basis_zero_is_plus_one() {
        let zz = tensor(&pauli_z(), &pauli_z()).unwrap();
        let mut e0 = vec![c(0.0, 0.0); 4];
        e0[0] = c(1.0, 0.0);
        let out = zz.mat_vec(&e0).unwrap();
        assert_eq!(out[0], c(1.0, 0.0));
    }

    #[test]
    fn x_on_first_particle_flips_most_significant_digit() {
        let xi = tensor(&pauli_x(), &ComplexMatrix::identity(2)).unwrap();
        let mut e00 = vec![c(0.0, 0.0); 4];
        e00[0] = c(1.0, 0.0);
        let out = xi.mat_vec(&e00).unwrap();
        let expected: Vec<_> = [0.0, 0.0, 1.0, 0.0].iter().map(|&x| c(x, 0.0)).collect();
        assert_eq!(out, expected);
    }

    #[test]
    fn tensor_rejects_oversized_result() {
        let big = ComplexMatrix::identity(101);
        assert!(matches!(tensor(&big, &big), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn trace_of_product_state() {
        let rho = ComplexMatrix::diagonal(&[1.0, 0.0, 0.0, 0.0]);
        let red = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        assert_eq!(red, ComplexMatrix::diagonal(&[1.0, 0.0]));
    }

    #[test]
    fn trace_of_bell_state_is_maximally_mixed() {
        let red = partial_trace(&bell(), &[2, 2], &[0]).unwrap();
        let expected = ComplexMatrix::diagonal(&[0.5, 0.5]);
        assert!(red.max_abs_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn keeping_everything_is_identity_map() {
        let rho = bell();
        assert_eq!(partial_trace(&rho, &[2, 2], &[1, 0]).unwrap(), rho);
    }

    #[test]
    fn partial_trace_errors() {
        let rho = bell();
        assert!(matches!(
            partial_trace(&rho, &[2, 3], &[0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(partial_trace(&rho, &[2, 2], &[]).is_err());
        assert!(partial_trace(&rho, &[2, 2], &[2]).is_err());
    }

    #[test]
    fn diagonal_state_is_unchanged_by_partial_transpose() {
        let rho = ComplexMatrix::diagonal(&[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(partial_transpose(&rho, &[2, 2], 1).unwrap(), rho);
    }

    #[test]
    fn bell_partial_transpose_has_negative_half() {
        let pt = partial_transpose(&bell(), &[2, 2], 0).unwrap();
        let eig = eig_hermitian(&pt).unwrap();
        assert!((eig.eigenvalues[0] + 0.5).abs() < 1e-12);
        for &v in &eig.eigenvalues[1..] {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_transpose_is_an_involution() {
        let rho = ComplexMatrix::from_fn(8, |r, col| c((r * 3 + col) as f64, (r as f64) - (col as f64)));
        let twice =
            partial_transpose(&partial_transpose(&rho, &[2, 2, 2], 1).unwrap(), &[2, 2, 2], 1)
                .unwrap();
        assert_eq!(twice, rho);
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = eig_hermitian(&ComplexMatrix::identity(8)).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0; 8]);
    }

    #[test]
    fn pauli_x_eigenvalues() {
        let eig = eig_hermitian(&pauli_x()).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pauli_y_eigenpairs() {
        let y = ComplexMatrix::from_row_major(2, vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
            .unwrap();
        let eig = eig_hermitian(&y).unwrap();
        for (lambda, vec) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
            let av = y.mat_vec(vec).unwrap();
            for (a, b) in av.iter().zip(vec) {
                assert!((a - b * lambda).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let a = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(eig_hermitian(&a), Err(Error::NotHermitian { .. })));
    }
}
