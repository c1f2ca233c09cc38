//! Dense complex linear algebra used throughout the crate.
//!
//! Composite indices are always linearized A-major: the pair `(i, α)` with
//! `i < d_a`, `α < d_b` maps to `i * d_b + α`. Every reshape, partial trace
//! and partial transpose below assumes that convention.

use nalgebra::DMatrix;
use ndarray::{Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{QentError, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance for the Hermiticity check.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues in `[-CLAMP_TOL, 0)` are treated as rounding noise.
pub const CLAMP_TOL: f64 = 1e-10;
/// Allowed deviation of a density spectrum from unit sum.
pub const SPECTRUM_SUM_TOL: f64 = 1e-8;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// A square complex matrix that equals its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates Hermiticity to `HERMITIAN_TOL` relative to the largest entry.
    pub fn new(m: CMatrix) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows != cols {
            return Err(QentError::NotSquare { rows, cols });
        }
        let tolerance = HERMITIAN_TOL * max_abs(&m).max(f64::MIN_POSITIVE);
        let mut worst = (0, 0, 0.0_f64);
        for i in 0..rows {
            for j in i..cols {
                let dev = (m[(i, j)] - m[(j, i)].conj()).norm();
                if dev > worst.2 {
                    worst = (i, j, dev);
                }
            }
        }
        if worst.2 > tolerance {
            return Err(QentError::NonHermitian {
                row: worst.0,
                col: worst.1,
                deviation: worst.2,
                tolerance,
            });
        }
        Ok(Self(m))
    }

    /// Projects onto the Hermitian part, `(m + m†) / 2`.
    pub fn hermitize(m: CMatrix) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows != cols {
            return Err(QentError::NotSquare { rows, cols });
        }
        let adj = m.adjoint();
        Ok(Self((m + adj) * Complex64::new(0.5, 0.0)))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n, n))
    }

    pub fn from_real_diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }
}

/// Eigenvalues sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.0.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.0.last().copied().unwrap_or(0.0)
    }
}

/// Diagonalizes `m = R diag(Λ) R†` with LAPACK `zheevd`, returning Λ
/// descending and the matching columns of `R`.
///
/// nalgebra's `SymmetricEigen` is not used here: on complex Hermitian input
/// it can return wrong eigenvectors, and on exactly degenerate spectra its
/// real path loses accuracy to ~1e-10.
pub fn hermitian_eig(m: &HermitianMatrix) -> Result<(Spectrum, CMatrix)> {
    let n = m.dim();
    if n == 0 {
        return Ok((Spectrum(Vec::new()), CMatrix::zeros(0, 0)));
    }
    let h = m.as_matrix();
    // Column-major, so LAPACK sees `m` itself rather than its transpose.
    let a = Array2::from_shape_fn((n, n).f(), |(r, c)| h[(r, c)]);
    let (values, vectors) = a
        .eigh(UPLO::Lower)
        .map_err(|e| QentError::Eigensolver(e.to_string()))?;
    // LAPACK returns ascending order.
    let spectrum = Spectrum(values.iter().rev().copied().collect());
    let r = CMatrix::from_fn(n, n, |row, k| vectors[(row, n - 1 - k)]);
    Ok((spectrum, r))
}

pub fn eigenvalues(m: &HermitianMatrix) -> Result<Spectrum> {
    Ok(hermitian_eig(m)?.0)
}

fn clamp_threshold(spectrum: &Spectrum) -> f64 {
    CLAMP_TOL * spectrum.max().abs().max(1.0)
}

/// Clamps rounding-level negative eigenvalues to zero and rejects larger ones.
pub fn clamp_nonnegative(spectrum: &Spectrum) -> Result<Vec<f64>> {
    let threshold = clamp_threshold(spectrum);
    if spectrum.min() < -threshold {
        return Err(QentError::NegativeEigenvalue {
            value: spectrum.min(),
            threshold: -threshold,
        });
    }
    Ok(spectrum.values().iter().map(|&v| v.max(0.0)).collect())
}

/// Positive-semidefinite square root.
///
/// Eigenvalues below the eigensolver's backward error (`8 n ε λ_max`) are
/// treated as exact zeros; otherwise `√(1e-16)` noise leaks in at `1e-8`.
pub fn psd_sqrt(m: &HermitianMatrix) -> Result<HermitianMatrix> {
    let (spectrum, vectors) = hermitian_eig(m)?;
    let clamped = clamp_nonnegative(&spectrum)?;
    let floor = 8.0 * m.dim().max(1) as f64 * f64::EPSILON * spectrum.max().max(0.0);
    let mut scaled = vectors.clone();
    for (k, v) in clamped.iter().enumerate() {
        let root = Complex64::new(if *v > floor { v.sqrt() } else { 0.0 }, 0.0);
        scaled.column_mut(k).iter_mut().for_each(|z| *z *= root);
    }
    HermitianMatrix::hermitize(&scaled * vectors.adjoint())
}

/// Exact permanent via Ryser's inclusion-exclusion formula with Gray-code
/// ordering of the column subsets, `O(2^n n)`.
pub fn permanent(m: &CMatrix) -> Result<Complex64> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(QentError::NotSquare { rows, cols });
    }
    let n = rows;
    if n == 0 {
        return Ok(ONE);
    }
    if n > 30 {
        return Err(QentError::Dimension(format!(
            "permanent of a {n}x{n} matrix is out of reach"
        )));
    }
    let mut row_sums = vec![ZERO; n];
    let mut total = ZERO;
    let mut gray: u64 = 0;
    for step in 1u64..(1u64 << n) {
        let next = step ^ (step >> 1);
        let flipped = (gray ^ next).trailing_zeros() as usize;
        let added = next & (1 << flipped) != 0;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if added {
                *s += m[(i, flipped)];
            } else {
                *s -= m[(i, flipped)];
            }
        }
        gray = next;
        let product = row_sums.iter().fold(ONE, |acc, s| acc * s);
        if next.count_ones() % 2 == 1 {
            total -= product;
        } else {
            total += product;
        }
    }
    if n % 2 == 1 {
        total = -total;
    }
    Ok(total)
}

pub fn determinant(m: &CMatrix) -> Result<Complex64> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(QentError::NotSquare { rows, cols });
    }
    match rows {
        0 => Ok(ONE),
        1 => Ok(m[(0, 0)]),
        2 => Ok(m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]),
        _ => Ok(m.clone().lu().determinant()),
    }
}

/// `h(x) = -x ln x` with `h(0) = 0`.
pub fn entropy_term(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// Von Neumann entropy (nats) of a density-matrix spectrum.
pub fn von_neumann_entropy(spectrum: &Spectrum) -> Result<f64> {
    let sum = spectrum.sum();
    if (sum - 1.0).abs() > SPECTRUM_SUM_TOL {
        return Err(QentError::TraceLeak { sum });
    }
    let clamped = clamp_nonnegative(spectrum)?;
    Ok(clamped.into_iter().map(entropy_term).sum())
}

/// Sum of absolute eigenvalues.
pub fn trace_norm_hermitian(m: &HermitianMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?.values().iter().map(|v| v.abs()).sum())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Row-major complex 4-tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    dims: [usize; 4],
    data: Vec<Complex64>,
}

impl Tensor4 {
    pub fn zeros(dims: [usize; 4]) -> Self {
        Self {
            dims,
            data: vec![ZERO; dims.iter().product()],
        }
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    fn offset(&self, idx: [usize; 4]) -> usize {
        let [_, d1, d2, d3] = self.dims;
        ((idx[0] * d1 + idx[1]) * d2 + idx[2]) * d3 + idx[3]
    }

    pub fn get(&self, idx: [usize; 4]) -> Complex64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: [usize; 4], value: Complex64) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }
}

/// `(d0, d1, d2, d3)` tensor to a `(d0 d1) x (d2 d3)` matrix.
pub fn reshape4_to_2(t: &Tensor4) -> CMatrix {
    let [d0, d1, d2, d3] = t.dims;
    CMatrix::from_fn(d0 * d1, d2 * d3, |r, c| {
        t.get([r / d1, r % d1, c / d3, c % d3])
    })
}

/// Inverse of [`reshape4_to_2`].
pub fn reshape2_to_4(m: &CMatrix, dims: [usize; 4]) -> Result<Tensor4> {
    let [d0, d1, d2, d3] = dims;
    if m.shape() != (d0 * d1, d2 * d3) {
        return Err(QentError::Dimension(format!(
            "cannot view a {:?} matrix as a {dims:?} tensor",
            m.shape()
        )));
    }
    let mut t = Tensor4::zeros(dims);
    for i in 0..d0 {
        for a in 0..d1 {
            for j in 0..d2 {
                for b in 0..d3 {
                    t.set([i, a, j, b], m[(i * d1 + a, j * d3 + b)]);
                }
            }
        }
    }
    Ok(t)
}

fn check_bipartite(m: &CMatrix, d_a: usize, d_b: usize) -> Result<()> {
    let n = d_a * d_b;
    if m.shape() != (n, n) {
        return Err(QentError::Dimension(format!(
            "expected a {n}x{n} matrix for d_a={d_a}, d_b={d_b}, got {:?}",
            m.shape()
        )));
    }
    Ok(())
}

/// Regroups `T_{iα,jβ}` into `U_{ij,αβ}`, a `d_a² x d_b²` matrix.
pub fn reorder_u(t: &CMatrix, d_a: usize, d_b: usize) -> Result<CMatrix> {
    check_bipartite(t, d_a, d_b)?;
    let mut u = CMatrix::zeros(d_a * d_a, d_b * d_b);
    for i in 0..d_a {
        for a in 0..d_b {
            for j in 0..d_a {
                for b in 0..d_b {
                    u[(i * d_a + j, a * d_b + b)] = t[(i * d_b + a, j * d_b + b)];
                }
            }
        }
    }
    Ok(u)
}

/// `S̃_{iα,jβ} = S_{iβ,jα}`.
pub fn partial_transpose_b(s: &CMatrix, d_a: usize, d_b: usize) -> Result<CMatrix> {
    check_bipartite(s, d_a, d_b)?;
    Ok(CMatrix::from_fn(d_a * d_b, d_a * d_b, |r, c| {
        let (i, a) = (r / d_b, r % d_b);
        let (j, b) = (c / d_b, c % d_b);
        s[(i * d_b + b, j * d_b + a)]
    }))
}

/// `[S_A]_{ij} = Σ_α S_{iα,jα}`.
pub fn partial_trace_b(s: &CMatrix, d_a: usize, d_b: usize) -> Result<CMatrix> {
    check_bipartite(s, d_a, d_b)?;
    Ok(CMatrix::from_fn(d_a, d_a, |i, j| {
        (0..d_b).map(|a| s[(i * d_b + a, j * d_b + a)]).sum()
    }))
}

/// `[S_B]_{αβ} = Σ_i S_{iα,iβ}`.
pub fn partial_trace_a(s: &CMatrix, d_a: usize, d_b: usize) -> Result<CMatrix> {
    check_bipartite(s, d_a, d_b)?;
    Ok(CMatrix::from_fn(d_b, d_b, |a, b| {
        (0..d_a).map(|i| s[(i * d_b + a, i * d_b + b)]).sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn real(rows: usize, cols: usize, values: &[f64]) -> CMatrix {
        CMatrix::from_row_iterator(rows, cols, values.iter().map(|&v| c(v)))
    }

    #[test]
    fn eig_of_identity_and_diagonal() {
        let (s, r) = hermitian_eig(&HermitianMatrix::identity(3)).unwrap();
        assert_eq!(s.values(), &[1.0, 1.0, 1.0]);
        assert_abs_diff_eq!(
            (r.adjoint() * &r - CMatrix::identity(3, 3)).norm(),
            0.0,
            epsilon = 1e-14
        );

        let (s, _) = hermitian_eig(&HermitianMatrix::from_real_diagonal(&[4.0, 9.0])).unwrap();
        assert_eq!(s.values(), &[9.0, 4.0]);
    }

    #[test]
    fn eig_of_complex_hermitian() {
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = 2.0 * one;
        m[(1, 1)] = 2.0 * one;
        m[(0, 1)] = i;
        m[(1, 0)] = -i;
        // A degenerate pair with a purely imaginary coupling.
        m[(2, 2)] = 0.5 * one;
        m[(3, 3)] = 0.5 * one;
        m[(2, 3)] = 0.25 * i;
        m[(3, 2)] = -0.25 * i;
        let h = HermitianMatrix::new(m.clone()).unwrap();
        let (s, r) = hermitian_eig(&h).unwrap();
        for (a, b) in s.values().iter().zip([3.0, 1.0, 0.75, 0.25]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        let lam = CMatrix::from_fn(4, 4, |a, b| {
            if a == b {
                Complex64::new(s.values()[a], 0.0)
            } else {
                ZERO
            }
        });
        assert_abs_diff_eq!((&r * lam * r.adjoint() - m).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn eig_of_rank_one_block() {
        let (x1, x2) = (0.25_f64, 0.25_f64);
        let off = (x1 * x2).sqrt();
        let m = HermitianMatrix::new(real(2, 2, &[x2, off, off, x1])).unwrap();
        let s = eigenvalues(&m).unwrap();
        assert_abs_diff_eq!(s.values()[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(s.values()[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn non_hermitian_names_worst_pair() {
        let mut m = CMatrix::identity(3, 3);
        m[(0, 2)] = c(0.5);
        match HermitianMatrix::new(m) {
            Err(QentError::NonHermitian { row, col, .. }) => assert_eq!((row, col), (0, 2)),
            other => panic!("expected NonHermitian, got {other:?}"),
        }
    }

    #[test]
    fn sqrt_of_diagonal() {
        let r = psd_sqrt(&HermitianMatrix::from_real_diagonal(&[4.0, 9.0])).unwrap();
        assert_abs_diff_eq!(
            (r.as_matrix() - real(2, 2, &[2.0, 0.0, 0.0, 3.0])).norm(),
            0.0,
            epsilon = 1e-14
        );
        let id = psd_sqrt(&HermitianMatrix::identity(4)).unwrap();
        assert_abs_diff_eq!(
            (id.as_matrix() - CMatrix::identity(4, 4)).norm(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn sqrt_clamps_noise_and_rejects_real_negatives() {
        let noisy = HermitianMatrix::from_real_diagonal(&[1.0, -1e-13]);
        let r = psd_sqrt(&noisy).unwrap();
        assert_eq!(r.as_matrix()[(1, 1)], c(0.0));

        let bad = HermitianMatrix::from_real_diagonal(&[1.0, -1e-6]);
        assert!(matches!(
            psd_sqrt(&bad),
            Err(QentError::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn sqrt_of_one_particle_s() {
        let (x1, x2) = (0.25_f64, 0.25_f64);
        let off = (x1 * x2).sqrt();
        #[rustfmt::skip]
        let s = real(4, 4, &[
            1.0 - x1 - x2, 0.0, 0.0, 0.0,
            0.0, x2, off, 0.0,
            0.0, off, x1, 0.0,
            0.0, 0.0, 0.0, 0.0,
        ]);
        let t = psd_sqrt(&HermitianMatrix::new(s.clone()).unwrap()).unwrap();
        let sq = t.as_matrix() * t.as_matrix();
        assert_abs_diff_eq!((sq - s).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn permanent_small_cases() {
        let a = Complex64::new(0.3, -1.2);
        assert_eq!(permanent(&CMatrix::from_element(1, 1, a)).unwrap(), a);
        assert_abs_diff_eq!(
            permanent(&real(2, 2, &[1.0, 2.0, 3.0, 4.0])).unwrap().re,
            10.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            permanent(&CMatrix::from_element(3, 3, c(1.0))).unwrap().re,
            6.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            permanent(&CMatrix::from_element(5, 5, c(1.0))).unwrap().re,
            120.0,
            epsilon = 1e-9
        );
        assert_eq!(permanent(&CMatrix::zeros(0, 0)).unwrap(), c(1.0));
        assert!(matches!(
            permanent(&CMatrix::zeros(2, 3)),
            Err(QentError::NotSquare { .. })
        ));
    }

    #[test]
    fn determinant_small_cases() {
        assert_abs_diff_eq!(
            determinant(&real(2, 2, &[1.0, 2.0, 3.0, 4.0])).unwrap().re,
            -2.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            determinant(&CMatrix::identity(5, 5)).unwrap().re,
            1.0,
            epsilon = 1e-14
        );
        let a0 = c(0.25);
        let ad = Complex64::new(0.1, -0.07);
        let m = CMatrix::from_row_slice(2, 2, &[a0, ad, ad.conj(), a0]);
        let d = determinant(&m).unwrap();
        assert_abs_diff_eq!(d.re, 0.0625 - ad.norm_sqr(), epsilon = 1e-15);
        assert_abs_diff_eq!(d.im, 0.0, epsilon = 1e-15);
        assert!(matches!(
            determinant(&CMatrix::zeros(3, 1)),
            Err(QentError::NotSquare { .. })
        ));
    }

    #[test]
    fn entropy_values() {
        assert_eq!(
            von_neumann_entropy(&Spectrum::new(vec![1.0, 0.0, 0.0])).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            von_neumann_entropy(&Spectrum::new(vec![0.5, 0.5])).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        // ρ_AA' spectrum of the one-particle state at x1 = x2 = 1/4.
        let r = 0.5_f64.sqrt();
        let spec = Spectrum::new(vec![0.125, 0.125, (0.75 + r) / 2.0, (0.75 - r) / 2.0]);
        assert_abs_diff_eq!(
            von_neumann_entropy(&spec).unwrap(),
            0.832991061399,
            epsilon = 1e-11
        );
    }

    #[test]
    fn entropy_rejects_trace_leak() {
        assert!(matches!(
            von_neumann_entropy(&Spectrum::new(vec![0.5, 0.4])),
            Err(QentError::TraceLeak { .. })
        ));
    }

    #[test]
    fn trace_norms() {
        assert_eq!(
            trace_norm_hermitian(&HermitianMatrix::new(CMatrix::zeros(3, 3)).unwrap()).unwrap(),
            0.0
        );
        let m = HermitianMatrix::from_real_diagonal(&[0.6, -0.1, 0.5]);
        assert_abs_diff_eq!(trace_norm_hermitian(&m).unwrap(), 1.2, epsilon = 1e-14);
        // Partially transposed one-particle state at x1 = x2 = 1/4.
        #[rustfmt::skip]
        let st = real(4, 4, &[
            0.5, 0.0, 0.0, 0.25,
            0.0, 0.25, 0.0, 0.0,
            0.0, 0.0, 0.25, 0.0,
            0.25, 0.0, 0.0, 0.0,
        ]);
        let tn = trace_norm_hermitian(&HermitianMatrix::new(st).unwrap()).unwrap();
        assert_abs_diff_eq!(tn, 0.5 + 0.5_f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(tn, 1.207107, epsilon = 1e-6);
    }

    #[test]
    fn kron_convention() {
        let i6 = kron(&CMatrix::identity(2, 2), &CMatrix::identity(3, 3));
        assert_eq!(i6, CMatrix::identity(6, 6));
        let a = real(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = real(2, 2, &[5.0, 6.0, 7.0, 8.0]);
        let k = kron(&a, &b);
        assert_eq!(k[(1, 2)], a[(0, 1)] * b[(1, 0)]);
        let d = kron(
            &real(2, 2, &[2.0, 0.0, 0.0, 3.0]),
            &real(2, 2, &[5.0, 0.0, 0.0, 7.0]),
        );
        let diag: Vec<f64> = d.diagonal().iter().map(|z| z.re).collect();
        assert_eq!(diag, vec![10.0, 14.0, 15.0, 21.0]);
    }

    #[test]
    fn reshape_round_trip() {
        let dims = [2, 3, 2, 3];
        let m = CMatrix::from_fn(6, 6, |r, c| Complex64::new(r as f64, c as f64 * 0.5));
        let t = reshape2_to_4(&m, dims).unwrap();
        assert_eq!(t.get([1, 2, 0, 1]), m[(5, 1)]);
        assert_eq!(reshape4_to_2(&t), m);
        assert!(reshape2_to_4(&m, [2, 2, 2, 2]).is_err());
    }

    #[test]
    fn one_particle_u_matrix() {
        let (x1, x2) = (0.2_f64, 0.3_f64);
        let s = x1 + x2;
        let off = (x1 * x2).sqrt();
        #[rustfmt::skip]
        let rho = real(4, 4, &[
            1.0 - s, 0.0, 0.0, 0.0,
            0.0, x2, off, 0.0,
            0.0, off, x1, 0.0,
            0.0, 0.0, 0.0, 0.0,
        ]);
        let t = psd_sqrt(&HermitianMatrix::new(rho).unwrap()).unwrap();
        let u = reorder_u(t.as_matrix(), 2, 2).unwrap();
        #[rustfmt::skip]
        let expected = real(4, 4, &[
            (1.0 - s).sqrt(), 0.0, 0.0, x2 / s.sqrt(),
            0.0, 0.0, (x1 * x2 / s).sqrt(), 0.0,
            0.0, (x1 * x2 / s).sqrt(), 0.0, 0.0,
            x1 / s.sqrt(), 0.0, 0.0, 0.0,
        ]);
        assert_abs_diff_eq!((u - expected).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_operations_on_one_particle_state() {
        let (x1, x2) = (0.25_f64, 0.25_f64);
        let off = (x1 * x2).sqrt();
        #[rustfmt::skip]
        let s = real(4, 4, &[
            1.0 - x1 - x2, 0.0, 0.0, 0.0,
            0.0, x2, off, 0.0,
            0.0, off, x1, 0.0,
            0.0, 0.0, 0.0, 0.0,
        ]);
        let st = partial_transpose_b(&s, 2, 2).unwrap();
        assert_eq!(st[(0, 3)], c(off));
        assert_eq!(st[(3, 0)], c(off));
        assert_eq!(st[(1, 2)], c(0.0));
        let sa = partial_trace_b(&s, 2, 2).unwrap();
        assert_eq!(sa, real(2, 2, &[1.0 - x1, 0.0, 0.0, x1]));
        let sb = partial_trace_a(&s, 2, 2).unwrap();
        assert_eq!(sb, real(2, 2, &[1.0 - x2, 0.0, 0.0, x2]));
    }
}
