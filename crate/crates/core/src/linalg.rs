//! Matrix functions on Hermitian and positive semidefinite matrices.
//!
//! Everything here works on dense `nalgebra` matrices over `Complex64`. Square
//! roots and inverse square roots go through a full Hermitian
//! eigendecomposition with a fixed eigenvector phase convention, so repeated
//! calls on the same input produce bit-identical results.
//!
//! The decompositions themselves (Hermitian eigensolver, SVD) are delegated
//! to `faer`: nalgebra's complex SVD returns inaccurate singular vectors on
//! some rank-deficient inputs.

use faer::linalg::solvers::Svd;
use faer::{Mat, MatRef, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Numerical tolerances shared by the whole crate.
///
/// The defaults are part of the test contract; change them only through
/// the `*_with` entry points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Max absolute deviation between a matrix and its adjoint.
    pub hermitian: f64,
    /// Eigenvalues in `[-psd_floor, 0)` are clipped to zero.
    pub psd_floor: f64,
    /// Relative Frobenius error allowed when reconstructing from a decomposition.
    pub reconstruction: f64,
    /// Eigenvalues at or below `rank * lambda_max` count as kernel.
    pub rank: f64,
    /// Singular values at or below `polar_kernel * sigma_max` count as kernel
    /// when completing a polar unitary.
    pub polar_kernel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-10,
            psd_floor: 1e-10,
            reconstruction: 1e-9,
            rank: 1e-8,
            polar_kernel: 1e-12,
        }
    }
}

/// Default relative rank tolerance for support detection.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// A square matrix equal to its adjoint (up to `Tolerances::hermitian`).
///
/// The stored entries are always exactly Hermitian: construction replaces the
/// input by `(A + A^†) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::new_with(m, &Tolerances::default())
    }

    pub fn new_with(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        check_square(&m)?;
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let deviation = hermitian_deviation(&m);
        if deviation > tol.hermitian {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::hermitize(m))
    }

    /// Symmetrizes without checking. Use only for matrices that are Hermitian
    /// analytically and off by round-off.
    pub fn hermitize(m: CMatrix) -> Self {
        let adj = m.adjoint();
        Self((m + adj) * Complex64::new(0.5, 0.0))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        Self(CMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }
}

impl AsRef<CMatrix> for HermitianMatrix {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// Eigendecomposition `A = V diag(λ) V^†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V f(Λ) V^†`.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for j in 0..n {
            let s = Complex64::new(f(self.eigenvalues[j]), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        mul(&scaled, &self.eigenvectors.adjoint())
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map_eigenvalues(|x| x)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Number of eigenvalues above `rank_tol * max(λ_max, 0)`.
    pub fn rank(&self, rank_tol: f64) -> usize {
        let cutoff = rank_tol * self.max_eigenvalue().max(0.0);
        self.eigenvalues.iter().filter(|&&l| l > cutoff && l > 0.0).count()
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues and the phase
/// convention "first non-negligible component of each eigenvector is real
/// positive".
pub fn eigh(a: &HermitianMatrix) -> SpectralDecomposition {
    let m = a.matrix();
    let n = m.nrows();
    if is_diagonal(m) {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re).then(i.cmp(&j)));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| m[(i, i)].re));
        let mut eigenvectors = CMatrix::zeros(n, n);
        for (col, &row) in order.iter().enumerate() {
            eigenvectors[(row, col)] = Complex64::new(1.0, 0.0);
        }
        return SpectralDecomposition {
            eigenvalues,
            eigenvectors,
        };
    }

    let eig = to_faer(m)
        .self_adjoint_eigen(Side::Lower)
        .expect("Hermitian eigensolver converges on finite input");
    let values: Vec<f64> = (0..n).map(|i| eig.S()[i].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| values[i]));
    let vectors = from_faer(eig.U());
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        eigenvectors.set_column(col, &vectors.column(src));
    }
    fix_phases(&mut eigenvectors);
    SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// Rotates every column so its first component with modulus above `1e-8`
/// becomes real positive.
pub fn fix_phases(columns: &mut CMatrix) {
    for j in 0..columns.ncols() {
        let pivot = columns.column(j).iter().copied().find(|z| z.norm() > 1e-8);
        if let Some(z) = pivot {
            let phase = z.conj() / z.norm();
            for i in 0..columns.nrows() {
                columns[(i, j)] *= phase;
            }
        }
    }
}

fn check_psd(decomp: &SpectralDecomposition, tol: &Tolerances) -> Result<()> {
    let min = decomp.min_eigenvalue();
    if min < -tol.psd_floor {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(())
}

/// Square root of a positive semidefinite matrix.
pub fn psd_sqrt(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    psd_sqrt_with(a, &Tolerances::default())
}

pub fn psd_sqrt_with(a: &HermitianMatrix, tol: &Tolerances) -> Result<HermitianMatrix> {
    let decomp = eigh(a);
    check_psd(&decomp, tol)?;
    // Eigenvalues at the round-off level of the eigensolver are zeroed:
    // their square roots would otherwise leak O(√ε) weight into the kernel.
    // Diagonal input skips the solver, so its small eigenvalues are exact.
    let noise = if is_diagonal(a.matrix()) {
        0.0
    } else {
        a.dim() as f64 * f64::EPSILON * decomp.max_eigenvalue().max(0.0)
    };
    Ok(HermitianMatrix::hermitize(decomp.map_eigenvalues(|l| {
        if l > noise {
            l.sqrt()
        } else {
            0.0
        }
    })))
}

/// Inverse square root on the support of `a`, zero on its kernel.
///
/// Eigenvalues at or below `rank_tol * λ_max` are treated as kernel.
pub fn pinv_sqrt(a: &HermitianMatrix, rank_tol: f64) -> Result<HermitianMatrix> {
    let tol = Tolerances::default();
    let decomp = eigh(a);
    check_psd(&decomp, &tol)?;
    let cutoff = rank_tol * decomp.max_eigenvalue().max(0.0);
    Ok(HermitianMatrix::hermitize(decomp.map_eigenvalues(|l| {
        if l > cutoff && l > 0.0 {
            1.0 / l.sqrt()
        } else {
            0.0
        }
    })))
}

/// Orthogonal projector onto the support of a PSD matrix.
pub fn support_projector(a: &HermitianMatrix, rank_tol: f64) -> Result<HermitianMatrix> {
    let decomp = eigh(a);
    check_psd(&decomp, &Tolerances::default())?;
    let cutoff = rank_tol * decomp.max_eigenvalue().max(0.0);
    Ok(HermitianMatrix::hermitize(decomp.map_eigenvalues(|l| {
        if l > cutoff && l > 0.0 {
            1.0
        } else {
            0.0
        }
    })))
}

fn to_faer(m: &CMatrix) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: MatRef<'_, Complex64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// `a · b`. Large products go through faer's blocked kernels; nalgebra's
/// generic complex product is an order of magnitude slower at dim 1024.
pub fn mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    if a.nrows() * a.ncols() * b.ncols() < 1 << 15 {
        return a * b;
    }
    from_faer((to_faer(a) * to_faer(b)).as_ref())
}

/// Full SVD `T = U diag(s) V^†` of a square matrix, `s` descending.
pub fn svd(t: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let n = t.nrows();
    let d: Svd<Complex64> = to_faer(t).svd().expect("SVD converges on finite input");
    let s = (0..n.min(t.ncols())).map(|i| d.S()[i].re).collect();
    (from_faer(d.U()), s, from_faer(d.V()))
}

/// Singular values, descending.
pub fn singular_values(t: &CMatrix) -> DVector<f64> {
    if t.nrows() == 0 || t.ncols() == 0 {
        return DVector::zeros(0);
    }
    if is_diagonal(t) {
        let mut s: Vec<f64> = (0..t.nrows().min(t.ncols())).map(|i| t[(i, i)].norm()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        return DVector::from_vec(s);
    }
    let mut s = to_faer(t).singular_values().expect("SVD converges on finite input");
    s.sort_by(|a, b| b.total_cmp(a));
    DVector::from_vec(s)
}

/// `‖T‖_Tr = Tr (T^† T)^{1/2}`, the sum of singular values.
pub fn trace_norm(t: &CMatrix) -> f64 {
    singular_values(t).iter().sum()
}

/// `|T| = (T^† T)^{1/2}`.
pub fn abs_matrix(t: &CMatrix) -> HermitianMatrix {
    let (_, s, v) = svd(t);
    let mut weighted = v.clone();
    for (j, &sj) in s.iter().enumerate() {
        for i in 0..weighted.nrows() {
            weighted[(i, j)] *= Complex64::new(sj, 0.0);
        }
    }
    HermitianMatrix::hermitize(mul(&weighted, &v.adjoint()))
}

/// Unitary `V` with `A·B = V·|A·B|` for PSD `A`, `B`.
///
/// In finite dimension `rank(AB) = rank(BA)`, so the kernels of `AB` and
/// `(AB)^†` have equal dimension and a unitary polar factor always exists.
/// On the kernel, `V` maps the ascending-index orthonormal basis of
/// `ker AB` onto that of `ker (AB)^†`.
pub fn polar_unitary(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<CMatrix> {
    let tol = Tolerances::default();
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    check_psd(&eigh(a), &tol)?;
    check_psd(&eigh(b), &tol)?;
    Ok(polar_unitary_of(&mul(a.matrix(), b.matrix()), &tol))
}

/// Unitary polar factor of an arbitrary square matrix, with the canonical
/// kernel completion described on [`polar_unitary`].
pub fn polar_unitary_of(t: &CMatrix, tol: &Tolerances) -> CMatrix {
    let n = t.nrows();
    assert_eq!(n, t.ncols(), "polar factor needs a square matrix");
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let (u, s, v) = svd(t);
    let s_max = s.iter().cloned().fold(0.0, f64::max);
    let cutoff = tol.polar_kernel * s_max;

    let support: Vec<usize> = (0..s.len()).filter(|&i| s_max > 0.0 && s[i] > cutoff).collect();
    let mut w = CMatrix::zeros(n, n);
    let mut left_support = Vec::with_capacity(support.len());
    let mut right_support = Vec::with_capacity(support.len());
    for &i in &support {
        let ui: CVector = u.column(i).into_owned();
        let vi: CVector = v.column(i).into_owned();
        w += &ui * vi.adjoint();
        left_support.push(ui);
        right_support.push(vi);
    }

    let kernel_dim = n - support.len();
    if kernel_dim > 0 {
        let right_kernel = complete_basis(&right_support, n, kernel_dim);
        let left_kernel = complete_basis(&left_support, n, kernel_dim);
        for (l, r) in left_kernel.iter().zip(&right_kernel) {
            w += l * r.adjoint();
        }
    }
    w
}

/// Extends an orthonormal set by `count` vectors, scanning standard basis
/// vectors in ascending index order (classical Gram-Schmidt, applied twice).
pub fn complete_basis(existing: &[CVector], dim: usize, count: usize) -> Vec<CVector> {
    let mut basis: Vec<CVector> = existing.to_vec();
    let mut added = Vec::with_capacity(count);

    let residual = |basis: &[CVector], j: usize| -> CVector {
        let mut r = CVector::zeros(dim);
        r[j] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in basis {
                let c = b.dotc(&r);
                r -= b * c;
            }
        }
        r
    };

    // Some e_j retains residual norm ≥ 1/sqrt(dim) while the span is
    // incomplete, so a 1e-3 acceptance threshold cannot stall for dim < 10^6.
    for j in 0..dim {
        if added.len() == count {
            break;
        }
        let r = residual(&basis, j);
        let norm = r.norm();
        if norm > 1e-3 {
            let unit = r / Complex64::new(norm, 0.0);
            basis.push(unit.clone());
            added.push(unit);
        }
    }
    while added.len() < count {
        let r = (0..dim)
            .map(|j| residual(&basis, j))
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("dim > 0");
        let norm = r.norm();
        let unit = r / Complex64::new(norm, 0.0);
        basis.push(unit.clone());
        added.push(unit);
    }
    added
}

pub fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn is_diagonal(m: &CMatrix) -> bool {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j && m[(i, j)] != Complex64::new(0.0, 0.0) {
                return false;
            }
        }
    }
    true
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `‖A − B‖_F / max(‖B‖_F, 1e-300)`.
pub fn relative_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Max absolute entry of `U^† U − I`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.ncols();
    max_abs_diff(&(u.adjoint() * u), &CMatrix::identity(n, n))
}

/// Kronecker product `A ⊗ B` under the row-major (system-major) index
/// convention `(i, j) -> i * dim_b + j`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}
