//! POVMs, induced classical distributions, and the measurements that attain
//! or approach the quantum fidelity and trace distance.
//!
//! Every finite-dimensional Hermitian matrix is diagonalizable, so the
//! fidelity-optimal POVM built from the eigenbasis of
//! `M = ρ^{-1/2} √(√ρ σ √ρ) ρ^{-1/2}` always exists here. The truncation
//! construction is kept anyway: it is the measurement that approaches the
//! fidelity for states only known through finite sections.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fidelity::{fidelity, same_dim};
use crate::linalg::{
    self, abs_matrix, eigh, fix_phases, pinv_sqrt, psd_sqrt, support_projector, CMatrix, HermitianMatrix, Tolerances,
    DEFAULT_RANK_TOL,
};
use crate::random::ginibre;
use crate::states::DensityMatrix;

/// Max absolute entry of `Σ E_m − I`.
pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Max `|Σ p_m − 1|` accepted before renormalizing.
pub const NORMALIZATION_TOL: f64 = 1e-8;
/// Entries above `-NEGATIVE_FLOOR` are clamped to zero.
pub const NEGATIVE_FLOOR: f64 = 1e-10;
/// Smallest truncated mass accepted by the lifted POVM.
pub const MIN_TRUNCATED_MASS: f64 = 1e-12;

/// Finite POVM: PSD effects summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<HermitianMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<CMatrix>) -> Result<Self> {
        let tol = Tolerances::default();
        if effects.is_empty() {
            return Err(Error::InvalidPovm("no effects".into()));
        }
        let dim = effects[0].nrows();
        let mut hs = Vec::with_capacity(effects.len());
        for (m, e) in effects.into_iter().enumerate() {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::InvalidPovm(format!(
                    "effect {m} is {}x{}, expected {dim}x{dim}",
                    e.nrows(),
                    e.ncols()
                )));
            }
            let h =
                HermitianMatrix::new_with(e, &tol).map_err(|err| Error::InvalidPovm(format!("effect {m}: {err}")))?;
            let min = eigh(&h).min_eigenvalue();
            if min < -tol.psd_floor {
                return Err(Error::InvalidPovm(format!(
                    "effect {m} has negative eigenvalue {min:e}"
                )));
            }
            hs.push(h);
        }
        let povm = Self { effects: hs };
        let defect = povm.completeness_defect();
        if defect > COMPLETENESS_TOL {
            return Err(Error::InvalidPovm(format!(
                "effects sum to identity only within {defect:e}"
            )));
        }
        Ok(povm)
    }

    /// Rank-one projectors onto the columns of a unitary.
    pub fn from_basis(basis: &CMatrix) -> Result<Self> {
        let effects = (0..basis.ncols())
            .map(|j| {
                let v = basis.column(j);
                v * v.adjoint()
            })
            .collect();
        Self::new(effects)
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[HermitianMatrix] {
        &self.effects
    }

    /// Max absolute entry of `Σ E_m − I`.
    pub fn completeness_defect(&self) -> f64 {
        let dim = self.dim();
        let mut sum = CMatrix::zeros(dim, dim);
        for e in &self.effects {
            sum += e.matrix();
        }
        linalg::max_abs_diff(&sum, &CMatrix::identity(dim, dim))
    }
}

/// Probability vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalDistribution {
    pub probabilities: Vec<f64>,
}

impl ClassicalDistribution {
    /// Clamps entries in `[-1e-10, 0)` to zero and renormalizes when the
    /// total is within `1e-8` of one.
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        let mut probabilities = Vec::with_capacity(raw.len());
        for (m, &x) in raw.iter().enumerate() {
            if !x.is_finite() || x < -NEGATIVE_FLOOR {
                return Err(Error::InvalidDistribution(format!("entry {m} is {x:e}")));
            }
            probabilities.push(x.max(0.0));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        for p in &mut probabilities {
            *p /= total;
        }
        Ok(Self { probabilities })
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

/// `Re Tr(A B)` without forming the product.
pub(crate) fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

/// `Tr(A B)` without forming the product.
pub(crate) fn trace_product_complex(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `p_m = Tr(ρ E_m)`.
pub fn induced_distribution(state: &DensityMatrix, povm: &Povm) -> Result<ClassicalDistribution> {
    if state.dim() != povm.dim() {
        return Err(Error::DimMismatch {
            expected: povm.dim(),
            found: state.dim(),
        });
    }
    let defect = povm.completeness_defect();
    if defect > COMPLETENESS_TOL {
        return Err(Error::InvalidPovm(format!(
            "effects sum to identity only within {defect:e}"
        )));
    }
    let raw = povm
        .effects
        .iter()
        .map(|e| trace_product_re(state.matrix(), e.matrix()))
        .collect();
    ClassicalDistribution::new(raw)
}

fn check_lengths(p: &ClassicalDistribution, q: &ClassicalDistribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(())
}

/// Bhattacharyya coefficient `Σ √(p_m q_m)`.
pub fn classical_fidelity(p: &ClassicalDistribution, q: &ClassicalDistribution) -> Result<f64> {
    check_lengths(p, q)?;
    Ok(raw_classical_fidelity(&p.probabilities, &q.probabilities).min(1.0))
}

fn raw_classical_fidelity(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a.max(0.0) * b.max(0.0)).sqrt()).sum()
}

/// `½ Σ |p_m − q_m|`.
pub fn classical_trace_distance(p: &ClassicalDistribution, q: &ClassicalDistribution) -> Result<f64> {
    check_lengths(p, q)?;
    Ok(p.probabilities
        .iter()
        .zip(&q.probabilities)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / 2.0)
}

/// `M = ρ^{[-1/2]} √(√ρ σ √ρ) ρ^{[-1/2]}`, with the pseudo-inverse root taken
/// on the support of `ρ`.
#[derive(Debug, Clone)]
pub struct MOperator {
    pub matrix: HermitianMatrix,
    /// Always true in finite dimension.
    pub is_diagonalizable: bool,
    pub support_projector: HermitianMatrix,
}

pub fn m_operator(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<MOperator> {
    same_dim(rho, sigma)?;
    let sqrt_rho = psd_sqrt(rho.hermitian())?;
    let sqrt_sigma = psd_sqrt(sigma.hermitian())?;
    // √(√ρ σ √ρ) = |√σ √ρ|, via SVD to avoid the nested square root.
    let root = abs_matrix(&linalg::mul(sqrt_sigma.matrix(), sqrt_rho.matrix()));
    let pinv = pinv_sqrt(rho.hermitian(), DEFAULT_RANK_TOL)?;
    let matrix = HermitianMatrix::hermitize(linalg::mul(&linalg::mul(pinv.matrix(), root.matrix()), pinv.matrix()));
    Ok(MOperator {
        matrix,
        is_diagonalizable: true,
        support_projector: support_projector(rho.hermitian(), DEFAULT_RANK_TOL)?,
    })
}

/// Projective measurement in an eigenbasis of `M`, which attains
/// `Σ √(p_m q_m) = F(ρ, σ)`.
///
/// `M` is diagonalized on the support of `ρ` only; the kernel of `ρ` gets its
/// own orthonormal basis. Mixing the two inside `ker M` would pair outcomes
/// with `p_m > 0` and `q_m > 0` and break optimality. Support vectors come
/// first, in ascending eigenvalue of `M`.
pub fn fidelity_optimal_povm(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Povm> {
    Povm::from_basis(&fidelity_optimal_basis(rho, sigma)?)
}

/// Columns are the measurement vectors of [`fidelity_optimal_povm`].
fn fidelity_optimal_basis(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<CMatrix> {
    let m = m_operator(rho, sigma)?;
    let rho_eig = eigh(rho.hermitian());
    let dim = rho.dim();
    let cutoff = DEFAULT_RANK_TOL * rho_eig.max_eigenvalue().max(0.0);
    let (support, kernel): (Vec<usize>, Vec<usize>) =
        (0..dim).partition(|&i| rho_eig.eigenvalues[i] > cutoff && rho_eig.eigenvalues[i] > 0.0);

    let q_support = select_columns(&rho_eig.eigenvectors, &support);
    let compressed = HermitianMatrix::hermitize(linalg::mul(
        &linalg::mul(&q_support.adjoint(), m.matrix.matrix()),
        &q_support,
    ));
    let rotated = linalg::mul(&q_support, &eigh(&compressed).eigenvectors);

    let mut basis = CMatrix::zeros(dim, dim);
    for j in 0..support.len() {
        basis.set_column(j, &rotated.column(j));
    }
    for (j, &k) in kernel.iter().enumerate() {
        basis.set_column(support.len() + j, &rho_eig.eigenvectors.column(k));
    }
    fix_phases(&mut basis);
    Ok(basis)
}

fn select_columns(m: &CMatrix, cols: &[usize]) -> CMatrix {
    let mut out = CMatrix::zeros(m.nrows(), cols.len());
    for (j, &c) in cols.iter().enumerate() {
        out.set_column(j, &m.column(c));
    }
    out
}

/// Outcome statistics of the lifted truncation POVM, computed from the
/// compressed blocks `P ρ P` and `P σ P` alone.
#[derive(Debug, Clone)]
pub(crate) struct LiftedStatistics {
    pub alpha: f64,
    pub beta: f64,
    pub truncated_fidelity: f64,
    /// Measurement vectors of the optimal POVM for the renormalized blocks.
    pub truncated_basis: CMatrix,
    /// Ordered `[F_0, F_1, …, F_n, F_{n+1}]`.
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub classical_fidelity: f64,
}

/// `rho_block`, `sigma_block` are the unnormalized compressions onto the
/// truncation subspace of two unit-trace states.
pub(crate) fn lifted_statistics(rho_block: &CMatrix, sigma_block: &CMatrix) -> Result<LiftedStatistics> {
    let alpha = rho_block.trace().re;
    let beta = sigma_block.trace().re;
    if !(alpha >= MIN_TRUNCATED_MASS && beta >= MIN_TRUNCATED_MASS) {
        return Err(Error::InvalidTruncation { alpha, beta });
    }
    let rho_n = DensityMatrix::from_trusted(rho_block / Complex64::new(alpha, 0.0));
    let sigma_n = DensityMatrix::from_trusted(sigma_block / Complex64::new(beta, 0.0));
    // Only the basis is kept: n dense effects would cost n³ memory.
    let truncated_basis = fidelity_optimal_basis(&rho_n, &sigma_n)?;
    let truncated_fidelity = fidelity(&rho_n, &sigma_n)?;
    let scale = (alpha * beta).sqrt();

    let mut p = vec![(1.0 - scale * alpha).max(0.0)];
    let mut q = vec![(1.0 - scale * beta).max(0.0)];
    // ⟨v|A|v⟩ for every column v, as the diagonal of V†AV.
    let diag = |a: &CMatrix| {
        let av = linalg::mul(a, &truncated_basis);
        (0..truncated_basis.ncols())
            .map(|j| truncated_basis.column(j).dotc(&av.column(j)).re)
            .collect::<Vec<_>>()
    };
    p.extend(diag(rho_block).into_iter().map(|x| scale * x));
    q.extend(diag(sigma_block).into_iter().map(|x| scale * x));
    p.push(0.0);
    q.push(0.0);
    let classical_fidelity = raw_classical_fidelity(&p, &q);
    Ok(LiftedStatistics {
        alpha,
        beta,
        truncated_fidelity,
        truncated_basis,
        p,
        q,
        classical_fidelity,
    })
}

/// Isometry `Q` onto the top `trunc_dim` eigenvectors of `ρ` (descending)
/// and the compressions `Q†ρQ`, `Q†σQ`.
pub(crate) fn truncation_blocks(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    trunc_dim: usize,
) -> Result<(CMatrix, CMatrix, CMatrix)> {
    same_dim(rho, sigma)?;
    let dim = rho.dim();
    if trunc_dim == 0 || trunc_dim > dim {
        return Err(Error::InvalidParameter(format!(
            "trunc_dim {trunc_dim} outside 1..={dim}"
        )));
    }
    let rho_eig = eigh(rho.hermitian());
    let top: Vec<usize> = (0..trunc_dim).map(|k| dim - 1 - k).collect();
    let q = select_columns(&rho_eig.eigenvectors, &top);
    let q_adj = q.adjoint();
    let rho_block = linalg::mul(&linalg::mul(&q_adj, rho.matrix()), &q);
    let sigma_block = linalg::mul(&linalg::mul(&q_adj, sigma.matrix()), &q);
    Ok((q, rho_block, sigma_block))
}

/// Result of [`lifted_truncation_povm`].
#[derive(Debug, Clone)]
pub struct LiftedTruncation {
    /// Effects `[F_0, F_1, …, F_n, F_{n+1}]`; `F_{n+1}` is the (zero) lift of
    /// the complement projector and is kept for a stable shape.
    pub povm: Povm,
    pub alpha: f64,
    pub beta: f64,
    /// Fidelity of the renormalized truncations.
    pub truncated_fidelity: f64,
    pub classical_fidelity: f64,
    pub fidelity: f64,
    /// `classical_fidelity − fidelity`, nonnegative up to round-off.
    pub gap: f64,
}

/// POVM approaching `F(ρ, σ)` from a truncation to the top `trunc_dim`
/// eigenvectors of `ρ`.
///
/// With `P` that projector, `α = Tr Pρ`, `β = Tr Pσ` and `{E_m}` the optimal
/// POVM of the renormalized truncations, the effects are
/// `F_m = √(αβ) P E_m P` and `F_0 = I − √(αβ) P`. `F_0` is computed as the
/// identity minus the other effects so completeness holds to round-off.
pub fn lifted_truncation_povm(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    trunc_dim: usize,
) -> Result<LiftedTruncation> {
    same_dim(rho, sigma)?;
    let dim = rho.dim();
    if trunc_dim == 0 || trunc_dim > dim {
        return Err(Error::InvalidParameter(format!(
            "trunc_dim {trunc_dim} outside 1..={dim}"
        )));
    }
    let (q, rho_block, sigma_block) = truncation_blocks(rho, sigma, trunc_dim)?;
    let stats = lifted_statistics(&rho_block, &sigma_block)?;

    let scale = Complex64::new((stats.alpha * stats.beta).sqrt(), 0.0);
    // Q E_m Q† = |Q v_m⟩⟨Q v_m| for the rank-one effects E_m = |v_m⟩⟨v_m|.
    let lifted_vectors = linalg::mul(&q, &stats.truncated_basis);
    let mut lifted: Vec<CMatrix> = (0..lifted_vectors.ncols())
        .map(|j| {
            let w = lifted_vectors.column(j);
            w * w.adjoint() * scale
        })
        .collect();
    let mut f0 = CMatrix::identity(dim, dim);
    for f in &lifted {
        f0 -= f;
    }
    lifted.insert(0, f0);
    lifted.push(CMatrix::zeros(dim, dim));
    let povm = Povm::new(lifted)?;

    let p = induced_distribution(rho, &povm)?;
    let qd = induced_distribution(sigma, &povm)?;
    let classical = classical_fidelity(&p, &qd)?;
    let f = fidelity(rho, sigma)?;
    Ok(LiftedTruncation {
        povm,
        alpha: stats.alpha,
        beta: stats.beta,
        truncated_fidelity: stats.truncated_fidelity,
        classical_fidelity: classical,
        fidelity: f,
        gap: classical - f,
    })
}

/// Header of the lifted-truncation sweep CSV.
pub const LIFTED_SWEEP_HEADER: [&str; 6] = [
    "trunc_dim",
    "alpha_n",
    "beta_n",
    "classical_fidelity",
    "quantum_fidelity",
    "gap",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiftedSweepRow {
    pub trunc_dim: usize,
    pub alpha_n: f64,
    pub beta_n: f64,
    pub classical_fidelity: f64,
    pub quantum_fidelity: f64,
    pub gap: f64,
}

/// [`lifted_truncation_povm`] at each of `dims`, in the given order.
pub fn lifted_truncation_sweep(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    dims: &[usize],
) -> Result<Vec<LiftedSweepRow>> {
    dims.iter()
        .map(|&n| {
            let lt = lifted_truncation_povm(rho, sigma, n)?;
            Ok(LiftedSweepRow {
                trunc_dim: n,
                alpha_n: lt.alpha,
                beta_n: lt.beta,
                classical_fidelity: lt.classical_fidelity,
                quantum_fidelity: lt.fidelity,
                gap: lt.gap,
            })
        })
        .collect()
}

pub fn write_lifted_sweep_csv<W: std::io::Write>(rows: &[LiftedSweepRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LIFTED_SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.trunc_dim.to_string(),
            format!("{:?}", r.alpha_n),
            format!("{:?}", r.beta_n),
            format!("{:?}", r.classical_fidelity),
            format!("{:?}", r.quantum_fidelity),
            format!("{:?}", r.gap),
        ])?;
    }
    w.flush()
}

/// Two-outcome projective measurement onto the nonnegative and negative
/// eigenspaces of `ρ − σ`; attains the trace distance.
pub fn helstrom_povm(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Povm> {
    same_dim(rho, sigma)?;
    let dim = rho.dim();
    let diff = HermitianMatrix::hermitize(rho.matrix() - sigma.matrix());
    let decomp = eigh(&diff);
    let mut positive = CMatrix::zeros(dim, dim);
    let mut negative = CMatrix::zeros(dim, dim);
    for j in 0..dim {
        let v = decomp.eigenvectors.column(j);
        let proj = v * v.adjoint();
        if decomp.eigenvalues[j] >= 0.0 {
            positive += proj;
        } else {
            negative += proj;
        }
    }
    Povm::new(vec![positive, negative])
}

/// Random POVM with `outcomes` effects: Wishart matrices `W_i` normalized
/// as `S^{-1/2} W_i S^{-1/2}` with `S = Σ W_i`.
pub fn random_povm<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Result<Povm> {
    if outcomes == 0 {
        return Err(Error::InvalidParameter("a POVM needs at least one outcome".into()));
    }
    let wisharts: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = ginibre(dim, dim, rng);
            &g * g.adjoint()
        })
        .collect();
    let mut total = CMatrix::zeros(dim, dim);
    for w in &wisharts {
        total += w;
    }
    let norm = pinv_sqrt(&HermitianMatrix::hermitize(total), DEFAULT_RANK_TOL)?;
    let effects = wisharts
        .iter()
        .map(|w| HermitianMatrix::hermitize(norm.matrix() * w * norm.matrix()).into_inner())
        .collect();
    Povm::new(effects)
}
