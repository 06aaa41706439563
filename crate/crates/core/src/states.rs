//! Density matrices, pure states and purifications.
//!
//! Composite indices on `system ⊗ ancilla` are system-major:
//! `index = system_index * ancilla_dim + ancilla_index`. A purification's
//! amplitudes therefore reshape row-major into a `system_dim × ancilla_dim`
//! amplitude matrix `Ψ` with `Tr_ancilla |ψ⟩⟨ψ| = Ψ Ψ^†`.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, eigh, CMatrix, CVector, HermitianMatrix, Tolerances, DEFAULT_RANK_TOL};
use crate::random::{ginibre, rng_for};

/// Max allowed `|Tr ρ − 1|`.
pub const TRACE_TOL: f64 = 1e-10;
/// Max allowed `|‖ψ‖ − 1|`.
pub const NORM_TOL: f64 = 1e-10;

/// Positive semidefinite, unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let tol = Tolerances::default();
        let h = HermitianMatrix::new_with(entries, &tol)?;
        let trace = h.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace { trace });
        }
        let min = eigh(&h).min_eigenvalue();
        if min < -tol.psd_floor {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        Ok(Self(h))
    }

    /// Wraps a matrix that is a state analytically (channel outputs, convex
    /// mixtures, partial traces). Symmetrizes away round-off; no other checks.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        Self(HermitianMatrix::hermitize(m))
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let v = psi.amplitudes();
        Self::from_trusted(v * v.adjoint())
    }

    /// `diag(p)`; `p` must be a probability vector.
    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_diagonal(probabilities).into_inner())
    }

    /// `|k⟩⟨k|` in dimension `dim`.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        Self::from_trusted(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_trusted(CMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0))
    }

    /// `Σ w_i ρ_i`; weights must form a probability vector.
    pub fn mixture(weights: &[f64], states: &[DensityMatrix]) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::LengthMismatch {
                left: weights.len(),
                right: states.len(),
            });
        }
        let dim = states[0].dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (w, s) in weights.iter().zip(states) {
            if s.dim() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
            m += s.matrix() * Complex64::new(*w, 0.0);
        }
        Self::new(m)
    }

    /// `U ρ U^†`.
    pub fn conjugate(&self, u: &CMatrix) -> Self {
        Self::from_trusted(crate::linalg::mul(&crate::linalg::mul(u, self.matrix()), &u.adjoint()))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Rank at relative tolerance `rank_tol`.
    pub fn rank(&self, rank_tol: f64) -> usize {
        eigh(&self.0).rank(rank_tol)
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        (self.matrix() * self.matrix()).trace().re
    }
}

/// Unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState(CVector);

impl PureState {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self(amplitudes))
    }

    /// Scales a nonzero vector to unit norm.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self(amplitudes / Complex64::new(norm, 0.0)))
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[k] = Complex64::new(1.0, 0.0);
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.0.dotc(&other.0))
    }

    /// `|a⟩ ⊗ |b⟩`.
    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState(self.0.kronecker(&other.0))
    }
}

/// Pure state on `system ⊗ ancilla` viewed as a purification of its
/// system marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct Purification {
    pub system_dim: usize,
    pub ancilla_dim: usize,
    pub state: PureState,
}

impl Purification {
    pub fn new(system_dim: usize, ancilla_dim: usize, state: PureState) -> Result<Self> {
        if state.dim() != system_dim * ancilla_dim {
            return Err(Error::DimMismatch {
                expected: system_dim * ancilla_dim,
                found: state.dim(),
            });
        }
        Ok(Self {
            system_dim,
            ancilla_dim,
            state,
        })
    }

    /// Builds the purification whose amplitude matrix is `psi`
    /// (`system_dim × ancilla_dim`).
    pub fn from_amplitude_matrix(psi: &CMatrix) -> Result<Self> {
        let (ds, da) = psi.shape();
        let v = DVector::from_iterator(
            ds * da,
            (0..ds)
                .flat_map(|s| (0..da).map(move |a| (s, a)))
                .map(|(s, a)| psi[(s, a)]),
        );
        Self::new(ds, da, PureState::new(v)?)
    }

    /// `Ψ[s, a] = ψ[s * ancilla_dim + a]`.
    pub fn amplitude_matrix(&self) -> CMatrix {
        let v = self.state.amplitudes();
        CMatrix::from_fn(self.system_dim, self.ancilla_dim, |s, a| v[s * self.ancilla_dim + a])
    }

    /// Schmidt coefficients, descending.
    pub fn schmidt_coefficients(&self) -> Vec<f64> {
        linalg::singular_values(&self.amplitude_matrix())
            .iter()
            .copied()
            .collect()
    }

    /// `|⟨self|other⟩|`.
    pub fn overlap(&self, other: &Purification) -> Result<f64> {
        Ok(self.state.inner(&other.state)?.norm())
    }
}

/// Canonical purification `Σ_k √λ_k |v_k⟩|k⟩`.
///
/// The support eigenvectors of `rho` (eigenvalues above the relative rank
/// tolerance), taken in ascending eigenvalue order, are paired with ancilla
/// basis vectors `|0⟩, |1⟩, …`.
pub fn purify(rho: &DensityMatrix, ancilla_dim: usize) -> Result<Purification> {
    let decomp = eigh(rho.hermitian());
    let cutoff = DEFAULT_RANK_TOL * decomp.max_eigenvalue().max(0.0);
    let support: Vec<usize> = (0..decomp.dim())
        .filter(|&i| decomp.eigenvalues[i] > cutoff && decomp.eigenvalues[i] > 0.0)
        .collect();
    if support.len() > ancilla_dim {
        return Err(Error::AncillaTooSmall {
            ancilla_dim,
            required: support.len(),
        });
    }
    let mut psi = CMatrix::zeros(rho.dim(), ancilla_dim);
    for (k, &i) in support.iter().enumerate() {
        let w = Complex64::new(decomp.eigenvalues[i].sqrt(), 0.0);
        for s in 0..rho.dim() {
            psi[(s, k)] = decomp.eigenvectors[(s, i)] * w;
        }
    }
    // Renormalize away the mass dropped below the rank cutoff.
    let norm = psi.norm();
    psi /= Complex64::new(norm, 0.0);
    Purification::from_amplitude_matrix(&psi)
}

/// `Tr_ancilla |ψ⟩⟨ψ|`.
pub fn partial_trace_ancilla(psi: &Purification) -> DensityMatrix {
    let m = psi.amplitude_matrix();
    DensityMatrix::from_trusted(&m * m.adjoint())
}

/// `G G^† / Tr(G G^†)` with `G` a `dim × rank` Ginibre matrix drawn from `seed`.
pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    random_density_with(dim, rank, &mut rng_for(seed, 0))
}

pub fn random_density_with<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    if dim == 0 || rank == 0 || rank > dim {
        return Err(Error::InvalidRank { dim, rank });
    }
    let g = ginibre(dim, rank, rng);
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    Ok(DensityMatrix::from_trusted(w / Complex64::new(tr, 0.0)))
}

/// Uniformly random pure state as a density matrix.
pub fn random_pure_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    DensityMatrix::from_pure(&PureState(crate::random::random_unit_vector(dim, rng)))
}
