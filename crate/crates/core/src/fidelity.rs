//! Fidelity, Bures angle, trace distance and Uhlmann-optimal purifications.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, eigh, mul, polar_unitary, psd_sqrt, CMatrix, HermitianMatrix};
use crate::states::{DensityMatrix, PureState, Purification};

/// Slack used by the bound flags of [`FidelityReport`].
pub const BOUND_SLACK: f64 = 1e-9;

pub(crate) fn same_dim(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    Ok(())
}

/// `F(ρ, σ) = ‖√σ √ρ‖_Tr`, clamped to `[0, 1]`.
///
/// Equal to `Tr √(√ρ σ √ρ)` but avoids the nested square root, which squares
/// the condition number of the inner matrix. See [`fidelity_nested_root`].
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho, sigma)?;
    let sr = psd_sqrt(rho.hermitian())?;
    let ss = psd_sqrt(sigma.hermitian())?;
    Ok(linalg::trace_norm(&mul(ss.matrix(), sr.matrix())).clamp(0.0, 1.0))
}

/// `Tr √(√ρ σ √ρ)` evaluated literally. Kept as a cross-check for [`fidelity`].
pub fn fidelity_nested_root(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho, sigma)?;
    let sr = psd_sqrt(rho.hermitian())?;
    let inner = HermitianMatrix::hermitize(mul(&mul(sr.matrix(), sigma.matrix()), sr.matrix()));
    Ok(psd_sqrt(&inner)?.trace().clamp(0.0, 1.0))
}

/// `|⟨a|b⟩|`, the fidelity of two pure states.
pub fn pure_fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(a.inner(b)?.norm())
}

/// `arccos F(ρ, σ)`, in `[0, π/2]`.
pub fn bures_angle(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(fidelity(rho, sigma)?.acos())
}

/// `½ ‖ρ − σ‖_Tr`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho, sigma)?;
    let diff = HermitianMatrix::hermitize(rho.matrix() - sigma.matrix());
    let half_norm: f64 = eigh(&diff).eigenvalues.iter().map(|l| l.abs()).sum::<f64>() / 2.0;
    Ok(half_norm.clamp(0.0, 1.0))
}

/// Purifications `|ψ⟩` of `ρ` and `|φ⟩` of `σ` with `|⟨ψ|φ⟩| = F(ρ, σ)`.
///
/// Let `V` send ancilla label `k` to the `k`-th eigenvector of `ρ`, support
/// first (ascending eigenvalue) and kernel after, so `|ψ⟩ = √ρ V` matches
/// [`purify`](crate::states::purify). With `√σ √ρ = U₀ |√σ √ρ|`, the partner
/// is `|φ⟩ = √σ U₀ V`, giving `⟨ψ|φ⟩ = Tr |√σ √ρ|`.
pub fn uhlmann_optimal_purifications(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    ancilla_dim: usize,
) -> Result<(Purification, Purification)> {
    same_dim(rho, sigma)?;
    let dim = rho.dim();
    if ancilla_dim < dim {
        return Err(Error::AncillaTooSmall {
            ancilla_dim,
            required: dim,
        });
    }
    let rho_eig = eigh(rho.hermitian());
    let cutoff = linalg::DEFAULT_RANK_TOL * rho_eig.max_eigenvalue().max(0.0);
    let (support, kernel): (Vec<usize>, Vec<usize>) =
        (0..dim).partition(|&i| rho_eig.eigenvalues[i] > cutoff && rho_eig.eigenvalues[i] > 0.0);

    let mut v = CMatrix::zeros(dim, ancilla_dim);
    let mut psi = CMatrix::zeros(dim, ancilla_dim);
    for (k, &i) in support.iter().chain(&kernel).enumerate() {
        v.set_column(k, &rho_eig.eigenvectors.column(i));
    }
    for (k, &i) in support.iter().enumerate() {
        let w = Complex64::new(rho_eig.eigenvalues[i].sqrt(), 0.0);
        psi.set_column(k, &(rho_eig.eigenvectors.column(i) * w));
    }
    let sqrt_rho = psd_sqrt(rho.hermitian())?;
    let sqrt_sigma = psd_sqrt(sigma.hermitian())?;
    let u0 = polar_unitary(&sqrt_sigma, &sqrt_rho)?;
    let phi = sqrt_sigma.matrix() * u0 * v;
    Ok((normalized_purification(psi)?, normalized_purification(phi)?))
}

fn normalized_purification(mut m: CMatrix) -> Result<Purification> {
    let n = m.norm();
    m /= Complex64::new(n, 0.0);
    Purification::from_amplitude_matrix(&m)
}

/// Fidelity, Bures angle and trace distance with the two-sided bound check
/// `1 − F ≤ D ≤ √(1 − F²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub fidelity: f64,
    pub bures_angle: f64,
    pub trace_distance: f64,
    pub lower_bound_ok: bool,
    pub upper_bound_ok: bool,
}

pub fn check_bounds(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<FidelityReport> {
    let f = fidelity(rho, sigma)?;
    let d = trace_distance(rho, sigma)?;
    Ok(FidelityReport {
        fidelity: f,
        bures_angle: f.acos(),
        trace_distance: d,
        lower_bound_ok: 1.0 - f <= d + BOUND_SLACK,
        upper_bound_ok: d <= (1.0 - f * f).max(0.0).sqrt() + BOUND_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::random_density;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn half_mixed() -> DensityMatrix {
        DensityMatrix::maximally_mixed(2)
    }

    fn ket0() -> DensityMatrix {
        DensityMatrix::basis_state(2, 0)
    }

    #[test]
    fn fidelity_examples() {
        let rho = random_density(4, 4, 3).unwrap();
        assert_abs_diff_eq!(fidelity(&rho, &rho).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&ket0(), &DensityMatrix::basis_state(2, 1)).unwrap(), 0.0);
        // √ρ σ √ρ = |0><0|/2, so F = √(1/2).
        assert_abs_diff_eq!(
            fidelity(&half_mixed(), &ket0()).unwrap(),
            FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            fidelity_nested_root(&half_mixed(), &ket0()).unwrap(),
            FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn pure_state_fidelity_is_overlap() {
        let mut rng = crate::random::rng_for(5, 0);
        for _ in 0..20 {
            let a = PureState::new(crate::random::random_unit_vector(3, &mut rng)).unwrap();
            let b = PureState::new(crate::random::random_unit_vector(3, &mut rng)).unwrap();
            let f = fidelity(&DensityMatrix::from_pure(&a), &DensityMatrix::from_pure(&b)).unwrap();
            assert_abs_diff_eq!(f, pure_fidelity(&a, &b).unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let a = DensityMatrix::maximally_mixed(2);
        let b = DensityMatrix::maximally_mixed(3);
        assert!(matches!(fidelity(&a, &b), Err(Error::DimMismatch { .. })));
        assert!(matches!(trace_distance(&a, &b), Err(Error::DimMismatch { .. })));
        assert!(matches!(check_bounds(&a, &b), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn bures_angle_examples() {
        let rho = random_density(3, 2, 8).unwrap();
        assert!(bures_angle(&rho, &rho).unwrap() < 1e-6);
        assert_abs_diff_eq!(
            bures_angle(&ket0(), &DensityMatrix::basis_state(2, 1)).unwrap(),
            FRAC_PI_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(bures_angle(&half_mixed(), &ket0()).unwrap(), FRAC_PI_4, epsilon = 1e-14);
    }

    #[test]
    fn trace_distance_examples() {
        let rho = random_density(4, 3, 2).unwrap();
        assert_abs_diff_eq!(trace_distance(&rho, &rho).unwrap(), 0.0);
        assert_abs_diff_eq!(
            trace_distance(&ket0(), &DensityMatrix::basis_state(2, 1)).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(trace_distance(&half_mixed(), &ket0()).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn uhlmann_examples() {
        let (psi, phi) = uhlmann_optimal_purifications(&ket0(), &ket0(), 2).unwrap();
        let expected = PureState::basis(2, 0).tensor(&PureState::basis(2, 0));
        assert!((psi.state.amplitudes() - expected.amplitudes()).norm() < 1e-15);
        assert_abs_diff_eq!(psi.overlap(&phi).unwrap(), 1.0, epsilon = 1e-14);

        let (psi, phi) = uhlmann_optimal_purifications(&half_mixed(), &ket0(), 2).unwrap();
        assert_abs_diff_eq!(psi.overlap(&phi).unwrap(), FRAC_1_SQRT_2, epsilon = 1e-14);

        assert!(matches!(
            uhlmann_optimal_purifications(&half_mixed(), &ket0(), 1),
            Err(Error::AncillaTooSmall { .. })
        ));
    }

    #[test]
    fn uhlmann_pair_purifies_inputs_with_wide_ancilla() {
        let rho = random_density(3, 3, 21).unwrap();
        let sigma = random_density(3, 2, 22).unwrap();
        let (psi, phi) = uhlmann_optimal_purifications(&rho, &sigma, 5).unwrap();
        let r = crate::states::partial_trace_ancilla(&psi);
        let s = crate::states::partial_trace_ancilla(&phi);
        assert!(linalg::max_abs_diff(r.matrix(), rho.matrix()) < 1e-12);
        assert!(linalg::max_abs_diff(s.matrix(), sigma.matrix()) < 1e-12);
        assert_abs_diff_eq!(
            psi.overlap(&phi).unwrap(),
            fidelity(&rho, &sigma).unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn bounds_examples() {
        let rho = random_density(3, 3, 1).unwrap();
        let r = check_bounds(&rho, &rho).unwrap();
        assert!(r.lower_bound_ok && r.upper_bound_ok);
        assert!(r.trace_distance < 1e-14);

        let r = check_bounds(&half_mixed(), &ket0()).unwrap();
        assert!(r.lower_bound_ok && r.upper_bound_ok);
        assert_abs_diff_eq!(1.0 - r.fidelity, 1.0 - FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!(r.trace_distance, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(r.bures_angle, FRAC_PI_4, epsilon = 1e-14);
    }

    #[test]
    fn pure_pair_saturates_upper_bound() {
        let mut rng = crate::random::rng_for(17, 0);
        for _ in 0..10 {
            let a = crate::states::random_pure_density(4, &mut rng);
            let b = crate::states::random_pure_density(4, &mut rng);
            let r = check_bounds(&a, &b).unwrap();
            assert_abs_diff_eq!(r.trace_distance, (1.0 - r.fidelity.powi(2)).sqrt(), epsilon = 1e-9);
        }
    }
}
