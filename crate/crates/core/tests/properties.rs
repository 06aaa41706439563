//! Invariants as proptest properties. States are drawn from seeds so that
//! shrinking moves through dimension, rank and seed.

use proptest::prelude::*;

use qfid::channels::{apply_channel, entanglement_fidelity, random_channel};
use qfid::linalg::{eigh, psd_sqrt, HermitianMatrix};
use qfid::measurement::{classical_trace_distance, random_povm};
use qfid::random::{haar_unitary, rng_for};
use qfid::states::{partial_trace_ancilla, purify, random_density_with};
use qfid::truncation::{truncated_fidelity_sweep, SpectralStateGenerator, SweepConfig};
use qfid::{
    bures_angle, classical_fidelity, fidelity, fidelity_nested_root, induced_distribution, io, trace_distance,
    uhlmann_optimal_purifications, DensityMatrix,
};

#[derive(Debug, Clone, Copy)]
struct Draw {
    dim: usize,
    rank_a: usize,
    rank_b: usize,
    seed: u64,
}

fn draw(max_dim: usize) -> impl Strategy<Value = Draw> {
    (1..=max_dim)
        .prop_flat_map(|dim| (Just(dim), 1..=dim, 1..=dim, any::<u64>()))
        .prop_map(|(dim, rank_a, rank_b, seed)| Draw {
            dim,
            rank_a,
            rank_b,
            seed,
        })
}

fn states(d: Draw) -> (DensityMatrix, DensityMatrix, qfid::random::QRng) {
    let mut rng = rng_for(d.seed, 0);
    let a = random_density_with(d.dim, d.rank_a, &mut rng).unwrap();
    let b = random_density_with(d.dim, d.rank_b, &mut rng).unwrap();
    (a, b, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fidelity_is_a_symmetric_number_in_unit_interval(d in draw(10)) {
        let (rho, sigma, _) = states(d);
        let f = fidelity(&rho, &sigma).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - fidelity(&sigma, &rho).unwrap()).abs() < 1e-9);
        prop_assert!((f - fidelity_nested_root(&rho, &sigma).unwrap()).abs() < 1e-8);
        prop_assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unitary_conjugation_preserves_fidelity(d in draw(10)) {
        let (rho, sigma, mut rng) = states(d);
        let u = haar_unitary(d.dim, &mut rng);
        let f = fidelity(&rho, &sigma).unwrap();
        let g = fidelity(&rho.conjugate(&u), &sigma.conjugate(&u)).unwrap();
        prop_assert!((f - g).abs() < 1e-9, "{f} vs {g}");
    }

    #[test]
    fn trace_distance_sandwiched_by_fidelity(d in draw(10)) {
        let (rho, sigma, _) = states(d);
        let f = fidelity(&rho, &sigma).unwrap();
        let t = trace_distance(&rho, &sigma).unwrap();
        prop_assert!(1.0 - f <= t + 1e-9);
        prop_assert!(t <= (1.0 - f * f).max(0.0).sqrt() + 1e-9);
    }

    #[test]
    fn square_root_squares_back(d in draw(12)) {
        let (rho, _, _) = states(d);
        let r = psd_sqrt(rho.hermitian()).unwrap();
        let back = r.matrix() * r.matrix();
        prop_assert!((back - rho.matrix()).norm() < 1e-9);
        prop_assert!(eigh(&r).min_eigenvalue() >= -1e-12);
    }

    #[test]
    fn canonical_purification_reduces_to_state(d in draw(10)) {
        let (rho, _, _) = states(d);
        let psi = purify(&rho, d.dim).unwrap();
        prop_assert!((partial_trace_ancilla(&psi).matrix() - rho.matrix()).norm() < 1e-9);
    }

    #[test]
    fn uhlmann_pair_attains_fidelity(d in draw(10)) {
        let (rho, sigma, _) = states(d);
        let (psi, phi) = uhlmann_optimal_purifications(&rho, &sigma, d.dim + 1).unwrap();
        prop_assert!((psi.overlap(&phi).unwrap() - fidelity(&rho, &sigma).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn measurements_cannot_separate_better_than_the_states(d in draw(8), outcomes in 1usize..12) {
        let (rho, sigma, mut rng) = states(d);
        let povm = random_povm(d.dim, outcomes, &mut rng).unwrap();
        let p = induced_distribution(&rho, &povm).unwrap();
        let q = induced_distribution(&sigma, &povm).unwrap();
        prop_assert!(classical_fidelity(&p, &q).unwrap() >= fidelity(&rho, &sigma).unwrap() - 1e-8);
        prop_assert!(classical_trace_distance(&p, &q).unwrap() <= trace_distance(&rho, &sigma).unwrap() + 1e-8);
    }

    #[test]
    fn channels_do_not_decrease_fidelity(d in draw(6), kraus in 1usize..5) {
        let (rho, sigma, mut rng) = states(d);
        let ch = random_channel(d.dim, kraus, &mut rng).unwrap();
        let out_rho = apply_channel(&ch, &rho).unwrap();
        let out_sigma = apply_channel(&ch, &sigma).unwrap();
        prop_assert!(fidelity(&out_rho, &out_sigma).unwrap() >= fidelity(&rho, &sigma).unwrap() - 1e-8);
        let fe = entanglement_fidelity(&rho, &ch).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&fe));
    }

    #[test]
    fn bures_angle_triangle(d in draw(8), rank_c in 1usize..8) {
        let (rho, sigma, mut rng) = states(d);
        let tau = random_density_with(d.dim, rank_c.min(d.dim), &mut rng).unwrap();
        let ab = bures_angle(&rho, &sigma).unwrap();
        let bc = bures_angle(&sigma, &tau).unwrap();
        let ac = bures_angle(&rho, &tau).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn density_json_round_trips_exactly(d in draw(6)) {
        let (rho, _, _) = states(d);
        let text = serde_json::to_string(&io::density_to_json(&rho)).unwrap();
        let parsed: io::DensityJson = io::parse_json(&text, std::path::Path::new("prop")).unwrap();
        prop_assert_eq!(io::density_from_json(&parsed).unwrap(), rho);
    }

    #[test]
    fn geometric_sweeps_shrink(a in 0.05f64..0.9, b in 0.05f64..0.9) {
        let g1 = SpectralStateGenerator::geometric(a).unwrap();
        let g2 = SpectralStateGenerator::geometric(b).unwrap();
        let rep = truncated_fidelity_sweep(&g1, &g2, &[1, 2, 4, 8, 16, 32], &SweepConfig::default()).unwrap();
        for row in &rep.rows {
            prop_assert!(row.povm_gap >= -1e-12);
        }
        for w in rep.rows.windows(2) {
            prop_assert!(w[1].povm_gap <= w[0].povm_gap + 1e-9);
            prop_assert!(w[1].gap_to_limit <= w[0].gap_to_limit + 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hermitize_is_idempotent(d in draw(6)) {
        let (rho, _, _) = states(d);
        let h = HermitianMatrix::hermitize(rho.matrix().clone());
        prop_assert_eq!(h.matrix(), rho.matrix());
    }
}
