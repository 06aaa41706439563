//! Seeded property battery behind `qfid proptest`.
//!
//! Every trial draws from its own ChaCha stream, `stream_id(suite tag, trial)`,
//! so trials can run in any order on any number of threads and still produce
//! the same report.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{
    apply_channel, convexity_second_derivative, ensemble_average_fidelity, entanglement_fidelity,
    entanglement_fidelity_purified, mixture_entanglement_fidelity, random_channel, Ensemble,
};
use crate::error::Result;
use crate::fidelity::{bures_angle, fidelity, fidelity_nested_root, trace_distance, uhlmann_optimal_purifications};
use crate::linalg::{polar_unitary, psd_sqrt, trace_norm, CMatrix};
use crate::measurement::{
    classical_fidelity, classical_trace_distance, fidelity_optimal_povm, helstrom_povm, induced_distribution,
    lifted_truncation_povm, random_povm,
};
use crate::random::{haar_unitary, random_probabilities, rng_for, stream_id, QRng};
use crate::states::{partial_trace_ancilla, random_density_with, random_pure_density, DensityMatrix, Purification};
use crate::truncation::{
    epsilon_schedule, truncated_fidelity_sweep, SpectralStateGenerator, SpectrumKind, SweepConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Uhlmann,
    Povm,
    Bounds,
    Metric,
    Channels,
    Concavity,
    Polar,
    Truncation,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Uhlmann,
        Suite::Povm,
        Suite::Bounds,
        Suite::Metric,
        Suite::Channels,
        Suite::Concavity,
        Suite::Polar,
        Suite::Truncation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Uhlmann => "uhlmann",
            Suite::Povm => "povm",
            Suite::Bounds => "bounds",
            Suite::Metric => "metric",
            Suite::Channels => "channels",
            Suite::Concavity => "concavity",
            Suite::Polar => "polar",
            Suite::Truncation => "truncation",
        }
    }

    fn tag(self) -> u32 {
        self as u32 + 1
    }

    fn run_trial(self, rng: &mut QRng, ck: &mut Checker) -> Result<()> {
        match self {
            Suite::Uhlmann => uhlmann_trial(rng, ck),
            Suite::Povm => povm_trial(rng, ck),
            Suite::Bounds => bounds_trial(rng, ck),
            Suite::Metric => metric_trial(rng, ck),
            Suite::Channels => channels_trial(rng, ck),
            Suite::Concavity => concavity_trial(rng, ck),
            Suite::Polar => polar_trial(rng, ck),
            Suite::Truncation => truncation_trial(rng, ck),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}`"))
    }
}

/// Parse `all` or a comma-separated list of suite names.
pub fn parse_suites(s: &str) -> std::result::Result<Vec<Suite>, String> {
    if s == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    let mut out: Vec<Suite> = Vec::new();
    for part in s.split(',') {
        let suite = part.trim().parse()?;
        if !out.contains(&suite) {
            out.push(suite);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub suite: Suite,
    pub property: &'static str,
    pub trial: usize,
    /// Amount by which the tolerance was exceeded.
    pub excess: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub suite: Suite,
    pub trials: usize,
    pub checks: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub trials: usize,
    pub passed: bool,
    pub summaries: Vec<SuiteSummary>,
    pub violations: Vec<Violation>,
}

#[derive(Default)]
struct Checker {
    checks: usize,
    failures: Vec<(&'static str, f64, String)>,
}

impl Checker {
    /// `lhs ≤ rhs + tol`.
    fn le(&mut self, property: &'static str, lhs: f64, rhs: f64, tol: f64) {
        self.checks += 1;
        let excess = lhs - rhs - tol;
        if !(excess <= 0.0) {
            self.failures
                .push((property, excess, format!("{lhs:e} > {rhs:e} + {tol:e}")));
        }
    }

    /// `|a − b| ≤ tol`.
    fn close(&mut self, property: &'static str, a: f64, b: f64, tol: f64) {
        self.checks += 1;
        let excess = (a - b).abs() - tol;
        if !(excess <= 0.0) {
            self.failures
                .push((property, excess, format!("|{a:e} - {b:e}| > {tol:e}")));
        }
    }

    fn holds(&mut self, property: &'static str, ok: bool, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push((property, f64::NAN, detail()));
        }
    }
}

/// Run `trials` trials of each suite from `seed`.
pub fn run_suites(suites: &[Suite], seed: u64, trials: usize) -> SuiteReport {
    let jobs: Vec<(Suite, usize)> = suites.iter().flat_map(|&s| (0..trials).map(move |t| (s, t))).collect();
    let outcomes: Vec<(Suite, usize, Checker)> = jobs
        .par_iter()
        .map(|&(suite, trial)| {
            let mut rng = rng_for(seed, stream_id(suite.tag(), trial as u32));
            let mut ck = Checker::default();
            if let Err(e) = suite.run_trial(&mut rng, &mut ck) {
                ck.checks += 1;
                ck.failures.push(("evaluation error", f64::NAN, e.to_string()));
            }
            (suite, trial, ck)
        })
        .collect();

    let mut summaries: Vec<SuiteSummary> = suites
        .iter()
        .map(|&suite| SuiteSummary {
            suite,
            trials,
            checks: 0,
            violations: 0,
        })
        .collect();
    let mut violations = Vec::new();
    for (suite, trial, ck) in outcomes {
        let summary = summaries.iter_mut().find(|s| s.suite == suite).expect("suite listed");
        summary.checks += ck.checks;
        summary.violations += ck.failures.len();
        violations.extend(ck.failures.into_iter().map(|(property, excess, detail)| Violation {
            suite,
            property,
            trial,
            excess,
            detail,
        }));
    }
    SuiteReport {
        seed,
        trials,
        passed: violations.is_empty(),
        summaries,
        violations,
    }
}

fn random_state(rng: &mut QRng, min_dim: usize, max_dim: usize) -> Result<DensityMatrix> {
    let dim = rng.random_range(min_dim..=max_dim);
    let rank = rng.random_range(1..=dim);
    random_density_with(dim, rank, rng)
}

fn random_pair(rng: &mut QRng, min_dim: usize, max_dim: usize) -> Result<(DensityMatrix, DensityMatrix)> {
    let rho = random_state(rng, min_dim, max_dim)?;
    let rank = rng.random_range(1..=rho.dim());
    let sigma = random_density_with(rho.dim(), rank, rng)?;
    Ok((rho, sigma))
}

/// `(I ⊗ U)|φ⟩` for a purification stored as its amplitude matrix.
pub fn rotate_ancilla(phi: &Purification, u: &CMatrix) -> Result<Purification> {
    Purification::from_amplitude_matrix(&(phi.amplitude_matrix() * u.transpose()))
}

fn uhlmann_trial(rng: &mut QRng, ck: &mut Checker) -> Result<()> {
    let (rho, sigma) = random_pair(rng, 2, 16)?;
    let f = fidelity(&rho, &sigma)?;
    let (psi, phi) = uhlmann_optimal_purifications(&rho, &sigma, rho.dim())?;
    ck.close("Uhlmann attainment", psi.overlap(&phi)?, f, 1e-8);
    let back_rho = partial_trace_ancilla(&psi);
    let back_sigma = partial_trace_ancilla(&phi);
    ck.le(
        "purification reduces to rho",
        (back_rho.matrix() - rho.matrix()).norm(),
        0.0,
        1e-9,
    );
    ck.le(
        "purification reduces to sigma",
        (back_sigma.matrix() - sigma.matrix()).norm(),
        0.0,
        1e-9,
    );
    for _ in 0..20 {
        let u = haar_unitary(rho.dim(), rng);
        ck.le("Uhlmann maximality", psi.overlap(&rotate_ancilla(&phi, &u)?)?, f, 1e-8);
    }
    Ok(())
}

fn povm_trial(rng: &mut QRng, ck: &mut Checker) -> Result<()> {
    let (rho, sigma) = random_pair(rng, 2, 8)?;
    let f = fidelity(&rho, &sigma)?;
    let d = trace_distance(&rho, &sigma)?;

    let opt = fidelity_optimal_povm(&rho, &sigma)?;
    let fc = classical_fidelity(&induced_distribution(&rho, &opt)?, &induced_distribution(&sigma, &opt)?)?;
    ck.close("optimal POVM attainment", fc, f, 1e-7);

    let outcomes = rng.random_range(2..=8);
    let povm = random_povm(rho.dim(), outcomes, rng)?;
    let p = induced_distribution(&rho, &povm)?;
    let q = induced_distribution(&sigma, &povm)?;
    let fc = classical_fidelity(&p, &q)?;
    let dc = classical_trace_distance(&p, &q)?;
    ck.le("classical fidelity dominates fidelity", f, fc, 1e-8);
    ck.le("classical trace distance below trace distance", dc, d, 1e-8);
    let hellinger: f64 = p
        .probabilities
        .iter()
        .zip(&q.probabilities)
        .map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2))
        .sum();
    ck.close("Hellinger identity", hellinger, 2.0 * (1.0 - fc), 1e-12);
    ck.le("Hellinger below l1 distance", hellinger, 2.0 * dc, 1e-12);

    let n = rng.random_range(1..=rho.dim());
    match lifted_truncation_povm(&rho, &sigma, n) {
        Ok(lt) => ck.le("lifted truncation POVM gap nonnegative", 0.0, lt.gap, 1e-8),
        Err(crate::Error::InvalidTruncation { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(())
}

fn bounds_trial(rng: &mut QRng, ck: &mut Checker) -> Result<()> {
    let (rho, sigma) = random_pair(rng, 2, 16)?;
    let f = fidelity(&rho, &sigma)?;
    let d = trace_distance(&rho, &sigma)?;
    ck.le("Fuchs-van de Graaf lower bound", 1.0 - f, d, 1e-9);
    ck.le("Fuchs-van de Graaf upper bound", d, (1.0 - f * f).max(0.0).sqrt(), 1e-9);
    ck.close("fidelity symmetry", f, fidelity(&sigma, &rho)?, 1e-9);
    ck.close(
        "trace-norm and nested-root forms agree",
        f,
        fidelity_nested_root(&rho, &sigma)?,
        1e-8,
    );
    let u = haar_unitary(rho.dim(), rng);
    ck.close(
        "unitary invariance",
        f,
        fidelity(&rho.conjugate(&u), &sigma.conjugate(&u))?,
        1e-9,
    );

    let h = helstrom_povm(&rho, &sigma)?;
    let dc = classical_trace_distance(&induced_distribution(&rho, &h)?, &induced_distribution(&sigma, &h)?)?;
    ck.close("Helstrom attainment", dc, d, 1e-8);

    let dim = rng.random_range(2..=16);
    let a = random_pure_density(dim, rng);
    let b = random_pure_density(dim, rng);
    let f = fidelity(&a, &b)?;
    ck.close(
        "pure-state upper bound tightness",
        trace_distance(&a, &b)?,
        (1.0 - f * f).max(0.0).sqrt(),
        1e-9,
    );
    Ok(())
}

fn metric_trial(rng: &mut QRng, ck: &mut Checker) -> Result<()> {
    let rho = random_state(rng, 2, 16)?;
    let dim = rho.dim();
    let sigma = random_density_with(dim, rng.random_range(1..=dim), rng)?;
    let tau = random_density_with(dim, rng.random_range(1..=dim), rng)?;
    let a_rs = bures_angle(&rho, &sigma)?;
    let a_st = bures_angle(&sigma, &tau)?;
    let a_rt = bures_angle(&rho, &tau)?;
    ck.close("Bures angle symmetry", a_rs, bures_angle(&sigma, &rho)?, 1e-9);
    ck.le("Bures angle triangle inequality", a_rt, a_rs + a_st, 1e-9);
    ck.le("Bures angle triangle inequality", a_rs, a_rt + a_st, 1e-9);
    ck.le("Bures angle triangle inequality", a_st, a_rs + a_rt, 1e-9);

    ck.le("identity of indiscernibles", 1.0 - 1e-10, fidelity(&rho, &rho)?, 0.0);
    // A pair at Frobenius distance ~1e-7 close enough to trip the
    // F > 1 − 1e-10 side of the implication.
    let t = 1e-7;
    let near = DensityMatrix::mixture(&[1.0 - t, t], &[rho.clone(), sigma.clone()])?;
    for (x, y) in [(&rho, &sigma), (&rho, &near)] {
        let f = fidelity(x, y)?;
        if f > 1.0 - 1e-10 {
            let frob = (x.matrix() - y.matrix()).norm();
            ck.le("identity of indiscernibles", frob, 0.0, 1e-6);
        }
    }
    Ok(())
}

fn channels_trial(rng: &mut QRng, ck: &mut Checker) -> Result<()> {
    let dim = rng.random_range(2..=6);
    let kraus = rng.random_range(1..=4);
    let ch = random_channel(dim, kraus, rng)?;
    let rho = random_density_with(dim, rng.random_range(1..=dim), rng)?;
    let fe = entanglement_fidelity(&rho, &ch)?;
    let out = apply_channel(&ch, &rho)?;
    ck.le(
        "entanglement fidelity below squared output fidelity",
        fe,
        fidelity(&rho, &out)?.powi(2),
        1e-8,
    );
    ck.close(
        "Kraus-sum and purified forms agree",
        fe,
        entanglement_fidelity_purified(&rho, &ch)?,
        1e-8,
    );

    let u = haar_unitary(kraus, rng);
    ck.close(
        "Kraus representation independence",
        fe,
        entanglement_fidelity(&rho, &ch.remix(&u)?)?,
        1e-9,
    );

    let rho2 = random_density_with(dim, rng.random_range(1..=dim), rng)?;
    let closed = convexity_second_derivative(&rho, &rho2, &ch)?;
    ck.le("convexity in the state", -closed, 0.0, 1e-12);
    let h = 1e-4;
    let f = |x: f64| mixture_entanglement_fidelity(x, &rho, &rho2, &ch);
    let fd = (f(0.5 + h)? - 2.0 * f(0.5)? + f(0.5 - h)?) / (h * h);
    ck.le(
        "second derivative matches finite difference",
        (fd - closed).abs(),
        0.0,
        1e-5 * closed.abs().max(1.0),
    );
    let (x0, x1): (f64, f64) = (rng.random(), rng.random());
    ck.le("midpoint convexity", f(0.5 * (x0 + x1))?, 0.5 * (f(x0)? + f(x1)?), 1e-9);

    let k = rng.random_range(1..=6);
    let weights = random_probabilities(k, rng);
    let states = (0..k)
        .map(|_| random_density_with(dim, rng.random_range(1..=dim), rng))
        .collect::<Result<Vec<_>>>()?;
    let ens = Ensemble::new(weights.clone(), states.clone())?;
    let fe_avg = entanglement_fidelity(&ens.average_state()?, &ch)?;
    let convex_sum: f64 = weights
        .iter()
        .zip(&states)
        .map(|(w, s)| Ok(w * entanglement_fidelity(s, &ch)?))
        .sum::<Result<f64>>()?;
    ck.le("entanglement fidelity convex over ensembles", fe_avg, convex_sum, 1e-8);
    ck.le(
        "ensemble average fidelity bound",
        fe_avg,
        ensemble_average_fidelity(&ens, &ch)?,
        1e-8,
    );
    Ok(())
}

fn concavity_trial(rng: &mut QRng, ck: &mut Checker) -> Result<()> {
    let (rho, sigma) = random_pair(rng, 2, 8)?;
    let dim = rho.dim();
    let ch = random_channel(dim, rng.random_range(1..=4), rng)?;
    ck.le(
        "fidelity monotonicity under channels",
        fidelity(&rho, &sigma)?,
        fidelity(&apply_channel(&ch, &rho)?, &apply_channel(&ch, &sigma)?)?,
        1e-8,
    );

    let k = rng.random_range(1..=5);
    let p = random_probabilities(k, rng);
    let q = random_probabilities(k, rng);
    let mut rhos = Vec::with_capacity(k);
    let mut sigmas = Vec::with_capacity(k);
    for _ in 0..k {
        rhos.push(random_density_with(dim, rng.random_range(1..=dim), rng)?);
        sigmas.push(random_density_with(dim, rng.random_range(1..=dim), rng)?);
    }
    let mut rhs = 0.0;
    for i in 0..k {
        rhs += (p[i] * q[i]).sqrt() * fidelity(&rhos[i], &sigmas[i])?;
    }
    let lhs = fidelity(
        &DensityMatrix::mixture(&p, &rhos)?,
        &DensityMatrix::mixture(&q, &sigmas)?,
    )?;
    ck.le("strong concavity of fidelity", rhs, lhs, 1e-8);
    Ok(())
}

fn polar_trial(rng: &mut QRng, ck: &mut Checker) -> Result<()> {
    let (rho, sigma) = random_pair(rng, 2, 16)?;
    let a = psd_sqrt(rho.hermitian())?;
    let b = psd_sqrt(sigma.hermitian())?;
    let ab = a.matrix() * b.matrix();
    let norm = trace_norm(&ab);
    let v = polar_unitary(&a, &b)?;
    let attained: Complex64 = (&ab * v.adjoint()).trace();
    ck.close("polar factor attains the trace norm", attained.re, norm, 1e-8);
    ck.le("polar trace is real", attained.im.abs(), 0.0, 1e-8);
    ck.le(
        "polar decomposition reconstructs",
        (&v * crate::linalg::abs_matrix(&ab).matrix() - &ab).norm(),
        0.0,
        1e-9,
    );
    for _ in 0..50 {
        let u = haar_unitary(rho.dim(), rng);
        ck.le(
            "trace norm dominates unitary traces",
            (&ab * u).trace().norm(),
            norm,
            1e-8,
        );
    }
    Ok(())
}

fn random_generator(rng: &mut QRng) -> Result<SpectralStateGenerator> {
    if rng.random_bool(0.7) {
        SpectralStateGenerator::geometric(rng.random_range(0.05..0.9))
    } else {
        SpectralStateGenerator::power(rng.random_range(1.5..4.0), rng.random_range(8..=128))
    }
}

fn truncation_trial(rng: &mut QRng, ck: &mut Checker) -> Result<()> {
    let g1 = random_generator(rng)?;
    let g2 = random_generator(rng)?;
    let cfg = SweepConfig { cap_dim: 256 };
    let dims = [1, 2, 4, 8, 16, 32, 64];
    let report = truncated_fidelity_sweep(&g1, &g2, &dims, &cfg)?;
    let both_geometric = [&g1, &g2]
        .iter()
        .all(|g| matches!(g.kind, SpectrumKind::Geometric { .. }));
    for row in &report.rows {
        ck.le("truncation gap nonnegative", 0.0, row.povm_gap, 1e-9);
        let p = g1.probabilities(row.trunc_dim);
        let q = g2.probabilities(row.trunc_dim);
        let overlap: f64 = p.iter().zip(&q).map(|(a, b)| (a * b).sqrt()).sum();
        let closed = overlap / (row.alpha_n * row.beta_n).sqrt();
        ck.close(
            "commuting truncations match closed form",
            row.fidelity_n,
            closed.min(1.0),
            1e-9,
        );
    }
    for w in report.rows.windows(2) {
        ck.le("truncated masses nondecreasing", w[0].alpha_n, w[1].alpha_n, 1e-15);
        ck.le("truncated masses nondecreasing", w[0].beta_n, w[1].beta_n, 1e-15);
        ck.le("lifted POVM gap nonincreasing", w[1].povm_gap, w[0].povm_gap, 1e-9);
        // |F_n − F| need not shrink once a power law is involved.
        if both_geometric {
            ck.le(
                "truncated fidelity gap nonincreasing",
                w[1].gap_to_limit,
                w[0].gap_to_limit,
                1e-9,
            );
        }
    }
    let eps = 10f64.powf(rng.random_range(-8.0..-1.0));
    let step = epsilon_schedule(&g1, &g2, eps, &cfg)?;
    ck.holds("epsilon schedule meets its tolerance", step.gap < eps, || {
        format!("gap {:e} at dim {} for eps {eps:e}", step.gap, step.dim)
    });
    Ok(())
}
