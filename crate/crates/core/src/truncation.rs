//! Diagonal states on a countable basis, their finite truncations, and
//! convergence sweeps of truncated fidelities and lifted-truncation POVMs.
//!
//! A [`SpectralStateGenerator`] describes `ρ = Σ_i p_i |i⟩⟨i|` through its
//! probability sequence. Truncation keeps the first `n` basis labels and
//! renormalizes by the captured mass `α_n = Σ_{i<n} p_i`. An optional basis
//! rotation, applied after truncation, produces non-commuting pairs.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::fidelity;
use crate::linalg::CMatrix;
use crate::measurement::{lifted_statistics, truncation_blocks, LiftedStatistics};
use crate::states::DensityMatrix;

/// Default cap on the reference ("limit") dimension.
pub const DEFAULT_CAP_DIM: usize = 1024;
/// Environment variable overriding the cap.
pub const CAP_DIM_ENV: &str = "QFID_CAP_DIM";
/// Header of the sweep CSV.
pub const CSV_HEADER: [&str; 6] = [
    "trunc_dim",
    "alpha_n",
    "beta_n",
    "fidelity_n",
    "gap_to_limit",
    "povm_gap",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumKind {
    /// `p_i = (1 − λ) λ^i`, `i ≥ 0`.
    Geometric { ratio: f64 },
    /// `p_i ∝ (i + 1)^{−s}` for `i < cutoff`, normalized by the partial sum
    /// up to `cutoff`.
    Power { exponent: f64, cutoff: usize },
    /// Explicit finite probability list.
    Custom { probabilities: Vec<f64> },
}

/// Real unitary applied to a truncated state: two brickwork layers of Givens
/// rotations by `angle`, first on pairs `(0,1), (2,3), …` then on
/// `(1,2), (3,4), …`. Well defined in every dimension and consistent
/// between dimensions away from the truncation edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisRotation {
    pub angle: f64,
}

impl BasisRotation {
    /// `U m U^†`, applied as Givens sweeps in O(dim²).
    pub fn conjugate(&self, m: &CMatrix) -> CMatrix {
        let (s, c) = self.angle.sin_cos();
        let n = m.nrows();
        let mut out = m.clone();
        for offset in [0usize, 1] {
            let mut i = offset;
            while i + 1 < n {
                for k in 0..n {
                    let (a, b) = (out[(i, k)], out[(i + 1, k)]);
                    out[(i, k)] = a * c - b * s;
                    out[(i + 1, k)] = a * s + b * c;
                }
                for k in 0..n {
                    let (a, b) = (out[(k, i)], out[(k, i + 1)]);
                    out[(k, i)] = a * c - b * s;
                    out[(k, i + 1)] = a * s + b * c;
                }
                i += 2;
            }
        }
        out
    }

    pub fn unitary(&self, dim: usize) -> CMatrix {
        let (s, c) = self.angle.sin_cos();
        let mut u = CMatrix::identity(dim, dim);
        for offset in [0usize, 1] {
            let mut layer = CMatrix::identity(dim, dim);
            let mut i = offset;
            while i + 1 < dim {
                layer[(i, i)] = Complex64::new(c, 0.0);
                layer[(i, i + 1)] = Complex64::new(-s, 0.0);
                layer[(i + 1, i)] = Complex64::new(s, 0.0);
                layer[(i + 1, i + 1)] = Complex64::new(c, 0.0);
                i += 2;
            }
            u = layer * u;
        }
        u
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralStateGenerator {
    pub kind: SpectrumKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<BasisRotation>,
}

impl SpectralStateGenerator {
    pub fn geometric(ratio: f64) -> Result<Self> {
        Self::new(SpectrumKind::Geometric { ratio }, None)
    }

    pub fn power(exponent: f64, cutoff: usize) -> Result<Self> {
        Self::new(SpectrumKind::Power { exponent, cutoff }, None)
    }

    pub fn custom(probabilities: Vec<f64>) -> Result<Self> {
        Self::new(SpectrumKind::Custom { probabilities }, None)
    }

    pub fn new(kind: SpectrumKind, rotation: Option<BasisRotation>) -> Result<Self> {
        let g = Self { kind, rotation };
        g.validate()?;
        Ok(g)
    }

    pub fn rotated(mut self, angle: f64) -> Self {
        self.rotation = Some(BasisRotation { angle });
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            SpectrumKind::Geometric { ratio } => {
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "geometric ratio {ratio} outside (0, 1)"
                    )));
                }
            }
            SpectrumKind::Power { exponent, cutoff } => {
                if !(*exponent > 1.0) || !exponent.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "power exponent {exponent} must exceed 1"
                    )));
                }
                if *cutoff == 0 {
                    return Err(Error::InvalidParameter("power cutoff must be positive".into()));
                }
            }
            SpectrumKind::Custom { probabilities } => {
                if probabilities.is_empty() || probabilities.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "custom spectrum needs nonnegative entries".into(),
                    ));
                }
                let total: f64 = probabilities.iter().sum();
                if (total - 1.0).abs() > 1e-10 {
                    return Err(Error::InvalidParameter(format!("custom spectrum sums to {total}")));
                }
            }
        }
        if let Some(r) = &self.rotation {
            if !r.angle.is_finite() {
                return Err(Error::InvalidParameter("rotation angle must be finite".into()));
            }
        }
        Ok(())
    }

    /// `p_i`.
    pub fn probability(&self, i: usize) -> f64 {
        match &self.kind {
            SpectrumKind::Geometric { ratio } => (1.0 - ratio) * ratio.powi(i as i32),
            SpectrumKind::Power { exponent, cutoff } => {
                if i < *cutoff {
                    ((i + 1) as f64).powf(-exponent) / power_normalizer(*exponent, *cutoff)
                } else {
                    0.0
                }
            }
            SpectrumKind::Custom { probabilities } => probabilities.get(i).copied().unwrap_or(0.0),
        }
    }

    pub fn probabilities(&self, n: usize) -> Vec<f64> {
        match &self.kind {
            SpectrumKind::Power { exponent, cutoff } => {
                let z = power_normalizer(*exponent, *cutoff);
                (0..n)
                    .map(|i| {
                        if i < *cutoff {
                            ((i + 1) as f64).powf(-exponent) / z
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
            _ => (0..n).map(|i| self.probability(i)).collect(),
        }
    }

    /// Number of nonzero entries, `None` when infinite.
    pub fn support_len(&self) -> Option<usize> {
        match &self.kind {
            SpectrumKind::Geometric { .. } => None,
            SpectrumKind::Power { cutoff, .. } => Some(*cutoff),
            SpectrumKind::Custom { probabilities } => Some(probabilities.len()),
        }
    }

    /// `α_n = Σ_{i<n} p_i`.
    pub fn truncated_mass(&self, n: usize) -> f64 {
        self.probabilities(n).iter().sum()
    }

    /// `1 − α_n` from the closed form where one exists.
    pub fn tail_mass(&self, n: usize) -> f64 {
        match &self.kind {
            SpectrumKind::Geometric { ratio } => ratio.powi(n as i32),
            SpectrumKind::Power { exponent, cutoff } => {
                let z = power_normalizer(*exponent, *cutoff);
                (n..*cutoff).map(|i| ((i + 1) as f64).powf(-exponent)).sum::<f64>() / z
            }
            SpectrumKind::Custom { probabilities } => probabilities.iter().skip(n).sum(),
        }
    }

    /// Renormalized truncation to the first `dim` labels, rotated if requested.
    pub fn materialize(&self, dim: usize) -> Result<DensityMatrix> {
        self.validate()?;
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let p = self.probabilities(dim);
        let alpha: f64 = p.iter().sum();
        if !(alpha > 0.0) {
            return Err(Error::InvalidTruncation { alpha, beta: alpha });
        }
        let diag: Vec<f64> = p.iter().map(|x| x / alpha).collect();
        let rho = DensityMatrix::diagonal(&diag)?;
        Ok(match &self.rotation {
            Some(r) => DensityMatrix::from_trusted(r.conjugate(rho.matrix())),
            None => rho,
        })
    }
}

impl SpectralStateGenerator {
    /// Parse `geometric(λ)`, `power(s)`, `power(s, cutoff)` or
    /// `custom(p0, p1, …)`, optionally followed by `+rot(angle)`.
    /// `power(s)` takes `default_cutoff` as its normalization cutoff.
    pub fn parse(text: &str, default_cutoff: usize) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse generator `{text}`"));
        let (body, rotation) = match text.split_once('+') {
            Some((body, rot)) => {
                let args = call_args(rot.trim(), "rot").ok_or_else(bad)?;
                match args.as_slice() {
                    [angle] => (body.trim(), Some(BasisRotation { angle: *angle })),
                    _ => return Err(bad()),
                }
            }
            None => (text.trim(), None),
        };
        let kind = if let Some(args) = call_args(body, "geometric") {
            match args.as_slice() {
                [ratio] => SpectrumKind::Geometric { ratio: *ratio },
                _ => return Err(bad()),
            }
        } else if let Some(args) = call_args(body, "power") {
            match args.as_slice() {
                [exponent] => SpectrumKind::Power {
                    exponent: *exponent,
                    cutoff: default_cutoff,
                },
                [exponent, cutoff] if cutoff.fract() == 0.0 && *cutoff >= 1.0 => SpectrumKind::Power {
                    exponent: *exponent,
                    cutoff: *cutoff as usize,
                },
                _ => return Err(bad()),
            }
        } else if let Some(probabilities) = call_args(body, "custom") {
            SpectrumKind::Custom { probabilities }
        } else {
            return Err(bad());
        };
        Self::new(kind, rotation)
    }
}

/// `name(a, b, …)` → `[a, b, …]`.
fn call_args(text: &str, name: &str) -> Option<Vec<f64>> {
    let inner = text.strip_prefix(name)?.trim().strip_prefix('(')?.strip_suffix(')')?;
    inner.split(',').map(|x| x.trim().parse::<f64>().ok()).collect()
}

fn power_normalizer(exponent: f64, cutoff: usize) -> f64 {
    (0..cutoff).map(|i| ((i + 1) as f64).powf(-exponent)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub cap_dim: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            cap_dim: DEFAULT_CAP_DIM,
        }
    }
}

impl SweepConfig {
    /// Default config with the cap taken from `QFID_CAP_DIM` when set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(CAP_DIM_ENV) {
            Ok(v) => {
                let cap_dim =
                    v.trim().parse::<usize>().ok().filter(|&c| c > 0).ok_or_else(|| {
                        Error::InvalidParameter(format!("{CAP_DIM_ENV}={v} is not a positive integer"))
                    })?;
                Ok(Self { cap_dim })
            }
            Err(_) => Ok(Self::default()),
        }
    }
}

/// How the limit fidelity of a generator pair was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Commuting diagonal pair: `Σ √(p_i q_i)` summed exactly.
    ClosedForm,
    /// Fidelity of the truncations at the cap dimension.
    CapDimension(usize),
}

/// The limit pair a sweep is measured against.
enum Reference {
    Diagonal {
        g1: SpectralStateGenerator,
        g2: SpectralStateGenerator,
    },
    Materialized {
        rho: DensityMatrix,
        sigma: DensityMatrix,
    },
}

struct LimitPair {
    reference: Reference,
    fidelity: f64,
    kind: ReferenceKind,
}

/// Lifted-POVM quantities at one truncation dimension.
#[derive(Debug, Clone, Copy)]
struct LiftedPoint {
    alpha: f64,
    beta: f64,
    /// Classical fidelity of the lifted POVM minus the limit fidelity.
    povm_gap: f64,
    /// `F(ρ_n, σ_n) − F_∞`, when available without cancellation.
    fidelity_gap: Option<f64>,
    fidelity_term: f64,
    tail_term: f64,
}

impl LimitPair {
    fn new(g1: &SpectralStateGenerator, g2: &SpectralStateGenerator, cfg: &SweepConfig) -> Result<Self> {
        g1.validate()?;
        g2.validate()?;
        if g1.rotation.is_none() && g2.rotation.is_none() {
            Ok(Self {
                fidelity: commuting_limit_fidelity(g1, g2),
                reference: Reference::Diagonal {
                    g1: g1.clone(),
                    g2: g2.clone(),
                },
                kind: ReferenceKind::ClosedForm,
            })
        } else {
            let rho = g1.materialize(cfg.cap_dim)?;
            let sigma = g2.materialize(cfg.cap_dim)?;
            Ok(Self {
                fidelity: fidelity(&rho, &sigma)?,
                reference: Reference::Materialized { rho, sigma },
                kind: ReferenceKind::CapDimension(cfg.cap_dim),
            })
        }
    }

    fn lifted(&self, n: usize) -> Result<LiftedPoint> {
        match &self.reference {
            Reference::Diagonal { g1, g2 } => diagonal_lifted(g1, g2, n),
            Reference::Materialized { rho, sigma } => {
                let (_, a, b) = truncation_blocks(rho, sigma, n)?;
                let stats = lifted_statistics(&a, &b)?;
                Ok(point_from_statistics(&stats, self.fidelity))
            }
        }
    }
}

fn point_from_statistics(stats: &LiftedStatistics, limit: f64) -> LiftedPoint {
    let ab = stats.alpha * stats.beta;
    LiftedPoint {
        alpha: stats.alpha,
        beta: stats.beta,
        povm_gap: stats.classical_fidelity - limit,
        fidelity_gap: None,
        fidelity_term: (limit - ab * stats.truncated_fidelity).abs(),
        tail_term: (stats.p[0] * stats.q[0]).sqrt(),
    }
}

/// Overlap `Σ_{i≥n} √(p_i q_i)` of the two tails.
fn tail_overlap(g1: &SpectralStateGenerator, g2: &SpectralStateGenerator, n: usize) -> f64 {
    if let (SpectrumKind::Geometric { ratio: a }, SpectrumKind::Geometric { ratio: b }) = (&g1.kind, &g2.kind) {
        let r = (a * b).sqrt();
        return ((1.0 - a) * (1.0 - b)).sqrt() * r.powi(n as i32) / (1.0 - r);
    }
    let len = match (g1.support_len(), g2.support_len()) {
        (Some(x), Some(y)) => x.min(y),
        (Some(x), None) | (None, Some(x)) => x,
        (None, None) => unreachable!("two infinite spectra are both geometric"),
    };
    (n..len.max(n))
        .map(|i| (g1.probability(i) * g2.probability(i)).sqrt())
        .sum()
}

/// Commuting diagonal pair. The optimal POVM of two diagonal blocks is the
/// label basis, so with `S_n = Σ_{i<n} √(p_i q_i)` and tail overlap `R_n`
///
/// ```text
/// classical − F_∞ = (√(αβ) − 1) S_n − R_n + √((1 − √(αβ) α)(1 − √(αβ) β))
/// ```
///
/// Every factor is formed from the tail masses with `ln_1p`/`expm1`, so
/// gaps far below the unit round-off keep their sign and relative accuracy.
fn diagonal_lifted(g1: &SpectralStateGenerator, g2: &SpectralStateGenerator, n: usize) -> Result<LiftedPoint> {
    if n == 0 {
        return Err(Error::InvalidParameter("truncation dimension must be positive".into()));
    }
    let (t1, t2) = (g1.tail_mass(n), g2.tail_mass(n));
    let (alpha, beta) = (1.0 - t1, 1.0 - t2);
    if !(alpha >= MIN_MASS && beta >= MIN_MASS) {
        return Err(Error::InvalidTruncation { alpha, beta });
    }
    let (l1, l2) = ((-t1).ln_1p(), (-t2).ln_1p());
    let p = g1.probabilities(n);
    let q = g2.probabilities(n);
    let s_n: f64 = p.iter().zip(&q).map(|(a, b)| (a * b).sqrt()).sum();
    let r_n = tail_overlap(g1, g2, n);
    // √(αβ) − 1 and 1/√(αβ) − 1.
    let root_m1 = (0.5 * (l1 + l2)).exp_m1();
    let inv_root_m1 = (-0.5 * (l1 + l2)).exp_m1();
    let tail_term = ((-(1.5 * l1 + 0.5 * l2).exp_m1()) * (-(0.5 * l1 + 1.5 * l2).exp_m1()))
        .max(0.0)
        .sqrt();
    Ok(LiftedPoint {
        alpha,
        beta,
        povm_gap: root_m1 * s_n - r_n + tail_term,
        fidelity_gap: Some(inv_root_m1 * s_n - r_n),
        fidelity_term: (r_n - root_m1 * s_n).abs(),
        tail_term,
    })
}

const MIN_MASS: f64 = 1e-12;

/// `Σ_i √(p_i q_i)` over the whole sequences. Geometric pairs use
/// `√((1−a)(1−b)) / (1 − √(ab))`; otherwise at least one side is finite.
pub fn commuting_limit_fidelity(g1: &SpectralStateGenerator, g2: &SpectralStateGenerator) -> f64 {
    if let (SpectrumKind::Geometric { ratio: a }, SpectrumKind::Geometric { ratio: b }) = (&g1.kind, &g2.kind) {
        return (((1.0 - a) * (1.0 - b)).sqrt() / (1.0 - (a * b).sqrt())).min(1.0);
    }
    tail_overlap(g1, g2, 0).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub trunc_dim: usize,
    pub alpha_n: f64,
    pub beta_n: f64,
    pub fidelity_n: f64,
    pub gap_to_limit: f64,
    pub povm_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub reference_fidelity: f64,
    pub reference: ReferenceKind,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.trunc_dim.to_string(),
                format!("{:?}", r.alpha_n),
                format!("{:?}", r.beta_n),
                format!("{:?}", r.fidelity_n),
                format!("{:?}", r.gap_to_limit),
                format!("{:?}", r.povm_gap),
            ])?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Truncated fidelities and lifted-POVM gaps for each dimension in `dims`
/// (strictly ascending, each at most the cap).
///
/// `gap_to_limit = |F(ρ_n, σ_n) − F_∞|` and `povm_gap` is the classical
/// fidelity of the lifted truncation POVM on the limit pair minus `F_∞`.
/// For commuting diagonal pairs both gaps come from the closed forms of
/// `diagonal_lifted`; otherwise the limit pair is materialized at the cap.
pub fn truncated_fidelity_sweep(
    g1: &SpectralStateGenerator,
    g2: &SpectralStateGenerator,
    dims: &[usize],
    cfg: &SweepConfig,
) -> Result<ConvergenceReport> {
    if dims.is_empty() {
        return Err(Error::InvalidParameter("no truncation dimensions".into()));
    }
    if dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "truncation dimensions must be strictly ascending".into(),
        ));
    }
    if dims[0] == 0 || *dims.last().unwrap() > cfg.cap_dim {
        return Err(Error::InvalidParameter(format!(
            "truncation dimensions must lie in 1..={}",
            cfg.cap_dim
        )));
    }
    let limit = LimitPair::new(g1, g2, cfg)?;
    let rows = dims
        .par_iter()
        .map(|&n| -> Result<ConvergenceRow> {
            let f_n = fidelity(&g1.materialize(n)?, &g2.materialize(n)?)?;
            let lifted = limit.lifted(n)?;
            Ok(ConvergenceRow {
                trunc_dim: n,
                alpha_n: lifted.alpha,
                beta_n: lifted.beta,
                fidelity_n: f_n,
                gap_to_limit: lifted.fidelity_gap.unwrap_or(f_n - limit.fidelity).abs(),
                povm_gap: lifted.povm_gap,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport {
        reference_fidelity: limit.fidelity,
        reference: limit.kind,
        rows,
    })
}

/// Outcome of [`epsilon_schedule`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonSchedule {
    pub dim: usize,
    /// Classical fidelity of the lifted POVM minus the limit fidelity.
    pub gap: f64,
    /// `|F − α β F(ρ_n, σ_n)|`.
    pub fidelity_term: f64,
    /// `√(Tr(ρ F_0) Tr(σ F_0))`.
    pub tail_term: f64,
}

/// Smallest `n` in the doubling sequence `1, 2, 4, …` (capped) at which the
/// lifted truncation POVM comes within `eps` of the limit fidelity.
///
/// The classical fidelity splits as `α β F(ρ_n, σ_n)` plus the `F_0` tail
/// term, so `fidelity_term + tail_term < eps` is sufficient; the measured
/// gap is what decides, which also lets identical pairs stop at `n = 1`.
pub fn epsilon_schedule(
    g1: &SpectralStateGenerator,
    g2: &SpectralStateGenerator,
    eps: f64,
    cfg: &SweepConfig,
) -> Result<EpsilonSchedule> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let limit = LimitPair::new(g1, g2, cfg)?;
    let mut n = 1usize;
    loop {
        let point = limit.lifted(n)?;
        let step = EpsilonSchedule {
            dim: n,
            gap: point.povm_gap,
            fidelity_term: point.fidelity_term,
            tail_term: point.tail_term,
        };
        if step.gap < eps {
            return Ok(step);
        }
        if n >= cfg.cap_dim {
            return Err(Error::NoConvergence { cap: cfg.cap_dim });
        }
        n = (2 * n).min(cfg.cap_dim);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HermitianMatrix;
    use approx::assert_abs_diff_eq;

    #[test]
    fn materialize_examples() {
        let g = SpectralStateGenerator::geometric(0.5).unwrap();
        let rho = g.materialize(2).unwrap();
        assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.matrix()[(1, 1)].re, 1.0 / 3.0, epsilon = 1e-15);

        let tiny = SpectralStateGenerator::geometric(1e-9).unwrap();
        assert_abs_diff_eq!(tiny.materialize(1).unwrap().matrix()[(0, 0)].re, 1.0);

        let c = SpectralStateGenerator::custom(vec![0.25, 0.75]).unwrap();
        let rho = c.materialize(2).unwrap();
        assert_eq!(rho, DensityMatrix::diagonal(&[0.25, 0.75]).unwrap());
    }

    #[test]
    fn invalid_generators() {
        assert!(SpectralStateGenerator::geometric(1.0).is_err());
        assert!(SpectralStateGenerator::geometric(0.0).is_err());
        assert!(SpectralStateGenerator::power(1.0, 10).is_err());
        assert!(SpectralStateGenerator::custom(vec![0.5, 0.4]).is_err());
        assert!(SpectralStateGenerator::custom(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn geometric_tail_mass_closed_form() {
        for ratio in [0.1, 0.5, 0.9] {
            let g = SpectralStateGenerator::geometric(ratio).unwrap();
            for n in [1, 4, 16, 64] {
                assert_abs_diff_eq!(1.0 - g.truncated_mass(n), g.tail_mass(n), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn power_mass_sums_to_one_at_cutoff() {
        let g = SpectralStateGenerator::power(2.0, 100).unwrap();
        assert_abs_diff_eq!(g.truncated_mass(100), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.truncated_mass(150), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(1.0 - g.truncated_mass(10), g.tail_mass(10), epsilon = 1e-14);
    }

    #[test]
    fn rotation_is_orthogonal() {
        for dim in [1, 2, 5, 8] {
            let u = BasisRotation { angle: 0.3 }.unitary(dim);
            assert!(crate::linalg::unitarity_defect(&u) < 1e-15);
        }
    }

    #[test]
    fn givens_sweep_matches_dense_conjugation() {
        let r = BasisRotation { angle: -0.7 };
        for dim in [1, 2, 5, 8] {
            let m = crate::states::random_density(dim, dim, 3).unwrap();
            let u = r.unitary(dim);
            let dense = &u * m.matrix() * u.adjoint();
            assert!(crate::linalg::max_abs_diff(&dense, &r.conjugate(m.matrix())) < 1e-15);
        }
    }

    #[test]
    fn identical_generators_sweep() {
        let g = SpectralStateGenerator::geometric(0.5).unwrap();
        let report = truncated_fidelity_sweep(&g, &g, &[1, 2, 8], &SweepConfig::default()).unwrap();
        assert_eq!(report.reference, ReferenceKind::ClosedForm);
        for row in &report.rows {
            assert_abs_diff_eq!(row.fidelity_n, 1.0, epsilon = 1e-12);
            assert!(row.gap_to_limit < 1e-12);
            assert!(row.povm_gap.abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_rejects_bad_dims() {
        let g = SpectralStateGenerator::geometric(0.5).unwrap();
        let cfg = SweepConfig { cap_dim: 16 };
        assert!(truncated_fidelity_sweep(&g, &g, &[4, 2], &cfg).is_err());
        assert!(truncated_fidelity_sweep(&g, &g, &[4, 32], &cfg).is_err());
        assert!(truncated_fidelity_sweep(&g, &g, &[], &cfg).is_err());
    }

    #[test]
    fn csv_header_is_exact() {
        let g = SpectralStateGenerator::geometric(0.5).unwrap();
        let report = truncated_fidelity_sweep(&g, &g, &[2], &SweepConfig::default()).unwrap();
        let csv = report.to_csv_string();
        assert_eq!(
            csv.lines().next().unwrap(),
            "trunc_dim,alpha_n,beta_n,fidelity_n,gap_to_limit,povm_gap"
        );
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn epsilon_schedule_examples() {
        let g = SpectralStateGenerator::geometric(0.5).unwrap();
        let h = SpectralStateGenerator::geometric(1.0 / 3.0).unwrap();
        let cfg = SweepConfig::default();
        assert_eq!(epsilon_schedule(&g, &g, 1e-9, &cfg).unwrap().dim, 1);
        assert_eq!(epsilon_schedule(&g, &h, 2.0, &cfg).unwrap().dim, 1);
        let fine = epsilon_schedule(&g, &h, 1e-6, &cfg).unwrap();
        let coarse = epsilon_schedule(&g, &h, 1e-3, &cfg).unwrap();
        assert!(coarse.dim <= fine.dim);
        assert!(fine.gap < 1e-6);
        assert!(epsilon_schedule(&g, &h, 0.0, &cfg).is_err());
        assert!(matches!(
            epsilon_schedule(&g, &h, 1e-12, &SweepConfig { cap_dim: 4 }),
            Err(Error::NoConvergence { cap: 4 })
        ));
    }

    #[test]
    fn diagonal_closed_form_matches_matrix_path() {
        let pairs = [
            (
                SpectralStateGenerator::geometric(0.5).unwrap(),
                SpectralStateGenerator::geometric(1.0 / 3.0).unwrap(),
            ),
            (
                SpectralStateGenerator::geometric(0.7).unwrap(),
                SpectralStateGenerator::power(2.5, 40).unwrap(),
            ),
            (
                SpectralStateGenerator::custom(vec![0.1, 0.6, 0.3]).unwrap(),
                SpectralStateGenerator::geometric(0.4).unwrap(),
            ),
        ];
        for (g1, g2) in &pairs {
            for n in [1, 2, 3, 5, 8] {
                let closed = diagonal_lifted(g1, g2, n).unwrap();
                let a = HermitianMatrix::from_real_diagonal(&g1.probabilities(n)).into_inner();
                let b = HermitianMatrix::from_real_diagonal(&g2.probabilities(n)).into_inner();
                let stats = lifted_statistics(&a, &b).unwrap();
                let limit = commuting_limit_fidelity(g1, g2);
                let generic = point_from_statistics(&stats, limit);
                assert_abs_diff_eq!(closed.povm_gap, generic.povm_gap, epsilon = 1e-12);
                assert_abs_diff_eq!(closed.tail_term, generic.tail_term, epsilon = 1e-12);
                assert_abs_diff_eq!(closed.fidelity_term, generic.fidelity_term, epsilon = 1e-12);
                let f_n = fidelity(&g1.materialize(n).unwrap(), &g2.materialize(n).unwrap()).unwrap();
                assert_abs_diff_eq!(closed.fidelity_gap.unwrap(), f_n - limit, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn truncated_fidelity_gap_can_grow() {
        // Geometric against a power law: |F_n − F| rises from n = 8 to 16
        // while the lifted POVM gap keeps shrinking.
        let g1 = SpectralStateGenerator::geometric(0.7).unwrap();
        let g2 = SpectralStateGenerator::power(2.0, 16).unwrap();
        let rep = truncated_fidelity_sweep(&g1, &g2, &[8, 16], &SweepConfig::default()).unwrap();
        let (a, b) = (&rep.rows[0], &rep.rows[1]);
        assert!(b.gap_to_limit > a.gap_to_limit + 1e-3, "{a:?} {b:?}");
        assert!(b.povm_gap < a.povm_gap);
    }

    #[test]
    fn tiny_gaps_keep_their_sign() {
        let g = SpectralStateGenerator::geometric(0.5).unwrap();
        let h = SpectralStateGenerator::geometric(1.0 / 3.0).unwrap();
        let report = truncated_fidelity_sweep(&g, &h, &[4, 8, 16, 32, 64], &SweepConfig::default()).unwrap();
        for w in report.rows.windows(2) {
            assert!(w[1].povm_gap <= w[0].povm_gap);
            assert!(w[1].gap_to_limit <= w[0].gap_to_limit);
        }
        assert!(report.rows.iter().all(|r| r.povm_gap > 0.0));
        // ≈ 0.4 · 2^-64
        let last = report.rows.last().unwrap().povm_gap;
        assert!(last > 1e-21 && last < 1e-19, "{last}");
    }

    #[test]
    fn generator_syntax() {
        assert_eq!(
            SpectralStateGenerator::parse("geometric(0.5)", 64).unwrap(),
            SpectralStateGenerator::geometric(0.5).unwrap()
        );
        assert_eq!(
            SpectralStateGenerator::parse("power(2)", 64).unwrap(),
            SpectralStateGenerator::power(2.0, 64).unwrap()
        );
        assert_eq!(
            SpectralStateGenerator::parse("power(2, 10)", 64).unwrap(),
            SpectralStateGenerator::power(2.0, 10).unwrap()
        );
        assert_eq!(
            SpectralStateGenerator::parse("custom(0.25, 0.75) + rot(0.3)", 64).unwrap(),
            SpectralStateGenerator::custom(vec![0.25, 0.75]).unwrap().rotated(0.3)
        );
        for bad in [
            "geometric",
            "geometric(2)",
            "power(2, 1.5)",
            "gauss(1)",
            "geometric(0.5)+spin(1)",
        ] {
            assert!(SpectralStateGenerator::parse(bad, 64).is_err(), "{bad}");
        }
    }
}
