//! Kraus-form channels, entanglement fidelity and ensemble average fidelity.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fidelity::fidelity;
use crate::linalg::{self, kron, CMatrix, CVector};
use crate::random::haar_isometry;
use crate::states::{purify, DensityMatrix};

/// Max absolute entry of `Σ E_i^† E_i − I`.
pub const CHANNEL_COMPLETENESS_TOL: f64 = 1e-8;
/// Max `|Σ w_j − 1|` for ensemble weights.
pub const WEIGHT_TOL: f64 = 1e-8;

/// Channel `ρ ↦ Σ E_i ρ E_i^†` with `Σ E_i^† E_i = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    kraus_ops: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(kraus_ops: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = kraus_ops.first() else {
            return Err(Error::InvalidChannel("no Kraus operators".into()));
        };
        let dim = first.nrows();
        for (i, k) in kraus_ops.iter().enumerate() {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::InvalidChannel(format!(
                    "Kraus operator {i} is {}x{}, expected {dim}x{dim}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            if k.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        let ch = Self { dim, kraus_ops };
        let defect = ch.completeness_defect();
        if defect > CHANNEL_COMPLETENESS_TOL {
            return Err(Error::InvalidChannel(format!(
                "Σ E†E deviates from identity by {defect:e}"
            )));
        }
        Ok(ch)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            kraus_ops: vec![CMatrix::identity(dim, dim)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.kraus_ops
    }

    pub fn completeness_defect(&self) -> f64 {
        let mut sum = CMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus_ops {
            sum += k.adjoint() * k;
        }
        linalg::max_abs_diff(&sum, &CMatrix::identity(self.dim, self.dim))
    }

    /// Kraus set `F_j = Σ_i u_{ji} E_i` for an isometry `u` (`k' × k`,
    /// `k' ≥ k`). Describes the same channel.
    pub fn remix(&self, u: &CMatrix) -> Result<Self> {
        if u.ncols() != self.kraus_ops.len() {
            return Err(Error::DimMismatch {
                expected: self.kraus_ops.len(),
                found: u.ncols(),
            });
        }
        let ops = (0..u.nrows())
            .map(|j| {
                let mut f = CMatrix::zeros(self.dim, self.dim);
                for (i, e) in self.kraus_ops.iter().enumerate() {
                    f += e * u[(j, i)];
                }
                f
            })
            .collect();
        Self::new(ops)
    }

    fn check_dim(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        Ok(())
    }
}

/// Channels addressable by name on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedChannel {
    Identity,
    /// `ρ ↦ (1 − p) ρ + p diag(ρ)`.
    Dephasing(f64),
    /// Qubit phase flip `{√(1 − p) I, √p Z}`.
    PhaseFlip(f64),
    /// `ρ ↦ (1 − p) ρ + p I/d`, Kraus form over the Weyl operators.
    Depolarizing(f64),
    /// Qubit amplitude damping with decay probability `γ`.
    AmplitudeDamping(f64),
}

impl NamedChannel {
    pub fn build(&self, dim: usize) -> Result<KrausChannel> {
        let r = |x: f64| Complex64::new(x, 0.0);
        let prob = |p: f64, name: &str| -> Result<f64> {
            if (0.0..=1.0).contains(&p) {
                Ok(p)
            } else {
                Err(Error::InvalidParameter(format!("{name} parameter {p} outside [0, 1]")))
            }
        };
        let qubit = |name: &str| -> Result<()> {
            if dim == 2 {
                Ok(())
            } else {
                Err(Error::InvalidChannel(format!(
                    "{name} is defined for dimension 2, got {dim}"
                )))
            }
        };
        let id = CMatrix::identity(dim, dim);
        let mut ops: Vec<CMatrix> = Vec::new();
        match *self {
            NamedChannel::Identity => ops.push(id),
            NamedChannel::Dephasing(p) => {
                let p = prob(p, "dephasing")?;
                ops.push(&id * r((1.0 - p).sqrt()));
                for k in 0..dim {
                    let mut e = CMatrix::zeros(dim, dim);
                    e[(k, k)] = r(p.sqrt());
                    ops.push(e);
                }
            }
            NamedChannel::PhaseFlip(p) => {
                let p = prob(p, "phase-flip")?;
                qubit("phase-flip")?;
                ops.push(&id * r((1.0 - p).sqrt()));
                ops.push(CMatrix::from_row_slice(
                    2,
                    2,
                    &[r(p.sqrt()), r(0.0), r(0.0), r(-p.sqrt())],
                ));
            }
            NamedChannel::Depolarizing(p) => {
                let p = prob(p, "depolarizing")?;
                let d2 = (dim * dim) as f64;
                for a in 0..dim {
                    for b in 0..dim {
                        let w = if a == 0 && b == 0 { 1.0 - p + p / d2 } else { p / d2 };
                        ops.push(weyl(dim, a, b) * r(w.sqrt()));
                    }
                }
            }
            NamedChannel::AmplitudeDamping(g) => {
                let g = prob(g, "amplitude-damping")?;
                qubit("amplitude-damping")?;
                ops.push(CMatrix::from_row_slice(
                    2,
                    2,
                    &[r(1.0), r(0.0), r(0.0), r((1.0 - g).sqrt())],
                ));
                ops.push(CMatrix::from_row_slice(2, 2, &[r(0.0), r(g.sqrt()), r(0.0), r(0.0)]));
            }
        }
        ops.retain(|k| k.iter().any(|z| z.norm() > 0.0));
        KrausChannel::new(ops)
    }
}

/// `X^a Z^b` with `X|j⟩ = |j+1⟩`, `Z|j⟩ = ω^j |j⟩`.
fn weyl(dim: usize, a: usize, b: usize) -> CMatrix {
    let mut w = CMatrix::zeros(dim, dim);
    for j in 0..dim {
        let phase = 2.0 * std::f64::consts::PI * (b * j) as f64 / dim as f64;
        w[((j + a) % dim, j)] = Complex64::from_polar(1.0, phase);
    }
    w
}

impl FromStr for NamedChannel {
    type Err = Error;

    /// Accepts `name`, `name:p` or `name(p)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = if let Some((n, rest)) = s.split_once('(') {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| Error::InvalidParameter(format!("unbalanced parentheses in `{s}`")))?;
            (n.trim(), Some(inner.trim()))
        } else if let Some((n, a)) = s.split_once(':') {
            (n.trim(), Some(a.trim()))
        } else {
            (s, None)
        };
        let param = || -> Result<f64> {
            let a = arg.ok_or_else(|| Error::InvalidParameter(format!("channel `{name}` needs a parameter")))?;
            a.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad channel parameter `{a}`")))
        };
        match name.to_ascii_lowercase().as_str() {
            "identity" | "id" => Ok(NamedChannel::Identity),
            "dephasing" => Ok(NamedChannel::Dephasing(param()?)),
            "phase-flip" | "phaseflip" => Ok(NamedChannel::PhaseFlip(param()?)),
            "depolarizing" => Ok(NamedChannel::Depolarizing(param()?)),
            "amplitude-damping" | "amplitude_damping" => Ok(NamedChannel::AmplitudeDamping(param()?)),
            other => Err(Error::InvalidParameter(format!("unknown channel `{other}`"))),
        }
    }
}

impl fmt::Display for NamedChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedChannel::Identity => write!(f, "identity"),
            NamedChannel::Dephasing(p) => write!(f, "dephasing({p})"),
            NamedChannel::PhaseFlip(p) => write!(f, "phase-flip({p})"),
            NamedChannel::Depolarizing(p) => write!(f, "depolarizing({p})"),
            NamedChannel::AmplitudeDamping(g) => write!(f, "amplitude-damping({g})"),
        }
    }
}

/// Finite ensemble `{w_j, ρ_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    weights: Vec<f64>,
    states: Vec<DensityMatrix>,
}

impl Ensemble {
    pub fn new(weights: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::InvalidEnsemble(format!(
                "{} weights for {} states",
                weights.len(),
                states.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidEnsemble("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidEnsemble(format!("weights sum to {total}")));
        }
        let dim = states[0].dim();
        if let Some(s) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimMismatch {
                expected: dim,
                found: s.dim(),
            });
        }
        Ok(Self { weights, states })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    /// `Σ w_j ρ_j`.
    pub fn average_state(&self) -> Result<DensityMatrix> {
        DensityMatrix::mixture(&self.weights, &self.states)
    }
}

pub fn apply_channel(ch: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    ch.check_dim(rho)?;
    let mut out = CMatrix::zeros(ch.dim, ch.dim);
    for k in &ch.kraus_ops {
        out += k * rho.matrix() * k.adjoint();
    }
    Ok(DensityMatrix::from_trusted(out))
}

fn sum_sq_traces(ch: &KrausChannel, m: &CMatrix) -> f64 {
    ch.kraus_ops
        .iter()
        .map(|k| crate::measurement::trace_product_complex(k, m).norm_sqr())
        .sum()
}

/// `F(ρ, E) = Σ_i |Tr(E_i ρ)|²`.
pub fn entanglement_fidelity(rho: &DensityMatrix, ch: &KrausChannel) -> Result<f64> {
    ch.check_dim(rho)?;
    Ok(sum_sq_traces(ch, rho.matrix()))
}

/// `⟨ψ|(E ⊗ I)(|ψ⟩⟨ψ|)|ψ⟩` for the canonical purification of `ρ` on
/// `H ⊗ H`, with the channel acting on the first (system) leg. Builds the
/// full `d² × d²` output state.
pub fn entanglement_fidelity_purified(rho: &DensityMatrix, ch: &KrausChannel) -> Result<f64> {
    ch.check_dim(rho)?;
    let d = rho.dim();
    let psi: CVector = purify(rho, d)?.state.amplitudes().clone();
    let projector = &psi * psi.adjoint();
    let id = CMatrix::identity(d, d);
    let mut out = CMatrix::zeros(d * d, d * d);
    for k in &ch.kraus_ops {
        let big = kron(k, &id);
        out += &big * &projector * big.adjoint();
    }
    Ok((psi.adjoint() * out * &psi)[(0, 0)].re)
}

/// `F̄ = Σ_j w_j F(ρ_j, E(ρ_j))²`.
pub fn ensemble_average_fidelity(ens: &Ensemble, ch: &KrausChannel) -> Result<f64> {
    let mut total = 0.0;
    for (w, rho) in ens.weights.iter().zip(&ens.states) {
        let out = apply_channel(ch, rho)?;
        total += w * fidelity(rho, &out)?.powi(2);
    }
    Ok(total)
}

/// `f(x) = F(x ρ₁ + (1 − x) ρ₂, E)` for any real `x` (the argument need not
/// be a state outside `[0, 1]`).
pub fn mixture_entanglement_fidelity(
    x: f64,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    ch: &KrausChannel,
) -> Result<f64> {
    ch.check_dim(rho1)?;
    ch.check_dim(rho2)?;
    let m = rho1.matrix() * Complex64::new(x, 0.0) + rho2.matrix() * Complex64::new(1.0 - x, 0.0);
    Ok(sum_sq_traces(ch, &m))
}

/// Closed-form `f''(x) = 2 Σ_i |Tr((ρ₁ − ρ₂) E_i)|²` of
/// [`mixture_entanglement_fidelity`]; constant in `x`.
pub fn convexity_second_derivative(rho1: &DensityMatrix, rho2: &DensityMatrix, ch: &KrausChannel) -> Result<f64> {
    ch.check_dim(rho1)?;
    ch.check_dim(rho2)?;
    Ok(2.0 * sum_sq_traces(ch, &(rho1.matrix() - rho2.matrix())))
}

/// Random channel with `kraus_count` operators, sliced from a Haar isometry
/// `C^d → C^{d·k}`.
pub fn random_channel<R: Rng + ?Sized>(dim: usize, kraus_count: usize, rng: &mut R) -> Result<KrausChannel> {
    if kraus_count == 0 {
        return Err(Error::InvalidChannel("no Kraus operators".into()));
    }
    let v = haar_isometry(dim * kraus_count, dim, rng);
    let ops = (0..kraus_count).map(|i| v.rows(i * dim, dim).into_owned()).collect();
    KrausChannel::new(ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::random::rng_for;
    use crate::states::random_density;
    use approx::assert_abs_diff_eq;

    fn plus() -> DensityMatrix {
        let h = Complex64::new(0.5, 0.0);
        DensityMatrix::new(CMatrix::from_element(2, 2, h)).unwrap()
    }

    #[test]
    fn channel_validation() {
        let half = CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0);
        assert!(matches!(KrausChannel::new(vec![half]), Err(Error::InvalidChannel(_))));
        assert!(matches!(KrausChannel::new(vec![]), Err(Error::InvalidChannel(_))));
        let ch = KrausChannel::identity(3);
        assert!(matches!(
            apply_channel(&ch, &DensityMatrix::maximally_mixed(2)),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn apply_examples() {
        let rho = random_density(3, 2, 5).unwrap();
        let out = apply_channel(&KrausChannel::identity(3), &rho).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) < 1e-15);

        let deph = NamedChannel::Dephasing(1.0).build(2).unwrap();
        assert_eq!(deph.kraus_ops().len(), 2);
        let out = apply_channel(&deph, &plus()).unwrap();
        assert!(max_abs_diff(out.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);

        let dep = NamedChannel::Depolarizing(0.3).build(3).unwrap();
        let out = apply_channel(&dep, &rho).unwrap();
        assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-12);
        let expect = rho.matrix() * Complex64::new(0.7, 0.0) + CMatrix::identity(3, 3) * Complex64::new(0.1, 0.0);
        assert!(max_abs_diff(out.matrix(), &expect) < 1e-12);
    }

    #[test]
    fn entanglement_fidelity_examples() {
        let rho = random_density(3, 3, 1).unwrap();
        assert_abs_diff_eq!(
            entanglement_fidelity(&rho, &KrausChannel::identity(3)).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        let flip = NamedChannel::PhaseFlip(0.25).build(2).unwrap();
        assert_abs_diff_eq!(entanglement_fidelity(&plus(), &flip).unwrap(), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(
            entanglement_fidelity_purified(&plus(), &flip).unwrap(),
            0.75,
            epsilon = 1e-14
        );

        // Maximally mixed input: Σ|Tr E_i|²/d².
        let ch = random_channel(3, 2, &mut rng_for(3, 0)).unwrap();
        let mixed = DensityMatrix::maximally_mixed(3);
        let formula: f64 = ch.kraus_ops().iter().map(|k| k.trace().norm_sqr()).sum::<f64>() / 9.0;
        assert_abs_diff_eq!(entanglement_fidelity(&mixed, &ch).unwrap(), formula, epsilon = 1e-14);
        assert_abs_diff_eq!(
            entanglement_fidelity_purified(&mixed, &ch).unwrap(),
            formula,
            epsilon = 1e-12
        );
    }

    #[test]
    fn ensemble_examples() {
        let rho = random_density(2, 2, 3).unwrap();
        let sigma = random_density(2, 1, 4).unwrap();
        let ens = Ensemble::new(vec![0.4, 0.6], vec![rho.clone(), sigma.clone()]).unwrap();
        assert_abs_diff_eq!(
            ensemble_average_fidelity(&ens, &KrausChannel::identity(2)).unwrap(),
            1.0,
            epsilon = 1e-12
        );

        let flip = NamedChannel::PhaseFlip(0.25).build(2).unwrap();
        let single = Ensemble::new(vec![1.0], vec![rho.clone()]).unwrap();
        let direct = fidelity(&rho, &apply_channel(&flip, &rho).unwrap()).unwrap().powi(2);
        assert_abs_diff_eq!(
            ensemble_average_fidelity(&single, &flip).unwrap(),
            direct,
            epsilon = 1e-15
        );

        let f1 = fidelity(&rho, &apply_channel(&flip, &rho).unwrap()).unwrap();
        let f2 = fidelity(&sigma, &apply_channel(&flip, &sigma).unwrap()).unwrap();
        assert_abs_diff_eq!(
            ensemble_average_fidelity(&ens, &flip).unwrap(),
            0.4 * f1 * f1 + 0.6 * f2 * f2,
            epsilon = 1e-15
        );

        assert!(Ensemble::new(vec![0.5, 0.6], vec![rho.clone(), sigma.clone()]).is_err());
        assert!(Ensemble::new(vec![1.5, -0.5], vec![rho.clone(), sigma]).is_err());
        assert!(Ensemble::new(vec![0.5, 0.5], vec![rho, DensityMatrix::maximally_mixed(3)]).is_err());
    }

    #[test]
    fn second_derivative_examples() {
        let ch = random_channel(3, 3, &mut rng_for(6, 0)).unwrap();
        let rho = random_density(3, 3, 6).unwrap();
        assert_eq!(convexity_second_derivative(&rho, &rho, &ch).unwrap(), 0.0);

        let other = random_density(3, 2, 7).unwrap();
        assert!(convexity_second_derivative(&rho, &other, &KrausChannel::identity(3)).unwrap() < 1e-30);

        let deph = NamedChannel::Dephasing(0.5).build(2).unwrap();
        let a = DensityMatrix::basis_state(2, 0);
        let b = DensityMatrix::basis_state(2, 1);
        let closed = convexity_second_derivative(&a, &b, &deph).unwrap();
        // Kraus {√½ I, √½|0><0|, √½|1><1|}: traces 0, √½, −√½.
        assert_abs_diff_eq!(closed, 2.0, epsilon = 1e-15);
        let h = 1e-4;
        let f = |x| mixture_entanglement_fidelity(x, &a, &b, &deph).unwrap();
        let fd = (f(0.5 + h) - 2.0 * f(0.5) + f(0.5 - h)) / (h * h);
        assert!((fd - closed).abs() <= 1e-5 * closed.abs().max(1.0));
    }

    #[test]
    fn named_channel_parsing() {
        assert_eq!("identity".parse::<NamedChannel>().unwrap(), NamedChannel::Identity);
        assert_eq!(
            "dephasing(0.25)".parse::<NamedChannel>().unwrap(),
            NamedChannel::Dephasing(0.25)
        );
        assert_eq!(
            "depolarizing:0.1".parse::<NamedChannel>().unwrap(),
            NamedChannel::Depolarizing(0.1)
        );
        assert_eq!(
            "amplitude-damping(0.3)".parse::<NamedChannel>().unwrap(),
            NamedChannel::AmplitudeDamping(0.3)
        );
        assert!("dephasing".parse::<NamedChannel>().is_err());
        assert!("bogus(0.1)".parse::<NamedChannel>().is_err());
        assert!(NamedChannel::Dephasing(1.5).build(2).is_err());
        assert!(NamedChannel::AmplitudeDamping(0.5).build(3).is_err());
        for name in [
            "identity",
            "dephasing(0.3)",
            "phase-flip(0.2)",
            "depolarizing(0.7)",
            "amplitude-damping(0.4)",
        ] {
            let ch = name.parse::<NamedChannel>().unwrap().build(2).unwrap();
            assert!(ch.completeness_defect() < 1e-14, "{name}");
            assert_eq!(
                ch.clone(),
                name.parse::<NamedChannel>()
                    .unwrap()
                    .to_string()
                    .parse::<NamedChannel>()
                    .unwrap()
                    .build(2)
                    .unwrap()
            );
        }
    }

    #[test]
    fn random_channel_and_remix() {
        let mut rng = rng_for(10, 0);
        let ch = random_channel(4, 3, &mut rng).unwrap();
        assert!(ch.completeness_defect() < 1e-12);
        let u = haar_isometry(5, 3, &mut rng);
        let remixed = ch.remix(&u).unwrap();
        assert_eq!(remixed.kraus_ops().len(), 5);
        let rho = random_density(4, 4, 10).unwrap();
        assert_abs_diff_eq!(
            entanglement_fidelity(&rho, &ch).unwrap(),
            entanglement_fidelity(&rho, &remixed).unwrap(),
            epsilon = 1e-12
        );
        let a = apply_channel(&ch, &rho).unwrap();
        let b = apply_channel(&remixed, &rho).unwrap();
        assert!(max_abs_diff(a.matrix(), b.matrix()) < 1e-12);
    }
}
