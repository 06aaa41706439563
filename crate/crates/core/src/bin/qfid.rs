//! `qfid`: batch front end for the fidelity library.
//!
//! Exit status: 0 on success, 1 on input errors, 2 when `proptest` finds a
//! property violation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use qfid::channels::{
    apply_channel, ensemble_average_fidelity, entanglement_fidelity, entanglement_fidelity_purified, KrausChannel,
    NamedChannel,
};
use qfid::io::{self, povm_to_json};
use qfid::measurement::{
    classical_fidelity, classical_trace_distance, fidelity_optimal_povm, helstrom_povm, induced_distribution,
    lifted_truncation_povm, lifted_truncation_sweep, write_lifted_sweep_csv,
};
use qfid::suites::{parse_suites, run_suites};
use qfid::truncation::{epsilon_schedule, truncated_fidelity_sweep, SpectralStateGenerator, SweepConfig};
use qfid::{bures_angle, check_bounds, fidelity, trace_distance, DensityMatrix};

#[derive(Parser, Debug)]
#[command(name = "qfid", version, about = "Quantum state fidelity toolkit")]
struct Cli {
    /// Write the artifact here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PovmKind {
    /// Eigenbasis of the operator M; attains the fidelity.
    Fidelity,
    /// Sign eigenspaces of ρ − σ; attains the trace distance.
    Helstrom,
    /// Lifted truncation POVM; needs --trunc-dim or --trunc-dims.
    Lifted,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fidelity, Bures angle and trace distance of two states.
    Fidelity(PairArgs),
    /// Fuchs-van de Graaf bound report.
    Bounds(PairArgs),
    /// Distributions and classical quantities induced by a given POVM.
    Povm {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        povm: PathBuf,
    },
    /// Construct an optimal (or lifted) POVM and report what it achieves.
    OptimalPovm {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_enum, default_value_t = PovmKind::Fidelity)]
        kind: PovmKind,
        #[arg(long)]
        trunc_dim: Option<usize>,
        /// Comma-separated sweep of truncation dimensions (lifted kind).
        #[arg(long, value_delimiter = ',')]
        trunc_dims: Vec<usize>,
    },
    /// Entanglement fidelity of a state through a channel.
    Entfid {
        #[arg(long)]
        rho: PathBuf,
        /// Registry name such as `dephasing(0.25)`, or a channel JSON file.
        #[arg(long)]
        channel: String,
        #[arg(long)]
        ensemble: Option<PathBuf>,
    },
    /// Truncation sweep for two diagonal generators.
    Converge {
        /// e.g. `geometric(0.5)`, `power(2)`, `custom(0.25,0.75)+rot(0.3)`.
        #[arg(long)]
        g1: String,
        #[arg(long)]
        g2: String,
        #[arg(long, value_delimiter = ',', default_values_t = [4usize, 8, 16, 32, 64])]
        dims: Vec<usize>,
        /// Report the truncation dimension reaching this tolerance instead.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Seeded property battery.
    Proptest {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

#[derive(clap::Args, Debug)]
struct PairArgs {
    #[arg(long)]
    rho: PathBuf,
    #[arg(long)]
    sigma: PathBuf,
}

impl PairArgs {
    fn load(&self) -> anyhow::Result<(DensityMatrix, DensityMatrix)> {
        let rho = io::read_density(&self.rho)?;
        let sigma = io::read_density(&self.sigma)?;
        if rho.dim() != sigma.dim() {
            bail!(
                "{} has dimension {} but {} has dimension {}",
                self.rho.display(),
                rho.dim(),
                self.sigma.display(),
                sigma.dim()
            );
        }
        Ok((rho, sigma))
    }
}

enum Artifact {
    Json(serde_json::Value),
    Csv(Vec<u8>),
}

struct Outcome {
    artifact: Artifact,
    violations: bool,
}

impl From<Artifact> for Outcome {
    fn from(artifact: Artifact) -> Self {
        Outcome {
            artifact,
            violations: false,
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<Artifact> {
    Ok(Artifact::Json(serde_json::to_value(value)?))
}

fn json_only(format: Format, command: &str) -> anyhow::Result<()> {
    if format == Format::Csv {
        bail!("`{command}` has no CSV output");
    }
    Ok(())
}

fn load_channel(arg: &str, dim: usize) -> anyhow::Result<KrausChannel> {
    let path = Path::new(arg);
    if path.is_file() {
        let ch = io::read_channel(path)?;
        if ch.dim() != dim {
            bail!("{arg}: channel acts on dimension {}, state has {dim}", ch.dim());
        }
        return Ok(ch);
    }
    let named: NamedChannel = arg
        .parse()
        .with_context(|| format!("`{arg}` is neither a channel file nor a registry name"))?;
    Ok(named.build(dim)?)
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let format = cli.format;
    match &cli.command {
        Command::Fidelity(pair) => {
            json_only(format, "fidelity")?;
            let (rho, sigma) = pair.load()?;
            Ok(Artifact::Json(json!({
                "fidelity": fidelity(&rho, &sigma)?,
                "bures_angle": bures_angle(&rho, &sigma)?,
                "trace_distance": trace_distance(&rho, &sigma)?,
            }))
            .into())
        }
        Command::Bounds(pair) => {
            json_only(format, "bounds")?;
            let (rho, sigma) = pair.load()?;
            Ok(to_json(&check_bounds(&rho, &sigma)?)?.into())
        }
        Command::Povm { pair, povm } => {
            json_only(format, "povm")?;
            let (rho, sigma) = pair.load()?;
            let povm = io::read_povm(povm)?;
            let p = induced_distribution(&rho, &povm).with_context(|| "measuring rho")?;
            let q = induced_distribution(&sigma, &povm).with_context(|| "measuring sigma")?;
            Ok(Artifact::Json(json!({
                "p": p.probabilities,
                "q": q.probabilities,
                "classical_fidelity": classical_fidelity(&p, &q)?,
                "classical_trace_distance": classical_trace_distance(&p, &q)?,
                "fidelity": fidelity(&rho, &sigma)?,
                "trace_distance": trace_distance(&rho, &sigma)?,
            }))
            .into())
        }
        Command::OptimalPovm {
            pair,
            kind,
            trunc_dim,
            trunc_dims,
        } => {
            let (rho, sigma) = pair.load()?;
            optimal_povm(format, &rho, &sigma, *kind, *trunc_dim, trunc_dims)
        }
        Command::Entfid { rho, channel, ensemble } => {
            json_only(format, "entfid")?;
            let rho_path = rho;
            let rho = io::read_density(rho_path)?;
            let ch = load_channel(channel, rho.dim())?;
            let out = apply_channel(&ch, &rho)?;
            let mut report = json!({
                "entanglement_fidelity": entanglement_fidelity(&rho, &ch)?,
                "entanglement_fidelity_purified": entanglement_fidelity_purified(&rho, &ch)?,
                "output_fidelity_squared": fidelity(&rho, &out)?.powi(2),
            });
            if let Some(path) = ensemble {
                let ens = io::read_ensemble(path)?;
                if ens.dim() != rho.dim() {
                    bail!(
                        "{}: ensemble dimension {} differs from state dimension {}",
                        path.display(),
                        ens.dim(),
                        rho.dim()
                    );
                }
                report["ensemble_average_fidelity"] = json!(ensemble_average_fidelity(&ens, &ch)?);
                report["ensemble_mixture_entanglement_fidelity"] =
                    json!(entanglement_fidelity(&ens.average_state()?, &ch)?);
            }
            Ok(Artifact::Json(report).into())
        }
        Command::Converge { g1, g2, dims, eps } => {
            let cfg = SweepConfig::from_env()?;
            let g1 = SpectralStateGenerator::parse(g1, cfg.cap_dim)?;
            let g2 = SpectralStateGenerator::parse(g2, cfg.cap_dim)?;
            if let Some(eps) = eps {
                json_only(format, "converge --eps")?;
                return Ok(to_json(&epsilon_schedule(&g1, &g2, *eps, &cfg)?)?.into());
            }
            let report = truncated_fidelity_sweep(&g1, &g2, dims, &cfg)?;
            Ok(match format {
                Format::Json => to_json(&report)?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    report.write_csv(&mut buf)?;
                    Artifact::Csv(buf)
                }
            }
            .into())
        }
        Command::Proptest { suite, seed, trials } => {
            json_only(format, "proptest")?;
            let suites = parse_suites(suite).map_err(anyhow::Error::msg)?;
            let report = run_suites(&suites, *seed, *trials);
            Ok(Outcome {
                violations: !report.passed,
                artifact: to_json(&report)?,
            })
        }
    }
}

fn optimal_povm(
    format: Format,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    kind: PovmKind,
    trunc_dim: Option<usize>,
    trunc_dims: &[usize],
) -> anyhow::Result<Outcome> {
    if kind != PovmKind::Lifted && (trunc_dim.is_some() || !trunc_dims.is_empty()) {
        bail!("--trunc-dim and --trunc-dims apply to --kind lifted only");
    }
    if !trunc_dims.is_empty() {
        if trunc_dim.is_some() {
            bail!("give either --trunc-dim or --trunc-dims, not both");
        }
        let rows = lifted_truncation_sweep(rho, sigma, trunc_dims)?;
        return Ok(match format {
            Format::Json => to_json(&rows)?,
            Format::Csv => {
                let mut buf = Vec::new();
                write_lifted_sweep_csv(&rows, &mut buf)?;
                Artifact::Csv(buf)
            }
        }
        .into());
    }
    json_only(format, "optimal-povm")?;
    let (povm, extra) = match kind {
        PovmKind::Fidelity => (fidelity_optimal_povm(rho, sigma)?, json!({})),
        PovmKind::Helstrom => (helstrom_povm(rho, sigma)?, json!({})),
        PovmKind::Lifted => {
            let n = trunc_dim.context("--kind lifted needs --trunc-dim or --trunc-dims")?;
            let lt = lifted_truncation_povm(rho, sigma, n)?;
            let extra = json!({
                "trunc_dim": n,
                "alpha": lt.alpha,
                "beta": lt.beta,
                "truncated_fidelity": lt.truncated_fidelity,
                "gap": lt.gap,
            });
            (lt.povm, extra)
        }
    };
    let p = induced_distribution(rho, &povm)?;
    let q = induced_distribution(sigma, &povm)?;
    let mut report = json!({
        "povm": povm_to_json(&povm),
        "p": p.probabilities,
        "q": q.probabilities,
        "classical_fidelity": classical_fidelity(&p, &q)?,
        "classical_trace_distance": classical_trace_distance(&p, &q)?,
        "fidelity": fidelity(rho, sigma)?,
        "trace_distance": trace_distance(rho, sigma)?,
    });
    if let (Some(obj), Some(more)) = (report.as_object_mut(), extra.as_object()) {
        obj.extend(more.clone());
    }
    Ok(Artifact::Json(report).into())
}

fn emit(artifact: &Artifact, output: Option<&Path>) -> anyhow::Result<()> {
    let bytes = match artifact {
        Artifact::Json(v) => {
            let mut s = serde_json::to_string_pretty(v)?;
            s.push('\n');
            s.into_bytes()
        }
        Artifact::Csv(b) => b.clone(),
    };
    match output {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

/// The error chain joined by `: `, skipping causes a parent already quotes.
fn describe(e: &anyhow::Error) -> String {
    let mut text = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !text.contains(&c) {
            text.push_str(": ");
            text.push_str(&c);
        }
    }
    text
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match run(&cli) {
        Ok(outcome) => outcome,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            return ExitCode::from(1);
        }
    };
    if let Err(e) = emit(&outcome.artifact, cli.output.as_deref()) {
        eprintln!("error: {}", describe(&e));
        return ExitCode::from(1);
    }
    if outcome.violations {
        eprintln!("property violations found; see the report");
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}
