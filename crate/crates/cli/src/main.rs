//! `adaptive-contracts`: validate, solve, transform, generate and sweep
//! adaptive contract instances stored as JSON.
//!
//! Exit codes: 0 success, 2 input error, 3 infeasible target, 4 search or
//! enumeration guard exceeded, 1 anything else.

mod sweep;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adaptive_contracts::deterministic::{
    brute_force_optimal, prune_unpaid_inspections, solve_constant_actions, solve_isop, SolveReport,
    Target,
};
use adaptive_contracts::generators::{
    gen_beta_binomial_setting, gen_binomial_setting, gen_independent_set_instance,
    perturb_dirichlet, swebench_profiles, Graph, ModelProfile, OutcomeDraw, ZeroHandling,
};
use adaptive_contracts::minpay::Variant;
use adaptive_contracts::randomized::{
    comi_scale_down, comi_supremum, det_to_uni, search_randomized, to_always_inspect, GridConfig,
};
use adaptive_contracts::{Contract, ContractError, Setting};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use adaptive_contracts_cli::instance::InstanceFile;

#[derive(Parser)]
#[command(
    name = "adaptive-contracts",
    version,
    about = "Optimal adaptive contracts with costly inspection"
)]
struct Cli {
    /// Worker threads for parallel enumeration and sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance file and print its validation report.
    Validate { path: PathBuf },
    /// Compute an optimal contract.
    Solve(SolveArgs),
    /// Apply a contract transform.
    Transform(TransformArgs),
    /// Write a generated instance.
    Generate(GenerateArgs),
    /// Run an experiment sweep and write CSV + JSON.
    Sweep(sweep::SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Det,
    ComiSup,
    Coni,
    Umi,
    Uni,
}

#[derive(Clone, Copy, ValueEnum)]
enum DetAlgorithm {
    /// Enumerate inspection sets of size below the number of actions.
    Auto,
    BruteForce,
    ConstantActions,
    /// Single-signal policies; needs independent signals/outcomes and MLRP.
    Isop,
}

#[derive(clap::Args)]
struct SolveArgs {
    path: PathBuf,
    #[arg(long, value_enum, default_value = "det")]
    variant: VariantArg,
    /// 1-based action index, or `best`.
    #[arg(long, default_value = "best")]
    target: String,
    #[arg(long, value_enum, default_value = "auto")]
    algorithm: DetAlgorithm,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformOp {
    /// Stop inspecting signals whose outcome payments are all zero.
    Prune,
    /// Make a deterministic contract satisfy the uncommitted constraints.
    DetToUni,
    /// Replace randomized inspection by always inspecting.
    AlwaysInspect,
    /// Lower one signal's inspection probability, rescaling its payments.
    ScaleDown,
}

#[derive(clap::Args)]
struct TransformArgs {
    path: PathBuf,
    /// JSON contract `{"p": [...], "s": [...], "t": [[...], ...]}`.
    #[arg(long)]
    contract: PathBuf,
    #[arg(long, value_enum)]
    op: TransformOp,
    /// 1-based action (det-to-uni).
    #[arg(long)]
    action: Option<usize>,
    /// 1-based signal (scale-down).
    #[arg(long)]
    signal: Option<usize>,
    /// New probability (scale-down).
    #[arg(long)]
    probability: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Graph,
    Binomial,
    BetaBinomial,
}

#[derive(clap::Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Edge-list file (graph).
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Vertex count when it exceeds the largest edge endpoint (graph).
    #[arg(long)]
    vertices: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// JSON list of `{label, mu, cost}`; defaults to the built-in six models.
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    initial: usize,
    #[arg(long, default_value_t = 8)]
    refined: usize,
    #[arg(long, default_value_t = 125.0)]
    delta: f64,
    /// Correlation (beta-binomial).
    #[arg(long)]
    rho: Option<f64>,
    /// Perturb the rows with a Dirichlet of this concentration.
    #[arg(long)]
    dirichlet_alpha: Option<f64>,
    /// Required with --dirichlet-alpha.
    #[arg(long)]
    seed: Option<u64>,
    /// Draw each signal's outcome matrix independently instead of one
    /// shared draw.
    #[arg(long)]
    dirichlet_per_signal: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let result = match cli.command {
        Command::Validate { path } => cmd_validate(&path),
        Command::Solve(args) => cmd_solve(&args).map(|_| ExitCode::SUCCESS),
        Command::Transform(args) => cmd_transform(&args).map(|_| ExitCode::SUCCESS),
        Command::Generate(args) => cmd_generate(&args).map(|_| ExitCode::SUCCESS),
        Command::Sweep(args) => sweep::cmd_sweep(&args).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<ContractError>()) {
        Some(ContractError::Infeasible(_)) => 3,
        Some(
            ContractError::EnumerationTooLarge { .. } | ContractError::SearchGuardExceeded { .. },
        ) => 4,
        Some(ContractError::Lp(_)) => 1,
        _ => 2,
    }
}

pub(crate) fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}")?;
            Ok(())
        }
    }
}

pub(crate) fn load_setting(path: &Path) -> Result<Setting> {
    let setting = InstanceFile::read(path)?.to_setting()?;
    let report = setting.validate();
    if let Some(first) = report.errors.first() {
        bail!("invalid instance {}: {first}", path.display());
    }
    Ok(setting)
}

fn cmd_validate(path: &Path) -> Result<ExitCode> {
    let setting = InstanceFile::read(path)?.to_setting()?;
    let report = setting.validate();
    write_output(None, &serde_json::to_string_pretty(&report)?)?;
    Ok(if report.is_valid() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn parse_target(text: &str, setting: &Setting) -> Result<Target> {
    if text.eq_ignore_ascii_case("best") {
        return Ok(Target::Best);
    }
    let index: usize = text
        .parse()
        .map_err(|_| anyhow!("--target must be a 1-based action index or 'best', got '{text}'"))?;
    if index == 0 || index > setting.n_actions() {
        bail!("--target {index} out of range 1..={}", setting.n_actions());
    }
    Ok(Target::Action(index - 1))
}

fn with_label(setting: &Setting, target: usize, value: impl serde::Serialize) -> Result<String> {
    let mut json = serde_json::to_value(value)?;
    if let Value::Object(map) = &mut json {
        map.insert(
            "target_label".into(),
            Value::String(setting.action_labels()[target].clone()),
        );
    }
    Ok(serde_json::to_string_pretty(&json)?)
}

fn search_best(setting: &Setting, target: Target, variant: Variant) -> Result<SolveReport> {
    let grid = GridConfig::default();
    let targets: Vec<usize> = match target {
        Target::Action(i) => vec![i],
        Target::Best => (0..setting.n_actions()).collect(),
    };
    let mut best: Option<SolveReport> = None;
    for i in targets {
        match search_randomized(setting, i, variant, &grid) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.utility > b.utility + 1e-9) {
                    best = Some(r);
                }
            }
            Err(ContractError::Infeasible(_)) if target == Target::Best => {}
            Err(e) => return Err(e.into()),
        }
    }
    best.ok_or_else(|| anyhow!(ContractError::Infeasible(0)))
}

fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let setting = load_setting(&args.path)?;
    let target = parse_target(&args.target, &setting)?;
    let text = match args.variant {
        VariantArg::Det => {
            let report = match args.algorithm {
                DetAlgorithm::Auto | DetAlgorithm::ConstantActions => {
                    solve_constant_actions(&setting, target)?
                }
                DetAlgorithm::BruteForce => brute_force_optimal(&setting, target)?,
                DetAlgorithm::Isop => {
                    let last = setting.n_actions() - 1;
                    if !matches!(target, Target::Best) && target != Target::Action(last) {
                        bail!("the isop algorithm always targets the last action");
                    }
                    solve_isop(&setting)?
                }
            };
            with_label(&setting, report.target, &report)?
        }
        VariantArg::ComiSup => {
            let sup = comi_supremum(&setting, target)?;
            with_label(&setting, sup.target, &sup)?
        }
        VariantArg::Coni | VariantArg::Umi | VariantArg::Uni => {
            let variant = match args.variant {
                VariantArg::Coni => Variant::Coni,
                VariantArg::Umi => Variant::Umi,
                _ => Variant::Uni,
            };
            let report = search_best(&setting, target, variant)?;
            with_label(&setting, report.target, &report)?
        }
    };
    write_output(args.out.as_deref(), &text)
}

fn one_based(value: Option<usize>, flag: &str, count: usize) -> Result<usize> {
    let v = value.ok_or_else(|| anyhow!("{flag} is required for this transform"))?;
    if v == 0 || v > count {
        bail!("{flag} {v} out of range 1..={count}");
    }
    Ok(v - 1)
}

fn cmd_transform(args: &TransformArgs) -> Result<()> {
    let setting = load_setting(&args.path)?;
    let text = std::fs::read_to_string(&args.contract)
        .with_context(|| format!("reading {}", args.contract.display()))?;
    let ct: Contract = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.contract.display()))?;
    let out = match args.op {
        TransformOp::Prune => prune_unpaid_inspections(&setting, &ct)?,
        TransformOp::DetToUni => {
            let i = one_based(args.action, "--action", setting.n_actions())?;
            det_to_uni(&setting, &ct, i)?
        }
        TransformOp::AlwaysInspect => to_always_inspect(&setting, &ct)?,
        TransformOp::ScaleDown => {
            let k = one_based(args.signal, "--signal", setting.n_signals())?;
            let p = args
                .probability
                .ok_or_else(|| anyhow!("--probability is required for scale-down"))?;
            comi_scale_down(&ct, k, p)?
        }
    };
    write_output(args.out.as_deref(), &serde_json::to_string_pretty(&out)?)
}

pub(crate) fn load_profiles(path: Option<&Path>) -> Result<Vec<ModelProfile>> {
    match path {
        None => Ok(swebench_profiles()),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    if args.dirichlet_alpha.is_some() && args.seed.is_none() {
        bail!("--seed is required with --dirichlet-alpha");
    }
    let setting = match args.kind {
        Kind::Graph => {
            let path = args
                .edges
                .as_ref()
                .ok_or_else(|| anyhow!("--edges is required for graph"))?;
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let graph = Graph::parse_edge_list(&text, args.vertices)?;
            gen_independent_set_instance(&graph, args.eps)?
        }
        Kind::Binomial => {
            let profiles = load_profiles(args.profiles.as_deref())?;
            gen_binomial_setting(&profiles, args.initial, args.refined, args.delta)?
        }
        Kind::BetaBinomial => {
            let profiles = load_profiles(args.profiles.as_deref())?;
            let rho = args
                .rho
                .ok_or_else(|| anyhow!("--rho is required for beta-binomial"))?;
            gen_beta_binomial_setting(&profiles, args.initial, args.refined, args.delta, rho)?
        }
    };
    let setting = match (args.dirichlet_alpha, args.seed) {
        (Some(alpha), Some(seed)) => {
            let draw = if args.dirichlet_per_signal {
                OutcomeDraw::PerSignal
            } else {
                OutcomeDraw::Shared
            };
            perturb_dirichlet(&setting, alpha, seed, ZeroHandling::Smooth, draw)?
        }
        _ => setting,
    };
    write_output(
        args.out.as_deref(),
        &InstanceFile::from_setting(&setting).to_json(),
    )
}
