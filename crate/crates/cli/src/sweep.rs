//! `sweep` subcommand: experiment grids written as CSV plus a JSON report.

use std::path::{Path, PathBuf};

use adaptive_contracts::experiments::{
    alpaca_setting, swebench_design_heatmap, swebench_policy_sweep, sweep_inspection_cost,
    sweep_reward, SweepResult,
};
use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use serde::Serialize;

use crate::{load_profiles, load_setting};

#[derive(Clone, Copy, ValueEnum)]
pub enum Experiment {
    Alpaca,
    SwebenchPolicy,
    SwebenchHeatmap,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Parameter {
    Reward,
    InspectionCost,
}

#[derive(clap::Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    experiment: Experiment,
    /// Scaled quantity (alpaca).
    #[arg(long, value_enum, default_value = "reward")]
    parameter: Parameter,
    /// Comma-separated grid: scale factors (alpaca) or per-test prices
    /// (swebench-policy).
    #[arg(long)]
    grid: Option<String>,
    /// Instance to sweep instead of the built-in alpaca setting.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    initial: usize,
    #[arg(long, default_value_t = 8)]
    refined: usize,
    #[arg(long, default_value_t = 125.0)]
    delta: f64,
    /// Initial-suite sizes, `a-b` or a comma list (swebench-heatmap).
    #[arg(long, default_value = "1-6")]
    initial_range: String,
    /// Refined-suite sizes, `a-b` or a comma list (swebench-heatmap).
    #[arg(long, default_value = "0-25")]
    refined_range: String,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn parse_grid(text: Option<&str>) -> Result<Vec<f64>> {
    let text = text.ok_or_else(|| anyhow!("--grid is required for this experiment"))?;
    let grid: Vec<f64> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| anyhow!("bad grid value '{s}'")))
        .collect::<Result<_>>()?;
    if grid.is_empty() {
        bail!("--grid is empty");
    }
    Ok(grid)
}

fn parse_range(text: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = text.split_once('-') {
        let a: usize = a
            .trim()
            .parse()
            .map_err(|_| anyhow!("bad range '{text}'"))?;
        let b: usize = b
            .trim()
            .parse()
            .map_err(|_| anyhow!("bad range '{text}'"))?;
        if a > b {
            bail!("empty range '{text}'");
        }
        return Ok((a..=b).collect());
    }
    let v: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| anyhow!("bad range '{text}'")))
        .collect::<Result<_>>()?;
    if v.is_empty() {
        bail!("empty range '{text}'");
    }
    Ok(v)
}

#[derive(Serialize)]
struct AlpacaRow<'a> {
    value: f64,
    target: usize,
    target_label: &'a str,
    utility: f64,
    total_cost: f64,
    policy: &'a str,
    naive: Option<f64>,
    len: Option<f64>,
    judge: Option<f64>,
    len_judge: Option<f64>,
    advantage: Option<f64>,
}

#[derive(Serialize)]
struct PolicyRow<'a> {
    delta: f64,
    policy: &'a str,
    inspected: String,
    total_cost: f64,
}

#[derive(Serialize)]
struct HeatmapRow {
    initial: usize,
    refined: usize,
    total_cost: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)
        .with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    match args.experiment {
        Experiment::Alpaca => {
            let grid = parse_grid(args.grid.as_deref())?;
            let setting = match &args.instance {
                Some(p) => load_setting(p)?,
                None => alpaca_setting(),
            };
            let result = match args.parameter {
                Parameter::Reward => sweep_reward(&setting, &grid)?,
                Parameter::InspectionCost => sweep_inspection_cost(&setting, &grid)?,
            };
            let labels = setting.action_labels();
            let rows = result.points.iter().map(|p| AlpacaRow {
                value: p.value,
                target: p.target + 1,
                target_label: &labels[p.target],
                utility: p.utility,
                total_cost: p.total_cost,
                policy: &p.policy,
                naive: p.baselines.as_ref().map(|b| b.naive),
                len: p.baselines.as_ref().map(|b| b.len),
                judge: p.baselines.as_ref().and_then(|b| b.judge),
                len_judge: p.baselines.as_ref().map(|b| b.len_judge),
                advantage: p.advantage,
            });
            write_outputs(args, &result, rows)
        }
        Experiment::SwebenchPolicy => {
            let grid = parse_grid(args.grid.as_deref())?;
            let profiles = load_profiles(args.profiles.as_deref())?;
            let result = swebench_policy_sweep(&profiles, args.initial, args.refined, &grid)?;
            let rows = result.points.iter().map(|p| PolicyRow {
                delta: p.value,
                policy: &p.policy,
                inspected: p
                    .inspected
                    .iter()
                    .map(|k| (k + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
                total_cost: p.total_cost,
            });
            write_outputs(args, &result, rows)
        }
        Experiment::SwebenchHeatmap => {
            let profiles = load_profiles(args.profiles.as_deref())?;
            let initial = parse_range(&args.initial_range)?;
            let refined = parse_range(&args.refined_range)?;
            let map = swebench_design_heatmap(&profiles, &initial, &refined, args.delta)?;
            let stem = args.out_dir.join("swebench-heatmap_design");
            let mut rows = Vec::new();
            for (a, row) in map.cost.iter().enumerate() {
                for (b, &c) in row.iter().enumerate() {
                    rows.push(HeatmapRow {
                        initial: map.initial[a],
                        refined: map.refined[b],
                        total_cost: c,
                    });
                }
            }
            write_csv(&stem.with_extension("csv"), rows)?;
            write_json(&stem.with_extension("json"), &map)?;
            let (a, b, c) = map.argmin();
            println!("argmin initial={a} refined={b} total_cost={c:.3}");
            Ok(())
        }
    }
}

fn write_outputs<T: Serialize>(
    args: &SweepArgs,
    result: &SweepResult,
    rows: impl IntoIterator<Item = T>,
) -> Result<()> {
    let stem = args
        .out_dir
        .join(format!("{}_{}", result.experiment, result.parameter));
    write_csv(&stem.with_extension("csv"), rows)?;
    write_json(&stem.with_extension("json"), result)?;
    println!("wrote {}", stem.with_extension("csv").display());
    Ok(())
}
