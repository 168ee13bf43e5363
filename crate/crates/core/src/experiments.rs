//! Case studies built from published benchmark statistics.
//!
//! * A question-answering instance: three chat models, a free response-length
//!   signal, and a costly pairwise LLM judge. Adaptive contracts are compared
//!   with four non-adaptive baselines and swept over reward and inspection
//!   cost.
//! * A code-generation family on unit-test pass counts (see
//!   [`crate::generators::gen_binomial_setting`]): policy regimes across test
//!   prices, the best test-suite design, and robustness to correlated or
//!   perturbed pass probabilities.

use rayon::prelude::*;
use serde::Serialize;

use crate::combined::Atom;
use crate::deterministic::{brute_force_optimal, solve_isop, SolveReport, Target};
use crate::generators::{
    gen_beta_binomial_setting, gen_binomial_setting, perturb_dirichlet, ModelProfile, OutcomeDraw,
    ZeroHandling,
};
use crate::minpay::{minpay_total_cost, minpay_with_options, MinPayOptions, VariantConstraints};
use crate::randomized::comi_supremum;
use crate::{Contract, ContractError, Result, Setting};

/// Reward for a response the judge prefers over the reference.
pub const ALPACA_REWARD: f64 = 2.0;

/// Three chat models; signal 0 = short response, signal 1 = long response;
/// outcome 1 = judged better than the reference.
pub fn alpaca_setting() -> Setting {
    let q0 = vec![vec![0.21, 0.79], vec![0.10, 0.90], vec![0.11, 0.89]];
    let short = vec![vec![0.78, 0.22], vec![0.61, 0.39], vec![0.54, 0.46]];
    let long = vec![vec![0.95, 0.05], vec![0.56, 0.44], vec![0.45, 0.55]];
    let setting = Setting::with_ragged_rewards(
        vec![0.00030, 0.00028, 0.00468],
        vec![0.3, 0.3],
        q0,
        vec![short, long],
        vec![vec![0.0, ALPACA_REWARD], vec![0.0, ALPACA_REWARD]],
    )
    .and_then(|s| {
        s.with_labels(
            vec![
                "GPT-3.5 Turbo".into(),
                "GPT-4o Mini".into(),
                "GPT-4o".into(),
            ],
            vec!["short".into(), "long".into()],
        )
    })
    .expect("embedded instance is well formed");
    debug_assert!(alpaca_pairing_holds(&setting));
    setting
}

/// The pairing of signals with their judge matrices is the one under which
/// the expected rewards are increasing in model capability.
pub fn alpaca_pairing_holds(setting: &Setting) -> bool {
    let r: Vec<f64> = (0..3)
        .map(|i| setting.expected_reward(i).unwrap_or(0.0))
        .collect();
    r[0] < r[1] && r[1] < r[2]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Baselines {
    /// Flat pay equal to the costliest model's cost, no inspection.
    pub naive: f64,
    /// Pay on the length signal only.
    pub len: f64,
    /// Always judge, pay on the judge's verdict only.
    pub judge: Option<f64>,
    /// Always judge, pay on (length, verdict).
    pub len_judge: f64,
}

impl Baselines {
    pub fn best(&self) -> f64 {
        [
            self.naive,
            self.len,
            self.len_judge,
            self.judge.unwrap_or(f64::NEG_INFINITY),
        ]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn best_over_targets(setting: &Setting, p: &[f64], options: &MinPayOptions) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for i in 0..setting.n_actions() {
        let vc = VariantConstraints::plain(p);
        if let Some(m) = minpay_with_options(setting, p, i, &vc, options)? {
            best = best.max(setting.expected_reward(i)? - m.total());
        }
    }
    Ok(best)
}

/// Utilities of the four non-adaptive contracts, each optimized over target
/// actions. `judge` is `None` when signals have different outcome counts.
pub fn alpaca_baselines(setting: &Setting) -> Result<Baselines> {
    let ell = setting.n_signals();
    let top = setting.costs().iter().copied().fold(0.0, f64::max);
    let flat = Contract {
        p: vec![0.0; ell],
        s: vec![top; ell],
        t: setting
            .outcome_counts()
            .into_iter()
            .map(|m| vec![0.0; m])
            .collect(),
    };
    let naive = setting.principal_utility(&flat)?;

    let no_options = MinPayOptions {
        tidy: false,
        ..MinPayOptions::default()
    };
    let len = best_over_targets(setting, &vec![0.0; ell], &no_options)?;
    let always = vec![1.0; ell];
    let len_judge = best_over_targets(setting, &always, &no_options)?;

    let counts = setting.outcome_counts();
    let judge = if counts.iter().all(|&m| m == counts[0]) {
        let linked = (1..ell)
            .flat_map(|k| (0..counts[0]).map(move |j| (Atom::Outcome(k, j), Atom::Outcome(0, j))))
            .collect();
        let options = MinPayOptions {
            clamp: false,
            linked,
            tidy: false,
        };
        Some(best_over_targets(setting, &always, &options)?)
    } else {
        None
    };
    Ok(Baselines {
        naive,
        len,
        judge,
        len_judge,
    })
}

/// `(adaptive - best) / |best|`, or 0 when no baseline is profitable.
pub fn relative_advantage(adaptive: f64, best_baseline: f64) -> f64 {
    if best_baseline <= 0.0 {
        0.0
    } else {
        (adaptive - best_baseline) / best_baseline.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub target: usize,
    pub utility: f64,
    pub total_cost: f64,
    /// Human-readable inspection policy.
    pub policy: String,
    pub inspected: Vec<usize>,
    pub baselines: Option<Baselines>,
    pub advantage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub experiment: String,
    pub parameter: String,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(ContractError::InvalidParameter("empty sweep grid".into()));
    }
    if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ContractError::InvalidParameter(
            "sweep grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

fn describe_policy(setting: &Setting, ct: &Contract) -> (String, Vec<usize>) {
    let inspected = ct.inspected();
    let text = if inspected.is_empty() {
        "none".to_string()
    } else {
        inspected
            .iter()
            .map(|&k| setting.signal_labels()[k].clone())
            .collect::<Vec<_>>()
            .join("+")
    };
    (text, inspected)
}

fn adaptive_point(setting: &Setting, value: f64) -> Result<SweepPoint> {
    let report = brute_force_optimal(setting, Target::Best)?;
    let baselines = alpaca_baselines(setting)?;
    let advantage = relative_advantage(report.utility, baselines.best());
    let (policy, inspected) = describe_policy(setting, &report.contract);
    Ok(SweepPoint {
        value,
        target: report.target,
        utility: report.utility,
        total_cost: report.total_cost,
        policy,
        inspected,
        baselines: Some(baselines),
        advantage: Some(advantage),
    })
}

/// Scales every reward by each factor in turn.
pub fn sweep_reward(setting: &Setting, factors: &[f64]) -> Result<SweepResult> {
    check_grid(factors)?;
    if factors.iter().any(|&f| f <= 0.0) {
        return Err(ContractError::InvalidParameter(
            "reward factors must be positive".into(),
        ));
    }
    let points = factors
        .par_iter()
        .map(|&f| adaptive_point(&setting.clone().map_rewards(|_, _, r| r * f), f))
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        experiment: "alpaca".into(),
        parameter: "reward".into(),
        points,
    })
}

/// Scales every inspection cost by each factor in turn.
pub fn sweep_inspection_cost(setting: &Setting, factors: &[f64]) -> Result<SweepResult> {
    check_grid(factors)?;
    if factors.iter().any(|&f| f < 0.0) {
        return Err(ContractError::InvalidParameter(
            "inspection-cost factors must be nonnegative".into(),
        ));
    }
    let points = factors
        .par_iter()
        .map(|&f| adaptive_point(&setting.clone().map_inspection_costs(|_, d| d * f), f))
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        experiment: "alpaca".into(),
        parameter: "inspection_cost".into(),
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyClass {
    InspectFullSuccess,
    InspectFullFailure,
    NoInspection,
    Other,
}

impl PolicyClass {
    pub fn of(inspected: &[usize], n_signals: usize) -> Self {
        match inspected {
            [] => PolicyClass::NoInspection,
            [k] if *k + 1 == n_signals => PolicyClass::InspectFullSuccess,
            [0] => PolicyClass::InspectFullFailure,
            _ => PolicyClass::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyClass::InspectFullSuccess => "inspect-full-success",
            PolicyClass::InspectFullFailure => "inspect-full-failure",
            PolicyClass::NoInspection => "no-inspection",
            PolicyClass::Other => "other",
        }
    }
}

/// Total pay for the most capable model including the initial-suite
/// surcharge.
fn swebench_solve(setting: &Setting) -> Result<SolveReport> {
    let mut report = solve_isop(setting)?;
    report.total_cost += setting.surcharge();
    report.utility -= setting.surcharge();
    Ok(report)
}

/// Optimal policy for the most capable model as the per-test price varies.
pub fn swebench_policy_sweep(
    profiles: &[ModelProfile],
    initial: usize,
    refined: usize,
    deltas: &[f64],
) -> Result<SweepResult> {
    check_grid(deltas)?;
    let points = deltas
        .par_iter()
        .map(|&delta| {
            let setting = gen_binomial_setting(profiles, initial, refined, delta)?;
            let report = swebench_solve(&setting)?;
            let inspected = report.inspected();
            let class = PolicyClass::of(&inspected, setting.n_signals());
            Ok(SweepPoint {
                value: delta,
                target: report.target,
                utility: report.utility,
                total_cost: report.total_cost,
                policy: class.as_str().to_string(),
                inspected,
                baselines: None,
                advantage: None,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        experiment: "swebench-policy".into(),
        parameter: "delta".into(),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heatmap {
    pub delta: f64,
    pub initial: Vec<usize>,
    pub refined: Vec<usize>,
    /// `cost[a][b]`: total pay with `initial[a]` coarse and `refined[b]`
    /// inspected tests.
    pub cost: Vec<Vec<f64>>,
}

impl Heatmap {
    /// `(initial, refined, cost)` of the cheapest cell; ties go to the first
    /// cell in row-major order.
    pub fn argmin(&self) -> (usize, usize, f64) {
        let mut best = (self.initial[0], self.refined[0], f64::INFINITY);
        for (a, row) in self.cost.iter().enumerate() {
            for (b, &c) in row.iter().enumerate() {
                if c < best.2 {
                    best = (self.initial[a], self.refined[b], c);
                }
            }
        }
        best
    }
}

/// Cheapest total pay for the most capable model over test-suite designs.
/// A refined count of zero means nothing can be inspected.
pub fn swebench_design_heatmap(
    profiles: &[ModelProfile],
    initial: &[usize],
    refined: &[usize],
    delta: f64,
) -> Result<Heatmap> {
    if initial.is_empty() || refined.is_empty() || initial.contains(&0) {
        return Err(ContractError::InvalidParameter(
            "need nonempty ranges and at least one initial test".into(),
        ));
    }
    let cells: Vec<(usize, usize)> = initial
        .iter()
        .flat_map(|&a| refined.iter().map(move |&b| (a, b)))
        .collect();
    let costs: Vec<f64> = cells
        .par_iter()
        .map(|&(a, b)| {
            if b == 0 {
                let setting = gen_binomial_setting(profiles, a, 1, delta)?;
                let p = vec![0.0; setting.n_signals()];
                let last = setting.n_actions() - 1;
                let cost = minpay_total_cost(&setting, &p, last, &VariantConstraints::plain(&p))?;
                Ok(cost + setting.surcharge())
            } else {
                let setting = gen_binomial_setting(profiles, a, b, delta)?;
                Ok(swebench_solve(&setting)?.total_cost)
            }
        })
        .collect::<Result<_>>()?;
    let cost = costs.chunks(refined.len()).map(<[f64]>::to_vec).collect();
    Ok(Heatmap {
        delta,
        initial: initial.to_vec(),
        refined: refined.to_vec(),
        cost,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessPoint {
    pub alpha: f64,
    pub seed: u64,
    pub inspected: Vec<usize>,
    pub total_cost: f64,
}

/// Optimal deterministic policy for the most capable model on Dirichlet
/// perturbations of the binomial setting.
pub fn dirichlet_robustness(
    profiles: &[ModelProfile],
    initial: usize,
    refined: usize,
    delta: f64,
    alphas: &[f64],
    seeds: std::ops::Range<u64>,
    draw: OutcomeDraw,
) -> Result<Vec<RobustnessPoint>> {
    let base = gen_binomial_setting(profiles, initial, refined, delta)?;
    let jobs: Vec<(f64, u64)> = alphas
        .iter()
        .flat_map(|&a| seeds.clone().map(move |s| (a, s)))
        .collect();
    jobs.par_iter()
        .map(|&(alpha, seed)| {
            let s = perturb_dirichlet(&base, alpha, seed, ZeroHandling::Smooth, draw)?;
            let last = s.n_actions() - 1;
            let r = brute_force_optimal(&s, Target::Action(last))?;
            Ok(RobustnessPoint {
                alpha,
                seed,
                inspected: r.inspected(),
                total_cost: r.total_cost + s.surcharge(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationPoint {
    pub rho: f64,
    pub total_cost: f64,
    /// Cost with free inspection, the limit the optimum approaches.
    pub free_inspection_cost: f64,
    pub inspected: Vec<usize>,
}

/// Optimal pay for the most capable model as the intra-task correlation of
/// test outcomes grows.
pub fn beta_binomial_correlation_sweep(
    profiles: &[ModelProfile],
    initial: usize,
    refined: usize,
    delta: f64,
    rhos: &[f64],
) -> Result<Vec<CorrelationPoint>> {
    check_grid(rhos)?;
    rhos.par_iter()
        .map(|&rho| {
            let s = gen_beta_binomial_setting(profiles, initial, refined, delta, rho)?;
            let last = s.n_actions() - 1;
            let r = brute_force_optimal(&s, Target::Action(last))?;
            let free = comi_supremum(&s, Target::Action(last))?;
            Ok(CorrelationPoint {
                rho,
                total_cost: r.total_cost + s.surcharge(),
                free_inspection_cost: free.total_cost + s.surcharge(),
                inspected: r.inspected(),
            })
        })
        .collect()
}
