//! Optimal contracts with 0/1 inspection policies.
//!
//! Every algorithm here reduces to "enumerate a family of inspection sets,
//! solve the fixed-policy LP for each, keep the cheapest". They differ only
//! in the family:
//!
//! * [`brute_force_optimal`]: all `2^ℓ` subsets.
//! * [`solve_constant_actions`]: subsets of size at most `n - 1`, which is
//!   enough because an optimal contract never needs more inspected signals
//!   than there are rival actions.
//! * [`solve_isop`]: the empty set and the singletons, enough under MLRP and
//!   signal/outcome independence.

use rayon::prelude::*;
use serde::Serialize;

use crate::minpay::{
    build_minpay_lp, minpay_total_cost, minpay_with_options, solve_built, MinPay, MinPayOptions,
    Variant, VariantConstraints,
};
use crate::model::{check_isop, check_mlrp};
use crate::{Contract, ContractError, Result, Setting};

/// Enumeration beyond this many signals is refused.
pub const BRUTE_FORCE_SIGNAL_LIMIT: usize = 20;

/// Strict-improvement threshold used by every enumeration.
pub(crate) const IMPROVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Action(usize),
    /// Whichever action maximizes `R_i - (T_i + D_i)`.
    Best,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    BruteForce,
    ConstantActions,
    Isop,
    CommittedSupremum,
    GridSearch,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EnumerationStats {
    pub policies: usize,
    pub lp_solves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub variant: Variant,
    pub algorithm: Algorithm,
    pub target: usize,
    pub contract: Contract,
    pub payment: f64,
    pub inspection_cost: f64,
    pub total_cost: f64,
    pub reward: f64,
    pub utility: f64,
    /// Cheapest total cost per action under the enumerated family; `None`
    /// where the action cannot be incentivized.
    pub per_action_cost: Vec<Option<f64>>,
    pub stats: EnumerationStats,
    pub warnings: Vec<String>,
    /// Grid resolution reached by a search, when one was used.
    pub resolution: Option<f64>,
}

impl SolveReport {
    /// Indices of inspected signals.
    pub fn inspected(&self) -> Vec<usize> {
        self.contract.inspected()
    }
}

/// All subsets of `0..ell` with at most `max_size` elements, ordered by size
/// and then lexicographically.
pub fn subsets_by_size(ell: usize, max_size: usize) -> Vec<Vec<usize>> {
    fn extend(
        start: usize,
        ell: usize,
        size: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for k in start..ell {
            if ell - k < size - cur.len() {
                break;
            }
            cur.push(k);
            extend(k + 1, ell, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for size in 0..=max_size.min(ell) {
        extend(0, ell, size, &mut Vec::new(), &mut out);
    }
    out
}

pub(crate) fn indicator(ell: usize, set: &[usize]) -> Vec<f64> {
    let mut p = vec![0.0; ell];
    for &k in set {
        p[k] = 1.0;
    }
    p
}

fn targets_of(setting: &Setting, target: Target) -> Result<Vec<usize>> {
    match target {
        Target::Action(i) => {
            setting.check_action(i)?;
            Ok(vec![i])
        }
        Target::Best => Ok((0..setting.n_actions()).collect()),
    }
}

/// Cheapest policy per target over `policies` (first strictly cheaper
/// policy wins), then the best target. Costs are computed in parallel and
/// reduced in enumeration order, so the result does not depend on
/// scheduling.
pub(crate) fn optimize_over_policies(
    setting: &Setting,
    policies: &[Vec<f64>],
    target: Target,
    variant: Variant,
    algorithm: Algorithm,
) -> Result<SolveReport> {
    setting.ensure_valid()?;
    let targets = targets_of(setting, target)?;
    let n = setting.n_actions();
    let jobs: Vec<(usize, usize)> = (0..policies.len())
        .flat_map(|pi| targets.iter().map(move |&i| (pi, i)))
        .collect();
    let costs: Vec<f64> = jobs
        .par_iter()
        .map(|&(pi, i)| {
            let p = &policies[pi];
            minpay_total_cost(setting, p, i, &VariantConstraints::new(variant, p))
        })
        .collect::<Result<_>>()?;

    let mut best_policy: Vec<Option<(usize, f64)>> = vec![None; n];
    for (&(pi, i), &cost) in jobs.iter().zip(&costs) {
        if !cost.is_finite() {
            continue;
        }
        match best_policy[i] {
            Some((_, c)) if cost >= c - IMPROVE_TOL => {}
            _ => best_policy[i] = Some((pi, cost)),
        }
    }

    let chosen = pick_target(setting, &targets, &best_policy)?;
    let (pi, _) = best_policy[chosen].expect("chosen target is feasible");
    let p = &policies[pi];
    let minpay = minpay_with_options(
        setting,
        p,
        chosen,
        &VariantConstraints::new(variant, p),
        &MinPayOptions::default(),
    )?
    .ok_or(ContractError::Infeasible(chosen))?;
    let stats = EnumerationStats {
        policies: policies.len(),
        lp_solves: jobs.len() + 1,
    };
    let per_action = best_policy.iter().map(|b| b.map(|(_, c)| c)).collect();
    Ok(build_report(
        setting, variant, algorithm, minpay, per_action, stats,
    ))
}

pub(crate) fn pick_target(
    setting: &Setting,
    targets: &[usize],
    best: &[Option<(usize, f64)>],
) -> Result<usize> {
    let mut chosen: Option<(usize, f64)> = None;
    for &i in targets {
        let Some((_, cost)) = best[i] else { continue };
        let value = setting.expected_reward(i)? - cost;
        match chosen {
            Some((_, v)) if value <= v + IMPROVE_TOL => {}
            _ => chosen = Some((i, value)),
        }
    }
    match chosen {
        Some((i, _)) => Ok(i),
        None => Err(ContractError::Infeasible(targets[0])),
    }
}

pub(crate) fn build_report(
    setting: &Setting,
    variant: Variant,
    algorithm: Algorithm,
    minpay: MinPay,
    per_action_cost: Vec<Option<f64>>,
    stats: EnumerationStats,
) -> SolveReport {
    let i = minpay.target;
    let reward = setting.expected_reward(i).unwrap_or(0.0);
    let total = minpay.total();
    let mut warnings = Vec::new();
    if let Ok(br) = setting.best_response(&minpay.contract) {
        if br != i {
            warnings.push(format!(
                "agent is indifferent between action {i} and action {br}, which the principal prefers"
            ));
        }
    }
    SolveReport {
        variant,
        algorithm,
        target: i,
        payment: minpay.payment,
        inspection_cost: minpay.inspection_cost,
        total_cost: total,
        reward,
        utility: reward - total,
        contract: minpay.contract,
        per_action_cost,
        stats,
        warnings,
        resolution: None,
    }
}

/// Exhaustive search over all deterministic policies.
pub fn brute_force_optimal(setting: &Setting, target: Target) -> Result<SolveReport> {
    let ell = setting.n_signals();
    if ell > BRUTE_FORCE_SIGNAL_LIMIT {
        return Err(ContractError::EnumerationTooLarge {
            signals: ell,
            limit: BRUTE_FORCE_SIGNAL_LIMIT,
        });
    }
    let policies: Vec<Vec<f64>> = subsets_by_size(ell, ell)
        .iter()
        .map(|set| indicator(ell, set))
        .collect();
    optimize_over_policies(
        setting,
        &policies,
        target,
        Variant::Plain,
        Algorithm::BruteForce,
    )
}

/// Optimal deterministic contract enumerating only inspection sets with at
/// most `n - 1` signals.
pub fn solve_constant_actions(setting: &Setting, target: Target) -> Result<SolveReport> {
    let ell = setting.n_signals();
    let max_size = setting.n_actions().saturating_sub(1);
    let policies: Vec<Vec<f64>> = subsets_by_size(ell, max_size)
        .iter()
        .map(|set| indicator(ell, set))
        .collect();
    optimize_over_policies(
        setting,
        &policies,
        target,
        Variant::Plain,
        Algorithm::ConstantActions,
    )
}

fn ensure_isop_mlrp(setting: &Setting) -> Result<()> {
    setting.ensure_valid()?;
    if !check_isop(setting) {
        return Err(ContractError::PreconditionViolated(
            "outcome distributions differ across signals".into(),
        ));
    }
    if !check_mlrp(setting.signal_dist()) || !check_mlrp(setting.outcome_dist(0)) {
        return Err(ContractError::PreconditionViolated(
            "distributions violate the monotone likelihood ratio property".into(),
        ));
    }
    Ok(())
}

/// Optimal contract for the last action when signals and outcomes are
/// independent and both satisfy MLRP: inspecting at most one signal is
/// enough.
pub fn solve_isop(setting: &Setting) -> Result<SolveReport> {
    ensure_isop_mlrp(setting)?;
    let ell = setting.n_signals();
    let last = setting.n_actions() - 1;
    let policies: Vec<Vec<f64>> = subsets_by_size(ell, 1)
        .iter()
        .map(|set| indicator(ell, set))
        .collect();
    let mut report = optimize_over_policies(
        setting,
        &policies,
        Target::Action(last),
        Variant::Plain,
        Algorithm::Isop,
    )?;
    let costs = setting.costs();
    if costs[..last].iter().any(|&c| c > costs[last]) {
        report.warnings.push(format!(
            "targeted action {last} does not have the highest cost"
        ));
    }
    Ok(report)
}

/// Drops inspection of signals whose outcome payments are all zero. Expected
/// transfers are unchanged for every action and inspection costs can only
/// fall.
pub fn prune_unpaid_inspections(setting: &Setting, ct: &Contract) -> Result<Contract> {
    setting.check_contract(ct)?;
    if !ct.is_deterministic() {
        return Err(ContractError::PreconditionViolated(
            "pruning needs a deterministic inspection policy".into(),
        ));
    }
    let mut out = ct.clone();
    for k in 0..out.p.len() {
        if out.p[k] == 1.0 && out.t[k].iter().all(|&t| t == 0.0) {
            out.s[k] *= 1.0 - out.p[k];
            out.p[k] = 0.0;
        }
    }
    Ok(out)
}

/// Dual certificate for the structure of the fixed-policy LP under ISOP and
/// MLRP: the only atoms whose dual constraints may bind are the highest
/// uninspected signal and the highest outcome of the highest inspected
/// signal (other atoms may bind only when exactly tied with these).
pub fn isop_dual_check(setting: &Setting, p: &[f64]) -> Result<bool> {
    ensure_isop_mlrp(setting)?;
    setting.check_policy(p)?;
    if p.iter().any(|&x| x != 0.0 && x != 1.0) {
        return Err(ContractError::PreconditionViolated(
            "dual check needs a deterministic policy".into(),
        ));
    }
    let target = setting.n_actions() - 1;
    let vc = VariantConstraints::plain(p);
    let lp = build_minpay_lp(setting, p, target, &vc, &MinPayOptions::default())?;
    let sol = solve_built(&lp)?.ok_or(ContractError::Infeasible(target))?;
    let f = &lp.combined.f;
    let reach = &f[target];
    let atoms = lp.combined.layout.atoms();

    const BIND_TOL: f64 = 1e-7;
    let support: Vec<(usize, f64)> = lp
        .ic_rows
        .iter()
        .zip(&sol.ineq_duals)
        .filter(|(_, &l)| l > BIND_TOL)
        .map(|(&r, &l)| (r, l))
        .collect();
    let coeffs = |w: usize| -> Vec<f64> {
        support
            .iter()
            .map(|&(r, _)| 1.0 - f[r][w] / reach[w])
            .collect()
    };

    let reachable: Vec<usize> = (0..atoms.len()).filter(|&w| reach[w] > 0.0).collect();
    let is_signal = |w: usize| matches!(atoms[w], crate::combined::Atom::Signal(_));
    let designated_signal = reachable.iter().copied().filter(|&w| is_signal(w)).max();
    let designated_outcome = reachable.iter().copied().filter(|&w| !is_signal(w)).max();

    for &w in &reachable {
        let lhs: f64 = support
            .iter()
            .map(|&(r, l)| l * (1.0 - f[r][w] / reach[w]))
            .sum();
        if lhs < 1.0 - BIND_TOL {
            continue;
        }
        let designated = if is_signal(w) {
            designated_signal
        } else {
            designated_outcome
        };
        let Some(d) = designated else {
            return Ok(false);
        };
        if d == w {
            continue;
        }
        let tied = coeffs(w)
            .iter()
            .zip(coeffs(d))
            .all(|(a, b)| (a - b).abs() <= BIND_TOL);
        if !tied {
            return Ok(false);
        }
    }
    Ok(true)
}
