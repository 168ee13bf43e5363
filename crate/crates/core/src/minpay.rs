//! Cheapest contract for a fixed inspection policy and target action.
//!
//! For fixed `p` the problem is linear in the payments: minimise `f_i · v`
//! over the combined outcome space subject to the agent's incentive
//! constraints `(f_{i'} - f_i) · v ≤ c_{i'} - c_i` and `v ≥ 0`. The
//! randomized-inspection variants add linear rows on the signals that are
//! inspected with probability strictly between 0 and 1; on signals with
//! `p_k ∈ {0, 1}` their constraints only touch payments that no action ever
//! reaches, so those payments are filled in after the solve.

use serde::{Deserialize, Serialize};

use crate::combined::{combined_distribution, Atom, CombinedDistribution};
use crate::lp::{solve_lp, LpProblem, LpSolution, LpStatus};
use crate::{Contract, ContractError, Result, Setting};

/// Coefficients below this are treated as structural zeros.
const COEF_EPS: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Committed inspection, no extra constraints.
    Plain,
    /// Committed, inspection can only lower pay: `t_{k,j} ≤ s_k`.
    Coni,
    /// Uncommitted: the principal must be indifferent on mixed signals,
    /// `s_k = d_k + Σ_j q^k_{i,j} t_{k,j}`.
    Umi,
    /// Both of the above.
    Uni,
}

impl Variant {
    fn negative(self) -> bool {
        matches!(self, Variant::Coni | Variant::Uni)
    }

    fn uncommitted(self) -> bool {
        matches!(self, Variant::Umi | Variant::Uni)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SignalClass {
    ForcedZero,
    Interior,
    ForcedOne,
}

impl SignalClass {
    pub fn of(p: f64) -> Self {
        if p <= 0.0 {
            SignalClass::ForcedZero
        } else if p >= 1.0 {
            SignalClass::ForcedOne
        } else {
            SignalClass::Interior
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantConstraints {
    pub variant: Variant,
    pub classes: Vec<SignalClass>,
}

impl VariantConstraints {
    pub fn new(variant: Variant, p: &[f64]) -> Self {
        Self {
            variant,
            classes: p.iter().map(|&x| SignalClass::of(x)).collect(),
        }
    }

    pub fn plain(p: &[f64]) -> Self {
        Self::new(Variant::Plain, p)
    }

    fn check(&self, p: &[f64]) -> Result<()> {
        if self.classes.len() != p.len() {
            return Err(ContractError::Dimension(
                "signal classification does not match the policy".into(),
            ));
        }
        if self
            .classes
            .iter()
            .zip(p)
            .any(|(c, &x)| *c != SignalClass::of(x))
        {
            return Err(ContractError::InvalidParameter(
                "signal classification inconsistent with the policy".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinPay {
    pub contract: Contract,
    pub target: usize,
    /// `T_i` for the target.
    pub payment: f64,
    /// `D_i` for the target.
    pub inspection_cost: f64,
}

impl MinPay {
    pub fn total(&self) -> f64 {
        self.payment + self.inspection_cost
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinPayOptions {
    /// Fix payments on atoms the target never reaches to zero. Turning this
    /// off is only useful for testing that the clamp is harmless.
    pub clamp: bool,
    /// Pairs of atoms whose payments must be equal.
    pub linked: Vec<(Atom, Atom)>,
    /// Among cost-minimal payments, pick one with the smallest sum of face
    /// values. The optimum is often degenerate; this makes reports sparse
    /// and reproducible at the price of a second LP.
    pub tidy: bool,
}

impl Default for MinPayOptions {
    fn default() -> Self {
        Self {
            clamp: true,
            linked: Vec::new(),
            tidy: true,
        }
    }
}

/// The assembled LP together with the map back to atoms.
pub(crate) struct MinPayLp {
    pub combined: CombinedDistribution,
    /// LP column for each atom, `None` when the atom is fixed to zero.
    pub column: Vec<Option<usize>>,
    /// Rival action behind each IC row (rows that were dropped are absent).
    pub ic_rows: Vec<usize>,
    pub problem: LpProblem,
    /// Set when a constraint with no free coefficients is already violated.
    pub trivially_infeasible: bool,
}

pub(crate) fn build_minpay_lp(
    setting: &Setting,
    p: &[f64],
    target: usize,
    vc: &VariantConstraints,
    options: &MinPayOptions,
) -> Result<MinPayLp> {
    setting.check_action(target)?;
    vc.check(p)?;
    let combined = combined_distribution(setting, p)?;
    let atoms = combined.layout.atoms().to_vec();
    let reach = &combined.f[target];

    // Atoms that carry an indifference equality keep their column even when
    // the target cannot reach them.
    let mut in_equality = vec![false; atoms.len()];
    if vc.variant.uncommitted() {
        for (k, class) in vc.classes.iter().enumerate() {
            if *class != SignalClass::Interior {
                continue;
            }
            in_equality[combined.layout.signal_index(k)] = true;
            for j in 0..setting.n_outcomes(k) {
                if setting.qk(k, target, j) > COEF_EPS {
                    in_equality[combined.layout.outcome_index(k, j)] = true;
                }
            }
        }
    }

    let mut column = vec![None; atoms.len()];
    let mut num_vars = 0;
    for (w, slot) in column.iter_mut().enumerate() {
        let payoff_relevant = combined.f.iter().any(|row| row[w] > COEF_EPS);
        let keep = if options.clamp {
            reach[w] > COEF_EPS || in_equality[w]
        } else {
            payoff_relevant || in_equality[w]
        };
        if keep {
            *slot = Some(num_vars);
            num_vars += 1;
        }
    }

    let mut objective = vec![0.0; num_vars];
    for (w, col) in column.iter().enumerate() {
        if let Some(c) = col {
            objective[*c] = reach[w];
        }
    }
    let mut problem = LpProblem::new(num_vars).minimize(objective);
    let mut trivially_infeasible = false;
    let mut ic_rows = Vec::new();
    let costs = setting.costs();

    for rival in 0..setting.n_actions() {
        if rival == target {
            continue;
        }
        let mut row = vec![0.0; num_vars];
        for (w, col) in column.iter().enumerate() {
            if let Some(c) = col {
                row[*c] = combined.f[rival][w] - reach[w];
            }
        }
        let rhs = costs[rival] - costs[target];
        if row.iter().all(|v| v.abs() <= COEF_EPS) {
            if rhs < -1e-9 {
                trivially_infeasible = true;
            }
            continue;
        }
        problem.add_le(row, rhs);
        ic_rows.push(rival);
    }

    for (k, class) in vc.classes.iter().enumerate() {
        if *class != SignalClass::Interior {
            continue;
        }
        let s_col = column[combined.layout.signal_index(k)];
        if vc.variant.negative() {
            for j in 0..setting.n_outcomes(k) {
                if let Some(t_col) = column[combined.layout.outcome_index(k, j)] {
                    let mut row = vec![0.0; num_vars];
                    row[t_col] = 1.0;
                    if let Some(s_col) = s_col {
                        row[s_col] -= 1.0;
                    }
                    problem.add_le(row, 0.0);
                }
            }
        }
        if vc.variant.uncommitted() {
            let mut row = vec![0.0; num_vars];
            if let Some(s_col) = s_col {
                row[s_col] = 1.0;
            }
            for j in 0..setting.n_outcomes(k) {
                if let Some(t_col) = column[combined.layout.outcome_index(k, j)] {
                    row[t_col] -= setting.qk(k, target, j);
                }
            }
            let d = setting.inspection_costs()[k];
            if row.iter().all(|v| v.abs() <= COEF_EPS) {
                if d.abs() > 1e-12 {
                    trivially_infeasible = true;
                }
                continue;
            }
            problem.add_eq(row, d);
        }
    }

    for (a, b) in &options.linked {
        let ca = column[combined.layout.index_of(*a)];
        let cb = column[combined.layout.index_of(*b)];
        let mut row = vec![0.0; num_vars];
        if let Some(c) = ca {
            row[c] += 1.0;
        }
        if let Some(c) = cb {
            row[c] -= 1.0;
        }
        if row.iter().any(|v: &f64| v.abs() > COEF_EPS) {
            problem.add_eq(row, 0.0);
        }
    }

    Ok(MinPayLp {
        combined,
        column,
        ic_rows,
        problem,
        trivially_infeasible,
    })
}

pub(crate) fn solve_built(lp: &MinPayLp) -> Result<Option<LpSolution>> {
    if lp.trivially_infeasible {
        return Ok(None);
    }
    let sol = solve_lp(&lp.problem)?;
    match sol.status {
        LpStatus::Optimal => Ok(Some(sol)),
        LpStatus::Infeasible => Ok(None),
        // Nonnegative objective over v ≥ 0: only reachable through numerical
        // trouble, so surface it as a solver failure.
        LpStatus::Unbounded => Err(ContractError::Lp(crate::lp::LpError::NumericalFailure {
            iterations: sol.iterations,
        })),
    }
}

/// Cheapest payments incentivizing `target` under the fixed policy `p`, or
/// `None` when no payments do.
pub fn minpay_fixed_policy(
    setting: &Setting,
    p: &[f64],
    target: usize,
    vc: &VariantConstraints,
) -> Result<Option<MinPay>> {
    minpay_with_options(setting, p, target, vc, &MinPayOptions::default())
}

pub fn minpay_with_options(
    setting: &Setting,
    p: &[f64],
    target: usize,
    vc: &VariantConstraints,
    options: &MinPayOptions,
) -> Result<Option<MinPay>> {
    let lp = build_minpay_lp(setting, p, target, vc, options)?;
    let Some(mut sol) = solve_built(&lp)? else {
        return Ok(None);
    };
    if options.tidy && lp.problem.num_vars() > 1 {
        let opt = sol.objective;
        sol = tidy(&lp.problem, sol)?;
        // The budget slack can leave a vertex that mixes a real payment with
        // dust on a second atom. Drop support columns, smallest contribution
        // first, whenever the optimum survives without them.
        let accept = opt + 1e-9 * (1.0 + opt.abs());
        let weight = |sol: &LpSolution, c: usize| lp.problem.objective[c] * sol.x[c];
        let mut restricted = lp.problem.clone();
        // Each accepted drop zeroes a column for good, so this terminates.
        'prune: loop {
            let mut order: Vec<usize> = (0..sol.x.len()).filter(|&c| sol.x[c] > 0.0).collect();
            if order.len() <= 1 {
                break;
            }
            order.sort_by(|&a, &b| weight(&sol, a).total_cmp(&weight(&sol, b)));
            for c in order {
                let mut trial = restricted.clone();
                let mut row = vec![0.0; trial.num_vars()];
                row[c] = 1.0;
                trial.add_le(row, 0.0);
                let value = solve_lp(&trial)?;
                if value.is_optimal() && value.objective <= accept {
                    sol = tidy(&trial, value)?;
                    restricted = trial;
                    continue 'prune;
                }
            }
            break;
        }
    }
    let v: Vec<f64> = lp
        .column
        .iter()
        .map(|col| col.map_or(0.0, |c| sol.x[c].max(0.0)))
        .collect();
    let mut contract = lp.combined.layout.to_contract(p, &v);
    fill_irrelevant(setting, &mut contract, target, vc);
    Ok(Some(MinPay {
        payment: setting.payment_unchecked(&contract, target),
        inspection_cost: setting.inspection_unchecked(p, target),
        contract,
        target,
    }))
}

/// Among (near-)optimal points of `problem`, the one with the least total
/// payment; keeps `sol` if the second stage fails numerically.
fn tidy(problem: &LpProblem, sol: LpSolution) -> Result<LpSolution> {
    let mut second = problem.clone();
    let budget = sol.objective + 1e-11 * (1.0 + sol.objective.abs());
    second.add_le(problem.objective.clone(), budget);
    second.objective = vec![1.0; second.num_vars()];
    let tidy = solve_lp(&second)?;
    Ok(if tidy.is_optimal() { tidy } else { sol })
}

/// `T_i + D_i` of the cheapest contract, `+∞` when `target` cannot be
/// incentivized under `p`.
pub fn minpay_total_cost(
    setting: &Setting,
    p: &[f64],
    target: usize,
    vc: &VariantConstraints,
) -> Result<f64> {
    let options = MinPayOptions {
        tidy: false,
        ..MinPayOptions::default()
    };
    Ok(minpay_with_options(setting, p, target, vc, &options)?.map_or(f64::INFINITY, |m| m.total()))
}

/// Sets the payments that no action ever reaches so that the variant's
/// constraints hold on the signals with `p_k ∈ {0, 1}`.
fn fill_irrelevant(setting: &Setting, ct: &mut Contract, target: usize, vc: &VariantConstraints) {
    let d = setting.inspection_costs();
    for (k, class) in vc.classes.iter().enumerate() {
        match (class, vc.variant) {
            (SignalClass::Interior, _) => {}
            (SignalClass::ForcedZero, Variant::Plain) => ct.t[k].fill(0.0),
            (SignalClass::ForcedZero, _) => {
                let s = ct.s[k];
                ct.t[k].fill(s);
            }
            (SignalClass::ForcedOne, Variant::Plain) => ct.s[k] = 0.0,
            (SignalClass::ForcedOne, Variant::Coni) => ct.s[k] = max_of(&ct.t[k]),
            (SignalClass::ForcedOne, Variant::Umi) => {
                ct.s[k] = d[k] + expected_row(setting, k, target, &ct.t[k]);
            }
            (SignalClass::ForcedOne, Variant::Uni) => ct.s[k] = d[k] + max_of(&ct.t[k]),
        }
    }
}

fn max_of(row: &[f64]) -> f64 {
    row.iter().copied().fold(0.0, f64::max)
}

fn expected_row(setting: &Setting, k: usize, i: usize, t: &[f64]) -> f64 {
    t.iter()
        .enumerate()
        .map(|(j, v)| setting.qk(k, i, j) * v)
        .sum()
}

/// Lists every violated variant constraint of `ct` for target `i`, using
/// the classification implied by `ct.p`.
pub fn variant_violations(
    setting: &Setting,
    ct: &Contract,
    target: usize,
    variant: Variant,
    tol: f64,
) -> Vec<String> {
    let mut out = Vec::new();
    let d = setting.inspection_costs();
    for k in 0..ct.p.len() {
        let class = SignalClass::of(ct.p[k]);
        if variant.negative() {
            for (j, &t) in ct.t[k].iter().enumerate() {
                if t > ct.s[k] + tol {
                    out.push(format!("t[{k}][{j}] = {t} exceeds s[{k}] = {}", ct.s[k]));
                }
            }
        }
        if variant.uncommitted() {
            let rhs = d[k] + expected_row(setting, k, target, &ct.t[k]);
            let s = ct.s[k];
            if class != SignalClass::ForcedOne && s > rhs + tol {
                out.push(format!("signal {k}: s = {s} above d + E[t] = {rhs}"));
            }
            if class != SignalClass::ForcedZero && s < rhs - tol {
                out.push(format!("signal {k}: s = {s} below d + E[t] = {rhs}"));
            }
        }
    }
    out
}
