//! Randomized inspection.
//!
//! With committed mixed inspection the principal can always shave a little
//! more inspection cost by lowering a probability and scaling the matching
//! payments up, so an optimum need not exist; we only compute its supremum
//! ([`comi_supremum`]) and the scaling step itself ([`comi_scale_down`]).
//! The constrained variants (`t ≤ s`, principal indifference, or both) do
//! have optima; [`search_randomized`] finds them by enumerating which
//! signals are never/sometimes/always inspected and grid-searching the
//! mixed probabilities.

use rayon::prelude::*;
use serde::Serialize;

use crate::deterministic::{
    build_report, indicator, pick_target, Algorithm, EnumerationStats, SolveReport, Target,
    IMPROVE_TOL,
};
use crate::minpay::{
    minpay_fixed_policy, minpay_total_cost, SignalClass, Variant, VariantConstraints,
};
use crate::{Contract, ContractError, Result, Setting, MONEY_TOL};

/// Search over mixed policies is refused beyond this many signals.
pub const SEARCH_SIGNAL_LIMIT: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComiSupremum {
    pub target: usize,
    /// Infimum of `T_i + D_i`; no inspection cost is ever charged in the limit.
    pub total_cost: f64,
    pub utility: f64,
    /// Whether some committed contract reaches the supremum.
    pub attained: bool,
    /// Free-inspection contract reaching the infimum (always inspects).
    pub contract: Contract,
    pub per_action_cost: Vec<Option<f64>>,
}

/// Supremum of the principal's utility under committed mixed inspection:
/// the optimum of the same setting with free, always-on inspection.
pub fn comi_supremum(setting: &Setting, target: Target) -> Result<ComiSupremum> {
    setting.ensure_valid()?;
    let ell = setting.n_signals();
    let free = setting.clone().map_inspection_costs(|_, _| 0.0);
    let always = vec![1.0; ell];
    let targets: Vec<usize> = match target {
        Target::Action(i) => {
            setting.check_action(i)?;
            vec![i]
        }
        Target::Best => (0..setting.n_actions()).collect(),
    };
    let mut best: Vec<Option<(usize, f64)>> = vec![None; setting.n_actions()];
    for &i in &targets {
        let cost = minpay_total_cost(&free, &always, i, &VariantConstraints::plain(&always))?;
        if cost.is_finite() {
            best[i] = Some((0, cost));
        }
    }
    let i = pick_target(setting, &targets, &best)?;
    let total_cost = best[i].map(|(_, c)| c).expect("feasible");
    let contract = minpay_fixed_policy(&free, &always, i, &VariantConstraints::plain(&always))?
        .ok_or(ContractError::Infeasible(i))?
        .contract;

    // Attained iff inspecting only the signals that cost nothing to inspect
    // under action i already achieves the free-inspection price.
    let d = setting.inspection_costs();
    let cheap: Vec<usize> = (0..ell)
        .filter(|&k| setting.q0(i, k) * d[k] == 0.0)
        .collect();
    let p = indicator(ell, &cheap);
    let achieved = minpay_total_cost(setting, &p, i, &VariantConstraints::plain(&p))?;
    let attained = achieved <= total_cost + MONEY_TOL * (1.0 + total_cost.abs());

    Ok(ComiSupremum {
        target: i,
        total_cost,
        utility: setting.expected_reward(i)? - total_cost,
        attained,
        contract,
        per_action_cost: best.iter().map(|b| b.map(|(_, c)| c)).collect(),
    })
}

/// Lowers the inspection probability of signal `k` to `p_new` and rescales
/// its payments so that every action's expected transfer is unchanged.
pub fn comi_scale_down(ct: &Contract, k: usize, p_new: f64) -> Result<Contract> {
    let p_old = *ct.p.get(k).ok_or(ContractError::SignalOutOfRange {
        index: k,
        count: ct.p.len(),
    })?;
    if !(p_new > 0.0 && p_new < p_old) {
        return Err(ContractError::InvalidParameter(format!(
            "scaled probability must lie in (0, {p_old}), got {p_new}"
        )));
    }
    let mut out = ct.clone();
    out.p[k] = p_new;
    out.s[k] = ct.s[k] * (1.0 - p_old) / (1.0 - p_new);
    for t in out.t[k].iter_mut() {
        *t *= p_old / p_new;
    }
    Ok(out)
}

fn incentivizes(setting: &Setting, ct: &Contract, i: usize) -> Result<bool> {
    let ui = setting.agent_utility(ct, i)?;
    for r in 0..setting.n_actions() {
        if setting.agent_utility(ct, r)? > ui + MONEY_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Rewrites a deterministic contract so that it also satisfies the
/// uncommitted/negative constraints, without changing any expected transfer.
pub fn det_to_uni(setting: &Setting, ct: &Contract, i: usize) -> Result<Contract> {
    setting.check_action(i)?;
    setting.check_contract(ct)?;
    if !ct.is_deterministic() {
        return Err(ContractError::PreconditionViolated(
            "contract must inspect each signal with probability 0 or 1".into(),
        ));
    }
    if !incentivizes(setting, ct, i)? {
        return Err(ContractError::PreconditionViolated(format!(
            "contract does not incentivize action {i}"
        )));
    }
    let d = setting.inspection_costs();
    let mut out = ct.clone();
    for k in 0..out.p.len() {
        if out.p[k] == 0.0 {
            let s = out.s[k];
            out.t[k].fill(s);
        } else {
            out.s[k] = d[k] + out.t[k].iter().copied().fold(0.0, f64::max);
        }
    }
    Ok(out)
}

/// Simulates `(p, s, t)` with inspection always on: the outcome payment
/// becomes the expected pay of the original lottery.
pub fn to_always_inspect(setting: &Setting, ct: &Contract) -> Result<Contract> {
    setting.check_contract(ct)?;
    let t =
        ct.t.iter()
            .enumerate()
            .map(|(k, row)| {
                row.iter()
                    .map(|&t| (1.0 - ct.p[k]) * ct.s[k] + ct.p[k] * t)
                    .collect()
            })
            .collect();
    Ok(Contract {
        p: vec![1.0; ct.p.len()],
        s: ct.s.clone(),
        t,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    /// Spacing of the first grid on `(0, 1)`.
    pub initial_step: f64,
    /// Number of refinement rounds around the incumbent.
    pub refinements: usize,
    /// Step shrink factor per round.
    pub shrink: f64,
    /// Half-width of each refinement window, in steps.
    pub window: usize,
    /// Cap on initial tensor-grid points per support pattern; the step is
    /// coarsened until the grid fits.
    pub max_initial_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            initial_step: 0.05,
            refinements: 3,
            shrink: 10.0,
            window: 10,
            max_initial_points: 20_000,
        }
    }
}

impl GridConfig {
    pub fn resolution(&self) -> f64 {
        self.initial_step / self.shrink.powi(self.refinements as i32)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.initial_step > 0.0
            && self.initial_step < 1.0
            && self.shrink > 1.0
            && self.window > 0
            && self.max_initial_points > 0;
        if !ok {
            return Err(ContractError::InvalidParameter(
                "invalid grid configuration".into(),
            ));
        }
        Ok(())
    }
}

/// Support patterns ordered by number of mixed signals, then number of
/// always-inspected signals, then lexicographically.
fn support_patterns(ell: usize) -> Vec<Vec<SignalClass>> {
    let classes = [
        SignalClass::ForcedZero,
        SignalClass::Interior,
        SignalClass::ForcedOne,
    ];
    let mut all: Vec<Vec<SignalClass>> = vec![Vec::new()];
    for _ in 0..ell {
        all = all
            .into_iter()
            .flat_map(|prefix| {
                classes.iter().map(move |c| {
                    let mut v = prefix.clone();
                    v.push(*c);
                    v
                })
            })
            .collect();
    }
    let count = |v: &[SignalClass], c: SignalClass| v.iter().filter(|&&x| x == c).count();
    all.sort_by_key(|v| {
        (
            count(v, SignalClass::Interior),
            count(v, SignalClass::ForcedOne),
        )
    });
    all
}

struct PatternSearch<'a> {
    setting: &'a Setting,
    target: usize,
    variant: Variant,
    base: Vec<f64>,
    interior: Vec<usize>,
    lp_solves: usize,
}

impl PatternSearch<'_> {
    fn policy(&self, coords: &[f64]) -> Vec<f64> {
        let mut p = self.base.clone();
        for (&k, &x) in self.interior.iter().zip(coords) {
            p[k] = x;
        }
        p
    }

    /// Evaluates candidate coordinate vectors in parallel and returns the
    /// first one (in input order) that is strictly cheapest.
    fn best_of(&mut self, candidates: &[Vec<f64>]) -> Result<Option<(Vec<f64>, f64)>> {
        self.lp_solves += candidates.len();
        let costs: Vec<f64> = candidates
            .par_iter()
            .map(|c| {
                let p = self.policy(c);
                minpay_total_cost(
                    self.setting,
                    &p,
                    self.target,
                    &VariantConstraints::new(self.variant, &p),
                )
            })
            .collect::<Result<_>>()?;
        let mut best: Option<(usize, f64)> = None;
        for (idx, &c) in costs.iter().enumerate() {
            if !c.is_finite() {
                continue;
            }
            match best {
                Some((_, b)) if c >= b - IMPROVE_TOL => {}
                _ => best = Some((idx, c)),
            }
        }
        Ok(best.map(|(idx, c)| (candidates[idx].clone(), c)))
    }

    fn run(&mut self, grid: &GridConfig) -> Result<Option<(Vec<f64>, f64)>> {
        let dim = self.interior.len();
        if dim == 0 {
            return self.best_of(&[Vec::new()]);
        }
        let mut step = grid.initial_step;
        while axis(step).len().pow(dim as u32) > grid.max_initial_points {
            step *= 2.0;
        }
        let points = axis(step);
        let mut candidates = vec![Vec::new()];
        for _ in 0..dim {
            candidates = candidates
                .into_iter()
                .flat_map(|prefix: Vec<f64>| {
                    points.iter().map(move |&x| {
                        let mut v = prefix.clone();
                        v.push(x);
                        v
                    })
                })
                .collect();
        }
        let Some((mut best, mut best_cost)) = self.best_of(&candidates)? else {
            return Ok(None);
        };

        for _ in 0..grid.refinements {
            step /= grid.shrink;
            // Tensor window when small, otherwise cyclic coordinate sweeps.
            let tensor = (2 * grid.window + 1).pow(dim as u32) <= grid.max_initial_points;
            if tensor {
                let mut cands = vec![Vec::new()];
                for c in 0..dim {
                    let centre = best[c];
                    cands = cands
                        .into_iter()
                        .flat_map(|prefix: Vec<f64>| {
                            window(centre, step, grid.window).into_iter().map(move |x| {
                                let mut v = prefix.clone();
                                v.push(x);
                                v
                            })
                        })
                        .collect();
                }
                if let Some((b, c)) = self.best_of(&cands)? {
                    if c < best_cost - IMPROVE_TOL {
                        best = b;
                        best_cost = c;
                    }
                }
            } else {
                for _sweep in 0..4 {
                    let mut improved = false;
                    for c in 0..dim {
                        let cands: Vec<Vec<f64>> = window(best[c], step, grid.window)
                            .into_iter()
                            .map(|x| {
                                let mut v = best.clone();
                                v[c] = x;
                                v
                            })
                            .collect();
                        if let Some((b, cost)) = self.best_of(&cands)? {
                            if cost < best_cost - IMPROVE_TOL {
                                best = b;
                                best_cost = cost;
                                improved = true;
                            }
                        }
                    }
                    if !improved {
                        break;
                    }
                }
            }
        }
        Ok(Some((best, best_cost)))
    }
}

/// Interior grid `step, 2·step, …` strictly inside `(0, 1)`.
fn axis(step: f64) -> Vec<f64> {
    let count = (1.0 / step).round() as usize;
    (1..count)
        .map(|i| i as f64 * step)
        .filter(|&x| x > 0.0 && x < 1.0)
        .collect()
}

/// `centre ± w·step`, clipped to the open unit interval.
fn window(centre: f64, step: f64, w: usize) -> Vec<f64> {
    (-(w as i64)..=w as i64)
        .map(|o| centre + o as f64 * step)
        .filter(|&x| x > 0.0 && x < 1.0)
        .collect()
}

/// Best contract found for `target` under a constrained randomized variant.
pub fn search_randomized(
    setting: &Setting,
    target: usize,
    variant: Variant,
    grid: &GridConfig,
) -> Result<SolveReport> {
    setting.ensure_valid()?;
    setting.check_action(target)?;
    grid.validate()?;
    if variant == Variant::Plain {
        return Err(ContractError::InvalidParameter(
            "unconstrained mixed inspection has no optimum; use comi_supremum".into(),
        ));
    }
    let ell = setting.n_signals();
    if ell > SEARCH_SIGNAL_LIMIT {
        return Err(ContractError::SearchGuardExceeded {
            signals: ell,
            limit: SEARCH_SIGNAL_LIMIT,
        });
    }

    let patterns = support_patterns(ell);
    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut lp_solves = 0;
    for pattern in &patterns {
        let base: Vec<f64> = pattern
            .iter()
            .map(|c| {
                if *c == SignalClass::ForcedOne {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let interior: Vec<usize> = (0..ell)
            .filter(|&k| pattern[k] == SignalClass::Interior)
            .collect();
        let mut search = PatternSearch {
            setting,
            target,
            variant,
            base,
            interior,
            lp_solves: 0,
        };
        let found = search.run(grid)?;
        lp_solves += search.lp_solves;
        if let Some((coords, cost)) = found {
            let better = incumbent
                .as_ref()
                .is_none_or(|(_, c)| cost < c - IMPROVE_TOL);
            if better {
                incumbent = Some((search.policy(&coords), cost));
            }
        }
    }

    let (p, cost) = incumbent.ok_or(ContractError::Infeasible(target))?;
    let minpay = minpay_fixed_policy(setting, &p, target, &VariantConstraints::new(variant, &p))?
        .ok_or(ContractError::Infeasible(target))?;
    let mut per_action = vec![None; setting.n_actions()];
    per_action[target] = Some(cost);
    let stats = EnumerationStats {
        policies: patterns.len(),
        lp_solves: lp_solves + 1,
    };
    let mut report = build_report(
        setting,
        variant,
        Algorithm::GridSearch,
        minpay,
        per_action,
        stats,
    );
    report.resolution = Some(grid.resolution());
    Ok(report)
}
