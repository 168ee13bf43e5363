//! Adaptive contract settings, contracts and the accounting both players use.
//!
//! A [`Setting`] holds `n` actions with costs `c`, `ℓ` coarse signals drawn
//! from `q0[i]`, and for every signal `k` a refined outcome distribution
//! `qk[k][i]` over `m_k` outcomes that the principal may reveal by paying
//! `d_k`. Rewards live on (signal, outcome) pairs; cells past `m_k` are
//! undefined and stored as `None`.

use serde::{Deserialize, Serialize};

use crate::{ContractError, Result, MONEY_TOL, PROB_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    costs: Vec<f64>,
    inspection_costs: Vec<f64>,
    signal_dist: Vec<Vec<f64>>,
    outcome_dist: Vec<Vec<Vec<f64>>>,
    rewards: Vec<Vec<Option<f64>>>,
    surcharge: f64,
    action_labels: Vec<String>,
    signal_labels: Vec<String>,
}

impl Setting {
    /// Builds a setting after checking that every dimension agrees.
    ///
    /// `outcome_dist[k]` is the `n × m_k` matrix for signal `k` and
    /// `rewards` is `ℓ × max m_k` with `None` past each `m_k`. Probability
    /// values are not checked here; see [`Setting::validate`].
    pub fn new(
        costs: Vec<f64>,
        inspection_costs: Vec<f64>,
        signal_dist: Vec<Vec<f64>>,
        outcome_dist: Vec<Vec<Vec<f64>>>,
        rewards: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        let n = costs.len();
        let ell = inspection_costs.len();
        if n == 0 || ell == 0 {
            return Err(ContractError::Dimension(
                "a setting needs at least one action and one signal".into(),
            ));
        }
        if signal_dist.len() != n || signal_dist.iter().any(|row| row.len() != ell) {
            return Err(ContractError::Dimension(format!("q0 must be {n}x{ell}")));
        }
        if outcome_dist.len() != ell {
            return Err(ContractError::Dimension(format!(
                "expected {ell} outcome matrices, got {}",
                outcome_dist.len()
            )));
        }
        let mut counts = Vec::with_capacity(ell);
        for (k, mat) in outcome_dist.iter().enumerate() {
            if mat.len() != n {
                return Err(ContractError::Dimension(format!(
                    "outcome matrix {k} has {} rows, expected {n}",
                    mat.len()
                )));
            }
            let m = mat[0].len();
            if m == 0 || mat.iter().any(|row| row.len() != m) {
                return Err(ContractError::Dimension(format!(
                    "outcome matrix {k} must be rectangular with at least one column"
                )));
            }
            counts.push(m);
        }
        let m_max = *counts.iter().max().unwrap_or(&0);
        if rewards.len() != ell || rewards.iter().any(|row| row.len() != m_max) {
            return Err(ContractError::Dimension(format!(
                "rewards must be {ell}x{m_max}"
            )));
        }
        Ok(Self {
            action_labels: (1..=n).map(|i| format!("action{i}")).collect(),
            signal_labels: (1..=ell).map(|k| format!("signal{k}")).collect(),
            costs,
            inspection_costs,
            signal_dist,
            outcome_dist,
            rewards,
            surcharge: 0.0,
        })
    }

    /// Same as [`Setting::new`] but with a ragged reward matrix (row `k` of
    /// length `m_k`); the undefined cells are filled in.
    pub fn with_ragged_rewards(
        costs: Vec<f64>,
        inspection_costs: Vec<f64>,
        signal_dist: Vec<Vec<f64>>,
        outcome_dist: Vec<Vec<Vec<f64>>>,
        rewards: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let m_max = outcome_dist
            .iter()
            .map(|mat| mat.first().map_or(0, Vec::len))
            .max()
            .unwrap_or(0);
        let padded = rewards
            .into_iter()
            .map(|row| {
                let mut out: Vec<Option<f64>> = row.into_iter().map(Some).collect();
                out.resize(m_max.max(out.len()), None);
                out
            })
            .collect();
        Self::new(costs, inspection_costs, signal_dist, outcome_dist, padded)
    }

    pub fn with_labels(mut self, actions: Vec<String>, signals: Vec<String>) -> Result<Self> {
        if actions.len() != self.n_actions() || signals.len() != self.n_signals() {
            return Err(ContractError::Dimension("label count mismatch".into()));
        }
        self.action_labels = actions;
        self.signal_labels = signals;
        Ok(self)
    }

    /// Fixed amount added to every reported total pay (e.g. the cost of
    /// running the coarse evaluation itself).
    pub fn with_surcharge(mut self, surcharge: f64) -> Self {
        self.surcharge = surcharge;
        self
    }

    pub fn n_actions(&self) -> usize {
        self.costs.len()
    }

    pub fn n_signals(&self) -> usize {
        self.inspection_costs.len()
    }

    pub fn n_outcomes(&self, k: usize) -> usize {
        self.outcome_dist[k][0].len()
    }

    pub fn outcome_counts(&self) -> Vec<usize> {
        (0..self.n_signals()).map(|k| self.n_outcomes(k)).collect()
    }

    pub fn max_outcomes(&self) -> usize {
        self.outcome_counts().into_iter().max().unwrap_or(0)
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn inspection_costs(&self) -> &[f64] {
        &self.inspection_costs
    }

    pub fn signal_dist(&self) -> &[Vec<f64>] {
        &self.signal_dist
    }

    pub fn outcome_dist(&self, k: usize) -> &[Vec<f64>] {
        &self.outcome_dist[k]
    }

    pub fn outcome_dists(&self) -> &[Vec<Vec<f64>>] {
        &self.outcome_dist
    }

    pub fn rewards(&self) -> &[Vec<Option<f64>>] {
        &self.rewards
    }

    pub fn reward(&self, k: usize, j: usize) -> Option<f64> {
        self.rewards
            .get(k)
            .and_then(|row| row.get(j))
            .copied()
            .flatten()
    }

    pub fn surcharge(&self) -> f64 {
        self.surcharge
    }

    pub fn action_labels(&self) -> &[String] {
        &self.action_labels
    }

    pub fn signal_labels(&self) -> &[String] {
        &self.signal_labels
    }

    pub fn q0(&self, i: usize, k: usize) -> f64 {
        self.signal_dist[i][k]
    }

    pub fn qk(&self, k: usize, i: usize, j: usize) -> f64 {
        self.outcome_dist[k][i][j]
    }

    pub fn map_costs(mut self, f: impl Fn(usize, f64) -> f64) -> Self {
        for (i, c) in self.costs.iter_mut().enumerate() {
            *c = f(i, *c);
        }
        self
    }

    pub fn map_inspection_costs(mut self, f: impl Fn(usize, f64) -> f64) -> Self {
        for (k, d) in self.inspection_costs.iter_mut().enumerate() {
            *d = f(k, *d);
        }
        self
    }

    /// Applies `f(k, j, r)` to every defined reward cell.
    pub fn map_rewards(mut self, f: impl Fn(usize, usize, f64) -> f64) -> Self {
        for (k, row) in self.rewards.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                if let Some(r) = cell {
                    *r = f(k, j, *r);
                }
            }
        }
        self
    }

    /// Replaces the probability matrices, keeping costs, rewards and labels.
    pub fn with_distributions(
        &self,
        signal_dist: Vec<Vec<f64>>,
        outcome_dist: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let fresh = Self::new(
            self.costs.clone(),
            self.inspection_costs.clone(),
            signal_dist,
            outcome_dist,
            self.rewards.clone(),
        )?;
        Ok(Self {
            action_labels: self.action_labels.clone(),
            signal_labels: self.signal_labels.clone(),
            surcharge: self.surcharge,
            ..fresh
        })
    }

    pub(crate) fn check_action(&self, i: usize) -> Result<()> {
        if i >= self.n_actions() {
            return Err(ContractError::ActionOutOfRange {
                index: i,
                count: self.n_actions(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_contract(&self, ct: &Contract) -> Result<()> {
        let ell = self.n_signals();
        if ct.p.len() != ell || ct.s.len() != ell || ct.t.len() != ell {
            return Err(ContractError::Dimension(format!(
                "contract has {} / {} / {} signal entries, setting has {ell}",
                ct.p.len(),
                ct.s.len(),
                ct.t.len()
            )));
        }
        for k in 0..ell {
            if ct.t[k].len() != self.n_outcomes(k) {
                return Err(ContractError::Dimension(format!(
                    "contract pays {} outcomes on signal {k}, setting has {}",
                    ct.t[k].len(),
                    self.n_outcomes(k)
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn check_policy(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.n_signals() {
            return Err(ContractError::Dimension(format!(
                "policy has {} entries, setting has {} signals",
                p.len(),
                self.n_signals()
            )));
        }
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(ContractError::InvalidParameter(
                "inspection probabilities must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if let Some(first) = report.errors.first() {
            return Err(ContractError::InvalidSetting(first.clone()));
        }
        Ok(())
    }

    /// Checks the hard invariants and evaluates the structural predicates.
    pub fn validate(&self) -> ValidationReport {
        let mut errors = Vec::new();
        let mut warnings = Vec::new();

        let mut check_matrix = |name: &str, mat: &[Vec<f64>]| {
            for (i, row) in mat.iter().enumerate() {
                if row
                    .iter()
                    .any(|v| !v.is_finite() || *v < -PROB_TOL || *v > 1.0 + PROB_TOL)
                {
                    errors.push(format!("{name} row {i}: entry outside [0, 1]"));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > PROB_TOL {
                    errors.push(format!(
                        "{name} row {i}: row not stochastic (sums to {sum})"
                    ));
                }
            }
        };
        check_matrix("q0", &self.signal_dist);
        for (k, mat) in self.outcome_dist.iter().enumerate() {
            check_matrix(&format!("q{}", k + 1), mat);
        }
        for (i, c) in self.costs.iter().enumerate() {
            if !c.is_finite() || *c < 0.0 {
                errors.push(format!("action {i}: cost must be finite and nonnegative"));
            }
        }
        for (k, d) in self.inspection_costs.iter().enumerate() {
            if !d.is_finite() || *d < 0.0 {
                errors.push(format!(
                    "signal {k}: inspection cost must be finite and nonnegative"
                ));
            }
        }
        if !self.surcharge.is_finite() {
            errors.push("surcharge must be finite".into());
        }
        for (k, row) in self.rewards.iter().enumerate() {
            let m = self.n_outcomes(k);
            for (j, cell) in row.iter().enumerate() {
                match (j < m, cell) {
                    (true, None) => errors.push(format!("reward ({k}, {j}) is undefined")),
                    (true, Some(r)) if !r.is_finite() => {
                        errors.push(format!("reward ({k}, {j}) is not finite"))
                    }
                    (false, Some(_)) => {
                        errors.push(format!("reward ({k}, {j}) is defined past m_{k} = {m}"))
                    }
                    _ => {}
                }
            }
        }
        if self.costs.windows(2).any(|w| w[1] < w[0]) {
            warnings.push("action costs are not nondecreasing".to_string());
        }

        let mlrp_q0 = check_mlrp(&self.signal_dist);
        let mlrp_qk: Vec<bool> = self.outcome_dist.iter().map(|m| check_mlrp(m)).collect();
        let isop = check_isop(self);
        let symmetric_isop = check_symmetric_isop(self);
        if !mlrp_q0 {
            warnings.push("mlrp_q0 = false".to_string());
        }
        for (k, ok) in mlrp_qk.iter().enumerate() {
            if !ok {
                warnings.push(format!("mlrp_q{} = false", k + 1));
            }
        }
        if !isop {
            warnings.push("isop = false".to_string());
        }

        ValidationReport {
            errors,
            warnings,
            mlrp_q0,
            mlrp_qk,
            isop,
            symmetric_isop,
        }
    }

    /// `R_i = Σ_k q0[i,k] Σ_j qk[i,j] r[k,j]`.
    pub fn expected_reward(&self, i: usize) -> Result<f64> {
        self.check_action(i)?;
        let mut total = 0.0;
        for k in 0..self.n_signals() {
            let inner: f64 = (0..self.n_outcomes(k))
                .map(|j| self.qk(k, i, j) * self.reward(k, j).unwrap_or(0.0))
                .sum();
            total += self.q0(i, k) * inner;
        }
        Ok(total)
    }

    /// Expected transfer `T_i` from principal to agent.
    pub fn expected_payment(&self, ct: &Contract, i: usize) -> Result<f64> {
        self.check_action(i)?;
        self.check_contract(ct)?;
        Ok(self.payment_unchecked(ct, i))
    }

    pub(crate) fn payment_unchecked(&self, ct: &Contract, i: usize) -> f64 {
        (0..self.n_signals())
            .map(|k| {
                let inspected: f64 = ct.t[k]
                    .iter()
                    .enumerate()
                    .map(|(j, t)| self.qk(k, i, j) * t)
                    .sum();
                self.q0(i, k) * ((1.0 - ct.p[k]) * ct.s[k] + ct.p[k] * inspected)
            })
            .sum()
    }

    /// Expected inspection cost `D_i = Σ_k q0[i,k] p_k d_k`.
    pub fn expected_inspection_cost(&self, ct: &Contract, i: usize) -> Result<f64> {
        self.check_action(i)?;
        self.check_contract(ct)?;
        Ok(self.inspection_unchecked(&ct.p, i))
    }

    pub(crate) fn inspection_unchecked(&self, p: &[f64], i: usize) -> f64 {
        (0..self.n_signals())
            .map(|k| self.q0(i, k) * p[k] * self.inspection_costs[k])
            .sum()
    }

    pub fn agent_utility(&self, ct: &Contract, i: usize) -> Result<f64> {
        Ok(self.expected_payment(ct, i)? - self.costs[i])
    }

    /// The agent's action: maximal `T_i - c_i`, ties broken towards the
    /// principal's utility and then towards the lowest index.
    pub fn best_response(&self, ct: &Contract) -> Result<usize> {
        self.check_contract(ct)?;
        let agent: Vec<f64> = (0..self.n_actions())
            .map(|i| self.payment_unchecked(ct, i) - self.costs[i])
            .collect();
        let best_agent = agent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = MONEY_TOL * 1e-1 * (1.0 + best_agent.abs());
        let mut chosen = None;
        let mut chosen_principal = f64::NEG_INFINITY;
        for (i, &u) in agent.iter().enumerate() {
            if u < best_agent - tol {
                continue;
            }
            let principal = self.expected_reward(i)?
                - self.payment_unchecked(ct, i)
                - self.inspection_unchecked(&ct.p, i);
            if chosen.is_none() || principal > chosen_principal + 1e-12 {
                chosen = Some(i);
                chosen_principal = principal;
            }
        }
        Ok(chosen.expect("at least one action"))
    }

    /// `U_P = R_{i*} - T_{i*} - D_{i*}` at the agent's best response.
    pub fn principal_utility(&self, ct: &Contract) -> Result<f64> {
        let i = self.best_response(ct)?;
        Ok(self.expected_reward(i)?
            - self.payment_unchecked(ct, i)
            - self.inspection_unchecked(&ct.p, i))
    }

    /// First-best welfare `max_i R_i - c_i`.
    pub fn first_best(&self) -> f64 {
        (0..self.n_actions())
            .map(|i| self.expected_reward(i).unwrap_or(0.0) - self.costs[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// An adaptive contract `(p, s, t)`: inspection probabilities, payments for
/// uninspected signals, and payments for inspected signal–outcome pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    pub p: Vec<f64>,
    pub s: Vec<f64>,
    pub t: Vec<Vec<f64>>,
}

impl Contract {
    pub fn zero(setting: &Setting) -> Self {
        Self {
            p: vec![0.0; setting.n_signals()],
            s: vec![0.0; setting.n_signals()],
            t: setting
                .outcome_counts()
                .into_iter()
                .map(|m| vec![0.0; m])
                .collect(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.p.iter().all(|&p| p == 0.0 || p == 1.0)
    }

    pub fn inspected(&self) -> Vec<usize> {
        (0..self.p.len()).filter(|&k| self.p[k] > 0.0).collect()
    }

    /// Limited liability: every payment is nonnegative (up to `tol`).
    pub fn is_limited_liability(&self, tol: f64) -> bool {
        self.s.iter().all(|&v| v >= -tol) && self.t.iter().flatten().all(|&v| v >= -tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    pub mlrp_q0: bool,
    pub mlrp_qk: Vec<bool>,
    pub isop: bool,
    pub symmetric_isop: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Monotone likelihood ratio in cross-multiplied form: for rows `i < i'` and
/// columns `j < j'`, `M[i',j]·M[i,j'] ≤ M[i',j']·M[i,j]`.
pub fn check_mlrp(matrix: &[Vec<f64>]) -> bool {
    let n = matrix.len();
    for lo in 0..n {
        for hi in lo + 1..n {
            let (a, b) = (&matrix[lo], &matrix[hi]);
            let m = a.len().min(b.len());
            for j in 0..m {
                for jp in j + 1..m {
                    let lhs = b[j] * a[jp];
                    let rhs = b[jp] * a[j];
                    if lhs > rhs + 1e-9 * lhs.abs().max(rhs.abs()) + f64::MIN_POSITIVE {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Signal and outcome are independent: every `qk` is the same matrix.
pub fn check_isop(setting: &Setting) -> bool {
    let first = &setting.outcome_dist[0];
    setting.outcome_dist.iter().skip(1).all(|mat| {
        mat.len() == first.len()
            && mat.iter().zip(first).all(|(a, b)| {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= PROB_TOL)
            })
    })
}

/// ISOP with `q0 = q`, `m_k = ℓ` and symmetric rewards.
pub fn check_symmetric_isop(setting: &Setting) -> bool {
    let ell = setting.n_signals();
    if !check_isop(setting) || setting.outcome_counts().iter().any(|&m| m != ell) {
        return false;
    }
    let same_q = setting
        .signal_dist
        .iter()
        .zip(&setting.outcome_dist[0])
        .all(|(a, b)| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= PROB_TOL));
    if !same_q {
        return false;
    }
    (0..ell).all(|k| {
        (0..ell).all(|j| match (setting.reward(k, j), setting.reward(j, k)) {
            (Some(a), Some(b)) => (a - b).abs() <= MONEY_TOL,
            _ => false,
        })
    })
}
