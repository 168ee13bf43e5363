//! Dense two-phase simplex.
//!
//! Solves `min c·x  s.t.  A x ≤ b,  E x = f,  x ≥ lb` where a lower bound may
//! be `-∞` (free variable). Problems here are tiny and dense, so the tableau
//! is kept in full and every column (slacks and artificials included) is
//! updated on every pivot. That makes the simplex multipliers available at
//! the end without a separate factorisation.
//!
//! Pricing is Dantzig's most-negative reduced cost; after `5·(rows+cols)`
//! iterations the solver switches to Bland's rule, which cannot cycle.

use serde::Serialize;
use thiserror::Error;

const PIVOT_TOL: f64 = 1e-12;
const OPTIMALITY_TOL: f64 = 1e-11;
const PHASE_ONE_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("simplex made no progress after {iterations} iterations")]
    NumericalFailure { iterations: usize },
}

#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub ineq_matrix: Vec<Vec<f64>>,
    pub ineq_rhs: Vec<f64>,
    pub eq_matrix: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    /// Per-variable lower bound; `f64::NEG_INFINITY` marks a free variable.
    pub lower_bounds: Vec<f64>,
}

impl LpProblem {
    /// A problem over `num_vars` nonnegative variables with zero objective.
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            lower_bounds: vec![0.0; num_vars],
            ..Self::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn minimize(mut self, objective: Vec<f64>) -> Self {
        self.objective = objective;
        self
    }

    /// `row · x ≤ rhs`
    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.ineq_matrix.push(row);
        self.ineq_rhs.push(rhs);
    }

    /// `row · x ≥ rhs`, stored as `-row · x ≤ -rhs`.
    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) {
        self.add_le(row.into_iter().map(|v| -v).collect(), -rhs);
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.eq_matrix.push(row);
        self.eq_rhs.push(rhs);
    }

    pub fn set_lower_bound(&mut self, var: usize, lb: f64) {
        self.lower_bounds[var] = lb;
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower_bounds.len() != n {
            return Err(LpError::Malformed(format!(
                "{} lower bounds for {} variables",
                self.lower_bounds.len(),
                n
            )));
        }
        if self.ineq_matrix.len() != self.ineq_rhs.len()
            || self.eq_matrix.len() != self.eq_rhs.len()
        {
            return Err(LpError::Malformed(
                "row count differs from rhs length".into(),
            ));
        }
        for row in self.ineq_matrix.iter().chain(&self.eq_matrix) {
            if row.len() != n {
                return Err(LpError::Malformed(format!(
                    "constraint row of length {} for {} variables",
                    row.len(),
                    n
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(LpError::Malformed("non-finite coefficient".into()));
            }
        }
        let finite = |v: &f64| v.is_finite();
        if !self.objective.iter().all(finite)
            || !self.ineq_rhs.iter().all(finite)
            || !self.eq_rhs.iter().all(finite)
        {
            return Err(LpError::Malformed("non-finite objective or rhs".into()));
        }
        if self
            .lower_bounds
            .iter()
            .any(|lb| lb.is_nan() || *lb == f64::INFINITY)
        {
            return Err(LpError::Malformed(
                "lower bound must be finite or -inf".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point. For `Unbounded` this is the feasible vertex the ray
    /// starts from; for `Infeasible` it is empty.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Multipliers `λ ≥ 0` of the inequality rows, with the convention
    /// `c + Aᵀλ + Eᵀμ ≥ 0` componentwise (`= 0` on free variables).
    pub ineq_duals: Vec<f64>,
    /// Multipliers `μ` of the equality rows (free sign).
    pub eq_duals: Vec<f64>,
    /// `c + Aᵀλ + Eᵀμ`, the multipliers of the lower bounds.
    pub reduced_costs: Vec<f64>,
    /// Direction of unbounded descent, when `status == Unbounded`.
    pub ray: Option<Vec<f64>>,
    /// Optimal value of the phase-one (sum of artificials) problem.
    pub phase_one_value: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// `-λ·b - μ·f + Σ ν_j lb_j` over bounded variables.
    pub fn dual_objective(&self, problem: &LpProblem) -> f64 {
        let mut value = 0.0;
        for (lam, b) in self.ineq_duals.iter().zip(&problem.ineq_rhs) {
            value -= lam * b;
        }
        for (mu, f) in self.eq_duals.iter().zip(&problem.eq_rhs) {
            value -= mu * f;
        }
        for (nu, lb) in self.reduced_costs.iter().zip(&problem.lower_bounds) {
            if lb.is_finite() {
                value += nu * lb;
            }
        }
        value
    }
}

/// How an original variable maps onto standard-form columns.
#[derive(Debug, Clone, Copy)]
enum ColumnMap {
    Shifted { col: usize, lb: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    num_cols: usize,
    iterations: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded { entering: usize },
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= piv;
        }
        self.rhs[row] /= piv;
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row];
        for r in 0..self.rows.len() {
            if r == row {
                continue;
            }
            let factor = self.rows[r][col];
            if factor == 0.0 {
                continue;
            }
            for (v, p) in self.rows[r].iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            self.rows[r][col] = 0.0;
            self.rhs[r] -= factor * pivot_rhs;
        }
        self.basis[row] = col;
    }

    fn reduced_costs(&self, cost: &[f64]) -> (Vec<f64>, f64) {
        let mut z = cost.to_vec();
        let mut value = 0.0;
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb == 0.0 {
                continue;
            }
            for (zj, a) in z.iter_mut().zip(&self.rows[r]) {
                *zj -= cb * a;
            }
            value += cb * self.rhs[r];
        }
        (z, value)
    }

    fn run_phase(&mut self, cost: &[f64], allowed: &[bool]) -> Result<PhaseEnd, LpError> {
        let m = self.rows.len();
        let bland_after = 5 * (m + self.num_cols);
        let hard_cap = 50 * (m + self.num_cols) + 1000;
        let mut local_iters = 0usize;
        loop {
            if local_iters > hard_cap {
                return Err(LpError::NumericalFailure {
                    iterations: self.iterations,
                });
            }
            let bland = local_iters >= bland_after;
            let (z, _) = self.reduced_costs(cost);
            let scale = 1.0 + cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
            let tol = OPTIMALITY_TOL * scale;

            let mut entering = None;
            let mut best = -tol;
            for j in 0..self.num_cols {
                if !allowed[j] || z[j] >= -tol {
                    continue;
                }
                if bland {
                    entering = Some(j);
                    break;
                }
                if z[j] < best {
                    best = z[j];
                    entering = Some(j);
                }
            }
            let Some(e) = entering else {
                return Ok(PhaseEnd::Optimal);
            };

            // Ratio test. Ties go to the smallest basic index under Bland and
            // to the largest pivot otherwise.
            let mut leave: Option<(usize, f64, f64)> = None;
            for r in 0..m {
                let a = self.rows[r][e];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs[r].max(0.0) / a;
                match leave {
                    None => leave = Some((r, ratio, a)),
                    Some((lr, lratio, la)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                        let better = if tie {
                            if bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                a > la
                            }
                        } else {
                            ratio < lratio
                        };
                        if better {
                            leave = Some((r, ratio, a));
                        }
                    }
                }
            }
            let Some((r, _, _)) = leave else {
                return Ok(PhaseEnd::Unbounded { entering: e });
            };
            self.pivot(r, e);
            self.iterations += 1;
            local_iters += 1;
        }
    }
}

/// Solves a linear program with the two-phase simplex method.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution, LpError> {
    problem.check()?;
    let n = problem.num_vars();

    // Standard-form structural columns.
    let mut maps = Vec::with_capacity(n);
    let mut num_struct = 0usize;
    for &lb in &problem.lower_bounds {
        if lb.is_finite() {
            maps.push(ColumnMap::Shifted {
                col: num_struct,
                lb,
            });
            num_struct += 1;
        } else {
            maps.push(ColumnMap::Split {
                pos: num_struct,
                neg: num_struct + 1,
            });
            num_struct += 2;
        }
    }

    let m_ineq = problem.ineq_matrix.len();
    let m_eq = problem.eq_matrix.len();
    let m = m_ineq + m_eq;

    // Each row is scaled to unit max-norm and flipped so its rhs is >= 0.
    let mut struct_rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    let mut sign = Vec::with_capacity(m);
    let mut scale = Vec::with_capacity(m);
    for (row, &b) in problem
        .ineq_matrix
        .iter()
        .zip(&problem.ineq_rhs)
        .chain(problem.eq_matrix.iter().zip(&problem.eq_rhs))
    {
        let mut srow = vec![0.0; num_struct];
        let mut shifted_rhs = b;
        for (j, &a) in row.iter().enumerate() {
            match maps[j] {
                ColumnMap::Shifted { col, lb } => {
                    srow[col] = a;
                    shifted_rhs -= a * lb;
                }
                ColumnMap::Split { pos, neg } => {
                    srow[pos] = a;
                    srow[neg] = -a;
                }
            }
        }
        let norm = srow.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let s = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        let sg = if shifted_rhs < 0.0 { -1.0 } else { 1.0 };
        for v in srow.iter_mut() {
            *v *= s * sg;
        }
        struct_rows.push(srow);
        rhs.push(shifted_rhs * s * sg);
        sign.push(sg);
        scale.push(s);
    }

    // Column layout: structural | slacks (one per inequality row) | artificials.
    let slack_base = num_struct;
    let art_base = slack_base + m_ineq;
    let mut identity_col = vec![0usize; m];
    let mut num_art = 0usize;
    for r in 0..m {
        let needs_artificial = r >= m_ineq || sign[r] < 0.0;
        if needs_artificial {
            identity_col[r] = art_base + num_art;
            num_art += 1;
        } else {
            identity_col[r] = slack_base + r;
        }
    }
    let num_cols = art_base + num_art;

    let mut rows = Vec::with_capacity(m);
    for r in 0..m {
        let mut full = vec![0.0; num_cols];
        full[..num_struct].copy_from_slice(&struct_rows[r]);
        if r < m_ineq {
            full[slack_base + r] = sign[r];
        }
        if identity_col[r] >= art_base {
            full[identity_col[r]] = 1.0;
        }
        rows.push(full);
    }

    let mut tab = Tableau {
        rows,
        rhs,
        basis: identity_col.clone(),
        num_cols,
        iterations: 0,
    };

    // Phase one.
    let mut phase_one_cost = vec![0.0; num_cols];
    for c in phase_one_cost.iter_mut().skip(art_base) {
        *c = 1.0;
    }
    let all_allowed = vec![true; num_cols];
    let mut phase_one_value = 0.0;
    if num_art > 0 {
        match tab.run_phase(&phase_one_cost, &all_allowed)? {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded { .. } => {
                // Phase one is bounded below by zero.
                return Err(LpError::NumericalFailure {
                    iterations: tab.iterations,
                });
            }
        }
        phase_one_value = tab.reduced_costs(&phase_one_cost).1;
        if phase_one_value > PHASE_ONE_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                objective: f64::NAN,
                ineq_duals: Vec::new(),
                eq_duals: Vec::new(),
                reduced_costs: Vec::new(),
                ray: None,
                phase_one_value,
                iterations: tab.iterations,
            });
        }
        // Drive remaining artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] < art_base {
                continue;
            }
            let candidate = (0..art_base)
                .filter(|&j| tab.rows[r][j].abs() > 1e-9)
                .max_by(|&a, &b| tab.rows[r][a].abs().total_cmp(&tab.rows[r][b].abs()));
            if let Some(j) = candidate {
                tab.pivot(r, j);
            }
        }
    }

    // Phase two.
    let mut cost = vec![0.0; num_cols];
    for (j, &c) in problem.objective.iter().enumerate() {
        match maps[j] {
            ColumnMap::Shifted { col, .. } => cost[col] = c,
            ColumnMap::Split { pos, neg } => {
                cost[pos] = c;
                cost[neg] = -c;
            }
        }
    }
    let allowed: Vec<bool> = (0..num_cols).map(|j| j < art_base).collect();
    let end = tab.run_phase(&cost, &allowed)?;

    let mut std_x = vec![0.0; num_cols];
    for (r, &b) in tab.basis.iter().enumerate() {
        std_x[b] = tab.rhs[r].max(0.0);
    }
    let to_original = |v: &[f64], with_shift: bool| -> Vec<f64> {
        maps.iter()
            .map(|map| match *map {
                ColumnMap::Shifted { col, lb } => v[col] + if with_shift { lb } else { 0.0 },
                ColumnMap::Split { pos, neg } => v[pos] - v[neg],
            })
            .collect()
    };
    let x = to_original(&std_x, true);
    let objective: f64 = problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();

    if let PhaseEnd::Unbounded { entering } = end {
        let mut dir = vec![0.0; num_cols];
        dir[entering] = 1.0;
        for (r, &b) in tab.basis.iter().enumerate() {
            dir[b] = -tab.rows[r][entering];
        }
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x,
            objective: f64::NEG_INFINITY,
            ineq_duals: Vec::new(),
            eq_duals: Vec::new(),
            reduced_costs: Vec::new(),
            ray: Some(to_original(&dir, false)),
            phase_one_value,
            iterations: tab.iterations,
        });
    }

    // Simplex multipliers: the reduced cost of row r's initial identity
    // column (cost zero in phase two) equals -y_r.
    let (z, _) = tab.reduced_costs(&cost);
    let y: Vec<f64> = (0..m).map(|r| -z[identity_col[r]]).collect();
    let orig_dual = |r: usize| -sign[r] * scale[r] * y[r];
    let ineq_duals: Vec<f64> = (0..m_ineq).map(|r| orig_dual(r).max(0.0)).collect();
    let eq_duals: Vec<f64> = (m_ineq..m).map(orig_dual).collect();

    let mut reduced_costs = problem.objective.clone();
    for (row, lam) in problem.ineq_matrix.iter().zip(&ineq_duals) {
        for (rc, a) in reduced_costs.iter_mut().zip(row) {
            *rc += lam * a;
        }
    }
    for (row, mu) in problem.eq_matrix.iter().zip(&eq_duals) {
        for (rc, a) in reduced_costs.iter_mut().zip(row) {
            *rc += mu * a;
        }
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        ineq_duals,
        eq_duals,
        reduced_costs,
        ray: None,
        phase_one_value,
        iterations: tab.iterations,
    })
}
