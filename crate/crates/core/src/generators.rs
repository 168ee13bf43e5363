//! Parametric instance families.
//!
//! * [`gen_independent_set_instance`]: a graph encoded as a contract problem in
//!   which the cheapest way to incentivize the target is to inspect a
//!   minimum vertex cover.
//! * [`gen_binomial_setting`] / [`gen_beta_binomial_setting`]: agents that
//!   pass each of a number of unit tests independently (or with correlated
//!   success rates); the coarse signal is the pass count on a small initial
//!   suite, inspection runs a larger suite.
//! * [`perturb_dirichlet`]: random perturbation of any setting's rows.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::model::check_isop;
use crate::{ContractError, Result, Setting};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in &edges {
            if u >= vertices || v >= vertices {
                return Err(ContractError::InvalidParameter(format!(
                    "edge ({u}, {v}) out of range for {vertices} vertices"
                )));
            }
            if u == v {
                return Err(ContractError::InvalidParameter(format!("self-loop at {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(ContractError::InvalidParameter(format!(
                    "duplicate edge ({u}, {v})"
                )));
            }
        }
        Ok(Self { vertices, edges })
    }

    /// Parses an edge list: one `u v` pair per line, 0-indexed. Blank lines
    /// and `#` comments are skipped. The vertex count is one past the largest
    /// index unless `vertices` is given.
    pub fn parse_edge_list(text: &str, vertices: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(|tok| tok.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| {
                    ContractError::InvalidParameter(format!("line {}: {e}", lineno + 1))
                })?;
            match nums.as_slice() {
                [u, v] => edges.push((*u, *v)),
                _ => {
                    return Err(ContractError::InvalidParameter(format!(
                        "line {}: expected two vertex indices",
                        lineno + 1
                    )))
                }
            }
        }
        let inferred = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        Self::new(vertices.unwrap_or(inferred), edges)
    }

    pub fn is_vertex_cover(&self, set: &[usize]) -> bool {
        self.edges
            .iter()
            .all(|(u, v)| set.contains(u) || set.contains(v))
    }
}

/// Encodes `g` as a contract problem.
///
/// Actions: one per edge, then the target (last). Signals: one per vertex,
/// then a dummy (last). Every action draws the signal uniformly. Outcomes
/// are binary (`A` = 0, `B` = 1) and deterministic: edge `{u, v}` produces
/// `A` on `u`, `v` and the dummy and `B` elsewhere; the target always
/// produces `B`. Only `(dummy, B)` carries reward.
pub fn gen_independent_set_instance(g: &Graph, eps: f64) -> Result<Setting> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ContractError::InvalidParameter(format!(
            "eps must lie in (0, 1), got {eps}"
        )));
    }
    let nv = g.vertices;
    let ell = nv + 1;
    let size = ell as f64;
    let n = g.edges.len() + 1;
    let dummy = nv;

    let mut costs = vec![0.0; n];
    costs[n - 1] = eps / size;
    let mut d = vec![size; ell];
    d[dummy] = size * size;
    let q0 = vec![vec![1.0 / size; ell]; n];

    let a = [1.0, 0.0];
    let b = [0.0, 1.0];
    let mut qk = vec![vec![Vec::new(); n]; ell];
    for (k, mat) in qk.iter_mut().enumerate() {
        for (e, &(u, v)) in g.edges.iter().enumerate() {
            let row = if k == u || k == v || k == dummy { a } else { b };
            mat[e] = row.to_vec();
        }
        mat[n - 1] = b.to_vec();
    }
    let mut rewards = vec![vec![0.0, 0.0]; ell];
    rewards[dummy][1] = (nv as f64 + eps) * size;

    let mut action_labels: Vec<String> = g
        .edges
        .iter()
        .map(|(u, v)| format!("edge{u}-{v}"))
        .collect();
    action_labels.push("target".into());
    let mut signal_labels: Vec<String> = (0..nv).map(|v| format!("vertex{v}")).collect();
    signal_labels.push("dummy".into());

    Setting::with_ragged_rewards(costs, d, q0, qk, rewards)?
        .with_labels(action_labels, signal_labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub label: String,
    /// Per-test success probability.
    pub mu: f64,
    pub cost: f64,
}

impl ModelProfile {
    pub fn new(label: impl Into<String>, mu: f64, cost: f64) -> Self {
        Self {
            label: label.into(),
            mu,
            cost,
        }
    }
}

/// Success rates and per-run costs of six code-generation models on a
/// repository-level bug-fixing benchmark.
pub fn swebench_profiles() -> Vec<ModelProfile> {
    vec![
        ModelProfile::new("gpt-oss-120b", 0.26, 28.56),
        ModelProfile::new("GPT-5 nano", 0.348, 19.038),
        ModelProfile::new("o4-mini", 0.45, 104.99),
        ModelProfile::new("o3", 0.584, 166.83),
        ModelProfile::new("GPT-5 mini", 0.598, 17.739),
        ModelProfile::new("GPT-5", 0.65, 140.19),
    ]
}

fn check_profiles(profiles: &[ModelProfile]) -> Result<Vec<ModelProfile>> {
    if profiles.is_empty() {
        return Err(ContractError::InvalidParameter("no model profiles".into()));
    }
    for p in profiles {
        if !(0.0..=1.0).contains(&p.mu) || !(p.cost >= 0.0 && p.cost.is_finite()) {
            return Err(ContractError::InvalidParameter(format!(
                "profile {}: need mu in [0, 1] and a finite nonnegative cost",
                p.label
            )));
        }
    }
    let mut sorted = profiles.to_vec();
    sorted.sort_by(|a, b| a.mu.total_cmp(&b.mu).then(a.cost.total_cmp(&b.cost)));
    Ok(sorted)
}

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Binomial(trials, mu) pmf over `0..=trials`, via log-factorials.
pub fn binomial_pmf(trials: usize, mu: f64) -> Vec<f64> {
    (0..=trials)
        .map(|k| {
            // Exact point masses at the boundary avoid ln(0).
            if mu == 0.0 {
                return if k == 0 { 1.0 } else { 0.0 };
            }
            if mu == 1.0 {
                return if k == trials { 1.0 } else { 0.0 };
            }
            (ln_choose(trials, k) + k as f64 * mu.ln() + (trials - k) as f64 * (1.0 - mu).ln())
                .exp()
        })
        .collect()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// BetaBinomial(trials, a, b) pmf over `0..=trials`.
pub fn beta_binomial_pmf(trials: usize, a: f64, b: f64) -> Vec<f64> {
    (0..=trials)
        .map(|k| {
            (ln_choose(trials, k) + ln_beta(k as f64 + a, (trials - k) as f64 + b) - ln_beta(a, b))
                .exp()
        })
        .collect()
}

fn unit_test_labels(profiles: &[ModelProfile], initial: usize) -> (Vec<String>, Vec<String>) {
    (
        profiles.iter().map(|p| p.label.clone()).collect(),
        (0..=initial).map(|k| format!("{k} passed")).collect(),
    )
}

fn check_counts(initial: usize, refined: usize, delta: f64) -> Result<()> {
    if initial == 0 || refined == 0 {
        return Err(ContractError::InvalidParameter(
            "initial and refined test counts must be positive".into(),
        ));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(ContractError::InvalidParameter(
            "delta must be finite and nonnegative".into(),
        ));
    }
    Ok(())
}

/// Signal = passes out of `initial` tests, outcome = passes out of
/// `refined` tests, each test passing independently with the model's `mu`.
/// Each test costs `delta`; the initial suite is charged as a surcharge.
pub fn gen_binomial_setting(
    profiles: &[ModelProfile],
    initial: usize,
    refined: usize,
    delta: f64,
) -> Result<Setting> {
    check_counts(initial, refined, delta)?;
    let profiles = check_profiles(profiles)?;
    let q0: Vec<Vec<f64>> = profiles
        .iter()
        .map(|p| binomial_pmf(initial, p.mu))
        .collect();
    let q: Vec<Vec<f64>> = profiles
        .iter()
        .map(|p| binomial_pmf(refined, p.mu))
        .collect();
    let ell = initial + 1;
    let (actions, signals) = unit_test_labels(&profiles, initial);
    Setting::with_ragged_rewards(
        profiles.iter().map(|p| p.cost).collect(),
        vec![delta * refined as f64; ell],
        q0,
        vec![q; ell],
        vec![vec![0.0; refined + 1]; ell],
    )?
    .with_labels(actions, signals)
    .map(|s| s.with_surcharge(delta * initial as f64))
}

/// Like [`gen_binomial_setting`] but each model's success rate is itself
/// Beta-distributed with mean `mu` and intra-task correlation `rho`, so the
/// refined outcome depends on the observed initial pass count through the
/// conjugate posterior.
pub fn gen_beta_binomial_setting(
    profiles: &[ModelProfile],
    initial: usize,
    refined: usize,
    delta: f64,
    rho: f64,
) -> Result<Setting> {
    check_counts(initial, refined, delta)?;
    if !(rho > 0.0 && rho < 1.0) {
        return Err(ContractError::InvalidParameter(format!(
            "rho must lie in (0, 1), got {rho}"
        )));
    }
    let profiles = check_profiles(profiles)?;
    if profiles.iter().any(|p| p.mu <= 0.0 || p.mu >= 1.0) {
        return Err(ContractError::InvalidParameter(
            "beta-binomial profiles need mu strictly inside (0, 1)".into(),
        ));
    }
    let scale = (1.0 - rho) / rho;
    let q0: Vec<Vec<f64>> = profiles
        .iter()
        .map(|p| beta_binomial_pmf(initial, scale * p.mu, scale * (1.0 - p.mu)))
        .collect();
    let ell = initial + 1;
    let qk: Vec<Vec<Vec<f64>>> = (0..ell)
        .map(|k| {
            profiles
                .iter()
                .map(|p| {
                    beta_binomial_pmf(
                        refined,
                        k as f64 + scale * p.mu,
                        (initial - k) as f64 + scale * (1.0 - p.mu),
                    )
                })
                .collect()
        })
        .collect();
    let (actions, signals) = unit_test_labels(&profiles, initial);
    Setting::with_ragged_rewards(
        profiles.iter().map(|p| p.cost).collect(),
        vec![delta * refined as f64; ell],
        q0,
        qk,
        vec![vec![0.0; refined + 1]; ell],
    )?
    .with_labels(actions, signals)
    .map(|s| s.with_surcharge(delta * initial as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroHandling {
    /// Zero entries are an error (Dirichlet parameters must be positive).
    #[default]
    Reject,
    /// Add `1e-12` to every entry and renormalize first.
    Smooth,
}

const SMOOTHING: f64 = 1e-12;

fn dirichlet_row(rng: &mut ChaCha8Rng, base: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let mut draws = Vec::with_capacity(base.len());
    for &b in base {
        let gamma = Gamma::new(alpha * b, 1.0)
            .map_err(|e| ContractError::InvalidParameter(format!("dirichlet parameter: {e}")))?;
        draws.push(gamma.sample(rng));
    }
    let total: f64 = draws.iter().sum();
    if !(total > 0.0) {
        // Every gamma draw underflowed; fall back to the mean.
        return Ok(base.to_vec());
    }
    Ok(draws.into_iter().map(|x| x / total).collect())
}

fn prepare_row(row: &[f64], zeros: ZeroHandling) -> Result<Vec<f64>> {
    if row.iter().all(|&x| x > 0.0) {
        return Ok(row.to_vec());
    }
    match zeros {
        ZeroHandling::Reject => Err(ContractError::InvalidParameter(
            "dirichlet perturbation needs strictly positive base rows".into(),
        )),
        ZeroHandling::Smooth => {
            let smoothed: Vec<f64> = row.iter().map(|&x| x + SMOOTHING).collect();
            let total: f64 = smoothed.iter().sum();
            Ok(smoothed.into_iter().map(|x| x / total).collect())
        }
    }
}

/// How the outcome matrices are perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutcomeDraw {
    /// One draw shared by every signal; needs identical `qk` and keeps them
    /// identical.
    #[default]
    Shared,
    /// An independent draw for each signal's matrix.
    PerSignal,
}

/// Replaces every row of `q0` and of the outcome matrices by a Dirichlet
/// draw centred on it with concentration `alpha`. Deterministic in `seed`.
pub fn perturb_dirichlet(
    setting: &Setting,
    alpha: f64,
    seed: u64,
    zeros: ZeroHandling,
    draw: OutcomeDraw,
) -> Result<Setting> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(ContractError::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if draw == OutcomeDraw::Shared && !check_isop(setting) {
        return Err(ContractError::PreconditionViolated(
            "a shared outcome draw needs identical outcome matrices".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perturb = |mat: &[Vec<f64>]| -> Result<Vec<Vec<f64>>> {
        mat.iter()
            .map(|row| dirichlet_row(&mut rng, &prepare_row(row, zeros)?, alpha))
            .collect()
    };
    let q0 = perturb(setting.signal_dist())?;
    let qk = match draw {
        OutcomeDraw::Shared => vec![perturb(setting.outcome_dist(0))?; setting.n_signals()],
        OutcomeDraw::PerSignal => setting
            .outcome_dists()
            .iter()
            .map(|mat| perturb(mat))
            .collect::<Result<_>>()?,
    };
    setting.with_distributions(q0, qk)
}
