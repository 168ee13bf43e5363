//! Random instances shared by the integration tests.
#![allow(dead_code)]

use adaptive_contracts::generators::binomial_pmf;
use adaptive_contracts::{Contract, Setting};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from the simplex, occasionally with exact zeros.
pub fn simplex(rng: &mut ChaCha8Rng, len: usize, zeros: bool) -> Vec<f64> {
    loop {
        let mut row: Vec<f64> = (0..len)
            .map(|_| {
                if zeros && len > 1 && rng.random_bool(0.15) {
                    0.0
                } else {
                    Exp1.sample(rng)
                }
            })
            .collect();
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|x| *x /= total);
            return row;
        }
    }
}

pub struct Shape {
    pub n: usize,
    pub ell: usize,
    pub max_m: usize,
    /// Inspection costs are drawn from `[d_min, d_max)`.
    pub d_min: f64,
    pub d_max: f64,
    pub zeros: bool,
}

pub fn random_setting(rng: &mut ChaCha8Rng, shape: &Shape) -> Setting {
    let &Shape {
        n,
        ell,
        max_m,
        d_min,
        d_max,
        zeros,
    } = shape;
    let mut costs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    costs.sort_by(f64::total_cmp);
    let d: Vec<f64> = (0..ell)
        .map(|_| {
            if d_max > d_min {
                rng.random_range(d_min..d_max)
            } else {
                d_min
            }
        })
        .collect();
    let m: Vec<usize> = (0..ell).map(|_| rng.random_range(1..=max_m)).collect();
    let q0 = (0..n).map(|_| simplex(rng, ell, zeros)).collect();
    let qk = m
        .iter()
        .map(|&mk| (0..n).map(|_| simplex(rng, mk, zeros)).collect())
        .collect();
    let rewards = m
        .iter()
        .map(|&mk| (0..mk).map(|_| rng.random_range(0.0..4.0)).collect())
        .collect();
    Setting::with_ragged_rewards(costs, d, q0, qk, rewards).expect("random setting is well formed")
}

/// Signals and outcomes independent, both families binomial in an
/// increasing success rate (hence MLRP), costs increasing.
pub fn random_isop_setting(rng: &mut ChaCha8Rng, n: usize, ell: usize, m: usize) -> Setting {
    let mut mu: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
    mu.sort_by(f64::total_cmp);
    let mut nu: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
    nu.sort_by(f64::total_cmp);
    let mut costs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.5)).collect();
    costs.sort_by(f64::total_cmp);
    let q0 = mu.iter().map(|&x| binomial_pmf(ell - 1, x)).collect();
    let q: Vec<Vec<f64>> = nu.iter().map(|&x| binomial_pmf(m - 1, x)).collect();
    let d = (0..ell).map(|_| rng.random_range(0.0..0.3)).collect();
    let rewards = (0..ell)
        .map(|_| (0..m).map(|_| rng.random_range(0.0..3.0)).collect())
        .collect();
    Setting::with_ragged_rewards(costs, d, q0, vec![q; ell], rewards).expect("well formed")
}

pub fn random_contract(rng: &mut ChaCha8Rng, setting: &Setting, deterministic: bool) -> Contract {
    let ell = setting.n_signals();
    Contract {
        p: (0..ell)
            .map(|_| {
                if deterministic {
                    f64::from(u8::from(rng.random_bool(0.5)))
                } else {
                    match rng.random_range(0..4) {
                        0 => 0.0,
                        1 => 1.0,
                        _ => rng.random_range(0.0..1.0),
                    }
                }
            })
            .collect(),
        s: (0..ell).map(|_| rng.random_range(0.0..3.0)).collect(),
        t: (0..ell)
            .map(|k| {
                (0..setting.n_outcomes(k))
                    .map(|_| rng.random_range(0.0..3.0))
                    .collect()
            })
            .collect(),
    }
}

/// Three actions, two signals, two outcomes, where mixing inspection beats
/// every deterministic policy for the last action.
pub fn randomization_witness() -> Setting {
    let q = vec![vec![0.6, 0.4], vec![0.4, 0.6], vec![0.6, 0.4]];
    Setting::with_ragged_rewards(
        vec![0.0, 0.0, 1.0],
        vec![1.0, 1.0],
        vec![vec![0.5, 0.5], vec![0.6, 0.4], vec![0.6, 0.4]],
        vec![q.clone(), q],
        vec![vec![0.0, 0.0], vec![0.0, 0.0]],
    )
    .unwrap()
}

/// One signal that is always observed; inspecting it reveals the action.
pub fn uninformative_signal() -> Setting {
    Setting::with_ragged_rewards(
        vec![0.0, 1.0],
        vec![1.0],
        vec![vec![1.0], vec![1.0]],
        vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
        vec![vec![0.0, 2.0]],
    )
    .unwrap()
}

/// Agent-utility IC residuals `U_i − U_r` of `ct` for target `i`.
pub fn ic_residuals(setting: &Setting, ct: &Contract, i: usize) -> Vec<f64> {
    let ui = setting.agent_utility(ct, i).unwrap();
    (0..setting.n_actions())
        .map(|r| ui - setting.agent_utility(ct, r).unwrap())
        .collect()
}

pub fn indicator(ell: usize, set: &[usize]) -> Vec<f64> {
    let mut p = vec![0.0; ell];
    for &k in set {
        p[k] = 1.0;
    }
    p
}
