//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::time::Instant;

use adaptive_contracts::deterministic::{
    brute_force_optimal, solve_constant_actions, solve_isop, Target,
};
use adaptive_contracts::experiments::{
    alpaca_baselines, alpaca_setting, dirichlet_robustness, relative_advantage,
    swebench_design_heatmap, swebench_policy_sweep,
};
use adaptive_contracts::generators::{
    gen_independent_set_instance, swebench_profiles, Graph, OutcomeDraw,
};
use adaptive_contracts::minpay::{
    minpay_fixed_policy, minpay_total_cost, Variant, VariantConstraints,
};
use adaptive_contracts::randomized::{
    comi_scale_down, comi_supremum, search_randomized, GridConfig,
};
use adaptive_contracts::{ContractError, MONEY_TOL};
use common::{indicator, random_isop_setting, random_setting, rng, Shape};
use rand::Rng;

type Outcome = Result<String, String>;

fn close(label: &str, got: f64, want: f64, tol: f64) -> Result<String, String> {
    if (got - want).abs() <= tol {
        Ok(format!("{label} {got:.4}"))
    } else {
        Err(format!("{label} {got:.4}, expected {want} ± {tol}"))
    }
}

/// Runs every check and joins their messages; any failure fails the whole.
fn all(checks: Vec<Result<String, String>>) -> Outcome {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for c in checks {
        match c {
            Ok(m) => ok.push(m),
            Err(m) => bad.push(m),
        }
    }
    if bad.is_empty() {
        Ok(ok.join("; "))
    } else {
        Err(bad.join("; "))
    }
}

fn check(cond: bool, msg: String) -> Result<String, String> {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn randomization_witness() -> Outcome {
    let s = common::randomization_witness();
    let det = brute_force_optimal(&s, Target::Action(2)).map_err(|e| e.to_string())?;
    let top_pay = det.contract.t[0].iter().copied().fold(0.0, f64::max);
    let grid = GridConfig::default();
    let coni = search_randomized(&s, 2, Variant::Coni, &grid).map_err(|e| e.to_string())?;
    let umi = search_randomized(&s, 2, Variant::Umi, &grid).map_err(|e| e.to_string())?;
    all(vec![
        check(det.target == 2, format!("target {}", det.target + 1)),
        check(
            det.inspected() == vec![0],
            format!("inspects {:?}", det.inspected()),
        ),
        close("payment", top_pay, 16.6667, 1e-4),
        close("det cost", det.total_cost, 6.6, 1e-4),
        close("CoNI p1", coni.contract.p[0], 0.625, 0.005),
        close("CoNI cost", coni.total_cost, 6.375, 0.005),
        close("UMI p1", umi.contract.p[0], 0.525, 0.005),
        close("UMI cost", umi.total_cost, 6.315, 0.005),
    ])
}

fn uninformative_signal() -> Outcome {
    let s = common::uninformative_signal();
    let mut checks = Vec::new();
    for (i, p) in [(0usize, vec![0.0]), (1, vec![1.0])] {
        let mp = minpay_fixed_policy(&s, &p, i, &VariantConstraints::plain(&p))
            .map_err(|e| e.to_string())?
            .ok_or("min-pay infeasible")?;
        let direct = s.expected_reward(i).unwrap() - mp.total();
        let principal = s.principal_utility(&mp.contract).unwrap();
        checks.push(check(
            direct.abs() <= 1e-9 && principal.abs() <= 1e-9,
            format!("action {} utility {direct:.2e}/{principal:.2e}", i + 1),
        ));
    }
    checks.push(close("first best", s.first_best(), 1.0, 1e-9));
    all(checks)
}

fn alpaca() -> Outcome {
    let s = alpaca_setting();
    let r: Vec<f64> = (0..3).map(|i| s.expected_reward(i).unwrap()).collect();
    let best = brute_force_optimal(&s, Target::Best).map_err(|e| e.to_string())?;
    let base = alpaca_baselines(&s).map_err(|e| e.to_string())?;
    let adv = relative_advantage(best.utility, base.best());
    all(vec![
        close("R1", r[0], 0.17, 0.005),
        close("R2", r[1], 0.88, 0.005),
        close("R3", r[2], 1.08, 0.005),
        check(
            best.inspected() == vec![0],
            format!("inspects {:?}", best.inspected()),
        ),
        close("favorable-outcome pay", best.contract.t[0][1], 0.47, 0.02),
        close("uninspected long pay", best.contract.s[1], 0.03, 0.02),
        check(best.target == 2, format!("target {}", best.target + 1)),
        close("utility", best.utility, 1.00, 0.02),
        check(adv >= 0.10, format!("advantage {:.1}%", adv * 100.0)),
    ])
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..200u64 {
        let mut r = rng(1_000 + seed);
        let ell = r.random_range(1..=8);
        let shape = Shape {
            n: 3,
            ell,
            max_m: 4,
            d_min: 0.0,
            d_max: 1.0,
            zeros: true,
        };
        let s = random_setting(&mut r, &shape);
        match (
            solve_constant_actions(&s, Target::Best),
            brute_force_optimal(&s, Target::Best),
        ) {
            (Ok(a), Ok(b)) => worst = worst.max((a.utility - b.utility).abs()),
            (Err(ContractError::Infeasible(_)), Err(ContractError::Infeasible(_))) => {}
            (a, b) => {
                return Err(format!(
                    "seed {seed}: {:?} vs {:?}",
                    a.map(|x| x.utility),
                    b.map(|x| x.utility)
                ))
            }
        }
    }
    let mut worst_isop: f64 = 0.0;
    let mut dense = 0;
    for seed in 0..200u64 {
        let mut r = rng(5_000 + seed);
        let (n, ell, m) = (
            r.random_range(2..=4),
            r.random_range(1..=6),
            r.random_range(1..=4),
        );
        let s = random_isop_setting(&mut r, n, ell, m);
        match (
            solve_isop(&s),
            brute_force_optimal(&s, Target::Action(n - 1)),
        ) {
            (Ok(a), Ok(b)) => {
                worst_isop = worst_isop.max((a.total_cost - b.total_cost).abs());
                let nz = |row: &[f64]| row.iter().filter(|&&x| x > MONEY_TOL).count();
                let outcome_nz: usize = a.contract.t.iter().map(|row| nz(row)).sum();
                if nz(&a.contract.s) > 1 || outcome_nz > 1 {
                    dense += 1;
                }
            }
            (Err(ContractError::Infeasible(_)), Err(ContractError::Infeasible(_))) => {}
            (a, b) => {
                return Err(format!(
                    "isop seed {seed}: {:?} vs {:?}",
                    a.map(|x| x.total_cost),
                    b.map(|x| x.total_cost)
                ))
            }
        }
    }
    all(vec![
        check(
            worst <= 1e-6,
            format!("constant-actions max gap {worst:.1e}"),
        ),
        check(worst_isop <= 1e-6, format!("isop max gap {worst_isop:.1e}")),
        check(dense == 0, format!("{dense} non-sparse isop contracts")),
    ])
}

fn payment_gap_chain() -> Outcome {
    let grid = GridConfig::default();
    let tol = 1e-4 + grid.resolution();
    let mut checked = 0;
    for seed in 0..100u64 {
        let mut r = rng(9_000 + seed);
        let shape = Shape {
            n: 3,
            ell: 2,
            max_m: 3,
            d_min: 0.05,
            d_max: 1.0,
            zeros: false,
        };
        let s = random_setting(&mut r, &shape);
        let det = match brute_force_optimal(&s, Target::Best) {
            Ok(d) => d,
            Err(ContractError::Infeasible(_)) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let i = det.target;
        let sup = comi_supremum(&s, Target::Action(i)).map_err(|e| e.to_string())?;
        let mut best_rand = f64::INFINITY;
        for v in [Variant::Coni, Variant::Umi, Variant::Uni] {
            let found =
                search_randomized(&s, i, v, &grid).map_err(|e| format!("seed {seed}: {e}"))?;
            best_rand = best_rand.min(found.total_cost);
        }
        let spread: f64 = (0..2).map(|k| s.q0(i, k) * s.inspection_costs()[k]).sum();
        let ok = sup.total_cost <= best_rand + tol
            && best_rand <= det.total_cost + tol
            && det.total_cost <= sup.total_cost + spread + tol;
        if !ok {
            return Err(format!(
                "seed {seed}: sup {} rand {best_rand} det {} bound {}",
                sup.total_cost,
                det.total_cost,
                sup.total_cost + spread
            ));
        }
        checked += 1;
    }
    check(checked == 100, format!("{checked}/100 instances ordered"))
}

fn scale_down_invariance() -> Outcome {
    let mut worst_t: f64 = 0.0;
    let mut worst_d: f64 = 0.0;
    for seed in 0..100u64 {
        let mut r = rng(20_000 + seed);
        let (n, ell) = (r.random_range(2..=4), r.random_range(1..=4));
        let shape = Shape {
            n,
            ell,
            max_m: 3,
            d_min: 0.0,
            d_max: 1.0,
            zeros: true,
        };
        let s = random_setting(&mut r, &shape);
        let mut ct = common::random_contract(&mut r, &s, false);
        let k = r.random_range(0..ell);
        ct.p[k] = r.random_range(0.05..=1.0);
        let p_new = ct.p[k] * r.random_range(0.01..0.99);
        let out = comi_scale_down(&ct, k, p_new).map_err(|e| e.to_string())?;
        for i in 0..n {
            let dt = s.expected_payment(&out, i).unwrap() - s.expected_payment(&ct, i).unwrap();
            let dd = s.expected_inspection_cost(&out, i).unwrap()
                - s.expected_inspection_cost(&ct, i).unwrap();
            let want = s.q0(i, k) * (p_new - ct.p[k]) * s.inspection_costs()[k];
            worst_t = worst_t.max(dt.abs());
            worst_d = worst_d.max((dd - want).abs());
        }
    }
    all(vec![
        check(worst_t <= 1e-9, format!("max transfer drift {worst_t:.1e}")),
        check(
            worst_d <= 1e-9,
            format!("max cost-delta error {worst_d:.1e}"),
        ),
    ])
}

fn graph_family() -> Vec<Graph> {
    let g = |v: usize, e: &[(usize, usize)]| Graph::new(v, e.to_vec()).unwrap();
    let complete = |v: usize| {
        let edges: Vec<(usize, usize)> = (0..v)
            .flat_map(|a| (a + 1..v).map(move |b| (a, b)))
            .collect();
        Graph::new(v, edges).unwrap()
    };
    let path = |v: usize| Graph::new(v, (0..v - 1).map(|a| (a, a + 1)).collect()).unwrap();
    let cycle = |v: usize| Graph::new(v, (0..v).map(|a| (a, (a + 1) % v)).collect()).unwrap();
    let star = |v: usize| Graph::new(v, (1..v).map(|a| (0, a)).collect()).unwrap();
    vec![
        g(2, &[(0, 1)]),
        path(3),
        complete(3),
        path(4),
        cycle(4),
        star(4),
        complete(4),
        g(4, &[(0, 1), (2, 3)]),
        path(5),
        cycle(5),
        star(5),
        complete(5),
        g(5, &[(0, 1), (1, 2), (2, 0), (3, 4)]),
        g(5, &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (3, 4)]),
        path(6),
        cycle(6),
        star(6),
        complete(6),
        g(6, &[(0, 1), (2, 3), (4, 5)]),
        g(
            6,
            &[
                (0, 3),
                (0, 4),
                (0, 5),
                (1, 3),
                (1, 4),
                (1, 5),
                (2, 3),
                (2, 4),
                (2, 5),
            ],
        ),
    ]
}

fn independent_set() -> Outcome {
    let eps = 0.5;
    let mut subsets = 0;
    for (gi, g) in graph_family().iter().enumerate() {
        let s = gen_independent_set_instance(g, eps).map_err(|e| e.to_string())?;
        let nv = g.vertices;
        let target = s.n_actions() - 1;
        let r = s.expected_reward(target).unwrap();
        if (r - (nv as f64 + eps)).abs() > 1e-12 {
            return Err(format!("graph {gi}: R_target {r}"));
        }
        let ell = nv + 1;
        for mask in 0u32..(1 << ell) {
            let set: Vec<usize> = (0..ell).filter(|&k| mask >> k & 1 == 1).collect();
            let p = indicator(ell, &set);
            let cost = minpay_total_cost(&s, &p, target, &VariantConstraints::plain(&p))
                .map_err(|e| e.to_string())?;
            let vertex_only = !set.contains(&nv);
            let size = set.len() as f64;
            let ok = if vertex_only && g.is_vertex_cover(&set) {
                cost >= size - 1e-9 && cost < size + eps
            } else {
                cost >= nv as f64 + 1.0 - 1e-9
            };
            if !ok {
                return Err(format!("graph {gi}, S = {set:?}: cost {cost}"));
            }
            subsets += 1;
        }
    }
    Ok(format!("20 graphs, {subsets} inspection sets bracketed"))
}

fn swebench() -> Outcome {
    let profiles = swebench_profiles();
    let deltas = [
        1.0, 5.0, 10.0, 25.0, 50.0, 75.0, 100.0, 125.0, 150.0, 200.0, 300.0, 400.0, 500.0, 750.0,
        1000.0,
    ];
    let sweep = swebench_policy_sweep(&profiles, 2, 8, &deltas).map_err(|e| e.to_string())?;
    let mut regions: Vec<&str> = Vec::new();
    for p in &sweep.points {
        if regions.last() != Some(&p.policy.as_str()) {
            regions.push(&p.policy);
        }
    }
    let refined: Vec<usize> = (0..=25).collect();
    let map = swebench_design_heatmap(&profiles, &[1, 2, 3, 4, 5, 6], &refined, 125.0)
        .map_err(|e| e.to_string())?;
    let (a, b, c) = map.argmin();
    all(vec![
        check(
            regions
                == [
                    "inspect-full-success",
                    "inspect-full-failure",
                    "no-inspection",
                ],
            format!("regions {}", regions.join(" → ")),
        ),
        check(
            a.abs_diff(3) <= 1 && b.abs_diff(17) <= 1,
            format!("heatmap argmin ({a}, {b}) at {c:.2}, expected (3, 17) ± 1"),
        ),
    ])
}

fn dirichlet() -> Outcome {
    let run = |draw| {
        dirichlet_robustness(
            &swebench_profiles(),
            2,
            8,
            25.0,
            &[10.0, 100.0, 1000.0],
            0..100,
            draw,
        )
        .map_err(|e| e.to_string())
    };
    let points = run(OutcomeDraw::Shared)?;
    let complex = points.iter().filter(|p| p.inspected.len() > 1).count();
    // Independent per-signal draws are reported for reference only.
    let per_signal = run(OutcomeDraw::PerSignal)?;
    let per_complex = per_signal.iter().filter(|p| p.inspected.len() > 1).count();
    check(
        points.len() == 300 && complex == 0,
        format!(
            "{} perturbed instances, {complex} inspect more than one signal \
             (independent per-signal draws: {per_complex})",
            points.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("randomization witness", randomization_witness),
        ("uninformative signal", uninformative_signal),
        ("alpaca instance", alpaca),
        ("oracle equivalence", oracle_equivalence),
        ("payment-gap chain", payment_gap_chain),
        ("scale-down invariance", scale_down_invariance),
        ("independent-set reduction", independent_set),
        ("unit-test family", swebench),
        ("dirichlet robustness", dirichlet),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, msg) = match run() {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!(
            "{tag} criterion {} ({name}, {:.1}s): {msg}",
            n + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {}/{} passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
