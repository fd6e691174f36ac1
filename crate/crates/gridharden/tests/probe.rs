//! Ad-hoc timing probe (ignored by default).

use std::time::Instant;

use gridharden::ddu;
use gridharden::model::HardeningDecision;
use gridharden::recourse::Recourse;
use gridharden::{fixtures, pccg};

#[test]
#[ignore = "manual timing probe"]
fn time_ieee33_components() {
    let case = fixtures::ieee33_case();
    let rec = Recourse::new(&case.network, &case.scenarios, &case.algorithm);
    let dim = rec.idx.dim();

    let t = Instant::now();
    let (sol, _) = rec.solve_flat(&vec![1.0; dim]).unwrap();
    println!("recourse intact: {:.2}s cost {:.2}", t.elapsed().as_secs_f64(), sol.expected_cost);

    let t = Instant::now();
    let xi = rec.resilience_indices().unwrap();
    println!("indices: {:.2}s max {:.2}", t.elapsed().as_secs_f64(), xi.iter().cloned().fold(0.0, f64::max));

    let x0 = HardeningDecision::none(&rec.idx);
    let t = Instant::now();
    let sp = ddu::solve_subproblem(&rec, &x0, &case.ddu, &case.algorithm, Some(&xi)).unwrap();
    println!("subproblem at x=0: {:.2}s value {:.2}", t.elapsed().as_secs_f64(), sp.value);

    let block = ddu::ou_block(&rec, &sp.dual, &sp.u_star, None);
    let t = Instant::now();
    let (lb, plan, _) = pccg::parametric_master(&rec, &case.ddu, &case.algorithm, &[block]).unwrap();
    println!("master 1 cut: {:.2}s lb {:.2} plan count {}", t.elapsed().as_secs_f64(), lb, plan.count());

    let t = Instant::now();
    let sp2 = ddu::solve_subproblem(&rec, &plan, &case.ddu, &case.algorithm, Some(&xi)).unwrap();
    println!("subproblem 2: {:.2}s value {:.2}", t.elapsed().as_secs_f64(), sp2.value);
}

#[test]
#[ignore = "manual timing probe"]
fn time_ieee33_high_k() {
    let case = fixtures::ieee33_case();
    for k_lines in [6usize, 8] {
        let mut ddu_cfg = case.ddu;
        ddu_cfg.k_lines = k_lines;
        let r = pccg::run(&case.network, &case.scenarios, &ddu_cfg, &case.algorithm, true)
            .unwrap();
        println!(
            "k_lines {k_lines}: objective {:.2} ratio {:.2}% iters {} wall {:.1}s",
            r.objective,
            100.0 * r.shedding_ratio,
            r.iterations.len(),
            r.wall_secs
        );
    }
}

#[test]
#[ignore = "manual timing probe"]
fn time_ieee33_full_run() {
    let case = fixtures::ieee33_case();
    let r = pccg::run(&case.network, &case.scenarios, &case.ddu, &case.algorithm, true).unwrap();
    for it in &r.iterations {
        println!(
            "iter {}: lb {:.2} ub {:.2} gap {:.2e} sp {:.1}s master {:.1}s",
            it.iter, it.lower_bound, it.upper_bound, it.gap, it.subproblem_secs, it.master_secs
        );
    }
    println!(
        "objective {:.2} ratio {:.2}% wall {:.1}s",
        r.objective,
        100.0 * r.shedding_ratio,
        r.wall_secs
    );
}
