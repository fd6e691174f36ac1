//! Basic column-and-constraint generation baseline.
//!
//! Same outer loop as the parametric engine, but each recorded worst
//! case u* enters the master as a full primal recourse copy evaluated
//! at the overridden contingency `u' = u* + x - u* .* x`: a component
//! is damaged in the copy only if u* damaged it and the master leaves
//! it unhardened. The override keeps the cut valid under
//! decision-dependent uncertainty (u' always stays inside U(x)) at the
//! price of much weaker per-iteration progress than the parametric
//! blocks.

use std::time::Instant;

use crate::backend::{self, ModelHandle, VarId};
use crate::ddu;
use crate::model::{
    AlgorithmConfig, ContingencyScenario, DduConfig, HardeningDecision, Network, ScenarioSet,
};
use crate::pccg::{
    damaged_labels, extract_plan, hardened_labels, master_skeleton, rel_gap, EngineTag,
    IterRecord, SolveReport, Termination,
};
use crate::recourse::Recourse;
use crate::{Error, Result};

/// Appends one primal recourse copy for the recorded contingency.
/// Rows that read `u'_k` are constant-folded: for components u* keeps
/// intact `u'_k = 1`, otherwise `u'_k = x_k` and the x binary moves to
/// the left-hand side.
fn append_primal_cut(
    m: &mut ModelHandle,
    rec: &Recourse,
    u_star: &ContingencyScenario,
    x_vars: &[VarId],
    eta: VarId,
) {
    let form = &rec.form;
    let intact = u_star.flat();
    let probs: Vec<f64> = rec.scens.scenarios.iter().map(|s| s.probability).collect();

    let mut epigraph: Vec<(VarId, f64)> = vec![(eta, 1.0)];
    for (s, &pi) in probs.iter().enumerate() {
        let y: Vec<VarId> = (0..form.n_vars).map(|_| m.add_free_col(0.0)).collect();
        for (v, &c) in form.cost.iter().enumerate() {
            if c != 0.0 {
                epigraph.push((y[v], -pi * c));
            }
        }
        for row in &form.eq {
            let coeffs = row.coeffs.iter().map(|&(v, c)| (y[v], c)).collect();
            m.add_eq(row.rhs[s], coeffs);
        }
        for row in &form.ineq {
            let mut coeffs: Vec<(VarId, f64)> =
                row.coeffs.iter().map(|&(v, c)| (y[v], c)).collect();
            let mut rhs = row.rhs[s];
            if let Some((k, c)) = row.u_term {
                if intact[k] {
                    rhs += c;
                } else {
                    coeffs.push((x_vars[k], -c));
                }
            }
            m.add_ge(rhs, coeffs);
        }
    }
    // eta >= sum_s pi_s c' y_s.
    m.add_ge(0.0, epigraph);
}

/// Solves the basic master over the recorded contingencies; returns
/// the lower bound, the minimizing plan, and the solve time.
pub fn basic_master(
    rec: &Recourse,
    ddu_cfg: &DduConfig,
    cfg: &AlgorithmConfig,
    recorded: &[ContingencyScenario],
) -> Result<(f64, HardeningDecision, f64)> {
    let (mut m, x_vars, eta) = master_skeleton(&rec.net, &rec.idx, ddu_cfg, cfg);
    for u_star in recorded {
        append_primal_cut(&mut m, rec, u_star, &x_vars, eta);
    }
    let sol = backend::solve_milp(&m)?;
    if !sol.is_optimal() {
        return Err(Error::MasterNotOptimal { status: sol.status });
    }
    Ok((sol.objective, extract_plan(&sol, &x_vars, &rec.idx), sol.wall_secs))
}

/// Runs the basic C&CG engine to proven optimality.
pub fn run(
    net: &Network,
    scens: &ScenarioSet,
    ddu_cfg: &DduConfig,
    cfg: &AlgorithmConfig,
) -> Result<SolveReport> {
    assert!(cfg.max_iters >= 1, "max_iters must be at least 1");
    let start = Instant::now();
    let rec = Recourse::new(net, scens, cfg);
    let idx = rec.idx.clone();
    let cfg = AlgorithmConfig { enhancement: false, ..cfg.clone() };
    let cfg = &cfg;

    let mut x_hat = HardeningDecision::none(&idx);
    let mut recorded: Vec<ContingencyScenario> = Vec::new();
    let mut lb = f64::NEG_INFINITY;
    let mut ub = f64::INFINITY;
    let mut best: Option<(HardeningDecision, ContingencyScenario, f64)> = None;
    let mut iterations = Vec::new();
    let mut termination = Termination::IterLimit;

    for iter in 1..=cfg.max_iters {
        let sp = ddu::solve_subproblem(&rec, &x_hat, ddu_cfg, cfg, None)?;
        if sp.value < ub {
            ub = sp.value;
            best = Some((x_hat.clone(), sp.u_star.clone(), sp.recourse.shedding_ratio));
        }
        recorded.push(sp.u_star.clone());

        let (master_obj, next_plan, master_secs) = basic_master(&rec, ddu_cfg, cfg, &recorded)?;
        // Successive masters may each understate by their MIP gap.
        let slack = (cfg.gap_tol / 5.0).max(1e-6);
        if master_obj < lb - slack * lb.abs().max(1.0) {
            return Err(Error::LowerBoundRegression {
                iter,
                prev: lb,
                curr: master_obj,
            });
        }
        lb = lb.max(master_obj);
        x_hat = next_plan;

        let gap = rel_gap(lb, ub);
        iterations.push(IterRecord {
            iter,
            lower_bound: lb,
            upper_bound: ub,
            gap,
            worst_damage: damaged_labels(net, &idx, &sp.u_star),
            plan: x_hat.clone(),
            subproblem_secs: sp.wall_secs,
            master_secs,
        });
        if gap <= cfg.gap_tol {
            termination = Termination::Converged;
            break;
        }
    }

    let (plan, worst_u, ratio) = best.expect("at least one iteration ran");
    let (hardened_lines, hardened_dgs) = hardened_labels(net, &idx, &plan);
    Ok(SolveReport {
        engine: EngineTag::BasicCcg,
        objective: ub,
        lower_bound: lb,
        upper_bound: ub,
        gap: rel_gap(lb, ub),
        hardened_lines,
        hardened_dgs,
        worst_damage: damaged_labels(net, &idx, &worst_u),
        shedding_ratio: ratio,
        termination,
        wall_secs: start.elapsed().as_secs_f64(),
        iterations,
        plan,
        worst_contingency: worst_u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Budget;
    use crate::{fixtures, oracle, pccg};

    #[test]
    fn desk6_matches_oracle_and_pccg() {
        let case = fixtures::desk6_case();
        let basic = run(&case.network, &case.scenarios, &case.ddu, &case.algorithm).unwrap();
        let want = oracle::solve_exhaustive(
            &case.network,
            &case.scenarios,
            &case.ddu,
            &case.algorithm,
            oracle::DEFAULT_PLAN_CAP,
            oracle::DEFAULT_CONTINGENCY_CAP,
        )
        .unwrap();
        assert_eq!(basic.termination, Termination::Converged);
        assert!(
            (basic.objective - want.objective).abs() <= 1e-4 * want.objective.max(1.0),
            "basic {} vs oracle {}",
            basic.objective,
            want.objective
        );
        let p = pccg::run(&case.network, &case.scenarios, &case.ddu, &case.algorithm, false)
            .unwrap();
        assert!((basic.objective - p.objective).abs() <= 1e-4 * p.objective.max(1.0));
    }

    #[test]
    fn zero_budget_converges_immediately() {
        let mut case = fixtures::desk6_case();
        case.ddu.budget = Budget::Cardinality(0);
        let got = run(&case.network, &case.scenarios, &case.ddu, &case.algorithm).unwrap();
        assert_eq!(got.iterations.len(), 1);
        assert_eq!(got.termination, Termination::Converged);
    }

    #[test]
    fn random_desks_agree_with_pccg() {
        for seed in [3u64, 11, 27] {
            let case = fixtures::random_desk(seed);
            let basic = run(&case.network, &case.scenarios, &case.ddu, &case.algorithm).unwrap();
            let p = pccg::run(&case.network, &case.scenarios, &case.ddu, &case.algorithm, false)
                .unwrap();
            assert!(
                (basic.objective - p.objective).abs() <= 1e-4 * p.objective.abs().max(1.0),
                "seed {seed}: basic {} vs pccg {}",
                basic.objective,
                p.objective
            );
        }
    }
}
