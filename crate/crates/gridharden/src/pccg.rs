//! Parametric column-and-constraint generation.
//!
//! The outer loop alternates between the exact worst-case subproblem at
//! the current plan (which yields the upper bound and a fresh dual
//! point) and a master MILP over the hardening binaries carrying one
//! parametric optimality block per recorded dual point (which yields
//! the lower bound and the next plan). Iteration 1 starts from the
//! all-zeros plan, so each master solve can only propose a plan that no
//! earlier iteration has already cut off — the loop visits every plan
//! at most once and terminates within |X| iterations.

use std::time::Instant;

use serde::Serialize;

use crate::backend::{self, ModelHandle, ObjSense, VarId};
use crate::ddu::{self, OuBlock};
use crate::model::{
    AlgorithmConfig, Budget, ContingencyScenario, DduConfig, HardeningDecision, Network,
    ScenarioSet, UncertaintyIndex,
};
use crate::recourse::Recourse;
use crate::{Error, Result};

/// Which engine produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineTag {
    Pccg,
    PccgEnhanced,
    BasicCcg,
    Oracle,
}

impl std::fmt::Display for EngineTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EngineTag::Pccg => "pccg",
            EngineTag::PccgEnhanced => "pccg-enhanced",
            EngineTag::BasicCcg => "basic-ccg",
            EngineTag::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    IterLimit,
}

/// One outer iteration: subproblem first, then the master.
#[derive(Debug, Clone, Serialize)]
pub struct IterRecord {
    pub iter: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    /// Components damaged by the worst case found this iteration.
    pub worst_damage: Vec<String>,
    /// The plan the master proposed for the next iteration.
    pub plan: HardeningDecision,
    pub subproblem_secs: f64,
    pub master_secs: f64,
}

/// Final outcome of any engine.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub engine: EngineTag,
    /// Worst-case expected weighted shedding of the returned plan.
    pub objective: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub hardened_lines: Vec<String>,
    pub hardened_dgs: Vec<String>,
    /// Damage set of the binding worst case.
    pub worst_damage: Vec<String>,
    /// Worst-case expected weighted shed over expected weighted load.
    pub shedding_ratio: f64,
    pub termination: Termination,
    pub wall_secs: f64,
    pub iterations: Vec<IterRecord>,
    pub plan: HardeningDecision,
    pub worst_contingency: ContingencyScenario,
}

impl SolveReport {
    /// Human-readable summary block.
    pub fn summary(&self, _net: &Network) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "engine          {}", self.engine);
        let _ = writeln!(out, "objective       {:.6}", self.objective);
        let _ = writeln!(out, "bounds          [{:.6}, {:.6}]  gap {:.2e}", self.lower_bound, self.upper_bound, self.gap);
        let _ = writeln!(out, "hardened lines  {}", join_or_dash(&self.hardened_lines));
        let _ = writeln!(out, "hardened DGs    {}", join_or_dash(&self.hardened_dgs));
        let _ = writeln!(out, "worst damage    {}", join_or_dash(&self.worst_damage));
        let _ = writeln!(out, "shedding ratio  {:.2}%", 100.0 * self.shedding_ratio);
        let _ = writeln!(
            out,
            "termination     {:?} after {} iteration(s), {:.2}s",
            self.termination,
            self.iterations.len(),
            self.wall_secs
        );
        out
    }
}

fn join_or_dash(items: &[String]) -> String {
    if items.is_empty() {
        "-".to_string()
    } else {
        items.join(", ")
    }
}

/// Labels of the components a contingency damages.
pub fn damaged_labels(net: &Network, idx: &UncertaintyIndex, u: &ContingencyScenario) -> Vec<String> {
    u.flat()
        .iter()
        .enumerate()
        .filter(|(_, &intact)| !intact)
        .map(|(k, _)| net.u_label(idx, k))
        .collect()
}

/// Labels of the hardened lines and DGs, separately.
pub fn hardened_labels(
    net: &Network,
    idx: &UncertaintyIndex,
    x: &HardeningDecision,
) -> (Vec<String>, Vec<String>) {
    let lines = idx
        .lines
        .iter()
        .zip(&x.lines)
        .filter(|(_, &z)| z)
        .map(|(&l, _)| net.line_label(l))
        .collect();
    let dgs = idx
        .dgs
        .iter()
        .zip(&x.dgs)
        .filter(|(_, &r)| r)
        .map(|(&g, _)| net.dg_label(g))
        .collect();
    (lines, dgs)
}

/// Relative optimality gap with the artifact-wide denominator guard.
pub fn rel_gap(lb: f64, ub: f64) -> f64 {
    (ub - lb) / lb.max(1e-9)
}

/// Master scaffold shared by the C&CG variants: hardening binaries in
/// flat u order, the budget row, and the epigraph variable (the true
/// objective is nonnegative, so eta keeps a zero floor).
pub(crate) fn master_skeleton(
    net: &Network,
    idx: &UncertaintyIndex,
    ddu_cfg: &DduConfig,
    cfg: &AlgorithmConfig,
) -> (ModelHandle, Vec<VarId>, VarId) {
    let mut m = ModelHandle::new(ObjSense::Minimize);
    m.seed = cfg.seed as i32;
    let x_vars: Vec<VarId> = (0..idx.dim()).map(|_| m.add_binary(0.0)).collect();
    match ddu_cfg.budget {
        Budget::Cardinality(cap) => {
            m.add_le(cap as f64, x_vars.iter().map(|&v| (v, 1.0)).collect());
        }
        Budget::Cost(b) => {
            let coeffs = x_vars
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    let c = if k < idx.lines.len() {
                        net.lines[idx.lines[k]].hardening_cost
                    } else {
                        net.dgs[idx.dgs[k - idx.lines.len()]].hardening_cost
                    };
                    (v, c)
                })
                .collect();
            m.add_le(b, coeffs);
        }
    }
    let eta = m.add_col(1.0, 0.0, f64::INFINITY);
    (m, x_vars, eta)
}

pub(crate) fn extract_plan(sol: &backend::Solution, x_vars: &[VarId], idx: &UncertaintyIndex) -> HardeningDecision {
    let flat: Vec<bool> = x_vars.iter().map(|&v| sol.value(v) > 0.5).collect();
    HardeningDecision {
        lines: flat[..idx.lines.len()].to_vec(),
        dgs: flat[idx.lines.len()..].to_vec(),
    }
}

/// Solves the master over the given parametric blocks; returns the
/// lower bound, the minimizing plan, and the solve time.
pub fn parametric_master(
    rec: &Recourse,
    ddu_cfg: &DduConfig,
    cfg: &AlgorithmConfig,
    cuts: &[OuBlock],
) -> Result<(f64, HardeningDecision, f64)> {
    let (mut m, x_vars, eta) = master_skeleton(&rec.net, &rec.idx, ddu_cfg, cfg);
    for cut in cuts {
        cut.append_to(&mut m, rec, &x_vars, eta, ddu_cfg, cfg.m_comp);
    }
    let sol = backend::solve_milp(&m)?;
    if !sol.is_optimal() {
        return Err(Error::MasterNotOptimal { status: sol.status });
    }
    Ok((sol.objective, extract_plan(&sol, &x_vars, &rec.idx), sol.wall_secs))
}

/// Runs the parametric C&CG engine to proven optimality.
pub fn run(
    net: &Network,
    scens: &ScenarioSet,
    ddu_cfg: &DduConfig,
    cfg: &AlgorithmConfig,
    enhanced: bool,
) -> Result<SolveReport> {
    assert!(cfg.max_iters >= 1, "max_iters must be at least 1");
    let work = || run_inner(net, scens, ddu_cfg, cfg, enhanced);
    if cfg.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .expect("rayon pool");
        pool.install(work)
    } else {
        work()
    }
}

fn run_inner(
    net: &Network,
    scens: &ScenarioSet,
    ddu_cfg: &DduConfig,
    cfg: &AlgorithmConfig,
    enhanced: bool,
) -> Result<SolveReport> {
    let start = Instant::now();
    let rec = Recourse::new(net, scens, cfg);
    let idx = rec.idx.clone();
    // The engine flag wins over whatever the case file said.
    let cfg = AlgorithmConfig { enhancement: enhanced, ..cfg.clone() };
    let cfg = &cfg;
    let xi = if enhanced { Some(rec.resilience_indices()?) } else { None };

    let mut x_hat = HardeningDecision::none(&idx);
    let mut cuts: Vec<OuBlock> = Vec::new();
    let mut lb = f64::NEG_INFINITY;
    let mut ub = f64::INFINITY;
    let mut best: Option<(HardeningDecision, ContingencyScenario, f64)> = None;
    let mut iterations = Vec::new();
    let mut termination = Termination::IterLimit;

    for iter in 1..=cfg.max_iters {
        let sp = ddu::solve_subproblem(&rec, &x_hat, ddu_cfg, cfg, xi.as_deref())?;
        if sp.value < ub {
            ub = sp.value;
            best = Some((x_hat.clone(), sp.u_star.clone(), sp.recourse.shedding_ratio));
        }
        cuts.push(ddu::ou_block(&rec, &sp.dual, &sp.u_star, xi.as_deref()));

        let (master_obj, next_plan, master_secs) =
            parametric_master(&rec, ddu_cfg, cfg, &cuts)?;
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
        if std::env::var_os("GRIDHARDEN_TRACE").is_some() {
            eprintln!(
                "[pccg] iter {iter}: lb {lb:.3} ub {ub:.3} gap {gap:.2e} \
                 sp {:.1}s master {master_secs:.1}s",
                sp.wall_secs
            );
        }
        if gap <= cfg.gap_tol {
            termination = Termination::Converged;
            break;
        }
    }

    let (plan, worst_u, ratio) = best.expect("at least one iteration ran");
    let (hardened_lines, hardened_dgs) = hardened_labels(net, &idx, &plan);
    Ok(SolveReport {
        engine: if enhanced { EngineTag::PccgEnhanced } else { EngineTag::Pccg },
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
    use crate::fixtures;
    use crate::oracle;

    #[test]
    fn desk6_matches_the_oracle() {
        let case = fixtures::desk6_case();
        let got = run(&case.network, &case.scenarios, &case.ddu, &case.algorithm, false).unwrap();
        let want = oracle::solve_exhaustive(
            &case.network,
            &case.scenarios,
            &case.ddu,
            &case.algorithm,
            oracle::DEFAULT_PLAN_CAP,
            oracle::DEFAULT_CONTINGENCY_CAP,
        )
        .unwrap();
        assert_eq!(got.termination, Termination::Converged);
        assert!(
            (got.objective - want.objective).abs() <= 1e-4 * want.objective.max(1.0),
            "pccg {} vs oracle {}",
            got.objective,
            want.objective
        );
    }

    #[test]
    fn enhanced_variant_matches_plain() {
        let case = fixtures::desk6_case();
        let plain = run(&case.network, &case.scenarios, &case.ddu, &case.algorithm, false).unwrap();
        let enh = run(&case.network, &case.scenarios, &case.ddu, &case.algorithm, true).unwrap();
        assert_eq!(enh.engine, EngineTag::PccgEnhanced);
        assert!((plain.objective - enh.objective).abs() <= 1e-4 * plain.objective.max(1.0));
        // The enhancement may only help: never more iterations than |X|,
        // and typically no more than the plain run needs.
        assert!(!enh.iterations.is_empty());
    }

    #[test]
    fn zero_budget_converges_in_one_iteration() {
        let mut case = fixtures::desk6_case();
        case.ddu.budget = Budget::Cardinality(0);
        let got = run(&case.network, &case.scenarios, &case.ddu, &case.algorithm, false).unwrap();
        assert_eq!(got.termination, Termination::Converged);
        assert_eq!(got.iterations.len(), 1);
        assert!(got.hardened_lines.is_empty() && got.hardened_dgs.is_empty());
    }

    #[test]
    fn objective_is_monotone_in_the_budget() {
        let case = fixtures::desk6_case();
        let mut prev = f64::INFINITY;
        for cap in 0..=3u32 {
            let mut ddu_cfg = case.ddu;
            ddu_cfg.budget = Budget::Cardinality(cap);
            let got = run(&case.network, &case.scenarios, &ddu_cfg, &case.algorithm, false).unwrap();
            assert!(
                got.objective <= prev + 1e-5 * prev.min(1e9).max(1.0),
                "budget {cap}: {} > {}",
                got.objective,
                prev
            );
            prev = got.objective;
        }
    }

    #[test]
    fn bounds_are_sane_and_lb_monotone() {
        let case = fixtures::desk6_case();
        let got = run(&case.network, &case.scenarios, &case.ddu, &case.algorithm, false).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for it in &got.iterations {
            assert!(it.lower_bound >= prev - 1e-9);
            assert!(it.lower_bound <= it.upper_bound + 1e-6 * it.upper_bound.abs().max(1.0));
            prev = it.lower_bound;
        }
        assert!(got.gap <= case.algorithm.gap_tol);
    }

    #[test]
    fn iteration_count_stays_within_the_plan_space() {
        let case = fixtures::desk6_case();
        let n_plans = crate::model::count_hardenings(&case.ddu, &case.network, 1 << 20);
        let got = run(&case.network, &case.scenarios, &case.ddu, &case.algorithm, false).unwrap();
        assert!(
            (got.iterations.len() as u128) <= n_plans,
            "{} iterations for {} plans",
            got.iterations.len(),
            n_plans
        );
    }

    #[test]
    fn report_serializes_to_toml() {
        let mut case = fixtures::desk6_case();
        case.ddu.budget = Budget::Cardinality(1);
        let got = run(&case.network, &case.scenarios, &case.ddu, &case.algorithm, false).unwrap();
        let text = toml::to_string_pretty(&got).unwrap();
        assert!(text.contains("engine = \"pccg\""));
        assert!(text.contains("[[iterations]]"));
    }
}
