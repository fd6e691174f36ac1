//! Brute-force reference: enumerate every budget-feasible plan, and for
//! each plan every admissible contingency, evaluating the recourse LP
//! directly. Exact by construction, usable only at desk scale, and
//! guarded by hard caps on both enumeration sizes.

use dashmap::DashMap;
use rayon::prelude::*;

use crate::model::{
    count_hardenings, count_uncertainty, enumerate_hardenings_unchecked, enumerate_uncertainty,
    AlgorithmConfig, ContingencyScenario, DduConfig, HardeningDecision, Network, ScenarioSet,
};
use crate::pccg::{damaged_labels, hardened_labels, EngineTag, SolveReport, Termination};
use crate::recourse::Recourse;
use crate::{Error, Result};

pub const DEFAULT_PLAN_CAP: u128 = 4096;
pub const DEFAULT_CONTINGENCY_CAP: u128 = 4096;

/// Exhaustively solves the trilevel problem. Refuses (with the exact
/// counts) when the plan space exceeds `plan_cap` or any plan's
/// contingency set exceeds `contingency_cap`.
pub fn solve_exhaustive(
    net: &Network,
    scens: &ScenarioSet,
    ddu_cfg: &DduConfig,
    cfg: &AlgorithmConfig,
    plan_cap: u128,
    contingency_cap: u128,
) -> Result<SolveReport> {
    let start = std::time::Instant::now();
    let n_plans = count_hardenings(ddu_cfg, net, plan_cap);
    if n_plans > plan_cap {
        return Err(Error::OracleCap {
            what: "hardening plans",
            count: n_plans,
            cap: plan_cap,
        });
    }
    let rec = Recourse::new(net, scens, cfg);
    let idx = rec.idx.clone();
    // The empty plan has the largest contingency set; checking it
    // covers every other plan.
    let worst_count = count_uncertainty(&HardeningDecision::none(&idx), ddu_cfg);
    if worst_count > contingency_cap {
        return Err(Error::OracleCap {
            what: "contingency scenarios",
            count: worst_count,
            cap: contingency_cap,
        });
    }

    let plans: Vec<HardeningDecision> = enumerate_hardenings_unchecked(ddu_cfg, net).collect();
    // Plans share contingencies (U(x) is a subset of U(0)), so recourse
    // values are memoized on the flat damage pattern.
    let memo: DashMap<Vec<bool>, f64> = DashMap::new();

    let evaluated: Vec<(HardeningDecision, ContingencyScenario, f64)> = plans
        .into_par_iter()
        .map(|x| {
            let mut worst: Option<(ContingencyScenario, f64)> = None;
            for u in enumerate_uncertainty(&x, ddu_cfg, contingency_cap)? {
                let key = u.flat();
                let cost = match memo.get(&key) {
                    Some(hit) => *hit,
                    None => {
                        let c = rec.expected_cost(&u)?;
                        memo.insert(key, c);
                        c
                    }
                };
                if worst.as_ref().is_none_or(|(_, w)| cost > *w) {
                    worst = Some((u, cost));
                }
            }
            let (u, cost) = worst.expect("U(x) always contains the intact scenario");
            Ok((x, u, cost))
        })
        .collect::<Result<_>>()?;

    let (plan, worst_u, objective) = evaluated
        .into_iter()
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .expect("plan space is never empty (the zero plan is feasible)");

    let denom = scens.expected_weighted_load(net);
    let (hardened_lines, hardened_dgs) = hardened_labels(net, &idx, &plan);
    Ok(SolveReport {
        engine: EngineTag::Oracle,
        objective,
        lower_bound: objective,
        upper_bound: objective,
        gap: 0.0,
        hardened_lines,
        hardened_dgs,
        worst_damage: damaged_labels(net, &idx, &worst_u),
        shedding_ratio: if denom > 0.0 { objective / denom } else { 0.0 },
        termination: Termination::Converged,
        wall_secs: start.elapsed().as_secs_f64(),
        iterations: Vec::new(),
        plan,
        worst_contingency: worst_u,
    })
}
