//! Third-stage recourse: for a fixed contingency u, solve one linear
//! load-shedding dispatch per stochastic scenario and aggregate by
//! probability.
//!
//! Every scenario LP is kept in an explicit standard form
//!
//! ```text
//!   min  c' y
//!   s.t. A y  = b_s            (duals: lambda, free)
//!        G y >= d_s + C u      (duals: vartheta >= 0)
//! ```
//!
//! with all decision variables free and every bound written as a row.
//! That makes the per-scenario dual polyhedron simply
//! `{A' lambda + G' vartheta = c, vartheta >= 0}` — independent of u and
//! of the scenario — which is exactly what the dualized subproblem and
//! the parametric cuts need. Each inequality row references at most one
//! component of u.

use rayon::prelude::*;

use crate::backend::{self, ModelHandle, ObjSense, DUALITY_TOL, FEAS_TOL};
use crate::model::{
    AlgorithmConfig, ContingencyScenario, Network, ScenarioSet, UncertaintyIndex,
};
use crate::{Error, Result};

/// Column layout of one scenario LP. All blocks are indexed `idx * T + t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    pub n_nodes: usize,
    pub horizon: usize,
    pub n_dgs: usize,
    pub n_ess: usize,
    pub n_lines: usize,
}

impl VarLayout {
    fn new(net: &Network) -> Self {
        VarLayout {
            n_nodes: net.nodes.len(),
            horizon: net.horizon,
            n_dgs: net.dgs.len(),
            n_ess: net.ess.len(),
            n_lines: net.lines.len(),
        }
    }

    /// Active load shed at node j, slot t (kW).
    pub fn shed_p(&self, j: usize, t: usize) -> usize {
        j * self.horizon + t
    }

    /// Reactive load shed (kvar).
    pub fn shed_q(&self, j: usize, t: usize) -> usize {
        (self.n_nodes + j) * self.horizon + t
    }

    /// Nodal voltage magnitude (p.u.).
    pub fn volt(&self, j: usize, t: usize) -> usize {
        (2 * self.n_nodes + j) * self.horizon + t
    }

    /// DG active output (kW).
    pub fn dg_p(&self, g: usize, t: usize) -> usize {
        (3 * self.n_nodes + g) * self.horizon + t
    }

    /// DG reactive output (kvar).
    pub fn dg_q(&self, g: usize, t: usize) -> usize {
        (3 * self.n_nodes + self.n_dgs + g) * self.horizon + t
    }

    /// ESS active discharge (kW).
    pub fn ess_p(&self, e: usize, t: usize) -> usize {
        (3 * self.n_nodes + 2 * self.n_dgs + e) * self.horizon + t
    }

    /// ESS reactive support (kvar).
    pub fn ess_q(&self, e: usize, t: usize) -> usize {
        (3 * self.n_nodes + 2 * self.n_dgs + self.n_ess + e) * self.horizon + t
    }

    /// Active flow on line l, oriented from -> to (kW).
    pub fn flow_p(&self, l: usize, t: usize) -> usize {
        (3 * self.n_nodes + 2 * self.n_dgs + 2 * self.n_ess + l) * self.horizon + t
    }

    /// Reactive flow (kvar).
    pub fn flow_q(&self, l: usize, t: usize) -> usize {
        (3 * self.n_nodes + 2 * self.n_dgs + 2 * self.n_ess + self.n_lines + l) * self.horizon + t
    }

    pub fn total(&self) -> usize {
        (3 * self.n_nodes + 2 * self.n_dgs + 2 * self.n_ess + 2 * self.n_lines) * self.horizon
    }
}

/// One row of the standard form. `rhs[s]` is the scenario-dependent
/// constant; for inequality rows the full right-hand side is
/// `rhs[s] + coeff * u[slot]` when `u_term = Some((slot, coeff))`.
#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: Vec<f64>,
    pub u_term: Option<(usize, f64)>,
}

/// The shared standard form: one coefficient structure, per-scenario
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct RecourseForm {
    pub layout: VarLayout,
    pub n_vars: usize,
    pub cost: Vec<f64>,
    /// Equality rows `A y = b_s`; never carry a u term.
    pub eq: Vec<Row>,
    /// Inequality rows `G y >= d_s + C u`.
    pub ineq: Vec<Row>,
}

impl RecourseForm {
    /// Right-hand side of inequality row `r` in scenario `s` at `u`.
    pub fn ineq_rhs(&self, s: usize, r: usize, u: &[f64]) -> f64 {
        let row = &self.ineq[r];
        row.rhs[s] + row.u_term.map_or(0.0, |(k, c)| c * u[k])
    }

    /// Dual objective `lambda' b_s + vartheta' (d_s + C u)`.
    pub fn dual_objective(&self, s: usize, lambda: &[f64], vartheta: &[f64], u: &[f64]) -> f64 {
        let eq_part: f64 = self
            .eq
            .iter()
            .zip(lambda)
            .map(|(row, &l)| l * row.rhs[s])
            .sum();
        let ineq_part: f64 = (0..self.ineq.len())
            .map(|r| vartheta[r] * self.ineq_rhs(s, r, u))
            .sum();
        eq_part + ineq_part
    }

    /// Largest violation of `A' lambda + G' vartheta = c`.
    pub fn dual_residual(&self, lambda: &[f64], vartheta: &[f64]) -> f64 {
        let mut acc = vec![0.0f64; self.n_vars];
        for (row, &l) in self.eq.iter().zip(lambda) {
            for &(v, a) in &row.coeffs {
                acc[v] += l * a;
            }
        }
        for (row, &th) in self.ineq.iter().zip(vartheta) {
            for &(v, g) in &row.coeffs {
                acc[v] += th * g;
            }
        }
        acc.iter()
            .zip(&self.cost)
            .map(|(got, want)| (got - want).abs())
            .fold(0.0, f64::max)
    }

    /// `C' theta`: the u-linear coefficients induced by an aggregated
    /// inequality dual vector, one entry per flat u slot.
    pub fn u_coefficients(&self, theta: &[f64], u_dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; u_dim];
        for (row, &th) in self.ineq.iter().zip(theta) {
            if let Some((k, c)) = row.u_term {
                out[k] += c * th;
            }
        }
        out
    }
}

/// Default disconnection constant for the voltage-drop rows: the widest
/// voltage spread plus the largest possible drop across one line.
pub fn default_m_volt(net: &Network) -> f64 {
    let spread = net.nodes.iter().map(|n| n.v_max).fold(f64::MIN, f64::max)
        - net.nodes.iter().map(|n| n.v_min).fold(f64::MAX, f64::min);
    let drop = net
        .lines
        .iter()
        .map(|l| (l.resistance * l.p_cap + l.reactance * l.q_cap) / net.base_voltage)
        .fold(0.0, f64::max);
    spread + drop
}

fn build_form(net: &Network, scens: &ScenarioSet, idx: &UncertaintyIndex, m_volt: f64) -> RecourseForm {
    let layout = VarLayout::new(net);
    let t_len = net.horizon;
    let n_s = scens.len();
    let u0 = net.base_voltage;

    // Flat u slot per line / DG index, if vulnerable.
    let mut line_slot = vec![None; net.lines.len()];
    for (pos, &l) in idx.lines.iter().enumerate() {
        line_slot[l] = Some(idx.line_slot(pos));
    }
    let mut dg_slot = vec![None; net.dgs.len()];
    for (pos, &g) in idx.dgs.iter().enumerate() {
        dg_slot[g] = Some(idx.dg_slot(pos));
    }

    let mut cost = vec![0.0; layout.total()];
    for (j, node) in net.nodes.iter().enumerate() {
        for t in 0..t_len {
            cost[layout.shed_p(j, t)] = node.weight;
        }
    }

    let mut eq: Vec<Row> = Vec::new();
    let mut ineq: Vec<Row> = Vec::new();
    let const_rhs = |v: f64| vec![v; n_s];

    // Power balance at every node and slot. Flow is oriented from -> to;
    // shedding relaxes the load that must be met.
    for j in 0..net.nodes.len() {
        for t in 0..t_len {
            let mut p = vec![(layout.shed_p(j, t), 1.0)];
            let mut q = vec![(layout.shed_q(j, t), 1.0)];
            for (g, dg) in net.dgs.iter().enumerate() {
                if dg.node == j {
                    p.push((layout.dg_p(g, t), 1.0));
                    q.push((layout.dg_q(g, t), 1.0));
                }
            }
            for (e, ess) in net.ess.iter().enumerate() {
                if ess.node == j {
                    p.push((layout.ess_p(e, t), 1.0));
                    q.push((layout.ess_q(e, t), 1.0));
                }
            }
            for (l, line) in net.lines.iter().enumerate() {
                if line.to == j {
                    p.push((layout.flow_p(l, t), 1.0));
                    q.push((layout.flow_q(l, t), 1.0));
                } else if line.from == j {
                    p.push((layout.flow_p(l, t), -1.0));
                    q.push((layout.flow_q(l, t), -1.0));
                }
            }
            let bp = scens.scenarios.iter().map(|s| s.loads_p[j][t]).collect();
            let bq = scens.scenarios.iter().map(|s| s.loads_q[j][t]).collect();
            eq.push(Row { coeffs: p, rhs: bp, u_term: None });
            eq.push(Row { coeffs: q, rhs: bq, u_term: None });
        }
    }

    // Substation voltage pinned to the base value.
    for t in 0..t_len {
        eq.push(Row {
            coeffs: vec![(layout.volt(net.substation, t), 1.0)],
            rhs: const_rhs(u0),
            u_term: None,
        });
    }

    // Voltage drop along every line. Intact (non-vulnerable) lines get a
    // hard equality; vulnerable lines get the two-sided disconnectable
    // form |U_i - U_j - (r P + x Q)/U0| <= m_volt (1 - omega).
    for (l, line) in net.lines.iter().enumerate() {
        for t in 0..t_len {
            let coeffs = vec![
                (layout.volt(line.from, t), 1.0),
                (layout.volt(line.to, t), -1.0),
                (layout.flow_p(l, t), -line.resistance / u0),
                (layout.flow_q(l, t), -line.reactance / u0),
            ];
            match line_slot[l] {
                None => eq.push(Row { coeffs, rhs: const_rhs(0.0), u_term: None }),
                Some(k) => {
                    let neg: Vec<_> = coeffs.iter().map(|&(v, c)| (v, -c)).collect();
                    ineq.push(Row {
                        coeffs,
                        rhs: const_rhs(-m_volt),
                        u_term: Some((k, m_volt)),
                    });
                    ineq.push(Row {
                        coeffs: neg,
                        rhs: const_rhs(-m_volt),
                        u_term: Some((k, m_volt)),
                    });
                }
            }
        }
    }

    // Shedding is bounded by the load actually present.
    for j in 0..net.nodes.len() {
        for t in 0..t_len {
            ineq.push(Row {
                coeffs: vec![(layout.shed_p(j, t), 1.0)],
                rhs: const_rhs(0.0),
                u_term: None,
            });
            ineq.push(Row {
                coeffs: vec![(layout.shed_p(j, t), -1.0)],
                rhs: scens.scenarios.iter().map(|s| -s.loads_p[j][t]).collect(),
                u_term: None,
            });
            ineq.push(Row {
                coeffs: vec![(layout.shed_q(j, t), 1.0)],
                rhs: const_rhs(0.0),
                u_term: None,
            });
            ineq.push(Row {
                coeffs: vec![(layout.shed_q(j, t), -1.0)],
                rhs: scens.scenarios.iter().map(|s| -s.loads_q[j][t]).collect(),
                u_term: None,
            });
            // Voltage band.
            ineq.push(Row {
                coeffs: vec![(layout.volt(j, t), 1.0)],
                rhs: const_rhs(net.nodes[j].v_min),
                u_term: None,
            });
            ineq.push(Row {
                coeffs: vec![(layout.volt(j, t), -1.0)],
                rhs: const_rhs(-net.nodes[j].v_max),
                u_term: None,
            });
        }
    }

    // DG capability, scaled by nu for the vulnerable units. A damaged
    // unit (nu = 0) is forced to zero output in both coordinates.
    for (g, dg) in net.dgs.iter().enumerate() {
        let q_min = dg.g_max * dg.theta_min.tan();
        let q_max = dg.g_max * dg.theta_max.tan();
        // rows: y >= lo * nu  and  -y >= -hi * nu.
        let scaled = |slot: Option<usize>, c: f64| slot.filter(|_| c != 0.0).map(|k| (k, c));
        for t in 0..t_len {
            match dg_slot[g] {
                Some(_) => {
                    ineq.push(Row {
                        coeffs: vec![(layout.dg_p(g, t), 1.0)],
                        rhs: const_rhs(0.0),
                        u_term: scaled(dg_slot[g], dg.g_min),
                    });
                    ineq.push(Row {
                        coeffs: vec![(layout.dg_p(g, t), -1.0)],
                        rhs: const_rhs(0.0),
                        u_term: scaled(dg_slot[g], -dg.g_max),
                    });
                    ineq.push(Row {
                        coeffs: vec![(layout.dg_q(g, t), 1.0)],
                        rhs: const_rhs(0.0),
                        u_term: scaled(dg_slot[g], q_min),
                    });
                    ineq.push(Row {
                        coeffs: vec![(layout.dg_q(g, t), -1.0)],
                        rhs: const_rhs(0.0),
                        u_term: scaled(dg_slot[g], -q_max),
                    });
                }
                None => {
                    ineq.push(Row {
                        coeffs: vec![(layout.dg_p(g, t), 1.0)],
                        rhs: const_rhs(dg.g_min),
                        u_term: None,
                    });
                    ineq.push(Row {
                        coeffs: vec![(layout.dg_p(g, t), -1.0)],
                        rhs: const_rhs(-dg.g_max),
                        u_term: None,
                    });
                    ineq.push(Row {
                        coeffs: vec![(layout.dg_q(g, t), 1.0)],
                        rhs: const_rhs(q_min),
                        u_term: None,
                    });
                    ineq.push(Row {
                        coeffs: vec![(layout.dg_q(g, t), -1.0)],
                        rhs: const_rhs(-q_max),
                        u_term: None,
                    });
                }
            }
        }
    }

    // ESS: discharge-only power box plus a prefix energy budget so the
    // unit cannot spend more than its initial charge by any slot.
    for (e, ess) in net.ess.iter().enumerate() {
        for t in 0..t_len {
            ineq.push(Row {
                coeffs: vec![(layout.ess_p(e, t), 1.0)],
                rhs: const_rhs(0.0),
                u_term: None,
            });
            ineq.push(Row {
                coeffs: vec![(layout.ess_p(e, t), -1.0)],
                rhs: const_rhs(-ess.p_cap),
                u_term: None,
            });
            ineq.push(Row {
                coeffs: vec![(layout.ess_q(e, t), 1.0)],
                rhs: const_rhs(0.0),
                u_term: None,
            });
            ineq.push(Row {
                coeffs: vec![(layout.ess_q(e, t), -1.0)],
                rhs: const_rhs(-ess.q_cap),
                u_term: None,
            });
        }
        for tau in 0..t_len {
            ineq.push(Row {
                coeffs: (0..=tau)
                    .map(|t| (layout.ess_p(e, t), -1.0 / ess.eta_dis))
                    .collect(),
                rhs: scens.scenarios.iter().map(|s| -s.ess_initial[e]).collect(),
                u_term: None,
            });
        }
    }

    // Flow caps, scaled by omega for the vulnerable lines.
    for (l, line) in net.lines.iter().enumerate() {
        for t in 0..t_len {
            for (var, cap) in [
                (layout.flow_p(l, t), line.p_cap),
                (layout.flow_q(l, t), line.q_cap),
            ] {
                match line_slot[l] {
                    Some(k) if cap != 0.0 => {
                        ineq.push(Row {
                            coeffs: vec![(var, 1.0)],
                            rhs: const_rhs(0.0),
                            u_term: Some((k, -cap)),
                        });
                        ineq.push(Row {
                            coeffs: vec![(var, -1.0)],
                            rhs: const_rhs(0.0),
                            u_term: Some((k, -cap)),
                        });
                    }
                    _ => {
                        ineq.push(Row {
                            coeffs: vec![(var, 1.0)],
                            rhs: const_rhs(-cap),
                            u_term: None,
                        });
                        ineq.push(Row {
                            coeffs: vec![(var, -1.0)],
                            rhs: const_rhs(-cap),
                            u_term: None,
                        });
                    }
                }
            }
        }
    }

    RecourseForm {
        layout,
        n_vars: cost.len(),
        cost,
        eq,
        ineq,
    }
}

/// Expected-dispatch result for one contingency.
#[derive(Debug, Clone)]
pub struct RecourseSolution {
    /// Unweighted weighted-shedding cost per scenario (rho' shed).
    pub scenario_costs: Vec<f64>,
    /// Probability-weighted expected cost.
    pub expected_cost: f64,
    /// Active shed, `[scenario][node][t]`, kW.
    pub shed_p: Vec<Vec<Vec<f64>>>,
    /// Expected weighted shed over expected weighted load, in [0, 1].
    pub shedding_ratio: f64,
}

/// The optimal dual multipliers backing a [`RecourseSolution`], already
/// audited against the primal.
#[derive(Debug, Clone)]
pub struct DualPoint {
    /// Equality duals per scenario.
    pub lambda: Vec<Vec<f64>>,
    /// Inequality duals per scenario (componentwise >= 0).
    pub vartheta: Vec<Vec<f64>>,
    /// Probability-weighted aggregate of `vartheta`.
    pub theta: Vec<f64>,
    /// `C' theta`: coefficient of each u component in the aggregated
    /// dual objective.
    pub anchor: Vec<f64>,
}

/// Recourse evaluator bound to one network and scenario set.
pub struct Recourse {
    pub net: Network,
    pub scens: ScenarioSet,
    pub idx: UncertaintyIndex,
    pub form: RecourseForm,
    pub m_volt: f64,
}

fn flat_f64(u: &ContingencyScenario) -> Vec<f64> {
    u.flat().iter().map(|&w| if w { 1.0 } else { 0.0 }).collect()
}

impl Recourse {
    pub fn new(net: &Network, scens: &ScenarioSet, cfg: &AlgorithmConfig) -> Self {
        let idx = net.u_index();
        let m_volt = cfg.m_volt.unwrap_or_else(|| default_m_volt(net));
        let form = build_form(net, scens, &idx, m_volt);
        Recourse {
            net: net.clone(),
            scens: scens.clone(),
            idx,
            form,
            m_volt,
        }
    }

    /// Builds the scenario-s LP at a fixed u (flat, 1.0 = intact).
    pub fn build_lp(&self, s: usize, u: &[f64]) -> ModelHandle {
        let mut m = ModelHandle::new(ObjSense::Minimize);
        for &c in &self.form.cost {
            m.add_free_col(c);
        }
        for row in &self.form.eq {
            let coeffs = row.coeffs.iter().map(|&(v, c)| (backend::VarId(v), c)).collect();
            m.add_eq(row.rhs[s], coeffs);
        }
        for (r, row) in self.form.ineq.iter().enumerate() {
            let coeffs = row.coeffs.iter().map(|&(v, c)| (backend::VarId(v), c)).collect();
            m.add_ge(self.form.ineq_rhs(s, r, u), coeffs);
        }
        m
    }

    /// Solves all scenario LPs at u, audits the duals, and aggregates.
    pub fn solve_expected(&self, u: &ContingencyScenario) -> Result<(RecourseSolution, DualPoint)> {
        self.solve_flat(&flat_f64(u))
    }

    /// As [`solve_expected`](Self::solve_expected) but on the flat u
    /// vector directly (values in [0, 1]; engines only pass binaries).
    pub fn solve_flat(&self, u: &[f64]) -> Result<(RecourseSolution, DualPoint)> {
        assert_eq!(u.len(), self.idx.dim(), "u dimension mismatch");
        let n_eq = self.form.eq.len();
        let layout = self.form.layout;

        let per: Vec<Result<_>> = (0..self.scens.len())
            .into_par_iter()
            .map(|s| {
                let m = self.build_lp(s, u);
                let sol = backend::solve_lp(&m)?;
                if !sol.is_optimal() {
                    return Err(Error::ScenarioSolve { scenario: s, status: sol.status });
                }
                let duals = sol.duals.as_ref().expect("LP solve always returns duals");
                let lambda = duals[..n_eq].to_vec();
                let mut vartheta = duals[n_eq..].to_vec();
                for th in &mut vartheta {
                    if *th < -FEAS_TOL {
                        return Err(Error::DualAudit(format!(
                            "scenario {s}: negative inequality dual {th}"
                        )));
                    }
                    *th = th.max(0.0);
                }
                let scale = sol.objective.abs().max(1.0);
                let dual_obj = self.form.dual_objective(s, &lambda, &vartheta, u);
                if (dual_obj - sol.objective).abs() > DUALITY_TOL * scale {
                    return Err(Error::DualAudit(format!(
                        "scenario {s}: duality gap {} vs {}",
                        dual_obj, sol.objective
                    )));
                }
                let resid = self.form.dual_residual(&lambda, &vartheta);
                if resid > DUALITY_TOL {
                    return Err(Error::DualAudit(format!(
                        "scenario {s}: dual feasibility residual {resid}"
                    )));
                }
                let shed: Vec<Vec<f64>> = (0..layout.n_nodes)
                    .map(|j| (0..layout.horizon).map(|t| sol.value(backend::VarId(layout.shed_p(j, t)))).collect())
                    .collect();
                Ok((sol.objective, shed, lambda, vartheta))
            })
            .collect();

        let mut scenario_costs = Vec::new();
        let mut shed_p = Vec::new();
        let mut lambda = Vec::new();
        let mut vartheta = Vec::new();
        for r in per {
            let (obj, shed, l, th) = r?;
            scenario_costs.push(obj);
            shed_p.push(shed);
            lambda.push(l);
            vartheta.push(th);
        }

        let probs: Vec<f64> = self.scens.scenarios.iter().map(|s| s.probability).collect();
        let expected_cost: f64 = scenario_costs.iter().zip(&probs).map(|(c, p)| c * p).sum();
        let mut theta = vec![0.0; self.form.ineq.len()];
        for (th, &p) in vartheta.iter().zip(&probs) {
            for (acc, &v) in theta.iter_mut().zip(th) {
                *acc += p * v;
            }
        }
        let anchor = self.form.u_coefficients(&theta, self.idx.dim());

        let denom = self.scens.expected_weighted_load(&self.net);
        let shedding_ratio = if denom > 0.0 { expected_cost / denom } else { 0.0 };

        Ok((
            RecourseSolution {
                scenario_costs,
                expected_cost,
                shed_p,
                shedding_ratio,
            },
            DualPoint { lambda, vartheta, theta, anchor },
        ))
    }

    /// Expected cost only.
    pub fn expected_cost(&self, u: &ContingencyScenario) -> Result<f64> {
        Ok(self.solve_expected(u)?.0.expected_cost)
    }

    /// Resilience importance index per u component: the expected-cost
    /// increase when that single component alone is damaged.
    pub fn resilience_indices(&self) -> Result<Vec<f64>> {
        let dim = self.idx.dim();
        let base = self.solve_flat(&vec![1.0; dim])?.0.expected_cost;
        (0..dim)
            .into_par_iter()
            .map(|k| {
                let mut u = vec![1.0; dim];
                u[k] = 0.0;
                Ok((self.solve_flat(&u)?.0.expected_cost - base).max(0.0))
            })
            .collect()
    }
}

impl RecourseSolution {
    /// Small fixed-width table: one line per scenario plus the summary.
    pub fn table(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:>14} {:>14}", "scenario", "cost", "shed_kw");
        for (s, cost) in self.scenario_costs.iter().enumerate() {
            let total: f64 = self.shed_p[s].iter().flatten().sum();
            let _ = writeln!(out, "{:<10} {:>14.4} {:>14.4}", s, cost, total);
        }
        let _ = writeln!(
            out,
            "expected cost {:.4}, shedding ratio {:.4}%",
            self.expected_cost,
            100.0 * self.shedding_ratio
        );
        out
    }
}
