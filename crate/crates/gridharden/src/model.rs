//! Problem data shared by every engine: radial network description,
//! stochastic scenarios, hardening/contingency vectors, and configuration.
//!
//! All types here are immutable after construction; validation and
//! enumeration are pure functions.

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("decision index sets do not match the network's vulnerable sets: {0}")]
    IndexMismatch(String),
    #[error("enumeration cap exceeded: {count} scenarios > cap {cap}")]
    EnumerationCap { count: u128, cap: u128 },
}

/// A node of the distribution network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    /// Load priority weight rho_j (>= 0).
    pub weight: f64,
    /// Voltage bounds in p.u.
    pub v_min: f64,
    pub v_max: f64,
}

/// A distribution line. `resistance`/`reactance` are normalized so that
/// `(r * P_kw + x * Q_kvar) / base_voltage` is a voltage drop in p.u.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub resistance: f64,
    pub reactance: f64,
    /// Active flow cap, kW.
    pub p_cap: f64,
    /// Reactive flow cap, kvar.
    pub q_cap: f64,
    pub hardening_cost: f64,
    pub vulnerable: bool,
}

/// A distributed generator (the substation import is modeled as a DG at
/// the root with its own caps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dg {
    pub node: usize,
    /// Active output bounds, kW.
    pub g_max: f64,
    pub g_min: f64,
    /// Power-factor angle bounds, rad. Reactive output ranges over
    /// `[g_max * tan(theta_min), g_max * tan(theta_max)]`.
    pub theta_min: f64,
    pub theta_max: f64,
    pub hardening_cost: f64,
    pub vulnerable: bool,
}

/// An energy storage unit. Discharge only during restoration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ess {
    pub node: usize,
    /// Discharge power ratings, kW / kvar.
    pub p_cap: f64,
    pub q_cap: f64,
    /// Discharge efficiency in (0, 1].
    pub eta_dis: f64,
    /// Nominal energy capacity, kWh.
    pub capacity: f64,
}

/// Immutable radial grid description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub nodes: Vec<Node>,
    pub substation: usize,
    pub lines: Vec<Line>,
    pub dgs: Vec<Dg>,
    pub ess: Vec<Ess>,
    /// Base voltage U0, p.u.
    pub base_voltage: f64,
    /// Number of time slots; slot duration is one hour, so kW sums
    /// directly into kWh in the storage energy budget.
    pub horizon: usize,
}

/// Positions of the vulnerable components inside the network's line/DG
/// lists. The uncertainty vector `u = (omega, nu)` is laid out as all
/// vulnerable lines first, then all vulnerable DGs; components outside
/// the vulnerable sets carry no uncertainty variables at all.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyIndex {
    pub lines: Vec<usize>,
    pub dgs: Vec<usize>,
}

impl UncertaintyIndex {
    pub fn dim(&self) -> usize {
        self.lines.len() + self.dgs.len()
    }

    /// Flat u-index of a vulnerable line (by position in `self.lines`).
    pub fn line_slot(&self, pos: usize) -> usize {
        pos
    }

    /// Flat u-index of a vulnerable DG (by position in `self.dgs`).
    pub fn dg_slot(&self, pos: usize) -> usize {
        self.lines.len() + pos
    }
}

impl Network {
    pub fn u_index(&self) -> UncertaintyIndex {
        UncertaintyIndex {
            lines: (0..self.lines.len()).filter(|&i| self.lines[i].vulnerable).collect(),
            dgs: (0..self.dgs.len()).filter(|&i| self.dgs[i].vulnerable).collect(),
        }
    }

    pub fn line_label(&self, line: usize) -> String {
        let l = &self.lines[line];
        format!("L{}-{}", self.nodes[l.from].name, self.nodes[l.to].name)
    }

    pub fn dg_label(&self, dg: usize) -> String {
        format!("DG{}", dg + 1)
    }

    pub fn ess_label(&self, e: usize) -> String {
        format!("ESS{}", e + 1)
    }

    /// Label of the u-component at flat index `k`.
    pub fn u_label(&self, idx: &UncertaintyIndex, k: usize) -> String {
        if k < idx.lines.len() {
            self.line_label(idx.lines[k])
        } else {
            self.dg_label(idx.dgs[k - idx.lines.len()])
        }
    }
}

/// One stochastic scenario: load profiles and initial storage levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub probability: f64,
    /// Active loads, kW, indexed `[node][t]`.
    pub loads_p: Vec<Vec<f64>>,
    /// Reactive loads, kvar, indexed `[node][t]`.
    pub loads_q: Vec<Vec<f64>>,
    /// Initial storage, kWh, aligned with `Network::ess`.
    pub ess_initial: Vec<f64>,
}

/// Finite stochastic support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    /// Expected weighted total load, the denominator of the shedding ratio.
    pub fn expected_weighted_load(&self, net: &Network) -> f64 {
        self.scenarios
            .iter()
            .map(|s| {
                s.probability
                    * s.loads_p
                        .iter()
                        .enumerate()
                        .map(|(j, per_t)| net.nodes[j].weight * per_t.iter().sum::<f64>())
                        .sum::<f64>()
            })
            .sum()
    }
}

/// First-stage hardening plan x = (z, r), aligned with
/// [`UncertaintyIndex`]: `lines[p]` hardens the p-th vulnerable line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HardeningDecision {
    pub lines: Vec<bool>,
    pub dgs: Vec<bool>,
}

impl HardeningDecision {
    pub fn none(idx: &UncertaintyIndex) -> Self {
        HardeningDecision {
            lines: vec![false; idx.lines.len()],
            dgs: vec![false; idx.dgs.len()],
        }
    }

    pub fn all(idx: &UncertaintyIndex) -> Self {
        HardeningDecision {
            lines: vec![true; idx.lines.len()],
            dgs: vec![true; idx.dgs.len()],
        }
    }

    pub fn count(&self) -> usize {
        self.lines.iter().filter(|&&b| b).count() + self.dgs.iter().filter(|&&b| b).count()
    }

    /// Flat 0/1 view in u-index order.
    pub fn flat(&self) -> Vec<bool> {
        self.lines.iter().chain(self.dgs.iter()).copied().collect()
    }

    pub fn cost(&self, net: &Network, idx: &UncertaintyIndex) -> f64 {
        let line_cost: f64 = idx
            .lines
            .iter()
            .zip(&self.lines)
            .filter(|(_, &z)| z)
            .map(|(&l, _)| net.lines[l].hardening_cost)
            .sum();
        let dg_cost: f64 = idx
            .dgs
            .iter()
            .zip(&self.dgs)
            .filter(|(_, &r)| r)
            .map(|(&g, _)| net.dgs[g].hardening_cost)
            .sum();
        line_cost + dg_cost
    }
}

/// A contingency realization u = (omega, nu); `true` = intact,
/// `false` = damaged. Components outside the vulnerable sets are
/// implicitly intact.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContingencyScenario {
    pub lines_intact: Vec<bool>,
    pub dgs_intact: Vec<bool>,
}

impl ContingencyScenario {
    pub fn all_intact(idx: &UncertaintyIndex) -> Self {
        ContingencyScenario {
            lines_intact: vec![true; idx.lines.len()],
            dgs_intact: vec![true; idx.dgs.len()],
        }
    }

    pub fn damaged_lines(&self) -> usize {
        self.lines_intact.iter().filter(|&&w| !w).count()
    }

    pub fn damaged_dgs(&self) -> usize {
        self.dgs_intact.iter().filter(|&&v| !v).count()
    }

    /// Flat 0/1 view in u-index order (`true` = intact).
    pub fn flat(&self) -> Vec<bool> {
        self.lines_intact.iter().chain(self.dgs_intact.iter()).copied().collect()
    }

    pub fn from_flat(idx: &UncertaintyIndex, flat: &[bool]) -> Self {
        assert_eq!(flat.len(), idx.dim());
        ContingencyScenario {
            lines_intact: flat[..idx.lines.len()].to_vec(),
            dgs_intact: flat[idx.lines.len()..].to_vec(),
        }
    }

    /// True when the damage set of `self` contains that of `other`.
    pub fn dominates(&self, other: &ContingencyScenario) -> bool {
        self.lines_intact
            .iter()
            .zip(&other.lines_intact)
            .all(|(&a, &b)| !a || b)
            && self.dgs_intact.iter().zip(&other.dgs_intact).all(|(&a, &b)| !a || b)
    }
}

/// Hardening budget: the cost form or the plain cardinality cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "lowercase")]
pub enum Budget {
    Cost(f64),
    Cardinality(u32),
}

/// Shape of the decision-dependent contingency set U(x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DduConfig {
    /// N-k limit on simultaneously damaged lines.
    pub k_lines: usize,
    /// N-k limit on simultaneously damaged DGs.
    pub k_dgs: usize,
    pub budget: Budget,
}

/// Algorithm-level knobs shared by every engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    /// Relative gap tolerance for the outer loop.
    pub gap_tol: f64,
    pub max_iters: usize,
    /// Bound on dual magnitudes in the dualized subproblem; doubled on
    /// audit failure.
    pub m_dual: f64,
    /// Floor for the complementarity big-M in the KKT cut blocks.
    pub m_comp: f64,
    /// Voltage-drop disconnection constant; computed from the network
    /// data when absent.
    pub m_volt: Option<f64>,
    /// Resilience-index tie-breaking in the subproblem.
    pub enhancement: bool,
    /// Perturbation weight (negative); computed from the indices when
    /// absent.
    pub enh_weight: Option<f64>,
    pub seed: u64,
    /// 0 = solver default; engines always solve single-threaded per
    /// model, this fans out scenario LPs.
    pub threads: usize,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        AlgorithmConfig {
            gap_tol: 1e-4,
            max_iters: 200,
            m_dual: 1e3,
            m_comp: 100.0,
            m_volt: None,
            enhancement: false,
            enh_weight: None,
            seed: 0,
            threads: 0,
        }
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Checks every structural invariant of the network; returns one message
/// per violation (empty = valid). Total function, never errors.
pub fn validate_network(net: &Network) -> Vec<String> {
    let mut v = Vec::new();
    let n = net.nodes.len();
    if n == 0 {
        v.push("network has no nodes".into());
        return v;
    }
    if net.substation >= n {
        v.push(format!("substation index {} out of range", net.substation));
        return v;
    }
    if net.horizon == 0 {
        v.push("horizon must have at least one time slot".into());
    }
    if net.base_voltage <= 0.0 {
        v.push("base voltage must be positive".into());
    }

    for (i, node) in net.nodes.iter().enumerate() {
        if node.weight < 0.0 {
            v.push(format!("node {}: negative priority weight", node.name));
        }
        if node.v_min > node.v_max {
            v.push(format!("node {}: v_min > v_max", node.name));
        }
        if net.nodes.iter().take(i).any(|m| m.name == node.name) {
            v.push(format!("duplicate node name {}", node.name));
        }
    }

    if net.lines.len() != n - 1 {
        v.push(format!(
            "not a tree: {} lines for {} nodes (expected {})",
            net.lines.len(),
            n,
            n - 1
        ));
    }
    let mut adj = vec![Vec::new(); n];
    for (i, l) in net.lines.iter().enumerate() {
        if l.from >= n || l.to >= n {
            v.push(format!("line {} references an unknown node", i));
            continue;
        }
        adj[l.from].push(l.to);
        adj[l.to].push(l.from);
        if l.p_cap < 0.0 || l.q_cap < 0.0 {
            v.push(format!("line {}: negative flow cap", net.line_label(i)));
        }
        if l.resistance < 0.0 || l.reactance < 0.0 {
            v.push(format!("line {}: negative impedance", net.line_label(i)));
        }
        if l.hardening_cost < 0.0 {
            v.push(format!("line {}: negative hardening cost", net.line_label(i)));
        }
    }
    // Connectivity from the substation.
    let mut seen = vec![false; n];
    let mut stack = vec![net.substation];
    seen[net.substation] = true;
    while let Some(j) = stack.pop() {
        for &k in &adj[j] {
            if !seen[k] {
                seen[k] = true;
                stack.push(k);
            }
        }
    }
    if net.lines.len() == n - 1 && seen.iter().any(|&s| !s) {
        v.push("not a tree: network is disconnected from the substation".into());
    }

    for (g, dg) in net.dgs.iter().enumerate() {
        if dg.node >= n {
            v.push(format!("{} references an unknown node", net.dg_label(g)));
        }
        if dg.g_min > dg.g_max {
            v.push(format!("{}: g_min > g_max", net.dg_label(g)));
        }
        if dg.g_max < 0.0 {
            v.push(format!("{}: negative output cap", net.dg_label(g)));
        }
        if dg.theta_min > dg.theta_max {
            v.push(format!("{}: theta_min > theta_max", net.dg_label(g)));
        }
        if dg.hardening_cost < 0.0 {
            v.push(format!("{}: negative hardening cost", net.dg_label(g)));
        }
    }
    for (e, ess) in net.ess.iter().enumerate() {
        if ess.node >= n {
            v.push(format!("{} references an unknown node", net.ess_label(e)));
        }
        if ess.p_cap < 0.0 || ess.q_cap < 0.0 {
            v.push(format!("{}: negative power rating", net.ess_label(e)));
        }
        if !(ess.eta_dis > 0.0 && ess.eta_dis <= 1.0) {
            v.push(format!("{}: discharge efficiency outside (0, 1]", net.ess_label(e)));
        }
        if ess.capacity < 0.0 {
            v.push(format!("{}: negative capacity", net.ess_label(e)));
        }
    }
    v
}

/// Scenario-set invariants: probabilities sum to one, nonnegative data,
/// storage within nominal capacity. Probabilities are rejected, never
/// silently rescaled.
pub fn validate_scenarios(net: &Network, set: &ScenarioSet) -> Vec<String> {
    let mut v = Vec::new();
    if set.is_empty() {
        v.push("scenario set is empty".into());
        return v;
    }
    let total: f64 = set.scenarios.iter().map(|s| s.probability).sum();
    if (total - 1.0).abs() > 1e-9 {
        v.push(format!("scenario probabilities sum to {}, not 1", total));
    }
    for (s, sc) in set.scenarios.iter().enumerate() {
        if sc.probability <= 0.0 {
            v.push(format!("scenario {}: nonpositive probability", s));
        }
        for (which, loads) in [("active", &sc.loads_p), ("reactive", &sc.loads_q)] {
            if loads.len() != net.nodes.len() {
                v.push(format!("scenario {}: {} loads for {} nodes", s, which, net.nodes.len()));
                continue;
            }
            for (j, per_t) in loads.iter().enumerate() {
                if per_t.len() != net.horizon {
                    v.push(format!(
                        "scenario {}: node {} has {} {} load entries, horizon is {}",
                        s,
                        net.nodes[j].name,
                        per_t.len(),
                        which,
                        net.horizon
                    ));
                }
                if per_t.iter().any(|&x| x < 0.0) {
                    v.push(format!("scenario {}: negative {} load at {}", s, which, net.nodes[j].name));
                }
            }
        }
        if sc.ess_initial.len() != net.ess.len() {
            v.push(format!("scenario {}: {} storage levels for {} ESS units", s, sc.ess_initial.len(), net.ess.len()));
        } else {
            for (e, &e0) in sc.ess_initial.iter().enumerate() {
                if e0 < 0.0 {
                    v.push(format!("scenario {}: negative initial storage at {}", s, net.ess_label(e)));
                }
                if e0 > net.ess[e].capacity + 1e-9 {
                    v.push(format!(
                        "scenario {}: initial storage {} exceeds capacity of {}",
                        s,
                        e0,
                        net.ess_label(e)
                    ));
                }
            }
        }
    }
    v
}

// ---------------------------------------------------------------------------
// Budget and membership
// ---------------------------------------------------------------------------

fn check_dims(
    lines: usize,
    dgs: usize,
    idx: &UncertaintyIndex,
    what: &str,
) -> Result<(), ModelError> {
    if lines != idx.lines.len() || dgs != idx.dgs.len() {
        return Err(ModelError::IndexMismatch(format!(
            "{} has {}+{} entries, vulnerable sets have {}+{}",
            what,
            lines,
            dgs,
            idx.lines.len(),
            idx.dgs.len()
        )));
    }
    Ok(())
}

/// True iff the hardening plan fits the budget.
pub fn check_budget(
    x: &HardeningDecision,
    cfg: &DduConfig,
    net: &Network,
) -> Result<bool, ModelError> {
    let idx = net.u_index();
    check_dims(x.lines.len(), x.dgs.len(), &idx, "hardening decision")?;
    Ok(match cfg.budget {
        Budget::Cost(b) => x.cost(net, &idx) <= b + 1e-9,
        Budget::Cardinality(cap) => x.count() <= cap as usize,
    })
}

/// True iff `u` belongs to U(x): N-k cardinality limits hold and no
/// hardened component is damaged.
pub fn membership(u: &ContingencyScenario, x: &HardeningDecision, cfg: &DduConfig) -> bool {
    assert_eq!(u.lines_intact.len(), x.lines.len(), "index sets must match");
    assert_eq!(u.dgs_intact.len(), x.dgs.len(), "index sets must match");
    u.damaged_lines() <= cfg.k_lines
        && u.damaged_dgs() <= cfg.k_dgs
        && u.lines_intact.iter().zip(&x.lines).all(|(&w, &z)| w || !z)
        && u.dgs_intact.iter().zip(&x.dgs).all(|(&v, &r)| v || !r)
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn count_upto(free: usize, k: usize) -> u128 {
    (0..=k.min(free)).map(|i| binomial(free as u128, i as u128)).sum()
}

/// |U(x)| for the given hardening plan.
pub fn count_uncertainty(x: &HardeningDecision, cfg: &DduConfig) -> u128 {
    let free_lines = x.lines.iter().filter(|&&z| !z).count();
    let free_dgs = x.dgs.iter().filter(|&&r| !r).count();
    count_upto(free_lines, cfg.k_lines) * count_upto(free_dgs, cfg.k_dgs)
}

/// Yields every element of U(x) exactly once, all damage cardinalities
/// from zero up to (k_lines, k_dgs). Refuses when |U(x)| exceeds `cap`.
pub fn enumerate_uncertainty(
    x: &HardeningDecision,
    cfg: &DduConfig,
    cap: u128,
) -> Result<impl Iterator<Item = ContingencyScenario>, ModelError> {
    let count = count_uncertainty(x, cfg);
    if count > cap {
        return Err(ModelError::EnumerationCap { count, cap });
    }
    let free_lines: Vec<usize> =
        (0..x.lines.len()).filter(|&i| !x.lines[i]).collect();
    let free_dgs: Vec<usize> = (0..x.dgs.len()).filter(|&i| !x.dgs[i]).collect();
    let n_lines = x.lines.len();
    let n_dgs = x.dgs.len();

    let line_sets: Vec<Vec<usize>> = (0..=cfg.k_lines.min(free_lines.len()))
        .flat_map(|k| free_lines.iter().copied().combinations(k))
        .collect();
    let dg_sets: Vec<Vec<usize>> = (0..=cfg.k_dgs.min(free_dgs.len()))
        .flat_map(|k| free_dgs.iter().copied().combinations(k))
        .collect();

    Ok(line_sets.into_iter().flat_map(move |ls| {
        let dg_sets = dg_sets.clone();
        dg_sets.into_iter().map(move |ds| {
            let mut lines_intact = vec![true; n_lines];
            for &i in &ls {
                lines_intact[i] = false;
            }
            let mut dgs_intact = vec![true; n_dgs];
            for &i in &ds {
                dgs_intact[i] = false;
            }
            ContingencyScenario { lines_intact, dgs_intact }
        })
    }))
}

/// |X| under the budget (exact for cardinality mode; for cost mode an
/// exhaustive count, aborted once `cap` is exceeded).
pub fn count_hardenings(cfg: &DduConfig, net: &Network, cap: u128) -> u128 {
    let idx = net.u_index();
    match cfg.budget {
        Budget::Cardinality(u) => count_upto(idx.dim(), u as usize).min(cap + 1),
        Budget::Cost(_) => {
            let mut n: u128 = 0;
            for x in enumerate_hardenings_unchecked(cfg, net) {
                let _ = x;
                n += 1;
                if n > cap {
                    break;
                }
            }
            n
        }
    }
}

/// Yields every budget-feasible hardening plan. The caller is
/// responsible for capping |X| (see [`count_hardenings`]).
pub fn enumerate_hardenings_unchecked<'a>(
    cfg: &'a DduConfig,
    net: &'a Network,
) -> impl Iterator<Item = HardeningDecision> + 'a {
    let idx = net.u_index();
    let m = idx.dim();
    let n_lines = idx.lines.len();
    let max_card = match cfg.budget {
        Budget::Cardinality(u) => (u as usize).min(m),
        Budget::Cost(_) => m,
    };
    (0..=max_card)
        .flat_map(move |k| (0..m).combinations(k))
        .map(move |set| {
            let mut flat = vec![false; m];
            for &i in &set {
                flat[i] = true;
            }
            HardeningDecision {
                lines: flat[..n_lines].to_vec(),
                dgs: flat[n_lines..].to_vec(),
            }
        })
        .filter(move |x| check_budget(x, cfg, net).unwrap_or(false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn tiny_cfg(k_lines: usize, k_dgs: usize, cap: u32) -> DduConfig {
        DduConfig { k_lines, k_dgs, budget: Budget::Cardinality(cap) }
    }

    #[test]
    fn desk_case_validates() {
        let case = fixtures::desk6_case();
        assert!(validate_network(&case.network).is_empty());
        assert!(validate_scenarios(&case.network, &case.scenarios).is_empty());
    }

    #[test]
    fn cycle_is_flagged() {
        let mut net = fixtures::desk6_case().network;
        let extra = Line { from: 0, to: 3, ..net.lines[0].clone() };
        net.lines.push(extra);
        let v = validate_network(&net);
        assert!(v.iter().any(|m| m.contains("not a tree")), "{:?}", v);
    }

    #[test]
    fn negative_cap_is_flagged() {
        let mut net = fixtures::desk6_case().network;
        net.lines[2].p_cap = -5.0;
        let v = validate_network(&net);
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("negative flow cap"));
    }

    #[test]
    fn budget_modes() {
        let net = fixtures::desk6_case().network;
        let idx = net.u_index();
        let zero = HardeningDecision::none(&idx);
        assert!(check_budget(&zero, &tiny_cfg(2, 1, 0), &net).unwrap());

        let mut three = HardeningDecision::none(&idx);
        for i in 0..3 {
            three.lines[i] = true;
        }
        assert!(!check_budget(&three, &tiny_cfg(2, 1, 2), &net).unwrap());

        // Cost mode: budget exactly the cost of line A is feasible.
        let cost_a = net.lines[idx.lines[0]].hardening_cost;
        let cfg = DduConfig { k_lines: 2, k_dgs: 1, budget: Budget::Cost(cost_a) };
        let mut only_a = HardeningDecision::none(&idx);
        only_a.lines[0] = true;
        assert!(check_budget(&only_a, &cfg, &net).unwrap());
    }

    #[test]
    fn budget_index_mismatch_errors() {
        let net = fixtures::desk6_case().network;
        let bad = HardeningDecision { lines: vec![false; 2], dgs: vec![] };
        assert!(check_budget(&bad, &tiny_cfg(2, 1, 2), &net).is_err());
    }

    #[test]
    fn membership_basics() {
        let net = fixtures::desk6_case().network;
        let idx = net.u_index();
        let cfg = tiny_cfg(2, 1, 2);

        let mut x = HardeningDecision::none(&idx);
        x.lines[0] = true;
        let mut u = ContingencyScenario::all_intact(&idx);
        u.lines_intact[0] = false;
        assert!(!membership(&u, &x, &cfg), "hardened line cannot be damaged");

        let intact = ContingencyScenario::all_intact(&idx);
        assert!(membership(&intact, &x, &cfg));
        assert!(membership(&intact, &HardeningDecision::none(&idx), &cfg));

        let mut over = ContingencyScenario::all_intact(&idx);
        over.lines_intact[1] = false;
        over.lines_intact[2] = false;
        over.lines_intact[3] = false;
        assert!(!membership(&over, &HardeningDecision::none(&idx), &cfg));
    }

    #[test]
    fn enumeration_counts() {
        // |B^v|=3, k^L=1, k^G=0: none + 3 singles.
        let x = HardeningDecision { lines: vec![false; 3], dgs: vec![] };
        let cfg = tiny_cfg(1, 0, 3);
        assert_eq!(count_uncertainty(&x, &cfg), 4);
        assert_eq!(enumerate_uncertainty(&x, &cfg, 100).unwrap().count(), 4);

        // One line hardened: 3 scenarios.
        let x1 = HardeningDecision { lines: vec![true, false, false], dgs: vec![] };
        assert_eq!(enumerate_uncertainty(&x1, &cfg, 100).unwrap().count(), 3);

        // |B^v|=5, k^L=2, |N^vdg|=2, k^G=1: (1+5+10)*(1+2) = 48.
        let x2 = HardeningDecision { lines: vec![false; 5], dgs: vec![false; 2] };
        let cfg2 = tiny_cfg(2, 1, 0);
        assert_eq!(count_uncertainty(&x2, &cfg2), 48);
        let all: Vec<_> = enumerate_uncertainty(&x2, &cfg2, 100).unwrap().collect();
        assert_eq!(all.len(), 48);
        // Exactly once each.
        let distinct: std::collections::HashSet<_> = all.iter().cloned().collect();
        assert_eq!(distinct.len(), 48);
    }

    #[test]
    fn enumeration_cap_refuses_with_count() {
        let x = HardeningDecision { lines: vec![false; 5], dgs: vec![false; 2] };
        match enumerate_uncertainty(&x, &tiny_cfg(2, 1, 0), 10) {
            Err(ModelError::EnumerationCap { count, cap }) => {
                assert_eq!(count, 48);
                assert_eq!(cap, 10);
            }
            _ => panic!("expected cap refusal"),
        }
    }

    #[test]
    fn monotone_shrinkage_and_no_damaged_hardened() {
        let cfg = tiny_cfg(2, 1, 7);
        let x = HardeningDecision { lines: vec![true, false, false, false], dgs: vec![false, false] };
        let mut x_more = x.clone();
        x_more.lines[1] = true;
        x_more.dgs[0] = true;

        let small: Vec<_> = enumerate_uncertainty(&x_more, &cfg, 1000).unwrap().collect();
        let large: std::collections::HashSet<_> =
            enumerate_uncertainty(&x, &cfg, 1000).unwrap().collect();
        for u in &small {
            assert!(large.contains(u), "U(x') must be inside U(x)");
            assert!(membership(u, &x_more, &cfg));
            assert!(u.lines_intact[0] && u.lines_intact[1] && u.dgs_intact[0]);
        }
    }

    #[test]
    fn bad_probabilities_rejected() {
        let case = fixtures::desk6_case();
        let mut set = case.scenarios.clone();
        set.scenarios[0].probability += 0.25;
        let v = validate_scenarios(&case.network, &set);
        assert!(v.iter().any(|m| m.contains("sum to")), "{:?}", v);
    }
}
