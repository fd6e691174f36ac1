//! Decision-dependent worst-case machinery: the dualized contingency
//! subproblem and the parametric optimality block that turns one of its
//! dual solutions into a master-problem cut.
//!
//! For a fixed hardening plan x the subproblem is
//!
//! ```text
//!   max  sum_s pi_s [ lambda_s' b_s + vartheta_s' (d_s + C u) ]
//!   s.t. u in U(x),   (lambda_s, vartheta_s) in Xi_s  for every s,
//! ```
//!
//! a MILP after replacing each product `vartheta_r * u_k` by an exact
//! McCormick variable (u is binary, vartheta is boxed by `m_dual`). The
//! box is a modeling device, not part of the theory, so every solve is
//! audited against a primal re-solve at the selected contingency; on
//! failure the box is doubled and the solve repeated.

use crate::backend::{self, ModelHandle, ObjSense, VarId, FEAS_TOL};
use crate::model::{
    membership, AlgorithmConfig, ContingencyScenario, DduConfig, HardeningDecision,
    UncertaintyIndex,
};
use crate::recourse::{DualPoint, Recourse, RecourseSolution};
use crate::{Error, Result};

/// Attempts made before giving up on the dual box.
const MAX_BOX_RETRIES: usize = 20;

/// Outcome of one worst-case subproblem solve.
#[derive(Debug, Clone)]
pub struct SubproblemResult {
    pub u_star: ContingencyScenario,
    /// Exact expected cost at `u_star`, from the primal re-solve.
    pub value: f64,
    pub recourse: RecourseSolution,
    /// Optimal duals at `u_star`, from the primal re-solve.
    pub dual: DualPoint,
    /// Raw MILP objective (enhancement term removed), kept for audits.
    pub milp_value: f64,
    pub wall_secs: f64,
}

/// Default enhancement weight for given importance indices.
pub fn default_enh_weight(xi: &[f64]) -> f64 {
    let xi_max = xi.iter().copied().fold(0.0, f64::max);
    -1e-4 / xi_max.max(1.0)
}

fn build_sp_milp(
    rec: &Recourse,
    x: &HardeningDecision,
    ddu: &DduConfig,
    cfg: &AlgorithmConfig,
    enh: Option<(&[f64], f64)>,
    m_dual: f64,
) -> (ModelHandle, Vec<VarId>) {
    let form = &rec.form;
    let idx = &rec.idx;
    let dim = idx.dim();
    let x_flat = x.flat();
    let probs: Vec<f64> = rec.scens.scenarios.iter().map(|s| s.probability).collect();

    let mut m = ModelHandle::new(ObjSense::Maximize);
    m.seed = cfg.seed as i32;
    // The post-solve primal audit tolerates 1e-5 relative error, so the
    // subproblem MILP does not need the (expensive) 1e-9 default gap.
    m.mip_gap = 1e-7;

    // Contingency binaries; hardened components are pinned intact.
    let u: Vec<VarId> = (0..dim)
        .map(|k| {
            let cost = enh.map_or(0.0, |(xi, eps)| eps * xi[k]);
            let v = m.add_binary(cost);
            if x_flat[k] {
                m.fix_col(v, 1.0);
            }
            v
        })
        .collect();

    // N-k cardinality floors per component class.
    let n_l = idx.lines.len();
    if n_l > 0 {
        m.add_ge(
            n_l as f64 - ddu.k_lines as f64,
            (0..n_l).map(|k| (u[k], 1.0)).collect(),
        );
    }
    let n_g = idx.dgs.len();
    if n_g > 0 {
        m.add_ge(
            n_g as f64 - ddu.k_dgs as f64,
            (n_l..dim).map(|k| (u[k], 1.0)).collect(),
        );
    }

    for (s, &pi) in probs.iter().enumerate() {
        let lambda: Vec<VarId> = form
            .eq
            .iter()
            .map(|row| m.add_col(pi * row.rhs[s], -m_dual, m_dual))
            .collect();
        let vartheta: Vec<VarId> = form
            .ineq
            .iter()
            .map(|row| m.add_col(pi * row.rhs[s], 0.0, m_dual))
            .collect();

        // Dual feasibility: A' lambda + G' vartheta = c, columnwise.
        let mut per_col: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); form.n_vars];
        for (row, &l) in form.eq.iter().zip(&lambda) {
            for &(v, a) in &row.coeffs {
                per_col[v].push((l, a));
            }
        }
        for (row, &th) in form.ineq.iter().zip(&vartheta) {
            for &(v, g) in &row.coeffs {
                per_col[v].push((th, g));
            }
        }
        for (v, coeffs) in per_col.into_iter().enumerate() {
            m.add_eq(form.cost[v], coeffs);
        }

        // Exact McCormick products w = vartheta_r * u_k for every row
        // that reads a u component.
        for (r, row) in form.ineq.iter().enumerate() {
            if let Some((k, c)) = row.u_term {
                let w = m.add_col(pi * c, 0.0, m_dual);
                m.add_le(0.0, vec![(w, 1.0), (u[k], -m_dual)]);
                m.add_le(0.0, vec![(w, 1.0), (vartheta[r], -1.0)]);
                m.add_ge(-m_dual, vec![(w, 1.0), (vartheta[r], -1.0), (u[k], -m_dual)]);
            }
        }
    }
    (m, u)
}

/// Solves the worst-case subproblem at `x` exactly. When `xi` is given
/// (and the config enables enhancement) ties among worst contingencies
/// are broken toward damaging components with high importance indices.
pub fn solve_subproblem(
    rec: &Recourse,
    x: &HardeningDecision,
    ddu: &DduConfig,
    cfg: &AlgorithmConfig,
    xi: Option<&[f64]>,
) -> Result<SubproblemResult> {
    let enh: Option<(&[f64], f64)> = match (cfg.enhancement, xi) {
        (true, Some(xi)) => {
            let eps = cfg.enh_weight.unwrap_or_else(|| default_enh_weight(xi));
            Some((xi, eps))
        }
        _ => None,
    };

    let mut m_dual = cfg.m_dual;
    let mut wall = 0.0;
    for _retry in 0..=MAX_BOX_RETRIES {
        let (model, u_vars) = build_sp_milp(rec, x, ddu, cfg, enh, m_dual);
        let sol = backend::solve_milp(&model)?;
        wall += sol.wall_secs;
        if sol.status == backend::SolveStatus::Infeasible {
            // The box cut off the whole dual polyhedron; Xi_s itself is
            // never empty, so this can only mean m_dual is too small.
            m_dual *= 2.0;
            continue;
        }
        if !sol.is_optimal() {
            return Err(Error::SubproblemNotOptimal { status: sol.status });
        }
        let u_flat: Vec<bool> = u_vars.iter().map(|&v| sol.value(v) > 0.5).collect();
        let u_star = ContingencyScenario::from_flat(&rec.idx, &u_flat);
        debug_assert!(membership(&u_star, x, ddu), "subproblem left U(x)");

        // Strip the enhancement perturbation off the MILP objective.
        let enh_part: f64 = enh.map_or(0.0, |(xi, eps)| {
            u_flat
                .iter()
                .zip(xi)
                .map(|(&w, &x)| if w { eps * x } else { 0.0 })
                .sum()
        });
        let milp_value = sol.objective - enh_part;

        // Audit against the primal: the box must not have clipped the
        // true optimal duals.
        let uf: Vec<f64> = u_flat.iter().map(|&w| if w { 1.0 } else { 0.0 }).collect();
        let (recourse, dual) = rec.solve_flat(&uf)?;
        if (milp_value - recourse.expected_cost).abs()
            <= 1e-5 * recourse.expected_cost.abs().max(1.0)
        {
            return Ok(SubproblemResult {
                u_star,
                value: recourse.expected_cost,
                recourse,
                dual,
                milp_value,
                wall_secs: wall,
            });
        }
        m_dual *= 2.0;
    }
    Err(Error::DualBoundTooSmall { retries: MAX_BOX_RETRIES })
}

// ---------------------------------------------------------------------------
// Parametric optimality block
// ---------------------------------------------------------------------------

/// One parametric cut: for a fixed dual point the subproblem value is
/// `constant + max { coeff' u : u in U(x) }`, and the block embeds that
/// inner maximization into the master through its KKT conditions.
#[derive(Debug, Clone)]
pub struct OuBlock {
    /// `sum_s pi_s (lambda_s' b_s + vartheta_s' d_s)`.
    pub constant: f64,
    /// `C' theta` clipped to be nonpositive, one entry per u slot.
    pub coeff: Vec<f64>,
    /// Selection objective: the modified anchor. Components damaged in
    /// u* carry a dominating penalty -M so the selected worst case
    /// always re-damages every unhardened member of u*'s damage set
    /// (the cut-strength argument of the parametric method); intact
    /// components keep the anchor coefficient, optionally perturbed by
    /// the resilience indices to break ties adversarially.
    pub sel: Vec<f64>,
    /// The contingency that produced the dual point (diagnostics only).
    pub u_star: ContingencyScenario,
}

/// Builds the cut data from an audited dual point. `xi` are the
/// resilience importance indices of the enhanced variant.
pub fn ou_block(
    rec: &Recourse,
    dual: &DualPoint,
    u_star: &ContingencyScenario,
    xi: Option<&[f64]>,
) -> OuBlock {
    let zeros = vec![0.0; rec.idx.dim()];
    let constant: f64 = rec
        .scens
        .scenarios
        .iter()
        .enumerate()
        .map(|(s, sc)| {
            sc.probability * rec.form.dual_objective(s, &dual.lambda[s], &dual.vartheta[s], &zeros)
        })
        .sum();
    // An intact component can never raise the cost, so the true
    // coefficients are nonpositive; positive entries are solver noise
    // and the inner maximization is only well-posed without them.
    let coeff: Vec<f64> = dual.anchor.iter().map(|&a| a.min(0.0)).collect();

    // Dominance penalty: un-damaging a -M component to damage any
    // alternative in the same class changes the selection objective by
    // at least m_sel - max|coeff| > 0, so max|coeff| + 1 already makes
    // re-damaging strictly preferred. Kept small on purpose: it bounds
    // the big-M boxes of the master block.
    let m_sel: f64 = coeff.iter().fold(0.0f64, |acc, a| acc.max(a.abs())) + 1.0;
    let tie_w = xi.map(|xi| {
        let xi_max = xi.iter().cloned().fold(0.0f64, f64::max);
        let a_max = coeff.iter().fold(0.0f64, |acc, a| acc.max(a.abs()));
        1e-4 * (a_max + 1.0) / xi_max.max(1.0)
    });
    let flat = u_star.flat();
    let sel = coeff
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            if !flat[k] {
                -m_sel
            } else if let Some(w) = tie_w {
                a - w * xi.unwrap()[k]
            } else {
                a
            }
        })
        .collect();

    OuBlock {
        constant,
        coeff,
        sel,
        u_star: u_star.clone(),
    }
}

impl OuBlock {
    /// Appends the full parametric cut to a master model: the KKT
    /// selection of the block's worst case u in U(x), one primal
    /// recourse copy per scenario evaluated at that u, and the epigraph
    /// rows `eta >= sum_s pi_s c' y_s` and `eta >= constant + coeff' u`.
    /// `x_vars` are the master's hardening binaries in flat u order.
    pub fn append_to(
        &self,
        m: &mut ModelHandle,
        rec: &Recourse,
        x_vars: &[VarId],
        eta: VarId,
        ddu: &DduConfig,
        m_comp: f64,
    ) {
        let u = self.append_selection(m, x_vars, eta, &rec.idx, ddu, m_comp);

        // Recourse copies at the selected u: rows `G y >= d_s + C u`
        // become `G y - C u >= d_s`, and eta dominates the expected cost
        // of the copies. This is the part that makes the cut tight: at
        // the anchor plan the selected u is (dual-)worst-case, and weak
        // duality bounds its true cost from below by the subproblem value.
        let form = &rec.form;
        let mut epigraph: Vec<(VarId, f64)> = vec![(eta, 1.0)];
        for (s, sc) in rec.scens.scenarios.iter().enumerate() {
            let y: Vec<VarId> = (0..form.n_vars).map(|_| m.add_free_col(0.0)).collect();
            for (v, &c) in form.cost.iter().enumerate() {
                if c != 0.0 {
                    epigraph.push((y[v], -sc.probability * c));
                }
            }
            for row in &form.eq {
                let coeffs = row.coeffs.iter().map(|&(v, c)| (y[v], c)).collect();
                m.add_eq(row.rhs[s], coeffs);
            }
            for row in &form.ineq {
                let mut coeffs: Vec<(VarId, f64)> =
                    row.coeffs.iter().map(|&(v, c)| (y[v], c)).collect();
                if let Some((k, c)) = row.u_term {
                    coeffs.push((u[k], -c));
                }
                m.add_ge(row.rhs[s], coeffs);
            }
        }
        m.add_ge(0.0, epigraph);
    }

    /// Appends only the worst-case selection machinery. Optimality of u
    /// for `max { coeff' u : u in U(x) }` is enforced through primal
    /// feasibility, dual feasibility, and a strong-duality equality; the
    /// bilinear dual terms `gamma_k x_k` are linearized exactly with
    /// McCormick rows (x is binary), so the block adds no integer
    /// columns of its own. Also adds the (weaker) dual-estimate epigraph
    /// row `eta >= constant + coeff' u`. Returns the u columns.
    fn append_selection(
        &self,
        m: &mut ModelHandle,
        x_vars: &[VarId],
        eta: VarId,
        idx: &UncertaintyIndex,
        ddu: &DduConfig,
        m_comp: f64,
    ) -> Vec<VarId> {
        let dim = self.sel.len();
        assert_eq!(x_vars.len(), dim);
        let max_a = self.sel.iter().fold(0.0f64, |acc, a| acc.max(a.abs()));
        let big = m_comp.max(2.0 * max_a + 1.0);

        // u is binary: the selection polytope has integral vertices for
        // every binary x, but fractional convex combinations of tied
        // optima would weaken the recourse copies (the recourse value is
        // convex in u), so they are excluded outright.
        let u: Vec<VarId> = (0..dim).map(|_| m.add_binary(0.0)).collect();
        let gamma: Vec<VarId> = (0..dim).map(|_| m.add_col(0.0, -big, 0.0)).collect();
        let delta: Vec<VarId> = (0..dim).map(|_| m.add_col(0.0, -big, 0.0)).collect();

        // One cardinality row (and dual mu) per nonempty component class.
        let groups: Vec<(std::ops::Range<usize>, f64)> = [
            (0..idx.lines.len(), ddu.k_lines as f64),
            (idx.lines.len()..dim, ddu.k_dgs as f64),
        ]
        .into_iter()
        .filter(|(g, _)| !g.is_empty())
        .collect();

        // Dual objective terms: f'mu + x'gamma - 1'delta, with the x'gamma
        // products carried by the McCormick columns w.
        let mut dual_obj: Vec<(VarId, f64)> = Vec::new();
        let mut mu_of = vec![None; dim];
        for (group, k_cap) in &groups {
            let f = group.len() as f64 - k_cap;
            let mu = m.add_col(0.0, -big, 0.0);
            for k in group.clone() {
                mu_of[k] = Some(mu);
            }
            // Primal cardinality floor: sum u >= f.
            m.add_ge(f, group.clone().map(|k| (u[k], 1.0)).collect());
            dual_obj.push((mu, f));
        }

        for k in 0..dim {
            // Primal link u_k >= x_k.
            m.add_ge(0.0, vec![(u[k], 1.0), (x_vars[k], -1.0)]);
            // Dual feasibility: mu + gamma_k - delta_k = sel_k.
            let mut row = vec![(gamma[k], 1.0), (delta[k], -1.0)];
            if let Some(mu) = mu_of[k] {
                row.push((mu, 1.0));
            }
            m.add_eq(self.sel[k], row);
            // w_k = gamma_k x_k, exact for binary x with gamma in [-big, 0].
            let w = m.add_col(0.0, -big, 0.0);
            m.add_ge(0.0, vec![(w, 1.0), (gamma[k], -1.0)]);
            m.add_ge(0.0, vec![(w, 1.0), (x_vars[k], big)]);
            m.add_le(big, vec![(w, 1.0), (gamma[k], -1.0), (x_vars[k], big)]);
            dual_obj.push((w, 1.0));
            dual_obj.push((delta[k], -1.0));
        }

        // Strong duality: sel'u = f'mu + x'gamma - 1'delta.
        let mut row: Vec<(VarId, f64)> = (0..dim).map(|k| (u[k], self.sel[k])).collect();
        for (v, c) in dual_obj {
            row.push((v, -c));
        }
        m.add_eq(0.0, row);

        // Epigraph: eta >= constant + coeff' u.
        let mut row = vec![(eta, 1.0)];
        for k in 0..dim {
            row.push((u[k], -self.coeff[k]));
        }
        m.add_ge(self.constant, row);
        u
    }

    /// Cut value at a fixed plan: `constant + max { coeff' u : u in U(x) }`,
    /// solved as a plain LP (the constraint system is integral).
    pub fn value_at(&self, x: &HardeningDecision, ddu: &DduConfig, idx: &UncertaintyIndex) -> Result<f64> {
        let (_, inner) = worst_case_selection_lp(&self.coeff, x, ddu, idx)?;
        Ok(self.constant + inner)
    }
}

/// Solves `max { coeff' u : u in U(x), 0 <= u <= 1 }` as a pure LP and
/// checks that the vertex is integral (the system is an interval matrix,
/// so it must be). Returns the vertex and the optimal value.
pub fn worst_case_selection_lp(
    coeff: &[f64],
    x: &HardeningDecision,
    ddu: &DduConfig,
    idx: &UncertaintyIndex,
) -> Result<(Vec<f64>, f64)> {
    let dim = idx.dim();
    assert_eq!(coeff.len(), dim);
    let x_flat = x.flat();
    let mut m = ModelHandle::new(ObjSense::Maximize);
    let u: Vec<VarId> = (0..dim)
        .map(|k| m.add_col(coeff[k], if x_flat[k] { 1.0 } else { 0.0 }, 1.0))
        .collect();
    let n_l = idx.lines.len();
    if n_l > 0 {
        m.add_ge(
            n_l as f64 - ddu.k_lines as f64,
            (0..n_l).map(|k| (u[k], 1.0)).collect(),
        );
    }
    if dim > n_l {
        m.add_ge(
            (dim - n_l) as f64 - ddu.k_dgs as f64,
            (n_l..dim).map(|k| (u[k], 1.0)).collect(),
        );
    }
    let sol = backend::solve_lp(&m)?;
    if !sol.is_optimal() {
        return Err(Error::SubproblemNotOptimal { status: sol.status });
    }
    let vals: Vec<f64> = u.iter().map(|&v| sol.value(v)).collect();
    let dev = vals
        .iter()
        .map(|v| (v - v.round()).abs())
        .fold(0.0, f64::max);
    if dev > FEAS_TOL.sqrt() {
        return Err(Error::FractionalVertex(dev));
    }
    Ok((vals, sol.objective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{enumerate_uncertainty, Budget};

    fn desk_recourse() -> (Recourse, DduConfig, AlgorithmConfig) {
        let case = fixtures::desk6_case();
        let rec = Recourse::new(&case.network, &case.scenarios, &case.algorithm);
        (rec, case.ddu, case.algorithm)
    }

    fn brute_force_worst(
        rec: &Recourse,
        x: &HardeningDecision,
        ddu: &DduConfig,
    ) -> (ContingencyScenario, f64) {
        enumerate_uncertainty(x, ddu, 100_000)
            .unwrap()
            .map(|u| {
                let c = rec.expected_cost(&u).unwrap();
                (u, c)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
    }

    #[test]
    fn subproblem_matches_enumeration_unhardened() {
        let (rec, ddu, cfg) = desk_recourse();
        let x = HardeningDecision::none(&rec.idx);
        let sp = solve_subproblem(&rec, &x, &ddu, &cfg, None).unwrap();
        let (_, best) = brute_force_worst(&rec, &x, &ddu);
        assert!(
            (sp.value - best).abs() <= 1e-5 * best.max(1.0),
            "sp {} vs enumeration {}",
            sp.value,
            best
        );
    }

    #[test]
    fn subproblem_matches_enumeration_with_hardening() {
        let (rec, ddu, cfg) = desk_recourse();
        let mut x = HardeningDecision::none(&rec.idx);
        x.lines[0] = true;
        x.dgs[1] = true;
        let sp = solve_subproblem(&rec, &x, &ddu, &cfg, None).unwrap();
        let (_, best) = brute_force_worst(&rec, &x, &ddu);
        assert!((sp.value - best).abs() <= 1e-5 * best.max(1.0));
        // Hardened components stay intact in the selection.
        assert!(sp.u_star.lines_intact[0]);
        assert!(sp.u_star.dgs_intact[1]);
    }

    #[test]
    fn zero_k_forces_all_intact() {
        let (rec, _, cfg) = desk_recourse();
        let ddu = DduConfig { k_lines: 0, k_dgs: 0, budget: Budget::Cardinality(2) };
        let x = HardeningDecision::none(&rec.idx);
        let sp = solve_subproblem(&rec, &x, &ddu, &cfg, None).unwrap();
        assert_eq!(sp.u_star, ContingencyScenario::all_intact(&rec.idx));
        assert!(sp.value.abs() < 1e-5);
    }

    #[test]
    fn enhancement_preserves_the_value() {
        let (rec, ddu, mut cfg) = desk_recourse();
        cfg.enhancement = true;
        let xi = rec.resilience_indices().unwrap();
        let x = HardeningDecision::none(&rec.idx);
        let plain = solve_subproblem(&rec, &x, &ddu, &cfg, None).unwrap();
        let enh = solve_subproblem(&rec, &x, &ddu, &cfg, Some(&xi)).unwrap();
        assert!((plain.value - enh.value).abs() <= 1e-5 * plain.value.max(1.0));
    }

    #[test]
    fn tiny_dual_box_recovers_by_doubling() {
        let (rec, ddu, mut cfg) = desk_recourse();
        cfg.m_dual = 1e-3; // absurdly small; audit must trigger doubling
        let x = HardeningDecision::none(&rec.idx);
        let sp = solve_subproblem(&rec, &x, &ddu, &cfg, None).unwrap();
        let (_, best) = brute_force_worst(&rec, &x, &ddu);
        assert!((sp.value - best).abs() <= 1e-5 * best.max(1.0));
    }

    #[test]
    fn ou_block_is_tight_at_its_anchor_and_valid_elsewhere() {
        let (rec, ddu, cfg) = desk_recourse();
        let x = HardeningDecision::none(&rec.idx);
        let sp = solve_subproblem(&rec, &x, &ddu, &cfg, None).unwrap();
        let block = ou_block(&rec, &sp.dual, &sp.u_star, None);

        // Tight at the anchor plan.
        let at_x = block.value_at(&x, &ddu, &rec.idx).unwrap();
        assert!(
            (at_x - sp.value).abs() <= 1e-4 * sp.value.max(1.0),
            "cut {} vs sp {}",
            at_x,
            sp.value
        );

        // Valid (a lower bound on the true worst case) at other plans.
        for flip in 0..rec.idx.dim() {
            let mut x2 = HardeningDecision::none(&rec.idx);
            if flip < x2.lines.len() {
                x2.lines[flip] = true;
            } else {
                x2.dgs[flip - x2.lines.len()] = true;
            }
            let truth = brute_force_worst(&rec, &x2, &ddu).1;
            let cut = block.value_at(&x2, &ddu, &rec.idx).unwrap();
            assert!(cut <= truth + 1e-5 * truth.max(1.0), "cut {} truth {}", cut, truth);
        }
    }

    #[test]
    fn ou_kkt_block_brackets_between_basic_cut_and_truth() {
        let (rec, ddu, cfg) = desk_recourse();
        let x = HardeningDecision::none(&rec.idx);
        let sp = solve_subproblem(&rec, &x, &ddu, &cfg, None).unwrap();
        let block = ou_block(&rec, &sp.dual, &sp.u_star, None);

        for fixed in [
            HardeningDecision::none(&rec.idx),
            {
                let mut h = HardeningDecision::none(&rec.idx);
                h.lines[2] = true;
                h.lines[4] = true;
                h
            },
        ] {
            let mut m = ModelHandle::new(ObjSense::Minimize);
            let x_vars: Vec<VarId> = fixed
                .flat()
                .iter()
                .map(|&b| {
                    let v = m.add_binary(0.0);
                    m.fix_col(v, if b { 1.0 } else { 0.0 });
                    v
                })
                .collect();
            let eta = m.add_free_col(1.0);
            block.append_to(&mut m, &rec, &x_vars, eta, &ddu, 100.0);
            let sol = backend::solve_milp(&m).unwrap();
            assert!(sol.is_optimal());
            // The cut value is the true recourse cost of the u selected
            // by the block. The modified anchor re-damages every
            // unhardened member of u*'s damage set, so by monotonicity
            // the value is at least the basic cut's (u* trimmed by the
            // hardening), and at most the genuine worst case over U(x).
            let fixed_flat = fixed.flat();
            let trimmed: Vec<bool> = sp
                .u_star
                .flat()
                .iter()
                .zip(&fixed_flat)
                .map(|(&intact, &hardened)| intact || hardened)
                .collect();
            let basic = rec
                .expected_cost(&ContingencyScenario::from_flat(&rec.idx, &trimmed))
                .unwrap();
            let truth = brute_force_worst(&rec, &fixed, &ddu).1;
            assert!(
                sol.objective >= basic - 1e-5 * basic.abs().max(1.0),
                "kkt {} below basic cut {}",
                sol.objective,
                basic
            );
            assert!(
                sol.objective <= truth + 1e-5 * truth.max(1.0),
                "kkt {} above worst case {}",
                sol.objective,
                truth
            );
        }
        // Tight at the anchor plan: the selected u achieves the
        // subproblem value there.
        let mut m = ModelHandle::new(ObjSense::Minimize);
        let x_vars: Vec<VarId> = (0..rec.idx.dim())
            .map(|_| {
                let v = m.add_binary(0.0);
                m.fix_col(v, 0.0);
                v
            })
            .collect();
        let eta = m.add_free_col(1.0);
        block.append_to(&mut m, &rec, &x_vars, eta, &ddu, 100.0);
        let sol = backend::solve_milp(&m).unwrap();
        assert!(
            (sol.objective - sp.value).abs() <= 1e-4 * sp.value.max(1.0),
            "anchor cut {} vs sp {}",
            sol.objective,
            sp.value
        );
    }

    #[test]
    fn selection_lp_vertices_are_integral() {
        let (rec, ddu, _) = desk_recourse();
        let coeff = vec![-3.0, -1.0, -2.0, -5.0, -0.5, -4.0, -2.5];
        assert_eq!(rec.idx.dim(), coeff.len());
        let x = HardeningDecision::none(&rec.idx);
        let (u, val) = worst_case_selection_lp(&coeff, &x, &ddu, &rec.idx).unwrap();
        assert!(u.iter().all(|v| (v - v.round()).abs() < 1e-9));
        // Two lines and one DG may fail; the best selection keeps the
        // cheapest coefficients intact.
        let brute: f64 = {
            let mut best = f64::NEG_INFINITY;
            for ls in 0..32u32 {
                if (0..5).filter(|i| ls >> i & 1 == 0).count() > ddu.k_lines {
                    continue;
                }
                for ds in 0..4u32 {
                    if (0..2).filter(|i| ds >> i & 1 == 0).count() > ddu.k_dgs {
                        continue;
                    }
                    let mut v = 0.0;
                    for i in 0..5 {
                        if ls >> i & 1 == 1 {
                            v += coeff[i];
                        }
                    }
                    for i in 0..2 {
                        if ds >> i & 1 == 1 {
                            v += coeff[5 + i];
                        }
                    }
                    best = best.max(v);
                }
            }
            best
        };
        assert!((val - brute).abs() < 1e-9, "lp {} brute {}", val, brute);
    }
}
