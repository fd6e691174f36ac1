//! Solver-agnostic LP/MILP layer.
//!
//! Every engine in this crate builds a [`ModelHandle`] and hands it to
//! [`solve_lp`] or [`solve_milp`]. The handle is a plain in-memory
//! description (columns, rows, linear objective); HiGHS does the actual
//! work. LP solves return dual multipliers per row, which the recourse
//! and subproblem machinery depend on.

use std::time::Instant;

use highs::{HighsModelStatus, RowProblem, Sense};
use thiserror::Error;

/// Feasibility / integrality tolerance used artifact-wide.
pub const FEAS_TOL: f64 = 1e-6;
/// Primal-vs-dual objective audit tolerance.
pub const DUALITY_TOL: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("model has integer columns; solve_lp requires a pure LP")]
    NotAnLp,
    #[error("solver returned unusable status {0:?}")]
    SolverFailure(HighsModelStatus),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Stopped on an iteration/time limit before proving optimality.
    Limit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ColDef {
    cost: f64,
    lower: f64,
    upper: f64,
    integer: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct RowDef {
    coeffs: Vec<(usize, f64)>,
    lower: f64,
    upper: f64,
}

/// A variable index into a [`ModelHandle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// A constraint index into a [`ModelHandle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RowId(pub usize);

/// A linear model under construction.
#[derive(Debug, Clone)]
pub struct ModelHandle {
    sense: ObjSense,
    cols: Vec<ColDef>,
    rows: Vec<RowDef>,
    /// Solver options applied at solve time.
    pub threads: u32,
    pub seed: i32,
    pub time_limit: Option<f64>,
    /// Relative MIP gap; defaults to 1e-9 (effectively exact).
    pub mip_gap: f64,
}

impl ModelHandle {
    pub fn new(sense: ObjSense) -> Self {
        ModelHandle {
            sense,
            cols: Vec::new(),
            rows: Vec::new(),
            threads: 1,
            seed: 0,
            time_limit: None,
            mip_gap: 1e-9,
        }
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn has_integers(&self) -> bool {
        self.cols.iter().any(|c| c.integer)
    }

    /// Adds a continuous column with the given objective cost and bounds.
    pub fn add_col(&mut self, cost: f64, lower: f64, upper: f64) -> VarId {
        self.cols.push(ColDef {
            cost,
            lower,
            upper,
            integer: false,
        });
        VarId(self.cols.len() - 1)
    }

    /// Adds a free continuous column.
    pub fn add_free_col(&mut self, cost: f64) -> VarId {
        self.add_col(cost, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Adds a binary column.
    pub fn add_binary(&mut self, cost: f64) -> VarId {
        self.cols.push(ColDef {
            cost,
            lower: 0.0,
            upper: 1.0,
            integer: true,
        });
        VarId(self.cols.len() - 1)
    }

    /// Fixes an existing column to a value.
    pub fn fix_col(&mut self, var: VarId, value: f64) {
        self.cols[var.0].lower = value;
        self.cols[var.0].upper = value;
    }

    /// Adds `lower <= coeffs . x <= upper`. Use infinities for one-sided rows.
    pub fn add_row(&mut self, lower: f64, upper: f64, coeffs: Vec<(VarId, f64)>) -> RowId {
        self.rows.push(RowDef {
            coeffs: coeffs.into_iter().map(|(v, c)| (v.0, c)).collect(),
            lower,
            upper,
        });
        RowId(self.rows.len() - 1)
    }

    pub fn add_eq(&mut self, rhs: f64, coeffs: Vec<(VarId, f64)>) -> RowId {
        self.add_row(rhs, rhs, coeffs)
    }

    pub fn add_ge(&mut self, rhs: f64, coeffs: Vec<(VarId, f64)>) -> RowId {
        self.add_row(rhs, f64::INFINITY, coeffs)
    }

    pub fn add_le(&mut self, rhs: f64, coeffs: Vec<(VarId, f64)>) -> RowId {
        self.add_row(f64::NEG_INFINITY, rhs, coeffs)
    }

    /// Writes the model in LP text format, for debugging.
    pub fn dump_lp(&self, w: &mut dyn std::io::Write) -> std::io::Result<()> {
        writeln!(
            w,
            "{}",
            match self.sense {
                ObjSense::Minimize => "Minimize",
                ObjSense::Maximize => "Maximize",
            }
        )?;
        write!(w, " obj:")?;
        for (i, c) in self.cols.iter().enumerate() {
            if c.cost != 0.0 {
                write!(w, " {:+} x{}", c.cost, i)?;
            }
        }
        writeln!(w, "\nSubject To")?;
        for (r, row) in self.rows.iter().enumerate() {
            write!(w, " r{}:", r)?;
            for &(v, c) in &row.coeffs {
                write!(w, " {:+} x{}", c, v)?;
            }
            if (row.lower - row.upper).abs() < 1e-300 {
                writeln!(w, " = {}", row.lower)?;
            } else if row.upper.is_infinite() && row.lower.is_finite() {
                writeln!(w, " >= {}", row.lower)?;
            } else if row.lower.is_infinite() && row.upper.is_finite() {
                writeln!(w, " <= {}", row.upper)?;
            } else {
                writeln!(w, " in [{}, {}]", row.lower, row.upper)?;
            }
        }
        writeln!(w, "Bounds")?;
        for (i, c) in self.cols.iter().enumerate() {
            writeln!(w, " {} <= x{} <= {}", c.lower, i, c.upper)?;
        }
        writeln!(w, "General")?;
        for (i, c) in self.cols.iter().enumerate() {
            if c.integer {
                write!(w, " x{}", i)?;
            }
        }
        writeln!(w, "\nEnd")
    }
}

/// Result of a solve. Duals are present only for pure LPs.
#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    pub duals: Option<Vec<f64>>,
    pub wall_secs: f64,
}

impl Solution {
    pub fn value(&self, var: VarId) -> f64 {
        self.primal[var.0]
    }

    pub fn dual(&self, row: RowId) -> f64 {
        self.duals.as_ref().expect("no duals on this solution")[row.0]
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

fn run_highs(m: &ModelHandle, want_duals: bool) -> Result<Solution, BackendError> {
    let mut pb = RowProblem::default();
    let mut cols = Vec::with_capacity(m.cols.len());
    for c in &m.cols {
        let col = if c.integer {
            pb.add_integer_column(c.cost, c.lower..=c.upper)
        } else {
            pb.add_column(c.cost, c.lower..=c.upper)
        };
        cols.push(col);
    }
    for r in &m.rows {
        let coeffs: Vec<_> = r.coeffs.iter().map(|&(v, c)| (cols[v], c)).collect();
        pb.add_row(r.lower..=r.upper, &coeffs);
    }
    let mut model = pb.optimise(match m.sense {
        ObjSense::Minimize => Sense::Minimise,
        ObjSense::Maximize => Sense::Maximise,
    });
    model.make_quiet();
    model.set_option("threads", m.threads as i32);
    model.set_option("random_seed", m.seed);
    // Engines assert agreement to 1e-6 relative; the default MIP gap of
    // 1e-4 is far too loose for that.
    model.set_option("mip_rel_gap", m.mip_gap);
    model.set_option("mip_abs_gap", m.mip_gap);
    if let Some(t) = m.time_limit {
        model.set_option("time_limit", t);
    }

    let start = Instant::now();
    let solved = model.solve();
    let wall_secs = start.elapsed().as_secs_f64();

    let status = match solved.status() {
        HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => SolveStatus::Optimal,
        HighsModelStatus::Infeasible => SolveStatus::Infeasible,
        HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => {
            SolveStatus::Unbounded
        }
        HighsModelStatus::ReachedTimeLimit
        | HighsModelStatus::ReachedIterationLimit
        | HighsModelStatus::ReachedSolutionLimit => SolveStatus::Limit,
        other => return Err(BackendError::SolverFailure(other)),
    };

    if status != SolveStatus::Optimal {
        return Ok(Solution {
            status,
            objective: f64::NAN,
            primal: vec![f64::NAN; m.cols.len()],
            duals: None,
            wall_secs,
        });
    }

    let objective = solved.objective_value();
    let sol = solved.get_solution();
    let mut primal = sol.columns().to_vec();
    // ModelEmpty yields no column values.
    primal.resize(m.cols.len(), 0.0);
    let mut duals = None;
    if want_duals {
        let mut d = sol.dual_rows().to_vec();
        d.resize(m.rows.len(), 0.0);
        duals = Some(d);
    } else {
        // Round integer columns to exact binaries/integers.
        for (i, c) in m.cols.iter().enumerate() {
            if c.integer {
                primal[i] = primal[i].round();
            }
        }
    }
    Ok(Solution {
        status,
        objective,
        primal,
        duals,
        wall_secs,
    })
}

/// Solves a pure LP and returns primal values plus row duals.
pub fn solve_lp(m: &ModelHandle) -> Result<Solution, BackendError> {
    if m.has_integers() {
        return Err(BackendError::NotAnLp);
    }
    run_highs(m, true)
}

/// Solves a MILP. No duals; integer columns are rounded to exact values.
pub fn solve_milp(m: &ModelHandle) -> Result<Solution, BackendError> {
    run_highs(m, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_var_lp_with_dual() {
        // min x s.t. x >= 3
        let mut m = ModelHandle::new(ObjSense::Minimize);
        let x = m.add_free_col(1.0);
        let r = m.add_ge(3.0, vec![(x, 1.0)]);
        let sol = solve_lp(&m).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.objective - 3.0).abs() < FEAS_TOL);
        assert!((sol.value(x) - 3.0).abs() < FEAS_TOL);
        assert!((sol.dual(r) - 1.0).abs() < FEAS_TOL);
    }

    #[test]
    fn infeasible_pair() {
        let mut m = ModelHandle::new(ObjSense::Minimize);
        let x = m.add_free_col(0.0);
        m.add_le(0.0, vec![(x, 1.0)]);
        m.add_ge(1.0, vec![(x, 1.0)]);
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn milp_packing() {
        // max x + y, x + y <= 1, binaries
        let mut m = ModelHandle::new(ObjSense::Maximize);
        let x = m.add_binary(1.0);
        let y = m.add_binary(1.0);
        m.add_le(1.0, vec![(x, 1.0), (y, 1.0)]);
        let sol = solve_milp(&m).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.objective - 1.0).abs() < FEAS_TOL);
        assert_eq!(sol.value(x) + sol.value(y), 1.0);
    }

    #[test]
    fn milp_knapsack_matches_enumeration() {
        let values = [7.0, 4.0, 5.0];
        let weights = [5.0, 3.0, 4.0];
        let cap = 7.0;
        let mut m = ModelHandle::new(ObjSense::Maximize);
        let xs: Vec<_> = values.iter().map(|&v| m.add_binary(v)).collect();
        m.add_le(cap, xs.iter().zip(weights).map(|(&x, w)| (x, w)).collect());
        let sol = solve_milp(&m).unwrap();

        let mut best = 0.0f64;
        for mask in 0u32..8 {
            let w: f64 = (0..3).filter(|i| mask >> i & 1 == 1).map(|i| weights[i]).sum();
            if w <= cap {
                let v = (0..3).filter(|i| mask >> i & 1 == 1).map(|i| values[i]).sum();
                best = best.max(v);
            }
        }
        assert!((sol.objective - best).abs() < FEAS_TOL);
    }

    #[test]
    fn empty_objective() {
        let m = ModelHandle::new(ObjSense::Minimize);
        let sol = solve_milp(&m).unwrap();
        assert!(sol.is_optimal());
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn lp_dump_is_readable() {
        let mut m = ModelHandle::new(ObjSense::Minimize);
        let x = m.add_col(1.0, 0.0, 10.0);
        m.add_ge(3.0, vec![(x, 1.0)]);
        let mut buf = Vec::new();
        m.dump_lp(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("Minimize"));
        assert!(text.contains(">= 3"));
    }
}
