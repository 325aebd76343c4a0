//! Thin linear-programming layer used by every geometric and planning LP.
//!
//! Problems are always minimizations. Rows are stored sparsely and handed to
//! a back end in one shot: dense-ish simplex (`microlp`) for the many small
//! programs, sparse interior point (`clarabel`) for large ones.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, SupportedConeT, ZeroConeT,
};
use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
struct Row {
    terms: Vec<(usize, f64)>,
    cmp: Cmp,
    rhs: f64,
}

/// A minimization LP under construction.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    objective: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal { objective: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<(f64, Vec<f64>)> {
        match self {
            LpOutcome::Optimal { objective, x } => Some((objective, x)),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable with objective coefficient `cost` and bounds `[lo, hi]`
    /// (use infinities for free directions). Returns its column index.
    pub fn add_var(&mut self, cost: f64, lo: f64, hi: f64) -> usize {
        self.objective.push(cost);
        self.bounds.push((lo, hi));
        self.objective.len() - 1
    }

    pub fn free_var(&mut self, cost: f64) -> usize {
        self.add_var(cost, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.objective[var] = cost;
    }

    pub fn add_row(&mut self, terms: &[(usize, f64)], cmp: Cmp, rhs: f64) {
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for &(j, c) in terms {
            if c == 0.0 {
                continue;
            }
            match merged.iter_mut().find(|(k, _)| *k == j) {
                Some(entry) => entry.1 += c,
                None => merged.push((j, c)),
            }
        }
        self.rows.push(Row {
            terms: merged,
            cmp,
            rhs,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = self
            .objective
            .iter()
            .zip(&self.bounds)
            .map(|(&c, &(lo, hi))| problem.add_var(c, (lo, hi)))
            .collect();
        for row in &self.rows {
            if row.terms.is_empty() {
                let ok = match row.cmp {
                    Cmp::Le => 0.0 <= row.rhs,
                    Cmp::Ge => 0.0 >= row.rhs,
                    Cmp::Eq => row.rhs == 0.0,
                };
                if ok {
                    continue;
                }
                return Ok(LpOutcome::Infeasible);
            }
            let expr: Vec<_> = row.terms.iter().map(|&(j, c)| (vars[j], c)).collect();
            let op = match row.cmp {
                Cmp::Le => ComparisonOp::Le,
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Eq => ComparisonOp::Eq,
            };
            problem.add_constraint(expr.as_slice(), op, row.rhs);
        }
        match problem.solve() {
            Ok(SolveOutcome::Solution(sol)) => {
                let x = vars.iter().map(|&v| sol.var_value(v)).collect();
                Ok(LpOutcome::Optimal {
                    objective: sol.objective(),
                    x,
                })
            }
            Ok(SolveOutcome::Interrupted(_)) => {
                Err(Error::Solver("LP solve interrupted before a solution".into()))
            }
            Err(microlp::Error::Infeasible) => Ok(LpOutcome::Infeasible),
            Err(microlp::Error::Unbounded) => Ok(LpOutcome::Unbounded),
            Err(e) => Err(Error::Solver(format!(
                "LP with {} vars / {} rows failed: {e}",
                self.num_vars(),
                self.num_rows()
            ))),
        }
    }
    /// Solves with the interior-point back end. Optima are accurate to
    /// about 1e-8 and need not be vertices.
    pub fn solve_interior(&self) -> Result<LpOutcome> {
        let n = self.num_vars();
        // Ax + s = b with s in {0}^eq x R+^ineq; equality rows go first
        let (mut ri, mut ci, mut vals, mut b) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut push_row = |terms: &mut dyn Iterator<Item = (usize, f64)>, rhs: f64| {
            let r = b.len();
            for (j, c) in terms {
                ri.push(r);
                ci.push(j);
                vals.push(c);
            }
            b.push(rhs);
        };
        let mut n_eq = 0;
        for row in self.rows.iter().filter(|r| r.cmp == Cmp::Eq) {
            push_row(&mut row.terms.iter().copied(), row.rhs);
            n_eq += 1;
        }
        for row in self.rows.iter().filter(|r| r.cmp != Cmp::Eq) {
            let sign = if row.cmp == Cmp::Le { 1.0 } else { -1.0 };
            push_row(&mut row.terms.iter().map(|&(j, c)| (j, sign * c)), sign * row.rhs);
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_finite() {
                push_row(&mut std::iter::once((j, -1.0)), -lo);
            }
            if hi.is_finite() {
                push_row(&mut std::iter::once((j, 1.0)), hi);
            }
        }
        let m = b.len();
        let a = CscMatrix::new_from_triplets(m, n, ri, ci, vals);
        let p = CscMatrix::<f64>::zeros((n, n));
        let cones: Vec<SupportedConeT<f64>> = [(n_eq > 0).then_some(ZeroConeT(n_eq)), (m > n_eq).then_some(NonnegativeConeT(m - n_eq))]
            .into_iter()
            .flatten()
            .collect();
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .build()
            .map_err(|e| Error::Solver(format!("interior-point settings: {e}")))?;
        let mut solver = DefaultSolver::new(&p, &self.objective, &a, &b, &cones, settings)
            .map_err(|e| Error::Solver(format!("interior-point setup: {e}")))?;
        solver.solve();
        match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => Ok(LpOutcome::Optimal {
                objective: solver.solution.obj_val,
                x: solver.solution.x.clone(),
            }),
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => Ok(LpOutcome::Infeasible),
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => Ok(LpOutcome::Unbounded),
            st => Err(Error::Solver(format!("interior point on {n} vars / {m} rows stopped: {st:?}"))),
        }
    }
}
