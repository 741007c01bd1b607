use crate::model::VarId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    /// Objective in the model's own sense, including the constant.
    pub objective: f64,
    pub values: Vec<f64>,
    /// Per-row sensitivity `∂objective/∂rhs`; LP solves only.
    pub duals: Option<Vec<f64>>,
    /// Per-variable reduced cost in the model's sense; LP solves only.
    pub reduced_costs: Option<Vec<f64>>,
    /// Branch-and-bound nodes whose relaxation was solved.
    pub nodes: usize,
    /// Proven bound on the optimum in the model's sense.
    pub best_bound: f64,
    pub iterations: usize,
}

impl Solution {
    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub(crate) fn empty(status: Status, n: usize) -> Solution {
        Solution {
            status,
            objective: f64::NAN,
            values: vec![f64::NAN; n],
            duals: None,
            reduced_costs: None,
            nodes: 0,
            best_bound: f64::NAN,
            iterations: 0,
        }
    }
}

/// Solver tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub int_tol: f64,
    pub gap_tol: f64,
    pub node_limit: usize,
    pub iteration_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            int_tol: 1e-6,
            gap_tol: 1e-6,
            node_limit: 100_000,
            iteration_limit: 5_000_000,
        }
    }
}
