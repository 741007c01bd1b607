//! Sparse LP/MILP modelling with an embedded revised simplex and
//! branch-and-bound solver, a brute-force enumeration oracle and LP text export.

mod bnb;
mod error;
mod lp_format;
mod lu;
mod model;
mod oracle;
mod simplex;
mod solution;

pub use bnb::solve_milp;
pub use error::ModelError;
pub use lp_format::export_lp_text;
pub use model::{ConId, Constraint, LinExpr, OptModel, Relation, Sense, VarId, Variable};
pub use oracle::{enumerate_oracle, ORACLE_MAX_INTEGERS};
pub use solution::{Solution, SolverOptions, Status};

use simplex::{Engine, LpOutcome};

/// Solves a purely continuous model with the primal simplex method.
pub fn solve_lp(model: &OptModel, opts: &SolverOptions) -> Result<Solution, ModelError> {
    let ints = model.num_integers();
    if ints > 0 {
        return Err(ModelError::WrongSolver(ints));
    }
    model.validate_finite()?;
    let sign = bnb::sense_sign(model);
    let mut eng = Engine::new(model, opts.feas_tol, opts.opt_tol, opts.iteration_limit);
    let status = match eng.primal() {
        LpOutcome::Optimal => Status::Optimal,
        LpOutcome::Infeasible => Status::Infeasible,
        LpOutcome::Unbounded => Status::Unbounded,
        LpOutcome::IterationLimit => Status::IterationLimit,
    };
    let mut sol = Solution::empty(status, model.num_vars());
    sol.iterations = eng.iterations;
    sol.nodes = 1;
    if status == Status::Optimal {
        let obj = sign * eng.objective() + model.objective_constant();
        let (y, rc) = eng.duals();
        sol.objective = obj;
        sol.best_bound = obj;
        sol.values = eng.values();
        sol.duals = Some(y.into_iter().map(|v| sign * v).collect());
        sol.reduced_costs = Some(rc.into_iter().map(|v| sign * v).collect());
    }
    Ok(sol)
}

/// Solves with branch and bound when integral variables are present, else as an LP.
pub fn solve(model: &OptModel, opts: &SolverOptions) -> Result<Solution, ModelError> {
    if model.num_integers() > 0 {
        solve_milp(model, opts)
    } else {
        solve_lp(model, opts)
    }
}
