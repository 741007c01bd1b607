use crate::bnb::{sense_sign, Restrictions};
use crate::error::ModelError;
use crate::model::OptModel;
use crate::simplex::LpOutcome;
use crate::solution::{Solution, SolverOptions, Status};

pub const ORACLE_MAX_INTEGERS: usize = 20;

/// Exhaustive enumeration of integral assignments, solving the continuous
/// restriction for each. Exact ground truth for small models.
pub fn enumerate_oracle(model: &OptModel, opts: &SolverOptions) -> Result<Solution, ModelError> {
    let count = model.num_integers();
    if count == 0 {
        return crate::solve_lp(model, opts);
    }
    if count > ORACLE_MAX_INTEGERS {
        return Err(ModelError::TooManyIntegers { count, limit: ORACLE_MAX_INTEGERS });
    }
    if let Some(v) = model.variables().iter().find(|v| v.integer && !(v.lower.is_finite() && v.upper.is_finite())) {
        return Err(ModelError::UnboundedInteger(v.name.clone()));
    }
    model.validate_finite()?;
    let sign = sense_sign(model);
    let n = model.num_vars();
    let mut rs = Restrictions::new(model, opts);
    if rs.empty_root() {
        return Ok(Solution::empty(Status::Infeasible, n));
    }
    let ranges: Vec<(f64, f64)> = (0..rs.int_vars.len()).map(|k| rs.root_bounds(k)).collect();
    let mut current: Vec<f64> = ranges.iter().map(|r| r.0).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut warm = false;
    let mut visited = 0usize;
    loop {
        let fixes: Vec<(usize, f64, f64)> =
            rs.int_vars.iter().zip(&current).map(|(&j, &v)| (j, v, v)).collect();
        rs.apply(&fixes);
        visited += 1;
        match rs.solve(warm) {
            LpOutcome::Optimal => {
                let obj = rs.engine.objective();
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    best = Some((obj, rs.engine.values()));
                }
                warm = true;
            }
            LpOutcome::Unbounded => {
                let mut s = Solution::empty(Status::Unbounded, n);
                s.nodes = visited;
                return Ok(s);
            }
            LpOutcome::IterationLimit => {
                let mut s = Solution::empty(Status::IterationLimit, n);
                s.nodes = visited;
                return Ok(s);
            }
            LpOutcome::Infeasible => warm = false,
        }
        // odometer over the integral ranges, last variable fastest
        let mut k = current.len();
        loop {
            if k == 0 {
                let constant = model.objective_constant();
                return Ok(match best {
                    Some((obj, mut values)) => {
                        for &j in &rs.int_vars {
                            values[j] = values[j].round();
                        }
                        Solution {
                            status: Status::Optimal,
                            objective: sign * obj + constant,
                            values,
                            duals: None,
                            reduced_costs: None,
                            nodes: visited,
                            best_bound: sign * obj + constant,
                            iterations: rs.engine.iterations,
                        }
                    }
                    None => {
                        let mut s = Solution::empty(Status::Infeasible, n);
                        s.nodes = visited;
                        s
                    }
                });
            }
            k -= 1;
            if current[k] + 1.0 <= ranges[k].1 {
                current[k] += 1.0;
                break;
            }
            current[k] = ranges[k].0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinExpr, Relation, Sense};

    #[test]
    fn refuses_too_many_integers() {
        let mut m = OptModel::new(Sense::Minimize);
        for k in 0..21 {
            m.add_binary(format!("b{k}")).unwrap();
        }
        assert!(matches!(
            enumerate_oracle(&m, &SolverOptions::default()),
            Err(ModelError::TooManyIntegers { count: 21, limit: 20 })
        ));
    }

    #[test]
    fn refuses_unbounded_integer() {
        let mut m = OptModel::new(Sense::Minimize);
        m.add_var("k", 0.0, f64::INFINITY, true).unwrap();
        assert!(matches!(enumerate_oracle(&m, &SolverOptions::default()), Err(ModelError::UnboundedInteger(_))));
    }

    #[test]
    fn knapsack_and_infeasible_cases() {
        let mut m = OptModel::new(Sense::Maximize);
        let a = m.add_binary("a").unwrap();
        let b = m.add_binary("b").unwrap();
        m.set_objective_coef(a, 3.0);
        m.set_objective_coef(b, 2.0);
        m.add_constraint("pick", LinExpr::new().term(a, 1.0).term(b, 1.0), Relation::Le, 1.0).unwrap();
        let s = enumerate_oracle(&m, &SolverOptions::default()).unwrap();
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert_eq!(s.nodes, 4);

        m.add_constraint("half", LinExpr::new().term(a, 2.0).term(b, 2.0), Relation::Eq, 1.0).unwrap();
        let s = enumerate_oracle(&m, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, Status::Infeasible);
    }

    #[test]
    fn continuous_model_matches_lp() {
        let mut m = OptModel::new(Sense::Minimize);
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        m.set_objective_coef(x, 1.0);
        m.add_constraint("floor", LinExpr::new().term(x, 1.0), Relation::Ge, 3.0).unwrap();
        let o = enumerate_oracle(&m, &SolverOptions::default()).unwrap();
        let l = crate::solve_lp(&m, &SolverOptions::default()).unwrap();
        assert_eq!(o.objective, l.objective);
        assert_eq!(o.status, l.status);
    }
}
