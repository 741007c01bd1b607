use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

use crate::error::ModelError;
use crate::model::{OptModel, Sense};
use crate::simplex::{BasisSnapshot, Engine, LpOutcome};
use crate::solution::{Solution, SolverOptions, Status};

const HEURISTIC_EVERY: usize = 100;

struct Node {
    bound: f64,
    depth: usize,
    id: usize,
    fixes: Rc<Vec<(usize, f64, f64)>>,
    basis: Option<Rc<BasisSnapshot>>,
    branch: Option<Branch>,
}

/// How a node was created from its parent, for pseudo-cost updates.
#[derive(Clone, Copy)]
struct Branch {
    k: usize,
    up: bool,
    dist: f64,
    parent_obj: f64,
}

/// Average objective degradation per unit of rounding, per integral
/// variable and direction.
struct PseudoCosts {
    sum: [Vec<f64>; 2],
    count: [Vec<u32>; 2],
}

impl PseudoCosts {
    fn new(n: usize) -> Self {
        PseudoCosts { sum: [vec![0.0; n], vec![0.0; n]], count: [vec![0; n], vec![0; n]] }
    }

    fn record(&mut self, b: Branch, obj: f64) {
        let d = b.up as usize;
        self.sum[d][b.k] += (obj - b.parent_obj).max(0.0) / b.dist.max(1e-9);
        self.count[d][b.k] += 1;
    }

    fn mean(&self, d: usize) -> f64 {
        let (s, c) = self.sum[d]
            .iter()
            .zip(&self.count[d])
            .filter(|(_, &c)| c > 0)
            .fold((0.0, 0u32), |(s, n), (v, &c)| (s + v / c as f64, n + 1));
        if c == 0 {
            1.0
        } else {
            s / c as f64
        }
    }

    fn get(&self, d: usize, k: usize, fallback: f64) -> f64 {
        match self.count[d][k] {
            0 => fallback,
            c => self.sum[d][k] / c as f64,
        }
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap: the best node compares greatest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

pub(crate) fn sense_sign(model: &OptModel) -> f64 {
    match model.sense() {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    }
}

/// Shared state for solving LP restrictions of one model with integer fixings.
pub(crate) struct Restrictions {
    pub(crate) engine: Engine,
    pub(crate) int_vars: Vec<usize>,
    root_lo: Vec<f64>,
    root_up: Vec<f64>,
    iteration_budget: usize,
}

impl Restrictions {
    pub(crate) fn new(model: &OptModel, opts: &SolverOptions) -> Restrictions {
        let mut engine = Engine::new(model, opts.feas_tol, opts.opt_tol, opts.iteration_limit);
        let int_vars: Vec<usize> = model
            .variables()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.integer)
            .map(|(j, _)| j)
            .collect();
        let mut root_lo = Vec::with_capacity(int_vars.len());
        let mut root_up = Vec::with_capacity(int_vars.len());
        for &j in &int_vars {
            let l = (engine.lo[j] - opts.int_tol).ceil();
            let u = (engine.up[j] + opts.int_tol).floor();
            root_lo.push(l);
            root_up.push(u);
            engine.set_bounds(j, l, u.max(l));
        }
        Restrictions { engine, int_vars, root_lo, root_up, iteration_budget: opts.iteration_limit }
    }

    pub(crate) fn root_bounds(&self, k: usize) -> (f64, f64) {
        (self.root_lo[k], self.root_up[k])
    }

    pub(crate) fn apply(&mut self, fixes: &[(usize, f64, f64)]) {
        for (k, &j) in self.int_vars.iter().enumerate() {
            self.engine.set_bounds(j, self.root_lo[k], self.root_up[k]);
        }
        for &(j, l, u) in fixes {
            self.engine.set_bounds(j, l, u);
        }
    }

    pub(crate) fn solve(&mut self, warm: bool) -> LpOutcome {
        self.engine.iteration_limit = self.engine.iterations + self.iteration_budget;
        self.engine.solve(warm)
    }

    pub(crate) fn empty_root(&self) -> bool {
        self.root_lo.iter().zip(&self.root_up).any(|(l, u)| l > u)
    }
}

struct Incumbent {
    obj: f64,
    values: Vec<f64>,
}

fn gap_allowance(opts: &SolverOptions, inc: f64) -> f64 {
    opts.gap_tol.max(opts.gap_tol * inc.abs())
}

/// Fixes every integral variable at the rounding of `x` and solves the continuous restriction.
fn fix_and_solve(
    rs: &mut Restrictions,
    base: &[(usize, f64, f64)],
    x: &[f64],
) -> Option<(f64, Vec<f64>)> {
    let snap = rs.engine.snapshot();
    let mut fixes = base.to_vec();
    for (k, &j) in rs.int_vars.iter().enumerate() {
        let (l, u) = rs.root_bounds(k);
        let r = x[j].round().clamp(l, u);
        fixes.push((j, r, r));
    }
    rs.apply(&fixes);
    let out = rs.solve(true);
    let result = (out == LpOutcome::Optimal).then(|| (rs.engine.objective(), rs.engine.values()));
    rs.engine.restore(&snap);
    result
}

/// Fractional diving: fixes every integral-valued variable, rounds the least
/// fractional one, re-solves and repeats until the solution is integral.
/// A rounding that makes the LP infeasible is flipped once before giving up.
fn dive(
    rs: &mut Restrictions,
    base: &[(usize, f64, f64)],
    x: &[f64],
    int_tol: f64,
    cutoff: f64,
) -> Option<(f64, Vec<f64>)> {
    let snap = rs.engine.snapshot();
    let mut fixes = base.to_vec();
    let mut x = x.to_vec();
    let mut fixed = vec![false; rs.int_vars.len()];
    for &(j, l, u) in base {
        if l == u {
            if let Some(k) = rs.int_vars.iter().position(|&v| v == j) {
                fixed[k] = true;
            }
        }
    }
    let result = loop {
        let mut pick: Option<(usize, f64)> = None;
        for (k, &j) in rs.int_vars.iter().enumerate() {
            if fixed[k] {
                continue;
            }
            let f = x[j] - x[j].floor();
            let dist = f.min(1.0 - f);
            if dist <= int_tol {
                let r = x[j].round();
                fixes.push((j, r, r));
                fixed[k] = true;
            } else if pick.is_none_or(|(_, d)| dist < d) {
                pick = Some((k, dist));
            }
        }
        let Some((k, _)) = pick else {
            rs.apply(&fixes);
            break (rs.solve(true) == LpOutcome::Optimal).then(|| (rs.engine.objective(), rs.engine.values()));
        };
        let j = rs.int_vars[k];
        let (l, u) = rs.root_bounds(k);
        let near = x[j].round().clamp(l, u);
        let far = if near > x[j] { x[j].floor() } else { x[j].ceil() }.clamp(l, u);
        fixed[k] = true;
        let mut solved = false;
        for r in [near, far] {
            fixes.push((j, r, r));
            rs.apply(&fixes);
            if rs.solve(true) == LpOutcome::Optimal && rs.engine.objective() < cutoff {
                solved = true;
                break;
            }
            fixes.pop();
        }
        if !solved {
            rs.engine.restore(&snap);
            return None;
        }
        x = rs.engine.values();
    };
    rs.engine.restore(&snap);
    result
}

/// Picks the fractional variable with the best pseudo-cost product score;
/// variables never branched on are scored with the running averages.
fn select_branch(rs: &Restrictions, x: &[f64], int_tol: f64, pc: &PseudoCosts) -> Option<(usize, usize)> {
    const EPS: f64 = 1e-6;
    let fallback = [pc.mean(0), pc.mean(1)];
    let mut best: Option<(usize, usize, f64)> = None;
    for (k, &j) in rs.int_vars.iter().enumerate() {
        let f = x[j] - x[j].floor();
        if f.min(1.0 - f) <= int_tol {
            continue;
        }
        let down = pc.get(0, k, fallback[0]) * f;
        let up = pc.get(1, k, fallback[1]) * (1.0 - f);
        let score = down.max(EPS) * up.max(EPS);
        if best.is_none_or(|(_, _, b)| score > b) {
            best = Some((k, j, score));
        }
    }
    best.map(|(k, j, _)| (k, j))
}

/// Best-bound branch and bound over LP relaxations.
pub fn solve_milp(model: &OptModel, opts: &SolverOptions) -> Result<Solution, ModelError> {
    if opts.node_limit == 0 {
        return Err(ModelError::InvalidParameter("node_limit must be at least 1".into()));
    }
    model.validate_finite()?;
    let sign = sense_sign(model);
    let n = model.num_vars();
    let constant = model.objective_constant();
    let mut rs = Restrictions::new(model, opts);
    if rs.empty_root() {
        return Ok(Solution::empty(Status::Infeasible, n));
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        id: 0,
        fixes: Rc::new(Vec::new()),
        basis: None,
        branch: None,
    });
    let mut pc = PseudoCosts::new(rs.int_vars.len());
    let mut next_id = 1;
    let mut nodes = 0usize;
    let mut incumbent: Option<Incumbent> = None;
    let mut limit_hit = false;

    while let Some(node) = heap.peek() {
        if let Some(inc) = &incumbent {
            if node.bound >= inc.obj - gap_allowance(opts, inc.obj) {
                break;
            }
        }
        if nodes >= opts.node_limit {
            limit_hit = true;
            break;
        }
        let node = heap.pop().expect("peeked");
        nodes += 1;
        rs.apply(&node.fixes);
        if let Some(b) = &node.basis {
            rs.engine.restore(b);
        }
        let outcome = rs.solve(node.basis.is_some());
        match outcome {
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => {
                if node.depth == 0 {
                    let mut s = Solution::empty(Status::Unbounded, n);
                    s.nodes = nodes;
                    s.iterations = rs.engine.iterations;
                    return Ok(s);
                }
                continue;
            }
            LpOutcome::IterationLimit => {
                limit_hit = true;
                break;
            }
            LpOutcome::Optimal => {}
        }
        let obj = rs.engine.objective();
        if let Some(b) = node.branch {
            pc.record(b, obj);
        }
        if let Some(inc) = &incumbent {
            if obj >= inc.obj - gap_allowance(opts, inc.obj) {
                continue;
            }
        }
        let x = rs.engine.values();
        let snap = Rc::new(rs.engine.snapshot());
        let Some((k, j)) = select_branch(&rs, &x, opts.int_tol, &pc) else {
            let candidate = fix_and_solve(&mut rs, &node.fixes, &x).unwrap_or((obj, x.clone()));
            if incumbent.as_ref().is_none_or(|inc| candidate.0 < inc.obj) {
                incumbent = Some(Incumbent { obj: candidate.0, values: candidate.1 });
            }
            continue;
        };
        if node.depth == 0 || nodes.is_multiple_of(HEURISTIC_EVERY) {
            let cutoff = incumbent.as_ref().map_or(f64::INFINITY, |inc| inc.obj);
            let rounded = fix_and_solve(&mut rs, &node.fixes, &x);
            let dived = dive(&mut rs, &node.fixes, &x, opts.int_tol, cutoff);
            for (hobj, hx) in rounded.into_iter().chain(dived) {
                if incumbent.as_ref().is_none_or(|inc| hobj < inc.obj) {
                    incumbent = Some(Incumbent { obj: hobj, values: hx });
                }
            }
        }
        let (mut lo, mut up) = rs.root_bounds(k);
        for &(v, l, u) in node.fixes.iter() {
            if v == j {
                lo = l;
                up = u;
            }
        }
        let f = x[j] - x[j].floor();
        let down = ((j, lo, x[j].floor()), Branch { k, up: false, dist: f, parent_obj: obj });
        let upb = ((j, x[j].ceil(), up), Branch { k, up: true, dist: 1.0 - f, parent_obj: obj });
        let order = if f >= 0.5 { [upb, down] } else { [down, upb] };
        for (fix, branch) in order {
            let mut fixes = (*node.fixes).clone();
            fixes.retain(|(v, _, _)| *v != j);
            fixes.push(fix);
            heap.push(Node {
                bound: obj,
                depth: node.depth + 1,
                id: next_id,
                fixes: Rc::new(fixes),
                basis: Some(snap.clone()),
                branch: Some(branch),
            });
            next_id += 1;
        }
    }

    let open_bound = heap.iter().map(|nd| nd.bound).fold(f64::INFINITY, f64::min);
    let best_bound_min = incumbent.as_ref().map_or(open_bound, |inc| inc.obj.min(open_bound));
    let status = if limit_hit {
        Status::IterationLimit
    } else if incumbent.is_some() {
        Status::Optimal
    } else {
        Status::Infeasible
    };
    let mut sol = match incumbent {
        Some(inc) => {
            let mut values = inc.values;
            for &j in &rs.int_vars {
                values[j] = values[j].round();
            }
            Solution {
                status,
                objective: sign * inc.obj + constant,
                values,
                duals: None,
                reduced_costs: None,
                nodes,
                best_bound: sign * best_bound_min + constant,
                iterations: 0,
            }
        }
        None => {
            let mut s = Solution::empty(status, n);
            if best_bound_min.is_finite() {
                s.best_bound = sign * best_bound_min + constant;
            }
            s
        }
    };
    sol.nodes = nodes;
    sol.iterations = rs.engine.iterations;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinExpr, Relation};

    #[test]
    fn two_binary_knapsack() {
        let mut m = OptModel::new(Sense::Maximize);
        let a = m.add_binary("a").unwrap();
        let b = m.add_binary("b").unwrap();
        m.set_objective_coef(a, 3.0);
        m.set_objective_coef(b, 2.0);
        m.add_constraint("pick", LinExpr::new().term(a, 1.0).term(b, 1.0), Relation::Le, 1.0).unwrap();
        let s = solve_milp(&m, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-9);
        assert_eq!(s.value(a), 1.0);
        assert_eq!(s.value(b), 0.0);
    }

    #[test]
    fn zero_node_limit_is_rejected() {
        let m = OptModel::new(Sense::Minimize);
        let opts = SolverOptions { node_limit: 0, ..Default::default() };
        assert!(matches!(solve_milp(&m, &opts), Err(ModelError::InvalidParameter(_))));
    }

    #[test]
    fn assignment_polytope_solves_at_root() {
        let cost = [[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let mut m = OptModel::new(Sense::Minimize);
        let mut x = [[crate::model::VarId(0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                x[i][j] = m.add_binary(format!("x{i}{j}")).unwrap();
                m.set_objective_coef(x[i][j], cost[i][j]);
            }
        }
        for i in 0..3 {
            let row = (0..3).fold(LinExpr::new(), |e, j| e.term(x[i][j], 1.0));
            m.add_constraint(format!("r{i}"), row, Relation::Eq, 1.0).unwrap();
            let col = (0..3).fold(LinExpr::new(), |e, k| e.term(x[k][i], 1.0));
            m.add_constraint(format!("c{i}"), col, Relation::Eq, 1.0).unwrap();
        }
        let s = solve_milp(&m, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 5.0).abs() < 1e-9);
        assert_eq!(s.nodes, 1);
    }

    #[test]
    fn node_limit_returns_incumbent() {
        let mut m = OptModel::new(Sense::Maximize);
        let w = [5.0, 7.0, 4.0, 3.0, 6.0, 8.0];
        let v = [6.0, 9.0, 5.0, 3.5, 7.0, 10.5];
        let mut cap = LinExpr::new();
        for k in 0..w.len() {
            let b = m.add_binary(format!("b{k}")).unwrap();
            m.set_objective_coef(b, v[k]);
            cap.add_term(b, w[k]);
        }
        m.add_constraint("cap", cap, Relation::Le, 15.5).unwrap();
        let opts = SolverOptions { node_limit: 1, ..Default::default() };
        let s = solve_milp(&m, &opts).unwrap();
        assert_eq!(s.nodes, 1);
        assert!(matches!(s.status, Status::IterationLimit | Status::Optimal));
    }
}
