//! Bounded revised simplex over the logical-variable form `A x − s = 0`.
//!
//! Column `j < n` is structural, column `n + i` is the logical of row `i` whose
//! bounds encode the row relation. Costs are always minimized internally.

use crate::lu::LuFactor;
use crate::model::{OptModel, Relation, Sense};

const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 100;
const BLAND_AFTER: usize = 1000;
const DEGENERATE_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarState {
    Basic,
    AtLower,
    AtUpper,
    AtZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct BasisSnapshot {
    head: Vec<u32>,
    state: Vec<VarState>,
}

pub(crate) struct Engine {
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<f64>,
    pub(crate) lo: Vec<f64>,
    pub(crate) up: Vec<f64>,
    cost: Vec<f64>,
    pub(crate) x: Vec<f64>,
    state: Vec<VarState>,
    head: Vec<usize>,
    pos: Vec<usize>,
    lu: LuFactor,
    feas_tol: f64,
    opt_tol: f64,
    pub(crate) iterations: usize,
    pub(crate) iteration_limit: usize,
}

impl Engine {
    pub(crate) fn new(model: &OptModel, feas_tol: f64, opt_tol: f64, iteration_limit: usize) -> Engine {
        let n = model.num_vars();
        let m = model.num_constraints();
        let mut counts = vec![0usize; n + 1];
        for c in model.constraints() {
            for (v, _) in &c.terms {
                counts[v.0 + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let nnz = col_start[n];
        let mut fill = col_start.clone();
        let mut row_idx = vec![0; nnz];
        let mut vals = vec![0.0; nnz];
        for (i, c) in model.constraints().iter().enumerate() {
            for &(v, a) in &c.terms {
                row_idx[fill[v.0]] = i;
                vals[fill[v.0]] = a;
                fill[v.0] += 1;
            }
        }
        let sign = match model.sense() {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut lo = Vec::with_capacity(n + m);
        let mut up = Vec::with_capacity(n + m);
        let mut cost = Vec::with_capacity(n + m);
        for (v, c) in model.variables().iter().zip(model.objective_coefs()) {
            lo.push(v.lower);
            up.push(v.upper);
            cost.push(sign * c);
        }
        for c in model.constraints() {
            let (l, u) = match c.relation {
                Relation::Le => (f64::NEG_INFINITY, c.rhs),
                Relation::Ge => (c.rhs, f64::INFINITY),
                Relation::Eq => (c.rhs, c.rhs),
            };
            lo.push(l);
            up.push(u);
            cost.push(0.0);
        }
        let mut eng = Engine {
            m,
            n,
            col_start,
            row_idx,
            vals,
            lo,
            up,
            cost,
            x: vec![0.0; n + m],
            state: vec![VarState::AtZero; n + m],
            head: (n..n + m).collect(),
            pos: vec![usize::MAX; n + m],
            lu: LuFactor::default(),
            feas_tol,
            opt_tol,
            iterations: 0,
            iteration_limit,
        };
        for i in 0..m {
            eng.pos[n + i] = i;
            eng.state[n + i] = VarState::Basic;
        }
        for j in 0..n {
            eng.place_nonbasic(j, None);
        }
        eng
    }

    fn place_nonbasic(&mut self, j: usize, hint: Option<VarState>) {
        let (l, u) = (self.lo[j], self.up[j]);
        let st = match hint {
            Some(VarState::AtUpper) if u.is_finite() => VarState::AtUpper,
            Some(VarState::AtLower) if l.is_finite() => VarState::AtLower,
            _ if l.is_finite() => VarState::AtLower,
            _ if u.is_finite() => VarState::AtUpper,
            _ => VarState::AtZero,
        };
        self.state[j] = st;
        self.x[j] = match st {
            VarState::AtLower => l,
            VarState::AtUpper => u,
            _ => 0.0,
        };
    }

    pub(crate) fn set_bounds(&mut self, j: usize, l: f64, u: f64) {
        self.lo[j] = l;
        self.up[j] = u;
        if self.state[j] != VarState::Basic {
            let hint = self.state[j];
            self.place_nonbasic(j, Some(hint));
        }
    }

    pub(crate) fn snapshot(&self) -> BasisSnapshot {
        BasisSnapshot { head: self.head.iter().map(|&j| j as u32).collect(), state: self.state.clone() }
    }

    pub(crate) fn restore(&mut self, snap: &BasisSnapshot) {
        self.head = snap.head.iter().map(|&j| j as usize).collect();
        self.pos.iter_mut().for_each(|p| *p = usize::MAX);
        for (p, &j) in self.head.iter().enumerate() {
            self.pos[j] = p;
        }
        for j in 0..self.n + self.m {
            if self.pos[j] == usize::MAX {
                self.place_nonbasic(j, Some(snap.state[j]));
            } else {
                self.state[j] = VarState::Basic;
            }
        }
    }

    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            (self.col_start[j]..self.col_start[j + 1]).map(|k| (self.row_idx[k], self.vals[k])).collect()
        } else {
            vec![(j - self.n, -1.0)]
        }
    }

    fn scatter(&self, j: usize, dense: &mut [f64], scale: f64) {
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                dense[self.row_idx[k]] += scale * self.vals[k];
            }
        } else {
            dense[j - self.n] -= scale;
        }
    }

    fn dot(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            (self.col_start[j]..self.col_start[j + 1]).map(|k| self.vals[k] * y[self.row_idx[k]]).sum()
        } else {
            -y[j - self.n]
        }
    }

    /// Factorizes the current basis, repairing singularity with logicals, and
    /// recomputes basic values from the nonbasic ones.
    fn refactor(&mut self) {
        loop {
            let cols: Vec<Vec<(usize, f64)>> = self.head.iter().map(|&j| self.column(j)).collect();
            match LuFactor::factor(self.m, &cols) {
                Ok(lu) => {
                    self.lu = lu;
                    break;
                }
                Err(sing) => {
                    for (&p, &r) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.head[p];
                        let logical = self.n + r;
                        self.head[p] = logical;
                        self.pos[out] = usize::MAX;
                        self.pos[logical] = p;
                        self.state[logical] = VarState::Basic;
                        self.place_nonbasic(out, None);
                    }
                }
            }
        }
        self.recompute_basics();
    }

    fn recompute_basics(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                self.scatter(j, &mut rhs, -self.x[j]);
            }
        }
        self.lu.ftran(&mut rhs);
        for (p, &j) in self.head.iter().enumerate() {
            self.x[j] = rhs[p];
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lo[j] - self.feas_tol {
            self.lo[j] - v
        } else if v > self.up[j] + self.feas_tol {
            v - self.up[j]
        } else {
            0.0
        }
    }

    fn duals_for(&mut self, cb: Vec<f64>) -> Vec<f64> {
        let mut y = cb;
        self.lu.btran(&mut y);
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64], phase_one: bool) -> f64 {
        let c = if phase_one { 0.0 } else { self.cost[j] };
        c - self.dot(j, y)
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lo[j] == self.up[j]
    }

    /// Direction of improvement for a nonbasic variable, if eligible.
    fn improving_dir(&self, j: usize, d: f64) -> Option<f64> {
        if self.is_fixed(j) {
            return None;
        }
        match self.state[j] {
            VarState::AtLower if d < -self.opt_tol => Some(1.0),
            VarState::AtUpper if d > self.opt_tol => Some(-1.0),
            VarState::AtZero if d.abs() > self.opt_tol => Some(if d < 0.0 { 1.0 } else { -1.0 }),
            _ => None,
        }
    }

    fn pivot(&mut self, p: usize, q: usize, alpha: &[f64], leave_state: VarState) {
        let out = self.head[p];
        self.head[p] = q;
        self.pos[q] = p;
        self.state[q] = VarState::Basic;
        self.pos[out] = usize::MAX;
        self.state[out] = leave_state;
        self.x[out] = match leave_state {
            VarState::AtLower => self.lo[out],
            VarState::AtUpper => self.up[out],
            _ => 0.0,
        };
        self.lu.update(p, alpha);
    }

    /// Primal simplex with a composite phase 1 that minimizes total infeasibility.
    pub(crate) fn primal(&mut self) -> LpOutcome {
        self.refactor();
        let mut degenerate_run = 0usize;
        let mut fresh = true;
        loop {
            if self.iterations >= self.iteration_limit {
                return LpOutcome::IterationLimit;
            }
            if self.lu.num_updates() >= REFACTOR_EVERY {
                self.refactor();
                fresh = true;
            }
            let mut phase_one = false;
            let mut cb = vec![0.0; self.m];
            for (p, &j) in self.head.iter().enumerate() {
                if self.x[j] < self.lo[j] - self.feas_tol {
                    cb[p] = -1.0;
                    phase_one = true;
                } else if self.x[j] > self.up[j] + self.feas_tol {
                    cb[p] = 1.0;
                    phase_one = true;
                }
            }
            if !phase_one {
                for (p, &j) in self.head.iter().enumerate() {
                    cb[p] = self.cost[j];
                }
            }
            let y = self.duals_for(cb);
            let bland = degenerate_run >= BLAND_AFTER;
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..self.n + self.m {
                if self.state[j] == VarState::Basic {
                    continue;
                }
                let d = self.reduced_cost(j, &y, phase_one);
                if let Some(dir) = self.improving_dir(j, d) {
                    if bland {
                        entering = Some((j, d, dir));
                        break;
                    }
                    if entering.is_none_or(|(_, bd, _)| d.abs() > bd.abs()) {
                        entering = Some((j, d, dir));
                    }
                }
            }
            let Some((q, _, dir)) = entering else {
                if !fresh {
                    self.refactor();
                    fresh = true;
                    continue;
                }
                return if phase_one { LpOutcome::Infeasible } else { LpOutcome::Optimal };
            };
            fresh = false;
            self.iterations += 1;

            let mut alpha = vec![0.0; self.m];
            self.scatter(q, &mut alpha, 1.0);
            self.lu.ftran(&mut alpha);

            // basic j moves by -dir·θ·alpha[p]
            let mut limits: Vec<(usize, f64, f64, VarState)> = Vec::new();
            for (p, &j) in self.head.iter().enumerate() {
                let g = -dir * alpha[p];
                if g.abs() < PIVOT_TOL {
                    continue;
                }
                let v = self.x[j];
                let (l, u) = (self.lo[j], self.up[j]);
                let below = v < l - self.feas_tol;
                let above = v > u + self.feas_tol;
                let lim = if g > 0.0 {
                    if below {
                        Some((l - v, VarState::AtLower))
                    } else if above {
                        None
                    } else if u.is_finite() {
                        Some(((u - v).max(0.0), VarState::AtUpper))
                    } else {
                        None
                    }
                } else if above {
                    Some((v - u, VarState::AtUpper))
                } else if below {
                    None
                } else if l.is_finite() {
                    Some(((v - l).max(0.0), VarState::AtLower))
                } else {
                    None
                };
                if let Some((dist, st)) = lim {
                    limits.push((p, dist, g.abs(), st));
                }
            }
            let range = self.up[q] - self.lo[q];
            let choice = if limits.is_empty() {
                None
            } else if bland {
                let mut best: Option<(usize, f64, VarState)> = None;
                for &(p, dist, g, st) in &limits {
                    let r = dist / g;
                    let better = match best {
                        None => true,
                        Some((bp, br, _)) => r < br - 1e-12 || (r <= br + 1e-12 && self.head[p] < self.head[bp]),
                    };
                    if better {
                        best = Some((p, r, st));
                    }
                }
                best
            } else {
                let theta_max = limits
                    .iter()
                    .map(|&(_, dist, g, _)| (dist + self.feas_tol) / g)
                    .fold(f64::INFINITY, f64::min);
                let mut best: Option<(usize, f64, VarState, f64)> = None;
                for &(p, dist, g, st) in &limits {
                    let r = dist / g;
                    if r <= theta_max && best.is_none_or(|(_, _, _, bg)| g > bg) {
                        best = Some((p, r, st, g));
                    }
                }
                best.map(|(p, r, st, _)| (p, r, st))
            };

            let flip = match choice {
                None => range.is_finite(),
                Some((_, theta, _)) => range.is_finite() && range <= theta,
            };
            if flip {
                for (p, &j) in self.head.iter().enumerate() {
                    self.x[j] -= dir * range * alpha[p];
                }
                let (st, val) = if dir > 0.0 {
                    (VarState::AtUpper, self.up[q])
                } else {
                    (VarState::AtLower, self.lo[q])
                };
                self.state[q] = st;
                self.x[q] = val;
                degenerate_run = 0;
                continue;
            }
            let Some((p, theta, leave_state)) = choice else {
                if phase_one {
                    // a phase-1 improving ray must hit a breakpoint; treat as numerical trouble
                    self.refactor();
                    fresh = true;
                    if self.iterations >= self.iteration_limit {
                        return LpOutcome::IterationLimit;
                    }
                    continue;
                }
                return LpOutcome::Unbounded;
            };
            let theta = theta.max(0.0);
            for (pp, &j) in self.head.iter().enumerate() {
                self.x[j] -= dir * theta * alpha[pp];
            }
            self.x[q] += dir * theta;
            if theta <= DEGENERATE_STEP {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(p, q, &alpha, leave_state);
        }
    }

    /// Dual simplex from a dual-feasible basis. Returns `None` when the basis
    /// cannot be made dual feasible by bound flips, so the caller falls back to primal.
    pub(crate) fn dual(&mut self) -> Option<LpOutcome> {
        self.refactor();
        let mut fresh = true;
        let mut stall = 0usize;
        loop {
            if self.iterations >= self.iteration_limit {
                return Some(LpOutcome::IterationLimit);
            }
            if self.lu.num_updates() >= REFACTOR_EVERY {
                self.refactor();
                fresh = true;
            }
            let cb: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
            let y = self.duals_for(cb);
            let mut d = vec![0.0; self.n + self.m];
            let mut flipped = false;
            for j in 0..self.n + self.m {
                if self.state[j] == VarState::Basic {
                    continue;
                }
                let dj = self.reduced_cost(j, &y, false);
                d[j] = dj;
                if self.is_fixed(j) {
                    continue;
                }
                match self.state[j] {
                    VarState::AtLower if dj < -self.opt_tol => {
                        if !self.up[j].is_finite() {
                            return None;
                        }
                        self.state[j] = VarState::AtUpper;
                        self.x[j] = self.up[j];
                        flipped = true;
                    }
                    VarState::AtUpper if dj > self.opt_tol => {
                        if !self.lo[j].is_finite() {
                            return None;
                        }
                        self.state[j] = VarState::AtLower;
                        self.x[j] = self.lo[j];
                        flipped = true;
                    }
                    VarState::AtZero if dj.abs() > self.opt_tol => return None,
                    _ => {}
                }
            }
            if flipped {
                self.recompute_basics();
            }

            let mut leave: Option<(usize, f64)> = None;
            for (p, &j) in self.head.iter().enumerate() {
                let inf = self.infeasibility(j);
                if inf > 0.0 && leave.is_none_or(|(_, bi)| inf > bi) {
                    leave = Some((p, inf));
                }
            }
            let Some((p, _)) = leave else {
                if !fresh {
                    self.refactor();
                    fresh = true;
                    continue;
                }
                return Some(LpOutcome::Optimal);
            };
            fresh = false;
            self.iterations += 1;
            let jl = self.head[p];
            let increase = self.x[jl] < self.lo[jl];
            let target = if increase { self.lo[jl] } else { self.up[jl] };

            let mut rho = vec![0.0; self.m];
            rho[p] = 1.0;
            self.lu.btran(&mut rho);

            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            for j in 0..self.n + self.m {
                if self.state[j] == VarState::Basic || self.is_fixed(j) {
                    continue;
                }
                let a = self.dot(j, &rho);
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                // x_leave changes by -a·Δx_j
                let ok = match self.state[j] {
                    VarState::AtLower => (a < 0.0) == increase,
                    VarState::AtUpper => (a > 0.0) == increase,
                    VarState::AtZero => true,
                    VarState::Basic => false,
                };
                if ok {
                    cands.push((j, d[j].abs(), a));
                }
            }
            if cands.is_empty() {
                return Some(LpOutcome::Infeasible);
            }
            let theta_max = cands
                .iter()
                .map(|&(_, dj, a)| (dj + self.opt_tol) / a.abs())
                .fold(f64::INFINITY, f64::min);
            let mut best: Option<(usize, f64)> = None;
            for &(j, dj, a) in &cands {
                if dj / a.abs() <= theta_max && best.is_none_or(|(_, ba)| a.abs() > ba.abs()) {
                    best = Some((j, a));
                }
            }
            let (q, _) = best.expect("nonempty candidate set");

            let mut alpha = vec![0.0; self.m];
            self.scatter(q, &mut alpha, 1.0);
            self.lu.ftran(&mut alpha);
            if alpha[p].abs() < PIVOT_TOL {
                self.refactor();
                fresh = true;
                stall += 1;
                if stall > 50 {
                    return None;
                }
                continue;
            }
            let delta = (self.x[jl] - target) / alpha[p];
            for (pp, &j) in self.head.iter().enumerate() {
                self.x[j] -= delta * alpha[pp];
            }
            self.x[q] += delta;
            let st = if increase { VarState::AtLower } else { VarState::AtUpper };
            self.pivot(p, q, &alpha, st);
        }
    }

    /// Dual simplex when the basis allows it, primal simplex otherwise.
    pub(crate) fn solve(&mut self, warm: bool) -> LpOutcome {
        if warm {
            if let Some(out) = self.dual() {
                if out != LpOutcome::IterationLimit || self.iterations >= self.iteration_limit {
                    return out;
                }
            }
        }
        self.primal()
    }

    pub(crate) fn objective(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
    }

    /// Row duals and structural reduced costs for the minimization form.
    pub(crate) fn duals(&mut self) -> (Vec<f64>, Vec<f64>) {
        let cb: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
        let y = self.duals_for(cb);
        let rc = (0..self.n)
            .map(|j| if self.state[j] == VarState::Basic { 0.0 } else { self.reduced_cost(j, &y, false) })
            .collect();
        (y, rc)
    }

    pub(crate) fn values(&self) -> Vec<f64> {
        self.x[..self.n].to_vec()
    }
}
