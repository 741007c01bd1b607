use std::collections::HashSet;
use std::fmt;

use crate::error::ModelError;

/// Handle to a variable of an [`OptModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Handle to a constraint row of an [`OptModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violate this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.relation {
            Relation::Le => (act - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - act).max(0.0),
            Relation::Eq => (act - self.rhs).abs(),
        }
    }
}

/// Sparse affine expression `Σ a_j x_j + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn term(mut self, var: VarId, coef: f64) -> Self {
        self.terms.push((var, coef));
        self
    }

    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn add_term(&mut self, var: VarId, coef: f64) {
        self.terms.push((var, coef));
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(v, a)| a * values[v.0]).sum::<f64>()
    }

    fn negated(&self) -> LinExpr {
        LinExpr {
            terms: self.terms.iter().map(|&(v, a)| (v, -a)).collect(),
            constant: -self.constant,
        }
    }

    /// Merges duplicate variables and drops exact zeros, keeping first-occurrence order.
    pub(crate) fn compacted(&self) -> Vec<(VarId, f64)> {
        let mut out: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for &(v, a) in &self.terms {
            if let Some(slot) = out.iter_mut().find(|(w, _)| *w == v) {
                slot.1 += a;
            } else {
                out.push((v, a));
            }
        }
        out.retain(|(_, a)| *a != 0.0);
        out
    }
}

/// Linear or mixed-integer linear model.
///
/// Variables and rows keep declaration order; that order is what the solvers
/// use for tie-breaking and what the LP text export emits.
#[derive(Debug, Clone)]
pub struct OptModel {
    sense: Sense,
    vars: Vec<Variable>,
    objective: Vec<f64>,
    objective_constant: f64,
    constraints: Vec<Constraint>,
    var_names: HashSet<String>,
    con_names: HashSet<String>,
}

impl OptModel {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            vars: Vec::new(),
            objective: Vec::new(),
            objective_constant: 0.0,
            constraints: Vec::new(),
            var_names: HashSet::new(),
            con_names: HashSet::new(),
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective_coefs(&self) -> &[f64] {
        &self.objective
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_integers(&self) -> usize {
        self.vars.iter().filter(|v| v.integer).count()
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn constraint(&self, id: ConId) -> &Constraint {
        &self.constraints[id.0]
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        integer: bool,
    ) -> Result<VarId, ModelError> {
        let name = name.into();
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(ModelError::InvertedBounds { name, lower, upper });
        }
        if !self.var_names.insert(name.clone()) {
            return Err(ModelError::DuplicateName(name));
        }
        self.vars.push(Variable { name, lower, upper, integer });
        self.objective.push(0.0);
        Ok(VarId(self.vars.len() - 1))
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId, ModelError> {
        self.add_var(name, lower, upper, false)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId, ModelError> {
        self.add_var(name, 0.0, 1.0, true)
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) -> Result<(), ModelError> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(ModelError::InvertedBounds { name: self.vars[var.0].name.clone(), lower, upper });
        }
        let v = &mut self.vars[var.0];
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    pub fn set_objective_coef(&mut self, var: VarId, coef: f64) {
        self.objective[var.0] = coef;
    }

    pub fn add_objective_coef(&mut self, var: VarId, coef: f64) {
        self.objective[var.0] += coef;
    }

    pub fn add_objective_constant(&mut self, c: f64) {
        self.objective_constant += c;
    }

    /// Adds `expr  relation  rhs`; the expression constant is moved to the right-hand side.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        expr: LinExpr,
        relation: Relation,
        rhs: f64,
    ) -> Result<ConId, ModelError> {
        let name = name.into();
        for &(v, _) in &expr.terms {
            if v.0 >= self.vars.len() {
                return Err(ModelError::UnknownVariable { constraint: name, index: v.0 });
            }
        }
        if !self.con_names.insert(name.clone()) {
            return Err(ModelError::DuplicateName(name));
        }
        let terms = expr.compacted();
        self.constraints.push(Constraint { name, terms, relation, rhs: rhs - expr.constant });
        Ok(ConId(self.constraints.len() - 1))
    }

    /// Epigraph reformulation of a penalized absolute value.
    ///
    /// Introduces `t ≥ 0` with `expr ≤ t` and `-expr ≤ t`, and charges `weight·t`
    /// in the direction that penalizes it (added for minimization, subtracted for
    /// maximization). At any optimum with `weight > 0`, `t = |expr|`.
    pub fn add_abs_term(&mut self, name: impl Into<String>, expr: LinExpr, weight: f64) -> Result<VarId, ModelError> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(ModelError::InvalidParameter(format!(
                "absolute-value penalty weight must be finite and non-negative, got {weight}"
            )));
        }
        let name = name.into();
        let t = self.add_continuous(name.clone(), 0.0, f64::INFINITY)?;
        let upper = expr.clone().term(t, -1.0);
        self.add_constraint(format!("{name}_pos"), upper, Relation::Le, 0.0)?;
        let lower = expr.negated().term(t, -1.0);
        self.add_constraint(format!("{name}_neg"), lower, Relation::Le, 0.0)?;
        let signed = match self.sense {
            Sense::Minimize => weight,
            Sense::Maximize => -weight,
        };
        self.add_objective_coef(t, signed);
        Ok(t)
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().zip(values).map(|(c, x)| c * x).sum::<f64>()
    }

    /// Largest bound or row violation at `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(0.0, f64::max);
        self.constraints.iter().map(|c| c.violation(values)).fold(bounds, f64::max)
    }

    pub(crate) fn validate_finite(&self) -> Result<(), ModelError> {
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(ModelError::InvalidModel(format!(
                    "objective coefficient of `{}` is {c}",
                    self.vars[j].name
                )));
            }
        }
        if !self.objective_constant.is_finite() {
            return Err(ModelError::InvalidModel("objective constant is not finite".into()));
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(ModelError::InvalidModel(format!("right-hand side of `{}` is {}", c.name, c.rhs)));
            }
            if let Some((v, a)) = c.terms.iter().find(|(_, a)| !a.is_finite()) {
                return Err(ModelError::InvalidModel(format!(
                    "coefficient of `{}` in `{}` is {a}",
                    self.vars[v.0].name, c.name
                )));
            }
        }
        Ok(())
    }
}
