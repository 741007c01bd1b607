use std::collections::HashSet;
use std::fmt::Write;

use crate::error::ModelError;
use crate::model::{OptModel, Sense, VarId};

fn sanitize(raw: &str, taken: &mut HashSet<String>) -> String {
    let mut base: String = raw
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if base.is_empty() || base.starts_with(|c: char| c.is_ascii_digit()) {
        base.insert(0, '_');
    }
    let mut name = base.clone();
    let mut k = 2;
    while !taken.insert(name.clone()) {
        name = format!("{base}_{k}");
        k += 1;
    }
    name
}

fn num(v: f64) -> String {
    format!("{v:.11e}")
}

fn write_terms(out: &mut String, terms: &[(VarId, f64)], names: &[String]) {
    for (k, &(v, a)) in terms.iter().enumerate() {
        let sign = if a < 0.0 { "-" } else { "+" };
        if k == 0 {
            if a < 0.0 {
                out.push_str(" -");
            }
        } else {
            let _ = write!(out, " {sign}");
        }
        let _ = write!(out, " {} {}", num(a.abs()), names[v.0]);
    }
}

/// Renders the model in the LP text format understood by common MILP solvers.
pub fn export_lp_text(model: &OptModel) -> Result<String, ModelError> {
    model.validate_finite()?;
    let mut taken = HashSet::new();
    let names: Vec<String> = model.variables().iter().map(|v| sanitize(&v.name, &mut taken)).collect();
    let mut row_taken = HashSet::from(["obj".to_string()]);
    let rows: Vec<String> = model.constraints().iter().map(|c| sanitize(&c.name, &mut row_taken)).collect();

    let mut out = String::new();
    out.push_str(match model.sense() {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    let obj_terms: Vec<(VarId, f64)> = model
        .objective_coefs()
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(j, &c)| (VarId(j), c))
        .collect();
    write_terms(&mut out, &obj_terms, &names);
    let k = model.objective_constant();
    if k != 0.0 {
        let sign = if k < 0.0 { "-" } else { "+" };
        let _ = write!(out, " {sign} {}", num(k.abs()));
    }
    out.push('\n');

    if model.num_constraints() > 0 {
        out.push_str("Subject To\n");
        for (c, name) in model.constraints().iter().zip(&rows) {
            let _ = write!(out, " {name}:");
            if c.terms.is_empty() && !names.is_empty() {
                let _ = write!(out, " {} {}", num(0.0), names[0]);
            }
            write_terms(&mut out, &c.terms, &names);
            let _ = writeln!(out, " {} {}", c.relation, num(c.rhs));
        }
    }

    let mut bounds = String::new();
    let mut general = String::new();
    let mut binary = String::new();
    for (v, name) in model.variables().iter().zip(&names) {
        if v.integer && v.lower == 0.0 && v.upper == 1.0 {
            let _ = writeln!(binary, " {name}");
            continue;
        }
        if v.integer {
            let _ = writeln!(general, " {name}");
        }
        let lo_inf = v.lower == f64::NEG_INFINITY;
        let up_inf = v.upper == f64::INFINITY;
        if lo_inf && up_inf {
            let _ = writeln!(bounds, " {name} free");
        } else if v.lower == v.upper {
            let _ = writeln!(bounds, " {name} = {}", num(v.lower));
        } else if v.lower == 0.0 && up_inf {
        } else {
            let lo = if lo_inf { "-inf".to_string() } else { num(v.lower) };
            let up = if up_inf { "+inf".to_string() } else { num(v.upper) };
            let _ = writeln!(bounds, " {lo} <= {name} <= {up}");
        }
    }
    for (title, body) in [("Bounds", bounds), ("General", general), ("Binary", binary)] {
        if !body.is_empty() {
            out.push_str(title);
            out.push('\n');
            out.push_str(&body);
        }
    }
    out.push_str("End\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinExpr, Relation};

    #[test]
    fn empty_model_is_header_and_end() {
        let m = OptModel::new(Sense::Minimize);
        assert_eq!(export_lp_text(&m).unwrap(), "Minimize\n obj:\nEnd\n");
    }

    #[test]
    fn names_are_sanitized_and_deduplicated() {
        let mut m = OptModel::new(Sense::Maximize);
        let a = m.add_continuous("p[1,2]", 0.0, 1.0).unwrap();
        let b = m.add_continuous("p(1,2)", 0.0, 1.0).unwrap();
        let c = m.add_continuous("3way", 0.0, 1.0).unwrap();
        m.set_objective_coef(a, 1.0);
        m.set_objective_coef(b, -2.0);
        m.set_objective_coef(c, 0.5);
        let text = export_lp_text(&m).unwrap();
        assert!(text.contains(" p_1_2_ "), "{text}");
        assert!(text.contains(" p_1_2__2"), "{text}");
        assert!(text.contains(" _3way"), "{text}");
        assert!(text.contains("- 2.00000000000e0 p_1_2__2"), "{text}");
    }

    #[test]
    fn non_finite_coefficient_is_invalid() {
        let mut m = OptModel::new(Sense::Minimize);
        let x = m.add_continuous("x", 0.0, 1.0).unwrap();
        m.add_constraint("bad", LinExpr::new().term(x, f64::NAN), Relation::Le, 1.0).unwrap();
        assert!(matches!(export_lp_text(&m), Err(ModelError::InvalidModel(_))));
        let mut m = OptModel::new(Sense::Minimize);
        let x = m.add_continuous("x", 0.0, 1.0).unwrap();
        m.set_objective_coef(x, f64::INFINITY);
        assert!(matches!(export_lp_text(&m), Err(ModelError::InvalidModel(_))));
    }
}
