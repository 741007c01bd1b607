use std::collections::HashMap;

use gridsched_optmodel::{export_lp_text, solve, LinExpr, OptModel, Relation, Sense, SolverOptions, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn single_row_model() -> OptModel {
    let mut m = OptModel::new(Sense::Maximize);
    let x = m.add_continuous("load kw", 0.0, 12.5).unwrap();
    m.set_objective_coef(x, 0.125);
    m.add_constraint("cap", LinExpr::new().term(x, 2.0), Relation::Le, 17.0).unwrap();
    m
}

#[test]
fn single_row_matches_golden_file() {
    let text = export_lp_text(&single_row_model()).unwrap();
    assert_eq!(text, include_str!("golden/single_row.lp"));
}

/// Minimal reader for the subset of the LP format produced by the exporter.
fn read_lp(text: &str) -> OptModel {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty()).peekable();
    let sense = match lines.next().unwrap() {
        "Minimize" => Sense::Minimize,
        "Maximize" => Sense::Maximize,
        other => panic!("bad header {other}"),
    };
    let mut model = OptModel::new(sense);
    let mut ids = HashMap::new();
    let mut var = |m: &mut OptModel, name: &str| {
        *ids.entry(name.to_string())
            .or_insert_with(|| m.add_continuous(name, 0.0, f64::INFINITY).unwrap())
    };
    let parse_terms = |tokens: &[&str]| -> (Vec<(String, f64)>, f64) {
        let mut terms = Vec::new();
        let mut constant = 0.0;
        let mut sign = 1.0;
        let mut k = 0;
        while k < tokens.len() {
            match tokens[k] {
                "+" => sign = 1.0,
                "-" => sign = -1.0,
                tok => {
                    let coef: f64 = tok.parse().unwrap();
                    if k + 1 < tokens.len() && !["+", "-"].contains(&tokens[k + 1]) {
                        terms.push((tokens[k + 1].to_string(), sign * coef));
                        k += 1;
                    } else {
                        constant += sign * coef;
                    }
                    sign = 1.0;
                }
            }
            k += 1;
        }
        (terms, constant)
    };
    let obj_line = lines.next().unwrap();
    let tokens: Vec<&str> = obj_line.split_whitespace().skip(1).collect();
    let (terms, constant) = parse_terms(&tokens);
    for (name, c) in terms {
        let v = var(&mut model, &name);
        model.set_objective_coef(v, c);
    }
    model.add_objective_constant(constant);
    let mut section = "";
    for line in lines {
        match line {
            "Subject To" | "Bounds" | "General" | "Binary" => {
                section = line;
                continue;
            }
            "End" => break,
            _ => {}
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match section {
            "Subject To" => {
                let name = tokens[0].trim_end_matches(':');
                let n = tokens.len();
                let rel = match tokens[n - 2] {
                    "<=" => Relation::Le,
                    ">=" => Relation::Ge,
                    "=" => Relation::Eq,
                    r => panic!("bad relation {r}"),
                };
                let rhs: f64 = tokens[n - 1].parse().unwrap();
                let (terms, _) = parse_terms(&tokens[1..n - 2]);
                let mut e = LinExpr::new();
                for (vn, a) in terms {
                    e.add_term(var(&mut model, &vn), a);
                }
                model.add_constraint(name, e, rel, rhs).unwrap();
            }
            "Bounds" => {
                let parse = |t: &str| match t {
                    "-inf" => f64::NEG_INFINITY,
                    "+inf" => f64::INFINITY,
                    v => v.parse().unwrap(),
                };
                if tokens.len() == 2 && tokens[1] == "free" {
                    let v = var(&mut model, tokens[0]);
                    model.set_bounds(v, f64::NEG_INFINITY, f64::INFINITY).unwrap();
                } else if tokens.len() == 3 && tokens[1] == "=" {
                    let v = var(&mut model, tokens[0]);
                    let b = parse(tokens[2]);
                    model.set_bounds(v, b, b).unwrap();
                } else {
                    let v = var(&mut model, tokens[2]);
                    model.set_bounds(v, parse(tokens[0]), parse(tokens[4])).unwrap();
                }
            }
            "General" | "Binary" => {
                let v = var(&mut model, tokens[0]);
                let (l, u) = if section == "Binary" { (0.0, 1.0) } else {
                    let old = model.var(v);
                    (old.lower, old.upper)
                };
                set_integral(&mut model, v, l, u);
            }
            _ => panic!("content outside a section: {line}"),
        }
    }
    model
}

fn set_integral(model: &mut OptModel, v: gridsched_optmodel::VarId, l: f64, u: f64) {
    let mut rebuilt = OptModel::new(model.sense());
    for (j, var) in model.variables().iter().enumerate() {
        let integral = var.integer || j == v.0;
        let (lo, up) = if j == v.0 { (l, u) } else { (var.lower, var.upper) };
        let id = rebuilt.add_var(var.name.clone(), lo, up, integral).unwrap();
        rebuilt.set_objective_coef(id, model.objective_coefs()[j]);
    }
    rebuilt.add_objective_constant(model.objective_constant());
    for c in model.constraints() {
        let e = c.terms.iter().fold(LinExpr::new(), |e, &(w, a)| e.term(w, a));
        rebuilt.add_constraint(c.name.clone(), e, c.relation, c.rhs).unwrap();
    }
    *model = rebuilt;
}

fn random_model(rng: &mut ChaCha8Rng) -> OptModel {
    let sense = if rng.random_bool(0.5) { Sense::Minimize } else { Sense::Maximize };
    let mut m = OptModel::new(sense);
    let n = rng.random_range(2..7);
    let mut vars = Vec::new();
    for j in 0..n {
        let v = match rng.random_range(0..4) {
            0 => m.add_binary(format!("b[{j}]")).unwrap(),
            1 => m.add_var(format!("k.{j}"), -2.0, 4.0, true).unwrap(),
            2 => m.add_continuous(format!("{j}x"), -3.5, 2.25).unwrap(),
            _ => m.add_continuous(format!("y {j}"), 0.0, 6.0 + j as f64 / 3.0).unwrap(),
        };
        m.set_objective_coef(v, rng.random_range(-3.0..3.0));
        vars.push(v);
    }
    m.add_objective_constant(rng.random_range(-2.0..2.0));
    for i in 0..rng.random_range(1..5) {
        let mut e = LinExpr::new();
        for &v in &vars {
            if rng.random_bool(0.6) {
                e.add_term(v, rng.random_range(-2.0..3.0) / 7.0);
            }
        }
        let rel = [Relation::Le, Relation::Ge, Relation::Eq][rng.random_range(0..3)];
        let rhs = if rel == Relation::Eq { 0.0 } else if rel == Relation::Le { 1.5 } else { -1.5 };
        m.add_constraint(format!("row-{i}"), e, rel, rhs).unwrap();
    }
    m
}

#[test]
fn export_reimport_preserves_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = SolverOptions::default();
    let mut compared = 0;
    for _ in 0..60 {
        let m = random_model(&mut rng);
        let text = export_lp_text(&m).unwrap();
        let back = read_lp(&text);
        assert_eq!(export_lp_text(&back).unwrap(), text);
        let a = solve(&m, &opts).unwrap();
        let b = solve(&back, &opts).unwrap();
        assert_eq!(a.status, b.status);
        if a.status == Status::Optimal {
            assert!((a.objective - b.objective).abs() <= 1e-9 * (1.0 + a.objective.abs()));
            compared += 1;
        }
    }
    assert!(compared > 10);
}

