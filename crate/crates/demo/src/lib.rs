//! WebAssembly bindings for the browser demo.
//!
//! Each exported function takes plain strings and returns a JSON document,
//! `{"ok": true, ...}` or `{"ok": false, "error": "..."}`, so the page needs
//! no glue beyond `JSON.parse`. The `*_json` functions are the same
//! operations callable from native code and tests.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use sonc::constrained::{lower_bound, BoundSource, ConstrainedProblem, Strategy};
use sonc::cover::{bound_via_cover, constrained_cover_bound, decompose, improve_weights, CoverBound, Weights};
use sonc::geometry::{analyze_support, st_form, triangulate_squares, Triangulation};
use sonc::gp::SolverSettings;
use sonc::oracle::{default_box, sample_min_constrained, VALIDATION_TOL};
use sonc::polynomial::{is_monomial_square, rational_to_f64, render_rational};
use sonc::unconstrained::{global_lower_bound, SoncCertificate};
use sonc::{Polynomial, SoncError};

const SAMPLES: usize = 2000;

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(if x > 0.0 { "inf" } else { "-inf" })
    }
}

fn nvars(texts: &[&str]) -> usize {
    let mut n = 1;
    for text in texts {
        for (i, _) in text.match_indices('x') {
            let digits: String = text[i + 1..].chars().take_while(char::is_ascii_digit).collect();
            n = n.max(digits.parse().unwrap_or(0));
        }
    }
    n
}

fn respond(result: Result<Value, SoncError>) -> String {
    let value = match result {
        Ok(mut v) => {
            v["ok"] = json!(true);
            v
        }
        Err(e) => json!({ "ok": false, "error": e.to_string() }),
    };
    value.to_string()
}

fn constraint_list(text: &str) -> Vec<&str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

fn validation(p: &ConstrainedProblem, bound: f64) -> Value {
    let r = sample_min_constrained(&p.f, &p.constraints, &default_box(p.nvars()), SAMPLES, 0);
    json!({
        "passed": bound == f64::NEG_INFINITY || r.best_value >= bound - VALIDATION_TOL,
        "best_value": finite(r.best_value),
        "best_point": r.best_point,
        "feasible_samples": r.feasible_samples,
    })
}

fn certificate(c: Option<&SoncCertificate>) -> Value {
    c.map(SoncCertificate::to_json).unwrap_or(Value::Null)
}

/// Support analysis plus, when ♣ holds, the default triangulation of the squares.
pub fn analyze_json(poly: &str) -> String {
    respond((|| {
        let f = Polynomial::parse(poly, nvars(&[poly]))?;
        let a = analyze_support(&f);
        let status = if f.term_list().iter().all(is_monomial_square) {
            "sum of monomial squares".to_string()
        } else if !a.clubsuit_ok {
            let (v, why) = &a.clubsuit_violations[0];
            format!("not nonnegative: hull vertex {v} {why}")
        } else {
            match st_form(&f) {
                Ok(st) => format!("ST-polynomial, {} tail term(s)", st.non_square_tail().count()),
                Err(SoncError::NotSimplex { .. }) => "not ST: vertex set is not a simplex".into(),
                Err(e) => format!("not ST: {e}"),
            }
        };
        let squares: Vec<_> = f.term_list().into_iter().filter(is_monomial_square).map(|t| t.exponent).collect();
        let triangulation = if a.clubsuit_ok && !squares.is_empty() { triangulate_squares(&squares).ok().map(|t| t.to_json()) } else { None };
        let terms: Vec<Value> = f
            .term_list()
            .iter()
            .map(|t| json!({ "exponent": t.exponent, "coefficient": render_rational(&t.coefficient), "value": rational_to_f64(&t.coefficient), "square": is_monomial_square(t) }))
            .collect();
        Ok(json!({
            "f": f.to_string(),
            "n": f.nvars(),
            "status": status,
            "vertices": a.vertices,
            "non_vertices": a.non_vertices,
            "tail_terms": a.tail_terms,
            "terms": terms,
            "triangulation": triangulation,
        }))
    })())
}

fn cover_json(b: &CoverBound, tri: &Triangulation) -> Value {
    json!({
        "bound": finite(b.bound),
        "method": "cover",
        "heuristic": b.heuristic,
        "pieces": b.pieces.iter().map(|p| finite(p.m_star)).collect::<Vec<_>>(),
        "triangulation": tri.to_json(),
        "certificate": certificate(b.certificate.as_ref()),
    })
}

/// Unconstrained lower bound. `triangulation` is a JSON list of simplices or
/// empty; `weights` is `equal`, `optimize:<budget>` or a weights document.
pub fn minimize_json(poly: &str, triangulation: &str, weights: &str, validate: bool) -> String {
    respond((|| {
        let f = Polynomial::parse(poly, nvars(&[poly]))?;
        let settings = SolverSettings::default();
        let tri = match triangulation.trim() {
            "" => None,
            text => Some(Triangulation::from_json(&serde_json::from_str(text).map_err(|e| SoncError::InvalidTriangulation(e.to_string()))?)?),
        };
        let (fixed, budget) = match weights.trim() {
            "" | "equal" => (Weights::Equal, None),
            w if w.starts_with("optimize:") => {
                let budget = w["optimize:".len()..].parse().map_err(|_| SoncError::InvalidWeights(format!("bad budget in {w:?}")))?;
                (Weights::Equal, Some(budget))
            }
            w => (Weights::from_json(&serde_json::from_str(w).map_err(|e| SoncError::InvalidWeights(e.to_string()))?)?, None),
        };
        let plain = tri.is_none() && budget.is_none() && fixed == Weights::Equal;
        let mut out = None;
        if plain {
            match global_lower_bound(&f, &settings) {
                Ok(b) => {
                    out = Some(json!({
                        "bound": finite(b.bound),
                        "method": "unconstrained-gp",
                        "heuristic": false,
                        "certificate": certificate(b.certificate.as_ref()),
                    }))
                }
                Err(SoncError::NotSimplex { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let mut out = match out {
            Some(v) => v,
            None => {
                let dec = decompose(&f, tri.as_ref(), &fixed)?;
                let targets = dec.origin_targets();
                let b = match budget {
                    Some(budget) => improve_weights(&f, &dec, &targets, budget, &settings)?.bound,
                    None => bound_via_cover(&f, &dec, &targets, &settings)?,
                };
                cover_json(&b, &dec.triangulation)
            }
        };
        if validate {
            let bound = out["bound"].as_f64().unwrap_or(f64::NEG_INFINITY);
            out["validation"] = validation(&ConstrainedProblem::new(f, vec![])?, bound);
        }
        Ok(out)
    })())
}

/// Lower bound of `f` subject to one constraint `g ≥ 0` per line of `constraints`.
pub fn minimize_constrained_json(f: &str, constraints: &str, strategy: &str, cover: bool, validate: bool) -> String {
    respond((|| {
        let gs = constraint_list(constraints);
        let mut texts = gs.clone();
        texts.push(f);
        let p = ConstrainedProblem::parse(f, &gs, nvars(&texts))?;
        let mut out = if cover {
            let r = constrained_cover_bound(&p, None, &Weights::Equal, &SolverSettings::default())?;
            json!({
                "bound": finite(r.bound),
                "method": "cover-constrained",
                "heuristic": false,
                "mu": r.mu,
                "pieces": r.m_star,
                "triangulation": r.triangulation.to_json(),
                "zero_multiplier_bound": finite(r.zero_multiplier_bound),
                "certificate": certificate(r.certificate.as_ref()),
            })
        } else {
            let strategy: Strategy = strategy.parse()?;
            let r = lower_bound(&p, strategy)?;
            let method = match r.source {
                BoundSource::ConstrainedGp => "constrained-gp",
                BoundSource::ConstrainedSnp => "constrained-snp",
                BoundSource::ZeroMultipliers => "unconstrained-gp",
            };
            json!({
                "bound": finite(r.bound),
                "method": method,
                "heuristic": r.heuristic,
                "mu": r.mu,
                "gamma": r.gamma,
                "zero_multiplier_bound": finite(r.zero_multiplier_bound),
                "notes": r.notes,
                "certificate": certificate(r.certificate.as_ref()),
            })
        };
        if validate {
            let bound = out["bound"].as_f64().unwrap_or(f64::NEG_INFINITY);
            out["validation"] = validation(&p, bound);
        }
        Ok(out)
    })())
}

#[wasm_bindgen]
pub fn analyze(poly: &str) -> String {
    analyze_json(poly)
}

#[wasm_bindgen]
pub fn minimize(poly: &str, triangulation: &str, weights: &str, validate: bool) -> String {
    minimize_json(poly, triangulation, weights, validate)
}

#[wasm_bindgen(js_name = minimizeConstrained)]
pub fn minimize_constrained(f: &str, constraints: &str, strategy: &str, cover: bool, validate: bool) -> String {
    minimize_constrained_json(f, constraints, strategy, cover, validate)
}
