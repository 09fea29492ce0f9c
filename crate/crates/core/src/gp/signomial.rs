//! Signomial programs by sequential monomial condensation.
//!
//! Every constraint `s(z) ≤ 1` is rewritten as `P(z) ≤ N(z)` with posynomials
//! `P`, `N`. At the current point `N` is replaced by its weighted AM-GM monomial
//! underestimator, which turns the problem into a geometric program whose
//! feasible set lies inside the true one. Iterating never worsens the objective,
//! but only a local optimum is reached.

use super::barrier::solve_gp;
use super::{eval_sum, GeometricProgram, PosyMonomial, SignomialProgram, SolveResult, SolverSettings, Status};
use crate::error::Result;

/// `P(z) ≤ N(z)` with both sides posynomials.
#[derive(Clone, Debug)]
struct Split {
    pos: Vec<PosyMonomial>,
    neg: Vec<PosyMonomial>,
}

fn merge(terms: impl IntoIterator<Item = PosyMonomial>) -> Vec<PosyMonomial> {
    let mut out: Vec<PosyMonomial> = Vec::new();
    for t in terms {
        match out.iter_mut().find(|o| o.exponents == t.exponents) {
            Some(o) => o.coefficient += t.coefficient,
            None => out.push(t),
        }
    }
    out.retain(|t| t.coefficient != 0.0);
    out
}

fn split(terms: Vec<PosyMonomial>) -> Split {
    let (pos, neg): (Vec<_>, Vec<_>) = terms.into_iter().partition(|t| t.coefficient > 0.0);
    let neg = neg.into_iter().map(|t| PosyMonomial { coefficient: -t.coefficient, ..t }).collect();
    Split { pos, neg }
}

/// Best monomial underestimator of `n` at `z`, tight there.
fn condense(n: &[PosyMonomial], z: &[f64]) -> PosyMonomial {
    let values: Vec<f64> = n.iter().map(|t| t.eval(z)).collect();
    let total: f64 = values.iter().sum();
    let dim = z.len();
    let mut log_coeff = 0.0;
    let mut exponents = vec![0.0; dim];
    for (t, v) in n.iter().zip(&values) {
        let w = v / total;
        if w <= 0.0 {
            continue;
        }
        log_coeff += w * (t.coefficient / w).ln();
        for (e, a) in exponents.iter_mut().zip(&t.exponents) {
            *e += w * a;
        }
    }
    PosyMonomial { coefficient: log_coeff.exp(), exponents }
}

fn divide(p: &[PosyMonomial], d: &PosyMonomial) -> Vec<PosyMonomial> {
    p.iter()
        .map(|t| PosyMonomial {
            coefficient: t.coefficient / d.coefficient,
            exponents: t.exponents.iter().zip(&d.exponents).map(|(a, b)| a - b).collect(),
        })
        .collect()
}

fn extend(t: &PosyMonomial, extra: usize) -> PosyMonomial {
    let mut exponents = t.exponents.clone();
    exponents.extend(std::iter::repeat_n(0.0, extra));
    PosyMonomial { coefficient: t.coefficient, exponents }
}

struct Canonical {
    nvars: usize,
    names: Vec<String>,
    objective: Split,
    constraints: Vec<Split>,
    equalities: Vec<PosyMonomial>,
}

impl Canonical {
    fn objective(&self, z: &[f64]) -> f64 {
        eval_sum(&self.objective.pos, z) - eval_sum(&self.objective.neg, z)
    }

    fn strictly_feasible(&self, z: &[f64]) -> bool {
        self.constraints.iter().all(|c| eval_sum(&c.pos, z) < eval_sum(&c.neg, z))
    }

    /// Condensed GP at `z`; the epigraph variable, if any, is appended last.
    fn condensed(&self, z: &[f64]) -> GeometricProgram {
        let epigraph = !self.objective.neg.is_empty();
        let extra = usize::from(epigraph);
        let dim = self.nvars + extra;
        let mut names = self.names.clone();
        let mut inequalities = Vec::new();
        for c in &self.constraints {
            let d = condense(&c.neg, z);
            inequalities.push(divide(&c.pos, &d).iter().map(|t| extend(t, extra)).collect());
        }
        let objective = if epigraph {
            names.push("epigraph".into());
            let p0 = eval_sum(&self.objective.pos, z);
            let n0 = eval_sum(&self.objective.neg, z);
            let shift = (n0 - p0).max(0.0) + 1.0;
            let tau = p0 - n0 + shift;
            let mut zt = z.to_vec();
            zt.push(tau);
            let mut denom: Vec<PosyMonomial> = self.objective.neg.iter().map(|t| extend(t, 1)).collect();
            let mut tau_mono = PosyMonomial::constant(1.0, dim);
            tau_mono.exponents[self.nvars] = 1.0;
            denom.push(tau_mono.clone());
            let d = condense(&denom, &zt);
            let mut numer: Vec<PosyMonomial> = self.objective.pos.iter().map(|t| extend(t, 1)).collect();
            numer.push(PosyMonomial::constant(shift, dim));
            inequalities.push(divide(&numer, &d));
            vec![tau_mono]
        } else {
            self.objective.pos.clone()
        };
        GeometricProgram {
            var_names: names,
            objective,
            inequalities,
            equalities: self.equalities.iter().map(|t| extend(t, extra)).collect(),
        }
    }

    /// Condensed phase one: minimize σ with `P_i ≤ σ N̂_i` until σ < 1.
    fn find_start(&self, settings: &SolverSettings) -> Option<(Vec<f64>, usize)> {
        let mut z = vec![1.0; self.nvars];
        let mut iterations = 0;
        let mut last = f64::INFINITY;
        if self.strictly_feasible(&z) {
            return Some((z, 0));
        }
        for _ in 0..settings.sp_max_outer {
            let dim = self.nvars + 1;
            let mut sigma = PosyMonomial::constant(1.0, dim);
            sigma.exponents[self.nvars] = 1.0;
            let inequalities = self
                .constraints
                .iter()
                .map(|c| {
                    let mut d = extend(&condense(&c.neg, &z), 1);
                    d.exponents[self.nvars] = 1.0;
                    let pos: Vec<PosyMonomial> = c.pos.iter().map(|t| extend(t, 1)).collect();
                    divide(&pos, &d)
                })
                .collect();
            let gp = GeometricProgram {
                var_names: self.names.iter().cloned().chain(std::iter::once("phase1".into())).collect(),
                objective: vec![sigma],
                inequalities,
                equalities: self.equalities.iter().map(|t| extend(t, 1)).collect(),
            };
            let r = solve_gp(&gp, settings).ok()?;
            iterations += r.iterations;
            if !matches!(r.status, Status::Optimal | Status::NumericFailure) {
                return None;
            }
            z = r.assignment[..self.nvars].to_vec();
            if self.strictly_feasible(&z) {
                return Some((z, iterations));
            }
            let s = r.objective_value;
            if (last - s).abs() <= 1e-12 {
                return None;
            }
            last = s;
        }
        None
    }
}

fn canonicalize(sp: &SignomialProgram) -> Option<Canonical> {
    let m = sp.nvars();
    let mut constraints = Vec::new();
    for c in &sp.inequalities {
        let terms = merge(c.iter().cloned().chain(std::iter::once(PosyMonomial::constant(-1.0, m))));
        let s = split(terms);
        match (s.pos.is_empty(), s.neg.is_empty()) {
            (true, _) => continue,
            (false, true) => return None,
            _ => constraints.push(s),
        }
    }
    Some(Canonical {
        nvars: m,
        names: sp.var_names.clone(),
        objective: split(merge(sp.objective.iter().cloned())),
        constraints,
        equalities: sp.equalities.clone(),
    })
}

/// Local solution of a signomial program. Starts from `start` when given and
/// strictly feasible, otherwise from a condensed phase one.
pub fn solve_signomial(sp: &SignomialProgram, settings: &SolverSettings, start: Option<&[f64]>) -> Result<SolveResult> {
    sp.validate(true)?;
    if !sp.has_negative_coefficients() {
        return solve_gp(sp, settings);
    }
    let m = sp.nvars();
    let Some(canon) = canonicalize(sp) else {
        return Ok(SolveResult::failed(Status::Infeasible, m));
    };
    let (mut z, mut iterations) = match start {
        Some(z0) if z0.len() == m && z0.iter().all(|&v| v > 0.0) && canon.strictly_feasible(z0) => (z0.to_vec(), 0),
        _ => match canon.find_start(settings) {
            Some(found) => found,
            None => {
                let mut r = SolveResult::failed(Status::NoStartingPoint, m);
                r.heuristic = true;
                return Ok(r);
            }
        },
    };
    let mut value = canon.objective(&z);
    let mut last: Option<SolveResult> = None;
    for _ in 0..settings.sp_max_outer {
        let gp = canon.condensed(&z);
        let r = solve_gp(&gp, settings)?;
        iterations += r.iterations;
        if !matches!(r.status, Status::Optimal) {
            if last.is_none() {
                let mut r = r;
                r.assignment.truncate(m);
                r.numerically_zero.truncate(m);
                r.objective_value = value;
                r.heuristic = true;
                r.iterations = iterations;
                if r.status == Status::NumericFailure && canon.strictly_feasible(&z) {
                    r.assignment = z;
                }
                return Ok(r);
            }
            break;
        }
        let z_new = r.assignment[..m].to_vec();
        let v_new = canon.objective(&z_new);
        if v_new > value + settings.sp_tol * value.abs().max(1.0) {
            break;
        }
        let converged = (value - v_new).abs() <= settings.sp_tol * value.abs().max(1.0);
        z = z_new;
        value = v_new;
        last = Some(r);
        if converged {
            break;
        }
    }
    let base = last.unwrap_or_else(|| SolveResult::failed(Status::Optimal, m));
    let status = if value < settings.unbounded_floor { Status::Unbounded } else { Status::Optimal };
    Ok(SolveResult {
        status,
        objective_value: value,
        numerically_zero: z.iter().map(|&v| v < settings.zero_threshold).collect(),
        assignment: z,
        iterations,
        kkt_residual: base.kkt_residual,
        duality_gap: base.duality_gap,
        heuristic: true,
    })
}
