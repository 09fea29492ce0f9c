//! Assembly of the SONC programs shared by the unconstrained, constrained and
//! cover bounds.
//!
//! A program is built from one or more simplex pieces. Every coefficient of a
//! piece is a linear form in the multipliers `μ₁..μ_s`; the unconstrained case
//! is the special case `s = 0`. Variables are ordered multipliers first, then
//! the vertex shares `a`, then the tail magnitudes `b` (or `c` for the
//! signomial variant).

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::circuit::{ln_rational, CircuitPolynomial};
use crate::error::{Result, SoncError};
use crate::gp::{GeometricProgram, PosyMonomial};
use crate::polynomial::{rational_from_f64, rational_to_f64, Exponent};

type Q = BigRational;

/// Coefficients `(c₀, c₁, …, c_s)` of `c₀ + Σ c_i μ_i`.
///
/// For the coefficient of `G(μ) = f − Σ μ_i g_i` at an exponent, `c₀` is the
/// coefficient of `f` and `c_i = −g_i`'s coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearForm {
    pub coefficients: Vec<Q>,
}

impl LinearForm {
    pub fn zero(multipliers: usize) -> Self {
        LinearForm { coefficients: vec![Q::zero(); multipliers + 1] }
    }

    pub fn constant(c: Q, multipliers: usize) -> Self {
        let mut form = Self::zero(multipliers);
        form.coefficients[0] = c;
        form
    }

    pub fn multipliers(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(Zero::is_zero)
    }

    pub fn depends_on_multipliers(&self) -> bool {
        self.coefficients[1..].iter().any(|c| !c.is_zero())
    }

    pub fn eval(&self, mu: &[Q]) -> Q {
        let mut v = self.coefficients[0].clone();
        for (c, m) in self.coefficients[1..].iter().zip(mu) {
            v += c * m;
        }
        v
    }

    pub fn eval_f64(&self, mu: &[f64]) -> f64 {
        let mut v = rational_to_f64(&self.coefficients[0]);
        for (c, m) in self.coefficients[1..].iter().zip(mu) {
            v += rational_to_f64(c) * m;
        }
        v
    }

    /// Strictly positive entries `(index, c_i)`; index 0 is the constant.
    pub fn positive_part(&self) -> Vec<(usize, Q)> {
        self.coefficients.iter().enumerate().filter(|(_, c)| c.is_positive()).map(|(i, c)| (i, c.clone())).collect()
    }

    /// Strictly negative entries as `(index, |c_i|)`.
    pub fn negative_part(&self) -> Vec<(usize, Q)> {
        self.coefficients.iter().enumerate().filter(|(_, c)| c.is_negative()).map(|(i, c)| (i, c.abs())).collect()
    }

    pub fn scale(&self, w: &Q) -> Self {
        LinearForm { coefficients: self.coefficients.iter().map(|c| c * w).collect() }
    }

    pub fn add(&self, other: &LinearForm) -> Self {
        LinearForm { coefficients: self.coefficients.iter().zip(&other.coefficients).map(|(a, b)| a + b).collect() }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct PieceTail {
    pub exponent: Exponent,
    pub form: LinearForm,
    pub lambda: Vec<Q>,
}

/// One simplex with its vertex and tail coefficient forms. Without a target the
/// piece only has to be certified nonnegative and contributes no objective.
#[derive(Clone, Debug)]
pub(crate) struct Piece {
    pub label: Option<String>,
    pub vertices: Vec<Exponent>,
    pub vertex_forms: Vec<LinearForm>,
    pub tails: Vec<PieceTail>,
    pub target: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    Geometric,
    Signomial,
}

#[derive(Clone, Debug)]
enum Magnitude {
    Fixed(f64),
    Var(usize),
}

#[derive(Clone, Debug)]
struct TailVars {
    a: Vec<Option<usize>>,
    magnitude: Magnitude,
}

/// A program together with the map from its variables back to the pieces.
#[derive(Clone, Debug)]
pub(crate) struct Assembled {
    pub program: GeometricProgram,
    pub mu: Vec<usize>,
    tails: Vec<Vec<Option<TailVars>>>,
}

/// Circuits read off a solution, one list per piece.
#[derive(Clone, Debug)]
pub(crate) struct Extracted {
    pub mu: Vec<f64>,
    pub circuits: Vec<Vec<CircuitPolynomial>>,
    /// Coefficient mass each piece needs at its target.
    pub target_mass: Vec<f64>,
}

#[derive(Clone, Debug)]
struct Mono {
    log_coeff: f64,
    negative: bool,
    exps: Vec<(usize, f64)>,
}

impl Mono {
    fn constant(c: f64) -> Self {
        Mono { log_coeff: c.abs().ln(), negative: c < 0.0, exps: vec![] }
    }

    fn from_rational(c: &Q, var: Option<usize>) -> Self {
        Mono { log_coeff: ln_rational(&c.abs()), negative: c.is_negative(), exps: var.map(|v| vec![(v, 1.0)]).unwrap_or_default() }
    }

    fn var(v: usize) -> Self {
        Mono { log_coeff: 0.0, negative: false, exps: vec![(v, 1.0)] }
    }

    fn negated(mut self) -> Self {
        self.negative = !self.negative;
        self
    }

    fn divided_by(&self, d: &Mono) -> Mono {
        let mut exps = self.exps.clone();
        exps.extend(d.exps.iter().map(|&(v, e)| (v, -e)));
        Mono { log_coeff: self.log_coeff - d.log_coeff, negative: self.negative != d.negative, exps }
    }
}

#[derive(Default)]
struct Builder {
    names: Vec<String>,
    objective: Vec<Mono>,
    inequalities: Vec<Vec<Mono>>,
}

impl Builder {
    fn var(&mut self, name: String) -> usize {
        self.names.push(name);
        self.names.len() - 1
    }

    fn densify(&self, m: &Mono) -> Result<PosyMonomial> {
        let magnitude = m.log_coeff.exp();
        if !magnitude.is_finite() || magnitude == 0.0 {
            return Err(SoncError::Invalid(format!("program coefficient e^{} is out of floating-point range", m.log_coeff)));
        }
        let mut exponents = vec![0.0; self.names.len()];
        for &(v, e) in &m.exps {
            exponents[v] += e;
        }
        Ok(PosyMonomial::new(if m.negative { -magnitude } else { magnitude }, exponents))
    }

    fn finish(self) -> Result<GeometricProgram> {
        let objective = self.objective.iter().map(|m| self.densify(m)).collect::<Result<_>>()?;
        let inequalities = self
            .inequalities
            .iter()
            .map(|c| c.iter().map(|m| self.densify(m)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        Ok(GeometricProgram { var_names: self.names, objective, inequalities, equalities: vec![] })
    }
}

fn form_monos(entries: &[(usize, Q)], mu: &[usize]) -> Vec<Mono> {
    entries.iter().map(|(i, c)| Mono::from_rational(c, (*i > 0).then(|| mu[i - 1]))).collect()
}

fn nz(lambda: &[Q]) -> Vec<usize> {
    (0..lambda.len()).filter(|&j| !lambda[j].is_zero()).collect()
}

fn lambda_f64(lambda: &[Q]) -> Vec<f64> {
    lambda.iter().map(rational_to_f64).collect()
}

/// `ln` of the target share `λ₀ m^{1/λ₀} Π_{j≠0} (λ_j/a_j)^{λ_j/λ₀}` that makes the
/// circuit number equal to `m`.
fn log_target_share(lambda: &[f64], target: usize, log_m: f64, log_a: &[(usize, f64)]) -> f64 {
    let l0 = lambda[target];
    let mut v = l0.ln() + log_m / l0;
    for &(j, la) in log_a {
        v += lambda[j] / l0 * (lambda[j].ln() - la);
    }
    v
}

/// Builds the program for `pieces` sharing `multipliers` multipliers.
///
/// With `fold_constants`, tails whose coefficient does not depend on `μ` use
/// their absolute value directly instead of a magnitude variable.
pub(crate) fn assemble(multipliers: usize, pieces: &[Piece], mode: Mode, fold_constants: bool) -> Result<Assembled> {
    let mut b = Builder::default();
    let mu: Vec<usize> = (1..=multipliers).map(|i| b.var(format!("mu{i}"))).collect();
    for piece in pieces {
        if let Some(t) = piece.target {
            for (i, c) in piece.vertex_forms[t].coefficients.iter().enumerate().skip(1) {
                // The objective carries Σ μ_i g_{i,α(0)} with g_i = −c_i.
                let g = -c.clone();
                let g = match mode {
                    Mode::Geometric if g.is_positive() => g,
                    Mode::Geometric => continue,
                    Mode::Signomial if g.is_zero() => continue,
                    Mode::Signomial => g,
                };
                b.objective.push(Mono::from_rational(&g, Some(mu[i - 1])));
            }
        }
    }
    let mut layout = Vec::new();
    for piece in pieces {
        let prefix = piece.label.as_ref().map(|l| format!("{l}.")).unwrap_or_default();
        let mut tails = Vec::new();
        for tail in &piece.tails {
            if tail.form.is_zero() {
                tails.push(None);
                continue;
            }
            let mut a = vec![None; piece.vertices.len()];
            for j in nz(&tail.lambda) {
                if Some(j) != piece.target {
                    a[j] = Some(b.var(format!("{prefix}a[{},{}]", tail.exponent, j)));
                }
            }
            let magnitude = if fold_constants && !tail.form.depends_on_multipliers() {
                Magnitude::Fixed(rational_to_f64(&tail.form.coefficients[0].abs()))
            } else {
                let letter = if mode == Mode::Geometric { "b" } else { "c" };
                Magnitude::Var(b.var(format!("{prefix}{letter}[{}]", tail.exponent)))
            };
            tails.push(Some(TailVars { a, magnitude }));
        }
        layout.push(tails);
    }
    for (piece, tails) in pieces.iter().zip(&layout) {
        add_vertex_constraints(&mut b, piece, tails, &mu, mode)?;
        for (tail, vars) in piece.tails.iter().zip(tails) {
            if let Some(vars) = vars {
                add_tail_terms(&mut b, piece, tail, vars, &mu, mode);
            }
        }
    }
    Ok(Assembled { program: b.finish()?, mu, tails: layout })
}

fn add_vertex_constraints(b: &mut Builder, piece: &Piece, tails: &[Option<TailVars>], mu: &[usize], mode: Mode) -> Result<()> {
    for (j, (vertex, form)) in piece.vertices.iter().zip(&piece.vertex_forms).enumerate() {
        if Some(j) == piece.target {
            continue;
        }
        let mut numer: Vec<Mono> = tails.iter().flatten().filter_map(|t| t.a[j]).map(Mono::var).collect();
        numer.extend(form_monos(&form.negative_part(), mu));
        if numer.is_empty() {
            continue;
        }
        let pos = form_monos(&form.positive_part(), mu);
        match (pos.len(), mode) {
            (1, _) => b.inequalities.push(numer.iter().map(|m| m.divided_by(&pos[0])).collect()),
            (_, Mode::Signomial) => {
                numer.extend(pos.into_iter().map(Mono::negated));
                numer.push(Mono::constant(1.0));
                b.inequalities.push(numer);
            }
            (k, Mode::Geometric) => {
                return Err(SoncError::HypothesisViolated {
                    exponent: vertex.to_string(),
                    reason: if k == 0 {
                        "the vertex coefficient has no positive term".into()
                    } else {
                        format!("the vertex coefficient has {k} positive terms; the signomial program applies")
                    },
                })
            }
        }
    }
    Ok(())
}

fn add_tail_terms(b: &mut Builder, piece: &Piece, tail: &PieceTail, vars: &TailVars, mu: &[usize], mode: Mode) {
    let lambda = lambda_f64(&tail.lambda);
    let support = nz(&tail.lambda);
    let (log_m, m_var) = match vars.magnitude {
        Magnitude::Fixed(v) => (v.ln(), None),
        Magnitude::Var(v) => (0.0, Some(v)),
    };
    match piece.target.filter(|&t| !tail.lambda[t].is_zero()) {
        Some(t) => {
            let l0 = lambda[t];
            let log_a: Vec<(usize, f64)> = support.iter().filter(|&&j| j != t).map(|&j| (j, 0.0)).collect();
            let mut exps: Vec<(usize, f64)> = support
                .iter()
                .filter(|&&j| j != t)
                .map(|&j| (vars.a[j].expect("share variable"), -lambda[j] / l0))
                .collect();
            if let Some(v) = m_var {
                exps.push((v, 1.0 / l0));
            }
            b.objective.push(Mono { log_coeff: log_target_share(&lambda, t, log_m, &log_a), negative: false, exps });
        }
        None => {
            let log_coeff = log_m + support.iter().map(|&j| lambda[j] * lambda[j].ln()).sum::<f64>();
            let mut exps: Vec<(usize, f64)> = support.iter().map(|&j| (vars.a[j].expect("share variable"), -lambda[j])).collect();
            if let Some(v) = m_var {
                exps.push((v, 1.0));
            }
            b.inequalities.push(vec![Mono { log_coeff, negative: false, exps }]);
        }
    }
    if let Some(v) = m_var {
        let pos = form_monos(&tail.form.positive_part(), mu);
        let neg = form_monos(&tail.form.negative_part(), mu);
        let over_m = |ms: &[Mono]| -> Vec<Mono> { ms.iter().map(|m| m.divided_by(&Mono::var(v))).collect() };
        match mode {
            Mode::Geometric => {
                for side in [&pos, &neg] {
                    if !side.is_empty() {
                        b.inequalities.push(over_m(side));
                    }
                }
            }
            Mode::Signomial => {
                for (p, n) in [(&pos, &neg), (&neg, &pos)] {
                    if p.is_empty() {
                        continue;
                    }
                    let mut terms = over_m(p);
                    terms.extend(over_m(n).into_iter().map(Mono::negated));
                    b.inequalities.push(terms);
                }
            }
        }
    }
}

impl Assembled {
    pub fn mu_values(&self, z: &[f64]) -> Vec<f64> {
        self.mu.iter().map(|&i| z[i]).collect()
    }

    /// Reads circuits off an assignment `z`. Tail coefficients are evaluated
    /// exactly at the multipliers in `z`.
    pub fn extract(&self, pieces: &[Piece], z: &[f64]) -> Result<Extracted> {
        let mu = self.mu_values(z);
        let mu_q: Vec<Q> = mu.iter().map(|&m| rational_from_f64(m)).collect();
        let mut circuits = Vec::new();
        let mut target_mass = Vec::new();
        for (piece, tails) in pieces.iter().zip(&self.tails) {
            let mut list = Vec::new();
            let mut mass = 0.0;
            for (tail, vars) in piece.tails.iter().zip(tails) {
                let Some(vars) = vars else { continue };
                let coefficient = tail.form.eval(&mu_q);
                if coefficient.is_zero() {
                    continue;
                }
                let lambda = lambda_f64(&tail.lambda);
                let support = nz(&tail.lambda);
                let m = match vars.magnitude {
                    Magnitude::Fixed(v) => v,
                    Magnitude::Var(i) => z[i],
                }
                .max(rational_to_f64(&coefficient.abs()));
                let mut coeffs = Vec::new();
                for &j in &support {
                    let value = match vars.a[j] {
                        Some(i) => z[i],
                        None => {
                            let t = piece.target.expect("target share");
                            let log_a: Vec<(usize, f64)> =
                                support.iter().filter(|&&k| k != t).map(|&k| (k, z[vars.a[k].expect("share variable")].ln())).collect();
                            let share = log_target_share(&lambda, t, m.ln(), &log_a).exp().max(f64::MIN_POSITIVE);
                            mass += share;
                            share
                        }
                    };
                    if !value.is_finite() || value <= 0.0 {
                        return Err(SoncError::ReconstructionFailure(format!("share {value} for tail {}", tail.exponent)));
                    }
                    coeffs.push(rational_from_f64(value));
                }
                let vertices = support.iter().map(|&j| piece.vertices[j].clone()).collect();
                let circuit = CircuitPolynomial::new(vertices, coeffs, Some((tail.exponent.clone(), coefficient)), false)
                    .map_err(|e| SoncError::ReconstructionFailure(e.to_string()))?;
                list.push(circuit);
            }
            circuits.push(list);
            target_mass.push(mass);
        }
        Ok(Extracted { mu, circuits, target_mass })
    }
}
