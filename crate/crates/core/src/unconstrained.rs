//! Global lower bounds for simplex-tail polynomials and their certificates.
//!
//! For an ST-polynomial `f` and a target vertex `α(0)`, the geometric program
//! built here finds the least coefficient mass `m*` at `x^{α(0)}` that a sum of
//! nonnegative circuit polynomials needs to absorb every tail term. Then
//! `f − (f_{α(0)} − m*)·x^{α(0)}` is certified nonnegative; for the origin this
//! is the lower bound `f ≥ f_0 − m*`.

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitPolynomial, DEFAULT_SLACK};
use crate::error::{Result, SoncError};
use crate::geometry::{hull_vertices, is_affinely_independent, st_form, STForm};
use crate::gp::{solve_gp, GeometricProgram, SolveResult, SolverSettings, Status};
use crate::polynomial::{is_monomial_square, parse_rational, rational_from_f64, render_rational, Exponent, Polynomial, Term};
use crate::program::{assemble, Assembled, LinearForm, Mode, Piece, PieceTail};

type Q = BigRational;

/// Default per-coefficient reconstruction tolerance.
pub const RECON_TOL: f64 = 1e-7;

/// `f − Σ shifts = Σ circuits + Σ residual squares`.
#[derive(Clone, Debug, PartialEq)]
pub struct SoncCertificate {
    pub nvars: usize,
    /// Amounts `k` subtracted at `x^e`.
    pub shifts: Vec<(Exponent, f64)>,
    pub circuits: Vec<CircuitPolynomial>,
    pub residual_squares: Vec<Term>,
}

impl SoncCertificate {
    pub fn empty(nvars: usize) -> Self {
        SoncCertificate { nvars, shifts: vec![], circuits: vec![], residual_squares: vec![] }
    }

    /// Completes a certificate for `target`: whatever `shifts` and `circuits`
    /// leave over must be monomial squares, up to `tol` per coefficient.
    pub fn complete(target: &Polynomial, shifts: Vec<(Exponent, f64)>, circuits: Vec<CircuitPolynomial>, tol: f64) -> Result<Self> {
        let mut rest = target.clone();
        for (e, k) in &shifts {
            rest.add_term(e.clone(), -rational_from_f64(*k));
        }
        for c in &circuits {
            rest = rest.sub(&c.to_polynomial());
        }
        let mut residual_squares = Vec::new();
        for (e, c) in rest.terms() {
            let term = Term { exponent: e.clone(), coefficient: c.clone() };
            if is_monomial_square(&term) {
                residual_squares.push(term);
            } else if c.abs() > rational_from_f64(tol) {
                return Err(SoncError::ReconstructionFailure(format!(
                    "leftover {} at {e} is not a monomial square",
                    crate::polynomial::rational_to_f64(c)
                )));
            }
        }
        Ok(SoncCertificate { nvars: target.nvars(), shifts, circuits, residual_squares })
    }

    /// Sum of circuits, residual squares and shifts.
    pub fn reconstruct(&self) -> Polynomial {
        let mut p = Polynomial::zero(self.nvars);
        for c in &self.circuits {
            p = p.add(&c.to_polynomial());
        }
        for t in &self.residual_squares {
            p.add_term(t.exponent.clone(), t.coefficient.clone());
        }
        for (e, k) in &self.shifts {
            p.add_term(e.clone(), rational_from_f64(*k));
        }
        p
    }

    pub fn shift_at(&self, e: &Exponent) -> f64 {
        self.shifts.iter().filter(|(x, _)| x == e).map(|(_, k)| k).sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms = |p: &Polynomial| -> Vec<JsonTerm> { p.terms().map(|(e, c)| JsonTerm::new(e, c)).collect() };
        let doc = JsonCertificate {
            nvars: self.nvars,
            shifts: self.shifts.iter().map(|(e, k)| JsonShift { exponent: e.clone(), value: *k }).collect(),
            circuits: self.circuits.iter().map(|c| terms(&c.to_polynomial())).collect(),
            residual_squares: self.residual_squares.iter().map(|t| JsonTerm::new(&t.exponent, &t.coefficient)).collect(),
        };
        serde_json::to_value(doc).expect("certificate serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let doc: JsonCertificate = serde_json::from_value(value.clone()).map_err(|e| SoncError::Invalid(e.to_string()))?;
        let poly = |terms: &[JsonTerm]| -> Result<Polynomial> {
            let mut p = Polynomial::zero(doc.nvars);
            for t in terms {
                if t.exponent.nvars() != doc.nvars {
                    return Err(SoncError::DimensionMismatch { expected: doc.nvars, got: t.exponent.nvars() });
                }
                p.add_term(t.exponent.clone(), t.rational()?);
            }
            Ok(p)
        };
        let circuits = doc.circuits.iter().map(|c| CircuitPolynomial::from_polynomial(&poly(c)?, false)).collect::<Result<_>>()?;
        let residual_squares = doc
            .residual_squares
            .iter()
            .map(|t| Ok(Term { exponent: t.exponent.clone(), coefficient: t.rational()? }))
            .collect::<Result<_>>()?;
        Ok(SoncCertificate {
            nvars: doc.nvars,
            shifts: doc.shifts.into_iter().map(|s| (s.exponent, s.value)).collect(),
            circuits,
            residual_squares,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct JsonTerm {
    exponent: Exponent,
    /// Exact value as an integer or `p/q`.
    coefficient: String,
    /// Floating-point view, informational only.
    value: f64,
}

impl JsonTerm {
    fn new(e: &Exponent, c: &Q) -> Self {
        JsonTerm { exponent: e.clone(), coefficient: render_rational(c), value: crate::polynomial::rational_to_f64(c) }
    }

    fn rational(&self) -> Result<Q> {
        parse_rational(&self.coefficient).ok_or_else(|| SoncError::Invalid(format!("bad coefficient {:?}", self.coefficient)))
    }
}

#[derive(Serialize, Deserialize)]
struct JsonShift {
    exponent: Exponent,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonCertificate {
    nvars: usize,
    shifts: Vec<JsonShift>,
    circuits: Vec<Vec<JsonTerm>>,
    residual_squares: Vec<JsonTerm>,
}

/// Checks `f − Σ shifts = Σ circuits + Σ squares` within `tol` per coefficient,
/// every circuit nonnegative and every residual a monomial square.
pub fn verify_certificate(f: &Polynomial, cert: &SoncCertificate, tol: f64) -> bool {
    if cert.nvars != f.nvars() {
        return false;
    }
    if !cert.residual_squares.iter().all(is_monomial_square) {
        return false;
    }
    let slack = tol.max(DEFAULT_SLACK);
    if !cert.circuits.iter().all(|c| c.nvars() == f.nvars() && c.is_nonnegative_with_slack(slack)) {
        return false;
    }
    let diff = f.sub(&cert.reconstruct());
    let bound = rational_from_f64(tol);
    let ok = diff.terms().all(|(_, c)| c.abs() <= bound);
    ok
}

/// Result of a single-piece SONC bound.
#[derive(Clone, Debug)]
pub struct SoncBound {
    /// `f_{α(0)} − m*`; a lower bound on `f` when the target is the origin.
    pub bound: f64,
    pub m_star: f64,
    pub target: Exponent,
    /// Absent when the program is infeasible (bound `−∞`).
    pub certificate: Option<SoncCertificate>,
    /// Absent when no program had to be solved.
    pub solve: Option<SolveResult>,
}

fn st_piece(st: &STForm, target: Option<usize>) -> Piece {
    Piece {
        label: None,
        vertices: st.vertices.clone(),
        vertex_forms: st.vertex_coeffs.iter().map(|c| LinearForm::constant(c.clone(), 0)).collect(),
        tails: st
            .non_square_tail()
            .map(|t| PieceTail { exponent: t.exponent.clone(), form: LinearForm::constant(t.coefficient.clone(), 0), lambda: t.lambda.clone() })
            .collect(),
        target,
    }
}

fn assemble_st(st: &STForm, target: Option<usize>) -> Result<(Piece, Assembled)> {
    if let Some(t) = target {
        if t >= st.vertices.len() {
            return Err(SoncError::TargetNotVertex(format!("vertex index {t}")));
        }
    }
    let piece = st_piece(st, target);
    let assembled = assemble(0, std::slice::from_ref(&piece), Mode::Geometric, true)?;
    Ok((piece, assembled))
}

/// The SONC program for `st` with the vertex `target` absorbing the tail.
pub fn build_sonc_gp(st: &STForm, target: usize) -> Result<GeometricProgram> {
    Ok(assemble_st(st, Some(target))?.1.program)
}

/// Circuits from an optimal assignment of [`build_sonc_gp`], completed to a
/// certificate of `f − (f_{α(0)} − m*) x^{α(0)}`.
pub fn extract_certificate(st: &STForm, target: usize, solution: &SolveResult) -> Result<SoncCertificate> {
    let (piece, assembled) = assemble_st(st, Some(target))?;
    let ex = assembled.extract(std::slice::from_ref(&piece), &solution.assignment)?;
    let f = st_polynomial(st);
    let t = &st.vertices[target];
    let shift = crate::polynomial::rational_to_f64(&st.vertex_coeffs[target]) - solution.objective_value;
    SoncCertificate::complete(&f, vec![(t.clone(), shift)], ex.circuits.into_iter().flatten().collect(), RECON_TOL)
}

fn st_polynomial(st: &STForm) -> Polynomial {
    let mut f = Polynomial::zero(st.nvars);
    for (v, c) in st.vertices.iter().zip(&st.vertex_coeffs) {
        f.add_term(v.clone(), c.clone());
    }
    for t in &st.tail {
        f.add_term(t.exponent.clone(), t.coefficient.clone());
    }
    f
}

pub fn f_sonc(f: &Polynomial, target: Option<&Exponent>) -> Result<SoncBound> {
    f_sonc_with(f, target, &SolverSettings::default())
}

/// Solution of one simplex-tail program.
#[derive(Clone, Debug)]
pub(crate) struct PieceOutcome {
    /// `None` when the program is infeasible.
    pub m_star: Option<f64>,
    pub circuits: Vec<CircuitPolynomial>,
    pub solve: Option<SolveResult>,
}

/// Solves the program of `st` with `target` absorbing the tail, or certifies
/// nonnegativity when `target` is `None`.
pub(crate) fn solve_st(st: &STForm, target: Option<usize>, settings: &SolverSettings) -> Result<PieceOutcome> {
    if st.non_square_tail().next().is_none() {
        return Ok(PieceOutcome { m_star: Some(0.0), circuits: vec![], solve: None });
    }
    let (piece, assembled) = assemble_st(st, target)?;
    let r = solve_gp(&assembled.program, settings)?;
    match r.status {
        Status::Optimal => {}
        Status::Infeasible => return Ok(PieceOutcome { m_star: None, circuits: vec![], solve: Some(r) }),
        s => return Err(SoncError::Solver(format!("{s:?} after {} Newton steps", r.iterations))),
    }
    let ex = assembled.extract(std::slice::from_ref(&piece), &r.assignment)?;
    Ok(PieceOutcome { m_star: Some(r.objective_value), circuits: ex.circuits.into_iter().flatten().collect(), solve: Some(r) })
}

/// SONC bound at `target` (default: the origin, which must then be a vertex).
pub fn f_sonc_with(f: &Polynomial, target: Option<&Exponent>, settings: &SolverSettings) -> Result<SoncBound> {
    let n = f.nvars();
    let target = target.cloned().unwrap_or_else(|| Exponent::zero(n));
    if f.is_empty() {
        if !target.is_zero() {
            return Err(SoncError::TargetNotVertex(target.to_string()));
        }
        return Ok(SoncBound { bound: 0.0, m_star: 0.0, target, certificate: Some(SoncCertificate::empty(n)), solve: None });
    }
    let st = st_form(f)?;
    let t = st.vertex_index(&target).ok_or_else(|| SoncError::TargetNotVertex(target.to_string()))?;
    let f_t = crate::polynomial::rational_to_f64(&st.vertex_coeffs[t]);
    let out = solve_st(&st, Some(t), settings)?;
    let Some(m_star) = out.m_star else {
        return Ok(SoncBound { bound: f64::NEG_INFINITY, m_star: f64::INFINITY, target, certificate: None, solve: out.solve });
    };
    let bound = f_t - m_star;
    let cert = SoncCertificate::complete(f, vec![(target.clone(), bound)], out.circuits, RECON_TOL)?;
    Ok(SoncBound { bound, m_star, target, certificate: Some(cert), solve: out.solve })
}

/// Decides SONC membership of an ST-polynomial without optimizing any coefficient.
pub fn certify_nonnegative(f: &Polynomial, settings: &SolverSettings) -> Result<Option<SoncCertificate>> {
    if f.is_empty() {
        return Ok(Some(SoncCertificate::empty(f.nvars())));
    }
    let out = solve_st(&st_form(f)?, None, settings)?;
    if out.m_star.is_none() {
        return Ok(None);
    }
    SoncCertificate::complete(f, vec![], out.circuits, RECON_TOL).map(Some)
}

/// Lower bound on `inf f` for an ST-polynomial.
///
/// With a constant term this is [`f_sonc`] at the origin. Without one,
/// `f(0) = 0`, so the bound is `0` when `f` is certified SONC and `−∞` otherwise.
pub fn global_lower_bound(f: &Polynomial, settings: &SolverSettings) -> Result<SoncBound> {
    let origin = Exponent::zero(f.nvars());
    if f.is_empty() || !f.coefficient(&origin).is_zero() {
        return f_sonc_with(f, None, settings);
    }
    let cert = certify_nonnegative(f, settings)?;
    let bound = if cert.is_some() { 0.0 } else { f64::NEG_INFINITY };
    Ok(SoncBound { bound, m_star: 0.0, target: origin, certificate: cert, solve: None })
}

/// True iff every circuit's Newton polytope is a face of `New(f)`, for `f`
/// whose Newton polytope is a simplex: faces are then exactly the convex hulls
/// of vertex subsets.
pub fn circuits_on_faces(f: &Polynomial, cert: &SoncCertificate) -> bool {
    let hull = hull_vertices(&f.support());
    is_affinely_independent(&hull) && cert.circuits.iter().all(|c| c.vertices().iter().all(|v| hull.contains(v)))
}
