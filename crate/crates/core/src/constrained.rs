//! Lower bounds on `f` over `K = {x : g_1(x) ≥ 0, …, g_s(x) ≥ 0}`.
//!
//! For multipliers `μ ≥ 0` the polynomial `G(μ) = f − Σ μ_i g_i` is at most `f`
//! on `K`, so every SONC bound of `G(μ)` bounds `f` on `K`. Treating `μ` as
//! program variables gives a geometric program when each vertex coefficient of
//! `G(μ)` has a single positive term, and a signomial program in general.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SoncError};
use crate::geometry::{affine_dimension, barycentric, hull_vertices, is_affinely_independent};
use crate::gp::{solve_gp, solve_signomial, GeometricProgram, SignomialProgram, SolveResult, SolverSettings, Status};
use crate::polynomial::{rational_from_f64, rational_to_f64, Exponent, Polynomial};
use crate::program::{assemble, Mode, Piece, PieceTail};
use crate::unconstrained::{global_lower_bound, verify_certificate, SoncCertificate, RECON_TOL};

pub use crate::program::LinearForm;

type Q = BigRational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstrainedProblem {
    pub f: Polynomial,
    pub constraints: Vec<Polynomial>,
}

#[derive(Deserialize)]
struct ProblemFile {
    f: String,
    #[serde(default)]
    constraints: Vec<String>,
    n: usize,
}

impl ConstrainedProblem {
    pub fn new(f: Polynomial, constraints: Vec<Polynomial>) -> Result<Self> {
        for g in &constraints {
            if g.nvars() != f.nvars() {
                return Err(SoncError::DimensionMismatch { expected: f.nvars(), got: g.nvars() });
            }
        }
        Ok(ConstrainedProblem { f, constraints })
    }

    pub fn parse(f: &str, constraints: &[&str], n: usize) -> Result<Self> {
        let gs = constraints.iter().map(|g| Polynomial::parse(g, n)).collect::<Result<_>>()?;
        Self::new(Polynomial::parse(f, n)?, gs)
    }

    /// Reads `{"f": "...", "constraints": ["..."], "n": 2}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text).map_err(|e| SoncError::Invalid(e.to_string()))?;
        let gs: Vec<&str> = file.constraints.iter().map(String::as_str).collect();
        Self::parse(&file.f, &gs, file.n)
    }

    pub fn nvars(&self) -> usize {
        self.f.nvars()
    }

    pub fn multipliers(&self) -> usize {
        self.constraints.len()
    }

    /// `G(μ) = f − Σ μ_i g_i`, exactly.
    pub fn g_polynomial(&self, mu: &[Q]) -> Polynomial {
        let mut p = self.f.clone();
        for (g, m) in self.constraints.iter().zip(mu) {
            if !m.is_zero() {
                p = p.sub(&g.scale(m));
            }
        }
        p
    }

    pub fn g_polynomial_f64(&self, mu: &[f64]) -> Polynomial {
        let mu: Vec<Q> = mu.iter().map(|&m| rational_from_f64(m)).collect();
        self.g_polynomial(&mu)
    }

    /// Coefficient forms of `G(μ)` over the union support.
    pub fn forms(&self) -> BTreeMap<Exponent, LinearForm> {
        let s = self.multipliers();
        let mut forms: BTreeMap<Exponent, LinearForm> = BTreeMap::new();
        for (e, c) in self.f.terms() {
            forms.entry(e.clone()).or_insert_with(|| LinearForm::zero(s)).coefficients[0] = c.clone();
        }
        for (i, g) in self.constraints.iter().enumerate() {
            for (e, c) in g.terms() {
                forms.entry(e.clone()).or_insert_with(|| LinearForm::zero(s)).coefficients[i + 1] = -c.clone();
            }
        }
        forms
    }

    /// True iff every `g_i(x) ≥ −tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        self.constraints.iter().all(|g| g.evaluate(x) >= -tol)
    }
}

/// A non-vertex exponent that stays in the programs.
#[derive(Clone, Debug, PartialEq)]
pub struct GTail {
    pub exponent: Exponent,
    pub form: LinearForm,
    pub lambda: Vec<Q>,
}

impl GTail {
    /// Indices `i` with `g_{i,β} < 0`; index 0 stands for `f`.
    pub fn positive_side(&self) -> Vec<usize> {
        self.form.positive_part().into_iter().map(|(i, _)| i).collect()
    }

    /// Indices `i` with `g_{i,β} > 0`.
    pub fn negative_side(&self) -> Vec<usize> {
        self.form.negative_part().into_iter().map(|(i, _)| i).collect()
    }
}

/// `G(μ)` on its generic support: simplex vertices, tails and pruned squares.
#[derive(Clone, Debug, PartialEq)]
pub struct GStructure {
    pub nvars: usize,
    pub multipliers: usize,
    pub support: Vec<Exponent>,
    pub vertices: Vec<Exponent>,
    pub vertex_forms: Vec<LinearForm>,
    pub tails: Vec<GTail>,
    /// Interior exponents where every `−g_i` term is a monomial square.
    pub pruned: Vec<Exponent>,
}

impl GStructure {
    pub fn vertex_index(&self, e: &Exponent) -> Option<usize> {
        self.vertices.iter().position(|v| v == e)
    }

    pub fn origin_index(&self) -> Option<usize> {
        self.vertex_index(&Exponent::zero(self.nvars))
    }

    /// Largest positive part `g⁺_{i,α(0)} = max(g_{i,α(0)}, 0)` at the target, per multiplier.
    pub fn g_plus_at(&self, target: usize) -> Vec<Q> {
        self.vertex_forms[target].coefficients[1..].iter().map(|c| if c.is_negative() { -c.clone() } else { Q::zero() }).collect()
    }

    pub(crate) fn piece(&self, target: Option<usize>) -> Piece {
        Piece {
            label: None,
            vertices: self.vertices.clone(),
            vertex_forms: self.vertex_forms.clone(),
            tails: self
                .tails
                .iter()
                .map(|t| PieceTail { exponent: t.exponent.clone(), form: t.form.clone(), lambda: t.lambda.clone() })
                .collect(),
            target,
        }
    }
}

/// Splits the union support of `G(μ)` into vertices, tails and pruned squares.
pub fn build_g_structure(p: &ConstrainedProblem) -> Result<GStructure> {
    let forms = p.forms();
    let support: Vec<Exponent> = forms.keys().cloned().collect();
    if support.is_empty() {
        return Err(SoncError::Invalid("f and all constraints are zero".into()));
    }
    let vertices = hull_vertices(&support);
    for v in &vertices {
        if !v.is_even() {
            return Err(SoncError::ClubsuitViolated { vertex: v.to_string(), reason: "exponent is not even".into() });
        }
        if forms[v].positive_part().is_empty() {
            return Err(SoncError::ClubsuitViolated {
                vertex: v.to_string(),
                reason: "coefficient is negative for every choice of multipliers".into(),
            });
        }
    }
    if !is_affinely_independent(&vertices) {
        return Err(SoncError::NotSimplex { vertices: vertices.len(), dim: affine_dimension(&vertices) });
    }
    let mut tails = Vec::new();
    let mut pruned = Vec::new();
    for (e, form) in &forms {
        if vertices.contains(e) {
            continue;
        }
        if e.is_even() && form.negative_part().is_empty() {
            pruned.push(e.clone());
            continue;
        }
        tails.push(GTail { exponent: e.clone(), form: form.clone(), lambda: barycentric(e, &vertices)? });
    }
    Ok(GStructure {
        nvars: p.nvars(),
        multipliers: p.multipliers(),
        vertex_forms: vertices.iter().map(|v| forms[v].clone()).collect(),
        support,
        vertices,
        tails,
        pruned,
    })
}

fn fold(gs: &GStructure) -> bool {
    gs.multipliers == 0
}

/// The geometric program; `target` indexes the vertex whose coefficient is optimized.
pub fn build_constrained_gp(gs: &GStructure, target: usize) -> Result<GeometricProgram> {
    Ok(assemble(gs.multipliers, &[gs.piece(Some(target))], Mode::Geometric, fold(gs))?.program)
}

/// The signomial program with signed tail and vertex constraints.
pub fn build_constrained_snp(gs: &GStructure, target: usize) -> Result<SignomialProgram> {
    Ok(assemble(gs.multipliers, &[gs.piece(Some(target))], Mode::Signomial, fold(gs))?.program)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Gp,
    Snp,
    Auto,
}

impl std::str::FromStr for Strategy {
    type Err = SoncError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gp" => Ok(Strategy::Gp),
            "snp" => Ok(Strategy::Snp),
            "auto" => Ok(Strategy::Auto),
            _ => Err(SoncError::Invalid(format!("unknown strategy {s:?}"))),
        }
    }
}

/// Which computation produced the reported bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSource {
    ConstrainedGp,
    ConstrainedSnp,
    /// The plain SONC bound of `f`, i.e. `μ = 0`.
    ZeroMultipliers,
}

#[derive(Clone, Debug)]
pub struct ConstrainedBound {
    pub bound: f64,
    pub source: BoundSource,
    /// Multipliers behind `bound`.
    pub mu: Vec<f64>,
    /// Certifies `G(μ) − bound` as SONC.
    pub certificate: Option<SoncCertificate>,
    pub heuristic: bool,
    /// Optimal value `γ` of the program, when one was solved.
    pub gamma: Option<f64>,
    /// `f_{α(0)} − γ` from the program alone.
    pub program_bound: Option<f64>,
    pub zero_multiplier_bound: f64,
    pub solve: Option<SolveResult>,
    /// Why the program route was skipped or abandoned.
    pub notes: Vec<String>,
}

/// Outcome of one program solve.
#[derive(Clone, Debug)]
pub struct ProgramOutcome {
    pub bound: f64,
    pub gamma: f64,
    pub mu: Vec<f64>,
    pub certificate: Option<SoncCertificate>,
    pub solve: SolveResult,
}

/// Solves program (GP or SNP) on `gs` with the origin as target (or pure
/// certification when the origin is not a vertex).
pub fn solve_program(
    p: &ConstrainedProblem,
    gs: &GStructure,
    mode_snp: bool,
    start: Option<&[f64]>,
    settings: &SolverSettings,
) -> Result<ProgramOutcome> {
    let target = gs.origin_index();
    let piece = gs.piece(target);
    let mode = if mode_snp { Mode::Signomial } else { Mode::Geometric };
    let assembled = assemble(gs.multipliers, std::slice::from_ref(&piece), mode, fold(gs))?;
    let r = if mode_snp { solve_signomial(&assembled.program, settings, start)? } else { solve_gp(&assembled.program, settings)? };
    let f0 = target.map(|t| rational_to_f64(&gs.vertex_forms[t].coefficients[0])).unwrap_or(0.0);
    match r.status {
        Status::Optimal | Status::Unbounded => {}
        Status::Infeasible | Status::NoStartingPoint => {
            return Ok(ProgramOutcome { bound: f64::NEG_INFINITY, gamma: f64::INFINITY, mu: vec![], certificate: None, solve: r });
        }
        s => return Err(SoncError::Solver(format!("{s:?} after {} Newton steps", r.iterations))),
    }
    if r.status == Status::Unbounded {
        return Ok(ProgramOutcome { bound: f64::INFINITY, gamma: f64::NEG_INFINITY, mu: vec![], certificate: None, solve: r });
    }
    let gamma = r.objective_value;
    let ex = assembled.extract(std::slice::from_ref(&piece), &r.assignment)?;
    let bound = if target.is_some() { f0 - gamma } else { 0.0 };
    let g = p.g_polynomial_f64(&ex.mu);
    let shifts = target.map(|t| vec![(gs.vertices[t].clone(), bound)]).unwrap_or_default();
    let certificate = SoncCertificate::complete(&g, shifts, ex.circuits.into_iter().flatten().collect(), RECON_TOL)?;
    Ok(ProgramOutcome { bound, gamma, mu: ex.mu, certificate: Some(certificate), solve: r })
}

/// SONC bound of the concrete polynomial `G(μ)`; `−∞` when it has none.
pub fn fixed_mu_bound(p: &ConstrainedProblem, mu: &[f64]) -> f64 {
    fixed_mu_bound_with(p, mu, &SolverSettings::default()).0
}

pub fn fixed_mu_bound_with(p: &ConstrainedProblem, mu: &[f64], settings: &SolverSettings) -> (f64, Option<SoncCertificate>) {
    if mu.len() != p.multipliers() || mu.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
        return (f64::NEG_INFINITY, None);
    }
    let g = p.g_polynomial_f64(mu);
    match global_lower_bound(&g, settings) {
        Ok(r) => (r.bound, r.certificate),
        Err(_) => (f64::NEG_INFINITY, None),
    }
}

pub fn lower_bound(p: &ConstrainedProblem, strategy: Strategy) -> Result<ConstrainedBound> {
    lower_bound_with(p, strategy, &SolverSettings::default())
}

/// Best of the `μ = 0` probe and the chosen program.
pub fn lower_bound_with(p: &ConstrainedProblem, strategy: Strategy, settings: &SolverSettings) -> Result<ConstrainedBound> {
    let s = p.multipliers();
    let (zero_bound, zero_cert) = fixed_mu_bound_with(p, &vec![0.0; s], settings);
    let mut out = ConstrainedBound {
        bound: zero_bound,
        source: BoundSource::ZeroMultipliers,
        mu: vec![0.0; s],
        certificate: zero_cert,
        heuristic: false,
        gamma: None,
        program_bound: None,
        zero_multiplier_bound: zero_bound,
        solve: None,
        notes: vec![],
    };
    let gs = match build_g_structure(p) {
        Ok(gs) => gs,
        Err(e) => {
            out.notes.push(format!("no program for G(mu): {e}"));
            return Ok(out);
        }
    };
    // Under `Snp` the geometric program only supplies a warm start.
    let mut gp_outcome = None;
    match solve_program(p, &gs, false, None, settings) {
        Ok(o) => gp_outcome = Some(o),
        Err(_) if strategy == Strategy::Snp && s > 0 => {}
        Err(e @ SoncError::HypothesisViolated { .. }) if strategy == Strategy::Auto => out.notes.push(e.to_string()),
        Err(e) if strategy == Strategy::Auto => out.notes.push(format!("geometric program failed: {e}")),
        Err(e) => return Err(e),
    }
    let mut chosen = None;
    if let Some(o) = gp_outcome.as_ref().filter(|_| strategy != Strategy::Snp || s == 0) {
        chosen = Some((o.clone(), BoundSource::ConstrainedGp, false));
    }
    let run_snp = s > 0 && (strategy == Strategy::Snp || (strategy == Strategy::Auto && gp_outcome.is_none()));
    if run_snp {
        let start = gp_outcome.as_ref().filter(|o| o.solve.is_optimal()).map(|o| o.solve.assignment.clone());
        match solve_program(p, &gs, true, start.as_deref(), settings) {
            Ok(o) => {
                let better = chosen.as_ref().map(|(c, _, _)| o.bound >= c.bound).unwrap_or(true);
                if better || strategy == Strategy::Snp {
                    chosen = Some((o, BoundSource::ConstrainedSnp, true));
                }
            }
            Err(e) if strategy == Strategy::Auto => out.notes.push(format!("signomial program failed: {e}")),
            Err(e) => return Err(e),
        }
    }
    if let Some((o, source, heuristic)) = chosen {
        out.program_bound = Some(o.bound);
        out.gamma = Some(o.gamma);
        if o.bound > out.bound && o.certificate.is_some() {
            out.bound = o.bound;
            out.source = source;
            out.mu = o.mu;
            out.certificate = o.certificate;
            out.heuristic = heuristic;
        }
        out.solve = Some(o.solve);
    }
    Ok(out)
}

/// Checks a certificate for `G(μ) − bound`.
pub fn verify_constrained_certificate(p: &ConstrainedProblem, mu: &[f64], cert: &SoncCertificate, tol: f64) -> bool {
    mu.len() == p.multipliers() && mu.iter().all(|&m| m >= 0.0) && verify_certificate(&p.g_polynomial_f64(mu), cert, tol)
}
