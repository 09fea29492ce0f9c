//! Bounds for polynomials whose Newton polytope is not a simplex.
//!
//! The monomial-square exponents are triangulated, every coefficient is split
//! among the simplices containing its exponent, and each resulting
//! ST-polynomial is bounded on its own. The circuits of all pieces together
//! certify `f` minus the constant-term mass they consume.

use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::constrained::{ConstrainedProblem, LinearForm};
use crate::error::{Result, SoncError};
use crate::geometry::{analyze_support, barycentric, hull_vertices, st_form_with_vertices, triangulate_squares, Triangulation};
use crate::gp::{solve_gp, SolveResult, SolverSettings, Status};
use crate::polynomial::{parse_rational, rational_to_f64, Exponent, Polynomial};
use crate::program::{assemble, Mode, Piece, PieceTail};
use crate::unconstrained::{global_lower_bound, solve_st, PieceOutcome, SoncCertificate, RECON_TOL};

type Q = BigRational;

/// How coefficients are split among the simplices containing their exponent.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum Weights {
    /// Equal shares among containing simplices.
    #[default]
    Equal,
    /// Per exponent, the fraction given to each piece (summing to 1).
    /// Exponents not listed are split equally.
    Fractions(BTreeMap<Exponent, Vec<Q>>),
    /// Per exponent, the coefficient given to each piece (summing to the
    /// coefficient of `f`). Exponents not listed are split equally.
    Coefficients(BTreeMap<Exponent, Vec<Q>>),
}

impl Weights {
    /// Reads `{"fractions" | "coefficients": [{"exponent": [..], "shares": [..]}]}`.
    /// Shares are numbers or rational strings such as `"1/3"`.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let (kind, list) = if let Some(l) = value.get("fractions") {
            ("fractions", l)
        } else if let Some(l) = value.get("coefficients") {
            ("coefficients", l)
        } else {
            return Err(SoncError::InvalidWeights("expected a \"fractions\" or \"coefficients\" list".into()));
        };
        let entries = list.as_array().ok_or_else(|| SoncError::InvalidWeights(format!("\"{kind}\" is not a list")))?;
        let mut map = BTreeMap::new();
        for entry in entries {
            let exponent: Exponent = serde_json::from_value(entry.get("exponent").cloned().unwrap_or_default())
                .map_err(|e| SoncError::InvalidWeights(format!("bad exponent: {e}")))?;
            let shares = entry
                .get("shares")
                .and_then(|s| s.as_array())
                .ok_or_else(|| SoncError::InvalidWeights(format!("missing shares for {exponent}")))?
                .iter()
                .map(|s| {
                    let text = match s {
                        serde_json::Value::String(t) => t.clone(),
                        other => other.to_string(),
                    };
                    parse_rational(&text).ok_or_else(|| SoncError::InvalidWeights(format!("bad share {text:?}")))
                })
                .collect::<Result<Vec<Q>>>()?;
            map.insert(exponent, shares);
        }
        Ok(if kind == "fractions" { Weights::Fractions(map) } else { Weights::Coefficients(map) })
    }
}

/// `f` split into ST-polynomials along a triangulation of its monomial squares.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverDecomposition {
    pub nvars: usize,
    pub triangulation: Triangulation,
    /// One ST-polynomial per simplex; they sum to `f` exactly.
    pub pieces: Vec<Polynomial>,
    /// Per exponent of `f`, its coefficient in each piece.
    pub split_weights: BTreeMap<Exponent, Vec<Q>>,
}

impl CoverDecomposition {
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn simplex(&self, i: usize) -> Vec<Exponent> {
        self.triangulation.simplex(i)
    }

    pub fn sum(&self) -> Polynomial {
        self.pieces.iter().fold(Polynomial::zero(self.nvars), |acc, g| acc.add(g))
    }

    /// Exponents whose coefficient is split over more than one piece.
    pub fn shared_exponents(&self) -> Vec<Exponent> {
        self.split_weights
            .iter()
            .filter(|(e, _)| self.triangulation.containing(e).len() > 1)
            .map(|(e, _)| e.clone())
            .collect()
    }

    /// The origin for every piece where it is a vertex, and no target elsewhere.
    pub fn origin_targets(&self) -> Vec<Option<Exponent>> {
        let origin = Exponent::zero(self.nvars);
        (0..self.len()).map(|i| self.simplex(i).contains(&origin).then(|| origin.clone())).collect()
    }

    fn from_split(nvars: usize, triangulation: Triangulation, split_weights: BTreeMap<Exponent, Vec<Q>>) -> Self {
        let mut pieces = vec![Polynomial::zero(nvars); triangulation.len()];
        for (e, shares) in &split_weights {
            for (g, c) in pieces.iter_mut().zip(shares) {
                if !c.is_zero() {
                    g.add_term(e.clone(), c.clone());
                }
            }
        }
        CoverDecomposition { nvars, triangulation, pieces, split_weights }
    }
}

fn square_exponents(f: &Polynomial) -> Vec<Exponent> {
    f.terms().filter(|(e, c)| e.is_even() && c.is_positive()).map(|(e, _)| e.clone()).collect()
}

fn resolve_triangulation(points: &[Exponent], tri: Option<&Triangulation>) -> Result<Triangulation> {
    let Some(tri) = tri else { return triangulate_squares(points) };
    for p in &tri.points {
        if !points.contains(p) {
            return Err(SoncError::InvalidTriangulation(format!("vertex {p} is not a monomial-square exponent")));
        }
    }
    Ok(tri.clone())
}

/// Fractions of one exponent per piece, validated against the simplices containing it.
fn fractions_for(e: &Exponent, tri: &Triangulation, given: Option<&Vec<Q>>) -> Result<Vec<Q>> {
    let k = tri.len();
    let containing = tri.containing(e);
    if containing.is_empty() {
        return Err(SoncError::TailNotCovered(e.to_string()));
    }
    let Some(shares) = given else {
        let w = Q::new(1.into(), containing.len().into());
        return Ok((0..k).map(|i| if containing.contains(&i) { w.clone() } else { Q::zero() }).collect());
    };
    if shares.len() != k {
        return Err(SoncError::InvalidWeights(format!("{e}: {} shares for {k} pieces", shares.len())));
    }
    let mut total = Q::zero();
    for (i, w) in shares.iter().enumerate() {
        if w.is_negative() {
            return Err(SoncError::InvalidWeights(format!("{e}: share for piece {} flips the sign", i + 1)));
        }
        if !w.is_zero() && !containing.contains(&i) {
            return Err(SoncError::InvalidWeights(format!("{e} is outside piece {}", i + 1)));
        }
        if w.is_zero() && tri.simplex(i).contains(e) {
            return Err(SoncError::InvalidWeights(format!("{e} is a vertex of piece {} and needs a positive share", i + 1)));
        }
        total += w;
    }
    if !total.is_one() {
        return Err(SoncError::InvalidWeights(format!("{e}: shares sum to {total}, not the whole coefficient")));
    }
    Ok(shares.clone())
}

/// Triangulates the monomial squares of `f` (unless `tri` is given) and splits `f` into ST pieces.
pub fn decompose(f: &Polynomial, tri: Option<&Triangulation>, weights: &Weights) -> Result<CoverDecomposition> {
    let analysis = analyze_support(f);
    if let Some((v, reason)) = analysis.clubsuit_violations.first() {
        return Err(SoncError::ClubsuitViolated { vertex: v.to_string(), reason: reason.clone() });
    }
    let tri = resolve_triangulation(&square_exponents(f), tri)?;
    let mut split = BTreeMap::new();
    for (e, c) in f.terms() {
        let fractions = match weights {
            Weights::Equal => fractions_for(e, &tri, None)?,
            Weights::Fractions(map) => fractions_for(e, &tri, map.get(e))?,
            Weights::Coefficients(map) => {
                let given = map.get(e).map(|shares| shares.iter().map(|s| s / c).collect::<Vec<Q>>());
                fractions_for(e, &tri, given.as_ref())?
            }
        };
        split.insert(e.clone(), fractions.into_iter().map(|w| w * c).collect());
    }
    Ok(CoverDecomposition::from_split(f.nvars(), tri, split))
}

/// Bound of one piece.
#[derive(Clone, Debug)]
pub struct PieceBound {
    pub target: Option<Exponent>,
    /// Smallest target coefficient making the piece SONC; `+∞` when infeasible
    /// and 0 for pieces without a target.
    pub m_star: f64,
    pub solve: Option<SolveResult>,
}

#[derive(Clone, Debug)]
pub struct CoverBound {
    /// `f_{α(0)}` minus the constant-term mass of all circuits; `−∞` when the
    /// circuits do not fit inside `f`.
    pub bound: f64,
    pub certified: bool,
    pub pieces: Vec<PieceBound>,
    /// Per target exponent, the coefficient the circuits of all pieces consume there.
    pub required: Vec<(Exponent, f64)>,
    /// Certifies `f − bound` as SONC.
    pub certificate: Option<SoncCertificate>,
    /// Set when the split came out of [`improve_weights`].
    pub heuristic: bool,
}

impl CoverBound {
    /// Sum of the piece optima.
    pub fn m_star_total(&self) -> f64 {
        self.pieces.iter().map(|p| p.m_star).sum()
    }
}

fn solve_piece(dec: &CoverDecomposition, i: usize, target: Option<&Exponent>, settings: &SolverSettings) -> Result<PieceOutcome> {
    let st = st_form_with_vertices(&dec.pieces[i], &dec.simplex(i))?;
    let t = match target {
        Some(e) => Some(st.vertex_index(e).ok_or_else(|| SoncError::TargetNotVertex(format!("{e} in piece {}", i + 1)))?),
        None => None,
    };
    solve_st(&st, t, settings).map_err(|e| match e {
        SoncError::Solver(msg) => SoncError::Solver(format!("piece {}: {msg}", i + 1)),
        other => other,
    })
}

fn aggregate(f: &Polynomial, targets: &[Option<Exponent>], outcomes: Vec<PieceOutcome>) -> Result<CoverBound> {
    let pieces: Vec<PieceBound> = outcomes
        .iter()
        .zip(targets)
        .map(|(o, t)| PieceBound {
            target: t.clone(),
            m_star: if t.is_some() { o.m_star.unwrap_or(f64::INFINITY) } else { 0.0 },
            solve: o.solve.clone(),
        })
        .collect();
    let mut required: BTreeMap<Exponent, f64> = targets.iter().flatten().map(|e| (e.clone(), 0.0)).collect();
    let origin = Exponent::zero(f.nvars());
    let mut origin_mass = 0.0;
    for c in outcomes.iter().flat_map(|o| &o.circuits) {
        for (v, a) in c.vertices().iter().zip(c.vertex_coeffs()) {
            let a = rational_to_f64(a);
            if let Some(r) = required.get_mut(v) {
                *r += a;
            }
            if *v == origin {
                origin_mass += a;
            }
        }
    }
    let required: Vec<(Exponent, f64)> = required.into_iter().collect();
    let failed = CoverBound { bound: f64::NEG_INFINITY, certified: false, pieces: pieces.clone(), required: required.clone(), certificate: None, heuristic: false };
    if outcomes.iter().any(|o| o.m_star.is_none()) {
        return Ok(failed);
    }
    let f0 = rational_to_f64(&f.coefficient(&origin));
    let uses_origin = !f.coefficient(&origin).is_zero() || targets.iter().flatten().any(Exponent::is_zero);
    let (bound, shifts) = if uses_origin { (f0 - origin_mass, vec![(origin, f0 - origin_mass)]) } else { (0.0, vec![]) };
    let circuits = outcomes.into_iter().flat_map(|o| o.circuits).collect();
    match SoncCertificate::complete(f, shifts, circuits, RECON_TOL) {
        Ok(cert) => Ok(CoverBound { bound, certified: true, pieces, required, certificate: Some(cert), heuristic: false }),
        Err(SoncError::ReconstructionFailure(_)) => Ok(failed),
        Err(e) => Err(e),
    }
}

/// Bounds every piece at its target (`None`: only certify the piece) and aggregates.
pub fn bound_via_cover(f: &Polynomial, dec: &CoverDecomposition, targets: &[Option<Exponent>], settings: &SolverSettings) -> Result<CoverBound> {
    if targets.len() != dec.len() {
        return Err(SoncError::DimensionMismatch { expected: dec.len(), got: targets.len() });
    }
    let outcomes = (0..dec.len()).map(|i| solve_piece(dec, i, targets[i].as_ref(), settings)).collect::<Result<Vec<_>>>()?;
    aggregate(f, targets, outcomes)
}

#[derive(Clone, Debug)]
pub struct ImprovedCover {
    pub decomposition: CoverDecomposition,
    pub bound: CoverBound,
    pub initial_bound: f64,
    /// Piece programs solved, cached repeats excluded.
    pub solves: usize,
    /// Aggregate bound after every accepted move.
    pub history: Vec<f64>,
}

struct Evaluator<'a> {
    f: &'a Polynomial,
    targets: &'a [Option<Exponent>],
    settings: &'a SolverSettings,
    cache: HashMap<(usize, String), Option<PieceOutcome>>,
    solves: usize,
    budget: usize,
}

impl Evaluator<'_> {
    /// `None` once the budget is spent.
    fn evaluate(&mut self, dec: &CoverDecomposition) -> Option<CoverBound> {
        let mut outcomes = Vec::with_capacity(dec.len());
        for i in 0..dec.len() {
            let key = (i, dec.pieces[i].to_string());
            if !self.cache.contains_key(&key) {
                if self.solves >= self.budget {
                    return None;
                }
                self.solves += 1;
                let o = solve_piece(dec, i, self.targets[i].as_ref(), self.settings).ok();
                self.cache.insert(key.clone(), o);
            }
            match &self.cache[&key] {
                Some(o) => outcomes.push(o.clone()),
                None => return Some(rejected()),
            }
        }
        Some(aggregate(self.f, self.targets, outcomes).unwrap_or_else(|_| rejected()))
    }
}

fn rejected() -> CoverBound {
    CoverBound { bound: f64::NEG_INFINITY, certified: false, pieces: vec![], required: vec![], certificate: None, heuristic: false }
}

/// Coordinate descent on the shares of shared exponents.
///
/// Each move shifts part of one coefficient from one containing piece to
/// another and is kept only if the aggregate bound strictly improves. Steps
/// start at half the coefficient and are halved whenever no move on that
/// exponent helps. Vertex shares never reach zero. At most `budget` piece
/// programs are solved.
pub fn improve_weights(
    f: &Polynomial,
    dec: &CoverDecomposition,
    targets: &[Option<Exponent>],
    budget: usize,
    settings: &SolverSettings,
) -> Result<ImprovedCover> {
    if targets.len() != dec.len() {
        return Err(SoncError::DimensionMismatch { expected: dec.len(), got: targets.len() });
    }
    let mut ev = Evaluator { f, targets, settings, cache: HashMap::new(), solves: 0, budget: budget.max(dec.len()) };
    let mut best = ev.evaluate(dec).unwrap_or_else(rejected);
    if best.pieces.is_empty() {
        // The starting split itself failed; report it through the plain route.
        best = bound_via_cover(f, dec, targets, settings)?;
    }
    let initial_bound = best.bound;
    let mut current = dec.clone();
    let mut history = vec![initial_bound];
    let shared = dec.shared_exponents();
    let min_step = Q::new(1.into(), 256.into());
    let mut steps: Vec<Q> = vec![Q::new(1.into(), 2.into()); shared.len()];

    'outer: while steps.iter().any(|s| *s >= min_step) {
        for (k, e) in shared.iter().enumerate() {
            if steps[k] < min_step {
                continue;
            }
            let containing = current.triangulation.containing(e);
            let coefficient = f.coefficient(e);
            let mut improved = false;
            'moves: for &to in &containing {
                for &from in &containing {
                    if to == from {
                        continue;
                    }
                    let Some(candidate) = shift_share(&current, e, &coefficient, from, to, &steps[k]) else { continue };
                    let Some(result) = ev.evaluate(&candidate) else { break 'outer };
                    if result.bound > best.bound + 1e-9 {
                        debug_assert!(result.bound >= history[history.len() - 1]);
                        history.push(result.bound);
                        best = result;
                        current = candidate;
                        improved = true;
                        break 'moves;
                    }
                }
            }
            if !improved {
                steps[k] = &steps[k] / Q::from_integer(2.into());
            }
        }
    }
    best.heuristic = true;
    Ok(ImprovedCover { decomposition: current, bound: best, initial_bound, solves: ev.solves, history })
}

/// Moves `step · f_e` of the coefficient at `e` from piece `from` to piece `to`,
/// capped so that `from` keeps a positive share when `e` is one of its vertices.
fn shift_share(dec: &CoverDecomposition, e: &Exponent, coefficient: &Q, from: usize, to: usize, step: &Q) -> Option<CoverDecomposition> {
    let shares = &dec.split_weights[e];
    let available = &shares[from] / coefficient;
    if available.is_zero() {
        return None;
    }
    let mut delta = step.clone();
    if dec.simplex(from).contains(e) {
        let half = &available / Q::from_integer(2.into());
        if delta > half {
            delta = half;
        }
    } else if delta > available {
        delta = available;
    }
    let amount = delta * coefficient;
    let mut split = dec.split_weights.clone();
    let entry = split.get_mut(e)?;
    entry[from] -= &amount;
    entry[to] += &amount;
    Some(CoverDecomposition::from_split(dec.nvars, dec.triangulation.clone(), split))
}

/// Result of the joint program over all pieces of `G(μ)`.
#[derive(Clone, Debug)]
pub struct ConstrainedCoverBound {
    pub bound: f64,
    pub mu: Vec<f64>,
    pub triangulation: Triangulation,
    /// Optimal value of the joint program.
    pub gamma: Option<f64>,
    /// Per piece, its share of `γ`.
    pub m_star: Vec<f64>,
    /// `f_{α(0)} − γ`, or `−∞` when the program is infeasible.
    pub program_bound: f64,
    pub zero_multiplier_bound: f64,
    /// Certifies `G(μ) − program_bound` as SONC.
    pub certificate: Option<SoncCertificate>,
    pub solve: Option<SolveResult>,
}

/// Exponents usable as simplex vertices for `G(μ)`: hull vertices plus even
/// interior exponents whose coefficient is never negative.
fn constrained_squares(forms: &BTreeMap<Exponent, LinearForm>) -> Result<Vec<Exponent>> {
    let support: Vec<Exponent> = forms.keys().cloned().collect();
    let hull = hull_vertices(&support);
    for v in &hull {
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
    let mut points = hull;
    for (e, form) in forms {
        if !points.contains(e) && e.is_even() && form.negative_part().is_empty() && !form.positive_part().is_empty() {
            points.push(e.clone());
        }
    }
    Ok(points)
}

/// SONC bound of `f` alone, through the cover when `f` is not an ST-polynomial.
fn unconstrained_bound(f: &Polynomial, settings: &SolverSettings) -> f64 {
    match global_lower_bound(f, settings) {
        Ok(b) => b.bound,
        Err(SoncError::NotSimplex { .. }) => decompose(f, None, &Weights::Equal)
            .and_then(|dec| bound_via_cover(f, &dec, &dec.origin_targets(), settings))
            .map(|b| b.bound)
            .unwrap_or(f64::NEG_INFINITY),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Splits `G(μ)` along a triangulation and solves one geometric program over
/// all pieces with shared multipliers. The plain bound of `f` (`μ = 0`) is
/// always computed too, and the better of the two is reported.
pub fn constrained_cover_bound(
    p: &ConstrainedProblem,
    tri: Option<&Triangulation>,
    weights: &Weights,
    settings: &SolverSettings,
) -> Result<ConstrainedCoverBound> {
    let s = p.multipliers();
    let n = p.nvars();
    let forms = p.forms();
    if forms.is_empty() {
        return Err(SoncError::Invalid("f and all constraints are zero".into()));
    }
    let tri = resolve_triangulation(&constrained_squares(&forms)?, tri)?;
    let k = tri.len();
    let fractions_of = |e: &Exponent| -> Result<Vec<Q>> {
        match weights {
            Weights::Equal => fractions_for(e, &tri, None),
            Weights::Fractions(map) => fractions_for(e, &tri, map.get(e)),
            Weights::Coefficients(_) => Err(SoncError::InvalidWeights("coefficient shares need fixed multipliers; use fractions".into())),
        }
    };
    let origin = Exponent::zero(n);
    let mut pieces: Vec<Piece> = (0..k)
        .map(|i| {
            let vertices = tri.simplex(i);
            let target = vertices.iter().position(|v| *v == origin);
            Piece { label: Some(format!("p{}", i + 1)), vertex_forms: vec![LinearForm::zero(s); vertices.len()], vertices, tails: vec![], target }
        })
        .collect();
    for (e, form) in &forms {
        let fractions = fractions_of(e)?;
        let prunable = e.is_even() && form.negative_part().is_empty();
        for (i, w) in fractions.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            let piece = &mut pieces[i];
            let share = form.scale(w);
            if let Some(j) = piece.vertices.iter().position(|v| v == e) {
                piece.vertex_forms[j] = share;
            } else if !prunable {
                let lambda = barycentric(e, &piece.vertices)?;
                piece.tails.push(PieceTail { exponent: e.clone(), form: share, lambda });
            }
        }
    }

    let zero_multiplier_bound = unconstrained_bound(&p.f, settings);
    let assembled = assemble(s, &pieces, Mode::Geometric, s == 0)?;
    let r = solve_gp(&assembled.program, settings)?;
    let f0 = rational_to_f64(&p.f.coefficient(&origin));
    let has_origin = pieces.iter().any(|q| q.target.is_some());
    let mut out = ConstrainedCoverBound {
        bound: zero_multiplier_bound,
        mu: vec![0.0; s],
        triangulation: tri,
        gamma: None,
        m_star: vec![],
        program_bound: f64::NEG_INFINITY,
        zero_multiplier_bound,
        certificate: None,
        solve: None,
    };
    match r.status {
        Status::Optimal => {}
        Status::Infeasible | Status::NoStartingPoint => {
            out.solve = Some(r);
            return Ok(out);
        }
        st => return Err(SoncError::Solver(format!("{st:?} after {} Newton steps", r.iterations))),
    }
    let ex = assembled.extract(&pieces, &r.assignment)?;
    let gamma = r.objective_value;
    out.m_star = pieces
        .iter()
        .zip(&ex.target_mass)
        .map(|(q, mass)| match q.target {
            Some(t) => {
                let g_plus: f64 = q.vertex_forms[t].coefficients[1..]
                    .iter()
                    .zip(&ex.mu)
                    .map(|(c, m)| if c.is_negative() { -rational_to_f64(c) * m } else { 0.0 })
                    .sum();
                g_plus + mass
            }
            None => 0.0,
        })
        .collect();
    let program_bound = if has_origin { f0 - gamma } else { 0.0 };
    let g = p.g_polynomial_f64(&ex.mu);
    let shifts = if has_origin { vec![(origin, program_bound)] } else { vec![] };
    let certificate = SoncCertificate::complete(&g, shifts, ex.circuits.into_iter().flatten().collect(), RECON_TOL)?;
    out.gamma = Some(gamma);
    out.program_bound = program_bound;
    out.solve = Some(r);
    if program_bound >= zero_multiplier_bound {
        out.bound = program_bound;
        out.mu = ex.mu;
        out.certificate = Some(certificate);
    }
    Ok(out)
}
