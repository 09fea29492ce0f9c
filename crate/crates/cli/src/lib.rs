//! Command implementations behind the `sonc` binary.
//!
//! Every command produces a [`RunReport`] plus an exit code; `main` only
//! parses arguments and prints.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use sonc::constrained::{lower_bound_with, verify_constrained_certificate, BoundSource, ConstrainedProblem, Strategy};
use sonc::cover::{bound_via_cover, constrained_cover_bound, decompose, improve_weights, CoverBound, Weights};
use sonc::geometry::{analyze_support, st_form, Triangulation};
use sonc::gp::{SolveResult, SolverSettings};
use sonc::oracle::{default_box, sample_min_constrained, SampleReport, VALIDATION_TOL};
use sonc::polynomial::is_monomial_square;
use sonc::unconstrained::{f_sonc_with, global_lower_bound, verify_certificate, SoncCertificate, RECON_TOL};
use sonc::{Exponent, Polynomial, SoncError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Samples drawn by `--validate`.
const VALIDATION_SAMPLES: usize = 4000;

#[derive(Parser, Debug)]
#[command(name = "sonc", version, about = "Certified lower bounds for polynomial optimization via SONC and geometric programming")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Print the report as JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Support analysis: hull vertices, interior points, tail terms, ST status.
    Analyze(InputArgs),
    /// Lower bound for an unconstrained polynomial.
    Minimize(MinimizeArgs),
    /// Lower bound on a basic closed semialgebraic set `{g_i ≥ 0}`.
    MinimizeConstrained(ConstrainedArgs),
    /// Recheck a stored certificate against a problem file.
    Verify {
        certificate: PathBuf,
        problem: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Polynomial such as `1 + x1^4*x2^2 - 3*x1^2*x2^2`.
    pub polynomial: Option<String>,
    /// Problem file `{"f": "...", "constraints": [...], "n": 2}`.
    #[arg(long, conflicts_with = "polynomial")]
    pub problem: Option<PathBuf>,
    /// Number of variables; inferred from the highest `x<i>` when omitted.
    #[arg(long)]
    pub n: Option<usize>,
    /// Multiply every exponent by `k`.
    #[arg(long, value_name = "k")]
    pub scale_exponents: Option<u32>,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// JSON list of simplices, each a list of exponent tuples.
    #[arg(long, value_name = "FILE")]
    pub triangulation: Option<PathBuf>,
    /// `equal`, a weights file, or `optimize:<budget>`.
    #[arg(long, default_value = "equal")]
    pub weights: String,
    /// Check the bound against sampling in `[−5, 5]ⁿ`.
    #[arg(long)]
    pub validate: bool,
    /// Seed of the sampling oracle.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the certificate to this file.
    #[arg(long, value_name = "FILE")]
    pub cert_out: Option<PathBuf>,
    /// Report wall time (makes the output run-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug, Clone)]
pub struct MinimizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Vertex whose coefficient absorbs the tail, as `4,0`; defaults to the origin.
    #[arg(long, value_name = "EXPONENT")]
    pub target: Option<String>,
    /// Use the triangulation cover even for ST-polynomials.
    #[arg(long)]
    pub cover: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ConstrainedArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Constraint `g ≥ 0`; repeatable.
    #[arg(long = "constraint", short = 'g', value_name = "POLYNOMIAL")]
    pub constraints: Vec<String>,
    #[arg(long, default_value = "auto", value_parser = parse_strategy)]
    pub strategy: Strategy,
    /// Split `f − Σ μ_i g_i` along a triangulation and solve one joint program.
    #[arg(long)]
    pub cover: bool,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: SoncError| e.to_string())
}

/// A failed command: message plus exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<SoncError> for Failure {
    fn from(e: SoncError) -> Self {
        let code = if matches!(e, SoncError::Solver(_)) { EXIT_SOLVER } else { EXIT_INPUT };
        Failure { code, message: e.to_string() }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SolverStats {
    pub programs: usize,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl SolverStats {
    fn add(&mut self, r: Option<&SolveResult>) {
        if let Some(r) = r {
            self.programs += 1;
            self.iterations += r.iterations;
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Validation {
    pub passed: bool,
    pub tolerance: f64,
    pub report: SampleReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct PieceReport {
    pub target: Option<Exponent>,
    #[serde(serialize_with = "real")]
    pub m_star: f64,
}

/// Everything a command reports; absent fields are omitted from JSON.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunReport {
    pub command: String,
    pub input: Value,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "opt_real")]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub program_kind: Option<String>,
    pub heuristic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<Exponent>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "opt_real")]
    pub m_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "opt_real")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub mu: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pieces: Vec<PieceReport>,
    /// Per target exponent, the coefficient the cover's circuits need there.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub required: Vec<(Exponent, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triangulation: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<Validation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verified: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn real<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else if *x > 0.0 {
        s.serialize_str("inf")
    } else if *x < 0.0 {
        s.serialize_str("-inf")
    } else {
        s.serialize_str("nan")
    }
}

fn opt_real<S: serde::Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => real(v, s),
        None => s.serialize_none(),
    }
}

/// Runs one command. The report is returned even when the exit code is nonzero.
pub fn run(cli: &Cli) -> Result<(RunReport, i32), Failure> {
    match &cli.command {
        Command::Analyze(input) => cmd_analyze(input).map(|r| (r, EXIT_OK)),
        Command::Minimize(args) => cmd_minimize(args),
        Command::MinimizeConstrained(args) => cmd_minimize_constrained(args),
        Command::Verify { certificate, problem } => cmd_verify(certificate, problem),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Highest `x<i>` index mentioned in `text`.
fn infer_nvars(text: &str) -> usize {
    let bytes = text.as_bytes();
    let mut n = 0;
    for (i, b) in bytes.iter().enumerate() {
        if *b == b'x' {
            let digits: String = text[i + 1..].chars().take_while(char::is_ascii_digit).collect();
            if let Ok(k) = digits.parse::<usize>() {
                n = n.max(k);
            }
        }
    }
    n.max(1)
}

fn load_problem(input: &InputArgs, extra_constraints: &[String]) -> Result<ConstrainedProblem, Failure> {
    let mut p = match (&input.polynomial, &input.problem) {
        (Some(f), None) => {
            let all = std::iter::once(f).chain(extra_constraints);
            let n = input.n.unwrap_or_else(|| all.map(|t| infer_nvars(t)).max().unwrap_or(1));
            let gs: Vec<&str> = extra_constraints.iter().map(String::as_str).collect();
            ConstrainedProblem::parse(f, &gs, n)?
        }
        (None, Some(path)) => {
            let mut p = ConstrainedProblem::from_json(&read(path)?)?;
            for g in extra_constraints {
                p.constraints.push(Polynomial::parse(g, p.nvars())?);
            }
            if let Some(n) = input.n.filter(|&n| n != p.nvars()) {
                return Err(Failure::input(format!("--n {n} disagrees with the problem file ({} variables)", p.nvars())));
            }
            p
        }
        _ => return Err(Failure::input("give a polynomial or --problem")),
    };
    if let Some(k) = input.scale_exponents {
        if k == 0 {
            return Err(Failure::input("--scale-exponents needs k ≥ 1"));
        }
        let factors = vec![k; p.nvars()];
        p.f = p.f.scale_exponents(&factors)?;
        p.constraints = p.constraints.iter().map(|g| g.scale_exponents(&factors)).collect::<sonc::Result<_>>()?;
    }
    Ok(p)
}

fn input_echo(p: &ConstrainedProblem, input: &InputArgs) -> Value {
    let mut v = json!({ "f": p.f.to_string(), "n": p.nvars() });
    if !p.constraints.is_empty() {
        v["constraints"] = json!(p.constraints.iter().map(ToString::to_string).collect::<Vec<_>>());
    }
    if let Some(k) = input.scale_exponents {
        v["scale_exponents"] = json!(k);
    }
    v
}

fn parse_target(text: &str, n: usize) -> Result<Exponent, Failure> {
    let entries = text
        .trim_matches(|c| c == '(' || c == ')' || c == '[' || c == ']')
        .split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|_| Failure::input(format!("bad target {text:?}"))))
        .collect::<Result<Vec<u32>, _>>()?;
    if entries.len() != n {
        return Err(Failure::input(format!("target {text:?} needs {n} entries")));
    }
    Ok(Exponent(entries))
}

enum WeightChoice {
    Fixed(Weights),
    Optimize(usize),
}

fn parse_weights(text: &str) -> Result<WeightChoice, Failure> {
    if text == "equal" {
        return Ok(WeightChoice::Fixed(Weights::Equal));
    }
    if let Some(budget) = text.strip_prefix("optimize:") {
        let budget = budget.parse().map_err(|_| Failure::input(format!("bad budget in {text:?}")))?;
        return Ok(WeightChoice::Optimize(budget));
    }
    Ok(WeightChoice::Fixed(Weights::from_json(&read_json(Path::new(text))?)?))
}

fn load_triangulation(path: Option<&PathBuf>) -> Result<Option<Triangulation>, Failure> {
    path.map(|p| Triangulation::from_json(&read_json(p)?).map_err(Failure::from)).transpose()
}

/// Lower bound on `f` implied by a certificate: its origin shift, provided
/// every other shift adds a monomial square.
pub fn implied_bound(cert: &SoncCertificate) -> f64 {
    let origin = Exponent::zero(cert.nvars);
    let others_nonnegative = cert.shifts.iter().filter(|(e, _)| *e != origin).all(|(e, k)| e.is_even() && *k >= 0.0);
    if others_nonnegative {
        cert.shift_at(&origin)
    } else {
        f64::NEG_INFINITY
    }
}

fn write_certificate(path: &Path, cert: &SoncCertificate, mu: &[f64]) -> Result<(), Failure> {
    let doc = json!({
        "bound": implied_bound(cert),
        "mu": mu,
        "certificate": cert.to_json(),
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::input(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn validate(report: &mut RunReport, p: &ConstrainedProblem, run: &RunArgs) -> i32 {
    let Some(bound) = report.bound.filter(|_| run.validate) else { return EXIT_OK };
    let sample = sample_min_constrained(&p.f, &p.constraints, &default_box(p.nvars()), VALIDATION_SAMPLES, run.seed);
    let passed = bound == f64::NEG_INFINITY || sample.best_value >= bound - VALIDATION_TOL;
    report.validation = Some(Validation { passed, tolerance: VALIDATION_TOL, report: sample });
    if passed {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}

fn finish(mut report: RunReport, p: &ConstrainedProblem, run: &RunArgs, start: Instant, cert: Option<(&SoncCertificate, &[f64])>) -> Result<(RunReport, i32), Failure> {
    if let Some(path) = &run.cert_out {
        let (cert, mu) = cert.ok_or_else(|| Failure { code: EXIT_SOLVER, message: "no certificate to write: the bound is not certified".into() })?;
        write_certificate(path, cert, mu)?;
    }
    if run.timing {
        report.solver.get_or_insert_with(Default::default).wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    let code = validate(&mut report, p, run);
    Ok((report, code))
}

pub fn cmd_analyze(input: &InputArgs) -> Result<RunReport, Failure> {
    let p = load_problem(input, &[])?;
    let f = &p.f;
    let a = analyze_support(f);
    let all_squares = f.term_list().iter().all(is_monomial_square);
    let status = if f.is_empty() {
        "zero polynomial".to_string()
    } else if all_squares {
        "sum of monomial squares".to_string()
    } else if !a.clubsuit_ok {
        let (v, why) = &a.clubsuit_violations[0];
        format!("not nonnegative: hull vertex {v} {why}")
    } else {
        match st_form(f) {
            Ok(st) => {
                let k = st.non_square_tail().count();
                format!("ST-polynomial, {k} tail term{}", if k == 1 { "" } else { "s" })
            }
            Err(SoncError::NotSimplex { .. }) => "not ST: vertex set is not a simplex".to_string(),
            Err(e) => format!("not ST: {e}"),
        }
    };
    let analysis = json!({
        "status": status,
        "vertices": a.vertices,
        "non_vertices": a.non_vertices,
        "tail_terms": a.tail_terms,
        "dimension": a.dimension,
        "clubsuit": a.clubsuit_ok,
        "clubsuit_violations": a.clubsuit_violations.iter().map(|(e, why)| json!({"exponent": e, "reason": why})).collect::<Vec<_>>(),
    });
    Ok(RunReport { command: "analyze".into(), input: input_echo(&p, input), analysis: Some(analysis), ..Default::default() })
}

fn cover_report(report: &mut RunReport, b: &CoverBound) {
    report.bound = Some(b.bound);
    report.pieces = b.pieces.iter().map(|p| PieceReport { target: p.target.clone(), m_star: p.m_star }).collect();
    report.required = b.required.clone();
    report.certificate = b.certificate.as_ref().map(SoncCertificate::to_json);
    let stats = report.solver.get_or_insert_with(Default::default);
    for p in &b.pieces {
        stats.add(p.solve.as_ref());
    }
    if !b.certified {
        report.notes.push("the pieces' circuits do not fit inside f; no certificate".into());
    }
}

pub fn cmd_minimize(args: &MinimizeArgs) -> Result<(RunReport, i32), Failure> {
    let start = Instant::now();
    let p = load_problem(&args.input, &[])?;
    if !p.constraints.is_empty() {
        return Err(Failure::input("the problem has constraints; use minimize-constrained"));
    }
    let f = &p.f;
    let settings = SolverSettings::default();
    let target = args.target.as_deref().map(|t| parse_target(t, f.nvars())).transpose()?;
    let weights = parse_weights(&args.run.weights)?;
    let tri = load_triangulation(args.run.triangulation.as_ref())?;
    let mut report = RunReport { command: "minimize".into(), input: input_echo(&p, &args.input), ..Default::default() };
    report.input["weights"] = json!(args.run.weights);

    let wants_cover = args.cover || tri.is_some() || !matches!(weights, WeightChoice::Fixed(Weights::Equal));
    if !wants_cover {
        let st = match &target {
            Some(t) => f_sonc_with(f, Some(t), &settings),
            None => global_lower_bound(f, &settings),
        };
        match st {
            Ok(b) => {
                report.program_kind = Some("unconstrained-gp".into());
                report.bound = Some(b.bound);
                report.m_star = Some(b.m_star);
                report.target = Some(b.target.clone());
                report.certificate = b.certificate.as_ref().map(SoncCertificate::to_json);
                report.solver.get_or_insert_with(Default::default).add(b.solve.as_ref());
                let cert = b.certificate.as_ref().map(|c| (c, &[][..]));
                return finish(report, &p, &args.run, start, cert);
            }
            Err(SoncError::NotSimplex { .. }) => report.notes.push("not an ST-polynomial; using the triangulation cover".into()),
            Err(e) => return Err(e.into()),
        }
    }

    let fixed = match &weights {
        WeightChoice::Fixed(w) => w.clone(),
        WeightChoice::Optimize(_) => Weights::Equal,
    };
    let dec = decompose(f, tri.as_ref(), &fixed)?;
    let targets: Vec<Option<Exponent>> = match &target {
        Some(t) => vec![Some(t.clone()); dec.len()],
        None => dec.origin_targets(),
    };
    report.program_kind = Some("cover".into());
    report.target = target.clone();
    report.triangulation = Some(dec.triangulation.to_json());
    let b = match weights {
        WeightChoice::Optimize(budget) => {
            let imp = improve_weights(f, &dec, &targets, budget, &settings)?;
            report.heuristic = true;
            report.notes.push(format!("weights optimized: {} → {} after {} piece solves", imp.initial_bound, imp.bound.bound, imp.solves));
            imp.bound
        }
        WeightChoice::Fixed(_) => bound_via_cover(f, &dec, &targets, &settings)?,
    };
    cover_report(&mut report, &b);
    finish(report, &p, &args.run, start, b.certificate.as_ref().map(|c| (c, &[][..])))
}

pub fn cmd_minimize_constrained(args: &ConstrainedArgs) -> Result<(RunReport, i32), Failure> {
    let start = Instant::now();
    let p = load_problem(&args.input, &args.constraints)?;
    let settings = SolverSettings::default();
    let mut report = RunReport { command: "minimize-constrained".into(), input: input_echo(&p, &args.input), ..Default::default() };
    report.input["strategy"] = serde_json::to_value(args.strategy).unwrap_or(Value::Null);

    if args.cover {
        let weights = match parse_weights(&args.run.weights)? {
            WeightChoice::Fixed(w) => w,
            WeightChoice::Optimize(_) => return Err(Failure::input("optimize weights apply to minimize only")),
        };
        report.input["weights"] = json!(args.run.weights);
        let tri = load_triangulation(args.run.triangulation.as_ref())?;
        let r = constrained_cover_bound(&p, tri.as_ref(), &weights, &settings)?;
        report.program_kind = Some("cover-constrained".into());
        report.bound = Some(r.bound);
        report.gamma = r.gamma;
        report.mu = r.mu.clone();
        report.pieces = r.m_star.iter().map(|m| PieceReport { target: Some(Exponent::zero(p.nvars())), m_star: *m }).collect();
        report.triangulation = Some(r.triangulation.to_json());
        report.certificate = r.certificate.as_ref().map(SoncCertificate::to_json);
        report.solver.get_or_insert_with(Default::default).add(r.solve.as_ref());
        report.notes.push(format!("joint program bound {}, μ = 0 bound {}", r.program_bound, r.zero_multiplier_bound));
        if r.bound > r.program_bound {
            report.notes.push("μ = 0 bound is the better one; its certificate is not reported".into());
        }
        let cert = r.certificate.as_ref().map(|c| (c, r.mu.as_slice()));
        return finish(report, &p, &args.run, start, cert);
    }

    let r = lower_bound_with(&p, args.strategy, &settings)?;
    report.program_kind = Some(
        match r.source {
            BoundSource::ConstrainedGp => "constrained-gp",
            BoundSource::ConstrainedSnp => "constrained-snp",
            BoundSource::ZeroMultipliers => "unconstrained-gp",
        }
        .into(),
    );
    report.bound = Some(r.bound);
    report.heuristic = r.heuristic;
    report.gamma = r.gamma;
    report.mu = r.mu.clone();
    report.certificate = r.certificate.as_ref().map(SoncCertificate::to_json);
    report.solver.get_or_insert_with(Default::default).add(r.solve.as_ref());
    report.notes = r.notes.clone();
    report.notes.push(format!(
        "μ = 0 bound {}{}",
        r.zero_multiplier_bound,
        r.program_bound.map(|b| format!(", program bound {b}")).unwrap_or_default()
    ));
    let cert = r.certificate.as_ref().map(|c| (c, r.mu.as_slice()));
    finish(report, &p, &args.run, start, cert)
}

pub fn cmd_verify(cert_path: &Path, problem_path: &Path) -> Result<(RunReport, i32), Failure> {
    let doc = read_json(cert_path)?;
    let cert_value = doc.get("certificate").ok_or_else(|| Failure::input("certificate file lacks \"certificate\""))?;
    let cert = SoncCertificate::from_json(cert_value)?;
    let mu: Vec<f64> = serde_json::from_value(doc.get("mu").cloned().unwrap_or(json!([]))).map_err(|e| Failure::input(format!("bad mu: {e}")))?;
    let claimed = match doc.get("bound") {
        Some(Value::Number(x)) => x.as_f64(),
        _ => None,
    };
    let p = ConstrainedProblem::from_json(&read(problem_path)?)?;
    let mut notes = Vec::new();
    let valid = if mu.iter().all(|&m| m == 0.0) && mu.len() <= p.multipliers() {
        verify_certificate(&p.f, &cert, RECON_TOL)
    } else {
        verify_constrained_certificate(&p, &mu, &cert, RECON_TOL)
    };
    if !valid {
        notes.push("certificate does not reconstruct a nonnegative decomposition of the problem".into());
    }
    let implied = implied_bound(&cert);
    let claim_ok = claimed.map_or(true, |b| b <= implied + RECON_TOL);
    if !claim_ok {
        notes.push(format!("claimed bound {} exceeds the certified {implied}", claimed.unwrap_or(f64::NAN)));
    }
    let verified = valid && claim_ok;
    let report = RunReport {
        command: "verify".into(),
        input: json!({ "certificate": cert_path.display().to_string(), "problem": problem_path.display().to_string() }),
        bound: Some(implied),
        mu,
        verified: Some(verified),
        notes,
        ..Default::default()
    };
    Ok((report, if verified { EXIT_OK } else { EXIT_VERIFY }))
}

/// `x` to 6 significant digits.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "∞".into() } else { "−∞".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let text = format!("{:.*}", (5 - exp).max(0) as usize, x);
        if text.contains('.') {
            text.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            text
        }
    } else {
        format!("{x:.5e}")
    }
}

fn exponent_list(v: &Value) -> String {
    v.as_array()
        .map(|a| a.iter().map(|e| serde_json::from_value::<Exponent>(e.clone()).map(|e| e.to_string()).unwrap_or_default()).collect::<Vec<_>>().join(" "))
        .unwrap_or_default()
}

/// Human-readable rendering of a report.
pub fn render(report: &RunReport) -> String {
    let mut out = Vec::new();
    if let Some(a) = &report.analysis {
        out.push(format!("f = {}", report.input["f"].as_str().unwrap_or("")));
        out.push(format!("status: {}", a["status"].as_str().unwrap_or("")));
        out.push(format!("V(A): {}", exponent_list(&a["vertices"])));
        out.push(format!("Δ(A): {}", exponent_list(&a["non_vertices"])));
        out.push(format!("Δ(f): {}", exponent_list(&a["tail_terms"])));
        return out.join("\n");
    }
    if let Some(v) = report.verified {
        out.push(format!("certificate {}", if v { "verified" } else { "REJECTED" }));
        out.push(format!("certified lower bound: {}", sig6(report.bound.unwrap_or(f64::NEG_INFINITY))));
    } else if let Some(b) = report.bound {
        let kind = report.program_kind.as_deref().unwrap_or("");
        out.push(format!("lower bound: {} ({kind}{})", sig6(b), if report.heuristic { ", heuristic" } else { "" }));
    }
    if let (Some(t), Some(m)) = (&report.target, report.m_star) {
        out.push(format!("m* at {t}: {}", sig6(m)));
    }
    if let Some(g) = report.gamma {
        out.push(format!("γ: {}", sig6(g)));
    }
    if !report.mu.is_empty() && report.verified.is_none() {
        out.push(format!("μ: ({})", report.mu.iter().map(|m| sig6(*m)).collect::<Vec<_>>().join(", ")));
    }
    for (i, p) in report.pieces.iter().enumerate() {
        out.push(format!("piece {}: m* = {}", i + 1, sig6(p.m_star)));
    }
    for (e, r) in &report.required {
        out.push(format!("coefficient needed at {e}: {}", sig6(*r)));
    }
    if let Some(s) = &report.solver {
        let mut line = format!("solver: {} program(s), {} iterations", s.programs, s.iterations);
        if let Some(ms) = s.wall_time_ms {
            line.push_str(&format!(", {} ms", sig6(ms)));
        }
        out.push(line);
    }
    if report.verified.is_none() && report.bound.is_some() {
        out.push(format!("certificate: {}", if report.certificate.is_some() { "yes" } else { "none" }));
    }
    if let Some(v) = &report.validation {
        out.push(format!(
            "validation: {} (sampled minimum {} over {} feasible points)",
            if v.passed { "passed" } else { "FAILED" },
            sig6(v.report.best_value),
            v.report.feasible_samples
        ));
    }
    for n in &report.notes {
        out.push(format!("note: {n}"));
    }
    out.join("\n")
}

/// Reports and failures alike become one JSON document.
pub fn render_json(result: &Result<(RunReport, i32), Failure>) -> String {
    let value = match result {
        Ok((report, code)) => {
            let mut v = serde_json::to_value(report).unwrap_or(Value::Null);
            v["exit_code"] = json!(code);
            v
        }
        Err(f) => json!({ "error": f.message, "exit_code": f.code }),
    };
    serde_json::to_string_pretty(&value).unwrap_or_default()
}
