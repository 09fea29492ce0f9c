//! Geometric and signomial programs.
//!
//! A geometric program minimizes a posynomial subject to posynomial constraints
//! `p_i(z) ≤ 1` and monomial equalities `q_j(z) = 1` over `z > 0`. Substituting
//! `z = exp(y)` turns it into a smooth convex problem, solved here with a
//! log-barrier Newton method. Signomial programs allow negative coefficients and
//! are handled by repeated monomial condensation, which is a local heuristic.

mod barrier;
mod signomial;

use serde::Serialize;

use crate::error::{Result, SoncError};

pub use barrier::solve_gp;
pub use signomial::solve_signomial;

/// `coefficient · Π z_k^{exponents[k]}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PosyMonomial {
    pub coefficient: f64,
    pub exponents: Vec<f64>,
}

impl PosyMonomial {
    pub fn new(coefficient: f64, exponents: Vec<f64>) -> Self {
        PosyMonomial { coefficient, exponents }
    }

    pub fn constant(coefficient: f64, nvars: usize) -> Self {
        PosyMonomial { coefficient, exponents: vec![0.0; nvars] }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        let log: f64 = self.exponents.iter().zip(z).map(|(a, zk)| if *a == 0.0 { 0.0 } else { a * zk.ln() }).sum();
        self.coefficient * log.exp()
    }

    fn is_constant(&self) -> bool {
        self.exponents.iter().all(|&a| a == 0.0)
    }
}

/// Sum of monomials.
pub type Posynomial = Vec<PosyMonomial>;

pub fn eval_sum(p: &[PosyMonomial], z: &[f64]) -> f64 {
    p.iter().map(|m| m.eval(z)).sum()
}

/// A program over `nvars` positive variables; constraints read `p_i(z) ≤ 1`.
///
/// The same shape carries signomial programs, whose coefficients may be negative.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GeometricProgram {
    pub var_names: Vec<String>,
    /// Empty objective means a pure feasibility problem with value 0.
    pub objective: Posynomial,
    pub inequalities: Vec<Posynomial>,
    pub equalities: Vec<PosyMonomial>,
}

pub type SignomialProgram = GeometricProgram;

impl GeometricProgram {
    pub fn nvars(&self) -> usize {
        self.var_names.len()
    }

    fn monomials(&self) -> impl Iterator<Item = &PosyMonomial> {
        self.objective.iter().chain(self.inequalities.iter().flatten()).chain(self.equalities.iter())
    }

    pub fn validate(&self, signed: bool) -> Result<()> {
        let m = self.nvars();
        for mono in self.monomials() {
            if mono.exponents.len() != m {
                return Err(SoncError::DimensionMismatch { expected: m, got: mono.exponents.len() });
            }
            if !mono.coefficient.is_finite() || mono.exponents.iter().any(|a| !a.is_finite()) {
                return Err(SoncError::Invalid("non-finite program data".into()));
            }
            if !signed && mono.coefficient <= 0.0 {
                return Err(SoncError::Invalid("posynomial coefficients must be positive".into()));
            }
        }
        if self.equalities.iter().any(|q| q.coefficient <= 0.0) {
            return Err(SoncError::Invalid("equality monomials need positive coefficients".into()));
        }
        Ok(())
    }

    pub fn has_negative_coefficients(&self) -> bool {
        self.monomials().any(|m| m.coefficient < 0.0)
    }

    pub fn objective_value(&self, z: &[f64]) -> f64 {
        eval_sum(&self.objective, z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericFailure,
    NoStartingPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverSettings {
    /// Log-domain stationarity tolerance.
    pub kkt_tol: f64,
    /// Barrier duality-gap surrogate `m/t`.
    pub gap_tol: f64,
    /// Relative constraint violation accepted by feasibility checks.
    pub feas_tol: f64,
    /// Variables live in `[exp(-log_bound), exp(log_bound)]`.
    pub log_bound: f64,
    /// Values below this are reported as numerically zero.
    pub zero_threshold: f64,
    pub max_newton: usize,
    /// Barrier parameter growth per centering stage.
    pub t_factor: f64,
    pub sp_tol: f64,
    pub sp_max_outer: usize,
    pub unbounded_floor: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            kkt_tol: 1e-8,
            gap_tol: 1e-8,
            feas_tol: 1e-7,
            log_bound: 150.0 * std::f64::consts::LN_10,
            zero_threshold: 1e-30,
            max_newton: 4000,
            t_factor: 5.0,
            sp_tol: 1e-7,
            sp_max_outer: 50,
            unbounded_floor: -1e30,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveResult {
    pub status: Status,
    pub objective_value: f64,
    pub assignment: Vec<f64>,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub duality_gap: f64,
    pub numerically_zero: Vec<bool>,
    /// Set for signomial results, which are local.
    pub heuristic: bool,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    fn failed(status: Status, nvars: usize) -> Self {
        SolveResult {
            status,
            objective_value: f64::NAN,
            assignment: vec![f64::NAN; nvars],
            iterations: 0,
            kkt_residual: f64::NAN,
            duality_gap: f64::NAN,
            numerically_zero: vec![false; nvars],
            heuristic: false,
        }
    }
}

/// True iff every inequality is at most `1 + tol` and every equality within `tol` of 1.
pub fn check_feasible(prog: &GeometricProgram, assignment: &[f64], tol: f64) -> Result<bool> {
    if assignment.len() != prog.nvars() {
        return Err(SoncError::DimensionMismatch { expected: prog.nvars(), got: assignment.len() });
    }
    if assignment.iter().any(|&z| !(z > 0.0)) {
        return Ok(false);
    }
    let ineq_ok = prog.inequalities.iter().all(|p| eval_sum(p, assignment) <= 1.0 + tol);
    let eq_ok = prog.equalities.iter().all(|q| (q.eval(assignment) - 1.0).abs() <= tol);
    Ok(ineq_ok && eq_ok)
}

/// One log-sum-exp function `log Σ_k exp(a_k · y + c_k)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogSumExp {
    pub exponents: Vec<Vec<f64>>,
    pub log_coefficients: Vec<f64>,
}

impl LogSumExp {
    fn from_posynomial(p: &[PosyMonomial]) -> Self {
        LogSumExp {
            exponents: p.iter().map(|m| m.exponents.clone()).collect(),
            log_coefficients: p.iter().map(|m| m.coefficient.ln()).collect(),
        }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let v: Vec<f64> = self
            .exponents
            .iter()
            .zip(&self.log_coefficients)
            .map(|(a, c)| c + a.iter().zip(y).map(|(ai, yi)| ai * yi).sum::<f64>())
            .collect();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
    }

    /// Hessian in `y`, as rows.
    pub fn hessian(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let n = y.len();
        let v: Vec<f64> = self
            .exponents
            .iter()
            .zip(&self.log_coefficients)
            .map(|(a, c)| c + a.iter().zip(y).map(|(ai, yi)| ai * yi).sum::<f64>())
            .collect();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let mean: Vec<f64> = (0..n).map(|i| self.exponents.iter().zip(&p).map(|(a, pk)| pk * a[i]).sum()).collect();
        let mut h = vec![vec![0.0; n]; n];
        for (a, pk) in self.exponents.iter().zip(&p) {
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += pk * (a[i] - mean[i]) * (a[j] - mean[j]);
                }
            }
        }
        h
    }
}

/// The log-domain form of a geometric program, for inspection and debugging.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexProblem {
    pub var_names: Vec<String>,
    pub objective: Option<LogSumExp>,
    pub constraints: Vec<LogSumExp>,
    /// Rows `a_j` and right-hand sides `-log c_j` of `a_j · y = -log c_j`.
    pub equality_rows: Vec<Vec<f64>>,
    pub equality_rhs: Vec<f64>,
}

pub fn log_transform(gp: &GeometricProgram) -> Result<ConvexProblem> {
    gp.validate(false)?;
    Ok(ConvexProblem {
        var_names: gp.var_names.clone(),
        objective: (!gp.objective.is_empty()).then(|| LogSumExp::from_posynomial(&gp.objective)),
        constraints: gp.inequalities.iter().map(|p| LogSumExp::from_posynomial(p)).collect(),
        equality_rows: gp.equalities.iter().map(|q| q.exponents.clone()).collect(),
        equality_rhs: gp.equalities.iter().map(|q| -q.coefficient.ln()).collect(),
    })
}

impl ConvexProblem {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests;
