//! Log-barrier Newton method for the log-domain form of a geometric program.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{check_feasible, eval_sum, GeometricProgram, PosyMonomial, SolveResult, SolverSettings, Status};
use crate::error::Result;

/// `log Σ exp(A w + c)` in the reduced variables `w`.
#[derive(Clone, Debug)]
struct Lse {
    a: DMatrix<f64>,
    c: DVector<f64>,
}

impl Lse {
    fn value(&self, w: &DVector<f64>) -> f64 {
        let v = &self.a * w + &self.c;
        let max = v.max();
        max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
    }

    fn eval(&self, w: &DVector<f64>) -> (f64, DVector<f64>, Option<DMatrix<f64>>) {
        if self.a.nrows() == 1 {
            let v = (self.a.row(0) * w)[0] + self.c[0];
            return (v, self.a.row(0).transpose(), None);
        }
        let v = &self.a * w + &self.c;
        let max = v.max();
        let e: DVector<f64> = v.map(|x| (x - max).exp());
        let total = e.sum();
        let p = e / total;
        let g = self.a.transpose() * &p;
        let mut scaled = self.a.clone();
        for (mut row, pk) in scaled.row_iter_mut().zip(p.iter()) {
            row *= *pk;
        }
        let h = self.a.transpose() * scaled - &g * g.transpose();
        (max + total.ln(), g, Some(h))
    }

    /// Appends a column with a fixed coefficient for every term.
    fn with_extra_column(&self, value: f64) -> Lse {
        let a = self.a.clone().insert_column(self.a.ncols(), value);
        Lse { a, c: self.c.clone() }
    }

    fn shifted(&self, delta: f64) -> Lse {
        Lse { a: self.a.clone(), c: self.c.add_scalar(delta) }
    }
}

struct Problem {
    objective: Option<Lse>,
    constraints: Vec<Lse>,
}

impl Problem {
    fn dim(&self) -> usize {
        self.constraints.first().map_or(0, |c| c.a.ncols())
    }

    fn strictly_feasible(&self, w: &DVector<f64>) -> bool {
        self.constraints.iter().all(|c| c.value(w) < 0.0)
    }

    /// Scaled barrier objective `F0 + (1/t) Σ -log(-F_i)`.
    fn phi(&self, w: &DVector<f64>, t: f64) -> f64 {
        let mut barrier = 0.0;
        for c in &self.constraints {
            let v = c.value(w);
            if v >= 0.0 {
                return f64::INFINITY;
            }
            barrier -= (-v).ln();
        }
        self.objective.as_ref().map_or(0.0, |o| o.value(w)) + barrier / t
    }

    fn grad_hess(&self, w: &DVector<f64>, t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.dim();
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        if let Some(o) = &self.objective {
            let (_, g, h) = o.eval(w);
            grad += g;
            if let Some(h) = h {
                hess += h;
            }
        }
        for c in &self.constraints {
            let (v, g, h) = c.eval(w);
            let inv = 1.0 / (-v);
            grad += &g * (inv / t);
            hess += &g * g.transpose() * (inv * inv / t);
            if let Some(h) = h {
                hess += h * (inv / t);
            }
        }
        (grad, hess)
    }
}

enum Centering {
    Converged,
    Stalled,
    Failed,
    EarlyStop,
}

struct Newton<'a> {
    prob: &'a Problem,
    iterations: usize,
    budget: usize,
    quadratic_steps: usize,
}

impl Newton<'_> {
    /// Centers `w` for barrier parameter `t`. `stop_below` ends early once the
    /// last coordinate drops below the given value (phase one).
    fn center(&mut self, w: &mut DVector<f64>, t: f64, stop_below: Option<f64>) -> Centering {
        self.quadratic_steps = 0;
        loop {
            if self.iterations >= self.budget {
                return Centering::Failed;
            }
            self.iterations += 1;
            let (grad, hess) = self.prob.grad_hess(w, t);
            let Some(step) = solve_spd(&hess, &(-&grad)) else {
                return Centering::Failed;
            };
            if step.iter().any(|x| !x.is_finite()) {
                return Centering::Failed;
            }
            let decrement = -grad.dot(&step);
            if decrement * t / 2.0 <= 1e-12 {
                return Centering::Converged;
            }
            let phi0 = self.prob.phi(w, t);
            let full = &*w + &step;
            if decrement * t < 1e-2 && self.prob.strictly_feasible(&full) {
                // Inside the quadratic-convergence region; skipping the line search
                // avoids stalling on rounding noise in phi.
                *w = full;
                self.quadratic_steps += 1;
                if self.quadratic_steps > 30 {
                    return Centering::Stalled;
                }
            } else {
                let mut alpha = 1.0;
                loop {
                    let trial = &*w + &step * alpha;
                    let phi = self.prob.phi(&trial, t);
                    if phi.is_finite() && phi <= phi0 - 0.25 * alpha * decrement {
                        *w = trial;
                        break;
                    }
                    alpha *= 0.5;
                    if alpha < 1e-14 {
                        return Centering::Stalled;
                    }
                }
            }
            if let Some(limit) = stop_below {
                if w[w.len() - 1] <= limit {
                    return Centering::EarlyStop;
                }
            }
        }
    }
}

/// Cholesky solve with growing diagonal regularization.
fn solve_spd(h: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = h.clone().cholesky() {
        return Some(ch.solve(rhs));
    }
    let scale = 1.0 + h.diagonal().amax();
    let mut delta = 1e-12 * scale;
    while delta < 1e6 * scale {
        let mut reg = h.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += delta;
        }
        if let Some(ch) = reg.cholesky() {
            return Some(ch.solve(rhs));
        }
        delta *= 100.0;
    }
    None
}

/// Affine parametrization `y = y0 + N w` of the equality-constrained subspace.
struct Reduction {
    y0: DVector<f64>,
    basis: DMatrix<f64>,
}

fn reduce_equalities(gp: &GeometricProgram) -> Option<Reduction> {
    let m = gp.nvars();
    if gp.equalities.is_empty() {
        return Some(Reduction { y0: DVector::zeros(m), basis: DMatrix::identity(m, m) });
    }
    let p = gp.equalities.len();
    let e = DMatrix::from_fn(p, m, |i, j| gp.equalities[i].exponents[j]);
    let d = DVector::from_fn(p, |i, _| -gp.equalities[i].coefficient.ln());
    let y0 = e.clone().svd(true, true).solve(&d, 1e-12).ok()?;
    let residual = (&e * &y0 - &d).amax();
    if residual > 1e-9 * (1.0 + d.amax()) {
        return None;
    }
    let gram = e.transpose() * &e;
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.amax().max(1.0);
    let cols: Vec<DVector<f64>> = (0..m)
        .filter(|&k| eig.eigenvalues[k].abs() <= 1e-10 * top)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();
    let basis = if cols.is_empty() { DMatrix::zeros(m, 0) } else { DMatrix::from_columns(&cols) };
    Some(Reduction { y0, basis })
}

fn lse_in_w(p: &[PosyMonomial], red: &Reduction) -> Lse {
    let m = red.y0.len();
    let ay = DMatrix::from_fn(p.len(), m, |i, j| p[i].exponents[j]);
    let c = DVector::from_fn(p.len(), |i, _| p[i].coefficient.ln()) + &ay * &red.y0;
    Lse { a: ay * &red.basis, c }
}

pub fn solve_gp(gp: &GeometricProgram, settings: &SolverSettings) -> Result<SolveResult> {
    gp.validate(false)?;
    Ok(solve_validated(gp, settings))
}

fn solve_validated(gp: &GeometricProgram, settings: &SolverSettings) -> SolveResult {
    let m = gp.nvars();
    let Some(red) = reduce_equalities(gp) else {
        return SolveResult::failed(Status::Infeasible, m);
    };
    let k = red.basis.ncols();
    let mut constraints: Vec<Lse> = Vec::new();
    for p in &gp.inequalities {
        if p.iter().all(PosyMonomial::is_constant) {
            if eval_sum(p, &vec![1.0; m]) > 1.0 + settings.feas_tol {
                return SolveResult::failed(Status::Infeasible, m);
            }
            continue;
        }
        constraints.push(lse_in_w(p, &red));
    }
    let nonbox = constraints.len();
    for j in 0..m {
        let row = red.basis.row(j).into_owned();
        constraints.push(Lse { a: DMatrix::from_rows(&[row.clone()]), c: DVector::from_element(1, red.y0[j] - settings.log_bound) });
        constraints.push(Lse { a: DMatrix::from_rows(&[-row]), c: DVector::from_element(1, -settings.log_bound - red.y0[j]) });
    }
    let objective = (!gp.objective.is_empty()).then(|| lse_in_w(&gp.objective, &red));

    let finish = |w: &DVector<f64>, iterations: usize, kkt: f64, gap: f64, status: Status| {
        let y = &red.y0 + &red.basis * w;
        let mut z: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        if status == Status::Optimal {
            snap_to_floor(gp, &mut z, settings);
        }
        let mut status = status;
        if status == Status::Optimal && !check_feasible(gp, &z, settings.feas_tol).unwrap_or(false) {
            status = Status::NumericFailure;
        }
        SolveResult {
            status,
            objective_value: if gp.objective.is_empty() { 0.0 } else { gp.objective_value(&z) },
            numerically_zero: z.iter().map(|&v| v < settings.zero_threshold).collect(),
            assignment: z,
            iterations,
            kkt_residual: kkt,
            duality_gap: gap,
            heuristic: false,
        }
    };

    // Phase one: minimize s subject to F_i(w) <= s.
    let w0 = DVector::zeros(k);
    let phase1 = Problem {
        objective: Some(Lse { a: DMatrix::from_fn(1, k + 1, |_, j| if j == k { 1.0 } else { 0.0 }), c: DVector::zeros(1) }),
        constraints: constraints.iter().map(|c| c.with_extra_column(-1.0)).collect(),
    };
    let s0 = constraints.iter().map(|c| c.value(&w0)).fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let mut ws = w0.clone().insert_row(k, s0);
    let mut newton = Newton { prob: &phase1, iterations: 0, budget: settings.max_newton, quadratic_steps: 0 };
    let mut t = 1.0;
    loop {
        match newton.center(&mut ws, t, Some(-0.1)) {
            Centering::EarlyStop => break,
            Centering::Failed => return finish(&ws.rows(0, k).into_owned(), newton.iterations, f64::NAN, f64::NAN, fail_status(&newton)),
            Centering::Converged | Centering::Stalled => {}
        }
        if ws[k] < 0.0 {
            break;
        }
        if phase1.constraints.len() as f64 / t < 1e-10 {
            break;
        }
        t *= settings.t_factor;
    }
    let mut iterations = newton.iterations;
    let s_star = ws[k];
    let mut w = ws.rows(0, k).into_owned();
    if s_star > 1e-8 {
        return finish(&w, iterations, f64::NAN, f64::NAN, Status::Infeasible);
    }
    if s_star >= 0.0 {
        // Feasible set without interior: relax by a hair so the barrier can start.
        let shift = s_star + 1e-9;
        for c in constraints.iter_mut().take(nonbox) {
            *c = c.shifted(-shift);
        }
    }

    let prob = Problem { objective, constraints };
    if prob.objective.is_none() {
        return finish(&w, iterations, 0.0, 0.0, Status::Optimal);
    }
    let count = prob.constraints.len() as f64;
    let mut newton = Newton { prob: &prob, iterations, budget: settings.max_newton, quadratic_steps: 0 };
    let mut t = 1.0;
    loop {
        match newton.center(&mut w, t, None) {
            Centering::Failed => {
                let status = fail_status(&newton);
                return finish(&w, newton.iterations, f64::NAN, count / t, status);
            }
            Centering::Converged | Centering::Stalled | Centering::EarlyStop => {}
        }
        if count / t <= settings.gap_tol {
            break;
        }
        t *= settings.t_factor;
    }
    iterations = newton.iterations;
    // Stationarity with barrier multipliers 1/(t·(−F_i)), measured both in the
    // max norm and in the local Hessian norm (the Newton decrement), which stays
    // meaningful when optimal variables sit on the box floor. Refitted multipliers
    // win when rounding spoils the tiny slacks.
    polish(&prob, &mut w, t, settings.kkt_tol);
    let (barrier_grad, hess) = prob.grad_hess(&w, t);
    let decrement = solve_spd(&hess, &barrier_grad).map_or(f64::INFINITY, |s| barrier_grad.dot(&s).max(0.0).sqrt());
    let kkt = kkt_residual(&prob, &w).min(barrier_grad.amax()).min(decrement);
    let gap = count / t;
    let status = if kkt <= settings.kkt_tol && gap <= settings.gap_tol { Status::Optimal } else { Status::NumericFailure };
    finish(&w, iterations, kkt, gap, status)
}

/// Pushes variables that the barrier left merely tiny down to the floor when
/// that keeps every constraint satisfied and does not raise the objective.
/// Tries a joint rescaling of their logarithms first, then one at a time.
fn snap_to_floor(gp: &GeometricProgram, z: &mut [f64], settings: &SolverSettings) {
    const TINY: f64 = 1e-8;
    let tiny: Vec<usize> = (0..z.len()).filter(|&k| z[k] < TINY).collect();
    if tiny.is_empty() {
        return;
    }
    let objective = |z: &[f64]| if gp.objective.is_empty() { 0.0 } else { gp.objective_value(z) };
    let acceptable = |trial: &[f64], reference: f64| {
        check_feasible(gp, trial, 0.0).unwrap_or(false) && objective(trial) <= reference
    };
    let floor_log = -settings.log_bound;
    let base = objective(z);
    let min_log = tiny.iter().map(|&k| z[k].ln()).fold(f64::INFINITY, f64::min);
    if min_log < 0.0 {
        let kappa = floor_log / min_log;
        let mut trial = z.to_vec();
        for &k in &tiny {
            trial[k] = (kappa * z[k].ln()).exp().max(floor_log.exp());
        }
        if acceptable(&trial, base) {
            z.copy_from_slice(&trial);
            return;
        }
    }
    for &k in &tiny {
        let mut trial = z.to_vec();
        trial[k] = floor_log.exp();
        let reference = objective(z);
        if acceptable(&trial, reference) {
            z.copy_from_slice(&trial);
        }
    }
}

/// Extra undamped Newton steps at the final barrier parameter while they
/// keep reducing the gradient.
fn polish(prob: &Problem, w: &mut DVector<f64>, t: f64, target: f64) {
    let (mut grad, mut hess) = prob.grad_hess(w, t);
    for _ in 0..10 {
        if grad.amax() <= target {
            return;
        }
        let Some(step) = solve_spd(&hess, &(-&grad)) else {
            return;
        };
        let trial = &*w + step;
        if !prob.strictly_feasible(&trial) {
            return;
        }
        let (g, h) = prob.grad_hess(&trial, t);
        if !(g.amax() < grad.amax()) {
            return;
        }
        *w = trial;
        grad = g;
        hess = h;
    }
}

/// Stationarity residual `‖∇F0 + Σ λ_i ∇F_i‖∞` with the best nonnegative
/// multipliers on the nearly active constraints.
fn kkt_residual(prob: &Problem, w: &DVector<f64>) -> f64 {
    let Some(obj) = &prob.objective else {
        return 0.0;
    };
    let (_, g0, _) = obj.eval(w);
    let active: Vec<DVector<f64>> = prob
        .constraints
        .iter()
        .filter_map(|c| {
            let (v, g, _) = c.eval(w);
            (v > -1e-5).then_some(g)
        })
        .collect();
    if active.is_empty() {
        return g0.amax();
    }
    let a = DMatrix::from_columns(&active);
    let lambda = nnls(&a, &(-&g0));
    (g0 + a * lambda).amax()
}

/// Lawson-Hanson nonnegative least squares: `min ‖A x − b‖₂` over `x ≥ 0`.
pub(crate) fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    for _ in 0..3 * n + 10 {
        let grad = a.transpose() * (b - a * &x);
        let candidate = (0..n).filter(|&j| !passive[j] && grad[j] > 1e-14).max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(j) = candidate else {
            break;
        };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = DMatrix::from_fn(a.nrows(), idx.len(), |r, c| a[(r, idx[c])]);
            let Ok(z) = sub.clone().svd(true, true).solve(b, 1e-14) else {
                return x;
            };
            if z.iter().all(|&v| v > 0.0) {
                for (c, &k) in idx.iter().enumerate() {
                    x[k] = z[c];
                }
                break;
            }
            let mut alpha = 1.0f64;
            for (c, &k) in idx.iter().enumerate() {
                if z[c] <= 0.0 {
                    alpha = alpha.min(x[k] / (x[k] - z[c]));
                }
            }
            for (c, &k) in idx.iter().enumerate() {
                x[k] += alpha * (z[c] - x[k]);
                if x[k] <= 1e-15 {
                    x[k] = 0.0;
                    passive[k] = false;
                }
            }
        }
    }
    x
}

fn fail_status(newton: &Newton<'_>) -> Status {
    if newton.iterations >= newton.budget {
        Status::IterationLimit
    } else {
        Status::NumericFailure
    }
}
