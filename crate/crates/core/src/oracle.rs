//! Sampling-based upper bounds on `inf f`, used to sanity-check certified lower bounds.
//!
//! Sampling only ever sees points inside the box, so it can expose a wrong
//! lower bound but never prove one right.

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::polynomial::Polynomial;

/// Constraint violation tolerated for a point to count as feasible.
pub const FEAS_TOL: f64 = 1e-7;

/// Slack allowed below a claimed lower bound before it is rejected.
pub const VALIDATION_TOL: f64 = 1e-6;

const PRIMES: [u8; 20] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleReport {
    /// `+∞` when no feasible point was found.
    pub best_value: f64,
    pub best_point: Vec<f64>,
    pub samples: usize,
    pub feasible_samples: usize,
    /// Local searches started from running-minimum records.
    pub polished: usize,
    #[serde(rename = "box")]
    pub bounds: Vec<(f64, f64)>,
    pub constrained: bool,
}

/// `[−5, 5]ⁿ`.
pub fn default_box(n: usize) -> Vec<(f64, f64)> {
    vec![(-5.0, 5.0); n]
}

/// Minimum of `f` over `n_samples` points of a shifted Halton sequence in the box.
pub fn sample_min(f: &Polynomial, bounds: &[(f64, f64)], n_samples: usize, seed: u64) -> SampleReport {
    sample_min_constrained(f, &[], bounds, n_samples, seed)
}

/// As [`sample_min`], keeping only points with every `g_i ≥ −FEAS_TOL`.
///
/// Every sample that sets a new running minimum seeds a Nelder–Mead polish,
/// so adding samples never raises the reported minimum.
pub fn sample_min_constrained(
    f: &Polynomial,
    constraints: &[Polynomial],
    bounds: &[(f64, f64)],
    n_samples: usize,
    seed: u64,
) -> SampleReport {
    let n = f.nvars();
    assert_eq!(bounds.len(), n, "box dimension");
    assert!(n <= PRIMES.len(), "at most {} variables", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let feasible = |x: &[f64]| constraints.iter().all(|g| g.evaluate(x) >= -FEAS_TOL);

    let mut report = SampleReport {
        best_value: f64::INFINITY,
        best_point: vec![],
        samples: n_samples,
        feasible_samples: 0,
        polished: 0,
        bounds: bounds.to_vec(),
        constrained: !constraints.is_empty(),
    };
    let mut records = Vec::new();
    let mut record = f64::INFINITY;
    for i in 0..n_samples {
        let x: Vec<f64> = (0..n)
            .map(|d| {
                let u = (halton::number(PRIMES[d], i + 1) + shift[d]).fract();
                bounds[d].0 + u * (bounds[d].1 - bounds[d].0)
            })
            .collect();
        if !feasible(&x) {
            continue;
        }
        report.feasible_samples += 1;
        let v = f.evaluate(&x);
        if v < record {
            record = v;
            records.push(x.clone());
        }
        if v < report.best_value {
            report.best_value = v;
            report.best_point = x;
        }
    }
    for start in &records {
        report.polished += 1;
        if let Some((x, v)) = polish(f, constraints, bounds, start) {
            if v < report.best_value && feasible(&x) {
                report.best_value = v;
                report.best_point = x;
            }
        }
    }
    report
}

/// `f` plus an exact penalty on constraint violation and on leaving the box.
struct Penalized<'a> {
    f: &'a Polynomial,
    constraints: &'a [Polynomial],
    bounds: &'a [(f64, f64)],
    weight: f64,
}

impl CostFunction for Penalized<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> Result<f64, argmin::core::Error> {
        let outside: f64 = x.iter().zip(self.bounds).map(|(v, (lo, hi))| (lo - v).max(0.0) + (v - hi).max(0.0)).sum();
        let violation: f64 = self.constraints.iter().map(|g| (-g.evaluate(x)).max(0.0)).sum();
        let v = self.f.evaluate(x) + self.weight * (outside + violation);
        Ok(if v.is_finite() { v } else { f64::MAX })
    }
}

fn polish(f: &Polynomial, constraints: &[Polynomial], bounds: &[(f64, f64)], start: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = start.len();
    let mut simplex = vec![start.to_vec()];
    for d in 0..n {
        let mut x = start.to_vec();
        let width = bounds[d].1 - bounds[d].0;
        x[d] += if x[d] + 0.02 * width <= bounds[d].1 { 0.02 * width } else { -0.02 * width };
        simplex.push(x);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-14).ok()?;
    let scale = 1.0 + f.evaluate(start).abs();
    let problem = Penalized { f, constraints, bounds, weight: 1e4 * scale };
    let result = Executor::new(problem, solver).configure(|s| s.max_iters(400 * n as u64)).timer(false).run().ok()?;
    let x = result.state.best_param?;
    let inside = x.iter().zip(bounds).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi);
    inside.then(|| {
        let v = f.evaluate(&x);
        (x, v)
    })
}

/// True iff no feasible sample in the box undercuts `bound` by more than [`VALIDATION_TOL`].
pub fn validate_bound(f: &Polynomial, constraints: &[Polynomial], bound: f64, bounds: &[(f64, f64)], n_samples: usize, seed: u64) -> bool {
    if bound == f64::NEG_INFINITY {
        return true;
    }
    let report = sample_min_constrained(f, constraints, bounds, n_samples, seed);
    report.best_value >= bound - VALIDATION_TOL
}

#[cfg(test)]
mod tests {
    use super::*;

    fn motzkin() -> Polynomial {
        Polynomial::parse("1 + x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2", 2).unwrap()
    }

    #[test]
    fn motzkin_minimum_is_found() {
        let r = sample_min(&motzkin(), &[(-2.0, 2.0); 2], 2000, 7);
        assert!(r.best_value <= 1e-4, "{r:?}");
        assert!(r.best_value >= -1e-12);
        assert!(r.best_point.iter().all(|x| (x.abs() - 1.0).abs() < 1e-2), "{r:?}");
    }

    #[test]
    fn constant_polynomial() {
        let f = Polynomial::parse("3/2", 2).unwrap();
        let r = sample_min(&f, &default_box(2), 100, 1);
        assert_eq!(r.best_value, 1.5);
    }

    #[test]
    fn constrained_minimizers_on_the_boundary() {
        let f = Polynomial::parse("x1^4 + x2^4 - 2*x1*x2", 2).unwrap();
        let g = Polynomial::parse("1 - x1^2 - x2^2", 2).unwrap();
        let r = sample_min_constrained(&f, &[g.clone()], &[(-3.0, 3.0); 2], 2000, 3);
        assert!(r.constrained);
        assert!(g.evaluate(&r.best_point) >= -FEAS_TOL);
        // Minimum −1/2 at x1 = x2 = ±1/√2, on the circle.
        assert!((r.best_value + 0.5).abs() < 1e-5, "{r:?}");

        let f = Polynomial::parse("1 + x1^2*x3^2 + x2^2*x3^2 + x1^2*x2^2 - 8*x1*x2*x3", 3).unwrap();
        let g = Polynomial::parse("x1^2*x2*x3 + x1*x2^2*x3 + x1^2*x2^2 - 2 + x1*x2*x3", 3).unwrap();
        let r = sample_min_constrained(&f, &[g], &[(-3.0, 3.0); 3], 4000, 5);
        assert!((r.best_value + 15.0).abs() < 0.05, "{r:?}");
        assert!(r.best_point.iter().all(|x| (x.abs() - 2.0).abs() < 0.1), "{r:?}");
    }

    #[test]
    fn validation() {
        let f = motzkin();
        assert!(validate_bound(&f, &[], 0.0, &[(-2.0, 2.0); 2], 1000, 1));
        assert!(!validate_bound(&f, &[], 0.5, &[(-2.0, 2.0); 2], 1000, 1));
        assert!(validate_bound(&f, &[], f64::NEG_INFINITY, &[(-2.0, 2.0); 2], 10, 1));
    }

    #[test]
    fn deterministic_and_monotone() {
        let f = Polynomial::parse("x1^4 - 3*x1*x2 + x2^4 + x1", 2).unwrap();
        let a = sample_min(&f, &default_box(2), 300, 11);
        assert_eq!(a, sample_min(&f, &default_box(2), 300, 11));
        let b = sample_min(&f, &default_box(2), 900, 11);
        assert!(b.best_value <= a.best_value);
    }
}
