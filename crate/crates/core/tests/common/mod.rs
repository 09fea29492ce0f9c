//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sonc::constrained::ConstrainedProblem;
use sonc::geometry::{barycentric, is_affinely_independent};
use sonc::{Exponent, Polynomial};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(num.into(), den.into())
}

/// A full-dimensional simplex with the origin and even vertices, and the
/// lattice points it contains other than its vertices.
pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize, interior_only: bool) -> (Vec<Exponent>, Vec<Exponent>) {
    loop {
        let mut vertices = vec![Exponent::zero(n)];
        for _ in 0..n {
            vertices.push(Exponent((0..n).map(|_| 2 * rng.gen_range(0..5u32)).collect()));
        }
        if !is_affinely_independent(&vertices) {
            continue;
        }
        let max = vertices.iter().flat_map(|v| v.0.iter().copied()).max().unwrap_or(0);
        let mut inside = Vec::new();
        let mut point = vec![0u32; n];
        'grid: loop {
            let e = Exponent(point.clone());
            if !vertices.contains(&e) {
                if let Ok(l) = barycentric(&e, &vertices) {
                    if !interior_only || l.iter().all(Signed::is_positive) {
                        inside.push(e);
                    }
                }
            }
            for d in 0..n {
                point[d] += 1;
                if point[d] <= max {
                    continue 'grid;
                }
                point[d] = 0;
            }
            break;
        }
        if !inside.is_empty() {
            return (vertices, inside);
        }
    }
}

pub fn non_square_tail_coefficient(rng: &mut ChaCha8Rng, e: &Exponent) -> Q {
    let c = q(rng.gen_range(1..=12), 4);
    if e.is_even() || rng.gen_bool(0.5) {
        -c
    } else {
        c
    }
}

/// ST-polynomial with the origin as a vertex and up to three non-square tail terms.
pub fn random_st(seed: u64, n: usize) -> Polynomial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (vertices, inside) = random_simplex(&mut rng, n, false);
    let mut f = Polynomial::zero(n);
    for v in &vertices {
        f.add_term(v.clone(), q(rng.gen_range(2..=12), 4));
    }
    for _ in 0..rng.gen_range(1..=3) {
        let e = inside[rng.gen_range(0..inside.len())].clone();
        if f.coefficient(&e).is_zero() {
            let c = non_square_tail_coefficient(&mut rng, &e);
            f.add_term(e, c);
        }
    }
    f
}

/// Closed-form optimum of a single-tail circuit at the origin:
/// `m* = λ₀ (|c| / Π_{j≠0} (f_j/λ_j)^{λ_j})^{1/λ₀}`.
pub fn closed_form_m_star(vertex_coeffs: &[f64], lambda: &[f64], tail: f64) -> f64 {
    let log_rest: f64 = (1..lambda.len()).map(|j| lambda[j] * (vertex_coeffs[j] / lambda[j]).ln()).sum();
    lambda[0] * ((tail.abs().ln() - log_rest) / lambda[0]).exp()
}

/// A constrained instance whose geometric program applies: the constraint has
/// a positive constant and no vertex term of `f`'s simplex other than the origin.
pub fn random_constrained(seed: u64) -> ConstrainedProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_st(seed ^ 0x5eed, 2);
    let inside: Vec<Exponent> = f.support().into_iter().filter(|e| !e.is_zero()).collect();
    let mut g = Polynomial::zero(2);
    g.add_term(Exponent::zero(2), q(rng.gen_range(1..=8), 4));
    for e in &inside {
        if rng.gen_bool(0.5) && !f.coefficient(e).is_zero() && !e.is_even() {
            g.add_term(e.clone(), q(rng.gen_range(-6..=6), 4));
        }
    }
    ConstrainedProblem::new(f, vec![g]).unwrap()
}

/// An instance meeting the hypotheses of the equality theorem: every vertex
/// coefficient of `G(μ)` has one positive term, `g` is nonnegative at the
/// origin and `f` and `g` share no tail exponent.
pub fn equality_instance(seed: u64) -> Option<ConstrainedProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (vertices, inside) = random_simplex(&mut rng, 2, false);
    if inside.len() < 2 {
        return None;
    }
    let split = rng.gen_range(1..inside.len());
    let mut f = Polynomial::zero(2);
    for v in &vertices {
        f.add_term(v.clone(), q(rng.gen_range(2..=12), 4));
    }
    let e = inside[rng.gen_range(0..split)].clone();
    let c = non_square_tail_coefficient(&mut rng, &e);
    f.add_term(e, c);
    let mut g = Polynomial::zero(2);
    g.add_term(Exponent::zero(2), q(rng.gen_range(1..=8), 4));
    let e = inside[rng.gen_range(split..inside.len())].clone();
    let c = non_square_tail_coefficient(&mut rng, &e);
    g.add_term(e, -c);
    ConstrainedProblem::new(f, vec![g]).ok()
}


/// A circuit with the origin as a vertex and one strictly interior tail, with
/// the closed-form smallest constant term that keeps it nonnegative.
pub fn single_tail_circuit(rng: &mut ChaCha8Rng, n: usize) -> (Polynomial, f64) {
    let (vertices, inside) = random_simplex(rng, n, true);
    let tail = inside[rng.gen_range(0..inside.len())].clone();
    let coeffs: Vec<Q> = vertices.iter().map(|_| q(rng.gen_range(1..=12), 4)).collect();
    let c = non_square_tail_coefficient(rng, &tail);
    let mut f = Polynomial::zero(n);
    for (v, a) in vertices.iter().zip(&coeffs) {
        f.add_term(v.clone(), a.clone());
    }
    f.add_term(tail.clone(), c.clone());
    let lambda: Vec<f64> = barycentric(&tail, &vertices).unwrap().iter().map(to_f64).collect();
    let fc: Vec<f64> = coeffs.iter().map(to_f64).collect();
    let expected = closed_form_m_star(&fc, &lambda, to_f64(&c));
    (f, expected)
}

pub fn to_f64(x: &Q) -> f64 {
    num_traits::ToPrimitive::to_f64(x).unwrap()
}
