//! Circuit polynomials and their nonnegativity test.
//!
//! A circuit polynomial has even simplex vertices with positive coefficients and
//! at most one further term `f_β x^β`. It is nonnegative exactly when `|f_β|` is
//! at most the circuit number `Θ = Π (f_{α(j)}/λ_j)^{λ_j}` (or `β` is even and
//! `f_β ≥ 0`).

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Result, SoncError};
use crate::geometry::{barycentric, is_affinely_independent, TailTerm};
use crate::polynomial::{Exponent, Polynomial};

type Q = BigRational;

/// Relative slack used by [`CircuitPolynomial::is_nonnegative`].
pub const DEFAULT_SLACK: f64 = 1e-9;

/// Exact comparisons are skipped above this common denominator of λ.
const MAX_EXACT_DENOMINATOR: u64 = 4096;
/// Rough cap on the size of the integers built by the exact comparison.
const MAX_EXACT_BITS: u64 = 1 << 21;

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitPolynomial {
    nvars: usize,
    vertices: Vec<Exponent>,
    vertex_coeffs: Vec<Q>,
    tail: Option<TailTerm>,
    /// Coefficients are exact data rather than rounded solver output.
    exact: bool,
}

/// Circuit number together with the `(coefficient, λ)` pairs that define it.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitNumber {
    pub value: f64,
    pub log_value: f64,
    pub pairs: Vec<(Q, Q)>,
}

impl CircuitPolynomial {
    pub fn new(vertices: Vec<Exponent>, vertex_coeffs: Vec<Q>, tail: Option<(Exponent, Q)>, exact: bool) -> Result<Self> {
        let Some(nvars) = vertices.first().map(Exponent::nvars) else {
            return Err(SoncError::InvalidCircuit("no vertices".into()));
        };
        if vertices.len() != vertex_coeffs.len() {
            return Err(SoncError::InvalidCircuit("vertex and coefficient counts differ".into()));
        }
        if vertices.iter().any(|v| v.nvars() != nvars) {
            return Err(SoncError::InvalidCircuit("mixed exponent lengths".into()));
        }
        if let Some(v) = vertices.iter().find(|v| !v.is_even()) {
            return Err(SoncError::InvalidCircuit(format!("vertex {v} is not even")));
        }
        if let Some(c) = vertex_coeffs.iter().find(|c| !c.is_positive()) {
            return Err(SoncError::InvalidCircuit(format!("vertex coefficient {c} is not positive")));
        }
        if !is_affinely_independent(&vertices) {
            return Err(SoncError::InvalidCircuit("vertices are affinely dependent".into()));
        }
        let tail = match tail {
            Some((beta, c)) if !c.is_zero() => {
                if vertices.contains(&beta) {
                    return Err(SoncError::InvalidCircuit(format!("tail {beta} coincides with a vertex")));
                }
                let lambda = barycentric(&beta, &vertices)
                    .map_err(|_| SoncError::InvalidCircuit(format!("tail {beta} is outside the simplex")))?;
                Some(TailTerm { exponent: beta, coefficient: c, lambda })
            }
            _ => None,
        };
        Ok(CircuitPolynomial { nvars, vertices, vertex_coeffs, tail, exact })
    }

    /// Reads a circuit back from its terms: hull vertices plus at most one other term.
    pub fn from_polynomial(p: &Polynomial, exact: bool) -> Result<Self> {
        let vertices = crate::geometry::hull_vertices(&p.support());
        let rest: Vec<(Exponent, Q)> = p
            .terms()
            .filter(|(e, _)| !vertices.contains(e))
            .map(|(e, c)| (e.clone(), c.clone()))
            .collect();
        if rest.len() > 1 {
            return Err(SoncError::InvalidCircuit(format!("{} non-vertex terms", rest.len())));
        }
        let coeffs = vertices.iter().map(|v| p.coefficient(v)).collect();
        Self::new(vertices, coeffs, rest.into_iter().next(), exact)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn vertices(&self) -> &[Exponent] {
        &self.vertices
    }

    pub fn vertex_coeffs(&self) -> &[Q] {
        &self.vertex_coeffs
    }

    pub fn tail(&self) -> Option<&TailTerm> {
        self.tail.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn to_polynomial(&self) -> Polynomial {
        let mut p = Polynomial::zero(self.nvars);
        for (v, c) in self.vertices.iter().zip(&self.vertex_coeffs) {
            p.add_term(v.clone(), c.clone());
        }
        if let Some(t) = &self.tail {
            p.add_term(t.exponent.clone(), t.coefficient.clone());
        }
        p
    }

    pub fn circuit_number(&self) -> Result<CircuitNumber> {
        let tail = self.tail.as_ref().ok_or(SoncError::NoTailTerm)?;
        let mut log_value = 0.0;
        let mut pairs = Vec::new();
        for j in tail.nz() {
            let lambda = &tail.lambda[j];
            let c = &self.vertex_coeffs[j];
            log_value += lambda.to_f64().unwrap_or(0.0) * (ln_rational(c) - ln_rational(lambda));
            pairs.push((c.clone(), lambda.clone()));
        }
        Ok(CircuitNumber { value: log_value.exp(), log_value, pairs })
    }

    pub fn is_nonnegative(&self) -> bool {
        self.is_nonnegative_with_slack(DEFAULT_SLACK)
    }

    /// Nonnegativity decision; `slack` is the relative band in which rounded
    /// data is given the benefit of the doubt.
    pub fn is_nonnegative_with_slack(&self, slack: f64) -> bool {
        let Some(tail) = &self.tail else {
            return true;
        };
        if tail.coefficient.is_positive() && tail.exponent.is_even() {
            return true;
        }
        let Ok(theta) = self.circuit_number() else {
            return true;
        };
        let gap = ln_rational(&tail.coefficient.abs()) - theta.log_value;
        if gap <= -slack {
            return true;
        }
        if gap >= slack {
            return false;
        }
        if self.exact {
            if let Some(ok) = exact_comparison(&tail.coefficient.abs(), &theta.pairs) {
                return ok;
            }
        }
        true
    }

    /// Multiplies by `b·x^shift` for an even integer shift.
    pub fn scale_by_even_monomial(&self, b: &Q, shift: &[i64]) -> Result<Self> {
        if !b.is_positive() {
            return Err(SoncError::InvalidCircuit("scale factor must be positive".into()));
        }
        if shift.len() != self.nvars {
            return Err(SoncError::DimensionMismatch { expected: self.nvars, got: shift.len() });
        }
        if shift.iter().any(|s| s % 2 != 0) {
            return Err(SoncError::InvalidCircuit("shift must be even".into()));
        }
        let move_exp = |e: &Exponent| -> Result<Exponent> {
            e.as_slice()
                .iter()
                .zip(shift)
                .map(|(&a, &s)| u32::try_from(i64::from(a) + s).map_err(|_| SoncError::NegativeExponent))
                .collect::<Result<Vec<u32>>>()
                .map(Exponent)
        };
        let vertices = self.vertices.iter().map(&move_exp).collect::<Result<Vec<_>>>()?;
        let coeffs = self.vertex_coeffs.iter().map(|c| c * b).collect();
        let tail = match &self.tail {
            Some(t) => Some((move_exp(&t.exponent)?, &t.coefficient * b)),
            None => None,
        };
        Self::new(vertices, coeffs, tail, self.exact)
    }
}

/// Natural logarithm of a positive rational without overflowing to infinity.
pub fn ln_rational(q: &Q) -> f64 {
    if !q.is_positive() {
        return f64::NEG_INFINITY;
    }
    ln_bigint(q.numer()) - ln_bigint(q.denom())
}

fn ln_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().map_or(f64::INFINITY, f64::ln);
    }
    let shift = bits - 64;
    let top: BigInt = n >> shift;
    top.to_f64().map_or(f64::INFINITY, f64::ln) + (shift as f64) * std::f64::consts::LN_2
}

/// Decides `|f_β| ≤ Π (c_j/λ_j)^{λ_j}` exactly by raising both sides to the
/// common denominator of the λ's. Returns `None` when the integers would be too large.
fn exact_comparison(tail_abs: &Q, pairs: &[(Q, Q)]) -> Option<bool> {
    let mut d = BigInt::one();
    for (_, l) in pairs {
        d = d.lcm(l.denom());
    }
    let d = d.to_u64().filter(|&d| d <= MAX_EXACT_DENOMINATOR)?;
    let mut bits = (tail_abs.numer().bits() + tail_abs.denom().bits()) * d;
    for (c, l) in pairs {
        let base = c / l;
        let k = (l * Q::from_integer(BigInt::from(d))).to_integer().to_u64()?;
        bits += (base.numer().bits() + base.denom().bits()) * k;
    }
    if bits > MAX_EXACT_BITS {
        return None;
    }
    let lhs = num_traits::pow(tail_abs.clone(), d as usize);
    let mut rhs = Q::one();
    for (c, l) in pairs {
        let k = (l * Q::from_integer(BigInt::from(d))).to_integer().to_usize()?;
        rhs *= num_traits::pow(c / l, k);
    }
    Some(lhs <= rhs)
}
