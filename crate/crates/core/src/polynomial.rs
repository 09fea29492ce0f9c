//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Exponents are kept in graded-lexicographic order so that iteration, rendering
//! and every downstream tie-break are deterministic.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SoncError};

/// A non-negative integer exponent vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Exponent(pub Vec<u32>);

impl Exponent {
    pub fn zero(n: usize) -> Self {
        Exponent(vec![0; n])
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&e| u64::from(e)).sum()
    }

    pub fn is_even(&self) -> bool {
        self.0.iter().all(|e| e % 2 == 0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Coordinates as rationals, for exact geometry.
    pub fn to_rational(&self) -> Vec<BigRational> {
        self.0.iter().map(|&e| BigRational::from_integer(BigInt::from(e))).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&e| f64::from(e)).collect()
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl From<&[u32]> for Exponent {
    fn from(v: &[u32]) -> Self {
        Exponent(v.to_vec())
    }
}

impl<const N: usize> From<[u32; N]> for Exponent {
    fn from(v: [u32; N]) -> Self {
        Exponent(v.to_vec())
    }
}

/// A single coefficient-exponent pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub exponent: Exponent,
    pub coefficient: BigRational,
}

/// `x^α` with positive coefficient and even `α` is a monomial square.
pub fn is_monomial_square(term: &Term) -> bool {
    term.coefficient.is_positive() && term.exponent.is_even()
}

/// Exact rational from a float; panics only on NaN or infinity, which callers filter.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(|| panic!("non-finite value {x} has no rational form"))
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Parses `"3"`, `"-1/2"`, `"0.85"` or `"1.5e-3"` into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    if body.is_empty() {
        return None;
    }
    let value = if let Some((p, q)) = body.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        BigRational::new(p, q)
    } else {
        parse_decimal(body)?
    };
    Some(if neg { -value } else { value })
}

fn parse_decimal(body: &str) -> Option<BigRational> {
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}0").parse().ok()?;
    let scale = exp - frac_part.len() as i32 - 1;
    let ten = BigRational::from_integer(BigInt::from(10));
    let mut value = BigRational::from_integer(digits);
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Some(value)
}

/// Renders a rational as an integer or `p/q`.
pub fn render_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Sparse polynomial in `nvars` variables. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Exponent, BigRational>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Exponent, BigRational)>,
    {
        let mut p = Polynomial::zero(nvars);
        for (e, c) in terms {
            if e.nvars() != nvars {
                return Err(SoncError::DimensionMismatch { expected: nvars, got: e.nvars() });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    /// Convenience constructor from integer exponents and float coefficients.
    pub fn from_f64_terms(nvars: usize, terms: &[(&[u32], f64)]) -> Result<Self> {
        Self::from_terms(nvars, terms.iter().map(|(e, c)| (Exponent::from(*e), rational_from_f64(*c))))
    }

    pub fn parse(text: &str, nvars: usize) -> Result<Self> {
        Parser { src: text.as_bytes(), pos: 0, nvars }.polynomial()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, exponent: Exponent, coefficient: BigRational) {
        debug_assert_eq!(exponent.nvars(), self.nvars);
        if coefficient.is_zero() {
            return;
        }
        let entry = self.terms.entry(exponent.clone()).or_insert_with(BigRational::zero);
        *entry += coefficient;
        if entry.is_zero() {
            self.terms.remove(&exponent);
        }
    }

    pub fn coefficient(&self, e: &Exponent) -> BigRational {
        self.terms.get(e).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &BigRational)> {
        self.terms.iter()
    }

    pub fn term_list(&self) -> Vec<Term> {
        self.terms
            .iter()
            .map(|(e, c)| Term { exponent: e.clone(), coefficient: c.clone() })
            .collect()
    }

    /// Support in graded-lex order.
    pub fn support(&self) -> Vec<Exponent> {
        self.terms.keys().cloned().collect()
    }

    pub fn degree(&self) -> u64 {
        self.terms.keys().map(Exponent::degree).max().unwrap_or(0)
    }

    /// Float evaluation with compensated summation.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars, "point dimension must match polynomial");
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (e, c) in &self.terms {
            let mut v = rational_to_f64(c);
            for (xi, &k) in x.iter().zip(e.as_slice()) {
                if k > 0 {
                    v *= xi.powi(k as i32);
                }
            }
            let t = sum + v;
            if sum.abs() >= v.abs() {
                comp += (sum - t) + v;
            } else {
                comp += (v - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }

    pub fn scale(&self, k: &BigRational) -> Polynomial {
        let mut p = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            p.add_term(e.clone(), c * k);
        }
        p
    }

    /// Substitutes `x_i -> x_i^{k_i}`.
    pub fn scale_exponents(&self, factors: &[u32]) -> Result<Polynomial> {
        if factors.len() != self.nvars {
            return Err(SoncError::DimensionMismatch { expected: self.nvars, got: factors.len() });
        }
        let mut p = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            let scaled = e.as_slice().iter().zip(factors).map(|(a, k)| a * k).collect();
            p.add_term(Exponent(scaled), c.clone());
        }
        Ok(p)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        for (e, c) in &other.terms {
            p.add_term(e.clone(), c.clone());
        }
        p
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        for (e, c) in &other.terms {
            p.add_term(e.clone(), -c.clone());
        }
        p
    }

    /// Canonical text form; `parse(render(f)) == f`.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (e, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            match (i, neg) {
                (0, true) => out.push('-'),
                (0, false) => {}
                (_, true) => out.push_str(" - "),
                (_, false) => out.push_str(" + "),
            }
            let monomial = render_monomial(e);
            if monomial.is_empty() {
                out.push_str(&render_rational(&mag));
            } else if mag.is_one() {
                out.push_str(&monomial);
            } else {
                out.push_str(&render_rational(&mag));
                out.push('*');
                out.push_str(&monomial);
            }
        }
        out
    }
}

fn render_monomial(e: &Exponent) -> String {
    let mut parts = Vec::new();
    for (i, &k) in e.as_slice().iter().enumerate() {
        match k {
            0 => {}
            1 => parts.push(format!("x{}", i + 1)),
            _ => parts.push(format!("x{}^{}", i + 1, k)),
        }
    }
    parts.join("*")
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    nvars: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(SoncError::Syntax { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn polynomial(&mut self) -> Result<Polynomial> {
        let mut p = Polynomial::zero(self.nvars);
        let mut first = true;
        loop {
            let sign = match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    1
                }
                Some(b'-') => {
                    self.pos += 1;
                    -1
                }
                None if first => return self.err("empty polynomial"),
                None => break,
                Some(_) if first => 1,
                Some(c) => return self.err(format!("expected '+' or '-', found '{}'", c as char)),
            };
            first = false;
            let (e, c) = self.term()?;
            p.add_term(e, if sign < 0 { -c } else { c });
        }
        Ok(p)
    }

    fn term(&mut self) -> Result<(Exponent, BigRational)> {
        let mut exps = vec![0u32; self.nvars];
        let mut coeff = BigRational::one();
        let mut expect_factor;
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                coeff = self.number()?;
                if self.peek() == Some(b'*') {
                    self.pos += 1;
                    expect_factor = true;
                } else if self.peek() == Some(b'x') {
                    expect_factor = true;
                } else {
                    return Ok((Exponent(exps), coeff));
                }
            }
            Some(b'x') => expect_factor = true,
            _ => return self.err("expected coefficient or variable"),
        }
        while expect_factor {
            self.factor(&mut exps)?;
            expect_factor = self.peek() == Some(b'*');
            if expect_factor {
                self.pos += 1;
            }
        }
        Ok((Exponent(exps), coeff))
    }

    fn number(&mut self) -> Result<BigRational> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let exp_sign = (c == b'-' || c == b'+')
                && self.pos > start
                && matches!(self.src[self.pos - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let mut text = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        if self.peek() == Some(b'/') {
            self.pos += 1;
            self.skip_ws();
            let dstart = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if dstart == self.pos {
                return self.err("expected denominator");
            }
            text.push('/');
            text.push_str(std::str::from_utf8(&self.src[dstart..self.pos]).unwrap_or(""));
        }
        match parse_rational(&text) {
            Some(q) => Ok(q),
            None => Err(SoncError::Syntax { pos: start, msg: format!("invalid number '{text}'") }),
        }
    }

    fn uint(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .map_or_else(|| self.err("integer too large"), Ok)
    }

    fn factor(&mut self, exps: &mut [u32]) -> Result<()> {
        if self.peek() != Some(b'x') {
            return self.err("expected variable 'x<index>'");
        }
        self.pos += 1;
        let idx = self.uint()? as usize;
        if idx == 0 || idx > self.nvars {
            return Err(SoncError::VariableOutOfRange { index: idx, n: self.nvars });
        }
        let mut power = 1u64;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            power = self.uint()?;
            if power == 0 {
                return self.err("exponent must be positive");
            }
        }
        let slot = &mut exps[idx - 1];
        *slot = slot
            .checked_add(u32::try_from(power).map_err(|_| SoncError::Syntax {
                pos: self.pos,
                msg: "exponent too large".into(),
            })?)
            .ok_or_else(|| SoncError::Syntax { pos: self.pos, msg: "exponent overflow".into() })?;
        Ok(())
    }
}
