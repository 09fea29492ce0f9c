//! Exact convex geometry on exponent lattices: hull vertices, barycentric
//! coordinates, simplex-tail normal forms and placing triangulations.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Result, SoncError};
use crate::linalg::{self, Solution};
use crate::polynomial::{is_monomial_square, Exponent, Polynomial, Term};

type Q = BigRational;

/// Vertices of `conv(points)` in graded-lex order.
pub fn hull_vertices(points: &[Exponent]) -> Vec<Exponent> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    let rational: Vec<Vec<Q>> = pts.iter().map(Exponent::to_rational).collect();
    let mut vertices = Vec::new();
    for i in 0..pts.len() {
        let others: Vec<Vec<Q>> = rational
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, p)| p.clone())
            .collect();
        if !linalg::in_convex_hull(&rational[i], &others) {
            vertices.push(pts[i].clone());
        }
    }
    vertices
}

pub fn affine_dimension(points: &[Exponent]) -> usize {
    let rational: Vec<Vec<Q>> = points.iter().map(Exponent::to_rational).collect();
    linalg::affine_dimension(&rational)
}

pub fn is_affinely_independent(points: &[Exponent]) -> bool {
    points.len() <= 1 || affine_dimension(points) == points.len() - 1
}

/// Barycentric coordinates of `beta` with respect to `simplex`.
pub fn barycentric(beta: &Exponent, simplex: &[Exponent]) -> Result<Vec<Q>> {
    let lambda = affine_coordinates(beta, simplex)?;
    if lambda.iter().any(Signed::is_negative) {
        return Err(SoncError::NotInSimplex);
    }
    Ok(lambda)
}

/// Affine coordinates of `beta` in the affine hull of `simplex`; entries may be negative.
pub fn affine_coordinates(beta: &Exponent, simplex: &[Exponent]) -> Result<Vec<Q>> {
    if simplex.is_empty() {
        return Err(SoncError::DegenerateSimplex);
    }
    for v in simplex {
        if v.nvars() != beta.nvars() {
            return Err(SoncError::DimensionMismatch { expected: beta.nvars(), got: v.nvars() });
        }
    }
    if !is_affinely_independent(simplex) {
        return Err(SoncError::DegenerateSimplex);
    }
    let n = beta.nvars();
    let cols: Vec<Vec<Q>> = simplex.iter().map(Exponent::to_rational).collect();
    let mut rows: Vec<Vec<Q>> = (0..n).map(|r| cols.iter().map(|c| c[r].clone()).collect()).collect();
    rows.push(vec![Q::one(); simplex.len()]);
    let mut rhs = beta.to_rational();
    rhs.push(Q::one());
    match linalg::solve(&rows, &rhs) {
        Solution::Unique(x) => Ok(x),
        Solution::Inconsistent => Err(SoncError::NotInSimplex),
        Solution::Underdetermined => Err(SoncError::DegenerateSimplex),
    }
}

/// Support classification of a polynomial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportAnalysis {
    pub points: Vec<Exponent>,
    pub vertices: Vec<Exponent>,
    /// Support points that are not hull vertices.
    pub non_vertices: Vec<Exponent>,
    /// Non-vertex terms that are not monomial squares.
    pub tail_terms: Vec<Exponent>,
    /// Every hull vertex is even with a positive coefficient.
    pub clubsuit_ok: bool,
    /// Vertices violating the condition above, with a reason.
    pub clubsuit_violations: Vec<(Exponent, String)>,
    pub dimension: usize,
}

pub fn analyze_support(f: &Polynomial) -> SupportAnalysis {
    let points = f.support();
    let vertices = hull_vertices(&points);
    let non_vertices: Vec<Exponent> = points.iter().filter(|p| !vertices.contains(p)).cloned().collect();
    let tail_terms = non_vertices
        .iter()
        .filter(|e| !is_monomial_square(&Term { exponent: (*e).clone(), coefficient: f.coefficient(e) }))
        .cloned()
        .collect();
    let mut violations = Vec::new();
    for v in &vertices {
        if !v.is_even() {
            violations.push((v.clone(), "exponent is not even".to_string()));
        } else if !f.coefficient(v).is_positive() {
            violations.push((v.clone(), "coefficient is not positive".to_string()));
        }
    }
    SupportAnalysis {
        dimension: affine_dimension(&points),
        points,
        vertices,
        non_vertices,
        tail_terms,
        clubsuit_ok: violations.is_empty(),
        clubsuit_violations: violations,
    }
}

/// One non-vertex term together with its barycentric coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct TailTerm {
    pub exponent: Exponent,
    pub coefficient: Q,
    pub lambda: Vec<Q>,
}

impl TailTerm {
    /// Indices of vertices with nonzero barycentric weight.
    pub fn nz(&self) -> Vec<usize> {
        (0..self.lambda.len()).filter(|&j| !self.lambda[j].is_zero()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.coefficient.is_positive() && self.exponent.is_even()
    }
}

/// A polynomial whose Newton polytope is a simplex, split into vertices and tail.
#[derive(Clone, Debug, PartialEq)]
pub struct STForm {
    pub nvars: usize,
    pub vertices: Vec<Exponent>,
    pub vertex_coeffs: Vec<Q>,
    /// All non-vertex terms, including interior monomial squares.
    pub tail: Vec<TailTerm>,
}

impl STForm {
    pub fn vertex_index(&self, e: &Exponent) -> Option<usize> {
        self.vertices.iter().position(|v| v == e)
    }

    /// Tail terms that are not monomial squares.
    pub fn non_square_tail(&self) -> impl Iterator<Item = &TailTerm> {
        self.tail.iter().filter(|t| !t.is_square())
    }
}

pub fn st_form(f: &Polynomial) -> Result<STForm> {
    let analysis = analyze_support(f);
    if let Some((v, reason)) = analysis.clubsuit_violations.first() {
        return Err(SoncError::ClubsuitViolated { vertex: v.to_string(), reason: reason.clone() });
    }
    st_form_with_vertices(f, &analysis.vertices)
}

/// Builds the simplex-tail form against an explicit vertex list.
pub fn st_form_with_vertices(f: &Polynomial, vertices: &[Exponent]) -> Result<STForm> {
    if !is_affinely_independent(vertices) {
        return Err(SoncError::NotSimplex { vertices: vertices.len(), dim: affine_dimension(vertices) });
    }
    let mut tail = Vec::new();
    for (e, c) in f.terms() {
        if vertices.contains(e) {
            continue;
        }
        tail.push(TailTerm { exponent: e.clone(), coefficient: c.clone(), lambda: barycentric(e, vertices)? });
    }
    Ok(STForm {
        nvars: f.nvars(),
        vertices: vertices.to_vec(),
        vertex_coeffs: vertices.iter().map(|v| f.coefficient(v)).collect(),
        tail,
    })
}

/// Simplices as index tuples into a shared point list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triangulation {
    pub points: Vec<Exponent>,
    pub simplices: Vec<Vec<usize>>,
}

impl Triangulation {
    pub fn from_simplices(simplices: &[Vec<Exponent>]) -> Result<Self> {
        let mut points: Vec<Exponent> = simplices.iter().flatten().cloned().collect();
        points.sort();
        points.dedup();
        let mut out = Vec::new();
        for s in simplices {
            if !is_affinely_independent(s) {
                return Err(SoncError::InvalidTriangulation(format!(
                    "simplex {} is degenerate",
                    render_simplex(s)
                )));
            }
            let mut idx: Vec<usize> =
                s.iter().map(|e| points.iter().position(|p| p == e).unwrap_or_default()).collect();
            idx.sort_unstable();
            out.push(idx);
        }
        Ok(Triangulation { points, simplices: out })
    }

    pub fn simplex(&self, k: usize) -> Vec<Exponent> {
        self.simplices[k].iter().map(|&i| self.points[i].clone()).collect()
    }

    pub fn simplex_list(&self) -> Vec<Vec<Exponent>> {
        (0..self.simplices.len()).map(|k| self.simplex(k)).collect()
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Indices of simplices containing `e` (boundary included).
    pub fn containing(&self, e: &Exponent) -> Vec<usize> {
        (0..self.simplices.len()).filter(|&k| barycentric(e, &self.simplex(k)).is_ok()).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.simplex_list()).unwrap_or(serde_json::Value::Null)
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let simplices: Vec<Vec<Exponent>> = serde_json::from_value(value.clone())
            .map_err(|e| SoncError::InvalidTriangulation(e.to_string()))?;
        Self::from_simplices(&simplices)
    }
}

fn render_simplex(s: &[Exponent]) -> String {
    let parts: Vec<String> = s.iter().map(ToString::to_string).collect();
    format!("{{{}}}", parts.join(","))
}

/// Placing triangulation in graded-lex insertion order.
///
/// Points outside the current hull are joined to every visible boundary facet;
/// points inside are inserted by stellar subdivision of each simplex containing
/// them, so every input point ends up as a vertex.
pub fn triangulate_squares(points: &[Exponent]) -> Result<Triangulation> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    let Some(n) = pts.first().map(Exponent::nvars) else {
        return Err(SoncError::DegenerateSupport { dim: 0, ambient: 0 });
    };
    let dim = affine_dimension(&pts);
    if dim != n {
        return Err(SoncError::DegenerateSupport { dim, ambient: n });
    }

    let mut initial: Vec<usize> = Vec::new();
    for i in 0..pts.len() {
        let mut trial: Vec<Exponent> = initial.iter().map(|&j| pts[j].clone()).collect();
        trial.push(pts[i].clone());
        if is_affinely_independent(&trial) {
            initial.push(i);
            if initial.len() == n + 1 {
                break;
            }
        }
    }
    let mut simplices: Vec<Vec<usize>> = vec![initial.clone()];

    for p in 0..pts.len() {
        if initial.contains(&p) {
            continue;
        }
        let coords: Vec<Vec<Q>> = simplices
            .iter()
            .map(|s| {
                let verts: Vec<Exponent> = s.iter().map(|&i| pts[i].clone()).collect();
                affine_coordinates(&pts[p], &verts)
            })
            .collect::<Result<_>>()?;
        let inside = coords.iter().any(|l| l.iter().all(|x| !x.is_negative()));
        let mut next = Vec::new();
        if inside {
            for (s, l) in simplices.iter().zip(&coords) {
                if l.iter().any(Signed::is_negative) {
                    next.push(s.clone());
                    continue;
                }
                for j in 0..s.len() {
                    if l[j].is_positive() {
                        let mut t = s.clone();
                        t[j] = p;
                        t.sort_unstable();
                        next.push(t);
                    }
                }
            }
        } else {
            let mut facet_count: HashMap<Vec<usize>, usize> = HashMap::new();
            for s in &simplices {
                for j in 0..s.len() {
                    *facet_count.entry(facet(s, j)).or_default() += 1;
                }
            }
            next = simplices.clone();
            for (s, l) in simplices.iter().zip(&coords) {
                for j in 0..s.len() {
                    let f = facet(s, j);
                    if facet_count[&f] == 1 && l[j].is_negative() {
                        let mut t = f;
                        t.push(p);
                        t.sort_unstable();
                        next.push(t);
                    }
                }
            }
        }
        simplices = next;
    }
    Ok(Triangulation { points: pts, simplices })
}

fn facet(s: &[usize], drop: usize) -> Vec<usize> {
    let mut f: Vec<usize> = s.iter().enumerate().filter(|&(j, _)| j != drop).map(|(_, &v)| v).collect();
    f.sort_unstable();
    f
}

/// Normalized volume `|det|` of a full-dimensional simplex.
pub fn simplex_volume(simplex: &[Exponent]) -> Q {
    let base = simplex[0].to_rational();
    let rows: Vec<Vec<Q>> = simplex[1..]
        .iter()
        .map(|p| p.to_rational().iter().zip(&base).map(|(a, b)| a - b).collect())
        .collect();
    linalg::determinant(&rows).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::parse_rational;

    fn e(v: &[u32]) -> Exponent {
        Exponent::from(v)
    }

    fn q(s: &str) -> Q {
        parse_rational(s).unwrap()
    }

    #[test]
    fn hull_examples() {
        let motzkin = [e(&[0, 0]), e(&[4, 2]), e(&[2, 4]), e(&[2, 2])];
        assert_eq!(hull_vertices(&motzkin), vec![e(&[0, 0]), e(&[2, 4]), e(&[4, 2])]);
        assert_eq!(hull_vertices(&[e(&[2, 2])]), vec![e(&[2, 2])]);
        assert_eq!(hull_vertices(&[e(&[0, 0]), e(&[2, 0]), e(&[4, 0])]), vec![e(&[0, 0]), e(&[4, 0])]);
    }

    #[test]
    fn barycentric_examples() {
        let l = barycentric(&e(&[3, 2]), &[e(&[0, 0]), e(&[2, 4]), e(&[6, 2])]).unwrap();
        assert_eq!(l, vec![q("3/10"), q("3/10"), q("2/5")]);
        let l = barycentric(&e(&[2, 4]), &[e(&[0, 0]), e(&[2, 4]), e(&[6, 2])]).unwrap();
        assert_eq!(l, vec![q("0"), q("1"), q("0")]);
        let l = barycentric(&e(&[1, 1]), &[e(&[0, 0]), e(&[0, 2]), e(&[4, 0])]).unwrap();
        assert_eq!(l, vec![q("1/4"), q("1/2"), q("1/4")]);
        assert_eq!(barycentric(&e(&[5, 5]), &[e(&[0, 0]), e(&[0, 2]), e(&[4, 0])]), Err(SoncError::NotInSimplex));
        assert_eq!(
            barycentric(&e(&[1, 1]), &[e(&[0, 0]), e(&[1, 1]), e(&[2, 2])]),
            Err(SoncError::DegenerateSimplex)
        );
    }

    #[test]
    fn lower_dimensional_simplex() {
        let l = barycentric(&e(&[1, 1]), &[e(&[0, 0]), e(&[2, 2])]).unwrap();
        assert_eq!(l, vec![q("1/2"), q("1/2")]);
        assert_eq!(barycentric(&e(&[1, 0]), &[e(&[0, 0]), e(&[2, 2])]), Err(SoncError::NotInSimplex));
    }

    #[test]
    fn analysis_of_motzkin_and_negative_vertex() {
        let f = Polynomial::parse("1 + x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2", 2).unwrap();
        let a = analyze_support(&f);
        assert!(a.clubsuit_ok);
        assert_eq!(a.tail_terms, vec![e(&[2, 2])]);
        let g = Polynomial::parse("-x1^2", 1).unwrap();
        assert!(!analyze_support(&g).clubsuit_ok);
    }

    #[test]
    fn analysis_of_five_tail_example() {
        let f = Polynomial::parse(
            "1 + x1^2*x2^6 + 2*x1^4*x2^6 + x1^8*x2^2 - 1.2*x1^2*x2^3 - 0.85*x1^3*x2^5 - 0.9*x1^4*x2^3 - 0.73*x1^5*x2^2 - 1.14*x1^7*x2^2",
            2,
        )
        .unwrap();
        let a = analyze_support(&f);
        assert_eq!(a.vertices, vec![e(&[0, 0]), e(&[2, 6]), e(&[4, 6]), e(&[8, 2])]);
        assert_eq!(a.tail_terms.len(), 5);
        assert!(matches!(st_form(&f), Err(SoncError::NotSimplex { .. })));
    }

    #[test]
    fn st_form_of_motzkin() {
        let f = Polynomial::parse("1 + x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2", 2).unwrap();
        let st = st_form(&f).unwrap();
        assert_eq!(st.vertices.len(), 3);
        assert_eq!(st.tail.len(), 1);
        assert_eq!(st.tail[0].lambda, vec![q("1/3"); 3]);
        let squares = Polynomial::parse("1 + x1^2 + x2^2", 2).unwrap();
        assert!(st_form(&squares).unwrap().tail.is_empty());
    }

    #[test]
    fn placing_triangulations() {
        let t = triangulate_squares(&[e(&[0, 0]), e(&[2, 6]), e(&[4, 6]), e(&[8, 2])]).unwrap();
        let mut got = t.simplex_list();
        got.sort();
        assert_eq!(
            got,
            vec![vec![e(&[0, 0]), e(&[2, 6]), e(&[4, 6])], vec![e(&[0, 0]), e(&[8, 2]), e(&[4, 6])]]
                .into_iter()
                .map(|mut s| {
                    s.sort();
                    s
                })
                .collect::<Vec<_>>()
        );
        let t = triangulate_squares(&[e(&[0, 0]), e(&[2, 2]), e(&[2, 6]), e(&[6, 2])]).unwrap();
        assert_eq!(t.len(), 3);
        for s in t.simplex_list() {
            assert!(s.contains(&e(&[2, 2])));
        }
        let single = triangulate_squares(&[e(&[0, 0]), e(&[2, 0]), e(&[0, 2])]).unwrap();
        assert_eq!(single.len(), 1);
        assert!(matches!(
            triangulate_squares(&[e(&[0, 0]), e(&[2, 2]), e(&[4, 4])]),
            Err(SoncError::DegenerateSupport { dim: 1, ambient: 2 })
        ));
    }

    #[test]
    fn triangulation_json_round_trip() {
        let t = triangulate_squares(&[e(&[0, 0]), e(&[2, 6]), e(&[4, 6]), e(&[8, 2])]).unwrap();
        let back = Triangulation::from_json(&t.to_json()).unwrap();
        assert_eq!(back.simplex_list(), t.simplex_list());
    }
}
