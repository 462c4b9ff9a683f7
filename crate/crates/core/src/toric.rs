//! Lattice polygons and rational curves on the toric surfaces they define.
//!
//! For a polygon with counterclockwise primitive edge directions `(a_i, b_i)`
//! and lattice lengths `k_i`, a rational curve meeting the `i`-th boundary
//! divisor at parameters `c_ij` with multiplicities `k_ij` is
//!
//! ```text
//! x(t) = α ∏ (t − c_ij)^(−k_ij·b_i),   y(t) = β ∏ (t − c_ij)^(k_ij·a_i).
//! ```
//!
//! [`implicitize`] recovers the Laurent polynomial relation between `x` and
//! `y` with exact rational linear algebra, and reports its Newton polygon.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point = (i64, i64);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ToricError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {0} repeats its predecessor")]
    RepeatedVertex(usize),
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("vertex {0} is collinear with its neighbours")]
    Collinear(usize),
    #[error("polygon is not convex at vertex {0}")]
    NotConvex(usize),
    #[error("expected roots for {expected} edges, got {got}")]
    EdgeCount { expected: usize, got: usize },
    #[error("edge {edge}: multiplicities sum to {got}, lattice length is {expected}")]
    RootCount { edge: usize, expected: u64, got: u64 },
    #[error("root {0} is repeated")]
    RepeatedRoot(String),
    #[error("zero multiplicity on edge {0}")]
    ZeroMultiplicity(usize),
    #[error("alpha and beta must be nonzero")]
    ZeroScale,
    #[error("automorphism group not fully broken: {0} boundary points")]
    TooFewBoundaryPoints(u64),
    #[error("parameterization not in |L|")]
    NotInLinearSystem,
    #[error("relation fails at holdout parameter {0}")]
    HoldoutFailed(String),
}

pub type Result<T> = std::result::Result<T, ToricError>;

fn cross(u: Point, v: Point) -> i64 {
    u.0 * v.1 - u.1 * v.0
}

fn sub(p: Point, q: Point) -> Point {
    (p.0 - q.0, p.1 - q.1)
}

/// A convex lattice polygon, vertices counterclockwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticePolygon {
    vertices: Vec<Point>,
    #[serde(skip)]
    reoriented: bool,
}

impl LatticePolygon {
    /// Validates convexity and strictness. A clockwise vertex list is reversed
    /// (with a warning) rather than rejected.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        let len = vertices.len();
        if len < 3 {
            return Err(ToricError::TooFewVertices(len));
        }
        for i in 0..len {
            if vertices[i] == vertices[(i + len - 1) % len] {
                return Err(ToricError::RepeatedVertex(i));
            }
        }
        let twice_area: i64 = (0..len).map(|i| cross(vertices[i], vertices[(i + 1) % len])).sum();
        if twice_area == 0 {
            return Err(ToricError::ZeroArea);
        }
        let reoriented = twice_area < 0;
        if reoriented {
            log::warn!("polygon vertices were clockwise; reversing to counterclockwise");
            vertices.reverse();
        }
        for i in 0..len {
            let (prev, cur, next) = (vertices[(i + len - 1) % len], vertices[i], vertices[(i + 1) % len]);
            let turn = cross(sub(cur, prev), sub(next, cur));
            if turn == 0 {
                return Err(ToricError::Collinear(i));
            }
            if turn < 0 {
                return Err(ToricError::NotConvex(i));
            }
        }
        // Left turns everywhere still admit star polygons; require every
        // vertex to lie on the inner side of every edge.
        for i in 0..len {
            let (p, q) = (vertices[i], vertices[(i + 1) % len]);
            if let Some(j) = (0..len).find(|&j| cross(sub(q, p), sub(vertices[j], p)) < 0) {
                return Err(ToricError::NotConvex(j));
            }
        }
        Ok(Self { vertices, reoriented })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Whether the input was clockwise and had to be reversed.
    pub fn was_reoriented(&self) -> bool {
        self.reoriented
    }

    pub fn twice_area(&self) -> i64 {
        let len = self.vertices.len();
        (0..len).map(|i| cross(self.vertices[i], self.vertices[(i + 1) % len])).sum()
    }

    pub fn contains(&self, p: Point) -> bool {
        let len = self.vertices.len();
        (0..len).all(|i| {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % len]);
            cross(sub(b, a), sub(p, a)) >= 0
        })
    }

    /// Lattice points of the closed polygon, sorted lexicographically.
    pub fn lattice_points(&self) -> Vec<Point> {
        let (xs, ys): (Vec<i64>, Vec<i64>) = self.vertices.iter().copied().unzip();
        let (x0, x1) = (*xs.iter().min().unwrap(), *xs.iter().max().unwrap());
        let (y0, y1) = (*ys.iter().min().unwrap(), *ys.iter().max().unwrap());
        (x0..=x1)
            .flat_map(|x| (y0..=y1).map(move |y| (x, y)))
            .filter(|&p| self.contains(p))
            .collect()
    }

    /// Vertices rotated to start at the lexicographically smallest one.
    pub fn normalized_vertices(&self) -> Vec<Point> {
        normalize_cycle(&self.vertices)
    }

    /// Counterclockwise edges with primitive directions and lattice lengths.
    pub fn edge_data(&self) -> Vec<EdgeData> {
        let len = self.vertices.len();
        (0..len)
            .map(|i| {
                let (dx, dy) = sub(self.vertices[(i + 1) % len], self.vertices[i]);
                let g = dx.gcd(&dy);
                EdgeData { primitive: (dx / g, dy / g), lattice_length: g as u64 }
            })
            .collect()
    }

    /// `det((a_i, b_i), (a_{i+1}, b_{i+1}))` for every edge, cyclically.
    pub fn consecutive_determinants(&self) -> Vec<i64> {
        let edges = self.edge_data();
        let len = edges.len();
        (0..len).map(|i| cross(edges[i].primitive, edges[(i + 1) % len].primitive)).collect()
    }

    /// Every consecutive pair of primitive edge vectors is a lattice basis.
    pub fn is_smooth(&self) -> bool {
        self.consecutive_determinants().iter().all(|&d| d == 1)
    }

    /// `2 + Σ k_i − 3`: torus scaling plus boundary points, modulo `Aut(P¹)`.
    pub fn rational_moduli_dim(&self) -> Result<i64> {
        let boundary: u64 = self.edge_data().iter().map(|e| e.lattice_length).sum();
        if boundary < 3 {
            return Err(ToricError::TooFewBoundaryPoints(boundary));
        }
        Ok(2 + boundary as i64 - 3)
    }
}

fn normalize_cycle(points: &[Point]) -> Vec<Point> {
    let Some(start) = (0..points.len()).min_by_key(|&i| points[i]) else {
        return Vec::new();
    };
    points[start..].iter().chain(&points[..start]).copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EdgeData {
    pub primitive: Point,
    pub lattice_length: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamRoot {
    pub value: BigRational,
    pub edge: usize,
    pub multiplicity: u32,
    /// Exponent of `(t − c)` in `x(t)`: `−k·b`.
    pub x_exp: i64,
    /// Exponent of `(t − c)` in `y(t)`: `k·a`.
    pub y_exp: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalParam {
    pub alpha: BigRational,
    pub beta: BigRational,
    pub roots: Vec<ParamRoot>,
}

/// Builds the parameterization from per-edge `(root, multiplicity)` lists.
pub fn build_param(
    poly: &LatticePolygon,
    roots: &[Vec<(BigRational, u32)>],
    alpha: BigRational,
    beta: BigRational,
) -> Result<RationalParam> {
    let edges = poly.edge_data();
    if roots.len() != edges.len() {
        return Err(ToricError::EdgeCount { expected: edges.len(), got: roots.len() });
    }
    if alpha.is_zero() || beta.is_zero() {
        return Err(ToricError::ZeroScale);
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, (edge, list)) in edges.iter().zip(roots).enumerate() {
        let total: u64 = list.iter().map(|(_, m)| u64::from(*m)).sum();
        if total != edge.lattice_length {
            return Err(ToricError::RootCount { edge: i, expected: edge.lattice_length, got: total });
        }
        for (value, mult) in list {
            if *mult == 0 {
                return Err(ToricError::ZeroMultiplicity(i));
            }
            if !seen.insert(value.clone()) {
                return Err(ToricError::RepeatedRoot(value.to_string()));
            }
            let k = i64::from(*mult);
            let (a, b) = edge.primitive;
            out.push(ParamRoot { value: value.clone(), edge: i, multiplicity: *mult, x_exp: -k * b, y_exp: k * a });
        }
    }
    let param = RationalParam { alpha, beta, roots: out };
    debug_assert_eq!(param.degrees(), (0, 0));
    Ok(param)
}

/// Generic parameterization: one simple root per unit of lattice length.
pub fn build_generic_param(
    poly: &LatticePolygon,
    roots: &[Vec<BigRational>],
    alpha: BigRational,
    beta: BigRational,
) -> Result<RationalParam> {
    let with_mult: Vec<Vec<(BigRational, u32)>> =
        roots.iter().map(|l| l.iter().map(|c| (c.clone(), 1)).collect()).collect();
    build_param(poly, &with_mult, alpha, beta)
}

/// Distinct pseudorandom rationals, `k_i` of them for edge `i`.
pub fn random_generic_roots<R: Rng + ?Sized>(poly: &LatticePolygon, rng: &mut R) -> Vec<Vec<BigRational>> {
    let mut seen = HashSet::new();
    poly.edge_data()
        .iter()
        .map(|e| {
            let mut list = Vec::new();
            while list.len() < e.lattice_length as usize {
                let c = BigRational::new(
                    BigInt::from(rng.random_range(-200i64..=200)),
                    BigInt::from(rng.random_range(1i64..=9)),
                );
                if seen.insert(c.clone()) {
                    list.push(c);
                }
            }
            list
        })
        .collect()
}

fn pow(base: &BigRational, exp: i64) -> BigRational {
    let p = num_traits::pow(base.clone(), exp.unsigned_abs() as usize);
    if exp < 0 {
        p.recip()
    } else {
        p
    }
}

impl RationalParam {
    /// `(deg x, deg y)` as rational functions: the exponent sums.
    pub fn degrees(&self) -> (i64, i64) {
        self.roots.iter().fold((0, 0), |(dx, dy), r| (dx + r.x_exp, dy + r.y_exp))
    }

    /// Dimension of the family with this multiplicity pattern:
    /// `2 + #roots − 3`.
    pub fn family_dim(&self) -> i64 {
        2 + self.roots.len() as i64 - 3
    }

    pub fn is_root(&self, t: &BigRational) -> bool {
        self.roots.iter().any(|r| r.value == *t)
    }

    /// `(x(t), y(t))`, or `None` at a root.
    pub fn eval(&self, t: &BigRational) -> Option<(BigRational, BigRational)> {
        if self.is_root(t) {
            return None;
        }
        let mut x = self.alpha.clone();
        let mut y = self.beta.clone();
        for r in &self.roots {
            let base = t - &r.value;
            x *= pow(&base, r.x_exp);
            y *= pow(&base, r.y_exp);
        }
        Some((x, y))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Implicitization {
    /// Monomial exponents `(u, v)` of `x^u y^v` with their coefficients.
    pub relation: Vec<(Point, BigRational)>,
    pub newton_polygon: Vec<Point>,
    /// Dimension of the space of relations supported in the polygon.
    pub kernel_dim: usize,
    pub samples: usize,
    pub holdouts: usize,
    /// The Newton polygon equals the input polygon.
    pub equals_polygon: bool,
    /// The support lies in the input polygon.
    pub contained: bool,
    /// A unique relation whose Newton polygon is the full polygon.
    pub generic: bool,
}

/// Sample parameters `s + 1/3`, skipping roots.
fn sample_points(param: &RationalParam, count: usize) -> Vec<BigRational> {
    let third = BigRational::new(BigInt::one(), BigInt::from(3));
    (1i64..)
        .map(|s| BigRational::from_integer(BigInt::from(s)) + &third)
        .filter(|t| !param.is_root(t))
        .take(count)
        .collect()
}

/// Recovers the relation `Σ c_uv x^u y^v = 0`, `(u, v)` in the polygon,
/// satisfied by the parameterized curve.
///
/// After clearing the boundary poles, `f(x(t), y(t))` is a polynomial in `t`
/// of degree at most twice the polygon's area, so vanishing at that many plus
/// one sample values makes it vanish identically. At least one more sample
/// than monomials is always used, and the relation is re-checked at three
/// further holdout values.
pub fn implicitize(param: &RationalParam, poly: &LatticePolygon) -> Result<Implicitization> {
    let monomials = poly.lattice_points();
    let degree_bound = poly.twice_area() as usize;
    let samples = (monomials.len() + 1).max(degree_bound + 1);
    const HOLDOUTS: usize = 3;
    let ts = sample_points(param, samples + HOLDOUTS);

    let row = |t: &BigRational| -> Vec<BigRational> {
        let (x, y) = param.eval(t).expect("samples avoid roots");
        monomials.iter().map(|&(u, v)| pow(&x, u) * pow(&y, v)).collect()
    };
    let matrix: Vec<Vec<BigRational>> = ts[..samples].iter().map(row).collect();
    let kernel = nullspace(matrix, monomials.len());
    if kernel.is_empty() {
        return Err(ToricError::NotInLinearSystem);
    }
    let coeffs = primitive_integer_vector(&kernel[0]);

    for t in &ts[samples..] {
        let value: BigRational = row(t).iter().zip(&coeffs).map(|(m, c)| m * c).sum();
        if !value.is_zero() {
            return Err(ToricError::HoldoutFailed(t.to_string()));
        }
    }

    let relation: Vec<(Point, BigRational)> = monomials
        .iter()
        .zip(coeffs)
        .filter(|(_, c)| !c.is_zero())
        .map(|(&p, c)| (p, c))
        .collect();
    let support: Vec<Point> = relation.iter().map(|(p, _)| *p).collect();
    let newton_polygon = convex_hull(&support);
    let contained = support.iter().all(|&p| poly.contains(p));
    let equals_polygon = newton_polygon == poly.normalized_vertices();
    Ok(Implicitization {
        relation,
        newton_polygon,
        kernel_dim: kernel.len(),
        samples,
        holdouts: HOLDOUTS,
        equals_polygon,
        contained,
        generic: equals_polygon && kernel.len() == 1,
    })
}

/// Basis of `{c : M c = 0}` by reduced row echelon form.
pub fn nullspace(mut m: Vec<Vec<BigRational>>, cols: usize) -> Vec<Vec<BigRational>> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(row, p);
        let inv = m[row][col].recip();
        for x in m[row].iter_mut() {
            *x *= &inv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                let pivot_row = m[row].clone();
                for (x, p) in m[r][col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= &factor * p;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); cols];
            v[f] = BigRational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][f].clone();
            }
            v
        })
        .collect()
}

/// Scales to coprime integers with a positive first nonzero entry.
fn primitive_integer_vector(v: &[BigRational]) -> Vec<BigRational> {
    let lcm = v.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = v.iter().map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    let mut g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v.to_vec();
    }
    if ints.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
        g = -g;
    }
    ints.into_iter().map(|x| BigRational::from_integer(x / &g)).collect()
}

/// Counterclockwise convex hull without collinear points, starting at the
/// lexicographically smallest vertex.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(sub(lower[lower.len() - 1], lower[lower.len() - 2]), sub(p, lower[lower.len() - 1])) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(sub(upper[upper.len() - 1], upper[upper.len() - 2]), sub(p, upper[upper.len() - 1])) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    normalize_cycle(&lower)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ToricReport {
    pub vertices: Vec<Point>,
    pub reoriented: bool,
    pub edges: Vec<EdgeData>,
    pub determinants: Vec<i64>,
    pub smooth: bool,
    pub moduli_dim: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub newton_polygon: Option<Vec<Point>>,
    /// `[[u, v], "coefficient"]` pairs with exact rationals as strings.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relation_coefficients: Option<Vec<(Point, String)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roots: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generic: Option<bool>,
}

impl ToricReport {
    pub fn new(poly: &LatticePolygon) -> Result<Self> {
        Ok(Self {
            vertices: poly.vertices().to_vec(),
            reoriented: poly.was_reoriented(),
            edges: poly.edge_data(),
            determinants: poly.consecutive_determinants(),
            smooth: poly.is_smooth(),
            moduli_dim: poly.rational_moduli_dim()?,
            newton_polygon: None,
            relation_coefficients: None,
            roots: None,
            generic: None,
        })
    }

    pub fn with_implicitization(mut self, param: &RationalParam, imp: &Implicitization) -> Self {
        self.newton_polygon = Some(imp.newton_polygon.clone());
        self.relation_coefficients = Some(imp.relation.iter().map(|(p, c)| (*p, c.to_string())).collect());
        let edges = self.edges.len();
        let mut roots = vec![Vec::new(); edges];
        for r in &param.roots {
            roots[r.edge].push(r.value.to_string());
        }
        self.roots = Some(roots);
        self.generic = Some(imp.generic);
        self
    }
}
