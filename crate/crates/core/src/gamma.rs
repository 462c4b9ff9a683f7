//! The degenerate curve `Γ = L_1 ∪ … ∪ L_d ∪ F_1 ∪ … ∪ F_k` on `Σ_n`, held as
//! its dual intersection multigraph.
//!
//! Vertices are the components. Every pair `(L_i, L_j)` meets in `n` nodes
//! (`L0² = n`), every pair `(L_i, F_j)` in one node (`L0·F = 1`), and fibers
//! are disjoint (`F² = 0`). Nodes are kept in a fixed canonical order so that
//! node indices, markings and reports are reproducible.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, Zero};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::SurfaceParam;
use crate::union_find::UnionFind;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GammaError {
    #[error("Γ needs at least one L-component (got d={0})")]
    NoLComponents(i64),
    #[error("negative fiber count k={0}")]
    NegativeK(i64),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("invalid component label {0:?}")]
    BadComponent(String),
    #[error("invalid node: {0}")]
    BadNode(String),
    #[error("node list does not match Γ(n={n}, d={d}, k={k})")]
    NodeListMismatch { n: u32, d: u32, k: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ComponentKind {
    /// A curve in the class `L0`.
    L,
    /// A fiber, class `F`.
    F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComponentId {
    pub kind: ComponentKind,
    /// 1-based.
    pub index: u32,
}

impl ComponentId {
    pub const fn l(index: u32) -> Self {
        Self { kind: ComponentKind::L, index }
    }

    pub const fn f(index: u32) -> Self {
        Self { kind: ComponentKind::F, index }
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            ComponentKind::L => 'L',
            ComponentKind::F => 'F',
        };
        write!(f, "{tag}{}", self.index)
    }
}

impl FromStr for ComponentId {
    type Err = GammaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GammaError::BadComponent(s.to_owned());
        let mut chars = s.chars();
        let kind = match chars.next() {
            Some('L') => ComponentKind::L,
            Some('F') => ComponentKind::F,
            _ => return Err(bad()),
        };
        let index: u32 = chars.as_str().parse().map_err(|_| bad())?;
        if index == 0 {
            return Err(bad());
        }
        Ok(Self { kind, index })
    }
}

impl Serialize for ComponentId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ComponentId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// A node of `Γ`: the `sheet`-th intersection point of components `a` and `b`.
///
/// The pair is stored with `a < b` (L before F, lower index first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId {
    a: ComponentId,
    b: ComponentId,
    sheet: u32,
}

impl NodeId {
    /// Canonicalizes the component order. Fails on `a == b`, on a pair of
    /// fibers, on a zero sheet, or on a sheet other than 1 for an `(L, F)` pair.
    pub fn new(a: ComponentId, b: ComponentId, sheet: u32) -> Result<Self, GammaError> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let reject = |why: &str| Err(GammaError::BadNode(format!("({a},{b},{sheet}): {why}")));
        if a == b {
            return reject("components coincide");
        }
        if sheet == 0 {
            return reject("sheets are 1-based");
        }
        match (a.kind, b.kind) {
            (ComponentKind::F, ComponentKind::F) => return reject("fibers are disjoint"),
            (ComponentKind::L, ComponentKind::F) if sheet != 1 => {
                return reject("an (L, F) pair meets once")
            }
            _ => {}
        }
        Ok(Self { a, b, sheet })
    }

    /// `(L_i, L_j, sheet)`.
    pub fn ll(i: u32, j: u32, sheet: u32) -> Self {
        Self::new(ComponentId::l(i), ComponentId::l(j), sheet).expect("valid (L, L) node")
    }

    /// `(L_i, F_j, 1)`.
    pub fn lf(i: u32, j: u32) -> Self {
        Self::new(ComponentId::l(i), ComponentId::f(j), 1).expect("valid (L, F) node")
    }

    pub fn a(&self) -> ComponentId {
        self.a
    }

    pub fn b(&self) -> ComponentId {
        self.b
    }

    pub fn sheet(&self) -> u32 {
        self.sheet
    }

    pub fn lies_on(&self, c: ComponentId) -> bool {
        self.a == c || self.b == c
    }

    fn sort_key(&self) -> (u8, u32, u32, u32) {
        let pair = match self.b.kind {
            ComponentKind::L => 0,
            ComponentKind::F => 1,
        };
        (pair, self.a.index, self.b.index, self.sheet)
    }
}

impl Ord for NodeId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for NodeId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.a, self.b, self.sheet)
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(3)?;
        t.serialize_element(&self.a)?;
        t.serialize_element(&self.b)?;
        t.serialize_element(&self.sheet)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (a, b, sheet) = <(ComponentId, ComponentId, u32)>::deserialize(deserializer)?;
        NodeId::new(a, b, sheet).map_err(de::Error::custom)
    }
}

/// `Γ` as a multigraph on `d + k` vertices. Vertex `i − 1` is `L_i`, vertex
/// `d + j − 1` is `F_j`; node indices follow the canonical node order.
#[derive(Debug, Clone)]
pub struct DegenerationCurve {
    surface: SurfaceParam,
    d: u32,
    k: u32,
    nodes: Vec<NodeId>,
    ends: Vec<(u32, u32)>,
    lookup: HashMap<NodeId, usize>,
    /// `pair_nodes[u * V + v]`: node indices joining vertices `u` and `v`.
    pair_nodes: Vec<Vec<usize>>,
}

/// Builds `Γ` for `d·L0 + k·F` on `Σ_n`.
pub fn build_gamma(s: SurfaceParam, d: i64, k: i64) -> Result<DegenerationCurve, GammaError> {
    if d < 1 {
        return Err(GammaError::NoLComponents(d));
    }
    if k < 0 {
        return Err(GammaError::NegativeK(k));
    }
    let (d, k) = (d as u32, k as u32);
    let mut nodes = Vec::new();
    for i in 1..=d {
        for j in (i + 1)..=d {
            for sheet in 1..=s.n() {
                nodes.push(NodeId::ll(i, j, sheet));
            }
        }
    }
    for i in 1..=d {
        for j in 1..=k {
            nodes.push(NodeId::lf(i, j));
        }
    }
    debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    Ok(DegenerationCurve::from_sorted_nodes(s, d, k, nodes))
}

impl DegenerationCurve {
    fn from_sorted_nodes(surface: SurfaceParam, d: u32, k: u32, nodes: Vec<NodeId>) -> Self {
        let vertex = |c: ComponentId| match c.kind {
            ComponentKind::L => c.index - 1,
            ComponentKind::F => d + c.index - 1,
        };
        let v = (d + k) as usize;
        let mut pair_nodes = vec![Vec::new(); v * v];
        let mut ends = Vec::with_capacity(nodes.len());
        let mut lookup = HashMap::with_capacity(nodes.len());
        for (idx, node) in nodes.iter().enumerate() {
            let (x, y) = (vertex(node.a), vertex(node.b));
            ends.push((x, y));
            pair_nodes[x as usize * v + y as usize].push(idx);
            pair_nodes[y as usize * v + x as usize].push(idx);
            lookup.insert(*node, idx);
        }
        Self { surface, d, k, nodes, ends, lookup, pair_nodes }
    }

    pub fn surface(&self) -> SurfaceParam {
        self.surface
    }

    pub fn n(&self) -> u32 {
        self.surface.n()
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// All nodes in canonical order.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of irreducible components, `d + k`.
    pub fn component_count(&self) -> usize {
        (self.d + self.k) as usize
    }

    pub fn components(&self) -> impl Iterator<Item = ComponentId> + '_ {
        (1..=self.d).map(ComponentId::l).chain((1..=self.k).map(ComponentId::f))
    }

    pub fn component_at(&self, vertex: usize) -> ComponentId {
        let v = vertex as u32;
        if v < self.d {
            ComponentId::l(v + 1)
        } else {
            ComponentId::f(v - self.d + 1)
        }
    }

    pub fn vertex_of(&self, c: ComponentId) -> Option<usize> {
        let v = match c.kind {
            ComponentKind::L if (1..=self.d).contains(&c.index) => c.index - 1,
            ComponentKind::F if (1..=self.k).contains(&c.index) => self.d + c.index - 1,
            _ => return None,
        };
        Some(v as usize)
    }

    pub fn index_of(&self, node: &NodeId) -> Option<usize> {
        self.lookup.get(node).copied()
    }

    pub fn require_index(&self, node: &NodeId) -> Result<usize, GammaError> {
        self.index_of(node).ok_or(GammaError::UnknownNode(*node))
    }

    pub fn node(&self, idx: usize) -> NodeId {
        self.nodes[idx]
    }

    /// Vertex indices of the two components through node `idx`.
    pub fn endpoints(&self, idx: usize) -> (usize, usize) {
        let (a, b) = self.ends[idx];
        (a as usize, b as usize)
    }

    /// Node indices joining vertices `u` and `v` (empty when `u == v`).
    pub fn nodes_between(&self, u: usize, v: usize) -> &[usize] {
        &self.pair_nodes[u * self.component_count() + v]
    }

    /// Whether `Γ` minus the nodes for which `is_removed` holds is connected.
    pub fn connected_without<F: Fn(usize) -> bool>(&self, is_removed: F, uf: &mut UnionFind) -> bool {
        uf.reset(self.component_count());
        for (idx, &(a, b)) in self.ends.iter().enumerate() {
            if uf.set_count() <= 1 {
                break;
            }
            if !is_removed(idx) {
                uf.union(a as usize, b as usize);
            }
        }
        uf.set_count() <= 1
    }

    /// Connectivity with the removed nodes given as a bitmask over node
    /// indices (requires at most 64 nodes).
    pub fn connected_without_mask(&self, mask: u64, uf: &mut UnionFind) -> bool {
        debug_assert!(self.node_count() <= 64);
        self.connected_without(|idx| mask >> idx & 1 == 1, uf)
    }

    pub fn is_connected_after_removal(&self, removed: &[NodeId]) -> Result<bool, GammaError> {
        let mut gone = vec![false; self.node_count()];
        for node in removed {
            gone[self.require_index(node)?] = true;
        }
        Ok(self.connected_without(|idx| gone[idx], &mut UnionFind::new(0)))
    }

    /// Graph Laplacian of the dual multigraph.
    pub fn laplacian(&self) -> Vec<Vec<i64>> {
        let v = self.component_count();
        let mut lap = vec![vec![0i64; v]; v];
        for &(a, b) in &self.ends {
            let (a, b) = (a as usize, b as usize);
            lap[a][a] += 1;
            lap[b][b] += 1;
            lap[a][b] -= 1;
            lap[b][a] -= 1;
        }
        lap
    }

    /// Number of spanning trees of the dual multigraph (matrix-tree theorem).
    pub fn spanning_tree_count(&self) -> BigUint {
        let lap = self.laplacian();
        let minor: Vec<Vec<BigInt>> = lap
            .iter()
            .skip(1)
            .map(|row| row.iter().skip(1).map(|&x| BigInt::from(x)).collect())
            .collect();
        let det = bareiss_determinant(minor);
        debug_assert!(!det.is_negative());
        det.to_biguint().unwrap_or_default()
    }

    pub fn to_document(&self) -> GammaDocument {
        GammaDocument { n: self.n(), d: self.d, k: self.k, nodes: self.nodes.clone() }
    }
}

/// Fraction-free Gaussian elimination; exact for integer matrices.
pub fn bareiss_determinant(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let size = m.len();
    if size == 0 {
        return BigInt::from(1);
    }
    let mut sign = BigInt::from(1);
    let mut prev = BigInt::from(1);
    for col in 0..size {
        let Some(pivot) = (col..size).find(|&r| !m[r][col].is_zero()) else {
            return BigInt::zero();
        };
        if pivot != col {
            m.swap(pivot, col);
            sign = -sign;
        }
        for r in (col + 1)..size {
            for c in (col + 1)..size {
                let v = &m[r][c] * &m[col][col] - &m[r][col] * &m[col][c];
                m[r][c] = v / &prev;
            }
            m[r][col] = BigInt::zero();
        }
        prev = m[col][col].clone();
    }
    sign * &m[size - 1][size - 1]
}

/// JSON form of `Γ`: `{"n":…, "d":…, "k":…, "nodes":[["L1","L2",1], …]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaDocument {
    pub n: u32,
    pub d: u32,
    pub k: u32,
    pub nodes: Vec<NodeId>,
}

impl GammaDocument {
    /// Rebuilds `Γ`, rejecting documents whose node list is not the canonical one.
    pub fn into_curve(self) -> Result<DegenerationCurve, GammaError> {
        let curve = build_gamma(SurfaceParam::new(self.n), self.d.into(), self.k.into())?;
        if curve.nodes != self.nodes {
            return Err(GammaError::NodeListMismatch { n: self.n, d: self.d, k: self.k });
        }
        Ok(curve)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma(n: u32, d: i64, k: i64) -> DegenerationCurve {
        build_gamma(SurfaceParam::new(n), d, k).unwrap()
    }

    #[test]
    fn triangle_nodes() {
        let g = gamma(1, 2, 1);
        assert_eq!(g.nodes(), &[NodeId::ll(1, 2, 1), NodeId::lf(1, 1), NodeId::lf(2, 1)]);
    }

    #[test]
    fn n_zero_has_only_lf_nodes() {
        let g = gamma(0, 2, 2);
        assert_eq!(g.node_count(), 4);
        assert!(g.nodes().iter().all(|p| p.b().kind == ComponentKind::F));
    }

    #[test]
    fn parallel_ll_edges() {
        let g = gamma(2, 2, 1);
        assert_eq!(
            g.nodes(),
            &[NodeId::ll(1, 2, 1), NodeId::ll(1, 2, 2), NodeId::lf(1, 1), NodeId::lf(2, 1)]
        );
        assert_eq!(g.nodes_between(0, 1), &[0, 1]);
        assert_eq!(g.nodes_between(2, 0), &[2]);
    }

    #[test]
    fn canonical_order_puts_ll_first() {
        let g = gamma(1, 3, 1);
        let labels: Vec<String> = g.nodes().iter().map(ToString::to_string).collect();
        assert_eq!(
            labels,
            ["(L1,L2,1)", "(L1,L3,1)", "(L2,L3,1)", "(L1,F1,1)", "(L2,F1,1)", "(L3,F1,1)"]
        );
    }

    #[test]
    fn rejects_d_zero() {
        assert_eq!(
            build_gamma(SurfaceParam::new(1), 0, 3).unwrap_err(),
            GammaError::NoLComponents(0)
        );
    }

    #[test]
    fn connectivity_examples() {
        let g = gamma(1, 2, 1);
        assert!(g.is_connected_after_removal(&[NodeId::ll(1, 2, 1)]).unwrap());
        assert!(g.is_connected_after_removal(&[]).unwrap());
        assert!(!g.is_connected_after_removal(&[NodeId::lf(1, 1), NodeId::lf(2, 1)]).unwrap());
        assert_eq!(
            g.is_connected_after_removal(&[NodeId::lf(3, 1)]),
            Err(GammaError::UnknownNode(NodeId::lf(3, 1)))
        );
    }

    #[test]
    fn disjoint_sections_on_quadric() {
        // L0² = 0 on Σ_0, so 2L0 degenerates to two disjoint lines.
        let g = gamma(0, 2, 0);
        assert_eq!(g.node_count(), 0);
        assert!(!g.is_connected_after_removal(&[]).unwrap());
        assert_eq!(g.spanning_tree_count(), BigUint::zero());
    }

    #[test]
    fn spanning_tree_examples() {
        assert_eq!(gamma(1, 2, 1).spanning_tree_count(), BigUint::from(3u32));
        assert_eq!(gamma(2, 2, 1).spanning_tree_count(), BigUint::from(5u32));
        assert_eq!(gamma(0, 1, 1).spanning_tree_count(), BigUint::from(1u32));
        assert_eq!(gamma(3, 1, 0).spanning_tree_count(), BigUint::from(1u32));
        // K_{3,3}: 3^2 · 3^2 = 81
        assert_eq!(gamma(0, 3, 3).spanning_tree_count(), BigUint::from(81u32));
    }

    #[test]
    fn node_labels_parse() {
        assert_eq!("L12".parse::<ComponentId>().unwrap(), ComponentId::l(12));
        assert!("L0".parse::<ComponentId>().is_err());
        assert!("G1".parse::<ComponentId>().is_err());
        assert!(NodeId::new(ComponentId::f(1), ComponentId::f(2), 1).is_err());
        assert!(NodeId::new(ComponentId::l(1), ComponentId::f(2), 2).is_err());
        assert_eq!(
            NodeId::new(ComponentId::f(2), ComponentId::l(1), 1).unwrap(),
            NodeId::lf(1, 2)
        );
    }

    #[test]
    fn document_round_trip() {
        let g = gamma(2, 2, 1);
        let text = serde_json::to_string(&g.to_document()).unwrap();
        assert_eq!(
            text,
            r#"{"n":2,"d":2,"k":1,"nodes":[["L1","L2",1],["L1","L2",2],["L1","F1",1],["L2","F1",1]]}"#
        );
        let back: GammaDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_curve().unwrap().nodes(), g.nodes());

        let mut doc = g.to_document();
        doc.nodes.pop();
        assert!(doc.into_curve().is_err());
    }
}
