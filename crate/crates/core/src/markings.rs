//! Ordered markings of the nodes of `Γ` and the D-, T-, Q^h- and Q^v-moves
//! acting on them.
//!
//! A marking is an ordered tuple of distinct nodes. Positions are 1-based in
//! the public accessors. Node references are indices into
//! [`DegenerationCurve::nodes`], so a marking is only meaningful together with
//! the curve it was built for.
//!
//! Every move is validated when the [`MoveInstance`] is constructed; applying
//! an instance cannot fail.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gamma::{ComponentId, DegenerationCurve, GammaError, NodeId};
use crate::union_find::UnionFind;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MarkingError {
    #[error(transparent)]
    Gamma(#[from] GammaError),
    #[error("node {0} appears twice in the marking")]
    Repeated(NodeId),
    #[error("node index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("not a D-configuration: {0}")]
    NotD(String),
    #[error("not a T-configuration: {0}")]
    NotT(String),
    #[error("not a Q-configuration: {0}")]
    NotQ(String),
    #[error("T-moves require n>0")]
    TNeedsPositiveN,
    #[error("Q-moves require n=0")]
    QNeedsZeroN,
    #[error("{family:?}-moves take {expected} nodes, got {got}")]
    Arity { family: MoveFamily, expected: usize, got: usize },
}

/// An ordered tuple of distinct nodes of `Γ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Marking {
    points: Vec<u16>,
}

impl Marking {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(gamma: &DegenerationCurve, points: &[NodeId]) -> Result<Self, MarkingError> {
        let idx = points
            .iter()
            .map(|p| gamma.require_index(p))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_indices(gamma, &idx)
    }

    pub fn from_indices(gamma: &DegenerationCurve, idx: &[usize]) -> Result<Self, MarkingError> {
        let mut seen = vec![false; gamma.node_count()];
        let mut points = Vec::with_capacity(idx.len());
        for &i in idx {
            if i >= gamma.node_count() || i > u16::MAX as usize {
                return Err(MarkingError::IndexOutOfRange(i));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(MarkingError::Repeated(gamma.node(i)));
            }
            points.push(i as u16);
        }
        Ok(Self { points })
    }

    /// Wraps indices already known to be distinct and in range.
    pub(crate) fn from_raw(points: Vec<u16>) -> Self {
        Self { points }
    }

    /// The order `r`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn indices(&self) -> &[u16] {
        &self.points
    }

    /// `p_i`, 1-based.
    pub fn point(&self, gamma: &DegenerationCurve, i: usize) -> Option<NodeId> {
        let p = *self.points.get(i.checked_sub(1)?)?;
        Some(gamma.node(p as usize))
    }

    /// 1-based position of a node index, if marked.
    pub fn position_of(&self, idx: usize) -> Option<usize> {
        self.points.iter().position(|&p| p as usize == idx).map(|i| i + 1)
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.position_of(idx).is_some()
    }

    pub fn node_ids(&self, gamma: &DegenerationCurve) -> Vec<NodeId> {
        self.points.iter().map(|&p| gamma.node(p as usize)).collect()
    }

    /// Bitmask of the marked node indices (curves with at most 64 nodes).
    pub fn mask(&self) -> u64 {
        self.points.iter().fold(0, |m, &p| m | 1 << p)
    }

    /// `Γ` minus the marked nodes is connected.
    pub fn is_irreducible(&self, gamma: &DegenerationCurve) -> bool {
        let mut gone = vec![false; gamma.node_count()];
        for &p in &self.points {
            gone[p as usize] = true;
        }
        gamma.connected_without(|i| gone[i], &mut UnionFind::new(0))
    }

    /// `μ_{C,C'}`: marked nodes on `C ∩ C'`.
    pub fn pair_count(&self, gamma: &DegenerationCurve, c: ComponentId, c2: ComponentId) -> usize {
        self.points
            .iter()
            .filter(|&&p| {
                let node = gamma.node(p as usize);
                node.lies_on(c) && node.lies_on(c2)
            })
            .count()
    }

    /// `μ_C`: marked nodes on `C`.
    pub fn component_count(&self, gamma: &DegenerationCurve, c: ComponentId) -> usize {
        self.points.iter().filter(|&&p| gamma.node(p as usize).lies_on(c)).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MoveFamily {
    D,
    T,
    Qh,
    Qv,
}

impl MoveFamily {
    pub fn arity(self) -> usize {
        match self {
            MoveFamily::D => 2,
            MoveFamily::T => 3,
            MoveFamily::Qh | MoveFamily::Qv => 4,
        }
    }
}

/// A fully parameterized, validated move.
///
/// Arguments are node indices in the order `q, q', q'', q'''`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MoveInstance {
    family: MoveFamily,
    args: [u16; 4],
}

impl MoveInstance {
    /// `D_{q,q'}`: two distinct nodes on the same pair of components.
    pub fn d(gamma: &DegenerationCurve, q: usize, qp: usize) -> Result<Self, MarkingError> {
        check_index(gamma, &[q, qp])?;
        let same_pair = {
            let (a, b) = gamma.endpoints(q);
            let (c, e) = gamma.endpoints(qp);
            (a, b) == (c, e) || (a, b) == (e, c)
        };
        if q == qp || !same_pair {
            return Err(MarkingError::NotD(format!("{} and {}", gamma.node(q), gamma.node(qp))));
        }
        Ok(Self::raw(MoveFamily::D, &[q, qp]))
    }

    /// `T_{q,q',q''}` with `q ∈ D'∩D''`, `q' ∈ D∩D''`, `q'' ∈ D∩D'`.
    pub fn t(gamma: &DegenerationCurve, q: usize, qp: usize, qpp: usize) -> Result<Self, MarkingError> {
        if gamma.n() == 0 {
            return Err(MarkingError::TNeedsPositiveN);
        }
        check_index(gamma, &[q, qp, qpp])?;
        let pairs = [q, qp, qpp].map(|i| sorted(gamma.endpoints(i)));
        let mut verts: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        verts.sort_unstable();
        verts.dedup();
        let distinct_pairs = pairs[0] != pairs[1] && pairs[0] != pairs[2] && pairs[1] != pairs[2];
        // Three distinct edges on three vertices form the triangle D, D', D''.
        if verts.len() != 3 || !distinct_pairs {
            return Err(MarkingError::NotT(format!(
                "{}, {}, {}",
                gamma.node(q),
                gamma.node(qp),
                gamma.node(qpp)
            )));
        }
        Ok(Self::raw(MoveFamily::T, &[q, qp, qpp]))
    }

    /// `Q^h` or `Q^v` with `q ∈ X∩Y`, `q' ∈ X∩Y'`, `q'' ∈ X'∩Y`, `q''' ∈ X'∩Y'`,
    /// where `X, X'` are L-components and `Y, Y'` fibers.
    pub fn q(
        gamma: &DegenerationCurve,
        family: MoveFamily,
        args: [usize; 4],
    ) -> Result<Self, MarkingError> {
        assert!(matches!(family, MoveFamily::Qh | MoveFamily::Qv));
        if gamma.n() != 0 {
            return Err(MarkingError::QNeedsZeroN);
        }
        check_index(gamma, &args)?;
        let nodes = args.map(|i| gamma.node(i));
        let ok = nodes.iter().all(|p| p.b().kind == crate::gamma::ComponentKind::F)
            && nodes[0].a() == nodes[1].a()
            && nodes[2].a() == nodes[3].a()
            && nodes[0].a() != nodes[2].a()
            && nodes[0].b() == nodes[2].b()
            && nodes[1].b() == nodes[3].b()
            && nodes[0].b() != nodes[1].b();
        if !ok {
            return Err(MarkingError::NotQ(format!(
                "{}, {}, {}, {}",
                nodes[0], nodes[1], nodes[2], nodes[3]
            )));
        }
        Ok(Self::raw(family, &args))
    }

    pub fn from_indices(
        gamma: &DegenerationCurve,
        family: MoveFamily,
        args: &[usize],
    ) -> Result<Self, MarkingError> {
        if args.len() != family.arity() {
            return Err(MarkingError::Arity { family, expected: family.arity(), got: args.len() });
        }
        match family {
            MoveFamily::D => Self::d(gamma, args[0], args[1]),
            MoveFamily::T => Self::t(gamma, args[0], args[1], args[2]),
            MoveFamily::Qh | MoveFamily::Qv => {
                Self::q(gamma, family, [args[0], args[1], args[2], args[3]])
            }
        }
    }

    pub fn from_node_ids(
        gamma: &DegenerationCurve,
        family: MoveFamily,
        args: &[NodeId],
    ) -> Result<Self, MarkingError> {
        let idx = args
            .iter()
            .map(|p| gamma.require_index(p))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_indices(gamma, family, &idx)
    }

    fn raw(family: MoveFamily, args: &[usize]) -> Self {
        let mut a = [0u16; 4];
        for (slot, &x) in a.iter_mut().zip(args) {
            *slot = x as u16;
        }
        Self { family, args: a }
    }

    pub fn family(&self) -> MoveFamily {
        self.family
    }

    pub fn args(&self) -> &[u16] {
        &self.args[..self.family.arity()]
    }

    pub fn node_args(&self, gamma: &DegenerationCurve) -> Vec<NodeId> {
        self.args().iter().map(|&i| gamma.node(i as usize)).collect()
    }

    pub fn apply(&self, m: &Marking) -> Marking {
        let mut points = m.points.clone();
        self.apply_in_place(&mut points);
        Marking { points }
    }

    /// Applies the move to a raw index tuple; returns whether it changed.
    #[inline]
    pub fn apply_in_place(&self, points: &mut [u16]) -> bool {
        let [q, qp, qpp, qppp] = self.args;
        let marked = |x: u16| points.contains(&x);
        match self.family {
            MoveFamily::D => exchange(points, q, qp),
            MoveFamily::T => !marked(qp) && exchange(points, q, qpp),
            MoveFamily::Qh => !marked(qpp) && !marked(qppp) && exchange(points, q, qp),
            MoveFamily::Qv => !marked(qp) && !marked(qppp) && exchange(points, q, qpp),
        }
    }

    pub fn to_document(&self, gamma: &DegenerationCurve) -> MoveDocument {
        MoveDocument { family: self.family, args: self.node_args(gamma) }
    }
}

impl fmt::Display for MoveInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{:?}", self.family, self.args())
    }
}

/// The replace/replace/transpose/identity pattern shared by all families.
#[inline]
fn exchange(points: &mut [u16], a: u16, b: u16) -> bool {
    let pa = points.iter().position(|&p| p == a);
    let pb = points.iter().position(|&p| p == b);
    match (pa, pb) {
        (Some(i), None) => points[i] = b,
        (None, Some(j)) => points[j] = a,
        (Some(i), Some(j)) => points.swap(i, j),
        (None, None) => return false,
    }
    true
}

fn sorted((a, b): (usize, usize)) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn check_index(gamma: &DegenerationCurve, idx: &[usize]) -> Result<(), MarkingError> {
    match idx.iter().find(|&&i| i >= gamma.node_count()) {
        Some(&i) => Err(MarkingError::IndexOutOfRange(i)),
        None => Ok(()),
    }
}

/// Applies `D_{q,q'}`.
pub fn apply_d(gamma: &DegenerationCurve, m: &Marking, q: &NodeId, qp: &NodeId) -> Result<Marking, MarkingError> {
    Ok(MoveInstance::from_node_ids(gamma, MoveFamily::D, &[*q, *qp])?.apply(m))
}

/// Applies `T_{q,q',q''}`.
pub fn apply_t(
    gamma: &DegenerationCurve,
    m: &Marking,
    q: &NodeId,
    qp: &NodeId,
    qpp: &NodeId,
) -> Result<Marking, MarkingError> {
    Ok(MoveInstance::from_node_ids(gamma, MoveFamily::T, &[*q, *qp, *qpp])?.apply(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QVariant {
    Horizontal,
    Vertical,
}

/// Applies `Q^h_{q,q',q'',q'''}` or `Q^v_{q,q',q'',q'''}`.
pub fn apply_q(
    gamma: &DegenerationCurve,
    m: &Marking,
    variant: QVariant,
    args: [&NodeId; 4],
) -> Result<Marking, MarkingError> {
    let family = match variant {
        QVariant::Horizontal => MoveFamily::Qh,
        QVariant::Vertical => MoveFamily::Qv,
    };
    Ok(MoveInstance::from_node_ids(gamma, family, &args.map(|p| *p))?.apply(m))
}

/// Every valid move instance on `Γ`: D always, T when `n > 0`, Q^h and Q^v
/// when `n = 0`. Argument tuples are enumerated in lexicographic vertex order.
pub fn all_move_instances(gamma: &DegenerationCurve) -> Vec<MoveInstance> {
    let v = gamma.component_count();
    let mut out = Vec::new();
    for a in 0..v {
        for b in (a + 1)..v {
            let pair = gamma.nodes_between(a, b);
            for &q in pair {
                for &qp in pair {
                    if q != qp {
                        out.push(MoveInstance::raw(MoveFamily::D, &[q, qp]));
                    }
                }
            }
        }
    }
    if gamma.n() > 0 {
        // Ordered triples (D, D', D'').
        for x in 0..v {
            for y in 0..v {
                for z in 0..v {
                    if x == y || y == z || x == z {
                        continue;
                    }
                    for &q in gamma.nodes_between(y, z) {
                        for &qp in gamma.nodes_between(x, z) {
                            for &qpp in gamma.nodes_between(x, y) {
                                out.push(MoveInstance::raw(MoveFamily::T, &[q, qp, qpp]));
                            }
                        }
                    }
                }
            }
        }
    } else {
        let (d, k) = (gamma.d() as usize, gamma.k() as usize);
        for family in [MoveFamily::Qh, MoveFamily::Qv] {
            for x in 0..d {
                for xp in 0..d {
                    for y in d..d + k {
                        for yp in d..d + k {
                            if x == xp || y == yp {
                                continue;
                            }
                            let node = |l: usize, f: usize| gamma.nodes_between(l, f)[0];
                            let args = [node(x, y), node(x, yp), node(xp, y), node(xp, yp)];
                            out.push(MoveInstance::raw(family, &args));
                        }
                    }
                }
            }
        }
    }
    out
}

/// One instance per distinct move function. `D_{q,q'} = D_{q',q}`,
/// `T_{q,q',q''} = T_{q'',q',q}`, and Q^h (Q^v) is unchanged by swapping
/// `Y ↔ Y'` (`X ↔ X'`); the representative has its first argument smaller
/// than the one it exchanges with.
pub fn canonical_move_instances(gamma: &DegenerationCurve) -> Vec<MoveInstance> {
    all_move_instances(gamma)
        .into_iter()
        .filter(|m| {
            let a = m.args;
            match m.family {
                MoveFamily::D | MoveFamily::Qh => a[0] < a[1],
                MoveFamily::T | MoveFamily::Qv => a[0] < a[2],
            }
        })
        .collect()
}

/// All move instances paired with their results on `m`.
pub fn enumerate_moves(
    gamma: &DegenerationCurve,
    m: &Marking,
    skip_identity: bool,
) -> Vec<(MoveInstance, Marking)> {
    all_move_instances(gamma)
        .into_iter()
        .map(|mv| (mv, mv.apply(m)))
        .filter(|(_, res)| !skip_identity || res != m)
        .collect()
}

/// JSON form of a move: `{"family":"T","args":[["L1","L2",1], …]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveDocument {
    pub family: MoveFamily,
    pub args: Vec<NodeId>,
}

impl MoveDocument {
    pub fn resolve(&self, gamma: &DegenerationCurve) -> Result<MoveInstance, MarkingError> {
        MoveInstance::from_node_ids(gamma, self.family, &self.args)
    }
}

/// One line of a move-trace file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub marking: Vec<NodeId>,
    #[serde(rename = "move")]
    pub mv: MoveDocument,
    pub result: Vec<NodeId>,
}

impl TraceRecord {
    pub fn new(gamma: &DegenerationCurve, before: &Marking, mv: &MoveInstance, after: &Marking) -> Self {
        Self {
            marking: before.node_ids(gamma),
            mv: mv.to_document(gamma),
            result: after.node_ids(gamma),
        }
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: MarkingError },
    #[error("line {line}: recorded result {recorded:?} differs from replayed {replayed:?}")]
    Mismatch { line: usize, recorded: Vec<NodeId>, replayed: Vec<NodeId> },
    #[error("line {line}: marking does not continue from the previous result")]
    Broken { line: usize },
}

/// Parses a JSON-lines trace, skipping blank lines.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, TraceError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|source| TraceError::Parse { line: i + 1, source }))
        .collect()
}

pub fn write_trace(records: &[TraceRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("trace record serializes") + "\n")
        .collect()
}

/// Re-applies every record. With `chained`, each marking must equal the
/// previous record's result. Returns the number of records checked.
pub fn replay_trace(
    gamma: &DegenerationCurve,
    records: &[TraceRecord],
    chained: bool,
) -> Result<usize, TraceError> {
    let mut prev: Option<&Vec<NodeId>> = None;
    for (i, rec) in records.iter().enumerate() {
        let line = i + 1;
        if chained && prev.is_some_and(|p| *p != rec.marking) {
            return Err(TraceError::Broken { line });
        }
        let invalid = |source| TraceError::Invalid { line, source };
        let before = Marking::new(gamma, &rec.marking).map_err(invalid)?;
        let mv = rec.mv.resolve(gamma).map_err(invalid)?;
        let replayed = mv.apply(&before).node_ids(gamma);
        if replayed != rec.result {
            return Err(TraceError::Mismatch { line, recorded: rec.result.clone(), replayed });
        }
        prev = Some(&rec.result);
    }
    Ok(records.len())
}
