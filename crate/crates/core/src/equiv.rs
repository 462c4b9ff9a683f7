//! Exhaustive equivalence classes of ordered markings under the move
//! calculus.
//!
//! States are ordered `r`-tuples of distinct node indices. Each tuple is
//! identified by its rank in lexicographic order (a Lehmer-style mixed-radix
//! code), which is a collision-free 64-bit key and doubles as the index into
//! dense per-state arrays. A budget caps the number of states; exceeding it is
//! an error, never a silent truncation.

use std::collections::VecDeque;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gamma::{build_gamma, DegenerationCurve, GammaError, NodeId};
use crate::lattice::SurfaceParam;
use crate::markings::{canonical_move_instances, Marking, MarkingError, MoveInstance, TraceRecord};
use crate::union_find::UnionFind;

pub const DEFAULT_STATE_BUDGET: u64 = 10_000_000;

/// Largest node count supported by the ranked state encoding.
pub const MAX_ENCODED_NODES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EquivError {
    #[error("marking order r={r} out of range 0..={max}")]
    OrderOutOfRange { r: i64, max: usize },
    #[error("state budget exceeded: {required} states needed, budget {budget} (statesVisited={visited})")]
    BudgetExceeded { required: u128, budget: u64, visited: u64 },
    #[error("Γ has {0} nodes; the state encoding supports at most 64")]
    TooManyNodes(usize),
    #[error("no irreducible markings of order {r} (existence window {window})")]
    NoIrreducibleMarkings { r: usize, window: i64 },
    #[error("class {class} mixes irreducible and reducible markings")]
    MixedClass { class: usize },
    #[error("markings have different orders ({0} vs {1})")]
    OrderMismatch(usize, usize),
    #[error(transparent)]
    Gamma(#[from] GammaError),
    #[error(transparent)]
    Marking(#[from] MarkingError),
    #[error("bad grid specification {0:?}")]
    BadGrid(String),
}

pub type Result<T> = std::result::Result<T, EquivError>;

#[derive(Debug, Clone, Copy)]
pub struct EngineConfig {
    pub state_budget: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { state_budget: DEFAULT_STATE_BUDGET }
    }
}

/// Number of ordered `r`-tuples of distinct elements out of `n`.
pub fn falling_factorial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    ((n - r + 1)..=n).fold(1u128, |acc, x| acc.saturating_mul(x as u128))
}

/// Bijection between ordered `r`-tuples over `0..nodes` and `0..total`,
/// monotone in lexicographic order.
#[derive(Debug, Clone, Copy)]
pub struct StateSpace {
    nodes: usize,
    r: usize,
    total: u64,
}

impl StateSpace {
    pub fn new(nodes: usize, r: usize, budget: u64) -> Result<Self> {
        if r > nodes {
            return Err(EquivError::OrderOutOfRange { r: r as i64, max: nodes });
        }
        if nodes > MAX_ENCODED_NODES {
            return Err(EquivError::TooManyNodes(nodes));
        }
        // Class labels and BFS parent links are stored as u32.
        let budget = budget.min(u64::from(u32::MAX) - 1);
        let required = falling_factorial(nodes, r);
        if required > u128::from(budget) {
            return Err(EquivError::BudgetExceeded { required, budget, visited: 0 });
        }
        Ok(Self { nodes, r, total: required as u64 })
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn rank(&self, points: &[u16]) -> u64 {
        let mut used = 0u64;
        let mut rank = 0u64;
        for (i, &p) in points.iter().enumerate() {
            let below = (1u64 << p) - 1;
            let digit = u64::from((below & !used).count_ones());
            rank = rank * (self.nodes - i) as u64 + digit;
            used |= 1 << p;
        }
        rank
    }

    pub fn unrank(&self, mut rank: u64, out: &mut [u16]) {
        debug_assert_eq!(out.len(), self.r);
        for i in (0..self.r).rev() {
            let radix = (self.nodes - i) as u64;
            out[i] = (rank % radix) as u16;
            rank /= radix;
        }
        let mut free = if self.nodes == 64 { u64::MAX } else { (1u64 << self.nodes) - 1 };
        for slot in out.iter_mut() {
            let mut bits = free;
            for _ in 0..*slot {
                bits &= bits - 1;
            }
            let p = bits.trailing_zeros() as u16;
            free &= !(1 << p);
            *slot = p;
        }
    }
}

/// Iterator over ordered markings in lexicographic order of node indices.
pub struct MarkingIter<'g> {
    gamma: &'g DegenerationCurve,
    current: Option<Vec<u16>>,
    irreducible_only: bool,
    uf: UnionFind,
}

impl MarkingIter<'_> {
    fn advance(&mut self) {
        let Some(cur) = self.current.as_mut() else { return };
        let n = self.gamma.node_count() as u16;
        let mut used = vec![false; n as usize];
        for &p in cur.iter() {
            used[p as usize] = true;
        }
        // Rightmost position that can be bumped to a larger unused value.
        for i in (0..cur.len()).rev() {
            used[cur[i] as usize] = false;
            if let Some(next) = (cur[i] + 1..n).find(|&x| !used[x as usize]) {
                cur[i] = next;
                used[next as usize] = true;
                let mut fill = (0..n).filter(|&x| !used[x as usize]);
                for slot in cur[i + 1..].iter_mut() {
                    *slot = fill.next().expect("enough free nodes");
                }
                return;
            }
        }
        self.current = None;
    }
}

impl Iterator for MarkingIter<'_> {
    type Item = Marking;

    fn next(&mut self) -> Option<Marking> {
        loop {
            let cur = self.current.clone()?;
            self.advance();
            if !self.irreducible_only
                || self.gamma.connected_without(|i| cur.contains(&(i as u16)), &mut self.uf)
            {
                return Some(Marking::from_raw(cur));
            }
        }
    }
}

/// All ordered `r`-markings, lexicographic in the canonical node order.
pub fn enumerate_markings(
    gamma: &DegenerationCurve,
    r: usize,
    irreducible_only: bool,
) -> Result<MarkingIter<'_>> {
    if r > gamma.node_count() {
        return Err(EquivError::OrderOutOfRange { r: r as i64, max: gamma.node_count() });
    }
    Ok(MarkingIter {
        gamma,
        current: Some((0..r as u16).collect()),
        irreducible_only,
        uf: UnionFind::new(0),
    })
}

/// `δ' − (d + k − 1)`: the number of nodes outside a spanning tree of the
/// dual graph. Irreducible `r`-markings exist exactly for `0 ≤ r ≤` this
/// value; it is negative when `Γ` itself is disconnected.
pub fn existence_window(gamma: &DegenerationCurve) -> i64 {
    gamma.node_count() as i64 - (gamma.component_count() as i64 - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instance {
    pub n: u32,
    pub d: u32,
    pub k: u32,
    pub r: usize,
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} d={} k={} r={}", self.n, self.d, self.k, self.r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassReport {
    pub instance: Instance,
    pub total_markings: u64,
    pub irreducible_count: u64,
    pub class_count_irreducible: u64,
    pub class_count_all: u64,
    pub max_frontier: u64,
    pub states_visited: u64,
    pub wall_time_ms: f64,
}

impl ClassReport {
    /// Equality of every field except timing.
    pub fn same_counts(&self, other: &Self) -> bool {
        Self { wall_time_ms: 0.0, ..self.clone() } == Self { wall_time_ms: 0.0, ..other.clone() }
    }
}

/// Class labels for every state of a [`StateSpace`].
pub struct Partition {
    pub space: StateSpace,
    /// Class id per state rank.
    pub labels: Vec<u32>,
    /// Whether each class consists of irreducible markings.
    pub class_irreducible: Vec<bool>,
    pub report: ClassReport,
}

impl Partition {
    /// Members of a class, in canonical (lexicographic) order.
    pub fn members(&self, class: u32) -> impl Iterator<Item = Marking> + '_ {
        let r = self.report.instance.r;
        self.labels.iter().enumerate().filter(move |(_, &c)| c == class).map(move |(rank, _)| {
            let mut buf = vec![0u16; r];
            self.space.unrank(rank as u64, &mut buf);
            Marking::from_raw(buf)
        })
    }

    /// First member of each class, in class-id order.
    pub fn representatives(&self) -> Vec<Marking> {
        let r = self.report.instance.r;
        let mut reps = vec![None; self.class_irreducible.len()];
        for (rank, &c) in self.labels.iter().enumerate() {
            if reps[c as usize].is_none() {
                let mut buf = vec![0u16; r];
                self.space.unrank(rank as u64, &mut buf);
                reps[c as usize] = Some(Marking::from_raw(buf));
            }
        }
        reps.into_iter().map(|m| m.expect("every class has a member")).collect()
    }

    pub fn class_of(&self, m: &Marking) -> u32 {
        self.labels[self.space.rank(m.indices()) as usize]
    }
}

fn instance_of(gamma: &DegenerationCurve, r: usize) -> Instance {
    Instance { n: gamma.n(), d: gamma.d(), k: gamma.k(), r }
}

/// Partitions all `r`-markings into move-equivalence classes (D+T moves for
/// `n > 0`, D+Q moves for `n = 0`).
pub fn compute_partition(gamma: &DegenerationCurve, r: usize, cfg: &EngineConfig) -> Result<Partition> {
    let start = Instant::now();
    let space = StateSpace::new(gamma.node_count(), r, cfg.state_budget)?;
    let moves = canonical_move_instances(gamma);
    let total = space.total() as usize;

    const UNSEEN: u32 = u32::MAX;
    let mut labels = vec![UNSEEN; total];
    let mut class_irreducible = Vec::new();
    let mut queue = VecDeque::new();
    let mut uf = UnionFind::new(0);
    let mut cur = vec![0u16; r];
    let mut next = vec![0u16; r];
    let (mut visited, mut max_frontier, mut irreducible_count) = (0u64, 0u64, 0u64);

    let irreducible = |pts: &[u16], uf: &mut UnionFind| {
        let mask = pts.iter().fold(0u64, |m, &p| m | 1 << p);
        gamma.connected_without_mask(mask, uf)
    };

    for seed in 0..total {
        if labels[seed] != UNSEEN {
            continue;
        }
        let class = class_irreducible.len() as u32;
        space.unrank(seed as u64, &mut cur);
        let status = irreducible(&cur, &mut uf);
        class_irreducible.push(status);
        labels[seed] = class;
        queue.push_back(seed as u64);
        while let Some(state) = queue.pop_front() {
            visited += 1;
            space.unrank(state, &mut cur);
            if irreducible(&cur, &mut uf) != status {
                return Err(EquivError::MixedClass { class: class as usize });
            }
            irreducible_count += u64::from(status);
            for mv in &moves {
                next.copy_from_slice(&cur);
                if mv.apply_in_place(&mut next) {
                    let to = space.rank(&next) as usize;
                    if labels[to] == UNSEEN {
                        labels[to] = class;
                        queue.push_back(to as u64);
                    }
                }
            }
            max_frontier = max_frontier.max(queue.len() as u64);
        }
    }

    let report = ClassReport {
        instance: instance_of(gamma, r),
        total_markings: space.total(),
        irreducible_count,
        class_count_irreducible: class_irreducible.iter().filter(|&&b| b).count() as u64,
        class_count_all: class_irreducible.len() as u64,
        max_frontier,
        states_visited: visited,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(Partition { space, labels, class_irreducible, report })
}

pub fn compute_classes(gamma: &DegenerationCurve, r: usize, cfg: &EngineConfig) -> Result<ClassReport> {
    Ok(compute_partition(gamma, r, cfg)?.report)
}

/// Shortest move sequence from `from` to `to`, or `None` if they are not
/// equivalent.
pub fn find_witness(
    gamma: &DegenerationCurve,
    from: &Marking,
    to: &Marking,
    cfg: &EngineConfig,
) -> Result<Option<Vec<TraceRecord>>> {
    if from.len() != to.len() {
        return Err(EquivError::OrderMismatch(from.len(), to.len()));
    }
    let r = from.len();
    let space = StateSpace::new(gamma.node_count(), r, cfg.state_budget)?;
    let moves = canonical_move_instances(gamma);
    const UNSEEN: u32 = u32::MAX;
    // parent[s] = (predecessor rank, move index)
    let mut parent = vec![(UNSEEN, u32::MAX); space.total() as usize];
    let (src, dst) = (space.rank(from.indices()), space.rank(to.indices()));
    parent[src as usize] = (src as u32, u32::MAX);
    let mut queue = VecDeque::from([src]);
    let mut cur = vec![0u16; r];
    let mut next = vec![0u16; r];
    while let Some(state) = queue.pop_front() {
        if state == dst {
            break;
        }
        space.unrank(state, &mut cur);
        for (mi, mv) in moves.iter().enumerate() {
            next.copy_from_slice(&cur);
            if mv.apply_in_place(&mut next) {
                let t = space.rank(&next) as usize;
                if parent[t].0 == UNSEEN {
                    parent[t] = (state as u32, mi as u32);
                    queue.push_back(t as u64);
                }
            }
        }
    }
    if parent[dst as usize].0 == UNSEEN {
        return Ok(None);
    }
    let mut steps: Vec<(u64, &MoveInstance)> = Vec::new();
    let mut s = dst;
    while s != src {
        let (p, mi) = parent[s as usize];
        steps.push((u64::from(p), &moves[mi as usize]));
        s = u64::from(p);
    }
    steps.reverse();
    let mut records = Vec::with_capacity(steps.len());
    for (p, mv) in steps {
        space.unrank(p, &mut cur);
        let before = Marking::from_raw(cur.clone());
        let after = mv.apply(&before);
        records.push(TraceRecord::new(gamma, &before, mv, &after));
    }
    Ok(Some(records))
}

/// Calls `visit` with the bitmask of every `r`-subset of `0..n` (Gosper's
/// hack); stops early when `visit` returns `false`.
fn for_each_subset(n: usize, r: usize, mut visit: impl FnMut(u64) -> bool) {
    if r > n {
        return;
    }
    if r == 0 {
        visit(0);
        return;
    }
    let limit: u128 = 1u128 << n;
    let mut set: u64 = if r == 64 { u64::MAX } else { (1u64 << r) - 1 };
    loop {
        if !visit(set) {
            return;
        }
        let c = set & set.wrapping_neg();
        let (ripple, overflow) = set.overflowing_add(c);
        if overflow || u128::from(ripple) >= limit {
            return;
        }
        set = (((ripple ^ set) >> 2) / c) | ripple;
    }
}

fn require_encodable(gamma: &DegenerationCurve) -> Result<()> {
    if gamma.node_count() > MAX_ENCODED_NODES {
        Err(EquivError::TooManyNodes(gamma.node_count()))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeFreedomReport {
    pub instance: Instance,
    pub holds: bool,
    /// Nodes contained in no irreducible `r`-marking.
    pub never_marked: Vec<NodeId>,
    /// Nodes contained in every irreducible `r`-marking.
    pub always_marked: Vec<NodeId>,
}

/// For each node `q`, looks for irreducible `r`-markings containing and
/// avoiding `q`.
pub fn node_freedom_report(gamma: &DegenerationCurve, r: usize) -> Result<NodeFreedomReport> {
    require_encodable(gamma)?;
    let window = existence_window(gamma);
    if r == 0 || r as i64 > window {
        return Err(EquivError::NoIrreducibleMarkings { r, window });
    }
    let nodes = gamma.node_count();
    let all = if nodes == 64 { u64::MAX } else { (1u64 << nodes) - 1 };
    let (mut inside, mut outside) = (0u64, 0u64);
    let mut uf = UnionFind::new(0);
    for_each_subset(nodes, r, |set| {
        if gamma.connected_without_mask(set, &mut uf) {
            inside |= set;
            outside |= all & !set;
        }
        inside != all || outside != all
    });
    let missing = |mask: u64| (0..nodes).filter(|&i| mask >> i & 1 == 0).map(|i| gamma.node(i)).collect::<Vec<_>>();
    let never_marked = missing(inside);
    let always_marked = missing(outside);
    Ok(NodeFreedomReport {
        instance: instance_of(gamma, r),
        holds: never_marked.is_empty() && always_marked.is_empty(),
        never_marked,
        always_marked,
    })
}

pub fn verify_node_freedom(gamma: &DegenerationCurve, r: usize) -> Result<bool> {
    Ok(node_freedom_report(gamma, r)?.holds)
}

/// Number of irreducible markings of order `existence_window`, counted as
/// (unordered irreducible subsets) × r!. Zero when `Γ` is disconnected.
pub fn maximal_marking_count(gamma: &DegenerationCurve) -> Result<BigUint> {
    require_encodable(gamma)?;
    let window = existence_window(gamma);
    if window < 0 {
        return Ok(BigUint::default());
    }
    let r = window as usize;
    let mut uf = UnionFind::new(0);
    let mut subsets = 0u64;
    for_each_subset(gamma.node_count(), r, |set| {
        subsets += u64::from(gamma.connected_without_mask(set, &mut uf));
        true
    });
    let orderings: BigUint = (1..=r as u64).map(BigUint::from).product();
    Ok(BigUint::from(subsets) * orderings)
}

/// Every irreducible `r`-marking extends by one node to an irreducible
/// `(r+1)`-marking (`r < existence_window`).
pub fn extension_property_holds(gamma: &DegenerationCurve, r: usize) -> Result<bool> {
    require_encodable(gamma)?;
    let window = existence_window(gamma);
    if r as i64 >= window {
        return Err(EquivError::OrderOutOfRange { r: r as i64, max: window.max(0) as usize });
    }
    let nodes = gamma.node_count();
    let mut uf = UnionFind::new(0);
    let mut holds = true;
    for_each_subset(nodes, r, |set| {
        if gamma.connected_without_mask(set, &mut uf) {
            let extends = (0..nodes)
                .filter(|&q| set >> q & 1 == 0)
                .any(|q| gamma.connected_without_mask(set | 1 << q, &mut uf));
            holds &= extends;
        }
        holds
    });
    Ok(holds)
}

/// A box of `(n, d, k)` values, written `n=1..2,d=2..3,k=0..2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub n: RangeInclusive<u32>,
    pub d: RangeInclusive<u32>,
    pub k: RangeInclusive<u32>,
}

impl ParamGrid {
    pub fn points(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        self.n.clone().flat_map(move |n| {
            self.d.clone().flat_map(move |d| self.k.clone().map(move |k| (n, d, k)))
        })
    }
}

impl FromStr for ParamGrid {
    type Err = EquivError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || EquivError::BadGrid(s.to_owned());
        let (mut n, mut d, mut k) = (None, None, None);
        for part in s.split(',') {
            let (key, range) = part.trim().split_once('=').ok_or_else(bad)?;
            let (lo, hi) = match range.split_once("..") {
                Some((lo, hi)) => (lo, hi.trim_start_matches('=')),
                None => (range, range),
            };
            let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
            let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
            if lo > hi {
                return Err(bad());
            }
            let slot = match key.trim() {
                "n" => &mut n,
                "d" => &mut d,
                "k" => &mut k,
                _ => return Err(bad()),
            };
            *slot = Some(lo..=hi);
        }
        match (n, d, k) {
            (Some(n), Some(d), Some(k)) if *d.start() >= 1 => Ok(Self { n, d, k }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryStatus {
    /// Exactly one class of irreducible markings.
    Pass,
    /// Two or more classes of irreducible markings.
    Fail,
    /// Over the state budget.
    Skipped,
    /// No positive order admits irreducible markings.
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GridEntry {
    pub n: u32,
    pub d: u32,
    pub k: u32,
    pub r: Option<usize>,
    pub existence_window: i64,
    pub status: EntryStatus,
    pub report: Option<ClassReport>,
    pub node_freedom: Option<bool>,
    /// Two inequivalent irreducible markings, when `status` is `Fail`.
    pub counterexample: Option<[Vec<NodeId>; 2]>,
    pub required_states: Option<String>,
}

fn verify_point(gamma: &DegenerationCurve, r: usize, cfg: &EngineConfig) -> Result<GridEntry> {
    let mut entry = GridEntry {
        n: gamma.n(),
        d: gamma.d(),
        k: gamma.k(),
        r: Some(r),
        existence_window: existence_window(gamma),
        status: EntryStatus::Pass,
        report: None,
        node_freedom: Some(verify_node_freedom(gamma, r)?),
        counterexample: None,
        required_states: None,
    };
    match compute_partition(gamma, r, cfg) {
        Ok(partition) => {
            if partition.report.class_count_irreducible != 1 {
                entry.status = EntryStatus::Fail;
                let reps: Vec<Vec<NodeId>> = partition
                    .representatives()
                    .into_iter()
                    .zip(&partition.class_irreducible)
                    .filter(|(_, &irr)| irr)
                    .map(|(m, _)| m.node_ids(gamma))
                    .take(2)
                    .collect();
                if let [a, b] = reps.as_slice() {
                    entry.counterexample = Some([a.clone(), b.clone()]);
                }
            }
            entry.report = Some(partition.report);
        }
        Err(EquivError::BudgetExceeded { required, .. }) => {
            entry.status = EntryStatus::Skipped;
            entry.required_states = Some(required.to_string());
        }
        Err(e) => return Err(e),
    }
    Ok(entry)
}

/// Runs the single-class check for every grid point and every order
/// `1 ≤ r ≤ existence_window`. Grid points are processed in parallel; the
/// returned entries are in grid order regardless of scheduling.
pub fn verify_single_class(grid: &ParamGrid, cfg: &EngineConfig) -> Result<Vec<GridEntry>> {
    let mut tasks = Vec::new();
    for (n, d, k) in grid.points() {
        let gamma = build_gamma(SurfaceParam::new(n), d.into(), k.into())?;
        require_encodable(&gamma)?;
        let window = existence_window(&gamma);
        if window < 1 {
            tasks.push((gamma, None));
        } else {
            for r in 1..=window as usize {
                tasks.push((gamma.clone(), Some(r)));
            }
        }
    }
    tasks
        .into_par_iter()
        .map(|(gamma, r)| match r {
            Some(r) => verify_point(&gamma, r, cfg),
            None => Ok(GridEntry {
                n: gamma.n(),
                d: gamma.d(),
                k: gamma.k(),
                r: None,
                existence_window: existence_window(&gamma),
                status: EntryStatus::Vacuous,
                report: None,
                node_freedom: None,
                counterexample: None,
                required_states: None,
            }),
        })
        .collect()
}
