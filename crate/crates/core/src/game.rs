//! Weighted two-player game graphs, potentials and the reweighting transforms
//! built on top of them.
//!
//! A [`GameGraph`] is immutable once constructed: every transform
//! ([`apply_potential`], [`lift_to_simple`]) returns a fresh graph sharing the
//! same vertex and edge structure. All weight arithmetic is checked; an
//! overflow is reported as [`GameError::ArithmeticOverflow`] and never wraps.

use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Largest absolute edge weight accepted on input.
pub const MAX_ABS_WEIGHT: i64 = 1 << 40;

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Owner {
    Min,
    Max,
}

impl Owner {
    pub fn opponent(self) -> Owner {
        match self {
            Owner::Min => Owner::Max,
            Owner::Max => Owner::Min,
        }
    }
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Owner::Min => write!(f, "MIN"),
            Owner::Max => write!(f, "MAX"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: VertexId,
    pub dst: VertexId,
    pub weight: i64,
}

impl Edge {
    pub fn new(src: VertexId, dst: VertexId, weight: i64) -> Self {
        Edge { src, dst, weight }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("game has no vertices")]
    Empty,
    #[error("vertex {0} has no outgoing edge")]
    SinkVertex(VertexId),
    #[error("edge {edge} has endpoint {vertex} outside 0..{n}")]
    BadEdgeEndpoint {
        edge: EdgeId,
        vertex: VertexId,
        n: usize,
    },
    #[error("edge {edge} has weight {weight}, exceeding the magnitude cap 2^40")]
    WeightOverflow { edge: EdgeId, weight: i64 },
    #[error("integer overflow while {0}")]
    ArithmeticOverflow(&'static str),
    #[error("potential has {got} entries but the game has {expected} vertices")]
    PotentialLength { expected: usize, got: usize },
    #[error("potential entry for vertex {0} is negative")]
    NegativePotential(VertexId),
}

/// A sinkless weighted directed multigraph whose vertices are split between
/// the minimiser and the maximiser.
///
/// Outgoing edge lists are ordered by `(dst, edge id)`, which is the
/// tie-breaking order used whenever an edge has to be picked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameGraph {
    owners: Vec<Owner>,
    edges: Vec<Edge>,
    out_start: Vec<usize>,
    out_list: Vec<EdgeId>,
    in_start: Vec<usize>,
    in_list: Vec<EdgeId>,
    max_abs_weight: i64,
}

impl GameGraph {
    /// Builds and validates a game. Fails if a vertex is a sink, an endpoint
    /// is out of range or a weight exceeds [`MAX_ABS_WEIGHT`].
    pub fn new(owners: Vec<Owner>, edges: Vec<Edge>) -> Result<Self, GameError> {
        for (e, edge) in edges.iter().enumerate() {
            if edge.weight.unsigned_abs() > MAX_ABS_WEIGHT as u64 {
                return Err(GameError::WeightOverflow {
                    edge: e,
                    weight: edge.weight,
                });
            }
        }
        Self::build(owners, edges)
    }

    /// Same as [`GameGraph::new`] without the input magnitude cap. Used for
    /// derived games whose weights are the result of checked arithmetic.
    fn build(owners: Vec<Owner>, edges: Vec<Edge>) -> Result<Self, GameError> {
        let n = owners.len();
        if n == 0 {
            return Err(GameError::Empty);
        }
        let mut out_deg = vec![0usize; n];
        let mut in_deg = vec![0usize; n];
        for (e, edge) in edges.iter().enumerate() {
            for vertex in [edge.src, edge.dst] {
                if vertex >= n {
                    return Err(GameError::BadEdgeEndpoint { edge: e, vertex, n });
                }
            }
            out_deg[edge.src] += 1;
            in_deg[edge.dst] += 1;
        }
        if let Some(v) = out_deg.iter().position(|&d| d == 0) {
            return Err(GameError::SinkVertex(v));
        }

        let (out_start, mut out_list) = csr(&out_deg, edges.iter().map(|e| e.src));
        let (in_start, in_list) = csr(&in_deg, edges.iter().map(|e| e.dst));
        for v in 0..n {
            out_list[out_start[v]..out_start[v + 1]].sort_by_key(|&e| (edges[e].dst, e));
        }
        let max_abs_weight = edges
            .iter()
            .map(|e| e.weight.checked_abs())
            .try_fold(0i64, |acc, w| w.map(|w| acc.max(w)))
            .ok_or(GameError::ArithmeticOverflow("taking an absolute weight"))?;

        Ok(GameGraph {
            owners,
            edges,
            out_start,
            out_list,
            in_start,
            in_list,
            max_abs_weight,
        })
    }

    /// Returns a game with the same structure and the given edge weights.
    pub(crate) fn with_weights(&self, weights: impl IntoIterator<Item = i64>) -> Result<Self, GameError> {
        let mut g = self.clone();
        let mut max_abs = 0i64;
        let mut count = 0;
        for (edge, w) in g.edges.iter_mut().zip(weights) {
            edge.weight = w;
            max_abs = max_abs.max(
                w.checked_abs()
                    .ok_or(GameError::ArithmeticOverflow("taking an absolute weight"))?,
            );
            count += 1;
        }
        debug_assert_eq!(count, self.edges.len());
        g.max_abs_weight = max_abs;
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.owners.len()
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// `N`, the largest absolute edge weight.
    pub fn max_abs_weight(&self) -> i64 {
        self.max_abs_weight
    }

    pub fn owner(&self, v: VertexId) -> Owner {
        self.owners[v]
    }

    pub fn owners(&self) -> &[Owner] {
        &self.owners
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> Edge {
        self.edges[e]
    }

    pub fn weight(&self, e: EdgeId) -> i64 {
        self.edges[e].weight
    }

    pub fn vertices(&self) -> std::ops::Range<VertexId> {
        0..self.n()
    }

    /// Outgoing edge ids of `v`, sorted by `(dst, id)`.
    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out_list[self.out_start[v]..self.out_start[v + 1]]
    }

    /// Incoming edge ids of `v`, in id order.
    pub fn in_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.in_list[self.in_start[v]..self.in_start[v + 1]]
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        self.out_start[v + 1] - self.out_start[v]
    }

    /// Rewrites every weight in place through `f`, keeping the structure.
    pub(crate) fn map_weights(
        &mut self,
        mut f: impl FnMut(&Edge) -> Result<i64, GameError>,
    ) -> Result<(), GameError> {
        let mut max_abs = 0i64;
        for edge in self.edges.iter_mut() {
            edge.weight = f(edge)?;
            max_abs = max_abs.max(
                edge.weight
                    .checked_abs()
                    .ok_or(GameError::ArithmeticOverflow("taking an absolute weight"))?,
            );
        }
        self.max_abs_weight = max_abs;
        Ok(())
    }

    /// `n * N + 1`, the generic cap on the number of potential steps.
    pub fn generic_step_bound(&self) -> Result<i64, GameError> {
        (self.n() as i64)
            .checked_mul(self.max_abs_weight)
            .and_then(|x| x.checked_add(1))
            .ok_or(GameError::ArithmeticOverflow("computing n*N+1"))
    }

    /// The game obtained by negating every weight and swapping the owners.
    /// Energy values of the dual are the negated dual-energy values of `self`.
    pub fn dual(&self) -> GameGraph {
        let mut g = self.clone();
        for o in g.owners.iter_mut() {
            *o = o.opponent();
        }
        for e in g.edges.iter_mut() {
            // |w| <= i64::MAX holds for every constructed game, so this cannot overflow.
            e.weight = -e.weight;
        }
        g
    }
}

fn csr(degrees: &[usize], keys: impl Iterator<Item = usize>) -> (Vec<usize>, Vec<EdgeId>) {
    let mut start = Vec::with_capacity(degrees.len() + 1);
    let mut acc = 0;
    start.push(0);
    for d in degrees {
        acc += d;
        start.push(acc);
    }
    let mut fill = start.clone();
    let mut list = vec![0; acc];
    for (e, k) in keys.enumerate() {
        list[fill[k]] = e;
        fill[k] += 1;
    }
    (start, list)
}

/// Standalone validity check; a [`GameGraph`] built through
/// [`GameGraph::new`] is valid by construction, so this only re-runs the
/// checks on raw parts.
pub fn validate(owners: &[Owner], edges: &[Edge]) -> Result<(), GameError> {
    GameGraph::new(owners.to_vec(), edges.to_vec()).map(|_| ())
}

/// A non-negative integer labelling of the vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct Potential(Vec<i64>);

impl Potential {
    pub fn new(values: Vec<i64>) -> Result<Self, GameError> {
        if let Some(v) = values.iter().position(|&x| x < 0) {
            return Err(GameError::NegativePotential(v));
        }
        Ok(Potential(values))
    }

    pub fn zero(n: usize) -> Self {
        Potential(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[i64] {
        &self.0
    }

    pub fn get(&self, v: VertexId) -> i64 {
        self.0[v]
    }

    pub fn max(&self) -> i64 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// `phi - max(phi)`: non-positive, zero on at least one vertex.
    pub fn shifted(&self) -> Vec<i64> {
        let top = self.max();
        self.0.iter().map(|&x| x - top).collect()
    }

    pub fn checked_add(&self, other: &Potential) -> Result<Potential, GameError> {
        if self.len() != other.len() {
            return Err(GameError::PotentialLength {
                expected: self.len(),
                got: other.len(),
            });
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_add(*b))
            .collect::<Option<Vec<_>>>()
            .map(Potential)
            .ok_or(GameError::ArithmeticOverflow("adding potentials"))
    }
}

impl TryFrom<Vec<i64>> for Potential {
    type Error = GameError;

    fn try_from(values: Vec<i64>) -> Result<Self, Self::Error> {
        Potential::new(values)
    }
}

impl From<Potential> for Vec<i64> {
    fn from(p: Potential) -> Vec<i64> {
        p.0
    }
}

/// `w(e) + phi(dst) - phi(src)`.
pub fn modified_weight(g: &GameGraph, phi: &Potential, e: EdgeId) -> Result<i64, GameError> {
    let edge = g.edge(e);
    reweigh(edge.weight, phi.get(edge.src), phi.get(edge.dst))
}

pub(crate) fn reweigh(weight: i64, phi_src: i64, phi_dst: i64) -> Result<i64, GameError> {
    phi_dst
        .checked_sub(phi_src)
        .and_then(|d| weight.checked_add(d))
        .ok_or(GameError::ArithmeticOverflow("computing a modified weight"))
}

/// The game in which every edge weight is replaced by its modified weight.
pub fn apply_potential(g: &GameGraph, phi: &Potential) -> Result<GameGraph, GameError> {
    if phi.len() != g.n() {
        return Err(GameError::PotentialLength {
            expected: g.n(),
            got: phi.len(),
        });
    }
    let weights = (0..g.m())
        .map(|e| modified_weight(g, phi, e))
        .collect::<Result<Vec<_>, _>>()?;
    g.with_weights(weights)
}

/// Maps every weight `w` to `(n + 1) * w - 1`. The result has no simple cycle
/// of sum zero and the same set of vertices with positive mean payoff.
pub fn lift_to_simple(g: &GameGraph) -> Result<GameGraph, GameError> {
    let scale = g.n() as i64 + 1;
    let weights = g
        .edges()
        .iter()
        .map(|e| {
            e.weight
                .checked_mul(scale)
                .and_then(|w| w.checked_sub(1))
                .ok_or(GameError::ArithmeticOverflow("lifting a weight"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    g.with_weights(weights)
}

/// Minimal outgoing weight of a Min vertex, maximal one of a Max vertex.
pub fn extremal_weight(g: &GameGraph, v: VertexId) -> i64 {
    let weights = g.out_edges(v).iter().map(|&e| g.weight(e));
    let best = match g.owner(v) {
        Owner::Min => weights.min(),
        Owner::Max => weights.max(),
    };
    best.expect("validated games have no sinks")
}

/// Membership mask over the vertices of a game.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct VertexSet(Vec<bool>);

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        VertexSet(vec![false; n])
    }

    pub fn full(n: usize) -> Self {
        VertexSet(vec![true; n])
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        VertexSet(mask)
    }

    pub fn from_ids(n: usize, ids: impl IntoIterator<Item = VertexId>) -> Self {
        let mut s = VertexSet::empty(n);
        for v in ids {
            s.insert(v);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.0[v]
    }

    pub fn insert(&mut self, v: VertexId) -> bool {
        !std::mem::replace(&mut self.0[v], true)
    }

    pub fn len(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(v, _)| v)
    }

    pub fn complement(&self) -> VertexSet {
        VertexSet(self.0.iter().map(|b| !b).collect())
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.0.iter().zip(&other.0).all(|(&a, &b)| !a || b)
    }

    pub fn to_ids(&self) -> Vec<VertexId> {
        self.iter().collect()
    }
}

impl fmt::Display for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

/// The split of the vertices by the sign of their extremal weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignSets {
    pub negative: VertexSet,
    pub zero: VertexSet,
    pub positive: VertexSet,
}

pub fn sign_sets(g: &GameGraph) -> SignSets {
    let n = g.n();
    let mut sets = SignSets {
        negative: VertexSet::empty(n),
        zero: VertexSet::empty(n),
        positive: VertexSet::empty(n),
    };
    for v in g.vertices() {
        let target = match extremal_weight(g, v).cmp(&0) {
            Ordering::Less => &mut sets.negative,
            Ordering::Equal => &mut sets.zero,
            Ordering::Greater => &mut sets.positive,
        };
        target.insert(v);
    }
    sets
}

/// An integer extended with both infinities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtendedInt {
    NegInf,
    Finite(i64),
    PosInf,
}

impl ExtendedInt {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedInt::Finite(_))
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            ExtendedInt::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn negated(self) -> ExtendedInt {
        match self {
            ExtendedInt::NegInf => ExtendedInt::PosInf,
            ExtendedInt::PosInf => ExtendedInt::NegInf,
            // i64::MIN never appears: weights are bounded well below it.
            ExtendedInt::Finite(x) => ExtendedInt::Finite(-x),
        }
    }

    /// Sum with `±inf` absorbing finite values. `inf + -inf` and finite
    /// overflow are `None`.
    pub fn checked_add(self, other: ExtendedInt) -> Option<ExtendedInt> {
        use ExtendedInt::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.checked_add(b).map(Finite),
            (PosInf, NegInf) | (NegInf, PosInf) => None,
            (PosInf, _) | (_, PosInf) => Some(PosInf),
            (NegInf, _) | (_, NegInf) => Some(NegInf),
        }
    }
}

impl From<i64> for ExtendedInt {
    fn from(x: i64) -> Self {
        ExtendedInt::Finite(x)
    }
}

impl fmt::Display for ExtendedInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedInt::NegInf => write!(f, "-inf"),
            ExtendedInt::Finite(x) => write!(f, "{x}"),
            ExtendedInt::PosInf => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtendedInt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtendedInt::NegInf => s.serialize_str("-inf"),
            ExtendedInt::PosInf => s.serialize_str("inf"),
            ExtendedInt::Finite(x) => s.serialize_i64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct ExtVisitor;

        impl Visitor<'_> for ExtVisitor {
            type Value = ExtendedInt;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "an integer, \"inf\" or \"-inf\"")
            }

            fn visit_i64<E: de::Error>(self, x: i64) -> Result<ExtendedInt, E> {
                Ok(ExtendedInt::Finite(x))
            }

            fn visit_u64<E: de::Error>(self, x: u64) -> Result<ExtendedInt, E> {
                i64::try_from(x)
                    .map(ExtendedInt::Finite)
                    .map_err(|_| E::custom("integer out of range"))
            }

            fn visit_str<E: de::Error>(self, s: &str) -> Result<ExtendedInt, E> {
                match s {
                    "inf" => Ok(ExtendedInt::PosInf),
                    "-inf" => Ok(ExtendedInt::NegInf),
                    other => Err(E::custom(format!("unknown sentinel {other:?}"))),
                }
            }
        }

        d.deserialize_any(ExtVisitor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MpSign {
    Neg,
    Pos,
}

/// Per-vertex energy, dual-energy and mean-payoff sign.
///
/// `en_minus` is `None` when the producer cannot vouch for dual-energy
/// values (general, possibly non-simple, games).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueVector {
    pub en_plus: Vec<ExtendedInt>,
    pub en_minus: Option<Vec<ExtendedInt>>,
    pub mp_sign: Vec<MpSign>,
}

impl ValueVector {
    /// Largest finite energy value, 0 when there is none.
    pub fn e_plus(&self) -> i64 {
        self.en_plus.iter().filter_map(|x| x.finite()).max().unwrap_or(0).max(0)
    }

    /// Minus the smallest finite dual-energy value, 0 when there is none.
    pub fn e_minus(&self) -> i64 {
        self.en_minus
            .as_ref()
            .and_then(|en| en.iter().filter_map(|x| x.finite()).min())
            .map(|x| -x)
            .unwrap_or(0)
            .max(0)
    }
}

#[cfg(test)]
pub(crate) use tests::example_a;
