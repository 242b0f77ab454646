//! The GKK potential-reduction iteration.
//!
//! Each round splits the vertices into `N*` (Min can force the first
//! non-zero weight to be negative) and `P*` (its complement), computes the
//! step size `delta` from the edges crossing the split, and raises every
//! `P*` vertex by `delta`. The loop stops once `delta` is infinite, at which
//! point the reweighted game is reduced and all values can be read off the
//! cumulative potential.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{
    reweigh, sign_sets, Edge, EdgeId, ExtendedInt, GameError, GameGraph, MpSign, Owner, Potential,
    ValueVector, VertexId, VertexSet,
};
use crate::layers::{self, IterationRecord};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("iteration cap of {cap} potential steps exceeded; the input is probably not simple")]
    IterationCapExceeded { cap: u64 },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// The caller guarantees that no simple cycle has sum zero.
    Simple,
    /// Arbitrary games; only the `N*` side of the output is certified.
    General,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Simple => write!(f, "simple"),
            Mode::General => write!(f, "general"),
        }
    }
}

/// The `N*`/`P*` split of one round together with the switching sets
/// `SN ⊆ N* ∩ V_Min` and `SP ⊆ P* ∩ V_Max`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignPartition {
    pub n_star: VertexSet,
    pub p_star: VertexSet,
    pub sn: VertexSet,
    pub sp: VertexSet,
}

impl SignPartition {
    /// Builds a partition from an explicit `N*`, deriving `P*`, `SN` and `SP`.
    pub fn from_n_star(g: &GameGraph, n_star: VertexSet) -> SignPartition {
        let p_star = n_star.complement();
        let sn = switching_set(g, &n_star, Owner::Min, |w| w > 0);
        let sp = switching_set(g, &p_star, Owner::Max, |w| w < 0);
        SignPartition {
            n_star,
            p_star,
            sn,
            sp,
        }
    }
}

/// Vertices of `player` inside `region` all of whose edges into `region`
/// satisfy `leaves` (vacuously true when there are none).
fn switching_set(
    g: &GameGraph,
    region: &VertexSet,
    player: Owner,
    leaves: impl Fn(i64) -> bool,
) -> VertexSet {
    let mut set = VertexSet::empty(g.n());
    for v in region.iter().filter(|&v| g.owner(v) == player) {
        let forced = g
            .out_edges(v)
            .iter()
            .map(|&e| g.edge(e))
            .filter(|e| region.contains(e.dst))
            .all(|e| leaves(e.weight));
        if forced {
            set.insert(v);
        }
    }
    set
}

/// Least set of vertices from which `player` can force the first non-zero
/// weight to have its favourable sign (negative for Min, positive for Max).
///
/// Counter-based attractor over the reverse adjacency; runs in `O(n + m)`.
/// Vertices are seeded in id order and processed FIFO.
pub fn sign_attractor(g: &GameGraph, player: Owner) -> VertexSet {
    let favourable = |w: i64| match player {
        Owner::Min => w < 0,
        Owner::Max => w > 0,
    };
    let n = g.n();
    let mut attr = VertexSet::empty(n);
    // For opponent vertices: number of zero edges not yet known to enter the
    // attractor, or None when some edge is unfavourable.
    let mut pending: Vec<Option<usize>> = vec![None; n];
    let mut queue = VecDeque::new();

    for v in g.vertices() {
        let weights = g.out_edges(v).iter().map(|&e| g.weight(e));
        if g.owner(v) == player {
            if weights.clone().any(favourable) {
                attr.insert(v);
                queue.push_back(v);
            }
        } else {
            let mut zeros = 0;
            let mut blocked = false;
            for w in weights {
                if w == 0 {
                    zeros += 1;
                } else if !favourable(w) {
                    blocked = true;
                }
            }
            if !blocked {
                if zeros == 0 {
                    attr.insert(v);
                    queue.push_back(v);
                } else {
                    pending[v] = Some(zeros);
                }
            }
        }
    }

    while let Some(u) = queue.pop_front() {
        for &e in g.in_edges(u) {
            let edge = g.edge(e);
            let v = edge.src;
            if edge.weight != 0 || attr.contains(v) {
                continue;
            }
            let joins = if g.owner(v) == player {
                true
            } else if let Some(count) = pending[v].as_mut() {
                *count -= 1;
                *count == 0
            } else {
                false
            };
            if joins {
                attr.insert(v);
                queue.push_back(v);
            }
        }
    }
    attr
}

/// `N*` as the Min-attractor to negative edges over zero edges.
pub fn compute_partition(g: &GameGraph) -> SignPartition {
    SignPartition::from_n_star(g, sign_attractor(g, Owner::Min))
}

/// Partition used in general mode: `P*` is the Max-attractor to positive
/// edges and every other vertex, including those trapped on zero cycles,
/// goes to `N*`. Coincides with [`compute_partition`] on simple games.
pub fn compute_partition_general(g: &GameGraph) -> SignPartition {
    let p_star = sign_attractor(g, Owner::Max);
    SignPartition::from_n_star(g, p_star.complement())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaBundle {
    pub d_min_neg: ExtendedInt,
    pub d_max_neg: ExtendedInt,
    pub d_neg: ExtendedInt,
    pub d_min_pos: ExtendedInt,
    pub d_max_pos: ExtendedInt,
    pub d_pos: ExtendedInt,
    pub delta: ExtendedInt,
}

fn ext_max(acc: ExtendedInt, w: i64) -> ExtendedInt {
    acc.max(ExtendedInt::Finite(w))
}

fn ext_min(acc: ExtendedInt, w: i64) -> ExtendedInt {
    acc.min(ExtendedInt::Finite(w))
}

pub fn compute_deltas(g: &GameGraph, part: &SignPartition) -> Result<DeltaBundle, SolveError> {
    use ExtendedInt::{NegInf, PosInf};

    let mut d_max_neg = NegInf;
    let mut d_min_pos = PosInf;
    for edge in g.edges() {
        let from_n = part.n_star.contains(edge.src);
        let to_n = part.n_star.contains(edge.dst);
        match (g.owner(edge.src), from_n, to_n) {
            (Owner::Max, true, false) => d_max_neg = ext_max(d_max_neg, edge.weight),
            (Owner::Min, false, true) => d_min_pos = ext_min(d_min_pos, edge.weight),
            _ => {}
        }
    }

    let out_weights = |v: VertexId| g.out_edges(v).iter().map(move |&e| g.weight(e));
    let d_min_neg = part
        .sn
        .iter()
        .map(|v| out_weights(v).min().expect("sinkless"))
        .fold(NegInf, ext_max);
    let d_max_pos = part
        .sp
        .iter()
        .map(|v| out_weights(v).max().expect("sinkless"))
        .fold(PosInf, ext_min);

    let d_neg = d_min_neg.max(d_max_neg);
    let d_pos = d_min_pos.min(d_max_pos);
    if d_neg >= ExtendedInt::Finite(0) {
        return Err(SolveError::Internal(format!("delta- = {d_neg} is not negative")));
    }
    if d_pos <= ExtendedInt::Finite(0) {
        return Err(SolveError::Internal(format!("delta+ = {d_pos} is not positive")));
    }
    let delta = d_neg.negated().min(d_pos);
    Ok(DeltaBundle {
        d_min_neg,
        d_max_neg,
        d_neg,
        d_min_pos,
        d_max_pos,
        d_pos,
        delta,
    })
}

/// [`compute_deltas`] for general mode. `P*` is lifted only as far as every
/// vertex of `P*` stays in the Max-attractor to positive weights once the
/// edges leaving `P*` have lost `delta`. This caps `d_max_pos`.
pub fn compute_deltas_general(g: &GameGraph, part: &SignPartition) -> Result<DeltaBundle, SolveError> {
    let mut db = compute_deltas(g, part)?;
    let mut cuts: Vec<i64> = g
        .edges()
        .iter()
        .filter(|e| part.p_star.contains(e.src) && part.n_star.contains(e.dst) && e.weight > 0)
        .map(|e| e.weight)
        .collect();
    cuts.sort_unstable();
    cuts.dedup();
    let first_loss = cuts.partition_point(|&t| p_star_holds(g, part, t));
    if let Some(&t) = cuts.get(first_loss) {
        db.d_max_pos = db.d_max_pos.min(ExtendedInt::Finite(t));
        db.d_pos = db.d_min_pos.min(db.d_max_pos);
        db.delta = db.d_neg.negated().min(db.d_pos);
    }
    Ok(db)
}

/// Whether Max still attracts all of `P*` to positive weights inside `P*`
/// when an edge leaving `P*` counts as positive only if its weight exceeds `t`.
fn p_star_holds(g: &GameGraph, part: &SignPartition, t: i64) -> bool {
    let region = &part.p_star;
    let sign = |e: Edge| {
        if region.contains(e.dst) {
            e.weight.signum()
        } else if e.weight > t {
            1
        } else {
            -1
        }
    };
    let mut attr = VertexSet::empty(g.n());
    let mut pending: Vec<Option<usize>> = vec![None; g.n()];
    let mut queue = VecDeque::new();
    for v in region.iter() {
        let signs = g.out_edges(v).iter().map(|&e| sign(g.edge(e)));
        let joins = match g.owner(v) {
            Owner::Max => signs.clone().any(|s| s > 0),
            Owner::Min => {
                if signs.clone().any(|s| s < 0) {
                    false
                } else {
                    let zeros = signs.filter(|&s| s == 0).count();
                    pending[v] = Some(zeros);
                    zeros == 0
                }
            }
        };
        if joins {
            attr.insert(v);
            queue.push_back(v);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &e in g.in_edges(u) {
            let edge = g.edge(e);
            let v = edge.src;
            if !region.contains(v) || edge.weight != 0 || attr.contains(v) {
                continue;
            }
            let joins = match (g.owner(v), pending[v].as_mut()) {
                (Owner::Max, _) => true,
                (Owner::Min, Some(count)) => {
                    *count -= 1;
                    *count == 0
                }
                (Owner::Min, None) => false,
            };
            if joins {
                attr.insert(v);
                queue.push_back(v);
            }
        }
    }
    attr.len() == region.len()
}

/// The GKK potential (`delta` on `P*`, zero on `N*`) and the game it induces.
pub fn gkk_step(
    g: &GameGraph,
    part: &SignPartition,
    db: &DeltaBundle,
) -> Result<(Potential, GameGraph), SolveError> {
    let delta = db
        .delta
        .finite()
        .ok_or_else(|| SolveError::Internal("potential step requested with infinite delta".into()))?;
    let phi = Potential::new(
        g.vertices()
            .map(|v| if part.p_star.contains(v) { delta } else { 0 })
            .collect(),
    )?;
    let mut next = g.clone();
    step_in_place(&mut next, part, delta)?;
    Ok((phi, next))
}

fn step_in_place(g: &mut GameGraph, part: &SignPartition, delta: i64) -> Result<(), GameError> {
    let lift = |v: VertexId| if part.p_star.contains(v) { delta } else { 0 };
    g.map_weights(|e| reweigh(e.weight, lift(e.src), lift(e.dst)))
}

/// A violated condition of the reduced-game characterisation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedViolation {
    /// 1: Min in N* lacks a non-positive edge into N*; 2: Max in N* has a
    /// positive edge or an edge leaving N*; 3 and 4 are the duals on P*.
    /// 0 means the two sets do not partition the vertices.
    pub bullet: u8,
    pub vertex: VertexId,
    pub edge: Option<EdgeId>,
}

impl fmt::Display for ReducedViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.bullet {
            0 => "vertex is not in exactly one of N*, P*",
            1 => "Min vertex in N* has no non-positive edge into N*",
            2 => "Max vertex in N* has an edge that is positive or leaves N*",
            3 => "Max vertex in P* has no non-negative edge into P*",
            _ => "Min vertex in P* has an edge that is negative or leaves P*",
        };
        write!(f, "condition {} fails at vertex {}", self.bullet, self.vertex)?;
        if let Some(e) = self.edge {
            write!(f, " (edge {e})")?;
        }
        write!(f, ": {what}")
    }
}

/// First violated reduced-game condition, scanning vertices in id order.
pub fn reduced_violation(g: &GameGraph, part: &SignPartition) -> Option<ReducedViolation> {
    let fail = |bullet, vertex, edge| {
        Some(ReducedViolation {
            bullet,
            vertex,
            edge,
        })
    };
    if part.n_star.universe() != g.n() || part.p_star.universe() != g.n() {
        return fail(0, 0, None);
    }
    for v in g.vertices() {
        let in_n = part.n_star.contains(v);
        if in_n == part.p_star.contains(v) {
            return fail(0, v, None);
        }
        let edges = g.out_edges(v);
        // Orientation: on the N* side "good" means non-positive into N*, on
        // the P* side non-negative into P*.
        let good = |e: EdgeId| {
            let edge = g.edge(e);
            let same_side = part.n_star.contains(edge.dst) == in_n;
            same_side && if in_n { edge.weight <= 0 } else { edge.weight >= 0 }
        };
        let existential = matches!((in_n, g.owner(v)), (true, Owner::Min) | (false, Owner::Max));
        let bullet = match (in_n, existential) {
            (true, true) => 1,
            (true, false) => 2,
            (false, true) => 3,
            (false, false) => 4,
        };
        if existential {
            if !edges.iter().any(|&e| good(e)) {
                return fail(bullet, v, None);
            }
        } else if let Some(&e) = edges.iter().find(|&&e| !good(e)) {
            return fail(bullet, v, Some(e));
        }
    }
    None
}

pub fn is_reduced(g: &GameGraph, part: &SignPartition) -> bool {
    reduced_violation(g, part).is_none()
}

/// Checks that `phi` reduces `g` with respect to `claimed`.
pub fn check_certificate(
    g: &GameGraph,
    phi: &Potential,
    claimed: &SignPartition,
) -> Result<(), CertificateError> {
    let reduced = crate::game::apply_potential(g, phi).map_err(CertificateError::Game)?;
    match reduced_violation(&reduced, claimed) {
        None => Ok(()),
        Some(v) => Err(CertificateError::Violation(v)),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertificateError {
    #[error("certificate rejected: {0}")]
    Violation(ReducedViolation),
    #[error(transparent)]
    Game(GameError),
}

/// Positional strategy: the chosen edge of every vertex owned by the player,
/// `None` elsewhere.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PositionalStrategy {
    pub choice: Vec<Option<EdgeId>>,
}

impl PositionalStrategy {
    pub fn edge(&self, v: VertexId) -> Option<EdgeId> {
        self.choice[v]
    }
}

/// Witness strategies of a reduced game: Min keeps non-positive weights inside
/// `N*`, Max keeps non-negative weights inside `P*`. Ties go to the lowest
/// destination, then the lowest edge id.
pub fn extract_strategies(
    g: &GameGraph,
    part: &SignPartition,
) -> Result<(PositionalStrategy, PositionalStrategy), SolveError> {
    let n = g.n();
    let mut sigma = PositionalStrategy { choice: vec![None; n] };
    let mut tau = PositionalStrategy { choice: vec![None; n] };
    for v in g.vertices() {
        let in_n = part.n_star.contains(v);
        let owner = g.owner(v);
        let keeps_side = |&&e: &&EdgeId| {
            let edge = g.edge(e);
            part.n_star.contains(edge.dst) == in_n
                && if in_n { edge.weight <= 0 } else { edge.weight >= 0 }
        };
        let pick = match (owner, in_n) {
            (Owner::Min, true) | (Owner::Max, false) => {
                g.out_edges(v).iter().find(keeps_side).copied().ok_or_else(|| {
                    SolveError::Internal(format!("vertex {v} has no edge keeping its side"))
                })?
            }
            _ => g.out_edges(v)[0],
        };
        match owner {
            Owner::Min => sigma.choice[v] = Some(pick),
            Owner::Max => tau.choice[v] = Some(pick),
        }
    }
    Ok((sigma, tau))
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub mode: Mode,
    pub values: ValueVector,
    /// Cumulative potential `Phi` over all executed steps.
    pub potential: Potential,
    /// Number of executed potential steps (rounds with finite delta).
    pub iterations: u64,
    pub final_partition: SignPartition,
    pub trace: Option<Vec<IterationRecord>>,
}

impl SolveResult {
    pub fn e_plus(&self) -> i64 {
        self.values.e_plus()
    }

    pub fn e_minus(&self) -> i64 {
        self.values.e_minus()
    }
}

/// Step cap enforced by [`solve`]: `nN + 1` in simple mode and
/// `n(nN + 1)` in general mode.
pub fn iteration_cap(g: &GameGraph, mode: Mode) -> u64 {
    let generic = (g.n() as u64)
        .saturating_mul(g.max_abs_weight() as u64)
        .saturating_add(1);
    match mode {
        Mode::Simple => generic,
        Mode::General => generic.saturating_mul(g.n() as u64),
    }
}

/// Runs the iteration until the game is reduced and extracts the values.
///
/// In simple mode the result holds energies, dual energies and mean-payoff
/// signs of every vertex. In general mode `N*` vertices get their exact
/// energy and sign "mean payoff <= 0"; `P*` vertices are reported with
/// infinite energy and sign "mean payoff >= 0", and dual energies are
/// withheld.
pub fn solve(g: &GameGraph, mode: Mode, want_trace: bool) -> Result<SolveResult, SolveError> {
    let n = g.n();
    let cap = iteration_cap(g, mode);
    let (partition, deltas): (fn(&GameGraph) -> SignPartition, _) = match mode {
        Mode::Simple => (compute_partition, compute_deltas as fn(&GameGraph, &SignPartition) -> _),
        Mode::General => (compute_partition_general, compute_deltas_general as _),
    };

    let mut game = g.clone();
    let mut phi_total = vec![0i64; n];
    let mut delta_sum = 0i64;
    let mut iterations = 0u64;
    let mut trace = want_trace.then(Vec::new);

    let final_partition = loop {
        let part = partition(&game);
        let db = deltas(&game, &part)?;
        if let Some(records) = trace.as_mut() {
            let step = records.len();
            let sets = sign_sets(&game);
            let layered = mode == Mode::Simple;
            let mut record = layers::iteration_record(&game, &part, &sets, &db, step, layered)?;
            if let ExtendedInt::Finite(d) = db.delta {
                let sum = delta_sum
                    .checked_add(d)
                    .ok_or(GameError::ArithmeticOverflow("accumulating delta"))?;
                let after = phi_total
                    .iter()
                    .enumerate()
                    .map(|(v, &x)| if part.p_star.contains(v) { x.checked_add(d) } else { Some(x) })
                    .collect::<Option<Vec<_>>>()
                    .ok_or(GameError::ArithmeticOverflow("accumulating the potential"))?;
                record.delta_sum = Some(sum);
                record.cumulative_potential = Some(after);
            }
            records.push(record);
        }

        let ExtendedInt::Finite(delta) = db.delta else {
            break part;
        };
        iterations += 1;
        if iterations > cap {
            return Err(SolveError::IterationCapExceeded { cap });
        }
        delta_sum = delta_sum
            .checked_add(delta)
            .ok_or(GameError::ArithmeticOverflow("accumulating delta"))?;
        for v in part.p_star.iter() {
            phi_total[v] = phi_total[v]
                .checked_add(delta)
                .ok_or(GameError::ArithmeticOverflow("accumulating the potential"))?;
        }
        step_in_place(&mut game, &part, delta)?;
    };

    let potential = Potential::new(phi_total)?;
    let top = potential.max();
    let mut en_plus = Vec::with_capacity(n);
    let mut en_minus = Vec::with_capacity(n);
    let mut mp_sign = Vec::with_capacity(n);
    for v in g.vertices() {
        let phi = potential.get(v);
        if final_partition.n_star.contains(v) {
            en_plus.push(ExtendedInt::Finite(phi));
            en_minus.push(ExtendedInt::NegInf);
            mp_sign.push(MpSign::Neg);
        } else {
            en_plus.push(ExtendedInt::PosInf);
            en_minus.push(ExtendedInt::Finite(phi - top));
            mp_sign.push(MpSign::Pos);
        }
    }
    if mode == Mode::Simple && n > 0 && !potential.values().contains(&0) {
        return Err(SolveError::Internal("cumulative potential has no zero entry".into()));
    }

    Ok(SolveResult {
        mode,
        values: ValueVector {
            en_plus,
            en_minus: (mode == Mode::Simple).then_some(en_minus),
            mp_sign,
        },
        potential,
        iterations,
        final_partition,
        trace,
    })
}
