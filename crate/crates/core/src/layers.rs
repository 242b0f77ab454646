//! Alternation-depth layers of `N*` and `P*`, their integer encodings, and
//! the verifier that replays a solver trace against the known bounds.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::game::{ExtendedInt, GameGraph, Owner, SignSets, VertexId, VertexSet};
use crate::solver::{DeltaBundle, SignPartition, SolveError, SolveResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// Layers of `N*` built over the negative vertices `N`.
    Negative,
    /// Layers of `P*` built over the positive vertices `P`.
    Positive,
}

impl Side {
    /// Owner of the vertices allowed in block `level` (`level >= 1`).
    fn block_owner(self, level: usize) -> Owner {
        let first = match self {
            Side::Negative => Owner::Max,
            Side::Positive => Owner::Min,
        };
        if level % 2 == 1 {
            first
        } else {
            first.opponent()
        }
    }
}

/// Alternation depths of one side of the partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerDecomposition {
    pub side: Side,
    /// `Some(depth)` for vertices of the region, `None` elsewhere.
    pub alt_depth: Vec<Option<usize>>,
    /// `layers[i]` is `A_i`; `A_0` is the base set. Trailing empty layers are
    /// trimmed, intermediate ones are kept.
    pub layers: Vec<Vec<VertexId>>,
}

impl LayerDecomposition {
    /// `|A_1|, ..., |A_r|`.
    pub fn layer_sizes(&self) -> Vec<usize> {
        self.layers.iter().skip(1).map(Vec::len).collect()
    }

    /// `-|A_1|, |A_2|, -|A_3|, ...`
    pub fn signed_sizes(&self) -> Vec<i64> {
        signed_sizes(&self.layer_sizes())
    }

    /// Largest index of a non-empty layer.
    pub fn top(&self) -> usize {
        self.layers.len().saturating_sub(1)
    }
}

fn signed_sizes(sizes: &[usize]) -> Vec<i64> {
    sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| if i % 2 == 0 { -(s as i64) } else { s as i64 })
        .collect()
}

/// Computes `alt(v)` for every vertex of the chosen side by layered closure:
/// `B_0` is the base set and `B_l` adds every region vertex reaching
/// `B_{l-1}` through zero edges whose sources all belong to the owner of
/// block `l`. Empty blocks are allowed, so intermediate layers may be empty.
///
/// Fails when some region vertex gets no finite depth, which cannot happen
/// on simple games.
pub fn alternation_depths(
    g: &GameGraph,
    part: &SignPartition,
    side: Side,
) -> Result<LayerDecomposition, SolveError> {
    let sets = crate::game::sign_sets(g);
    alternation_depths_with(g, part, &sets, side)
}

fn alternation_depths_with(
    g: &GameGraph,
    part: &SignPartition,
    sets: &SignSets,
    side: Side,
) -> Result<LayerDecomposition, SolveError> {
    let (region, base) = match side {
        Side::Negative => (&part.n_star, &sets.negative),
        Side::Positive => (&part.p_star, &sets.positive),
    };
    let n = g.n();
    let mut depth: Vec<Option<usize>> = vec![None; n];
    let mut layers = vec![Vec::new()];
    let mut covered = 0;
    for v in base.iter() {
        if !region.contains(v) {
            return Err(SolveError::Internal(format!(
                "extremal-sign vertex {v} lies outside its side of the partition"
            )));
        }
        depth[v] = Some(0);
        layers[0].push(v);
        covered += 1;
    }
    let target = region.len();

    let mut level = 0;
    let mut idle_rounds = 0;
    let mut stack = Vec::new();
    while covered < target {
        level += 1;
        let owner = side.block_owner(level);
        let mut added = Vec::new();
        stack.extend(g.vertices().filter(|&v| depth[v].is_some_and(|d| d < level)));
        while let Some(u) = stack.pop() {
            for &e in g.in_edges(u) {
                let edge = g.edge(e);
                let v = edge.src;
                if edge.weight == 0 && region.contains(v) && depth[v].is_none() && g.owner(v) == owner {
                    depth[v] = Some(level);
                    added.push(v);
                    stack.push(v);
                }
            }
        }
        if added.is_empty() {
            idle_rounds += 1;
            if idle_rounds == 2 {
                return Err(SolveError::Internal(format!(
                    "{} vertices of the {side:?} side have no zero path to the base set",
                    target - covered
                )));
            }
        } else {
            idle_rounds = 0;
        }
        covered += added.len();
        added.sort_unstable();
        layers.push(added);
    }
    while layers.len() > 1 && layers.last().is_some_and(Vec::is_empty) {
        layers.pop();
    }

    Ok(LayerDecomposition {
        side,
        alt_depth: depth,
        layers,
    })
}

/// A bit string read as a binary number; `width` keeps leading zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AlphaCode {
    pub value: BigUint,
    pub width: usize,
}

impl AlphaCode {
    pub fn from_bits(bits: &[bool]) -> AlphaCode {
        let mut value = BigUint::from(0u32);
        for &b in bits {
            value <<= 1u32;
            if b {
                value += 1u32;
            }
        }
        AlphaCode {
            value,
            width: bits.len(),
        }
    }

    pub fn bits(&self) -> String {
        let raw = self.value.to_str_radix(2);
        if self.value == BigUint::from(0u32) {
            "0".repeat(self.width)
        } else {
            format!("{raw:0>width$}", width = self.width)
        }
    }
}

impl fmt::Display for AlphaCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bits())
    }
}

impl Serialize for AlphaCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.bits())
    }
}

impl<'de> Deserialize<'de> for AlphaCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(serde::de::Error::custom(format!("bad bit {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AlphaCode::from_bits(&bits))
    }
}

/// Packs the layer sizes `|A_1|..|A_r|` into
/// `0^|A_1| 1^|A_2| 0^|A_3| ... s_r^|A_r| 1 0^trailing_zeros`.
pub fn alpha_encoding(layer_sizes: &[usize], trailing_zeros: usize) -> AlphaCode {
    let mut bits = Vec::with_capacity(layer_sizes.iter().sum::<usize>() + 1 + trailing_zeros);
    for (i, &size) in layer_sizes.iter().enumerate() {
        // Layer index i + 1: odd layers are zeros, even layers ones.
        let bit = (i + 1) % 2 == 0;
        bits.extend(std::iter::repeat_n(bit, size));
    }
    bits.push(true);
    bits.extend(std::iter::repeat_n(false, trailing_zeros));
    AlphaCode::from_bits(&bits)
}

/// Lexicographic order on signed layer sequences, padding with zeros.
pub fn lex_compare(a: &[i64], b: &[i64]) -> Ordering {
    let len = a.len().max(b.len());
    let at = |s: &[i64], i: usize| s.get(i).copied().unwrap_or(0);
    (0..len)
        .map(|i| at(a, i).cmp(&at(b, i)))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Layer data of one round, present for simple-mode traces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSummary {
    /// `|A_1|..|A_r|` on the `N*` side.
    pub neg_layers: Vec<usize>,
    /// Same on the `P*` side.
    pub pos_layers: Vec<usize>,
    pub signed_neg: Vec<i64>,
    pub signed_pos: Vec<i64>,
    pub alpha_minus: AlphaCode,
    pub alpha_plus: AlphaCode,
}

/// Snapshot of round `step` of a solver run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub step: usize,
    pub delta: ExtendedInt,
    /// `Delta^j`, the sum of the step sizes up to and including this round;
    /// absent on the final round where `delta` is infinite.
    pub delta_sum: Option<i64>,
    pub n_star_size: usize,
    pub p_star_size: usize,
    pub neg_size: usize,
    pub zero_size: usize,
    pub pos_size: usize,
    /// `|N| + |P|`.
    pub k: usize,
    pub negative: Vec<VertexId>,
    pub positive: Vec<VertexId>,
    pub layers: Option<LayerSummary>,
    /// `Phi^j` after this round's step.
    pub cumulative_potential: Option<Vec<i64>>,
}

pub(crate) fn iteration_record(
    g: &GameGraph,
    part: &SignPartition,
    sets: &SignSets,
    db: &DeltaBundle,
    step: usize,
    layered: bool,
) -> Result<IterationRecord, SolveError> {
    let n_star_size = part.n_star.len();
    let p_star_size = part.p_star.len();
    let neg_size = sets.negative.len();
    let pos_size = sets.positive.len();
    let layers = if layered {
        let neg = alternation_depths_with(g, part, sets, Side::Negative)?;
        let pos = alternation_depths_with(g, part, sets, Side::Positive)?;
        let neg_layers = neg.layer_sizes();
        let pos_layers = pos.layer_sizes();
        Some(LayerSummary {
            alpha_minus: alpha_encoding(&neg_layers, p_star_size - pos_size),
            alpha_plus: alpha_encoding(&pos_layers, n_star_size - neg_size),
            signed_neg: signed_sizes(&neg_layers),
            signed_pos: signed_sizes(&pos_layers),
            neg_layers,
            pos_layers,
        })
    } else {
        None
    };
    Ok(IterationRecord {
        step,
        delta: db.delta,
        delta_sum: None,
        n_star_size,
        p_star_size,
        neg_size,
        zero_size: sets.zero.len(),
        pos_size,
        k: neg_size + pos_size,
        negative: sets.negative.to_ids(),
        positive: sets.positive.to_ids(),
        layers,
        cumulative_potential: None,
    })
}

/// Facts about a finished run that the bound checks need.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunFacts {
    pub n: usize,
    pub max_abs_weight: i64,
    pub iterations: u64,
}

impl RunFacts {
    pub fn of(g: &GameGraph, result: &SolveResult) -> RunFacts {
        RunFacts {
            n: g.n(),
            max_abs_weight: g.max_abs_weight(),
            iterations: result.iterations,
        }
    }
}

/// `N + E+ + E- + 1`.
pub fn energy_step_bound(max_abs_weight: i64, e_plus: i64, e_minus: i64) -> i128 {
    max_abs_weight as i128 + e_plus as i128 + e_minus as i128 + 1
}

/// `n * N + 1`.
pub fn generic_step_bound(n: usize, max_abs_weight: i64) -> i128 {
    n as i128 * max_abs_weight as i128 + 1
}

/// Whether `count <= 4 * 2^((n - k) / 2)`, compared exactly as
/// `count^2 <= 16 * 2^(n - k)`.
pub fn within_same_k_budget(count: u64, n: usize, k: usize) -> bool {
    let exp = n.saturating_sub(k);
    if exp >= 120 {
        return true;
    }
    (count as u128) * (count as u128) <= 16u128 << exp
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Step index and description of the first violation.
    pub first_failure: Option<(usize, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SameKRun {
    pub k: usize,
    pub first_step: usize,
    pub steps: u64,
    pub within_budget: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckOutcome>,
    pub iterations: u64,
    pub energy_bound: i128,
    pub generic_bound: i128,
    /// Sum over k of the same-k budgets, `sum_k 4 * 2^((n - k) / 2)`, as a
    /// float since it only serves as a comparison figure.
    pub combinatorial_budget: f64,
    pub same_k_runs: Vec<SameKRun>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            match &c.first_failure {
                None => writeln!(f, "PASS {}", c.name)?,
                Some((step, msg)) => writeln!(f, "FAIL {} at step {step}: {msg}", c.name)?,
            }
        }
        writeln!(
            f,
            "iterations {} <= N+E++E-+1 = {} <= nN+1 = {}",
            self.iterations, self.energy_bound, self.generic_bound
        )
    }
}

struct Check {
    name: &'static str,
    failure: Option<(usize, String)>,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Check { name, failure: None }
    }

    fn require(&mut self, ok: bool, step: usize, msg: impl FnOnce() -> String) {
        if !ok && self.failure.is_none() {
            self.failure = Some((step, msg()));
        }
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            name: self.name.to_string(),
            passed: self.failure.is_none(),
            first_failure: self.failure,
        }
    }
}

fn pow2(exp: usize) -> BigUint {
    BigUint::from(1u32) << exp
}

/// Replays a trace and checks, for every pair of consecutive rounds:
/// shrinking of `N` and `P`; strict growth of both signed layer sequences
/// and of both alpha codes whenever `N` and `P` stay unchanged; the values
/// of `Phi` on `N` and `P`; and globally the step bounds and same-`k` budgets.
/// `energies` holds independently computed `(E+, E-)`.
pub fn verify_trace(trace: &[IterationRecord], run: RunFacts, energies: (i64, i64)) -> VerificationReport {
    let mut shrink = Check::new("sign_sets_shrink");
    let mut lex = Check::new("layer_lex_growth");
    let mut alpha = Check::new("alpha_growth");
    let mut potential = Check::new("potential_on_sign_sets");
    let mut delta_sum = Check::new("delta_sum_consistency");
    let mut k_mono = Check::new("k_non_increasing");
    let mut count = Check::new("trace_step_count");
    let mut energy_check = Check::new("energy_step_bound");
    let mut generic = Check::new("generic_bound");
    let mut budget = Check::new("same_k_budget");

    let finite_steps = trace.iter().filter(|r| r.delta.is_finite()).count() as u64;
    count.require(finite_steps == run.iterations, 0, || {
        format!("trace has {finite_steps} finite steps, run reports {}", run.iterations)
    });
    for (i, r) in trace.iter().enumerate() {
        count.require(r.step == i, i, || format!("record {i} is labelled step {}", r.step));
        let last = i + 1 == trace.len();
        count.require(r.delta.is_finite() != last, i, || {
            "only the last round may have an infinite step".to_string()
        });
    }

    let mut running = 0i128;
    for r in trace {
        let j = r.step;
        let Some(d) = r.delta.finite() else { continue };
        running += d as i128;
        delta_sum.require(r.delta_sum.map(i128::from) == Some(running), j, || {
            format!("Delta^j = {:?}, expected {running}", r.delta_sum)
        });
        match (&r.cumulative_potential, r.delta_sum) {
            (Some(phi), Some(sum)) => {
                for &v in &r.negative {
                    potential.require(phi.get(v) == Some(&0), j, || {
                        format!("Phi({v}) = {:?} on N, expected 0", phi.get(v))
                    });
                }
                for &v in &r.positive {
                    potential.require(phi.get(v) == Some(&sum), j, || {
                        format!("Phi({v}) = {:?} on P, expected Delta = {sum}", phi.get(v))
                    });
                }
            }
            _ => potential.require(false, j, || "record lacks Phi or Delta".to_string()),
        }
    }

    for pair in trace.windows(2) {
        let (cur, next) = (&pair[0], &pair[1]);
        let j = cur.step;
        let n_sub = next.negative.iter().all(|v| cur.negative.binary_search(v).is_ok());
        let p_sub = next.positive.iter().all(|v| cur.positive.binary_search(v).is_ok());
        shrink.require(n_sub && p_sub, j, || {
            format!(
                "N {:?} -> {:?}, P {:?} -> {:?}",
                cur.negative, next.negative, cur.positive, next.positive
            )
        });
        k_mono.require(next.k <= cur.k, j, || format!("k grew from {} to {}", cur.k, next.k));

        if cur.negative != next.negative || cur.positive != next.positive {
            continue;
        }
        let (Some(a), Some(b)) = (&cur.layers, &next.layers) else {
            lex.require(false, j, || "layer data missing".to_string());
            continue;
        };
        lex.require(lex_compare(&a.signed_neg, &b.signed_neg) == Ordering::Less, j, || {
            format!("N* layers {:?} -> {:?} do not grow", a.signed_neg, b.signed_neg)
        });
        lex.require(lex_compare(&a.signed_pos, &b.signed_pos) == Ordering::Less, j, || {
            format!("P* layers {:?} -> {:?} do not grow", a.signed_pos, b.signed_pos)
        });
        let minus_gap = pow2(cur.p_star_size - cur.pos_size);
        let plus_gap = pow2(cur.n_star_size - cur.neg_size);
        alpha.require(b.alpha_minus.value > &a.alpha_minus.value + &minus_gap, j, || {
            format!("alpha- {} -> {} (gap 2^{})", a.alpha_minus, b.alpha_minus, cur.p_star_size - cur.pos_size)
        });
        alpha.require(b.alpha_plus.value > &a.alpha_plus.value + &plus_gap, j, || {
            format!("alpha+ {} -> {} (gap 2^{})", a.alpha_plus, b.alpha_plus, cur.n_star_size - cur.neg_size)
        });
    }

    let energy_bound = energy_step_bound(run.max_abs_weight, energies.0, energies.1);
    let generic_bound = generic_step_bound(run.n, run.max_abs_weight);
    let last = trace.len().saturating_sub(1);
    energy_check.require((run.iterations as i128) <= energy_bound, last, || {
        format!("{} steps > N+E++E-+1 = {energy_bound}", run.iterations)
    });
    generic.require((run.iterations as i128) <= generic_bound, last, || {
        format!("{} steps > nN+1 = {generic_bound}", run.iterations)
    });

    let mut same_k_runs: Vec<SameKRun> = Vec::new();
    for r in trace {
        match same_k_runs.last_mut() {
            Some(run) if run.k == r.k => {}
            _ => same_k_runs.push(SameKRun {
                k: r.k,
                first_step: r.step,
                steps: 0,
                within_budget: true,
            }),
        }
        if r.delta.is_finite() {
            let current = same_k_runs.last_mut().expect("just pushed");
            current.steps += 1;
        }
    }
    for s in same_k_runs.iter_mut() {
        s.within_budget = within_same_k_budget(s.steps, run.n, s.k);
        budget.require(s.within_budget, s.first_step, || {
            format!("{} consecutive steps with k = {} exceed 4*2^(({} - {})/2)", s.steps, s.k, run.n, s.k)
        });
    }
    let combinatorial_budget = (0..run.n)
        .map(|k| 4.0 * 2f64.powf((run.n - k) as f64 / 2.0))
        .sum();

    VerificationReport {
        checks: vec![
            count.finish(),
            shrink.finish(),
            k_mono.finish(),
            lex.finish(),
            alpha.finish(),
            delta_sum.finish(),
            potential.finish(),
            energy_check.finish(),
            generic.finish(),
            budget.finish(),
        ],
        iterations: run.iterations,
        energy_bound,
        generic_bound,
        combinatorial_budget,
        same_k_runs,
    }
}

/// Convenience wrapper verifying a traced [`SolveResult`].
pub fn verify_result(g: &GameGraph, result: &SolveResult, energies: (i64, i64)) -> Option<VerificationReport> {
    let trace = result.trace.as_ref()?;
    Some(verify_trace(trace, RunFacts::of(g, result), energies))
}

/// Owners of the non-base vertices of each layer agree with the layer parity.
pub fn parity_consistent(g: &GameGraph, dec: &LayerDecomposition) -> bool {
    dec.layers.iter().enumerate().skip(1).all(|(level, layer)| {
        layer.iter().all(|&v| g.owner(v) == dec.side.block_owner(level))
    })
}

/// `VertexSet` of the vertices on one side with their depth.
pub fn layer_set(dec: &LayerDecomposition, n: usize, level: usize) -> VertexSet {
    VertexSet::from_ids(n, dec.layers.get(level).into_iter().flatten().copied())
}
