use std::cmp::Ordering;

use crate::game::{EdgeId, ExtendedInt, GameGraph, MpSign, Owner, ValueVector, VertexId, VertexSet};
use crate::solver::PositionalStrategy;

use super::OracleError;

pub const DEFAULT_N_LIMIT: usize = 6;
pub const MAX_STRATEGY_PAIRS: u128 = 10_000_000;
pub const SIMPLE_CHECK_N_LIMIT: usize = 8;

/// Exact mean payoff of a cycle, `sum / len`.
#[derive(Clone, Copy, Debug, Eq)]
pub struct MeanPayoff {
    pub sum: i64,
    pub len: u64,
}

impl MeanPayoff {
    pub fn signum(self) -> i64 {
        self.sum.signum()
    }
}

impl PartialEq for MeanPayoff {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Ord for MeanPayoff {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.sum as i128 * other.len as i128).cmp(&(other.sum as i128 * self.len as i128))
    }
}

impl PartialOrd for MeanPayoff {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The eventually periodic play of a strategy pair: `stem` then `cycle`
/// repeated forever, both given as edge sequences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lasso {
    pub stem: Vec<EdgeId>,
    pub cycle: Vec<EdgeId>,
}

impl Lasso {
    /// Follows `succ` (one chosen edge per vertex) from `start`.
    pub fn follow(g: &GameGraph, succ: &[EdgeId], start: VertexId) -> Lasso {
        let mut first_seen = vec![usize::MAX; g.n()];
        let mut path = Vec::new();
        let mut v = start;
        while first_seen[v] == usize::MAX {
            first_seen[v] = path.len();
            let e = succ[v];
            path.push(e);
            v = g.edge(e).dst;
        }
        let cycle = path.split_off(first_seen[v]);
        Lasso { stem: path, cycle }
    }

    pub fn mean_payoff(&self, g: &GameGraph) -> MeanPayoff {
        MeanPayoff {
            sum: self.cycle.iter().map(|&e| g.weight(e)).sum(),
            len: self.cycle.len() as u64,
        }
    }

    /// Supremum of the prefix sums (`+inf` when the cycle is positive).
    pub fn en_plus(&self, g: &GameGraph) -> ExtendedInt {
        if self.mean_payoff(g).sum > 0 {
            return ExtendedInt::PosInf;
        }
        ExtendedInt::Finite(self.prefix_sums(g).max().unwrap_or(0).max(0))
    }

    /// Infimum of the prefix sums (`-inf` when the cycle is negative).
    pub fn en_minus(&self, g: &GameGraph) -> ExtendedInt {
        if self.mean_payoff(g).sum < 0 {
            return ExtendedInt::NegInf;
        }
        ExtendedInt::Finite(self.prefix_sums(g).min().unwrap_or(0).min(0))
    }

    /// Prefix sums over the stem followed by one turn of the cycle.
    fn prefix_sums<'a>(&'a self, g: &'a GameGraph) -> impl Iterator<Item = i64> + 'a {
        self.stem.iter().chain(&self.cycle).scan(0i64, move |acc, &e| {
            *acc += g.weight(e);
            Some(*acc)
        })
    }
}

/// Values of every vertex in the three games, and the first (in enumeration
/// order) Min strategy that is energy-optimal from all vertices at once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleSolution {
    pub mean_payoff: Vec<MeanPayoff>,
    pub en_plus: Vec<ExtendedInt>,
    pub en_minus: Vec<ExtendedInt>,
    pub en_plus_strategy: PositionalStrategy,
}

impl OracleSolution {
    /// Fails if some vertex has mean payoff exactly zero.
    pub fn value_vector(&self) -> Result<ValueVector, OracleError> {
        let mp_sign = self
            .mean_payoff
            .iter()
            .enumerate()
            .map(|(v, mp)| match mp.signum() {
                -1 => Ok(MpSign::Neg),
                1 => Ok(MpSign::Pos),
                _ => Err(OracleError::ZeroMpInSimpleMode(v)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ValueVector {
            en_plus: self.en_plus.clone(),
            en_minus: Some(self.en_minus.clone()),
            mp_sign,
        })
    }
}

/// Mixed-radix enumeration of the positional strategies of one player:
/// vertices by id, edges in out-edge order, last vertex fastest.
struct StrategyCounter<'a> {
    g: &'a GameGraph,
    vertices: Vec<VertexId>,
    digits: Vec<usize>,
    started: bool,
}

impl<'a> StrategyCounter<'a> {
    fn new(g: &'a GameGraph, player: Owner) -> Self {
        let vertices: Vec<_> = g.vertices().filter(|&v| g.owner(v) == player).collect();
        let digits = vec![0; vertices.len()];
        StrategyCounter {
            g,
            vertices,
            digits,
            started: false,
        }
    }

    fn count(&self) -> u128 {
        self.vertices.iter().map(|&v| self.g.out_degree(v) as u128).product()
    }

    /// Advances to the next strategy and writes it into `succ`.
    fn advance(&mut self, succ: &mut [EdgeId]) -> bool {
        if self.started {
            let mut i = self.vertices.len();
            loop {
                if i == 0 {
                    return false;
                }
                i -= 1;
                self.digits[i] += 1;
                if self.digits[i] < self.g.out_degree(self.vertices[i]) {
                    break;
                }
                self.digits[i] = 0;
            }
        }
        self.started = true;
        for (&v, &d) in self.vertices.iter().zip(&self.digits) {
            succ[v] = self.g.out_edges(v)[d];
        }
        true
    }
}

/// Min-max over all positional strategy pairs of the lasso valuations.
pub fn oracle_solve(g: &GameGraph, n_limit: usize) -> Result<OracleSolution, OracleError> {
    let n = g.n();
    if n > n_limit {
        return Err(OracleError::TooLarge { n, limit: n_limit });
    }
    let mut mins = StrategyCounter::new(g, Owner::Min);
    let pairs = mins.count() * StrategyCounter::new(g, Owner::Max).count();
    if pairs > MAX_STRATEGY_PAIRS {
        return Err(OracleError::TooManyStrategies {
            pairs,
            limit: MAX_STRATEGY_PAIRS,
        });
    }

    let mut succ = vec![0; n];
    let mut best_mp: Vec<Option<MeanPayoff>> = vec![None; n];
    let mut best_plus = vec![ExtendedInt::PosInf; n];
    let mut best_minus = vec![ExtendedInt::PosInf; n];
    // Per Min strategy, Max's best responses; kept to pick a uniform optimum.
    let mut responses: Vec<(Vec<EdgeId>, Vec<ExtendedInt>)> = Vec::new();

    while mins.advance(&mut succ) {
        let mut maxs = StrategyCounter::new(g, Owner::Max);
        let mut resp_mp: Vec<Option<MeanPayoff>> = vec![None; n];
        let mut resp_plus = vec![ExtendedInt::NegInf; n];
        let mut resp_minus = vec![ExtendedInt::NegInf; n];
        while maxs.advance(&mut succ) {
            for v in 0..n {
                let lasso = Lasso::follow(g, &succ, v);
                let mp = lasso.mean_payoff(g);
                if resp_mp[v].is_none_or(|cur| mp > cur) {
                    resp_mp[v] = Some(mp);
                }
                resp_plus[v] = resp_plus[v].max(lasso.en_plus(g));
                resp_minus[v] = resp_minus[v].max(lasso.en_minus(g));
            }
        }
        for v in 0..n {
            let mp = resp_mp[v].expect("every vertex has a lasso");
            if best_mp[v].is_none_or(|cur| mp < cur) {
                best_mp[v] = Some(mp);
            }
            best_plus[v] = best_plus[v].min(resp_plus[v]);
            best_minus[v] = best_minus[v].min(resp_minus[v]);
        }
        let sigma: Vec<EdgeId> = succ.clone();
        responses.push((sigma, resp_plus));
    }

    let (sigma, _) = responses
        .into_iter()
        .find(|(_, resp)| resp == &best_plus)
        .expect("positional determinacy yields a uniformly optimal strategy");
    let en_plus_strategy = PositionalStrategy {
        choice: (0..n)
            .map(|v| (g.owner(v) == Owner::Min).then_some(sigma[v]))
            .collect(),
    };

    Ok(OracleSolution {
        mean_payoff: best_mp.into_iter().map(|mp| mp.expect("filled")).collect(),
        en_plus: best_plus,
        en_minus: best_minus,
        en_plus_strategy,
    })
}

/// Exact values of a simple game by strategy enumeration.
pub fn oracle_values(g: &GameGraph, n_limit: usize) -> Result<ValueVector, OracleError> {
    oracle_solve(g, n_limit)?.value_vector()
}

/// `N*` by repeated rounds of the defining condition, with `P*` its
/// complement. Independent of the attractor code in the solver.
pub fn oracle_partition(g: &GameGraph) -> (VertexSet, VertexSet) {
    let n = g.n();
    let mut inside = vec![false; n];
    loop {
        let snapshot = inside.clone();
        let good = |e: EdgeId| {
            let edge = g.edge(e);
            edge.weight < 0 || (edge.weight == 0 && snapshot[edge.dst])
        };
        let mut changed = false;
        for v in 0..n {
            if snapshot[v] {
                continue;
            }
            let joins = match g.owner(v) {
                Owner::Min => g.out_edges(v).iter().any(|&e| good(e)),
                Owner::Max => g.out_edges(v).iter().all(|&e| good(e)),
            };
            if joins {
                inside[v] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let n_star = VertexSet::from_mask(inside);
    let p_star = n_star.complement();
    (n_star, p_star)
}

/// Whether every simple cycle has non-zero sum, by exhaustive enumeration.
pub fn check_simple(g: &GameGraph) -> Result<bool, OracleError> {
    let n = g.n();
    if n > SIMPLE_CHECK_N_LIMIT {
        return Err(OracleError::TooLarge {
            n,
            limit: SIMPLE_CHECK_N_LIMIT,
        });
    }

    // Cycles are enumerated from their smallest vertex.
    fn zero_cycle_from(g: &GameGraph, start: VertexId, v: VertexId, sum: i64, on_path: &mut [bool]) -> bool {
        for &e in g.out_edges(v) {
            let edge = g.edge(e);
            let total = sum + edge.weight;
            if edge.dst == start {
                if total == 0 {
                    return true;
                }
            } else if edge.dst > start && !on_path[edge.dst] {
                on_path[edge.dst] = true;
                let found = zero_cycle_from(g, start, edge.dst, total, on_path);
                on_path[edge.dst] = false;
                if found {
                    return true;
                }
            }
        }
        false
    }

    let mut on_path = vec![false; n];
    for s in 0..n {
        on_path[s] = true;
        let found = zero_cycle_from(g, s, s, 0, &mut on_path);
        on_path[s] = false;
        if found {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks that along every path of length at most `2n` consistent with the
/// oracle's energy-optimal Min strategy and ending at a finite-energy
/// vertex, the path sum is at most the energy drop between its endpoints.
pub fn check_optimal_paths(g: &GameGraph, n_limit: usize) -> Result<bool, OracleError> {
    let sol = oracle_solve(g, n_limit)?;
    let sigma = &sol.en_plus_strategy;
    let max_len = 2 * g.n();

    fn explore(
        g: &GameGraph,
        sigma: &PositionalStrategy,
        en: &[ExtendedInt],
        start_value: i64,
        v: VertexId,
        sum: i64,
        remaining: usize,
    ) -> bool {
        if let ExtendedInt::Finite(here) = en[v] {
            if sum > start_value - here {
                return false;
            }
        }
        if remaining == 0 {
            return true;
        }
        let step = |e: EdgeId| {
            let edge = g.edge(e);
            explore(g, sigma, en, start_value, edge.dst, sum + edge.weight, remaining - 1)
        };
        match sigma.edge(v) {
            Some(e) => step(e),
            None => g.out_edges(v).iter().all(|&e| step(e)),
        }
    }

    Ok(g.vertices().all(|v0| match sol.en_plus[v0] {
        ExtendedInt::Finite(start) => explore(g, sigma, &sol.en_plus, start, v0, 0, max_len),
        _ => true,
    }))
}
