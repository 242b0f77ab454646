//! Seeded instance generation.
//!
//! Randomness comes from SplitMix64 (Steele, Lea and Flood's 64-bit mixer as
//! used to seed the xoshiro family), so a seed reproduces the same game on
//! every platform. Bounded draws use rejection sampling on the raw output.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::game::{lift_to_simple, Edge, GameError, GameGraph, Owner, VertexId, MAX_ABS_WEIGHT};

pub const DEFAULT_SEED: u64 = 0x6b6b_5eed;

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `0..bound`; `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % bound;
            }
        }
    }

    /// Uniform in `lo..=hi`.
    pub fn range_i64(&mut self, lo: i64, hi: i64) -> i64 {
        let span = (hi as i128 - lo as i128 + 1) as u64;
        (lo as i128 + self.below(span) as i128) as i64
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Random,
    Chain,
    Bipartite,
    CycleMix,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Random, Family::Chain, Family::Bipartite, Family::CycleMix];
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Random => "RANDOM",
            Family::Chain => "CHAIN",
            Family::Bipartite => "BIPARTITE",
            Family::CycleMix => "CYCLE_MIX",
        })
    }
}

impl FromStr for Family {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, GenError> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "RANDOM" => Ok(Family::Random),
            "CHAIN" => Ok(Family::Chain),
            "BIPARTITE" => Ok(Family::Bipartite),
            "CYCLE_MIX" => Ok(Family::CycleMix),
            _ => Err(GenError::BadSpec(format!("unknown family {s:?}"))),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("bad generator spec: {0}")]
    BadSpec(String),
    #[error("lifted weights would reach {bound}, above the cap {cap}")]
    Overflow { bound: i128, cap: i64 },
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    pub m: usize,
    pub max_abs_weight: i64,
    pub seed: u64,
    pub family: Family,
    /// Probability that a vertex is owned by Max (for `BIPARTITE`, the
    /// fraction of Max vertices).
    pub owner_ratio: f64,
}

impl GenSpec {
    pub fn new(n: usize, m: usize, max_abs_weight: i64, seed: u64) -> Self {
        GenSpec {
            n,
            m,
            max_abs_weight,
            seed,
            family: Family::Random,
            owner_ratio: 0.5,
        }
    }

    pub fn family(mut self, family: Family) -> Self {
        self.family = family;
        self
    }

    pub fn owner_ratio(mut self, ratio: f64) -> Self {
        self.owner_ratio = ratio;
        self
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |msg: String| Err(GenError::BadSpec(msg));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.m < self.n {
            return bad(format!("m = {} is below n = {}", self.m, self.n));
        }
        if !(1..=MAX_ABS_WEIGHT).contains(&self.max_abs_weight) {
            return bad(format!("maxAbsWeight = {} is outside 1..=2^40", self.max_abs_weight));
        }
        if !(0.0..=1.0).contains(&self.owner_ratio) {
            return bad(format!("owner ratio {} is outside [0, 1]", self.owner_ratio));
        }
        if self.family == Family::Bipartite && self.n < 2 {
            return bad("BIPARTITE needs n >= 2".into());
        }
        Ok(())
    }
}

struct Builder<'a> {
    spec: &'a GenSpec,
    rng: SplitMix64,
    owners: Vec<Owner>,
    edges: Vec<Edge>,
}

impl Builder<'_> {
    fn weight(&mut self) -> i64 {
        let w = self.spec.max_abs_weight;
        self.rng.range_i64(-w, w)
    }

    fn random_owners(&mut self) {
        let ratio = self.spec.owner_ratio;
        self.owners = (0..self.spec.n)
            .map(|_| if self.rng.unit() < ratio { Owner::Max } else { Owner::Min })
            .collect();
    }

    fn random_edge_from(&mut self, src: VertexId) {
        let dst = self.rng.index(self.spec.n);
        let weight = self.weight();
        self.edges.push(Edge::new(src, dst, weight));
    }

    fn fill_random(&mut self) {
        while self.edges.len() < self.spec.m {
            let src = self.rng.index(self.spec.n);
            self.random_edge_from(src);
        }
    }

    fn random(&mut self) {
        self.random_owners();
        for v in 0..self.spec.n {
            self.random_edge_from(v);
        }
        self.fill_random();
    }

    /// Vertex 0 carries a negative self-loop; every other vertex `i` has a
    /// zero edge to `i - 1`.
    fn chain(&mut self) {
        self.random_owners();
        let w = self.spec.max_abs_weight;
        let core = self.rng.range_i64(-w, -1);
        self.edges.push(Edge::new(0, 0, core));
        for v in 1..self.spec.n {
            self.edges.push(Edge::new(v, v - 1, 0));
        }
        self.fill_random();
    }

    /// Min vertices first, then Max vertices; every edge crosses sides.
    fn bipartite(&mut self) {
        let n = self.spec.n;
        let maxes = ((self.spec.owner_ratio * n as f64).round() as usize).clamp(1, n - 1);
        let mins = n - maxes;
        self.owners = (0..n).map(|v| if v < mins { Owner::Min } else { Owner::Max }).collect();
        let across = |rng: &mut SplitMix64, src: VertexId| {
            if src < mins {
                mins + rng.index(maxes)
            } else {
                rng.index(mins)
            }
        };
        for v in 0..n {
            let dst = across(&mut self.rng, v);
            let weight = self.weight();
            self.edges.push(Edge::new(v, dst, weight));
        }
        while self.edges.len() < self.spec.m {
            let src = self.rng.index(n);
            let dst = across(&mut self.rng, src);
            let weight = self.weight();
            self.edges.push(Edge::new(src, dst, weight));
        }
    }

    /// Disjoint cycles covering all vertices, with sums alternately negative
    /// and positive.
    fn cycle_mix(&mut self) {
        self.random_owners();
        let n = self.spec.n;
        let w = self.spec.max_abs_weight;
        let longest = (n / 4).max(2);
        let mut start = 0;
        let mut sign = -1i64;
        while start < n {
            let len = 1 + self.rng.index(longest.min(n - start));
            let mut weights: Vec<i64> = (0..len).map(|_| self.weight()).collect();
            let sum: i64 = weights.iter().sum();
            if sum.signum() == -sign {
                weights.iter_mut().for_each(|x| *x = -*x);
            } else if sum == 0 {
                let i = weights.iter().position(|&x| x * sign < w).expect("some edge below the bound");
                weights[i] += sign;
            }
            for (i, weight) in weights.into_iter().enumerate() {
                let v = start + i;
                let next = if i + 1 == len { start } else { v + 1 };
                self.edges.push(Edge::new(v, next, weight));
            }
            start += len;
            sign = -sign;
        }
        self.fill_random();
    }
}

/// Builds a sinkless game from `spec`; the same spec always gives the same
/// game.
pub fn generate(spec: &GenSpec) -> Result<GameGraph, GenError> {
    spec.validate()?;
    let mut b = Builder {
        spec,
        rng: SplitMix64::new(spec.seed),
        owners: Vec::new(),
        edges: Vec::with_capacity(spec.m),
    };
    match spec.family {
        Family::Random => b.random(),
        Family::Chain => b.chain(),
        Family::Bipartite => b.bipartite(),
        Family::CycleMix => b.cycle_mix(),
    }
    Ok(GameGraph::new(b.owners, b.edges)?)
}

/// [`generate`] followed by [`lift_to_simple`]. Fails when the lifted weights
/// could exceed the input cap.
pub fn generate_simple(spec: &GenSpec) -> Result<GameGraph, GenError> {
    spec.validate()?;
    let bound = (spec.n as i128 + 1) * spec.max_abs_weight as i128 + 1;
    if bound > MAX_ABS_WEIGHT as i128 {
        return Err(GenError::Overflow {
            bound,
            cap: MAX_ABS_WEIGHT,
        });
    }
    Ok(lift_to_simple(&generate(spec)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::check_simple;

    #[test]
    fn splitmix_reference_values() {
        let mut rng = SplitMix64::new(1234567);
        let got: Vec<u64> = (0..3).map(|_| rng.next_u64()).collect();
        assert_eq!(got, vec![6457827717110365317, 3203168211198807973, 9817491932198370423]);
    }

    #[test]
    fn deterministic() {
        for family in Family::ALL {
            let spec = GenSpec::new(6, 14, 9, 42).family(family);
            assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        }
    }

    #[test]
    fn chain_shape() {
        let g = generate(&GenSpec::new(5, 5, 10, 3).family(Family::Chain)).unwrap();
        let zeros = g.edges().iter().filter(|e| e.weight == 0).count();
        let loops: Vec<_> = g.edges().iter().filter(|e| e.src == e.dst).collect();
        assert_eq!(zeros, 4);
        assert_eq!(loops.len(), 1);
        assert!(loops[0].weight < 0);
    }

    #[test]
    fn bipartite_edges_cross() {
        let g = generate(&GenSpec::new(7, 20, 5, 9).family(Family::Bipartite)).unwrap();
        for e in g.edges() {
            assert_ne!(g.owner(e.src), g.owner(e.dst));
        }
    }

    #[test]
    fn cycle_mix_plants_signed_cycles() {
        let spec = GenSpec::new(12, 12, 3, 5).family(Family::CycleMix);
        let g = generate(&spec).unwrap();
        assert_eq!(g.m(), 12);
        let mut seen = [false; 12];
        let mut sign = -1;
        for start in 0..12 {
            if seen[start] {
                continue;
            }
            let mut v = start;
            let mut sum = 0;
            loop {
                seen[v] = true;
                let e = g.edge(g.out_edges(v)[0]);
                sum += e.weight;
                v = e.dst;
                if v == start {
                    break;
                }
            }
            assert_eq!(sum.signum(), sign);
            sign = -sign;
        }
    }

    #[test]
    fn simple_weights_for_n2() {
        for seed in 0..20 {
            let g = generate_simple(&GenSpec::new(2, 4, 1, seed)).unwrap();
            assert!(g.edges().iter().all(|e| [-4, -1, 2].contains(&e.weight)));
            assert!(check_simple(&g).unwrap());
        }
    }

    #[test]
    fn bad_specs() {
        assert!(matches!(generate(&GenSpec::new(3, 2, 1, 0)), Err(GenError::BadSpec(_))));
        assert!(matches!(generate(&GenSpec::new(3, 3, 0, 0)), Err(GenError::BadSpec(_))));
        assert!(matches!(
            generate(&GenSpec::new(1, 1, 1, 0).family(Family::Bipartite)),
            Err(GenError::BadSpec(_))
        ));
        assert!(matches!(
            generate_simple(&GenSpec::new(10, 10, 1 << 38, 0)),
            Err(GenError::Overflow { .. })
        ));
    }

    #[test]
    fn family_names_round_trip() {
        for family in Family::ALL {
            assert_eq!(family.to_string().parse::<Family>().unwrap(), family);
        }
        assert_eq!("cycle-mix".parse::<Family>().unwrap(), Family::CycleMix);
    }
}
