use std::collections::VecDeque;

use crate::game::{ExtendedInt, GameGraph, Owner};

/// Least fixpoint of `L(v) = max(0, opt(w + L(v')))`, `opt` being min at Min
/// vertices and max at Max vertices. Values above `(n-1)N` become `+inf`.
pub fn value_iteration_en_plus(g: &GameGraph) -> Vec<ExtendedInt> {
    value_iteration_en_plus_counted(g).0
}

/// As [`value_iteration_en_plus`], also returning the number of lifts made.
pub fn value_iteration_en_plus_counted(g: &GameGraph) -> (Vec<ExtendedInt>, u64) {
    use ExtendedInt::{Finite, PosInf};

    let n = g.n();
    let cap = (n as i128 - 1) * g.max_abs_weight() as i128;
    let mut value = vec![Finite(0); n];
    let mut queued = vec![true; n];
    let mut work: VecDeque<usize> = g.vertices().collect();
    let mut lifts = 0u64;

    while let Some(v) = work.pop_front() {
        queued[v] = false;
        if value[v] == PosInf {
            continue;
        }
        let candidates = g.out_edges(v).iter().map(|&e| {
            let edge = g.edge(e);
            match value[edge.dst] {
                Finite(x) => Finite(x + edge.weight),
                other => other,
            }
        });
        let best = match g.owner(v) {
            Owner::Min => candidates.min(),
            Owner::Max => candidates.max(),
        }
        .expect("sinkless game");
        let next = match best.max(Finite(0)) {
            Finite(x) if x as i128 > cap => PosInf,
            other => other,
        };
        if next > value[v] {
            value[v] = next;
            lifts += 1;
            for &e in g.in_edges(v) {
                let u = g.edge(e).src;
                if !queued[u] {
                    queued[u] = true;
                    work.push_back(u);
                }
            }
        }
    }
    (value, lifts)
}

/// Greatest fixpoint of `L(v) = min(0, opt(w + L(v')))`; values below
/// `-(n-1)N` become `-inf`. Computed as the negated En+ of the dual game.
pub fn value_iteration_en_minus(g: &GameGraph) -> Vec<ExtendedInt> {
    value_iteration_en_minus_counted(g).0
}

pub fn value_iteration_en_minus_counted(g: &GameGraph) -> (Vec<ExtendedInt>, u64) {
    let (values, lifts) = value_iteration_en_plus_counted(&g.dual());
    (values.into_iter().map(ExtendedInt::negated).collect(), lifts)
}
