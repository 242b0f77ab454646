mod common;

use proptest::prelude::*;

use gkk_core::baselines::{
    check_optimal_paths, check_simple, oracle_partition, oracle_solve, value_iteration_en_minus,
    value_iteration_en_plus, DEFAULT_N_LIMIT,
};
use gkk_core::layers::{alpha_encoding, parity_consistent, Side};
use gkk_core::{
    alternation_depths, apply_potential, compute_deltas, compute_partition, extremal_weight, gkk_step,
    lift_to_simple, sign_sets, solve, Edge, ExtendedInt, GameGraph, Mode, MpSign, Owner, Potential, VertexId,
};

fn game(max_n: usize, max_deg: usize, max_w: i64) -> impl Strategy<Value = GameGraph> {
    (1..=max_n).prop_flat_map(move |n| {
        let owners = prop::collection::vec(prop::bool::ANY, n);
        let out = prop::collection::vec(prop::collection::vec((0..n, -max_w..=max_w), 1..=max_deg), n);
        (owners, out).prop_map(|(owners, out)| {
            let owners = owners
                .into_iter()
                .map(|max| if max { Owner::Max } else { Owner::Min })
                .collect();
            let edges = out
                .into_iter()
                .enumerate()
                .flat_map(|(v, es)| es.into_iter().map(move |(d, w)| Edge::new(v, d, w)))
                .collect();
            GameGraph::new(owners, edges).unwrap()
        })
    })
}

fn game_and_potential(max_n: usize) -> impl Strategy<Value = (GameGraph, Vec<i64>, Vec<i64>)> {
    game(max_n, 3, 6).prop_flat_map(|g| {
        let n = g.n();
        (
            Just(g),
            prop::collection::vec(0..50i64, n),
            prop::collection::vec(0..50i64, n),
        )
    })
}

/// A cycle of `g` found by following `choice[v] % out_degree(v)` from `start`.
fn some_cycle(g: &GameGraph, choice: &[usize], start: VertexId) -> Vec<usize> {
    let mut seen = vec![usize::MAX; g.n()];
    let mut path = Vec::new();
    let mut v = start;
    while seen[v] == usize::MAX {
        seen[v] = path.len();
        let e = g.out_edges(v)[choice[v] % g.out_degree(v)];
        path.push(e);
        v = g.edge(e).dst;
    }
    path.split_off(seen[v])
}

/// Games obtained along a solver run, starting with `g` itself.
fn run_games(g: &GameGraph) -> Vec<GameGraph> {
    let mut games = vec![g.clone()];
    loop {
        let cur = games.last().unwrap();
        let part = compute_partition(cur);
        let db = compute_deltas(cur, &part).unwrap();
        if !db.delta.is_finite() {
            return games;
        }
        let next = gkk_step(cur, &part, &db).unwrap().1;
        games.push(next);
    }
}

/// Minimal alternation number over all zero paths from each vertex of `N*`
/// to `N` inside `N*`, by enumeration.
fn brute_depths(g: &GameGraph) -> Vec<Option<usize>> {
    let part = compute_partition(g);
    let neg = sign_sets(g).negative;
    let n = g.n();

    fn alternations(g: &GameGraph, path: &[VertexId], neg: &gkk_core::VertexSet) -> usize {
        let mut i = path.len();
        while i > 0 && neg.contains(path[i - 1]) {
            i -= 1;
        }
        let mut block = 0;
        for &v in path[..i].iter().rev() {
            if block == 0 {
                block = 1;
            }
            let want = if block % 2 == 1 { Owner::Max } else { Owner::Min };
            if g.owner(v) != want {
                block += 1;
            }
        }
        block
    }

    fn walk(
        g: &GameGraph,
        path: &mut Vec<VertexId>,
        on_path: &mut [bool],
        part: &gkk_core::SignPartition,
        neg: &gkk_core::VertexSet,
        best: &mut Option<usize>,
    ) {
        let v = *path.last().unwrap();
        if neg.contains(v) {
            let alt = alternations(g, path, neg);
            *best = Some(best.map_or(alt, |b| b.min(alt)));
        }
        for &e in g.out_edges(v) {
            let edge = g.edge(e);
            if edge.weight == 0 && part.n_star.contains(edge.dst) && !on_path[edge.dst] {
                on_path[edge.dst] = true;
                path.push(edge.dst);
                walk(g, path, on_path, part, neg, best);
                path.pop();
                on_path[edge.dst] = false;
            }
        }
    }

    (0..n)
        .map(|v| {
            if !part.n_star.contains(v) {
                return None;
            }
            let mut best = None;
            let mut on_path = vec![false; n];
            on_path[v] = true;
            walk(g, &mut vec![v], &mut on_path, &part, &neg, &mut best);
            best
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn potentials_preserve_cycle_sums((g, phi, choice) in game_and_potential(7), start in 0usize..7) {
        let start = start % g.n();
        let choice: Vec<usize> = choice.iter().map(|&c| c as usize).collect();
        let reweighted = apply_potential(&g, &Potential::new(phi).unwrap()).unwrap();
        let cycle = some_cycle(&g, &choice, start);
        let before: i64 = cycle.iter().map(|&e| g.weight(e)).sum();
        let after: i64 = cycle.iter().map(|&e| reweighted.weight(e)).sum();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn potentials_compose((g, a, b) in game_and_potential(7)) {
        let pa = Potential::new(a).unwrap();
        let pb = Potential::new(b).unwrap();
        let twice = apply_potential(&apply_potential(&g, &pa).unwrap(), &pb).unwrap();
        let once = apply_potential(&g, &pa.checked_add(&pb).unwrap()).unwrap();
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn lifted_games_are_simple(g in game(8, 3, 5)) {
        prop_assert!(check_simple(&lift_to_simple(&g).unwrap()).unwrap());
    }

    #[test]
    fn extremal_weight_is_an_optimal_edge(g in game(7, 4, 9)) {
        for v in g.vertices() {
            let ws: Vec<i64> = g.out_edges(v).iter().map(|&e| g.weight(e)).collect();
            let x = extremal_weight(&g, v);
            prop_assert!(ws.contains(&x));
            match g.owner(v) {
                Owner::Min => prop_assert_eq!(x, *ws.iter().min().unwrap()),
                Owner::Max => prop_assert_eq!(x, *ws.iter().max().unwrap()),
            }
        }
    }

    #[test]
    fn partition_matches_naive_fixpoint(g in game(8, 3, 4)) {
        for h in run_games(&lift_to_simple(&g).unwrap()) {
            let part = compute_partition(&h);
            let (n_star, p_star) = oracle_partition(&h);
            prop_assert_eq!(&part.n_star, &n_star);
            prop_assert_eq!(&part.p_star, &p_star);
        }
    }

    #[test]
    fn solver_matches_oracle_on_small_games(g in game(4, 2, 3)) {
        let lifted = lift_to_simple(&g).unwrap();
        let out = common::check_instance(&lifted, true, true);
        prop_assert_eq!(out.oracle.clone().unwrap(), Ok(()));
        prop_assert_eq!(&out.value_iteration, &Ok(()));
        prop_assert_eq!(&out.bounds, &Ok(()));
        prop_assert_eq!(&out.certificate, &Ok(()));
        let report = out.trace.as_ref().unwrap();
        for name in [
            "sign_sets_shrink",
            "layer_lex_growth",
            "potential_on_sign_sets",
            "delta_sum_consistency",
            "k_non_increasing",
            "trace_step_count",
            "energy_step_bound",
            "generic_bound",
            "same_k_budget",
        ] {
            prop_assert!(report.check(name).unwrap().passed, "{}", report);
        }
    }

    #[test]
    fn solver_matches_value_iteration(g in game(12, 4, 8)) {
        let lifted = lift_to_simple(&g).unwrap();
        let out = common::check_instance(&lifted, false, false);
        prop_assert_eq!(&out.value_iteration, &Ok(()));
        prop_assert_eq!(&out.bounds, &Ok(()));
        prop_assert_eq!(&out.certificate, &Ok(()));
    }

    #[test]
    fn value_iteration_matches_oracle(g in game(4, 2, 3)) {
        let sol = oracle_solve(&g, DEFAULT_N_LIMIT).unwrap();
        let en_plus = value_iteration_en_plus(&g);
        prop_assert_eq!(&en_plus, &sol.en_plus);
        prop_assert_eq!(value_iteration_en_minus(&g), sol.en_minus);
        for v in g.vertices() {
            prop_assert_eq!(en_plus[v].is_finite(), sol.mean_payoff[v].sum <= 0);
        }
    }

    #[test]
    fn first_step_potential_is_bi_safe(g in game(4, 2, 3)) {
        prop_assert_eq!(common::first_step_properties(&lift_to_simple(&g).unwrap()), Ok(()));
    }

    #[test]
    fn optimal_strategy_paths(g in game(4, 2, 3)) {
        prop_assert!(check_optimal_paths(&lift_to_simple(&g).unwrap(), DEFAULT_N_LIMIT).unwrap());
    }

    #[test]
    fn general_mode_negative_side_is_exact(g in game(4, 2, 2)) {
        let res = solve(&g, Mode::General, false).unwrap();
        let sol = oracle_solve(&g, DEFAULT_N_LIMIT).unwrap();
        prop_assert!(res.values.en_minus.is_none());
        for v in g.vertices() {
            if res.final_partition.n_star.contains(v) {
                prop_assert_eq!(res.values.mp_sign[v], MpSign::Neg);
                prop_assert_eq!(res.values.en_plus[v], sol.en_plus[v]);
                prop_assert!(sol.mean_payoff[v].sum <= 0);
            } else {
                prop_assert_eq!(res.values.en_plus[v], ExtendedInt::PosInf);
                prop_assert!(sol.mean_payoff[v].sum >= 0);
            }
        }
    }

    #[test]
    fn layers_are_well_formed(g in game(9, 3, 3)) {
        let lifted = lift_to_simple(&g).unwrap();
        let n = lifted.n();
        for h in run_games(&lifted) {
            let part = compute_partition(&h);
            let sets = sign_sets(&h);
            for side in [Side::Negative, Side::Positive] {
                let dec = alternation_depths(&h, &part, side).unwrap();
                let region = if side == Side::Negative { &part.n_star } else { &part.p_star };
                prop_assert!(parity_consistent(&h, &dec));
                for v in 0..n {
                    prop_assert_eq!(dec.alt_depth[v].is_some(), region.contains(v));
                    prop_assert!(dec.alt_depth[v].is_none_or(|d| d <= n));
                }
                let covered: usize = dec.layers.iter().map(Vec::len).sum();
                prop_assert_eq!(covered, region.len());
            }
            let neg = alternation_depths(&h, &part, Side::Negative).unwrap();
            let k = sets.negative.len() + sets.positive.len();
            let alpha = alpha_encoding(&neg.layer_sizes(), part.p_star.len() - sets.positive.len());
            prop_assert_eq!(alpha.width, n - k + 1);
        }
    }

    #[test]
    fn depths_match_path_enumeration(g in game(7, 3, 3)) {
        for h in run_games(&lift_to_simple(&g).unwrap()) {
            let part = compute_partition(&h);
            let dec = alternation_depths(&h, &part, Side::Negative).unwrap();
            prop_assert_eq!(dec.alt_depth, brute_depths(&h));
        }
    }

    #[test]
    fn positive_depths_are_dual(g in game(7, 3, 3)) {
        for h in run_games(&lift_to_simple(&g).unwrap()) {
            let part = compute_partition(&h);
            let pos = alternation_depths(&h, &part, Side::Positive).unwrap();
            let dual = h.dual();
            let dual_part = compute_partition(&dual);
            prop_assert_eq!(&dual_part.n_star, &part.p_star);
            prop_assert_eq!(pos.alt_depth, brute_depths(&dual));
        }
    }
}
