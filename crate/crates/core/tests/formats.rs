use proptest::prelude::*;

use gkk_core::baselines::check_simple;
use gkk_core::gen::{generate, generate_simple, Family, GenSpec};
use gkk_core::io::{canonicalize, parse, serialize, ResultDoc};
use gkk_core::{solve, GameGraph, Mode};

fn spec() -> impl Strategy<Value = GenSpec> {
    (1usize..9, 0usize..12, 1i64..30, any::<u64>(), 0usize..4, 0.0f64..=1.0).prop_map(
        |(n, extra, w, seed, fam, ratio)| {
            let family = Family::ALL[fam];
            let n = if family == Family::Bipartite { n.max(2) } else { n };
            GenSpec::new(n, n + extra, w, seed).family(family).owner_ratio(ratio)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn text_format_round_trips(spec in spec()) {
        let g = canonicalize(&generate(&spec).unwrap());
        let text = serialize(&g);
        prop_assert_eq!(parse(&text).unwrap(), g.clone());
        prop_assert_eq!(serialize(&parse(&text).unwrap()), text);
    }

    #[test]
    fn generated_games_are_deterministic_and_valid(spec in spec()) {
        let a = generate(&spec).unwrap();
        prop_assert_eq!(a.m(), spec.m);
        prop_assert_eq!(&a, &generate(&spec).unwrap());
        let s = generate_simple(&spec).unwrap();
        prop_assert!(s.max_abs_weight() <= (spec.n as i64 + 1) * spec.max_abs_weight + 1);
        prop_assert!(check_simple(&s).unwrap());
    }

    #[test]
    fn result_documents_round_trip(spec in spec(), general in any::<bool>(), traced in any::<bool>()) {
        let g = generate_simple(&spec).unwrap();
        let mode = if general { Mode::General } else { Mode::Simple };
        let result = solve(&g, mode, traced).unwrap();
        let doc = ResultDoc::new(&g, &result);
        let back = ResultDoc::from_json(&doc.to_json()).unwrap();
        prop_assert_eq!(&back, &doc);
        if mode == Mode::Simple {
            let meta = &doc.metadata;
            prop_assert!((meta.iterations as i128) <= meta.energy_bound);
            prop_assert!(meta.energy_bound <= meta.generic_bound);
        }
    }
}

#[test]
fn sentinels_are_exact_strings() {
    let g: GameGraph = parse("game 2\nvertex 0 MIN\nvertex 1 MAX\nedge 0 1 -1\nedge 1 0 2\n").unwrap();
    let doc = ResultDoc::new(&g, &solve(&g, Mode::Simple, false).unwrap());
    let json: serde_json::Value = serde_json::from_str(&doc.to_json()).unwrap();
    assert_eq!(json["vertices"][0]["en_plus"], "inf");
    assert_eq!(json["vertices"][0]["en_minus"], -1);
    assert_eq!(json["vertices"][1]["mp_sign"], "pos");
    assert_eq!(json["metadata"]["bound_thm3"], 4);
    assert_eq!(json["metadata"]["bound_nN"], 5);
    assert_eq!(json["metadata"]["E_plus"], 0);
    assert_eq!(json["metadata"]["E_minus"], 1);

    let loop_game = parse("game 1\nvertex 0 MIN\nedge 0 0 -1\n").unwrap();
    let doc = ResultDoc::new(&loop_game, &solve(&loop_game, Mode::Simple, false).unwrap());
    let json: serde_json::Value = serde_json::from_str(&doc.to_json()).unwrap();
    assert_eq!(json["vertices"][0]["en_minus"], "-inf");
    assert_eq!(json["vertices"][0]["mp_sign"], "neg");
}
