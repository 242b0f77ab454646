#![allow(dead_code)]

use gkk_core::baselines::{oracle_solve, value_iteration_en_minus, value_iteration_en_plus, DEFAULT_N_LIMIT};
use gkk_core::layers::{energy_step_bound, generic_step_bound, verify_trace, RunFacts, VerificationReport};
use gkk_core::{
    apply_potential, check_certificate, compute_deltas, compute_partition, gkk_step, solve, Edge, ExtendedInt,
    GameGraph, Mode, MpSign, Owner, Potential, SolveResult,
};

pub const WEIGHTS: std::ops::RangeInclusive<i64> = -3..=3;

/// Out-edge sets of one vertex: a single edge, or two distinct edges in
/// increasing `(dst, weight)` order.
pub fn edge_options(n: usize) -> Vec<Vec<(usize, i64)>> {
    let singles: Vec<(usize, i64)> = (0..n).flat_map(|d| WEIGHTS.map(move |w| (d, w))).collect();
    let mut out: Vec<Vec<(usize, i64)>> = singles.iter().map(|&e| vec![e]).collect();
    for i in 0..singles.len() {
        for j in i + 1..singles.len() {
            out.push(vec![singles[i], singles[j]]);
        }
    }
    out
}

type Encoding = Vec<(bool, Vec<(usize, i64)>)>;

fn encode(owners: &[Owner], choice: &[&Vec<(usize, i64)>], perm: &[usize]) -> Encoding {
    let n = owners.len();
    let mut enc: Encoding = vec![(false, Vec::new()); n];
    for v in 0..n {
        let mut edges: Vec<(usize, i64)> = choice[v].iter().map(|&(d, w)| (perm[d], w)).collect();
        edges.sort_unstable();
        enc[perm[v]] = (owners[v] == Owner::Max, edges);
    }
    enc
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Calls `f` once per isomorphism class of games on `n` vertices whose
/// vertices have one or two distinct out-edges with weights in `-3..=3`.
/// Returns the number of raw games covered by the classes visited.
pub fn for_each_small_game(n: usize, mut f: impl FnMut(GameGraph)) -> u64 {
    let options = edge_options(n);
    let perms = permutations(n);
    let identity: Vec<usize> = (0..n).collect();
    let mut raw = 0u64;
    for mask in 0..(1u32 << n) {
        let owners: Vec<Owner> = (0..n)
            .map(|v| if mask >> v & 1 == 1 { Owner::Max } else { Owner::Min })
            .collect();
        let mut idx = vec![0usize; n];
        loop {
            raw += 1;
            let choice: Vec<&Vec<(usize, i64)>> = idx.iter().map(|&i| &options[i]).collect();
            let base = encode(&owners, &choice, &identity);
            if perms.iter().all(|p| encode(&owners, &choice, p) >= base) {
                let edges = choice
                    .iter()
                    .enumerate()
                    .flat_map(|(v, es)| es.iter().map(move |&(d, w)| Edge::new(v, d, w)))
                    .collect();
                f(GameGraph::new(owners.clone(), edges).unwrap());
            }
            let mut k = n;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < options.len() {
                    break;
                }
                idx[k] = 0;
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    raw
}

pub fn energies_from(en_plus: &[ExtendedInt], en_minus: &[ExtendedInt]) -> (i64, i64) {
    let e_plus = en_plus.iter().filter_map(|x| x.finite()).max().unwrap_or(0);
    let e_minus = en_minus.iter().filter_map(|x| x.finite()).min().map(|x| -x).unwrap_or(0);
    (e_plus, e_minus)
}

fn compare<T: PartialEq + std::fmt::Debug>(what: &str, got: &T, want: &T) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: solver {got:?}, reference {want:?}"))
    }
}

/// Per-instance outcomes on a simple game.
pub struct Outcome {
    pub result: SolveResult,
    /// Against the brute-force oracle, when requested.
    pub oracle: Option<Result<(), String>>,
    pub value_iteration: Result<(), String>,
    /// Both step bounds, with energies from value iteration.
    pub bounds: Result<(), String>,
    pub certificate: Result<(), String>,
    pub trace: Option<VerificationReport>,
}

impl Outcome {
    pub fn all_ok(&self) -> bool {
        self.oracle.as_ref().is_none_or(|r| r.is_ok())
            && self.value_iteration.is_ok()
            && self.bounds.is_ok()
            && self.certificate.is_ok()
            && self.trace.as_ref().is_none_or(|t| t.all_passed())
    }
}

pub fn check_instance(g: &GameGraph, with_oracle: bool, traced: bool) -> Outcome {
    let result = solve(g, Mode::Simple, traced).unwrap_or_else(|e| panic!("solve failed: {e}\n{g:?}"));
    let values = &result.values;
    let en_minus = values.en_minus.clone().expect("simple mode reports dual energies");

    let oracle = with_oracle.then(|| {
        let sol = oracle_solve(g, DEFAULT_N_LIMIT).map_err(|e| e.to_string())?;
        let signs: Vec<MpSign> = sol
            .mean_payoff
            .iter()
            .map(|mp| if mp.sum < 0 { MpSign::Neg } else { MpSign::Pos })
            .collect();
        if sol.mean_payoff.iter().any(|mp| mp.sum == 0) {
            return Err("oracle found a zero mean payoff in a simple game".into());
        }
        compare("En+", &values.en_plus, &sol.en_plus)?;
        compare("En-", &en_minus, &sol.en_minus)?;
        compare("MP sign", &values.mp_sign, &signs)
    });

    let vi_plus = value_iteration_en_plus(g);
    let vi_minus = value_iteration_en_minus(g);
    let value_iteration = compare("En+", &values.en_plus, &vi_plus).and_then(|_| compare("En-", &en_minus, &vi_minus));

    let (e_plus, e_minus) = energies_from(&vi_plus, &vi_minus);
    let steps = result.iterations as i128;
    let energy = energy_step_bound(g.max_abs_weight(), e_plus, e_minus);
    let generic = generic_step_bound(g.n(), g.max_abs_weight());
    let bounds = if steps <= energy && energy <= generic {
        Ok(())
    } else {
        Err(format!("steps {steps}, N+E++E-+1 = {energy}, nN+1 = {generic}"))
    };

    let certificate = check_certificate(g, &result.potential, &result.final_partition).map_err(|e| e.to_string());

    let trace = result
        .trace
        .as_ref()
        .map(|t| verify_trace(t, RunFacts::of(g, &result), (e_plus, e_minus)));

    Outcome {
        result,
        oracle,
        value_iteration,
        bounds,
        certificate,
        trace,
    }
}

fn ext_le(a: ExtendedInt, b: ExtendedInt) -> Result<(), String> {
    if a <= b {
        Ok(())
    } else {
        Err(format!("{a} > {b}"))
    }
}

fn add(phi: i64, x: ExtendedInt) -> ExtendedInt {
    x.checked_add(ExtendedInt::Finite(phi)).expect("no overflow on small games")
}

/// First-step potential properties on a small simple game: bi-safety of
/// the GKK potential, the reweighting identities for both energies, and the
/// step-size bounds on the energies.
pub fn first_step_properties(g: &GameGraph) -> Result<(), String> {
    let part = compute_partition(g);
    let db = compute_deltas(g, &part).map_err(|e| e.to_string())?;
    let phi = if db.delta.is_finite() {
        gkk_step(g, &part, &db).map_err(|e| e.to_string())?.0
    } else {
        Potential::zero(g.n())
    };
    let shifted = phi.shifted();
    let reweighted = apply_potential(g, &phi).map_err(|e| e.to_string())?;
    let before = oracle_solve(g, DEFAULT_N_LIMIT).map_err(|e| e.to_string())?;
    let after = oracle_solve(&reweighted, DEFAULT_N_LIMIT).map_err(|e| e.to_string())?;
    for v in g.vertices() {
        let p = phi.get(v);
        let check = |what: &str, r: Result<(), String>| r.map_err(|e| format!("vertex {v}, {what}: {e}"));
        check("phi >= 0", ext_le(ExtendedInt::Finite(0), p.into()))?;
        check("phi <= En+", ext_le(p.into(), before.en_plus[v]))?;
        check("En- <= phi-", ext_le(before.en_minus[v], shifted[v].into()))?;
        check("phi- <= 0", ext_le(shifted[v].into(), ExtendedInt::Finite(0)))?;
        if add(p, after.en_plus[v]) != before.en_plus[v] {
            return Err(format!("vertex {v}: En+ {} != phi {p} + En+_phi {}", before.en_plus[v], after.en_plus[v]));
        }
        if add(shifted[v], after.en_minus[v]) != before.en_minus[v] {
            return Err(format!(
                "vertex {v}: En- {} != phi- {} + En-_phi {}",
                before.en_minus[v], shifted[v], after.en_minus[v]
            ));
        }
        if part.n_star.contains(v) && db.d_neg.is_finite() {
            check("En- <= delta- on N*", ext_le(before.en_minus[v], db.d_neg))?;
        }
        if part.p_star.contains(v) && db.d_pos.is_finite() {
            check("En+ >= delta+ on P*", ext_le(db.d_pos, before.en_plus[v]))?;
        }
    }
    Ok(())
}
