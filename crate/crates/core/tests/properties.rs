//! Cross-module invariants: spin-form equivalence, embedding round trips,
//! clique capacity, and ground-state correspondence on random graphs.

use std::collections::BTreeMap;

use domino_core::chimera::{
    build_chimera, chain_strength, clique_bound, embed_ising, find_embedding, unembed,
    verify_embedding, ChimeraSpec, ParamRanges,
};
use domino_core::graph::{exact_domination_number, is_dominating, Graph, NodeSet};
use domino_core::reform::{
    build_bqm, to_ising, Bqm, Coeff, InteractionGraph, PenaltyConfig, SlackMode, VarId,
};
use domino_core::sa::brute_force_ground;

use proptest::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn arbitrary_bqm() -> impl Strategy<Value = Bqm> {
    (2usize..10).prop_flat_map(|n| {
        let linear = proptest::collection::vec(-8i64..8, n);
        let quad = proptest::collection::btree_map(
            (0usize..n, 0usize..n),
            -8i64..8,
            0..n * (n - 1) / 2 + 1,
        );
        let offset = -8i64..8;
        (Just(n), linear, quad, offset).prop_map(|(n, linear, quad, offset)| {
            let vars: Vec<VarId> = (0..n).map(VarId::Decision).collect();
            let linear = linear.into_iter().map(Coeff::from_integer).collect();
            let mut quadratic = BTreeMap::new();
            for ((a, b), q) in quad {
                if a != b && q != 0 {
                    quadratic.insert((a.min(b), a.max(b)), Coeff::from_integer(q));
                }
            }
            Bqm::from_parts(vars, linear, quadratic, Coeff::from_integer(offset)).unwrap()
        })
    })
}

proptest! {
    /// E_ising(1 - 2x) = E_bqm(x) exactly, for arbitrary models.
    #[test]
    fn ising_equivalence_holds_for_arbitrary_models(
        bqm in arbitrary_bqm(),
        assignment_seed in any::<u64>(),
    ) {
        let ising = to_ising(&bqm);
        let mut rng = ChaCha8Rng::seed_from_u64(assignment_seed);
        for _ in 0..32 {
            let bits: Vec<bool> = (0..bqm.num_vars()).map(|_| rng.random()).collect();
            prop_assert_eq!(
                bqm.evaluate(&bits).unwrap(),
                ising.energy_of_bits(&bits).unwrap()
            );
        }
    }

    /// The model export is deterministic and ends with the offset line.
    #[test]
    fn bqm_export_is_stable(bqm in arbitrary_bqm()) {
        let a = bqm.export_text();
        prop_assert_eq!(&a, &bqm.export_text());
        prop_assert!(a.lines().last().unwrap().starts_with("offset "));
    }
}

/// K_n embeds into (M, M, L) for every n up to the clique bound, at all
/// small sizes.
#[test]
fn cliques_embed_up_to_the_bound() {
    for m in 1..=4usize {
        for l in 1..=4usize {
            let spec = ChimeraSpec::new(m, m, l).unwrap();
            let hw = build_chimera(spec);
            let (n_max, _) = clique_bound(spec);
            for n in 1..=n_max {
                let edges: Vec<(usize, usize)> =
                    (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))).collect();
                let logical = InteractionGraph::from_pairs(n, edges);
                let e = find_embedding(&logical, &hw, 3, 10)
                    .unwrap_or_else(|| panic!("K{n} into ({m},{m},{l})"));
                let (ok, violations) = verify_embedding(&logical, &hw, &e);
                assert!(ok, "K{n} into ({m},{m},{l}): {violations:?}");
            }
            // One past the bound must be rejected by the edge bound.
            let n = n_max + 1;
            let edges: Vec<(usize, usize)> =
                (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))).collect();
            let logical = InteractionGraph::from_pairs(n, edges);
            assert!(find_embedding(&logical, &hw, 3, 10).is_none());
        }
    }
}

/// Embedding a model and unembedding a unanimous physical state recovers the
/// logical state; the physical energy matches the scaled logical energy plus
/// the chain-tree constant.
#[test]
fn embed_unembed_round_trip_on_random_graphs() {
    let hw = build_chimera(ChimeraSpec::new(3, 3, 2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut exercised = 0;
    for case in 0..40u64 {
        let n = rng.random_range(1..=4);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random_bool(0.5) {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph::from_edges(n.max(1), edges).unwrap();
        let bqm = build_bqm(&g, &PenaltyConfig::paper_default()).unwrap();
        let ising = to_ising(&bqm);
        if ising.num_vars() > 8 {
            continue;
        }
        let logical = ising.interaction_graph();
        let Some(e) = find_embedding(&logical, &hw, case, 5) else { continue };
        let j_chain = chain_strength(&ising, Coeff::new(3, 2)).max(Coeff::new(1, 2));
        let phys = embed_ising(&ising, &e, &hw, j_chain, ParamRanges::standard()).unwrap();
        let tree_constant: Coeff = e
            .chains()
            .iter()
            .map(|c| -j_chain * Coeff::from_integer(c.len() as i64 - 1))
            .sum();
        for trial in 0..8 {
            let spins: Vec<i8> = (0..ising.num_vars())
                .map(|v| if trial >> v & 1 == 1 { -1 } else { 1 })
                .collect();
            let mut sample = vec![1i8; hw.qubit_count()];
            for (var, chain) in e.chains().iter().enumerate() {
                for &q in chain {
                    sample[q] = spins[var];
                }
            }
            let (recovered, broken) = unembed(&sample, &e).unwrap();
            assert_eq!(recovered, spins);
            assert_eq!(broken, Coeff::from_integer(0));
            let physical = phys.energy(&sample).unwrap();
            let logical_energy = ising.energy(&spins).unwrap();
            assert_eq!(physical, phys.scale * (logical_energy + tree_constant));
        }
        exercised += 1;
    }
    assert!(exercised >= 20, "only {exercised} cases exercised");
}

/// Safe mode with alpha > N: every ground state's decision bits form a
/// minimum dominating set, on random graphs small enough to enumerate.
#[test]
fn ground_states_are_minimum_dominating_sets_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut checked = 0;
    for _ in 0..40 {
        let n = rng.random_range(2..=6);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random_bool(0.4) {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph::from_edges(n, edges).unwrap();
        let cfg =
            PenaltyConfig::uniform(Coeff::from_integer(n as i64 + 1), SlackMode::Safe).unwrap();
        let bqm = build_bqm(&g, &cfg).unwrap();
        if bqm.num_vars() > 22 {
            continue;
        }
        let (gamma, _) = exact_domination_number(&g, None, false).unwrap();
        let (energy, grounds) = brute_force_ground(&bqm, 22).unwrap();
        assert_eq!(energy, Coeff::from_integer(gamma as i64));
        for assignment in &grounds {
            let set = NodeSet::from_bits(&assignment[..n]);
            assert_eq!(set.len(), gamma);
            assert!(is_dominating(&g, &set).0);
        }
        checked += 1;
    }
    assert!(checked >= 20, "only {checked} cases checked");
}
