use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use supermart::certificates::symbolic::expand_cases;
use supermart::certificates::{finite, Lev};
use supermart::model::json::parse_system;
use supermart::model::FiniteChain;
use supermart::oracle::almost_sure_parity;
use supermart::oracle::testing::{all_rows, random_chain};
use supermart::pqe::Backend;
use supermart::synthesis::{
    brute_force_map_exists, build_constraints, synthesize, synthesize_finite, SynthesisResult, Templates, TemplateConfig,
};

fn found(chain: &FiniteChain) -> bool {
    matches!(synthesize_finite(chain, None).expect("no backend failure").0, SynthesisResult::Found(_))
}

#[test]
fn agrees_with_brute_force_on_all_two_state_chains() {
    let rows = all_rows(2);
    for r0 in &rows {
        for r1 in &rows {
            for p0 in 1..=4 {
                for p1 in 1..=4 {
                    let c = FiniteChain::new(vec![r0.clone(), r1.clone()], vec![p0, p1]).unwrap();
                    assert_eq!(found(&c), brute_force_map_exists(&c, 2), "{c:?}");
                }
            }
        }
    }
}

#[test]
fn brute_force_maps_are_found_on_random_chains() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..150 {
        let c = random_chain(&mut rng, 4, 4);
        if brute_force_map_exists(&c, 2) {
            assert!(found(&c), "{c:?}");
        }
    }
}

#[test]
fn all_even_chain_gets_stars_in_one_round_per_block() {
    let c = FiniteChain::new(
        vec![vec![(1, supermart::rational::int(1))], vec![(0, supermart::rational::int(1))]],
        vec![4, 4],
    )
    .unwrap();
    let (res, trace) = synthesize_finite(&c, None).unwrap();
    let SynthesisResult::Found(map) = res else { panic!("all-even chain has a map") };
    assert_eq!(map.shape, vec![1, 1]);
    assert!(map.lev.values().all(|l| *l == Lev::Star), "{map:?} {trace:?}");
    assert_eq!(trace.rounds.len(), 2);
    assert!(trace.rounds.iter().all(|r| r.removed.is_empty()));
}

#[test]
fn every_block_ends_with_an_unproductive_round() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let c = random_chain(&mut rng, 6, 5);
        let (res, trace) = synthesize_finite(&c, None).unwrap();
        let blocks = match res {
            SynthesisResult::Found(m) => m.shape.len(),
            SynthesisResult::NotFound { j, .. } => j,
        };
        for j in 1..=blocks {
            let rounds: Vec<_> = trace.rounds.iter().filter(|r| r.j == j).collect();
            assert!(!rounds.is_empty() && rounds.len() <= c.len() + 1);
            assert!(rounds.last().unwrap().removed.is_empty());
            assert!(rounds[..rounds.len() - 1].iter().all(|r| !r.removed.is_empty()));
        }
    }
}

const WALK: &str = r#"{"vars":["x"],"locations":["l"],
    "commands":{"l":[{"guard":["x >= 1"],"branches":[{"target":"l","update":["x - 1"]}]},
                     {"guard":["x < 1"],"branches":[{"target":"l"}]}]},
    "max_priority":4,
    "invariant":{"l":["x >= 0"]},
    "partition":[{"location":"l","priority":3,"guard":["x >= 1"]},
                 {"location":"l","priority":4,"guard":["x < 1"]}]}"#;

#[test]
fn empty_active_set_leaves_only_non_negativity() {
    let sys = parse_system(WALK).unwrap();
    let cases = expand_cases(&sys.pcfg, &sys.partition);
    let t = Templates::new(&sys, 1);
    let cons = build_constraints(&sys, &cases, &BTreeSet::new(), &t);
    assert!(cons.c1.is_empty());
    assert_eq!(cons.c0.len(), sys.partition.regions.len());
    assert!(cons.c0.iter().all(|p| p.label.starts_with("nonneg")));

    let all: BTreeSet<_> = sys.partition.keys().into_iter().collect();
    let cons = build_constraints(&sys, &cases, &all, &t);
    assert_eq!(cons.c1.len(), cases.len());
}

#[test]
fn symbolic_walk_map_is_checked() {
    let sys = parse_system(WALK).unwrap();
    for optimise in [true, false] {
        let config = TemplateConfig { optimise, ..TemplateConfig::default() };
        let (res, _) = synthesize(&sys, &config, &Backend::ExactLp).unwrap();
        let SynthesisResult::Found(map) = res else { panic!("walk terminates") };
        assert!(supermart::certificates::symbolic::check_lexpmsm_map(&sys, &map).is_accept());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn synthesised_maps_are_sound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_chain(&mut rng, 6, 6);
        if let SynthesisResult::Found(map) = synthesize_finite(&c, None).unwrap().0 {
            prop_assert!(finite::check_lexpmsm_map(&c, &map).is_accept());
            prop_assert!(almost_sure_parity(&c).iter().all(|&b| b));
        }
    }
}
