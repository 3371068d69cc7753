mod common;

use std::collections::BTreeSet;

use common::oracle;
use rand::Rng;
use routing_aos::neighborhood::{apply_move, enumerate_moves, local_search, ActionSet, OperatorId};
use routing_aos::rng::rng_from_seed;
use routing_aos::vrp::{is_feasible, Solution};

type Routes = Vec<Vec<usize>>;

/// Same tours up to route order and direction.
fn tour_key(routes: &Routes) -> Routes {
    let mut key: Routes = routes
        .iter()
        .map(|r| {
            let rev: Vec<usize> = r.iter().rev().copied().collect();
            r.clone().min(rev)
        })
        .collect();
    key.sort();
    key
}

#[test]
fn enumerated_neighbors_equal_brute_force_sets() {
    let mut rng = rng_from_seed(11);
    let actions = ActionSet::default_set();
    for case in 0..40 {
        let n = rng.gen_range(4..=8);
        let k = rng.gen_range(1..=3);
        let (inst, routes) = common::small_case(&mut rng, n, k);
        let sol = Solution::from_routes(&inst, routes.clone()).unwrap();
        let same = tour_key(&routes);
        for op in actions.iter() {
            let ours: BTreeSet<Routes> = enumerate_moves(&inst, &sol, op)
                .iter()
                .map(|mv| apply_move(&inst, &sol, mv).unwrap().into_routes())
                .filter(|r| tour_key(r) != same)
                .collect();
            let theirs: BTreeSet<Routes> = oracle::neighbors(&inst, &routes, op.id())
                .into_iter()
                .filter(|r| tour_key(r) != same)
                .collect();
            assert_eq!(ours, theirs, "case {case} operator {}", op.id());
        }
    }
}

#[test]
fn moves_are_feasible_and_deltas_exact() {
    let mut rng = rng_from_seed(12);
    let actions = ActionSet::default_set();
    for _ in 0..30 {
        let n = rng.gen_range(5..=12);
        let k = rng.gen_range(1..=4);
        let (inst, routes) = common::small_case(&mut rng, n, k);
        let sol = Solution::from_routes(&inst, routes).unwrap();
        for op in actions.iter() {
            for mv in enumerate_moves(&inst, &sol, op) {
                let next = apply_move(&inst, &sol, &mv).unwrap();
                assert!(is_feasible(&inst, &next).is_feasible());
                let exact = oracle::cost(&inst, &next.routes().to_vec());
                assert!((sol.cost() + mv.delta - exact).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn local_search_matches_brute_force_minimum() {
    let mut rng = rng_from_seed(13);
    for _ in 0..30 {
        let n = rng.gen_range(4..=8);
        let k = rng.gen_range(1..=3);
        let (inst, routes) = common::small_case(&mut rng, n, k);
        let sol = Solution::from_routes(&inst, routes.clone()).unwrap();
        for id in OperatorId::default_set() {
            let op = routing_aos::neighborhood::OperatorRegistry::standard().build(id);
            let got = local_search(&inst, &sol, op.as_ref());
            let want = oracle::best_improvement_cost(&inst, &routes, id, 1e-9);
            assert!((got.cost() - want).abs() <= 1e-9, "{id}: {} vs {want}", got.cost());
            assert!(got.cost() <= sol.cost());
        }
    }
}

#[test]
fn enumeration_order_is_reproducible() {
    let mut rng = rng_from_seed(14);
    let (inst, routes) = common::small_case(&mut rng, 8, 3);
    let sol = Solution::from_routes(&inst, routes).unwrap();
    for op in ActionSet::default_set().iter() {
        assert_eq!(enumerate_moves(&inst, &sol, op), enumerate_moves(&inst, &sol, op));
    }
}
