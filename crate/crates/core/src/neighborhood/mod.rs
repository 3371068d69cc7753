//! Local-search operators, best-improvement search and the shake perturbation.

mod inter;
mod intra;
mod moves;
mod operator;
mod registry;

use rand::Rng as _;
use thiserror::Error;

use crate::rng::Rng;
use crate::vrp::{Instance, Solution};

pub use inter::{Cross, CyclicExchange3, SegmentExchange, SegmentTransfer, TwoOptInter};
pub use intra::{SegmentRelocateIntra, SwapIntra, TwoOptIntra};
pub use moves::{apply_move, Move, MoveKind};
pub use operator::OperatorId;
pub use registry::{ActionSet, OperatorRegistry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeighborhoodError {
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("operator `{0}` listed twice")]
    DuplicateOperator(String),
    #[error("operator set is empty")]
    EmptyActionSet,
    #[error("invalid move: {0}")]
    InvalidMove(String),
}

/// A local-search operator: enumerates every feasible neighbor of a solution
/// in a fixed canonical order.
pub trait Neighborhood: Send + Sync {
    fn id(&self) -> OperatorId;

    fn for_each_move(&self, inst: &Instance, sol: &Solution, visit: &mut dyn FnMut(Move));

    fn count_moves(&self, inst: &Instance, sol: &Solution) -> usize {
        let mut n = 0;
        self.for_each_move(inst, sol, &mut |_| n += 1);
        n
    }
}

pub fn enumerate_moves(inst: &Instance, sol: &Solution, op: &dyn Neighborhood) -> Vec<Move> {
    let mut out = Vec::new();
    op.for_each_move(inst, sol, &mut |m| out.push(m));
    out
}

/// The lowest-delta move, earliest in canonical order on ties.
pub fn best_move(inst: &Instance, sol: &Solution, op: &dyn Neighborhood) -> Option<Move> {
    let mut best: Option<Move> = None;
    op.for_each_move(inst, sol, &mut |m| {
        if best.is_none_or(|b| m.delta < b.delta) {
            best = Some(m);
        }
    });
    best
}

/// Best-improvement step: the best neighbor if it is strictly better than
/// `sol`, otherwise `sol` itself.
pub fn local_search(inst: &Instance, sol: &Solution, op: &dyn Neighborhood) -> Solution {
    let tol = inst.convention().improvement_tolerance();
    match best_move(inst, sol, op) {
        Some(mv) if mv.delta < -tol => apply_move(inst, sol, &mv).expect("enumerated move applies"),
        _ => sol.clone(),
    }
}

/// Draws a uniformly random move from `op`'s neighborhood.
pub fn random_move(inst: &Instance, sol: &Solution, op: &dyn Neighborhood, rng: &mut Rng) -> Option<Move> {
    let count = op.count_moves(inst, sol);
    if count == 0 {
        return None;
    }
    let target = rng.gen_range(0..count);
    let mut seen = 0;
    let mut chosen = None;
    op.for_each_move(inst, sol, &mut |m| {
        if seen == target {
            chosen = Some(m);
        }
        seen += 1;
    });
    chosen
}

/// One random move from a uniformly drawn operator, applied whatever its cost.
/// Operators with empty neighborhoods are redrawn up to `|actions|` times;
/// after that `sol` is returned unchanged.
pub fn shake(inst: &Instance, sol: &Solution, actions: &ActionSet, rng: &mut Rng) -> Solution {
    for _ in 0..actions.len() {
        let op = actions.get(rng.gen_range(0..actions.len()));
        if let Some(mv) = random_move(inst, sol, op, rng) {
            return apply_move(inst, sol, &mv).expect("enumerated move applies");
        }
    }
    sol.clone()
}

/// Escape step applied when the search stalls.
pub trait Perturbation: Send {
    fn perturb(&mut self, inst: &Instance, sol: &Solution, actions: &ActionSet, rng: &mut Rng) -> Solution;
}

/// `strength` consecutive [`shake`]s.
#[derive(Clone, Copy, Debug)]
pub struct RandomShake {
    pub strength: usize,
}

impl Default for RandomShake {
    fn default() -> Self {
        RandomShake { strength: 1 }
    }
}

impl Perturbation for RandomShake {
    fn perturb(&mut self, inst: &Instance, sol: &Solution, actions: &ActionSet, rng: &mut Rng) -> Solution {
        let mut cur = sol.clone();
        for _ in 0..self.strength {
            cur = shake(inst, &cur, actions, rng);
        }
        cur
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::vrp::{generate_instance, initial_solution, is_feasible, objective, DistanceConvention, SizeClass};

    fn square() -> (Instance, Solution) {
        let inst = Instance::new(
            "square",
            vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
            vec![0, 1, 1, 1],
            10,
            DistanceConvention::ExactEuclidean,
        )
        .unwrap();
        let sol = Solution::from_routes(&inst, vec![vec![1, 2, 3]]).unwrap();
        (inst, sol)
    }

    #[test]
    fn two_opt_uncrosses_square() {
        let (inst, sol) = square();
        let out = local_search(&inst, &sol, &TwoOptIntra);
        assert!((out.cost() - 4.0).abs() < 1e-12);
        let again = local_search(&inst, &out, &TwoOptIntra);
        assert_eq!(again, out);
    }

    #[test]
    fn two_opt_on_four_customers_has_six_moves() {
        let inst = generate_instance(4, SizeClass::Custom { capacity: 100 }, 1).unwrap();
        let sol = Solution::from_routes(&inst, vec![vec![1, 2, 3, 4]]).unwrap();
        assert_eq!(enumerate_moves(&inst, &sol, &TwoOptIntra).len(), 6);
    }

    #[test]
    fn single_customer_has_no_inter_moves_and_shake_is_identity() {
        let inst = generate_instance(1, SizeClass::Cvrp20, 0).unwrap();
        let sol = initial_solution(&inst, 0);
        assert!(enumerate_moves(&inst, &sol, &Cross).is_empty());
        let shaken = shake(&inst, &sol, &ActionSet::default_set(), &mut rng_from_seed(1));
        assert_eq!(shaken, sol);
    }

    #[test]
    fn relocate_respects_slack() {
        let inst = Instance::new(
            "full",
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            vec![0, 2, 1, 1],
            2,
            DistanceConvention::ExactEuclidean,
        )
        .unwrap();
        let sol = Solution::from_routes(&inst, vec![vec![1], vec![2, 3]]).unwrap();
        assert!(enumerate_moves(&inst, &sol, &SegmentTransfer::relocate(1)).is_empty());
        let sol = Solution::from_routes(&inst, vec![vec![1], vec![2], vec![3]]).unwrap();
        let moves = enumerate_moves(&inst, &sol, &SegmentTransfer::relocate(1));
        assert!(moves.iter().all(|m| matches!(m.kind, MoveKind::TransferSegment { to_route, .. } if to_route != 0)));
        assert_eq!(moves.len(), 4);
    }

    #[test]
    fn every_move_matches_recomputed_cost() {
        let inst = generate_instance(9, SizeClass::Custom { capacity: 15 }, 5).unwrap();
        let sol = initial_solution(&inst, 2);
        for op in ActionSet::default_set().iter() {
            for mv in enumerate_moves(&inst, &sol, op) {
                let next = apply_move(&inst, &sol, &mv).unwrap();
                let exact = objective(&inst, next.routes()).unwrap();
                assert!((next.cost() - exact).abs() < 1e-9, "{} {:?}", op.id(), mv.kind);
                assert!(is_feasible(&inst, &next).is_feasible());
            }
        }
    }

    #[test]
    fn shake_is_deterministic() {
        let inst = generate_instance(12, SizeClass::Cvrp20, 3).unwrap();
        let sol = initial_solution(&inst, 3);
        let set = ActionSet::default_set();
        let a = shake(&inst, &sol, &set, &mut rng_from_seed(9));
        let b = shake(&inst, &sol, &set, &mut rng_from_seed(9));
        assert_eq!(a, b);
    }
}
