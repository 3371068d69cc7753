//! Operators that touch two or three routes. Candidates that would overload a
//! vehicle are filtered before they are visited.

use super::intra::{at_or_depot, before};
use super::{Move, MoveKind, Neighborhood, OperatorId};
use crate::vrp::{Instance, Solution};

/// Prefix demand sums: `prefix[r][i]` is the load of `route[..i]`.
fn prefix_loads(inst: &Instance, sol: &Solution) -> Vec<Vec<u32>> {
    sol.routes()
        .iter()
        .map(|route| {
            let mut acc = 0;
            std::iter::once(0)
                .chain(route.iter().map(|&c| {
                    acc += inst.demand(c);
                    acc
                }))
                .collect()
        })
        .collect()
}

fn segment_load(prefix: &[u32], start: usize, len: usize) -> u32 {
    prefix[start + len] - prefix[start]
}

/// Tail exchange between two routes.
pub struct Cross;

impl Neighborhood for Cross {
    fn id(&self) -> OperatorId {
        OperatorId::Cross
    }

    fn for_each_move(&self, inst: &Instance, sol: &Solution, visit: &mut dyn FnMut(Move)) {
        let q = inst.capacity();
        let prefix = prefix_loads(inst, sol);
        let routes = sol.routes();
        for r1 in 0..routes.len() {
            let (ra, pa) = (&routes[r1], &prefix[r1]);
            let la = *pa.last().unwrap();
            for r2 in (r1 + 1)..routes.len() {
                let (rb, pb) = (&routes[r2], &prefix[r2]);
                let lb = *pb.last().unwrap();
                for i in 0..=ra.len() {
                    let a = before(ra, i);
                    let a2 = at_or_depot(ra, i);
                    for j in 0..=rb.len() {
                        if (i == 0 && j == 0) || (i == ra.len() && j == rb.len()) {
                            continue;
                        }
                        if pa[i] + (lb - pb[j]) > q || pb[j] + (la - pa[i]) > q {
                            continue;
                        }
                        let b = before(rb, j);
                        let b2 = at_or_depot(rb, j);
                        let delta = inst.dist(a, b2) + inst.dist(b, a2) - inst.dist(a, a2) - inst.dist(b, b2);
                        visit(Move {
                            operator: OperatorId::Cross,
                            kind: MoveKind::TailSwap {
                                first: r1,
                                second: r2,
                                cut_first: i,
                                cut_second: j,
                            },
                            delta,
                        });
                    }
                }
            }
        }
    }
}

/// 2-opt across two routes: remove one arc in each and reconnect the two
/// heads together and the two tails together.
pub struct TwoOptInter;

impl Neighborhood for TwoOptInter {
    fn id(&self) -> OperatorId {
        OperatorId::TwoOptInter
    }

    fn for_each_move(&self, inst: &Instance, sol: &Solution, visit: &mut dyn FnMut(Move)) {
        let q = inst.capacity();
        let prefix = prefix_loads(inst, sol);
        let routes = sol.routes();
        for r1 in 0..routes.len() {
            let (ra, pa) = (&routes[r1], &prefix[r1]);
            let la = *pa.last().unwrap();
            for r2 in (r1 + 1)..routes.len() {
                let (rb, pb) = (&routes[r2], &prefix[r2]);
                let lb = *pb.last().unwrap();
                for i in 0..=ra.len() {
                    let a = before(ra, i);
                    let a2 = at_or_depot(ra, i);
                    for j in 0..=rb.len() {
                        // identity, and the pure reversal of both routes
                        if (i == ra.len() && j == 0) || (i == 0 && j == rb.len()) {
                            continue;
                        }
                        if pa[i] + pb[j] > q || (la - pa[i]) + (lb - pb[j]) > q {
                            continue;
                        }
                        let b = before(rb, j);
                        let b2 = at_or_depot(rb, j);
                        let delta = inst.dist(a, b) + inst.dist(a2, b2) - inst.dist(a, a2) - inst.dist(b, b2);
                        visit(Move {
                            operator: OperatorId::TwoOptInter,
                            kind: MoveKind::HeadTailReconnect {
                                first: r1,
                                second: r2,
                                cut_first: i,
                                cut_second: j,
                            },
                            delta,
                        });
                    }
                }
            }
        }
    }
}

/// Exchange of a `len_first`-segment of one route with a `len_second`-segment
/// of another. Equal lengths visit each unordered route pair once; unequal
/// lengths visit ordered pairs.
pub struct SegmentExchange {
    id: OperatorId,
    len_first: usize,
    len_second: usize,
}

impl SegmentExchange {
    pub fn symmetric(len: usize) -> Self {
        SegmentExchange {
            id: OperatorId::SymmetricSwap { len },
            len_first: len,
            len_second: len,
        }
    }

    pub fn asymmetric(first: usize, second: usize) -> Self {
        SegmentExchange {
            id: OperatorId::AsymmetricSwap { first, second },
            len_first: first,
            len_second: second,
        }
    }
}

impl Neighborhood for SegmentExchange {
    fn id(&self) -> OperatorId {
        self.id
    }

    fn for_each_move(&self, inst: &Instance, sol: &Solution, visit: &mut dyn FnMut(Move)) {
        let q = inst.capacity();
        let prefix = prefix_loads(inst, sol);
        let routes = sol.routes();
        let (m, k) = (self.len_first, self.len_second);
        let symmetric = m == k;
        for r1 in 0..routes.len() {
            let (ra, pa) = (&routes[r1], &prefix[r1]);
            if ra.len() < m {
                continue;
            }
            let la = *pa.last().unwrap();
            for r2 in 0..routes.len() {
                if r2 == r1 || (symmetric && r2 < r1) {
                    continue;
                }
                let (rb, pb) = (&routes[r2], &prefix[r2]);
                if rb.len() < k {
                    continue;
                }
                let lb = *pb.last().unwrap();
                for s1 in 0..=(ra.len() - m) {
                    let w1 = segment_load(pa, s1, m);
                    let (f1, l1) = (ra[s1], ra[s1 + m - 1]);
                    let (a, a2) = (before(ra, s1), at_or_depot(ra, s1 + m));
                    for s2 in 0..=(rb.len() - k) {
                        let w2 = segment_load(pb, s2, k);
                        if la - w1 + w2 > q || lb - w2 + w1 > q {
                            continue;
                        }
                        let (f2, l2) = (rb[s2], rb[s2 + k - 1]);
                        let (b, b2) = (before(rb, s2), at_or_depot(rb, s2 + k));
                        let delta = inst.dist(a, f2) + inst.dist(l2, a2) - inst.dist(a, f1) - inst.dist(l1, a2)
                            + inst.dist(b, f1)
                            + inst.dist(l1, b2)
                            - inst.dist(b, f2)
                            - inst.dist(l2, b2);
                        visit(Move {
                            operator: self.id,
                            kind: MoveKind::ExchangeSegments {
                                first: r1,
                                start_first: s1,
                                len_first: m,
                                second: r2,
                                start_second: s2,
                                len_second: k,
                            },
                            delta,
                        });
                    }
                }
            }
        }
    }
}

/// Moves a segment from one route into another.
pub struct SegmentTransfer {
    id: OperatorId,
    lens: Vec<usize>,
    both_orientations: bool,
}

impl SegmentTransfer {
    pub fn relocate(len: usize) -> Self {
        SegmentTransfer {
            id: OperatorId::RelocateInter { len },
            lens: vec![len],
            both_orientations: false,
        }
    }

    pub fn or_opt() -> Self {
        SegmentTransfer {
            id: OperatorId::OrOptInter,
            lens: vec![1, 2, 3],
            both_orientations: true,
        }
    }
}

impl Neighborhood for SegmentTransfer {
    fn id(&self) -> OperatorId {
        self.id
    }

    fn for_each_move(&self, inst: &Instance, sol: &Solution, visit: &mut dyn FnMut(Move)) {
        let q = inst.capacity();
        let prefix = prefix_loads(inst, sol);
        let routes = sol.routes();
        let loads = sol.loads();
        for r1 in 0..routes.len() {
            let (ra, pa) = (&routes[r1], &prefix[r1]);
            for r2 in 0..routes.len() {
                if r2 == r1 {
                    continue;
                }
                let rb = &routes[r2];
                for &len in &self.lens {
                    if ra.len() < len {
                        continue;
                    }
                    for start in 0..=(ra.len() - len) {
                        if loads[r2] + segment_load(pa, start, len) > q {
                            continue;
                        }
                        let (first, last) = (ra[start], ra[start + len - 1]);
                        let prev = before(ra, start);
                        let next = at_or_depot(ra, start + len);
                        let removal = inst.dist(prev, next) - inst.dist(prev, first) - inst.dist(last, next);
                        for to in 0..=rb.len() {
                            let c = before(rb, to);
                            let e = at_or_depot(rb, to);
                            let base = removal - inst.dist(c, e);
                            let orientations: &[bool] = if self.both_orientations && len > 1 {
                                &[false, true]
                            } else {
                                &[false]
                            };
                            for &reversed in orientations {
                                let (head, tail) = if reversed { (last, first) } else { (first, last) };
                                visit(Move {
                                    operator: self.id,
                                    kind: MoveKind::TransferSegment {
                                        from_route: r1,
                                        start,
                                        len,
                                        to_route: r2,
                                        to,
                                        reversed,
                                    },
                                    delta: base + inst.dist(c, head) + inst.dist(tail, e),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
}

/// One customer from each of three routes moves one route further along the
/// cycle, taking the place of the customer it displaces.
pub struct CyclicExchange3;

impl Neighborhood for CyclicExchange3 {
    fn id(&self) -> OperatorId {
        OperatorId::CyclicExchange3
    }

    fn for_each_move(&self, inst: &Instance, sol: &Solution, visit: &mut dyn FnMut(Move)) {
        let q = inst.capacity();
        let routes = sol.routes();
        let loads = sol.loads();
        let nr = routes.len();
        // cost change of putting `c` at position `p` of route `r` in place of
        // the current occupant
        let replace = |r: usize, p: usize, c: usize| {
            let route = &routes[r];
            let (u, v) = (before(route, p), at_or_depot(route, p + 1));
            inst.dist(u, c) + inst.dist(c, v) - inst.dist(u, route[p]) - inst.dist(route[p], v)
        };
        for r1 in 0..nr {
            for r2 in (r1 + 1)..nr {
                for r3 in (r1 + 1)..nr {
                    if r3 == r2 {
                        continue;
                    }
                    for p1 in 0..routes[r1].len() {
                        let c1 = routes[r1][p1];
                        let q1 = inst.demand(c1);
                        for p2 in 0..routes[r2].len() {
                            let c2 = routes[r2][p2];
                            let q2 = inst.demand(c2);
                            if loads[r2] - q2 + q1 > q {
                                continue;
                            }
                            for p3 in 0..routes[r3].len() {
                                let c3 = routes[r3][p3];
                                let q3 = inst.demand(c3);
                                if loads[r3] - q3 + q2 > q || loads[r1] - q1 + q3 > q {
                                    continue;
                                }
                                let delta = replace(r2, p2, c1) + replace(r3, p3, c2) + replace(r1, p1, c3);
                                visit(Move {
                                    operator: OperatorId::CyclicExchange3,
                                    kind: MoveKind::CyclicTransfer {
                                        routes: [r1, r2, r3],
                                        positions: [p1, p2, p3],
                                    },
                                    delta,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
}
