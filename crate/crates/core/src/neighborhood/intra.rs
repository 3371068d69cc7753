//! Single-route operators. Loads never change, so every candidate is feasible.

use super::{Move, MoveKind, Neighborhood, OperatorId};
use crate::vrp::{Instance, Solution};

/// Node before position `i` (the depot for `i == 0`).
#[inline]
pub(crate) fn before(route: &[usize], i: usize) -> usize {
    if i == 0 {
        0
    } else {
        route[i - 1]
    }
}

/// Node at position `i`, or the depot past the end.
#[inline]
pub(crate) fn at_or_depot(route: &[usize], i: usize) -> usize {
    route.get(i).copied().unwrap_or(0)
}

pub struct TwoOptIntra;

impl Neighborhood for TwoOptIntra {
    fn id(&self) -> OperatorId {
        OperatorId::TwoOptIntra
    }

    fn for_each_move(&self, inst: &Instance, sol: &Solution, visit: &mut dyn FnMut(Move)) {
        let op = self.id();
        for (r, route) in sol.routes().iter().enumerate() {
            let n = route.len();
            for from in 0..n {
                let a = before(route, from);
                let first = route[from];
                for to in (from + 1)..n {
                    let last = route[to];
                    let b = at_or_depot(route, to + 1);
                    let delta = inst.dist(a, last) + inst.dist(first, b)
                        - inst.dist(a, first)
                        - inst.dist(last, b);
                    visit(Move {
                        operator: op,
                        kind: MoveKind::ReverseSegment { route: r, from, to },
                        delta,
                    });
                }
            }
        }
    }
}

/// Segment relocation inside one route. `lens` lists the segment lengths and
/// `both_orientations` also inserts segments of length ≥ 2 reversed.
pub struct SegmentRelocateIntra {
    id: OperatorId,
    lens: Vec<usize>,
    both_orientations: bool,
}

impl SegmentRelocateIntra {
    pub fn relocate(len: usize) -> Self {
        SegmentRelocateIntra {
            id: OperatorId::RelocateIntra { len },
            lens: vec![len],
            both_orientations: false,
        }
    }

    pub fn or_opt() -> Self {
        SegmentRelocateIntra {
            id: OperatorId::OrOptIntra,
            lens: vec![1, 2, 3],
            both_orientations: true,
        }
    }
}

impl Neighborhood for SegmentRelocateIntra {
    fn id(&self) -> OperatorId {
        self.id
    }

    fn for_each_move(&self, inst: &Instance, sol: &Solution, visit: &mut dyn FnMut(Move)) {
        for (r, route) in sol.routes().iter().enumerate() {
            let n = route.len();
            for &len in &self.lens {
                if len >= n {
                    // nowhere else to put the segment
                    continue;
                }
                for start in 0..=(n - len) {
                    let first = route[start];
                    let last = route[start + len - 1];
                    let prev = before(route, start);
                    let next = at_or_depot(route, start + len);
                    let removal = inst.dist(prev, next) - inst.dist(prev, first) - inst.dist(last, next);
                    // node at index x of the route with the segment removed
                    let rest = |x: usize| if x < start { route[x] } else { route[x + len] };
                    let rest_len = n - len;
                    for to in 0..=rest_len {
                        let a = if to == 0 { 0 } else { rest(to - 1) };
                        let b = if to == rest_len { 0 } else { rest(to) };
                        let base = removal - inst.dist(a, b);
                        let orientations: &[bool] = if self.both_orientations && len > 1 {
                            &[false, true]
                        } else {
                            &[false]
                        };
                        for &reversed in orientations {
                            if to == start && !reversed {
                                continue;
                            }
                            let (head, tail) = if reversed { (last, first) } else { (first, last) };
                            let delta = base + inst.dist(a, head) + inst.dist(tail, b);
                            visit(Move {
                                operator: self.id,
                                kind: MoveKind::RelocateSegment {
                                    route: r,
                                    start,
                                    len,
                                    to,
                                    reversed,
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

pub struct SwapIntra;

impl Neighborhood for SwapIntra {
    fn id(&self) -> OperatorId {
        OperatorId::SwapIntra
    }

    fn for_each_move(&self, inst: &Instance, sol: &Solution, visit: &mut dyn FnMut(Move)) {
        for (r, route) in sol.routes().iter().enumerate() {
            let n = route.len();
            for i in 0..n {
                let u = route[i];
                let up = before(route, i);
                let un = at_or_depot(route, i + 1);
                for j in (i + 1)..n {
                    let v = route[j];
                    let vn = at_or_depot(route, j + 1);
                    let delta = if j == i + 1 {
                        inst.dist(up, v) + inst.dist(u, vn) - inst.dist(up, u) - inst.dist(v, vn)
                    } else {
                        let vp = route[j - 1];
                        inst.dist(up, v) + inst.dist(v, un) + inst.dist(vp, u) + inst.dist(u, vn)
                            - inst.dist(up, u)
                            - inst.dist(u, un)
                            - inst.dist(vp, v)
                            - inst.dist(v, vn)
                    };
                    visit(Move {
                        operator: OperatorId::SwapIntra,
                        kind: MoveKind::SwapNodes { route: r, i, j },
                        delta,
                    });
                }
            }
        }
    }
}
