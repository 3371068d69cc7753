use serde::Serialize;

use super::{NeighborhoodError, OperatorId};
use crate::vrp::{Instance, Solution};

/// The concrete edit a move performs. Positions index into the route's
/// customer list (the depot is not addressable).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MoveKind {
    /// Reverse `route[from..=to]`.
    ReverseSegment { route: usize, from: usize, to: usize },
    /// Remove `route[start..start + len]` and reinsert it so that it begins at
    /// index `to` of the remaining sequence.
    RelocateSegment {
        route: usize,
        start: usize,
        len: usize,
        to: usize,
        reversed: bool,
    },
    /// Exchange `route[i]` and `route[j]`, `i < j`.
    SwapNodes { route: usize, i: usize, j: usize },
    /// `first[..cut_first] + second[cut_second..]` and
    /// `second[..cut_second] + first[cut_first..]`.
    TailSwap {
        first: usize,
        second: usize,
        cut_first: usize,
        cut_second: usize,
    },
    /// `first[..cut_first] + rev(second[..cut_second])` and
    /// `rev(first[cut_first..]) + second[cut_second..]`.
    HeadTailReconnect {
        first: usize,
        second: usize,
        cut_first: usize,
        cut_second: usize,
    },
    /// Swap `first[start_first..+len_first]` with `second[start_second..+len_second]`.
    ExchangeSegments {
        first: usize,
        start_first: usize,
        len_first: usize,
        second: usize,
        start_second: usize,
        len_second: usize,
    },
    /// Move `from_route[start..start + len]` into `to_route` before index `to`.
    TransferSegment {
        from_route: usize,
        start: usize,
        len: usize,
        to_route: usize,
        to: usize,
        reversed: bool,
    },
    /// Customer at `positions[k]` of `routes[k]` takes the place of the
    /// customer at `positions[k + 1]` of `routes[k + 1]` (cyclically).
    CyclicTransfer { routes: [usize; 3], positions: [usize; 3] },
}

/// A feasibility-preserving neighbor of a solution, with its exact cost change.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Move {
    pub operator: OperatorId,
    pub kind: MoveKind,
    pub delta: f64,
}

impl Move {
    pub fn route_indices(&self) -> Vec<usize> {
        match self.kind {
            MoveKind::ReverseSegment { route, .. }
            | MoveKind::RelocateSegment { route, .. }
            | MoveKind::SwapNodes { route, .. } => vec![route],
            MoveKind::TailSwap { first, second, .. }
            | MoveKind::HeadTailReconnect { first, second, .. }
            | MoveKind::ExchangeSegments { first, second, .. } => vec![first, second],
            MoveKind::TransferSegment {
                from_route, to_route, ..
            } => vec![from_route, to_route],
            MoveKind::CyclicTransfer { routes, .. } => routes.to_vec(),
        }
    }
}

fn stale(msg: impl Into<String>) -> NeighborhoodError {
    NeighborhoodError::InvalidMove(msg.into())
}

fn route_mut(routes: &mut [Vec<usize>], r: usize) -> Result<&mut Vec<usize>, NeighborhoodError> {
    let n = routes.len();
    routes
        .get_mut(r)
        .ok_or_else(|| stale(format!("route {r} out of range ({n} routes)")))
}

fn check_range(len: usize, start: usize, count: usize, what: &str) -> Result<(), NeighborhoodError> {
    if start + count > len {
        Err(stale(format!("{what}: {start}+{count} exceeds route length {len}")))
    } else {
        Ok(())
    }
}

fn distinct(a: usize, b: usize) -> Result<(), NeighborhoodError> {
    if a == b {
        Err(stale(format!("route {a} used twice")))
    } else {
        Ok(())
    }
}

impl MoveKind {
    /// Edits `routes` in place. Emptied routes are left in place (callers drop
    /// them).
    pub fn apply_to(&self, routes: &mut [Vec<usize>]) -> Result<(), NeighborhoodError> {
        match *self {
            MoveKind::ReverseSegment { route, from, to } => {
                let r = route_mut(routes, route)?;
                if from >= to || to >= r.len() {
                    return Err(stale("reverse bounds"));
                }
                r[from..=to].reverse();
            }
            MoveKind::RelocateSegment {
                route,
                start,
                len,
                to,
                reversed,
            } => {
                let r = route_mut(routes, route)?;
                check_range(r.len(), start, len, "relocate")?;
                if len == 0 || to > r.len() - len {
                    return Err(stale("relocate target"));
                }
                let mut seg: Vec<usize> = r.drain(start..start + len).collect();
                if reversed {
                    seg.reverse();
                }
                r.splice(to..to, seg);
            }
            MoveKind::SwapNodes { route, i, j } => {
                let r = route_mut(routes, route)?;
                if i >= j || j >= r.len() {
                    return Err(stale("swap positions"));
                }
                r.swap(i, j);
            }
            MoveKind::TailSwap {
                first,
                second,
                cut_first,
                cut_second,
            } => {
                distinct(first, second)?;
                check_range(route_mut(routes, first)?.len(), cut_first, 0, "cut")?;
                check_range(route_mut(routes, second)?.len(), cut_second, 0, "cut")?;
                let tail_a = routes[first].split_off(cut_first);
                let tail_b = routes[second].split_off(cut_second);
                routes[first].extend(tail_b);
                routes[second].extend(tail_a);
            }
            MoveKind::HeadTailReconnect {
                first,
                second,
                cut_first,
                cut_second,
            } => {
                distinct(first, second)?;
                check_range(route_mut(routes, first)?.len(), cut_first, 0, "cut")?;
                check_range(route_mut(routes, second)?.len(), cut_second, 0, "cut")?;
                let mut tail_a = routes[first].split_off(cut_first);
                let tail_b = routes[second].split_off(cut_second);
                let mut head_b = std::mem::take(&mut routes[second]);
                head_b.reverse();
                tail_a.reverse();
                routes[first].extend(head_b);
                tail_a.extend(tail_b);
                routes[second] = tail_a;
            }
            MoveKind::ExchangeSegments {
                first,
                start_first,
                len_first,
                second,
                start_second,
                len_second,
            } => {
                distinct(first, second)?;
                check_range(route_mut(routes, first)?.len(), start_first, len_first, "segment")?;
                check_range(route_mut(routes, second)?.len(), start_second, len_second, "segment")?;
                let seg_a: Vec<usize> = routes[first][start_first..start_first + len_first].to_vec();
                let seg_b: Vec<usize> =
                    routes[second][start_second..start_second + len_second].to_vec();
                routes[first].splice(start_first..start_first + len_first, seg_b);
                routes[second].splice(start_second..start_second + len_second, seg_a);
            }
            MoveKind::TransferSegment {
                from_route,
                start,
                len,
                to_route,
                to,
                reversed,
            } => {
                distinct(from_route, to_route)?;
                check_range(route_mut(routes, from_route)?.len(), start, len, "segment")?;
                check_range(route_mut(routes, to_route)?.len(), to, 0, "insertion")?;
                let mut seg: Vec<usize> = routes[from_route].drain(start..start + len).collect();
                if reversed {
                    seg.reverse();
                }
                routes[to_route].splice(to..to, seg);
            }
            MoveKind::CyclicTransfer {
                routes: rs,
                positions: ps,
            } => {
                if rs[0] == rs[1] || rs[1] == rs[2] || rs[0] == rs[2] {
                    return Err(stale("cyclic transfer needs three routes"));
                }
                for k in 0..3 {
                    check_range(route_mut(routes, rs[k])?.len(), ps[k], 1, "cyclic position")?;
                }
                let c: [usize; 3] = std::array::from_fn(|k| routes[rs[k]][ps[k]]);
                for k in 0..3 {
                    routes[rs[(k + 1) % 3]][ps[(k + 1) % 3]] = c[k];
                }
            }
        }
        Ok(())
    }
}

/// Applies `mv` to `sol`, updating cost by the move's delta and dropping any
/// emptied route.
pub fn apply_move(inst: &Instance, sol: &Solution, mv: &Move) -> Result<Solution, NeighborhoodError> {
    let mut routes = sol.routes().to_vec();
    mv.kind.apply_to(&mut routes)?;
    let mut loads = Vec::with_capacity(routes.len());
    let mut kept = Vec::with_capacity(routes.len());
    let touched = mv.route_indices();
    for (r, route) in routes.into_iter().enumerate() {
        if route.is_empty() {
            continue;
        }
        let load = if touched.contains(&r) {
            inst.route_load(&route)
        } else {
            sol.loads()[r]
        };
        loads.push(load);
        kept.push(route);
    }
    Ok(Solution::from_parts(kept, sol.cost() + mv.delta, loads))
}
