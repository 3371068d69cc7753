//! Brute-force reference implementations, written without reference to the
//! library's move enumerators.

#![allow(dead_code)]

use routing_aos::neighborhood::OperatorId;
use routing_aos::vrp::Instance;

pub type Routes = Vec<Vec<usize>>;

fn pt(inst: &Instance, i: usize) -> [f64; 2] {
    inst.coords()[i]
}

/// Total distance by direct summation over the closed depot tours.
pub fn cost(inst: &Instance, routes: &Routes) -> f64 {
    let rounded = matches!(inst.convention(), routing_aos::vrp::DistanceConvention::RoundedEuclidean);
    let mut total = 0.0;
    for route in routes {
        let mut tour = vec![0];
        tour.extend(route);
        tour.push(0);
        for w in tour.windows(2) {
            let (a, b) = (pt(inst, w[0]), pt(inst, w[1]));
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            total += if rounded { (d + 0.5).floor() } else { d };
        }
    }
    total
}

fn load(inst: &Instance, route: &[usize]) -> u32 {
    route.iter().map(|&c| inst.demands()[c]).sum()
}

fn fits(inst: &Instance, routes: &Routes) -> bool {
    routes.iter().all(|r| load(inst, r) <= inst.capacity())
}

fn with_routes(base: &Routes, edits: &[(usize, Vec<usize>)]) -> Routes {
    let mut out = base.clone();
    for (r, route) in edits {
        out[*r] = route.clone();
    }
    out.into_iter().filter(|r| !r.is_empty()).collect()
}

fn rev(v: &[usize]) -> Vec<usize> {
    v.iter().rev().copied().collect()
}

fn cat(parts: &[&[usize]]) -> Vec<usize> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

/// Every route obtained by taking out `route[s..s+m]` and putting it back
/// (optionally reversed) at each slot of the remainder.
fn reinsertions(route: &[usize], m: usize, reversed: bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if m > route.len() {
        return out;
    }
    for s in 0..=(route.len() - m) {
        let mut seg = route[s..s + m].to_vec();
        if reversed {
            seg.reverse();
        }
        let rest = cat(&[&route[..s], &route[s + m..]]);
        for p in 0..=rest.len() {
            out.push(cat(&[&rest[..p], &seg, &rest[p..]]));
        }
    }
    out
}

fn pairs(n: usize, ordered: bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && (ordered || a < b) {
                out.push((a, b));
            }
        }
    }
    out
}

/// All capacity-feasible neighbors of `routes` under `op`.
pub fn neighbors(inst: &Instance, routes: &Routes, op: OperatorId) -> Vec<Routes> {
    let mut out: Vec<Routes> = Vec::new();
    let nr = routes.len();
    match op {
        OperatorId::TwoOptIntra => {
            for (r, route) in routes.iter().enumerate() {
                for i in 0..route.len() {
                    for j in (i + 1)..route.len() {
                        let mut nr_ = route.clone();
                        nr_[i..=j].reverse();
                        out.push(with_routes(routes, &[(r, nr_)]));
                    }
                }
            }
        }
        OperatorId::SwapIntra => {
            for (r, route) in routes.iter().enumerate() {
                for i in 0..route.len() {
                    for j in (i + 1)..route.len() {
                        let mut nr_ = route.clone();
                        nr_.swap(i, j);
                        out.push(with_routes(routes, &[(r, nr_)]));
                    }
                }
            }
        }
        OperatorId::RelocateIntra { len } => {
            for (r, route) in routes.iter().enumerate() {
                for cand in reinsertions(route, len, false) {
                    out.push(with_routes(routes, &[(r, cand)]));
                }
            }
        }
        OperatorId::OrOptIntra => {
            for (r, route) in routes.iter().enumerate() {
                for m in 1..=3 {
                    for reversed in [false, true] {
                        for cand in reinsertions(route, m, reversed) {
                            out.push(with_routes(routes, &[(r, cand)]));
                        }
                    }
                }
            }
        }
        OperatorId::Cross | OperatorId::TwoOptInter => {
            for (a, b) in pairs(nr, false) {
                let (ra, rb) = (&routes[a], &routes[b]);
                for i in 0..=ra.len() {
                    for j in 0..=rb.len() {
                        let (na, nb) = if op == OperatorId::Cross {
                            (cat(&[&ra[..i], &rb[j..]]), cat(&[&rb[..j], &ra[i..]]))
                        } else {
                            (cat(&[&ra[..i], &rev(&rb[..j])]), cat(&[&rev(&ra[i..]), &rb[j..]]))
                        };
                        out.push(with_routes(routes, &[(a, na), (b, nb)]));
                    }
                }
            }
        }
        OperatorId::SymmetricSwap { len } => exchanges(routes, len, len, &mut out),
        OperatorId::AsymmetricSwap { first, second } => exchanges(routes, first, second, &mut out),
        OperatorId::RelocateInter { len } => transfers(routes, &[len], false, &mut out),
        OperatorId::OrOptInter => transfers(routes, &[1, 2, 3], true, &mut out),
        OperatorId::CyclicExchange3 => {
            for a in 0..nr {
                for b in 0..nr {
                    for c in 0..nr {
                        if a == b || b == c || a == c {
                            continue;
                        }
                        for pa in 0..routes[a].len() {
                            for pb in 0..routes[b].len() {
                                for pc in 0..routes[c].len() {
                                    let (mut na, mut nb, mut nc) =
                                        (routes[a].clone(), routes[b].clone(), routes[c].clone());
                                    nb[pb] = routes[a][pa];
                                    nc[pc] = routes[b][pb];
                                    na[pa] = routes[c][pc];
                                    out.push(with_routes(routes, &[(a, na), (b, nb), (c, nc)]));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out.retain(|cand| fits(inst, cand));
    out
}

fn exchanges(routes: &Routes, m: usize, k: usize, out: &mut Vec<Routes>) {
    for (a, b) in pairs(routes.len(), true) {
        let (ra, rb) = (&routes[a], &routes[b]);
        if ra.len() < m || rb.len() < k {
            continue;
        }
        for s in 0..=(ra.len() - m) {
            for t in 0..=(rb.len() - k) {
                let na = cat(&[&ra[..s], &rb[t..t + k], &ra[s + m..]]);
                let nb = cat(&[&rb[..t], &ra[s..s + m], &rb[t + k..]]);
                out.push(with_routes(routes, &[(a, na), (b, nb)]));
            }
        }
    }
}

fn transfers(routes: &Routes, lens: &[usize], both: bool, out: &mut Vec<Routes>) {
    for (a, b) in pairs(routes.len(), true) {
        let (ra, rb) = (&routes[a], &routes[b]);
        for &m in lens {
            if ra.len() < m {
                continue;
            }
            for s in 0..=(ra.len() - m) {
                let rest = cat(&[&ra[..s], &ra[s + m..]]);
                let orients: &[bool] = if both { &[false, true] } else { &[false] };
                for &reversed in orients {
                    let seg = if reversed { rev(&ra[s..s + m]) } else { ra[s..s + m].to_vec() };
                    for p in 0..=rb.len() {
                        let nb = cat(&[&rb[..p], &seg, &rb[p..]]);
                        out.push(with_routes(routes, &[(a, rest.clone()), (b, nb)]));
                    }
                }
            }
        }
    }
}

/// Cost that one best-improvement step should reach.
pub fn best_improvement_cost(inst: &Instance, routes: &Routes, op: OperatorId, tol: f64) -> f64 {
    let current = cost(inst, routes);
    let best = neighbors(inst, routes, op)
        .iter()
        .map(|cand| cost(inst, cand))
        .fold(f64::INFINITY, f64::min);
    if best < current - tol {
        best
    } else {
        current
    }
}

/// Structural check: every customer exactly once, loads within capacity, no
/// empty routes.
pub fn feasible(inst: &Instance, routes: &Routes) -> bool {
    let mut seen = vec![0u32; inst.coords().len()];
    for r in routes {
        if r.is_empty() || load(inst, r) > inst.capacity() {
            return false;
        }
        for &c in r {
            if c == 0 || c >= seen.len() {
                return false;
            }
            seen[c] += 1;
        }
    }
    seen[1..].iter().all(|&k| k == 1)
}
