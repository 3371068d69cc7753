use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Instance, VrpError};
use crate::rng;

/// Routes over customers; the depot is implicit at both ends of every route.
///
/// Cost and per-route loads are cached. Empty routes never appear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    routes: Vec<Vec<usize>>,
    cost: f64,
    loads: Vec<u32>,
}

impl Solution {
    /// Builds a solution from explicit routes, dropping empty ones and
    /// computing cost and loads from scratch.
    pub fn from_routes(inst: &Instance, routes: Vec<Vec<usize>>) -> Result<Self, VrpError> {
        let routes: Vec<Vec<usize>> = routes.into_iter().filter(|r| !r.is_empty()).collect();
        let cost = objective(inst, &routes)?;
        let loads = routes.iter().map(|r| inst.route_load(r)).collect();
        Ok(Solution { routes, cost, loads })
    }

    /// Assembles a solution whose cost was maintained incrementally.
    pub(crate) fn from_parts(routes: Vec<Vec<usize>>, cost: f64, loads: Vec<u32>) -> Self {
        debug_assert_eq!(routes.len(), loads.len());
        Solution { routes, cost, loads }
    }

    pub fn routes(&self) -> &[Vec<usize>] {
        &self.routes
    }

    pub fn route(&self, r: usize) -> &[usize] {
        &self.routes[r]
    }

    pub fn route_count(&self) -> usize {
        self.routes.len()
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn loads(&self) -> &[u32] {
        &self.loads
    }

    pub fn into_routes(self) -> Vec<Vec<usize>> {
        self.routes
    }
}

/// Total travel distance of `routes`, depot arcs included.
pub fn objective(inst: &Instance, routes: &[Vec<usize>]) -> Result<f64, VrpError> {
    let n = inst.len();
    let mut total = 0.0;
    for route in routes {
        if let Some(&bad) = route.iter().find(|&&c| c == 0 || c >= n) {
            return Err(VrpError::InvalidArgument(format!(
                "customer index {bad} out of range 1..{n}"
            )));
        }
        total += inst.route_cost(route);
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    InvalidNode { route: usize, node: usize },
    DuplicateVisit { customer: usize },
    MissingCustomer { customer: usize },
    CapacityExceeded { route: usize, load: u64, capacity: u32 },
    EmptyRoute { route: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the visit-once and capacity constraints of `routes`.
pub fn check_routes(inst: &Instance, routes: &[Vec<usize>]) -> FeasibilityReport {
    let n = inst.len();
    let mut seen = vec![0u32; n];
    let mut violations = Vec::new();
    for (r, route) in routes.iter().enumerate() {
        if route.is_empty() {
            violations.push(Violation::EmptyRoute { route: r });
        }
        let mut load: u64 = 0;
        for &c in route {
            if c == 0 || c >= n {
                violations.push(Violation::InvalidNode { route: r, node: c });
                continue;
            }
            seen[c] += 1;
            load += u64::from(inst.demand(c));
        }
        if load > u64::from(inst.capacity()) {
            violations.push(Violation::CapacityExceeded {
                route: r,
                load,
                capacity: inst.capacity(),
            });
        }
    }
    for (c, &count) in seen.iter().enumerate().skip(1) {
        match count {
            0 => violations.push(Violation::MissingCustomer { customer: c }),
            1 => {}
            _ => violations.push(Violation::DuplicateVisit { customer: c }),
        }
    }
    FeasibilityReport { violations }
}

pub fn is_feasible(inst: &Instance, sol: &Solution) -> FeasibilityReport {
    check_routes(inst, sol.routes())
}

/// Random permutation of the customers, cut greedily into routes whenever the
/// next customer would overflow the vehicle.
pub fn initial_solution(inst: &Instance, seed: u64) -> Solution {
    let mut rng = rng::rng_from_seed(seed);
    let mut order: Vec<usize> = (1..inst.len()).collect();
    order.shuffle(&mut rng);

    let mut routes = Vec::new();
    let mut current = Vec::new();
    let mut load = 0;
    for c in order {
        let q = inst.demand(c);
        if load + q > inst.capacity() {
            routes.push(std::mem::take(&mut current));
            load = 0;
        }
        current.push(c);
        load += q;
    }
    if !current.is_empty() {
        routes.push(current);
    }
    Solution::from_routes(inst, routes).expect("initial routes only hold valid customers")
}
