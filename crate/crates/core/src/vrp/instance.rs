use serde::{Deserialize, Serialize};

use super::VrpError;

/// How pairwise distances enter the objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceConvention {
    /// Double-precision Euclidean distance (synthetic instances).
    ExactEuclidean,
    /// Euclidean distance rounded half-up to the nearest integer (TSPLIB `EUC_2D`).
    RoundedEuclidean,
}

impl DistanceConvention {
    pub fn distance(self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let d = euclidean(a, b);
        match self {
            DistanceConvention::ExactEuclidean => d,
            DistanceConvention::RoundedEuclidean => (d + 0.5).floor(),
        }
    }

    /// Smallest cost decrease that counts as an improvement.
    pub fn improvement_tolerance(self) -> f64 {
        match self {
            DistanceConvention::ExactEuclidean => 1e-9,
            // integer costs: any strict decrease is at least 1
            DistanceConvention::RoundedEuclidean => 0.5,
        }
    }
}

pub fn euclidean(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// A CVRP instance. Node 0 is the depot, nodes `1..len()` are customers.
///
/// The pairwise distance matrix under the instance's convention is computed
/// once on construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "InstanceJson", try_from = "InstanceJson")]
pub struct Instance {
    name: String,
    coords: Vec<[f64; 2]>,
    demands: Vec<u32>,
    capacity: u32,
    convention: DistanceConvention,
    dist: Vec<f64>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.coords == other.coords
            && self.demands == other.demands
            && self.capacity == other.capacity
            && self.convention == other.convention
    }
}

impl Instance {
    pub fn new(
        name: impl Into<String>,
        coords: Vec<[f64; 2]>,
        demands: Vec<u32>,
        capacity: u32,
        convention: DistanceConvention,
    ) -> Result<Self, VrpError> {
        if coords.len() != demands.len() {
            return Err(VrpError::InvalidArgument(format!(
                "{} coordinates but {} demands",
                coords.len(),
                demands.len()
            )));
        }
        if coords.len() < 2 {
            return Err(VrpError::InvalidArgument(
                "an instance needs a depot and at least one customer".into(),
            ));
        }
        if capacity == 0 {
            return Err(VrpError::InvalidArgument("capacity must be positive".into()));
        }
        if demands[0] != 0 {
            return Err(VrpError::InvalidArgument(format!(
                "depot demand must be 0, got {}",
                demands[0]
            )));
        }
        for (i, &q) in demands.iter().enumerate().skip(1) {
            if q == 0 || q > capacity {
                return Err(VrpError::InvalidArgument(format!(
                    "customer {i} demand {q} outside 1..={capacity}"
                )));
            }
        }
        if coords.iter().flatten().any(|c| !c.is_finite()) {
            return Err(VrpError::InvalidArgument("non-finite coordinate".into()));
        }
        let n = coords.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = convention.distance(coords[i], coords[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(Instance {
            name: name.into(),
            coords,
            demands,
            capacity,
            convention,
            dist,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    /// Number of nodes including the depot.
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn customer_count(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn depot(&self) -> usize {
        0
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn demands(&self) -> &[u32] {
        &self.demands
    }

    pub fn demand(&self, node: usize) -> u32 {
        self.demands[node]
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn convention(&self) -> DistanceConvention {
        self.convention
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.coords.len() + b]
    }

    /// Cost of a single route, depot arcs included.
    pub fn route_cost(&self, route: &[usize]) -> f64 {
        let mut prev = 0;
        let mut total = 0.0;
        for &c in route {
            total += self.dist(prev, c);
            prev = c;
        }
        total + self.dist(prev, 0)
    }

    pub fn route_load(&self, route: &[usize]) -> u32 {
        route.iter().map(|&c| self.demands[c]).sum()
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    name: String,
    coords: Vec<[f64; 2]>,
    demands: Vec<u32>,
    capacity: u32,
    distance_convention: DistanceConvention,
}

impl From<Instance> for InstanceJson {
    fn from(i: Instance) -> Self {
        InstanceJson {
            name: i.name,
            coords: i.coords,
            demands: i.demands,
            capacity: i.capacity,
            distance_convention: i.convention,
        }
    }
}

impl TryFrom<InstanceJson> for Instance {
    type Error = VrpError;

    fn try_from(j: InstanceJson) -> Result<Self, Self::Error> {
        Instance::new(j.name, j.coords, j.demands, j.capacity, j.distance_convention)
    }
}
