use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{DistanceConvention, Instance, VrpError};
use crate::rng;

/// Capacity class of a synthetic instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SizeClass {
    Cvrp20,
    Cvrp50,
    Cvrp100,
    Custom { capacity: u32 },
}

impl SizeClass {
    pub fn capacity(self) -> u32 {
        match self {
            SizeClass::Cvrp20 => 30,
            SizeClass::Cvrp50 => 40,
            SizeClass::Cvrp100 => 50,
            SizeClass::Custom { capacity } => capacity,
        }
    }

    /// Picks the class matching a customer count. Sizes other than 20/50/100
    /// borrow the capacity of the smallest standard class that is at least as
    /// large (or of CVRP100 beyond 100 customers).
    pub fn for_customers(n: usize) -> SizeClass {
        match n {
            20 => SizeClass::Cvrp20,
            50 => SizeClass::Cvrp50,
            100 => SizeClass::Cvrp100,
            n if n < 20 => SizeClass::Custom { capacity: 30 },
            n if n < 50 => SizeClass::Custom { capacity: 40 },
            _ => SizeClass::Custom { capacity: 50 },
        }
    }
}

/// Uniform coordinates in the unit square (depot first) and demands uniform
/// over `1..=9`.
pub fn generate_instance(n: usize, size_class: SizeClass, seed: u64) -> Result<Instance, VrpError> {
    if n == 0 {
        return Err(VrpError::InvalidArgument("customer count must be at least 1".into()));
    }
    let capacity = size_class.capacity();
    if capacity < 9 {
        return Err(VrpError::InvalidArgument(format!(
            "capacity {capacity} cannot serve demands up to 9"
        )));
    }
    let mut rng = rng::rng_from_seed(seed);
    let coords: Vec<[f64; 2]> = (0..=n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    let mut demands = Vec::with_capacity(n + 1);
    demands.push(0);
    demands.extend((0..n).map(|_| rng.gen_range(1..=9u32)));
    Instance::new(
        format!("cvrp{n}-seed{seed}"),
        coords,
        demands,
        capacity,
        DistanceConvention::ExactEuclidean,
    )
}

/// Mean total distance over a set of instances.
pub fn mean_cost(costs: &[f64]) -> Result<f64, VrpError> {
    if costs.is_empty() {
        return Err(VrpError::InvalidArgument("mean of an empty cost list".into()));
    }
    Ok(costs.iter().sum::<f64>() / costs.len() as f64)
}
