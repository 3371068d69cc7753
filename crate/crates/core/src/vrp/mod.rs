//! CVRP instances, solutions, objective and feasibility, synthetic generation
//! and CVRPLib I/O.

mod cvrplib;
mod generate;
mod instance;
mod solution;

use thiserror::Error;

pub use cvrplib::{parse_cvrplib, parse_solution, to_cvrplib, ParseError, ReferenceSolution};
pub use generate::{generate_instance, mean_cost, SizeClass};
pub use instance::{euclidean, DistanceConvention, Instance};
pub use solution::{
    check_routes, initial_solution, is_feasible, objective, FeasibilityReport, Solution, Violation,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VrpError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
