#![allow(dead_code)]

pub mod oracle;

use rand::seq::SliceRandom;
use rand::Rng;
use routing_aos::vrp::{DistanceConvention, Instance};

/// Random small instance together with a partition of its customers into
/// `routes` routes; the capacity is the largest route load plus some slack.
pub fn small_case(rng: &mut impl Rng, n: usize, routes: usize) -> (Instance, Vec<Vec<usize>>) {
    let mut coords = vec![[rng.gen::<f64>(), rng.gen::<f64>()]];
    let mut demands = vec![0];
    for _ in 0..n {
        coords.push([rng.gen(), rng.gen()]);
        demands.push(rng.gen_range(1..=9));
    }
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let k = routes.clamp(1, n);
    let mut cuts: Vec<usize> = (1..n).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(k - 1).collect();
    cuts.sort_unstable();
    let mut parts = Vec::new();
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(n)) {
        parts.push(order[prev..c].to_vec());
        prev = c;
    }
    let max_load = parts
        .iter()
        .map(|p| p.iter().map(|&c| demands[c]).sum::<u32>())
        .max()
        .unwrap();
    let capacity = max_load + rng.gen_range(0..=6);
    let inst = Instance::new("oracle", coords, demands, capacity, DistanceConvention::ExactEuclidean).unwrap();
    (inst, parts)
}
