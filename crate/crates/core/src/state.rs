//! Search state fed to the encoder: distance graph, solution graph, node
//! features and optimization-history scalars.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::vrp::{euclidean, Instance, Solution};

pub const NODE_FEATURES: usize = 11;

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Rows and columns reordered so that new index `i` holds old index
    /// `perm[i]`.
    pub fn permuted(&self, perm: &[usize], permute_cols: bool) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for (i, &pi) in perm.iter().enumerate() {
            for j in 0..self.cols {
                let pj = if permute_cols { perm[j] } else { j };
                out.set(i, j, self.get(pi, pj));
            }
        }
        out
    }
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.rows))?;
        for r in 0..self.rows {
            seq.serialize_element(self.row(r))?;
        }
        seq.end()
    }
}

/// Exact pairwise Euclidean distances, whatever convention the objective uses.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceGraph {
    pub weights: Matrix,
}

pub fn build_distance_graph(inst: &Instance) -> DistanceGraph {
    let n = inst.len();
    let c = inst.coords();
    let mut weights = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(c[i], c[j]);
            weights.set(i, j, d);
            weights.set(j, i, d);
        }
    }
    DistanceGraph { weights }
}

/// Binary adjacency of consecutive nodes in the routes, depot arcs included.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionGraph {
    pub adjacency: Matrix,
}

pub fn build_solution_graph(inst: &Instance, sol: &Solution) -> SolutionGraph {
    let n = inst.len();
    let mut adjacency = Matrix::zeros(n, n);
    for route in sol.routes() {
        let mut prev = 0;
        for &c in route.iter().chain(std::iter::once(&0)) {
            adjacency.set(prev, c, 1.0);
            adjacency.set(c, prev, 1.0);
            prev = c;
        }
    }
    SolutionGraph { adjacency }
}

/// Which load the remaining-capacity feature reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemainingCapacity {
    /// Capacity left once node `i` has been served.
    #[default]
    AfterService,
    /// Capacity left when the vehicle reaches `i`, before serving it.
    BeforeService,
}

/// Per node: x, y, demand, remaining capacity, predecessor x/y, successor
/// x/y, ‖i−pred‖, ‖i−succ‖, ‖pred−succ‖.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeFeatures {
    pub x: Matrix,
}

pub fn build_node_features(inst: &Instance, sol: &Solution, mode: RemainingCapacity) -> NodeFeatures {
    let n = inst.len();
    let c = inst.coords();
    let q = inst.capacity() as f64;
    let mut x = Matrix::zeros(n, NODE_FEATURES);
    let mut fill = |i: usize, pred: usize, succ: usize, remaining: f64| {
        let row = [
            c[i][0],
            c[i][1],
            inst.demand(i) as f64,
            remaining,
            c[pred][0],
            c[pred][1],
            c[succ][0],
            c[succ][1],
            euclidean(c[i], c[pred]),
            euclidean(c[i], c[succ]),
            euclidean(c[pred], c[succ]),
        ];
        for (k, v) in row.into_iter().enumerate() {
            x.set(i, k, v);
        }
    };
    fill(0, 0, 0, q);
    for route in sol.routes() {
        let mut served = 0.0;
        for (p, &i) in route.iter().enumerate() {
            let pred = if p == 0 { 0 } else { route[p - 1] };
            let succ = route.get(p + 1).copied().unwrap_or(0);
            let before = q - served;
            served += inst.demand(i) as f64;
            let remaining = match mode {
                RemainingCapacity::AfterService => q - served,
                RemainingCapacity::BeforeService => before,
            };
            fill(i, pred, succ, remaining);
        }
    }
    NodeFeatures { x }
}

/// Optimization-history scalars.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OptFeatures {
    /// Index of the previous action in the action set, if any.
    pub last_action: Option<usize>,
    /// 1 when the previous action improved the current solution, else 0.
    pub effective: f64,
    /// Current cost minus incumbent cost, never negative.
    pub gap: f64,
    /// Cost change caused by the previous action.
    pub last_delta: f64,
}

const IMPROVEMENT_EPS: f64 = 1e-9;

pub fn update_opt_features(_prev: &OptFeatures, action: usize, f_before: f64, f_after: f64, f_best: f64) -> OptFeatures {
    OptFeatures {
        last_action: Some(action),
        effective: if f_after < f_before - IMPROVEMENT_EPS { 1.0 } else { 0.0 },
        gap: f_after - f_best.min(f_after),
        last_delta: f_after - f_before,
    }
}

/// The full state tuple for one search step.
#[derive(Clone, Debug, Serialize)]
pub struct SearchState {
    pub dis: Arc<DistanceGraph>,
    pub sol: SolutionGraph,
    pub x: NodeFeatures,
    pub opt: OptFeatures,
    /// Cost used to scale `gap` and `last_delta` (the episode's initial cost).
    pub reference_cost: f64,
    /// Vehicle capacity, used to scale the load columns.
    pub capacity: f64,
}

impl SearchState {
    pub fn build(
        inst: &Instance,
        dis: Arc<DistanceGraph>,
        sol: &Solution,
        opt: OptFeatures,
        reference_cost: f64,
        mode: RemainingCapacity,
    ) -> Self {
        SearchState {
            dis,
            sol: build_solution_graph(inst, sol),
            x: build_node_features(inst, sol, mode),
            opt,
            reference_cost,
            capacity: inst.capacity() as f64,
        }
    }

    pub fn node_count(&self) -> usize {
        self.x.x.rows()
    }

    /// Δ and η divided by the reference cost.
    pub fn normalized_history(&self) -> (f64, f64) {
        let scale = if self.reference_cost > 0.0 { self.reference_cost } else { 1.0 };
        (self.opt.gap / scale, self.opt.last_delta / scale)
    }

    pub fn to_debug_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serializes")
    }

    /// Relabels nodes: new node `i` is old node `perm[i]`. Only meaningful
    /// when `perm[0] == 0`.
    pub fn permuted(&self, perm: &[usize]) -> SearchState {
        SearchState {
            dis: Arc::new(DistanceGraph {
                weights: self.dis.weights.permuted(perm, true),
            }),
            sol: SolutionGraph {
                adjacency: self.sol.adjacency.permuted(perm, true),
            },
            x: NodeFeatures {
                x: self.x.x.permuted(perm, false),
            },
            opt: self.opt,
            reference_cost: self.reference_cost,
            capacity: self.capacity,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vrp::{generate_instance, initial_solution, DistanceConvention, SizeClass};

    #[test]
    fn three_four_five() {
        let inst = Instance::new(
            "t",
            vec![[0.0, 0.0], [3.0, 4.0]],
            vec![0, 3],
            30,
            DistanceConvention::ExactEuclidean,
        )
        .unwrap();
        let g = build_distance_graph(&inst);
        assert_eq!(g.weights.get(0, 1), 5.0);
        assert_eq!(g.weights.get(1, 0), 5.0);
        assert_eq!(g.weights.get(1, 1), 0.0);

        let sol = Solution::from_routes(&inst, vec![vec![1]]).unwrap();
        let x = build_node_features(&inst, &sol, RemainingCapacity::AfterService).x;
        assert_eq!(x.get(1, 3), 27.0);
        assert_eq!(x.get(1, 10), 0.0);
        assert_eq!(x.row(0)[3], 30.0);
        let before = build_node_features(&inst, &sol, RemainingCapacity::BeforeService).x;
        assert_eq!(before.get(1, 3), 30.0);
    }

    #[test]
    fn solution_graph_degrees() {
        let inst = generate_instance(9, SizeClass::Cvrp20, 4).unwrap();
        let sol = Solution::from_routes(&inst, vec![vec![1, 2, 3], vec![4, 5, 6, 7], vec![8, 9]]).unwrap();
        let a = build_solution_graph(&inst, &sol).adjacency;
        for i in 1..inst.len() {
            assert_eq!(a.row(i).iter().sum::<f64>(), 2.0);
        }
        assert_eq!(a.row(0).iter().sum::<f64>(), 6.0);
    }

    #[test]
    fn one_route_of_two_customers_has_three_arcs() {
        let inst = generate_instance(2, SizeClass::Cvrp20, 1).unwrap();
        let sol = Solution::from_routes(&inst, vec![vec![1, 2]]).unwrap();
        let a = build_solution_graph(&inst, &sol).adjacency;
        assert_eq!((a.get(0, 1), a.get(1, 2), a.get(2, 0)), (1.0, 1.0, 1.0));
        assert_eq!(a.get(0, 0) + a.get(1, 1) + a.get(2, 2), 0.0);
    }

    #[test]
    fn opt_feature_updates() {
        let o = update_opt_features(&OptFeatures::default(), 2, 10.0, 9.0, 9.0);
        assert_eq!((o.effective, o.last_delta, o.gap), (1.0, -1.0, 0.0));
        let o = update_opt_features(&o, 2, 10.0, 10.0, 9.0);
        assert_eq!((o.effective, o.last_delta), (0.0, 0.0));
        assert_eq!(o.gap, 1.0);
        let o = update_opt_features(&o, 1, 9.0, 9.5, 9.0);
        assert_eq!(o.gap, 0.5);
    }

    #[test]
    fn debug_json_has_nested_rows() {
        let inst = generate_instance(3, SizeClass::Cvrp20, 2).unwrap();
        let sol = initial_solution(&inst, 0);
        let state = SearchState::build(
            &inst,
            Arc::new(build_distance_graph(&inst)),
            &sol,
            OptFeatures::default(),
            sol.cost(),
            RemainingCapacity::AfterService,
        );
        let v: serde_json::Value = serde_json::from_str(&state.to_debug_json()).unwrap();
        assert_eq!(v["x"]["x"].as_array().unwrap().len(), 4);
        assert_eq!(v["x"]["x"][0].as_array().unwrap().len(), NODE_FEATURES);
        assert_eq!(v["dis"]["weights"][1].as_array().unwrap().len(), 4);
    }
}
