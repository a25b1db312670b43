//! Linear-minimization oracles over structured decision sets, Euclidean
//! projections for the projected baseline, and flow decomposition.

pub mod dag;
pub mod sets;

pub use dag::{
    dag_shortest_path, flow_decompose, path_weight, sample_path, Dag, PathDecomposition,
};
pub use sets::{DecisionSet, SetKind};

use crate::error::Result;
use crate::vector::Vector;

/// Anything that can minimize a linear function over a fixed feasible set.
pub trait LinearOracle {
    fn dim(&self) -> usize;
    fn lp_minimize(&self, direction: &Vector) -> Result<Vector>;
}

impl LinearOracle for DecisionSet {
    fn dim(&self) -> usize {
        DecisionSet::dim(self)
    }

    fn lp_minimize(&self, direction: &Vector) -> Result<Vector> {
        DecisionSet::lp_minimize(self, direction)
    }
}
