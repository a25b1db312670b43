//! Projected online gradient descent with an adaptive step, run on the same
//! surrogate costs as the projection-free algorithm so the two differ only in
//! how the next action is computed.

use std::sync::Arc;

use crate::coco::{surrogate_gradient_with_lambda, CocoParams};
use crate::error::{Error, Result};
use crate::metrics::{positive_part, FirstOrderFeedback};
use crate::oracles::{DecisionSet, SetKind};
use crate::vector::Vector;

#[derive(Clone, Debug)]
pub struct ProjectedState {
    set: Arc<DecisionSet>,
    x_current: Vector,
    grad_sq_sum: f64,
    eta_last: f64,
}

impl ProjectedState {
    /// Starts at `x_1 = lp_minimize(set, seed_direction)` (default `-e_1`),
    /// the same point the conditional-gradient policies start from.
    pub fn new(set: Arc<DecisionSet>, seed_direction: Option<&Vector>) -> Result<Self> {
        if matches!(set.kind(), SetKind::FlowPolytope { .. }) {
            return Err(Error::Unsupported {
                op: "projected baseline",
                kind: set.kind().name(),
            });
        }
        let default_dir = Vector::basis(set.dim(), 0, -1.0);
        let x1 = set.lp_minimize(seed_direction.unwrap_or(&default_dir))?;
        Ok(Self {
            set,
            x_current: x1,
            grad_sq_sum: 0.0,
            eta_last: f64::INFINITY,
        })
    }

    pub fn current(&self) -> &Vector {
        &self.x_current
    }

    pub fn set(&self) -> &Arc<DecisionSet> {
        &self.set
    }

    pub fn eta(&self) -> f64 {
        self.eta_last
    }

    /// `x ← Π(x − η g)` with `η = D / √(2 Σ‖g_τ‖²)`. A zero gradient history leaves `x` in place.
    pub fn step(&mut self, grad: &Vector) -> Result<Vector> {
        grad.check_dim(self.set.dim())?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        self.grad_sq_sum += grad.norm_sq();
        if self.grad_sq_sum > 0.0 {
            self.eta_last = self.set.diameter() / (2.0 * self.grad_sq_sum).sqrt();
            let mut y = self.x_current.clone();
            y.axpy(-self.eta_last, grad);
            self.x_current = self.set.project(&y)?;
        }
        Ok(self.x_current.clone())
    }
}

/// Projected descent on `f_t + λ(Q(t)) g_t⁺` with the same queue as the
/// projection-free policy.
#[derive(Clone, Debug)]
pub struct ProjectedCocoState {
    params: CocoParams,
    queue: f64,
    last_lambda: f64,
    inner: ProjectedState,
}

impl ProjectedCocoState {
    pub fn new(params: CocoParams, set: Arc<DecisionSet>, seed_direction: Option<&Vector>) -> Result<Self> {
        Ok(Self {
            queue: params.q0,
            last_lambda: params.lambda(params.q0),
            inner: ProjectedState::new(set, seed_direction)?,
            params,
        })
    }

    pub fn current(&self) -> &Vector {
        self.inner.current()
    }

    pub fn queue(&self) -> f64 {
        self.queue
    }

    pub fn last_lambda(&self) -> f64 {
        self.last_lambda
    }

    pub fn eta(&self) -> f64 {
        self.inner.eta()
    }

    pub fn step(&mut self, fb: &FirstOrderFeedback) -> Result<Vector> {
        self.queue += positive_part(fb.g_value);
        self.last_lambda = self.params.lambda(self.queue);
        let (grad, _) = surrogate_gradient_with_lambda(self.params.g_bound, self.last_lambda, fb);
        self.inner.step(&grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn first_step_length() {
        let set = Arc::new(DecisionSet::cube(2, -10.0, 10.0).unwrap());
        let mut st = ProjectedState::new(set.clone(), Some(&v(&[0.0, 0.0]))).unwrap();
        let x0 = st.current().clone();
        let g = v(&[-3.0, -4.0]);
        let x1 = st.step(&g).unwrap();
        let eta = set.diameter() / (2f64.sqrt() * 5.0);
        assert!((st.eta() - eta).abs() < 1e-12);
        assert!((x1.dist(&x0) - eta * 5.0).abs() < 1e-12);
        assert!(x1.sub(&x0).dot(&g) < 0.0);
    }

    #[test]
    fn ball_boundary_moves_inward() {
        let set = Arc::new(DecisionSet::ball(Vector::zeros(2), 1.0).unwrap());
        let mut st = ProjectedState::new(set.clone(), Some(&v(&[-1.0, 0.0]))).unwrap();
        assert_eq!(st.current(), &v(&[1.0, 0.0]));
        let x = st.step(&v(&[1.0, 0.0])).unwrap();
        // η = 2/√2 = √2, so x = 1 − √2 lies inside and projection is the identity.
        assert!((x[0] - (1.0 - 2f64.sqrt())).abs() < 1e-12);
        assert_eq!(x[1], 0.0);
    }

    #[test]
    fn simplex_iterates_feasible() {
        let set = Arc::new(DecisionSet::simplex(4, 1.0).unwrap());
        let mut st = ProjectedState::new(set.clone(), None).unwrap();
        let mut rng = Rng::new(9);
        for _ in 0..100 {
            let g = Vector::new((0..4).map(|_| rng.uniform_range(-1.0, 1.0)).collect()).unwrap();
            let x = st.step(&g).unwrap();
            assert!(set.membership(&x, 1e-9));
        }
    }

    #[test]
    fn flow_polytope_rejected() {
        let dag = Arc::new(crate::oracles::Dag::new(2, vec![(0, 1)]).unwrap());
        let set = Arc::new(DecisionSet::flow_polytope(dag, 0, 1).unwrap());
        assert!(ProjectedState::new(set, None).is_err());
    }
}
