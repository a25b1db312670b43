//! Projection-free constrained OCO: a violation queue, a power-law potential
//! `Φ(Q) = Q^m`, and surrogate costs `V f_t + Φ'(Q(t)) g_t^+` handed to
//! adaptive OCG.
//!
//! `V = (c m² T^{3/4})^m` overflows `f64` for all but tiny horizons, so only
//! the normalized weight `λ = Φ'(Q)/V` is ever formed, in log space. Dividing
//! the surrogate by `V` scales OCG's gradients and Lipschitz estimate by the
//! same factor, which leaves every oracle call unchanged.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metrics::{positive_part, FirstOrderFeedback};
use crate::ocg::OcgState;
use crate::oracles::DecisionSet;
use crate::vector::Vector;

/// Upper bound on consecutive surrogate Lipschitz ratios when per-round violations are at most `G·D`.
pub const RATIO_BOUND: f64 = 1.0 + std::f64::consts::E;

/// Slack added to [`RATIO_BOUND`] in runtime checks.
pub const RATIO_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct CocoParams {
    pub horizon: u64,
    /// Common Lipschitz bound of costs and constraints.
    pub g_bound: f64,
    pub diameter: f64,
    /// Potential exponent, `ln T`.
    pub m: f64,
    /// `144 G D`.
    pub c: f64,
    /// `ln V = m ln(c m² T^{3/4})`.
    pub log_v: f64,
    /// Initial queue, `G D ln T`.
    pub q0: f64,
}

impl CocoParams {
    pub fn new(horizon: u64, g_bound: f64, diameter: f64) -> Result<Self> {
        if horizon < 8 {
            return Err(Error::InvalidParameter(format!(
                "horizon must be at least 8, got {horizon}"
            )));
        }
        if !(g_bound > 0.0 && g_bound.is_finite() && diameter > 0.0 && diameter.is_finite()) {
            return Err(Error::InvalidParameter("G and D must be positive and finite".into()));
        }
        let t = horizon as f64;
        let m = t.ln();
        let c = 144.0 * g_bound * diameter;
        let log_v = m * (c.ln() + 2.0 * m.ln() + 0.75 * t.ln());
        Ok(Self {
            horizon,
            g_bound,
            diameter,
            m,
            c,
            log_v,
            q0: g_bound * diameter * t.ln(),
        })
    }

    /// Explicit `m`, `V` and `Q(0)` for cross-checks at small parameters.
    pub fn diagnostic(horizon: u64, g_bound: f64, diameter: f64, m: f64, v: f64, q0: f64) -> Result<Self> {
        if !(m > 1.0 && v > 0.0 && q0 > 0.0) {
            return Err(Error::InvalidParameter("diagnostic overrides need m > 1, V > 0, Q0 > 0".into()));
        }
        Ok(Self {
            horizon,
            g_bound,
            diameter,
            m,
            c: 144.0 * g_bound * diameter,
            log_v: v.ln(),
            q0,
        })
    }

    /// `λ(Q) = Φ'(Q)/V = exp(ln m + (m−1) ln Q − ln V)`.
    pub fn lambda(&self, queue: f64) -> f64 {
        (self.m.ln() + (self.m - 1.0) * queue.ln() - self.log_v).exp()
    }

    /// Normalized surrogate Lipschitz constant `L_t / V = G (1 + λ(Q))`.
    pub fn lipschitz(&self, queue: f64) -> f64 {
        self.g_bound * (1.0 + self.lambda(queue))
    }
}

/// Gradient of the normalized surrogate `f_t + λ g_t^+` at the played point,
/// and its Lipschitz hint `G (1 + λ)`. The subgradient of `g^+` at `g <= 0` is zero.
pub fn surrogate_gradient(params: &CocoParams, queue: f64, fb: &FirstOrderFeedback) -> (Vector, f64) {
    let lambda = params.lambda(queue);
    surrogate_gradient_with_lambda(params.g_bound, lambda, fb)
}

pub fn surrogate_gradient_with_lambda(g_bound: f64, lambda: f64, fb: &FirstOrderFeedback) -> (Vector, f64) {
    let mut grad = fb.f_grad.clone();
    if fb.g_value > 0.0 {
        grad.axpy(lambda, &fb.g_grad);
    }
    (grad, g_bound * (1.0 + lambda))
}

/// `L_t / L_{t−1} = (1 + λ(Q_now)) / (1 + λ(Q_prev))`.
pub fn lipschitz_ratio(params: &CocoParams, q_prev: f64, q_now: f64) -> f64 {
    (1.0 + params.lambda(q_now)) / (1.0 + params.lambda(q_prev))
}

#[derive(Clone, Debug)]
pub struct CocoState {
    params: CocoParams,
    queue: f64,
    ocg: OcgState,
    lipschitz_prev: f64,
    lipschitz_first: Option<f64>,
    last_lambda: f64,
    max_ratio: f64,
    max_increment: f64,
    ratio_violations: u64,
}

impl CocoState {
    pub fn new(params: CocoParams, set: Arc<DecisionSet>, seed_direction: Option<&Vector>) -> Result<Self> {
        let ocg = OcgState::new(set, params.horizon, seed_direction)?;
        let lipschitz_prev = params.lipschitz(params.q0);
        Ok(Self {
            queue: params.q0,
            last_lambda: params.lambda(params.q0),
            params,
            ocg,
            lipschitz_prev,
            lipschitz_first: None,
            max_ratio: 1.0,
            max_increment: 0.0,
            ratio_violations: 0,
        })
    }

    pub fn params(&self) -> &CocoParams {
        &self.params
    }

    pub fn queue(&self) -> f64 {
        self.queue
    }

    pub fn ocg(&self) -> &OcgState {
        &self.ocg
    }

    pub fn current(&self) -> &Vector {
        self.ocg.current()
    }

    pub fn last_lambda(&self) -> f64 {
        self.last_lambda
    }

    /// Largest `L_t / L_{t−1}` seen so far.
    pub fn max_ratio(&self) -> f64 {
        self.max_ratio
    }

    /// Largest single-round queue increment seen so far.
    pub fn max_increment(&self) -> f64 {
        self.max_increment
    }

    /// Rounds where the ratio bound failed although the increment was at most `G·D`.
    pub fn ratio_violations(&self) -> u64 {
        self.ratio_violations
    }

    /// `ln(L_T / L_1)` with normalized Lipschitz constants.
    pub fn log_lipschitz_growth(&self) -> f64 {
        match self.lipschitz_first {
            Some(first) => (self.lipschitz_prev / first).ln(),
            None => 0.0,
        }
    }

    /// `ln(L_T/L_1) <= (ln T)²`.
    pub fn growth_bound_holds(&self) -> bool {
        let log_t = (self.params.horizon as f64).ln();
        self.log_lipschitz_growth() <= log_t * log_t
    }

    /// Feeds the feedback observed at the current action; returns the next action.
    pub fn step(&mut self, fb: &FirstOrderFeedback) -> Result<Vector> {
        fb.f_grad.check_dim(self.ocg.set().dim())?;
        let increment = positive_part(fb.g_value);
        self.queue += increment;
        self.max_increment = self.max_increment.max(increment);

        let lambda = self.params.lambda(self.queue);
        self.last_lambda = lambda;
        let (grad, hint) = surrogate_gradient_with_lambda(self.params.g_bound, lambda, fb);

        let ratio = hint / self.lipschitz_prev;
        self.max_ratio = self.max_ratio.max(ratio);
        let bounded_increment = increment <= self.params.g_bound * self.params.diameter;
        if bounded_increment && ratio > RATIO_BOUND + RATIO_SLACK {
            self.ratio_violations += 1;
        }
        self.lipschitz_prev = hint;
        self.lipschitz_first.get_or_insert(hint);

        self.ocg.step(&grad, Some(hint))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn rejects_short_horizon() {
        assert!(CocoParams::new(7, 1.0, 1.0).is_err());
        assert!(CocoParams::new(8, 0.0, 1.0).is_err());
    }

    #[test]
    fn q0_formula() {
        let p = CocoParams::new(1600, 2.0, 3.0).unwrap();
        assert!((p.q0 - 6.0 * 1600f64.ln()).abs() < 1e-12);
        assert!((p.q0 - 44.2665).abs() < 1e-3);
        assert!((p.m - 7.3778).abs() < 1e-4);
    }

    #[test]
    fn lambda_small_override_matches_direct() {
        let p = CocoParams::diagnostic(8, 1.0, 1.0, 3.0, 8.0, 1.0).unwrap();
        let direct = 3.0 * 2.0f64.powi(2) / 8.0;
        assert_eq!(direct, 1.5);
        assert!((p.lambda(2.0) - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn lambda_increasing() {
        let p = CocoParams::new(1000, 1.0, 2.0).unwrap();
        let mut prev = p.lambda(p.q0);
        for k in 1..50 {
            let l = p.lambda(p.q0 + k as f64 * 100.0);
            assert!(l > prev);
            prev = l;
        }
    }

    #[test]
    fn ratio_examples() {
        let p = CocoParams::diagnostic(8, 1.0, 1.0, 3.0, 8.0, 1.0).unwrap();
        assert_eq!(lipschitz_ratio(&p, 2.0, 2.0), 1.0);
        assert!((lipschitz_ratio(&p, 2.0, 2.5) - 1.3375).abs() < 1e-12);
    }

    #[test]
    fn surrogate_gradient_cases() {
        let fb = FirstOrderFeedback::new(0.0, v(&[1.0, 0.0]), 1.0, v(&[0.0, 2.0])).unwrap();
        let (g, h) = surrogate_gradient_with_lambda(2.0, 0.5, &fb);
        assert_eq!(g, v(&[1.0, 1.0]));
        assert_eq!(h, 3.0);

        let inactive = FirstOrderFeedback::new(0.0, v(&[1.0, 3.0]), -0.5, v(&[7.0, 2.0])).unwrap();
        let (g, h) = surrogate_gradient_with_lambda(2.0, 0.5, &inactive);
        assert_eq!(g, v(&[1.0, 3.0]));
        assert_eq!(h, 3.0);

        let (g, _) = surrogate_gradient_with_lambda(2.0, 0.0, &fb);
        assert_eq!(g, v(&[1.0, 0.0]));
    }

    #[test]
    fn queue_increments_by_violation() {
        let set = Arc::new(DecisionSet::simplex(2, 1.0).unwrap());
        let p = CocoParams::new(100, 1.0, set.diameter()).unwrap();
        let mut st = CocoState::new(p.clone(), set, None).unwrap();
        let fb = FirstOrderFeedback::new(0.0, v(&[1.0, 0.0]), 0.7, v(&[0.0, 1.0])).unwrap();
        st.step(&fb).unwrap();
        assert_eq!(st.queue(), p.q0 + 0.7);
    }

    #[test]
    fn log_v_at_smallest_horizon() {
        // 40-digit reference values for T = 8, G = D = 1.
        let p = CocoParams::new(8, 1.0, 1.0).unwrap();
        assert!((p.m - 2.079_441_541_679_836).abs() < 1e-14);
        assert!((p.log_v - 16.622_209_750_752_154).abs() < 1e-12);
        assert!(((p.log_v / p.m).exp() - 2_961.920_611_114_121).abs() < 1e-8);
    }

    #[test]
    fn three_round_script() {
        let set = Arc::new(DecisionSet::simplex(2, 1.0).unwrap());
        let p = CocoParams::diagnostic(8, 1.0, set.diameter(), 3.0, 8.0, 1.0).unwrap();
        let mut st = CocoState::new(p, set, None).unwrap();
        assert_eq!(st.current(), &v(&[1.0, 0.0]));

        // Q = 1.5, λ = 3·1.5²/8; direction (1, λ) picks e2.
        let fb = FirstOrderFeedback::new(1.0, v(&[1.0, 0.0]), 0.5, v(&[0.0, 1.0])).unwrap();
        let x = st.step(&fb).unwrap();
        assert_eq!(st.queue(), 1.5);
        assert!((st.last_lambda() - 0.84375).abs() < 1e-14);
        assert_eq!(x, v(&[0.0, 1.0]));

        // Inactive constraint: queue and λ unchanged; the regularizer pulls back to e1.
        let fb = FirstOrderFeedback::new(1.0, v(&[0.0, 1.0]), -0.2, v(&[5.0, 5.0])).unwrap();
        let x = st.step(&fb).unwrap();
        assert_eq!(st.queue(), 1.5);
        assert!((st.last_lambda() - 0.84375).abs() < 1e-14);
        assert_eq!(x, v(&[1.0, 0.0]));

        // Q = 2.5, λ = 3·2.5²/8; gradient sum (−0.34375, 4.015625) keeps e1.
        let fb = FirstOrderFeedback::new(1.0, v(&[1.0, 1.0]), 1.0, v(&[-1.0, 0.5])).unwrap();
        let x = st.step(&fb).unwrap();
        assert_eq!(st.queue(), 2.5);
        assert!((st.last_lambda() - 2.34375).abs() < 1e-14);
        assert!((st.ocg().grad_sum()[0] + 0.34375).abs() < 1e-14);
        assert!((st.ocg().grad_sum()[1] - 4.015625).abs() < 1e-14);
        assert_eq!(x, v(&[1.0, 0.0]));
        assert!((st.max_ratio() - 3.34375 / 1.84375).abs() < 1e-12);
    }

    #[test]
    fn normalized_surrogate_matches_unnormalized() {
        // With V = 8 the unnormalized surrogate V f + Φ'(Q) g⁺ is representable.
        let set = Arc::new(DecisionSet::simplex(4, 1.0).unwrap());
        let (m, big_v, q0, g_bound) = (3.0, 8.0, 1.0, 2.0);
        let p = CocoParams::diagnostic(200, g_bound, set.diameter(), m, big_v, q0).unwrap();
        let mut coco = CocoState::new(p, set.clone(), None).unwrap();
        let mut raw = OcgState::new(set, 200, None).unwrap();
        let mut queue = q0;
        let mut rng = crate::rng::Rng::new(5);
        for _ in 0..200 {
            let f_grad = v(&(0..4).map(|_| rng.uniform_range(-1.0, 1.0)).collect::<Vec<_>>());
            let g_grad = v(&(0..4).map(|_| rng.uniform_range(-1.0, 1.0)).collect::<Vec<_>>());
            let g_value = rng.uniform_range(-0.5, 0.5);
            let fb = FirstOrderFeedback::new(0.0, f_grad.clone(), g_value, g_grad.clone()).unwrap();
            queue += g_value.max(0.0);
            let weight = m * queue.powf(m - 1.0);
            let mut grad = f_grad.scaled(big_v);
            if g_value > 0.0 {
                grad.axpy(weight, &g_grad);
            }
            let hint = g_bound * (big_v + weight);
            let a = coco.step(&fb).unwrap();
            let b = raw.step(&grad, Some(hint)).unwrap();
            assert_eq!(a, b);
        }
    }
}
