//! Adaptive online conditional gradient, and FTRL with a time-varying
//! Euclidean regularizer as its analysis companion.
//!
//! Each OCG round makes exactly one linear-minimization oracle call:
//!
//! ```text
//! η_t   = D / (2 L_t T^{3/4})
//! ∇F_t  = Σ_{τ≤t} ∇_τ + (2/η_t)(x_t − x_1)
//! v_t   = argmin_{x∈X} <∇F_t, x>
//! x_t+1 = (1 − σ_t) x_t + σ_t v_t,    σ_t = min(1, 2/√t)
//! ```

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::oracles::DecisionSet;
use crate::vector::Vector;

/// Lipschitz estimates are floored here so the step size stays finite on an
/// all-zero gradient stream.
pub const LIPSCHITZ_FLOOR: f64 = 1e-12;

/// `min(1, 2/√t)` for round `t >= 1`.
pub fn sigma(t: u64) -> f64 {
    (2.0 / (t as f64).sqrt()).min(1.0)
}

/// `D / (2 L T^{3/4})`.
pub fn eta(diameter: f64, lipschitz: f64, horizon: u64) -> f64 {
    diameter / (2.0 * lipschitz * (horizon as f64).powf(0.75))
}

#[derive(Clone, Debug)]
pub struct OcgState {
    set: Arc<DecisionSet>,
    horizon: u64,
    round: u64,
    x_current: Vector,
    x_anchor: Vector,
    grad_sum: Vector,
    lipschitz_max: f64,
    eta_current: f64,
    sigma_last: f64,
    oracle_calls: u64,
}

impl OcgState {
    /// Starts at `x_1 = lp_minimize(set, seed_direction)`. The default
    /// direction is `-e_1`, which puts `x_1` on the first vertex of a simplex.
    pub fn new(set: Arc<DecisionSet>, horizon: u64, seed_direction: Option<&Vector>) -> Result<Self> {
        if horizon < 1 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        let n = set.dim();
        let default_dir;
        let dir = match seed_direction {
            Some(d) => d,
            None => {
                default_dir = Vector::basis(n, 0, -1.0);
                &default_dir
            }
        };
        let x1 = set.lp_minimize(dir)?;
        Ok(Self {
            horizon,
            round: 0,
            x_current: x1.clone(),
            x_anchor: x1,
            grad_sum: Vector::zeros(n),
            lipschitz_max: 0.0,
            eta_current: f64::INFINITY,
            sigma_last: f64::NAN,
            oracle_calls: 0,
            set,
        })
    }

    pub fn set(&self) -> &Arc<DecisionSet> {
        &self.set
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Number of completed rounds.
    pub fn round(&self) -> u64 {
        self.round
    }

    /// The action to play next.
    pub fn current(&self) -> &Vector {
        &self.x_current
    }

    pub fn anchor(&self) -> &Vector {
        &self.x_anchor
    }

    pub fn grad_sum(&self) -> &Vector {
        &self.grad_sum
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz_max
    }

    pub fn eta(&self) -> f64 {
        self.eta_current
    }

    /// `σ_t` used by the last step (NaN before the first).
    pub fn last_sigma(&self) -> f64 {
        self.sigma_last
    }

    pub fn oracle_calls(&self) -> u64 {
        self.oracle_calls
    }

    /// Consumes the gradient observed at the current action and returns the next action.
    ///
    /// Without a hint the Lipschitz estimate is the running maximum of
    /// gradient norms; with a hint the hint is used verbatim.
    pub fn step(&mut self, grad: &Vector, lipschitz_hint: Option<f64>) -> Result<Vector> {
        grad.check_dim(self.set.dim())?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        let lipschitz = match lipschitz_hint {
            Some(h) if !(h.is_finite() && h >= 0.0) => {
                return Err(Error::InvalidParameter(format!("Lipschitz hint {h}")));
            }
            Some(h) => h,
            None => self.lipschitz_max.max(grad.norm()),
        }
        .max(LIPSCHITZ_FLOOR);

        let t = self.round + 1;
        self.lipschitz_max = lipschitz;
        self.eta_current = eta(self.set.diameter(), lipschitz, self.horizon);
        self.grad_sum.axpy(1.0, grad);

        let mut direction = self.grad_sum.clone();
        direction.axpy(2.0 / self.eta_current, &self.x_current.sub(&self.x_anchor));
        let vertex = self.set.lp_minimize(&direction)?;
        self.oracle_calls += 1;

        let s = sigma(t);
        self.sigma_last = s;
        self.x_current = self.x_current.lerp(&vertex, s);
        self.round = t;
        Ok(self.x_current.clone())
    }
}

/// FTRL over a set with closed-form projection:
/// `x_{t+1} = argmin_x Σ ∇_τ·x + ‖x − x_1‖²/η_t = Π(x_1 − (η_t/2) Σ ∇_τ)`.
#[derive(Clone, Debug)]
pub struct FtrlState {
    set: Arc<DecisionSet>,
    x_anchor: Vector,
    x_current: Vector,
    grad_sum: Vector,
    eta_current: f64,
    eta_trace: Vec<f64>,
    grad_norm_trace: Vec<f64>,
}

impl FtrlState {
    /// `eta_initial` plays the role of `η_0`.
    pub fn new(set: Arc<DecisionSet>, x_anchor: Vector, eta_initial: f64) -> Result<Self> {
        x_anchor.check_dim(set.dim())?;
        if set.project(&x_anchor).is_err() {
            return Err(Error::Unsupported {
                op: "ftrl",
                kind: set.kind().name(),
            });
        }
        if !(eta_initial > 0.0 && eta_initial.is_finite()) {
            return Err(Error::InvalidParameter("eta must be positive".into()));
        }
        Ok(Self {
            grad_sum: Vector::zeros(set.dim()),
            x_current: x_anchor.clone(),
            x_anchor,
            eta_current: eta_initial,
            eta_trace: vec![eta_initial],
            grad_norm_trace: Vec::new(),
            set,
        })
    }

    pub fn current(&self) -> &Vector {
        &self.x_current
    }

    /// `η_0, η_1, …, η_t`.
    pub fn eta_trace(&self) -> &[f64] {
        &self.eta_trace
    }

    /// `‖∇_1‖, …, ‖∇_t‖`.
    pub fn grad_norm_trace(&self) -> &[f64] {
        &self.grad_norm_trace
    }

    /// Objective minimized by the next action: `Σ ∇·x + ‖x − x_1‖²/η`.
    pub fn objective(&self, x: &Vector) -> f64 {
        self.grad_sum.dot(x) + x.sub(&self.x_anchor).norm_sq() / self.eta_current
    }

    pub fn step(&mut self, grad: &Vector, eta_next: f64) -> Result<Vector> {
        grad.check_dim(self.set.dim())?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        if !(eta_next > 0.0) || eta_next > self.eta_current {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be positive and nonincreasing ({eta_next} after {})",
                self.eta_current
            )));
        }
        self.grad_sum.axpy(1.0, grad);
        self.grad_norm_trace.push(grad.norm());
        self.eta_current = eta_next;
        self.eta_trace.push(eta_next);
        let mut center = self.x_anchor.clone();
        center.axpy(-eta_next / 2.0, &self.grad_sum);
        self.x_current = self.set.project(&center)?;
        Ok(self.x_current.clone())
    }
}

/// Regret bound for FTRL with regularizer `‖x − x_1‖²/η_{t−1}`:
/// `D²/η_T + ¼ Σ_t η_{t−1} ‖∇_t‖²`, where `eta_trace = (η_1, …, η_T)` and
/// `η_0` is taken equal to `η_1`.
pub fn ftrl_regret_certificate(diameter: f64, eta_trace: &[f64], grad_norm_trace: &[f64]) -> Result<f64> {
    if eta_trace.is_empty() || eta_trace.len() != grad_norm_trace.len() {
        return Err(Error::InvalidParameter(
            "eta and gradient-norm traces must have equal nonzero length".into(),
        ));
    }
    let eta_last = *eta_trace.last().unwrap();
    let mut sum = 0.0;
    for (t, g) in grad_norm_trace.iter().enumerate() {
        let eta_prev = if t == 0 { eta_trace[0] } else { eta_trace[t - 1] };
        sum += eta_prev * g * g;
    }
    Ok(diameter * diameter / eta_last + 0.25 * sum)
}
