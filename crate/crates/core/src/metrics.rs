//! Round feedback, regret / constraint-violation accounting and trace rows.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::vector::Vector;

/// `max(0, v)`.
pub fn positive_part(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Values and gradients of the round's cost `f_t` and constraint `g_t` at the played point.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstOrderFeedback {
    pub f_value: f64,
    pub f_grad: Vector,
    pub g_value: f64,
    pub g_grad: Vector,
}

impl FirstOrderFeedback {
    pub fn new(f_value: f64, f_grad: Vector, g_value: f64, g_grad: Vector) -> Result<Self> {
        if !f_value.is_finite() || !g_value.is_finite() {
            return Err(Error::NonFinite("feedback value"));
        }
        if f_grad.len() != g_grad.len() {
            return Err(Error::DimensionMismatch {
                expected: f_grad.len(),
                got: g_grad.len(),
            });
        }
        Ok(Self {
            f_value,
            f_grad,
            g_value,
            g_grad,
        })
    }

    pub fn dim(&self) -> usize {
        self.f_grad.len()
    }
}

/// Only the cost and constraint values at the played point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BanditFeedback {
    pub f_value: f64,
    pub g_value: f64,
}

impl BanditFeedback {
    pub fn new(f_value: f64, g_value: f64) -> Result<Self> {
        if !f_value.is_finite() || !g_value.is_finite() {
            return Err(Error::NonFinite("bandit feedback"));
        }
        Ok(Self { f_value, g_value })
    }
}

/// Running regret and cumulative constraint violation (CCV).
///
/// All sums are plain left-to-right accumulation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GameMetrics {
    pub cum_cost: f64,
    pub comparator_cum_cost: f64,
    pub ccv: f64,
    pub round: u64,
}

impl GameMetrics {
    pub fn regret(&self) -> f64 {
        self.cum_cost - self.comparator_cum_cost
    }

    /// Folds in one round: the learner's cost, the comparator's cost and the
    /// constraint value at the learner's point.
    pub fn update(&self, f_at_x: f64, f_at_comp: f64, g_at_x: f64) -> Result<GameMetrics> {
        if !(f_at_x.is_finite() && f_at_comp.is_finite() && g_at_x.is_finite()) {
            return Err(Error::NonFinite("metrics update"));
        }
        Ok(GameMetrics {
            cum_cost: self.cum_cost + f_at_x,
            comparator_cum_cost: self.comparator_cum_cost + f_at_comp,
            ccv: self.ccv + positive_part(g_at_x),
            round: self.round + 1,
        })
    }
}

/// One per-round record of an experiment trace.
///
/// Bandit-only and sampling-only columns are left empty for policies that do
/// not produce them.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TraceRow {
    pub policy: String,
    pub t: u64,
    pub f_val: f64,
    pub g_val: f64,
    #[serde(rename = "Q")]
    pub queue: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub eta_scaled: f64,
    pub cum_regret: f64,
    pub ccv: f64,
    pub oracle_ns: u64,
    pub block: Option<u64>,
    pub inner_cg_iters: Option<u64>,
    pub gap_at_exit: Option<f64>,
    pub oracle_calls_cum: u64,
    pub realized_cost: Option<f64>,
}

impl TraceRow {
    pub const COLUMNS: [&'static str; 16] = [
        "policy",
        "t",
        "f_val",
        "g_val",
        "Q",
        "lambda",
        "sigma",
        "eta_scaled",
        "cum_regret",
        "ccv",
        "oracle_ns",
        "block",
        "inner_cg_iters",
        "gap_at_exit",
        "oracle_calls_cum",
        "realized_cost",
    ];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_part_cases() {
        assert_eq!(positive_part(3.5), 3.5);
        assert_eq!(positive_part(-2.0), 0.0);
        assert_eq!(positive_part(0.0), 0.0);
    }

    #[test]
    fn single_step_update() {
        let m = GameMetrics::default().update(1.0, 0.5, -1.0).unwrap();
        assert_eq!(
            m,
            GameMetrics {
                cum_cost: 1.0,
                comparator_cum_cost: 0.5,
                ccv: 0.0,
                round: 1
            }
        );
        assert_eq!(m.regret(), 0.5);
        let m = GameMetrics::default().update(0.0, 0.0, 2.0).unwrap();
        assert_eq!(m.ccv, 2.0);
    }

    #[test]
    fn alternating_violations() {
        let mut m = GameMetrics::default();
        for t in 0..10 {
            let g = if t % 2 == 0 { 1.0 } else { -1.0 };
            m = m.update(0.0, 0.0, g).unwrap();
        }
        assert_eq!(m.ccv, 5.0);
        assert_eq!(m.round, 10);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(GameMetrics::default().update(f64::NAN, 0.0, 0.0).is_err());
        assert!(GameMetrics::default().update(0.0, 0.0, f64::INFINITY).is_err());
    }
}
