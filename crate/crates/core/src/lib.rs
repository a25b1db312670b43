//! Projection-free online convex optimization with adversarial constraints.
//!
//! * [`ocg`]: adaptive online conditional gradient (one oracle call per round)
//!   and the FTRL reference it is analysed against.
//! * [`coco`]: the surrogate-cost meta-algorithm for constrained OCO.
//! * [`bandit`]: one-point gradient estimates, shrunken sets, blocked
//!   conditional gradient and the constrained bandit wrapper.
//! * [`baselines`]: projected online gradient descent on the same surrogates.
//! * [`oracles`]: linear-minimization oracles, projections, flow decomposition.
//! * [`bench`]: the constrained online shortest-path experiment.

pub mod bandit;
pub mod baselines;
pub mod bench;
pub mod coco;
pub mod error;
pub mod metrics;
pub mod ocg;
pub mod oracles;
pub mod rng;
pub mod vector;

pub use error::{Error, Result};
pub use metrics::{positive_part, BanditFeedback, FirstOrderFeedback, GameMetrics, TraceRow};
pub use rng::Rng;
pub use vector::Vector;
