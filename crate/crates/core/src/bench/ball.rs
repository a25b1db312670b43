//! Linear costs and a linear constraint on the unit ball.
//!
//! `f_t(x) = <a_t, x>` with `a_t = a ∘ s_t`, `s_t` coordinatewise in
//! `[0.5, 1.5]`, and `g_t(x) = κ_t <b, x − p>` with `κ_t ∈ [0.8, 1.2]`. All
//! rounds share the feasible halfspace `<b, x> <= <b, p>`; the planted point
//! `p` lies inside the ball, and the unconstrained minimizer of the average
//! cost lies outside the halfspace, so the constraint binds.

use crate::error::{Error, Result};
use crate::metrics::{BanditFeedback, FirstOrderFeedback};
use crate::rng::Rng;
use crate::vector::Vector;

pub const BALL_DIM: usize = 5;
/// Planted point is `−PLANTED_OFFSET · b`.
pub const PLANTED_OFFSET: f64 = 0.25;
pub const COST_SCALE: (f64, f64) = (0.5, 1.5);
pub const CONSTRAINT_SCALE: (f64, f64) = (0.8, 1.2);

#[derive(Clone, Debug, PartialEq)]
pub struct BallInstance {
    pub dim: usize,
    /// Unit-norm base cost direction.
    pub a: Vector,
    /// Unit-norm constraint normal.
    pub b: Vector,
    pub planted: Vector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BallRound {
    pub cost: Vector,
    pub kappa: f64,
}

fn unit_gaussian(n: usize, rng: &mut Rng) -> Vector {
    crate::bandit::sphere_sample(n, rng)
}

impl BallInstance {
    pub fn generate(seed: u64, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter("ball instance needs dimension >= 2".into()));
        }
        let mut rng = Rng::stream(seed, 0);
        let a = unit_gaussian(dim, &mut rng);
        let z = unit_gaussian(dim, &mut rng);
        let mut b = a.scaled(-1.0);
        b.axpy(0.5, &z);
        let b = b.scaled(1.0 / b.norm());
        let planted = b.scaled(-PLANTED_OFFSET);
        Ok(Self { dim, a, b, planted })
    }

    pub fn rounds(&self, horizon: u64, seed: u64) -> Vec<BallRound> {
        let mut rng = Rng::stream(seed, 1);
        (0..horizon)
            .map(|_| {
                let cost = Vector::from_vec_unchecked(
                    self.a
                        .iter()
                        .map(|c| c * rng.uniform_range(COST_SCALE.0, COST_SCALE.1))
                        .collect(),
                );
                let kappa = rng.uniform_range(CONSTRAINT_SCALE.0, CONSTRAINT_SCALE.1);
                BallRound { cost, kappa }
            })
            .collect()
    }

    /// Common Lipschitz bound of all `f_t` and `g_t`.
    pub fn g_bound(&self) -> f64 {
        (COST_SCALE.1 * self.a.norm()).max(CONSTRAINT_SCALE.1 * self.b.norm())
    }

    /// Bound on `|f_t|` over the unit ball.
    pub fn f_sup(&self) -> f64 {
        COST_SCALE.1 * self.a.norm()
    }

    /// Bound on `|g_t|` over the unit ball.
    pub fn g_sup(&self) -> f64 {
        CONSTRAINT_SCALE.1 * self.b.norm() * (1.0 + self.planted.norm())
    }

    fn offset(&self) -> f64 {
        self.b.dot(&self.planted)
    }

    pub fn first_order(&self, rd: &BallRound, x: &Vector) -> Result<FirstOrderFeedback> {
        x.check_dim(self.dim)?;
        let g_grad = self.b.scaled(rd.kappa);
        FirstOrderFeedback::new(rd.cost.dot(x), rd.cost.clone(), rd.kappa * (self.b.dot(x) - self.offset()), g_grad)
    }

    pub fn bandit(&self, rd: &BallRound, x: &Vector) -> Result<BanditFeedback> {
        let fb = self.first_order(rd, x)?;
        BanditFeedback::new(fb.f_value, fb.g_value)
    }

    /// Minimizer of `<c, x>` over `{‖x‖ <= 1, <b, x> <= <b, p>}`.
    pub fn comparator(&self, cost_sum: &Vector) -> Vector {
        let h = self.offset();
        let c_norm = cost_sum.norm();
        if c_norm == 0.0 {
            return self.planted.clone();
        }
        let free = cost_sum.scaled(-1.0 / c_norm);
        if self.b.dot(&free) <= h {
            return free;
        }
        // On the circle where the hyperplane meets the sphere.
        let bb = self.b.norm_sq();
        let center = self.b.scaled(h / bb);
        let rho = (1.0 - h * h / bb).max(0.0).sqrt();
        let mut perp = cost_sum.clone();
        perp.axpy(-cost_sum.dot(&self.b) / bb, &self.b);
        let p_norm = perp.norm();
        if p_norm == 0.0 {
            return center;
        }
        let mut x = center;
        x.axpy(-rho / p_norm, &perp);
        x
    }
}
