//! Bandit feedback: one-point gradient estimates on a shrunken set, blocked
//! conditional gradient with a stopping rule, and the constrained wrapper
//! that feeds it surrogate values built from an overestimated queue.

use std::sync::Arc;

use crate::coco::CocoParams;
use crate::error::{Error, Result};
use crate::metrics::{positive_part, BanditFeedback};
use crate::oracles::{DecisionSet, LinearOracle};
use crate::rng::Rng;
use crate::vector::Vector;

/// Uniform draw from the unit sphere in `R^n`.
pub fn sphere_sample(n: usize, rng: &mut Rng) -> Vector {
    assert!(n >= 1, "sphere dimension must be positive");
    loop {
        let g: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            return Vector::from_vec_unchecked(g.into_iter().map(|v| v / norm).collect());
        }
    }
}

/// Uniform draw from the unit ball in `R^n`.
pub fn ball_sample(n: usize, rng: &mut Rng) -> Vector {
    let u = sphere_sample(n, rng);
    let radius = rng.uniform().powf(1.0 / n as f64);
    u.scaled(radius)
}

/// One-point estimate `(n/δ) f(x + δu) u` of the smoothed gradient.
pub fn gradient_estimate(n: usize, delta: f64, f_value: f64, u: &Vector) -> Vector {
    u.scaled(n as f64 / delta * f_value)
}

/// Sample mean and its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Monte-Carlo estimate of `E_{v∼ball}[f(x + δv)]`.
pub fn smoothed_value_mc<F>(f: F, x: &Vector, delta: f64, samples: usize, rng: &mut Rng) -> McEstimate
where
    F: Fn(&Vector) -> f64,
{
    assert!(samples >= 2, "need at least two samples");
    let n = x.len();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let mut y = x.clone();
        y.axpy(delta, &ball_sample(n, rng));
        let v = f(&y);
        sum += v;
        sum_sq += v * v;
    }
    let k = samples as f64;
    let mean = sum / k;
    let var = ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0);
    McEstimate {
        mean,
        std_error: (var / k).sqrt(),
    }
}

/// `(1 − δ/r) X` for a set containing the ball of radius `r` at the origin.
#[derive(Clone, Debug)]
pub struct ShrunkenSet {
    base: Arc<DecisionSet>,
    delta: f64,
    factor: f64,
    inner_radius: f64,
    outer_radius: f64,
}

impl ShrunkenSet {
    pub fn new(base: Arc<DecisionSet>, delta: f64) -> Result<Self> {
        let (Some(r), Some(big_r)) = (base.inner_radius(), base.outer_radius()) else {
            return Err(Error::Unsupported {
                op: "bandit mode",
                kind: base.kind().name(),
            });
        };
        if !(delta > 0.0 && delta <= r) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, {r}], got {delta}"
            )));
        }
        Ok(Self {
            factor: 1.0 - delta / r,
            base,
            delta,
            inner_radius: r,
            outer_radius: big_r,
        })
    }

    pub fn base(&self) -> &Arc<DecisionSet> {
        &self.base
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `1 − δ/r`.
    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    pub fn membership(&self, x: &Vector, tol: f64) -> bool {
        if self.factor == 0.0 {
            return x.len() == self.base.dim() && x.norm() <= tol;
        }
        self.base.membership(&x.scaled(1.0 / self.factor), tol / self.factor)
    }
}

impl LinearOracle for ShrunkenSet {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn lp_minimize(&self, direction: &Vector) -> Result<Vector> {
        Ok(self.base.lp_minimize(direction)?.scaled(self.factor))
    }
}

/// `F(x) = <g, x> + ‖x − a‖² / η`.
pub fn regularized_objective(grad_sum: &Vector, anchor: &Vector, eta: f64, x: &Vector) -> f64 {
    grad_sum.dot(x) + x.sub(anchor).norm_sq() / eta
}

fn regularized_gradient(grad_sum: &Vector, anchor: &Vector, eta: f64, x: &Vector) -> Vector {
    let mut g = grad_sum.clone();
    g.axpy(2.0 / eta, &x.sub(anchor));
    g
}

/// Iteration budget `⌈max{16R²(h₁−ε)/ε², 2(h₁−ε)/ε}⌉` (at least 1), with
/// `h₁` and `ε` in the units of `η F`.
pub fn iteration_cap(outer_radius: f64, h1: f64, epsilon: f64) -> u64 {
    let excess = h1 - epsilon;
    let bound = (16.0 * outer_radius * outer_radius * excess / (epsilon * epsilon)).max(2.0 * excess / epsilon);
    if bound.is_finite() {
        bound.ceil().max(1.0) as u64
    } else {
        u64::MAX
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnerCgReport {
    pub point: Vector,
    /// Oracle calls made.
    pub iterations: u64,
    /// Duality gap of the last point the oracle was queried at.
    pub gap_at_exit: f64,
    pub initial_gap: f64,
    /// Budget from [`iteration_cap`] with `h₁` bounded by the first gap.
    pub cap: u64,
}

/// Hard stop for [`inner_cg`]; reaching it is reported as an error.
pub const INNER_CG_MAX_ITERATIONS: u64 = 1 << 22;

/// Conditional gradient with exact line search on `F(x) = <g, x> + ‖x − a‖²/η`,
/// stopping at the first iterate whose duality gap is below `ε/η`.
///
/// The reported cap is computed from the first gap, which upper-bounds the
/// initial suboptimality. It does not stop the loop.
pub fn inner_cg<O: LinearOracle + ?Sized>(
    oracle: &O,
    grad_sum: &Vector,
    anchor: &Vector,
    eta: f64,
    x_in: &Vector,
    epsilon: f64,
    outer_radius: f64,
) -> Result<InnerCgReport> {
    if !(eta > 0.0 && eta.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("eta {eta}, epsilon {epsilon}")));
    }
    let n = oracle.dim();
    grad_sum.check_dim(n)?;
    anchor.check_dim(n)?;
    x_in.check_dim(n)?;

    let threshold = epsilon / eta;
    let mut z = x_in.clone();
    let mut cap = u64::MAX;
    let mut initial_gap = f64::NAN;
    let mut tau = 0u64;
    loop {
        let grad = regularized_gradient(grad_sum, anchor, eta, &z);
        if grad.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("inner objective gradient"));
        }
        let v = oracle.lp_minimize(&grad)?;
        tau += 1;
        let d = v.sub(&z);
        let gap = -grad.dot(&d);
        if tau == 1 {
            initial_gap = gap;
            cap = iteration_cap(outer_radius, eta * gap, epsilon);
        }
        if gap < threshold {
            return Ok(InnerCgReport {
                point: z,
                iterations: tau,
                gap_at_exit: gap,
                initial_gap,
                cap,
            });
        }
        let d_sq = d.norm_sq();
        let sigma = if d_sq > 0.0 {
            (gap * eta / (2.0 * d_sq)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        z = z.lerp(&v, sigma);
        if tau >= INNER_CG_MAX_ITERATIONS {
            return Err(Error::Assertion(format!(
                "inner conditional gradient made {tau} oracle calls, gap {gap} >= {threshold}"
            )));
        }
    }
}

/// Horizon-derived constants of the blocked bandit algorithm.
#[derive(Clone, Debug, PartialEq)]
pub struct BanditParams {
    pub horizon: u64,
    pub dim: usize,
    /// `⌈√T⌉` rounds per block.
    pub block_len: u64,
    /// `min(√n (r/R) T^{-1/4}, r)`.
    pub delta: f64,
    /// `16 R² T^{-1/2} ln T`.
    pub epsilon: f64,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub diameter: f64,
}

impl BanditParams {
    pub fn new(horizon: u64, set: &DecisionSet) -> Result<Self> {
        let (Some(r), Some(big_r)) = (set.inner_radius(), set.outer_radius()) else {
            return Err(Error::Unsupported {
                op: "bandit mode",
                kind: set.kind().name(),
            });
        };
        if horizon < 2 {
            return Err(Error::InvalidParameter("bandit horizon must be at least 2".into()));
        }
        let t = horizon as f64;
        let n = set.dim();
        Ok(Self {
            horizon,
            dim: n,
            block_len: (t.sqrt().ceil() as u64).max(1),
            delta: ((n as f64).sqrt() * (r / big_r) * t.powf(-0.25)).min(r),
            epsilon: 16.0 * big_r * big_r * t.ln() / t.sqrt(),
            inner_radius: r,
            outer_radius: big_r,
            diameter: set.diameter(),
        })
    }

    pub fn with_block_len(mut self, block_len: u64) -> Result<Self> {
        if block_len == 0 {
            return Err(Error::InvalidParameter("block length must be positive".into()));
        }
        self.block_len = block_len;
        Ok(self)
    }

    pub fn block_count(&self) -> u64 {
        self.horizon.div_ceil(self.block_len)
    }

    /// `D / (G T^{3/4})`.
    pub fn eta(&self, g_block: f64) -> f64 {
        self.diameter / (g_block * (self.horizon as f64).powf(0.75))
    }
}

/// Summary of a finished block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockReport {
    /// 1-based block index.
    pub block: u64,
    pub g_block: f64,
    pub eta: f64,
    pub inner: InnerCgReport,
}

/// Blocked bandit conditional gradient. Each round call [`BlockBandit::next_play`]
/// then [`BlockBandit::observe`] with the loss value at the returned point.
#[derive(Clone, Debug)]
pub struct BlockBandit {
    params: BanditParams,
    set: ShrunkenSet,
    anchor: Vector,
    x_block: Vector,
    grad_accum: Vector,
    grad_sum: Vector,
    round: u64,
    block: u64,
    step_in_block: u64,
    block_sup: f64,
    block_lipschitz: f64,
    g_max: f64,
    eta: f64,
    pending: Option<Vector>,
    oracle_calls: u64,
}

impl BlockBandit {
    /// The first block plays around the origin, which is also the regularizer's anchor.
    pub fn new(params: BanditParams, set: ShrunkenSet) -> Result<Self> {
        if params.dim != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: params.dim,
                got: set.dim(),
            });
        }
        if (params.delta - set.delta()).abs() > 1e-12 * params.delta.max(1.0) {
            return Err(Error::InvalidParameter("shrunken set delta differs from params".into()));
        }
        let n = params.dim;
        Ok(Self {
            anchor: Vector::zeros(n),
            x_block: Vector::zeros(n),
            grad_accum: Vector::zeros(n),
            grad_sum: Vector::zeros(n),
            round: 0,
            block: 1,
            step_in_block: 0,
            block_sup: 0.0,
            block_lipschitz: 0.0,
            g_max: 0.0,
            eta: f64::INFINITY,
            pending: None,
            oracle_calls: 0,
            params,
            set,
        })
    }

    pub fn params(&self) -> &BanditParams {
        &self.params
    }

    pub fn set(&self) -> &ShrunkenSet {
        &self.set
    }

    /// Base action of the current block.
    pub fn block_point(&self) -> &Vector {
        &self.x_block
    }

    /// 1-based index of the block the next round belongs to.
    pub fn block(&self) -> u64 {
        self.block
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Step size used by the most recent block update.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn oracle_calls(&self) -> u64 {
        self.oracle_calls
    }

    /// Draws `u` and returns `y = x_block + δu`.
    pub fn next_play(&mut self, rng: &mut Rng) -> Vector {
        let u = sphere_sample(self.params.dim, rng);
        let mut y = self.x_block.clone();
        y.axpy(self.params.delta, &u);
        self.pending = Some(u);
        y
    }

    /// Consumes the loss value at the last play. `sup_bound` and `lipschitz`
    /// bound the round's loss magnitude and Lipschitz constant.
    ///
    /// Returns the block report when this round closes a block.
    pub fn observe(&mut self, value: f64, sup_bound: f64, lipschitz: f64) -> Result<Option<BlockReport>> {
        if !value.is_finite() {
            return Err(Error::NonFinite("bandit loss value"));
        }
        let u = self
            .pending
            .take()
            .ok_or_else(|| Error::InvalidParameter("observe called without next_play".into()))?;
        if self.round >= self.params.horizon {
            return Err(Error::InvalidParameter("horizon exhausted".into()));
        }
        let est = gradient_estimate(self.params.dim, self.params.delta, value, &u);
        self.grad_accum.axpy(1.0, &est);
        self.block_sup = self.block_sup.max(sup_bound);
        self.block_lipschitz = self.block_lipschitz.max(lipschitz);
        self.round += 1;
        self.step_in_block += 1;

        if self.step_in_block < self.params.block_len && self.round < self.params.horizon {
            return Ok(None);
        }
        self.close_block().map(Some)
    }

    fn close_block(&mut self) -> Result<BlockReport> {
        let g_block = (self.params.dim as f64).sqrt() * self.block_sup + self.block_lipschitz;
        self.g_max = self.g_max.max(g_block).max(f64::MIN_POSITIVE);
        self.eta = self.params.eta(self.g_max);
        self.grad_sum.axpy(1.0, &self.grad_accum);

        let inner = inner_cg(
            &self.set,
            &self.grad_sum,
            &self.anchor,
            self.eta,
            &self.x_block,
            self.params.epsilon,
            self.params.outer_radius,
        )?;
        self.oracle_calls += inner.iterations;
        self.x_block = inner.point.clone();
        let report = BlockReport {
            block: self.block,
            g_block: self.g_max,
            eta: self.eta,
            inner,
        };
        self.grad_accum = Vector::zeros(self.params.dim);
        self.step_in_block = 0;
        self.block_sup = 0.0;
        self.block_lipschitz = 0.0;
        self.block += 1;
        Ok(report)
    }
}

/// Plays and block reports of a full bandit run.
#[derive(Clone, Debug, Default)]
pub struct BbcgTrace {
    pub plays: Vec<Vector>,
    pub blocks: Vec<BlockReport>,
}

/// Runs the blocked algorithm for the whole horizon. `loss(t, y)` returns the
/// value at `y` together with its sup-norm and Lipschitz bounds.
pub fn bbcg_run<L>(params: BanditParams, set: ShrunkenSet, mut loss: L, rng: &mut Rng) -> Result<BbcgTrace>
where
    L: FnMut(u64, &Vector) -> (f64, f64, f64),
{
    let horizon = params.horizon;
    let mut alg = BlockBandit::new(params, set)?;
    let mut trace = BbcgTrace::default();
    for t in 1..=horizon {
        let y = alg.next_play(rng);
        let (value, sup, lip) = loss(t, &y);
        if let Some(rep) = alg.observe(value, sup, lip)? {
            trace.blocks.push(rep);
        }
        trace.plays.push(y);
    }
    Ok(trace)
}

/// Per-round record of the constrained bandit wrapper.
#[derive(Clone, Debug, PartialEq)]
pub struct CbcoRound {
    pub q_hat: f64,
    pub lambda: f64,
    pub surrogate: f64,
    pub block_report: Option<BlockReport>,
}

/// Constrained bandit wrapper: surrogate values `f + λ̂ g⁺` with
/// `λ̂ = Φ'(Q̂)/V` and `Q̂(t) = Q(t−1) + G D`.
#[derive(Clone, Debug)]
pub struct CbcoState {
    coco: CocoParams,
    queue: f64,
    f_sup: f64,
    g_sup: f64,
    bandit: BlockBandit,
}

impl CbcoState {
    /// `f_sup` and `g_sup` bound `|f_t|` and `|g_t|` over the base set.
    /// The queue starts at `G D √T ln T`.
    pub fn new(
        bandit: BanditParams,
        coco: CocoParams,
        set: ShrunkenSet,
        f_sup: f64,
        g_sup: f64,
    ) -> Result<Self> {
        if bandit.horizon != coco.horizon {
            return Err(Error::InvalidParameter("bandit and queue horizons differ".into()));
        }
        let t = coco.horizon as f64;
        let q0 = coco.g_bound * coco.diameter * t.sqrt() * t.ln();
        Ok(Self {
            bandit: BlockBandit::new(bandit, set)?,
            coco,
            queue: q0,
            f_sup,
            g_sup,
        })
    }

    pub fn with_initial_queue(mut self, q0: f64) -> Result<Self> {
        if self.bandit.round() > 0 || !(q0 > 0.0) {
            return Err(Error::InvalidParameter("initial queue must be positive and set before play".into()));
        }
        self.queue = q0;
        Ok(self)
    }

    pub fn queue(&self) -> f64 {
        self.queue
    }

    pub fn bandit(&self) -> &BlockBandit {
        &self.bandit
    }

    pub fn coco_params(&self) -> &CocoParams {
        &self.coco
    }

    pub fn next_play(&mut self, rng: &mut Rng) -> Vector {
        self.bandit.next_play(rng)
    }

    /// Consumes the feedback at the last play.
    pub fn observe(&mut self, fb: &BanditFeedback) -> Result<CbcoRound> {
        let q_hat = self.queue + self.coco.g_bound * self.coco.diameter;
        let lambda = self.coco.lambda(q_hat);
        let violation = positive_part(fb.g_value);
        let surrogate = fb.f_value + lambda * violation;
        self.queue += violation;
        let sup = self.f_sup + lambda * self.g_sup;
        let lip = self.coco.g_bound * (1.0 + lambda);
        let block_report = self.bandit.observe(surrogate, sup, lip)?;
        Ok(CbcoRound {
            q_hat,
            lambda,
            surrogate,
            block_report,
        })
    }
}
