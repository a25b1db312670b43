//! Experiment harness: constrained online shortest paths on synthetic
//! networks, a linear constrained problem on the ball for the bandit policy,
//! seeded runs, CSV traces and multi-run sweeps.

pub mod ball;
pub mod network;
pub mod selftest;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::{BanditParams, CbcoState, ShrunkenSet};
use crate::baselines::ProjectedCocoState;
use crate::coco::{CocoParams, CocoState};
use crate::error::{Error, Result};
use crate::metrics::{positive_part, FirstOrderFeedback, GameMetrics, TraceRow};
use crate::oracles::{flow_decompose, sample_path, DecisionSet, PathDecomposition};
use crate::rng::Rng;
use crate::vector::Vector;

use ball::{BallInstance, BallRound, BALL_DIM};
use network::{
    generate_network_with_edges, hindsight_comparator, perturb_round, round_functions, sorted_path_sum,
    ComparatorSource, NetworkInstance, RoundData, ENUMERATION_LIMIT,
};

/// Relative slack on the per-round checks `g⁺ <= G D` and `‖∇‖ <= G`.
const CHECK_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Policy {
    #[serde(rename = "coco")]
    Coco,
    #[serde(rename = "bandit-cbco")]
    BanditCbco,
    #[serde(rename = "baseline-projected")]
    BaselineProjected,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Coco => "coco",
            Policy::BanditCbco => "bandit-cbco",
            Policy::BaselineProjected => "baseline-projected",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "coco" => Ok(Policy::Coco),
            "bandit-cbco" => Ok(Policy::BanditCbco),
            "baseline-projected" => Ok(Policy::BaselineProjected),
            other => Err(Error::Config(format!(
                "policy: unknown value `{other}` (expected coco, bandit-cbco or baseline-projected)"
            ))),
        }
    }
}

/// Decision set of an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SetChoice {
    /// Unit s-d flows on the network.
    #[serde(rename = "flow")]
    Flow,
    /// Distributions over the enumerated s-d paths of the network.
    #[serde(rename = "path-simplex")]
    PathSimplex,
    /// The linear constrained problem on the unit ball.
    #[serde(rename = "ball")]
    Ball,
}

impl SetChoice {
    pub fn name(&self) -> &'static str {
        match self {
            SetChoice::Flow => "flow",
            SetChoice::PathSimplex => "path-simplex",
            SetChoice::Ball => "ball",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(rename = "T_list")]
    pub t_list: Vec<u64>,
    pub seeds: Vec<u64>,
}

/// Experiment configuration, as read from JSON. Missing fields take defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_policy")]
    pub policy: Policy,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Total edge count of the generated network.
    #[serde(default = "default_edges")]
    pub edges: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Defaults to `ball` for the bandit policy and `flow` otherwise.
    #[serde(default)]
    pub set_kind: Option<SetChoice>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    /// Record wall-clock step times. Off by default so traces are reproducible byte for byte.
    #[serde(default)]
    pub timing: bool,
    /// Sample a concrete path per round and log its cost.
    #[serde(default)]
    pub sample_paths: bool,
}

fn default_policy() -> Policy {
    Policy::Coco
}
fn default_horizon() -> u64 {
    1600
}
fn default_nodes() -> usize {
    12
}
fn default_edges() -> usize {
    30
}
fn default_beta() -> f64 {
    0.9
}

impl Default for Config {
    fn default() -> Self {
        Self {
            policy: default_policy(),
            horizon: default_horizon(),
            seed: 0,
            nodes: default_nodes(),
            edges: default_edges(),
            beta: default_beta(),
            set_kind: None,
            sweep: None,
            timing: false,
            sample_paths: false,
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn set_choice(&self) -> SetChoice {
        self.set_kind.unwrap_or(match self.policy {
            Policy::BanditCbco => SetChoice::Ball,
            _ => SetChoice::Flow,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if self.horizon < 8 {
            return bad("T", format!("must be at least 8, got {}", self.horizon));
        }
        if self.nodes < 3 {
            return bad("nodes", format!("must be at least 3, got {}", self.nodes));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad("beta", format!("must lie in (0, 1], got {}", self.beta));
        }
        let set = self.set_choice();
        match (self.policy, set) {
            (Policy::BanditCbco, SetChoice::Ball) => {}
            (Policy::BanditCbco, other) => {
                return bad(
                    "set_kind",
                    format!("bandit-cbco needs a set around the origin (ball), got {}", other.name()),
                )
            }
            (Policy::BaselineProjected, SetChoice::Flow) => {
                return bad("set_kind", "baseline-projected needs path-simplex or ball".into())
            }
            _ => {}
        }
        if self.sample_paths && set == SetChoice::Ball {
            return bad("sample_paths", "path sampling needs a network set".into());
        }
        if let Some(sw) = &self.sweep {
            if sw.t_list.is_empty() || sw.seeds.is_empty() {
                return bad("sweep", "T_list and seeds must be non-empty".into());
            }
            if let Some(t) = sw.t_list.iter().find(|t| **t < 8) {
                return bad("sweep.T_list", format!("every T must be at least 8, got {t}"));
            }
        }
        Ok(())
    }

    /// The same configuration with one `(T, seed)` pair.
    pub fn with_run(&self, horizon: u64, seed: u64) -> Self {
        Self {
            horizon,
            seed,
            sweep: None,
            ..self.clone()
        }
    }
}

/// Environment shared by all policies on one `(config, seed)`.
enum Environment {
    Network {
        inst: NetworkInstance,
        rounds: Vec<RoundData>,
        /// Enumerated paths when playing on the path simplex.
        paths: Option<Vec<Vec<usize>>>,
        comparator_path: Vec<usize>,
        comparator_source: ComparatorSource,
    },
    Ball {
        inst: BallInstance,
        rounds: Vec<BallRound>,
        x_star: Vector,
    },
}

struct Problem {
    env: Environment,
    set: Arc<DecisionSet>,
    g_bound: f64,
    diameter: f64,
}

fn build_problem(cfg: &Config) -> Result<Problem> {
    match cfg.set_choice() {
        SetChoice::Ball => {
            let inst = BallInstance::generate(cfg.seed, BALL_DIM)?;
            let rounds = inst.rounds(cfg.horizon, cfg.seed);
            let mut cost_sum = Vector::zeros(BALL_DIM);
            for rd in &rounds {
                cost_sum.axpy(1.0, &rd.cost);
            }
            let x_star = inst.comparator(&cost_sum);
            let set = Arc::new(DecisionSet::ball(Vector::zeros(BALL_DIM), 1.0)?);
            Ok(Problem {
                g_bound: inst.g_bound(),
                diameter: set.diameter(),
                set,
                env: Environment::Ball { inst, rounds, x_star },
            })
        }
        choice => {
            let inst = generate_network_with_edges(cfg.seed, cfg.nodes, cfg.edges)?;
            let mut rng = Rng::stream(cfg.seed, 1);
            let rounds: Vec<RoundData> = (0..cfg.horizon)
                .map(|_| perturb_round(&inst, cfg.beta, &mut rng))
                .collect();
            let comparator = hindsight_comparator(&inst, &rounds)?;
            let lat_norm = Vector::from_vec_unchecked(inst.base_latency.clone()).norm();
            let bw_norm = Vector::from_vec_unchecked(inst.base_bandwidth.clone()).norm();
            let (set, paths, g_bound) = if choice == SetChoice::Flow {
                let set = DecisionSet::flow_polytope(inst.dag.clone(), inst.source, inst.sink)?;
                let g = (network::LATENCY_SCALE.1 * lat_norm).max(network::BANDWIDTH_SCALE.1 * bw_norm);
                (set, None, g)
            } else {
                let paths = inst
                    .dag
                    .enumerate_paths(inst.source, inst.sink, ENUMERATION_LIMIT)
                    .ok_or_else(|| Error::Config("set_kind: too many paths for path-simplex".into()))?;
                let base_lat = Vector::from_vec_unchecked(inst.base_latency.clone());
                let base_bw = Vector::from_vec_unchecked(inst.base_bandwidth.clone());
                let lat: Vector = Vector::from_vec_unchecked(
                    paths.iter().map(|p| sorted_path_sum(p, &base_lat)).collect(),
                );
                let bw: Vector = Vector::from_vec_unchecked(
                    paths.iter().map(|p| sorted_path_sum(p, &base_bw)).collect(),
                );
                let g = (network::LATENCY_SCALE.1 * lat.norm()).max(network::BANDWIDTH_SCALE.1 * bw.norm());
                (DecisionSet::simplex(paths.len(), 1.0)?, Some(paths), g)
            };
            let set = Arc::new(set);
            Ok(Problem {
                g_bound,
                diameter: set.diameter(),
                set,
                env: Environment::Network {
                    inst,
                    rounds,
                    paths,
                    comparator_path: comparator.path,
                    comparator_source: comparator.source,
                },
            })
        }
    }
}

impl Problem {
    fn first_order(&self, t: usize, x: &Vector) -> Result<(FirstOrderFeedback, f64)> {
        match &self.env {
            Environment::Ball { inst, rounds, x_star } => {
                let fb = inst.first_order(&rounds[t], x)?;
                Ok((fb, rounds[t].cost.dot(x_star)))
            }
            Environment::Network {
                inst,
                rounds,
                paths,
                comparator_path,
                ..
            } => {
                let rd = &rounds[t];
                let comp = sorted_path_sum(comparator_path, &rd.latency);
                let fb = match paths {
                    None => round_functions(rd, x)?,
                    Some(paths) => {
                        let lat = Vector::from_vec_unchecked(
                            paths.iter().map(|p| sorted_path_sum(p, &rd.latency)).collect(),
                        );
                        let bw = Vector::from_vec_unchecked(
                            paths.iter().map(|p| sorted_path_sum(p, &rd.bandwidth)).collect(),
                        );
                        FirstOrderFeedback::new(lat.dot(x), lat, rd.threshold - bw.dot(x), bw.scaled(-1.0))?
                    }
                };
                let _ = inst;
                Ok((fb, comp))
            }
        }
    }

    fn comparator_source(&self) -> Option<ComparatorSource> {
        match &self.env {
            Environment::Network { comparator_source, .. } => Some(*comparator_source),
            Environment::Ball { .. } => None,
        }
    }

    /// Latency of a path sampled from the fractional play `x`.
    fn realized_cost(&self, t: usize, x: &Vector, rng: &mut Rng) -> Result<Option<f64>> {
        let Environment::Network {
            inst, rounds, paths, ..
        } = &self.env
        else {
            return Ok(None);
        };
        let dec = match paths {
            None => flow_decompose(&inst.dag, x.as_slice(), inst.source, inst.sink)?,
            Some(paths) => PathDecomposition {
                entries: paths
                    .iter()
                    .zip(x.iter())
                    .filter(|(_, w)| **w > 0.0)
                    .map(|(p, w)| (p.clone(), *w))
                    .collect(),
            },
        };
        let path = sample_path(&dec, rng);
        Ok(Some(sorted_path_sum(&path, &rounds[t].latency)))
    }
}

/// Result of one run. Everything except `rows` is summarized in `summary.csv`
/// or checked by the harness.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub policy: Policy,
    pub horizon: u64,
    pub seed: u64,
    pub final_regret: f64,
    pub final_ccv: f64,
    pub total_runtime_ns: u64,
    pub oracle_calls: u64,
    pub g_bound: f64,
    pub diameter: f64,
    /// Largest consecutive surrogate Lipschitz ratio (first-order constrained policy only).
    pub max_lipschitz_ratio: Option<f64>,
    pub growth_bound_holds: Option<bool>,
    pub max_violation: f64,
    pub comparator: Option<ComparatorSource>,
    pub rows: Vec<TraceRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    #[serde(rename = "T")]
    pub horizon: u64,
    pub seed: u64,
    pub final_regret: f64,
    pub final_ccv: f64,
    pub total_runtime_ns: u64,
    pub oracle_calls: u64,
}

impl RunOutcome {
    pub fn summary(&self) -> SummaryRow {
        SummaryRow {
            horizon: self.horizon,
            seed: self.seed,
            final_regret: self.final_regret,
            final_ccv: self.final_ccv,
            total_runtime_ns: self.total_runtime_ns,
            oracle_calls: self.oracle_calls,
        }
    }
}

enum FirstOrderLearner {
    Coco(CocoState),
    Projected(ProjectedCocoState),
}

struct Checks {
    g_bound: f64,
    diameter: f64,
}

impl Checks {
    fn gradients(&self, t: u64, fb: &FirstOrderFeedback) -> Result<()> {
        let limit = self.g_bound * (1.0 + CHECK_SLACK);
        if fb.f_grad.norm() > limit || fb.g_grad.norm() > limit {
            return Err(Error::Assertion(format!("round {t}: gradient norm exceeds G = {}", self.g_bound)));
        }
        Ok(())
    }

    fn round(&self, t: u64, f_x: f64, f_comp: f64, g_x: f64) -> Result<()> {
        let gd = self.g_bound * self.diameter;
        if positive_part(g_x) > gd * (1.0 + CHECK_SLACK) {
            return Err(Error::Assertion(format!("round {t}: violation {g_x} exceeds G·D = {gd}")));
        }
        if f_x - f_comp < -gd * (1.0 + CHECK_SLACK) {
            return Err(Error::Assertion(format!("round {t}: regret increment below −G·D")));
        }
        Ok(())
    }
}

fn elapsed_ns(start: Option<Instant>) -> u64 {
    start.map_or(0, |s| s.elapsed().as_nanos() as u64)
}

/// Runs one experiment in memory.
pub fn simulate(cfg: &Config) -> Result<RunOutcome> {
    cfg.validate()?;
    let problem = build_problem(cfg)?;
    match cfg.policy {
        Policy::BanditCbco => simulate_bandit(cfg, &problem),
        _ => simulate_first_order(cfg, &problem),
    }
}

fn simulate_first_order(cfg: &Config, problem: &Problem) -> Result<RunOutcome> {
    let params = CocoParams::new(cfg.horizon, problem.g_bound, problem.diameter)?;
    let mut learner = match cfg.policy {
        Policy::Coco => FirstOrderLearner::Coco(CocoState::new(params, problem.set.clone(), None)?),
        _ => FirstOrderLearner::Projected(ProjectedCocoState::new(params, problem.set.clone(), None)?),
    };
    let checks = Checks {
        g_bound: problem.g_bound,
        diameter: problem.diameter,
    };
    let mut sample_rng = Rng::stream(cfg.seed, 2);
    let mut metrics = GameMetrics::default();
    let mut rows = Vec::with_capacity(cfg.horizon as usize);
    let mut total_ns = 0u64;
    let mut max_violation = 0.0f64;

    for t in 0..cfg.horizon as usize {
        let round = t as u64 + 1;
        let x = match &learner {
            FirstOrderLearner::Coco(s) => s.current().clone(),
            FirstOrderLearner::Projected(s) => s.current().clone(),
        };
        let (fb, f_comp) = problem.first_order(t, &x)?;
        checks.gradients(round, &fb)?;
        checks.round(round, fb.f_value, f_comp, fb.g_value)?;
        max_violation = max_violation.max(positive_part(fb.g_value));
        metrics = metrics.update(fb.f_value, f_comp, fb.g_value)?;
        let realized_cost = if cfg.sample_paths {
            problem.realized_cost(t, &x, &mut sample_rng)?
        } else {
            None
        };

        let start = cfg.timing.then(Instant::now);
        let row = match &mut learner {
            FirstOrderLearner::Coco(s) => {
                s.step(&fb)?;
                let ns = elapsed_ns(start);
                total_ns += ns;
                TraceRow {
                    queue: s.queue(),
                    lambda: s.last_lambda(),
                    sigma: s.ocg().last_sigma(),
                    eta_scaled: s.ocg().eta(),
                    oracle_ns: ns,
                    oracle_calls_cum: s.ocg().oracle_calls(),
                    ..TraceRow::default()
                }
            }
            FirstOrderLearner::Projected(s) => {
                s.step(&fb)?;
                let ns = elapsed_ns(start);
                total_ns += ns;
                TraceRow {
                    queue: s.queue(),
                    lambda: s.last_lambda(),
                    sigma: 1.0,
                    eta_scaled: s.eta(),
                    oracle_ns: ns,
                    oracle_calls_cum: 0,
                    ..TraceRow::default()
                }
            }
        };
        rows.push(TraceRow {
            policy: cfg.policy.name().to_string(),
            t: round,
            f_val: fb.f_value,
            g_val: fb.g_value,
            cum_regret: metrics.regret(),
            ccv: metrics.ccv,
            realized_cost,
            ..row
        });
    }

    let (oracle_calls, max_ratio, growth_ok) = match &learner {
        FirstOrderLearner::Coco(s) => {
            if s.ratio_violations() > 0 {
                return Err(Error::Assertion(format!(
                    "Lipschitz ratio bound failed in {} rounds (max ratio {})",
                    s.ratio_violations(),
                    s.max_ratio()
                )));
            }
            if !s.growth_bound_holds() {
                return Err(Error::Assertion(format!(
                    "Lipschitz growth ln(L_T/L_1) = {} exceeds (ln T)²",
                    s.log_lipschitz_growth()
                )));
            }
            (s.ocg().oracle_calls(), Some(s.max_ratio()), Some(true))
        }
        FirstOrderLearner::Projected(_) => (0, None, None),
    };
    Ok(RunOutcome {
        policy: cfg.policy,
        horizon: cfg.horizon,
        seed: cfg.seed,
        final_regret: metrics.regret(),
        final_ccv: metrics.ccv,
        total_runtime_ns: total_ns,
        oracle_calls,
        g_bound: problem.g_bound,
        diameter: problem.diameter,
        max_lipschitz_ratio: max_ratio,
        growth_bound_holds: growth_ok,
        max_violation,
        comparator: problem.comparator_source(),
        rows,
    })
}

fn simulate_bandit(cfg: &Config, problem: &Problem) -> Result<RunOutcome> {
    let Environment::Ball { inst, rounds, x_star } = &problem.env else {
        return Err(Error::Config("set_kind: bandit-cbco runs on the ball".into()));
    };
    let bandit = BanditParams::new(cfg.horizon, &problem.set)?;
    let shrunk = ShrunkenSet::new(problem.set.clone(), bandit.delta)?;
    let coco = CocoParams::new(cfg.horizon, problem.g_bound, problem.diameter)?;
    let mut state = CbcoState::new(bandit, coco, shrunk, inst.f_sup(), inst.g_sup())?;
    let checks = Checks {
        g_bound: problem.g_bound,
        diameter: problem.diameter,
    };
    let mut play_rng = Rng::stream(cfg.seed, 3);
    let mut metrics = GameMetrics::default();
    let mut rows = Vec::with_capacity(cfg.horizon as usize);
    let mut total_ns = 0u64;
    let mut max_violation = 0.0f64;

    for (t, rd) in rounds.iter().enumerate() {
        let round = t as u64 + 1;
        let start = cfg.timing.then(Instant::now);
        let y = state.next_play(&mut play_rng);
        let mut ns = elapsed_ns(start);
        if !problem.set.membership(&y, 1e-7) {
            return Err(Error::Assertion(format!("round {round}: perturbed play left the decision set")));
        }
        let fb = inst.bandit(rd, &y)?;
        let f_comp = rd.cost.dot(x_star);
        checks.round(round, fb.f_value, f_comp, fb.g_value)?;
        max_violation = max_violation.max(positive_part(fb.g_value));
        metrics = metrics.update(fb.f_value, f_comp, fb.g_value)?;

        let start = cfg.timing.then(Instant::now);
        let info = state.observe(&fb)?;
        ns += elapsed_ns(start);
        total_ns += ns;
        let bandit_state = state.bandit();
        rows.push(TraceRow {
            policy: cfg.policy.name().to_string(),
            t: round,
            f_val: fb.f_value,
            g_val: fb.g_value,
            queue: state.queue(),
            lambda: info.lambda,
            sigma: f64::NAN,
            eta_scaled: bandit_state.eta(),
            cum_regret: metrics.regret(),
            ccv: metrics.ccv,
            oracle_ns: ns,
            block: Some(info.block_report.as_ref().map_or(bandit_state.block(), |r| r.block)),
            inner_cg_iters: info.block_report.as_ref().map(|r| r.inner.iterations),
            gap_at_exit: info.block_report.as_ref().map(|r| r.inner.gap_at_exit),
            oracle_calls_cum: bandit_state.oracle_calls(),
            realized_cost: None,
        });
    }
    Ok(RunOutcome {
        policy: cfg.policy,
        horizon: cfg.horizon,
        seed: cfg.seed,
        final_regret: metrics.regret(),
        final_ccv: metrics.ccv,
        total_runtime_ns: total_ns,
        oracle_calls: state.bandit().oracle_calls(),
        g_bound: problem.g_bound,
        diameter: problem.diameter,
        max_lipschitz_ratio: None,
        growth_bound_holds: None,
        max_violation,
        comparator: None,
        rows,
    })
}

/// Writes rows as CSV with a header.
pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(TraceRow::COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace_file_name(cfg: &Config) -> String {
    format!("trace_{}_T{}_seed{}.csv", cfg.policy.name(), cfg.horizon, cfg.seed)
}

/// Runs one experiment and writes its trace and a one-line summary into `out_dir`.
pub fn run_experiment(cfg: &Config, out_dir: &Path) -> Result<(RunOutcome, PathBuf)> {
    fs::create_dir_all(out_dir)?;
    let outcome = simulate(cfg)?;
    let path = out_dir.join(trace_file_name(cfg));
    write_trace(&path, &outcome.rows)?;
    write_summary(&out_dir.join("summary.csv"), &[outcome.summary()])?;
    Ok((outcome, path))
}

/// Worker count from `COCOKIT_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("COCOKIT_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
}

/// All `(T, seed)` runs of the grid, in grid order (T outer, seed inner).
pub fn sweep_runs(cfg: &Config) -> Result<Vec<Config>> {
    let sw = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep: missing `sweep` section".into()))?;
    Ok(sw
        .t_list
        .iter()
        .flat_map(|&t| sw.seeds.iter().map(move |&s| cfg.with_run(t, s)))
        .collect())
}

/// Runs every grid point in parallel. When `out_dir` is given, each run's trace
/// is written there and `summary.csv` lists runs in grid order.
pub fn sweep(cfg: &Config, out_dir: Option<&Path>) -> Result<Vec<RunOutcome>> {
    cfg.validate()?;
    let runs = sweep_runs(cfg)?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }
    let work = || -> Result<Vec<RunOutcome>> {
        runs.par_iter()
            .map(|run| {
                let mut outcome = simulate(run)?;
                if let Some(dir) = out_dir {
                    write_trace(&dir.join(trace_file_name(run)), &outcome.rows)?;
                    outcome.rows = Vec::new();
                }
                Ok(outcome)
            })
            .collect()
    };
    let outcomes = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("COCOKIT_THREADS: {e}")))?
            .install(work)?,
        None => work()?,
    };
    if let Some(dir) = out_dir {
        let summary: Vec<SummaryRow> = outcomes.iter().map(RunOutcome::summary).collect();
        write_summary(&dir.join("summary.csv"), &summary)?;
    }
    Ok(outcomes)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidParameter("slope fit needs at least two paired points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("slope fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("slope fit needs distinct x values".into()));
    }
    Ok(sxy / sxx)
}

/// Per-T means of final regret and CCV, in increasing T.
pub fn per_horizon_means(outcomes: &[RunOutcome]) -> Vec<(u64, f64, f64)> {
    let mut ts: Vec<u64> = outcomes.iter().map(|o| o.horizon).collect();
    ts.sort_unstable();
    ts.dedup();
    ts.into_iter()
        .map(|t| {
            let group: Vec<&RunOutcome> = outcomes.iter().filter(|o| o.horizon == t).collect();
            let k = group.len() as f64;
            (
                t,
                group.iter().map(|o| o.final_regret).sum::<f64>() / k,
                group.iter().map(|o| o.final_ccv).sum::<f64>() / k,
            )
        })
        .collect()
}
