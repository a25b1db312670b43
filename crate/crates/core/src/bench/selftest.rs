//! Quick invariant checks backing the `selftest` and `oracle-check` commands.

use std::sync::Arc;

use crate::bandit::{gradient_estimate, sphere_sample};
use crate::error::{Error, Result};
use crate::ocg::OcgState;
use crate::oracles::{dag_shortest_path, flow_decompose, path_weight, Dag, DecisionSet};
use crate::rng::Rng;
use crate::vector::Vector;

use super::{simulate, Config};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Random DAG on `n` nodes with edges pointing from lower to higher index,
/// always containing the edge chain `0 → 1 → … → n−1`.
pub fn random_dag(n: usize, extra: usize, rng: &mut Rng) -> Dag {
    let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    for _ in 0..extra {
        let u = rng.below(n as u64 - 1) as usize;
        let v = u + 1 + rng.below((n - 1 - u) as u64) as usize;
        edges.push((u, v));
    }
    Dag::new(n, edges).expect("forward edges form a DAG")
}

fn check_oracle_equivalence(trials: usize, rng: &mut Rng) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let n = 3 + rng.below(8) as usize;
        let dag = random_dag(n, rng.below(15) as usize, rng);
        let w: Vec<f64> = (0..dag.edge_count()).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let dp = path_weight(&dag_shortest_path(&dag, &w, 0, n - 1)?, &w);
        let brute = dag
            .enumerate_paths(0, n - 1, usize::MAX)
            .expect("unbounded enumeration")
            .iter()
            .map(|p| path_weight(p, &w))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max((dp - brute).abs());
    }
    Ok(CheckResult::new(
        "oracle brute-force equivalence",
        worst == 0.0,
        format!("{trials} DAGs, max |dp - brute| = {worst:e}"),
    ))
}

fn check_flow_decomposition(trials: usize, rng: &mut Rng) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    let mut max_paths_ok = true;
    for _ in 0..trials {
        let n = 4 + rng.below(6) as usize;
        let dag = random_dag(n, 4 + rng.below(10) as usize, rng);
        let paths = dag.enumerate_paths(0, n - 1, usize::MAX).expect("unbounded enumeration");
        let weights: Vec<f64> = (0..paths.len()).map(|_| rng.uniform()).collect();
        let total: f64 = weights.iter().sum();
        let mut flow = vec![0.0; dag.edge_count()];
        for (p, w) in paths.iter().zip(&weights) {
            for &e in p {
                flow[e] += w / total;
            }
        }
        let dec = flow_decompose(&dag, &flow, 0, n - 1)?;
        max_paths_ok &= dec.entries.len() <= dag.edge_count();
        let back = dec.reconstruct(dag.edge_count());
        for (a, b) in back.iter().zip(&flow) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(CheckResult::new(
        "flow decomposition round trip",
        worst <= 1e-9 && max_paths_ok,
        format!("{trials} flows, max coordinate error {worst:e}"),
    ))
}

/// Iterates of OCG on the simplex with every gradient and hint multiplied by `alpha`.
pub fn ocg_simplex_iterates(dim: usize, rounds: u64, alpha: f64, seed: u64) -> Result<Vec<Vector>> {
    let set = Arc::new(DecisionSet::simplex(dim, 1.0)?);
    let mut st = OcgState::new(set, rounds, None)?;
    let mut rng = Rng::new(seed);
    let mut out = vec![st.current().clone()];
    for _ in 0..rounds {
        let g: Vec<f64> = (0..dim).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let g = Vector::new(g)?;
        out.push(st.step(&g.scaled(alpha), Some(alpha * (dim as f64).sqrt()))?);
    }
    Ok(out)
}

fn check_scale_invariance() -> Result<CheckResult> {
    let base = ocg_simplex_iterates(5, 300, 1.0, 17)?;
    let mut same = true;
    for alpha in [1e-6, 1e6] {
        same &= ocg_simplex_iterates(5, 300, alpha, 17)? == base;
    }
    Ok(CheckResult::new(
        "OCG scale invariance",
        same,
        "alpha in {1e-6, 1e6} vs 1, 300 rounds on the 5-simplex".into(),
    ))
}

fn check_lipschitz_ratio() -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for seed in 0..3 {
        let out = simulate(&Config {
            horizon: 256,
            seed,
            ..Config::default()
        })?;
        worst = worst.max(out.max_lipschitz_ratio.unwrap_or(1.0));
    }
    let bound = crate::coco::RATIO_BOUND + crate::coco::RATIO_SLACK;
    Ok(CheckResult::new(
        "Lipschitz ratio bound",
        worst <= bound,
        format!("max L_t/L_(t-1) = {worst} (bound {bound})"),
    ))
}

fn check_estimator(rng: &mut Rng) -> Result<CheckResult> {
    let n = 3;
    let delta = 0.5;
    let a = Vector::new(vec![1.0, -2.0, 0.5])?;
    let samples = 20_000;
    let mut sum = Vector::zeros(n);
    let mut sum_sq = vec![0.0; n];
    for _ in 0..samples {
        let u = sphere_sample(n, rng);
        let mut y = Vector::zeros(n);
        y.axpy(delta, &u);
        let est = gradient_estimate(n, delta, a.dot(&y), &u);
        for i in 0..n {
            sum_sq[i] += est[i] * est[i];
        }
        sum.axpy(1.0, &est);
    }
    let k = samples as f64;
    let mut ok = true;
    let mut worst_z = 0.0f64;
    for i in 0..n {
        let mean = sum[i] / k;
        let se = ((sum_sq[i] / k - mean * mean) / k).sqrt();
        let z = (mean - a[i]).abs() / se;
        worst_z = worst_z.max(z);
        ok &= z <= 4.0;
    }
    Ok(CheckResult::new(
        "one-point estimator unbiasedness",
        ok,
        format!("{samples} draws, worst |z| = {worst_z:.2}"),
    ))
}

/// Runs the invariant suite.
pub fn run_selftest(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = Rng::new(seed);
    Ok(vec![
        check_oracle_equivalence(50, &mut rng)?,
        check_flow_decomposition(20, &mut rng)?,
        check_scale_invariance()?,
        check_lipschitz_ratio()?,
        check_estimator(&mut rng)?,
    ])
}

/// Compares a set's oracle with brute force on small random instances.
/// `kind` is one of `box`, `simplex`, `ball`, `flow`.
pub fn oracle_check(kind: &str, seed: u64, trials: usize) -> Result<CheckResult> {
    let mut rng = Rng::new(seed);
    let mut mismatches = 0usize;
    for _ in 0..trials {
        let n = 2 + rng.below(5) as usize;
        match kind {
            "flow" => {
                let dag = Arc::new(random_dag(n + 1, rng.below(12) as usize, &mut rng));
                let set = DecisionSet::flow_polytope(dag.clone(), 0, n)?;
                let c = random_direction(dag.edge_count(), &mut rng)?;
                let x = set.lp_minimize(&c)?;
                let brute = dag
                    .enumerate_paths(0, n, usize::MAX)
                    .expect("unbounded enumeration")
                    .iter()
                    .map(|p| path_weight(p, c.as_slice()))
                    .fold(f64::INFINITY, f64::min);
                let got = path_weight(
                    &(0..dag.edge_count()).filter(|&e| x[e] == 1.0).collect::<Vec<_>>(),
                    c.as_slice(),
                );
                mismatches += usize::from(got != brute);
            }
            "box" | "simplex" => {
                let set = if kind == "box" {
                    DecisionSet::cube(n, -1.0, 2.0)?
                } else {
                    DecisionSet::simplex(n, 1.5)?
                };
                let c = random_direction(n, &mut rng)?;
                let got = c.dot(&set.lp_minimize(&c)?);
                let brute = vertices(&set)
                    .iter()
                    .map(|v| c.dot(v))
                    .fold(f64::INFINITY, f64::min);
                mismatches += usize::from(got != brute);
            }
            "ball" => {
                let set = DecisionSet::ball(Vector::zeros(n), 2.0)?;
                let c = random_direction(n, &mut rng)?;
                let got = c.dot(&set.lp_minimize(&c)?);
                let sampled = (0..2000)
                    .map(|_| c.dot(&sphere_sample(n, &mut rng).scaled(2.0)))
                    .fold(f64::INFINITY, f64::min);
                let exact = -2.0 * c.norm();
                let tol = 1e-12 * exact.abs().max(1.0);
                mismatches += usize::from((got - exact).abs() > tol || got > sampled + tol);
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown set kind `{other}` (expected box, simplex, ball or flow)"
                )))
            }
        }
    }
    Ok(CheckResult::new(
        &format!("{kind} oracle vs brute force"),
        mismatches == 0,
        format!("{trials} random directions, {mismatches} mismatches"),
    ))
}

fn random_direction(n: usize, rng: &mut Rng) -> Result<Vector> {
    Vector::new((0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect())
}

fn vertices(set: &DecisionSet) -> Vec<Vector> {
    let n = set.dim();
    match set.kind() {
        crate::oracles::SetKind::Box { lower, upper } => (0..1u32 << n)
            .map(|mask| {
                Vector::new(
                    (0..n)
                        .map(|i| if mask >> i & 1 == 1 { upper[i] } else { lower[i] })
                        .collect(),
                )
                .expect("finite corner")
            })
            .collect(),
        crate::oracles::SetKind::Simplex { radius } => (0..n).map(|i| Vector::basis(n, i, *radius)).collect(),
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_checks_pass() {
        for kind in ["box", "simplex", "ball", "flow"] {
            let r = oracle_check(kind, 1, 30).unwrap();
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
        assert!(oracle_check("cone", 1, 1).is_err());
    }
}
