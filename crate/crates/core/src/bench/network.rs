//! Synthetic latency/bandwidth networks around a hub, per-round
//! perturbations, and the best fixed feasible path in hindsight.

use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metrics::FirstOrderFeedback;
use crate::oracles::Dag;
use crate::rng::Rng;
use crate::vector::Vector;

/// Range of a node's latency to the hub, in ms.
pub const HUB_LATENCY_MS: (f64, f64) = (5.0, 50.0);
/// Range of a node's access bandwidth, in Mbps.
pub const NODE_BANDWIDTH_MBPS: (f64, f64) = (10.0, 100.0);
/// Planted-path edges get this multiple of the largest node bandwidth.
pub const PLANTED_BANDWIDTH_FACTOR: f64 = 2.0;
/// Per-round multiplicative range for latencies.
pub const LATENCY_SCALE: (f64, f64) = (0.5, 1.5);
/// Per-round multiplicative range for bandwidths.
pub const BANDWIDTH_SCALE: (f64, f64) = (0.8, 1.2);
/// Path enumeration stops beyond this many paths.
pub const ENUMERATION_LIMIT: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkInstance {
    pub dag: Arc<Dag>,
    pub base_latency: Vec<f64>,
    pub base_bandwidth: Vec<f64>,
    pub source: usize,
    pub sink: usize,
    pub hub: usize,
    /// Edge ids of the planted path, in path order.
    pub planted: Vec<usize>,
}

enum EdgeTarget {
    Extra(usize),
    Total(usize),
}

/// Hub star plus `extra_edges` random edges and a planted high-bandwidth path.
///
/// Node 0 is the source, node `nodes − 1` the sink and node 1 the hub. The
/// remaining nodes are placed in a random topological order between source
/// and sink; every edge points forward in that order.
pub fn generate_network(seed: u64, nodes: usize, extra_edges: usize) -> Result<NetworkInstance> {
    build(seed, nodes, EdgeTarget::Extra(extra_edges))
}

/// Like [`generate_network`], adding random edges until there are `total_edges`.
pub fn generate_network_with_edges(seed: u64, nodes: usize, total_edges: usize) -> Result<NetworkInstance> {
    build(seed, nodes, EdgeTarget::Total(total_edges))
}

fn build(seed: u64, nodes: usize, target: EdgeTarget) -> Result<NetworkInstance> {
    if nodes < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 nodes, got {nodes}")));
    }
    let mut rng = Rng::stream(seed, 0);
    let source = 0;
    let sink = nodes - 1;
    let hub = 1;

    let mut middle: Vec<usize> = (1..sink).collect();
    rng.shuffle(&mut middle);
    let mut order = vec![source];
    order.extend(&middle);
    order.push(sink);
    let mut pos = vec![0; nodes];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }

    let hub_latency: Vec<f64> = (0..nodes)
        .map(|_| rng.uniform_range(HUB_LATENCY_MS.0, HUB_LATENCY_MS.1))
        .collect();
    let bandwidth: Vec<f64> = (0..nodes)
        .map(|_| rng.uniform_range(NODE_BANDWIDTH_MBPS.0, NODE_BANDWIDTH_MBPS.1))
        .collect();
    let max_bandwidth = bandwidth.iter().cloned().fold(0.0, f64::max);

    let mut edges = Vec::new();
    let mut latency = Vec::new();
    let mut bw = Vec::new();
    let mut used: HashSet<(usize, usize)> = HashSet::new();
    let oriented = |a: usize, b: usize| if pos[a] < pos[b] { (a, b) } else { (b, a) };

    for v in (0..nodes).filter(|&v| v != hub) {
        let e = oriented(v, hub);
        edges.push(e);
        used.insert(e);
        latency.push(hub_latency[v]);
        bw.push(bandwidth[v]);
    }

    // Planted chain source → intermediates → sink; without intermediates the hub path is planted.
    let candidates: Vec<usize> = middle.iter().copied().filter(|&v| v != hub).collect();
    let hops = 2 + rng.below(3) as usize;
    let k = (hops - 1).min(candidates.len());
    let planted = if k == 0 {
        vec![edges_index(&edges, (source, hub)), edges_index(&edges, (hub, sink))]
    } else {
        let mut pool = candidates.clone();
        rng.shuffle(&mut pool);
        let mut chain: Vec<usize> = pool[..k].to_vec();
        chain.sort_by_key(|&v| pos[v]);
        let mut walk = vec![source];
        walk.extend(chain);
        walk.push(sink);
        let mut ids = Vec::new();
        for w in walk.windows(2) {
            ids.push(edges.len());
            edges.push((w[0], w[1]));
            used.insert((w[0], w[1]));
            latency.push(hub_latency[w[0]] + hub_latency[w[1]]);
            bw.push(PLANTED_BANDWIDTH_FACTOR * max_bandwidth);
        }
        ids
    };

    let extra = match target {
        EdgeTarget::Extra(k) => k,
        EdgeTarget::Total(m) => m.checked_sub(edges.len()).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "{m} edges requested but the star and planted path already use {}",
                edges.len()
            ))
        })?,
    };
    let mut pairs = Vec::new();
    for (i, &u) in order.iter().enumerate() {
        for &v in &order[i + 1..] {
            if u != hub && v != hub && !used.contains(&(u, v)) {
                pairs.push((u, v));
            }
        }
    }
    if extra > pairs.len() {
        return Err(Error::InvalidParameter(format!(
            "{extra} extra edges requested but only {} node pairs are free",
            pairs.len()
        )));
    }
    rng.shuffle(&mut pairs);
    for &(u, v) in &pairs[..extra] {
        edges.push((u, v));
        latency.push(hub_latency[u] + hub_latency[v]);
        bw.push(bandwidth[u].min(bandwidth[v]));
    }

    Ok(NetworkInstance {
        dag: Arc::new(Dag::new(nodes, edges)?),
        base_latency: latency,
        base_bandwidth: bw,
        source,
        sink,
        hub,
        planted,
    })
}

fn edges_index(edges: &[(usize, usize)], e: (usize, usize)) -> usize {
    edges.iter().position(|&x| x == e).expect("star edge present")
}

/// One round's edge latencies, bandwidths and bandwidth threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundData {
    pub latency: Vector,
    pub bandwidth: Vector,
    pub threshold: f64,
}

/// Independent per-edge scale factors; threshold `β ×` the planted path's bandwidth this round.
pub fn perturb_round(inst: &NetworkInstance, beta: f64, rng: &mut Rng) -> RoundData {
    let latency: Vec<f64> = inst
        .base_latency
        .iter()
        .map(|l| l * rng.uniform_range(LATENCY_SCALE.0, LATENCY_SCALE.1))
        .collect();
    let bandwidth: Vec<f64> = inst
        .base_bandwidth
        .iter()
        .map(|b| b * rng.uniform_range(BANDWIDTH_SCALE.0, BANDWIDTH_SCALE.1))
        .collect();
    let bandwidth = Vector::from_vec_unchecked(bandwidth);
    let planted_bw = sorted_path_sum(&inst.planted, &bandwidth);
    RoundData {
        latency: Vector::from_vec_unchecked(latency),
        bandwidth,
        threshold: beta * planted_bw,
    }
}

/// `f(x) = <latency, x>` and `g(x) = B − <bandwidth, x>` with their gradients.
pub fn round_functions(rd: &RoundData, x: &Vector) -> Result<FirstOrderFeedback> {
    x.check_dim(rd.latency.len())?;
    FirstOrderFeedback::new(
        rd.latency.dot(x),
        rd.latency.clone(),
        rd.threshold - rd.bandwidth.dot(x),
        rd.bandwidth.scaled(-1.0),
    )
}

/// Sum of `weights` over the edges of `path` in increasing edge order, which
/// matches `<weights, incidence(path)>` bit for bit.
pub fn sorted_path_sum(path: &[usize], weights: &Vector) -> f64 {
    let mut ids = path.to_vec();
    ids.sort_unstable();
    ids.iter().map(|&e| weights[e]).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComparatorSource {
    /// Best feasible path found by exhaustive enumeration.
    Exhaustive,
    /// Too many paths to enumerate; the planted path is used.
    Planted,
}

impl ComparatorSource {
    pub fn name(&self) -> &'static str {
        match self {
            ComparatorSource::Exhaustive => "exhaustive",
            ComparatorSource::Planted => "planted",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparator {
    pub path: Vec<usize>,
    pub x_star: Vector,
    pub cum_cost: f64,
    pub source: ComparatorSource,
}

/// Feasible in every round: `B_t − Σ_{e∈p} bandwidth_t[e] <= 0`.
pub fn path_feasible(path: &[usize], rounds: &[RoundData]) -> bool {
    let mut ids = path.to_vec();
    ids.sort_unstable();
    sorted_ids_feasible(&ids, rounds)
}

fn sorted_ids_feasible(ids: &[usize], rounds: &[RoundData]) -> bool {
    rounds.iter().all(|rd| {
        let bw: f64 = ids.iter().map(|&e| rd.bandwidth[e]).sum();
        rd.threshold - bw <= 0.0
    })
}

/// Cheapest path (by cumulative latency) that is feasible in every round.
/// Ties keep the first path in enumeration order.
///
/// Candidates are visited in order of their cost under the summed latency
/// vector; the exact per-round cost is only computed for paths within a
/// rounding margin of the best exact cost found so far.
pub fn hindsight_comparator(inst: &NetworkInstance, rounds: &[RoundData]) -> Result<Comparator> {
    let exact = |ids: &[usize]| {
        rounds
            .iter()
            .map(|rd| ids.iter().map(|&e| rd.latency[e]).sum::<f64>())
            .sum::<f64>()
    };
    let finish = |path: Vec<usize>, cum_cost: f64, source| Comparator {
        x_star: Vector::from_vec_unchecked(inst.dag.incidence(&path)),
        path,
        cum_cost,
        source,
    };
    let Some(paths) = inst.dag.enumerate_paths(inst.source, inst.sink, ENUMERATION_LIMIT) else {
        let planted = inst.planted.clone();
        let cost = sorted_path_sum_rounds(&planted, rounds);
        return Ok(finish(planted, cost, ComparatorSource::Planted));
    };
    let mut total = vec![0.0; inst.dag.edge_count()];
    for rd in rounds {
        for (t, l) in total.iter_mut().zip(rd.latency.iter()) {
            *t += l;
        }
    }
    let sorted: Vec<Vec<usize>> = paths
        .iter()
        .map(|p| {
            let mut ids = p.clone();
            ids.sort_unstable();
            ids
        })
        .collect();
    let mut order: Vec<(f64, usize)> = sorted
        .iter()
        .enumerate()
        .map(|(i, ids)| (ids.iter().map(|&e| total[e]).sum::<f64>(), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut best: Option<(usize, f64)> = None;
    for (approx, i) in order {
        if let Some((_, b)) = best {
            if approx > b + 1e-9 * b.abs().max(1.0) {
                break;
            }
        }
        if !sorted_ids_feasible(&sorted[i], rounds) {
            continue;
        }
        let c = exact(&sorted[i]);
        if best.is_none_or(|(bi, b)| c < b || (c == b && i < bi)) {
            best = Some((i, c));
        }
    }
    let (i, cost) = best.ok_or_else(|| Error::Assertion("no path is feasible in every round".into()))?;
    let path = paths.into_iter().nth(i).expect("index from enumeration");
    Ok(finish(path, cost, ComparatorSource::Exhaustive))
}

fn sorted_path_sum_rounds(path: &[usize], rounds: &[RoundData]) -> f64 {
    rounds.iter().map(|rd| sorted_path_sum(path, &rd.latency)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_nodes_is_a_star() {
        let inst = generate_network(4, 3, 0).unwrap();
        assert_eq!(inst.dag.edge_count(), 2);
        let paths = inst.dag.enumerate_paths(inst.source, inst.sink, 10).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0], inst.planted);
    }

    #[test]
    fn deterministic_generation() {
        assert_eq!(generate_network(11, 20, 30).unwrap(), generate_network(11, 20, 30).unwrap());
        assert_ne!(generate_network(11, 20, 30).unwrap(), generate_network(12, 20, 30).unwrap());
    }

    #[test]
    fn edge_total_and_recipe() {
        let inst = generate_network_with_edges(2, 12, 30).unwrap();
        assert_eq!(inst.dag.edge_count(), 30);
        assert!(inst.base_latency.iter().all(|l| *l > 0.0 && l.is_finite()));
        assert!(inst.base_bandwidth.iter().all(|b| *b > 0.0 && b.is_finite()));
        assert!(inst.dag.reachable(inst.source, inst.sink));
        assert!(generate_network_with_edges(2, 12, 5).is_err());
    }

    #[test]
    fn planted_feasible_at_beta_one() {
        let inst = generate_network_with_edges(3, 10, 20).unwrap();
        let mut rng = Rng::new(1);
        for _ in 0..100 {
            let rd = perturb_round(&inst, 1.0, &mut rng);
            let x = Vector::from_vec_unchecked(inst.dag.incidence(&inst.planted));
            let fb = round_functions(&rd, &x).unwrap();
            assert!(fb.g_value <= 0.0);
        }
    }

    #[test]
    fn mixture_cost_is_average() {
        let inst = generate_network_with_edges(5, 8, 16).unwrap();
        let paths = inst.dag.enumerate_paths(inst.source, inst.sink, 1000).unwrap();
        let mut rng = Rng::new(2);
        let rd = perturb_round(&inst, 0.9, &mut rng);
        let a = Vector::from_vec_unchecked(inst.dag.incidence(&paths[0]));
        let b = Vector::from_vec_unchecked(inst.dag.incidence(&paths[1]));
        let mix = a.lerp(&b, 0.5);
        let fa = round_functions(&rd, &a).unwrap().f_value;
        let fb = round_functions(&rd, &b).unwrap().f_value;
        let fm = round_functions(&rd, &mix).unwrap().f_value;
        assert!((fm - 0.5 * (fa + fb)).abs() < 1e-9 * fm.abs());
    }
}
