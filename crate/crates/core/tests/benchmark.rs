use cocokit::bench::network::{generate_network_with_edges, hindsight_comparator, perturb_round, RoundData};
use cocokit::bench::{simulate, Config};
use cocokit::Rng;

/// Straightforward hindsight search: every s-d path, feasibility checked
/// round by round, cost summed round by round.
fn naive_best(edges: &[(usize, usize)], s: usize, d: usize, rounds: &[RoundData]) -> (Vec<usize>, f64) {
    fn paths(edges: &[(usize, usize)], u: usize, d: usize) -> Vec<Vec<usize>> {
        if u == d {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for (e, &(a, b)) in edges.iter().enumerate() {
            if a == u {
                for mut tail in paths(edges, b, d) {
                    tail.insert(0, e);
                    out.push(tail);
                }
            }
        }
        out
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for p in paths(edges, s, d) {
        let feasible = rounds
            .iter()
            .all(|rd| p.iter().map(|&e| rd.bandwidth[e]).sum::<f64>() >= rd.threshold);
        if !feasible {
            continue;
        }
        let cost: f64 = rounds.iter().map(|rd| p.iter().map(|&e| rd.latency[e]).sum::<f64>()).sum();
        if best.as_ref().is_none_or(|(_, c)| cost < *c) {
            best = Some((p, cost));
        }
    }
    best.expect("planted path is feasible")
}

#[test]
fn comparator_matches_naive_search_on_small_networks() {
    for seed in 0..10 {
        let inst = generate_network_with_edges(seed, 8, 18).unwrap();
        let mut rng = Rng::stream(seed, 1);
        let rounds: Vec<RoundData> = (0..200).map(|_| perturb_round(&inst, 0.9, &mut rng)).collect();
        let got = hindsight_comparator(&inst, &rounds).unwrap();
        let (path, cost) = naive_best(inst.dag.edges(), inst.source, inst.sink, &rounds);
        let mut a = got.path.clone();
        let mut b = path;
        a.sort_unstable();
        b.sort_unstable();
        assert!((got.cum_cost - cost).abs() <= 1e-9 * cost, "seed {seed}: {} vs {cost}", got.cum_cost);
        assert_eq!(a, b, "seed {seed}");
    }
}

#[test]
fn sampled_path_cost_tracks_fractional_cost() {
    // The sampled path's latency is an unbiased draw of the fractional cost.
    for seed in 0..10 {
        let cfg = Config {
            horizon: 300,
            seed,
            sample_paths: true,
            ..Config::default()
        };
        let out = simulate(&cfg).unwrap();
        let diffs: Vec<f64> = out
            .rows
            .iter()
            .map(|r| r.realized_cost.expect("sampled cost") - r.f_val)
            .collect();
        let k = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / k;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (k - 1.0);
        let se = (var / k).sqrt();
        assert!(mean.abs() <= 3.0 * se + 1e-9, "seed {seed}: mean {mean}, se {se}");
    }
}
