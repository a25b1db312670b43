//! Directed acyclic graphs, signed-weight shortest paths, path enumeration and
//! flow decomposition.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Residual flow below this value counts as zero during decomposition.
pub const RESIDUAL_EPS: f64 = 1e-12;

/// Tolerance on unit-flow conservation accepted by [`flow_decompose`].
pub const CONSERVATION_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct Dag {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    topological_order: Vec<usize>,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
}

impl Dag {
    /// Builds a DAG, rejecting out-of-range endpoints and cycles.
    pub fn new(node_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut incoming = vec![Vec::new(); node_count];
        let mut outgoing = vec![Vec::new(); node_count];
        for (i, &(u, v)) in edges.iter().enumerate() {
            if u >= node_count || v >= node_count {
                return Err(Error::InvalidParameter(format!(
                    "edge {i} ({u}, {v}) references a node outside 0..{node_count}"
                )));
            }
            outgoing[u].push(i);
            incoming[v].push(i);
        }

        // Kahn's algorithm; smallest ready node first keeps the order canonical.
        let mut indeg: Vec<usize> = incoming.iter().map(Vec::len).collect();
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = indeg
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(v, _)| std::cmp::Reverse(v))
            .collect();
        let mut order = Vec::with_capacity(node_count);
        while let Some(std::cmp::Reverse(u)) = ready.pop() {
            order.push(u);
            for &e in &outgoing[u] {
                let v = edges[e].1;
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    ready.push(std::cmp::Reverse(v));
                }
            }
        }
        if order.len() != node_count {
            return Err(Error::Cyclic);
        }

        Ok(Self {
            node_count,
            edges,
            topological_order: order,
            incoming,
            outgoing,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topological_order
    }

    pub fn incoming(&self, v: usize) -> &[usize] {
        &self.incoming[v]
    }

    pub fn outgoing(&self, u: usize) -> &[usize] {
        &self.outgoing[u]
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v >= self.node_count {
            return Err(Error::InvalidParameter(format!(
                "node {v} outside 0..{}",
                self.node_count
            )));
        }
        Ok(())
    }

    /// 0/1 incidence vector of an edge list.
    pub fn incidence(&self, path: &[usize]) -> Vec<f64> {
        let mut x = vec![0.0; self.edges.len()];
        for &e in path {
            x[e] = 1.0;
        }
        x
    }

    /// Whether `d` is reachable from `s`.
    pub fn reachable(&self, s: usize, d: usize) -> bool {
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            if u == d {
                return true;
            }
            for &e in &self.outgoing[u] {
                let v = self.edges[e].1;
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        false
    }

    /// All s-d paths as edge lists, up to `limit` of them; `None` if there are more.
    pub fn enumerate_paths(&self, s: usize, d: usize, limit: usize) -> Option<Vec<Vec<usize>>> {
        let mut out = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        if self.enumerate_from(s, d, limit, &mut stack, &mut out) {
            Some(out)
        } else {
            None
        }
    }

    fn enumerate_from(
        &self,
        u: usize,
        d: usize,
        limit: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) -> bool {
        if u == d {
            if out.len() >= limit {
                return false;
            }
            out.push(stack.clone());
            return true;
        }
        for &e in &self.outgoing[u] {
            stack.push(e);
            let ok = self.enumerate_from(self.edges[e].1, d, limit, stack, out);
            stack.pop();
            if !ok {
                return false;
            }
        }
        true
    }

    /// Serializes as `nodes <n> source <s> sink <d>` followed by one `from to` line per edge.
    pub fn to_edge_list(&self, source: usize, sink: usize) -> String {
        let mut out = format!("nodes {} source {} sink {}\n", self.node_count, source, sink);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    /// Parses the edge-list format written by [`Dag::to_edge_list`].
    /// Blank lines and lines starting with `#` are skipped.
    pub fn from_edge_list(text: &str) -> Result<(Dag, usize, usize)> {
        let mut header: Option<(usize, usize, usize)> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| {
                s.parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("expected a non-negative integer, got `{s}`"),
                })
            };
            match header {
                None => {
                    if toks.len() != 6 || toks[0] != "nodes" || toks[2] != "source" || toks[4] != "sink" {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: "expected header `nodes <n> source <s> sink <d>`".into(),
                        });
                    }
                    header = Some((num(toks[1])?, num(toks[3])?, num(toks[5])?));
                }
                Some(_) => {
                    if toks.len() != 2 {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: "expected `from to`".into(),
                        });
                    }
                    edges.push((num(toks[0])?, num(toks[1])?));
                }
            }
        }
        let (n, s, d) = header.ok_or(Error::Parse {
            line: 0,
            msg: "missing header".into(),
        })?;
        if s >= n || d >= n {
            return Err(Error::Parse {
                line: 1,
                msg: format!("source/sink outside 0..{n}"),
            });
        }
        Ok((Dag::new(n, edges)?, s, d))
    }
}

/// Minimum-weight s-d path for arbitrary (signed) finite edge weights.
///
/// Dynamic programming over the topological order. At each node the
/// predecessor is the lowest-index incoming edge attaining the minimum.
/// Path weights accumulate left to right from `s`.
pub fn dag_shortest_path(dag: &Dag, weights: &[f64], s: usize, d: usize) -> Result<Vec<usize>> {
    if weights.len() != dag.edge_count() {
        return Err(Error::DimensionMismatch {
            expected: dag.edge_count(),
            got: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("edge weights"));
    }
    dag.check_node(s)?;
    dag.check_node(d)?;

    let n = dag.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    dist[s] = 0.0;
    for &v in dag.topological_order() {
        if v == s {
            continue;
        }
        for &e in dag.incoming(v) {
            let u = dag.edges()[e].0;
            if dist[u].is_finite() {
                let cand = dist[u] + weights[e];
                if cand < dist[v] {
                    dist[v] = cand;
                    pred[v] = Some(e);
                }
            }
        }
    }
    if !dist[d].is_finite() {
        return Err(Error::NoPath {
            source_node: s,
            sink: d,
        });
    }

    let mut path = Vec::new();
    let mut v = d;
    while v != s {
        let e = pred[v].expect("finite distance implies a predecessor");
        path.push(e);
        v = dag.edges()[e].0;
    }
    path.reverse();
    Ok(path)
}

/// Total weight of a path, summed from the source end.
pub fn path_weight(path: &[usize], weights: &[f64]) -> f64 {
    path.iter().fold(0.0, |acc, &e| acc + weights[e])
}

/// A fractional unit flow written as a convex combination of s-d paths.
#[derive(Clone, Debug, PartialEq)]
pub struct PathDecomposition {
    pub entries: Vec<(Vec<usize>, f64)>,
}

impl PathDecomposition {
    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w).sum()
    }

    /// `Σ w_i · incidence(p_i)` over `edge_count` edges.
    pub fn reconstruct(&self, edge_count: usize) -> Vec<f64> {
        let mut x = vec![0.0; edge_count];
        for (path, w) in &self.entries {
            for &e in path {
                x[e] += w;
            }
        }
        x
    }
}

/// Largest absolute net-flow imbalance relative to a unit s-d flow, and the node where it occurs.
pub fn conservation_error(dag: &Dag, flow: &[f64], s: usize, d: usize) -> (usize, f64) {
    let mut net = vec![0.0; dag.node_count()];
    for (e, &(u, v)) in dag.edges().iter().enumerate() {
        net[u] += flow[e];
        net[v] -= flow[e];
    }
    net[s] -= 1.0;
    if d != s {
        net[d] += 1.0;
    }
    net.iter()
        .enumerate()
        .map(|(v, x)| (v, x.abs()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// Decomposes a unit s-d flow into at most `|E|` weighted paths.
///
/// Repeatedly walks from `s` along the outgoing edge with the largest
/// residual, then subtracts the path's bottleneck. The bottleneck edge is set
/// to exactly zero so every extraction retires at least one edge.
pub fn flow_decompose(dag: &Dag, flow: &[f64], s: usize, d: usize) -> Result<PathDecomposition> {
    if flow.len() != dag.edge_count() {
        return Err(Error::DimensionMismatch {
            expected: dag.edge_count(),
            got: flow.len(),
        });
    }
    if flow.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("flow"));
    }
    dag.check_node(s)?;
    dag.check_node(d)?;
    let (node, imbalance) = conservation_error(dag, flow, s, d);
    if imbalance > CONSERVATION_TOL {
        return Err(Error::ConservationViolated { node, imbalance });
    }

    let mut residual: Vec<f64> = flow.iter().map(|&x| x.max(0.0)).collect();
    let mut entries = Vec::new();
    'extract: loop {
        let mut path = Vec::new();
        let mut u = s;
        while u != d {
            let best = dag
                .outgoing(u)
                .iter()
                .copied()
                .filter(|&e| residual[e] > RESIDUAL_EPS)
                .fold(None, |best: Option<usize>, e| match best {
                    Some(b) if residual[b] >= residual[e] => Some(b),
                    _ => Some(e),
                });
            match best {
                Some(e) => {
                    path.push(e);
                    u = dag.edges()[e].1;
                }
                None if path.is_empty() => break 'extract,
                None => {
                    // Dead end left by rounding noise: retire the edge that led here.
                    let last = *path.last().unwrap();
                    residual[last] = 0.0;
                    continue 'extract;
                }
            }
        }
        if path.is_empty() {
            break;
        }
        let (arg, bottleneck) = path
            .iter()
            .map(|&e| (e, residual[e]))
            .fold((usize::MAX, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        for &e in &path {
            residual[e] -= bottleneck;
        }
        residual[arg] = 0.0;
        entries.push((path, bottleneck));
        if entries.len() >= dag.edge_count() {
            break;
        }
    }
    Ok(PathDecomposition { entries })
}

/// Draws one path with probability proportional to its weight.
pub fn sample_path(dec: &PathDecomposition, rng: &mut Rng) -> Vec<usize> {
    assert!(!dec.entries.is_empty(), "empty decomposition");
    let total = dec.total_weight();
    let target = rng.uniform() * total;
    let mut acc = 0.0;
    for (path, w) in &dec.entries {
        acc += w;
        if target < acc {
            return path.clone();
        }
    }
    dec.entries.last().unwrap().0.clone()
}
