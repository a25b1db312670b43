//! Decision sets with their linear-minimization oracles, projections and geometry.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::oracles::dag::{conservation_error, dag_shortest_path, Dag};
use crate::vector::Vector;

#[derive(Clone, Debug, PartialEq)]
pub enum SetKind {
    /// Axis-aligned box `lower <= x <= upper`.
    Box { lower: Vector, upper: Vector },
    /// `{x >= 0, Σ x = radius}`.
    Simplex { radius: f64 },
    /// Euclidean ball.
    Ball { center: Vector, radius: f64 },
    /// Convex hull of the s-d path incidence vectors of a DAG.
    FlowPolytope {
        dag: Arc<Dag>,
        source: usize,
        sink: usize,
    },
}

impl SetKind {
    pub fn name(&self) -> &'static str {
        match self {
            SetKind::Box { .. } => "box",
            SetKind::Simplex { .. } => "simplex",
            SetKind::Ball { .. } => "ball",
            SetKind::FlowPolytope { .. } => "flow_polytope",
        }
    }
}

/// A compact convex decision set together with its geometry.
///
/// `diameter` is exact for box, simplex and ball; for the flow polytope it is
/// the upper bound `sqrt(2|E|)`. `inner_radius`/`outer_radius` are present only
/// when the set contains a ball around the origin (`r B ⊆ X ⊆ R B`).
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionSet {
    dim: usize,
    kind: SetKind,
    diameter: f64,
    inner_radius: Option<f64>,
    outer_radius: Option<f64>,
}

impl DecisionSet {
    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        let n = lower.len();
        upper.check_dim(n)?;
        if n == 0 {
            return Err(Error::InvalidParameter("empty box".into()));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::InvalidParameter("box lower bound exceeds upper bound".into()));
        }
        let diameter = upper.dist(&lower);
        if diameter <= 0.0 {
            return Err(Error::InvalidParameter("degenerate box".into()));
        }
        let contains_origin = lower.iter().zip(upper.iter()).all(|(l, u)| *l < 0.0 && *u > 0.0);
        let (inner, outer) = if contains_origin {
            let r = lower
                .iter()
                .zip(upper.iter())
                .map(|(l, u)| (-l).min(*u))
                .fold(f64::INFINITY, f64::min);
            let big: f64 = lower
                .iter()
                .zip(upper.iter())
                .map(|(l, u)| {
                    let m = (-l).max(*u);
                    m * m
                })
                .sum::<f64>()
                .sqrt();
            (Some(r), Some(big))
        } else {
            (None, None)
        };
        Ok(Self {
            dim: n,
            kind: SetKind::Box { lower, upper },
            diameter,
            inner_radius: inner,
            outer_radius: outer,
        })
    }

    /// The cube `[lo, hi]^n`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(Vector::new(vec![lo; n])?, Vector::new(vec![hi; n])?)
    }

    pub fn simplex(n: usize, radius: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter("simplex needs dimension >= 2".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter("simplex radius must be positive".into()));
        }
        Ok(Self {
            dim: n,
            kind: SetKind::Simplex { radius },
            diameter: radius * std::f64::consts::SQRT_2,
            inner_radius: None,
            outer_radius: None,
        })
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidParameter("empty ball".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter("ball radius must be positive".into()));
        }
        let at_origin = center.iter().all(|c| *c == 0.0);
        Ok(Self {
            dim: center.len(),
            diameter: 2.0 * radius,
            inner_radius: at_origin.then_some(radius),
            outer_radius: at_origin.then_some(radius),
            kind: SetKind::Ball { center, radius },
        })
    }

    pub fn flow_polytope(dag: Arc<Dag>, source: usize, sink: usize) -> Result<Self> {
        if source >= dag.node_count() || sink >= dag.node_count() || source == sink {
            return Err(Error::InvalidParameter("invalid source/sink".into()));
        }
        if !dag.reachable(source, sink) {
            return Err(Error::NoPath {
                source_node: source,
                sink,
            });
        }
        let m = dag.edge_count();
        Ok(Self {
            dim: m,
            diameter: (2.0 * m as f64).sqrt(),
            inner_radius: None,
            outer_radius: None,
            kind: SetKind::FlowPolytope { dag, source, sink },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn inner_radius(&self) -> Option<f64> {
        self.inner_radius
    }

    pub fn outer_radius(&self) -> Option<f64> {
        self.outer_radius
    }

    /// A minimizer of `<direction, x>` over the set.
    ///
    /// Ties resolve deterministically: lowest coordinate on the simplex, the
    /// lower bound for zero box coordinates, lowest predecessor edge index on
    /// the flow polytope, and `center - radius * e_1` for a zero direction on
    /// the ball.
    pub fn lp_minimize(&self, direction: &Vector) -> Result<Vector> {
        direction.check_dim(self.dim)?;
        if direction.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("oracle direction"));
        }
        Ok(match &self.kind {
            SetKind::Box { lower, upper } => Vector::from_vec_unchecked(
                direction
                    .iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(c, (l, u))| if *c < 0.0 { *u } else { *l })
                    .collect(),
            ),
            SetKind::Simplex { radius } => {
                let mut best = 0;
                for (i, c) in direction.iter().enumerate() {
                    if *c < direction[best] {
                        best = i;
                    }
                }
                Vector::basis(self.dim, best, *radius)
            }
            SetKind::Ball { center, radius } => {
                // Normalize by the largest magnitude first so the norm cannot overflow.
                let scale = direction.max_abs();
                if scale == 0.0 {
                    let mut x = center.clone();
                    x.axpy(-radius, &Vector::basis(self.dim, 0, 1.0));
                    x
                } else {
                    let unit = direction.scaled(1.0 / scale);
                    let norm = unit.norm();
                    let mut x = center.clone();
                    x.axpy(-radius / norm, &unit);
                    x
                }
            }
            SetKind::FlowPolytope { dag, source, sink } => {
                let path = dag_shortest_path(dag, direction.as_slice(), *source, *sink)?;
                Vector::from_vec_unchecked(dag.incidence(&path))
            }
        })
    }

    /// Euclidean projection; available for box, simplex and ball.
    pub fn project(&self, y: &Vector) -> Result<Vector> {
        y.check_dim(self.dim)?;
        if y.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("projection input"));
        }
        match &self.kind {
            SetKind::Box { lower, upper } => Ok(Vector::from_vec_unchecked(
                y.iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(v, (l, u))| v.max(*l).min(*u))
                    .collect(),
            )),
            SetKind::Ball { center, radius } => {
                let diff = y.sub(center);
                let dist = diff.norm();
                if dist <= *radius {
                    Ok(y.clone())
                } else {
                    let mut x = center.clone();
                    x.axpy(radius / dist, &diff);
                    Ok(x)
                }
            }
            SetKind::Simplex { radius } => Ok(project_simplex(y, *radius)),
            SetKind::FlowPolytope { .. } => Err(Error::Unsupported {
                op: "project",
                kind: self.kind.name(),
            }),
        }
    }

    /// Whether `x` satisfies the set's defining constraints within `tol`.
    pub fn membership(&self, x: &Vector, tol: f64) -> bool {
        if x.len() != self.dim || x.iter().any(|c| !c.is_finite()) {
            return false;
        }
        match &self.kind {
            SetKind::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            SetKind::Simplex { radius } => {
                x.iter().all(|v| *v >= -tol) && (x.iter().sum::<f64>() - radius).abs() <= tol
            }
            SetKind::Ball { center, radius } => x.dist(center) <= radius + tol,
            SetKind::FlowPolytope { dag, source, sink } => {
                x.iter().all(|v| *v >= -tol && *v <= 1.0 + tol)
                    && conservation_error(dag, x.as_slice(), *source, *sink).1 <= tol
            }
        }
    }
}

/// Euclidean projection onto `{x >= 0, Σ x = radius}` by sorting.
fn project_simplex(y: &Vector, radius: f64) -> Vector {
    let mut u: Vec<f64> = y.as_slice().to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let candidate = (cumsum - radius) / (j + 1) as f64;
        if uj - candidate > 0.0 {
            theta = candidate;
        }
    }
    Vector::from_vec_unchecked(y.iter().map(|v| (v - theta).max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn simplex_oracle() {
        let s = DecisionSet::simplex(3, 1.0).unwrap();
        assert_eq!(s.lp_minimize(&v(&[3.0, 1.0, 2.0])).unwrap(), v(&[0.0, 1.0, 0.0]));
        assert_eq!(s.lp_minimize(&v(&[1.0, 1.0, 2.0])).unwrap(), v(&[1.0, 0.0, 0.0]));
    }

    #[test]
    fn ball_oracle() {
        let b = DecisionSet::ball(Vector::zeros(2), 2.0).unwrap();
        let x = b.lp_minimize(&v(&[3.0, 4.0])).unwrap();
        assert!((x[0] + 1.2).abs() < 1e-15 && (x[1] + 1.6).abs() < 1e-15);
        assert_eq!(b.lp_minimize(&v(&[0.0, 0.0])).unwrap(), v(&[-2.0, 0.0]));
    }

    #[test]
    fn box_oracle() {
        let b = DecisionSet::cube(3, 0.0, 1.0).unwrap();
        assert_eq!(b.lp_minimize(&v(&[-1.0, 0.5, 0.0])).unwrap(), v(&[1.0, 0.0, 0.0]));
    }

    #[test]
    fn oracle_dimension_errors() {
        let s = DecisionSet::simplex(3, 1.0).unwrap();
        assert!(matches!(s.lp_minimize(&v(&[1.0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn projections() {
        let b = DecisionSet::cube(2, 0.0, 1.0).unwrap();
        assert_eq!(b.project(&v(&[1.5, -0.2])).unwrap(), v(&[1.0, 0.0]));
        let ball = DecisionSet::ball(Vector::zeros(2), 1.0).unwrap();
        let p = ball.project(&v(&[3.0, 4.0])).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        let s = DecisionSet::simplex(3, 1.0).unwrap();
        let p = s.project(&v(&[0.9, 0.9, -0.5])).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15 && p[2] == 0.0);
    }

    #[test]
    fn flow_projection_unsupported() {
        let dag = Arc::new(Dag::new(2, vec![(0, 1)]).unwrap());
        let f = DecisionSet::flow_polytope(dag, 0, 1).unwrap();
        assert!(matches!(f.project(&v(&[1.0])), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn simplex_membership() {
        let s = DecisionSet::simplex(2, 1.0).unwrap();
        assert!(s.membership(&v(&[0.3, 0.7]), 1e-9));
        assert!(!s.membership(&v(&[0.3, 0.8]), 1e-9));
    }

    #[test]
    fn box_radii() {
        let b = DecisionSet::cube(4, -1.0, 1.0).unwrap();
        assert_eq!(b.inner_radius(), Some(1.0));
        assert_eq!(b.outer_radius(), Some(2.0));
        assert_eq!(DecisionSet::cube(2, 0.0, 1.0).unwrap().inner_radius(), None);
    }
}
