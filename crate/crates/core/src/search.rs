//! Shortest paths through a layered graph.
//!
//! Edges only ever point to later layers, so a single forward sweep in layer
//! order is an exact dynamic program. Every first-layer vertex is a source;
//! any last-layer vertex is a goal.

use std::cmp::Ordering;

use crate::graph::{decode, movement, EdgeKind, LayeredGraph, VertexId};

/// Path cost: reconfiguration count first, then joint movement in radians.
#[derive(Debug, Clone, Copy)]
pub struct Cost {
    pub reconfigs: u32,
    pub movement: f64,
}

impl Cost {
    pub const ZERO: Cost = Cost {
        reconfigs: 0,
        movement: 0.0,
    };

    pub fn new(reconfigs: u32, movement: f64) -> Self {
        Self {
            reconfigs,
            movement,
        }
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.reconfigs
            .cmp(&other.reconfigs)
            .then_with(|| self.movement.total_cmp(&other.movement))
    }
}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Cost {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cost {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Sum of edge movements; reconfiguration edges are unusable.
    MovementOnly,
    /// Largest single edge movement; reconfiguration edges are unusable.
    MaxJointDelta,
    /// Fewest reconfigurations, then least total movement.
    LexReconfigMovement,
}

impl Metric {
    pub fn allows_reconfig(self) -> bool {
        matches!(self, Metric::LexReconfigMovement)
    }

    /// Cost after appending one edge to a path of cost `acc`.
    pub fn extend(self, acc: Cost, reconfig: bool, movement: f64) -> Cost {
        match self {
            Metric::MovementOnly => Cost::new(0, acc.movement + movement),
            Metric::MaxJointDelta => Cost::new(0, acc.movement.max(movement)),
            Metric::LexReconfigMovement => {
                Cost::new(acc.reconfigs + u32::from(reconfig), acc.movement + movement)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeFilter {
    DenseOnly,
    DenseAndSparse,
}

/// A first-to-last-layer path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    /// Path vertices with strictly increasing layers.
    pub vertices: Vec<VertexId>,
    pub cost: Cost,
    /// True iff every hop spans exactly one layer (no sparse edges).
    pub is_solution: bool,
}

impl PathResult {
    /// Consecutive vertex pairs joined by sparse edges.
    pub fn sparse_hops(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.vertices
            .windows(2)
            .filter(|w| w[1].layer > w[0].layer + 1)
            .map(|w| (w[0], w[1]))
    }
}

/// The last layer cannot be reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("last layer unreachable; deepest reachable layer: {furthest_layer:?}")]
pub struct Unreachable {
    /// Deepest layer holding a vertex reachable from the first layer, or
    /// `None` when the first layer is empty.
    pub furthest_layer: Option<usize>,
}

/// Folds a path's edges, given as `(is_reconfig, movement)`, into a cost.
pub fn fold_cost(metric: Metric, edges: &[(bool, f64)]) -> Cost {
    edges
        .iter()
        .fold(Cost::ZERO, |acc, &(r, m)| metric.extend(acc, r, m))
}

/// Recomputes the cost of `vertices` by looking up each edge in the graph.
/// Returns `None` if an edge is missing, excluded by `filter`, or unusable
/// under `metric`.
pub fn evaluate_path(
    graph: &LayeredGraph,
    metric: Metric,
    filter: EdgeFilter,
    vertices: &[VertexId],
) -> Option<Cost> {
    let mut edges = Vec::with_capacity(vertices.len().saturating_sub(1));
    for pair in vertices.windows(2) {
        let e = graph.edge_between(pair[0], pair[1])?;
        if !admissible(e.kind, metric, filter) {
            return None;
        }
        edges.push((e.kind.is_reconfig(), e.movement));
    }
    Some(fold_cost(metric, &edges))
}

fn admissible(kind: EdgeKind, metric: Metric, filter: EdgeFilter) -> bool {
    (kind.is_dense() || filter == EdgeFilter::DenseAndSparse)
        && (!kind.is_reconfig() || metric.allows_reconfig())
}

#[derive(Clone, Copy)]
struct Label {
    cost: Cost,
    pred: Option<VertexId>,
}

fn relax(slot: &mut Option<Label>, cost: Cost, pred: VertexId) {
    let better = match slot {
        None => true,
        Some(cur) => match cost.cmp(&cur.cost) {
            Ordering::Less => true,
            Ordering::Equal => cur.pred.is_some_and(|p| pred < p),
            Ordering::Greater => false,
        },
    };
    if better {
        *slot = Some(Label {
            cost,
            pred: Some(pred),
        });
    }
}

/// Minimum-cost path from any first-layer vertex to any last-layer vertex.
///
/// Ties between equal-cost predecessors go to the smallest `(layer, slot)`;
/// ties between equal-cost goals go to the smallest slot.
pub fn shortest_path(
    graph: &LayeredGraph,
    metric: Metric,
    filter: EdgeFilter,
) -> Result<PathResult, Unreachable> {
    let n = graph.num_layers();
    let mut labels: Vec<Vec<Option<Label>>> =
        (0..n).map(|x| vec![None; graph.layer_len(x)]).collect();
    if n == 0 {
        return Err(Unreachable {
            furthest_layer: None,
        });
    }
    for l in labels[0].iter_mut() {
        *l = Some(Label {
            cost: Cost::ZERO,
            pred: None,
        });
    }
    let mut furthest = if labels[0].is_empty() { None } else { Some(0) };

    for x in 0..n {
        if labels[x].iter().any(Option::is_some) {
            furthest = Some(x);
        }
        if x + 1 == n {
            break;
        }
        for u in 0..labels[x].len() {
            let Some(Label { cost, .. }) = labels[x][u] else {
                continue;
            };
            let from = VertexId::new(x, u);
            let q = graph.vertex(from);
            for (v, &code) in graph.dense_row(from).iter().enumerate() {
                let Some(kind) = decode(code) else {
                    continue;
                };
                if !admissible(kind, metric, filter) {
                    continue;
                }
                let to = VertexId::new(x + 1, v);
                let m = movement(q, graph.vertex(to));
                let c = metric.extend(cost, kind.is_reconfig(), m);
                relax(&mut labels[x + 1][v], c, from);
            }
            if filter == EdgeFilter::DenseAndSparse {
                for (to, kind) in graph.sparse_from(from) {
                    if !admissible(kind, metric, filter) {
                        continue;
                    }
                    let m = movement(q, graph.vertex(to));
                    let c = metric.extend(cost, kind.is_reconfig(), m);
                    relax(&mut labels[to.layer][to.slot], c, from);
                }
            }
        }
    }

    let goal = labels[n - 1]
        .iter()
        .enumerate()
        .filter_map(|(s, l)| l.map(|l| (s, l.cost)))
        .min_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    let Some((slot, cost)) = goal else {
        return Err(Unreachable {
            furthest_layer: furthest,
        });
    };
    let mut vertices = vec![VertexId::new(n - 1, slot)];
    let mut cur = vertices[0];
    while let Some(p) = labels[cur.layer][cur.slot].and_then(|l| l.pred) {
        vertices.push(p);
        cur = p;
    }
    vertices.reverse();
    let is_solution = vertices.windows(2).all(|w| w[1].layer == w[0].layer + 1);
    Ok(PathResult {
        vertices,
        cost,
        is_solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{DhJoint, JointConfig, KinematicChain, Pose, ToleranceSpec};
    use crate::trajectory::{Trajectory, Waypoint};

    fn chain(vel: f64) -> KinematicChain {
        KinematicChain::new(
            "1dof",
            vec![DhJoint::new(0.0, 0.0, 0.0, 10.0, vel)],
            Pose::identity(),
            ToleranceSpec::exact(),
        )
        .unwrap()
    }

    fn graph(layers: &[&[f64]], vel: f64, reconfig: bool) -> LayeredGraph {
        let traj = Trajectory::new_sparse(
            (0..layers.len())
                .map(|i| Waypoint::new(i as f64, Pose::identity()))
                .collect(),
        )
        .unwrap();
        let c = chain(vel);
        let mut g = LayeredGraph::new(&traj, 1, 2, 0.0);
        for (x, vals) in layers.iter().enumerate() {
            g.add_vertices(x, vals.iter().map(|&v| JointConfig::new(vec![v])));
        }
        for x in 0..layers.len() - 1 {
            g.connect_dense(x, &c, reconfig);
        }
        g
    }

    #[test]
    fn cost_order_is_lexicographic() {
        assert!(Cost::new(0, 100.0) < Cost::new(1, 0.0));
        assert!(Cost::new(1, 0.5) < Cost::new(1, 0.6));
        assert_eq!(Cost::new(2, 0.5), Cost::new(2, 0.5));
    }

    #[test]
    fn fold_cost_per_metric() {
        let edges = [(false, 0.5), (true, 2.0), (false, 0.25)];
        assert_eq!(fold_cost(Metric::MovementOnly, &edges), Cost::new(0, 2.75));
        assert_eq!(fold_cost(Metric::MaxJointDelta, &edges), Cost::new(0, 2.0));
        assert_eq!(
            fold_cost(Metric::LexReconfigMovement, &edges),
            Cost::new(1, 2.75)
        );
        assert_eq!(fold_cost(Metric::MovementOnly, &[]), Cost::ZERO);
    }

    #[test]
    fn stationary_pairs_cost_nothing() {
        let g = graph(&[&[0.3, 0.1], &[0.5, 0.1]], 1.0, false);
        let r = shortest_path(&g, Metric::MovementOnly, EdgeFilter::DenseOnly).unwrap();
        assert!(r.is_solution);
        assert_eq!(r.vertices, vec![VertexId::new(0, 1), VertexId::new(1, 1)]);
        assert_eq!(r.cost, Cost::ZERO);
    }

    #[test]
    fn picks_cheaper_branch() {
        // 0 -> {1.0, 0.2} -> 0.3
        let g = graph(&[&[0.0], &[1.0, 0.2], &[0.3]], 10.0, false);
        let r = shortest_path(&g, Metric::MovementOnly, EdgeFilter::DenseOnly).unwrap();
        assert_eq!(
            r.vertices,
            vec![
                VertexId::new(0, 0),
                VertexId::new(1, 1),
                VertexId::new(2, 0)
            ]
        );
        assert!((r.cost.movement - 0.3).abs() < 1e-15);
    }

    #[test]
    fn equal_costs_break_ties_towards_smaller_slots() {
        let g = graph(&[&[0.0], &[0.5, -0.5], &[0.0, 1.0, -1.0]], 10.0, false);
        let r = shortest_path(&g, Metric::MovementOnly, EdgeFilter::DenseOnly).unwrap();
        assert_eq!(r.vertices[1], VertexId::new(1, 0));
        assert_eq!(r.vertices[2], VertexId::new(2, 0));
    }

    #[test]
    fn reconfiguration_is_used_only_when_unavoidable() {
        // velocity limit 1 rad/s, 1 s per layer
        let g = graph(&[&[0.0], &[0.9, 3.0], &[1.8, 3.5]], 1.0, true);
        let lex = shortest_path(&g, Metric::LexReconfigMovement, EdgeFilter::DenseOnly).unwrap();
        assert_eq!(lex.cost.reconfigs, 0);
        let g = graph(&[&[0.0], &[3.0], &[3.5]], 1.0, true);
        let lex = shortest_path(&g, Metric::LexReconfigMovement, EdgeFilter::DenseOnly).unwrap();
        assert_eq!(lex.cost, Cost::new(1, 3.5));
        let plain = shortest_path(&g, Metric::MovementOnly, EdgeFilter::DenseOnly);
        assert_eq!(plain.unwrap_err().furthest_layer, Some(0));
    }

    #[test]
    fn failure_reports_furthest_layer() {
        let g = graph(&[&[0.0], &[0.5], &[5.0], &[5.1]], 1.0, false);
        let r = shortest_path(&g, Metric::MovementOnly, EdgeFilter::DenseOnly);
        assert_eq!(r.unwrap_err().furthest_layer, Some(1));
        let g = graph(&[&[], &[0.5]], 1.0, false);
        let r = shortest_path(&g, Metric::MovementOnly, EdgeFilter::DenseOnly);
        assert_eq!(r.unwrap_err().furthest_layer, None);
    }

    #[test]
    fn sparse_edges_only_count_when_requested() {
        let c = chain(1.0);
        let mut g = graph(&[&[0.0], &[], &[0.5]], 1.0, false);
        g.connect_sparse(0, 2, &c, false);
        let dense = shortest_path(&g, Metric::MovementOnly, EdgeFilter::DenseOnly);
        assert!(dense.is_err());
        let both = shortest_path(&g, Metric::MovementOnly, EdgeFilter::DenseAndSparse).unwrap();
        assert!(!both.is_solution);
        assert_eq!(both.sparse_hops().count(), 1);
        assert_eq!(
            both.vertices,
            vec![VertexId::new(0, 0), VertexId::new(2, 0)]
        );
        assert_eq!(
            evaluate_path(
                &g,
                Metric::MovementOnly,
                EdgeFilter::DenseAndSparse,
                &both.vertices
            ),
            Some(both.cost)
        );
        assert_eq!(
            evaluate_path(
                &g,
                Metric::MovementOnly,
                EdgeFilter::DenseOnly,
                &both.vertices
            ),
            None
        );
    }

    #[test]
    fn max_joint_delta_minimizes_largest_step() {
        // both paths sum to 0.5 (exact in binary); the second has max step 0.25
        let g = graph(&[&[0.0], &[0.5, 0.25], &[0.5]], 10.0, false);
        let sum = shortest_path(&g, Metric::MovementOnly, EdgeFilter::DenseOnly).unwrap();
        assert_eq!(sum.vertices[1], VertexId::new(1, 0));
        assert_eq!(sum.cost, Cost::new(0, 0.5));
        let max = shortest_path(&g, Metric::MaxJointDelta, EdgeFilter::DenseOnly).unwrap();
        assert_eq!(max.vertices[1], VertexId::new(1, 1));
        assert_eq!(max.cost, Cost::new(0, 0.25));
    }
}
