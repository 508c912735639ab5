//! Layered graph over IK solutions.
//!
//! One layer per waypoint. Dense edges join adjacent layers; sparse edges
//! skip two or more layers and stand in for motion segments whose
//! intermediate waypoints have not been sampled yet. Vertices and dense
//! edges are only ever added. Sparse edges may be removed once dense edges
//! supersede them.
//!
//! Dense edges are stored as one kind byte per connected vertex pair; their
//! movement is recomputed from the endpoint configurations on demand, which
//! keeps complete bipartite layers with hundreds of vertices affordable.

use serde::Serialize;

use crate::kinematics::{max_abs_diff, JointConfig, KinematicChain};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct VertexId {
    pub layer: usize,
    pub slot: usize,
}

impl VertexId {
    pub fn new(layer: usize, slot: usize) -> Self {
        Self { layer, slot }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EdgeKind {
    Dense,
    Sparse,
    DenseReconfig,
    SparseReconfig,
}

impl EdgeKind {
    pub fn is_reconfig(self) -> bool {
        matches!(self, EdgeKind::DenseReconfig | EdgeKind::SparseReconfig)
    }

    pub fn is_dense(self) -> bool {
        matches!(self, EdgeKind::Dense | EdgeKind::DenseReconfig)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub from: VertexId,
    pub to: VertexId,
    pub kind: EdgeKind,
    /// Euclidean joint-space distance between the endpoints, radians.
    pub movement: f64,
}

impl Edge {
    pub fn reconfig(&self) -> u32 {
        u32::from(self.kind.is_reconfig())
    }
}

// Encoding of the per-pair kind bytes.
const NONE: u8 = 0;
const DENSE: u8 = 1;
const DENSE_RECONFIG: u8 = 2;
const SPARSE: u8 = 3;
const SPARSE_RECONFIG: u8 = 4;
// examined pair whose sparse edge was superseded; never re-added
const SUPERSEDED: u8 = 5;

/// Kind bytes for the pairs between one layer and one later layer. Row `u`
/// holds one byte per target vertex examined so far.
#[derive(Debug, Clone)]
struct PairBlock {
    to_layer: usize,
    rows: Vec<Vec<u8>>,
}

pub(crate) fn decode(code: u8) -> Option<EdgeKind> {
    match code {
        DENSE => Some(EdgeKind::Dense),
        DENSE_RECONFIG => Some(EdgeKind::DenseReconfig),
        SPARSE => Some(EdgeKind::Sparse),
        SPARSE_RECONFIG => Some(EdgeKind::SparseReconfig),
        _ => None,
    }
}

/// True iff every joint moves at most `vel_max * dt` (boundary inclusive).
pub fn edge_feasible(q_a: &[f64], q_b: &[f64], dt: f64, chain: &KinematicChain) -> bool {
    q_a.iter()
        .zip(q_b)
        .zip(chain.joints())
        .all(|((a, b), j)| (b - a).abs() <= j.vel_max * dt)
}

pub(crate) fn movement(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (y - x) * (y - x))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone)]
pub struct LayeredGraph {
    dof: usize,
    trajectory: Trajectory,
    sparse_step: usize,
    merge_eps: f64,
    // flat joint values, `dof` per vertex
    layers: Vec<Vec<f64>>,
    // dense[x][u][v]: kind byte for the pair (V[x][u], V[x+1][v]); a row's
    // length is the number of successors already examined for that vertex
    dense: Vec<Vec<Vec<u8>>>,
    // sparse[x]: one block per later layer that layer x has been connected to
    sparse: Vec<Vec<PairBlock>>,
    dense_count: usize,
    dense_reconfig_count: usize,
    sparse_count: usize,
    sparse_reconfig_count: usize,
}

impl LayeredGraph {
    pub fn new(trajectory: &Trajectory, dof: usize, sparse_step: usize, merge_eps: f64) -> Self {
        let n = trajectory.len();
        Self {
            dof,
            trajectory: trajectory.clone(),
            sparse_step: sparse_step.max(1),
            merge_eps,
            layers: vec![Vec::new(); n],
            dense: vec![Vec::new(); n.saturating_sub(1)],
            sparse: vec![Vec::new(); n],
            dense_count: 0,
            dense_reconfig_count: 0,
            sparse_count: 0,
            sparse_reconfig_count: 0,
        }
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn sparse_step(&self) -> usize {
        self.sparse_step
    }

    pub fn merge_eps(&self) -> f64 {
        self.merge_eps
    }

    pub fn time(&self, layer: usize) -> f64 {
        self.trajectory.time(layer)
    }

    pub fn layer_len(&self, layer: usize) -> usize {
        self.layers[layer].len() / self.dof
    }

    pub fn vertex(&self, id: VertexId) -> &[f64] {
        let start = id.slot * self.dof;
        &self.layers[id.layer][start..start + self.dof]
    }

    pub fn vertex_ids(&self, layer: usize) -> impl Iterator<Item = VertexId> {
        (0..self.layer_len(layer)).map(move |slot| VertexId::new(layer, slot))
    }

    pub fn vertex_count(&self) -> usize {
        (0..self.num_layers()).map(|x| self.layer_len(x)).sum()
    }

    /// Number of dense edges (feasible, reconfiguration).
    pub fn dense_edge_counts(&self) -> (usize, usize) {
        (self.dense_count, self.dense_reconfig_count)
    }

    /// Number of sparse edges (feasible, reconfiguration).
    pub fn sparse_edge_counts(&self) -> (usize, usize) {
        (self.sparse_count, self.sparse_reconfig_count)
    }

    /// Appends the configurations not within `merge_eps` (infinity norm) of a
    /// vertex already in the layer. Returns the ids of the new vertices.
    pub fn add_vertices<I>(&mut self, layer: usize, configs: I) -> Vec<VertexId>
    where
        I: IntoIterator<Item = JointConfig>,
    {
        let mut added = Vec::new();
        for q in configs {
            assert_eq!(
                q.len(),
                self.dof,
                "configuration length must match graph dof"
            );
            let data = &self.layers[layer];
            let duplicate = data
                .chunks_exact(self.dof)
                .any(|v| max_abs_diff(v, &q) <= self.merge_eps);
            if !duplicate {
                let slot = data.len() / self.dof;
                self.layers[layer].extend_from_slice(&q);
                added.push(VertexId::new(layer, slot));
            }
        }
        added
    }

    /// Connects every not-yet-examined pair between layers `x` and `x + 1`.
    /// Velocity-feasible pairs get `Dense` edges; the rest get
    /// `DenseReconfig` edges when `allow_reconfig` is set.
    pub fn connect_dense(
        &mut self,
        x: usize,
        chain: &KinematicChain,
        allow_reconfig: bool,
    ) -> usize {
        let dt = self.time(x + 1) - self.time(x);
        let n_from = self.layer_len(x);
        let n_to = self.layer_len(x + 1);
        let (from_data, to_data) = {
            let (head, tail) = self.layers.split_at(x + 1);
            (&head[x], &tail[0])
        };
        let rows = &mut self.dense[x];
        rows.resize_with(n_from, Vec::new);
        let mut added = 0;
        for (u, row) in rows.iter_mut().enumerate() {
            let qu = &from_data[u * self.dof..(u + 1) * self.dof];
            for v in row.len()..n_to {
                let qv = &to_data[v * self.dof..(v + 1) * self.dof];
                let code = if edge_feasible(qu, qv, dt, chain) {
                    self.dense_count += 1;
                    DENSE
                } else if allow_reconfig {
                    self.dense_reconfig_count += 1;
                    DENSE_RECONFIG
                } else {
                    NONE
                };
                if code != NONE {
                    added += 1;
                }
                row.push(code);
            }
        }
        added
    }

    /// Connects every not-yet-examined pair between layers `x` and `x2`
    /// (`x2 >= x + 2`) with sparse edges, using the time gap `t[x2] - t[x]`.
    /// Pairs examined before are skipped, including those whose edge was
    /// superseded.
    pub fn connect_sparse(
        &mut self,
        x: usize,
        x2: usize,
        chain: &KinematicChain,
        allow_reconfig: bool,
    ) -> usize {
        assert!(x2 >= x + 2, "sparse edges must span at least two layers");
        let dt = self.time(x2) - self.time(x);
        let n_from = self.layer_len(x);
        let n_to = self.layer_len(x2);
        let dof = self.dof;
        let block = match self.sparse[x].iter().position(|b| b.to_layer == x2) {
            Some(i) => i,
            None => {
                self.sparse[x].push(PairBlock {
                    to_layer: x2,
                    rows: Vec::new(),
                });
                self.sparse[x].len() - 1
            }
        };
        let (from_data, to_data) = (&self.layers[x], &self.layers[x2]);
        let rows = &mut self.sparse[x][block].rows;
        rows.resize_with(n_from, Vec::new);
        let mut added = 0;
        for (u, row) in rows.iter_mut().enumerate() {
            let qu = &from_data[u * dof..(u + 1) * dof];
            for v in row.len()..n_to {
                let qv = &to_data[v * dof..(v + 1) * dof];
                let code = if edge_feasible(qu, qv, dt, chain) {
                    self.sparse_count += 1;
                    SPARSE
                } else if allow_reconfig {
                    self.sparse_reconfig_count += 1;
                    SPARSE_RECONFIG
                } else {
                    NONE
                };
                if code != NONE {
                    added += 1;
                }
                row.push(code);
            }
        }
        added
    }

    /// Dense edge kind between `V[x][u]` and `V[x+1][v]`, if connected.
    pub fn dense_kind(&self, x: usize, u: usize, v: usize) -> Option<EdgeKind> {
        decode(*self.dense.get(x)?.get(u)?.get(v)?)
    }

    /// Sparse edge kind between `a` and `b`, if connected.
    pub fn sparse_kind(&self, a: VertexId, b: VertexId) -> Option<EdgeKind> {
        let block = self.sparse[a.layer]
            .iter()
            .find(|blk| blk.to_layer == b.layer)?;
        decode(*block.rows.get(a.slot)?.get(b.slot)?)
    }

    pub(crate) fn dense_row(&self, from: VertexId) -> &[u8] {
        self.dense
            .get(from.layer)
            .and_then(|rows| rows.get(from.slot))
            .map_or(&[], |r| r.as_slice())
    }

    /// Sparse successors of a vertex as `(target, kind)`.
    pub(crate) fn sparse_from(
        &self,
        from: VertexId,
    ) -> impl Iterator<Item = (VertexId, EdgeKind)> + '_ {
        self.sparse[from.layer].iter().flat_map(move |blk| {
            let row = blk.rows.get(from.slot).map_or(&[][..], |r| r.as_slice());
            row.iter()
                .enumerate()
                .filter_map(move |(v, &c)| decode(c).map(|k| (VertexId::new(blk.to_layer, v), k)))
        })
    }

    /// All outgoing edges of a vertex, dense first, then sparse.
    pub fn out_edges(&self, from: VertexId) -> impl Iterator<Item = Edge> + '_ {
        let q = self.vertex(from);
        let dense = self
            .dense_row(from)
            .iter()
            .enumerate()
            .filter_map(move |(v, &c)| {
                let to = VertexId::new(from.layer + 1, v);
                Some(Edge {
                    from,
                    to,
                    kind: decode(c)?,
                    movement: movement(q, self.vertex(to)),
                })
            });
        let sparse = self.sparse_from(from).map(move |(to, kind)| Edge {
            from,
            to,
            kind,
            movement: movement(q, self.vertex(to)),
        });
        dense.chain(sparse)
    }

    /// Every edge in the graph.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.num_layers())
            .flat_map(move |x| self.vertex_ids(x))
            .flat_map(move |id| self.out_edges(id))
    }

    /// The edge from `a` to `b`, if any.
    pub fn edge_between(&self, a: VertexId, b: VertexId) -> Option<Edge> {
        if b.layer == a.layer + 1 {
            let kind = self.dense_kind(a.layer, a.slot, b.slot)?;
            return Some(Edge {
                from: a,
                to: b,
                kind,
                movement: movement(self.vertex(a), self.vertex(b)),
            });
        }
        self.sparse_kind(a, b).map(|kind| Edge {
            from: a,
            to: b,
            kind,
            movement: movement(self.vertex(a), self.vertex(b)),
        })
    }

    /// True if a path of dense edges leads from `from` to `to`. Reconfiguration
    /// edges count only when `allow_reconfig_edges` is set.
    pub fn dense_reachable(
        &self,
        from: VertexId,
        to: VertexId,
        allow_reconfig_edges: bool,
    ) -> bool {
        if to.layer < from.layer {
            return false;
        }
        let mut frontier = vec![false; self.layer_len(from.layer)];
        frontier[from.slot] = true;
        for x in from.layer..to.layer {
            let mut next = vec![false; self.layer_len(x + 1)];
            for (u, _) in frontier.iter().enumerate().filter(|(_, &r)| r) {
                for (v, &code) in self.dense_row(VertexId::new(x, u)).iter().enumerate() {
                    if code == DENSE || (allow_reconfig_edges && code == DENSE_RECONFIG) {
                        next[v] = true;
                    }
                }
            }
            if !next.iter().any(|&r| r) {
                return false;
            }
            frontier = next;
        }
        frontier.get(to.slot).copied().unwrap_or(false)
    }

    /// Removes the sparse edges along `path` whose endpoints are already
    /// joined by dense edges. A `Sparse` edge needs a path of feasible
    /// `Dense` edges; a `SparseReconfig` edge may also be replaced by dense
    /// reconfiguration edges. Returns the number of edges removed.
    pub fn supersede_sparse(&mut self, path: &[VertexId]) -> usize {
        let mut removed = 0;
        for pair in path.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b.layer < a.layer + 2 {
                continue;
            }
            let Some(kind) = self.sparse_kind(a, b) else {
                continue;
            };
            if self.dense_reachable(a, b, kind.is_reconfig()) {
                let blk = self.sparse[a.layer]
                    .iter_mut()
                    .find(|blk| blk.to_layer == b.layer)
                    .expect("edge exists");
                blk.rows[a.slot][b.slot] = SUPERSEDED;
                if kind.is_reconfig() {
                    self.sparse_reconfig_count -= 1;
                } else {
                    self.sparse_count -= 1;
                }
                removed += 1;
            }
        }
        removed
    }

    pub fn config(&self, id: VertexId) -> JointConfig {
        JointConfig::from(self.vertex(id))
    }

    pub fn summary(&self) -> GraphSummary {
        let (dense, dense_reconfig) = self.dense_edge_counts();
        let (sparse, sparse_reconfig) = self.sparse_edge_counts();
        GraphSummary {
            layers: self.num_layers(),
            sparse_step: self.sparse_step,
            vertices_per_layer: (0..self.num_layers()).map(|x| self.layer_len(x)).collect(),
            vertex_count: self.vertex_count(),
            edges: EdgeCounts {
                dense,
                dense_reconfig,
                sparse,
                sparse_reconfig,
            },
        }
    }
}

/// Diagnostic summary, serializable as JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub layers: usize,
    pub sparse_step: usize,
    pub vertices_per_layer: Vec<usize>,
    pub vertex_count: usize,
    pub edges: EdgeCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EdgeCounts {
    pub dense: usize,
    pub dense_reconfig: usize,
    pub sparse: usize,
    pub sparse_reconfig: usize,
}

impl GraphSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}
