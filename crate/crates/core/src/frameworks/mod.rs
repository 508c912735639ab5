//! End-to-end tracking algorithms.
//!
//! * [`run_conventional`]: sample a fixed number of IK solutions per waypoint,
//!   connect everything, search once.
//! * [`run_naive_anytime`]: a greedy first pass, then repeated rounds of
//!   uniform sampling, reconnection and search until the budget runs out.
//! * [`run_guided_anytime`]: sample sparsely, connect sparse layers, search
//!   a guide path, then concentrate sampling on the waypoints the guide
//!   skips, refining the dense solution each round.
//!
//! Randomness comes from per-(iteration, layer, purpose) ChaCha substreams
//! derived from the master seed, so a run's samples do not depend on how
//! much work happened before them.

mod conventional;
mod guided;
mod naive;
mod output;

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{EdgeKind, LayeredGraph, VertexId};
use crate::ik::{IkError, IkSettings};
use crate::kinematics::{JointConfig, KinematicChain};
use crate::search::{Cost, Metric, PathResult};
use crate::trajectory::Trajectory;

pub use conventional::run_conventional;
pub use guided::run_guided_anytime;
pub use naive::run_naive_anytime;
pub use output::{write_solution_csv, write_trace_csv, SOLUTION_HEADER_PREFIX, TRACE_HEADER};

#[derive(Debug, Error)]
pub enum FrameworkError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "no solution found after {iterations} iteration(s); deepest reachable layer: {}",
        furthest_layer.map_or_else(|| "none".to_string(), |x| x.to_string())
    )]
    NoSolution {
        iterations: usize,
        furthest_layer: Option<usize>,
    },
    #[error("robot and trajectory disagree: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Ik(#[from] IkError),
}

/// Stopping rule for the anytime frameworks, checked between iterations.
/// At least one iteration always runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Budget {
    pub max_secs: Option<f64>,
    pub max_iterations: Option<usize>,
}

impl Budget {
    pub fn seconds(secs: f64) -> Self {
        Self {
            max_secs: Some(secs),
            max_iterations: None,
        }
    }

    pub fn iterations(n: usize) -> Self {
        Self {
            max_secs: None,
            max_iterations: Some(n),
        }
    }

    pub fn exhausted(&self, iterations_done: usize, elapsed: Duration) -> bool {
        self.max_iterations.is_some_and(|n| iterations_done >= n)
            || self.max_secs.is_some_and(|s| elapsed.as_secs_f64() >= s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameworkConfig {
    pub metric: Metric,
    pub allow_reconfig: bool,
    /// IK samples per waypoint (conventional).
    pub m: usize,
    /// Uniform IK samples per waypoint per iteration (naive anytime).
    pub delta_m: usize,
    /// First-iteration samples per sparse layer (guided).
    pub m0: usize,
    /// Base targeted samples per layer per iteration (guided).
    pub m_d: usize,
    /// Layers between sparse layers (guided).
    pub s: usize,
    /// Standard deviation of targeted seed noise, radians.
    pub delta: f64,
    /// Per-iteration growth of the guided per-layer sample counts.
    pub eta: f64,
    pub budget: Budget,
    pub seed: u64,
    pub ik: IkSettings,
}

impl Default for FrameworkConfig {
    fn default() -> Self {
        Self {
            metric: Metric::MovementOnly,
            allow_reconfig: false,
            m: 250,
            delta_m: 10,
            m0: 50,
            m_d: 5,
            s: 5,
            delta: 0.2,
            eta: 1.1,
            budget: Budget::seconds(30.0),
            seed: 0,
            ik: IkSettings::default(),
        }
    }
}

impl FrameworkConfig {
    pub fn validate(&self) -> Result<(), FrameworkError> {
        let bad = |msg: &str| Err(FrameworkError::InvalidConfig(msg.to_string()));
        if self.m == 0 || self.delta_m == 0 || self.m0 == 0 || self.m_d == 0 || self.s == 0 {
            return bad("m, delta_m, m0, m_d and s must be at least 1");
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad("delta must be finite and non-negative");
        }
        if !(self.eta >= 1.0 && self.eta.is_finite()) {
            return bad("eta must be finite and at least 1");
        }
        if self.budget.max_secs.is_none() && self.budget.max_iterations.is_none() {
            return bad("budget needs a time limit, an iteration limit, or both");
        }
        if self.budget.max_secs.is_some_and(|s| s.is_nan() || s < 0.0) {
            return bad("budget seconds must be non-negative");
        }
        if self.budget.max_iterations == Some(0) {
            return bad("iteration budget must be at least 1");
        }
        if self.metric != Metric::LexReconfigMovement && self.allow_reconfig {
            return bad("reconfiguration edges need the lexicographic metric");
        }
        self.ik.validate()?;
        Ok(())
    }

    /// Per-layer sample count for guided iteration `i` (1-based).
    pub fn guided_count(&self, iteration: usize) -> usize {
        let exact = self.m_d as f64 * self.eta.powi(iteration.saturating_sub(1) as i32);
        // guard against 5.000000000000001 rounding up to 6
        (exact - 1e-9).ceil().max(1.0) as usize
    }

    /// Sparse layer indices `{0, s, 2s, ...} ∪ {n - 1}`.
    pub fn sparse_layers(&self, n: usize) -> Vec<usize> {
        let mut layers: Vec<usize> = (0..n).step_by(self.s).collect();
        if n > 0 && layers.last() != Some(&(n - 1)) {
            layers.push(n - 1);
        }
        layers
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FrameworkKind {
    Conventional,
    NaiveAnytime,
    GuidedAnytime,
}

impl FrameworkKind {
    pub fn name(self) -> &'static str {
        match self {
            FrameworkKind::Conventional => "conventional",
            FrameworkKind::NaiveAnytime => "naive",
            FrameworkKind::GuidedAnytime => "guided",
        }
    }

    pub fn run(
        self,
        chain: &KinematicChain,
        traj: &Trajectory,
        cfg: &FrameworkConfig,
    ) -> Result<RunOutcome, FrameworkError> {
        match self {
            FrameworkKind::Conventional => run_conventional(chain, traj, cfg),
            FrameworkKind::NaiveAnytime => run_naive_anytime(chain, traj, cfg),
            FrameworkKind::GuidedAnytime => run_guided_anytime(chain, traj, cfg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Seconds since the run started.
    pub elapsed: f64,
    pub cost: Cost,
}

impl Serialize for Cost {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Cost", 2)?;
        st.serialize_field("reconfigs", &self.reconfigs)?;
        st.serialize_field("movement", &self.movement)?;
        st.end()
    }
}

/// Solution costs over time. Elapsed times are strictly increasing and
/// costs never increase.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AnytimeTrace {
    records: Vec<TraceRecord>,
}

impl AnytimeTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record, nudging the timestamp forward by a nanosecond when
    /// the clock has not advanced since the previous record.
    pub fn push(&mut self, iteration: usize, elapsed: f64, cost: Cost) {
        let elapsed = match self.records.last() {
            Some(last) if elapsed <= last.elapsed => last.elapsed + 1e-9,
            _ => elapsed,
        };
        debug_assert!(self.records.last().is_none_or(|l| cost <= l.cost));
        self.records.push(TraceRecord {
            iteration,
            elapsed,
            cost,
        });
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first(&self) -> Option<&TraceRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Best cost recorded no later than `secs` into the run.
    pub fn best_within(&self, secs: f64) -> Option<&TraceRecord> {
        self.records.iter().rev().find(|r| r.elapsed <= secs)
    }

    /// True if no record's cost exceeds its predecessor's.
    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].cost <= w[0].cost)
    }
}

/// IK attempts (seeds handed to the solver) per layer.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LayerCounters {
    pub uniform: usize,
    pub targeted: usize,
    pub greedy: usize,
}

/// Snapshot taken at the end of every iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub elapsed: f64,
    /// IK attempts made on sparse layers during the first sampling stage.
    pub sparse_attempts: usize,
    /// IK attempts per layer during this iteration's additional sampling
    /// (targeted plus uniform); guided runs only.
    pub additional_attempts: Vec<usize>,
    /// Cumulative uniform attempts per layer after this iteration.
    pub cumulative_uniform: Vec<usize>,
    pub guide_found: bool,
    pub guide_sparse_edges: usize,
    pub superseded: usize,
    pub vertices: usize,
    pub solution: Option<Cost>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub layers: Vec<LayerCounters>,
    pub iterations: Vec<IterationStats>,
}

impl RunStats {
    fn new(n: usize) -> Self {
        Self {
            layers: vec![LayerCounters::default(); n],
            iterations: Vec::new(),
        }
    }

    fn cumulative_uniform(&self) -> Vec<usize> {
        self.layers.iter().map(|c| c.uniform).collect()
    }
}

/// A joint-space motion with one configuration per waypoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub path: PathResult,
    pub configs: Vec<JointConfig>,
    /// `true` at waypoint `i` when reaching it required a reconfiguration.
    pub reconfig: Vec<bool>,
}

impl Solution {
    fn extract(graph: &LayeredGraph, path: PathResult) -> Self {
        let configs = path.vertices.iter().map(|&v| graph.config(v)).collect();
        let mut reconfig = vec![false; path.vertices.len()];
        for (i, pair) in path.vertices.windows(2).enumerate() {
            let kind = graph
                .edge_between(pair[0], pair[1])
                .map(|e| e.kind)
                .expect("solution edges exist");
            reconfig[i + 1] = kind == EdgeKind::DenseReconfig;
        }
        Self {
            path,
            configs,
            reconfig,
        }
    }

    pub fn cost(&self) -> Cost {
        self.path.cost
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.path.vertices
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub solution: Solution,
    pub trace: AnytimeTrace,
    pub stats: RunStats,
    pub graph: LayeredGraph,
}

// ---------------------------------------------------------------------------
// shared plumbing

#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Purpose {
    Uniform = 1,
    Targeted = 2,
    Greedy = 3,
    Sparse = 4,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent random stream for one (iteration, layer, purpose) triple.
fn substream(seed: u64, iteration: usize, layer: usize, purpose: Purpose) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for part in [iteration as u64, layer as u64, purpose as u64] {
        h = splitmix(h ^ part);
    }
    ChaCha8Rng::seed_from_u64(h)
}

fn check_inputs(
    chain: &KinematicChain,
    traj: &Trajectory,
    cfg: &FrameworkConfig,
) -> Result<(), FrameworkError> {
    cfg.validate()?;
    if traj.len() < 2 {
        return Err(FrameworkError::Mismatch(
            "trajectory needs at least two waypoints".into(),
        ));
    }
    if chain.dof() == 0 {
        return Err(FrameworkError::Mismatch("chain has no joints".into()));
    }
    Ok(())
}

fn new_graph(chain: &KinematicChain, traj: &Trajectory, cfg: &FrameworkConfig) -> LayeredGraph {
    LayeredGraph::new(traj, chain.dof(), cfg.s, cfg.ik.merge_eps)
}

struct Clock(Instant);

impl Clock {
    fn start() -> Self {
        Self(Instant::now())
    }

    fn elapsed(&self) -> Duration {
        self.0.elapsed()
    }

    fn secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
