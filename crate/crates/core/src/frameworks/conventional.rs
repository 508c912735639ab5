use super::{
    check_inputs, new_graph, substream, AnytimeTrace, Clock, FrameworkConfig, FrameworkError,
    IterationStats, Purpose, RunOutcome, RunStats, Solution,
};
use crate::ik::sample_ik_uniform;
use crate::kinematics::KinematicChain;
use crate::search::{shortest_path, EdgeFilter};
use crate::trajectory::Trajectory;

/// Samples `cfg.m` IK seeds per waypoint, connects all consecutive layers and
/// searches once. The trace holds a single record.
pub fn run_conventional(
    chain: &KinematicChain,
    traj: &Trajectory,
    cfg: &FrameworkConfig,
) -> Result<RunOutcome, FrameworkError> {
    check_inputs(chain, traj, cfg)?;
    let clock = Clock::start();
    let n = traj.len();
    let mut graph = new_graph(chain, traj, cfg);
    let mut stats = RunStats::new(n);

    for x in 0..n {
        let mut rng = substream(cfg.seed, 1, x, Purpose::Uniform);
        let found = sample_ik_uniform(chain, traj.pose(x), cfg.m, &cfg.ik, &mut rng);
        stats.layers[x].uniform += cfg.m;
        graph.add_vertices(x, found);
    }
    for x in 0..n - 1 {
        graph.connect_dense(x, chain, cfg.allow_reconfig);
    }
    let result = shortest_path(&graph, cfg.metric, EdgeFilter::DenseOnly);
    let elapsed = clock.secs();
    stats.iterations.push(IterationStats {
        iteration: 1,
        elapsed,
        sparse_attempts: 0,
        additional_attempts: Vec::new(),
        cumulative_uniform: stats.cumulative_uniform(),
        guide_found: false,
        guide_sparse_edges: 0,
        superseded: 0,
        vertices: graph.vertex_count(),
        solution: result.as_ref().ok().map(|p| p.cost),
    });
    let path = result.map_err(|e| FrameworkError::NoSolution {
        iterations: 1,
        furthest_layer: e.furthest_layer,
    })?;
    let mut trace = AnytimeTrace::new();
    trace.push(1, elapsed, path.cost);
    Ok(RunOutcome {
        solution: Solution::extract(&graph, path),
        trace,
        stats,
        graph,
    })
}
