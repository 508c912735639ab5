use super::{
    check_inputs, new_graph, substream, AnytimeTrace, Clock, FrameworkConfig, FrameworkError,
    IterationStats, Purpose, RunOutcome, RunStats, Solution,
};
use crate::ik::{random_config, sample_ik_uniform, solve_ik};
use crate::kinematics::{JointConfig, KinematicChain};
use crate::search::{shortest_path, EdgeFilter, PathResult};
use crate::trajectory::Trajectory;

/// Incremental uniform sampling with a greedy first pass.
///
/// The first iteration walks the trajectory once, seeding each waypoint's
/// IK from the previous waypoint's greedy solution, and adds `delta_m - 1`
/// uniform samples per waypoint. Every later iteration adds `delta_m`
/// uniform samples per waypoint, connects the new vertices and searches
/// again.
pub fn run_naive_anytime(
    chain: &KinematicChain,
    traj: &Trajectory,
    cfg: &FrameworkConfig,
) -> Result<RunOutcome, FrameworkError> {
    check_inputs(chain, traj, cfg)?;
    let clock = Clock::start();
    let n = traj.len();
    let mut graph = new_graph(chain, traj, cfg);
    let mut stats = RunStats::new(n);
    let mut trace = AnytimeTrace::new();
    let mut best: Option<PathResult> = None;
    let mut last_furthest = None;

    let mut iteration = 0;
    loop {
        iteration += 1;
        if iteration == 1 {
            let mut previous: Option<JointConfig> = None;
            for x in 0..n {
                let mut rng = substream(cfg.seed, iteration, x, Purpose::Greedy);
                let seed = previous
                    .clone()
                    .map_or_else(|| random_config(chain, &mut rng), JointConfig::into_inner);
                stats.layers[x].greedy += 1;
                if let Ok(q) = solve_ik(chain, traj.pose(x), &seed, &cfg.ik) {
                    graph.add_vertices(x, [q.clone()]);
                    previous = Some(q);
                }
            }
        }
        let uniform = if iteration == 1 {
            cfg.delta_m - 1
        } else {
            cfg.delta_m
        };
        for x in 0..n {
            let mut rng = substream(cfg.seed, iteration, x, Purpose::Uniform);
            let found = sample_ik_uniform(chain, traj.pose(x), uniform, &cfg.ik, &mut rng);
            stats.layers[x].uniform += uniform;
            graph.add_vertices(x, found);
        }
        for x in 0..n - 1 {
            graph.connect_dense(x, chain, cfg.allow_reconfig);
        }

        let result = shortest_path(&graph, cfg.metric, EdgeFilter::DenseOnly);
        let elapsed = clock.secs();
        match &result {
            Ok(path) => trace.push(iteration, elapsed, path.cost),
            Err(e) => last_furthest = e.furthest_layer,
        }
        stats.iterations.push(IterationStats {
            iteration,
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
        if let Ok(path) = result {
            best = Some(path);
        }
        if cfg.budget.exhausted(iteration, clock.elapsed()) {
            break;
        }
    }

    match best {
        Some(path) => Ok(RunOutcome {
            solution: Solution::extract(&graph, path),
            trace,
            stats,
            graph,
        }),
        None => Err(FrameworkError::NoSolution {
            iterations: iteration,
            furthest_layer: last_furthest,
        }),
    }
}
