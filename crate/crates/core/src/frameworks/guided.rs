use super::{
    check_inputs, new_graph, substream, AnytimeTrace, Clock, FrameworkConfig, FrameworkError,
    IterationStats, Purpose, RunOutcome, RunStats, Solution,
};
use crate::graph::LayeredGraph;
use crate::ik::{sample_ik_targeted, sample_ik_uniform};
use crate::kinematics::{JointConfig, KinematicChain};
use crate::search::{shortest_path, EdgeFilter, PathResult};
use crate::trajectory::Trajectory;

/// Guided anytime tracking.
///
/// Each iteration:
/// 1. (first iteration only) `m0` uniform IK samples on every sparse layer;
/// 2. sparse edges from every waypoint to the one `s` steps ahead (or the
///    last waypoint), so vertices added by refinement can also act as hop
///    endpoints;
/// 3. a guide path over dense and sparse edges;
/// 4. for every waypoint skipped by a sparse hop of the guide, `c` seeds
///    around the straight joint-space line between the hop's endpoints and
///    `c` uniform seeds, where `c = ceil(m_d * eta^(i-1))` grows with the
///    iteration `i`. A guide without sparse hops is refined around its own
///    vertices at every waypoint. Without any guide, the sparse layers get
///    `c` more uniform samples each;
/// 5. dense edges for the touched layers, then superseding of the guide's
///    sparse hops that dense edges now cover;
/// 6. a dense-only search; its result is recorded in the trace.
pub fn run_guided_anytime(
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
    let sparse_layers = cfg.sparse_layers(n);
    let mut best: Option<PathResult> = None;
    let mut last_furthest = None;

    let mut iteration = 0;
    loop {
        iteration += 1;
        let count = cfg.guided_count(iteration);
        let mut touched = vec![false; n];
        let mut additional = vec![0usize; n];

        // 1. sparse vertex sampling
        let mut sparse_attempts = 0;
        if iteration == 1 {
            for &x in &sparse_layers {
                let mut rng = substream(cfg.seed, iteration, x, Purpose::Sparse);
                let found = sample_ik_uniform(chain, traj.pose(x), cfg.m0, &cfg.ik, &mut rng);
                stats.layers[x].uniform += cfg.m0;
                sparse_attempts += cfg.m0;
                graph.add_vertices(x, found);
                touched[x] = true;
            }
        }

        // 2. sparse edge addition: every layer reaches `s` waypoints ahead
        // (clamped at the last waypoint); spans of one get dense edges
        for a in 0..n - 1 {
            let b = (a + cfg.s).min(n - 1);
            if b - a >= 2 {
                graph.connect_sparse(a, b, chain, cfg.allow_reconfig);
            } else {
                graph.connect_dense(a, chain, cfg.allow_reconfig);
            }
        }

        // 3. guide path search
        let guide = shortest_path(&graph, cfg.metric, EdgeFilter::DenseAndSparse).ok();

        // 4. additional vertex sampling
        let mut sampler = Sampler {
            chain,
            traj,
            cfg,
            iteration,
            count,
            graph: &mut graph,
            stats: &mut stats,
            touched: &mut touched,
            additional: &mut additional,
        };
        let guide_sparse_edges = match &guide {
            Some(g) => {
                let hops: Vec<_> = g.sparse_hops().collect();
                if hops.is_empty() {
                    for &v in &g.vertices {
                        let anchor = sampler.graph.vertex(v).to_vec();
                        sampler.refine(v.layer, &anchor)?;
                    }
                } else {
                    for &(u, v) in &hops {
                        let qu = sampler.graph.vertex(u).to_vec();
                        let qv = sampler.graph.vertex(v).to_vec();
                        let span = (v.layer - u.layer) as f64;
                        for j in u.layer + 1..v.layer {
                            let f = (j - u.layer) as f64 / span;
                            let anchor: Vec<f64> =
                                qu.iter().zip(&qv).map(|(a, b)| a + f * (b - a)).collect();
                            sampler.refine(j, &anchor)?;
                        }
                    }
                }
                hops.len()
            }
            None => {
                for &x in &sparse_layers {
                    sampler.uniform(x);
                }
                0
            }
        };

        // 5. dense edge addition and superseding
        for x in 0..n - 1 {
            if touched[x] || touched[x + 1] {
                graph.connect_dense(x, chain, cfg.allow_reconfig);
            }
        }
        let superseded = guide
            .as_ref()
            .map_or(0, |g| graph.supersede_sparse(&g.vertices));

        // 6. solution search
        let result = shortest_path(&graph, cfg.metric, EdgeFilter::DenseOnly);
        let elapsed = clock.secs();
        match &result {
            Ok(path) => trace.push(iteration, elapsed, path.cost),
            Err(e) => last_furthest = e.furthest_layer,
        }
        stats.iterations.push(IterationStats {
            iteration,
            elapsed,
            sparse_attempts,
            additional_attempts: additional,
            cumulative_uniform: stats.cumulative_uniform(),
            guide_found: guide.is_some(),
            guide_sparse_edges,
            superseded,
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

/// Stage-4 sampling for one iteration.
struct Sampler<'a> {
    chain: &'a KinematicChain,
    traj: &'a Trajectory,
    cfg: &'a FrameworkConfig,
    iteration: usize,
    count: usize,
    graph: &'a mut LayeredGraph,
    stats: &'a mut RunStats,
    touched: &'a mut [bool],
    additional: &'a mut [usize],
}

impl Sampler<'_> {
    /// `count` targeted seeds around `anchor` plus `count` uniform seeds.
    fn refine(&mut self, layer: usize, anchor: &[f64]) -> Result<(), FrameworkError> {
        let cfg = self.cfg;
        let mut rng = substream(cfg.seed, self.iteration, layer, Purpose::Targeted);
        let found = sample_ik_targeted(
            self.chain,
            self.traj.pose(layer),
            anchor,
            cfg.delta,
            self.count,
            &cfg.ik,
            &mut rng,
        )?;
        self.stats.layers[layer].targeted += self.count;
        self.additional[layer] += self.count;
        self.graph.add_vertices(layer, found);
        self.uniform(layer);
        Ok(())
    }

    fn uniform(&mut self, layer: usize) {
        let cfg = self.cfg;
        let mut rng = substream(cfg.seed, self.iteration, layer, Purpose::Uniform);
        let found: Vec<JointConfig> = sample_ik_uniform(
            self.chain,
            self.traj.pose(layer),
            self.count,
            &cfg.ik,
            &mut rng,
        );
        self.stats.layers[layer].uniform += self.count;
        self.additional[layer] += self.count;
        self.graph.add_vertices(layer, found);
        self.touched[layer] = true;
    }
}
