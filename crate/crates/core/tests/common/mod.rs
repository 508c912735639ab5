//! Independent oracles and fixtures shared by the integration suites.
#![allow(dead_code)]

use guidetrack::frameworks::{FrameworkConfig, Solution};
use guidetrack::graph::{EdgeKind, LayeredGraph, VertexId};
use guidetrack::ik::IkSettings;
use guidetrack::kinematics::{
    pose_error, DhJoint, JointConfig, KinematicChain, Pose, ToleranceSpec,
};
use guidetrack::search::{Cost, EdgeFilter, Metric};
use guidetrack::trajectory::{Trajectory, Waypoint};
use nalgebra::{Matrix4, UnitQuaternion, Vector3};
use rand::Rng;

// ---------------------------------------------------------------------------
// kinematics

fn rot_x(a: f64) -> Matrix4<f64> {
    let (s, c) = a.sin_cos();
    Matrix4::new(
        1.0, 0.0, 0.0, 0.0, //
        0.0, c, -s, 0.0, //
        0.0, s, c, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    )
}

fn rot_z(a: f64) -> Matrix4<f64> {
    let (s, c) = a.sin_cos();
    Matrix4::new(
        c, -s, 0.0, 0.0, //
        s, c, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    )
}

fn trans(x: f64, y: f64, z: f64) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m[(0, 3)] = x;
    m[(1, 3)] = y;
    m[(2, 3)] = z;
    m
}

/// Homogeneous matrix of a pose, building the rotation block from the
/// quaternion components directly.
pub fn pose_matrix(p: &Pose) -> Matrix4<f64> {
    let [w, x, y, z] = p.wxyz();
    let mut m = Matrix4::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        p.position.x,
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        p.position.y,
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
        p.position.z,
        0.0,
        0.0,
        0.0,
        1.0,
    );
    m[(3, 3)] = 1.0;
    m
}

/// Tool pose as a product of 4x4 link matrices
/// `RotX(alpha) TransX(a) RotZ(q + offset) TransZ(d)`, then the tool matrix.
pub fn fk_matrix_product(chain: &KinematicChain, q: &[f64]) -> Matrix4<f64> {
    let mut t = Matrix4::<f64>::identity();
    for (j, &angle) in chain.joints().iter().zip(q) {
        t = t
            * rot_x(j.alpha)
            * trans(j.a, 0.0, 0.0)
            * rot_z(angle + j.theta_offset)
            * trans(0.0, 0.0, j.d);
    }
    t * pose_matrix(chain.tool_transform())
}

/// Central-difference Jacobian: position rows from FK positions, rotation
/// rows from the rotation vector of `R(q - h)^T R(q + h)` in the base frame.
pub fn finite_difference_jacobian(chain: &KinematicChain, q: &[f64]) -> nalgebra::Matrix6xX<f64> {
    let h = 1e-6;
    let mut jac = nalgebra::Matrix6xX::zeros(q.len());
    for i in 0..q.len() {
        let mut plus = q.to_vec();
        let mut minus = q.to_vec();
        plus[i] += h;
        minus[i] -= h;
        let a = chain.forward_kinematics(&plus).unwrap();
        let b = chain.forward_kinematics(&minus).unwrap();
        let dp = (a.position - b.position) / (2.0 * h);
        let dr = (a.orientation * b.orientation.inverse()).scaled_axis() / (2.0 * h);
        for r in 0..3 {
            jac[(r, i)] = dp[r];
            jac[(r + 3, i)] = dr[r];
        }
    }
    jac
}

pub fn random_config<R: Rng>(chain: &KinematicChain, rng: &mut R) -> Vec<f64> {
    chain
        .joints()
        .iter()
        .map(|j| rng.random_range(j.pos_lower..=j.pos_upper))
        .collect()
}

// ---------------------------------------------------------------------------
// trajectories and small robots

/// Straight line in the plane of `planar3r`, sampled at `n` waypoints.
pub fn planar_line(n: usize, duration: f64, from: [f64; 2], to: [f64; 2]) -> Trajectory {
    let wps = (0..n)
        .map(|i| {
            let f = i as f64 / (n - 1) as f64;
            let x = from[0] + f * (to[0] - from[0]);
            let y = from[1] + f * (to[1] - from[1]);
            Waypoint::new(duration * f, Pose::from_translation(x, y, 0.0))
        })
        .collect();
    Trajectory::new(wps).expect("valid planar line")
}

/// `n` copies of one pose, spaced `dt` apart.
pub fn stationary(pose: Pose, n: usize, dt: f64) -> Trajectory {
    let wps = (0..n).map(|i| Waypoint::new(i as f64 * dt, pose)).collect();
    Trajectory::new(wps).expect("valid stationary trajectory")
}

/// Chain of `dof` joints with unit velocity limits; only joint limits and
/// velocities matter for graph tests.
pub fn abstract_chain(dof: usize) -> KinematicChain {
    KinematicChain::new(
        "abstract",
        (0..dof)
            .map(|_| DhJoint::new(0.1, 0.0, 0.0, 10.0, 1.0))
            .collect(),
        Pose::identity(),
        ToleranceSpec::exact(),
    )
    .expect("valid chain")
}

/// Timestamps only; poses are irrelevant to graph construction.
pub fn timeline(times: &[f64]) -> Trajectory {
    let wps = times
        .iter()
        .map(|&t| Waypoint::new(t, Pose::identity()))
        .collect();
    Trajectory::new(wps).expect("valid timeline")
}

/// Random layered graph: up to `max_layers` layers with unit time steps
/// and up to `max_width` random configurations per layer, connected densely
/// and with sparse edges of span 2 or 3.
pub fn random_graph<R: Rng>(
    rng: &mut R,
    max_layers: usize,
    max_width: usize,
    dof: usize,
    allow_reconfig: bool,
) -> (LayeredGraph, KinematicChain) {
    let n = rng.random_range(2..=max_layers);
    let mut t = 0.0;
    let times: Vec<f64> = (0..n)
        .map(|_| {
            let now = t;
            t += rng.random_range(0.5..1.5);
            now
        })
        .collect();
    let traj = timeline(&times);
    let chain = abstract_chain(dof);
    let mut g = LayeredGraph::new(&traj, dof, 2, 0.0);
    for x in 0..n {
        let width = rng.random_range(0..=max_width);
        let configs: Vec<JointConfig> = (0..width)
            .map(|_| JointConfig::new((0..dof).map(|_| rng.random_range(-1.5..1.5)).collect()))
            .collect();
        g.add_vertices(x, configs);
    }
    for x in 0..n - 1 {
        g.connect_dense(x, &chain, allow_reconfig);
        for span in [2, 3] {
            if x + span < n && rng.random_bool(0.7) {
                g.connect_sparse(x, x + span, &chain, allow_reconfig);
            }
        }
    }
    (g, chain)
}

// ---------------------------------------------------------------------------
// search oracle

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Velocity feasibility recomputed from the joint limits.
pub fn feasible(chain: &KinematicChain, a: &[f64], b: &[f64], dt: f64) -> bool {
    chain
        .joints()
        .iter()
        .zip(a.iter().zip(b))
        .all(|(j, (x, y))| (y - x).abs() <= j.vel_max * dt)
}

pub fn usable(kind: EdgeKind, metric: Metric, filter: EdgeFilter) -> bool {
    let dense_ok = matches!(kind, EdgeKind::Dense | EdgeKind::DenseReconfig)
        || filter == EdgeFilter::DenseAndSparse;
    let reconfig_ok = !matches!(kind, EdgeKind::DenseReconfig | EdgeKind::SparseReconfig)
        || metric == Metric::LexReconfigMovement;
    dense_ok && reconfig_ok
}

/// Cost of a hop sequence, folded left to right.
pub fn fold(metric: Metric, hops: &[(bool, f64)]) -> Cost {
    let mut reconfigs = 0;
    let mut movement = 0.0;
    for &(reconfig, m) in hops {
        reconfigs += u32::from(reconfig);
        movement = match metric {
            Metric::MaxJointDelta => f64::max(movement, m),
            _ => movement + m,
        };
    }
    Cost {
        reconfigs,
        movement,
    }
}

/// Cheapest cost over every first-to-last-layer path, by exhaustive
/// enumeration. Edges are read off the graph; costs are recomputed here.
pub fn brute_force_best(g: &LayeredGraph, metric: Metric, filter: EdgeFilter) -> Option<Cost> {
    let last = g.num_layers() - 1;
    let mut best: Option<Cost> = None;
    let mut stack: Vec<(VertexId, Vec<(bool, f64)>)> =
        g.vertex_ids(0).map(|v| (v, Vec::new())).collect();
    while let Some((v, hops)) = stack.pop() {
        if v.layer == last {
            let c = fold(metric, &hops);
            if best.is_none_or(|b| c < b) {
                best = Some(c);
            }
            continue;
        }
        for e in g.out_edges(v) {
            if !usable(e.kind, metric, filter) {
                continue;
            }
            let mut next = hops.clone();
            next.push((
                matches!(e.kind, EdgeKind::DenseReconfig | EdgeKind::SparseReconfig),
                euclid(g.vertex(v), g.vertex(e.to)),
            ));
            stack.push((e.to, next));
        }
    }
    best
}

/// Every path from `a` to `b` using dense edges only; movement sums.
pub fn dense_path_movements(
    g: &LayeredGraph,
    a: VertexId,
    b: VertexId,
    with_reconfig: bool,
) -> Vec<f64> {
    let mut out = Vec::new();
    let mut stack = vec![(a, 0.0)];
    while let Some((v, m)) = stack.pop() {
        if v == b {
            out.push(m);
            continue;
        }
        if v.layer >= b.layer {
            continue;
        }
        for u in 0..g.layer_len(v.layer + 1) {
            match g.dense_kind(v.layer, v.slot, u) {
                Some(EdgeKind::Dense) => {}
                Some(EdgeKind::DenseReconfig) if with_reconfig => {}
                _ => continue,
            }
            let w = VertexId::new(v.layer + 1, u);
            stack.push((w, m + euclid(g.vertex(v), g.vertex(w))));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// solution validity

/// Violations of the solution contract, as human-readable strings.
pub fn solution_violations(
    chain: &KinematicChain,
    traj: &Trajectory,
    cfg: &FrameworkConfig,
    sol: &Solution,
) -> Vec<String> {
    let mut bad = Vec::new();
    if sol.configs.len() != traj.len() {
        bad.push(format!(
            "{} configs for {} waypoints",
            sol.configs.len(),
            traj.len()
        ));
        return bad;
    }
    let ik: &IkSettings = &cfg.ik;
    for (i, q) in sol.configs.iter().enumerate() {
        let pose = chain.forward_kinematics(q).expect("dimension");
        let err = pose_error(&pose, traj.pose(i), chain.tolerance());
        let pos = err.fixed_rows::<3>(0).amax();
        let rot = err.fixed_rows::<3>(3).amax();
        if pos > ik.pos_tol || rot > ik.rot_tol {
            bad.push(format!(
                "waypoint {i}: residual {pos:.2e} m / {rot:.2e} rad"
            ));
        }
        if !chain.within_limits(q) {
            bad.push(format!("waypoint {i}: outside joint limits"));
        }
    }
    let mut reconfigs = 0;
    let mut hops = Vec::new();
    for i in 1..traj.len() {
        let (a, b) = (&sol.configs[i - 1], &sol.configs[i]);
        let dt = traj.time(i) - traj.time(i - 1);
        if sol.reconfig[i] {
            reconfigs += 1;
            if !cfg.allow_reconfig {
                bad.push(format!("step {i}: reconfiguration not allowed"));
            }
        } else if !feasible(chain, a, b, dt) {
            bad.push(format!("step {i}: exceeds velocity limits"));
        }
        hops.push((sol.reconfig[i], euclid(a, b)));
    }
    let cost = sol.cost();
    if reconfigs != cost.reconfigs {
        bad.push(format!(
            "{reconfigs} reconfigurations but cost says {}",
            cost.reconfigs
        ));
    }
    let recomputed = fold(cfg.metric, &hops).movement;
    if (recomputed - cost.movement).abs() > 1e-9 * recomputed.max(1.0) {
        bad.push(format!(
            "movement {recomputed} but cost says {}",
            cost.movement
        ));
    }
    if sol.reconfig.first() == Some(&true) {
        bad.push("first waypoint flagged as reconfiguration".into());
    }
    bad
}

/// Rotation about z by `angle`.
pub fn rz(angle: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::z_axis(), angle)
}

/// Two-link planar arm: each reachable point has exactly two solutions.
pub const PLANAR2R: &str = r#"{
          "name": "planar2r", "dof": 2,
          "joints": [
            {"a": 0, "alpha": 0, "d": 0, "theta_offset": 0, "pos_lower": -3.1, "pos_upper": 3.1, "vel_max": 1},
            {"a": 1, "alpha": 0, "d": 0, "theta_offset": 0, "pos_lower": -3.1, "pos_upper": 3.1, "vel_max": 1}
          ],
          "tool_transform": {"position": [1, 0, 0], "quaternion": [1, 0, 0, 0]},
          "tolerance": {"lower": [0, 0, 0, "-inf", "-inf", "-inf"], "upper": [0, 0, 0, "inf", "inf", "inf"]}
        }"#;
