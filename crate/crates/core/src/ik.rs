//! Damped-least-squares inverse kinematics with random and targeted seeding.
//!
//! Each solve starts from a seed configuration and converges to a nearby
//! solution, so the seed distribution decides which part of the solution
//! manifold gets covered.

use nalgebra::{Matrix6, Matrix6xX, Vector6};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::kinematics::{max_abs_diff, pose_error, JointConfig, KinematicChain, Pose};

pub const DEFAULT_MERGE_EPS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSettings {
    pub max_iters: usize,
    /// Damping factor lambda in `J^T (J J^T + lambda^2 I)^-1 e`.
    pub damping: f64,
    pub pos_tol: f64,
    pub rot_tol: f64,
    /// Largest per-joint change in one iteration, radians.
    pub step_clamp: f64,
    /// Infinity-norm radius under which two solutions count as duplicates.
    pub merge_eps: f64,
}

impl Default for IkSettings {
    fn default() -> Self {
        Self {
            max_iters: 200,
            damping: 0.1,
            pos_tol: 1e-4,
            rot_tol: 1e-3,
            step_clamp: 0.2,
            merge_eps: DEFAULT_MERGE_EPS,
        }
    }
}

impl IkSettings {
    pub fn validate(&self) -> Result<(), IkError> {
        let positive = self.max_iters > 0
            && self.damping > 0.0
            && self.pos_tol > 0.0
            && self.rot_tol > 0.0
            && self.step_clamp > 0.0
            && self.merge_eps >= 0.0;
        if positive {
            Ok(())
        } else {
            Err(IkError::InvalidSettings)
        }
    }

    /// True when a tolerance-projected residual is inside the solver tolerances.
    pub fn accepts(&self, residual: &Vector6<f64>) -> bool {
        residual
            .fixed_rows::<3>(0)
            .iter()
            .all(|c| c.abs() <= self.pos_tol)
            && residual
                .fixed_rows::<3>(3)
                .iter()
                .all(|c| c.abs() <= self.rot_tol)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum IkError {
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("seed has {got} joints, chain has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("IK settings must be strictly positive")]
    InvalidSettings,
}

/// Solves for a configuration near `seed` whose tool pose reaches `target`
/// within the chain's tolerance specification.
pub fn solve_ik(
    chain: &KinematicChain,
    target: &Pose,
    seed: &[f64],
    settings: &IkSettings,
) -> Result<JointConfig, IkError> {
    if seed.len() != chain.dof() {
        return Err(IkError::DimensionMismatch {
            expected: chain.dof(),
            got: seed.len(),
        });
    }
    let n = chain.dof();
    let tol = chain.tolerance();
    let free: [bool; 6] = std::array::from_fn(|i| tol.is_free(i));
    let to_tool = target.orientation.inverse();
    let lambda2 = settings.damping * settings.damping;

    let mut q = seed.to_vec();
    chain.clamp_to_limits(&mut q);
    let mut jac = Matrix6xX::zeros(n);
    let mut dq = vec![0.0; n];
    let mut residual = f64::INFINITY;

    for iter in 0..=settings.max_iters {
        let tool = chain.pose_and_jacobian_into(&q, &mut jac);
        let err = pose_error(&Pose::from_isometry(&tool), target, tol);
        residual = err.norm();
        if settings.accepts(&err) {
            return Ok(JointConfig::new(q));
        }
        if iter == settings.max_iters {
            break;
        }

        // Express the Jacobian in the target tool frame and drop free axes;
        // a zero row leaves lambda^2 on the diagonal, so it contributes nothing.
        for mut col in jac.column_iter_mut() {
            let lin = to_tool * nalgebra::Vector3::new(col[0], col[1], col[2]);
            let ang = to_tool * nalgebra::Vector3::new(col[3], col[4], col[5]);
            for r in 0..3 {
                col[r] = if free[r] { 0.0 } else { lin[r] };
                col[r + 3] = if free[r + 3] { 0.0 } else { ang[r] };
            }
        }
        let mut gram = Matrix6::identity() * lambda2;
        for col in jac.column_iter() {
            gram += col * col.transpose();
        }
        let Some(chol) = gram.cholesky() else {
            break;
        };
        let y = chol.solve(&err);

        let mut largest: f64 = 0.0;
        for (k, col) in jac.column_iter().enumerate() {
            dq[k] = -col.dot(&y);
            largest = largest.max(dq[k].abs());
        }
        let scale = if largest > settings.step_clamp {
            settings.step_clamp / largest
        } else {
            1.0
        };
        let mut moved: f64 = 0.0;
        for (k, joint) in chain.joints().iter().enumerate() {
            let next = (q[k] + scale * dq[k]).clamp(joint.pos_lower, joint.pos_upper);
            moved = moved.max((next - q[k]).abs());
            q[k] = next;
        }
        if moved < 1e-12 {
            // pinned against joint limits
            break;
        }
    }
    Err(IkError::NoConvergence {
        iterations: settings.max_iters,
        residual,
    })
}

/// Uniform random configuration within the position limits.
pub fn random_config<R: Rng + ?Sized>(chain: &KinematicChain, rng: &mut R) -> Vec<f64> {
    chain
        .joints()
        .iter()
        .map(|j| rng.random_range(j.pos_lower..=j.pos_upper))
        .collect()
}

/// Solves from `count` uniformly drawn seeds and returns the distinct successes.
pub fn sample_ik_uniform<R: Rng + ?Sized>(
    chain: &KinematicChain,
    target: &Pose,
    count: usize,
    settings: &IkSettings,
    rng: &mut R,
) -> Vec<JointConfig> {
    let seeds: Vec<Vec<f64>> = (0..count).map(|_| random_config(chain, rng)).collect();
    solve_all(chain, target, &seeds, settings)
}

/// Solves from `count` seeds drawn as `anchor + N(0, stddev^2)` per joint
/// (clamped to limits) and returns the distinct successes.
pub fn sample_ik_targeted<R: Rng + ?Sized>(
    chain: &KinematicChain,
    target: &Pose,
    anchor: &[f64],
    stddev: f64,
    count: usize,
    settings: &IkSettings,
    rng: &mut R,
) -> Result<Vec<JointConfig>, IkError> {
    if anchor.len() != chain.dof() {
        return Err(IkError::DimensionMismatch {
            expected: chain.dof(),
            got: anchor.len(),
        });
    }
    let noise = Normal::new(0.0, stddev.max(0.0)).expect("finite stddev");
    let seeds: Vec<Vec<f64>> = (0..count)
        .map(|_| {
            let mut seed: Vec<f64> = anchor
                .iter()
                .map(|&a| {
                    if stddev > 0.0 {
                        a + noise.sample(rng)
                    } else {
                        a
                    }
                })
                .collect();
            chain.clamp_to_limits(&mut seed);
            seed
        })
        .collect();
    Ok(solve_all(chain, target, &seeds, settings))
}

/// First pose for which none of `attempts` uniformly seeded solves
/// converges, or `None` when every pose yielded a solution. Used to screen
/// randomly generated trajectories before tracking them.
pub fn first_unreachable<'a, R: Rng + ?Sized>(
    chain: &KinematicChain,
    poses: impl IntoIterator<Item = &'a Pose>,
    attempts: usize,
    settings: &IkSettings,
    rng: &mut R,
) -> Option<usize> {
    poses.into_iter().position(|pose| {
        !(0..attempts).any(|_| {
            let seed = random_config(chain, rng);
            solve_ik(chain, pose, &seed, settings).is_ok()
        })
    })
}

fn solve_all(
    chain: &KinematicChain,
    target: &Pose,
    seeds: &[Vec<f64>],
    settings: &IkSettings,
) -> Vec<JointConfig> {
    let solved = seeds
        .iter()
        .filter_map(|seed| solve_ik(chain, target, seed, settings).ok())
        .collect();
    merge_similar(solved, settings.merge_eps)
}

/// Greedy single-pass clustering: a configuration is dropped when it lies
/// within `eps` (infinity norm) of one already kept. First-seen order is kept.
pub fn merge_similar(configs: Vec<JointConfig>, eps: f64) -> Vec<JointConfig> {
    let mut kept: Vec<JointConfig> = Vec::with_capacity(configs.len());
    for q in configs {
        if kept.iter().all(|k| max_abs_diff(k, &q) > eps) {
            kept.push(q);
        }
    }
    kept
}
