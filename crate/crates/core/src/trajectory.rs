//! Reference end-effector trajectories: representation, synthetic generation
//! from cumulative cubic Bezier curves, statistics, and CSV files.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use nalgebra::{Unit, UnitQuaternion, Vector3};
use rand::Rng;
use thiserror::Error;

use crate::kinematics::{exp_map, log_map, Pose};

/// Largest position change between consecutive waypoints, meters.
pub const MAX_STEP_POSITION: f64 = 0.05;
/// Largest rotation between consecutive waypoints, radians.
pub const MAX_STEP_ROTATION: f64 = 0.1;

const CSV_HEADER: [&str; 8] = ["t", "x", "y", "z", "qw", "qx", "qy", "qz"];
const QUATERNION_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("invalid trajectory: {0}")]
    Invalid(String),
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed trajectory CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed trajectory CSV at row {row}: {msg}")]
    Row { row: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub t: f64,
    pub pose: Pose,
}

impl Waypoint {
    pub fn new(t: f64, pose: Pose) -> Self {
        Self { t, pose }
    }
}

/// Timestamped sequence of tool poses.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    waypoints: Vec<Waypoint>,
}

impl Trajectory {
    /// Builds a trajectory and checks every invariant, including waypoint density.
    pub fn new(waypoints: Vec<Waypoint>) -> Result<Self, TrajectoryError> {
        let traj = Self::new_sparse(waypoints)?;
        traj.check_density()?;
        Ok(traj)
    }

    /// Builds a trajectory without the density check. Useful for coarse
    /// reference data and statistics; tracking inputs should use [`Trajectory::new`].
    pub fn new_sparse(waypoints: Vec<Waypoint>) -> Result<Self, TrajectoryError> {
        if waypoints.len() < 2 {
            return Err(TrajectoryError::Invalid(format!(
                "need at least 2 waypoints, got {}",
                waypoints.len()
            )));
        }
        for (i, w) in waypoints.iter().enumerate() {
            if !w.t.is_finite() || w.t < 0.0 {
                return Err(TrajectoryError::Invalid(format!(
                    "waypoint {i}: timestamp {} must be finite and non-negative",
                    w.t
                )));
            }
            if w.pose.position.iter().any(|v| !v.is_finite()) {
                return Err(TrajectoryError::Invalid(format!(
                    "waypoint {i}: non-finite position"
                )));
            }
        }
        if let Some(i) = waypoints.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(TrajectoryError::Invalid(format!(
                "timestamps must increase strictly (waypoints {i} and {})",
                i + 1
            )));
        }
        Ok(Self { waypoints })
    }

    pub fn check_density(&self) -> Result<(), TrajectoryError> {
        for (i, w) in self.waypoints.windows(2).enumerate() {
            let (dp, dr) = step(&w[0].pose, &w[1].pose);
            if dp > MAX_STEP_POSITION + 1e-12 || dr > MAX_STEP_ROTATION + 1e-12 {
                return Err(TrajectoryError::Invalid(format!(
                    "waypoints {i}..{} too far apart ({dp:.4} m, {dr:.4} rad)",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn pose(&self, i: usize) -> &Pose {
        &self.waypoints[i].pose
    }

    pub fn time(&self, i: usize) -> f64 {
        self.waypoints[i].t
    }

    pub fn duration(&self) -> f64 {
        self.waypoints.last().unwrap().t - self.waypoints[0].t
    }
}

fn step(a: &Pose, b: &Pose) -> (f64, f64) {
    (
        (b.position - a.position).norm(),
        a.orientation.angle_to(&b.orientation),
    )
}

/// Summed chord length (meters) and summed relative rotation angle (radians).
pub fn path_stats(traj: &Trajectory) -> (f64, f64) {
    traj.waypoints.windows(2).fold((0.0, 0.0), |(len, ang), w| {
        let (dp, dr) = step(&w[0].pose, &w[1].pose);
        (len + dp, ang + dr)
    })
}

/// Chained cubic Bezier curves: positions in Bernstein form, orientations in
/// cumulative form `q(u) = q0 * exp(w1 B1(u)) * exp(w2 B2(u)) * exp(w3 B3(u))`
/// with `wi = log(q(i-1)^-1 q(i))` and `Bi` the cumulative Bernstein basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BezierCurve {
    pub positions: Vec<[Vector3<f64>; 4]>,
    pub orientations: Vec<[UnitQuaternion<f64>; 4]>,
}

impl BezierCurve {
    pub fn segments(&self) -> usize {
        self.positions.len()
    }

    /// Pose at curve parameter `tau` in `[0, segments]`.
    pub fn eval(&self, tau: f64) -> Pose {
        let n = self.segments();
        let tau = tau.clamp(0.0, n as f64);
        let seg = (tau.floor() as usize).min(n - 1);
        let u = tau - seg as f64;
        // de Casteljau; exact at the endpoints and for coincident controls
        let lerp = |a: Vector3<f64>, b: Vector3<f64>| a + (b - a) * u;
        let [p0, p1, p2, p3] = self.positions[seg];
        let (a, b, c) = (lerp(p0, p1), lerp(p1, p2), lerp(p2, p3));
        let (d, e) = (lerp(a, b), lerp(b, c));
        let position = if u == 1.0 { p3 } else { lerp(d, e) };

        let q = &self.orientations[seg];
        let orientation = if u == 0.0 {
            q[0]
        } else if u == 1.0 {
            q[3]
        } else {
            let basis = cumulative_basis(u);
            let mut acc = q[0];
            for i in 1..4 {
                let w = log_map(&(q[i - 1].inverse() * q[i]));
                acc *= exp_map(&(w * basis[i - 1]));
            }
            acc
        };
        Pose::new(position, orientation)
    }

    /// Samples `count` poses at uniform timestamps over `[0, duration]`.
    pub fn sample(&self, duration: f64, count: usize) -> Vec<Waypoint> {
        let n = self.segments() as f64;
        (0..count)
            .map(|k| {
                let s = k as f64 / (count - 1) as f64;
                let tau = if k + 1 == count { n } else { n * s };
                Waypoint::new(duration * s, self.eval(tau))
            })
            .collect()
    }
}

/// `[B1, B2, B3]` of the cumulative cubic Bernstein basis.
pub fn cumulative_basis(u: f64) -> [f64; 3] {
    let v = 1.0 - u;
    [1.0 - v * v * v, 3.0 * u * u - 2.0 * u * u * u, u * u * u]
}

/// Parameters for [`generate_bezier`].
#[derive(Debug, Clone, PartialEq)]
pub struct BezierParams {
    pub segments: usize,
    pub duration: f64,
    pub waypoint_count: usize,
    pub workspace_center: Vector3<f64>,
    pub workspace_radius: f64,
    /// Orientation every control quaternion is perturbed from.
    pub base_orientation: UnitQuaternion<f64>,
    /// Largest rotation of a control quaternion away from the base, radians.
    pub max_rotation: f64,
}

impl Default for BezierParams {
    fn default() -> Self {
        Self {
            segments: 1,
            duration: 20.0,
            waypoint_count: 200,
            workspace_center: Vector3::new(0.45, 0.0, 0.45),
            workspace_radius: 0.25,
            // tool z pointing down
            base_orientation: UnitQuaternion::from_axis_angle(&Vector3::x_axis(), PI),
            max_rotation: 0.6,
        }
    }
}

impl BezierParams {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        if self.segments < 1 {
            return Err(TrajectoryError::InvalidParams(
                "segments must be >= 1".into(),
            ));
        }
        if self.waypoint_count < 2 {
            return Err(TrajectoryError::InvalidParams(
                "waypoint count must be >= 2".into(),
            ));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(TrajectoryError::InvalidParams(
                "duration must be positive".into(),
            ));
        }
        if !(self.workspace_radius >= 0.0 && self.workspace_radius.is_finite()) {
            return Err(TrajectoryError::InvalidParams(
                "workspace radius must be non-negative".into(),
            ));
        }
        if !(0.0..=PI).contains(&self.max_rotation) {
            return Err(TrajectoryError::InvalidParams(
                "max rotation must lie in [0, pi]".into(),
            ));
        }
        Ok(())
    }
}

/// Draws random C1-continuous control points for a chained Bezier curve.
pub fn random_bezier_curve<R: Rng + ?Sized>(
    rng: &mut R,
    params: &BezierParams,
) -> Result<BezierCurve, TrajectoryError> {
    params.validate()?;
    let mut positions: Vec<[Vector3<f64>; 4]> = Vec::with_capacity(params.segments);
    let mut orientations: Vec<[UnitQuaternion<f64>; 4]> = Vec::with_capacity(params.segments);
    let mut point = || uniform_in_ball(rng, &params.workspace_center, params.workspace_radius);
    for _ in 0..params.segments {
        let ctrl = match positions.last() {
            None => [point(), point(), point(), point()],
            Some(prev) => [prev[3], prev[3] * 2.0 - prev[2], point(), point()],
        };
        positions.push(ctrl);
    }
    for _ in 0..params.segments {
        let mut random_q = || params.base_orientation * random_rotation(rng, params.max_rotation);
        let ctrl = match orientations.last() {
            None => [random_q(), random_q(), random_q(), random_q()],
            Some(prev) => {
                // mirror the last tangent so angular velocity is continuous
                let tangent = prev[2].inverse() * prev[3];
                [prev[3], prev[3] * tangent, random_q(), random_q()]
            }
        };
        orientations.push(ctrl);
    }
    Ok(BezierCurve {
        positions,
        orientations,
    })
}

/// Random chained cumulative cubic Bezier trajectory. The waypoint count is
/// raised as needed so consecutive waypoints respect the density limits.
pub fn generate_bezier<R: Rng + ?Sized>(
    rng: &mut R,
    params: &BezierParams,
) -> Result<Trajectory, TrajectoryError> {
    let curve = random_bezier_curve(rng, params)?;
    sample_dense(&curve, params.duration, params.waypoint_count)
}

/// Samples `curve`, increasing the waypoint count until the density limits hold.
pub fn sample_dense(
    curve: &BezierCurve,
    duration: f64,
    waypoint_count: usize,
) -> Result<Trajectory, TrajectoryError> {
    let mut count = waypoint_count.max(2);
    loop {
        let waypoints = curve.sample(duration, count);
        let worst = waypoints
            .windows(2)
            .map(|w| {
                let (dp, dr) = step(&w[0].pose, &w[1].pose);
                f64::max(dp / MAX_STEP_POSITION, dr / MAX_STEP_ROTATION)
            })
            .fold(0.0, f64::max);
        if worst <= 1.0 {
            return Trajectory::new(waypoints);
        }
        count = ((count - 1) as f64 * worst * 1.05).ceil() as usize + 1;
    }
}

fn uniform_in_ball<R: Rng + ?Sized>(
    rng: &mut R,
    center: &Vector3<f64>,
    radius: f64,
) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        if v.norm_squared() <= 1.0 {
            return center + v * radius;
        }
    }
}

fn random_rotation<R: Rng + ?Sized>(rng: &mut R, max_angle: f64) -> UnitQuaternion<f64> {
    let axis = loop {
        let v = Vector3::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        let n = v.norm();
        if n > 1e-6 && n <= 1.0 {
            break Unit::new_normalize(v);
        }
    };
    let angle = if max_angle > 0.0 {
        rng.random_range(0.0..=max_angle)
    } else {
        0.0
    };
    UnitQuaternion::from_axis_angle(&axis, angle)
}

/// Writes a trajectory as CSV (`t,x,y,z,qw,qx,qy,qz`).
pub fn save_trajectory(traj: &Trajectory, path: impl AsRef<Path>) -> Result<(), TrajectoryError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| TrajectoryError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_trajectory(traj, file)
}

pub fn write_trajectory<W: std::io::Write>(
    traj: &Trajectory,
    out: W,
) -> Result<(), TrajectoryError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for wp in &traj.waypoints {
        let p = &wp.pose.position;
        let [qw, qx, qy, qz] = wp.pose.wxyz();
        w.write_record(
            [wp.t, p.x, p.y, p.z, qw, qx, qy, qz]
                .iter()
                .map(|v| format_float(*v)),
        )?;
    }
    w.flush().map_err(|e| TrajectoryError::Csv(e.into()))?;
    Ok(())
}

/// Reads and validates a trajectory CSV.
pub fn load_trajectory(path: impl AsRef<Path>) -> Result<Trajectory, TrajectoryError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| TrajectoryError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_trajectory(file)
}

pub fn read_trajectory<R: std::io::Read>(input: R) -> Result<Trajectory, TrajectoryError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = r.headers()?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(TrajectoryError::Row {
            row: 0,
            msg: format!("expected header {}", CSV_HEADER.join(",")),
        });
    }
    let mut waypoints = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| TrajectoryError::Row {
                row,
                msg: e.to_string(),
            })?;
        let [t, x, y, z, qw, qx, qy, qz] = vals[..] else {
            return Err(TrajectoryError::Row {
                row,
                msg: format!("expected 8 fields, got {}", vals.len()),
            });
        };
        let norm = (qw * qw + qx * qx + qy * qy + qz * qz).sqrt();
        let deviation = (norm - 1.0).abs();
        if deviation.is_nan() || deviation > QUATERNION_NORM_TOL {
            return Err(TrajectoryError::Row {
                row,
                msg: format!("quaternion norm {norm} is not 1"),
            });
        }
        waypoints.push(Waypoint::new(
            t,
            Pose::from_parts([x, y, z], [qw, qx, qy, qz]),
        ));
    }
    Trajectory::new(waypoints)
}

pub(crate) fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}
