//! Command-line front end: `generate`, `track` and `compare`.
//!
//! Exit codes: 0 success, 1 output failure, 2 usage error, 3 load error,
//! 4 no solution.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::frameworks::{
    write_solution_csv, write_trace_csv, Budget, FrameworkConfig, FrameworkError, FrameworkKind,
    RunOutcome,
};
use crate::ik::{first_unreachable, IkSettings};
use crate::kinematics::{load_chain, preset, KinematicChain, PRESET_NAMES};
use crate::search::{Cost, Metric};
use crate::trajectory::{
    format_float, generate_bezier, load_trajectory, path_stats, write_trajectory, BezierParams,
    Trajectory,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OUTPUT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_LOAD: i32 = 3;
pub const EXIT_NO_SOLUTION: i32 = 4;

pub const RUNS_HEADER: &str =
    "method,trajectory,seed,status,first_s,iterations,reconfigs,movement_rad";
pub const AGGREGATE_HEADER: &str = "method,runs,failures,mean_first_s,best_reconfigs,\
best_movement_rad,mean_reconfigs,mean_movement_rad,worst_reconfigs,worst_movement_rad";

#[derive(Debug, Parser)]
#[command(
    name = "guidetrack",
    version,
    about = "Track end-effector trajectories with graph-based IK frameworks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random chained cubic Bezier trajectory.
    Generate(GenerateArgs),
    /// Track one trajectory with one framework.
    Track(TrackArgs),
    /// Run several frameworks on several trajectories and seeds.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 1)]
    segments: usize,
    /// Minimum number of waypoints; raised automatically to keep consecutive
    /// waypoints close together.
    #[arg(long, default_value_t = 200)]
    waypoints: usize,
    /// Duration in seconds.
    #[arg(long, default_value_t = 20.0)]
    duration: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Center of the control-point ball, `x,y,z` in meters.
    #[arg(long, value_delimiter = ',', default_values_t = [0.45, 0.0, 0.45])]
    center: Vec<f64>,
    /// Radius of the control-point ball, meters.
    #[arg(long, default_value_t = 0.25)]
    radius: f64,
    /// Largest rotation of a control orientation away from tool-down, radians.
    #[arg(long, default_value_t = 0.6)]
    max_rotation: f64,
    /// Redraw until every waypoint has an IK solution for this robot
    /// (preset name or definition file).
    #[arg(long)]
    robot: Option<String>,
    /// IK attempts per waypoint when screening with `--robot`.
    #[arg(long, default_value_t = 60)]
    screen_attempts: usize,
    /// Curves drawn at most when screening with `--robot`.
    #[arg(long, default_value_t = 100)]
    max_draws: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FrameworkArg {
    Conventional,
    Naive,
    Guided,
}

impl From<FrameworkArg> for FrameworkKind {
    fn from(f: FrameworkArg) -> Self {
        match f {
            FrameworkArg::Conventional => FrameworkKind::Conventional,
            FrameworkArg::Naive => FrameworkKind::NaiveAnytime,
            FrameworkArg::Guided => FrameworkKind::GuidedAnytime,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    /// Total joint-space movement.
    Movement,
    /// Largest joint-space movement of a single step.
    MaxDelta,
    /// Fewest reconfigurations, then least total movement.
    Lex,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Movement => Metric::MovementOnly,
            MetricArg::MaxDelta => Metric::MaxJointDelta,
            MetricArg::Lex => Metric::LexReconfigMovement,
        }
    }
}

/// Framework parameters shared by `track` and `compare`.
#[derive(Debug, Args)]
struct RunArgs {
    /// Preset name or robot definition file.
    #[arg(long)]
    robot: String,
    #[arg(long, value_enum, default_value_t = MetricArg::Movement)]
    metric: MetricArg,
    /// Permit reconfiguration edges (requires `--metric lex`).
    #[arg(long)]
    allow_reconfig: bool,
    #[arg(long, default_value_t = 250)]
    m: usize,
    #[arg(long, default_value_t = 10)]
    delta_m: usize,
    #[arg(long, default_value_t = 50)]
    m0: usize,
    #[arg(long, default_value_t = 5)]
    md: usize,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    #[arg(long, default_value_t = 1.1)]
    eta: f64,
    /// Wall-clock budget in seconds for the anytime frameworks.
    #[arg(long)]
    budget_secs: Option<f64>,
    /// Iteration budget for the anytime frameworks.
    #[arg(long)]
    budget_iters: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Leave elapsed-time columns empty so repeated runs give identical files.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct TrackArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long, value_enum, default_value_t = FrameworkArg::Guided)]
    framework: FrameworkArg,
    #[arg(long, default_value_t = 5)]
    s: usize,
    #[arg(long)]
    solution_out: PathBuf,
    #[arg(long)]
    trace_out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Trajectory files (repeat the flag or separate with commas).
    #[arg(long, value_delimiter = ',', required = true)]
    trajectory: Vec<PathBuf>,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_values_t = [FrameworkArg::Conventional, FrameworkArg::Guided]
    )]
    frameworks: Vec<FrameworkArg>,
    /// Guided step sizes; each value is reported as its own method.
    #[arg(long, value_delimiter = ',', default_values_t = [5])]
    s: Vec<usize>,
    /// Runs per trajectory, with seeds `seed .. seed + runs - 1`.
    #[arg(long, default_value_t = 1)]
    runs: u64,
    /// Give the anytime frameworks a time budget equal to conventional's
    /// completion time on the same trajectory and seed.
    #[arg(long)]
    match_conventional: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug)]
struct CliError {
    code: i32,
    msg: String,
}

impl CliError {
    fn usage(msg: impl ToString) -> Self {
        Self {
            code: EXIT_USAGE,
            msg: msg.to_string(),
        }
    }

    fn load(msg: impl ToString) -> Self {
        Self {
            code: EXIT_LOAD,
            msg: msg.to_string(),
        }
    }

    fn output(msg: impl ToString) -> Self {
        Self {
            code: EXIT_OUTPUT,
            msg: msg.to_string(),
        }
    }

    fn no_solution(msg: impl ToString) -> Self {
        Self {
            code: EXIT_NO_SOLUTION,
            msg: msg.to_string(),
        }
    }
}

type CliResult = Result<(), CliError>;

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Track(a) => cmd_track(&a),
        Command::Compare(a) => cmd_compare(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            e.code
        }
    }
}

fn cmd_generate(a: &GenerateArgs) -> CliResult {
    if a.center.len() != 3 {
        return Err(CliError::usage(
            "--center takes three comma-separated values",
        ));
    }
    let params = BezierParams {
        segments: a.segments,
        duration: a.duration,
        waypoint_count: a.waypoints,
        workspace_center: Vector3::new(a.center[0], a.center[1], a.center[2]),
        workspace_radius: a.radius,
        max_rotation: a.max_rotation,
        ..Default::default()
    };
    params.validate().map_err(CliError::usage)?;
    let chain = a.robot.as_deref().map(resolve_robot).transpose()?;
    if chain.is_some() && (a.screen_attempts == 0 || a.max_draws == 0) {
        return Err(CliError::usage(
            "--screen-attempts and --max-draws must be positive",
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut draws = 0;
    let traj = loop {
        draws += 1;
        let traj = generate_bezier(&mut rng, &params).map_err(CliError::usage)?;
        let Some(chain) = &chain else { break traj };
        let poses = traj.waypoints().iter().map(|w| &w.pose);
        let settings = IkSettings::default();
        if first_unreachable(chain, poses, a.screen_attempts, &settings, &mut rng).is_none() {
            break traj;
        }
        if draws >= a.max_draws {
            return Err(CliError::no_solution(format!(
                "no fully reachable trajectory in {draws} draw(s)"
            )));
        }
    };
    write_atomic(&a.out, |w| {
        write_trajectory(&traj, w).map_err(|e| e.to_string())
    })?;
    let (length, rotation) = path_stats(&traj);
    println!(
        "waypoints {}  duration {:.3} s  length {:.4} m  rotation {:.4} rad  draws {draws}",
        traj.len(),
        traj.duration(),
        length,
        rotation
    );
    Ok(())
}

fn cmd_track(a: &TrackArgs) -> CliResult {
    let chain = resolve_robot(&a.run.robot)?;
    let traj = load_trajectory(&a.trajectory).map_err(CliError::load)?;
    let cfg = a.run.config(a.s, a.run.budget())?;
    let kind = FrameworkKind::from(a.framework);
    let outcome = kind.run(&chain, &traj, &cfg).map_err(framework_error)?;

    let timing = !a.run.no_timing;
    write_atomic(&a.solution_out, |w| {
        write_solution_csv(&traj, &outcome.solution, w).map_err(|e| e.to_string())
    })?;
    write_atomic(&a.trace_out, |w| {
        write_trace_csv(&outcome.trace, timing, w).map_err(|e| e.to_string())
    })?;

    let first = outcome
        .trace
        .first()
        .expect("successful runs record a solution");
    let cost = outcome.solution.cost();
    let mut line = format!(
        "{}: {} iteration(s), {} trace record(s), final reconfigs {} movement {:.6} rad",
        kind.name(),
        outcome.stats.iterations.len(),
        outcome.trace.len(),
        cost.reconfigs,
        cost.movement
    );
    if timing {
        line.push_str(&format!(", first solution after {:.3} s", first.elapsed));
    }
    println!("{line}");
    Ok(())
}

/// One method of a comparison: a framework plus, for guided runs, its step size.
struct Method {
    label: String,
    kind: FrameworkKind,
    s: usize,
}

struct RunRow {
    method: usize,
    trajectory: String,
    seed: u64,
    result: Result<(f64, usize, Cost), String>,
}

fn cmd_compare(a: &CompareArgs) -> CliResult {
    if a.runs == 0 {
        return Err(CliError::usage("--runs must be positive"));
    }
    let chain = resolve_robot(&a.run.robot)?;
    let trajectories: Vec<(String, Trajectory)> = a
        .trajectory
        .iter()
        .map(|p| {
            let name = p
                .file_name()
                .map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into());
            load_trajectory(p)
                .map(|t| (name, t))
                .map_err(CliError::load)
        })
        .collect::<Result<_, _>>()?;
    let methods = compare_methods(&a.frameworks, &a.s)?;
    let base_budget = a.run.budget();
    // surface configuration errors before any run starts
    for m in &methods {
        a.run.config(m.s, base_budget)?;
    }
    let traces_dir = a.out_dir.join("traces");
    fs::create_dir_all(&traces_dir).map_err(|e| CliError::output(format!("{e}")))?;
    let timing = !a.run.no_timing;

    let mut rows = Vec::new();
    for (ti, (name, traj)) in trajectories.iter().enumerate() {
        for seed in a.run.seed..a.run.seed + a.runs {
            // conventional first so its completion time can bound the others
            let mut order: Vec<usize> = (0..methods.len()).collect();
            order.sort_by_key(|&i| methods[i].kind != FrameworkKind::Conventional);
            let mut matched = None;
            for mi in order {
                let m = &methods[mi];
                let budget = match (a.match_conventional, matched) {
                    (true, Some(t)) if m.kind != FrameworkKind::Conventional => Budget::seconds(t),
                    _ => base_budget,
                };
                let mut cfg = a.run.config(m.s, budget)?;
                cfg.seed = seed;
                let started = std::time::Instant::now();
                let outcome = m.kind.run(&chain, traj, &cfg);
                if m.kind == FrameworkKind::Conventional {
                    matched = Some(started.elapsed().as_secs_f64());
                }
                let result = summarize(&outcome);
                if let Ok(o) = &outcome {
                    let path = traces_dir.join(format!("{}_{ti}_{seed}.csv", m.label));
                    write_atomic(&path, |w| {
                        write_trace_csv(&o.trace, timing, w).map_err(|e| e.to_string())
                    })?;
                }
                if let Err(e) = &result {
                    eprintln!("{} on {name} (seed {seed}): {e}", m.label);
                }
                rows.push(RunRow {
                    method: mi,
                    trajectory: name.clone(),
                    seed,
                    result,
                });
            }
        }
    }
    rows.sort_by(|x, y| (x.method, &x.trajectory, x.seed).cmp(&(y.method, &y.trajectory, y.seed)));

    write_atomic(&a.out_dir.join("runs.csv"), |w| {
        write_runs(&methods, &rows, timing, w).map_err(|e| e.to_string())
    })?;
    write_atomic(&a.out_dir.join("aggregate.csv"), |w| {
        write_aggregate(&methods, &rows, timing, w).map_err(|e| e.to_string())
    })?;

    let failures = rows.iter().filter(|r| r.result.is_err()).count();
    println!(
        "{} run(s), {failures} without a solution; results in {}",
        rows.len(),
        a.out_dir.display()
    );
    if failures > 0 {
        return Err(CliError::no_solution(format!(
            "{failures} run(s) found no solution"
        )));
    }
    Ok(())
}

fn compare_methods(frameworks: &[FrameworkArg], steps: &[usize]) -> Result<Vec<Method>, CliError> {
    let mut frameworks = frameworks.to_vec();
    frameworks.dedup();
    let mut steps = steps.to_vec();
    steps.dedup();
    if frameworks.is_empty() || steps.is_empty() {
        return Err(CliError::usage("need at least one framework and step size"));
    }
    let mut methods = Vec::new();
    for f in frameworks {
        let kind = FrameworkKind::from(f);
        if kind == FrameworkKind::GuidedAnytime && steps.len() > 1 {
            for &s in &steps {
                methods.push(Method {
                    label: format!("{}_s{s}", kind.name()),
                    kind,
                    s,
                });
            }
        } else {
            methods.push(Method {
                label: kind.name().to_string(),
                kind,
                s: steps[0],
            });
        }
    }
    Ok(methods)
}

fn summarize(outcome: &Result<RunOutcome, FrameworkError>) -> Result<(f64, usize, Cost), String> {
    match outcome {
        Ok(o) => Ok((
            o.trace.first().map_or(f64::NAN, |r| r.elapsed),
            o.stats.iterations.len(),
            o.solution.cost(),
        )),
        Err(e) => Err(e.to_string()),
    }
}

fn write_runs<W: Write>(
    methods: &[Method],
    rows: &[RunRow],
    timing: bool,
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUNS_HEADER.split(','))?;
    for r in rows {
        let label = methods[r.method].label.as_str();
        let seed = r.seed.to_string();
        match &r.result {
            Ok((first, iterations, cost)) => w.write_record([
                label,
                &r.trajectory,
                &seed,
                "ok",
                &time_field(*first, timing),
                &iterations.to_string(),
                &cost.reconfigs.to_string(),
                &format_float(cost.movement),
            ])?,
            Err(_) => {
                w.write_record([label, &r.trajectory, &seed, "no_solution", "", "", "", ""])?
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_aggregate<W: Write>(
    methods: &[Method],
    rows: &[RunRow],
    timing: bool,
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER.split(','))?;
    for (mi, m) in methods.iter().enumerate() {
        let mine: Vec<&RunRow> = rows.iter().filter(|r| r.method == mi).collect();
        let ok: Vec<(f64, Cost)> = mine
            .iter()
            .filter_map(|r| r.result.as_ref().ok().map(|&(t, _, c)| (t, c)))
            .collect();
        let failures = mine.len() - ok.len();
        let mut record = vec![
            m.label.clone(),
            mine.len().to_string(),
            failures.to_string(),
        ];
        if ok.is_empty() {
            record.extend(std::iter::repeat_n(String::new(), 7));
        } else {
            let n = ok.len() as f64;
            let mean_first = ok.iter().map(|(t, _)| t).sum::<f64>() / n;
            let best = ok.iter().map(|(_, c)| *c).min().expect("non-empty");
            let worst = ok.iter().map(|(_, c)| *c).max().expect("non-empty");
            let mean_reconfigs = ok.iter().map(|(_, c)| f64::from(c.reconfigs)).sum::<f64>() / n;
            let mean_movement = ok.iter().map(|(_, c)| c.movement).sum::<f64>() / n;
            record.extend([
                time_field(mean_first, timing),
                best.reconfigs.to_string(),
                format_float(best.movement),
                format_float(mean_reconfigs),
                format_float(mean_movement),
                worst.reconfigs.to_string(),
                format_float(worst.movement),
            ]);
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

fn time_field(secs: f64, timing: bool) -> String {
    if timing {
        format_float(secs)
    } else {
        String::new()
    }
}

impl RunArgs {
    fn budget(&self) -> Budget {
        match (self.budget_secs, self.budget_iters) {
            (None, None) => FrameworkConfig::default().budget,
            (secs, iters) => Budget {
                max_secs: secs,
                max_iterations: iters,
            },
        }
    }

    fn config(&self, s: usize, budget: Budget) -> Result<FrameworkConfig, CliError> {
        if budget.max_secs.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
            return Err(CliError::usage("--budget-secs must be positive"));
        }
        if budget.max_iterations == Some(0) {
            return Err(CliError::usage("--budget-iters must be positive"));
        }
        let cfg = FrameworkConfig {
            metric: self.metric.into(),
            allow_reconfig: self.allow_reconfig,
            m: self.m,
            delta_m: self.delta_m,
            m0: self.m0,
            m_d: self.md,
            s,
            delta: self.delta,
            eta: self.eta,
            budget,
            seed: self.seed,
            ik: IkSettings::default(),
        };
        cfg.validate().map_err(CliError::usage)?;
        Ok(cfg)
    }
}

/// A preset name, or else a path to a robot definition file.
fn resolve_robot(robot: &str) -> Result<KinematicChain, CliError> {
    if PRESET_NAMES.contains(&robot) {
        return preset(robot).map_err(CliError::load);
    }
    load_chain(robot).map_err(|e| {
        CliError::load(format!(
            "{robot}: {e} (presets: {})",
            PRESET_NAMES.join(", ")
        ))
    })
}

fn framework_error(e: FrameworkError) -> CliError {
    match e {
        FrameworkError::NoSolution { .. } => CliError::no_solution(e),
        FrameworkError::InvalidConfig(_) => CliError::usage(e),
        FrameworkError::Mismatch(_) => CliError::load(e),
        FrameworkError::Ik(_) => CliError::usage(e),
    }
}

/// Writes through a sibling temporary file and renames it into place, so
/// readers never observe a partially written file.
fn write_atomic(path: &Path, write: impl FnOnce(&mut fs::File) -> Result<(), String>) -> CliResult {
    let fail = |e: String| CliError::output(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| fail(e.to_string()))?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let mut file = fs::File::create(&tmp).map_err(|e| fail(e.to_string()))?;
    write(&mut file).map_err(fail)?;
    file.sync_all().map_err(|e| fail(e.to_string()))?;
    fs::rename(&tmp, path).map_err(|e| fail(e.to_string()))?;
    Ok(())
}
