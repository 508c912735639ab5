use std::io::Write;

use super::{AnytimeTrace, Solution};
use crate::trajectory::{format_float, Trajectory, TrajectoryError};

/// Solution CSV columns: `t`, one column per joint (`q1`, `q2`, ...), then
/// `reconfig` (1 on the first configuration after a reconfiguration jump).
pub const SOLUTION_HEADER_PREFIX: &str = "t";

pub const TRACE_HEADER: &str = "iteration,elapsed_s,reconfigs,movement_rad";

pub fn write_solution_csv<W: Write>(
    traj: &Trajectory,
    solution: &Solution,
    out: W,
) -> Result<(), TrajectoryError> {
    let dof = solution.configs.first().map_or(0, |q| q.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![SOLUTION_HEADER_PREFIX.to_string()];
    header.extend((1..=dof).map(|j| format!("q{j}")));
    header.push("reconfig".into());
    w.write_record(&header)?;
    for (i, q) in solution.configs.iter().enumerate() {
        let mut row = vec![format_float(traj.time(i))];
        row.extend(q.iter().map(|&v| format_float(v)));
        row.push(u8::from(solution.reconfig[i]).to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes one row per trace record. With `include_elapsed == false` the
/// `elapsed_s` column is left empty so that repeated runs produce identical
/// files.
pub fn write_trace_csv<W: Write>(
    trace: &AnytimeTrace,
    include_elapsed: bool,
    out: W,
) -> Result<(), TrajectoryError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER.split(','))?;
    for r in trace.records() {
        w.write_record([
            r.iteration.to_string(),
            if include_elapsed {
                format_float(r.elapsed)
            } else {
                String::new()
            },
            r.cost.reconfigs.to_string(),
            format_float(r.cost.movement),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
