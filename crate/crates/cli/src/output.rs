//! Versioned CSV tables. Every file starts with [`SCHEMA_LINE`], then a
//! header row; floats use the shortest representation that parses back to
//! the same value.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use npmc::skm::{SkmObservations, SkmTrajectory};

use crate::RunError;

pub const SCHEMA_LINE: &str = "# schema=v1";

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), RunError> {
    let mut file = File::create(path)?;
    writeln!(file, "{SCHEMA_LINE}")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_table`], checking the schema line and header.
pub fn read_table(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>, RunError> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    if first.trim_end() != SCHEMA_LINE {
        return Err(RunError::Format(format!("{}: missing `{SCHEMA_LINE}`", path.display())));
    }
    let mut r = csv::Reader::from_reader(reader);
    if r.headers()?.iter().ne(header.iter().copied()) {
        return Err(RunError::Format(format!("{}: unexpected header", path.display())));
    }
    Ok(r.records().collect::<Result<_, _>>()?)
}

pub const TRAJECTORY_HEADER: [&str; 3] = ["time", "x1", "x2"];
pub const OBSERVATION_HEADER: [&str; 3] = ["n", "y1", "y2"];

/// One row per event, framed by the initial state at 0 and the final state
/// at the horizon.
pub fn write_trajectory(path: &Path, traj: &SkmTrajectory) -> Result<(), RunError> {
    let row = |t: f64, x: [u64; 2]| vec![num(t), x[0].to_string(), x[1].to_string()];
    let mut rows = vec![row(0.0, traj.x0())];
    rows.extend(traj.times().iter().zip(traj.states()).map(|(t, x)| row(*t, *x)));
    rows.push(row(traj.horizon(), traj.final_state()));
    write_table(path, &TRAJECTORY_HEADER, &rows)
}

pub fn read_trajectory(path: &Path) -> Result<SkmTrajectory, RunError> {
    let records = read_table(path, &TRAJECTORY_HEADER)?;
    let parse = |r: &csv::StringRecord| -> Result<(f64, [u64; 2]), RunError> {
        let bad = || RunError::Format(format!("{}: malformed row {r:?}", path.display()));
        let t = r[0].parse().map_err(|_| bad())?;
        let x1 = r[1].parse().map_err(|_| bad())?;
        let x2 = r[2].parse().map_err(|_| bad())?;
        Ok((t, [x1, x2]))
    };
    let rows = records.iter().map(parse).collect::<Result<Vec<_>, _>>()?;
    if rows.len() < 2 {
        return Err(RunError::Format(format!("{}: needs initial and final rows", path.display())));
    }
    let (_, x0) = rows[0];
    let (horizon, last) = rows[rows.len() - 1];
    let events = &rows[1..rows.len() - 1];
    let traj = SkmTrajectory::new(
        x0,
        horizon,
        events.iter().map(|e| e.0).collect(),
        events.iter().map(|e| e.1).collect(),
    )?;
    if traj.final_state() != last {
        return Err(RunError::Format(format!("{}: final row disagrees with the events", path.display())));
    }
    Ok(traj)
}

pub fn write_observations(path: &Path, obs: &SkmObservations) -> Result<(), RunError> {
    let rows: Vec<Vec<String>> = obs
        .y
        .iter()
        .enumerate()
        .map(|(i, y)| vec![(i + 1).to_string(), num(y[0]), num(y[1])])
        .collect();
    write_table(path, &OBSERVATION_HEADER, &rows)
}
