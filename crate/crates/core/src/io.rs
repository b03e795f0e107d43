//! CSV formats for trajectories and refinement tables.
//!
//! Every real is written as `{:.16e}`, 17 significant digits, so values
//! round-trip exactly and reruns produce byte-identical files.
//!
//! `trajectory.csv` has the columns `n, t_n, U_0 .. U_{d-1}, xi_0 .. xi_{d-1}, gap_n, energy_n`.

use std::io::{Read, Write};

use crate::diagnostics::RefinementTable;
use crate::error::{Error, Result};
use crate::scheme::DiscreteTrajectory;
use crate::state::StateVector;

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(format_real).unwrap_or_default()
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Format(e.to_string())
}

pub fn trajectory_header(dim: usize) -> Vec<String> {
    let mut h = vec!["n".to_string(), "t_n".to_string()];
    h.extend((0..dim).map(|i| format!("U_{i}")));
    h.extend((0..dim).map(|i| format!("xi_{i}")));
    h.push("gap_n".into());
    h.push("energy_n".into());
    h
}

pub fn write_trajectory<W: Write>(traj: &DiscreteTrajectory, out: W) -> Result<()> {
    let dim = traj.states.first().map_or(0, |s| s.dim());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(dim)).map_err(csv_err)?;
    for n in 0..traj.len() {
        let mut rec = vec![n.to_string(), format_real(traj.time(n))];
        rec.extend(traj.states[n].iter().map(|&x| format_real(x)));
        rec.extend(traj.multipliers[n].iter().map(|&x| format_real(x)));
        rec.push(format_real(traj.gaps[n]));
        rec.push(format_real(traj.energies[n]));
        w.write_record(rec).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;
    Ok(())
}

/// Columns of a trajectory file, as read back.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub multipliers: Vec<StateVector>,
    pub gaps: Vec<f64>,
    pub energies: Vec<f64>,
}

impl TrajectoryRecord {
    /// Step size, from the first two nodes.
    pub fn tau(&self) -> Option<f64> {
        (self.times.len() >= 2).then(|| self.times[1] - self.times[0])
    }
}

pub fn read_trajectory<R: Read>(input: R) -> Result<TrajectoryRecord> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let cols = header.len();
    if cols < 6 || (cols - 4) % 2 != 0 {
        return Err(Error::Format(format!("unexpected column count {cols}")));
    }
    let dim = (cols - 4) / 2;
    let expected = trajectory_header(dim);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Format(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rec = TrajectoryRecord {
        times: Vec::new(),
        states: Vec::new(),
        multipliers: Vec::new(),
        gaps: Vec::new(),
        energies: Vec::new(),
    };
    for (row, result) in r.records().enumerate() {
        let record = result.map_err(csv_err)?;
        let parse = |i: usize| -> Result<f64> {
            record[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("row {row}, column {}: {e}", expected[i])))
        };
        let n: usize = record[0].trim().parse().map_err(|e| Error::Format(format!("row {row}: {e}")))?;
        if n != row {
            return Err(Error::Format(format!("row {row} has step index {n}")));
        }
        rec.times.push(parse(1)?);
        rec.states.push(StateVector::new((0..dim).map(|i| parse(2 + i)).collect::<Result<_>>()?)?);
        rec.multipliers.push(StateVector::new((0..dim).map(|i| parse(2 + dim + i)).collect::<Result<_>>()?)?);
        rec.gaps.push(parse(2 + 2 * dim)?);
        rec.energies.push(parse(3 + 2 * dim)?);
    }
    if rec.times.is_empty() {
        return Err(Error::Format("no rows".into()));
    }
    Ok(rec)
}

pub fn write_refinement<W: Write>(table: &RefinementTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "tau",
        "steps",
        "sup_distance_next",
        "sup_distance_reference",
        "exact_error",
        "energy_identity_defect",
        "dissipation_integral",
        "dissipation_difference",
        "error",
    ])
    .map_err(csv_err)?;
    for row in &table.rows {
        w.write_record([
            format_real(row.tau),
            row.steps.to_string(),
            opt(row.sup_distance_next),
            opt(row.sup_distance_reference),
            opt(row.exact_error),
            opt(row.energy_identity_defect),
            opt(row.dissipation_integral),
            opt(row.dissipation_difference),
            row.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;
    Ok(())
}
