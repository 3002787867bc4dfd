//! Trajectory tables as CSV, one row per (label, sample).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::lagrangian::Trajectory;

/// One CSV row. `S_weber` is in units of `hbar`; angles are the continuous
/// integration coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub label: usize,
    pub t: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub qdot1: f64,
    pub qdot2: f64,
    pub qdot3: f64,
    pub thetadot1: f64,
    pub thetadot2: f64,
    pub thetadot3: f64,
    #[serde(rename = "S_weber")]
    pub s_weber: f64,
    pub log_rho: f64,
    pub flags: String,
}

pub fn trajectory_rows(trajs: &[Trajectory], k: &PhysicalConstants) -> Vec<TrajectoryRow> {
    let mut rows = Vec::new();
    for (label, tr) in trajs.iter().enumerate() {
        let flags = tr.flags.to_string();
        for j in 0..tr.len() {
            let a = tr.theta[j].to_array();
            rows.push(TrajectoryRow {
                label,
                t: tr.times[j],
                q1: tr.q[j].x,
                q2: tr.q[j].y,
                q3: tr.q[j].z,
                theta1: a[0],
                theta2: a[1],
                theta3: a[2],
                qdot1: tr.qdot[j].x,
                qdot2: tr.qdot[j].y,
                qdot3: tr.qdot[j].z,
                thetadot1: tr.thetadot[j].x,
                thetadot2: tr.thetadot[j].y,
                thetadot3: tr.thetadot[j].z,
                s_weber: tr.s_weber[j] / k.hbar,
                log_rho: tr.log_rho[j],
                flags: flags.clone(),
            });
        }
    }
    rows
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn write_rows<W: std::io::Write>(out: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record([
        "label",
        "t",
        "q1",
        "q2",
        "q3",
        "theta1",
        "theta2",
        "theta3",
        "qdot1",
        "qdot2",
        "qdot3",
        "thetadot1",
        "thetadot2",
        "thetadot3",
        "S_weber",
        "log_rho",
        "flags",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory_table(path: &Path, trajs: &[Trajectory], k: &PhysicalConstants) -> Result<()> {
    write_rows(std::fs::File::create(path)?, &trajectory_rows(trajs, k))
}

pub fn read_trajectory_table(path: &Path) -> Result<Vec<TrajectoryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}
