//! Experiment drivers. Each writes its tables into the output directory and
//! returns the contracts and summary recorded in the manifest.

mod inequalities;
mod ldp;
mod paths;

use logldp_core::io::{write_trajectory_binary, write_trajectory_csv};
use logldp_core::Trajectory;

use crate::config::{Experiment, Resolved, TrajectoryFormat};
use crate::error::CliError;
use crate::manifest::{Contract, Failure, OutputDir};

pub use inequalities::{random_field, InequalityRow};
pub use ldp::{ConditionARow, ConditionBRow, ControlRow, McRow};
pub use paths::{ConvergenceDtRow, ConvergenceNRow, PhiRow};

/// What an experiment reports back for the manifest.
#[derive(Debug, Default)]
pub struct Outcome {
    pub contracts: Vec<Contract>,
    pub summary: serde_json::Value,
    /// Set when results were written but the run must still be reported as failed.
    pub failure: Option<Failure>,
}

pub fn run(res: &Resolved, out: &mut OutputDir) -> Result<Outcome, CliError> {
    match res.experiment {
        Experiment::Simulate => paths::simulate(res, out),
        Experiment::Skeleton => paths::skeleton(res, out),
        Experiment::ConvergenceStudy => paths::convergence(res, out),
        Experiment::RateFunction => ldp::rate_function(res, out),
        Experiment::McEstimate => ldp::mc_estimate(res, out),
        Experiment::ConditionA => ldp::condition_a(res, out),
        Experiment::ConditionB => ldp::condition_b(res, out),
        Experiment::VerifyInequalities => inequalities::verify(res, out),
    }
}

/// Dump `traj` as `<stem>.csv` and/or `<stem>.bin`.
fn dump_trajectory(
    out: &mut OutputDir,
    stem: &str,
    traj: &Trajectory,
    format: TrajectoryFormat,
    stride: usize,
) -> Result<(), CliError> {
    let traj = if stride > 1 {
        traj.subsample(stride)
    } else {
        traj.clone()
    };
    if format.csv() {
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf)?;
        out.write(&format!("{stem}.csv"), &buf)?;
    }
    if format.binary() {
        let mut buf = Vec::new();
        write_trajectory_binary(&traj, &mut buf)?;
        out.write(&format!("{stem}.bin"), &buf)?;
    }
    Ok(())
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}
