//! Monte Carlo estimators and experiment drivers.
//!
//! Paths are farmed out with rayon but collected in index order, and every
//! reduction goes through [`stats::pairwise_sum`], so results do not depend
//! on the thread count.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;

pub mod convergence;
pub mod ledger;
pub mod moments;
pub mod stats;
pub mod stopping;
pub mod verifier;

pub use convergence::{convergence_study, coupled_error, ConvergenceReport, ConvergenceSpec};
pub use ledger::{energy_ledger, EnergyLedger};
pub use moments::{estimate_moments, MomentSpec, MomentTable};
pub use stopping::{stopping_time_study, StoppingReport, StoppingSpec};
pub use verifier::{verify_hypotheses, verify_inequalities, FieldSampler, VerifierReport};

/// Runs `f(0), …, f(n-1)` in parallel and returns the results in index order.
pub fn farm<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Version tag written in the header row of every CSV report.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// One line of a CSV report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub experiment: String,
    pub parameter: String,
    pub estimate: f64,
    pub stderr: f64,
    pub pass: bool,
}

impl ReportRow {
    pub fn new(experiment: &str, parameter: impl Into<String>, estimate: f64, stderr: f64, pass: bool) -> Self {
        ReportRow {
            experiment: experiment.to_string(),
            parameter: parameter.into(),
            estimate,
            stderr,
            pass,
        }
    }
}

/// Writes rows with the fixed header
/// `experiment,parameter,estimate,stderr,pass,schema_version`.
pub fn write_csv<W: Write>(rows: &[ReportRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["experiment", "parameter", "estimate", "stderr", "pass", "schema_version"])
        .map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.experiment.clone(),
            r.parameter.clone(),
            format!("{:e}", r.estimate),
            format!("{:e}", r.stderr),
            r.pass.to_string(),
            CSV_SCHEMA_VERSION.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Io(std::io::Error::other(e))
}

/// A finished experiment: its CSV rows, overall verdict, and full JSON body.
pub trait Report: Serialize {
    fn rows(&self) -> Vec<ReportRow>;
    fn pass(&self) -> bool;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn farm_keeps_order() {
        let v = farm(100, |i| i * i);
        assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn csv_header_and_quoting() {
        let rows = vec![ReportRow::new("moments", "m=1,p=1", 1.5, 0.25, true)];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "experiment,parameter,estimate,stderr,pass,schema_version");
        assert_eq!(lines.next().unwrap(), "moments,\"m=1,p=1\",1.5e0,2.5e-1,true,1");
    }
}
