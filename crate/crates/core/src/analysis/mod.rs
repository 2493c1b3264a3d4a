//! Residual checks, identity suites, the obstruction search and the local
//! type classifier.
//!
//! Everything here works on [`crate::FrameState`] samples, so closed-form specs and
//! ODE trajectories share one code path.

mod classify;
mod obstruction;
mod residuals;
mod two_eigen;

pub use classify::{
    classify_entry, classify_frames, harmonic_curvature_check, harmonic_curvature_frames,
    Classification, ClassifyError, HarmonicCurvature, LocalType,
};
pub use obstruction::{
    three_eigen_obstruction, ObstructionCertificate, ObstructionConfig, ObstructionError, SampleOutcome,
    test_tuple,
};
pub use residuals::{
    bach_flat_check, check_frames, check_spec, d_tensor, hamilton_residuals, harmonic_weyl_residuals,
    point_residuals, soliton_residual, spec_frames, CheckReport,
};
pub use two_eigen::{two_eigen_identities, TwoEigenError, TwoEigenReport, TwoEigenState};

use serde::Serialize;

/// Default absolute tolerance for closed-form specs.
pub const CLOSED_FORM_TOL: f64 = 1e-9;
/// Default absolute tolerance for ODE trajectories.
pub const TRAJECTORY_TOL: f64 = 1e-6;
/// Minimum separation of the two connection coefficients `X`, `Y`.
pub const DISTINCT_DELTA: f64 = 1e-9;

/// Assumption carried by every report: the all-fiber Cotton components are
/// taken to vanish by frame symmetry and are not computed.
pub const FIBER_COTTON_ASSUMPTION: &str =
    "C_{a alpha beta} with all indices tangent to fibers assumed zero (unverified)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Not applicable at any sample, or precondition not met.
    Skipped,
    /// Reported value without a pass/fail verdict.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub name: String,
    /// Signed value at the worst sample.
    pub value: Option<f64>,
    /// Sample coordinate of `value`.
    pub at: Option<f64>,
    pub tolerance: f64,
    pub status: Status,
    pub note: Option<String>,
}

impl Residual {
    pub fn checked(name: impl Into<String>, value: f64, at: f64, tolerance: f64) -> Self {
        let status = if value.abs() <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        Residual {
            name: name.into(),
            value: Some(value),
            at: Some(at),
            tolerance,
            status,
            note: None,
        }
    }

    pub fn info(name: impl Into<String>, value: f64, at: f64, tolerance: f64) -> Self {
        Residual {
            status: Status::Info,
            ..Self::checked(name, value, at, tolerance)
        }
    }

    pub fn skipped(name: impl Into<String>, tolerance: f64, note: impl Into<String>) -> Self {
        Residual {
            name: name.into(),
            value: None,
            at: None,
            tolerance,
            status: Status::Skipped,
            note: Some(note.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn abs(&self) -> f64 {
        self.value.map_or(0.0, f64::abs)
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResidualTable {
    pub entries: Vec<Residual>,
}

impl ResidualTable {
    pub fn push(&mut self, r: Residual) {
        self.entries.push(r);
    }

    pub fn get(&self, name: &str) -> Option<&Residual> {
        self.entries.iter().find(|r| r.name == name)
    }

    /// Entries whose name starts with `prefix`.
    pub fn family<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Residual> + 'a {
        self.entries.iter().filter(move |r| r.name.starts_with(prefix))
    }

    /// Largest absolute value in a family; skipped entries count as 0.
    pub fn family_max(&self, prefix: &str) -> f64 {
        self.family(prefix).map(Residual::abs).fold(0.0, f64::max)
    }

    /// True when no entry failed.
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|r| r.status != Status::Fail)
    }

    pub fn failures(&self) -> Vec<&Residual> {
        self.entries.iter().filter(|r| r.status == Status::Fail).collect()
    }

    /// Merges per-sample tables by name, keeping the worst value. An entry
    /// skipped at some samples keeps a note with the count.
    pub fn merge_worst(tables: &[ResidualTable]) -> ResidualTable {
        let mut out: Vec<(Residual, usize)> = Vec::new();
        for table in tables {
            for r in &table.entries {
                match out.iter_mut().find(|(x, _)| x.name == r.name) {
                    None => out.push((r.clone(), usize::from(r.status == Status::Skipped))),
                    Some((cur, skips)) => {
                        if r.status == Status::Skipped {
                            *skips += 1;
                        } else if cur.status == Status::Skipped || r.abs() > cur.abs() {
                            *cur = r.clone();
                        }
                    }
                }
            }
        }
        let total = tables.len();
        ResidualTable {
            entries: out
                .into_iter()
                .map(|(mut r, skips)| {
                    if skips > 0 && r.status != Status::Skipped {
                        let why = r.note.take().map(|n| format!("; {n}")).unwrap_or_default();
                        r.note = Some(format!("skipped at {skips} of {total} samples{why}"));
                    }
                    r
                })
                .collect(),
        }
    }
}
