//! Multiply warped product soliton models
//! `g = ds^2 + sum_j h_j(s)^2 g_j` with potential `f(s)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ParseError};
use crate::jet::JetError;

/// Number of grid points used when checking warp positivity.
pub const VALIDATION_GRID: usize = 256;

/// Domain used by catalog entries; it keeps away from the cone tip at `s = 0`.
pub const DEFAULT_DOMAIN: [f64; 2] = [0.1, 10.0];

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("dimension mismatch: n = {n} but 1 + sum of fiber dimensions = {total}")]
    DimensionMismatch { n: usize, total: usize },
    #[error("total dimension must be at least 4, got {0}")]
    DimensionTooSmall(usize),
    #[error("{warps} warping functions given for {fibers} fibers")]
    WarpCount { warps: usize, fibers: usize },
    #[error("fiber {fiber} has dimension 0")]
    ZeroDimFiber { fiber: usize },
    #[error("fiber {fiber} is one-dimensional and must have k = 0, got {k}")]
    LineFiberCurvature { fiber: usize, k: f64 },
    #[error("empty domain [{0}, {1}]")]
    EmptyDomain(f64, f64),
    #[error("warping function {fiber} is not positive at s = {s} (value {value})")]
    NonPositiveWarp { fiber: usize, s: f64, value: f64 },
    #[error("cannot evaluate {what} at s = {s}: {source}")]
    Eval {
        what: String,
        s: f64,
        #[source]
        source: JetError,
    },
    #[error("expression error in {what}: {source}")]
    Parse {
        what: String,
        #[source]
        source: ParseError,
    },
    #[error("invalid spec file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("catalog constraint violated: {0}")]
    Constraint(String),
}

/// One Einstein fiber of dimension `dim` with Einstein constant `(dim - 1) k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub dim: usize,
    pub k: f64,
    /// Fiber curvature tensor is `k (δδ - δδ)`; needed for full Weyl blocks.
    #[serde(default)]
    pub space_form: bool,
}

impl FiberSpec {
    pub fn new(dim: usize, k: f64, space_form: bool) -> Self {
        FiberSpec { dim, k, space_form }
    }

    /// Einstein constant `(r - 1) k` of the unwarped fiber metric.
    pub fn einstein_constant(&self) -> f64 {
        (self.dim as f64 - 1.0) * self.k
    }

    /// A one-dimensional fiber is trivially a space form.
    pub fn has_space_form_curvature(&self) -> bool {
        self.space_form || self.dim == 1
    }
}

/// Closed-form soliton model. The JSON layout is the spec file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonSpec {
    pub n: usize,
    pub rho: f64,
    pub domain: [f64; 2],
    pub fibers: Vec<FiberSpec>,
    pub warps: Vec<Expr>,
    pub potential: Expr,
}

impl SolitonSpec {
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn fiber_dim_total(&self) -> usize {
        self.fibers.iter().map(|f| f.dim).sum()
    }

    /// `count` equally spaced points covering the closed domain.
    pub fn grid(&self, count: usize) -> Vec<f64> {
        uniform_grid(self.domain[0], self.domain[1], count)
    }

    pub fn all_space_forms(&self) -> bool {
        self.fibers.iter().all(FiberSpec::has_space_form_curvature)
    }
}

pub fn uniform_grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (a + b)],
        _ => {
            let step = (b - a) / (count - 1) as f64;
            (0..count)
                .map(|i| if i + 1 == count { b } else { a + step * i as f64 })
                .collect()
        }
    }
}

/// Checks dimension bookkeeping, fiber constraints and warp positivity.
pub fn build_metric(spec: SolitonSpec) -> Result<SolitonSpec, SpecError> {
    let total = 1 + spec.fiber_dim_total();
    if total != spec.n {
        return Err(SpecError::DimensionMismatch { n: spec.n, total });
    }
    if spec.n < 4 {
        return Err(SpecError::DimensionTooSmall(spec.n));
    }
    if spec.warps.len() != spec.fibers.len() {
        return Err(SpecError::WarpCount {
            warps: spec.warps.len(),
            fibers: spec.fibers.len(),
        });
    }
    for (j, fib) in spec.fibers.iter().enumerate() {
        if fib.dim == 0 {
            return Err(SpecError::ZeroDimFiber { fiber: j + 1 });
        }
        if fib.dim == 1 && fib.k != 0.0 {
            return Err(SpecError::LineFiberCurvature {
                fiber: j + 1,
                k: fib.k,
            });
        }
    }
    let [a, b] = spec.domain;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(SpecError::EmptyDomain(a, b));
    }
    for s in spec.grid(VALIDATION_GRID) {
        for (j, h) in spec.warps.iter().enumerate() {
            let value = h.value(s).map_err(|source| SpecError::Eval {
                what: format!("warp {}", j + 1),
                s,
                source,
            })?;
            if !(value > 0.0) {
                return Err(SpecError::NonPositiveWarp {
                    fiber: j + 1,
                    s,
                    value,
                });
            }
        }
        spec.potential.value(s).map_err(|source| SpecError::Eval {
            what: "potential".into(),
            s,
            source,
        })?;
    }
    Ok(spec)
}

pub(crate) fn parse_named(what: &str, text: &str) -> Result<Expr, SpecError> {
    crate::expr::parse_expr(text).map_err(|source| SpecError::Parse {
        what: what.to_string(),
        source,
    })
}
