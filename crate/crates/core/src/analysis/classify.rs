//! Executable version of the local classification of harmonic-Weyl
//! gradient solitons into four types.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::residuals::{soliton_residual, spec_frames};
use crate::curvature::{cotton_radial, d_components, ricci_spectrum, CurvatureError, FrameState};
use crate::metric::SolitonSpec;

/// Fewest samples a classification is allowed to rest on.
pub const MIN_CLASSIFY_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LocalType {
    #[serde(rename = "type_i_einstein")]
    TypeIEinstein,
    #[serde(rename = "type_ii")]
    TypeII,
    #[serde(rename = "type_iii")]
    TypeIII,
    #[serde(rename = "type_iv_D_flat")]
    TypeIVDFlat,
    #[serde(rename = "non_soliton")]
    NonSoliton,
    #[serde(rename = "non_harmonic")]
    NonHarmonic,
}

impl LocalType {
    pub fn name(self) -> &'static str {
        match self {
            LocalType::TypeIEinstein => "type_i_einstein",
            LocalType::TypeII => "type_ii",
            LocalType::TypeIII => "type_iii",
            LocalType::TypeIVDFlat => "type_iv_D_flat",
            LocalType::NonSoliton => "non_soliton",
            LocalType::NonHarmonic => "non_harmonic",
        }
    }
}

impl fmt::Display for LocalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Predicate {
    pub name: &'static str,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub local_type: LocalType,
    /// Every predicate evaluated on the way, in decision order.
    pub predicates: Vec<Predicate>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("classification needs at least {MIN_CLASSIFY_POINTS} samples, got {0}")]
    TooFewPoints(usize),
    #[error("ambiguous classification: {}", fmt_predicates(.0))]
    Ambiguous(Vec<Predicate>),
}

fn fmt_predicates(p: &[Predicate]) -> String {
    p.iter()
        .map(|x| format!("{}={}", x.name, x.holds))
        .collect::<Vec<_>>()
        .join(", ")
}

struct Samples<'a> {
    frames: &'a [FrameState],
    tol: f64,
}

impl Samples<'_> {
    fn all(&self, pred: impl Fn(&FrameState) -> bool) -> bool {
        self.frames.iter().all(pred)
    }

    fn rho(&self) -> f64 {
        self.frames[0].rho
    }

    fn soliton(&self) -> bool {
        self.all(|st| soliton_residual(st, self.tol).iter().all(|r| r.passed()))
    }

    fn harmonic_weyl(&self) -> bool {
        self.all(|st| cotton_radial(st).iter().all(|c| c.abs() <= self.tol))
    }

    fn constant_potential(&self) -> bool {
        let max_f = self.frames.iter().map(|st| st.f.v().abs()).fold(0.0, f64::max);
        let max_fp = self.frames.iter().map(|st| st.fprime().abs()).fold(0.0, f64::max);
        max_fp <= self.tol * (1.0 + max_f)
    }

    /// Spectrum inside `{0, rho}` with `rho != 0` and `f'' = rho`.
    fn gaussian_split(&self) -> bool {
        let rho = self.rho();
        if rho.abs() <= self.tol {
            return false;
        }
        self.all(|st| {
            let spec = ricci_spectrum(st);
            let eq = self.tol * (1.0 + spec.spectral_radius().max(rho.abs()));
            spec.values()
                .iter()
                .all(|&(v, _)| v.abs() <= eq || (v - rho).abs() <= eq)
                && (st.f.d2() - rho).abs() <= self.tol
        })
    }

    /// Steady, two fibers, nonconstant `R = -4(n-3)^2/((n-1)^2 s^2)`.
    fn steady_power_profile(&self) -> bool {
        if self.rho().abs() > self.tol || self.frames.iter().any(|st| st.m() != 2) {
            return false;
        }
        let nonconstant = self
            .frames
            .iter()
            .any(|st| ricci_spectrum(st).trace().d1().abs() > self.tol);
        nonconstant
            && self.all(|st| {
                let n = st.nf();
                let target = -4.0 * (n - 3.0).powi(2) / ((n - 1.0).powi(2) * st.s * st.s);
                let r = ricci_spectrum(st).trace().v();
                (r - target).abs() <= self.tol * (1.0 + target.abs())
            })
    }

    fn fiber_eigenvalues_equal(&self) -> bool {
        self.all(|st| {
            let spec = ricci_spectrum(st);
            let eq = self.tol * (1.0 + spec.spectral_radius());
            let vals: Vec<f64> = spec.lambdas.iter().map(|l| l.v()).collect();
            vals.iter().all(|a| vals.iter().all(|b| (a - b).abs() <= eq))
        })
    }

    fn d_flat(&self) -> bool {
        self.all(|st| d_components(st).iter().all(|d| d.abs() <= self.tol))
    }
}

/// Decision procedure over a sample set, in this order: soliton, harmonic
/// Weyl, constant potential, `{0, rho}` spectrum, steady power profile,
/// single fiber eigenvalue with `D = 0`.
pub fn classify_frames(frames: &[FrameState], tol: f64) -> Result<Classification, ClassifyError> {
    if frames.len() < MIN_CLASSIFY_POINTS {
        return Err(ClassifyError::TooFewPoints(frames.len()));
    }
    let sm = Samples { frames, tol };
    let mut predicates = Vec::new();
    let mut decide = |name: &'static str, holds: bool| {
        predicates.push(Predicate { name, holds });
        holds
    };
    let local_type = if !decide("soliton", sm.soliton()) {
        Some(LocalType::NonSoliton)
    } else if !decide("harmonic_weyl", sm.harmonic_weyl()) {
        Some(LocalType::NonHarmonic)
    } else if decide("constant_potential", sm.constant_potential()) {
        Some(LocalType::TypeIEinstein)
    } else if decide("spectrum_zero_rho", sm.gaussian_split()) {
        Some(LocalType::TypeII)
    } else if decide("steady_power_profile", sm.steady_power_profile()) {
        Some(LocalType::TypeIII)
    } else if decide("fiber_eigenvalues_equal", sm.fiber_eigenvalues_equal()) & decide("d_flat", sm.d_flat()) {
        Some(LocalType::TypeIVDFlat)
    } else {
        None
    };
    match local_type {
        Some(local_type) => Ok(Classification {
            local_type,
            predicates,
        }),
        None => Err(ClassifyError::Ambiguous(predicates)),
    }
}

pub fn classify_entry(
    spec: &SolitonSpec,
    grid_points: usize,
    tol: f64,
) -> Result<Result<Classification, ClassifyError>, CurvatureError> {
    Ok(classify_frames(&spec_frames(spec, grid_points)?, tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicCurvature {
    pub passed: bool,
    pub max_scalar_derivative: f64,
    pub max_cotton: f64,
}

/// Harmonic curvature means constant `R` together with vanishing Cotton.
pub fn harmonic_curvature_frames(frames: &[FrameState], tol: f64) -> HarmonicCurvature {
    let mut max_rp: f64 = 0.0;
    let mut max_c: f64 = 0.0;
    for st in frames {
        max_rp = max_rp.max(ricci_spectrum(st).trace().d1().abs());
        for c in cotton_radial(st) {
            max_c = max_c.max(c.abs());
        }
    }
    HarmonicCurvature {
        passed: max_rp <= tol && max_c <= tol,
        max_scalar_derivative: max_rp,
        max_cotton: max_c,
    }
}

pub fn harmonic_curvature_check(
    spec: &SolitonSpec,
    grid_points: usize,
    tol: f64,
) -> Result<HarmonicCurvature, CurvatureError> {
    Ok(harmonic_curvature_frames(&spec_frames(spec, grid_points)?, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_entry, CatalogId};

    fn kind(id: CatalogId) -> LocalType {
        let spec = catalog_entry(id).unwrap();
        classify_entry(&spec, 32, 1e-9).unwrap().unwrap().local_type
    }

    #[test]
    fn catalog_types() {
        assert_eq!(kind(CatalogId::type_iii(6)), LocalType::TypeIII);
        assert_eq!(kind(CatalogId::gaussian(4, 1.0)), LocalType::TypeII);
        assert_eq!(kind(CatalogId::type_ii(6, 2, 1.0)), LocalType::TypeII);
        assert_eq!(kind(CatalogId::einstein_product(5, -1.0)), LocalType::TypeII);
        assert_eq!(kind(CatalogId::einstein_product(5, 0.0)), LocalType::TypeIEinstein);
        assert_eq!(kind(CatalogId::round_cone(4)), LocalType::TypeIEinstein);
    }

    #[test]
    fn too_few_points() {
        let spec = catalog_entry(CatalogId::type_iii(6)).unwrap();
        assert_eq!(
            classify_entry(&spec, 8, 1e-9).unwrap(),
            Err(ClassifyError::TooFewPoints(8))
        );
    }

    #[test]
    fn harmonic_curvature() {
        let hc = |id| harmonic_curvature_check(&catalog_entry(id).unwrap(), 64, 1e-9).unwrap();
        assert!(hc(CatalogId::einstein_product(6, 1.0)).passed);
        assert!(hc(CatalogId::round_cone(4)).passed);
        assert!(!hc(CatalogId::type_iii(6)).passed);
    }
}
