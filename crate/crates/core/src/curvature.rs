//! Adapted-frame curvature of a multiply warped product.
//!
//! Frame index `1` is the radial direction `d/ds`; every fiber `j` contributes
//! `r_j` frame vectors that are indistinguishable for all quantities here, so
//! tensors are stored block-wise. Fiber indices in the public API are 0-based.

use thiserror::Error;

use crate::jet::{Jet2, Jet3, Jet4, JetError};
use crate::metric::{FiberSpec, SolitonSpec};

#[derive(Debug, Error)]
pub enum CurvatureError {
    #[error("cannot evaluate {what} at s = {s}: {source}")]
    Eval {
        what: String,
        s: f64,
        #[source]
        source: JetError,
    },
    #[error("s = {s} lies outside the domain [{a}, {b}]")]
    OutsideDomain { s: f64, a: f64, b: f64 },
    #[error("warping function {fiber} is not positive at s = {s} (value {value})")]
    NonPositiveWarp { fiber: usize, s: f64, value: f64 },
    #[error("fiber {fiber} is not a space form; its intra-fiber curvature is undetermined")]
    NotSpaceForm { fiber: usize },
    #[error("non-finite curvature at s = {0}")]
    NonFinite(f64),
}

/// Per-fiber frame data at a fixed `s`.
#[derive(Debug, Clone, Copy)]
pub struct FiberFrame {
    pub r: usize,
    pub k: f64,
    pub space_form: bool,
    pub h: Jet4,
    /// `h'/h`.
    pub xi: Jet3,
}

impl FiberFrame {
    fn rf(&self) -> f64 {
        self.r as f64
    }

    /// `(r - 1) k / h^2` as a jet.
    fn fiber_ricci(&self) -> Jet2 {
        let h: Jet2 = self.h.truncate();
        (h.square().recip_unchecked()).scale(self.einstein_constant())
    }

    fn einstein_constant(&self) -> f64 {
        (self.rf() - 1.0) * self.k
    }

    /// `xi' + xi^2 = h''/h`.
    pub fn radial_curvature(&self) -> Jet2 {
        let xi: Jet2 = self.xi.truncate();
        self.xi.derivative::<2>() + xi.square()
    }

    fn has_space_form_curvature(&self) -> bool {
        self.space_form || self.r == 1
    }
}

#[derive(Debug, Clone)]
pub struct FrameState {
    pub s: f64,
    pub n: usize,
    pub rho: f64,
    pub fibers: Vec<FiberFrame>,
    pub f: Jet3,
    /// `sum_j r_j xi_j`.
    pub s1: Jet3,
    /// `sum_j r_j xi_j^2`.
    pub s2: Jet3,
}

impl FrameState {
    /// Assembles a frame state from warping and potential jets.
    pub fn from_jets(
        s: f64,
        n: usize,
        rho: f64,
        fibers: &[FiberSpec],
        warps: &[Jet4],
        f: Jet3,
    ) -> Result<Self, CurvatureError> {
        let mut frames = Vec::with_capacity(fibers.len());
        for (j, (spec, h)) in fibers.iter().zip(warps).enumerate() {
            if !(h.v() > 0.0) {
                return Err(CurvatureError::NonPositiveWarp {
                    fiber: j + 1,
                    s,
                    value: h.v(),
                });
            }
            let xi = h.derivative::<3>() / h.truncate::<3>();
            frames.push(FiberFrame {
                r: spec.dim,
                k: spec.k,
                space_form: spec.space_form,
                h: *h,
                xi,
            });
        }
        let mut s1 = Jet3::constant(0.0);
        let mut s2 = Jet3::constant(0.0);
        for fr in &frames {
            s1 = s1 + fr.xi.scale(fr.rf());
            s2 = s2 + fr.xi.square().scale(fr.rf());
        }
        let st = FrameState {
            s,
            n,
            rho,
            fibers: frames,
            f,
            s1,
            s2,
        };
        if !st.is_finite() {
            return Err(CurvatureError::NonFinite(s));
        }
        Ok(st)
    }

    pub fn m(&self) -> usize {
        self.fibers.len()
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn fprime(&self) -> f64 {
        self.f.d1()
    }

    pub fn all_space_forms(&self) -> bool {
        self.fibers.iter().all(FiberFrame::has_space_form_curvature)
    }

    fn is_finite(&self) -> bool {
        self.f.is_finite()
            && self.s1.is_finite()
            && self.s2.is_finite()
            && self.fibers.iter().all(|fr| fr.h.is_finite() && fr.xi.is_finite())
    }
}

/// Frame state of a closed-form spec at `s`.
pub fn connection_state(spec: &SolitonSpec, s: f64) -> Result<FrameState, CurvatureError> {
    let [a, b] = spec.domain;
    let slack = 1e-12 * (1.0 + a.abs().max(b.abs()));
    if !(s >= a - slack && s <= b + slack) {
        return Err(CurvatureError::OutsideDomain { s, a, b });
    }
    let eval_err = |what: String| move |source| CurvatureError::Eval { what, s, source };
    let warps = spec
        .warps
        .iter()
        .enumerate()
        .map(|(j, w)| w.eval_jet::<4>(s).map_err(eval_err(format!("warp {}", j + 1))))
        .collect::<Result<Vec<_>, _>>()?;
    let f = spec
        .potential
        .eval_jet::<3>(s)
        .map_err(eval_err("potential".into()))?;
    FrameState::from_jets(s, spec.n, spec.rho, &spec.fibers, &warps, f)
}

/// Sectional curvature blocks of the Riemann tensor in the adapted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannBlocks {
    /// `R_{1a1a} = -(xi' + xi^2)` per fiber.
    pub radial: Vec<f64>,
    /// `R_{a alpha a alpha} = -xi_j xi_l` for fiber pairs `j < l`.
    pub cross: Vec<(usize, usize, f64)>,
    /// `R_{abab} = k/h^2 - xi^2`; `None` for one-dimensional fibers.
    pub intra: Vec<Option<f64>>,
}

impl RiemannBlocks {
    pub fn cross(&self, j: usize, l: usize) -> Option<f64> {
        let (a, b) = if j < l { (j, l) } else { (l, j) };
        self.cross
            .iter()
            .find(|&&(x, y, _)| x == a && y == b)
            .map(|&(_, _, v)| v)
    }
}

fn cross_pairs(st: &FrameState) -> impl Iterator<Item = (usize, usize)> + '_ {
    let m = st.m();
    (0..m).flat_map(move |j| (j + 1..m).map(move |l| (j, l)))
}

/// Riemann blocks of the space-form model of each fiber. The intra-fiber
/// value of a non-space-form fiber is only its sectional average.
fn riemann_blocks_unchecked(st: &FrameState) -> RiemannBlocks {
    let radial = st
        .fibers
        .iter()
        .map(|fr| -fr.radial_curvature().v())
        .collect();
    let cross = cross_pairs(st)
        .map(|(j, l)| (j, l, -st.fibers[j].xi.v() * st.fibers[l].xi.v()))
        .collect();
    let intra = st
        .fibers
        .iter()
        .map(|fr| {
            (fr.r >= 2).then(|| {
                let h = fr.h.v();
                fr.k / (h * h) - fr.xi.v() * fr.xi.v()
            })
        })
        .collect();
    RiemannBlocks {
        radial,
        cross,
        intra,
    }
}

pub fn riemann_components(st: &FrameState) -> Result<RiemannBlocks, CurvatureError> {
    if let Some(j) = st
        .fibers
        .iter()
        .position(|fr| !fr.has_space_form_curvature())
    {
        return Err(CurvatureError::NotSpaceForm { fiber: j + 1 });
    }
    Ok(riemann_blocks_unchecked(st))
}

/// Ricci eigenvalues with multiplicities; `lambda1` belongs to `d/ds`.
#[derive(Debug, Clone)]
pub struct RicciSpectrum {
    pub lambda1: Jet2,
    pub lambdas: Vec<Jet2>,
    pub multiplicities: Vec<usize>,
}

impl RicciSpectrum {
    pub fn trace(&self) -> Jet2 {
        self.lambdas
            .iter()
            .zip(&self.multiplicities)
            .fold(self.lambda1, |acc, (l, &r)| acc + l.scale(r as f64))
    }

    /// `lambda1^2 + sum_j r_j lambda_j^2`.
    pub fn norm_squared(&self) -> f64 {
        self.lambdas
            .iter()
            .zip(&self.multiplicities)
            .fold(self.lambda1.v().powi(2), |acc, (l, &r)| {
                acc + r as f64 * l.v().powi(2)
            })
    }

    /// Eigenvalue values with multiplicity, radial first.
    pub fn values(&self) -> Vec<(f64, usize)> {
        std::iter::once((self.lambda1.v(), 1))
            .chain(
                self.lambdas
                    .iter()
                    .zip(&self.multiplicities)
                    .map(|(l, &r)| (l.v(), r)),
            )
            .collect()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values().iter().map(|(v, _)| v.abs()).fold(0.0, f64::max)
    }
}

pub fn ricci_spectrum(st: &FrameState) -> RicciSpectrum {
    let s1: Jet2 = st.s1.truncate();
    let mut lambda1 = Jet2::constant(0.0);
    let mut lambdas = Vec::with_capacity(st.m());
    for fr in &st.fibers {
        lambda1 = lambda1 - fr.radial_curvature().scale(fr.rf());
        let xi: Jet2 = fr.xi.truncate();
        lambdas.push(fr.fiber_ricci() - fr.xi.derivative::<2>() - xi * s1);
    }
    RicciSpectrum {
        lambda1,
        lambdas,
        multiplicities: st.fibers.iter().map(|fr| fr.r).collect(),
    }
}

/// Scalar curvature with two derivative channels.
pub fn scalar_curvature(st: &FrameState) -> Jet2 {
    ricci_spectrum(st).trace()
}

/// Diagonal Schouten `A = Ric - R/(2(n-1))` and Einstein `E = Ric - R/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchoutenEinstein {
    pub a11: f64,
    pub a: Vec<f64>,
    pub e11: f64,
    pub e: Vec<f64>,
}

pub fn schouten_einstein(st: &FrameState) -> SchoutenEinstein {
    schouten_from(&ricci_spectrum(st), st.nf())
}

fn schouten_from(spec: &RicciSpectrum, n: f64) -> SchoutenEinstein {
    let r = spec.trace().v();
    let sa = r / (2.0 * (n - 1.0));
    let se = r / 2.0;
    SchoutenEinstein {
        a11: spec.lambda1.v() - sa,
        a: spec.lambdas.iter().map(|l| l.v() - sa).collect(),
        e11: spec.lambda1.v() - se,
        e: spec.lambdas.iter().map(|l| l.v() - se).collect(),
    }
}

/// Weyl components on the same blocks as [`RiemannBlocks`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeylBlocks {
    pub radial: Vec<f64>,
    pub cross: Vec<(usize, usize, f64)>,
    pub intra: Vec<Option<f64>>,
}

impl WeylBlocks {
    pub fn max_abs(&self) -> f64 {
        self.radial
            .iter()
            .copied()
            .chain(self.cross.iter().map(|c| c.2))
            .chain(self.intra.iter().flatten().copied())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

fn weyl_from_blocks(st: &FrameState, rm: &RiemannBlocks) -> WeylBlocks {
    let sch = schouten_einstein(st);
    let c = 1.0 / (st.nf() - 2.0);
    WeylBlocks {
        radial: rm
            .radial
            .iter()
            .zip(&sch.a)
            .map(|(r, a)| r - c * (sch.a11 + a))
            .collect(),
        cross: rm
            .cross
            .iter()
            .map(|&(j, l, v)| (j, l, v - c * (sch.a[j] + sch.a[l])))
            .collect(),
        intra: rm
            .intra
            .iter()
            .zip(&sch.a)
            .map(|(v, a)| v.map(|v| v - 2.0 * c * a))
            .collect(),
    }
}

/// Weyl blocks `W_{ijij} = R_{ijij} - (A_ii + A_jj)/(n-2)`.
pub fn weyl_components(st: &FrameState) -> Result<WeylBlocks, CurvatureError> {
    Ok(weyl_from_blocks(st, &riemann_components(st)?))
}

/// Weyl blocks where each intra-fiber entry is only the trace part; the
/// fiber's own Weyl tensor (scaled by `h^-2`) is not represented.
pub fn weyl_trace_part(st: &FrameState) -> WeylBlocks {
    weyl_from_blocks(st, &riemann_blocks_unchecked(st))
}

/// For each frame direction (radial, then one per fiber) the contraction
/// `sum_k W_{ikik}`, which vanishes for a trace-free tensor.
pub fn weyl_traces(st: &FrameState, w: &WeylBlocks) -> Vec<f64> {
    let mut out = Vec::with_capacity(st.m() + 1);
    out.push(
        st.fibers
            .iter()
            .zip(&w.radial)
            .map(|(fr, v)| fr.rf() * v)
            .sum(),
    );
    for (j, fr) in st.fibers.iter().enumerate() {
        let mut t = w.radial[j] + (fr.rf() - 1.0) * w.intra[j].unwrap_or(0.0);
        for &(a, b, v) in &w.cross {
            if a == j {
                t += st.fibers[b].rf() * v;
            } else if b == j {
                t += st.fibers[a].rf() * v;
            }
        }
        out.push(t);
    }
    out
}

/// Radial Cotton components `c_j = lambda_j' - (lambda1 - lambda_j) xi_j - R'/(2(n-1))`.
pub fn cotton_radial(st: &FrameState) -> Vec<f64> {
    cotton_from(st, &ricci_spectrum(st))
}

fn cotton_from(st: &FrameState, spec: &RicciSpectrum) -> Vec<f64> {
    let rp = spec.trace().d1();
    let l1 = spec.lambda1.v();
    spec.lambdas
        .iter()
        .zip(&st.fibers)
        .map(|(l, fr)| l.d1() - (l1 - l.v()) * fr.xi.v() - rp / (2.0 * (st.nf() - 1.0)))
        .collect()
}

/// `D_{a1a} = -f' [A_aa/(n-2) + E_11/((n-1)(n-2))]` per fiber.
pub fn d_components(st: &FrameState) -> Vec<f64> {
    let sch = schouten_einstein(st);
    let n = st.nf();
    let fp = st.fprime();
    sch.a
        .iter()
        .map(|a| -fp * (a / (n - 2.0) + sch.e11 / ((n - 1.0) * (n - 2.0))))
        .collect()
}

/// Everything computable at one point.
#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub s: f64,
    pub spectrum: RicciSpectrum,
    pub scalar: Jet2,
    pub schouten: SchoutenEinstein,
    pub riemann: RiemannBlocks,
    /// Full Weyl blocks when every fiber is a space form.
    pub weyl: Option<WeylBlocks>,
    pub cotton: Vec<f64>,
    pub d: Vec<f64>,
}

pub fn curvature_report(st: &FrameState) -> CurvatureReport {
    let spectrum = ricci_spectrum(st);
    let scalar = spectrum.trace();
    let schouten = schouten_from(&spectrum, st.nf());
    let cotton = cotton_from(st, &spectrum);
    CurvatureReport {
        s: st.s,
        scalar,
        schouten,
        riemann: riemann_blocks_unchecked(st),
        weyl: weyl_components(st).ok(),
        cotton,
        d: d_components(st),
        spectrum,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_entry, CatalogId};
    use crate::metric::{build_metric, DEFAULT_DOMAIN};
    use crate::parse_expr;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn two_fiber(n: usize, r1: usize, h1: &str, h2: &str, k: [f64; 2], f: &str) -> SolitonSpec {
        build_metric(SolitonSpec {
            n,
            rho: 0.0,
            domain: DEFAULT_DOMAIN,
            fibers: vec![
                FiberSpec::new(r1, k[0], true),
                FiberSpec::new(n - 1 - r1, k[1], true),
            ],
            warps: vec![parse_expr(h1).unwrap(), parse_expr(h2).unwrap()],
            potential: parse_expr(f).unwrap(),
        })
        .unwrap()
    }

    #[test]
    fn xi_of_identity_warp() {
        let spec = catalog_entry(CatalogId::round_cone(4)).unwrap();
        let st = connection_state(&spec, 2.0).unwrap();
        assert_eq!(st.fibers[0].xi.derivatives(), vec![0.5, -0.25, 0.25, -0.375]);
        assert!(matches!(
            connection_state(&spec, 20.0),
            Err(CurvatureError::OutsideDomain { .. })
        ));
    }

    #[test]
    fn type_iii_six_at_one() {
        let spec = catalog_entry(CatalogId::type_iii(6)).unwrap();
        let st = connection_state(&spec, 1.0).unwrap();
        assert!(close(st.fibers[0].xi.v(), 0.6, 1e-15));
        let rm = riemann_components(&st).unwrap();
        assert!(close(rm.radial[0], 0.24, 1e-14));
        let sp = ricci_spectrum(&st);
        assert!(close(sp.lambda1.v(), 1.2, 1e-14));
        assert!(close(sp.lambdas[0].v(), -0.72, 1e-14));
        assert!(close(sp.lambdas[1].v(), -0.48, 1e-14));
        assert!(close(scalar_curvature(&st).v(), -1.44, 1e-14));
        let sch = schouten_einstein(&st);
        assert!(close(sch.a11, 1.344, 1e-14));
        let w = weyl_components(&st).unwrap();
        assert!(close(w.radial[0], 0.048, 1e-14));
        for c in cotton_radial(&st) {
            assert!(c.abs() < 1e-13);
        }
        assert!(close(d_components(&st)[0], 0.0576, 1e-14));
    }

    #[test]
    fn non_harmonic_cotton() {
        let spec = two_fiber(4, 1, "s^2", "1", [0.0, 0.0], "0");
        let st = connection_state(&spec, 1.0).unwrap();
        let sp = ricci_spectrum(&st);
        assert!(close(sp.lambda1.v(), -2.0, 1e-14));
        assert!(close(sp.lambdas[0].v(), -2.0, 1e-14));
        assert!(close(sp.lambdas[1].v(), 0.0, 1e-14));
        assert!(close(cotton_radial(&st)[0], 8.0 / 3.0, 1e-13));
    }

    #[test]
    fn flat_and_cone() {
        let spec = catalog_entry(CatalogId::round_cone(5)).unwrap();
        let st = connection_state(&spec, 0.7).unwrap();
        let rep = curvature_report(&st);
        assert!(rep.riemann.radial[0].abs() < 1e-14);
        assert!(rep.riemann.intra[0].unwrap().abs() < 1e-13);
        assert!(rep.weyl.unwrap().max_abs() < 1e-13);
        assert!(rep.scalar.v().abs() < 1e-13);
    }

    #[test]
    fn non_space_form_weyl_is_refused() {
        let mut spec = two_fiber(6, 2, "s", "s^2", [1.0, 0.5], "0");
        spec.fibers[1].space_form = false;
        let st = connection_state(&spec, 1.5).unwrap();
        assert!(matches!(weyl_components(&st), Err(CurvatureError::NotSpaceForm { fiber: 2 })));
        let tr = weyl_traces(&st, &weyl_trace_part(&st));
        assert!(tr.iter().all(|t| t.abs() < 1e-12));
    }
}
