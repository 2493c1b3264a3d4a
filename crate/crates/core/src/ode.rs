//! The soliton ODE system for multiply warped products.
//!
//! State per fiber is `(h_j, w_j = h_j')`, plus `f` and `v = f'`. With
//! `xi_j = w_j/h_j` and `S1 = sum r_j xi_j`:
//!
//! ```text
//! xi_j' = v xi_j - rho - xi_j S1 + (r_j - 1) k_j / h_j^2
//! w_j'  = h_j (xi_j' + xi_j^2)
//! v'    = rho + sum_j r_j (xi_j' + xi_j^2)
//! ```
//!
//! which is the soliton equation solved for the second derivatives.

use std::io::{self, Write};

use thiserror::Error;

use crate::curvature::{cotton_radial, ricci_spectrum, CurvatureError, FrameState};
use crate::jet::{Jet, Jet4};
use crate::metric::{FiberSpec, SolitonSpec};

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid initial data: {0}")]
    InvalidInit(String),
    #[error("invalid integration settings: {0}")]
    InvalidSettings(String),
    #[error("step size underflow near s = {last_s}")]
    StepUnderflow { last_s: f64 },
    #[error("step limit reached at s = {last_s}")]
    TooManySteps { last_s: f64 },
    #[error("warping function {fiber} left the chart (h = {value}) at s = {s}")]
    ChartEscape { fiber: usize, s: f64, value: f64 },
    #[error("non-finite state at s = {s}")]
    NonFinite { s: f64 },
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
}

impl OdeError {
    /// Last `s` at which the solution was still valid, when known.
    pub fn last_valid_s(&self) -> Option<f64> {
        match *self {
            OdeError::StepUnderflow { last_s } | OdeError::TooManySteps { last_s } => Some(last_s),
            OdeError::ChartEscape { s, .. } | OdeError::NonFinite { s } => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonOdeParams {
    pub n: usize,
    pub rho: f64,
    pub fibers: Vec<FiberSpec>,
}

impl SolitonOdeParams {
    pub fn new(n: usize, rho: f64, fibers: Vec<FiberSpec>) -> Result<Self, OdeError> {
        let total = 1 + fibers.iter().map(|f| f.dim).sum::<usize>();
        if total != n {
            return Err(OdeError::InvalidParams(format!(
                "n = {n} but 1 + sum of fiber dimensions = {total}"
            )));
        }
        if fibers.is_empty() {
            return Err(OdeError::InvalidParams("no fibers".into()));
        }
        for (j, f) in fibers.iter().enumerate() {
            if f.dim == 0 || (f.dim == 1 && f.k != 0.0) || !f.k.is_finite() {
                return Err(OdeError::InvalidParams(format!(
                    "fiber {} has dim {} and k {}",
                    j + 1,
                    f.dim,
                    f.k
                )));
            }
        }
        if !rho.is_finite() {
            return Err(OdeError::InvalidParams("rho must be finite".into()));
        }
        Ok(SolitonOdeParams { n, rho, fibers })
    }

    pub fn from_spec(spec: &SolitonSpec) -> Result<Self, OdeError> {
        Self::new(spec.n, spec.rho, spec.fibers.clone())
    }

    pub fn m(&self) -> usize {
        self.fibers.len()
    }

    fn dim(&self) -> usize {
        2 * self.m() + 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    pub s: f64,
    pub h: Vec<f64>,
    pub w: Vec<f64>,
    pub f: f64,
    pub v: f64,
}

impl TrajectoryState {
    /// Initial data read off a closed-form spec at `s`.
    pub fn from_spec(spec: &SolitonSpec, s: f64) -> Result<Self, OdeError> {
        let st = crate::curvature::connection_state(spec, s)?;
        Ok(TrajectoryState {
            s,
            h: st.fibers.iter().map(|fr| fr.h.v()).collect(),
            w: st.fibers.iter().map(|fr| fr.h.d1()).collect(),
            f: st.f.v(),
            v: st.f.d1(),
        })
    }

    pub fn validate(&self, p: &SolitonOdeParams) -> Result<(), OdeError> {
        if self.h.len() != p.m() || self.w.len() != p.m() {
            return Err(OdeError::InvalidInit(format!(
                "expected {} warping values and derivatives, got {} and {}",
                p.m(),
                self.h.len(),
                self.w.len()
            )));
        }
        if !self.pack().iter().all(|x| x.is_finite()) || !self.s.is_finite() {
            return Err(OdeError::InvalidInit("non-finite entry".into()));
        }
        if let Some(j) = self.h.iter().position(|&h| !(h > 0.0)) {
            return Err(OdeError::InvalidInit(format!(
                "h_{} = {} must be positive",
                j + 1,
                self.h[j]
            )));
        }
        Ok(())
    }

    fn pack(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(2 * self.h.len() + 2);
        y.extend_from_slice(&self.h);
        y.extend_from_slice(&self.w);
        y.push(self.f);
        y.push(self.v);
        y
    }

    fn unpack(s: f64, y: &[f64]) -> Self {
        let m = (y.len() - 2) / 2;
        TrajectoryState {
            s,
            h: y[..m].to_vec(),
            w: y[m..2 * m].to_vec(),
            f: y[2 * m],
            v: y[2 * m + 1],
        }
    }

    /// Largest componentwise difference from another state.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.pack()
            .iter()
            .zip(other.pack())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Derivatives of every state component with respect to `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRate {
    pub h: Vec<f64>,
    pub w: Vec<f64>,
    pub f: f64,
    pub v: f64,
}

/// Returns `(w', v')` as jets; `h' = w` and `f' = v` need no work.
fn second_derivatives<const N: usize>(
    p: &SolitonOdeParams,
    h: &[Jet<N>],
    w: &[Jet<N>],
    v: Jet<N>,
) -> (Vec<Jet<N>>, Jet<N>) {
    let xi: Vec<Jet<N>> = w.iter().zip(h).map(|(w, h)| *w / *h).collect();
    let s1 = xi
        .iter()
        .zip(&p.fibers)
        .fold(Jet::constant(0.0), |acc, (x, fb)| acc + x.scale(fb.dim as f64));
    let mut dw = Vec::with_capacity(h.len());
    let mut dv = Jet::constant(p.rho);
    for ((x, hj), fb) in xi.iter().zip(h).zip(&p.fibers) {
        let mut xip = v * *x - *x * s1 - p.rho;
        let c = (fb.dim as f64 - 1.0) * fb.k;
        if c != 0.0 {
            xip = xip + hj.square().recip_unchecked().scale(c);
        }
        let q = xip + x.square();
        dw.push(*hj * q);
        dv = dv + q.scale(fb.dim as f64);
    }
    (dw, dv)
}

fn check_chart(s: f64, h: &[f64]) -> Result<(), OdeError> {
    match h.iter().position(|&x| !(x > 0.0)) {
        Some(j) => Err(OdeError::ChartEscape {
            fiber: j + 1,
            s,
            value: h[j],
        }),
        None => Ok(()),
    }
}

fn rhs_packed(p: &SolitonOdeParams, s: f64, y: &[f64], out: &mut [f64]) -> Result<(), OdeError> {
    let m = p.m();
    check_chart(s, &y[..m])?;
    let h: Vec<Jet<0>> = y[..m].iter().map(|&x| Jet::constant(x)).collect();
    let w: Vec<Jet<0>> = y[m..2 * m].iter().map(|&x| Jet::constant(x)).collect();
    let (dw, dv) = second_derivatives(p, &h, &w, Jet::constant(y[2 * m + 1]));
    out[..m].copy_from_slice(&y[m..2 * m]);
    for (o, d) in out[m..2 * m].iter_mut().zip(&dw) {
        *o = d.v();
    }
    out[2 * m] = y[2 * m + 1];
    out[2 * m + 1] = dv.v();
    if out.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(OdeError::NonFinite { s })
    }
}

pub fn soliton_rhs(st: &TrajectoryState, p: &SolitonOdeParams) -> Result<StateRate, OdeError> {
    st.validate(p).map_err(|e| match e {
        OdeError::InvalidInit(_) if st.h.len() == p.m() => OdeError::ChartEscape {
            fiber: st.h.iter().position(|&x| !(x > 0.0)).map_or(0, |j| j + 1),
            s: st.s,
            value: st.h.iter().copied().fold(f64::INFINITY, f64::min),
        },
        other => other,
    })?;
    let y = st.pack();
    let mut dy = vec![0.0; y.len()];
    rhs_packed(p, st.s, &y, &mut dy)?;
    let r = TrajectoryState::unpack(st.s, &dy);
    Ok(StateRate {
        h: r.h,
        w: r.w,
        f: r.f,
        v: r.v,
    })
}

/// Taylor jets of the solution through `st`, obtained by repeatedly
/// substituting the jets into the right-hand side.
pub fn taylor_frame(st: &TrajectoryState, p: &SolitonOdeParams) -> Result<FrameState, OdeError> {
    st.validate(p)?;
    let mut h: Vec<Jet4> = st.h.iter().map(|&x| Jet4::constant(x)).collect();
    let mut w: Vec<Jet4> = st.w.iter().map(|&x| Jet4::constant(x)).collect();
    let mut f = Jet4::constant(st.f);
    let mut v = Jet4::constant(st.v);
    for _ in 0..4 {
        let (dw, dv) = second_derivatives(p, &h, &w, v);
        let lift = |x0: f64, d: &Jet4| Jet4::from_derivatives(&[x0, d.v(), d.d1(), d.d2(), d.d3()]);
        let nh: Vec<Jet4> = st.h.iter().zip(&w).map(|(&x, d)| lift(x, d)).collect();
        let nw: Vec<Jet4> = st.w.iter().zip(&dw).map(|(&x, d)| lift(x, d)).collect();
        f = lift(st.f, &v);
        v = lift(st.v, &dv);
        h = nh;
        w = nw;
    }
    Ok(FrameState::from_jets(
        st.s,
        p.n,
        p.rho,
        &p.fibers,
        &h,
        f.truncate::<3>(),
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Dormand-Prince 5(4) with PI step control and dense output.
    Rk45,
    /// Classical fixed-step Runge-Kutta; `step` is the largest step used.
    Rk4 { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub tol: f64,
    pub method: Method,
    /// Number of output samples, endpoints included.
    pub grid_points: usize,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            tol: 1e-10,
            method: Method::Rk45,
            grid_points: 1001,
            max_steps: 2_000_000,
        }
    }
}

impl IntegrateOptions {
    pub fn with_tol(tol: f64) -> Self {
        IntegrateOptions {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejections: usize,
    pub rhs_evals: usize,
    /// Largest scaled error estimate among accepted steps.
    pub max_error_estimate: f64,
}

/// Curvature diagnostics at one output sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleDiagnostics {
    pub scalar: f64,
    pub scalar_prime: f64,
    pub lambda1: f64,
    /// `R + v^2 - 2 rho f`.
    pub c0: f64,
    /// `R' - 2 lambda1 f'` from jets.
    pub hamilton_grad: f64,
    pub cotton_max: f64,
    /// Largest `|xi' + xi^2 + R'/(2(n-1)f')|`; `None` where `f' = 0`.
    pub intcond_3_11_max: Option<f64>,
    /// Largest soliton residual reconstructed from the state jets.
    pub soliton_max: f64,
}

pub fn sample_diagnostics(st: &TrajectoryState, p: &SolitonOdeParams) -> Result<SampleDiagnostics, OdeError> {
    let fs = taylor_frame(st, p)?;
    let spec = ricci_spectrum(&fs);
    let r = spec.trace();
    let fp = fs.fprime();
    let mut soliton_max = (spec.lambda1.v() + fs.f.d2() - p.rho).abs();
    for (l, fr) in spec.lambdas.iter().zip(&fs.fibers) {
        soliton_max = soliton_max.max((l.v() + fp * fr.xi.v() - p.rho).abs());
    }
    let intcond = (fp != 0.0).then(|| {
        fs.fibers
            .iter()
            .map(|fr| (fr.radial_curvature().v() + r.d1() / (2.0 * (fs.nf() - 1.0) * fp)).abs())
            .fold(0.0, f64::max)
    });
    Ok(SampleDiagnostics {
        scalar: r.v(),
        scalar_prime: r.d1(),
        lambda1: spec.lambda1.v(),
        c0: r.v() + st.v * st.v - 2.0 * p.rho * st.f,
        hamilton_grad: r.d1() - 2.0 * spec.lambda1.v() * fp,
        cotton_max: cotton_radial(&fs).iter().fold(0.0, |m, c| m.max(c.abs())),
        intcond_3_11_max: intcond,
        soliton_max,
    })
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: SolitonOdeParams,
    pub samples: Vec<TrajectoryState>,
    pub diagnostics: Vec<SampleDiagnostics>,
    pub stats: IntegratorStats,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryState {
        self.samples.last().expect("trajectory has samples")
    }

    pub fn frames(&self) -> Result<Vec<FrameState>, OdeError> {
        self.samples.iter().map(|s| taylor_frame(s, &self.params)).collect()
    }

    /// Writes the trajectory CSV: `s, h_j, w_j (per fiber), f, fprime, R, C0, res_cotton_max`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut header = vec!["s".to_string()];
        for j in 1..=self.params.m() {
            header.push(format!("h_{j}"));
            header.push(format!("w_{j}"));
        }
        header.extend(["f", "fprime", "R", "C0", "res_cotton_max"].map(String::from));
        writeln!(out, "{}", header.join(","))?;
        for (st, d) in self.samples.iter().zip(&self.diagnostics) {
            let mut row = vec![st.s];
            for (h, w) in st.h.iter().zip(&st.w) {
                row.push(*h);
                row.push(*w);
            }
            row.extend([st.f, st.v, d.scalar, d.c0, d.cotton_max]);
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Integrates from `init.s` to `s_end`, which may lie on either side.
pub fn integrate(
    init: &TrajectoryState,
    p: &SolitonOdeParams,
    s_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory, OdeError> {
    init.validate(p)?;
    if !(opts.tol > 0.0) || !opts.tol.is_finite() {
        return Err(OdeError::InvalidSettings(format!("tolerance {} must be positive", opts.tol)));
    }
    if opts.grid_points < 2 {
        return Err(OdeError::InvalidSettings("grid needs at least 2 points".into()));
    }
    if !s_end.is_finite() || s_end == init.s {
        return Err(OdeError::InvalidSettings(format!(
            "empty integration range [{}, {}]",
            init.s, s_end
        )));
    }
    let grid = crate::metric::uniform_grid(init.s, s_end, opts.grid_points);
    let (ys, stats) = match opts.method {
        Method::Rk45 => dopri(p, init, &grid, opts)?,
        Method::Rk4 { step } => {
            if !(step > 0.0) {
                return Err(OdeError::InvalidSettings(format!("step {step} must be positive")));
            }
            rk4(p, init, &grid, step)?
        }
    };
    let samples: Vec<TrajectoryState> = grid
        .iter()
        .zip(ys)
        .map(|(&s, y)| TrajectoryState::unpack(s, &y))
        .collect();
    let diagnostics = samples
        .iter()
        .map(|st| sample_diagnostics(st, p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Trajectory {
        params: p.clone(),
        samples,
        diagnostics,
        stats,
    })
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], tol: f64) -> f64 {
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = tol + tol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / err.len() as f64).sqrt()
}

fn initial_step(
    p: &SolitonOdeParams,
    s0: f64,
    y0: &[f64],
    f0: &[f64],
    dir: f64,
    tol: f64,
    span: f64,
) -> Result<f64, OdeError> {
    let zeros = vec![0.0; y0.len()];
    let d0 = error_norm(y0, &zeros, y0, tol) * tol;
    let d1 = error_norm(f0, &zeros, y0, tol) * tol;
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + dir * h0 * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    rhs_packed(p, s0 + dir * h0, &y1, &mut f1)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = error_norm(&diff, &zeros, y0, tol) * tol / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span))
}

/// Dormand-Prince 5(4) with dense output at the grid points.
fn dopri(
    p: &SolitonOdeParams,
    init: &TrajectoryState,
    grid: &[f64],
    opts: &IntegrateOptions,
) -> Result<(Vec<Vec<f64>>, IntegratorStats), OdeError> {
    let dim = p.dim();
    let tol = opts.tol;
    let s_end = *grid.last().expect("grid is nonempty");
    let dir = (s_end - init.s).signum();
    let span = (s_end - init.s).abs();

    let mut stats = IntegratorStats::default();
    let mut s = init.s;
    let mut y = init.pack();
    let mut k = vec![vec![0.0; dim]; 7];
    rhs_packed(p, s, &y, &mut k[0])?;
    stats.rhs_evals += 1;
    let mut h = initial_step(p, s, &y, &k[0], dir, tol, span)?;
    stats.rhs_evals += 1;

    let mut out = Vec::with_capacity(grid.len());
    out.push(y.clone());
    let mut next = 1;
    let mut err_old: f64 = 1e-4;
    let mut rejected_last = false;
    let mut ystage = vec![0.0; dim];
    let mut ynew = vec![0.0; dim];
    let mut errv = vec![0.0; dim];

    while next < grid.len() {
        if stats.steps + stats.rejections >= opts.max_steps {
            return Err(OdeError::TooManySteps { last_s: s });
        }
        let remaining = (s_end - s).abs();
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h < 1e-14 * s.abs().max(1.0) {
            return Err(OdeError::StepUnderflow { last_s: s });
        }
        let hs = dir * h;

        let mut stage_failed = false;
        for i in 1..7 {
            for d in 0..dim {
                let mut acc = y[d];
                for (j, kj) in k.iter().enumerate().take(i) {
                    acc += hs * A[i][j] * kj[d];
                }
                ystage[d] = acc;
            }
            if let Err(e) = rhs_packed(p, s + C[i] * hs, &ystage, &mut k[i]) {
                match e {
                    OdeError::ChartEscape { .. } | OdeError::NonFinite { .. } => {
                        stage_failed = true;
                        break;
                    }
                    other => return Err(other),
                }
            }
            stats.rhs_evals += 1;
        }
        if stage_failed {
            stats.rejections += 1;
            rejected_last = true;
            h *= 0.25;
            continue;
        }
        // Stage 7 is evaluated at the 5th order solution (FSAL).
        ynew.copy_from_slice(&ystage);
        for d in 0..dim {
            errv[d] = hs * (0..7).map(|i| E[i] * k[i][d]).sum::<f64>();
        }
        let err = error_norm(&errv, &y, &ynew, tol);
        if !err.is_finite() {
            stats.rejections += 1;
            rejected_last = true;
            h *= 0.25;
            continue;
        }
        let expo = 0.2 - 0.75 * BETA;
        if err <= 1.0 {
            let s_new = if last { s_end } else { s + hs };
            // Dense output on [s, s_new].
            while next < grid.len() && (grid[next] - s_new) * dir <= 0.0 {
                let theta = (grid[next] - s) / hs;
                let theta1 = 1.0 - theta;
                let mut yo = vec![0.0; dim];
                for d in 0..dim {
                    let ydiff = ynew[d] - y[d];
                    let bspl = hs * k[0][d] - ydiff;
                    let c4 = ydiff - hs * k[6][d] - bspl;
                    let c5 = hs * (0..7).map(|i| D[i] * k[i][d]).sum::<f64>();
                    yo[d] = y[d] + theta * (ydiff + theta1 * (bspl + theta * (c4 + theta1 * c5)));
                }
                if next == grid.len() - 1 {
                    yo.copy_from_slice(&ynew);
                }
                out.push(yo);
                next += 1;
            }
            stats.steps += 1;
            stats.max_error_estimate = stats.max_error_estimate.max(err);
            s = s_new;
            y.copy_from_slice(&ynew);
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            check_chart(s, &y[..p.m()])?;
            if !y.iter().all(|x| x.is_finite()) {
                return Err(OdeError::NonFinite { s });
            }
            let mut fac = err.max(1e-16).powf(expo) / err_old.powf(BETA) / SAFETY;
            fac = fac.clamp(1.0 / MAX_FACTOR, 1.0 / MIN_FACTOR);
            let mut h_new = h / fac;
            if rejected_last {
                h_new = h_new.min(h);
            }
            err_old = err.max(1e-4);
            rejected_last = false;
            h = h_new;
        } else {
            stats.rejections += 1;
            rejected_last = true;
            let fac = (err.powf(expo) / SAFETY).min(1.0 / MIN_FACTOR);
            h /= fac;
        }
    }
    Ok((out, stats))
}

fn rk4_step(p: &SolitonOdeParams, s: f64, y: &[f64], h: f64) -> Result<Vec<f64>, OdeError> {
    let dim = y.len();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let shift = |k: &[f64], c: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    rhs_packed(p, s, y, &mut k1)?;
    rhs_packed(p, s + 0.5 * h, &shift(&k1, 0.5 * h), &mut k2)?;
    rhs_packed(p, s + 0.5 * h, &shift(&k2, 0.5 * h), &mut k3)?;
    rhs_packed(p, s + h, &shift(&k3, h), &mut k4)?;
    Ok((0..dim)
        .map(|d| y[d] + h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]))
        .collect())
}

/// Fixed-step RK4; each grid interval is split into equal substeps no longer than `step`.
fn rk4(
    p: &SolitonOdeParams,
    init: &TrajectoryState,
    grid: &[f64],
    step: f64,
) -> Result<(Vec<Vec<f64>>, IntegratorStats), OdeError> {
    let mut stats = IntegratorStats::default();
    let mut y = init.pack();
    let mut out = vec![y.clone()];
    for win in grid.windows(2) {
        let width = win[1] - win[0];
        let pieces = (width.abs() / step).ceil().max(1.0) as usize;
        let h = width / pieces as f64;
        for i in 0..pieces {
            let s = win[0] + h * i as f64;
            y = rk4_step(p, s, &y, h)?;
            stats.steps += 1;
            stats.rhs_evals += 4;
            check_chart(s + h, &y[..p.m()])?;
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}

/// Drift and residual maxima along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorReport {
    pub c0_initial: f64,
    /// `max |C0(s) - C0(s0)|`.
    pub c0_drift: f64,
    /// `max |R' - 2 lambda1 f'|` with `R'` from finite differences of the samples.
    pub hamilton_grad_fd_max: f64,
    /// Same with `R'` from the state jets.
    pub hamilton_grad_max: f64,
    pub cotton_max: f64,
    pub intcond_3_11_max: Option<f64>,
    pub soliton_max: f64,
}

/// Three-point derivative on a possibly nonuniform grid.
pub fn fd_derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert!(n == y.len() && n >= 2, "need matching samples");
    if n == 2 {
        let d = (y[1] - y[0]) / (x[1] - x[0]);
        return vec![d, d];
    }
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        let h1 = x[i] - x[i - 1];
        let h2 = x[i + 1] - x[i];
        out[i] = -h2 / (h1 * (h1 + h2)) * y[i - 1] + (h2 - h1) / (h1 * h2) * y[i]
            + h1 / (h2 * (h1 + h2)) * y[i + 1];
    }
    let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
    out[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * y[0] + (h1 + h2) / (h1 * h2) * y[1]
        - h1 / (h2 * (h1 + h2)) * y[2];
    let (h1, h2) = (x[n - 2] - x[n - 3], x[n - 1] - x[n - 2]);
    out[n - 1] = h2 / (h1 * (h1 + h2)) * y[n - 3] - (h1 + h2) / (h1 * h2) * y[n - 2]
        + (h1 + 2.0 * h2) / (h2 * (h1 + h2)) * y[n - 1];
    out
}

/// Five-point fourth-order derivative on a uniform grid with at least five
/// samples.
pub fn fd_derivative_uniform(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert!(n == y.len() && n >= 5, "need at least 5 matching samples");
    let h12 = 12.0 * (x[n - 1] - x[0]) / (n - 1) as f64;
    let mut out = vec![0.0; n];
    for i in 2..n - 2 {
        out[i] = (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / h12;
    }
    out[0] = (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / h12;
    out[1] = (-3.0 * y[0] - 10.0 * y[1] + 18.0 * y[2] - 6.0 * y[3] + y[4]) / h12;
    out[n - 1] = (25.0 * y[n - 1] - 48.0 * y[n - 2] + 36.0 * y[n - 3] - 16.0 * y[n - 4]
        + 3.0 * y[n - 5])
        / h12;
    out[n - 2] = (3.0 * y[n - 1] + 10.0 * y[n - 2] - 18.0 * y[n - 3] + 6.0 * y[n - 4]
        - y[n - 5])
        / h12;
    out
}

fn is_uniform(x: &[f64]) -> bool {
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    x.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs())
}

pub fn monitor(traj: &Trajectory) -> Result<MonitorReport, OdeError> {
    if traj.samples.len() < 2 {
        return Err(OdeError::InvalidSettings("monitor needs at least 2 samples".into()));
    }
    let d = &traj.diagnostics;
    let c0_initial = d[0].c0;
    let xs: Vec<f64> = traj.samples.iter().map(|s| s.s).collect();
    let rs: Vec<f64> = d.iter().map(|x| x.scalar).collect();
    let rp = if xs.len() >= 5 && is_uniform(&xs) {
        fd_derivative_uniform(&xs, &rs)
    } else {
        fd_derivative(&xs, &rs)
    };
    let mut rep = MonitorReport {
        c0_initial,
        c0_drift: 0.0,
        hamilton_grad_fd_max: 0.0,
        hamilton_grad_max: 0.0,
        cotton_max: 0.0,
        intcond_3_11_max: None,
        soliton_max: 0.0,
    };
    for ((x, st), rp) in d.iter().zip(&traj.samples).zip(rp) {
        rep.c0_drift = rep.c0_drift.max((x.c0 - c0_initial).abs());
        rep.hamilton_grad_fd_max = rep.hamilton_grad_fd_max.max((rp - 2.0 * x.lambda1 * st.v).abs());
        rep.hamilton_grad_max = rep.hamilton_grad_max.max(x.hamilton_grad.abs());
        rep.cotton_max = rep.cotton_max.max(x.cotton_max);
        rep.soliton_max = rep.soliton_max.max(x.soliton_max);
        if let Some(v) = x.intcond_3_11_max {
            rep.intcond_3_11_max = Some(rep.intcond_3_11_max.unwrap_or(0.0).max(v));
        }
    }
    Ok(rep)
}
