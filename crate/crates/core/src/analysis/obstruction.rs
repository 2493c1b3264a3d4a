//! Randomized falsification search for three distinct fiber eigenvalues.
//!
//! A sample draws at least three distinct connection coefficients with
//! multiplicities adding up to `n - 1`. The pairwise identities
//! `sum xi^2 - rho = (xi_i + xi_j)(sum xi - f')` are then solved for
//! `(f', rho)` in the least-squares sense, which forces `f' = sum xi` and
//! `rho = sum xi^2`. Differentiating `f' = sum xi` with the common value
//! `P = xi' + xi^2` and `f'' = rho + (n - 1) P` gives `sum xi^2 = -rho`.
//! A sample is a counterexample only if all three relations hold together
//! with the requested `rho`.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::jet::Jet;

const CHUNK: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstructionConfig {
    pub n: usize,
    pub rho: f64,
    pub samples: u64,
    pub seed: u64,
    /// Normalized violation below which a sample counts as feasible.
    pub tol: f64,
    /// Relative separation below which two coefficients count as equal.
    pub delta: f64,
}

impl ObstructionConfig {
    pub fn new(n: usize, rho: f64, samples: u64, seed: u64) -> Self {
        ObstructionConfig {
            n,
            rho,
            samples,
            seed,
            tol: 1e-10,
            delta: super::DISTINCT_DELTA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObstructionError {
    #[error("samples must be at least 1")]
    NoSamples,
    #[error("three distinct eigenvalues need n ≥ 4, got n = {0}")]
    Dimension(usize),
    #[error("rho must be finite")]
    Rho,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObstructionCertificate {
    pub n: usize,
    pub rho: f64,
    pub samples: u64,
    pub seed: u64,
    /// Samples that passed the distinctness guard.
    pub tested: u64,
    pub rejected: u64,
    pub feasible_count: u64,
    /// Smallest normalized violation over tested samples.
    pub worst_margin: f64,
    /// Largest `|f' - sum xi| / (1 + |sum xi|)` from the least-squares solve.
    pub max_sum_identity_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleOutcome {
    Rejected,
    Tested {
        feasible: bool,
        margin: f64,
        sum_identity_error: f64,
    },
}

/// Tests one tuple of coefficients `xi` with multiplicities `r` and the
/// common value `p = xi' + xi^2`. For `rho > 0` the tuple is first rescaled
/// so that `sum r xi^2 = rho`.
pub fn test_tuple(xi: &[f64], r: &[usize], n: usize, rho: f64, p: f64, tol: f64, delta: f64) -> SampleOutcome {
    let scale_ref = 1.0 + xi.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    for i in 0..xi.len() {
        for j in i + 1..xi.len() {
            if (xi[i] - xi[j]).abs() < delta * scale_ref {
                return SampleOutcome::Rejected;
            }
        }
    }
    if xi.len() < 3 {
        return SampleOutcome::Rejected;
    }
    let weighted = |xs: &[f64], pow: i32| -> f64 {
        xs.iter().zip(r).map(|(x, &k)| k as f64 * x.powi(pow)).sum()
    };
    let mut xs = xi.to_vec();
    if rho > 0.0 {
        let c = (rho / weighted(&xs, 2)).sqrt();
        xs.iter_mut().for_each(|x| *x *= c);
    }
    let s1 = weighted(&xs, 1);
    let s2 = weighted(&xs, 2);

    // Rows b - sigma a = s2 - sigma s1 for every pair, unknowns a = f', b = rho.
    let (mut saa, mut sab, mut sbb, mut ra, mut rb) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut rows = Vec::new();
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let sigma = xs[i] + xs[j];
            let rhs = s2 - sigma * s1;
            saa += sigma * sigma;
            sab -= sigma;
            sbb += 1.0;
            ra -= sigma * rhs;
            rb += rhs;
            rows.push((sigma, rhs));
        }
    }
    let det = saa * sbb - sab * sab;
    let a = (ra * sbb - rb * sab) / det;
    let b = (saa * rb - sab * ra) / det;
    let ls_residual = rows
        .iter()
        .map(|&(sigma, rhs)| (b - sigma * a - rhs).abs())
        .fold(0.0, f64::max);

    // Derivative of sum xi - f' along the flow.
    let nf = n as f64;
    let mut t = Jet::<1>::from_derivatives(&[-a, -(rho + (nf - 1.0) * p)]);
    for (x, &k) in xs.iter().zip(r) {
        t = t + Jet::<1>::from_derivatives(&[*x, p - x * x]).scale(k as f64);
    }

    let norm = 1.0 + s2 + rho.abs();
    let violations = [ls_residual / norm, (b - rho).abs() / norm, t.d1().abs() / norm];
    let margin = violations.iter().fold(0.0_f64, |m, v| m.max(*v));
    SampleOutcome::Tested {
        feasible: violations.iter().all(|v| *v <= tol),
        margin,
        sum_identity_error: (a - s1).abs() / (1.0 + s1.abs()),
    }
}

#[derive(Debug, Clone, Copy)]
struct Tally {
    tested: u64,
    rejected: u64,
    feasible: u64,
    worst_margin: f64,
    max_sum_err: f64,
}

impl Tally {
    fn empty() -> Self {
        Tally {
            tested: 0,
            rejected: 0,
            feasible: 0,
            worst_margin: f64::INFINITY,
            max_sum_err: 0.0,
        }
    }

    fn merge(self, o: Tally) -> Tally {
        Tally {
            tested: self.tested + o.tested,
            rejected: self.rejected + o.rejected,
            feasible: self.feasible + o.feasible,
            worst_margin: self.worst_margin.min(o.worst_margin),
            max_sum_err: self.max_sum_err.max(o.max_sum_err),
        }
    }
}

fn draw_sample(rng: &mut ChaCha20Rng, cfg: &ObstructionConfig) -> SampleOutcome {
    let total = cfg.n - 1;
    let m = rng.gen_range(3..=total);
    let mut cuts: Vec<usize> = index::sample(rng, total - 1, m - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    let mut r = Vec::with_capacity(m);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        r.push(c - prev);
        prev = c;
    }
    let s: f64 = rng.gen_range(0.1..10.0);
    let xi: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0) / s).collect();
    let p = rng.gen_range(-5.0..5.0) / (s * s);
    test_tuple(&xi, &r, cfg.n, cfg.rho, p, cfg.tol, cfg.delta)
}

fn run_chunk(cfg: &ObstructionConfig, chunk: u64) -> Tally {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chunk);
    let count = CHUNK.min(cfg.samples - chunk * CHUNK);
    let mut tally = Tally::empty();
    for _ in 0..count {
        match draw_sample(&mut rng, cfg) {
            SampleOutcome::Rejected => tally.rejected += 1,
            SampleOutcome::Tested {
                feasible,
                margin,
                sum_identity_error,
            } => {
                tally.tested += 1;
                tally.feasible += u64::from(feasible);
                tally.worst_margin = tally.worst_margin.min(margin);
                tally.max_sum_err = tally.max_sum_err.max(sum_identity_error);
            }
        }
    }
    tally
}

/// Seeded search; the result does not depend on the number of threads.
pub fn three_eigen_obstruction(cfg: &ObstructionConfig) -> Result<ObstructionCertificate, ObstructionError> {
    if cfg.samples == 0 {
        return Err(ObstructionError::NoSamples);
    }
    if cfg.n < 4 {
        return Err(ObstructionError::Dimension(cfg.n));
    }
    if !cfg.rho.is_finite() {
        return Err(ObstructionError::Rho);
    }
    let chunks = cfg.samples.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| run_chunk(cfg, c))
        .reduce(Tally::empty, Tally::merge);
    Ok(ObstructionCertificate {
        n: cfg.n,
        rho: cfg.rho,
        samples: cfg.samples,
        seed: cfg.seed,
        tested: tally.tested,
        rejected: tally.rejected,
        feasible_count: tally.feasible,
        worst_margin: tally.worst_margin,
        max_sum_identity_error: tally.max_sum_err,
    })
}
