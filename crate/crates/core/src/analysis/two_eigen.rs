//! Identities satisfied by a harmonic-Weyl soliton whose fiber eigenvalues
//! take exactly two values.

use thiserror::Error;

use super::{Residual, DISTINCT_DELTA};
use crate::curvature::FrameState;
use crate::jet::{Jet2, Jet3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TwoEigenError {
    #[error("connection coefficients are not distinct: |X - Y| = {gap} < {delta}")]
    NotDistinct { gap: f64, delta: f64 },
    #[error("multiplicities {r1} + {r2} do not add up to n - 1 = {}", .n - 1)]
    Multiplicities { r1: usize, r2: usize, n: usize },
    #[error("a two-eigenvalue state needs exactly two fibers, got {0}")]
    FiberCount(usize),
}

/// `X`, `Y` are the connection coefficients of the two eigenspaces;
/// `k1`, `k2` hold `(r_i - 1) k_i / h_i^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoEigenState {
    pub x: Jet3,
    pub y: Jet3,
    pub r1: usize,
    pub r2: usize,
    pub k1: f64,
    pub k2: f64,
    /// `f'` with two derivative channels.
    pub fprime: Jet2,
    pub rho: f64,
    pub n: usize,
}

impl TwoEigenState {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        x: Jet3,
        y: Jet3,
        r1: usize,
        r2: usize,
        k1: f64,
        k2: f64,
        fprime: Jet2,
        rho: f64,
        n: usize,
    ) -> Result<Self, TwoEigenError> {
        Self::with_delta(TwoEigenState { x, y, r1, r2, k1, k2, fprime, rho, n }, DISTINCT_DELTA)
    }

    fn with_delta(st: TwoEigenState, delta: f64) -> Result<Self, TwoEigenError> {
        if st.r1 + st.r2 + 1 != st.n {
            return Err(TwoEigenError::Multiplicities {
                r1: st.r1,
                r2: st.r2,
                n: st.n,
            });
        }
        let gap = (st.x.v() - st.y.v()).abs();
        if !(gap >= delta) {
            return Err(TwoEigenError::NotDistinct { gap, delta });
        }
        Ok(st)
    }

    /// Reads `X`, `Y` off a two-fiber frame state.
    pub fn from_frame(st: &FrameState) -> Result<Self, TwoEigenError> {
        Self::from_frame_with_delta(st, DISTINCT_DELTA)
    }

    pub fn from_frame_with_delta(st: &FrameState, delta: f64) -> Result<Self, TwoEigenError> {
        if st.m() != 2 {
            return Err(TwoEigenError::FiberCount(st.m()));
        }
        let [a, b] = [&st.fibers[0], &st.fibers[1]];
        let fiber_term = |r: usize, k: f64, h: f64| (r as f64 - 1.0) * k / (h * h);
        Self::with_delta(
            TwoEigenState {
                x: a.xi,
                y: b.xi,
                r1: a.r,
                r2: b.r,
                k1: fiber_term(a.r, a.k, a.h.v()),
                k2: fiber_term(b.r, b.k, b.h.v()),
                fprime: st.f.derivative::<2>(),
                rho: st.rho,
                n: st.n,
            },
            delta,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoEigenReport {
    /// `lemma41_46` .. `lemma41_412` then `lemma51_1` .. `lemma51_3`.
    pub residuals: Vec<(&'static str, f64)>,
    /// `X + Y != 0`.
    pub sum_nonzero: bool,
    /// `(n - 1) X Y + rho != 0`.
    pub product_guard: bool,
}

impl TwoEigenReport {
    pub fn max_abs(&self) -> f64 {
        self.residuals.iter().map(|r| r.1.abs()).fold(0.0, f64::max)
    }

    pub fn to_residuals(&self, s: f64, tol: f64) -> Vec<Residual> {
        self.residuals
            .iter()
            .map(|&(name, v)| Residual::checked(name, v, s, tol))
            .collect()
    }
}

pub const TWO_EIGEN_NAMES: [&str; 10] = [
    "lemma41_46",
    "lemma41_47",
    "lemma41_48",
    "lemma41_49",
    "lemma41_410",
    "lemma41_411",
    "lemma41_412",
    "lemma51_1",
    "lemma51_2",
    "lemma51_3",
];

/// Signed residuals (left minus right side) of the two-eigenvalue identities,
/// with `sum xi_i = r1 X + r2 Y` and `sum xi_i^2 = r1 X^2 + r2 Y^2`.
pub fn two_eigen_identities(t: &TwoEigenState) -> TwoEigenReport {
    let (x, y) = (t.x.v(), t.y.v());
    let q = t.x.d1() + x * x;
    let fp = t.fprime.v();
    let rho = t.rho;
    let (r1, r2) = (t.r1 as f64, t.r2 as f64);
    let s1 = r1 * x + r2 * y;
    let s2 = r1 * x * x + r2 * y * y;
    let (k1, k2) = (t.k1, t.k2);
    let d = x - y;
    let sum = x + y;
    let sq = x * x + y * y;
    let n = t.n as f64;

    let values = [
        (k1 - k2) - d * (s1 - sum - fp),
        (k1 + k2) - (2.0 * q + rho + s2 - sq),
        (k1 * x - k2 * y) - d * (q + rho + sum * (s1 - sum - fp) + x * y),
        (-k1 * y + k2 * x) - d * (q + rho + x * y),
        (k1 * x - k2 * y) - d * (q + s2 - sq - x * y),
        (k1 - k2) * sum - d * (s2 - sq - 2.0 * x * y - rho),
        (s2 - rho) - sum * (s1 - fp),
        (n - 1.0) * x * y + rho - fp * sum,
        q + x * y,
        x * y * ((r1 - 1.0) * x * x + (r2 - 1.0) * y * y - 2.0 * x * y - rho),
    ];
    TwoEigenReport {
        residuals: TWO_EIGEN_NAMES.iter().copied().zip(values).collect(),
        sum_nonzero: sum != 0.0,
        product_guard: (n - 1.0) * x * y + rho != 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_entry, CatalogId};
    use crate::curvature::connection_state;

    fn type_iii_state() -> TwoEigenState {
        TwoEigenState::new(
            Jet3::new(0.6, -0.6, 1.2, -3.6),
            Jet3::new(0.4, -0.4, 0.8, -2.4),
            1,
            4,
            0.0,
            0.0,
            Jet2::from_derivatives(&[1.2, -1.2, 2.4]),
            0.0,
            6,
        )
        .unwrap()
    }

    #[test]
    fn hand_substitution_type_iii() {
        let rep = two_eigen_identities(&type_iii_state());
        for (name, v) in &rep.residuals {
            assert!(v.abs() < 1e-14, "{name} = {v}");
        }
        assert!(rep.sum_nonzero && rep.product_guard);
    }

    #[test]
    fn extracted_from_catalog() {
        for id in [CatalogId::type_iii(6), CatalogId::type_ii(7, 3, -2.0)] {
            let spec = catalog_entry(id).unwrap();
            for s in [0.3, 1.0, 4.5] {
                let st = TwoEigenState::from_frame(&connection_state(&spec, s).unwrap()).unwrap();
                let rep = two_eigen_identities(&st);
                assert!(rep.max_abs() < 1e-10, "{id:?} at {s}: {:?}", rep.residuals);
            }
        }
    }

    #[test]
    fn violated_relations_give_nonzero_residuals() {
        let mut st = type_iii_state();
        st.fprime = Jet2::constant(1.3);
        st.k1 = 0.25;
        let rep = two_eigen_identities(&st);
        assert!(rep.residuals.iter().all(|r| r.1.is_finite()));
        assert!(rep.max_abs() > 1e-3);
    }

    #[test]
    fn distinctness_guard() {
        let j = Jet3::new(0.5, 0.0, 0.0, 0.0);
        let fp = Jet2::constant(1.0);
        let err = TwoEigenState::new(j, j, 1, 4, 0.0, 0.0, fp, 0.0, 6).unwrap_err();
        assert!(matches!(err, TwoEigenError::NotDistinct { .. }));
        let y = Jet3::new(0.1, 0.0, 0.0, 0.0);
        assert!(matches!(
            TwoEigenState::new(j, y, 1, 3, 0.0, 0.0, fp, 0.0, 6),
            Err(TwoEigenError::Multiplicities { .. })
        ));
    }
}
