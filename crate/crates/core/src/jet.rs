//! Truncated Taylor jets of scalar functions of one variable.
//!
//! A `Jet<N>` carries a value and its first `N` derivatives with respect to
//! the base coordinate `s`. Arithmetic follows the Leibniz rule and the
//! standard recurrences for `exp`, `log` and real powers, so every derivative
//! channel is exact up to floating point rounding.
//!
//! Curvature quantities need different orders: Cotton components need
//! `lambda'`, which involves `h'''`, and the Laplacian identity needs
//! `lambda''`, which involves `h''''`. Warping functions are therefore
//! evaluated as [`Jet4`], connection coefficients as [`Jet3`] and Ricci
//! eigenvalues as [`Jet2`].

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

/// Highest derivative order any jet in this crate can carry.
pub const MAX_ORDER: usize = 4;

const BINOM: [[f64; MAX_ORDER + 1]; MAX_ORDER + 1] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0, 0.0],
    [1.0, 3.0, 3.0, 1.0, 0.0],
    [1.0, 4.0, 6.0, 4.0, 1.0],
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("operation `{0}` needs a second operand")]
    MissingOperand(&'static str),
}

/// Value plus the first `N` derivatives of a scalar function of `s`.
#[derive(Clone, Copy, PartialEq)]
pub struct Jet<const N: usize> {
    d: [f64; MAX_ORDER + 1],
}

pub type Jet2 = Jet<2>;
pub type Jet3 = Jet<3>;
pub type Jet4 = Jet<4>;

impl<const N: usize> Jet<N> {
    const ORDER_OK: () = assert!(N <= MAX_ORDER, "jet order exceeds MAX_ORDER");

    /// Builds a jet from `[value, d1, d2, ...]`; entries past `N` are dropped.
    pub fn from_derivatives(values: &[f64]) -> Self {
        #[allow(clippy::let_unit_value)]
        let _ = Self::ORDER_OK;
        let mut d = [0.0; MAX_ORDER + 1];
        for (slot, &x) in d.iter_mut().zip(values.iter()).take(N + 1) {
            *slot = x;
        }
        Jet { d }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_derivatives(&[c])
    }

    /// Jet of the coordinate function itself at `s`.
    pub fn variable(s: f64) -> Self {
        Self::from_derivatives(&[s, 1.0])
    }

    pub const fn order(&self) -> usize {
        N
    }

    #[inline]
    pub fn v(&self) -> f64 {
        self.d[0]
    }

    /// `k`-th derivative; zero beyond the carried order.
    #[inline]
    pub fn d(&self, k: usize) -> f64 {
        if k <= N {
            self.d[k]
        } else {
            0.0
        }
    }

    #[inline]
    pub fn d1(&self) -> f64 {
        self.d(1)
    }

    #[inline]
    pub fn d2(&self) -> f64 {
        self.d(2)
    }

    #[inline]
    pub fn d3(&self) -> f64 {
        self.d(3)
    }

    pub fn derivatives(&self) -> Vec<f64> {
        self.d[..=N].to_vec()
    }

    pub fn is_finite(&self) -> bool {
        self.d[..=N].iter().all(|x| x.is_finite())
    }

    /// True when every derivative channel is exactly zero.
    pub fn is_constant(&self) -> bool {
        self.d[1..=N].iter().all(|&x| x == 0.0)
    }

    /// Drops derivative channels above `M`.
    pub fn truncate<const M: usize>(&self) -> Jet<M> {
        assert!(M <= N, "cannot raise jet order by truncation");
        Jet::<M>::from_derivatives(&self.d[..=M])
    }

    /// Jet of the derivative function, carried to order `M <= N - 1`.
    pub fn derivative<const M: usize>(&self) -> Jet<M> {
        assert!(M < N, "derivative jet needs one order of headroom");
        Jet::<M>::from_derivatives(&self.d[1..=M + 1])
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = *self;
        for x in out.d[..=N].iter_mut() {
            *x *= c;
        }
        out
    }

    pub fn add_scalar(&self, c: f64) -> Self {
        let mut out = *self;
        out.d[0] += c;
        out
    }

    pub fn square(&self) -> Self {
        *self * *self
    }

    /// `1/self` without a zero check (IEEE semantics).
    pub fn recip_unchecked(&self) -> Self {
        let mut q = [0.0; MAX_ORDER + 1];
        let b0 = self.d[0];
        q[0] = 1.0 / b0;
        for k in 1..=N {
            let mut acc = 0.0;
            for i in 0..k {
                acc += BINOM[k][i] * q[i] * self.d[k - i];
            }
            q[k] = -acc / b0;
        }
        Jet { d: q }
    }

    pub fn recip(&self) -> Result<Self, JetError> {
        if self.d[0] == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        Ok(self.recip_unchecked())
    }

    /// Quotient without a zero check (IEEE semantics).
    pub fn div_unchecked(&self, rhs: &Self) -> Self {
        let mut q = [0.0; MAX_ORDER + 1];
        let b0 = rhs.d[0];
        for k in 0..=N {
            let mut acc = self.d[k];
            for i in 0..k {
                acc -= BINOM[k][i] * q[i] * rhs.d[k - i];
            }
            q[k] = acc / b0;
        }
        Jet { d: q }
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self, JetError> {
        if rhs.d[0] == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        Ok(self.div_unchecked(rhs))
    }

    pub fn exp(&self) -> Self {
        let mut y = [0.0; MAX_ORDER + 1];
        y[0] = self.d[0].exp();
        for k in 1..=N {
            let mut acc = 0.0;
            for i in 0..k {
                acc += BINOM[k - 1][i] * self.d[i + 1] * y[k - 1 - i];
            }
            y[k] = acc;
        }
        Jet { d: y }
    }

    pub fn ln(&self) -> Result<Self, JetError> {
        let u0 = self.d[0];
        if u0 <= 0.0 || !u0.is_finite() {
            return Err(JetError::Domain(format!("log of non-positive value {u0}")));
        }
        let mut y = [0.0; MAX_ORDER + 1];
        y[0] = u0.ln();
        for k in 1..=N {
            let mut acc = self.d[k];
            for i in 0..k - 1 {
                acc -= BINOM[k - 1][i] * y[i + 1] * self.d[k - 1 - i];
            }
            y[k] = acc / u0;
        }
        Ok(Jet { d: y })
    }

    /// `self^p` for a constant real exponent.
    ///
    /// Integer exponents are computed by repeated squaring and accept any
    /// sign of the base; other exponents need a strictly positive base.
    pub fn powf(&self, p: f64) -> Result<Self, JetError> {
        if p == 0.0 {
            return Ok(Self::constant(1.0));
        }
        if p.fract() == 0.0 && p.abs() <= 64.0 {
            let pos = self.powi_unsigned(p.abs() as u32);
            return if p > 0.0 { Ok(pos) } else { pos.recip() };
        }
        let u0 = self.d[0];
        if u0 <= 0.0 || !u0.is_finite() {
            return Err(JetError::Domain(format!(
                "non-integer power {p} of non-positive value {u0}"
            )));
        }
        let mut y = [0.0; MAX_ORDER + 1];
        y[0] = u0.powf(p);
        // y' u = p u' y, differentiated k-1 times
        for k in 1..=N {
            let mut acc = 0.0;
            for i in 0..k {
                acc += p * BINOM[k - 1][i] * self.d[i + 1] * y[k - 1 - i];
            }
            for i in 0..k - 1 {
                acc -= BINOM[k - 1][i] * y[i + 1] * self.d[k - 1 - i];
            }
            y[k] = acc / u0;
        }
        Ok(Jet { d: y })
    }

    fn powi_unsigned(&self, mut e: u32) -> Self {
        let mut base = *self;
        let mut acc = Self::constant(1.0);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        acc
    }

    /// General power: the constant-exponent rule when `exponent` carries no
    /// derivatives, `exp(exponent * log(self))` otherwise.
    pub fn pow(&self, exponent: &Self) -> Result<Self, JetError> {
        if exponent.is_constant() {
            return self.powf(exponent.v());
        }
        Ok((*exponent * self.ln()?).exp())
    }
}

impl<const N: usize> Default for Jet<N> {
    fn default() -> Self {
        Self::constant(0.0)
    }
}

impl<const N: usize> fmt::Debug for Jet<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet{:?}", &self.d[..=N])
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        for k in 0..=N {
            out.d[k] += rhs.d[k];
        }
        out
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self;
        for k in 0..=N {
            out.d[k] -= rhs.d[k];
        }
        out
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = [0.0; MAX_ORDER + 1];
        for (k, slot) in out.iter_mut().enumerate().take(N + 1) {
            let mut acc = 0.0;
            for (i, b) in BINOM[k].iter().enumerate().take(k + 1) {
                acc += b * self.d[i] * rhs.d[k - i];
            }
            *slot = acc;
        }
        Jet { d: out }
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self.div_unchecked(&rhs)
    }
}

impl<const N: usize> Add<f64> for Jet<N> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        self.add_scalar(rhs)
    }
}

impl<const N: usize> Sub<f64> for Jet<N> {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        self.add_scalar(-rhs)
    }
}

impl<const N: usize> Mul<f64> for Jet<N> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

impl<const N: usize> Mul<Jet<N>> for f64 {
    type Output = Jet<N>;
    fn mul(self, rhs: Jet<N>) -> Jet<N> {
        rhs.scale(self)
    }
}

impl Jet3 {
    pub fn new(v: f64, d1: f64, d2: f64, d3: f64) -> Self {
        Self::from_derivatives(&[v, d1, d2, d3])
    }
}

/// Elementary operations exposed through [`jet_combine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Exp,
    Log,
}

impl JetOp {
    fn name(self) -> &'static str {
        match self {
            JetOp::Add => "add",
            JetOp::Sub => "sub",
            JetOp::Mul => "mul",
            JetOp::Div => "div",
            JetOp::Pow => "pow",
            JetOp::Exp => "exp",
            JetOp::Log => "log",
        }
    }
}

/// Applies one elementary operation to third-order jets.
pub fn jet_combine(op: JetOp, a: Jet3, b: Option<Jet3>) -> Result<Jet3, JetError> {
    let rhs = || b.ok_or(JetError::MissingOperand(op.name()));
    match op {
        JetOp::Add => Ok(a + rhs()?),
        JetOp::Sub => Ok(a - rhs()?),
        JetOp::Mul => Ok(a * rhs()?),
        JetOp::Div => a.checked_div(&rhs()?),
        JetOp::Pow => a.pow(&rhs()?),
        JetOp::Exp => Ok(a.exp()),
        JetOp::Log => a.ln(),
    }
}
