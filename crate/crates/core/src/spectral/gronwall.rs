//! Closed-form bounds from the two nonlinear Gronwall lemmas.
//!
//! Coefficient functions are passed as closures and integrated with adaptive
//! Simpson; pass their discontinuities as `breaks` when they are only
//! piecewise smooth.

use crate::error::{Error, Result};
use crate::quadrature::AdaptiveSimpson;

/// Quadrature settings for the Gronwall bounds.
#[derive(Debug, Clone, Default)]
pub struct Gronwall {
    pub quad: AdaptiveSimpson,
    pub breaks: Vec<f64>,
}

impl Gronwall {
    pub fn with_breaks(breaks: Vec<f64>) -> Self {
        Self {
            quad: AdaptiveSimpson::default(),
            breaks,
        }
    }

    fn integral(&self, f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        self.quad.integrate_with_breaks(f, a, b, &self.breaks)
    }

    /// Bound for `Y(t) <= c + int_{t0}^t (a Y + b Y^alpha)`:
    /// `{c^{1-alpha} e^{(1-alpha) int a} + (1-alpha) int b(s) e^{(1-alpha) int_s^t a} ds}^{1/(1-alpha)}`.
    pub fn bernoulli(
        &self,
        c: f64,
        alpha: f64,
        a: &dyn Fn(f64) -> f64,
        b: &dyn Fn(f64) -> f64,
        t0: f64,
        t: f64,
    ) -> Result<f64> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::Domain(format!(
                "alpha must lie in [0, 1), got {alpha}"
            )));
        }
        if c < 0.0 || t < t0 {
            return Err(Error::Domain(
                "need c >= 0 and t >= t0 for the Gronwall bound".into(),
            ));
        }
        let beta = 1.0 - alpha;
        let a_total = self.integral(a, t0, t);
        let outer = |s: f64| {
            let bs = b(s);
            if bs == 0.0 {
                0.0
            } else {
                bs * (beta * self.integral(a, s, t)).exp()
            }
        };
        let tail = self.integral(&outer, t0, t);
        let inside = c.powf(beta) * (beta * a_total).exp() + beta * tail;
        Ok(inside.powf(1.0 / beta))
    }

    /// Bound for `X + a <= M + int c1 X + int c2 X log X`:
    /// `M(t)^{exp C2(t)} exp(exp C2(t) int_0^t c1 e^{-C2})` with `C2 = int c2`.
    pub fn loglinear(
        &self,
        m: &dyn Fn(f64) -> f64,
        c1: &dyn Fn(f64) -> f64,
        c2: &dyn Fn(f64) -> f64,
        t: f64,
    ) -> Result<f64> {
        let m0 = m(0.0);
        if !(m0 > 1.0) {
            return Err(Error::Domain(format!("M(0) must exceed 1, got {m0}")));
        }
        if t < 0.0 {
            return Err(Error::Domain("t must be nonnegative".into()));
        }
        let big_c2 = |s: f64| self.integral(c2, 0.0, s);
        let weighted = |s: f64| {
            let v = c1(s);
            if v == 0.0 {
                0.0
            } else {
                v * (-big_c2(s)).exp()
            }
        };
        let growth = big_c2(t).exp();
        let inner = self.integral(&weighted, 0.0, t);
        Ok((growth * (m(t).ln() + inner)).exp())
    }
}

/// [`Gronwall::bernoulli`] with default quadrature.
pub fn gronwall_bernoulli(
    c: f64,
    alpha: f64,
    a: &dyn Fn(f64) -> f64,
    b: &dyn Fn(f64) -> f64,
    t0: f64,
    t: f64,
) -> Result<f64> {
    Gronwall::default().bernoulli(c, alpha, a, b, t0, t)
}

/// [`Gronwall::loglinear`] with default quadrature.
pub fn gronwall_loglinear(
    m: &dyn Fn(f64) -> f64,
    c1: &dyn Fn(f64) -> f64,
    c2: &dyn Fn(f64) -> f64,
    t: f64,
) -> Result<f64> {
    Gronwall::default().loglinear(m, c1, c2, t)
}
