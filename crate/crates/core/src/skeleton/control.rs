use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-constant control on `K` uniform pieces of `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Control {
    values: Vec<f64>,
    horizon: f64,
}

impl Control {
    pub fn new(values: Vec<f64>, horizon: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig(
                "control needs at least one piece".into(),
            ));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "control horizon must be positive, got {horizon}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("control values must be finite".into()));
        }
        Ok(Self { values, horizon })
    }

    pub fn zero(pieces: usize, horizon: f64) -> Result<Self> {
        Self::new(vec![0.0; pieces], horizon)
    }

    pub fn constant(value: f64, pieces: usize, horizon: f64) -> Result<Self> {
        Self::new(vec![value; pieces], horizon)
    }

    /// Cell averages `(F(t_{k+1}) - F(t_k)) / tau` of a function with
    /// antiderivative `F`.
    pub fn from_antiderivative(
        pieces: usize,
        horizon: f64,
        antiderivative: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let tau = horizon / pieces as f64;
        let values = (0..pieces)
            .map(|k| {
                let (a, b) = (k as f64 * tau, (k + 1) as f64 * tau);
                (antiderivative(b) - antiderivative(a)) / tau
            })
            .collect();
        Self::new(values, horizon)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn n_pieces(&self) -> usize {
        self.values.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn piece_len(&self) -> f64 {
        self.horizon / self.values.len() as f64
    }

    /// `int_0^T h^2`.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.piece_len()
    }

    /// Membership in `S_N = {h : int h^2 <= N}`.
    pub fn in_level_set(&self, n: f64) -> bool {
        self.energy() <= n
    }

    /// Value on the piece containing `t` (right-continuous; `t = T` maps to
    /// the last piece).
    pub fn value_at(&self, t: f64) -> f64 {
        let k = (t / self.piece_len()).floor().max(0.0) as usize;
        self.values[k.min(self.values.len() - 1)]
    }

    /// Piece boundaries `0, tau, .., T`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let tau = self.piece_len();
        (0..=self.values.len()).map(|k| k as f64 * tau).collect()
    }

    pub fn sub(&self, other: &Control) -> Result<Control> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Control::new(values, self.horizon)
    }

    pub fn check_compatible(&self, other: &Control) -> Result<()> {
        if self.values.len() != other.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        if (self.horizon - other.horizon).abs() > 1e-12 * self.horizon {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}
