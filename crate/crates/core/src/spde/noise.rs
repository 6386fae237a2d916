use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Brownian increments on a uniform grid.
///
/// Path `p` of base seed `s` is drawn from ChaCha12 keyed by `s` on stream
/// `p`, so every path is reproducible independently of the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePath {
    increments: Vec<f64>,
    seed: u64,
    path_index: u64,
    dt: f64,
    t_end: f64,
}

/// Path 0 of `seed`.
pub fn sample_noise(seed: u64, dt: f64, t_end: f64) -> Result<NoisePath> {
    NoisePath::sample(seed, 0, dt, t_end)
}

impl NoisePath {
    pub fn sample(seed: u64, path_index: u64, dt: f64, t_end: f64) -> Result<Self> {
        let n = steps(dt, t_end)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(path_index);
        let scale = dt.sqrt();
        let increments = (0..n)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Ok(Self {
            increments,
            seed,
            path_index,
            dt,
            t_end,
        })
    }

    /// Wrap explicit increments.
    pub fn from_increments(increments: Vec<f64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || increments.is_empty() {
            return Err(Error::InvalidConfig(
                "noise needs dt > 0 and increments".into(),
            ));
        }
        let t_end = dt * increments.len() as f64;
        Ok(Self {
            increments,
            seed: 0,
            path_index: 0,
            dt,
            t_end,
        })
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// The same Brownian path on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.increments.len().is_multiple_of(factor) {
            return Err(Error::InvalidConfig(format!(
                "cannot coarsen {} increments by {factor}",
                self.increments.len()
            )));
        }
        Ok(Self {
            increments: self
                .increments
                .chunks(factor)
                .map(|c| c.iter().sum())
                .collect(),
            dt: self.dt * factor as f64,
            ..self.clone()
        })
    }
}

fn steps(dt: f64, t_end: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "horizon must be positive, got {t_end}"
        )));
    }
    let n = t_end / dt;
    if (n - n.round()).abs() > 1e-6 * n.max(1.0) {
        return Err(Error::InvalidConfig(format!(
            "horizon {t_end} is not an integer multiple of dt {dt}"
        )));
    }
    Ok(n.round() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_and_replay() {
        let dt = 1e-3;
        let p = sample_noise(7, dt, 100.0).unwrap();
        assert_eq!(p.len(), 100_000);
        let n = p.len() as f64;
        let mean = p.increments().iter().sum::<f64>() / n;
        let var = p
            .increments()
            .iter()
            .map(|x| (x - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        assert!(mean.abs() < 4.0 * dt.sqrt() / n.sqrt());
        assert!((var / dt - 1.0).abs() < 0.05);
        assert_eq!(p, sample_noise(7, dt, 100.0).unwrap());
        assert_ne!(
            p.increments(),
            NoisePath::sample(7, 1, dt, 100.0).unwrap().increments()
        );
    }

    #[test]
    fn coarsening_preserves_sums() {
        let p = sample_noise(1, 0.25, 2.0).unwrap();
        let c = p.coarsen(2).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.increments()[1], p.increments()[2] + p.increments()[3]);
        assert!(p.coarsen(3).is_err());
        assert!(sample_noise(1, 0.3, 1.0).is_err());
    }
}
