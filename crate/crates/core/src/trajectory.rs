use std::sync::Arc;

use crate::error::{Error, Result};
use crate::skeleton::Control;
use crate::spde::NoisePath;
use crate::spectral::{Domain, SpectralField};

/// Time-indexed sequence of fields together with the control and noise that
/// produced it.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<SpectralField>,
    control: Option<Control>,
    noise: Option<NoisePath>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<SpectralField>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: states.len(),
            });
        }
        let Some(first) = states.first() else {
            return Err(Error::InvalidConfig(
                "trajectory needs at least one state".into(),
            ));
        };
        let dom = first.domain();
        if states
            .iter()
            .any(|s| !Arc::ptr_eq(s.domain(), dom) && s.domain().config() != dom.config())
        {
            return Err(Error::InvalidConfig(
                "trajectory states must share one domain".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig(
                "times must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            times,
            states,
            control: None,
            noise: None,
        })
    }

    /// Uniform grid `t_k = k dt`, `k = 0..states.len()`.
    pub fn uniform(dt: f64, states: Vec<SpectralField>) -> Result<Self> {
        let times = (0..states.len()).map(|k| k as f64 * dt).collect();
        Self::new(times, states)
    }

    pub fn with_control(mut self, control: Control) -> Self {
        self.control = Some(control);
        self
    }

    pub fn with_noise(mut self, noise: NoisePath) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SpectralField] {
        &self.states
    }

    pub fn control(&self) -> Option<&Control> {
        self.control.as_ref()
    }

    pub fn noise(&self) -> Option<&NoisePath> {
        self.noise.as_ref()
    }

    pub fn domain(&self) -> &Arc<Domain> {
        self.states[0].domain()
    }

    pub fn initial(&self) -> &SpectralField {
        &self.states[0]
    }

    pub fn terminal(&self) -> &SpectralField {
        self.states.last().expect("nonempty by construction")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of time steps (`len - 1`).
    pub fn n_steps(&self) -> usize {
        self.states.len() - 1
    }

    /// Copy of the trajectory with every state zero-padded or truncated onto
    /// `target`.
    pub fn embed(&self, target: &Arc<Domain>) -> Self {
        Self {
            times: self.times.clone(),
            states: self.states.iter().map(|s| s.embed(target)).collect(),
            control: self.control.clone(),
            noise: self.noise.clone(),
        }
    }

    /// Keep every `stride`-th state (and the last one).
    pub fn subsample(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        let last = self.states.len() - 1;
        let idx: Vec<usize> = (0..=last)
            .filter(|i| i % stride == 0 || *i == last)
            .collect();
        Self {
            times: idx.iter().map(|&i| self.times[i]).collect(),
            states: idx.iter().map(|&i| self.states[i].clone()).collect(),
            control: self.control.clone(),
            noise: self.noise.clone(),
        }
    }
}
