use crate::error::{Error, Result};
use crate::skeleton::{forcing, march, Control, SkeletonConfig, Stepper};
use crate::spectral::SpectralField;

/// Differentiable functional of the terminal state.
pub trait TerminalCost: Sync {
    fn value(&self, u: &SpectralField) -> f64;
    /// Gradient with respect to the coefficients of `u`.
    fn gradient(&self, u: &SpectralField) -> Vec<f64>;
}

/// `<g, u>`.
#[derive(Debug, Clone)]
pub struct LinearCost {
    pub g: Vec<f64>,
}

impl TerminalCost for LinearCost {
    fn value(&self, u: &SpectralField) -> f64 {
        self.g.iter().zip(u.coeffs()).map(|(a, b)| a * b).sum()
    }

    fn gradient(&self, _u: &SpectralField) -> Vec<f64> {
        self.g.clone()
    }
}

/// `weight/2 * |u - target|^2`.
#[derive(Debug, Clone)]
pub struct QuadraticCost {
    pub target: Vec<f64>,
    pub weight: f64,
}

impl TerminalCost for QuadraticCost {
    fn value(&self, u: &SpectralField) -> f64 {
        let d2: f64 = u
            .coeffs()
            .iter()
            .zip(&self.target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        0.5 * self.weight * d2
    }

    fn gradient(&self, u: &SpectralField) -> Vec<f64> {
        u.coeffs()
            .iter()
            .zip(&self.target)
            .map(|(a, b)| self.weight * (a - b))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct AdjointResult {
    /// Terminal cost at the forward solution.
    pub value: f64,
    /// Derivative with respect to each control piece value.
    pub gradient: Vec<f64>,
    /// Derivative with respect to the initial coefficients.
    pub initial_gradient: Vec<f64>,
    pub terminal: SpectralField,
}

/// Exact gradient of `J(h) = cost(u_N)` for the discrete recursion, by a
/// reverse sweep over the stored forward states.
pub fn adjoint_gradient(
    u0: &SpectralField,
    h: &Control,
    cfg: &SkeletonConfig,
    cost: &dyn TerminalCost,
) -> Result<AdjointResult> {
    cfg.validate()?;
    let kicks = forcing(cfg, Some(h), None)?;
    let spp = cfg.steps_per_piece(h)?;
    let n = cfg.n_modes_checked(u0)?;
    let mut states: Vec<f64> = Vec::with_capacity((kicks.len() + 1) * n);
    let terminal = march(u0, cfg, &kicks, |_, c| states.extend_from_slice(c))?;
    let terminal = SpectralField::from_coeffs(&cfg.domain, terminal)?;
    let value = cost.value(&terminal);
    let mut lam = cost.gradient(&terminal);
    if lam.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: lam.len(),
        });
    }
    let mut gradient = vec![0.0; h.n_pieces()];
    if !cfg.sigma_active() {
        // the control never enters; only the initial-state sensitivity remains
        return Ok(AdjointResult {
            value,
            gradient,
            initial_gradient: initial_sensitivity(cfg, &states, &kicks, lam),
            terminal,
        });
    }
    let mut stepper = Stepper::new(cfg);
    let damp = stepper.damp().to_vec();
    for k in (0..kicks.len()).rev() {
        let u = &states[k * n..(k + 1) * n];
        let q: Vec<f64> = lam.iter().zip(&damp).map(|(l, d)| l * d).collect();
        let s = stepper.sigma_projection(u);
        let dk: f64 = q.iter().zip(&s).map(|(a, b)| a * b).sum();
        gradient[k / spp] += cfg.dt * dk;
        lam = stepper.jacobian_transpose(u, kicks[k], &q);
        if lam.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: k });
        }
    }
    Ok(AdjointResult {
        value,
        gradient,
        initial_gradient: lam,
        terminal,
    })
}

fn initial_sensitivity(
    cfg: &SkeletonConfig,
    states: &[f64],
    kicks: &[f64],
    mut lam: Vec<f64>,
) -> Vec<f64> {
    if cfg.mode == super::OracleMode::ReactionOnly {
        // pointwise flow on the nodes; its sensitivity is not tracked
        return vec![f64::NAN; lam.len()];
    }
    let n = lam.len();
    let mut stepper = Stepper::new(cfg);
    let damp = stepper.damp().to_vec();
    for k in (0..kicks.len()).rev() {
        let q: Vec<f64> = lam.iter().zip(&damp).map(|(l, d)| l * d).collect();
        lam = stepper.jacobian_transpose(&states[k * n..(k + 1) * n], kicks[k], &q);
    }
    lam
}

impl SkeletonConfig {
    fn n_modes_checked(&self, u0: &SpectralField) -> Result<usize> {
        if u0.domain().config() != self.domain.config() {
            return Err(Error::InvalidConfig(
                "initial condition lives on a different domain".into(),
            ));
        }
        Ok(self.domain.n_modes())
    }
}
