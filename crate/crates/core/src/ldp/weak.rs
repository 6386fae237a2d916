use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{solve_skeleton, Control, SkeletonConfig};
use crate::spectral::{path_metric, SpectralField};

/// Test functions on `[0, T]` for weak-convergence pairings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `(t / T)^k`.
    Monomial { k: u32 },
    /// `sin(m pi t / T)`.
    Sine { m: u32 },
}

impl TestFunction {
    /// Monomials of degree 0..=3 and sines with m = 1..=3.
    pub fn dictionary() -> Vec<TestFunction> {
        let mut d: Vec<_> = (0..=3).map(|k| TestFunction::Monomial { k }).collect();
        d.extend((1..=3).map(|m| TestFunction::Sine { m }));
        d
    }

    fn antiderivative(&self, t: f64, horizon: f64) -> f64 {
        match *self {
            TestFunction::Monomial { k } => {
                horizon * (t / horizon).powi(k as i32 + 1) / (k + 1) as f64
            }
            TestFunction::Sine { m } => {
                let w = m as f64 * PI / horizon;
                -(w * t).cos() / w
            }
        }
    }

    /// `int_0^T h phi` for piecewise-constant `h`, exactly.
    pub fn pair(&self, h: &Control) -> f64 {
        let horizon = h.horizon();
        let tau = h.piece_len();
        h.values()
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let (a, b) = (k as f64 * tau, (k + 1) as f64 * tau);
                v * (self.antiderivative(b, horizon) - self.antiderivative(a, horizon))
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakEnergyReport {
    /// `max_phi |int (h_eps - h) phi|`.
    pub max_gap: f64,
    pub energy_h_eps: f64,
    pub energy_h: f64,
    /// Both energies within the level `N`.
    pub within_level: bool,
}

pub fn weak_energy_check(
    h_eps: &Control,
    h: &Control,
    test_functions: &[TestFunction],
    level: f64,
) -> Result<WeakEnergyReport> {
    let diff = h_eps.sub(h)?;
    let max_gap = test_functions
        .iter()
        .map(|phi| phi.pair(&diff).abs())
        .fold(0.0, f64::max);
    let (energy_h_eps, energy_h) = (h_eps.energy(), h.energy());
    Ok(WeakEnergyReport {
        max_gap,
        energy_h_eps,
        energy_h,
        within_level: energy_h_eps <= level && energy_h <= level,
    })
}

/// Refine `h` onto `pieces` pieces (a multiple of its own count).
pub fn refine_control(h: &Control, pieces: usize) -> Result<Control> {
    if !pieces.is_multiple_of(h.n_pieces()) {
        return Err(Error::InvalidConfig(format!(
            "cannot refine {} pieces onto {pieces}",
            h.n_pieces()
        )));
    }
    let r = pieces / h.n_pieces();
    let values = h
        .values()
        .iter()
        .flat_map(|&v| std::iter::repeat_n(v, r))
        .collect();
    Control::new(values, h.horizon())
}

/// `h + amplitude sin(t / eps)` as exact cell averages on one piece per step.
pub fn oscillatory_control(h: &Control, amplitude: f64, eps: f64, steps: usize) -> Result<Control> {
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let base = refine_control(h, steps)?;
    let wiggle =
        Control::from_antiderivative(steps, h.horizon(), |t| -amplitude * eps * (t / eps).cos())?;
    let values = base
        .values()
        .iter()
        .zip(wiggle.values())
        .map(|(a, b)| a + b)
        .collect();
    Control::new(values, h.horizon())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionBRow {
    pub eps: f64,
    pub rho: f64,
    pub energy: f64,
    pub weak_gap: f64,
}

/// Distance between the skeleton driven by `h + A sin(t/eps)` and the one
/// driven by `h`, per `eps`. Every perturbed control must stay in the energy
/// level `level`.
pub fn condition_b_experiment(
    u0: &SpectralField,
    h: &Control,
    amplitude: f64,
    eps_list: &[f64],
    level: f64,
    cfg: &SkeletonConfig,
) -> Result<Vec<ConditionBRow>> {
    cfg.validate()?;
    let steps = cfg.n_steps();
    let base = refine_control(h, steps)?;
    let reference = solve_skeleton(u0, &base, cfg)?;
    let dict = TestFunction::dictionary();
    eps_list
        .iter()
        .map(|&eps| {
            let he = oscillatory_control(h, amplitude, eps, steps)?;
            let weak = weak_energy_check(&he, &base, &dict, level)?;
            if !weak.within_level {
                return Err(Error::InvalidConfig(format!(
                    "control energy {} at eps = {eps} exceeds the level {level}",
                    weak.energy_h_eps.max(weak.energy_h)
                )));
            }
            let y = solve_skeleton(u0, &he, cfg)?;
            let rho = path_metric(&y, &reference, 0.0, cfg.t_end)?.rho;
            Ok(ConditionBRow {
                eps,
                rho,
                energy: weak.energy_h_eps,
                weak_gap: weak.max_gap,
            })
        })
        .collect()
}
