//! Galerkin solver for the controlled deterministic equation
//! `du = (u_xx + P_n[u log|u|] + P_n[sigma(u)] h) dt`, its discrete adjoint,
//! and a-priori bound diagnostics.
//!
//! One step of length `dt` with forcing increment `k = h dt + eps dW` is
//!
//! ```text
//! u+ = D * P_n[ R_dt(u) + k sigma(u) ]
//! ```
//!
//! where `R_dt` is the pointwise reaction flow applied on the quadrature
//! nodes and `D` is the per-mode linear propagator (`exp(-lambda dt)` or
//! `1 / (1 + lambda dt)`).

mod adjoint;
mod bounds;
mod control;

pub use adjoint::{adjoint_gradient, AdjointResult, LinearCost, QuadraticCost, TerminalCost};
pub use bounds::{uniform_bound_report, UniformBoundReport};
pub use control::Control;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coefficients::{b, b_prime, CoefficientSet};
use crate::error::{Error, Result};
use crate::spectral::{Domain, SpectralField};
use crate::trajectory::Trajectory;

/// Treatment of the Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Exact per-mode exponential.
    #[default]
    ExpEuler,
    /// Backward Euler.
    ImexEuler,
}

/// Which terms of the equation are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    #[default]
    Full,
    /// Drift `b` switched off.
    HeatOnly,
    /// Laplacian and `sigma` switched off; the state evolves pointwise on
    /// the quadrature nodes.
    ReactionOnly,
}

/// Integrator for the pointwise reaction `y' = y log|y|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactionScheme {
    /// Exact flow `y -> sign(y) |y|^{exp(dt)}`.
    #[default]
    Exact,
    /// Forward Euler `y -> y + dt y log|y|`.
    Explicit,
}

pub const DEFAULT_OVERFLOW_GUARD: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct SkeletonConfig {
    pub domain: Arc<Domain>,
    pub coeffs: CoefficientSet,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub mode: OracleMode,
    pub reaction: ReactionScheme,
    /// Abort once the H-norm exceeds this value.
    pub overflow_guard: f64,
}

impl SkeletonConfig {
    pub fn new(domain: Arc<Domain>, coeffs: CoefficientSet, dt: f64, t_end: f64) -> Self {
        Self {
            domain,
            coeffs,
            dt,
            t_end,
            scheme: Scheme::default(),
            mode: OracleMode::default(),
            reaction: ReactionScheme::default(),
            overflow_guard: DEFAULT_OVERFLOW_GUARD,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_mode(mut self, mode: OracleMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_reaction(mut self, reaction: ReactionScheme) -> Self {
        self.reaction = reaction;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_guard(mut self, overflow_guard: f64) -> Self {
        self.overflow_guard = overflow_guard;
        self
    }

    pub fn with_domain(mut self, domain: Arc<Domain>) -> Self {
        self.domain = domain;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive, got {}",
                self.t_end
            )));
        }
        let steps = self.t_end / self.dt;
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "horizon {} is not an integer multiple of dt {}",
                self.t_end, self.dt
            )));
        }
        if !(self.overflow_guard > 0.0) {
            return Err(Error::InvalidConfig(
                "overflow guard must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps()).map(|k| k as f64 * self.dt).collect()
    }

    /// Per-mode linear propagator over one step.
    pub fn propagator(&self) -> Vec<f64> {
        let lam = self.domain.eigenvalues();
        match (self.mode, self.scheme) {
            (OracleMode::ReactionOnly, _) => vec![1.0; lam.len()],
            (_, Scheme::ExpEuler) => lam.iter().map(|l| (-l * self.dt).exp()).collect(),
            (_, Scheme::ImexEuler) => lam.iter().map(|l| 1.0 / (1.0 + l * self.dt)).collect(),
        }
    }

    fn sigma_active(&self) -> bool {
        self.mode != OracleMode::ReactionOnly && !self.coeffs.sigma.is_zero()
    }

    fn reaction_active(&self) -> bool {
        self.mode != OracleMode::HeatOnly
    }

    /// Reaction map over one step and its derivative.
    fn reaction(&self) -> impl Fn(f64) -> (f64, f64) + '_ {
        let dt = self.dt;
        let a = dt.exp();
        let explicit = self.reaction == ReactionScheme::Explicit;
        move |y: f64| {
            if explicit {
                (y + dt * b(y), 1.0 + dt * b_prime(y))
            } else if y == 0.0 {
                (0.0, 0.0)
            } else {
                let m = y.abs().powf(a - 1.0);
                (y.signum() * y.abs() * m, a * m)
            }
        }
    }

    /// Solver steps per control piece, checking that pieces align with steps.
    pub fn steps_per_piece(&self, h: &Control) -> Result<usize> {
        if (h.horizon() - self.t_end).abs() > 1e-9 * self.t_end {
            return Err(Error::InvalidConfig(format!(
                "control horizon {} differs from solver horizon {}",
                h.horizon(),
                self.t_end
            )));
        }
        let n = self.n_steps();
        if !n.is_multiple_of(h.n_pieces()) {
            return Err(Error::InvalidConfig(format!(
                "{} control pieces do not divide {} steps",
                h.n_pieces(),
                n
            )));
        }
        Ok(n / h.n_pieces())
    }
}

/// `P_n[f(u)]`: synthesize on the nodes, apply `f`, project back.
pub fn project_nonlinearity(u: &SpectralField, f: impl Fn(f64) -> f64) -> Result<SpectralField> {
    let phys: Vec<f64> = u.to_physical().into_iter().map(f).collect();
    if phys.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: 0 });
    }
    SpectralField::from_physical(u.domain(), &phys)
}

/// Forcing increments `h_k dt + eps dW_k` for each step.
pub(crate) fn forcing(
    cfg: &SkeletonConfig,
    control: Option<&Control>,
    noise: Option<(&[f64], f64)>,
) -> Result<Vec<f64>> {
    let n = cfg.n_steps();
    let mut kicks = vec![0.0; n];
    if let Some(h) = control {
        let spp = cfg.steps_per_piece(h)?;
        for (k, kick) in kicks.iter_mut().enumerate() {
            *kick = h.values()[k / spp] * cfg.dt;
        }
    }
    if let Some((dw, eps)) = noise {
        if dw.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: dw.len(),
            });
        }
        if eps != 0.0 {
            for (kick, w) in kicks.iter_mut().zip(dw) {
                *kick += eps * w;
            }
        }
    }
    Ok(kicks)
}

/// Workspace for repeated steps of one configuration.
pub(crate) struct Stepper<'a> {
    cfg: &'a SkeletonConfig,
    damp: Vec<f64>,
    /// `P_n[sigma]` when `sigma` is constant.
    sigma_proj: Option<Vec<f64>>,
    phys: Vec<f64>,
    work: Vec<f64>,
    proj: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(cfg: &'a SkeletonConfig) -> Self {
        let dom = &cfg.domain;
        let sigma_proj = cfg.coeffs.sigma.constant_value().map(|c| {
            let samples = vec![c; dom.n_quad()];
            dom.analyze(&samples)
        });
        Self {
            cfg,
            damp: cfg.propagator(),
            sigma_proj,
            phys: vec![0.0; dom.n_quad()],
            work: vec![0.0; dom.n_quad()],
            proj: vec![0.0; dom.n_modes()],
        }
    }

    /// Advance coefficients `u` by one step with forcing increment `kick`.
    fn step(&mut self, u: &mut [f64], kick: f64) {
        let cfg = self.cfg;
        let dom = &cfg.domain;
        let forced = kick != 0.0 && cfg.sigma_active();
        if cfg.reaction_active() {
            let react = cfg.reaction();
            dom.synthesize_into(u, &mut self.phys);
            let sigma = &cfg.coeffs.sigma;
            for (w, &y) in self.work.iter_mut().zip(&self.phys) {
                *w = react(y).0;
                if forced && self.sigma_proj.is_none() {
                    *w += kick * sigma.eval(y);
                }
            }
            dom.analyze_into(&self.work, &mut self.proj);
            if forced {
                if let Some(sp) = &self.sigma_proj {
                    for (p, s) in self.proj.iter_mut().zip(sp) {
                        *p += kick * s;
                    }
                }
            }
            for ((ui, p), d) in u.iter_mut().zip(&self.proj).zip(&self.damp) {
                *ui = d * p;
            }
        } else {
            if forced {
                match &self.sigma_proj {
                    Some(sp) => {
                        for (ui, s) in u.iter_mut().zip(sp) {
                            *ui += kick * s;
                        }
                    }
                    None => {
                        dom.synthesize_into(u, &mut self.phys);
                        let sigma = &cfg.coeffs.sigma;
                        for (w, &y) in self.work.iter_mut().zip(&self.phys) {
                            *w = sigma.eval(y);
                        }
                        dom.analyze_into(&self.work, &mut self.proj);
                        for (ui, p) in u.iter_mut().zip(&self.proj) {
                            *ui += kick * p;
                        }
                    }
                }
            }
            for (ui, d) in u.iter_mut().zip(&self.damp) {
                *ui *= d;
            }
        }
    }

    /// Projected `sigma(u)` (used by the adjoint).
    pub(crate) fn sigma_projection(&mut self, u: &[f64]) -> Vec<f64> {
        if let Some(sp) = &self.sigma_proj {
            return sp.clone();
        }
        let dom = &self.cfg.domain;
        dom.synthesize_into(u, &mut self.phys);
        let sigma = &self.cfg.coeffs.sigma;
        for (w, &y) in self.work.iter_mut().zip(&self.phys) {
            *w = sigma.eval(y);
        }
        dom.analyze(&self.work)
    }

    /// Transpose of the step Jacobian applied to `q` (already multiplied by
    /// the propagator): `w S diag(R' + kick sigma') S^T q`.
    pub(crate) fn jacobian_transpose(&mut self, u: &[f64], kick: f64, q: &[f64]) -> Vec<f64> {
        let cfg = self.cfg;
        let dom = &cfg.domain;
        let forced = kick != 0.0 && cfg.sigma_active() && self.sigma_proj.is_none();
        if !cfg.reaction_active() && !forced {
            return q.to_vec();
        }
        dom.synthesize_into(u, &mut self.phys);
        let mut sq = vec![0.0; dom.n_quad()];
        dom.synthesize_into(q, &mut sq);
        let react = cfg.reaction();
        let sigma = &cfg.coeffs.sigma;
        for ((w, &y), &s) in self.work.iter_mut().zip(&self.phys).zip(&sq) {
            let mut g = if cfg.reaction_active() {
                react(y).1
            } else {
                0.0
            };
            if forced {
                g += kick * sigma.derivative(y);
            }
            *w = g * s;
        }
        let mut out = dom.analyze(&self.work);
        if !cfg.reaction_active() {
            for (o, qi) in out.iter_mut().zip(q) {
                *o += qi;
            }
        }
        out
    }

    pub(crate) fn damp(&self) -> &[f64] {
        &self.damp
    }
}

/// Integrate from `u0` with the given per-step forcing increments, calling
/// `observe(k, coeffs)` for `k = 0..=n_steps`.
pub(crate) fn march(
    u0: &SpectralField,
    cfg: &SkeletonConfig,
    kicks: &[f64],
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if u0.domain().config() != cfg.domain.config() {
        return Err(Error::InvalidConfig(
            "initial condition lives on a different domain".into(),
        ));
    }
    let guard = cfg.overflow_guard;
    let check = |step: usize, u: &[f64]| -> Result<()> {
        let norm = u.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::NonFinite { step });
        }
        if norm > guard {
            return Err(Error::Overflow { step, norm, guard });
        }
        Ok(())
    };
    let mut u = u0.coeffs().to_vec();
    observe(0, &u);
    if cfg.mode == OracleMode::ReactionOnly {
        // pointwise ODE on the nodes; projection only for output
        let dom = &cfg.domain;
        let react = cfg.reaction();
        let mut phys = dom.synthesize(&u);
        for k in 1..=kicks.len() {
            for y in phys.iter_mut() {
                *y = react(*y).0;
            }
            dom.analyze_into(&phys, &mut u);
            check(k, &u)?;
            observe(k, &u);
        }
        return Ok(u);
    }
    let mut stepper = Stepper::new(cfg);
    for (k, &kick) in kicks.iter().enumerate() {
        stepper.step(&mut u, kick);
        check(k + 1, &u)?;
        observe(k + 1, &u);
    }
    Ok(u)
}

/// Full trajectory of the forced equation.
pub(crate) fn integrate(
    u0: &SpectralField,
    cfg: &SkeletonConfig,
    kicks: &[f64],
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(kicks.len() + 1);
    let dom = &cfg.domain;
    march(u0, cfg, kicks, |_, c| {
        states.push(SpectralField::from_coeffs(dom, c.to_vec()).expect("length checked"));
    })?;
    Trajectory::new(cfg.times(), states)
}

/// Solve the skeleton equation with control `h`.
pub fn solve_skeleton(u0: &SpectralField, h: &Control, cfg: &SkeletonConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let kicks = forcing(cfg, Some(h), None)?;
    Ok(integrate(u0, cfg, &kicks)?.with_control(h.clone()))
}

/// Terminal state only, without storing the trajectory.
pub fn skeleton_terminal(
    u0: &SpectralField,
    h: &Control,
    cfg: &SkeletonConfig,
) -> Result<SpectralField> {
    cfg.validate()?;
    let kicks = forcing(cfg, Some(h), None)?;
    let u = march(u0, cfg, &kicks, |_, _| {})?;
    SpectralField::from_coeffs(&cfg.domain, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{builtin_sigma, Sigma};
    use crate::spectral::DomainConfig;

    fn setup(n: usize, sigma: Sigma) -> (Arc<Domain>, CoefficientSet) {
        (
            DomainConfig::new(1.0, n).build().unwrap(),
            builtin_sigma(sigma).unwrap(),
        )
    }

    #[test]
    fn projection_of_identity_and_zero() {
        let (d, _) = setup(8, Sigma::SqrtLog);
        let u = SpectralField::from_coeffs(&d, (1..=8).map(|i| 1.0 / i as f64).collect()).unwrap();
        let p = project_nonlinearity(&u, |z| z).unwrap();
        for (a, c) in p.coeffs().iter().zip(u.coeffs()) {
            assert!((a - c).abs() < 1e-13);
        }
        assert!(project_nonlinearity(&SpectralField::zeros(&d), b)
            .unwrap()
            .is_zero());
        assert!(matches!(
            project_nonlinearity(&u, |_| f64::NAN),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn heat_only_exact() {
        let (d, c) = setup(8, Sigma::Constant { value: 0.0 });
        let cfg = SkeletonConfig::new(d.clone(), c, 1e-4, 0.1).with_mode(OracleMode::HeatOnly);
        let u0 = SpectralField::basis(&d, 1).unwrap();
        let h = Control::zero(1, 0.1).unwrap();
        let tr = solve_skeleton(&u0, &h, &cfg).unwrap();
        let expect = (-d.eigenvalues()[0] * 0.1).exp();
        assert!((tr.terminal().coeffs()[0] - expect).abs() < 1e-12);
        assert_eq!(tr.len(), 1001);
    }

    #[test]
    fn validation_errors() {
        let (d, c) = setup(4, Sigma::Constant { value: 1.0 });
        let u0 = SpectralField::zeros(&d);
        let h = Control::zero(3, 1.0).unwrap();
        let bad_dt = SkeletonConfig::new(d.clone(), c.clone(), -1.0, 1.0);
        assert!(matches!(
            solve_skeleton(&u0, &h, &bad_dt),
            Err(Error::InvalidConfig(_))
        ));
        let cfg = SkeletonConfig::new(d.clone(), c, 0.01, 1.0);
        assert!(solve_skeleton(&u0, &h, &cfg).is_err());
    }

    #[test]
    fn overflow_guard_trips() {
        let (d, c) = setup(4, Sigma::Constant { value: 1.0 });
        let mut cfg = SkeletonConfig::new(d.clone(), c, 0.01, 1.0);
        cfg.overflow_guard = 10.0;
        let h = Control::constant(100.0, 1, 1.0).unwrap();
        let err = solve_skeleton(&SpectralField::zeros(&d), &h, &cfg).unwrap_err();
        assert!(matches!(err, Error::Overflow { .. }));
        assert!(err.is_numerical());
    }
}
