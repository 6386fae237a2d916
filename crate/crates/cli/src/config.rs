//! JSON run configuration.
//!
//! Every section is optional and every field has a default. After
//! [`RunConfig::resolve`] all optional values are filled in, so serializing
//! the resolved config records exactly what was run.

use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::ValueEnum;
use logldp_core::coefficients::{builtin_sigma, fit_h, lattice_pairs, HConstants, Tabulated};
use logldp_core::ldp::{OptimizerConfig, TargetSet};
use logldp_core::{
    CoefficientSet, Control, Domain, DomainConfig, OracleMode, ReactionScheme, Scheme, Sigma,
    SkeletonConfig, SpectralField,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    Skeleton,
    RateFunction,
    McEstimate,
    ConditionA,
    ConditionB,
    VerifyInequalities,
    ConvergenceStudy,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Skeleton => "skeleton",
            Experiment::RateFunction => "rate-function",
            Experiment::McEstimate => "mc-estimate",
            Experiment::ConditionA => "condition-a",
            Experiment::ConditionB => "condition-b",
            Experiment::VerifyInequalities => "verify-inequalities",
            Experiment::ConvergenceStudy => "convergence-study",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const DEFAULT_OUTPUT_DIR: &str = "logldp-out";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub domain: DomainSection,
    pub coefficients: CoefficientSection,
    pub solver: SolverSection,
    pub initial: InitialSection,
    pub control: ControlSection,
    pub ensemble: EnsembleSection,
    pub target: Option<TargetSet>,
    pub optimizer: OptimizerConfig,
    pub mc: McSection,
    pub condition_b: ConditionBSection,
    pub inequalities: InequalitySection,
    pub convergence: ConvergenceSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSection {
    pub length: f64,
    pub n_modes: usize,
    /// Defaults to `4 n_modes`.
    pub n_quad: Option<usize>,
    pub dim: usize,
}

impl Default for DomainSection {
    fn default() -> Self {
        Self {
            length: 1.0,
            n_modes: 32,
            n_quad: None,
            dim: 1,
        }
    }
}

impl DomainSection {
    pub fn to_config(&self) -> DomainConfig {
        let base = DomainConfig::new(self.length, self.n_modes).with_dim(self.dim);
        match self.n_quad {
            Some(q) => base.with_quad(q),
            None => base,
        }
    }
}

/// `sigma` is either a builtin name such as `"linear(1)"` or
/// `{"tabulated": "path.csv"}` with `(z, sigma(z))` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSpec {
    Named(String),
    Tabulated { tabulated: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientSection {
    pub sigma: SigmaSpec,
}

impl Default for CoefficientSection {
    fn default() -> Self {
        Self {
            sigma: SigmaSpec::Named("linear(1)".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub mode: OracleMode,
    pub reaction: ReactionScheme,
    pub overflow_guard: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 0.5,
            scheme: Scheme::ExpEuler,
            mode: OracleMode::Full,
            reaction: ReactionScheme::Exact,
            overflow_guard: logldp_core::skeleton::DEFAULT_OVERFLOW_GUARD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    /// `amplitude * e_index`.
    Mode { index: usize, amplitude: f64 },
    /// Leading coefficients; missing trailing modes are zero.
    Coeffs { values: Vec<f64> },
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection::Mode {
            index: 1,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlSection {
    Constant { value: f64, n_pieces: usize },
    Pieces { values: Vec<f64> },
}

impl Default for ControlSection {
    fn default() -> Self {
        ControlSection::Constant {
            value: 1.0,
            n_pieces: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub n_paths: usize,
    pub eps: Vec<f64>,
    /// Exceedance level for the path distance; defaults to half the first median.
    pub delta: Option<f64>,
    /// Reuse noise streams across `eps`. When false, `eps[i]` uses seed `seed + i`.
    pub common_random_numbers: bool,
    /// Drive the simulated ensemble with the configured control.
    pub use_control: bool,
    pub dump_paths: bool,
    pub max_dump_paths: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            n_paths: 64,
            eps: vec![0.4, 0.2, 0.1, 0.05],
            delta: None,
            common_random_numbers: true,
            use_control: false,
            dump_paths: false,
            max_dump_paths: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    /// Also optimize the rate function for the same target.
    pub compare_rate: bool,
}

impl Default for McSection {
    fn default() -> Self {
        Self { compare_rate: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionBSection {
    pub amplitude: f64,
    pub eps: Vec<f64>,
    /// Energy level; defaults to `(sqrt(energy(h)) + amplitude sqrt(T))^2`.
    pub level: Option<f64>,
}

impl Default for ConditionBSection {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            eps: vec![0.2, 0.1, 0.05, 0.025],
            level: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InequalitySection {
    pub n_fields: usize,
    pub eps: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Mode `i` of a random field has standard deviation `amplitude / i^decay`.
    pub decay: f64,
    /// `log10(amplitude)` is uniform on this range.
    pub log10_amplitude: (f64, f64),
    /// Accept relative gaps down to `-tolerance`.
    pub tolerance: f64,
}

impl Default for InequalitySection {
    fn default() -> Self {
        Self {
            n_fields: 1000,
            eps: vec![1e-3, 1e-2, 1e-1, 1.0],
            alpha: vec![0.5, 0.9, 0.99],
            decay: 1.0,
            log10_amplitude: (-2.0, 2.0),
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSection {
    /// Decreasing step sizes, each dividing the horizon.
    pub dt_list: Vec<f64>,
    /// Galerkin sizes; `n_quad = 4 n` for each.
    pub n_list: Vec<usize>,
    /// Noise amplitude for the step-size study; 0 runs the skeleton.
    pub eps: f64,
    /// Acceptable band for the measured step-size order.
    pub order_band: (f64, f64),
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        Self {
            dt_list: vec![1e-3, 5e-4, 2.5e-4, 1.25e-4],
            n_list: vec![8, 16, 32, 64],
            eps: 0.0,
            order_band: (0.8, 1.2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryFormat {
    None,
    Csv,
    Binary,
    Both,
}

impl TrajectoryFormat {
    pub fn csv(self) -> bool {
        matches!(self, TrajectoryFormat::Csv | TrajectoryFormat::Both)
    }

    pub fn binary(self) -> bool {
        matches!(self, TrajectoryFormat::Binary | TrajectoryFormat::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub trajectory: TrajectoryFormat,
    /// Keep every `stride`-th grid time in trajectory dumps.
    pub stride: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            trajectory: TrajectoryFormat::Both,
            stride: 1,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn check_eps_list(name: &str, eps: &[f64], allow_zero: bool) -> Result<(), CliError> {
    if eps.is_empty() {
        return Err(invalid(format!("{name} must not be empty")));
    }
    let ok = |e: f64| e.is_finite() && (e > 0.0 || (allow_zero && e == 0.0));
    if let Some(e) = eps.iter().find(|&&e| !ok(e)) {
        return Err(invalid(format!("{name} holds an invalid value {e}")));
    }
    Ok(())
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))
    }

    /// Apply command-line overrides, fill every default and validate the
    /// sections the experiment uses.
    pub fn resolve(
        mut self,
        experiment: Experiment,
        seed: Option<u64>,
        output_dir: Option<PathBuf>,
        base_dir: &Path,
    ) -> Result<Resolved, CliError> {
        if let Some(e) = self.experiment {
            if e != experiment {
                return Err(invalid(format!(
                    "config is for experiment {e} but {experiment} was requested"
                )));
            }
        }
        self.experiment = Some(experiment);
        self.seed = Some(seed.or(self.seed).unwrap_or(0));
        self.output_dir = Some(
            output_dir
                .or(self.output_dir.take())
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
        );
        if self.domain.n_quad.is_none() {
            self.domain.n_quad = Some(4 * self.domain.n_modes.max(1));
        }
        let domain = self.domain.to_config().build().map_err(CliError::from)?;
        let coeffs = self.coefficients.build(base_dir)?;
        let s = &self.solver;
        let skeleton = SkeletonConfig::new(domain.clone(), coeffs, s.dt, s.t_end)
            .with_scheme(s.scheme)
            .with_mode(s.mode)
            .with_reaction(s.reaction)
            .with_guard(s.overflow_guard);
        skeleton.validate()?;
        let u0 = self.initial.build(&domain)?;
        let control = self.control.build(s.t_end)?;
        let uses_control = match experiment {
            Experiment::Skeleton
            | Experiment::ConditionA
            | Experiment::ConditionB
            | Experiment::ConvergenceStudy => true,
            Experiment::Simulate => self.ensemble.use_control,
            _ => false,
        };
        if uses_control {
            skeleton.steps_per_piece(&control)?;
        }

        match experiment {
            Experiment::Simulate | Experiment::ConditionA | Experiment::McEstimate => {
                let e = &self.ensemble;
                if e.n_paths == 0 {
                    return Err(invalid("ensemble.n_paths must be at least 1"));
                }
                check_eps_list("ensemble.eps", &e.eps, false)?;
                if experiment == Experiment::ConditionA && !strictly_decreasing(&e.eps) {
                    return Err(invalid("ensemble.eps must be strictly decreasing"));
                }
                if let Some(d) = e.delta {
                    if !(d > 0.0 && d.is_finite()) {
                        return Err(invalid("ensemble.delta must be positive"));
                    }
                }
                if e.dump_paths && e.max_dump_paths == 0 {
                    return Err(invalid("ensemble.max_dump_paths must be positive"));
                }
            }
            _ => {}
        }
        if matches!(
            experiment,
            Experiment::RateFunction | Experiment::McEstimate
        ) {
            let target = self
                .target
                .as_mut()
                .ok_or_else(|| invalid(format!("{experiment} needs a target section")))?;
            pad_target(target, domain.n_modes())?;
            target.validate(domain.n_modes())?;
            if experiment == Experiment::RateFunction || self.mc.compare_rate {
                self.optimizer.seed = self.seed.unwrap();
                self.optimizer.validate()?;
                let pieces = Control::zero(self.optimizer.n_pieces, s.t_end)?;
                skeleton.steps_per_piece(&pieces)?;
            }
        }
        if experiment == Experiment::ConditionB {
            let c = &mut self.condition_b;
            check_eps_list("condition_b.eps", &c.eps, false)?;
            if !strictly_decreasing(&c.eps) {
                return Err(invalid("condition_b.eps must be strictly decreasing"));
            }
            if !(c.amplitude.is_finite() && c.amplitude >= 0.0) {
                return Err(invalid("condition_b.amplitude must be nonnegative"));
            }
            if c.level.is_none() {
                let root = control.energy().sqrt() + c.amplitude * s.t_end.sqrt();
                c.level = Some(root * root);
            }
        }
        if experiment == Experiment::VerifyInequalities {
            let q = &self.inequalities;
            if q.n_fields == 0 {
                return Err(invalid("inequalities.n_fields must be positive"));
            }
            check_eps_list("inequalities.eps", &q.eps, false)?;
            if q.alpha.is_empty() || q.alpha.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
                return Err(invalid("inequalities.alpha must hold values in (0, 1)"));
            }
            let (lo, hi) = q.log10_amplitude;
            if !(lo.is_finite() && hi.is_finite() && lo <= hi && q.decay.is_finite()) {
                return Err(invalid(
                    "inequalities.log10_amplitude must be a finite range",
                ));
            }
            if !(q.tolerance >= 0.0) {
                return Err(invalid("inequalities.tolerance must be nonnegative"));
            }
        }
        if experiment == Experiment::ConvergenceStudy {
            let c = &self.convergence;
            if c.dt_list.len() < 2 || !strictly_decreasing(&c.dt_list) {
                return Err(invalid(
                    "convergence.dt_list needs at least two decreasing steps",
                ));
            }
            for &dt in &c.dt_list {
                let cfg = skeleton.clone().with_dt(dt);
                cfg.validate()?;
                cfg.steps_per_piece(&control)?;
            }
            if c.n_list.len() < 2 || c.n_list.windows(2).any(|w| w[1] <= w[0]) || c.n_list[0] == 0 {
                return Err(invalid(
                    "convergence.n_list needs at least two increasing sizes",
                ));
            }
            if !(c.eps >= 0.0 && c.eps.is_finite()) {
                return Err(invalid("convergence.eps must be nonnegative"));
            }
            if c.eps > 0.0 {
                let fine = *c.dt_list.last().unwrap();
                for &dt in &c.dt_list {
                    let r = dt / fine;
                    if (r - r.round()).abs() > 1e-9 * r {
                        return Err(invalid("each dt must be a multiple of the finest dt"));
                    }
                }
            }
            if let InitialSection::Mode { index, .. } = self.initial {
                if index > c.n_list[0] {
                    return Err(invalid("initial mode exceeds the smallest Galerkin size"));
                }
            }
        }
        if self.output.stride == 0 {
            return Err(invalid("output.stride must be positive"));
        }
        Ok(Resolved {
            experiment,
            seed: self.seed.unwrap(),
            output_dir: self.output_dir.clone().unwrap(),
            domain,
            skeleton,
            u0,
            control,
            config: self,
        })
    }
}

fn pad_target(target: &mut TargetSet, n: usize) -> Result<(), CliError> {
    let pad = |v: &mut Vec<f64>| {
        if v.len() > n {
            Err(invalid(format!(
                "target vector has {} entries for {n} modes",
                v.len()
            )))
        } else {
            v.resize(n, 0.0);
            Ok(())
        }
    };
    match target {
        TargetSet::Halfspace { g, .. } => pad(g),
        TargetSet::Ball { center, .. } => pad(center),
        _ => Ok(()),
    }
}

impl CoefficientSection {
    fn build(&self, base_dir: &Path) -> Result<CoefficientSet, CliError> {
        match &self.sigma {
            SigmaSpec::Named(name) => {
                let sigma: Sigma = name.parse()?;
                Ok(builtin_sigma(sigma)?)
            }
            SigmaSpec::Tabulated { tabulated } => {
                let path = base_dir.join(tabulated);
                let file = File::open(&path)
                    .map_err(|e| invalid(format!("cannot open {}: {e}", path.display())))?;
                let table = Tabulated::from_csv(file)?;
                let (lo, hi) = table.range();
                let sigma = Sigma::Tabulated(table);
                let fit = fit_h(&|z| sigma.eval(z), &lattice_pairs(lo, hi, 201));
                let constants = HConstants {
                    l1: fit.l1,
                    l2: fit.l2,
                    l3: sigma.eval(0.0).abs(),
                    l4: fit.l1 + fit.l2,
                    verified: false,
                    certificate: format!(
                        "fitted on a 201-point lattice over [{lo}, {hi}]; not certified"
                    ),
                };
                Ok(CoefficientSet { sigma, constants })
            }
        }
    }
}

impl InitialSection {
    pub fn build(&self, domain: &Arc<Domain>) -> Result<SpectralField, CliError> {
        match self {
            InitialSection::Mode { index, amplitude } => {
                if !amplitude.is_finite() {
                    return Err(invalid("initial amplitude must be finite"));
                }
                Ok(SpectralField::basis(domain, *index)?.scale(*amplitude))
            }
            InitialSection::Coeffs { values } => {
                if values.len() > domain.n_modes() {
                    return Err(invalid(format!(
                        "initial condition has {} coefficients for {} modes",
                        values.len(),
                        domain.n_modes()
                    )));
                }
                let mut c = values.clone();
                c.resize(domain.n_modes(), 0.0);
                Ok(SpectralField::from_coeffs(domain, c)?)
            }
        }
    }
}

impl ControlSection {
    pub fn build(&self, horizon: f64) -> Result<Control, CliError> {
        Ok(match self {
            ControlSection::Constant { value, n_pieces } => {
                Control::constant(*value, *n_pieces, horizon)?
            }
            ControlSection::Pieces { values } => Control::new(values.clone(), horizon)?,
        })
    }
}

/// A validated configuration with its built objects.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub experiment: Experiment,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub domain: Arc<Domain>,
    pub skeleton: SkeletonConfig,
    pub u0: SpectralField,
    pub control: Control,
    /// The input config with every default filled in.
    pub config: RunConfig,
}
