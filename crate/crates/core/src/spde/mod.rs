//! Small-noise and controlled SPDE paths driven by one scalar Brownian
//! motion, ensemble statistics, and the path-convergence experiment.

mod noise;

pub use noise::{sample_noise, NoisePath};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{forcing, integrate, march, solve_skeleton, Control, SkeletonConfig};
use crate::spectral::{PhiFunction, SpectralField};
use crate::stats::{mean_se, median, quantile, Z95};
use crate::trajectory::Trajectory;

fn check_noise(noise: &NoisePath, cfg: &SkeletonConfig) -> Result<()> {
    cfg.validate()?;
    if noise.len() != cfg.n_steps() || (noise.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Euler-Maruyama with exact linear flow for
/// `dX = (X_xx + X log|X| + sigma(X) h) dt + eps sigma(X) dW`.
/// With `eps = 0` this performs exactly the skeleton recursion.
pub fn solve_spde(
    u0: &SpectralField,
    eps: f64,
    h: Option<&Control>,
    noise: &NoisePath,
    cfg: &SkeletonConfig,
) -> Result<Trajectory> {
    check_noise(noise, cfg)?;
    let kicks = forcing(cfg, h, Some((noise.increments(), eps)))?;
    let mut tr = integrate(u0, cfg, &kicks)?.with_noise(noise.clone());
    if let Some(h) = h {
        tr = tr.with_control(h.clone());
    }
    Ok(tr)
}

/// Run the SPDE recursion, calling `observe(k, coeffs)` at every grid time.
pub fn observe_spde(
    u0: &SpectralField,
    eps: f64,
    h: Option<&Control>,
    noise: &NoisePath,
    cfg: &SkeletonConfig,
    observe: impl FnMut(usize, &[f64]),
) -> Result<SpectralField> {
    check_noise(noise, cfg)?;
    let kicks = forcing(cfg, h, Some((noise.increments(), eps)))?;
    let u = march(u0, cfg, &kicks, observe)?;
    SpectralField::from_coeffs(&cfg.domain, u)
}

/// Monte Carlo settings shared by the ensemble experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub eps: f64,
    /// Path `p` uses stream `p` of this seed.
    pub base_seed: u64,
    pub control: Option<Control>,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidConfig("n_paths must be at least 1".into()));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        Ok(())
    }

    pub fn noise(&self, path: u64, cfg: &SkeletonConfig) -> Result<NoisePath> {
        NoisePath::sample(self.base_seed, path, cfg.dt, cfg.t_end)
    }
}

/// Evaluate `f` on paths `0..n` in parallel, returning results in path order.
pub fn par_paths<T: Send>(n: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..n as u64).into_par_iter().map(f).collect()
}

/// Simulate an ensemble and keep full trajectories.
pub fn simulate_ensemble(
    u0: &SpectralField,
    cfg: &SkeletonConfig,
    ens: &EnsembleConfig,
) -> Result<Vec<Trajectory>> {
    ens.validate()?;
    par_paths(ens.n_paths, |p| {
        let noise = ens.noise(p, cfg)?;
        solve_spde(u0, ens.eps, ens.control.as_ref(), &noise, cfg)
    })
    .into_iter()
    .collect()
}

/// Means of `sup_t Phi(|X_t|^2)` and `int Phi'(|X_s|^2) |X_s|_V^2 ds` with
/// standard errors and their ratio to `Phi(|u0|^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiMomentReport {
    pub n_paths: usize,
    pub sup_phi_mean: f64,
    pub sup_phi_se: f64,
    pub int_mean: f64,
    pub int_se: f64,
    pub phi_u0: f64,
    pub sup_ratio: f64,
    pub int_ratio: f64,
}

impl PhiMomentReport {
    /// 95% normal interval for the `sup Phi` mean.
    pub fn sup_ci(&self) -> (f64, f64) {
        (
            self.sup_phi_mean - Z95 * self.sup_phi_se,
            self.sup_phi_mean + Z95 * self.sup_phi_se,
        )
    }

    pub fn int_ci(&self) -> (f64, f64) {
        (
            self.int_mean - Z95 * self.int_se,
            self.int_mean + Z95 * self.int_se,
        )
    }

    fn from_samples(samples: &[(f64, f64)], phi_u0: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let sups: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let ints: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let (sup_phi_mean, sup_phi_se) = mean_se(&sups);
        let (int_mean, int_se) = mean_se(&ints);
        Ok(Self {
            n_paths: samples.len(),
            sup_phi_mean,
            sup_phi_se,
            int_mean,
            int_se,
            phi_u0,
            sup_ratio: sup_phi_mean / phi_u0,
            int_ratio: int_mean / phi_u0,
        })
    }
}

/// Running accumulator of the two path functionals on a uniform grid.
struct PhiAccumulator<'a> {
    phi: &'a PhiFunction,
    dt: f64,
    sup: f64,
    integral: f64,
    prev: Option<f64>,
    error: Option<Error>,
}

impl<'a> PhiAccumulator<'a> {
    fn new(phi: &'a PhiFunction, dt: f64) -> Self {
        Self {
            phi,
            dt,
            sup: 0.0,
            integral: 0.0,
            prev: None,
            error: None,
        }
    }

    fn push(&mut self, h_sq: f64, v_sq: f64) {
        let r = self
            .phi
            .phi(h_sq)
            .and_then(|p| Ok((p, self.phi.phi_prime(h_sq)? * v_sq)));
        match r {
            Ok((p, g)) => {
                self.sup = self.sup.max(p);
                if let Some(prev) = self.prev {
                    self.integral += 0.5 * self.dt * (prev + g);
                }
                self.prev = Some(g);
            }
            Err(e) => self.error = Some(e),
        }
    }

    fn finish(self) -> Result<(f64, f64)> {
        match self.error {
            Some(e) => Err(e),
            None => Ok((self.sup, self.integral)),
        }
    }
}

fn phi_path(traj: &Trajectory, phi: &PhiFunction) -> Result<(f64, f64)> {
    let states = traj.states();
    let mut sup: f64 = 0.0;
    let mut g = Vec::with_capacity(states.len());
    for s in states {
        let x = s.h_norm_sq();
        sup = sup.max(phi.phi(x)?);
        g.push(phi.phi_prime(x)? * s.v_norm_sq());
    }
    Ok((sup, crate::quadrature::trapezoid(traj.times(), &g)))
}

/// Monte Carlo Phi-moments of stored trajectories sharing one initial state.
pub fn phi_moment_report(trajs: &[Trajectory]) -> Result<PhiMomentReport> {
    let first = trajs.first().ok_or(Error::EmptyEnsemble)?;
    let phi = PhiFunction::new();
    let samples: Vec<(f64, f64)> = trajs
        .par_iter()
        .map(|t| phi_path(t, &phi))
        .collect::<Result<_>>()?;
    PhiMomentReport::from_samples(&samples, phi.phi(first.initial().h_norm_sq())?)
}

/// Phi-moments computed on the fly, without storing trajectories.
pub fn phi_moment_ensemble(
    u0: &SpectralField,
    cfg: &SkeletonConfig,
    ens: &EnsembleConfig,
) -> Result<PhiMomentReport> {
    ens.validate()?;
    let phi = PhiFunction::new();
    let lam = cfg.domain.eigenvalues();
    let samples: Vec<(f64, f64)> = par_paths(ens.n_paths, |p| {
        let noise = ens.noise(p, cfg)?;
        let mut acc = PhiAccumulator::new(&phi, cfg.dt);
        observe_spde(u0, ens.eps, ens.control.as_ref(), &noise, cfg, |_, c| {
            let h: f64 = c.iter().map(|x| x * x).sum();
            let v: f64 = c.iter().zip(lam).map(|(x, l)| l * x * x).sum();
            acc.push(h, v);
        })?;
        acc.finish()
    })
    .into_iter()
    .collect::<Result<_>>()?;
    PhiMomentReport::from_samples(&samples, phi.phi(u0.h_norm_sq())?)
}

/// One row of the path-convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionARow {
    pub eps: f64,
    pub n_paths: usize,
    pub n_failed: usize,
    pub median_rho: f64,
    pub q10: f64,
    pub q90: f64,
    pub p_exceed_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionAResult {
    pub delta: f64,
    pub rows: Vec<ConditionARow>,
    /// `per_path[i][p]`: distance of path `p` at `eps_list[i]` (NaN on failure).
    pub per_path: Vec<Vec<f64>>,
    /// Failure messages, as `(eps index, path, message)`.
    pub failures: Vec<(usize, u64, String)>,
}

/// `rho_T` between a controlled SPDE path and the matching skeleton path, on
/// the stored skeleton grid, without storing the SPDE trajectory.
fn rho_to_reference(
    u0: &SpectralField,
    eps: f64,
    h: &Control,
    noise: &NoisePath,
    cfg: &SkeletonConfig,
    reference: &Trajectory,
) -> Result<f64> {
    let lam = cfg.domain.eigenvalues();
    let refs = reference.states();
    let mut sup: f64 = 0.0;
    let mut int_v = 0.0;
    let mut prev: Option<f64> = None;
    observe_spde(u0, eps, Some(h), noise, cfg, |k, c| {
        let y = refs[k].coeffs();
        let (mut hs, mut vs) = (0.0, 0.0);
        for ((a, b), l) in c.iter().zip(y).zip(lam) {
            let d = a - b;
            hs += d * d;
            vs += l * d * d;
        }
        sup = sup.max(hs);
        if let Some(p) = prev {
            int_v += 0.5 * cfg.dt * (p + vs);
        }
        prev = Some(vs);
    })?;
    Ok((sup + int_v).sqrt())
}

/// For each `eps`, the distribution over paths of `rho_T(X^{h,eps}, Y^h)`.
/// Paths use common random numbers across `eps`. When `delta` is `None` it is
/// set to half the median at the first `eps`.
pub fn condition_a_experiment(
    u0: &SpectralField,
    h: &Control,
    eps_list: &[f64],
    n_paths: usize,
    base_seed: u64,
    delta: Option<f64>,
    cfg: &SkeletonConfig,
) -> Result<ConditionAResult> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidConfig(
            "eps_list must be nonempty and strictly decreasing".into(),
        ));
    }
    if eps_list.iter().any(|&e| !(e >= 0.0)) {
        return Err(Error::InvalidConfig("eps must be nonnegative".into()));
    }
    if n_paths == 0 {
        return Err(Error::InvalidConfig("n_paths must be at least 1".into()));
    }
    let reference = solve_skeleton(u0, h, cfg)?;
    let mut per_path = Vec::with_capacity(eps_list.len());
    let mut failures = Vec::new();
    for (i, &eps) in eps_list.iter().enumerate() {
        let results = par_paths(n_paths, |p| {
            let noise = NoisePath::sample(base_seed, p, cfg.dt, cfg.t_end)?;
            rho_to_reference(u0, eps, h, &noise, cfg, &reference)
        });
        let mut row = Vec::with_capacity(n_paths);
        for (p, r) in results.into_iter().enumerate() {
            match r {
                Ok(v) => row.push(v),
                Err(e @ Error::InvalidConfig(_)) => return Err(e),
                Err(e) => {
                    failures.push((i, p as u64, e.to_string()));
                    row.push(f64::NAN);
                }
            }
        }
        per_path.push(row);
    }
    let finite = |v: &[f64]| -> Vec<f64> { v.iter().copied().filter(|x| x.is_finite()).collect() };
    let delta = match delta {
        Some(d) => d,
        None => 0.5 * median(&finite(&per_path[0])),
    };
    let rows = eps_list
        .iter()
        .zip(&per_path)
        .map(|(&eps, vals)| {
            let ok = finite(vals);
            let exceed = ok.iter().filter(|&&r| r > delta).count();
            ConditionARow {
                eps,
                n_paths,
                n_failed: vals.len() - ok.len(),
                median_rho: median(&ok),
                q10: quantile(&ok, 0.1),
                q90: quantile(&ok, 0.9),
                p_exceed_delta: if ok.is_empty() {
                    f64::NAN
                } else {
                    exceed as f64 / ok.len() as f64
                },
            }
        })
        .collect();
    Ok(ConditionAResult {
        delta,
        rows,
        per_path,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{builtin_sigma, Sigma};
    use crate::skeleton::OracleMode;
    use crate::spectral::{path_metric, DomainConfig};

    fn cfg(sigma: Sigma) -> SkeletonConfig {
        let d = DomainConfig::new(1.0, 8).build().unwrap();
        SkeletonConfig::new(d, builtin_sigma(sigma).unwrap(), 1e-3, 0.1)
    }

    #[test]
    fn zero_eps_reduces_to_skeleton() {
        let c = cfg(Sigma::Linear { slope: 1.0 });
        let u0 = SpectralField::basis(&c.domain, 1).unwrap();
        let h = Control::constant(0.7, 4, 0.1).unwrap();
        let noise = sample_noise(3, c.dt, c.t_end).unwrap();
        let x = solve_spde(&u0, 0.0, Some(&h), &noise, &c).unwrap();
        let y = solve_skeleton(&u0, &h, &c).unwrap();
        for (a, b) in x.states().iter().zip(y.states()) {
            assert_eq!(a.coeffs(), b.coeffs());
        }
    }

    #[test]
    fn zero_sigma_ignores_noise() {
        let c = cfg(Sigma::Constant { value: 0.0 });
        let u0 = SpectralField::basis(&c.domain, 2).unwrap();
        let noise = sample_noise(3, c.dt, c.t_end).unwrap();
        let x = solve_spde(&u0, 0.5, None, &noise, &c).unwrap();
        let y = solve_skeleton(&u0, &Control::zero(1, 0.1).unwrap(), &c).unwrap();
        assert_eq!(x.terminal().coeffs(), y.terminal().coeffs());
    }

    #[test]
    fn grid_mismatch_rejected() {
        let c = cfg(Sigma::Constant { value: 1.0 });
        let u0 = SpectralField::zeros(&c.domain);
        let noise = sample_noise(3, 2e-3, 0.1).unwrap();
        assert_eq!(
            solve_spde(&u0, 0.1, None, &noise, &c).unwrap_err(),
            Error::GridMismatch
        );
    }

    #[test]
    fn phi_moments_trivial_case() {
        let c = cfg(Sigma::Constant { value: 0.0 });
        let u0 = SpectralField::zeros(&c.domain);
        let ens = EnsembleConfig {
            n_paths: 4,
            eps: 0.1,
            base_seed: 1,
            control: None,
        };
        let r = phi_moment_ensemble(&u0, &c, &ens).unwrap();
        assert_eq!(r.sup_phi_mean, 1.0);
        assert_eq!(r.int_mean, 0.0);
        let trajs = simulate_ensemble(&u0, &c, &ens).unwrap();
        assert_eq!(phi_moment_report(&trajs).unwrap(), r);
        assert_eq!(phi_moment_report(&[]).unwrap_err(), Error::EmptyEnsemble);
    }

    #[test]
    fn streaming_moments_match_stored() {
        let c = cfg(Sigma::Linear { slope: 1.0 });
        let u0 = SpectralField::basis(&c.domain, 1).unwrap();
        let ens = EnsembleConfig {
            n_paths: 6,
            eps: 0.3,
            base_seed: 9,
            control: None,
        };
        let a = phi_moment_ensemble(&u0, &c, &ens).unwrap();
        let b = phi_moment_report(&simulate_ensemble(&u0, &c, &ens).unwrap()).unwrap();
        assert!((a.sup_phi_mean - b.sup_phi_mean).abs() < 1e-12);
        assert!((a.int_mean - b.int_mean).abs() < 1e-10 * b.int_mean.abs());
    }

    #[test]
    fn streaming_rho_matches_path_metric() {
        let c = cfg(Sigma::Linear { slope: 0.5 });
        let u0 = SpectralField::basis(&c.domain, 1).unwrap();
        let h = Control::constant(1.0, 2, 0.1).unwrap();
        let y = solve_skeleton(&u0, &h, &c).unwrap();
        let noise = NoisePath::sample(5, 2, c.dt, c.t_end).unwrap();
        let x = solve_spde(&u0, 0.2, Some(&h), &noise, &c).unwrap();
        let direct = path_metric(&x, &y, 0.0, 0.1).unwrap().rho;
        let streamed = rho_to_reference(&u0, 0.2, &h, &noise, &c, &y).unwrap();
        assert!((direct - streamed).abs() < 1e-12 * direct);
    }

    #[test]
    fn condition_a_zero_eps_is_zero() {
        let c = cfg(Sigma::Constant { value: 1.0 }).with_mode(OracleMode::HeatOnly);
        let u0 = SpectralField::basis(&c.domain, 1).unwrap();
        let h = Control::constant(1.0, 2, 0.1).unwrap();
        let r = condition_a_experiment(&u0, &h, &[0.2, 0.0], 8, 1, Some(0.01), &c).unwrap();
        assert_eq!(r.rows[1].median_rho, 0.0);
        assert_eq!(r.rows[1].p_exceed_delta, 0.0);
        assert!(r.rows[0].median_rho > 0.0);
        assert!(condition_a_experiment(&u0, &h, &[0.1, 0.2], 8, 1, None, &c).is_err());
    }
}
