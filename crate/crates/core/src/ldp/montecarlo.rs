use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ldp::target::TargetSet;
use crate::skeleton::SkeletonConfig;
use crate::spde::{observe_spde, par_paths, NoisePath};
use crate::spectral::SpectralField;
use crate::stats::{wilson, Z95};

/// One row of the rare-event table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RareEventRow {
    pub eps: f64,
    pub n_paths: usize,
    /// Paths that aborted on a numerical failure; excluded from the estimate.
    pub n_failed: usize,
    pub hits: usize,
    pub p_hat: f64,
    /// `-eps^2 log p_hat`; infinite when censored.
    pub ldp_estimate: f64,
    /// Wilson 95% interval for `p`.
    pub ci_low: f64,
    pub ci_high: f64,
    /// The interval mapped through `-eps^2 log`.
    pub ldp_ci_low: f64,
    pub ldp_ci_high: f64,
    /// No hits: only the one-sided bound `ldp >= ldp_ci_low` is informative.
    pub censored: bool,
}

/// Direct Monte Carlo estimate of `P(X^eps(T) in target)` for the uncontrolled
/// SPDE. Path `p` uses noise stream `p` at every `eps`.
pub fn mc_rare_event(
    u0: &SpectralField,
    target: &TargetSet,
    eps_list: &[f64],
    n_paths: usize,
    base_seed: u64,
    cfg: &SkeletonConfig,
) -> Result<Vec<RareEventRow>> {
    cfg.validate()?;
    target.validate(cfg.domain.n_modes())?;
    if n_paths == 0 {
        return Err(Error::InvalidConfig("n_paths must be at least 1".into()));
    }
    if eps_list.is_empty() || eps_list.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidConfig(
            "eps_list must hold positive values".into(),
        ));
    }
    eps_list
        .iter()
        .map(|&eps| {
            let outcomes = par_paths(n_paths, |p| -> Result<bool> {
                let noise = NoisePath::sample(base_seed, p, cfg.dt, cfg.t_end)?;
                let u = observe_spde(u0, eps, None, &noise, cfg, |_, _| {})?;
                Ok(target.contains(&u))
            });
            let mut hits = 0;
            let mut failed = 0;
            for o in outcomes {
                match o {
                    Ok(true) => hits += 1,
                    Ok(false) => {}
                    Err(e) if e.is_numerical() => failed += 1,
                    Err(e) => return Err(e),
                }
            }
            let n = n_paths - failed;
            let p_hat = if n == 0 {
                f64::NAN
            } else {
                hits as f64 / n as f64
            };
            let (ci_low, ci_high) = wilson(hits, n, Z95);
            let to_ldp = |p: f64| -eps * eps * p.ln();
            Ok(RareEventRow {
                eps,
                n_paths,
                n_failed: failed,
                hits,
                p_hat,
                ldp_estimate: to_ldp(p_hat),
                ci_low,
                ci_high,
                ldp_ci_low: to_ldp(ci_high),
                ldp_ci_high: to_ldp(ci_low),
                censored: hits == 0,
            })
        })
        .collect()
}
