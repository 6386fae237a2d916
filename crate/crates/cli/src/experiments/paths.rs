use logldp_core::skeleton::{skeleton_terminal, solve_skeleton, uniform_bound_report};
use logldp_core::spde::{observe_spde, phi_moment_ensemble, solve_spde, EnsembleConfig};
use logldp_core::spectral::path_metric;
use logldp_core::stats::Z95;
use logldp_core::{DomainConfig, NoisePath, OracleMode, Scheme, SpectralField, Trajectory};
use serde::Serialize;
use serde_json::json;

use super::{dump_trajectory, nonincreasing, strictly_decreasing, Outcome};
use crate::config::{InitialSection, Resolved};
use crate::error::CliError;
use crate::manifest::{Contract, OutputDir};

#[derive(Debug, Clone, Serialize)]
pub struct PhiRow {
    pub eps: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub sup_phi_mean: f64,
    pub sup_phi_se: f64,
    pub int_mean: f64,
    pub int_se: f64,
    pub phi_u0: f64,
    pub sup_ratio: f64,
    pub int_ratio: f64,
}

/// Ensemble of SPDE paths per `eps` with Phi-moment statistics.
pub(super) fn simulate(res: &Resolved, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let ens = &res.config.ensemble;
    let control = ens.use_control.then(|| res.control.clone());
    let cfg = &res.skeleton;
    let out_cfg = &res.config.output;
    let mut rows = Vec::with_capacity(ens.eps.len());
    for (i, &eps) in ens.eps.iter().enumerate() {
        let seed = if ens.common_random_numbers {
            res.seed
        } else {
            res.seed.wrapping_add(i as u64)
        };
        let ec = EnsembleConfig {
            n_paths: ens.n_paths,
            eps,
            base_seed: seed,
            control: control.clone(),
        };
        let r = phi_moment_ensemble(&res.u0, cfg, &ec)?;
        rows.push(PhiRow {
            eps,
            n_paths: r.n_paths,
            seed,
            sup_phi_mean: r.sup_phi_mean,
            sup_phi_se: r.sup_phi_se,
            int_mean: r.int_mean,
            int_se: r.int_se,
            phi_u0: r.phi_u0,
            sup_ratio: r.sup_ratio,
            int_ratio: r.int_ratio,
        });
        if i == 0 || ens.dump_paths {
            let n_dump = if ens.dump_paths {
                ens.max_dump_paths.min(ens.n_paths)
            } else {
                1
            };
            for p in 0..n_dump as u64 {
                let traj = solve_spde(&res.u0, eps, control.as_ref(), &ec.noise(p, cfg)?, cfg)?;
                let stem = if ens.dump_paths {
                    format!("paths/eps_{i}_path_{p}")
                } else {
                    "trajectory".to_string()
                };
                dump_trajectory(out, &stem, &traj, out_cfg.trajectory, out_cfg.stride)?;
            }
        }
    }
    out.write_csv("phi_moments.csv", &rows)?;

    // sort by eps so the trend check reads "growth as eps increases"
    let mut by_eps: Vec<&PhiRow> = rows.iter().collect();
    by_eps.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    let no_growth = |mean: fn(&PhiRow) -> (f64, f64)| {
        by_eps.windows(2).all(|w| {
            let (m0, s0) = mean(w[0]);
            let (m1, s1) = mean(w[1]);
            m1 - m0 <= Z95 * (s0 * s0 + s1 * s1).sqrt()
        })
    };
    let contracts = vec![
        Contract::new(
            "sup_phi_no_growth",
            no_growth(|r| (r.sup_phi_mean, r.sup_phi_se)),
            "sup Phi mean does not grow with eps beyond the 95% band",
        ),
        Contract::new(
            "int_phi_no_growth",
            no_growth(|r| (r.int_mean, r.int_se)),
            "Phi' V-integral mean does not grow with eps beyond the 95% band",
        ),
    ];
    Ok(Outcome {
        contracts,
        summary: json!({ "rows": rows.len(), "phi_u0": rows[0].phi_u0 }),
        failure: None,
    })
}

/// Closed-form Galerkin solution of the heat equation with a constant-sigma
/// control term, evaluated at each grid time.
fn heat_oracle(res: &Resolved, sigma: f64) -> Vec<Vec<f64>> {
    let cfg = &res.skeleton;
    let dom = &res.domain;
    let s = dom.analyze(&vec![1.0; dom.n_quad()]);
    let lam = dom.eigenvalues();
    let tau = res.control.piece_len();
    cfg.times()
        .iter()
        .map(|&t| {
            (0..lam.len())
                .map(|i| {
                    let l = lam[i];
                    let forced: f64 = res
                        .control
                        .values()
                        .iter()
                        .enumerate()
                        .map(|(p, &h)| {
                            let a = p as f64 * tau;
                            let b = (a + tau).min(t);
                            if b <= a {
                                0.0
                            } else {
                                h * ((-l * (t - b)).exp() - (-l * (t - a)).exp()) / l
                            }
                        })
                        .sum();
                    (-l * t).exp() * res.u0.coeffs()[i] + sigma * s[i] * forced
                })
                .collect()
        })
        .collect()
}

/// Single skeleton solve with the a-priori bound and, in `heat_only` mode
/// with constant sigma, the error against the closed form.
pub(super) fn skeleton(res: &Resolved, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let cfg = &res.skeleton;
    let traj = solve_skeleton(&res.u0, &res.control, cfg)?;
    let bound = uniform_bound_report(&traj, &cfg.coeffs)?;
    let out_cfg = &res.config.output;
    dump_trajectory(out, "trajectory", &traj, out_cfg.trajectory, out_cfg.stride)?;

    let mut contracts = vec![Contract::new(
        "uniform_bound",
        bound.observed <= bound.bound,
        format!("observed {} <= bound {}", bound.observed, bound.bound),
    )];
    let mut oracle_error = None;
    if cfg.mode == OracleMode::HeatOnly {
        if let Some(c) = cfg.coeffs.sigma.constant_value() {
            let exact = heat_oracle(res, c);
            let err = traj
                .states()
                .iter()
                .zip(&exact)
                .flat_map(|(s, e)| s.coeffs().iter().zip(e).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            oracle_error = Some(err);
            let unforced = c == 0.0 || res.control.values().iter().all(|&v| v == 0.0);
            if unforced && cfg.scheme == Scheme::ExpEuler {
                contracts.push(Contract::new(
                    "heat_oracle",
                    err < 1e-8,
                    format!("max coefficient error {err:e} < 1e-8"),
                ));
            }
        }
    }
    let terminal = traj.terminal();
    let summary = json!({
        "n_steps": traj.n_steps(),
        "terminal_coeffs": terminal.coeffs(),
        "terminal_h_norm": terminal.h_norm(),
        "control_energy": res.control.energy(),
        "uniform_bound": bound,
        "oracle_max_error": oracle_error,
    });
    out.write_json("skeleton.json", &summary)?;
    Ok(Outcome {
        contracts,
        summary,
        failure: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceDtRow {
    pub dt: f64,
    /// H-distance of the terminal state to the next finer run.
    pub diff_to_next: Option<f64>,
    /// `log(diff_k / diff_{k+1}) / log(dt_k / dt_{k+1})`.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceNRow {
    pub n_modes: usize,
    pub n_quad: usize,
    /// Path distance to the next larger Galerkin size.
    pub rho_to_next: Option<f64>,
    pub observed: f64,
    pub bound: f64,
}

fn initial_on(
    init: &InitialSection,
    dom: &std::sync::Arc<logldp_core::Domain>,
) -> Result<SpectralField, CliError> {
    match init {
        InitialSection::Coeffs { values } => {
            let n = dom.n_modes().min(values.len());
            InitialSection::Coeffs {
                values: values[..n].to_vec(),
            }
            .build(dom)
        }
        m => m.build(dom),
    }
}

/// Step-size self-convergence of the terminal state and the Galerkin sweep.
pub(super) fn convergence(res: &Resolved, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let conv = &res.config.convergence;
    let base = &res.skeleton;
    let fine_dt = *conv.dt_list.last().unwrap();
    let fine_noise = if conv.eps > 0.0 {
        Some(NoisePath::sample(res.seed, 0, fine_dt, base.t_end)?)
    } else {
        None
    };
    let terminals: Vec<SpectralField> = conv
        .dt_list
        .iter()
        .map(|&dt| {
            let cfg = base.clone().with_dt(dt);
            match &fine_noise {
                None => Ok(skeleton_terminal(&res.u0, &res.control, &cfg)?),
                Some(noise) => {
                    let factor = (dt / fine_dt).round() as usize;
                    let noise = noise.coarsen(factor)?;
                    Ok(observe_spde(
                        &res.u0,
                        conv.eps,
                        Some(&res.control),
                        &noise,
                        &cfg,
                        |_, _| {},
                    )?)
                }
            }
        })
        .collect::<Result<_, CliError>>()?;
    let diffs: Vec<f64> = terminals
        .windows(2)
        .map(|w| w[0].sub(&w[1]).map(|d| d.h_norm()))
        .collect::<Result<_, _>>()?;
    let orders: Vec<f64> = (0..diffs.len().saturating_sub(1))
        .map(|k| (diffs[k] / diffs[k + 1]).ln() / (conv.dt_list[k] / conv.dt_list[k + 1]).ln())
        .collect();
    let dt_rows: Vec<ConvergenceDtRow> = conv
        .dt_list
        .iter()
        .enumerate()
        .map(|(k, &dt)| ConvergenceDtRow {
            dt,
            diff_to_next: diffs.get(k).copied(),
            order: orders.get(k).copied(),
        })
        .collect();
    out.write_csv("convergence_dt.csv", &dt_rows)?;

    let d = &res.config.domain;
    let mut trajs: Vec<Trajectory> = Vec::with_capacity(conv.n_list.len());
    let mut n_rows = Vec::with_capacity(conv.n_list.len());
    for &n in &conv.n_list {
        let dom = DomainConfig::new(d.length, n).with_dim(d.dim).build()?;
        let cfg = base.clone().with_domain(dom.clone());
        let u0 = initial_on(&res.config.initial, &dom)?;
        let traj = solve_skeleton(&u0, &res.control, &cfg)?;
        let b = uniform_bound_report(&traj, &cfg.coeffs)?;
        n_rows.push(ConvergenceNRow {
            n_modes: n,
            n_quad: dom.n_quad(),
            rho_to_next: None,
            observed: b.observed,
            bound: b.bound,
        });
        trajs.push(traj);
    }
    let mut rhos = Vec::new();
    for k in 0..trajs.len() - 1 {
        let big = trajs[k + 1].domain().clone();
        let rho = path_metric(&trajs[k].embed(&big), &trajs[k + 1], 0.0, base.t_end)?.rho;
        n_rows[k].rho_to_next = Some(rho);
        rhos.push(rho);
    }
    out.write_csv("convergence_n.csv", &n_rows)?;

    let (lo, hi) = conv.order_band;
    let order_ok = if conv.eps > 0.0 {
        orders.iter().all(|&p| p >= lo)
    } else {
        orders.iter().all(|&p| p >= lo && p <= hi)
    };
    let contracts = vec![
        Contract::new(
            "dt_order",
            order_ok,
            format!("measured orders {orders:?} against band [{lo}, {hi}]"),
        ),
        Contract::new(
            "galerkin_consistency",
            strictly_decreasing(&rhos),
            format!("distances to the next size {rhos:?} decrease"),
        ),
        Contract::new(
            "uniform_bound_all_n",
            n_rows.iter().all(|r| r.observed <= r.bound),
            "observed energy below the bound for every n",
        ),
        Contract::new(
            "dt_differences_shrink",
            nonincreasing(&diffs),
            format!("terminal differences {diffs:?}"),
        ),
    ];
    Ok(Outcome {
        contracts,
        summary: json!({ "orders": orders, "diffs": diffs, "rho_to_next": rhos }),
        failure: None,
    })
}
