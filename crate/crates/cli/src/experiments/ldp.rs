use logldp_core::ldp::{
    condition_b_experiment, mc_rare_event, rate_function as optimize_rate, RateFunctionResult,
    TargetSet,
};
use logldp_core::skeleton::solve_skeleton;
use logldp_core::spde::{condition_a_experiment, solve_spde};
use logldp_core::NoisePath;
use serde::Serialize;
use serde_json::json;

use super::{dump_trajectory, nonincreasing, strictly_decreasing, Outcome};
use crate::config::Resolved;
use crate::error::CliError;
use crate::manifest::{Contract, Failure, OutputDir};

#[derive(Debug, Clone, Serialize)]
pub struct ControlRow {
    pub piece: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub value: f64,
}

fn target(res: &Resolved) -> &TargetSet {
    res.config
        .target
        .as_ref()
        .expect("target presence is checked during resolution")
}

fn optimize(
    res: &Resolved,
    out: &mut OutputDir,
) -> Result<(RateFunctionResult, Vec<Contract>), CliError> {
    let mut opt = res.config.optimizer.clone();
    opt.seed = res.seed;
    let r = optimize_rate(&res.u0, target(res), &res.skeleton, &opt)?;
    out.write_json("rate_function.json", &r)?;
    let tau = r.h_star.piece_len();
    let rows: Vec<ControlRow> = r
        .h_star
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| ControlRow {
            piece: k,
            t_start: k as f64 * tau,
            t_end: (k + 1) as f64 * tau,
            value: v,
        })
        .collect();
    out.write_csv("control.csv", &rows)?;
    let mut contracts = vec![Contract::new(
        "feasible",
        r.feasible,
        format!("terminal gap {} <= {}", r.feasibility_gap, opt.feas_tol),
    )];
    let fd: Vec<f64> = r.trace.iter().filter_map(|t| t.fd_rel_error).collect();
    if !fd.is_empty() {
        let worst = fd.iter().cloned().fold(0.0, f64::max);
        contracts.push(Contract::new(
            "adjoint_fd_check",
            worst < 1e-5,
            format!("worst relative gradient error {worst:e} < 1e-5"),
        ));
    }
    Ok((r, contracts))
}

fn infeasible(r: &RateFunctionResult) -> Option<Failure> {
    (!r.feasible).then(|| Failure {
        kind: "infeasible".into(),
        message: format!(
            "no start reached the target; best terminal gap {}",
            r.feasibility_gap
        ),
    })
}

pub(super) fn rate_function(res: &Resolved, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let (r, contracts) = optimize(res, out)?;
    let traj = solve_skeleton(&res.u0, &r.h_star, &res.skeleton)?;
    let oc = &res.config.output;
    dump_trajectory(out, "trajectory", &traj, oc.trajectory, oc.stride)?;
    Ok(Outcome {
        contracts,
        summary: json!({
            "cost": r.cost,
            "feasible": r.feasible,
            "feasibility_gap": r.feasibility_gap,
            "best_start": r.best_start,
        }),
        failure: infeasible(&r),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct McRow {
    pub eps: f64,
    pub n_paths: usize,
    pub n_failed: usize,
    pub hits: usize,
    pub p_hat: f64,
    pub ldp_estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ldp_ci_low: f64,
    pub ldp_ci_high: f64,
    pub censored: bool,
    pub rate_cost: Option<f64>,
}

pub(super) fn mc_estimate(res: &Resolved, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let ens = &res.config.ensemble;
    let rows = mc_rare_event(
        &res.u0,
        target(res),
        &ens.eps,
        ens.n_paths,
        res.seed,
        &res.skeleton,
    )?;
    let mut contracts = Vec::new();
    let mut failure = None;
    let rate = if res.config.mc.compare_rate {
        let (r, c) = optimize(res, out)?;
        contracts.extend(c);
        failure = infeasible(&r);
        Some(r.cost)
    } else {
        None
    };
    let table: Vec<McRow> = rows
        .iter()
        .map(|r| McRow {
            eps: r.eps,
            n_paths: r.n_paths,
            n_failed: r.n_failed,
            hits: r.hits,
            p_hat: r.p_hat,
            ldp_estimate: r.ldp_estimate,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            ldp_ci_low: r.ldp_ci_low,
            ldp_ci_high: r.ldp_ci_high,
            censored: r.censored,
            rate_cost: rate,
        })
        .collect();
    out.write_csv("mc_estimate.csv", &table)?;
    let censored = rows.iter().filter(|r| r.censored).count();
    contracts.push(Contract::new(
        "uncensored",
        censored == 0,
        format!("{censored} rows without hits"),
    ));
    if let Some(cost) = rate {
        let mut ordered: Vec<_> = rows.iter().filter(|r| !r.censored).collect();
        ordered.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        let dist: Vec<f64> = ordered
            .iter()
            .map(|r| (r.ldp_estimate - cost).abs())
            .collect();
        contracts.push(Contract::new(
            "ldp_trend",
            nonincreasing(&dist),
            format!("|-eps^2 log p - I| as eps decreases: {dist:?}"),
        ));
    }
    Ok(Outcome {
        contracts,
        summary: json!({ "rate_cost": rate, "rows": table }),
        failure,
    })
}

/// Published columns of the path-convergence table.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionARow {
    pub eps: f64,
    pub n_paths: usize,
    pub median_rho: f64,
    pub q10: f64,
    pub q90: f64,
    pub p_exceed_delta: f64,
}

#[derive(Debug, Clone, Serialize)]
struct PathRhoRow {
    eps: f64,
    path: u64,
    rho: f64,
}

pub(super) fn condition_a(res: &Resolved, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let ens = &res.config.ensemble;
    let cfg = &res.skeleton;
    let r = condition_a_experiment(
        &res.u0,
        &res.control,
        &ens.eps,
        ens.n_paths,
        res.seed,
        ens.delta,
        cfg,
    )?;
    let rows: Vec<ConditionARow> = r
        .rows
        .iter()
        .map(|x| ConditionARow {
            eps: x.eps,
            n_paths: x.n_paths,
            median_rho: x.median_rho,
            q10: x.q10,
            q90: x.q90,
            p_exceed_delta: x.p_exceed_delta,
        })
        .collect();
    out.write_csv("condition_a.csv", &rows)?;
    if ens.dump_paths {
        let n_dump = ens.max_dump_paths.min(ens.n_paths);
        let oc = &res.config.output;
        let reference = solve_skeleton(&res.u0, &res.control, cfg)?;
        dump_trajectory(out, "paths/reference", &reference, oc.trajectory, oc.stride)?;
        let mut per_path = Vec::new();
        for (i, &eps) in ens.eps.iter().enumerate() {
            for p in 0..n_dump as u64 {
                per_path.push(PathRhoRow {
                    eps,
                    path: p,
                    rho: r.per_path[i][p as usize],
                });
                let noise = NoisePath::sample(res.seed, p, cfg.dt, cfg.t_end)?;
                let traj = solve_spde(&res.u0, eps, Some(&res.control), &noise, cfg)?;
                dump_trajectory(
                    out,
                    &format!("paths/eps_{i}_path_{p}"),
                    &traj,
                    oc.trajectory,
                    oc.stride,
                )?;
            }
        }
        out.write_csv("condition_a_paths.csv", &per_path)?;
    }
    let medians: Vec<f64> = rows.iter().map(|x| x.median_rho).collect();
    let last_p = rows.last().map(|x| x.p_exceed_delta).unwrap_or(f64::NAN);
    let failed: Vec<usize> = r.rows.iter().map(|x| x.n_failed).collect();
    let contracts = vec![
        Contract::new(
            "median_nonincreasing",
            nonincreasing(&medians),
            format!("medians {medians:?}"),
        ),
        Contract::new(
            "exceedance_vanishes",
            last_p == 0.0,
            format!("P(rho > {}) = {last_p} at the smallest eps", r.delta),
        ),
        Contract::new(
            "no_failed_paths",
            failed.iter().all(|&f| f == 0),
            format!("failed paths per eps {failed:?}"),
        ),
    ];
    let summary = json!({
        "delta": r.delta,
        "n_failed": failed,
        "failures": r.failures,
    });
    out.write_json("condition_a.json", &summary)?;
    Ok(Outcome {
        contracts,
        summary,
        failure: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionBRow {
    pub eps: f64,
    pub rho: f64,
    pub energy: f64,
    pub weak_gap: f64,
}

pub(super) fn condition_b(res: &Resolved, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let cb = &res.config.condition_b;
    let level = cb.level.expect("level is filled during resolution");
    let rows: Vec<ConditionBRow> = condition_b_experiment(
        &res.u0,
        &res.control,
        cb.amplitude,
        &cb.eps,
        level,
        &res.skeleton,
    )?
    .into_iter()
    .map(|r| ConditionBRow {
        eps: r.eps,
        rho: r.rho,
        energy: r.energy,
        weak_gap: r.weak_gap,
    })
    .collect();
    out.write_csv("condition_b.csv", &rows)?;
    let rho: Vec<f64> = rows.iter().map(|r| r.rho).collect();
    let gaps: Vec<f64> = rows.iter().map(|r| r.weak_gap).collect();
    let contracts = vec![
        Contract::new(
            "rho_decreasing",
            strictly_decreasing(&rho),
            format!("distances {rho:?}"),
        ),
        Contract::new(
            "weakly_null",
            gaps.last() < gaps.first() || gaps.len() < 2,
            format!("test-function gaps {gaps:?}"),
        ),
    ];
    Ok(Outcome {
        contracts,
        summary: json!({ "level": level, "rho": rho }),
        failure: None,
    })
}
