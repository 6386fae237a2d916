use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::trapezoid_weights;
use crate::trajectory::Trajectory;

/// Components of the path distance `rho_{a,b}(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathMetricReport {
    /// `sup_s |u(s) - v(s)|` over grid times in the window.
    pub sup_h: f64,
    /// Trapezoid quadrature of `|u(s) - v(s)|_V^2`.
    pub int_v: f64,
    /// `sqrt(sup_h^2 + int_v)`.
    pub rho: f64,
    pub window: (f64, f64),
}

fn grids_match(u: &Trajectory, v: &Trajectory) -> bool {
    u.times().len() == v.times().len()
        && u.times()
            .iter()
            .zip(v.times())
            .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()))
}

/// `rho_{a,b}(u, v)^2 = sup_{[a,b]} |u - v|^2 + int_a^b |u - v|_V^2` on the
/// shared time grid.
pub fn path_metric(u: &Trajectory, v: &Trajectory, a: f64, b: f64) -> Result<PathMetricReport> {
    if !grids_match(u, v) {
        return Err(Error::GridMismatch);
    }
    if u.domain().config() != v.domain().config() {
        return Err(Error::InvalidConfig(
            "trajectories live on different domains".into(),
        ));
    }
    if !(a <= b) {
        return Err(Error::Domain(format!("empty window [{a}, {b}]")));
    }
    let slack = 1e-12 * (1.0 + b.abs());
    let idx: Vec<usize> = u
        .times()
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= a - slack && t <= b + slack)
        .map(|(i, _)| i)
        .collect();
    if idx.is_empty() {
        return Err(Error::Domain(format!("no grid times inside [{a}, {b}]")));
    }
    let dom = u.domain();
    let mut sup_sq: f64 = 0.0;
    let mut vvals = Vec::with_capacity(idx.len());
    let mut diff = vec![0.0; dom.n_modes()];
    for &i in &idx {
        let (x, y) = (u.states()[i].coeffs(), v.states()[i].coeffs());
        for ((d, p), q) in diff.iter_mut().zip(x).zip(y) {
            *d = p - q;
        }
        sup_sq = sup_sq.max(diff.iter().map(|d| d * d).sum());
        vvals.push(dom.v_norm_sq(&diff));
    }
    let times: Vec<f64> = idx.iter().map(|&i| u.times()[i]).collect();
    let int_v: f64 = trapezoid_weights(&times)
        .iter()
        .zip(&vvals)
        .map(|(w, x)| w * x)
        .sum();
    Ok(PathMetricReport {
        sup_h: sup_sq.sqrt(),
        int_v,
        rho: (sup_sq + int_v).sqrt(),
        window: (a, b),
    })
}

/// Discrete `W^{beta,2}([0,T]; V*)` norm: trapezoid in time for the
/// `L^2(V*)` part and a double sum without the diagonal for the
/// Gagliardo part.
pub fn wbeta2_norm(traj: &Trajectory, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::Domain(format!(
            "beta must lie in (0, 1/2), got {beta}"
        )));
    }
    let dom = traj.domain();
    let times = traj.times();
    let w = trapezoid_weights(times);
    let states = traj.states();
    let single: f64 = states
        .iter()
        .zip(&w)
        .map(|(s, wi)| wi * s.vstar_norm_sq())
        .sum();
    let expo = 1.0 + 2.0 * beta;
    let mut double = 0.0;
    let mut diff = vec![0.0; dom.n_modes()];
    for i in 0..states.len() {
        for j in (i + 1)..states.len() {
            for ((d, p), q) in diff
                .iter_mut()
                .zip(states[i].coeffs())
                .zip(states[j].coeffs())
            {
                *d = p - q;
            }
            let dt = (times[j] - times[i]).abs();
            double += 2.0 * w[i] * w[j] * dom.vstar_norm_sq(&diff) / dt.powf(expo);
        }
    }
    Ok((single + double).sqrt())
}
