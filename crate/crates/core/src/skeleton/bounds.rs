use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::quadrature::trapezoid;
use crate::spectral::Gronwall;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformBoundReport {
    pub sup_h_sq: f64,
    pub int_v_sq: f64,
    /// `sup_h_sq + int_v_sq`.
    pub observed: f64,
    /// A-priori bound on `observed`.
    pub bound: f64,
}

/// Compare `sup |u|^2 + int |u|_V^2` along a controlled trajectory with the
/// bound obtained from the energy identity.
///
/// With `X = |u|^2 + e`, the log-Sobolev inequalities (with `eps = 1/4` for
/// the drift and `theta = min(1, 1/(2 L4 max(|h|, 1)))` for the growth term)
/// give
/// `X(t) + int V <= M(t) + int (c1 X + c2 X log X)` where
/// `c1 = (d/2) log 4 + |h| L3 sqrt(m) + |h| L4 (1 + (d/4) log(1/theta))`,
/// `c2 = 1 + |h| L4 / 2` and `M(t) = X(0) + int |h| (L3 sqrt(m) + L4 m / (2e))`.
/// Both `sup X` and `int V` are then bounded by the logarithmic Gronwall bound,
/// so the reported bound is twice that value.
pub fn uniform_bound_report(
    traj: &Trajectory,
    coeffs: &CoefficientSet,
) -> Result<UniformBoundReport> {
    let h = traj.control().ok_or(Error::MissingControl)?;
    let dom = traj.domain();
    let sup_h_sq = traj
        .states()
        .iter()
        .map(|s| s.h_norm_sq())
        .fold(0.0, f64::max);
    let v: Vec<f64> = traj.states().iter().map(|s| s.v_norm_sq()).collect();
    let int_v_sq = trapezoid(traj.times(), &v);

    let t_end = *traj.times().last().unwrap();
    let d = dom.dim() as f64;
    let m = dom.measure();
    let k = &coeffs.constants;
    let (l3, l4) = (k.l3, k.l4);
    let habs = |t: f64| h.value_at(t.min(t_end)).abs();
    let theta = |t: f64| {
        if l4 == 0.0 {
            1.0
        } else {
            (1.0 / (2.0 * l4 * habs(t).max(1.0))).min(1.0)
        }
    };
    let c1 = |t: f64| {
        let a = habs(t);
        0.5 * d * 4f64.ln() + a * l3 * m.sqrt() + a * l4 * (1.0 + 0.25 * d * (1.0 / theta(t)).ln())
    };
    let c2 = |t: f64| 1.0 + habs(t) * l4 / 2.0;
    let source_rate = l3 * m.sqrt() + l4 * m / (2.0 * E);
    let x0 = traj.initial().h_norm_sq() + E;
    let pieces = h.values().to_vec();
    let tau = h.piece_len();
    // int_0^t |h| exactly for the piecewise-constant control
    let m_fn = |t: f64| {
        let mut acc = 0.0;
        let mut s = 0.0;
        for v in &pieces {
            if s >= t {
                break;
            }
            let e = (s + tau).min(t);
            acc += v.abs() * (e - s);
            s += tau;
        }
        x0 + source_rate * acc
    };
    let g = Gronwall::with_breaks(h.breakpoints());
    let log_bound = g.loglinear(&m_fn, &c1, &c2, t_end)?;
    Ok(UniformBoundReport {
        sup_h_sq,
        int_v_sq,
        observed: sup_h_sq + int_v_sq,
        bound: 2.0 * log_bound,
    })
}
