//! Drift nonlinearity `b(z) = z log|z|`, diffusion coefficients `sigma`, and
//! grid certification of the log-Lipschitz hypothesis and growth bound.

use std::f64::consts::E;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Sides, SpectralField};

/// Floor applied to `|z|` inside `log|z|` when differentiating `b`.
pub const Z_FLOOR: f64 = 1e-300;

/// `z log|z|`, continuously extended by `b(0) = 0`.
pub fn b(z: f64) -> f64 {
    if z == 0.0 {
        0.0
    } else {
        z * z.abs().ln()
    }
}

/// `b'(z) = log|z| + 1`, with `|z|` clamped at [`Z_FLOOR`].
pub fn b_prime(z: f64) -> f64 {
    z.abs().max(Z_FLOOR).ln() + 1.0
}

/// `z^2 log|z|`, zero at the origin.
pub fn sq_log(z: f64) -> f64 {
    if z == 0.0 {
        0.0
    } else {
        z * z * z.abs().ln()
    }
}

/// `log_+ z = log(max(1, z))`.
pub fn log_plus(z: f64) -> f64 {
    if z > 1.0 {
        z.ln()
    } else {
        0.0
    }
}

/// Piecewise-linear `sigma` read from `(z, sigma(z))` samples; linear
/// extrapolation past both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    z: Vec<f64>,
    values: Vec<f64>,
}

impl Tabulated {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Parse(
                "tabulated sigma needs at least two points".into(),
            ));
        }
        if points.iter().any(|(z, s)| !z.is_finite() || !s.is_finite()) {
            return Err(Error::Parse(
                "tabulated sigma contains non-finite values".into(),
            ));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Parse("duplicate abscissa in tabulated sigma".into()));
        }
        let (z, values) = points.into_iter().unzip();
        Ok(Self { z, values })
    }

    /// Parse `z,sigma` lines; a non-numeric first line is taken as a header.
    pub fn from_csv<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)
            .map_err(|e| Error::Parse(e.to_string()))?;
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let parsed = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
                _ => None,
            };
            match parsed {
                Some(p) => points.push(p),
                None if lineno == 0 => continue,
                None => {
                    return Err(Error::Parse(format!(
                        "line {}: expected `z,sigma`, got {line:?}",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(points)
    }

    fn segment(&self, z: f64) -> usize {
        let n = self.z.len();
        match self.z.partition_point(|&x| x <= z) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    fn slope(&self, i: usize) -> f64 {
        (self.values[i + 1] - self.values[i]) / (self.z[i + 1] - self.z[i])
    }

    pub fn eval(&self, z: f64) -> f64 {
        let i = self.segment(z);
        self.values[i] + self.slope(i) * (z - self.z[i])
    }

    pub fn derivative(&self, z: f64) -> f64 {
        self.slope(self.segment(z))
    }

    pub fn range(&self) -> (f64, f64) {
        (self.z[0], *self.z.last().unwrap())
    }
}

/// Diffusion coefficient `sigma: R -> R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sigma {
    Constant {
        value: f64,
    },
    Linear {
        slope: f64,
    },
    /// `z (log_+ |z|)^{1/2}`.
    SqrtLog,
    Tabulated(Tabulated),
}

impl Sigma {
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            Sigma::Constant { value } => *value,
            Sigma::Linear { slope } => slope * z,
            Sigma::SqrtLog => z * log_plus(z.abs()).sqrt(),
            Sigma::Tabulated(t) => t.eval(z),
        }
    }

    /// Derivative used by the adjoint. For `sqrt_log` the log factor is
    /// floored at `1e-12` just above `|z| = 1`, where the true slope is infinite.
    pub fn derivative(&self, z: f64) -> f64 {
        match self {
            Sigma::Constant { .. } => 0.0,
            Sigma::Linear { slope } => *slope,
            Sigma::SqrtLog => {
                let l = log_plus(z.abs());
                if l == 0.0 {
                    0.0
                } else {
                    let l = l.max(1e-12);
                    l.sqrt() + 0.5 / l.sqrt()
                }
            }
            Sigma::Tabulated(t) => t.derivative(z),
        }
    }

    /// The constant value when `sigma` does not depend on its argument.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Sigma::Constant { value } => Some(*value),
            Sigma::Linear { slope } if *slope == 0.0 => Some(0.0),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant_value() == Some(0.0)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Sigma::Constant { .. } => "constant",
            Sigma::Linear { .. } => "linear",
            Sigma::SqrtLog => "sqrt_log",
            Sigma::Tabulated(_) => "user",
        }
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sigma::Constant { value } => write!(f, "constant({value})"),
            Sigma::Linear { slope } => write!(f, "linear({slope})"),
            Sigma::SqrtLog => write!(f, "sqrt_log"),
            Sigma::Tabulated(t) => {
                let (a, b) = t.range();
                write!(f, "user[{a}, {b}]")
            }
        }
    }
}

impl FromStr for Sigma {
    type Err = Error;

    /// Parses `constant(c)`, `linear(k)` or `sqrt_log`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "sqrt_log" {
            return Ok(Sigma::SqrtLog);
        }
        let arg = |prefix: &str| -> Option<Result<f64>> {
            let inner = s
                .strip_prefix(prefix)?
                .strip_prefix('(')?
                .strip_suffix(')')?;
            Some(
                inner
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad sigma parameter in {s:?}: {e}"))),
            )
        };
        if let Some(v) = arg("constant") {
            return Ok(Sigma::Constant { value: v? });
        }
        if let Some(v) = arg("linear") {
            return Ok(Sigma::Linear { slope: v? });
        }
        Err(Error::InvalidConfig(format!("unknown sigma kind {s:?}")))
    }
}

/// Constants of the log-Lipschitz hypothesis (`l1`, `l2`) and of the growth
/// bound (`l3`, `l4`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HConstants {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    /// Whether the constants were certified (analytically or on a grid).
    pub verified: bool,
    /// How the constants were obtained.
    pub certificate: String,
}

/// A diffusion coefficient together with its hypothesis constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub sigma: Sigma,
    pub constants: HConstants,
}

impl CoefficientSet {
    pub fn sigma(&self, z: f64) -> f64 {
        self.sigma.eval(z)
    }
}

/// Default certification lattice for fitted constants.
pub const DEFAULT_FIT_RANGE: (f64, f64) = (-100.0, 100.0);
pub const DEFAULT_FIT_POINTS: usize = 201;

/// Build one of the library coefficients with its constants.
pub fn builtin_sigma(sigma: Sigma) -> Result<CoefficientSet> {
    let constants = match &sigma {
        Sigma::Constant { value } => HConstants {
            l1: 0.0,
            l2: 0.0,
            l3: value.abs(),
            l4: 0.0,
            verified: true,
            certificate: "analytic".into(),
        },
        // |k x| <= |k| e + |k| |x| (log_+ |x|)^{1/2}
        Sigma::Linear { slope } => HConstants {
            l1: slope.abs(),
            l2: 0.0,
            l3: slope.abs() * E,
            l4: slope.abs(),
            verified: true,
            certificate: "analytic".into(),
        },
        Sigma::SqrtLog => {
            let (lo, hi) = DEFAULT_FIT_RANGE;
            let fit = fit_h(
                &|z| sigma.eval(z),
                &lattice_pairs(lo, hi, DEFAULT_FIT_POINTS),
            );
            let grid = uniform_grid(lo, hi, DEFAULT_FIT_POINTS);
            let growth = check_growth(&|z| sigma.eval(z), 0.0, 1.0, &grid);
            HConstants {
                l1: fit.l1,
                l2: fit.l2,
                l3: 0.0,
                l4: 1.0,
                verified: fit.max_violation <= 0.0 && growth <= 0.0,
                certificate: format!(
                    "grid-certified on [{lo}, {hi}] with {DEFAULT_FIT_POINTS} points; \
                     not certified globally"
                ),
            }
        }
        Sigma::Tabulated(t) => {
            let (lo, hi) = t.range();
            let (lo, hi) = (lo.min(-1.0), hi.max(1.0));
            let fit = fit_h(&|z| t.eval(z), &lattice_pairs(lo, hi, DEFAULT_FIT_POINTS));
            let grid = uniform_grid(lo, hi, DEFAULT_FIT_POINTS);
            let l4 = t.derivative(lo).abs().max(t.derivative(hi).abs());
            let l3 = grid
                .iter()
                .map(|&x| t.eval(x).abs() - l4 * x.abs() * log_plus(x.abs()).sqrt())
                .fold(0.0, f64::max);
            let growth = check_growth(&|z| t.eval(z), l3, l4, &grid);
            HConstants {
                l1: fit.l1,
                l2: fit.l2,
                l3,
                l4,
                verified: fit.max_violation <= 0.0 && growth <= 0.0,
                certificate: format!(
                    "grid-certified on [{lo}, {hi}] with {DEFAULT_FIT_POINTS} points"
                ),
            }
        }
    };
    Ok(CoefficientSet { sigma, constants })
}

/// Parse a builtin kind (`constant(c)`, `linear(k)`, `sqrt_log`).
pub fn builtin_sigma_named(kind: &str) -> Result<CoefficientSet> {
    builtin_sigma(kind.parse()?)
}

pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// All pairs `x < y` drawn from a uniform grid of `n` points on `[lo, hi]`.
pub fn lattice_pairs(lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let g = uniform_grid(lo, hi, n);
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..g.len() {
        for j in (i + 1)..g.len() {
            out.push((g[i], g[j]));
        }
    }
    out
}

/// Result of [`fit_h`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HFit {
    pub l1: f64,
    pub l2: f64,
    /// Worst `|s(x) - s(y)| - rhs` at the returned constants; `<= 0` certifies.
    pub max_violation: f64,
}

const LATTICE_STEP: f64 = 0.125;
const LATTICE_MAX: f64 = 16.0;

struct PairData {
    ds: f64,
    dx: f64,
    g: f64,
}

fn required_l1(data: &[PairData], l2: f64) -> f64 {
    data.iter()
        .map(|p| (p.ds - l2 * p.g) / p.dx)
        .fold(0.0, f64::max)
}

fn round_up(x: f64, step: f64) -> f64 {
    ((x / step) * (1.0 - 1e-12)).ceil().max(0.0) * step
}

/// Smallest `(l1, l2)` on the lattice `{0, 0.125, .., 16}^2` (by `l1 + l2`,
/// ties toward smaller `l2`) certifying
/// `|s(x) - s(y)| <= l1 |x - y| + l2 |x - y| (log_+ max(|x|, |y|))^{1/2}`
/// at every sampled pair, refined once on an 8x finer lattice around the best
/// cell.
pub fn fit_h(sigma: &dyn Fn(f64) -> f64, pairs: &[(f64, f64)]) -> HFit {
    let data: Vec<PairData> = pairs
        .iter()
        .filter(|(x, y)| x != y)
        .map(|&(x, y)| {
            let dx = (x - y).abs();
            PairData {
                ds: (sigma(x) - sigma(y)).abs(),
                dx,
                g: dx * log_plus(x.abs().max(y.abs())).sqrt(),
            }
        })
        .collect();

    let search = |l2_values: &mut dyn Iterator<Item = f64>, step: f64| -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for l2 in l2_values {
            let l1 = round_up(required_l1(&data, l2), step);
            if l1 > LATTICE_MAX + 1e-12 {
                continue;
            }
            let better = match best {
                None => true,
                Some((b1, b2)) => l1 + l2 < b1 + b2 - 1e-15,
            };
            if better {
                best = Some((l1, l2));
            }
        }
        best
    };

    let coarse_n = (LATTICE_MAX / LATTICE_STEP).round() as usize;
    let coarse = search(
        &mut (0..=coarse_n).map(|k| k as f64 * LATTICE_STEP),
        LATTICE_STEP,
    );
    let (l1, l2) = match coarse {
        None => (LATTICE_MAX, LATTICE_MAX),
        Some((_, l2c)) => {
            let fine = LATTICE_STEP / 8.0;
            let lo = (l2c - LATTICE_STEP).max(0.0);
            let hi = (l2c + LATTICE_STEP).min(LATTICE_MAX);
            let n = ((hi - lo) / fine).round() as usize;
            search(&mut (0..=n).map(|k| lo + k as f64 * fine), fine)
                .or(coarse)
                .unwrap()
        }
    };
    let max_violation = data
        .iter()
        .map(|p| p.ds - l1 * p.dx - l2 * p.g)
        .fold(f64::NEG_INFINITY, f64::max);
    HFit {
        l1,
        l2,
        max_violation: if data.is_empty() { 0.0 } else { max_violation },
    }
}

/// `max_x |s(x)| - l3 - l4 |x| (log_+ |x|)^{1/2}` over the grid.
pub fn check_growth(sigma: &dyn Fn(f64) -> f64, l3: f64, l4: f64, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&x| sigma(x).abs() - l3 - l4 * x.abs() * log_plus(x.abs()).sqrt())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn check_pair_args(u: &SpectralField, v: &SpectralField, eps: f64, alpha: f64) -> Result<()> {
    if u.coeffs().len() != v.coeffs().len() {
        return Err(Error::DimensionMismatch {
            expected: u.coeffs().len(),
            got: v.coeffs().len(),
        });
    }
    if u == v {
        return Err(Error::Domain("pairing gap needs u != v".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Terms shared by both pairing estimates:
/// `eps |w|_V^2 + (d/4) log(1/eps) |w|^2 + |w|^2 log|w|
///  + (|u|^{2(1-a)} + |v|^{2(1-a)}) |w|^{2a} / (2 (1-a) e)`.
fn pairing_rhs(
    u: &SpectralField,
    v: &SpectralField,
    w: &SpectralField,
    eps: f64,
    alpha: f64,
) -> f64 {
    let d = u.domain().dim() as f64;
    let w2 = w.h_norm_sq();
    let beta = 1.0 - alpha;
    eps * w.v_norm_sq()
        + 0.25 * d * (1.0 / eps).ln() * w2
        + 0.5 * w2 * w2.ln()
        + (u.h_norm_sq().powf(beta) + v.h_norm_sq().powf(beta)) * w2.powf(alpha) / (2.0 * beta * E)
}

/// `RHS - LHS` of the monotonicity-type estimate for
/// `(u log|u| - v log|v|, u - v)`.
pub fn b_pairing_gap(u: &SpectralField, v: &SpectralField, eps: f64, alpha: f64) -> Result<f64> {
    Ok(b_pairing_sides(u, v, eps, alpha)?.gap())
}

pub fn b_pairing_sides(
    u: &SpectralField,
    v: &SpectralField,
    eps: f64,
    alpha: f64,
) -> Result<Sides> {
    check_pair_args(u, v, eps, alpha)?;
    let w = u.sub(v)?;
    let (pu, pv) = (u.to_physical(), v.to_physical());
    let samples: Vec<f64> = pu
        .iter()
        .zip(&pv)
        .map(|(&a, &c)| (b(a) - b(c)) * (a - c))
        .collect();
    Ok(Sides {
        lhs: u.domain().integrate_samples(&samples),
        rhs: pairing_rhs(u, v, &w, eps, alpha) + w.h_norm_sq(),
    })
}

/// `RHS - LHS` of the estimate for `int |u - v|^2 log_+(|u| v |v|)`.
pub fn logplus_pairing_gap(
    u: &SpectralField,
    v: &SpectralField,
    eps: f64,
    alpha: f64,
) -> Result<f64> {
    Ok(logplus_pairing_sides(u, v, eps, alpha)?.gap())
}

pub fn logplus_pairing_sides(
    u: &SpectralField,
    v: &SpectralField,
    eps: f64,
    alpha: f64,
) -> Result<Sides> {
    check_pair_args(u, v, eps, alpha)?;
    let w = u.sub(v)?;
    let (pu, pv) = (u.to_physical(), v.to_physical());
    let samples: Vec<f64> = pu
        .iter()
        .zip(&pv)
        .map(|(&a, &c)| (a - c) * (a - c) * log_plus(a.abs().max(c.abs())))
        .collect();
    let beta = 1.0 - alpha;
    let m = u.domain().measure();
    let extra = (4.0 * m).powf(beta) * w.h_norm_sq().powf(alpha) / (2.0 * beta * E);
    Ok(Sides {
        lhs: u.domain().integrate_samples(&samples),
        rhs: pairing_rhs(u, v, &w, eps, alpha) + extra,
    })
}
