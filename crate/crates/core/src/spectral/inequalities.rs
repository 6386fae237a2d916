//! Signed gaps (right side minus left side) of the logarithmic Sobolev
//! inequality and its `log_+` variant, with the integral by quadrature.

use std::f64::consts::E;

use super::SpectralField;
use crate::coefficients::{log_plus, sq_log};
use crate::error::{Error, Result};

fn check_args(u: &SpectralField, eps: f64) -> Result<()> {
    if u.is_zero() {
        return Err(Error::Domain("log-Sobolev gap needs u != 0".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

/// Right side shared by both inequalities:
/// `eps |u|_V^2 + (d/4) log(1/eps) |u|^2 + |u|^2 log |u|`.
fn common_rhs(u: &SpectralField, eps: f64) -> f64 {
    let h2 = u.h_norm_sq();
    let d = u.domain().dim() as f64;
    eps * u.v_norm_sq() + 0.25 * d * (1.0 / eps).ln() * h2 + 0.5 * h2 * h2.ln()
}

/// Both sides of an inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sides {
    pub lhs: f64,
    pub rhs: f64,
}

impl Sides {
    pub fn gap(&self) -> f64 {
        self.rhs - self.lhs
    }

    /// `gap / (1 + |rhs|)`.
    pub fn relative_gap(&self) -> f64 {
        self.gap() / (1.0 + self.rhs.abs())
    }
}

/// Sides of `int |u|^2 log|u| <= eps |u|_V^2 + (d/4) log(1/eps) |u|^2 + |u|^2 log|u|`.
pub fn log_sobolev_sides(u: &SpectralField, eps: f64) -> Result<Sides> {
    check_args(u, eps)?;
    let phys = u.to_physical();
    let samples: Vec<f64> = phys.iter().map(|&x| sq_log(x)).collect();
    Ok(Sides {
        lhs: u.domain().integrate_samples(&samples),
        rhs: common_rhs(u, eps),
    })
}

/// `RHS - LHS` of [`log_sobolev_sides`].
pub fn log_sobolev_gap(u: &SpectralField, eps: f64) -> Result<f64> {
    Ok(log_sobolev_sides(u, eps)?.gap())
}

/// Same as [`log_sobolev_sides`] with `log_+` in the integrand and the extra
/// `m(D) / (2e)` on the right.
pub fn log_sobolev_plus_sides(u: &SpectralField, eps: f64) -> Result<Sides> {
    check_args(u, eps)?;
    let phys = u.to_physical();
    let samples: Vec<f64> = phys.iter().map(|&x| x * x * log_plus(x.abs())).collect();
    Ok(Sides {
        lhs: u.domain().integrate_samples(&samples),
        rhs: common_rhs(u, eps) + u.domain().measure() / (2.0 * E),
    })
}

pub fn log_sobolev_plus_gap(u: &SpectralField, eps: f64) -> Result<f64> {
    Ok(log_sobolev_plus_sides(u, eps)?.gap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DomainConfig;

    #[test]
    fn eigenfunction_gaps_are_nonnegative() {
        let d = DomainConfig::new(1.0, 16).build().unwrap();
        let e1 = SpectralField::basis(&d, 1).unwrap();
        assert!(log_sobolev_gap(&e1, 1.0).unwrap() >= 0.0);
        assert!(log_sobolev_gap(&e1.scale(10.0), 0.25).unwrap() >= 0.0);
        assert!(log_sobolev_plus_gap(&e1.scale(5.0), 0.1).unwrap() >= 0.0);
        for eps in [1e-2, 1e-1, 1.0] {
            assert!(log_sobolev_plus_gap(&e1.scale(5.0), eps).unwrap() >= 0.0);
        }
    }

    #[test]
    fn unit_norm_drops_log_term() {
        let d = DomainConfig::new(1.0, 8).build().unwrap();
        let u =
            SpectralField::from_coeffs(&d, vec![0.6, 0.0, 0.8, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let eps: f64 = 0.3;
        let phys = u.to_physical();
        let lhs: f64 = d.weight() * phys.iter().map(|&x| sq_log(x)).sum::<f64>();
        let expected = eps * u.v_norm_sq() + 0.25 * (1.0 / eps).ln() - lhs;
        assert!((log_sobolev_gap(&u, eps).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn small_amplitude_plus_gap_equals_rhs() {
        let d = DomainConfig::new(1.0, 8).build().unwrap();
        // max |u| = sqrt(2) * 0.5 < 1, so the log_+ integrand vanishes
        let u = SpectralField::basis(&d, 1).unwrap().scale(0.5);
        let eps: f64 = 0.2;
        let h2 = 0.25;
        let rhs =
            eps * u.v_norm_sq() + 0.25 * (1.0 / eps).ln() * h2 + h2 * 0.5f64.ln() + 1.0 / (2.0 * E);
        let gap = log_sobolev_plus_gap(&u, eps).unwrap();
        assert!((gap - rhs).abs() < 1e-14);
        assert!(gap >= 0.0);
    }

    #[test]
    fn rejects_zero_field_and_bad_eps() {
        let d = DomainConfig::new(1.0, 4).build().unwrap();
        let z = SpectralField::zeros(&d);
        assert!(log_sobolev_gap(&z, 1.0).is_err());
        assert!(log_sobolev_plus_gap(&z, 1.0).is_err());
        let e1 = SpectralField::basis(&d, 1).unwrap();
        assert!(log_sobolev_gap(&e1, 0.0).is_err());
    }
}
