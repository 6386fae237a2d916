//! Dirichlet-Laplacian eigenbasis on `(0, L)` and fields expanded in it.
//!
//! The orthonormal basis is `e_i(x) = sqrt(2/L) sin(i pi x / L)` with
//! eigenvalues `lambda_i = (i pi / L)^2`. A [`SpectralField`] stores the first
//! `n_modes` coefficients; physical samples live on the uniform interior grid
//! `x_k = k L / (M + 1)`, `k = 1..=M`, where the discrete sine transform is
//! orthogonal, so round trips are exact up to rounding whenever `M >= n_modes`.

mod gronwall;
mod inequalities;
mod metric;
mod phi;

pub use gronwall::{gronwall_bernoulli, gronwall_loglinear, Gronwall};
pub use inequalities::{
    log_sobolev_gap, log_sobolev_plus_gap, log_sobolev_plus_sides, log_sobolev_sides, Sides,
};
pub use metric::{path_metric, wbeta2_norm, PathMetricReport};
pub use phi::PhiFunction;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_dim() -> usize {
    1
}

/// User-facing description of the spatial discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// Interval length `L`.
    pub length: f64,
    pub n_modes: usize,
    /// Physical quadrature points `M`; must satisfy `M >= 2 n_modes + 1`.
    pub n_quad: usize,
    /// Nominal spatial dimension entering the inequality constants.
    #[serde(default = "default_dim")]
    pub dim: usize,
}

impl DomainConfig {
    /// Interval of length `length` with `n_quad = 4 n_modes`.
    pub fn new(length: f64, n_modes: usize) -> Self {
        Self {
            length,
            n_modes,
            n_quad: 4 * n_modes.max(1),
            dim: 1,
        }
    }

    pub fn with_quad(mut self, n_quad: usize) -> Self {
        self.n_quad = n_quad;
        self
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "domain length must be positive, got {}",
                self.length
            )));
        }
        if self.n_modes == 0 {
            return Err(Error::InvalidConfig("n_modes must be at least 1".into()));
        }
        if self.n_quad < 2 * self.n_modes + 1 {
            return Err(Error::InvalidConfig(format!(
                "n_quad = {} must be at least 2 n_modes + 1 = {}",
                self.n_quad,
                2 * self.n_modes + 1
            )));
        }
        if self.dim == 0 {
            return Err(Error::InvalidConfig("dim must be at least 1".into()));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Arc<Domain>> {
        Domain::new(self.clone())
    }
}

/// Validated domain with cached eigenvalues and sine tables.
pub struct Domain {
    config: DomainConfig,
    eigenvalues: Vec<f64>,
    // basis[i * n_quad + k] = e_{i+1}(x_k)
    basis: Vec<f64>,
    nodes: Vec<f64>,
    weight: f64,
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl PartialEq for Domain {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
    }
}

impl Domain {
    pub fn new(config: DomainConfig) -> Result<Arc<Self>> {
        config.validate()?;
        let n = config.n_modes;
        let m = config.n_quad;
        let l = config.length;
        let eigenvalues = (1..=n).map(|i| (i as f64 * PI / l).powi(2)).collect();
        let amp = (2.0 / l).sqrt();
        let mut basis = Vec::with_capacity(n * m);
        for i in 1..=n {
            for k in 1..=m {
                // reduce the argument exactly in integers to keep the table symmetric
                let r = (i * k) % (2 * (m + 1));
                basis.push(amp * (PI * r as f64 / (m + 1) as f64).sin());
            }
        }
        let weight = l / (m + 1) as f64;
        let nodes = (1..=m).map(|k| k as f64 * weight).collect();
        Ok(Arc::new(Self {
            config,
            eigenvalues,
            basis,
            nodes,
            weight,
        }))
    }

    pub fn config(&self) -> &DomainConfig {
        &self.config
    }

    pub fn length(&self) -> f64 {
        self.config.length
    }

    pub fn n_modes(&self) -> usize {
        self.config.n_modes
    }

    pub fn n_quad(&self) -> usize {
        self.config.n_quad
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    /// Lebesgue measure `m(D) = L`.
    pub fn measure(&self) -> f64 {
        self.config.length
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Interior quadrature nodes `x_k = k L / (M + 1)`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weight `L / (M + 1)` shared by every node.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Row `i` (0-based) of the sine table: `e_{i+1}` sampled at the nodes.
    pub fn basis_row(&self, i: usize) -> &[f64] {
        let m = self.n_quad();
        &self.basis[i * m..(i + 1) * m]
    }

    /// Coefficients to physical samples, written into `out` (length `n_quad`).
    pub fn synthesize_into(&self, coeffs: &[f64], out: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), self.n_modes());
        debug_assert_eq!(out.len(), self.n_quad());
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, b) in out.iter_mut().zip(self.basis_row(i)) {
                *o += c * b;
            }
        }
    }

    /// Physical samples to projected coefficients `<g, e_i>` (trapezoid rule).
    pub fn analyze_into(&self, samples: &[f64], out: &mut [f64]) {
        debug_assert_eq!(samples.len(), self.n_quad());
        debug_assert_eq!(out.len(), self.n_modes());
        for (i, o) in out.iter_mut().enumerate() {
            let s: f64 = self
                .basis_row(i)
                .iter()
                .zip(samples)
                .map(|(b, g)| b * g)
                .sum();
            *o = self.weight * s;
        }
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_quad()];
        self.synthesize_into(coeffs, &mut out);
        out
    }

    pub fn analyze(&self, samples: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_modes()];
        self.analyze_into(samples, &mut out);
        out
    }

    /// Trapezoid quadrature of physical samples over `(0, L)`.
    pub fn integrate_samples(&self, samples: &[f64]) -> f64 {
        self.weight * samples.iter().sum::<f64>()
    }

    /// `sum_i lambda_i c_i^2`.
    pub fn v_norm_sq(&self, coeffs: &[f64]) -> f64 {
        coeffs
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| l * c * c)
            .sum()
    }

    /// `sum_i c_i^2 / lambda_i`.
    pub fn vstar_norm_sq(&self, coeffs: &[f64]) -> f64 {
        coeffs
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| c * c / l)
            .sum()
    }
}

/// `lambda_i` and the `i`-th basis field (1-based index).
pub fn eigenpair(i: usize, dom: &Arc<Domain>) -> Result<(f64, SpectralField)> {
    let n = dom.n_modes();
    if i == 0 || i > n {
        return Err(Error::ModeOutOfRange {
            index: i,
            n_modes: n,
        });
    }
    Ok((dom.eigenvalues[i - 1], SpectralField::basis(dom, i)?))
}

/// H, V and V* norms of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub h: f64,
    pub v: f64,
    pub vstar: f64,
}

/// A function in `H_n = span{e_1, .., e_n}` stored by its coefficients.
#[derive(Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<f64>,
    domain: Arc<Domain>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl SpectralField {
    pub fn zeros(domain: &Arc<Domain>) -> Self {
        Self {
            coeffs: vec![0.0; domain.n_modes()],
            domain: Arc::clone(domain),
        }
    }

    pub fn from_coeffs(domain: &Arc<Domain>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != domain.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: domain.n_modes(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            coeffs,
            domain: Arc::clone(domain),
        })
    }

    /// The basis field `e_i` (1-based).
    pub fn basis(domain: &Arc<Domain>, i: usize) -> Result<Self> {
        if i == 0 || i > domain.n_modes() {
            return Err(Error::ModeOutOfRange {
                index: i,
                n_modes: domain.n_modes(),
            });
        }
        let mut f = Self::zeros(domain);
        f.coeffs[i - 1] = 1.0;
        Ok(f)
    }

    /// Galerkin projection of physical samples.
    pub fn from_physical(domain: &Arc<Domain>, samples: &[f64]) -> Result<Self> {
        if samples.len() != domain.n_quad() {
            return Err(Error::DimensionMismatch {
                expected: domain.n_quad(),
                got: samples.len(),
            });
        }
        Ok(Self {
            coeffs: domain.analyze(samples),
            domain: Arc::clone(domain),
        })
    }

    /// Projection `P_n f` of a function given pointwise on `(0, L)`.
    pub fn project_fn<F: Fn(f64) -> f64>(domain: &Arc<Domain>, f: F) -> Self {
        let samples: Vec<f64> = domain.nodes().iter().map(|&x| f(x)).collect();
        Self {
            coeffs: domain.analyze(&samples),
            domain: Arc::clone(domain),
        }
    }

    pub fn to_physical(&self) -> Vec<f64> {
        self.domain.synthesize(&self.coeffs)
    }

    /// Evaluate the truncated sine series at an arbitrary point.
    pub fn eval(&self, x: f64) -> f64 {
        let l = self.domain.length();
        let amp = (2.0 / l).sqrt();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * amp * ((i + 1) as f64 * PI * x / l).sin())
            .sum()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn h_norm(&self) -> f64 {
        self.h_norm_sq().sqrt()
    }

    pub fn h_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn v_norm_sq(&self) -> f64 {
        self.domain.v_norm_sq(&self.coeffs)
    }

    pub fn v_norm(&self) -> f64 {
        self.v_norm_sq().sqrt()
    }

    pub fn vstar_norm_sq(&self) -> f64 {
        self.domain.vstar_norm_sq(&self.coeffs)
    }

    pub fn norms(&self) -> Norms {
        Norms {
            h: self.h_norm(),
            v: self.v_norm(),
            vstar: self.vstar_norm_sq().sqrt(),
        }
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.coeffs.len() != other.coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coeffs.len(),
                got: other.coeffs.len(),
            });
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
            domain: Arc::clone(&self.domain),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
            domain: Arc::clone(&self.domain),
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| s * c).collect(),
            domain: Arc::clone(&self.domain),
        }
    }

    /// Zero-pad or truncate onto another domain with the same length.
    pub fn embed(&self, target: &Arc<Domain>) -> Self {
        let mut coeffs = vec![0.0; target.n_modes()];
        for (o, c) in coeffs.iter_mut().zip(&self.coeffs) {
            *o = *c;
        }
        Self {
            coeffs,
            domain: Arc::clone(target),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dom(l: f64, n: usize, m: usize) -> Arc<Domain> {
        DomainConfig::new(l, n).with_quad(m).build().unwrap()
    }

    #[test]
    fn eigenvalues_match_analytic_values() {
        let d = dom(PI, 4, 9);
        assert!((eigenpair(1, &d).unwrap().0 - 1.0).abs() < 1e-14);
        let d = dom(1.0, 4, 9);
        assert!((eigenpair(1, &d).unwrap().0 - PI * PI).abs() < 1e-12);
        assert!((eigenpair(2, &d).unwrap().0 - 4.0 * PI * PI).abs() < 1e-12);
        let (_, e2) = eigenpair(2, &d).unwrap();
        assert_eq!(e2.coeffs(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn eigenpair_rejects_bad_index() {
        let d = dom(1.0, 4, 9);
        assert!(matches!(
            eigenpair(0, &d),
            Err(Error::ModeOutOfRange { .. })
        ));
        assert!(matches!(
            eigenpair(5, &d),
            Err(Error::ModeOutOfRange { .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(DomainConfig::new(0.0, 4).validate().is_err());
        assert!(DomainConfig::new(1.0, 0).validate().is_err());
        assert!(DomainConfig::new(1.0, 4).with_quad(8).validate().is_err());
        assert!(DomainConfig::new(1.0, 4).with_quad(9).validate().is_ok());
        let d = dom(2.5, 3, 7);
        assert_eq!(d.measure(), 2.5);
    }

    #[test]
    fn synthesis_of_basis_and_zero() {
        let l = 2.0;
        let d = dom(l, 5, 16);
        let e1 = SpectralField::basis(&d, 1).unwrap();
        let phys = e1.to_physical();
        for (x, v) in d.nodes().iter().zip(&phys) {
            let exact = (2.0 / l).sqrt() * (PI * x / l).sin();
            assert!((v - exact).abs() < 1e-14);
        }
        assert!(SpectralField::zeros(&d)
            .to_physical()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn round_trip_matches_direct_sine_sums() {
        let d = dom(1.3, 16, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let coeffs: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = SpectralField::from_coeffs(&d, coeffs.clone()).unwrap();
        let phys = u.to_physical();
        // independent oracle: evaluate the sine series directly
        for (x, v) in d.nodes().iter().zip(&phys) {
            assert!((u.eval(*x) - v).abs() < 1e-12);
        }
        let back = SpectralField::from_physical(&d, &phys).unwrap();
        let scale = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
        for (a, b) in back.coeffs().iter().zip(&coeffs) {
            assert!((a - b).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn norms_on_eigenfunctions() {
        let d = dom(1.0, 4, 9);
        let e1 = SpectralField::basis(&d, 1).unwrap();
        let n = e1.norms();
        assert!((n.h - 1.0).abs() < 1e-15);
        assert!((n.v - PI).abs() < 1e-14);
        assert!((n.vstar - 1.0 / PI).abs() < 1e-15);
        let z = SpectralField::zeros(&d).norms();
        assert_eq!((z.h, z.v, z.vstar), (0.0, 0.0, 0.0));
        let u = SpectralField::basis(&d, 2).unwrap().scale(3.0);
        let n = u.norms();
        assert!((n.h - 3.0).abs() < 1e-15);
        assert!((n.v - 6.0 * PI).abs() < 1e-13);
        assert!((n.vstar - 3.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let d = dom(1.0, 4, 9);
        assert!(SpectralField::from_coeffs(&d, vec![1.0; 3]).is_err());
        assert!(SpectralField::from_physical(&d, &[0.0; 4]).is_err());
    }
}
