use std::f64::consts::E;

use crate::error::{Error, Result};
use crate::quadrature::AdaptiveSimpson;

/// The Lyapunov transform `Phi(z) = exp(int_0^z dx / (1 + x + x rho(x)))`
/// with `rho(x) = x / e` below `e` and `log x` above.
///
/// `log Phi` is cached on a grid (uniform below the kink at `e`, geometric
/// above it); evaluation integrates from the nearest cached node.
#[derive(Debug, Clone)]
pub struct PhiFunction {
    quad: AdaptiveSimpson,
    nodes: Vec<f64>,
    log_phi_nodes: Vec<f64>,
}

const UNIFORM_CELLS: usize = 16;
const GEOMETRIC_RATIO: f64 = 1.1;
const LAST_NODE: f64 = 1e15;

impl Default for PhiFunction {
    fn default() -> Self {
        Self::new()
    }
}

impl PhiFunction {
    /// Threshold where `rho` switches branch; both branches equal 1 there.
    pub const RHO_SWITCH: f64 = E;

    pub fn new() -> Self {
        Self::with_quadrature(AdaptiveSimpson::new(1e-14))
    }

    pub fn with_quadrature(quad: AdaptiveSimpson) -> Self {
        let mut nodes: Vec<f64> = (0..=UNIFORM_CELLS)
            .map(|k| Self::RHO_SWITCH * k as f64 / UNIFORM_CELLS as f64)
            .collect();
        let mut x = Self::RHO_SWITCH;
        while x < LAST_NODE {
            x *= GEOMETRIC_RATIO;
            nodes.push(x);
        }
        let mut log_phi_nodes = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        log_phi_nodes.push(acc);
        for w in nodes.windows(2) {
            acc += quad.integrate(&integrand, w[0], w[1]);
            log_phi_nodes.push(acc);
        }
        Self {
            quad,
            nodes,
            log_phi_nodes,
        }
    }

    pub fn rho(x: f64) -> f64 {
        if x >= Self::RHO_SWITCH {
            x.ln()
        } else {
            x / E
        }
    }

    /// `log Phi(z)`.
    pub fn log_phi(&self, z: f64) -> Result<f64> {
        check(z)?;
        let k = self.nodes.partition_point(|&x| x <= z) - 1;
        Ok(self.log_phi_nodes[k] + self.quad.integrate(&integrand, self.nodes[k], z))
    }

    pub fn phi(&self, z: f64) -> Result<f64> {
        Ok(self.log_phi(z)?.exp())
    }

    /// `Phi'(z) = Phi(z) / (1 + z + z rho(z))`.
    pub fn phi_prime(&self, z: f64) -> Result<f64> {
        Ok(self.phi(z)? * integrand(z))
    }
}

fn check(z: f64) -> Result<()> {
    if z.is_nan() || z < 0.0 {
        return Err(Error::Domain(format!("Phi is defined on z >= 0, got {z}")));
    }
    Ok(())
}

fn integrand(x: f64) -> f64 {
    1.0 / (1.0 + x + x * PhiFunction::rho(x))
}
