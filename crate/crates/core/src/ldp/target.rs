use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::TerminalCost;
use crate::spectral::SpectralField;

/// Terminal target sets, with distances measured in the H-norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSet {
    /// `{u : |u| >= r}`.
    NormAbove { r: f64 },
    /// `{u : <g, u> >= c}`.
    Halfspace { g: Vec<f64>, c: f64 },
    /// `{u : |u - center| <= r}`.
    Ball { center: Vec<f64>, r: f64 },
    /// Every state.
    Everything,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl TargetSet {
    pub fn validate(&self, n_modes: usize) -> Result<()> {
        let check_len = |v: &[f64]| {
            if v.len() != n_modes {
                Err(Error::DimensionMismatch {
                    expected: n_modes,
                    got: v.len(),
                })
            } else if v.iter().any(|x| !x.is_finite()) {
                Err(Error::InvalidConfig("target vector must be finite".into()))
            } else {
                Ok(())
            }
        };
        match self {
            TargetSet::NormAbove { r } | TargetSet::Ball { r, .. } if !(*r >= 0.0) => Err(
                Error::InvalidConfig(format!("target radius must be nonnegative, got {r}")),
            ),
            TargetSet::NormAbove { .. } | TargetSet::Everything => Ok(()),
            TargetSet::Halfspace { g, c } => {
                check_len(g)?;
                if norm(g) == 0.0 || !c.is_finite() {
                    return Err(Error::InvalidConfig(
                        "halfspace needs a nonzero normal and finite offset".into(),
                    ));
                }
                Ok(())
            }
            TargetSet::Ball { center, .. } => check_len(center),
        }
    }

    /// Distance from `u` to the set (zero inside).
    pub fn gap(&self, u: &SpectralField) -> f64 {
        let c = u.coeffs();
        match self {
            TargetSet::NormAbove { r } => (r - norm(c)).max(0.0),
            TargetSet::Halfspace { g, c: off } => ((off - dot(g, c)) / norm(g)).max(0.0),
            TargetSet::Ball { center, r } => {
                let d: Vec<f64> = c.iter().zip(center).map(|(a, b)| a - b).collect();
                (norm(&d) - r).max(0.0)
            }
            TargetSet::Everything => 0.0,
        }
    }

    pub fn contains(&self, u: &SpectralField) -> bool {
        self.gap(u) == 0.0
    }

    /// Squared distance to the set.
    pub fn surrogate(&self, u: &SpectralField) -> f64 {
        self.gap(u).powi(2)
    }

    /// Gradient of [`TargetSet::surrogate`] in the coefficients.
    pub fn surrogate_gradient(&self, u: &SpectralField) -> Vec<f64> {
        let c = u.coeffs();
        let gap = self.gap(u);
        let mut out = vec![0.0; c.len()];
        if gap == 0.0 {
            return out;
        }
        match self {
            TargetSet::NormAbove { .. } => {
                let n = norm(c);
                if n == 0.0 {
                    // any unit direction is a subgradient at the origin
                    out[0] = -2.0 * gap;
                } else {
                    for (o, x) in out.iter_mut().zip(c) {
                        *o = -2.0 * gap * x / n;
                    }
                }
            }
            TargetSet::Halfspace { g, .. } => {
                let n = norm(g);
                for (o, x) in out.iter_mut().zip(g) {
                    *o = -2.0 * gap * x / n;
                }
            }
            TargetSet::Ball { center, .. } => {
                let d: Vec<f64> = c.iter().zip(center).map(|(a, b)| a - b).collect();
                let n = norm(&d);
                for (o, x) in out.iter_mut().zip(&d) {
                    *o = 2.0 * gap * x / n;
                }
            }
            TargetSet::Everything => {}
        }
        out
    }
}

/// `weight * dist(u, target)^2` as a terminal cost.
pub struct PenaltyCost<'a> {
    pub target: &'a TargetSet,
    pub weight: f64,
}

impl TerminalCost for PenaltyCost<'_> {
    fn value(&self, u: &SpectralField) -> f64 {
        self.weight * self.target.surrogate(u)
    }

    fn gradient(&self, u: &SpectralField) -> Vec<f64> {
        let mut g = self.target.surrogate_gradient(u);
        for v in &mut g {
            *v *= self.weight;
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DomainConfig;

    #[test]
    fn gaps_and_membership() {
        let d = DomainConfig::new(1.0, 3).build().unwrap();
        let u = SpectralField::from_coeffs(&d, vec![3.0, 4.0, 0.0]).unwrap();
        assert_eq!(TargetSet::NormAbove { r: 6.0 }.gap(&u), 1.0);
        assert!(TargetSet::NormAbove { r: 5.0 }.contains(&u));
        let hs = TargetSet::Halfspace {
            g: vec![2.0, 0.0, 0.0],
            c: 10.0,
        };
        assert_eq!(hs.gap(&u), 2.0);
        let ball = TargetSet::Ball {
            center: vec![0.0, 0.0, 0.0],
            r: 1.0,
        };
        assert_eq!(ball.gap(&u), 4.0);
        assert!(TargetSet::Everything.contains(&u));
        assert!(hs.validate(3).is_ok());
        assert!(hs.validate(2).is_err());
        assert!(TargetSet::NormAbove { r: -1.0 }.validate(3).is_err());
    }

    #[test]
    fn surrogate_gradients_match_differences() {
        let d = DomainConfig::new(1.0, 3).build().unwrap();
        let u = SpectralField::from_coeffs(&d, vec![0.3, -0.2, 0.1]).unwrap();
        let targets = [
            TargetSet::NormAbove { r: 2.0 },
            TargetSet::Halfspace {
                g: vec![1.0, 1.0, -0.5],
                c: 1.0,
            },
            TargetSet::Ball {
                center: vec![2.0, 1.0, 0.0],
                r: 0.5,
            },
        ];
        for t in &targets {
            let g = t.surrogate_gradient(&u);
            for (i, gi) in g.iter().enumerate() {
                let mut up = u.clone();
                up.coeffs_mut()[i] += 1e-6;
                let mut um = u.clone();
                um.coeffs_mut()[i] -= 1e-6;
                let fd = (t.surrogate(&up) - t.surrogate(&um)) / 2e-6;
                assert!((fd - gi).abs() < 1e-8, "{t:?} {i}: {fd} vs {gi}");
            }
        }
    }
}
