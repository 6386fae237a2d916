use std::sync::Arc;

use logldp_core::coefficients::{b_pairing_sides, logplus_pairing_sides};
use logldp_core::spectral::{log_sobolev_plus_sides, log_sobolev_sides, Sides};
use logldp_core::stats::median;
use logldp_core::{Domain, SpectralField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::Outcome;
use crate::config::{InequalitySection, Resolved};
use crate::error::CliError;
use crate::manifest::{Contract, OutputDir};

/// Random field with `c_i = A z_i / i^decay`, `z_i` standard normal and
/// `log10 A` uniform on the configured range.
pub fn random_field(
    dom: &Arc<Domain>,
    rng: &mut ChaCha12Rng,
    spec: &InequalitySection,
) -> SpectralField {
    let (lo, hi) = spec.log10_amplitude;
    let amp = 10f64.powf(lo + (hi - lo) * rng.random::<f64>());
    let coeffs = (1..=dom.n_modes())
        .map(|i| {
            let z: f64 = rng.sample(StandardNormal);
            amp * z / (i as f64).powf(spec.decay)
        })
        .collect();
    SpectralField::from_coeffs(dom, coeffs).expect("length matches the domain")
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityRow {
    pub inequality: String,
    pub eps: f64,
    pub alpha: Option<f64>,
    pub n_fields: usize,
    /// Smallest `rhs - lhs`.
    pub min_gap: f64,
    /// Smallest `(rhs - lhs) / (1 + |rhs|)`.
    pub min_rel_gap: f64,
    pub median_rel_gap: f64,
    pub n_below_tol: usize,
}

/// Evaluation cells in a fixed order: both log-Sobolev forms per `eps`, then
/// both pairings per `(eps, alpha)`.
fn cells(spec: &InequalitySection) -> Vec<(&'static str, f64, Option<f64>)> {
    let mut out = Vec::new();
    for &e in &spec.eps {
        out.push(("log_sobolev", e, None));
        out.push(("log_sobolev_plus", e, None));
    }
    for &e in &spec.eps {
        for &a in &spec.alpha {
            out.push(("b_pairing", e, Some(a)));
            out.push(("logplus_pairing", e, Some(a)));
        }
    }
    out
}

fn evaluate(
    name: &str,
    eps: f64,
    alpha: Option<f64>,
    u: &SpectralField,
    v: &SpectralField,
) -> logldp_core::Result<Sides> {
    match (name, alpha) {
        ("log_sobolev", _) => log_sobolev_sides(u, eps),
        ("log_sobolev_plus", _) => log_sobolev_plus_sides(u, eps),
        ("b_pairing", Some(a)) => b_pairing_sides(u, v, eps, a),
        ("logplus_pairing", Some(a)) => logplus_pairing_sides(u, v, eps, a),
        _ => unreachable!("unknown inequality cell {name}"),
    }
}

/// Both sides of every inequality on `n_fields` random fields (pairs for the
/// pairing estimates). Field `k` draws from stream `k` of the run seed.
pub(super) fn verify(res: &Resolved, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let spec = &res.config.inequalities;
    let dom = &res.domain;
    let cells = cells(spec);
    let per_field: Vec<Vec<Sides>> = (0..spec.n_fields as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha12Rng::seed_from_u64(res.seed);
            rng.set_stream(k);
            let u = random_field(dom, &mut rng, spec);
            let v = random_field(dom, &mut rng, spec);
            cells
                .iter()
                .map(|&(name, e, a)| evaluate(name, e, a, &u, &v))
                .collect::<logldp_core::Result<Vec<_>>>()
        })
        .collect::<logldp_core::Result<_>>()?;

    let tol = spec.tolerance;
    let rows: Vec<InequalityRow> = cells
        .iter()
        .enumerate()
        .map(|(c, &(name, eps, alpha))| {
            let gaps: Vec<f64> = per_field.iter().map(|f| f[c].gap()).collect();
            let rel: Vec<f64> = per_field.iter().map(|f| f[c].relative_gap()).collect();
            InequalityRow {
                inequality: name.into(),
                eps,
                alpha,
                n_fields: spec.n_fields,
                min_gap: gaps.iter().cloned().fold(f64::INFINITY, f64::min),
                min_rel_gap: rel.iter().cloned().fold(f64::INFINITY, f64::min),
                median_rel_gap: median(&rel),
                n_below_tol: rel.iter().filter(|&&r| !(r >= -tol)).count(),
            }
        })
        .collect();
    out.write_csv("inequalities.csv", &rows)?;
    let worst = rows
        .iter()
        .map(|r| r.min_rel_gap)
        .fold(f64::INFINITY, f64::min);
    let violations: usize = rows.iter().map(|r| r.n_below_tol).sum();
    Ok(Outcome {
        contracts: vec![Contract::new(
            "all_gaps_nonnegative",
            violations == 0,
            format!("smallest relative gap {worst:e} against -{tol:e}"),
        )],
        summary: json!({
            "evaluations": rows.len() * spec.n_fields,
            "min_rel_gap": worst,
            "violations": violations,
        }),
        failure: None,
    })
}
