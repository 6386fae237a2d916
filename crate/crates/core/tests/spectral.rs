use std::f64::consts::PI;
use std::sync::Arc;

use logldp_core::spectral::{
    gronwall_bernoulli, gronwall_loglinear, log_sobolev_plus_sides, log_sobolev_sides, path_metric,
    wbeta2_norm, PhiFunction,
};
use logldp_core::{Domain, DomainConfig, SpectralField, Trajectory};
use proptest::prelude::*;

fn domain(length: f64, n: usize) -> Arc<Domain> {
    DomainConfig::new(length, n).build().unwrap()
}

/// `|d/dx sum c_i e_i|^2` integrated by the trapezoid rule on a fine grid
/// that includes the endpoints.
fn brute_v_norm_sq(c: &[f64], length: f64) -> f64 {
    let m = 8 * c.len() + 1;
    let h = length / m as f64;
    let scale = (2.0 / length).sqrt();
    (0..=m)
        .map(|k| {
            let x = k as f64 * h;
            let d: f64 = c
                .iter()
                .enumerate()
                .map(|(i, ci)| {
                    let w = (i + 1) as f64 * PI / length;
                    ci * scale * w * (w * x).cos()
                })
                .sum();
            let wt = if k == 0 || k == m { 0.5 } else { 1.0 };
            wt * h * d * d
        })
        .sum()
}

fn brute_h_norm_sq(c: &[f64], length: f64) -> f64 {
    let m = 8 * c.len() + 1;
    let h = length / m as f64;
    let scale = (2.0 / length).sqrt();
    (1..m)
        .map(|k| {
            let x = k as f64 * h;
            let u: f64 = c
                .iter()
                .enumerate()
                .map(|(i, ci)| ci * scale * ((i + 1) as f64 * PI * x / length).sin())
                .sum();
            h * u * u
        })
        .sum()
}

fn field_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

#[test]
fn path_metric_of_identical_paths_is_zero() {
    let d = domain(1.0, 6);
    let states: Vec<_> = (0..5)
        .map(|k| SpectralField::basis(&d, 1).unwrap().scale(k as f64))
        .collect();
    let tr = Trajectory::uniform(0.1, states).unwrap();
    assert_eq!(path_metric(&tr, &tr, 0.0, 0.4).unwrap().rho, 0.0);
}

#[test]
fn path_metric_of_constant_shift() {
    let d = domain(1.0, 4);
    let c = 0.7;
    let t_end = 0.5;
    let u0 = SpectralField::from_coeffs(&d, vec![0.2, -0.1, 0.3, 0.05]).unwrap();
    let shifted = u0
        .add(&SpectralField::basis(&d, 1).unwrap().scale(c))
        .unwrap();
    let u = Trajectory::uniform(0.05, vec![u0; 11]).unwrap();
    let v = Trajectory::uniform(0.05, vec![shifted; 11]).unwrap();
    let r = path_metric(&u, &v, 0.0, t_end).unwrap();
    let expected = c * c + PI * PI * c * c * t_end;
    assert!((r.rho * r.rho - expected).abs() < 1e-12 * expected);
}

#[test]
fn path_metric_matches_physical_space_recomputation() {
    let d = domain(1.3, 8);
    let dt = 0.02;
    let n_t = 26;
    let mk = |phase: f64| {
        let states = (0..n_t)
            .map(|k| {
                let t = k as f64 * dt;
                let c = (1..=8)
                    .map(|i| ((i as f64) * (t + phase)).sin() / i as f64)
                    .collect();
                SpectralField::from_coeffs(&d, c).unwrap()
            })
            .collect();
        Trajectory::uniform(dt, states).unwrap()
    };
    let (u, v) = (mk(0.0), mk(0.4));
    let r = path_metric(&u, &v, 0.0, dt * (n_t - 1) as f64).unwrap();

    let mut sup: f64 = 0.0;
    let mut vals = Vec::new();
    for (a, b) in u.states().iter().zip(v.states()) {
        let diff: Vec<f64> = a
            .coeffs()
            .iter()
            .zip(b.coeffs())
            .map(|(x, y)| x - y)
            .collect();
        sup = sup.max(brute_h_norm_sq(&diff, 1.3));
        vals.push(brute_v_norm_sq(&diff, 1.3));
    }
    let int_v: f64 = (0..n_t - 1)
        .map(|k| 0.5 * dt * (vals[k] + vals[k + 1]))
        .sum();
    let rho = (sup + int_v).sqrt();
    assert!((r.rho - rho).abs() < 1e-10 * rho, "{} vs {rho}", r.rho);
}

#[test]
fn wbeta2_of_constant_and_zero_paths() {
    let d = domain(1.0, 4);
    let u0 = SpectralField::from_coeffs(&d, vec![1.0, 0.5, -0.2, 0.1]).unwrap();
    let t_end = 0.6;
    let tr = Trajectory::uniform(0.05, vec![u0.clone(); 13]).unwrap();
    let w = wbeta2_norm(&tr, 0.25).unwrap();
    let expected = t_end * u0.vstar_norm_sq();
    assert!((w * w - expected).abs() < 1e-12 * expected);
    let zero = Trajectory::uniform(0.05, vec![SpectralField::zeros(&d); 13]).unwrap();
    assert_eq!(wbeta2_norm(&zero, 0.25).unwrap(), 0.0);
    assert!(wbeta2_norm(&zero, 0.5).is_err());
}

/// Off-diagonal double sum written out directly.
fn brute_wbeta2_sq(dir: &SpectralField, t_end: f64, n: usize, beta: f64) -> f64 {
    let dt = t_end / n as f64;
    let w = |i: usize| if i == 0 || i == n { 0.5 * dt } else { dt };
    let v = dir.vstar_norm_sq();
    let mut single = 0.0;
    let mut double = 0.0;
    for i in 0..=n {
        let ti = i as f64 * dt;
        single += w(i) * ti * ti * v;
        for j in 0..=n {
            if i != j {
                let tj = j as f64 * dt;
                let gap = (ti - tj).abs();
                double += w(i) * w(j) * gap * gap * v / gap.powf(1.0 + 2.0 * beta);
            }
        }
    }
    single + double
}

#[test]
fn wbeta2_of_linear_path_against_refined_double_sum() {
    let d = domain(1.0, 3);
    let dir = SpectralField::from_coeffs(&d, vec![1.0, -0.5, 0.25]).unwrap();
    let (t_end, n, beta) = (1.0, 40, 0.3);
    let states = (0..=n).map(|k| dir.scale(k as f64 / n as f64)).collect();
    let tr = Trajectory::uniform(t_end / n as f64, states).unwrap();
    let w = wbeta2_norm(&tr, beta).unwrap();
    let fine = brute_wbeta2_sq(&dir, t_end, 2 * n, beta).sqrt();
    assert!((w - fine).abs() < 0.05 * fine, "{w} vs {fine}");
}

/// Classical RK4 for a scalar ODE.
fn rk4(f: impl Fn(f64, f64) -> f64, y0: f64, t0: f64, t1: f64, steps: usize) -> f64 {
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let k1 = f(t, y);
        let k2 = f(t + h / 2.0, y + h * k1 / 2.0);
        let k3 = f(t + h / 2.0, y + h * k2 / 2.0);
        let k4 = f(t + h, y + h * k3);
        y += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    }
    y
}

#[test]
fn bernoulli_bound_dominates_extremal_solution() {
    let a = |s: f64| 0.5 + 0.3 * (2.0 * s).sin();
    let b = |s: f64| 1.0 + s;
    for &alpha in &[0.0, 0.3, 0.7] {
        let c = 1.5;
        let y = rk4(|t, y| a(t) * y + b(t) * y.powf(alpha), c, 0.0, 1.0, 4000);
        let bound = gronwall_bernoulli(c, alpha, &a, &b, 0.0, 1.0).unwrap();
        assert!((bound - y) / y >= -1e-6, "alpha {alpha}: {bound} < {y}");
        assert!((bound - y).abs() < 1e-6 * y);
    }
}

#[test]
fn loglinear_bound_dominates_extremal_solution() {
    let c1 = |s: f64| 1.0 + 0.5 * s;
    let c2 = |s: f64| 0.4 + 0.2 * (3.0 * s).cos();
    let m0 = 2.5;
    let x = rk4(|t, x| c1(t) * x + c2(t) * x * x.ln(), m0, 0.0, 1.0, 4000);
    let bound = gronwall_loglinear(&|_| m0, &c1, &c2, 1.0).unwrap();
    assert!((bound - x).abs() < 1e-6 * x, "{bound} vs {x}");
}

#[test]
fn phi_derivative_is_consistent() {
    let phi = PhiFunction::new();
    for &z in &[0.1, 1.0, 2.5, 10.0, 200.0] {
        let h = 1e-5 * z;
        let fd = (phi.phi(z + h).unwrap() - phi.phi(z - h).unwrap()) / (2.0 * h);
        let exact = phi.phi_prime(z).unwrap();
        assert!(
            (fd - exact).abs() < 1e-6 * exact,
            "z = {z}: {fd} vs {exact}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_is_exact(c in field_strategy(12)) {
        let d = domain(2.0, 12);
        let u = SpectralField::from_coeffs(&d, c.clone()).unwrap();
        let back = SpectralField::from_physical(&d, &u.to_physical()).unwrap();
        for (a, b) in back.coeffs().iter().zip(&c) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval_against_physical_quadrature(c in field_strategy(10), length in 0.5f64..4.0) {
        let d = domain(length, 10);
        let u = SpectralField::from_coeffs(&d, c.clone()).unwrap();
        let brute = brute_h_norm_sq(&c, length);
        prop_assert!((u.h_norm_sq() - brute).abs() < 1e-10 * (1.0 + brute));
        let nodal: f64 = u.to_physical().iter().map(|x| x * x).sum::<f64>() * d.weight();
        prop_assert!((u.h_norm_sq() - nodal).abs() < 1e-10 * (1.0 + nodal));
    }

    #[test]
    fn poincare_inequalities(c in field_strategy(16), length in 0.5f64..4.0) {
        let d = domain(length, 16);
        let u = SpectralField::from_coeffs(&d, c).unwrap();
        let lam1 = d.eigenvalues()[0];
        prop_assert!(u.v_norm_sq() >= lam1 * u.h_norm_sq() * (1.0 - 1e-14));
        prop_assert!(u.vstar_norm_sq() <= u.h_norm_sq() / lam1 * (1.0 + 1e-14));
    }

    #[test]
    fn log_sobolev_holds_on_random_fields(
        c in field_strategy(16),
        amp in -2.0f64..2.0,
        eps in 1e-3f64..1.0,
    ) {
        let d = DomainConfig::new(1.0, 16).with_quad(64).build().unwrap();
        let u = SpectralField::from_coeffs(&d, c).unwrap().scale(10f64.powf(amp));
        prop_assume!(!u.is_zero());
        prop_assert!(log_sobolev_sides(&u, eps).unwrap().relative_gap() >= -1e-8);
        prop_assert!(log_sobolev_plus_sides(&u, eps).unwrap().relative_gap() >= -1e-8);
    }

    #[test]
    fn phi_is_increasing(a in 0.0f64..50.0, da in 1e-3f64..50.0) {
        let phi = PhiFunction::new();
        prop_assert!(phi.phi(a + da).unwrap() > phi.phi(a).unwrap());
    }
}
