//! Adaptive Simpson quadrature on scalar functions.

/// Adaptive Simpson integrator with an absolute/relative tolerance mix.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveSimpson {
    pub tol: f64,
    pub max_depth: u32,
}

impl Default for AdaptiveSimpson {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_depth: 48,
        }
    }
}

impl AdaptiveSimpson {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn integrate<F: Fn(f64) -> f64 + ?Sized>(&self, f: &F, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let m = 0.5 * (lo + hi);
        let (fa, fm, fb) = (f(lo), f(m), f(hi));
        let whole = simpson(lo, hi, fa, fm, fb);
        sign * self.recurse(f, lo, hi, fa, fm, fb, whole, self.tol, self.max_depth)
    }

    /// Integrate over `[a, b]`, splitting at every breakpoint strictly inside.
    pub fn integrate_with_breaks<F: Fn(f64) -> f64 + ?Sized>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        breaks: &[f64],
    ) -> f64 {
        let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
        let mut knots: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|&x| x > lo && x < hi)
            .collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let mut total = 0.0;
        let mut left = lo;
        for k in knots.into_iter().chain(std::iter::once(hi)) {
            total += self.integrate(f, left, k);
            left = k;
        }
        sign * total
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64 + ?Sized>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let delta = left + right - whole;
        let scale = tol.max(tol * (left + right).abs());
        if depth == 0 || delta.abs() <= 15.0 * scale {
            return left + right + delta / 15.0;
        }
        self.recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + self.recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Composite trapezoid weights for a (possibly nonuniform) grid.
pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let h = times[i] - times[i - 1];
        w[i - 1] += 0.5 * h;
        w[i] += 0.5 * h;
    }
    w
}

/// Trapezoid rule of sampled values on a grid.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    trapezoid_weights(times)
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum()
}
