use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ldp::target::{PenaltyCost, TargetSet};
use crate::skeleton::{adjoint_gradient, skeleton_terminal, Control, SkeletonConfig};
use crate::spectral::SpectralField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Limited-memory BFGS with Armijo backtracking.
    #[default]
    Lbfgs,
    /// Steepest descent with Armijo backtracking.
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Control pieces `K`.
    pub n_pieces: usize,
    pub n_starts: usize,
    /// Accept a stage once the terminal distance to the target is below this.
    pub feas_tol: f64,
    pub penalty_start: f64,
    pub penalty_factor: f64,
    pub penalty_max: f64,
    /// Iteration cap per penalty stage.
    pub max_iters: usize,
    /// Stop a stage once `|grad| <= grad_tol * max(1, objective)`.
    pub grad_tol: f64,
    pub method: Method,
    pub memory: usize,
    /// Standard deviation of random starting controls.
    pub init_scale: f64,
    pub seed: u64,
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Compare the adjoint gradient with central differences at each start.
    pub fd_check: bool,
    pub fd_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            n_pieces: 32,
            n_starts: 8,
            feas_tol: 1e-4,
            penalty_start: 1.0,
            penalty_factor: 10.0,
            penalty_max: 1e6,
            max_iters: 500,
            grad_tol: 1e-10,
            method: Method::Lbfgs,
            memory: 10,
            init_scale: 1.0,
            seed: 0,
            armijo: 1e-4,
            max_backtracks: 60,
            fd_check: true,
            fd_step: 1e-4,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.n_pieces == 0 || self.n_starts == 0 {
            return bad("n_pieces and n_starts must be positive");
        }
        if !(self.feas_tol > 0.0) {
            return bad("feas_tol must be positive");
        }
        if !(self.penalty_start > 0.0
            && self.penalty_factor > 1.0
            && self.penalty_max >= self.penalty_start)
        {
            return bad("need penalty_start > 0, penalty_factor > 1, penalty_max >= penalty_start");
        }
        if self.memory == 0 || self.max_iters == 0 {
            return bad("memory and max_iters must be positive");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("armijo constant must lie in (0, 1)");
        }
        if !(self.init_scale >= 0.0 && self.fd_step > 0.0 && self.grad_tol >= 0.0) {
            return bad("init_scale, fd_step and grad_tol must be nonnegative");
        }
        Ok(())
    }

    fn weights(&self) -> Vec<f64> {
        let mut w = self.penalty_start;
        let mut out = vec![];
        while w <= self.penalty_max * (1.0 + 1e-12) {
            out.push(w);
            w *= self.penalty_factor;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub weight: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub grad_norms: Vec<f64>,
    /// `1/2 int h^2` at the end of the stage.
    pub cost: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartTrace {
    pub start: usize,
    /// Relative error of the adjoint gradient against central differences.
    pub fd_rel_error: Option<f64>,
    pub stages: Vec<StageTrace>,
    pub feasible: bool,
    pub cost: f64,
    pub gap: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFunctionResult {
    pub h_star: Control,
    /// `1/2 int h_star^2`.
    pub cost: f64,
    /// Coefficients of the controlled terminal state.
    pub terminal: Vec<f64>,
    pub feasibility_gap: f64,
    pub feasible: bool,
    pub best_start: Option<usize>,
    pub trace: Vec<StartTrace>,
}

struct Eval {
    objective: f64,
    grad: Vec<f64>,
    gap: f64,
    cost: f64,
}

struct Problem<'a> {
    u0: &'a SpectralField,
    target: &'a TargetSet,
    cfg: &'a SkeletonConfig,
    horizon: f64,
}

impl Problem<'_> {
    fn control(&self, x: &[f64]) -> Result<Control> {
        Control::new(x.to_vec(), self.horizon)
    }

    fn evaluate(&self, x: &[f64], weight: f64) -> Result<Eval> {
        let h = self.control(x)?;
        let tau = h.piece_len();
        let pen = PenaltyCost {
            target: self.target,
            weight,
        };
        let adj = adjoint_gradient(self.u0, &h, self.cfg, &pen)?;
        let cost = 0.5 * h.energy();
        let grad = adj
            .gradient
            .iter()
            .zip(x)
            .map(|(g, xi)| g + tau * xi)
            .collect();
        Ok(Eval {
            objective: adj.value + cost,
            grad,
            gap: self.target.gap(&adj.terminal),
            cost,
        })
    }

    fn objective(&self, x: &[f64], weight: f64) -> Result<f64> {
        let h = self.control(x)?;
        let u = skeleton_terminal(self.u0, &h, self.cfg)?;
        Ok(weight * self.target.surrogate(&u) + 0.5 * h.energy())
    }

    fn fd_rel_error(&self, x: &[f64], weight: f64, step: f64) -> Result<f64> {
        let adj = self.evaluate(x, weight)?.grad;
        let mut diff = 0.0;
        let mut scale = 0.0;
        let central = |i: usize, h: f64| -> Result<f64> {
            let mut xp = x.to_vec();
            xp[i] += h;
            let mut xm = x.to_vec();
            xm[i] -= h;
            Ok((self.objective(&xp, weight)? - self.objective(&xm, weight)?) / (2.0 * h))
        };
        for (i, a) in adj.iter().enumerate() {
            // Richardson extrapolation removes the O(h^2) term
            let fd = (4.0 * central(i, step / 2.0)? - central(i, step)?) / 3.0;
            diff += (fd - a).powi(2);
            scale += fd * fd;
        }
        Ok(if scale > 0.0 {
            (diff / scale).sqrt()
        } else {
            diff.sqrt()
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimize the penalized objective at fixed weight starting from `x`.
fn minimize_stage(
    prob: &Problem,
    x: &mut Vec<f64>,
    weight: f64,
    opt: &OptimizerConfig,
) -> Result<StageTrace> {
    let mut cur = prob.evaluate(x, weight)?;
    let mut trace = StageTrace {
        weight,
        iterations: 0,
        converged: false,
        objective: vec![cur.objective],
        step_sizes: vec![],
        grad_norms: vec![dot(&cur.grad, &cur.grad).sqrt()],
        cost: cur.cost,
        gap: cur.gap,
    };
    let mut s_hist: Vec<Vec<f64>> = vec![];
    let mut y_hist: Vec<Vec<f64>> = vec![];
    let mut gd_step = 1.0;
    for _ in 0..opt.max_iters {
        let gnorm = dot(&cur.grad, &cur.grad).sqrt();
        if gnorm <= opt.grad_tol * cur.objective.abs().max(1.0) {
            trace.converged = true;
            break;
        }
        let mut dir = match opt.method {
            Method::Lbfgs => two_loop(&cur.grad, &s_hist, &y_hist),
            Method::GradientDescent => cur.grad.iter().map(|g| -g).collect(),
        };
        let mut slope = dot(&dir, &cur.grad);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            dir = cur.grad.iter().map(|g| -g).collect();
            slope = -gnorm * gnorm;
        }
        let mut alpha = match opt.method {
            Method::Lbfgs if s_hist.is_empty() => 1.0 / gnorm.max(1.0),
            Method::Lbfgs => 1.0,
            Method::GradientDescent => gd_step,
        };
        let mut accepted = None;
        for _ in 0..opt.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
            match prob.evaluate(&trial, weight) {
                Ok(e) if e.objective <= cur.objective + opt.armijo * alpha * slope => {
                    accepted = Some((trial, e));
                    break;
                }
                Ok(_) => {}
                Err(err) if err.is_numerical() => {}
                Err(err) => return Err(err),
            }
            alpha *= 0.5;
        }
        let Some((trial, next)) = accepted else {
            // no descent possible at working precision
            trace.converged = true;
            break;
        };
        let s: Vec<f64> = trial.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next
            .grad
            .iter()
            .zip(&cur.grad)
            .map(|(a, b)| a - b)
            .collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > opt.memory {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        gd_step = (2.0 * alpha).min(1e6);
        let decrease = cur.objective - next.objective;
        *x = trial;
        cur = next;
        trace.iterations += 1;
        trace.objective.push(cur.objective);
        trace.step_sizes.push(alpha);
        trace.grad_norms.push(dot(&cur.grad, &cur.grad).sqrt());
        if decrease <= 1e-15 * cur.objective.abs() {
            trace.converged = true;
            break;
        }
    }
    trace.cost = cur.cost;
    trace.gap = cur.gap;
    if !cur.objective.is_finite() {
        return Err(Error::Divergence(format!(
            "objective became {}",
            cur.objective
        )));
    }
    Ok(trace)
}

fn two_loop(grad: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>]) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let m = s_hist.len();
    let mut alphas = vec![0.0; m];
    for i in (0..m).rev() {
        let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
        alphas[i] = rho * dot(&s_hist[i], &q);
        for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
            *qj -= alphas[i] * yj;
        }
    }
    if m > 0 {
        let gamma = dot(&s_hist[m - 1], &y_hist[m - 1]) / dot(&y_hist[m - 1], &y_hist[m - 1]);
        for qj in &mut q {
            *qj *= gamma;
        }
    }
    for i in 0..m {
        let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
        let beta = rho * dot(&y_hist[i], &q);
        for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
            *qj += (alphas[i] - beta) * sj;
        }
    }
    q.iter().map(|v| -v).collect()
}

fn run_start(prob: &Problem, start: usize, opt: &OptimizerConfig) -> (StartTrace, Vec<f64>) {
    let mut x = vec![0.0; opt.n_pieces];
    if start > 0 {
        let mut rng = ChaCha12Rng::seed_from_u64(opt.seed);
        rng.set_stream(start as u64);
        for v in &mut x {
            *v = opt.init_scale * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let mut trace = StartTrace {
        start,
        fd_rel_error: None,
        stages: vec![],
        feasible: false,
        cost: f64::NAN,
        gap: f64::NAN,
        error: None,
    };
    let result = (|| -> Result<()> {
        if opt.fd_check {
            trace.fd_rel_error = Some(prob.fd_rel_error(&x, opt.penalty_start, opt.fd_step)?);
        }
        for w in opt.weights() {
            let stage = minimize_stage(prob, &mut x, w, opt)?;
            trace.cost = stage.cost;
            trace.gap = stage.gap;
            trace.stages.push(stage);
            if trace.gap <= opt.feas_tol {
                trace.feasible = true;
                break;
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        trace.error = Some(e.to_string());
    }
    (trace, x)
}

/// Minimal control energy `1/2 int h^2` steering the skeleton from `u0` into
/// `target` at the horizon, by quadratic-penalty continuation with adjoint
/// gradients and multiple starts.
pub fn rate_function(
    u0: &SpectralField,
    target: &TargetSet,
    cfg: &SkeletonConfig,
    opt: &OptimizerConfig,
) -> Result<RateFunctionResult> {
    opt.validate()?;
    cfg.validate()?;
    target.validate(cfg.domain.n_modes())?;
    let zero = Control::zero(opt.n_pieces, cfg.t_end)?;
    cfg.steps_per_piece(&zero)?;
    let free = skeleton_terminal(u0, &zero, cfg)?;
    if target.contains(&free) {
        return Ok(RateFunctionResult {
            h_star: zero,
            cost: 0.0,
            terminal: free.into_coeffs(),
            feasibility_gap: 0.0,
            feasible: true,
            best_start: None,
            trace: vec![],
        });
    }
    let prob = Problem {
        u0,
        target,
        cfg,
        horizon: cfg.t_end,
    };
    let runs: Vec<(StartTrace, Vec<f64>)> = (0..opt.n_starts)
        .into_par_iter()
        .map(|s| run_start(&prob, s, opt))
        .collect();
    if runs.iter().all(|(t, _)| t.error.is_some()) {
        return Err(Error::Divergence(
            runs[0].0.error.clone().unwrap_or_default(),
        ));
    }
    let ok = runs
        .iter()
        .enumerate()
        .filter(|(_, (t, _))| t.error.is_none());
    let best = ok
        .min_by(|(_, (a, _)), (_, (b, _))| match (a.feasible, b.feasible) {
            (true, false) => std::cmp::Ordering::Less,
            (false, true) => std::cmp::Ordering::Greater,
            (true, true) => a.cost.total_cmp(&b.cost),
            (false, false) => a.gap.total_cmp(&b.gap),
        })
        .map(|(i, _)| i)
        .expect("at least one successful start");
    let h_star = Control::new(runs[best].1.clone(), cfg.t_end)?;
    let terminal = skeleton_terminal(u0, &h_star, cfg)?;
    let trace: Vec<StartTrace> = runs.into_iter().map(|(t, _)| t).collect();
    Ok(RateFunctionResult {
        cost: 0.5 * h_star.energy(),
        feasibility_gap: target.gap(&terminal),
        feasible: trace[best].feasible,
        best_start: Some(best),
        terminal: terminal.into_coeffs(),
        h_star,
        trace,
    })
}
