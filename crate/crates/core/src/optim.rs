//! First-order (Adam) and quasi-Newton (L-BFGS) minimizers over flat parameter
//! vectors. Both are deliberately free of any model knowledge: they see a
//! parameter slice and a (loss, gradient) oracle and nothing else.

use std::collections::VecDeque;

/// Adam with bias correction and a staircase learning-rate schedule:
/// lr(t) = lr0 * decay_rate^floor(t / decay_step), optionally clamped below.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub decay_rate: f64,
    pub decay_step: usize,
    pub lr_floor: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decay_rate: 1.0,
            decay_step: 1000,
            lr_floor: None,
        }
    }
}

pub struct AdamState {
    cfg: AdamConfig,
    step: usize,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(cfg: AdamConfig, n: usize) -> Self {
        AdamState { cfg, step: 0, m: vec![0.0; n], v: vec![0.0; n] }
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// Learning rate the next step will use.
    pub fn effective_lr(&self) -> f64 {
        let mut lr = self.cfg.lr;
        if self.cfg.decay_rate != 1.0 && self.cfg.decay_step > 0 {
            lr *= self.cfg.decay_rate.powi((self.step / self.cfg.decay_step) as i32);
        }
        if let Some(floor) = self.cfg.lr_floor {
            lr = lr.max(floor);
        }
        lr
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        let lr = self.effective_lr();
        self.step += 1;
        let t = self.step as i32;
        let b1 = self.cfg.beta1;
        let b2 = self.cfg.beta2;
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
            let mhat = self.m[i] / c1;
            let vhat = self.v[i] / c2;
            params[i] -= lr * mhat / (vhat.sqrt() + self.cfg.eps);
        }
    }
}

#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct LbfgsConfig {
    pub history: usize,
    pub c1: f64,
    pub c2: f64,
    pub max_line_evals: usize,
    pub grad_tol: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig { history: 10, c1: 1e-4, c2: 0.9, max_line_evals: 20, grad_tol: 1e-10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIter,
    GradTol,
    LineSearchFailed,
}

#[derive(Clone, Debug)]
pub struct LbfgsReport {
    pub iterations: usize,
    pub evals: usize,
    pub final_loss: f64,
    pub grad_norm: f64,
    pub stop: StopReason,
    pub loss_history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct LineResult {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    evals: usize,
    ok: bool,
}

/// One probe of the line function: loss, gradient, and directional derivative
/// at x + a dir.
fn probe<E>(
    x: &[f64],
    dir: &[f64],
    a: f64,
    eval: &mut E,
    evals: &mut usize,
) -> (f64, Vec<f64>, f64)
where
    E: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let xa: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + a * di).collect();
    let (fa, ga) = eval(&xa);
    *evals += 1;
    let da = dot(&ga, dir);
    (fa, ga, da)
}

fn armijo_holds(cfg: &LbfgsConfig, f0: f64, dphi0: f64, a: f64, fa: f64) -> bool {
    fa.is_finite() && fa <= f0 + cfg.c1 * a * dphi0
}

/// Bisection zoom between a point satisfying Armijo (lo) and one that fails it
/// or lies past the minimum (hi).
#[allow(clippy::too_many_arguments)]
fn zoom<E>(
    cfg: &LbfgsConfig,
    x: &[f64],
    f0: f64,
    dphi0: f64,
    dir: &[f64],
    mut lo: f64,
    mut f_lo: f64,
    mut hi: f64,
    eval: &mut E,
    evals: &mut usize,
) -> Option<(f64, f64, Vec<f64>)>
where
    E: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    for _ in 0..cfg.max_line_evals {
        let a = 0.5 * (lo + hi);
        let (fa, ga, da) = probe(x, dir, a, eval, evals);
        if !armijo_holds(cfg, f0, dphi0, a, fa) || fa >= f_lo {
            hi = a;
        } else {
            if da.abs() <= -cfg.c2 * dphi0 {
                return Some((a, fa, ga));
            }
            if da * (hi - lo) >= 0.0 {
                hi = lo;
            }
            lo = a;
            f_lo = fa;
        }
        if (hi - lo).abs() < 1e-16 {
            break;
        }
    }
    None
}

/// Strong Wolfe search along `dir` (bracket then bisection zoom). Non-finite
/// trial values count as sufficient-decrease failures, which shrinks the step.
fn wolfe_search<E>(
    cfg: &LbfgsConfig,
    x: &[f64],
    f0: f64,
    dphi0: f64,
    dir: &[f64],
    eval: &mut E,
) -> LineResult
where
    E: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut evals = 0;
    let mut a_prev = 0.0;
    let mut f_prev = f0;
    let mut a = 1.0;
    for i in 0..cfg.max_line_evals {
        let (fa, ga, da) = probe(x, dir, a, eval, &mut evals);
        if !armijo_holds(cfg, f0, dphi0, a, fa) || (i > 0 && fa >= f_prev) {
            match zoom(cfg, x, f0, dphi0, dir, a_prev, f_prev, a, eval, &mut evals) {
                Some((az, fz, gz)) => {
                    return LineResult { alpha: az, f: fz, g: gz, evals, ok: true }
                }
                None => break,
            }
        }
        if da.abs() <= -cfg.c2 * dphi0 {
            return LineResult { alpha: a, f: fa, g: ga, evals, ok: true };
        }
        if da >= 0.0 {
            match zoom(cfg, x, f0, dphi0, dir, a, fa, a_prev, eval, &mut evals) {
                Some((az, fz, gz)) => {
                    return LineResult { alpha: az, f: fz, g: gz, evals, ok: true }
                }
                None => break,
            }
        }
        a_prev = a;
        f_prev = fa;
        a = (2.0 * a).min(1e3);
    }
    LineResult { alpha: 0.0, f: f0, g: Vec::new(), evals, ok: false }
}

/// Two-loop L-BFGS. `post_step` may project the accepted iterate (parameter
/// clamps); returning true signals a change and forces a re-evaluation so the
/// curvature pair matches the stored point. `on_iter` sees every accepted
/// iterate.
pub fn lbfgs_minimize<E, P, C>(
    cfg: &LbfgsConfig,
    params: &mut Vec<f64>,
    max_iter: usize,
    mut eval: E,
    mut post_step: P,
    mut on_iter: C,
) -> LbfgsReport
where
    E: FnMut(&[f64]) -> (f64, Vec<f64>),
    P: FnMut(&mut [f64]) -> bool,
    C: FnMut(usize, f64, &[f64]),
{
    let n = params.len();
    let (mut f, mut g) = eval(params);
    let mut evals = 1;
    let mut loss_history = vec![f];

    let mut s_hist: VecDeque<Vec<f64>> = VecDeque::new();
    let mut y_hist: VecDeque<Vec<f64>> = VecDeque::new();
    let mut rho_hist: VecDeque<f64> = VecDeque::new();

    let mut stop = StopReason::MaxIter;
    let mut iterations = 0;

    for iter in 0..max_iter {
        if norm(&g) < cfg.grad_tol {
            stop = StopReason::GradTol;
            break;
        }

        // Two-loop recursion for the search direction.
        let mut q = g.clone();
        let k = s_hist.len();
        let mut alphas = vec![0.0; k];
        for j in (0..k).rev() {
            let a = rho_hist[j] * dot(&s_hist[j], &q);
            alphas[j] = a;
            for (qi, yi) in q.iter_mut().zip(&y_hist[j]) {
                *qi -= a * yi;
            }
        }
        if k > 0 {
            let gamma = dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1]);
            for qi in &mut q {
                *qi *= gamma;
            }
        }
        for j in 0..k {
            let beta = rho_hist[j] * dot(&y_hist[j], &q);
            for (qi, si) in q.iter_mut().zip(&s_hist[j]) {
                *qi += (alphas[j] - beta) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut dphi0 = dot(&dir, &g);
        if dphi0 >= 0.0 {
            // Stale curvature produced an ascent direction; fall back to
            // steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = g.iter().map(|v| -v).collect();
            dphi0 = -dot(&g, &g);
            if dphi0 >= 0.0 {
                stop = StopReason::GradTol;
                break;
            }
        }

        let line = wolfe_search(cfg, params, f, dphi0, &dir, &mut eval);
        evals += line.evals;
        if !line.ok {
            stop = StopReason::LineSearchFailed;
            break;
        }

        let mut x_new: Vec<f64> =
            params.iter().zip(&dir).map(|(xi, di)| xi + line.alpha * di).collect();
        let mut f_new = line.f;
        let mut g_new = line.g;
        if post_step(&mut x_new) {
            let (fr, gr) = eval(&x_new);
            evals += 1;
            f_new = fr;
            g_new = gr;
        }

        let s: Vec<f64> = x_new.iter().zip(params.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 0.0 {
            if s_hist.len() == cfg.history {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
        }

        params.copy_from_slice(&x_new);
        f = f_new;
        g = g_new;
        iterations = iter + 1;
        loss_history.push(f);
        on_iter(iterations, f, params);
    }

    debug_assert_eq!(params.len(), n);
    LbfgsReport { iterations, evals, final_loss: f, grad_norm: norm(&g), stop, loss_history }
}
