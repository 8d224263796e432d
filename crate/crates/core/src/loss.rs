//! Composite training objective.
//!
//! Every term is a mean of squared linear functionals of the raw network jet.
//! For each fixed point the constraint pullback and the source are folded into
//! a coefficient triple and a constant once, up front:
//!
//!   r_p = alpha_p . jet(x_p) + const_p
//!
//! so the per-iteration work is one jet evaluation and one adjoint accumulation
//! per point, with no constraint or problem logic left in the loop. Points of a
//! term are processed in fixed-size chunks whose partial sums are combined in
//! chunk order, which keeps results bit-identical for any thread count.
//!
//! A problem's optional affine input map is folded in the same way: stored
//! points move to the network's frame and the first and second order
//! coefficients pick up the Jacobian factors, once, at construction.

use rayon::prelude::*;

use crate::constraints::{adjoint_with_field_jet, AnalyticField};
use crate::network::{CauchyNet, Jet, JetCoeffs, NetJet};
use crate::problems::{Constraint, LossWeights, PdeProblem};
use crate::sampling::{PointSet, Role};
use crate::{Error, Result};

const CHUNK: usize = 512;

/// Unweighted per-term means plus the weighted total.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub term_f: f64,
    pub term_b: f64,
    pub term_i: f64,
    pub weights: LossWeights,
    pub n_f: usize,
    pub n_b: usize,
    pub n_i: usize,
}

/// Fixed point sets for one training run; no resampling happens after this.
#[derive(Clone, Debug)]
pub struct TrainData {
    pub interior: PointSet,
    pub boundary: Option<PointSet>,
    pub initial: Option<PointSet>,
}

struct TermPlan {
    points: PointSet,
    alpha: Vec<JetCoeffs>,
    consts: Vec<f64>,
    lambda: f64,
}

impl TermPlan {
    /// Rewrite the stored points into the network's input frame and fold the
    /// chain-rule factors into the jet coefficients. The constant part is
    /// already baked in from physical coordinates, so after this the hot loop
    /// runs exactly as it does for an unscaled problem.
    fn apply_input_map(&mut self, map: &[(f64, f64)]) {
        let dim = self.points.dim;
        assert_eq!(map.len(), dim, "input map length mismatch");
        for p in 0..self.points.n {
            for (j, &(shift, scale)) in map.iter().enumerate() {
                let v = &mut self.points.data[p * dim + j];
                *v = (*v - shift) * scale;
            }
        }
        for a in &mut self.alpha {
            for (j, &(_, scale)) in map.iter().enumerate() {
                a.grad[j] *= scale;
                a.diag2[j] *= scale * scale;
            }
        }
    }
}

/// The objective for one (net, problem, data) triple. Owns the network so the
/// optimizers can hand parameter vectors back and forth.
pub struct Objective {
    net: CauchyNet,
    plans: Vec<TermPlan>,
    weights: LossWeights,
    constraint: Constraint,
    input_map: Option<Vec<(f64, f64)>>,
    parallel: bool,
    counts: (usize, usize, usize),
}

pub fn jet_dot(coeffs: &JetCoeffs, jet: &Jet) -> f64 {
    let mut acc = coeffs.val * jet.value;
    for i in 0..jet.grad.len() {
        acc += coeffs.grad[i] * jet.grad[i] + coeffs.diag2[i] * jet.diag2[i];
    }
    acc
}

fn interior_plan(problem: &PdeProblem, points: PointSet) -> TermPlan {
    let down = problem.residual.coeffs();
    let n = points.n;
    let mut alpha = Vec::with_capacity(n);
    let mut consts = Vec::with_capacity(n);
    for p in 0..n {
        let x = points.point(p);
        let (a, c) = match &problem.constraint {
            Constraint::Hard { a, b } => {
                let ja = a.jet(x);
                let jb = b.jet(x);
                (adjoint_with_field_jet(&ja, &down), jet_dot(&down, &jb))
            }
            Constraint::Soft { .. } => (down.clone(), 0.0),
        };
        alpha.push(a);
        consts.push(c - problem.source.value(x));
    }
    TermPlan { points, alpha, consts, lambda: problem.weights.lambda_f }
}

fn value_match_plan(points: PointSet, target: &AnalyticField, lambda: f64) -> TermPlan {
    let dim = points.dim;
    let n = points.n;
    let mut alpha = Vec::with_capacity(n);
    let mut consts = Vec::with_capacity(n);
    for p in 0..n {
        alpha.push(JetCoeffs::value_only(1.0, dim));
        consts.push(-target.value(points.point(p)));
    }
    TermPlan { points, alpha, consts, lambda }
}

impl Objective {
    pub fn new(net: CauchyNet, problem: &PdeProblem, data: TrainData) -> Result<Self> {
        if data.interior.n == 0 {
            return Err(Error::Config("objective needs at least one interior point".into()));
        }
        for set in [Some(&data.interior), data.boundary.as_ref(), data.initial.as_ref()]
            .into_iter()
            .flatten()
        {
            if set.dim != problem.input_dim {
                return Err(Error::Config(format!(
                    "point set dimension {} does not match problem dimension {}",
                    set.dim, problem.input_dim
                )));
            }
        }
        if data.interior.role != Role::Interior {
            return Err(Error::Config("interior slot holds a non-interior point set".into()));
        }
        if net.input_dim() != problem.input_dim {
            return Err(Error::Config(format!(
                "network input dimension {} does not match problem dimension {}",
                net.input_dim(),
                problem.input_dim
            )));
        }

        let mut plans = vec![interior_plan(problem, data.interior)];
        let mut counts = (plans[0].points.n, 0, 0);
        match &problem.constraint {
            Constraint::Hard { .. } => {
                if data.boundary.is_some() || data.initial.is_some() {
                    return Err(Error::Config(
                        "hard-constrained problems take no boundary or initial points".into(),
                    ));
                }
            }
            Constraint::Soft { boundary, initial } => {
                let bset = data.boundary.ok_or_else(|| {
                    Error::Config("soft constraint needs a boundary point set".into())
                })?;
                counts.1 = bset.n;
                plans.push(value_match_plan(bset, boundary, problem.weights.lambda_b));
                match (initial, data.initial) {
                    (Some(target), Some(iset)) => {
                        counts.2 = iset.n;
                        plans.push(value_match_plan(iset, target, problem.weights.lambda_i));
                    }
                    (Some(_), None) => {
                        return Err(Error::Config(
                            "soft constraint needs an initial point set".into(),
                        ))
                    }
                    (None, Some(_)) => {
                        return Err(Error::Config(
                            "problem has no initial condition to penalize".into(),
                        ))
                    }
                    (None, None) => {}
                }
            }
        }

        if let Some(map) = &problem.input_map {
            if map.len() != problem.input_dim {
                return Err(Error::Config(format!(
                    "input map covers {} coordinates, problem has {}",
                    map.len(),
                    problem.input_dim
                )));
            }
            for plan in &mut plans {
                plan.apply_input_map(map);
            }
        }

        Ok(Objective {
            net,
            plans,
            weights: problem.weights,
            constraint: problem.constraint.clone(),
            input_map: problem.input_map.clone(),
            parallel: false,
            counts,
        })
    }

    /// Enable rayon over point chunks. Reduction order is unchanged, so the
    /// result stays bit-identical to the sequential path.
    pub fn set_parallel(&mut self, parallel: bool) {
        self.parallel = parallel;
    }

    pub fn net(&self) -> &CauchyNet {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut CauchyNet {
        &mut self.net
    }

    pub fn param_count(&self) -> usize {
        self.net.parameter_count()
    }

    /// Loss and gradient at `params`. Non-finite parameters short-circuit to an
    /// infinite loss so line searches back off instead of poisoning the state.
    pub fn eval(&mut self, params: &[f64]) -> (LossBreakdown, Vec<f64>) {
        assert_eq!(params.len(), self.net.parameter_count(), "parameter length mismatch");
        let n_par = params.len();
        if params.iter().any(|p| !p.is_finite()) {
            return (
                LossBreakdown {
                    total: f64::INFINITY,
                    term_f: f64::INFINITY,
                    term_b: 0.0,
                    term_i: 0.0,
                    weights: self.weights,
                    n_f: self.counts.0,
                    n_b: self.counts.1,
                    n_i: self.counts.2,
                },
                vec![0.0; n_par],
            );
        }
        self.net.set_params_unchecked(params);

        let mut grad = vec![0.0; n_par];
        let mut means = [0.0f64; 3];
        for (t, plan) in self.plans.iter().enumerate() {
            let mean = self.eval_term(plan, &mut grad);
            means[t] = mean;
        }
        let (term_f, term_b, term_i) = (means[0], means[1], means[2]);
        let mut total = self.weights.lambda_f * term_f;
        if self.plans.len() > 1 {
            total += self.weights.lambda_b * term_b;
        }
        if self.plans.len() > 2 {
            total += self.weights.lambda_i * term_i;
        }
        (
            LossBreakdown {
                total,
                term_f,
                term_b,
                term_i,
                weights: self.weights,
                n_f: self.counts.0,
                n_b: self.counts.1,
                n_i: self.counts.2,
            },
            grad,
        )
    }

    /// Mean squared residual of one term; the gradient contribution, already
    /// weighted by 2 lambda / N, is added into `grad`.
    fn eval_term(&self, plan: &TermPlan, grad: &mut [f64]) -> f64 {
        let n = plan.points.n;
        let gscale = 2.0 * plan.lambda / n as f64;
        let ranges: Vec<(usize, usize)> =
            (0..n).step_by(CHUNK).map(|s| (s, (s + CHUNK).min(n))).collect();

        let chunk_eval = |&(start, end): &(usize, usize)| -> (f64, Vec<f64>) {
            let mut scratch = NetJet::new(self.net.input_dim(), self.net.width());
            let mut part = vec![0.0; grad.len()];
            let mut sum = 0.0;
            let mut comp = 0.0;
            for p in start..end {
                let x = plan.points.point(p);
                self.net.forward_jet_into(x, &mut scratch);
                let r = jet_dot(&plan.alpha[p], &scratch.jet) + plan.consts[p];
                let y = r * r - comp;
                let t = sum + y;
                comp = (t - sum) - y;
                sum = t;
                self.net.param_grad_accumulate(&scratch, x, &plan.alpha[p], gscale * r, &mut part);
            }
            (sum, part)
        };

        let partials: Vec<(f64, Vec<f64>)> = if self.parallel {
            ranges.par_iter().map(chunk_eval).collect()
        } else {
            ranges.iter().map(chunk_eval).collect()
        };

        let mut sum = 0.0;
        let mut comp = 0.0;
        for (s, part) in &partials {
            let y = s - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            for (g, p) in grad.iter_mut().zip(part) {
                *g += p;
            }
        }
        sum / n as f64
    }

    /// The constrained prediction at the current parameters.
    pub fn predict_value(&self, x: &[f64]) -> f64 {
        predict_with_map(&self.net, &self.constraint, self.input_map.as_deref(), x)
    }
}

fn predict_with_map(
    net: &CauchyNet,
    constraint: &Constraint,
    map: Option<&[(f64, f64)]>,
    x: &[f64],
) -> f64 {
    let raw = match map {
        Some(m) => {
            let xi: Vec<f64> =
                x.iter().zip(m).map(|(&v, &(shift, scale))| (v - shift) * scale).collect();
            net.value(&xi)
        }
        None => net.value(x),
    };
    match constraint {
        Constraint::Hard { a, b } => a.value(x) * raw + b.value(x),
        Constraint::Soft { .. } => raw,
    }
}

/// Prediction seen by the error metrics: the ansatz composition under a hard
/// constraint, the raw network otherwise. The ansatz fields take the physical
/// point even when the network input is rescaled.
pub fn predict_value(net: &CauchyNet, problem: &PdeProblem, x: &[f64]) -> f64 {
    predict_with_map(net, &problem.constraint, problem.input_map.as_deref(), x)
}

pub fn predict_values(net: &CauchyNet, problem: &PdeProblem, points: &PointSet) -> Vec<f64> {
    points.iter().map(|x| predict_value(net, problem, x)).collect()
}

/// One-shot evaluation at the network's current parameters; test convenience.
pub fn loss_and_grad(
    net: &CauchyNet,
    problem: &PdeProblem,
    data: &TrainData,
) -> Result<(LossBreakdown, Vec<f64>)> {
    let mut obj = Objective::new(net.clone(), problem, data.clone())?;
    let params = net.flatten_params();
    Ok(obj.eval(&params))
}
