//! Hard-constraint ansatz u_hat = A(x) * u_net(x) + B(x).
//!
//! A vanishes on the constrained part of the boundary and B interpolates the
//! prescribed data there, so the composed prediction satisfies the condition
//! identically and the corresponding loss terms disappear. Both factors are
//! closed-form analytic fields with exact value / gradient / second-derivative
//! evaluators; composition with the network jet is the product rule, and
//! `adjoint_coeffs` is its transpose so parameter gradients can flow through
//! unchanged network machinery.

use crate::network::{Jet, JetCoeffs};

/// A scalar field with closed-form derivatives. Product kinds multiply
/// one-dimensional factors over a subset of coordinates; the rest compose.
#[derive(Clone, Debug)]
pub enum AnalyticField {
    Constant(f64),
    /// prod over dims of (1 - x_i^2); zero on every face of [-1, 1]^k.
    BoxProduct { dims: Vec<usize> },
    /// prod over dims of x_i (1 - x_i); zero on every face of [0, 1]^k.
    UnitProduct { dims: Vec<usize> },
    /// The bare coordinate x_dim; the time factor in evolution ansatz.
    Coordinate { dim: usize },
    /// prod over dims of sin(freq_i * pi * x_i + phase_i).
    SineProduct { dims: Vec<usize>, freqs: Vec<f64>, phases: Vec<f64> },
    /// sum over dims of sin(freq_i * pi * x_i).
    SineSum { dims: Vec<usize>, freqs: Vec<f64> },
    /// exp(-x_dim).
    ExpNeg { dim: usize },
    Product(Box<AnalyticField>, Box<AnalyticField>),
    Scaled(f64, Box<AnalyticField>),
}

impl AnalyticField {
    pub fn one() -> Self {
        AnalyticField::Constant(1.0)
    }

    pub fn zero() -> Self {
        AnalyticField::Constant(0.0)
    }

    /// Equal-frequency sine product with no phase, the common case.
    pub fn sine_product(dims: impl Into<Vec<usize>>, freq: f64) -> Self {
        let dims = dims.into();
        let n = dims.len();
        AnalyticField::SineProduct { dims, freqs: vec![freq; n], phases: vec![0.0; n] }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            AnalyticField::Constant(c) => *c,
            AnalyticField::BoxProduct { dims } => {
                dims.iter().map(|&i| 1.0 - x[i] * x[i]).product()
            }
            AnalyticField::UnitProduct { dims } => {
                dims.iter().map(|&i| x[i] * (1.0 - x[i])).product()
            }
            AnalyticField::Coordinate { dim } => x[*dim],
            AnalyticField::SineProduct { dims, freqs, phases } => dims
                .iter()
                .zip(freqs)
                .zip(phases)
                .map(|((&i, &f), &ph)| (f * std::f64::consts::PI * x[i] + ph).sin())
                .product(),
            AnalyticField::SineSum { dims, freqs } => dims
                .iter()
                .zip(freqs)
                .map(|(&i, &f)| (f * std::f64::consts::PI * x[i]).sin())
                .sum(),
            AnalyticField::ExpNeg { dim } => (-x[*dim]).exp(),
            AnalyticField::Product(a, b) => a.value(x) * b.value(x),
            AnalyticField::Scaled(s, f) => s * f.value(x),
        }
    }

    /// Value, gradient, and per-coordinate second derivatives. Not a hot path:
    /// training precomputes field jets once per point set.
    pub fn jet(&self, x: &[f64]) -> Jet {
        let dim = x.len();
        match self {
            AnalyticField::Constant(c) => {
                let mut j = Jet::zeros(dim);
                j.value = *c;
                j
            }
            AnalyticField::BoxProduct { dims } => {
                factor_jet(x, dims, |xi| (1.0 - xi * xi, -2.0 * xi, -2.0))
            }
            AnalyticField::UnitProduct { dims } => {
                factor_jet(x, dims, |xi| (xi * (1.0 - xi), 1.0 - 2.0 * xi, -2.0))
            }
            AnalyticField::Coordinate { dim: d } => {
                let mut j = Jet::zeros(dim);
                j.value = x[*d];
                j.grad[*d] = 1.0;
                j
            }
            AnalyticField::SineProduct { dims, freqs, phases } => {
                let mut vals = Vec::with_capacity(dims.len());
                for ((&i, &f), &ph) in dims.iter().zip(freqs).zip(phases) {
                    let w = f * std::f64::consts::PI;
                    let arg = w * x[i] + ph;
                    vals.push((arg.sin(), w * arg.cos(), -w * w * arg.sin()));
                }
                factors_to_jet(x.len(), dims, &vals)
            }
            AnalyticField::SineSum { dims, freqs } => {
                let mut j = Jet::zeros(dim);
                for (&i, &f) in dims.iter().zip(freqs) {
                    let w = f * std::f64::consts::PI;
                    let arg = w * x[i];
                    j.value += arg.sin();
                    j.grad[i] = w * arg.cos();
                    j.diag2[i] = -w * w * arg.sin();
                }
                j
            }
            AnalyticField::ExpNeg { dim: d } => {
                let e = (-x[*d]).exp();
                let mut j = Jet::zeros(dim);
                j.value = e;
                j.grad[*d] = -e;
                j.diag2[*d] = e;
                j
            }
            AnalyticField::Product(a, b) => {
                let ja = a.jet(x);
                let jb = b.jet(x);
                let mut j = Jet::zeros(dim);
                j.value = ja.value * jb.value;
                for i in 0..dim {
                    j.grad[i] = ja.grad[i] * jb.value + ja.value * jb.grad[i];
                    j.diag2[i] = ja.diag2[i] * jb.value
                        + 2.0 * ja.grad[i] * jb.grad[i]
                        + ja.value * jb.diag2[i];
                }
                j
            }
            AnalyticField::Scaled(s, f) => {
                let mut j = f.jet(x);
                j.value *= s;
                for g in &mut j.grad {
                    *g *= s;
                }
                for h in &mut j.diag2 {
                    *h *= s;
                }
                j
            }
        }
    }
}

/// Product of univariate factors f(x_i) over `dims`; `factor` returns
/// (f, f', f''). Gradient entries use the product of the other factors, so zeros
/// on faces stay exact instead of dividing them back out.
fn factor_jet<F>(x: &[f64], dims: &[usize], factor: F) -> Jet
where
    F: Fn(f64) -> (f64, f64, f64),
{
    let vals: Vec<(f64, f64, f64)> = dims.iter().map(|&i| factor(x[i])).collect();
    factors_to_jet(x.len(), dims, &vals)
}

fn factors_to_jet(dim: usize, dims: &[usize], vals: &[(f64, f64, f64)]) -> Jet {
    let mut j = Jet::zeros(dim);
    j.value = vals.iter().map(|v| v.0).product();
    for (pos, &i) in dims.iter().enumerate() {
        let mut rest = 1.0;
        for (q, v) in vals.iter().enumerate() {
            if q != pos {
                rest *= v.0;
            }
        }
        j.grad[i] = vals[pos].1 * rest;
        j.diag2[i] = vals[pos].2 * rest;
    }
    j
}

/// Compose the ansatz with a raw network jet at x:
/// value = A u + B, grad_i = A u_i + A_i u + B_i,
/// diag2_i = A u_ii + 2 A_i u_i + A_ii u + B_ii.
pub fn constrained_jet(a: &AnalyticField, b: &AnalyticField, net: &Jet, x: &[f64]) -> Jet {
    let ja = a.jet(x);
    let jb = b.jet(x);
    compose_with_field_jets(&ja, &jb, net)
}

/// Same composition with the field jets already evaluated.
pub fn compose_with_field_jets(ja: &Jet, jb: &Jet, net: &Jet) -> Jet {
    let dim = net.grad.len();
    let mut out = Jet::zeros(dim);
    out.value = ja.value * net.value + jb.value;
    for i in 0..dim {
        out.grad[i] = ja.value * net.grad[i] + ja.grad[i] * net.value + jb.grad[i];
        out.diag2[i] = ja.value * net.diag2[i]
            + 2.0 * ja.grad[i] * net.grad[i]
            + ja.diag2[i] * net.value
            + jb.diag2[i];
    }
    out
}

/// Transpose of the composition: coefficients on the constrained jet pulled back
/// to coefficients on the raw network jet. B is additive and drops out.
pub fn adjoint_coeffs(a: &AnalyticField, x: &[f64], down: &JetCoeffs) -> JetCoeffs {
    adjoint_with_field_jet(&a.jet(x), down)
}

pub fn adjoint_with_field_jet(ja: &Jet, down: &JetCoeffs) -> JetCoeffs {
    let dim = down.grad.len();
    let mut up = JetCoeffs::zeros(dim);
    up.val = down.val * ja.value;
    for i in 0..dim {
        up.val += down.grad[i] * ja.grad[i] + down.diag2[i] * ja.diag2[i];
        up.grad[i] = down.grad[i] * ja.value + 2.0 * down.diag2[i] * ja.grad[i];
        up.diag2[i] = down.diag2[i] * ja.value;
    }
    up
}
