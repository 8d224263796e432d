//! Benchmark problem definitions.
//!
//! Every operator here is linear with constant coefficients on the jet
//! channels, r(x) = c_v u + sum_i c_g[i] u_i + sum_i c_d[i] u_ii - q(x),
//! which is what lets the loss precompute one coefficient vector per point and
//! keep the training loop free of problem-specific branching.

use crate::constraints::AnalyticField;
use crate::network::JetCoeffs;
use crate::{Error, Result};

/// Constant coefficients of the differential operator.
#[derive(Clone, Debug)]
pub struct ResidualForm {
    pub coeff_val: f64,
    pub coeff_grad: Vec<f64>,
    pub coeff_diag2: Vec<f64>,
}

impl ResidualForm {
    pub fn coeffs(&self) -> JetCoeffs {
        JetCoeffs {
            val: self.coeff_val,
            grad: self.coeff_grad.clone(),
            diag2: self.coeff_diag2.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct LossWeights {
    pub lambda_f: f64,
    pub lambda_b: f64,
    pub lambda_i: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { lambda_f: 1.0, lambda_b: 1.0, lambda_i: 1.0 }
    }
}

/// How boundary and initial conditions enter the optimization.
#[derive(Clone, Debug)]
pub enum Constraint {
    /// Prediction is A(x) * net(x) + B(x); conditions hold identically and the
    /// boundary / initial loss terms are dropped.
    Hard { a: AnalyticField, b: AnalyticField },
    /// Conditions are penalized: boundary target g(x), and for evolution
    /// problems the initial-slice target.
    Soft { boundary: AnalyticField, initial: Option<AnalyticField> },
}

impl Constraint {
    pub fn is_hard(&self) -> bool {
        matches!(self, Constraint::Hard { .. })
    }

    pub fn mode(&self) -> &'static str {
        match self {
            Constraint::Hard { .. } => "hard",
            Constraint::Soft { .. } => "soft",
        }
    }
}

#[derive(Clone, Debug)]
pub struct PdeProblem {
    pub name: String,
    /// Network input dimension; spatial_dim + 1 for evolution problems.
    pub input_dim: usize,
    pub spatial_dim: usize,
    pub time_range: Option<(f64, f64)>,
    /// Per-input-coordinate bounds, time last.
    pub domain: Vec<(f64, f64)>,
    pub residual: ResidualForm,
    pub source: AnalyticField,
    pub exact: AnalyticField,
    /// Canonical hard ansatz when the problem has one, kept so the mode can be
    /// switched back after a soft run.
    pub hard_ansatz: Option<(AnalyticField, AnalyticField)>,
    pub constraint: Constraint,
    pub weights: LossWeights,
    /// Affine map applied to inputs before they reach the network:
    /// xi_i = (x_i - shift_i) * scale_i. Everything else (ansatz, source,
    /// exact solution, sampling) stays in physical coordinates. Used when the
    /// coordinate ranges differ enough to skew the first layer, as with a long
    /// time axis next to unit-box space.
    pub input_map: Option<Vec<(f64, f64)>>,
}

/// (shift, scale) pairs sending each `domain` interval onto [-1, 1].
pub fn unit_box_map(domain: &[(f64, f64)]) -> Vec<(f64, f64)> {
    domain
        .iter()
        .map(|&(lo, hi)| {
            assert!(hi > lo, "degenerate domain interval [{lo}, {hi}]");
            (0.5 * (lo + hi), 2.0 / (hi - lo))
        })
        .collect()
}

impl PdeProblem {
    pub fn is_time_dependent(&self) -> bool {
        self.time_range.is_some()
    }

    /// Switch between the built-in hard ansatz and soft penalties. The soft
    /// targets are the exact solution's boundary and initial traces.
    pub fn set_constraint_mode(&mut self, mode: &str) -> Result<()> {
        match mode {
            "hard" => match &self.hard_ansatz {
                Some((a, b)) => {
                    self.constraint = Constraint::Hard { a: a.clone(), b: b.clone() };
                }
                None => {
                    return Err(Error::Config(format!(
                        "problem '{}' has no hard-constraint ansatz",
                        self.name
                    )))
                }
            },
            "soft" => {
                let initial = self.is_time_dependent().then(|| self.exact.clone());
                self.constraint =
                    Constraint::Soft { boundary: self.exact.clone(), initial };
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown constraint mode '{other}' (expected 'hard' or 'soft')"
                )))
            }
        }
        Ok(())
    }
}

/// u_xx + u_yy + k^2 u = q on [-1,1]^2 with u = sin(a1 pi x) sin(a2 pi y),
/// zero on the boundary for integer frequencies.
pub fn helmholtz2d(a1: f64, a2: f64, k: f64) -> PdeProblem {
    let pi = std::f64::consts::PI;
    let exact = AnalyticField::SineProduct {
        dims: vec![0, 1],
        freqs: vec![a1, a2],
        phases: vec![0.0, 0.0],
    };
    let q_coeff = k * k - (a1 * pi).powi(2) - (a2 * pi).powi(2);
    let ansatz = (AnalyticField::BoxProduct { dims: vec![0, 1] }, AnalyticField::zero());
    PdeProblem {
        name: "helmholtz2d".into(),
        input_dim: 2,
        spatial_dim: 2,
        time_range: None,
        domain: vec![(-1.0, 1.0); 2],
        residual: ResidualForm {
            coeff_val: k * k,
            coeff_grad: vec![0.0; 2],
            coeff_diag2: vec![1.0; 2],
        },
        source: AnalyticField::Scaled(q_coeff, Box::new(exact.clone())),
        exact,
        constraint: Constraint::Hard { a: ansatz.0.clone(), b: ansatz.1.clone() },
        hard_ansatz: Some(ansatz),
        weights: LossWeights::default(),
        input_map: None,
    }
}

/// Same operator in three dimensions with u = prod sin(2 pi x_i).
pub fn helmholtz3d(k: f64) -> PdeProblem {
    let pi = std::f64::consts::PI;
    let exact = AnalyticField::sine_product(vec![0, 1, 2], 2.0);
    let q_coeff = k * k - 12.0 * pi * pi;
    let ansatz = (AnalyticField::BoxProduct { dims: vec![0, 1, 2] }, AnalyticField::zero());
    PdeProblem {
        name: "helmholtz3d".into(),
        input_dim: 3,
        spatial_dim: 3,
        time_range: None,
        domain: vec![(-1.0, 1.0); 3],
        residual: ResidualForm {
            coeff_val: k * k,
            coeff_grad: vec![0.0; 3],
            coeff_diag2: vec![1.0; 3],
        },
        source: AnalyticField::Scaled(q_coeff, Box::new(exact.clone())),
        exact,
        constraint: Constraint::Hard { a: ansatz.0.clone(), b: ansatz.1.clone() },
        hard_ansatz: Some(ansatz),
        weights: LossWeights::default(),
        input_map: None,
    }
}

/// Diffusion on [0,1]^3 x [0,10]: sum_i u_ii = 12 pi^2 u_t, with
/// u = e^{-t} prod sin(2 pi x_i). The ansatz pins both the initial slice and
/// the spatial boundary.
pub fn heat3d() -> PdeProblem {
    let pi = std::f64::consts::PI;
    let spatial = AnalyticField::sine_product(vec![0, 1, 2], 2.0);
    let exact = AnalyticField::Product(
        Box::new(AnalyticField::ExpNeg { dim: 3 }),
        Box::new(spatial.clone()),
    );
    let mut domain = vec![(0.0, 1.0); 3];
    domain.push((0.0, 10.0));
    // The time axis is ten times longer than the spatial ones; feed the
    // network [-1,1]^4 so one first-layer scale fits every coordinate.
    let input_map = Some(unit_box_map(&domain));
    let ansatz = (
        AnalyticField::Product(
            Box::new(AnalyticField::Coordinate { dim: 3 }),
            Box::new(AnalyticField::UnitProduct { dims: vec![0, 1, 2] }),
        ),
        spatial,
    );
    PdeProblem {
        name: "heat3d".into(),
        input_dim: 4,
        spatial_dim: 3,
        time_range: Some((0.0, 10.0)),
        domain,
        residual: ResidualForm {
            coeff_val: 0.0,
            coeff_grad: vec![0.0, 0.0, 0.0, -12.0 * pi * pi],
            coeff_diag2: vec![1.0, 1.0, 1.0, 0.0],
        },
        source: AnalyticField::zero(),
        exact,
        constraint: Constraint::Hard { a: ansatz.0.clone(), b: ansatz.1.clone() },
        hard_ansatz: Some(ansatz),
        weights: LossWeights::default(),
        input_map,
    }
}

/// -laplace(u) = f on [-1,1]^dim with u = sum_i sin(pi x_i), f = pi^2 u.
/// Boundary values are nonzero, so this one trains with soft penalties.
pub fn poisson_nd(dim: usize) -> PdeProblem {
    let pi = std::f64::consts::PI;
    let dims: Vec<usize> = (0..dim).collect();
    let exact = AnalyticField::SineSum { dims: dims.clone(), freqs: vec![1.0; dim] };
    PdeProblem {
        name: format!("poisson{dim}d"),
        input_dim: dim,
        spatial_dim: dim,
        time_range: None,
        domain: vec![(-1.0, 1.0); dim],
        residual: ResidualForm {
            coeff_val: 0.0,
            coeff_grad: vec![0.0; dim],
            coeff_diag2: vec![-1.0; dim],
        },
        source: AnalyticField::Scaled(pi * pi, Box::new(exact.clone())),
        exact: exact.clone(),
        constraint: Constraint::Soft { boundary: exact, initial: None },
        hard_ansatz: None,
        weights: LossWeights { lambda_f: 1.0, lambda_b: 100.0, lambda_i: 1.0 },
        input_map: None,
    }
}

/// Optional knobs a config may set; each problem accepts only the ones it uses.
#[derive(Clone, Copy, Debug, Default, serde::Serialize, serde::Deserialize)]
pub struct ProblemOverrides {
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub k: Option<f64>,
    pub dim: Option<usize>,
}

pub fn build_problem(name: &str, ov: &ProblemOverrides) -> Result<PdeProblem> {
    let reject = |field: &str| -> Result<()> {
        Err(Error::Config(format!("problem '{name}' does not accept override '{field}'")))
    };
    match name {
        "helmholtz2d" => {
            if ov.dim.is_some() {
                reject("dim")?;
            }
            Ok(helmholtz2d(ov.a1.unwrap_or(1.0), ov.a2.unwrap_or(4.0), ov.k.unwrap_or(1.0)))
        }
        "helmholtz3d" => {
            if ov.a1.is_some() || ov.a2.is_some() {
                reject("a1/a2")?;
            }
            if ov.dim.is_some() {
                reject("dim")?;
            }
            Ok(helmholtz3d(ov.k.unwrap_or(1.0)))
        }
        "heat3d" => {
            if ov.a1.is_some() || ov.a2.is_some() || ov.k.is_some() || ov.dim.is_some() {
                reject("a1/a2/k/dim")?;
            }
            Ok(heat3d())
        }
        "poisson" => {
            if ov.a1.is_some() || ov.a2.is_some() || ov.k.is_some() {
                reject("a1/a2/k")?;
            }
            let dim = ov
                .dim
                .ok_or_else(|| Error::Config("problem 'poisson' requires 'dim'".into()))?;
            if dim == 0 {
                return Err(Error::Config("poisson dimension must be positive".into()));
            }
            Ok(poisson_nd(dim))
        }
        "poisson5d" => Ok(poisson_nd(5)),
        "poisson10d" => Ok(poisson_nd(10)),
        other => Err(Error::Config(format!(
            "unknown problem '{other}' (expected helmholtz2d, helmholtz3d, heat3d, \
             poisson, poisson5d, or poisson10d)"
        ))),
    }
}
