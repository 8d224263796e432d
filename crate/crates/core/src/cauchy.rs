//! Numerical Cauchy integral formula on circular contours.
//!
//! For f holomorphic on and inside a circle C and z strictly inside,
//! f(z) = (1/2 pi i) * integral of f(zeta)/(zeta - z) around C. Discretizing with
//! m equidistant nodes turns the integral into a weighted sum of simple poles,
//! which is exactly the functional form of the network's activation layer. This
//! module keeps that construction as an independent, trainable-parameter-free
//! verification path: sums converge spectrally in m, and each node of the real
//! reduction maps onto one activation term.
//!
//! Two weight conventions are provided. `Tangent` uses the exact node derivative
//! of the circle parametrization, lambda_k = f(zeta_k) (zeta_k - c)/m, and is the
//! periodic trapezoid rule with its O(rho^-m) convergence. `Secant` replaces the
//! derivative with the forward chord (zeta_{k+1} - zeta_k)/(2 pi i); the chord
//! introduces a fixed relative bias of about pi/m, so it converges only linearly.
//! It is kept for demonstration; everything that needs accuracy uses `Tangent`.
//!
//! Nodes sit at angles 2 pi (k + offset)/m. The default quarter-step offset keeps
//! every node off the real axis for every m, so the real reduction never
//! degenerates; `with_offset` selects other placements (0 gives the plain
//! axis-aligned Riemann sum).

pub use num_complex::Complex64;

use crate::activation::{cauchy_eval, CauchyParams};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadratureRule {
    Tangent,
    Secant,
}

#[derive(Clone, Copy, Debug)]
pub struct CircleContour {
    pub center: Complex64,
    pub radius: f64,
    /// Fractional node offset in units of the angular spacing. 0.25 keeps every
    /// node off the real axis for any m; 0 aligns node 0 with the positive real
    /// direction.
    pub offset: f64,
}

impl CircleContour {
    pub fn new(center: Complex64, radius: f64) -> Self {
        CircleContour::with_offset(center, radius, 0.25)
    }

    pub fn with_offset(center: Complex64, radius: f64, offset: f64) -> Self {
        assert!(radius > 0.0 && radius.is_finite());
        assert!(offset.is_finite());
        CircleContour { center, radius, offset }
    }

    pub fn unit() -> Self {
        CircleContour::new(Complex64::new(0.0, 0.0), 1.0)
    }

    /// Node k of m.
    pub fn node(&self, k: usize, m: usize) -> Complex64 {
        let theta = 2.0 * std::f64::consts::PI * (k as f64 + self.offset) / m as f64;
        self.center + Complex64::from_polar(self.radius, theta)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() < self.radius
    }
}

/// One term of the real reduction: the node's rational summand rewritten as an
/// activation evaluated at x - shift.
#[derive(Clone, Copy, Debug)]
pub struct ActivationTerm {
    pub shift: f64,
    pub params: CauchyParams,
}

impl ActivationTerm {
    pub fn eval(&self, x: f64) -> f64 {
        cauchy_eval(x - self.shift, self.params, 0)
    }
}

/// Nodes and weights for one function on one contour.
#[derive(Clone, Debug)]
pub struct ContourSampling {
    pub contour: CircleContour,
    pub rule: QuadratureRule,
    pub nodes: Vec<Complex64>,
    pub weights: Vec<Complex64>,
}

impl ContourSampling {
    pub fn build<F>(contour: CircleContour, m: usize, rule: QuadratureRule, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64,
    {
        assert!(m >= 2, "need at least two nodes");
        let nodes: Vec<Complex64> = (0..m).map(|k| contour.node(k, m)).collect();
        let weights = match rule {
            QuadratureRule::Tangent => nodes
                .iter()
                .map(|&z| f(z) * (z - contour.center) / m as f64)
                .collect(),
            QuadratureRule::Secant => {
                let tau = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
                (0..m)
                    .map(|k| {
                        let step = nodes[(k + 1) % m] - nodes[k];
                        f(nodes[k]) * step / tau
                    })
                    .collect()
            }
        };
        ContourSampling { contour, rule, nodes, weights }
    }

    /// Sum of lambda_k / (zeta_k - z); z must lie strictly inside the contour.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        debug_assert!(self.contour.contains(z));
        let mut acc = Complex64::new(0.0, 0.0);
        for (&zeta, &lam) in self.nodes.iter().zip(&self.weights) {
            acc += lam / (zeta - z);
        }
        acc
    }

    /// Real-part reduction at a real point, written as the explicit per-node
    /// rational sum rather than Re(eval): this is the form each activation term
    /// descends from.
    pub fn eval_real(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (&zeta, &lam) in self.nodes.iter().zip(&self.weights) {
            let num = lam.re * zeta.re + lam.im * zeta.im - lam.re * x;
            let dx = x - zeta.re;
            acc += num / (dx * dx + zeta.im * zeta.im);
        }
        acc
    }

    /// The per-node activation decomposition of `eval_real`. Shifting the node
    /// summand to u = x - Re(zeta) absorbs the Re(lambda) Re(zeta) part of the
    /// numerator into the linear term, leaving
    /// Phi(u; -Re(lambda), Im(lambda) Im(zeta), |Im(zeta)|) exactly.
    pub fn activation_terms(&self) -> Vec<ActivationTerm> {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&zeta, &lam)| ActivationTerm {
                shift: zeta.re,
                params: CauchyParams::new(-lam.re, lam.im * zeta.im, zeta.im.abs()),
            })
            .collect()
    }
}

/// One-shot contour sum for f at z with m tangent-rule nodes.
pub fn cauchy_approx_1d<F>(f: F, contour: CircleContour, z: Complex64, m: usize) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    ContourSampling::build(contour, m, QuadratureRule::Tangent, f).eval(z)
}

pub fn cauchy_approx_1d_with<F>(
    f: F,
    contour: CircleContour,
    z: Complex64,
    m: usize,
    rule: QuadratureRule,
) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    ContourSampling::build(contour, m, rule, f).eval(z)
}

/// Real reduction of the contour sum at real x.
pub fn cauchy_approx_real_1d<F>(f: F, contour: CircleContour, x: f64, m: usize) -> f64
where
    F: Fn(Complex64) -> Complex64,
{
    ContourSampling::build(contour, m, QuadratureRule::Tangent, f).eval_real(x)
}

/// Tensor-product contour sum in up to three complex variables. Cost is the
/// product of the per-dimension node counts, hence the hard dimension guard.
pub fn cauchy_approx_nd<F>(
    f: F,
    contours: &[CircleContour],
    z: &[Complex64],
    m: &[usize],
) -> Result<Complex64>
where
    F: Fn(&[Complex64]) -> Complex64,
{
    let n = contours.len();
    if n == 0 || n != z.len() || n != m.len() {
        return Err(Error::Config(format!(
            "mismatched contour/evaluation dimensions ({n}, {}, {})",
            z.len(),
            m.len()
        )));
    }
    if n > 3 {
        return Err(Error::Config(format!(
            "tensor-product sum limited to 3 dimensions, got {n}: node count grows as the product of per-dimension counts"
        )));
    }
    for (c, &zi) in contours.iter().zip(z) {
        if !c.contains(zi) {
            return Err(Error::Config(format!("evaluation point {zi} not inside its contour")));
        }
    }

    let nodes: Vec<Vec<Complex64>> = contours
        .iter()
        .zip(m)
        .map(|(c, &mi)| (0..mi).map(|k| c.node(k, mi)).collect())
        .collect();
    // Per-dimension tangent factors (zeta - c)/m, f supplied at the node tuple.
    let factors: Vec<Vec<Complex64>> = contours
        .iter()
        .zip(&nodes)
        .zip(m)
        .map(|((c, ns), &mi)| ns.iter().map(|&zt| (zt - c.center) / mi as f64).collect())
        .collect();

    let mut idx = vec![0usize; n];
    let mut point = vec![Complex64::new(0.0, 0.0); n];
    let mut acc = Complex64::new(0.0, 0.0);
    loop {
        let mut lam = Complex64::new(1.0, 0.0);
        let mut denom = Complex64::new(1.0, 0.0);
        for l in 0..n {
            let zt = nodes[l][idx[l]];
            point[l] = zt;
            lam *= factors[l][idx[l]];
            denom *= zt - z[l];
        }
        acc += f(&point) * lam / denom;

        // odometer over the node grid
        let mut l = 0;
        loop {
            idx[l] += 1;
            if idx[l] < m[l] {
                break;
            }
            idx[l] = 0;
            l += 1;
            if l == n {
                return Ok(acc);
            }
        }
    }
}
