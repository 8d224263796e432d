//! The trainable rational activation and its exact derivatives.
//!
//! Phi(x; mu1, mu2, d) = (mu1*x + mu2) / (x^2 + d^2). Each neuron owns its own
//! (mu1, mu2, d) triple and all three are trained. Writing s = x^2 + d^2 and
//! q = mu1*x + mu2, the input derivatives are
//!
//!   Phi   = q/s
//!   Phi'  = mu1/s - 2xq/s^2
//!   Phi'' = -2q/s^2 - 4 mu1 x/s^2 + 8 x^2 q/s^3
//!   Phi''' = -6 mu1/s^2 + 24 mu1 x^2/s^3 + 24 x q/s^3 - 48 x^3 q/s^4
//!
//! and the parameter sensitivities of orders 0..=2 follow by differentiating the
//! same expressions in mu1, mu2, d. Third-order parameter sensitivities are never
//! needed: the deepest composite any loss gradient touches is d(Phi'')/d(theta).
//! Every formula here is locked to a central finite-difference gate in the tests;
//! edit the formulas and the gate fails before anything downstream does.

use serde::{Deserialize, Serialize};

/// Default initial value for all three activation parameters.
pub const DEFAULT_INIT: f64 = 0.1;

/// Smallest |d| allowed to survive an optimizer step. Phi has poles at
/// x = +-i|d|; keeping |d| above the floor keeps them off the real axis.
pub const D_FLOOR: f64 = 1e-6;

/// Highest input-derivative order available.
pub const MAX_ORDER: usize = 3;

/// Per-neuron activation coefficients. Only d's magnitude matters (it enters as
/// d^2); sign is preserved through clamping but carries no meaning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyParams {
    pub mu1: f64,
    pub mu2: f64,
    pub d: f64,
}

impl CauchyParams {
    pub fn new(mu1: f64, mu2: f64, d: f64) -> Self {
        let p = CauchyParams { mu1, mu2, d };
        assert!(p.is_valid(), "invalid activation parameters {p:?}");
        p
    }

    pub fn default_init() -> Self {
        CauchyParams {
            mu1: DEFAULT_INIT,
            mu2: DEFAULT_INIT,
            d: DEFAULT_INIT,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.mu1.is_finite() && self.mu2.is_finite() && self.d.is_finite() && self.d != 0.0
    }

    /// Push |d| back above the floor, keeping its sign.
    pub fn clamp_d(&mut self) {
        if self.d.abs() < D_FLOOR {
            self.d = if self.d.is_sign_negative() { -D_FLOOR } else { D_FLOOR };
        }
    }
}

/// Value of the order-th input derivative of Phi at x.
pub fn cauchy_eval(x: f64, p: CauchyParams, order: usize) -> f64 {
    assert!(order <= MAX_ORDER, "derivative order {order} out of range");
    assert!(x.is_finite(), "non-finite activation input");
    cauchy_jet(x, p)[order]
}

/// All four input-derivative orders at once, sharing subexpressions. The hot-loop
/// entry point; callers guarantee finite x.
#[inline]
pub fn cauchy_jet(x: f64, p: CauchyParams) -> [f64; 4] {
    debug_assert!(x.is_finite());
    let s = x * x + p.d * p.d;
    let q = p.mu1 * x + p.mu2;
    let inv = 1.0 / s;
    let inv2 = inv * inv;
    let inv3 = inv2 * inv;
    let inv4 = inv2 * inv2;
    let x2 = x * x;
    [
        q * inv,
        p.mu1 * inv - 2.0 * x * q * inv2,
        -2.0 * q * inv2 - 4.0 * p.mu1 * x * inv2 + 8.0 * x2 * q * inv3,
        -6.0 * p.mu1 * inv2 + 24.0 * p.mu1 * x2 * inv3 + 24.0 * x * q * inv3
            - 48.0 * x2 * x * q * inv4,
    ]
}

/// (d/dmu1, d/dmu2, d/dd) of the deriv_order-th input derivative.
///
/// Phi is linear in mu1 and mu2, so those two columns are the input derivatives of
/// x/s and 1/s and do not depend on p beyond d.
pub fn cauchy_param_sens(x: f64, p: CauchyParams, deriv_order: usize) -> [f64; 3] {
    assert!(deriv_order <= 2, "parameter sensitivities stop at order 2, got {deriv_order}");
    assert!(x.is_finite(), "non-finite activation input");
    cauchy_param_sens_all(x, p)[deriv_order]
}

/// Parameter sensitivities of orders 0, 1, 2 in one pass; rows are orders,
/// columns are (mu1, mu2, d).
#[inline]
pub fn cauchy_param_sens_all(x: f64, p: CauchyParams) -> [[f64; 3]; 3] {
    let s = x * x + p.d * p.d;
    let q = p.mu1 * x + p.mu2;
    let d = p.d;
    let inv = 1.0 / s;
    let inv2 = inv * inv;
    let inv3 = inv2 * inv;
    let inv4 = inv2 * inv2;
    let x2 = x * x;
    [
        [
            x * inv,
            inv,
            -2.0 * d * q * inv2,
        ],
        [
            inv - 2.0 * x2 * inv2,
            -2.0 * x * inv2,
            -2.0 * d * p.mu1 * inv2 + 8.0 * d * x * q * inv3,
        ],
        [
            -6.0 * x * inv2 + 8.0 * x2 * x * inv3,
            -2.0 * inv2 + 8.0 * x2 * inv3,
            16.0 * d * p.mu1 * x * inv3 + 8.0 * d * q * inv3 - 48.0 * d * x2 * q * inv4,
        ],
    ]
}

/// tanh and derivatives through third order, the reference activation.
pub fn tanh_eval(x: f64, order: usize) -> f64 {
    assert!(order <= MAX_ORDER, "derivative order {order} out of range");
    assert!(x.is_finite(), "non-finite activation input");
    tanh_jet(x)[order]
}

#[inline]
pub fn tanh_jet(x: f64) -> [f64; 4] {
    let t = x.tanh();
    let sech2 = 1.0 - t * t;
    [t, sech2, -2.0 * t * sech2, sech2 * (6.0 * t * t - 2.0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::{agrees, diffn};
    use crate::rng::CounterRng;

    fn random_case(r: CounterRng, i: u64) -> (f64, CauchyParams) {
        let x = r.uniform_at(4 * i, -5.0, 5.0);
        let p = CauchyParams::new(
            r.uniform_at(4 * i + 1, 0.05, 1.0),
            r.uniform_at(4 * i + 2, 0.05, 1.0),
            r.uniform_at(4 * i + 3, 0.05, 1.0),
        );
        (x, p)
    }

    #[test]
    fn known_values_at_zero() {
        let p = CauchyParams::new(0.0, 1.0, 1.0);
        assert_eq!(cauchy_eval(0.0, p, 0), 1.0);
        assert_eq!(cauchy_eval(0.0, p, 2), -2.0);
        let p = CauchyParams::new(1.0, 0.0, 1.0);
        assert_eq!(cauchy_eval(0.0, p, 3), -6.0);
    }

    #[test]
    fn derivative_gate_1000_draws() {
        // Each order k in 1..=3 must match a central difference of order k-1.
        let r = CounterRng::new(11).stream("activation-gate");
        for i in 0..1000 {
            let (x, p) = random_case(r, i);
            let jet = cauchy_jet(x, p);
            for k in 1..=3usize {
                let f = |t: f64| cauchy_eval(t, p, k - 1);
                let h = 1e-5 * x.abs().max(1.0);
                let fd = diffn(&f, x, 1, h);
                assert!(
                    agrees(jet[k], fd, 1e-5, 1e-7),
                    "order {k} at x={x} p={p:?}: closed {} vs fd {fd}",
                    jet[k]
                );
            }
        }
    }

    #[test]
    fn first_derivative_matches_fd_at_sharp_scale() {
        let p = CauchyParams::new(0.1, 0.1, 0.1);
        let f = |t: f64| cauchy_eval(t, p, 0);
        let fd = diffn(&f, 0.7, 1, 1e-5);
        assert!(agrees(cauchy_eval(0.7, p, 1), fd, 1e-6, 1e-12));
    }

    #[test]
    fn param_sens_closed_forms() {
        // At x = 0: d/dmu1 = 0, d/dmu2 = 1/d^2, d/dd = -2 mu2 / d^3 reduced at d=1.
        let p = CauchyParams::new(0.3, 0.7, 1.0);
        let s = cauchy_param_sens(0.0, p, 0);
        assert_eq!(s[0], 0.0);
        assert_eq!(s[1], 1.0);
        assert!(agrees(s[2], -2.0 * p.mu2, 1e-14, 1e-15));
        // Linearity in mu1: d/dmu1 of the value is x/(x^2+d^2) regardless of p.
        for &x in &[-2.0, -0.3, 0.9, 4.0] {
            let s = cauchy_param_sens(x, p, 0);
            assert!(agrees(s[0], x / (x * x + 1.0), 1e-14, 1e-15));
        }
    }

    #[test]
    fn param_sens_gate_1000_draws() {
        let r = CounterRng::new(23).stream("sens-gate");
        for i in 0..1000 {
            let (x, p) = random_case(r, i);
            for k in 0..=2usize {
                let sens = cauchy_param_sens(x, p, k);
                let probes: [Box<dyn Fn(f64) -> f64>; 3] = [
                    Box::new(|m| cauchy_eval(x, CauchyParams { mu1: m, ..p }, k)),
                    Box::new(|m| cauchy_eval(x, CauchyParams { mu2: m, ..p }, k)),
                    Box::new(|dv| cauchy_eval(x, CauchyParams { d: dv, ..p }, k)),
                ];
                let at = [p.mu1, p.mu2, p.d];
                for j in 0..3 {
                    let h = 1e-5 * at[j].abs().max(1e-2);
                    let fd = diffn(&probes[j], at[j], 1, h);
                    assert!(
                        agrees(sens[j], fd, 1e-5, 1e-7),
                        "order {k} param {j} at x={x} p={p:?}: {} vs {fd}",
                        sens[j]
                    );
                }
            }
        }
    }

    #[test]
    fn linear_in_mu_exactly() {
        let r = CounterRng::new(5).stream("linearity");
        for i in 0..200 {
            let (x, p) = random_case(r, i);
            for k in 0..=3usize {
                let whole = cauchy_eval(x, p, k);
                let e1 = cauchy_eval(x, CauchyParams { mu1: 1.0, mu2: 0.0, d: p.d }, k);
                let e2 = cauchy_eval(x, CauchyParams { mu1: 0.0, mu2: 1.0, d: p.d }, k);
                assert!(
                    agrees(whole, p.mu1 * e1 + p.mu2 * e2, 1e-14, 1e-16),
                    "order {k}"
                );
            }
        }
    }

    #[test]
    fn parity_split() {
        // mu2 alone gives an even function, mu1 alone an odd one.
        let even = CauchyParams::new(0.0, 0.8, 0.4);
        let odd = CauchyParams::new(0.8, 0.0, 0.4);
        for &x in &[0.1, 0.7, 1.9, 3.3] {
            assert_eq!(cauchy_eval(x, even, 0), cauchy_eval(-x, even, 0));
            assert_eq!(cauchy_eval(x, odd, 0), -cauchy_eval(-x, odd, 0));
        }
    }

    #[test]
    fn sign_of_d_is_irrelevant() {
        let plus = CauchyParams::new(0.2, 0.5, 0.3);
        let minus = CauchyParams::new(0.2, 0.5, -0.3);
        for k in 0..=3usize {
            assert_eq!(cauchy_eval(1.1, plus, k), cauchy_eval(1.1, minus, k));
        }
    }

    #[test]
    fn decays_at_infinity() {
        let p = CauchyParams::new(1.0, 1.0, 1.0);
        for k in 0..=3usize {
            assert!(cauchy_eval(1e6, p, k).abs() < 1e-5, "order {k}");
        }
    }

    #[test]
    fn clamp_restores_floor_with_sign() {
        let mut p = CauchyParams { mu1: 0.1, mu2: 0.1, d: 1e-9 };
        p.clamp_d();
        assert_eq!(p.d, D_FLOOR);
        let mut p = CauchyParams { mu1: 0.1, mu2: 0.1, d: -1e-9 };
        p.clamp_d();
        assert_eq!(p.d, -D_FLOOR);
        let mut p = CauchyParams { mu1: 0.1, mu2: 0.1, d: 0.5 };
        p.clamp_d();
        assert_eq!(p.d, 0.5);
    }

    #[test]
    fn tanh_reference_values_and_fd() {
        assert_eq!(tanh_eval(0.0, 1), 1.0);
        assert_eq!(tanh_eval(0.0, 2), 0.0);
        let f = |t: f64| t.tanh();
        let fd3 = diffn(&f, 0.5, 3, 1e-3);
        // third-order central stencil carries ~h^2 truncation on top of h^-3 rounding
        assert!(agrees(tanh_eval(0.5, 3), fd3, 1e-4, 1e-7));
        let r = CounterRng::new(9).stream("tanh-gate");
        for i in 0..300 {
            let x = r.uniform_at(i, -3.0, 3.0);
            let jet = tanh_jet(x);
            for k in 1..=3usize {
                let g = |t: f64| tanh_eval(t, k - 1);
                assert!(agrees(jet[k], diffn(&g, x, 1, 1e-5), 1e-5, 1e-7));
            }
        }
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn rejects_bad_order() {
        cauchy_eval(0.0, CauchyParams::default_init(), 4);
    }

    #[test]
    #[should_panic(expected = "non-finite")]
    fn rejects_non_finite_input() {
        cauchy_eval(f64::NAN, CauchyParams::default_init(), 0);
    }
}
