//! Central finite differences.
//!
//! The independent reference every hand-derived formula in this crate is checked
//! against, both in the test suite and at runtime through the gradient-check
//! command. Nothing in a hot path calls into here.

/// (f(x+h) - f(x-h)) / 2h.
pub fn diff1<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// (f(x+h) - 2f(x) + f(x-h)) / h^2.
pub fn diff2<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// (f(x+2h) - 2f(x+h) + 2f(x-h) - f(x-2h)) / 2h^3.
pub fn diff3<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
    (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h)
}

/// Central difference of the given order, 0 returning f(x) itself.
pub fn diffn<F: Fn(f64) -> f64>(f: &F, x: f64, order: usize, h: f64) -> f64 {
    match order {
        0 => f(x),
        1 => diff1(f, x, h),
        2 => diff2(f, x, h),
        3 => diff3(f, x, h),
        _ => panic!("finite differences implemented for orders 0..=3, got {order}"),
    }
}

/// One Richardson step on the h^2-accurate central first difference.
pub fn diff1_rich<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
    (4.0 * diff1(f, x, h / 2.0) - diff1(f, x, h)) / 3.0
}

/// One Richardson step on the h^2-accurate central second difference.
pub fn diff2_rich<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
    (4.0 * diff2(f, x, h / 2.0) - diff2(f, x, h)) / 3.0
}

/// Gradient of a multivariate scalar by perturbing one coordinate at a time.
/// Steps scale with coordinate magnitude so large and tiny parameters are probed
/// at comparable relative resolution.
pub fn gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h0: f64) -> Vec<f64> {
    let mut xs = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for j in 0..x.len() {
        let h = h0 * x[j].abs().max(1.0);
        let orig = xs[j];
        xs[j] = orig + h;
        let fp = f(&xs);
        xs[j] = orig - h;
        let fm = f(&xs);
        xs[j] = orig;
        g[j] = (fp - fm) / (2.0 * h);
    }
    g
}

/// `gradient` with one Richardson step per coordinate. Four evaluations per
/// coordinate instead of two, truncation h^4 instead of h^2; the choice for
/// gates tighter than plain central differences can certify.
pub fn gradient_rich<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h0: f64) -> Vec<f64> {
    let mut xs = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for j in 0..x.len() {
        let h = h0 * x[j].abs().max(1.0);
        let orig = xs[j];
        let mut central = |step: f64| {
            xs[j] = orig + step;
            let fp = f(&xs);
            xs[j] = orig - step;
            let fm = f(&xs);
            xs[j] = orig;
            (fp - fm) / (2.0 * step)
        };
        let coarse = central(h);
        let fine = central(h / 2.0);
        g[j] = (4.0 * fine - coarse) / 3.0;
    }
    g
}

/// True when a and b agree to `rel` relative tolerance, with `abs` as the floor
/// near zero. The standard comparator for all derivative checks in this crate.
pub fn agrees(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= abs.max(rel * a.abs().max(b.abs()))
}

/// Worst relative disagreement over a pair of slices, with the same near-zero floor.
pub fn max_mismatch(a: &[f64], b: &[f64], abs: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs() / abs.max(x.abs().max(y.abs())))
        .fold(0.0, f64::max)
}
