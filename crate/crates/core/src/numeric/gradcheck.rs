//! Finite-difference gradient oracle. Uses only forward evaluations, so it
//! stays independent of the tape's backward rules.

use crate::numeric::Tensor2;

/// Central difference `(f(x + eps) - f(x - eps)) / 2eps` for every entry of `x`.
pub fn central_difference(x: &Tensor2, eps: f64, mut f: impl FnMut(&Tensor2) -> f64) -> Tensor2 {
    let mut out = Tensor2::zeros(x.rows(), x.cols());
    let mut probe = x.clone();
    for k in 0..x.len() {
        let orig = probe.data()[k];
        probe.data_mut()[k] = orig + eps;
        let plus = f(&probe);
        probe.data_mut()[k] = orig - eps;
        let minus = f(&probe);
        probe.data_mut()[k] = orig;
        out.data_mut()[k] = (plus - minus) / (2.0 * eps);
    }
    out
}

/// Largest entrywise `|a - n| / max(|a|, |n|, floor)`; the floor keeps
/// entries whose true gradient is zero from dividing round-off by zero.
pub fn max_relative_error(analytic: &Tensor2, numeric: &Tensor2) -> f64 {
    const FLOOR: f64 = 1e-6;
    assert_eq!(analytic.shape(), numeric.shape());
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(FLOOR))
        .fold(0.0, f64::max)
}
