//! Central finite-difference verification of analytic gradients.

use crate::error::{check_len, Error, Result};

/// Compares `analytic_grad` against central finite differences of `f` at `x`.
///
/// Returns the worst relative error, with the denominator floored at `1e-4`
/// so that near-zero gradient components are compared absolutely.
pub fn finite_diff_check(
    f: impl Fn(&[f64]) -> f64,
    analytic_grad: &[f64],
    x: &[f64],
    h: f64,
) -> Result<f64> {
    if h <= 0.0 {
        return Err(Error::Config(format!("step h must be positive, got {h}")));
    }
    check_len("finite-diff gradient", x.len(), analytic_grad.len())?;
    let fx = f(x);
    if !fx.is_finite() {
        return Err(Error::Numeric(format!("f(x) is not finite: {fx}")));
    }
    let mut worst = 0.0f64;
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let fp = f(&probe);
        probe[i] = orig - h;
        let fm = f(&probe);
        probe[i] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite probe value at coordinate {i}"
            )));
        }
        let numeric = (fp - fm) / (2.0 * h);
        let err = rel_err(analytic_grad[i], numeric);
        if err > worst {
            worst = err;
        }
    }
    Ok(worst)
}

/// `|a - b| / max(|a|, |b|, 1e-4)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}
