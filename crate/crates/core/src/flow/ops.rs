//! Pointwise rectified-flow primitives.

use crate::error::{check_len, Error, Result};

/// x_t = (1-t) x0 + t x1.
pub fn interpolate(x0: &[f64], x1: &[f64], t: f64) -> Result<Vec<f64>> {
    check_len("interpolate", x0.len(), x1.len())?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Input(format!("t must lie in [0,1], got {t}")));
    }
    Ok(x0
        .iter()
        .zip(x1.iter())
        .map(|(&a, &b)| (1.0 - t) * a + t * b)
        .collect())
}

/// Target velocity v = x1 - x0.
pub fn target_velocity(x0: &[f64], x1: &[f64]) -> Result<Vec<f64>> {
    check_len("target_velocity", x0.len(), x1.len())?;
    Ok(x0.iter().zip(x1.iter()).map(|(&a, &b)| b - a).collect())
}

/// Predicted terminal noise: x1_pred = x_t + (1-t) v_pred.
///
/// With the conditional velocity v = (x1 - x_t)/(1-t) this inverts exactly,
/// and the squared noise error equals (1-t)^2 times the squared velocity
/// error for any prediction.
pub fn predict_terminal_noise(x_t: &[f64], t: f64, v_pred: &[f64]) -> Result<Vec<f64>> {
    check_len("predict_terminal_noise", x_t.len(), v_pred.len())?;
    if t >= 1.0 {
        return Err(Error::Input(format!(
            "terminal-noise prediction requires t < 1, got {t}"
        )));
    }
    Ok(x_t
        .iter()
        .zip(v_pred.iter())
        .map(|(&x, &v)| x + (1.0 - t) * v)
        .collect())
}

/// Classifier-free guidance combination: v_uncond + s (v_cond - v_uncond).
pub fn cfg_velocity(v_cond: &[f64], v_uncond: &[f64], scale: f64) -> Result<Vec<f64>> {
    check_len("cfg_velocity", v_cond.len(), v_uncond.len())?;
    Ok(v_cond
        .iter()
        .zip(v_uncond.iter())
        .map(|(&c, &u)| u + scale * (c - u))
        .collect())
}

pub(crate) fn squared_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolate_endpoints_and_midpoint() {
        let x0 = [0.0, 0.0];
        let x1 = [2.0, 4.0];
        assert_eq!(interpolate(&x0, &x1, 0.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(interpolate(&x0, &x1, 1.0).unwrap(), vec![2.0, 4.0]);
        assert_eq!(interpolate(&x0, &x1, 0.5).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn target_velocity_is_antisymmetric() {
        let a = [1.0, 1.0];
        let b = [3.0, 0.0];
        assert_eq!(target_velocity(&a, &b).unwrap(), vec![2.0, -1.0]);
        assert_eq!(target_velocity(&b, &a).unwrap(), vec![-2.0, 1.0]);
        assert_eq!(target_velocity(&a, &a).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn terminal_noise_matches_lemma_instance() {
        // x0=0, x1=2, t=0.5 -> x_t=1; v_pred=3 -> x1_pred=2.5
        let x1_pred = predict_terminal_noise(&[1.0], 0.5, &[3.0]).unwrap();
        assert!((x1_pred[0] - 2.5).abs() < 1e-15);
        // noise error 0.25 equals (1-t)^2 * velocity error 0.25 * 1
        let noise_err = (2.0f64 - x1_pred[0]).powi(2);
        let vel_err = 0.25 * (2.0f64 - 3.0).powi(2);
        assert!((noise_err - vel_err).abs() < 1e-15);
    }

    #[test]
    fn exact_velocity_recovers_x1() {
        let x0 = [0.5, -1.0];
        let x1 = [2.0, 1.0];
        let t = 0.3;
        let x_t = interpolate(&x0, &x1, t).unwrap();
        let v = target_velocity(&x0, &x1).unwrap();
        let pred = predict_terminal_noise(&x_t, t, &v).unwrap();
        for (p, e) in pred.iter().zip(x1.iter()) {
            assert!((p - e).abs() < 1e-12);
        }
    }

    #[test]
    fn t_equal_one_is_a_domain_error() {
        assert!(predict_terminal_noise(&[0.0], 1.0, &[0.0]).is_err());
    }

    #[test]
    fn cfg_endpoints() {
        let c = [1.0, 0.0];
        let u = [0.0, 0.0];
        assert_eq!(cfg_velocity(&c, &u, 1.0).unwrap(), vec![1.0, 0.0]);
        assert_eq!(cfg_velocity(&c, &u, 0.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(cfg_velocity(&c, &u, 2.0).unwrap(), vec![2.0, 0.0]);
    }

    #[test]
    fn shape_mismatch_errors() {
        assert!(interpolate(&[0.0], &[0.0, 1.0], 0.5).is_err());
        assert!(cfg_velocity(&[0.0], &[0.0, 1.0], 1.0).is_err());
    }
}
