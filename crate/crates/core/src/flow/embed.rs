//! Input featurizations shared by the conditioned nets.

/// Number of sinusoidal time features (4 frequencies, sin and cos each).
pub const TIME_FEATURES: usize = 8;

/// Maps scalar t through sin/cos at frequencies pi * 2^k, k = 0..4.
pub fn time_embedding(t: f64) -> [f64; TIME_FEATURES] {
    let mut out = [0.0; TIME_FEATURES];
    for k in 0..4 {
        let angle = t * std::f64::consts::PI * (1 << k) as f64;
        out[2 * k] = angle.sin();
        out[2 * k + 1] = angle.cos();
    }
    out
}

/// Writes a one-hot class vector into `out` (zeroing it first).
pub fn one_hot_into(class: usize, out: &mut [f64]) {
    out.fill(0.0);
    out[class] = 1.0;
}

/// Angular class embedding (cos, sin of the class target angle).
///
/// Used by the reward nets so that scores generalize across held-out
/// condition classes; the target angle for class `c` of `k` is `2 pi c / k`.
pub fn angular_embedding(class: usize, n_classes: usize) -> [f64; 2] {
    let angle = 2.0 * std::f64::consts::PI * class as f64 / n_classes as f64;
    [angle.cos(), angle.sin()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_embedding_at_zero() {
        let e = time_embedding(0.0);
        for k in 0..4 {
            assert_eq!(e[2 * k], 0.0);
            assert_eq!(e[2 * k + 1], 1.0);
        }
    }

    #[test]
    fn one_hot_sets_single_position() {
        let mut buf = vec![9.0; 4];
        one_hot_into(2, &mut buf);
        assert_eq!(buf, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn angular_embedding_is_on_unit_circle() {
        for c in 0..16 {
            let [x, y] = angular_embedding(c, 16);
            assert!((x * x + y * y - 1.0).abs() < 1e-12);
        }
    }
}
