//! Property tests for the crate's structural invariants.

use proptest::prelude::*;

use flowalign_core::flow::{interpolate, predict_terminal_noise, target_velocity};
use flowalign_core::netcore::{
    read_net, write_net, Activation, Net, NetSpec,
};
use flowalign_core::reward::btt_prob;
use flowalign_core::toyworld::wrap_angle;

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0f64..10.0, 3)
}

proptest! {
    #[test]
    fn lemma_identity_holds_for_random_tuples(
        x0 in vec3(),
        x1 in vec3(),
        v_pred in vec3(),
        t in 0.0f64..0.999,
    ) {
        let x_t = interpolate(&x0, &x1, t).unwrap();
        let v = target_velocity(&x0, &x1).unwrap();
        let x1_pred = predict_terminal_noise(&x_t, t, &v_pred).unwrap();
        let noise_err: f64 = x1.iter().zip(x1_pred.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        let vel_err: f64 = v.iter().zip(v_pred.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        let rhs = (1.0 - t) * (1.0 - t) * vel_err;
        let scale = noise_err.abs().max(rhs.abs()).max(1e-300);
        prop_assert!(((noise_err - rhs) / scale).abs() < 1e-12);
    }

    #[test]
    fn interpolation_stays_between_endpoints(
        a in -100.0f64..100.0,
        b in -100.0f64..100.0,
        t in 0.0f64..=1.0,
    ) {
        let x = interpolate(&[a], &[b], t).unwrap()[0];
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(x >= lo - 1e-12 && x <= hi + 1e-12);
    }

    #[test]
    fn btt_components_are_a_distribution(
        ra in -50.0f64..50.0,
        rb in -50.0f64..50.0,
        theta in 1.001f64..100.0,
    ) {
        let p = btt_prob(ra, rb, theta).unwrap();
        prop_assert!(p.p_a > 0.0 && p.p_a < 1.0);
        prop_assert!(p.p_b > 0.0 && p.p_b < 1.0);
        prop_assert!(p.p_tie > 0.0 && p.p_tie < 1.0);
        prop_assert!((p.p_a + p.p_b + p.p_tie - 1.0).abs() < 1e-9);
    }

    #[test]
    fn wrapped_angles_land_in_the_half_open_interval(a in -50.0f64..50.0) {
        let w = wrap_angle(a);
        prop_assert!(w > -std::f64::consts::PI - 1e-12);
        prop_assert!(w <= std::f64::consts::PI + 1e-12);
        // wrapping is idempotent
        prop_assert!((wrap_angle(w) - w).abs() < 1e-9);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact(
        seed in 0u64..1000,
        w1 in 1usize..6,
        w2 in 1usize..6,
    ) {
        let net = Net::init(NetSpec::new(vec![2, w1, w2, 1], Activation::Silu, seed)).unwrap();
        let mut buf = Vec::new();
        write_net(&mut buf, &net).unwrap();
        let back = read_net(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(back.spec(), net.spec());
        let bits_a: Vec<u64> = net.params().iter().map(|p| p.to_bits()).collect();
        let bits_b: Vec<u64> = back.params().iter().map(|p| p.to_bits()).collect();
        prop_assert_eq!(bits_a, bits_b);
    }
}
