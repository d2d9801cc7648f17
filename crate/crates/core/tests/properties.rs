use chaosrand::entropy::{MixEntropy, MixMode};
use chaosrand::lfsr::{LfsrConfig, MultiLfsr};
use chaosrand::logistic::{LogisticConfig, LogisticGenerator};
use chaosrand::pendulum::{
    pendulum_step, Method, PendulumConfig, PendulumGenerator, PendulumParams, PendulumState,
    ANGLE_FORMAT,
};
use chaosrand::stats::histogram;
use proptest::prelude::*;

fn mode(xor: bool) -> MixMode {
    if xor {
        MixMode::XorState
    } else {
        MixMode::PerturbValue
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn logistic_state_stays_inside_unit_interval(
        r_raw in 1_916_669_133i64..=2_147_483_648,
        x0 in 1u32..,
    ) {
        let Ok(config) = LogisticConfig::from_raw(r_raw, x0, 0, 8) else {
            return Ok(());
        };
        let mut g = LogisticGenerator::new(config);
        for _ in 0..20_000 {
            g.step();
            prop_assert!(g.state_raw() != 0);
            prop_assert!(g.x_f64() > 0.0 && g.x_f64() < 1.0);
        }
    }

    #[test]
    fn reseeding_preserves_generator_invariants(
        words in proptest::collection::vec(any::<u32>(), 1..40),
        modes in proptest::collection::vec(any::<bool>(), 40),
    ) {
        let mut bank = MultiLfsr::default_bank();
        let mut logistic = LogisticGenerator::ready(LogisticConfig::default());
        let mut pendulum = PendulumGenerator::ready(PendulumConfig::default()).unwrap();
        let pi = ANGLE_FORMAT.pi_raw();
        for (w, &xor) in words.iter().zip(&modes) {
            bank.mix_entropy(*w, mode(xor));
            logistic.mix_entropy(*w, mode(xor));
            pendulum.mix_entropy(*w, mode(xor));
            for _ in 0..8 {
                bank.next_byte();
                logistic.extract_bits().unwrap();
                pendulum.extract_bits().unwrap();
            }
            prop_assert!(bank.registers().iter().all(|&r| r != 0));
            prop_assert!(logistic.state_raw() != 0);
            let s = pendulum.state();
            prop_assert!((-pi..pi).contains(&s.theta1) && (-pi..pi).contains(&s.theta2));
            prop_assert!(s.to_state().validate().is_ok());
        }
    }
}

#[test]
fn rk4_trajectories_separate_from_nanoradian_offsets() {
    let params = PendulumParams::default();
    let mut a = PendulumState::new(2.0, 1.0, 0.0, 0.0).unwrap();
    let mut b = PendulumState::new(2.0 + 1e-9, 1.0, 0.0, 0.0).unwrap();
    let h = 1e-3;
    let mut separated_at = None;
    for step in 1..=20_000 {
        a = pendulum_step(&a, &params, h, Method::Rk4).unwrap();
        b = pendulum_step(&b, &params, h, Method::Rk4).unwrap();
        if (a.theta1 - b.theta1).abs() > 0.1 {
            separated_at = Some(step as f64 * h);
            break;
        }
    }
    assert!(separated_at.is_some_and(|t| t <= 20.0), "{separated_at:?}");
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn coprime_widths_multiply_periods() {
    for a in 3..=12u32 {
        for b in (a + 1)..=12 {
            if gcd(a, b) != 1 {
                continue;
            }
            let configs = [
                LfsrConfig::with_builtin_polynomial(a, 1).unwrap(),
                LfsrConfig::with_builtin_polynomial(b, 1).unwrap(),
            ];
            let bank = MultiLfsr::new(&configs).unwrap();
            let want = ((1u64 << a) - 1) * ((1u64 << b) - 1);
            assert_eq!(bank.joint_period(want + 1), Some(want), "widths {a}, {b}");
            assert_eq!(bank.nominal_period(), want as u128);
        }
    }
}

#[test]
fn clt_histogram_peaks_at_zero() {
    let mut g = LogisticGenerator::ready(LogisticConfig::default());
    let samples: Vec<f64> = (0..100_000).map(|_| g.clt_gaussian(12).unwrap()).collect();
    let h = histogram(&samples, 50).unwrap();
    assert_eq!(h.total(), samples.len() as u64);
    let width = h.bin_center(1) - h.bin_center(0);
    assert!(
        h.bin_center(h.modal_bin()).abs() <= 1.5 * width,
        "mode at {}",
        h.bin_center(h.modal_bin())
    );
}
