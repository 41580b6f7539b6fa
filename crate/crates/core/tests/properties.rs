use covertctl_core::analysis::{
    gain_change_kl, gaussian_kl, reset_kl, stationary_inverse, stationary_logdet, trace_ratio_ss,
};
use covertctl_core::detectors::{gaussian_lrt_decide, reset_quadratic_statistic};
use covertctl_core::linalg::Matrix;
use covertctl_core::{
    reset_covariance, simulate, state_covariance, stationary_covariance, ControllerSpec, CovMatrix,
    DetectorSpec, NoiseModel, SystemParams,
};
use proptest::prelude::*;

fn stable_gain() -> impl Strategy<Value = f64> {
    prop_oneof![-0.95f64..-0.05, 0.05f64..0.95]
}

fn any_gain() -> impl Strategy<Value = f64> {
    prop_oneof![-1.5f64..-1.01, -0.99f64..0.99, 1.01f64..1.5]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariances_are_positive_definite(
        a in any_gain(),
        s0 in 0.0f64..2.0,
        n in 1usize..12,
        ys in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 12), 8),
    ) {
        let p = SystemParams::new(a, NoiseModel::gaussian(1.0).unwrap(), s0).unwrap();
        let c = state_covariance(&p, n).unwrap();
        prop_assert!(c.cholesky().is_ok());
        for y in &ys {
            let y = &y[..n];
            if y.iter().any(|v| *v != 0.0) {
                prop_assert!(c.quad_form(y).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn stationary_start_reproduces_toeplitz(a in stable_gain(), s in 0.2f64..3.0, n in 1usize..30) {
        let p = SystemParams::stationary(a, NoiseModel::gaussian(s).unwrap()).unwrap();
        let c = state_covariance(&p, n).unwrap();
        let t = stationary_covariance(a, s, n).unwrap();
        let scale = t.get(0, 0);
        prop_assert!(c.max_abs_diff(&t) <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn inverse_and_logdet_agree_with_dense(a in stable_gain(), s in 0.3f64..2.0, n in 1usize..40) {
        let c = stationary_covariance(a, s, n).unwrap();
        let inv = stationary_inverse(a, s, n).unwrap();
        let prod = inv.to_matrix().matmul(&c.to_matrix()).unwrap();
        prop_assert!(prod.max_abs_diff(&Matrix::identity(n)) < 1e-10);
        let ld = c.cholesky().unwrap().log_det();
        prop_assert!((ld - stationary_logdet(a, s, n).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn kl_is_nonnegative_and_zero_on_equal(a in stable_gain(), b in stable_gain(), n in 1usize..20) {
        let kl = gain_change_kl(a, b, n).unwrap();
        prop_assert!(kl >= 0.0);
        let c = stationary_covariance(a, 1.0, n).unwrap();
        let mu = vec![0.0; n];
        prop_assert!(gaussian_kl(&mu, &c, &mu, &c).unwrap().abs() < 1e-12);
    }

    #[test]
    fn window_identity_holds(a in 0.05f64..0.9, gap in 0.01f64..0.09, n in 1usize..200) {
        let b = (a + gap).min(0.99);
        let below = trace_ratio_ss(a, b, n).unwrap() - n as f64;
        let window = 2.0 * b / (b - a);
        // strict sides only; the tie has measure zero over continuous draws
        if (n as f64) < window - 1e-9 {
            prop_assert!(below < 0.0);
        } else if (n as f64) > window + 1e-9 {
            prop_assert!(below > 0.0);
        }
    }

    #[test]
    fn reset_kl_is_tau_invariant(a in stable_gain(), n in 2usize..12, tau_frac in 0.0f64..1.0) {
        let tau = 1 + ((n - 1) as f64 * tau_frac) as usize;
        let tau = tau.min(n - 1);
        let s = stationary_covariance(a, 1.0, n).unwrap();
        let r = reset_covariance(a, 1.0, n, tau).unwrap();
        let mu = vec![0.0; n];
        let kl = gaussian_kl(&mu, &s, &mu, &r).unwrap();
        prop_assert!((kl - reset_kl(a).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn lrt_swap_negates(a in stable_gain(), b in stable_gain(), x in prop::collection::vec(-3.0f64..3.0, 5)) {
        let c0 = stationary_covariance(a, 1.0, 5).unwrap();
        let c1 = stationary_covariance(b, 1.0, 5).unwrap();
        let fwd = DetectorSpec::GaussianLrt { cov0: c0.clone(), cov1: c1.clone(), log_threshold: 0.0 };
        let rev = DetectorSpec::GaussianLrt { cov0: c1, cov1: c0, log_threshold: 0.0 };
        let s = gaussian_lrt_decide(&x, &fwd).unwrap().statistic;
        let r = gaussian_lrt_decide(&x, &rev).unwrap().statistic;
        prop_assert_eq!(s, -r);
    }

    #[test]
    fn quadratic_statistic_is_dense_difference(
        a in stable_gain(),
        n in 2usize..20,
        tau_frac in 0.0f64..1.0,
        x in prop::collection::vec(-3.0f64..3.0, 20),
    ) {
        let tau = (1 + ((n - 1) as f64 * tau_frac) as usize).min(n - 1);
        let x = &x[..n];
        let i0 = stationary_covariance(a, 1.0, n).unwrap().cholesky().unwrap().inverse();
        let i1 = reset_covariance(a, 1.0, n, tau).unwrap().cholesky().unwrap().inverse();
        let diff = CovMatrix::from_matrix_symmetrized(&Matrix::from_fn(n, n, |i, j| i0.get(i, j) - i1.get(i, j))).unwrap();
        let dense = diff.quad_form(x).unwrap();
        let t = reset_quadratic_statistic(x, a, 1.0, tau).unwrap();
        prop_assert!((t - dense).abs() < 1e-9, "{} vs {}", t, dense);
    }

    #[test]
    fn replay_is_deterministic(a in any_gain(), seed in any::<u64>(), n in 1usize..60) {
        let p = SystemParams::new(a, NoiseModel::gaussian(1.0).unwrap(), 1.0).unwrap();
        let x = simulate(&p, &ControllerSpec::None, n, seed).unwrap();
        let y = simulate(&p, &ControllerSpec::None, n, seed).unwrap();
        prop_assert_eq!(&x, &y);
        prop_assert_eq!(x.states.len(), x.controls.len());
    }
}
