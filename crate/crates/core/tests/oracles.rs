//! Closed forms checked against independent constructions: direct
//! accumulation of the state representation, dense matrix products and
//! Monte Carlo sample moments.

use covertctl_core::controllers::{one_bit_energy_bounds, one_bit_fixed_point, one_bit_gain};
use covertctl_core::detectors::innovation_energy_decide;
use covertctl_core::linalg::Matrix;
use covertctl_core::{
    analysis, reset_covariance, simulate, simulate_stream, state_covariance, stationary_covariance,
    trajectory_covariance, ControllerSpec, CovMatrix, NoiseModel, SampleStream, SystemParams,
};

fn gaussian(s: f64) -> NoiseModel {
    NoiseModel::gaussian(s).unwrap()
}

/// `X_n = a^n X_0 + sum_k a^{n-k} Z_k`, summed term by term from replayed draws.
#[test]
fn uncontrolled_path_matches_accumulated_representation() {
    for (a, n) in [
        (0.5, 100),
        (0.5, 200),
        (-0.9, 200),
        (1.0, 200),
        (1.2, 150),
        (-1.5, 80),
    ] {
        let p = SystemParams::new(a, gaussian(1.0), 1.0)
            .unwrap()
            .with_max_horizon(200);
        let seed = 7;
        let traj = simulate(&p, &ControllerSpec::None, n, seed).unwrap();

        let mut s = SampleStream::keyed(seed, 0);
        let x0 = s.standard_normal();
        let z: Vec<f64> = (0..n).map(|_| p.noise.sample(&mut s)).collect();
        assert_eq!(traj.initial_state, x0);

        for m in 1..=n {
            let mut terms = vec![a.powi(m as i32) * x0];
            for k in 1..=m {
                terms.push(a.powi((m - k) as i32) * z[k - 1]);
            }
            let value: f64 = terms.iter().sum();
            let scale: f64 = 1.0 + terms.iter().map(|t| t.abs()).sum::<f64>();
            let err = (traj.states[m - 1] - value).abs();
            assert!(
                err < 1e-9 * scale,
                "a = {a}, n = {m}: err {err}, scale {scale}"
            );
        }
    }
}

fn dense_product_covariance(a: f64, s: f64, s0: f64, n: usize) -> Matrix {
    let lower = Matrix::from_fn(
        n,
        n,
        |i, j| if i >= j { a.powi((i - j) as i32) } else { 0.0 },
    );
    let at = Matrix::from_fn(n, 1, |i, _| a.powi(i as i32 + 1));
    let aat = lower.matmul(&lower.transpose()).unwrap();
    let tt = at.matmul(&at.transpose()).unwrap();
    Matrix::from_fn(n, n, |i, j| s * aat.get(i, j) + s0 * tt.get(i, j))
}

#[test]
fn closed_form_matches_matrix_product() {
    for &(a, s0, n) in &[
        (1.5, 0.2, 6),
        (0.7, 0.0, 12),
        (-0.4, 2.0, 9),
        (-1.2, 0.5, 10),
    ] {
        let p = SystemParams::new(a, gaussian(1.3), s0).unwrap();
        let c = state_covariance(&p, n).unwrap();
        let d = dense_product_covariance(a, 1.69, s0, n);
        for i in 0..n {
            for j in 0..n {
                let scale = d.get(i, j).abs().max(1.0);
                assert!((c.get(i, j) - d.get(i, j)).abs() < 1e-12 * scale);
            }
        }
    }
}

/// Sample second moments of `(X_1..X_n)` and the standard error of each,
/// assuming zero mean and Gaussian fourth moments.
fn check_against_monte_carlo(
    params: &SystemParams,
    controller: &ControllerSpec,
    expect: &CovMatrix,
    trials: u64,
    seed: u64,
) {
    let n = expect.dim();
    let mut acc = vec![0.0; n * n];
    for t in 0..trials {
        let mut s = SampleStream::keyed(seed, t);
        let traj = simulate_stream(params, controller, n, &mut s).unwrap();
        for i in 0..n {
            for j in i..n {
                acc[i * n + j] += traj.states[i] * traj.states[j];
            }
        }
    }
    let tn = trials as f64;
    for i in 0..n {
        for j in i..n {
            let est = acc[i * n + j] / tn;
            let truth = expect.get(i, j);
            let var = expect.get(i, i) * expect.get(j, j) + truth * truth;
            let se = (var / tn).sqrt();
            assert!(
                (est - truth).abs() < 5.0 * se,
                "{}: entry ({i},{j}) est {est} vs {truth}, se {se}",
                controller.name()
            );
        }
    }
}

#[test]
fn uncontrolled_covariance_matches_monte_carlo() {
    let cases = [
        SystemParams::new(0.5, gaussian(1.0), 0.0).unwrap(),
        SystemParams::stationary(-0.8, gaussian(0.7)).unwrap(),
        SystemParams::new(1.2, gaussian(1.0), 0.5).unwrap(),
        SystemParams::new(-1.5, gaussian(1.0), 0.0).unwrap(),
    ];
    for (k, p) in cases.iter().enumerate() {
        let c = state_covariance(p, 4).unwrap();
        check_against_monte_carlo(p, &ControllerSpec::None, &c, 1_000_000, 100 + k as u64);
    }
}

#[test]
fn gain_change_loop_has_stationary_law_in_b() {
    let p = SystemParams::stationary(0.5, gaussian(1.0)).unwrap();
    let ctrl = ControllerSpec::GainChange { b: 0.7 };
    let c = stationary_covariance(0.7, 1.0, 5).unwrap();
    assert!(
        trajectory_covariance(&p, &ctrl, 5)
            .unwrap()
            .max_abs_diff(&c)
            < 1e-12
    );
    check_against_monte_carlo(&p, &ctrl, &c, 100_000, 3);
}

#[test]
fn gain_change_lag_one_autocorrelation_is_b() {
    let p = SystemParams::stationary(0.3, gaussian(1.0)).unwrap();
    let b = 0.6;
    let n = 200_000;
    let traj = simulate(&p, &ControllerSpec::GainChange { b }, n, 17).unwrap();
    let x = &traj.states;
    let num: f64 = x.windows(2).map(|w| w[0] * w[1]).sum();
    let den: f64 = x.iter().map(|v| v * v).sum();
    let rho = num / den;
    // asymptotic variance of the lag-1 sample autocorrelation of an AR(1)
    let se = ((1.0 - b * b) / n as f64).sqrt();
    assert!((rho - b).abs() < 5.0 * se, "rho {rho}");
}

#[test]
fn single_reset_matches_block_covariance() {
    let p = SystemParams::stationary(0.7, gaussian(1.0)).unwrap();
    let ctrl = ControllerSpec::ResetOnce { tau: 3 };
    let c = reset_covariance(0.7, 1.0, 6, 3).unwrap();
    assert_eq!(trajectory_covariance(&p, &ctrl, 6).unwrap(), c);
    check_against_monte_carlo(&p, &ctrl, &c, 100_000, 4);
}

#[test]
fn one_bit_state_stays_bounded() {
    for a in [0.5, 1.0, 1.5] {
        let b = 1.0;
        let c1 = one_bit_fixed_point(a, b);
        let p = SystemParams::new(a, NoiseModel::uniform(b).unwrap(), 0.0)
            .unwrap()
            .with_max_horizon(10_000);
        for seed in 0..100 {
            let t = simulate(&p, &ControllerSpec::OneBit { c1, bound_b: b }, 10_000, seed).unwrap();
            assert!(
                t.states.iter().all(|x| x.abs() <= c1 + b),
                "a = {a}, seed {seed}"
            );
        }
    }
}

#[test]
fn one_bit_gain_decreases_to_fixed_point() {
    for a in [0.25, 0.5, 1.0, 1.5] {
        let fixed = one_bit_fixed_point(a, 1.0);
        let c1 = fixed + 3.0;
        let mut prev = f64::INFINITY;
        for n in 1..=200 {
            let c = one_bit_gain(n, c1, 1.0, a).unwrap();
            assert!(c <= prev);
            prev = c;
        }
        assert!((prev - fixed).abs() < 1e-10, "a = {a}");
    }
}

#[test]
fn one_bit_energy_within_bounds() {
    for (a, extra) in [(0.5, 0.0), (1.0, 2.0), (1.5, 0.5)] {
        let c1 = one_bit_fixed_point(a, 1.0) + extra;
        let bounds = one_bit_energy_bounds(c1, 1.0, a).unwrap();
        let p = SystemParams::new(a, NoiseModel::uniform(1.0).unwrap(), 0.0)
            .unwrap()
            .with_max_horizon(10_000);
        let t = simulate(&p, &ControllerSpec::OneBit { c1, bound_b: 1.0 }, 10_000, 9).unwrap();
        let e = t.controls.iter().map(|u| u * u).sum::<f64>() / t.controls.len() as f64;
        // rounding slack only: U_n^2 sits exactly on the bounds at the fixed point
        let slack = 1e-12 * bounds.upper;
        assert!(
            bounds.lower - slack <= e && e <= bounds.upper + slack,
            "a = {a}: {e}"
        );
        if extra == 0.0 {
            assert!((e - bounds.lower).abs() < 1e-6);
        }
    }
}

#[test]
fn innovation_energy_concentrates() {
    let k = 10_000;
    // H0: Gaussian plant, mean sigma^2, variance (m4 - sigma^4) / K
    let p = SystemParams::stationary(0.9, gaussian(1.0)).unwrap();
    let t = simulate(&p, &ControllerSpec::None, k + 1, 21).unwrap();
    let d = innovation_energy_decide(&t.states, 0.9, 1.0, 0.1).unwrap();
    let se = (2.0 / k as f64).sqrt();
    assert!((d.statistic - 1.0).abs() < 5.0 * se, "{}", d.statistic);

    // H1: one-bit control at its fixed point on uniform noise, mean sigma^2 + E_U
    let noise = NoiseModel::uniform(1.0).unwrap();
    let (a, b) = (0.9, 1.0);
    let c1 = one_bit_fixed_point(a, b);
    let e_u = one_bit_energy_bounds(c1, b, a).unwrap().steady_state;
    let p = SystemParams::new(a, noise, 0.0).unwrap();
    let t = simulate(&p, &ControllerSpec::OneBit { c1, bound_b: b }, k + 1, 22).unwrap();
    let d = innovation_energy_decide(&t.states, a, noise.std_dev(), 0.1).unwrap();
    let y2: Vec<f64> = t
        .states
        .windows(2)
        .map(|w| (w[1] - a * w[0]).powi(2))
        .collect();
    let mean = y2.iter().sum::<f64>() / k as f64;
    let var = y2.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k as f64 - 1.0);
    let se = (var / k as f64).sqrt();
    let target = noise.variance() + e_u;
    assert!(
        (d.statistic - target).abs() < 5.0 * se,
        "{} vs {target}",
        d.statistic
    );
}

#[test]
fn kl_matches_sampled_log_ratio() {
    let c0 = CovMatrix::from_row_major(2, vec![1.0, 0.3, 0.3, 2.0]).unwrap();
    let c1 = CovMatrix::from_row_major(2, vec![1.5, -0.2, -0.2, 1.0]).unwrap();
    let mu0 = [0.2, -0.1];
    let mu1 = [0.0, 0.4];
    let kl = analysis::gaussian_kl(&mu0, &c0, &mu1, &c1).unwrap();

    let l0 = c0.cholesky().unwrap();
    let l1 = c1.cholesky().unwrap();
    let mut s = SampleStream::keyed(5, 0);
    let n = 200_000;
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..n {
        let z = [s.standard_normal(), s.standard_normal()];
        let dx = l0.mul_lower(&z).unwrap();
        let x = [mu0[0] + dx[0], mu0[1] + dx[1]];
        let r1 = [x[0] - mu1[0], x[1] - mu1[1]];
        let log_ratio = 0.5 * (l1.inv_quad_form(&r1).unwrap() - (z[0] * z[0] + z[1] * z[1]))
            + 0.5 * (l1.log_det() - l0.log_det());
        sum += log_ratio;
        sum2 += log_ratio * log_ratio;
    }
    let mean = sum / n as f64;
    let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - kl).abs() < 5.0 * se, "{mean} vs {kl}");
}
