//! Gaussian tail function and its inverse.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * PI)
}

/// Standard normal CDF, `Phi(x)`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x) = erfc(x / sqrt 2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Inverse tail function: the `x` with `Q(x) = p`, for `p` in `(0, 1)`.
///
/// Newton iteration on `log Q(x) = log p`, which stays well scaled deep in the
/// tails, safeguarded by a shrinking bisection bracket and converged to a
/// relative step of 1e-14. Returns NaN outside `(0, 1)`.
pub fn q_inverse(p: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return f64::NAN;
    }
    if p > 0.5 {
        // 1 - p is exact here; solve in the well-conditioned upper tail.
        return -q_inverse(1.0 - p);
    }
    let log_p = libm::log(p);
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    let mut x = 0.0_f64;
    for _ in 0..400 {
        let q = q_function(x);
        let f = q - p;
        if f == 0.0 {
            return x;
        }
        // Q is decreasing: Q(x) > p means the root lies to the right.
        if f > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dens = normal_pdf(x);
        let mut next = x + (libm::log(q) - log_p) * q / dens;
        if !(dens > 0.0 && q > 0.0) || !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        let tol = 1e-14 * libm::fmax(1.0, libm::fabs(next));
        if libm::fabs(next - x) <= tol || hi - lo <= tol {
            return next;
        }
        x = next;
    }
    x
}

/// `x^k` by repeated multiplication (`f64::powi` needs `std`).
pub fn powi(x: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, _| acc * x)
}

/// Evaluates a polynomial with coefficients from the highest degree down.
#[inline]
fn horner(x: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Standard normal quantile `Phi^{-1}(p)` via Wichura's AS241 (PPND16),
/// relative accuracy about 1e-16. This is the sampling path; see
/// [`q_inverse`] for the iteration used in detector design.
pub fn normal_quantile(p: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return if p == 0.0 {
            f64::NEG_INFINITY
        } else if p == 1.0 {
            f64::INFINITY
        } else {
            f64::NAN
        };
    }
    let q = p - 0.5;
    if libm::fabs(q) <= 0.425 {
        let r = 0.180625 - q * q;
        let num = horner(
            r,
            &[
                2_509.080_928_730_122_7,
                33_430.575_583_588_128,
                67_265.770_927_008_7,
                45_921.953_931_549_87,
                13_731.693_765_509_461,
                1_971.590_950_306_551_4,
                133.141_667_891_784_38,
                3.387_132_872_796_366_5,
            ],
        );
        let den = horner(
            r,
            &[
                5_226.495_278_852_546,
                28_729.085_735_721_943,
                39_307.895_800_092_71,
                21_213.794_301_586_597,
                5_394.196_021_424_751,
                687.187_007_492_057_9,
                42.313_330_701_600_91,
                1.0,
            ],
        );
        return q * num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let r = libm::sqrt(-libm::log(tail));
    let val = if r <= 5.0 {
        let r = r - 1.6;
        let num = horner(
            r,
            &[
                7.745_450_142_783_414e-4,
                0.022_723_844_989_269_184,
                0.241_780_725_177_450_6,
                1.270_458_252_452_368_4,
                3.647_848_324_763_204_5,
                5.769_497_221_460_691,
                4.630_337_846_156_545,
                1.423_437_110_749_683_5,
            ],
        );
        let den = horner(
            r,
            &[
                1.050_750_071_644_416_9e-9,
                5.475_938_084_995_345e-4,
                0.015_198_666_563_616_457,
                0.148_103_976_427_480_08,
                0.689_767_334_985_1,
                1.676_384_830_183_803_8,
                2.053_191_626_637_759,
                1.0,
            ],
        );
        num / den
    } else {
        let r = r - 5.0;
        let num = horner(
            r,
            &[
                2.010_334_399_292_288e-7,
                2.711_555_568_743_487_6e-5,
                0.001_242_660_947_388_078_4,
                0.026_532_189_526_576_124,
                0.296_560_571_828_504_9,
                1.784_826_539_917_291_3,
                5.463_784_911_164_114,
                6.657_904_643_501_104,
            ],
        );
        let den = horner(
            r,
            &[
                2.044_263_103_389_939_7e-15,
                1.421_511_758_316_446e-7,
                1.846_318_317_510_054_8e-5,
                7.868_691_311_456_133e-4,
                0.014_875_361_290_850_615,
                0.136_929_880_922_735_8,
                0.599_832_206_555_888,
                1.0,
            ],
        );
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_reference_values() {
        assert_eq!(q_function(0.0), 0.5);
        // 2Q(2) = erfc(sqrt 2)
        assert!((2.0 * q_function(2.0) - 0.045_500_263_896_358_41).abs() < 1e-15);
        assert!((q_function(1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((q_function(-1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
    }

    #[test]
    fn q_inverse_round_trips_across_decades() {
        for &p in &[
            1e-12, 1e-8, 1e-4, 0.01, 0.025, 0.2, 0.25, 0.475, 0.5, 0.6, 0.9, 0.999,
        ] {
            let x = q_inverse(p);
            let back = q_function(x);
            assert!(
                ((back - p) / p).abs() < 1e-12,
                "p = {p}: Q(Q^-1(p)) = {back}"
            );
        }
        assert_eq!(q_inverse(0.5), 0.0);
        assert!(q_inverse(0.0).is_nan());
        assert!(q_inverse(1.0).is_nan());
    }

    #[test]
    fn quantile_agrees_with_q_inverse() {
        // Two independent routes: rational approximation vs root finding.
        for i in 1..200 {
            let p = i as f64 / 200.0;
            let a = normal_quantile(p);
            let b = -q_inverse(p);
            assert!((a - b).abs() < 1e-12, "p = {p}: {a} vs {b}");
        }
        for &p in &[1e-300, 1e-20, 1e-9, 1.0 - 1e-9] {
            let a = normal_quantile(p);
            let b = -q_inverse(p);
            assert!(
                (a - b).abs() < 1e-9 * a.abs().max(1.0),
                "p = {p}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let back = normal_cdf(normal_quantile(p));
            assert!((back - p).abs() < 1e-15, "p = {p}");
        }
    }
}
