//! Special functions: the two-parameter Mittag-Leffler function and the
//! distribution of one-sided stable laws.

use std::f64::consts::PI;

use crate::math::{gamma, ln_gamma};

use crate::error::{HawkesError, Result};
use crate::quad;

/// Reciprocal gamma function, finite everywhere (zero at the poles of Γ).
pub fn rgamma(x: f64) -> f64 {
    if x > 0.0 {
        if x > 170.0 {
            (-ln_gamma(x)).exp()
        } else {
            1.0 / gamma(x)
        }
    } else if x == x.floor() {
        0.0
    } else {
        // reflection: 1/Γ(x) = sin(πx) Γ(1-x) / π
        let s = (PI * x).sin();
        let lg = ln_gamma(1.0 - x);
        s * (lg - PI.ln()).exp()
    }
}

/// Threshold below which the power series is used for negative arguments.
const SERIES_NEGATIVE_LIMIT: f64 = 1.0;
/// Relative size of the smallest asymptotic term required to accept the
/// asymptotic expansion.
const ASYMPTOTIC_ACCEPT: f64 = 1e-15;

/// Two-parameter Mittag-Leffler function `E_{α,κ}(x) = Σ x^k / Γ(κ + kα)`.
///
/// Evaluation strategy for `0 < α < 1`:
/// * `x ≥ -1`: power series with compensated summation;
/// * `x < -1`: the asymptotic expansion `-Σ x^{-k}/Γ(κ-kα)` truncated at its
///   smallest term when that term is below `1e-15` relative; otherwise the
///   real-line integral obtained by collapsing the Hankel contour of the
///   Laplace-inversion representation onto the negative axis.
///
/// `α = 1, κ = 1` is `exp`; other `α = 1` cases use the series.
pub fn ml_function(alpha: f64, kappa: f64, x: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(HawkesError::InvalidParameter(format!(
            "Mittag-Leffler index alpha={alpha} outside (0, 1]"
        )));
    }
    if !(kappa > 0.0) {
        return Err(HawkesError::InvalidParameter(format!(
            "Mittag-Leffler parameter kappa={kappa} must be positive"
        )));
    }
    if x.is_nan() {
        return Err(HawkesError::Numeric(
            "Mittag-Leffler argument is NaN".into(),
        ));
    }
    if x == 0.0 {
        return Ok(rgamma(kappa));
    }
    if alpha == 1.0 {
        if kappa == 1.0 {
            return Ok(x.exp());
        }
        return ml_series(alpha, kappa, x);
    }
    if x > -SERIES_NEGATIVE_LIMIT {
        return ml_series(alpha, kappa, x);
    }
    if x == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if let Some(v) = ml_asymptotic(alpha, kappa, x) {
        return Ok(v);
    }
    ml_negative_integral(alpha, kappa, x)
}

fn ml_series(alpha: f64, kappa: f64, x: f64) -> Result<f64> {
    let lx = x.abs().ln();
    let negative = x < 0.0;
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut small_run = 0;
    let mut prev_mag = f64::INFINITY;
    for k in 0..50_000usize {
        let kf = k as f64;
        let lt = kf * lx - ln_gamma(kappa + kf * alpha);
        let mag = lt.exp();
        if !mag.is_finite() {
            return Err(HawkesError::Numeric(format!(
                "Mittag-Leffler series overflow at term {k} (alpha={alpha}, kappa={kappa}, x={x})"
            )));
        }
        let term = if negative && k % 2 == 1 { -mag } else { mag };
        // Kahan-Babuska summation
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        let total = (sum + comp).abs();
        if mag <= prev_mag && mag <= 1e-17 * total.max(f64::MIN_POSITIVE) {
            small_run += 1;
            if small_run >= 3 {
                return Ok(sum + comp);
            }
        } else {
            small_run = 0;
        }
        if mag == 0.0 && k > 0 {
            return Ok(sum + comp);
        }
        prev_mag = mag;
    }
    Err(HawkesError::Numeric(format!(
        "Mittag-Leffler series did not converge (alpha={alpha}, kappa={kappa}, x={x})"
    )))
}

fn ml_asymptotic(alpha: f64, kappa: f64, x: f64) -> Option<f64> {
    debug_assert!(x < 0.0);
    let ly = (-x).ln();
    let mut sum = 0.0f64;
    let mut prev_env = f64::INFINITY;
    for k in 1..400usize {
        let kf = k as f64;
        let arg = kappa - kf * alpha;
        // envelope of |1/Γ(arg)|, insensitive to nearby poles
        let lenv = -kf * ly
            + if arg > 0.0 {
                -ln_gamma(arg)
            } else {
                ln_gamma(1.0 - arg) - PI.ln()
            };
        let env = lenv.exp();
        if env > prev_env {
            // terms started growing: the last envelope bounds the error
            return if prev_env <= ASYMPTOTIC_ACCEPT * sum.abs() {
                Some(sum)
            } else {
                None
            };
        }
        // -x^{-k} / Γ(arg), with x^{-k} = (-1)^k y^{-k}
        let sign_x = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += -sign_x * (-kf * ly).exp() * rgamma(arg);
        prev_env = env;
        if env <= ASYMPTOTIC_ACCEPT * 1e-3 * sum.abs() {
            return Some(sum);
        }
    }
    None
}

fn ml_negative_integral(alpha: f64, kappa: f64, x: f64) -> Result<f64> {
    // lower kappa into (.., 1 + alpha) via E_{a,k}(x) = (E_{a,k-a}(x) - 1/Γ(k-a)) / x
    if kappa >= 1.0 + alpha {
        let lower = ml_function(alpha, kappa - alpha, x)?;
        return Ok((lower - rgamma(kappa - alpha)) / x);
    }
    let y = -x;
    let p = alpha - kappa + 1.0;
    let sk = (PI * kappa).sin();
    let ska = (PI * (kappa - alpha)).sin();
    let ca = (PI * alpha).cos();
    let integrand = |u: f64| -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let r = u.powf(1.0 / p);
        let ra = r.powf(alpha);
        let num = ra * sk + y * ska;
        let den = ra * ra + 2.0 * y * ra * ca + y * y;
        (-r).exp() * num / den / p
    };
    let r0 = y.powf(1.0 / alpha);
    let tail = 60.0;
    let mut pieces = Vec::with_capacity(2);
    if r0 < tail {
        pieces.push((0.0, r0.powf(p)));
        pieces.push((r0.powf(p), (r0 + tail).powf(p)));
    } else {
        pieces.push((0.0, tail.powf(p)));
    }
    let mut value = 0.0;
    let mut err = 0.0;
    let mut ok = true;
    for (a, b) in pieces {
        let r = quad::adaptive(integrand, a, b, 1e-300, 1e-14);
        value += r.value;
        err += r.abs_err;
        ok &= r.converged;
    }
    if !ok && err > 1e-9 * value.abs() {
        return Err(HawkesError::Numeric(format!(
            "Mittag-Leffler integral did not converge (alpha={alpha}, kappa={kappa}, x={x}, err={err:e})"
        )));
    }
    Ok(value / PI)
}

/// Kanter's function `A(θ)` for the one-sided stable law of index `α`.
pub fn kanter_a(alpha: f64, theta: f64) -> f64 {
    if theta <= 0.0 {
        return alpha.powf(alpha / (1.0 - alpha)) * (1.0 - alpha);
    }
    let sa = (alpha * theta).sin();
    (sa / theta.sin()).powf(1.0 / (1.0 - alpha)) * ((1.0 - alpha) * theta).sin() / sa
}

fn check_stable_index(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(HawkesError::InvalidParameter(format!(
            "stable index alpha={alpha} outside (0,1)"
        )))
    }
}

/// CDF of the one-sided stable law with Laplace transform `exp(-λ^α)`.
pub fn stable_cdf(alpha: f64, x: f64) -> Result<f64> {
    check_stable_index(alpha)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let c = x.powf(-alpha / (1.0 - alpha));
    let r = quad::adaptive(|th| (-kanter_a(alpha, th) * c).exp(), 0.0, PI, 1e-15, 1e-13);
    Ok((r.value / PI).clamp(0.0, 1.0))
}

/// Survival function `1 - G(x)` of the one-sided stable law, accurate in the tail.
pub fn stable_sf(alpha: f64, x: f64) -> Result<f64> {
    check_stable_index(alpha)?;
    if x <= 0.0 {
        return Ok(1.0);
    }
    let c = x.powf(-alpha / (1.0 - alpha));
    let r = quad::adaptive(
        |th| -(-kanter_a(alpha, th) * c).exp_m1(),
        0.0,
        PI,
        1e-300,
        1e-13,
    );
    Ok((r.value / PI).clamp(0.0, 1.0))
}

/// Density of the one-sided stable law with Laplace transform `exp(-λ^α)`.
pub fn stable_pdf(alpha: f64, x: f64) -> Result<f64> {
    check_stable_index(alpha)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let e = alpha / (1.0 - alpha);
    let c = x.powf(-e);
    let r = quad::adaptive(
        |th| {
            let a = kanter_a(alpha, th);
            a * (-a * c).exp()
        },
        0.0,
        PI,
        1e-300,
        1e-13,
    );
    Ok(r.value / PI * e * c / x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::erfc;
    use approx::assert_relative_eq;

    // E_{1/2}(z) = exp(z^2) erfc(-z)
    fn ml_half_oracle(z: f64) -> f64 {
        (z * z).exp() * erfc(-z)
    }

    #[test]
    fn ml_trivial_values() {
        assert_eq!(ml_function(0.3, 1.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(
            ml_function(1.0, 1.0, 1.0).unwrap(),
            std::f64::consts::E,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            ml_function(0.5, 1.0, -1.0).unwrap(),
            0.427_583_576_155_807,
            epsilon = 1e-12
        );
    }

    #[test]
    fn ml_half_matches_erfc_identity_across_regions() {
        for &z in &[
            -0.3, -0.9, -1.5, -2.0, -3.0, -4.5, -6.0, -8.0, -10.0, -12.0, -20.0,
        ] {
            let got = ml_function(0.5, 1.0, z).unwrap();
            let want = ml_half_oracle(z);
            assert_relative_eq!(got, want, max_relative = 1e-10);
        }
        for &z in &[0.2, 1.0, 2.5] {
            assert_relative_eq!(
                ml_function(0.5, 1.0, z).unwrap(),
                ml_half_oracle(z),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn ml_frozen_high_precision_values() {
        // 40-digit references from the series/integral in arbitrary precision
        let cases = [
            (0.3, 1.2, -1.5, 0.410_340_389_667_572_5),
            (0.7, 0.2, -4.0, -0.075_501_027_796_694_82),
            (0.6, 1.55, -2.5, 0.318_222_760_405_493_1),
            (0.8, 0.8, -3.0, 0.039_915_664_251_597_09),
            (0.9, 1.0, -5.0, 0.034_431_324_804_098_42),
        ];
        for (a, k, x, want) in cases {
            assert_relative_eq!(ml_function(a, k, x).unwrap(), want, max_relative = 1e-10);
        }
    }

    #[test]
    fn ml_half_half_closed_form() {
        // E_{1/2,1/2}(z) = 1/sqrt(pi) + z exp(z^2) erfc(-z)
        for &z in &[-0.5, -2.0, -5.0, -15.0] {
            let want = 1.0 / PI.sqrt() + z * ml_half_oracle(z);
            assert_relative_eq!(
                ml_function(0.5, 0.5, z).unwrap(),
                want,
                max_relative = 1e-8,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn ml_rejects_bad_parameters() {
        assert!(ml_function(0.0, 1.0, 1.0).is_err());
        assert!(ml_function(1.5, 1.0, 1.0).is_err());
        assert!(ml_function(0.5, 0.0, 1.0).is_err());
        assert!(ml_function(0.5, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn rgamma_zero_at_poles() {
        assert_eq!(rgamma(0.0), 0.0);
        assert_eq!(rgamma(-3.0), 0.0);
        assert_relative_eq!(rgamma(-0.5), 1.0 / (-2.0 * PI.sqrt()), epsilon = 1e-14);
    }

    #[test]
    fn levy_case_closed_form() {
        // alpha = 1/2: G(x) = erfc(1 / (2 sqrt x)), g(x) = x^{-3/2} exp(-1/(4x)) / (2 sqrt pi)
        for &x in &[0.05, 0.3, 1.0, 4.0, 50.0] {
            let cdf = stable_cdf(0.5, x).unwrap();
            assert_relative_eq!(
                cdf,
                erfc(0.5 / x.sqrt()),
                max_relative = 1e-10,
                epsilon = 1e-14
            );
            let pdf = stable_pdf(0.5, x).unwrap();
            let want = x.powf(-1.5) * (-0.25 / x).exp() / (2.0 * PI.sqrt());
            assert_relative_eq!(pdf, want, max_relative = 1e-9);
            let sf = stable_sf(0.5, x).unwrap();
            assert_relative_eq!(sf, 1.0 - erfc(0.5 / x.sqrt()), max_relative = 1e-9);
        }
    }
}
