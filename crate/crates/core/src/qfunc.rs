//! Gaussian tail function.

use libm::erfc;
use std::f64::consts::{PI, SQRT_2};

/// Arguments above this use the continued-fraction log-domain path.
pub const LOG_DOMAIN_THRESHOLD: f64 = 8.0;

/// `Q(x) = ½ erfc(x/√2)`.
pub fn q(x: f64) -> f64 {
    if x > LOG_DOMAIN_THRESHOLD {
        ln_q(x).exp()
    } else {
        0.5 * erfc(x / SQRT_2)
    }
}

/// `ln Q(x)`, accurate far into the tail.
pub fn ln_q(x: f64) -> f64 {
    if x <= LOG_DOMAIN_THRESHOLD {
        return (0.5 * erfc(x / SQRT_2)).ln();
    }
    // Q(x) = φ(x)·R(x) with the Mills ratio R from its Laplace continued fraction
    // R(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...))))
    let mut tail = 0.0;
    for k in (1..=60).rev() {
        tail = k as f64 / (x + tail);
    }
    let mills = 1.0 / (x + tail);
    -0.5 * x * x - 0.5 * (2.0 * PI).ln() + mills.ln()
}

/// Pairwise error probability `Q(√(ρJ/2))` for squared distance `J` at linear SNR `ρ`.
pub fn pairwise_ep(ed: f64, snr_linear: f64) -> f64 {
    q((snr_linear * ed / 2.0).max(0.0).sqrt())
}

/// `ln` of [`pairwise_ep`].
pub fn ln_pairwise_ep(ed: f64, snr_linear: f64) -> f64 {
    ln_q((snr_linear * ed / 2.0).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    // Simpson quadrature of the standard normal density on [x, x+40].
    fn q_by_quadrature(x: f64) -> f64 {
        let n = 200_000;
        let h = 40.0 / n as f64;
        let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        let mut s = f(x) + f(x + 40.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(x + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn q_at_zero_is_half() {
        assert_eq!(q(0.0), 0.5);
        assert_eq!(pairwise_ep(0.0, 10.0), 0.5);
        assert_eq!(pairwise_ep(3.0, 0.0), 0.5);
    }

    #[test]
    fn q_of_one_matches_quadrature() {
        let oracle = q_by_quadrature(1.0);
        assert!((oracle - 0.158_655_253_931_457).abs() < 1e-12);
        assert!((q(1.0) - oracle).abs() < 1e-12);
        assert!((pairwise_ep(2.0, 1.0) - oracle).abs() < 1e-12);
    }

    #[test]
    fn log_domain_is_continuous_at_threshold() {
        let below = (0.5 * erfc(LOG_DOMAIN_THRESHOLD / SQRT_2)).ln();
        let above = ln_q(LOG_DOMAIN_THRESHOLD + 1e-12);
        assert!((below - above).abs() < 1e-9, "{below} vs {above}");
        for &x in &[8.5, 10.0, 12.0] {
            let rel = (q(x) - 0.5 * erfc(x / SQRT_2)).abs() / q(x);
            assert!(rel < 1e-12, "x={x} rel={rel}");
        }
    }

    #[test]
    fn deep_tail_stays_finite() {
        let l = ln_q(40.0);
        assert!(l.is_finite() && l < -800.0);
    }
}
