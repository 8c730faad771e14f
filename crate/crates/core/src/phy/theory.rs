//! Closed-form 16-QAM bit error rates used to place SNR grid points.

use statrs::function::erf::erfc;

/// Gaussian tail `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Exact Gray 16-QAM bit error rate over AWGN at symbol SNR `Es/N0`:
/// `[3Q(x) + 2Q(3x) − Q(5x)] / 4` with `x = √(SNR/5)`.
pub fn qam16_ber_awgn(snr: f64) -> f64 {
    let x = (snr / 5.0).sqrt();
    (3.0 * q_function(x) + 2.0 * q_function(3.0 * x) - q_function(5.0 * x)) / 4.0
}

/// Average of [`qam16_ber_awgn`] over Rayleigh fading with mean SNR `snr`.
pub fn qam16_ber_rayleigh(snr: f64) -> f64 {
    // E[Q(√(cγ))] for exponential γ with mean γ̄ is ½(1 − √(cγ̄ / (2 + cγ̄)))
    let avg_q = |k: f64| {
        let c = k * k / 5.0 * snr;
        0.5 * (1.0 - (c / (2.0 + c)).sqrt())
    };
    (3.0 * avg_q(1.0) + 2.0 * avg_q(3.0) - avg_q(5.0)) / 4.0
}

/// Mean SNR in dB at which Rayleigh-faded 16-QAM has average bit error rate
/// `target`. Returns `None` when `target` is not in `(0, 0.5)`.
pub fn rayleigh_snr_db_for_ber(target: f64) -> Option<f64> {
    if !(target > 0.0 && target < 0.5) {
        return None;
    }
    let (mut lo, mut hi) = (-30.0f64, 80.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if qam16_ber_rayleigh(10f64.powf(mid / 10.0)) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
