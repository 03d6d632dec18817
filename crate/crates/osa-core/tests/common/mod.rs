//! Shared fixtures for the integration and acceptance suites: an
//! implementation-independent quadrature oracle for the regularized lower
//! incomplete gamma function, a synthetic perfect sensor, and the benchmark
//! scenario presets.

#![allow(dead_code)] // not every suite uses every fixture

use osa_core::{ChannelParams, EnergyDetectorParams, Result, RocCurve, Scenario};

/// Ideal sensor: zero false alarms at every mis-detection level. Injected
/// where a published value assumes error-free sensing.
pub struct PerfectRoc;

impl RocCurve for PerfectRoc {
    fn epsilon_for(&self, _delta: f64) -> Result<f64> {
        Ok(0.0)
    }
}

/// `ln Gamma(a)` for the oracle grid, from closed forms only: factorials for
/// integers and the half-integer product formula. Keeps the oracle free of
/// any library gamma implementation.
pub fn ln_gamma_closed_form(a: f64) -> f64 {
    let two_a = 2.0 * a;
    assert!(
        (two_a - two_a.round()).abs() < 1e-12 && a > 0.0,
        "oracle supports only integer and half-integer shapes, got {a}"
    );
    if (a - a.round()).abs() < 1e-12 {
        // Gamma(n) = (n-1)!
        let n = a.round() as u64;
        (1..n).map(|k| (k as f64).ln()).sum()
    } else {
        // Gamma(n + 1/2) = (n - 1/2)(n - 3/2)...(1/2) sqrt(pi)
        let mut log = 0.5 * std::f64::consts::PI.ln();
        let mut factor = a - 1.0;
        while factor > 0.0 {
            log += factor.ln();
            factor -= 1.0;
        }
        log
    }
}

/// Composite-Simpson quadrature of `exp((a-1) ln t - t - ln Gamma(a))` over
/// `[0, x]`: an independent route to `P(a, x)` used to check the series /
/// continued-fraction implementation. A fixed grid of 2^20 intervals keeps
/// the Simpson error far below the 1e-10 comparison tolerance across the
/// oracle grid; the `a < 1` endpoint singularity is handled by an
/// alternating-series head on `[0, cut]`.
pub fn quadrature_lower_gamma(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    let ln_norm = ln_gamma_closed_form(a);
    let f = |t: f64| -> f64 {
        if t <= 0.0 {
            // Only reached for a >= 1, where the limit is finite.
            return if a > 1.0 { 0.0 } else { (-ln_norm).exp() };
        }
        ((a - 1.0) * t.ln() - t - ln_norm).exp()
    };

    // integral of t^(a-1) e^-t over [0, cut] by the alternating series
    // sum_k (-1)^k cut^(a+k) / (k! (a + k)).
    let (start, head) = if a < 1.0 {
        let cut = 1e-3f64.min(x / 2.0);
        let mut term_pow = cut.powf(a);
        let mut factorial = 1.0;
        let mut series = 0.0;
        for k in 0..12 {
            let k_f = k as f64;
            if k > 0 {
                factorial *= k_f;
                term_pow *= cut;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            series += sign * term_pow / (factorial * (a + k_f));
        }
        (cut, series * (-ln_norm).exp())
    } else {
        (0.0, 0.0)
    };

    const INTERVALS: usize = 1 << 20; // even
    let h = (x - start) / INTERVALS as f64;
    let mut sum = f(start) + f(x);
    for i in 1..INTERVALS {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += weight * f(start + i as f64 * h);
    }
    head + sum * h / 3.0
}

/// Single-channel reactive benchmark parameters.
pub fn single_reactive_params() -> ChannelParams {
    ChannelParams::new(0.1, 0.2, 0.9, 0.95).unwrap()
}

/// The benchmark energy detector: 30 measurements, 0 dB noise, 5 dB signal.
pub fn benchmark_detector() -> EnergyDetectorParams {
    EnergyDetectorParams::new(30, 1.0, 10f64.powf(0.5)).unwrap()
}

/// Single-channel benchmark scenario at the given horizon and collision
/// bound.
pub fn single_reactive_scenario(horizon: usize, zeta: f64) -> Scenario {
    Scenario::new(
        vec![single_reactive_params()],
        horizon,
        zeta,
        benchmark_detector(),
    )
    .unwrap()
}

/// Three-channel benchmark parameters.
pub fn multi_channel_params() -> Vec<ChannelParams> {
    vec![
        ChannelParams::new(0.1, 0.1, 0.9, 0.95).unwrap(),
        ChannelParams::new(0.1, 0.2, 0.9, 0.95).unwrap(),
        ChannelParams::new(0.05, 0.6, 0.9, 0.95).unwrap(),
    ]
}

/// Three-channel benchmark scenario at `zeta = 0.05`.
pub fn multi_channel_scenario(horizon: usize) -> Scenario {
    Scenario::new(multi_channel_params(), horizon, 0.05, benchmark_detector()).unwrap()
}
