//! Independent reference calculations for the integration tests.
//!
//! Nothing here calls into `bellcheck_core`: the Born-rule oracle builds the
//! two-photon state vector and projects it explicitly, and the quadrature
//! oracle integrates the hidden-variable model's response functions
//! written out from scratch.

#![allow(dead_code)]

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

/// Joint probabilities `[P++, P+−, P−+, P−−]` for analyzers at `alpha` and
/// `beta` (radians) acting on `(|+⟩|−⟩ − |−⟩|+⟩)/√2`.
pub fn born_rule_probabilities(alpha: f64, beta: f64) -> [f64; 4] {
    // Basis order |HH⟩, |HV⟩, |VH⟩, |VV⟩ with |+⟩ = H, |−⟩ = V.
    let state = [0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0];
    let analyzer = |theta: f64| {
        [
            [theta.cos(), theta.sin()],  // parallel channel
            [-theta.sin(), theta.cos()], // perpendicular channel
        ]
    };
    let a = analyzer(alpha);
    let b = analyzer(beta);
    let mut out = [0.0; 4];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            let product = [ai[0] * bj[0], ai[0] * bj[1], ai[1] * bj[0], ai[1] * bj[1]];
            let amp: f64 = product.iter().zip(state).map(|(p, s)| p * s).sum();
            out[2 * i + j] = amp * amp;
        }
    }
    out
}

pub fn born_rule_correlator(alpha: f64, beta: f64) -> f64 {
    let p = born_rule_probabilities(alpha, beta);
    p[0] + p[3] - p[1] - p[2]
}

/// Composite midpoint rule over one period `[0, 2π)`, divided by `2π`:
/// the mean of `f` under a uniform hidden angle.
pub fn uniform_mean(f: impl Fn(f64) -> f64, points: usize) -> f64 {
    let h = TAU / points as f64;
    (0..points).map(|i| f((i as f64 + 0.5) * h)).sum::<f64>() * h / TAU
}

pub const QUADRATURE_POINTS: usize = 1 << 20;

fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Bob's detection probability averaged over the hidden angle.
pub fn lhv_bob_detection_fraction(beta: f64) -> f64 {
    uniform_mean(|t| (t - 2.0 * beta).cos().abs(), QUADRATURE_POINTS)
}

/// `(E[A·B·P_detect], E[P_detect])` for the one-sided model.
fn lhv_moments(alpha: f64, beta: f64) -> (f64, f64) {
    let product = uniform_mean(
        |t| {
            let a = sgn((t - 2.0 * alpha).cos());
            let cb = (t - 2.0 * beta).cos();
            a * -sgn(cb) * cb.abs()
        },
        QUADRATURE_POINTS,
    );
    (product, lhv_bob_detection_fraction(beta))
}

/// Correlator on coincidences only.
pub fn lhv_fair_correlator(alpha: f64, beta: f64) -> f64 {
    let (product, detected) = lhv_moments(alpha, beta);
    product / detected
}

/// Correlator over all trials with non-detections scored 0.
pub fn lhv_inclusive_correlator(alpha: f64, beta: f64) -> f64 {
    lhv_moments(alpha, beta).0
}

/// Standard error of a binomial proportion.
pub fn binomial_stderr(p: f64, n: f64) -> f64 {
    (p * (1.0 - p) / n).sqrt()
}

pub const ZW_DEGREES: [f64; 4] = [0.0, 45.0, 22.5, 67.5];

/// `(alpha, beta)` in radians for setting-pair index `2a + b`.
pub fn zw_pair(pair: usize) -> (f64, f64) {
    (
        ZW_DEGREES[pair / 2].to_radians(),
        ZW_DEGREES[2 + pair % 2].to_radians(),
    )
}
