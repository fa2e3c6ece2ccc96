//! Gamma function via the Lanczos approximation (g = 7, nine terms).
//!
//! Relative error is below 1e-13 on (0, 10], which is far inside what the
//! fractional kernels and power-rule oracles need.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;

// Coefficients for g = 7, n = 9 (the set popularised by Numerical Recipes / GSL).
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for real `x` that is not a nonpositive integer.
///
/// Arguments below 1/2 go through the reflection formula
/// Γ(x)Γ(1−x) = π / sin(πx).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut sum = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let w = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * w.powf(x + 0.5) * (-w).exp() * sum
}
