//! The standard mollifier b(t) = exp(ν − ν/(1 − t²/ρ²)) and its Fourier
//! transform.
//!
//! The transform of the unit-radius profile is tabulated once from a
//! trapezoid sum over position samples and read back by 8-point Lagrange
//! interpolation. It is set to zero beyond κ = 220 where the true transform
//! is below 1e-17 of its peak; past that point the sample sum only aliases.

use std::f64::consts::PI;
use std::sync::OnceLock;

pub const NU: f64 = 10.0;
/// Band limit of the unit-radius transform.
pub const KAPPA_MAX: f64 = 220.0;
const STEP: f64 = 0.05;
const SAMPLES: usize = 2048;
const PAD: usize = 8;

/// Position profile of the unit-height mollifier of radius `rho`.
pub fn profile(t: f64, rho: f64) -> f64 {
    let s = t / rho;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (NU - NU / (1.0 - s * s)).exp()
    }
}

fn table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let dx = 2.0 / SAMPLES as f64;
        let xs: Vec<f64> = (1..SAMPLES).map(|j| -1.0 + j as f64 * dx).collect();
        let bs: Vec<f64> = xs.iter().map(|&x| profile(x, 1.0)).collect();
        let count = (KAPPA_MAX / STEP) as usize + PAD;
        let norm = dx / (2.0 * PI).sqrt();
        (0..=count)
            .map(|j| {
                let k = j as f64 * STEP;
                norm * xs.iter().zip(&bs).map(|(x, b)| b * (k * x).cos()).sum::<f64>()
            })
            .collect()
    })
}

/// B(κ) = (2π)^{-1/2} ∫ b(t) e^{-iκt} dt for the unit-radius mollifier.
pub fn unit_transform(kappa: f64) -> f64 {
    let k = kappa.abs();
    if k >= KAPPA_MAX {
        return 0.0;
    }
    let tab = table();
    let u = k / STEP;
    let base = u.floor() as isize - 3;
    let t = u - base as f64;
    // Lagrange basis on nodes 0..8 evaluated at t ∈ [3, 4).
    let mut acc = 0.0;
    for j in 0..8 {
        let mut l = 1.0;
        for q in 0..8 {
            if q != j {
                l *= (t - q as f64) / (j as f64 - q as f64);
            }
        }
        let idx = (base + j as isize).unsigned_abs();
        acc += l * tab[idx];
    }
    acc
}

/// Transform of the mollifier of radius `rho`: ρ·B(kρ).
pub fn transform(k: f64, rho: f64) -> f64 {
    rho * unit_transform(k * rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(kappa: f64) -> f64 {
        // Independent evaluation with a finer trapezoid sum.
        let n = 8192;
        let dx = 2.0 / n as f64;
        (1..n)
            .map(|j| {
                let x = -1.0 + j as f64 * dx;
                profile(x, 1.0) * (kappa * x).cos()
            })
            .sum::<f64>()
            * dx
            / (2.0 * PI).sqrt()
    }

    #[test]
    fn interpolation_matches_direct_sum() {
        let peak = direct(0.0);
        for &k in &[0.0, 0.013, 0.77, 3.3, 9.99, 17.25, 41.0, 88.8, 150.3] {
            let err = (unit_transform(k) - direct(k)).abs();
            assert!(err < 1e-14 * peak, "kappa {k}: err {err:e}");
        }
    }

    #[test]
    fn band_limited_and_even() {
        assert_eq!(unit_transform(1e10), 0.0);
        assert_eq!(unit_transform(-2.5), unit_transform(2.5));
        assert!(unit_transform(219.0).abs() < 1e-16);
    }
}
