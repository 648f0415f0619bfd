//! Sine integral in the normalization Si(±∞) = ±1.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

/// Si(z) = (2/π) ∫₀ᶻ sin w / w dw.
///
/// Power series below |z| = 2, otherwise the continued fraction for E₁(iz)
/// evaluated by the modified Lentz method; both are good to a few ulp.
pub fn sine_integral(z: f64) -> f64 {
    let t = z.abs();
    let si = if t == 0.0 {
        0.0
    } else if t.is_infinite() {
        FRAC_PI_2
    } else if t < 2.0 {
        series(t)
    } else {
        continued_fraction(t)
    };
    si.copysign(z) / FRAC_PI_2
}

/// Unnormalized ∫₀ᵗ sin w / w dw = Σ (−1)^k t^{2k+1} / ((2k+1)(2k+1)!).
fn series(t: f64) -> f64 {
    let t2 = t * t;
    let mut term = t;
    let mut sum = t;
    let mut k = 0usize;
    loop {
        k += 1;
        let a = (2 * k) as f64;
        let b = (2 * k + 1) as f64;
        term *= -t2 / (a * b);
        let add = term / b;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() || k > 60 {
            break;
        }
    }
    sum
}

fn continued_fraction(t: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    let mut b = Complex64::new(1.0, t);
    let mut c = Complex64::new(1.0 / FPMIN, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..1000 {
        let a = -((i - 1) * (i - 1)) as f64;
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
            break;
        }
    }
    h *= Complex64::new(t.cos(), -t.sin());
    // E₁(it) = h, and Ci + i(Si − π/2) = −E₁(it).
    let cs = -h.conj() + Complex64::new(0.0, FRAC_PI_2);
    cs.im
}
