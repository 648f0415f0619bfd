//! One-particle modular structure of the right wedge in d = 2.
//!
//! Wave functions are sampled in rapidity, f̂(θ) = f̃(m cosh θ, m sinh θ).
//! Boosts act by f̂ ↦ f̂(· − t) and are applied spectrally on the uniform
//! grid. With F(λ) = Σ_j f̂(θ_j) e^{−iλθ_j} a shift by a complex amount s is
//! the multiplier e^{−iλs}; the continuation to θ − iπ is therefore the
//! multiplier e^{πλ}, which is bounded on wave functions of W_R and grows
//! without bound on those of W_L. J acts as complex conjugation of the
//! profile: it is U(θ_R) on the one-particle space, p ↦ −p composed with
//! f ↦ f̄.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::mass_shell::ModelConfig;
use crate::testfn::{self, Region, TestFunction};
use crate::{Error, Result};

/// End-of-span decay required before a continuation is attempted.
pub const END_DECAY: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RapidityProfile {
    pub theta: Vec<f64>,
    pub values: Vec<Complex64>,
    pub spacing: f64,
    pub label: String,
    /// Declared support of the source function.
    pub support: Region,
}

impl RapidityProfile {
    /// ‖ψ‖² = π Σ Δθ |ψ_j|², the one-particle norm.
    pub fn norm(&self) -> f64 {
        (PI * self.spacing * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn distance(&self, other: &RapidityProfile) -> Result<f64> {
        if self.theta.len() != other.theta.len() || (self.spacing - other.spacing).abs() > 1e-15 {
            return Err(Error::GridMismatch);
        }
        Ok((PI * self.spacing * self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>())
            .sqrt())
    }

    /// max(|ψ(θ_0)|, |ψ(θ_{N−1})|) / max |ψ|.
    pub fn end_ratio(&self) -> f64 {
        let peak = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let ends = self.values[0].norm().max(self.values[self.values.len() - 1].norm());
        ends / peak
    }

    fn with_values(&self, values: Vec<Complex64>, label: String) -> RapidityProfile {
        RapidityProfile { theta: self.theta.clone(), values, spacing: self.spacing, label, support: self.support.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModularOptions {
    /// Profiles cover θ ∈ [−span, span].
    pub span: f64,
    pub count: usize,
    /// Spectral cutoff λ_c of the continuation multiplier.
    pub cutoff: f64,
    /// Largest accepted ‖continued‖/‖ψ‖.
    pub growth_limit: f64,
}

impl Default for ModularOptions {
    fn default() -> Self {
        ModularOptions { span: 14.0, count: 96, cutoff: 6.0, growth_limit: 10.0 }
    }
}

impl ModularOptions {
    pub fn spacing(&self) -> f64 {
        2.0 * self.span / self.count as f64
    }

    /// Same span, spacing halved.
    pub fn refined(&self) -> Self {
        ModularOptions { count: 2 * self.count, ..self.clone() }
    }
}

fn check_config(config: &ModelConfig) -> Result<()> {
    if config.d != 2 {
        return Err(Error::Config(format!("modular checks need d = 2, got d = {}", config.d)));
    }
    Ok(())
}

/// Samples of f̃ on the shell at θ_j = −span + (j + ½)Δθ.
pub fn rapidity_profile(f: &TestFunction, config: &ModelConfig, span: f64, count: usize) -> Result<RapidityProfile> {
    check_config(config)?;
    if f.dim != 2 || f.domain != testfn::Domain::Spacetime {
        return Err(Error::Precondition(format!("{} is not a d = 2 spacetime function", f.label)));
    }
    if count < 8 || !(span > 0.0) {
        return Err(Error::Config(format!("rapidity grid span {span}, count {count}")));
    }
    let h = 2.0 * span / count as f64;
    let theta: Vec<f64> = (0..count).map(|j| -span + (j as f64 + 0.5) * h).collect();
    let m = config.m;
    use rayon::prelude::*;
    let values: Vec<Complex64> = theta.par_iter().map(|t| f.eval(&[m * t.cosh(), m * t.sinh()])).collect();
    if let Some(node) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Evaluation { node, message: format!("non-finite value of {}", f.label) });
    }
    Ok(RapidityProfile { theta, values, spacing: h, label: f.label.clone(), support: f.support.clone() })
}

fn frequencies(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let kk = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
            2.0 * PI * kk / (n as f64 * h)
        })
        .collect()
}

/// Apply the spectral multiplier `mult(λ)` to the profile.
fn spectral(profile: &RapidityProfile, mult: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
    let n = profile.values.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf = profile.values.clone();
    fwd.process(&mut buf);
    for (b, lam) in buf.iter_mut().zip(frequencies(n, profile.spacing)) {
        *b *= mult(lam) / n as f64;
    }
    inv.process(&mut buf);
    buf
}

/// U(v(t)): θ ↦ ψ(θ − t), by band-limited interpolation.
pub fn boost_flow(profile: &RapidityProfile, t: f64) -> RapidityProfile {
    let values = spectral(profile, |lam| Complex64::from_polar(1.0, -lam * t));
    profile.with_values(values, format!("boost{t}({})", profile.label))
}

/// Multiplier e^{sλ} restricted to λ ≤ cutoff: imaginary boost by s.
pub fn imaginary_flow(profile: &RapidityProfile, s: f64, cutoff: f64) -> RapidityProfile {
    let values = spectral(profile, |lam| {
        if lam <= cutoff {
            Complex64::new((s * lam).exp(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    profile.with_values(values, format!("iflow{s}({})", profile.label))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Continuation {
    pub profile: RapidityProfile,
    pub cutoff: f64,
    pub growth: f64,
    pub end_ratio: f64,
}

/// ψ(θ − iπ) = Δ^{1/2}ψ for wave functions of W_R.
pub fn half_continuation(profile: &RapidityProfile, opts: &ModularOptions) -> Result<Continuation> {
    if !profile.support.in_right_wedge(0.0) {
        return Err(Error::Precondition(format!(
            "support {:?} of {} is not inside W_R",
            profile.support, profile.label
        )));
    }
    continue_unchecked(profile, opts)
}

/// The continuation without the support precondition; the growth check
/// still applies.
pub fn continue_unchecked(profile: &RapidityProfile, opts: &ModularOptions) -> Result<Continuation> {
    let end_ratio = profile.end_ratio();
    if end_ratio > END_DECAY {
        return Err(Error::Span { ratio: end_ratio });
    }
    let out = imaginary_flow(profile, PI, opts.cutoff);
    let base = profile.norm();
    let growth = if base > 0.0 { out.norm() / base } else { 0.0 };
    if growth > opts.growth_limit {
        return Err(Error::DomainViolation { growth });
    }
    Ok(Continuation {
        profile: RapidityProfile { label: format!("cont({})", profile.label), ..out },
        cutoff: opts.cutoff,
        growth,
        end_ratio,
    })
}

/// U(θ_R) on a profile: complex conjugation (antiunitary).
pub fn theta_reflection_profile(profile: &RapidityProfile) -> RapidityProfile {
    let mut out = profile.with_values(profile.values.iter().map(|v| v.conj()).collect(), format!("J({})", profile.label));
    out.support = profile.support.reflected();
    out
}

/// θ_R on a test function: x ↦ −x.
pub fn theta_reflection(f: &TestFunction) -> TestFunction {
    testfn::reflect(f)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TomitaReport {
    pub label: String,
    pub residual: f64,
    pub spacing: f64,
    pub count: usize,
    pub cutoff: f64,
    pub growth: f64,
    pub end_ratio: f64,
}

/// ‖JΔ^{1/2}|f⟩ − |f̄⟩‖ / ‖f‖.
pub fn tomita_s_check(f: &TestFunction, config: &ModelConfig, opts: &ModularOptions) -> Result<TomitaReport> {
    let psi = rapidity_profile(f, config, opts.span, opts.count)?;
    let cont = half_continuation(&psi, opts)?;
    let lhs = theta_reflection_profile(&cont.profile);
    let target = rapidity_profile(&testfn::conjugate(f), config, opts.span, opts.count)?;
    let residual = lhs.distance(&target)? / psi.norm();
    Ok(TomitaReport {
        label: f.label.clone(),
        residual,
        spacing: opts.spacing(),
        count: opts.count,
        cutoff: opts.cutoff,
        growth: cont.growth,
        end_ratio: cont.end_ratio,
    })
}

/// Residuals of the check at the given resolution and at half the spacing.
pub fn refinement_study(f: &TestFunction, config: &ModelConfig, opts: &ModularOptions) -> Result<(TomitaReport, TomitaReport)> {
    Ok((tomita_s_check(f, config, opts)?, tomita_s_check(f, config, &opts.refined())?))
}
