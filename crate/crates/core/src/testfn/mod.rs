//! Smearing functions as serializable momentum-space evaluators.
//!
//! A [`TestFunction`] is a [`Descriptor`] tree (family name plus parameters)
//! together with its declared support, reality flag and label. Spacetime
//! functions use the transform f̃(p) = (2π)^{-d/2} ∫ f(x) e^{i(p₀x₀ − p·x)};
//! spatial functions on ℝ^{d−1} use l̃(p) = (2π)^{-(d−1)/2} ∫ l(x) e^{−ip·x}.

mod mollifier;
mod region;
mod special;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mass_shell::{inner_product, restrict, MassShellGrid};
use crate::{c, Error, Result, I};

pub use mollifier::{profile as mollifier_profile, transform as mollifier_transform, KAPPA_MAX};
pub use region::Region;
pub use special::sine_integral;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Spacetime,
    Spatial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Member {
    /// h₁,ₙ, carrying the Si(p₀/2n) factor.
    First,
    /// h₂,ₙ.
    Second,
}

/// Which half-line the string datum k vanishes on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// k̃ = √(p₁ − iκ)·l̃: k vanishes left of the slab, the dual right of it.
    LowerVanishing,
    /// k̃ = √(p₁ + iκ)·l̃: mirror image.
    UpperVanishing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Descriptor {
    Zero,
    Constant { value: [f64; 2] },
    /// Product mollifier of per-axis radius radius/√D, D = center.len().
    Bump { center: Vec<f64>, radius: f64 },
    /// Euclidean Laplacian of `Bump`.
    SeedBump { center: Vec<f64>, radius: f64 },
    Gaussian { center: Vec<f64>, width: f64 },
    /// Point evaluation δ_x.
    Delta { point: Vec<f64> },
    CentralSequence { n: u32, member: Member, seed: Box<Descriptor> },
    Translate { inner: Box<Descriptor>, shift: Vec<f64> },
    /// Multiplication by e^{−i k·x}, i.e. f̃(p − k).
    Modulate { inner: Box<Descriptor>, momentum: Vec<f64> },
    Conjugate { inner: Box<Descriptor> },
    /// x ↦ −x.
    Reflect { inner: Box<Descriptor> },
    Scale { inner: Box<Descriptor>, factor: [f64; 2] },
    Sum { terms: Vec<Descriptor> },
    KleinGordon { inner: Box<Descriptor>, mass: f64 },
    /// Boost by rapidity t in the (x₀, x₁) plane: f̃(Λ(−t)p).
    Boost { inner: Box<Descriptor>, rapidity: f64 },
    /// Σ_k A(α_k) δα f̃(Λ(−α_k)p) over α_k = kδα, |α_k| < width,
    /// A(α) = exp(ν − ν/(1 − α²/width²)).
    BoostAverage { inner: Box<Descriptor>, width: f64, nu: f64, step: f64 },
    /// δ(x₀)k(x) for a spatial k: constant·k̃(p).
    TimeZeroLayer { inner: Box<Descriptor>, constant: f64 },
    StringDatum { l: Box<Descriptor>, mass: f64, branch: Branch },
    StringDual { l: Box<Descriptor>, mass: f64, branch: Branch },
}

fn phase(p: &[f64], x: &[f64], spacetime: bool) -> f64 {
    let mut s = 0.0;
    for (k, (pk, xk)) in p.iter().zip(x).enumerate() {
        if spacetime && k == 0 {
            s += pk * xk;
        } else {
            s -= pk * xk;
        }
    }
    s
}

fn boosted(p: &[f64], t: f64) -> [f64; 4] {
    let mut q = [0.0; 4];
    q[..p.len()].copy_from_slice(p);
    let (sh, ch) = (t.sinh(), t.cosh());
    q[0] = ch * p[0] - sh * p[1];
    q[1] = -sh * p[0] + ch * p[1];
    q
}

impl Descriptor {
    /// Evaluate at momentum `p`; `spacetime` selects the sign convention.
    pub fn eval(&self, p: &[f64], spacetime: bool) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            Descriptor::Zero => zero,
            Descriptor::Constant { value } => c(value[0], value[1]),
            Descriptor::Bump { center, radius } => bump_eval(p, center, *radius, spacetime),
            Descriptor::SeedBump { center, radius } => {
                let p2: f64 = p.iter().map(|x| x * x).sum();
                -p2 * bump_eval(p, center, *radius, spacetime)
            }
            Descriptor::Gaussian { center, width } => {
                let p2: f64 = p.iter().map(|x| x * x).sum();
                let amp = width.powi(p.len() as i32) * (-0.5 * width * width * p2).exp();
                Complex64::from_polar(amp, phase(p, center, spacetime))
            }
            Descriptor::Delta { point } => {
                let amp = (2.0 * PI).powf(-(p.len() as f64) / 2.0);
                Complex64::from_polar(amp, phase(p, point, spacetime))
            }
            Descriptor::CentralSequence { n, member, seed } => {
                let nf = *n as f64;
                let d = p.len();
                let mut q = [0.0; 4];
                for (qk, pk) in q.iter_mut().zip(p) {
                    *qk = pk / (nf * nf);
                }
                let base = seed.eval(&q[..d], spacetime) / nf.powi(d as i32 - 2);
                match member {
                    Member::First => I * sine_integral(p[0] / (2.0 * nf)) * base,
                    Member::Second => base,
                }
            }
            Descriptor::Translate { inner, shift } => {
                inner.eval(p, spacetime) * Complex64::from_polar(1.0, phase(p, shift, spacetime))
            }
            Descriptor::Modulate { inner, momentum } => {
                let mut q = [0.0; 4];
                for (k, qk) in q.iter_mut().enumerate().take(p.len()) {
                    *qk = p[k] - momentum[k];
                }
                inner.eval(&q[..p.len()], spacetime)
            }
            Descriptor::Conjugate { inner } => inner.eval(&negated(p)[..p.len()], spacetime).conj(),
            Descriptor::Reflect { inner } => inner.eval(&negated(p)[..p.len()], spacetime),
            Descriptor::Scale { inner, factor } => c(factor[0], factor[1]) * inner.eval(p, spacetime),
            Descriptor::Sum { terms } => terms.iter().map(|t| t.eval(p, spacetime)).sum(),
            Descriptor::KleinGordon { inner, mass } => {
                let spatial: f64 = p[1..].iter().map(|x| x * x).sum();
                (mass * mass - p[0] * p[0] + spatial) * inner.eval(p, spacetime)
            }
            Descriptor::Boost { inner, rapidity } => {
                inner.eval(&boosted(p, -rapidity)[..p.len()], spacetime)
            }
            Descriptor::BoostAverage { inner, width, nu, step } => {
                let kmax = (width / step).ceil() as i64;
                let mut acc = zero;
                for k in -kmax..=kmax {
                    let a = k as f64 * step;
                    let s = a / width;
                    if s.abs() >= 1.0 {
                        continue;
                    }
                    let wgt = (nu - nu / (1.0 - s * s)).exp() * step;
                    if wgt < 1e-300 {
                        continue;
                    }
                    acc += wgt * inner.eval(&boosted(p, -a)[..p.len()], spacetime);
                }
                acc
            }
            Descriptor::TimeZeroLayer { inner, constant } => constant * inner.eval(&p[1..], false),
            Descriptor::StringDatum { l, mass, branch } => {
                let (p1, kappa) = string_kinematics(p, *mass);
                let s = match branch {
                    Branch::LowerVanishing => c(p1, -kappa),
                    Branch::UpperVanishing => c(p1, kappa),
                };
                s.sqrt() * l.eval(p, false)
            }
            Descriptor::StringDual { l, mass, branch } => {
                let (p1, kappa) = string_kinematics(p, *mass);
                let s = match branch {
                    Branch::LowerVanishing => c(p1, kappa),
                    Branch::UpperVanishing => c(p1, -kappa),
                };
                l.eval(p, false) / s.sqrt()
            }
        }
    }

    /// Momentum radius beyond which the transform is negligible, if known.
    pub fn band_limit(&self) -> Option<f64> {
        match self {
            Descriptor::Zero => Some(0.0),
            Descriptor::Bump { center, radius } | Descriptor::SeedBump { center, radius } => {
                Some(KAPPA_MAX * (center.len() as f64).sqrt() / radius)
            }
            Descriptor::Gaussian { width, .. } => Some(9.0 / width),
            Descriptor::CentralSequence { n, seed, .. } => seed.band_limit().map(|b| b * (*n as f64).powi(2)),
            Descriptor::Translate { inner, .. }
            | Descriptor::Conjugate { inner }
            | Descriptor::Reflect { inner }
            | Descriptor::Scale { inner, .. }
            | Descriptor::KleinGordon { inner, .. }
            | Descriptor::TimeZeroLayer { inner, .. } => inner.band_limit(),
            Descriptor::Modulate { inner, momentum } => {
                inner.band_limit().map(|b| b + momentum.iter().map(|k| k * k).sum::<f64>().sqrt())
            }
            Descriptor::StringDatum { l, .. } | Descriptor::StringDual { l, .. } => l.band_limit(),
            Descriptor::Sum { terms } => terms
                .iter()
                .map(|t| t.band_limit())
                .try_fold(0.0f64, |acc, b| b.map(|b| acc.max(b))),
            Descriptor::Boost { inner, rapidity } => inner.band_limit().map(|b| b * rapidity.abs().exp()),
            Descriptor::BoostAverage { inner, width, .. } => inner.band_limit().map(|b| b * width.exp()),
            Descriptor::Constant { .. } | Descriptor::Delta { .. } => None,
        }
    }
}

fn negated(p: &[f64]) -> [f64; 4] {
    let mut q = [0.0; 4];
    for (qk, pk) in q.iter_mut().zip(p) {
        *qk = -pk;
    }
    q
}

fn string_kinematics(p: &[f64], mass: f64) -> (f64, f64) {
    let perp: f64 = p[1..].iter().map(|x| x * x).sum();
    (p[0], (perp + mass * mass).sqrt())
}

fn bump_eval(p: &[f64], center: &[f64], radius: f64, spacetime: bool) -> Complex64 {
    let rho = radius / (center.len() as f64).sqrt();
    let mut amp = 1.0;
    for pk in p {
        amp *= mollifier::transform(*pk, rho);
        if amp == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
    }
    Complex64::from_polar(amp, phase(p, center, spacetime))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub label: String,
    /// Number of momentum components: d for spacetime, d − 1 for spatial.
    pub dim: usize,
    pub domain: Domain,
    pub support: Region,
    pub is_real: bool,
    pub descriptor: Descriptor,
}

impl TestFunction {
    pub fn eval(&self, p: &[f64]) -> Complex64 {
        debug_assert_eq!(p.len(), self.dim);
        self.descriptor.eval(p, self.domain == Domain::Spacetime)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("descriptor serialization")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("test function descriptor: {e}")))
    }

    fn derived(&self, label: String, descriptor: Descriptor, support: Region, is_real: bool) -> Self {
        TestFunction { label, dim: self.dim, domain: self.domain, support, is_real, descriptor }
    }

    fn boxed(&self) -> Box<Descriptor> {
        Box::new(self.descriptor.clone())
    }
}

fn check_point(x: &[f64], what: &str) -> Result<()> {
    if x.is_empty() || x.len() > 4 || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("{what} {x:?} must have 1..=4 finite components")));
    }
    Ok(())
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Config(format!("radius {radius} must be positive")));
    }
    if radius < 1e-8 {
        return Err(Error::Config(format!("radius {radius} below the resolvable scale 1e-8")));
    }
    Ok(())
}

/// Real bump supported in the ball of the given radius (spacetime).
pub fn bump(center: &[f64], radius: f64) -> Result<TestFunction> {
    check_point(center, "center")?;
    check_radius(radius)?;
    Ok(TestFunction {
        label: format!("bump{center:?}r{radius}"),
        dim: center.len(),
        domain: Domain::Spacetime,
        support: Region::Ball { center: center.to_vec(), radius },
        is_real: true,
        descriptor: Descriptor::Bump { center: center.to_vec(), radius },
    })
}

/// Real bump on ℝ^{d−1}.
pub fn spatial_bump(center: &[f64], radius: f64) -> Result<TestFunction> {
    let mut f = bump(center, radius)?;
    f.domain = Domain::Spatial;
    f.label = format!("spatial_{}", f.label);
    Ok(f)
}

/// Laplacian of a bump: real, compactly supported in Ball(center, radius),
/// with vanishing integral (h̃(0) = 0); symmetric when centered at 0.
pub fn seed_bump(center: &[f64], radius: f64) -> Result<TestFunction> {
    check_point(center, "center")?;
    check_radius(radius)?;
    Ok(TestFunction {
        label: format!("seed{center:?}r{radius}"),
        dim: center.len(),
        domain: Domain::Spacetime,
        support: Region::Ball { center: center.to_vec(), radius },
        is_real: true,
        descriptor: Descriptor::SeedBump { center: center.to_vec(), radius },
    })
}

pub fn gaussian(center: &[f64], width: f64) -> Result<TestFunction> {
    check_point(center, "center")?;
    check_radius(width)?;
    Ok(TestFunction {
        label: format!("gauss{center:?}s{width}"),
        dim: center.len(),
        domain: Domain::Spacetime,
        support: Region::All,
        is_real: true,
        descriptor: Descriptor::Gaussian { center: center.to_vec(), width },
    })
}

/// Point evaluation at x (a generalized function).
pub fn delta(point: &[f64]) -> Result<TestFunction> {
    check_point(point, "point")?;
    Ok(TestFunction {
        label: format!("delta{point:?}"),
        dim: point.len(),
        domain: Domain::Spacetime,
        support: Region::Ball { center: point.to_vec(), radius: 0.0 },
        is_real: true,
        descriptor: Descriptor::Delta { point: point.to_vec() },
    })
}

pub fn translate(f: &TestFunction, a: &[f64]) -> TestFunction {
    assert_eq!(a.len(), f.dim, "translation dimension");
    if a.iter().all(|x| *x == 0.0) {
        return f.clone();
    }
    f.derived(
        format!("tau{a:?}({})", f.label),
        Descriptor::Translate { inner: f.boxed(), shift: a.to_vec() },
        f.support.translated(a),
        f.is_real,
    )
}

/// e^{−ik·x}f, i.e. f̃(p − k).
pub fn modulate(f: &TestFunction, k: &[f64]) -> TestFunction {
    assert_eq!(k.len(), f.dim, "momentum dimension");
    f.derived(
        format!("mod{k:?}({})", f.label),
        Descriptor::Modulate { inner: f.boxed(), momentum: k.to_vec() },
        f.support.clone(),
        false,
    )
}

/// f̄: p ↦ conj f̃(−p).
pub fn conjugate(f: &TestFunction) -> TestFunction {
    if let Descriptor::Conjugate { inner } = &f.descriptor {
        let label = f.label.strip_prefix("conj(").and_then(|s| s.strip_suffix(')')).unwrap_or(&f.label);
        return f.derived(label.to_string(), (**inner).clone(), f.support.clone(), f.is_real);
    }
    f.derived(
        format!("conj({})", f.label),
        Descriptor::Conjugate { inner: f.boxed() },
        f.support.clone(),
        f.is_real,
    )
}

/// x ↦ f(−x).
pub fn reflect(f: &TestFunction) -> TestFunction {
    f.derived(
        format!("refl({})", f.label),
        Descriptor::Reflect { inner: f.boxed() },
        f.support.reflected(),
        f.is_real,
    )
}

pub fn scale(f: &TestFunction, s: Complex64) -> TestFunction {
    f.derived(
        format!("({s})*{}", f.label),
        Descriptor::Scale { inner: f.boxed(), factor: [s.re, s.im] },
        f.support.clone(),
        f.is_real && s.im == 0.0,
    )
}

/// Σ cᵢ fᵢ.
pub fn combination(terms: &[(Complex64, &TestFunction)]) -> Result<TestFunction> {
    let first = terms.first().ok_or_else(|| Error::Structural("empty combination".into()))?.1;
    if terms.iter().any(|(_, f)| f.dim != first.dim || f.domain != first.domain) {
        return Err(Error::Structural("combination of functions on different spaces".into()));
    }
    let parts: Vec<Descriptor> = terms
        .iter()
        .map(|(s, f)| Descriptor::Scale { inner: f.boxed(), factor: [s.re, s.im] })
        .collect();
    let label = terms.iter().map(|(s, f)| format!("({s})*{}", f.label)).collect::<Vec<_>>().join("+");
    Ok(TestFunction {
        label,
        dim: first.dim,
        domain: first.domain,
        support: Region::Union { parts: terms.iter().map(|(_, f)| f.support.clone()).collect() },
        is_real: terms.iter().all(|(s, f)| f.is_real && s.im == 0.0),
        descriptor: Descriptor::Sum { terms: parts },
    })
}

/// (□ + m²)f: multiplier m² − p₀² + p².
pub fn klein_gordon_image(f: &TestFunction, m: f64) -> TestFunction {
    f.derived(
        format!("kg({})", f.label),
        Descriptor::KleinGordon { inner: f.boxed(), mass: m },
        f.support.clone(),
        f.is_real,
    )
}

/// Boost by rapidity t in the (x₀, x₁) plane (d = 2).
pub fn boost(f: &TestFunction, t: f64) -> TestFunction {
    f.derived(
        format!("boost{t}({})", f.label),
        Descriptor::Boost { inner: f.boxed(), rapidity: t },
        f.support.boosted(t),
        f.is_real,
    )
}

/// Smooth average of boosts of f over rapidities in (−width, width).
pub fn boost_average(f: &TestFunction, width: f64, nu: f64, step: f64) -> Result<TestFunction> {
    if f.dim != 2 || f.domain != Domain::Spacetime {
        return Err(Error::Precondition("boost averages are defined for d = 2 spacetime functions".into()));
    }
    if !(width > 0.0 && nu > 0.0 && step > 0.0 && step < width) {
        return Err(Error::Config(format!("boost average parameters width {width}, nu {nu}, step {step}")));
    }
    Ok(f.derived(
        format!("bavg{width}({})", f.label),
        Descriptor::BoostAverage { inner: f.boxed(), width, nu, step },
        f.support.boosted(width),
        f.is_real,
    ))
}

/// A bump of the given radius in W_R, averaged over boosts |α| < width.
pub fn wedge_bump(center: &[f64], radius: f64, width: f64) -> Result<TestFunction> {
    let base = bump(center, radius)?;
    if !base.support.in_right_wedge(0.0) {
        return Err(Error::Precondition(format!("ball {center:?}, r = {radius} is not inside W_R")));
    }
    let mut f = boost_average(&base, width, 8.0, 0.01)?;
    f.label = format!("wedge_bump{center:?}r{radius}w{width}");
    Ok(f)
}

/// The normalized central-sequence pair of index n built from a seed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CentralSequencePair {
    pub n: u32,
    pub f1: TestFunction,
    pub f2: TestFunction,
    /// Mass-shell norms of h₁,ₙ and h₂,ₙ before normalization.
    pub norm1: f64,
    pub norm2: f64,
}

/// h̃₁,ₙ = (i/n^{d−2}) Si(p₀/2n) h̃(p/n²), h̃₂,ₙ = (1/n^{d−2}) h̃(p/n²), each
/// divided by its mass-shell norm.
pub fn lemma32_pair(n: u32, h: &TestFunction, grid: &Arc<MassShellGrid>) -> Result<CentralSequencePair> {
    if n == 0 {
        return Err(Error::Config("sequence index n must be positive".into()));
    }
    if !h.is_real || h.domain != Domain::Spacetime || h.dim != grid.dim() {
        return Err(Error::Precondition(format!("seed {} must be a real spacetime function", h.label)));
    }
    match &h.support {
        Region::Ball { center, radius } if *radius <= 0.5 + 1e-12 && center.iter().all(|x| *x == 0.0) => {}
        other => {
            return Err(Error::Precondition(format!(
                "seed support {other:?} must be a ball of radius ≤ 1/2 about the origin"
            )))
        }
    }
    let member = |m: Member, tag: &str| TestFunction {
        label: format!("{tag}_{n}"),
        dim: h.dim,
        domain: Domain::Spacetime,
        support: Region::Ball { center: vec![0.0; h.dim], radius: 1.0 / n as f64 },
        is_real: true,
        descriptor: Descriptor::CentralSequence { n, member: m, seed: h.boxed() },
    };
    let h1 = member(Member::First, "h1");
    let h2 = member(Member::Second, "h2");
    let norm1 = restrict(&h1, grid)?.norm();
    let norm2 = restrict(&h2, grid)?.norm();
    if !(norm1 > 1e-300 && norm2 > 1e-300) {
        return Err(Error::Degenerate(format!("seed {} has vanishing shell norm at n = {n}", h.label)));
    }
    let normalize = |f: TestFunction, norm: f64, tag: &str| {
        let mut g = scale(&f, c(1.0 / norm, 0.0));
        g.label = format!("{tag}_{n}");
        g.support = f.support;
        g
    };
    Ok(CentralSequencePair { n, f1: normalize(h1, norm1, "f1"), f2: normalize(h2, norm2, "f2"), norm1, norm2 })
}

/// ⟨f₁ + if₂ | τ_a(f₁ − if₂)⟩.
pub fn coherence_scalar(pair: &CentralSequencePair, a: &[f64], grid: &Arc<MassShellGrid>) -> Result<Complex64> {
    let u1 = restrict(&pair.f1, grid)?;
    let u2 = restrict(&pair.f2, grid)?;
    let left = u1.add_scaled(I, &u2)?;
    let right = u1.add_scaled(-I, &u2)?;
    // τ_a acts on shell by the phase e^{i(ωa₀ − p·a)}.
    let mut shifted = right.clone();
    for (i, v) in shifted.values.iter_mut().enumerate() {
        let mut ph = grid.omega(i) * a[0];
        for (pk, ak) in grid.momentum(i).iter().zip(&a[1..]) {
            ph -= pk * ak;
        }
        *v *= Complex64::from_polar(1.0, ph);
    }
    inner_product(&left, &shifted)
}

/// Output of [`string_function`]: the time-zero layer h = δ(x₀)k(x) and
/// the two spatial functions whose supports carry the localization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StringFunction {
    pub h: TestFunction,
    /// k, vanishing on one side of the slab.
    pub datum: TestFunction,
    /// (2π)^{(1−d)/2} ∫ dp/ω k̃ e^{ipx}, vanishing on the other side.
    pub dual: TestFunction,
    pub slab: (f64, f64),
    pub branch: Branch,
    /// Constant c in h̃(p) = c·k̃(p).
    pub constant: f64,
}

/// The string-localized smearing function built from l supported in
/// {0 < x₁ < a}.
pub fn string_function(a: f64, l: &TestFunction, which: Branch, m: f64) -> Result<StringFunction> {
    string_function_in((0.0, a), l, which, m)
}

/// As [`string_function`] for the translated slab {s₀ < x₁ < s₁}.
pub fn string_function_in(slab: (f64, f64), l: &TestFunction, which: Branch, m: f64) -> Result<StringFunction> {
    let (s0, s1) = slab;
    if !(s1 > s0) {
        return Err(Error::Config(format!("slab ({s0}, {s1}) must have positive width")));
    }
    if l.domain != Domain::Spatial {
        return Err(Error::Precondition(format!("{} must be a spatial function", l.label)));
    }
    let (lo, hi) = match &l.support {
        Region::Ball { center, radius } => (center[0] - radius, center[0] + radius),
        Region::Slab { lo, hi } => (*lo, *hi),
        other => return Err(Error::Precondition(format!("support {other:?} of l is not bounded in x₁"))),
    };
    if !(lo > s0 && hi < s1) {
        return Err(Error::Precondition(format!(
            "support [{lo}, {hi}] of {} is not inside the slab ({s0}, {s1})",
            l.label
        )));
    }
    let constant = (2.0 * PI).powf(-0.5);
    let datum_desc = Descriptor::StringDatum { l: l.boxed(), mass: m, branch: which };
    let (datum_region, dual_region, h_region) = match which {
        Branch::LowerVanishing => (
            Region::RightRay { edge: lo },
            Region::LeftRay { edge: hi },
            Region::RightRay { edge: lo },
        ),
        Branch::UpperVanishing => (
            Region::LeftRay { edge: hi },
            Region::RightRay { edge: lo },
            Region::LeftRay { edge: hi },
        ),
    };
    let spatial = |label: String, descriptor, support| TestFunction {
        label,
        dim: l.dim,
        domain: Domain::Spatial,
        support,
        is_real: false,
        descriptor,
    };
    let tag = match which {
        Branch::LowerVanishing => "lower",
        Branch::UpperVanishing => "upper",
    };
    Ok(StringFunction {
        h: TestFunction {
            label: format!("string_{tag}({})", l.label),
            dim: l.dim + 1,
            domain: Domain::Spacetime,
            support: h_region,
            is_real: false,
            descriptor: Descriptor::TimeZeroLayer { inner: Box::new(datum_desc.clone()), constant },
        },
        datum: spatial(format!("k_{tag}({})", l.label), datum_desc, datum_region),
        dual: spatial(
            format!("dual_{tag}({})", l.label),
            Descriptor::StringDual { l: l.boxed(), mass: m, branch: which },
            dual_region,
        ),
        slab,
        branch: which,
        constant,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// Trapezoid nodes per momentum axis.
    pub nodes: usize,
    /// Momentum half-width; defaults to the descriptor's band limit.
    pub k_max: Option<f64>,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions { nodes: 512, k_max: None }
    }
}

/// Inverse transform of f at the given position points by a tensor
/// trapezoid sum over [−K, K]^D.
pub fn position_profile(f: &TestFunction, points: &[Vec<f64>], opts: &ProfileOptions) -> Result<Vec<Complex64>> {
    let dim = f.dim;
    if points.iter().any(|x| x.len() != dim) {
        return Err(Error::Structural(format!("points must have {dim} components")));
    }
    let kmax = match opts.k_max.or_else(|| f.descriptor.band_limit()) {
        Some(k) if k > 0.0 && k.is_finite() => k,
        _ => return Err(Error::Config(format!("no momentum range known for {}", f.label))),
    };
    let n = opts.nodes;
    if n < 8 {
        return Err(Error::Config("profile needs at least 8 nodes per axis".into()));
    }
    let dp = 2.0 * kmax / n as f64;
    let axis: Vec<f64> = (0..n).map(|j| -kmax + (j as f64 + 0.5) * dp).collect();
    let total = n.pow(dim as u32);
    // Row-major, last axis fastest.
    let samples: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut p = [0.0; 4];
            let mut rem = flat;
            for k in (0..dim).rev() {
                p[k] = axis[rem % n];
                rem /= n;
            }
            f.eval(&p[..dim])
        })
        .collect();
    let spacetime = f.domain == Domain::Spacetime;
    let norm = (dp / (2.0 * PI).sqrt()).powi(dim as i32);
    Ok(points
        .par_iter()
        .map(|x| {
            // Per-axis kernels e^{∓i p_k x_k}, contracted one axis at a time.
            let kernels: Vec<Vec<Complex64>> = (0..dim)
                .map(|k| {
                    let sign = if spacetime && k == 0 { -1.0 } else { 1.0 };
                    axis.iter().map(|p| Complex64::from_polar(1.0, sign * p * x[k])).collect()
                })
                .collect();
            let contract = |data: &[Complex64], kernel: &[Complex64]| -> Vec<Complex64> {
                data.chunks(n).map(|row| row.iter().zip(kernel).map(|(a, b)| a * b).sum()).collect()
            };
            let mut current = contract(&samples, &kernels[dim - 1]);
            for k in (0..dim - 1).rev() {
                current = contract(&current, &kernels[k]);
            }
            current[0] * norm
        })
        .collect())
}
