//! Positive mass shell kinematics.
//!
//! The one-particle space is L²(M, dp/(2ω)) with the normalization
//! ⟨f|g⟩ = π ∫ dp/ω conj(f̃) g̃. In d = 2 the shell is parameterized by
//! rapidity (dp/ω = dθ), in d ≥ 3 by a tensor rule in the spatial momentum.
//! Vectors are the on-shell samples of f̃; values on the lower shell enter
//! only through the conjugation identity (f̄)~(p) = conj f̃(-p).

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::quadrature;
use crate::testfn::{self, TestFunction};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Spacetime dimension.
    pub d: usize,
    /// Particle mass.
    pub m: f64,
}

impl ModelConfig {
    pub fn new(d: usize, m: f64) -> Result<Self> {
        let cfg = ModelConfig { d, m };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=4).contains(&self.d) {
            return Err(Error::Config(format!("dimension d = {} not in 2..=4", self.d)));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::Config(format!("mass m = {} must be positive", self.m)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Nodes per axis. In d = 2 with `phase_scale > 0` this is a lower bound.
    pub nodes: usize,
    /// Rapidity cutoff (d = 2).
    pub theta_max: f64,
    /// Momentum cutoff per axis (d ≥ 3); defaults to 8m.
    pub momentum_cutoff: Option<f64>,
    /// Largest spacetime displacement whose phase e^{ip·a} must be resolved
    /// (d = 2). Zero means uniform panels.
    pub phase_scale: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { nodes: 256, theta_max: 7.0, momentum_cutoff: None, phase_scale: 0.0 }
    }
}

impl GridSpec {
    pub fn rapidity(nodes: usize, theta_max: f64) -> Self {
        GridSpec { nodes, theta_max, ..Default::default() }
    }

    pub fn resolving(nodes: usize, theta_max: f64, phase_scale: f64) -> Self {
        GridSpec { nodes, theta_max, phase_scale, ..Default::default() }
    }

    pub fn tensor(nodes: usize, cutoff: f64) -> Self {
        GridSpec { nodes, momentum_cutoff: Some(cutoff), ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization {
    Rapidity,
    Tensor,
}

static GRID_IDS: AtomicU64 = AtomicU64::new(1);

#[derive(Debug)]
pub struct MassShellGrid {
    id: u64,
    pub config: ModelConfig,
    pub spec: GridSpec,
    pub parameterization: Parameterization,
    spatial: Vec<f64>,
    omega: Vec<f64>,
    weights: Vec<f64>,
    theta: Vec<f64>,
}

/// Build a quadrature grid on the positive mass shell.
pub fn build_grid(config: ModelConfig, spec: GridSpec) -> Result<Arc<MassShellGrid>> {
    config.validate()?;
    if spec.nodes < 8 {
        return Err(Error::Config(format!("resolution {} below 8 nodes per axis", spec.nodes)));
    }
    let m = config.m;
    let dsp = config.d - 1;
    let (spatial, omega, weights, theta, param) = if config.d == 2 {
        if !(m * spec.theta_max.sinh() > m) || !spec.theta_max.is_finite() {
            return Err(Error::Config(format!(
                "rapidity cutoff {} gives momentum cutoff below m",
                spec.theta_max
            )));
        }
        if spec.phase_scale < 0.0 || !spec.phase_scale.is_finite() {
            return Err(Error::Config("phase_scale must be finite and non-negative".into()));
        }
        let (th, w) = rapidity_rule(&spec, m);
        let spatial: Vec<f64> = th.iter().map(|t| m * t.sinh()).collect();
        let omega: Vec<f64> = th.iter().map(|t| m * t.cosh()).collect();
        let weights: Vec<f64> = w.iter().map(|w| PI * w).collect();
        (spatial, omega, weights, th, Parameterization::Rapidity)
    } else {
        let cut = spec.momentum_cutoff.unwrap_or(8.0 * m);
        if !(cut > m) || !cut.is_finite() {
            return Err(Error::Config(format!("momentum cutoff {cut} must exceed m = {m}")));
        }
        let (x, w) = quadrature::symmetric_rule(spec.nodes, cut);
        let n = x.len();
        let total = n.pow(dsp as u32);
        let mut spatial = Vec::with_capacity(total * dsp);
        let mut omega = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut p2 = 0.0;
            let mut wt = 1.0;
            for _ in 0..dsp {
                let k = rem % n;
                rem /= n;
                spatial.push(x[k]);
                p2 += x[k] * x[k];
                wt *= w[k];
            }
            let om = (p2 + m * m).sqrt();
            omega.push(om);
            weights.push(PI * wt / om);
        }
        (spatial, omega, weights, Vec::new(), Parameterization::Tensor)
    };
    Ok(Arc::new(MassShellGrid {
        id: GRID_IDS.fetch_add(1, Ordering::Relaxed),
        config,
        spec,
        parameterization: param,
        spatial,
        omega,
        weights,
        theta,
    }))
}

fn rapidity_rule(spec: &GridSpec, m: f64) -> (Vec<f64>, Vec<f64>) {
    const PANEL: usize = 16;
    let big = spec.theta_max;
    if spec.phase_scale == 0.0 {
        return quadrature::symmetric_rule(spec.nodes, big);
    }
    // Panels on [0, Θ] whose width keeps the phase change m·s·cosh θ·h below
    // 8 radians, then mirrored.
    let uniform = 2.0 * big / (spec.nodes as f64 / PANEL as f64).max(1.0);
    let mut edges = vec![0.0];
    let mut t = 0.0;
    while t < big {
        let mut h = uniform;
        for _ in 0..4 {
            let rate = m * spec.phase_scale * (t + h).min(big).cosh();
            h = uniform.min(8.0 / rate);
        }
        t = (t + h).min(big);
        if big - t < 1e-12 {
            t = big;
        }
        edges.push(t);
    }
    let mut full: Vec<f64> = edges.iter().rev().map(|e| -e).collect();
    full.extend_from_slice(&edges[1..]);
    let (mut x, w) = quadrature::composite(&full, PANEL);
    quadrature::symmetrize(&mut x);
    (x, w)
}

impl MassShellGrid {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.config.d
    }

    pub fn mass(&self) -> f64 {
        self.config.m
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// Spatial momentum of node `i`.
    pub fn momentum(&self, i: usize) -> &[f64] {
        let k = self.config.d - 1;
        &self.spatial[i * k..(i + 1) * k]
    }

    pub fn omega(&self, i: usize) -> f64 {
        self.omega[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Rapidities of the nodes (d = 2 only; empty otherwise).
    pub fn rapidities(&self) -> &[f64] {
        &self.theta
    }

    /// The on-shell point ±(ω, p) of node `i`, written into `buf[..d]`.
    pub fn shell_point(&self, i: usize, sign: f64, buf: &mut [f64; 4]) {
        buf[0] = sign * self.omega[i];
        for (b, p) in buf[1..].iter_mut().zip(self.momentum(i)) {
            *b = sign * p;
        }
    }

    pub fn same_as(&self, other: &MassShellGrid) -> bool {
        self.id == other.id
    }
}

#[derive(Clone, Debug)]
pub struct OneParticleVector {
    pub grid: Arc<MassShellGrid>,
    pub values: Vec<Complex64>,
}

impl OneParticleVector {
    pub fn zeros(grid: &Arc<MassShellGrid>) -> Self {
        OneParticleVector { grid: grid.clone(), values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().zip(self.grid.weights()).map(|(v, w)| w * v.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        OneParticleVector { grid: self.grid.clone(), values: self.values.iter().map(|v| v * s).collect() }
    }

    /// self + s·other.
    pub fn add_scaled(&self, s: Complex64, other: &OneParticleVector) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(OneParticleVector {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect(),
        })
    }
}

/// On-shell samples f̃(ω(p), p).
pub fn restrict(f: &TestFunction, grid: &Arc<MassShellGrid>) -> Result<OneParticleVector> {
    restrict_signed(f, grid, 1.0)
}

fn restrict_signed(f: &TestFunction, grid: &Arc<MassShellGrid>, sign: f64) -> Result<OneParticleVector> {
    if f.dim != grid.dim() || f.domain != testfn::Domain::Spacetime {
        return Err(Error::Precondition(format!(
            "{} is not a spacetime function of dimension {}",
            f.label,
            grid.dim()
        )));
    }
    let values: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut p = [0.0; 4];
            grid.shell_point(i, sign, &mut p);
            f.eval(&p[..grid.dim()])
        })
        .collect();
    if let Some(node) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Evaluation { node, message: format!("non-finite value of {}", f.label) });
    }
    Ok(OneParticleVector { grid: grid.clone(), values })
}

/// Σ w conj(u) v.
pub fn inner_product(u: &OneParticleVector, v: &OneParticleVector) -> Result<Complex64> {
    if !u.grid.same_as(&v.grid) {
        return Err(Error::GridMismatch);
    }
    Ok(u.values
        .iter()
        .zip(&v.values)
        .zip(u.grid.weights())
        .map(|((a, b), w)| a.conj() * b * w)
        .sum())
}

/// ⟨f̄|g⟩, the vacuum two-point function ⟨Ω, φ(f)φ(g)Ω⟩.
pub fn two_point(f: &TestFunction, g: &TestFunction, grid: &Arc<MassShellGrid>) -> Result<Complex64> {
    inner_product(&restrict(&testfn::conjugate(f), grid)?, &restrict(g, grid)?)
}

/// ⟨f̄|g⟩ − ⟨ḡ|f⟩.
pub fn commutator_value(f: &TestFunction, g: &TestFunction, grid: &Arc<MassShellGrid>) -> Result<Complex64> {
    Ok(two_point(f, g, grid)? - two_point(g, f, grid)?)
}

/// ⟨ḡ|f⟩ + ⟨f̄|g⟩.
pub fn anticommutator_value(f: &TestFunction, g: &TestFunction, grid: &Arc<MassShellGrid>) -> Result<Complex64> {
    Ok(two_point(g, f, grid)? + two_point(f, g, grid)?)
}

/// x ↦ {φ(h), φ(δ_x)}, the anticommutator function of h.
///
/// Any spacetime function is accepted; for a time-zero layer
/// h = δ(x₀)k(x) this is the propagated Cauchy datum of k.
pub fn pauli_jordan_profile(
    h: &TestFunction,
    points: &[Vec<f64>],
    grid: &Arc<MassShellGrid>,
) -> Result<Vec<Complex64>> {
    if points.is_empty() {
        return Err(Error::Structural("empty point list".into()));
    }
    let d = grid.dim();
    if let Some(bad) = points.iter().find(|x| x.len() != d) {
        return Err(Error::Structural(format!("point {bad:?} is not a {d}-vector")));
    }
    let plus = restrict(h, grid)?;
    let minus = restrict_signed(h, grid, -1.0)?;
    let norm = (2.0 * PI).powf(-(d as f64) / 2.0);
    Ok(points
        .par_iter()
        .map(|x| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..grid.len() {
                let p = grid.momentum(i);
                let mut phase = grid.omega(i) * x[0];
                for (pk, xk) in p.iter().zip(&x[1..]) {
                    phase -= pk * xk;
                }
                let e = Complex64::from_polar(norm, phase);
                // h̃(−p)δ̃_x(p) + δ̃_x(−p)h̃(p)
                acc += grid.weight(i) * (minus.values[i] * e + e.conj() * plus.values[i]);
            }
            acc
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        let cfg = ModelConfig::new(2, 1.0).unwrap();
        assert!(build_grid(cfg, GridSpec::rapidity(4, 6.0)).is_err());
        assert!(build_grid(cfg, GridSpec::rapidity(64, 0.5)).is_err());
        assert!(ModelConfig::new(1, 1.0).is_err());
        assert!(ModelConfig::new(2, 0.0).is_err());
        let cfg3 = ModelConfig::new(3, 1.0).unwrap();
        assert!(build_grid(cfg3, GridSpec::tensor(16, 0.5)).is_err());
    }

    #[test]
    fn resolving_grid_is_symmetric_and_denser_far_out() {
        let cfg = ModelConfig::new(2, 1.0).unwrap();
        let g = build_grid(cfg, GridSpec::resolving(64, 10.0, 1.0)).unwrap();
        let th = g.rapidities();
        let n = th.len();
        for i in 0..n {
            assert_eq!(th[i], -th[n - 1 - i]);
        }
        assert!(n > 64);
        let total: f64 = g.weights().iter().sum::<f64>() / PI;
        assert!((total - 20.0).abs() < 1e-12);
    }
}
