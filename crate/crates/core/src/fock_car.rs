//! CAR field on the antisymmetric Fock space over a finite mode span.
//!
//! Modes e₀ … e_{M−1} are orthonormalized one-particle vectors. A basis
//! state is a bit mask s (bit k set when e_k is occupied) and stands for
//! e_{k₁} ∧ e_{k₂} ∧ ⋯ with k₁ < k₂ < ⋯. Creation prepends, so
//! a†_k|s⟩ = (−1)^{#{j ∈ s : j < k}} |s ∪ {k}⟩. With this ordering φ(f)
//! reproduces |f⟩ ∧ |f₁⟩ ∧ ⋯ + Σ_k (−1)^{k+1} ⟨f̄|f_k⟩ (… omit f_k …) on
//! generating vectors, and all algebraic identities hold exactly in the span.

use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::mass_shell::{inner_product, restrict, MassShellGrid, OneParticleVector};
use crate::testfn::{conjugate, TestFunction};
use crate::{Error, Result};

pub const DEFAULT_MAX_MODES: usize = 12;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

static BASIS_IDS: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DropRecord {
    pub input: usize,
    /// Norm after projection, relative to the input norm.
    pub residual: f64,
}

#[derive(Debug)]
pub struct ModeBasis {
    id: u64,
    pub grid: Arc<MassShellGrid>,
    pub modes: Vec<OneParticleVector>,
    /// Coefficients of each input vector in the modes.
    pub expansions: Vec<Vec<Complex64>>,
    pub dropped: Vec<DropRecord>,
    pub tolerance: f64,
}

impl ModeBasis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Dimension 2^M of the truncated Fock space.
    pub fn fock_dim(&self) -> usize {
        1 << self.modes.len()
    }

    pub fn same_as(&self, other: &ModeBasis) -> bool {
        self.id == other.id
    }

    /// Coefficients ⟨e_k|v⟩, failing when v is not in the span.
    pub fn coefficients(&self, v: &OneParticleVector) -> Result<Vec<Complex64>> {
        if !v.grid.same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        let coeffs: Vec<Complex64> = self.modes.iter().map(|e| inner_product(e, v)).collect::<Result<_>>()?;
        let mut rest = v.clone();
        for (e, ck) in self.modes.iter().zip(&coeffs) {
            rest = rest.add_scaled(-ck, e)?;
        }
        let scale = v.norm();
        let residual = if scale > 0.0 { rest.norm() / scale } else { 0.0 };
        if residual > self.tolerance.max(1e-12) * 10.0 {
            return Err(Error::OutOfSpan { residual });
        }
        Ok(coeffs)
    }

    /// Gram matrix of the modes minus the identity, max entry.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.modes.iter().enumerate() {
            for (j, b) in self.modes.iter().enumerate() {
                let g = inner_product(a, b).unwrap_or_default();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }
}

/// Modified Gram–Schmidt (two passes) over the inputs; an input whose
/// projected norm falls below `tol` times its own norm is dropped.
pub fn build_modes(vectors: &[OneParticleVector], tol: f64) -> Result<Arc<ModeBasis>> {
    build_modes_limited(vectors, tol, DEFAULT_MAX_MODES)
}

pub fn build_modes_limited(vectors: &[OneParticleVector], tol: f64, max_modes: usize) -> Result<Arc<ModeBasis>> {
    let first = vectors.first().ok_or_else(|| Error::Structural("no input vectors".into()))?;
    if !(tol > 0.0) {
        return Err(Error::Config(format!("Gram–Schmidt tolerance {tol} must be positive")));
    }
    let grid = first.grid.clone();
    let mut modes: Vec<OneParticleVector> = Vec::new();
    let mut dropped = Vec::new();
    for (idx, v) in vectors.iter().enumerate() {
        if !v.grid.same_as(&grid) {
            return Err(Error::GridMismatch);
        }
        let size = v.norm();
        let mut w = v.clone();
        for _ in 0..2 {
            for e in &modes {
                let ck = inner_product(e, &w)?;
                w = w.add_scaled(-ck, e)?;
            }
        }
        let rest = w.norm();
        let rel = if size > 0.0 { rest / size } else { 0.0 };
        if size == 0.0 || rel < tol {
            dropped.push(DropRecord { input: idx, residual: rel });
            continue;
        }
        modes.push(w.scaled(Complex64::new(1.0 / rest, 0.0)));
    }
    if modes.is_empty() {
        return Err(Error::EmptyBasis);
    }
    if modes.len() > max_modes {
        return Err(Error::Capacity { requested: modes.len(), max: max_modes });
    }
    let mut basis = ModeBasis {
        id: BASIS_IDS.fetch_add(1, Ordering::Relaxed),
        grid,
        modes,
        expansions: Vec::new(),
        dropped,
        tolerance: tol,
    };
    basis.expansions = vectors
        .iter()
        .map(|v| basis.modes.iter().map(|e| inner_product(e, v)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    Ok(Arc::new(basis))
}

/// Basis spanning |f⟩ and |f̄⟩ for every function of the working set.
pub fn basis_for(functions: &[&TestFunction], grid: &Arc<MassShellGrid>, tol: f64) -> Result<Arc<ModeBasis>> {
    let mut vectors = Vec::with_capacity(2 * functions.len());
    for f in functions {
        vectors.push(restrict(f, grid)?);
        if !f.is_real {
            vectors.push(restrict(&conjugate(f), grid)?);
        }
    }
    build_modes(&vectors, tol)
}

#[derive(Clone, Debug)]
pub struct FockOperator {
    pub matrix: DMatrix<Complex64>,
    pub basis: Arc<ModeBasis>,
    pub label: String,
}

#[derive(Clone, Debug)]
pub struct FockVector {
    pub components: DVector<Complex64>,
    pub basis: Arc<ModeBasis>,
}

impl FockVector {
    pub fn vacuum(basis: &Arc<ModeBasis>) -> Self {
        let mut components = DVector::zeros(basis.fock_dim());
        components[0] = Complex64::new(1.0, 0.0);
        FockVector { components, basis: basis.clone() }
    }

    pub fn norm(&self) -> f64 {
        self.components.norm()
    }

    pub fn inner(&self, other: &FockVector) -> Result<Complex64> {
        if !self.basis.same_as(&other.basis) {
            return Err(Error::BasisMismatch);
        }
        Ok(self.components.dotc(&other.components))
    }
}

impl FockOperator {
    pub fn identity(basis: &Arc<ModeBasis>) -> Self {
        let n = basis.fock_dim();
        FockOperator { matrix: DMatrix::identity(n, n), basis: basis.clone(), label: "1".into() }
    }

    pub fn zero(basis: &Arc<ModeBasis>) -> Self {
        let n = basis.fock_dim();
        FockOperator { matrix: DMatrix::zeros(n, n), basis: basis.clone(), label: "0".into() }
    }

    fn compatible(&self, other: &FockOperator) -> Result<()> {
        if self.basis.same_as(&other.basis) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    pub fn mul(&self, other: &FockOperator) -> Result<FockOperator> {
        self.compatible(other)?;
        Ok(FockOperator {
            matrix: &self.matrix * &other.matrix,
            basis: self.basis.clone(),
            label: format!("{}·{}", self.label, other.label),
        })
    }

    pub fn add(&self, other: &FockOperator) -> Result<FockOperator> {
        self.compatible(other)?;
        Ok(FockOperator {
            matrix: &self.matrix + &other.matrix,
            basis: self.basis.clone(),
            label: format!("{}+{}", self.label, other.label),
        })
    }

    pub fn sub(&self, other: &FockOperator) -> Result<FockOperator> {
        self.compatible(other)?;
        Ok(FockOperator {
            matrix: &self.matrix - &other.matrix,
            basis: self.basis.clone(),
            label: format!("{}-{}", self.label, other.label),
        })
    }

    pub fn scaled(&self, s: Complex64) -> FockOperator {
        FockOperator { matrix: &self.matrix * s, basis: self.basis.clone(), label: format!("({s}){}", self.label) }
    }

    pub fn adjoint(&self) -> FockOperator {
        FockOperator { matrix: self.matrix.adjoint(), basis: self.basis.clone(), label: format!("{}*", self.label) }
    }

    pub fn anticommutator(&self, other: &FockOperator) -> Result<FockOperator> {
        self.mul(other)?.add(&other.mul(self)?)
    }

    pub fn commutator(&self, other: &FockOperator) -> Result<FockOperator> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        if self.matrix.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
            return 0.0;
        }
        self.matrix.singular_values().max()
    }

    /// ‖A − s·1‖.
    pub fn distance_to_scalar(&self, s: Complex64) -> f64 {
        let n = self.matrix.nrows();
        let shifted = &self.matrix - DMatrix::<Complex64>::identity(n, n) * s;
        FockOperator { matrix: shifted, basis: self.basis.clone(), label: String::new() }.norm()
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        if !self.basis.same_as(&v.basis) {
            return Err(Error::BasisMismatch);
        }
        Ok(FockVector { components: &self.matrix * &v.components, basis: v.basis.clone() })
    }

    /// ⟨Ω, A Ω⟩.
    pub fn vacuum_expectation(&self) -> Complex64 {
        self.matrix[(0, 0)]
    }

    /// Little-endian dump: u64 rows, u64 cols, then row-major (re, im) f64 pairs.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(&(self.matrix.nrows() as u64).to_le_bytes())?;
        out.write_all(&(self.matrix.ncols() as u64).to_le_bytes())?;
        for i in 0..self.matrix.nrows() {
            for j in 0..self.matrix.ncols() {
                let z = self.matrix[(i, j)];
                out.write_all(&z.re.to_le_bytes())?;
                out.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(bytes: &[u8], basis: &Arc<ModeBasis>) -> Result<FockOperator> {
        let word = |k: usize| -> Result<[u8; 8]> {
            bytes
                .get(8 * k..8 * k + 8)
                .and_then(|s| s.try_into().ok())
                .ok_or_else(|| Error::Structural("truncated matrix dump".into()))
        };
        let rows = u64::from_le_bytes(word(0)?) as usize;
        let cols = u64::from_le_bytes(word(1)?) as usize;
        if rows != basis.fock_dim() || cols != rows {
            return Err(Error::Structural(format!("dump is {rows}x{cols}, basis needs {}", basis.fock_dim())));
        }
        let mut m = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let k = 2 + 2 * (i * cols + j);
                m[(i, j)] = Complex64::new(f64::from_le_bytes(word(k)?), f64::from_le_bytes(word(k + 1)?));
            }
        }
        Ok(FockOperator { matrix: m, basis: basis.clone(), label: "dump".into() })
    }
}

fn sign_below(state: usize, k: usize) -> f64 {
    if (state & ((1usize << k) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_mode(i: usize, basis: &ModeBasis) -> Result<()> {
    if i >= basis.len() {
        return Err(Error::Structural(format!("mode {i} out of range for M = {}", basis.len())));
    }
    Ok(())
}

/// a†(e_i).
pub fn creation(i: usize, basis: &Arc<ModeBasis>) -> Result<FockOperator> {
    check_mode(i, basis)?;
    let n = basis.fock_dim();
    let mut m = DMatrix::zeros(n, n);
    for s in 0..n {
        if s & (1 << i) == 0 {
            m[(s | (1 << i), s)] = Complex64::new(sign_below(s, i), 0.0);
        }
    }
    Ok(FockOperator { matrix: m, basis: basis.clone(), label: format!("a†{i}") })
}

/// a(e_i).
pub fn annihilation(i: usize, basis: &Arc<ModeBasis>) -> Result<FockOperator> {
    Ok(FockOperator { label: format!("a{i}"), ..creation(i, basis)?.adjoint() })
}

/// Σ α_k a†_k + Σ conj(β_k) a_k.
fn ladder_combination(alpha: &[Complex64], beta: &[Complex64], basis: &Arc<ModeBasis>, label: String) -> FockOperator {
    let n = basis.fock_dim();
    let mut m = DMatrix::zeros(n, n);
    for s in 0..n {
        for k in 0..basis.len() {
            let bit = 1 << k;
            let sg = sign_below(s, k);
            if s & bit == 0 {
                m[(s | bit, s)] += alpha[k] * sg;
            } else {
                m[(s & !bit, s)] += beta[k].conj() * sg;
            }
        }
    }
    FockOperator { matrix: m, basis: basis.clone(), label }
}

fn shell_coefficients(f: &TestFunction, basis: &Arc<ModeBasis>) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let alpha = basis.coefficients(&restrict(f, &basis.grid)?)?;
    let beta = basis.coefficients(&restrict(&conjugate(f), &basis.grid)?)?;
    Ok((alpha, beta))
}

fn check_grid(basis: &ModeBasis, grid: &Arc<MassShellGrid>) -> Result<()> {
    if basis.grid.same_as(grid) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// φ(f) = φ₊(f) + φ₋(f).
pub fn field(f: &TestFunction, basis: &Arc<ModeBasis>, grid: &Arc<MassShellGrid>) -> Result<FockOperator> {
    check_grid(basis, grid)?;
    let (alpha, beta) = shell_coefficients(f, basis)?;
    Ok(ladder_combination(&alpha, &beta, basis, format!("φ({})", f.label)))
}

/// φ₊(f), creating |f⟩.
pub fn field_plus(f: &TestFunction, basis: &Arc<ModeBasis>, grid: &Arc<MassShellGrid>) -> Result<FockOperator> {
    check_grid(basis, grid)?;
    let alpha = basis.coefficients(&restrict(f, grid)?)?;
    let zero = vec![Complex64::new(0.0, 0.0); basis.len()];
    Ok(ladder_combination(&alpha, &zero, basis, format!("φ₊({})", f.label)))
}

/// φ₋(f), annihilating along ⟨f̄|·⟩.
pub fn field_minus(f: &TestFunction, basis: &Arc<ModeBasis>, grid: &Arc<MassShellGrid>) -> Result<FockOperator> {
    check_grid(basis, grid)?;
    let beta = basis.coefficients(&restrict(&conjugate(f), grid)?)?;
    let zero = vec![Complex64::new(0.0, 0.0); basis.len()];
    Ok(ladder_combination(&zero, &beta, basis, format!("φ₋({})", f.label)))
}

fn diagonal(basis: &Arc<ModeBasis>, label: &str, entry: impl Fn(u32) -> f64) -> FockOperator {
    let n = basis.fock_dim();
    let mut m = DMatrix::zeros(n, n);
    for s in 0..n {
        m[(s, s)] = Complex64::new(entry(s.count_ones()), 0.0);
    }
    FockOperator { matrix: m, basis: basis.clone(), label: label.into() }
}

/// Z = (−1)^N.
pub fn parity_z(basis: &Arc<ModeBasis>) -> FockOperator {
    diagonal(basis, "Z", |k| if k % 2 == 0 { 1.0 } else { -1.0 })
}

/// V = (−1)^{N(N−1)/2}.
pub fn klein_v(basis: &Arc<ModeBasis>) -> FockOperator {
    diagonal(basis, "V", |k| if (k * k.saturating_sub(1) / 2) % 2 == 0 { 1.0 } else { -1.0 })
}

pub fn number_n(basis: &Arc<ModeBasis>) -> FockOperator {
    diagonal(basis, "N", |k| k as f64)
}

/// ((1 + Z)/2, (1 − Z)/2).
pub fn parity_projectors(basis: &Arc<ModeBasis>) -> (FockOperator, FockOperator) {
    (
        diagonal(basis, "E+", |k| if k % 2 == 0 { 1.0 } else { 0.0 }),
        diagonal(basis, "E-", |k| if k % 2 == 0 { 0.0 } else { 1.0 }),
    )
}

/// φ̂(f) = Vφ(f)V⁻¹.
pub fn twisted_field(f: &TestFunction, basis: &Arc<ModeBasis>, grid: &Arc<MassShellGrid>) -> Result<FockOperator> {
    let v = klein_v(basis);
    let phi = field(f, basis, grid)?;
    let mut out = v.mul(&phi)?.mul(&v)?;
    out.label = format!("φ̂({})", f.label);
    Ok(out)
}

/// ‖Vφ(f)V⁻¹ − (φ₊(f) − φ₋(f))Z‖.
pub fn twisted_identity_residual(f: &TestFunction, basis: &Arc<ModeBasis>, grid: &Arc<MassShellGrid>) -> Result<f64> {
    let lhs = twisted_field(f, basis, grid)?;
    let rhs = field_plus(f, basis, grid)?.sub(&field_minus(f, basis, grid)?)?.mul(&parity_z(basis))?;
    Ok(lhs.sub(&rhs)?.norm())
}

/// Pfaffian of a complex antisymmetric matrix by Gaussian elimination with
/// pivoting.
pub fn pfaffian(a: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "pfaffian of a non-square matrix");
    let zero = Complex64::new(0.0, 0.0);
    if n % 2 == 1 {
        return zero;
    }
    let mut m = a.clone();
    let mut pf = Complex64::new(1.0, 0.0);
    let mut k = 0;
    while k + 1 < n {
        let (mut piv, mut best) = (k + 1, m[(k, k + 1)].norm());
        for j in k + 2..n {
            if m[(k, j)].norm() > best {
                best = m[(k, j)].norm();
                piv = j;
            }
        }
        if best == 0.0 {
            return zero;
        }
        if piv != k + 1 {
            m.swap_rows(k + 1, piv);
            m.swap_columns(k + 1, piv);
            pf = -pf;
        }
        let b = m[(k, k + 1)];
        pf *= b;
        for i in k + 2..n {
            for j in k + 2..n {
                let upd = (m[(k + 1, i)] * m[(k, j)] - m[(k, i)] * m[(k + 1, j)]) / b;
                m[(i, j)] += upd;
            }
        }
        k += 2;
    }
    pf
}

/// ⟨Ω, φ(f₁)⋯φ(f_n)Ω⟩ as the Pfaffian of A_ij = ⟨f̄_i|f_j⟩ (i < j).
pub fn vacuum_expectation_wick(fs: &[&TestFunction], grid: &Arc<MassShellGrid>) -> Result<Complex64> {
    let n = fs.len();
    if n % 2 == 1 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let plus: Vec<OneParticleVector> = fs.iter().map(|f| restrict(f, grid)).collect::<Result<_>>()?;
    let bars: Vec<OneParticleVector> = fs.iter().map(|f| restrict(&conjugate(f), grid)).collect::<Result<_>>()?;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = inner_product(&bars[i], &plus[j])?;
            a[(i, j)] = v;
            a[(j, i)] = -v;
        }
    }
    Ok(pfaffian(&a))
}

/// Product φ(f₁)⋯φ(f_n) in the given basis.
pub fn field_word(fs: &[&TestFunction], basis: &Arc<ModeBasis>, grid: &Arc<MassShellGrid>) -> Result<FockOperator> {
    let mut out = FockOperator::identity(basis);
    for f in fs {
        out = out.mul(&field(f, basis, grid)?)?;
    }
    Ok(out)
}
