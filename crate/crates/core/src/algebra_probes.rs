//! Operator-algebraic experiments on finite mode spans: Clifford
//! projections and their meets, the central-sequence nonlocality witness,
//! weak and relative locality, and string-localized elements of the local
//! net.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fock_car::{
    basis_for, field, parity_z, pfaffian, twisted_field, DropRecord, FockOperator, ModeBasis, DEFAULT_TOLERANCE,
};
use crate::mass_shell::{anticommutator_value, commutator_value, inner_product, pauli_jordan_profile, restrict, two_point, MassShellGrid};
use crate::testfn::{self, coherence_scalar, lemma32_pair, spatial_bump, string_function_in, translate, Branch, Region, StringFunction, TestFunction};
use crate::{c, Error, Result, I};

pub const MEET_THRESHOLD: f64 = 1e-8;
const PAIR_TOLERANCE: f64 = 1e-8;
const PROJECTION_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Below,
    Above,
    Holds,
    Recorded,
}

/// One tagged numeric entry of a report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: Option<f64>,
    pub relation: Relation,
    pub passed: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, tol: f64) -> Check {
        Check { name: name.into(), value, tolerance: Some(tol), relation: Relation::Below, passed: value < tol }
    }

    pub fn above(name: impl Into<String>, value: f64, tol: f64) -> Check {
        Check { name: name.into(), value, tolerance: Some(tol), relation: Relation::Above, passed: value > tol }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Check {
        Check {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            tolerance: None,
            relation: Relation::Holds,
            passed: ok,
        }
    }

    pub fn recorded(name: impl Into<String>, value: f64) -> Check {
        Check { name: name.into(), value, tolerance: None, relation: Relation::Recorded, passed: true }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub values: BTreeMap<String, f64>,
}

impl TableRow {
    pub fn new(label: impl Into<String>) -> Self {
        TableRow { label: label.into(), values: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.to_string(), v);
        self
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LocalityReport {
    pub title: String,
    pub checks: Vec<Check>,
    pub table: Vec<TableRow>,
    pub functions: Vec<TestFunction>,
    pub dropped: Vec<DropRecord>,
}

impl LocalityReport {
    pub fn new(title: impl Into<String>) -> Self {
        LocalityReport { title: title.into(), ..Default::default() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn absorb_basis(&mut self, basis: &ModeBasis) {
        self.dropped.extend(basis.dropped.iter().cloned());
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

/// max(|⟨f₁|f₁⟩ − 1|, |⟨f₂|f₂⟩ − 1|, |Re⟨f₁|f₂⟩|).
pub fn pair_defect(f1: &TestFunction, f2: &TestFunction, grid: &Arc<MassShellGrid>) -> Result<f64> {
    let u1 = restrict(f1, grid)?;
    let u2 = restrict(f2, grid)?;
    let n1 = inner_product(&u1, &u1)?.re;
    let n2 = inner_product(&u2, &u2)?.re;
    let r = inner_product(&u1, &u2)?.re;
    Ok((n1 - 1.0).abs().max((n2 - 1.0).abs()).max(r.abs()))
}

fn check_pair(f1: &TestFunction, f2: &TestFunction, grid: &Arc<MassShellGrid>) -> Result<()> {
    if !f1.is_real || !f2.is_real {
        return Err(Error::Precondition(format!("{} and {} must be real", f1.label, f2.label)));
    }
    let defect = pair_defect(f1, f2, grid)?;
    if defect > PAIR_TOLERANCE {
        return Err(Error::NonOrthonormal(defect));
    }
    Ok(())
}

/// P± = ½(1 ± iφ(f₁)φ(f₂)).
pub fn clifford_projection(
    f1: &TestFunction,
    f2: &TestFunction,
    sign: Sign,
    basis: &Arc<ModeBasis>,
    grid: &Arc<MassShellGrid>,
) -> Result<FockOperator> {
    check_pair(f1, f2, grid)?;
    let prod = field(f1, basis, grid)?.mul(&field(f2, basis, grid)?)?;
    let s = match sign {
        Sign::Plus => 0.5,
        Sign::Minus => -0.5,
    };
    let mut p = FockOperator::identity(basis).scaled(c(0.5, 0.0)).add(&prod.scaled(I * s))?;
    p.label = format!("P{}({},{})", if s > 0.0 { "+" } else { "-" }, f1.label, f2.label);
    Ok(p)
}

/// max(‖E² − E‖_F, ‖E* − E‖_F).
pub fn projection_defect(e: &FockOperator) -> f64 {
    let sq = &e.matrix * &e.matrix - &e.matrix;
    let herm = e.matrix.adjoint() - &e.matrix;
    sq.norm().max(herm.norm())
}

#[derive(Clone, Debug)]
pub struct Meet {
    pub projection: FockOperator,
    pub rank: usize,
    /// Smallest eigenvalue of (1 − E) + (1 − F).
    pub min_eigenvalue: f64,
    pub threshold: f64,
}

/// E ∧ F as the projection onto ker((1 − E) + (1 − F)).
pub fn meet(e: &FockOperator, f: &FockOperator) -> Result<Meet> {
    meet_with_threshold(e, f, MEET_THRESHOLD)
}

pub fn meet_with_threshold(e: &FockOperator, f: &FockOperator, threshold: f64) -> Result<Meet> {
    if !e.basis.same_as(&f.basis) {
        return Err(Error::BasisMismatch);
    }
    for p in [e, f] {
        let defect = projection_defect(p);
        if defect > PROJECTION_TOLERANCE {
            return Err(Error::NotProjection(defect));
        }
    }
    let n = e.matrix.nrows();
    let two = DMatrix::<Complex64>::identity(n, n) * c(2.0, 0.0);
    let h = &two - &e.matrix - &f.matrix;
    let h = (&h + h.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let mut proj = DMatrix::<Complex64>::zeros(n, n);
    let mut rank = 0;
    let mut min_eigenvalue = f64::INFINITY;
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        min_eigenvalue = min_eigenvalue.min(*lam);
        if *lam < threshold {
            let v: DVector<Complex64> = eig.eigenvectors.column(k).into_owned();
            proj += &v * v.adjoint();
            rank += 1;
        }
    }
    Ok(Meet {
        projection: FockOperator { matrix: proj, basis: e.basis.clone(), label: format!("{}∧{}", e.label, f.label) },
        rank,
        min_eigenvalue,
        threshold,
    })
}

/// The identities of the proof that P₊ ∧ Q₊ = 0, for S = ½φ(f₁ − if₂) and
/// T = ½φ(g₁ − ig₂).
pub fn st_identity_check(
    fpair: (&TestFunction, &TestFunction),
    gpair: (&TestFunction, &TestFunction),
    basis: &Arc<ModeBasis>,
    grid: &Arc<MassShellGrid>,
) -> Result<LocalityReport> {
    let (f1, f2) = fpair;
    let (g1, g2) = gpair;
    let p_plus = clifford_projection(f1, f2, Sign::Plus, basis, grid)?;
    let p_minus = clifford_projection(f1, f2, Sign::Minus, basis, grid)?;
    let q_plus = clifford_projection(g1, g2, Sign::Plus, basis, grid)?;
    let q_minus = clifford_projection(g1, g2, Sign::Minus, basis, grid)?;
    let fm = testfn::combination(&[(c(1.0, 0.0), f1), (-I, f2)])?;
    let gm = testfn::combination(&[(c(1.0, 0.0), g1), (-I, g2)])?;
    let fp = testfn::combination(&[(c(1.0, 0.0), f1), (I, f2)])?;
    let s = field(&fm, basis, grid)?.scaled(c(0.5, 0.0));
    let t = field(&gm, basis, grid)?.scaled(c(0.5, 0.0));
    let kappa = anticommutator_value(&fm, &gm, grid)? / 4.0;
    let reduced = inner_product(&restrict(&fp, grid)?, &restrict(&gm, grid)?)? / 2.0;
    let mut rep = LocalityReport::new("st_identity");
    let res = |a: &FockOperator, b: &FockOperator| -> Result<f64> { Ok(a.sub(b)?.norm()) };
    rep.push(Check::below("SS*=P+", res(&s.mul(&s.adjoint())?, &p_plus)?, 1e-10));
    rep.push(Check::below("S*S=P-", res(&s.adjoint().mul(&s)?, &p_minus)?, 1e-10));
    rep.push(Check::below("TT*=Q+", res(&t.mul(&t.adjoint())?, &q_plus)?, 1e-10));
    rep.push(Check::below("T*T=Q-", res(&t.adjoint().mul(&t)?, &q_minus)?, 1e-10));
    rep.push(Check::below("ST+TS=kappa", s.anticommutator(&t)?.distance_to_scalar(kappa), 1e-10));
    rep.push(Check::recorded("|kappa|", kappa.norm()));
    let separated = Region::Union { parts: vec![f1.support.clone(), f2.support.clone()] }
        .wedge_separated(&Region::Union { parts: vec![g1.support.clone(), g2.support.clone()] });
    let gap = (kappa - reduced).norm();
    if separated {
        rep.push(Check::below("kappa=half<f1+if2|g1-ig2>", gap, 1e-8));
    } else {
        rep.push(Check::recorded("kappa-half<f1+if2|g1-ig2>", gap));
    }
    rep.absorb_basis(basis);
    rep.functions = vec![f1.clone(), f2.clone(), g1.clone(), g2.clone()];
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessParams {
    pub n_values: Vec<u32>,
    pub seed: TestFunction,
    pub translation: Vec<f64>,
    pub probe: TestFunction,
    pub meet_threshold: f64,
    /// |κₙ| below this is treated as an exact zero by the coherence gate.
    pub gate_floor: f64,
    /// Allowed decrease between consecutive witness values.
    pub noise: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessRow {
    pub n: u32,
    /// ⟨f₁,ₙ|f₂,ₙ⟩ as (re, im).
    pub f1f2: [f64; 2],
    pub omega_p: f64,
    pub omega_q: f64,
    pub meet_rank: usize,
    pub lambda_min: f64,
    /// |κ'|²/4 ≤ λ_min with κ' the scalar of ST + TS; positive means
    /// P ∧ Q = 0 exactly.
    pub lambda_certificate: f64,
    /// |⟨f₁ + if₂|τ_a(f₁ − if₂)⟩|.
    pub coherence: f64,
    pub anticommutator_scalar: f64,
    pub omega_meet: f64,
    /// |ω(P ∧ Q) − ω(P)ω(Q)| with the numerical meet.
    pub witness: f64,
    /// ω(P)ω(Q), the witness when P ∧ Q = 0.
    pub witness_certified: f64,
    pub overlap1: f64,
    pub overlap2: f64,
    pub commutator_bound: f64,
    pub commutator_norm: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessReport {
    pub rows: Vec<WitnessRow>,
    pub translation: Vec<f64>,
    pub meet_threshold: f64,
    pub noise: f64,
    /// Witness nondecreasing within `noise`.
    pub monotone: bool,
    pub monotone_certified: bool,
    pub dropped: Vec<DropRecord>,
}

fn nondecreasing(values: &[f64], noise: f64) -> bool {
    values.windows(2).all(|w| w[1] >= w[0] - noise)
}

/// Per n: Pₙ from the central-sequence pair, Qₙ from its translate by a,
/// their meet and the vacuum witness, plus the centrality diagnostics.
pub fn central_sequence_experiment(params: &WitnessParams, grid: &Arc<MassShellGrid>) -> Result<WitnessReport> {
    let a = &params.translation;
    let rows: Vec<Result<(WitnessRow, Vec<DropRecord>)>> = params
        .n_values
        .par_iter()
        .map(|&n| -> Result<(WitnessRow, Vec<DropRecord>)> {
            let pair = lemma32_pair(n, &params.seed, grid)?;
            let coherence = coherence_scalar(&pair, a, grid)?;
            if coherence.norm() < params.gate_floor {
                return Err(Error::CoherenceGate { n: n as usize, value: coherence.norm() });
            }
            let (f1, f2) = (&pair.f1, &pair.f2);
            let g1 = translate(f1, a);
            let g2 = translate(f2, a);
            let basis = basis_for(&[f1, f2, &g1, &g2], grid, DEFAULT_TOLERANCE)?;
            let p = clifford_projection(f1, f2, Sign::Plus, &basis, grid)?;
            let q = clifford_projection(&g1, &g2, Sign::Plus, &basis, grid)?;
            let m = meet_with_threshold(&p, &q, params.meet_threshold)?;
            let omega_p = p.vacuum_expectation().re;
            let omega_q = q.vacuum_expectation().re;
            let omega_meet = m.projection.vacuum_expectation().re;
            let fm = testfn::combination(&[(c(1.0, 0.0), f1), (-I, f2)])?;
            let gm = testfn::combination(&[(c(1.0, 0.0), &g1), (-I, &g2)])?;
            let kprime = anticommutator_value(&fm, &gm, grid)? / 4.0;
            let f1f2 = inner_product(&restrict(f1, grid)?, &restrict(f2, grid)?)?;
            let probe = &params.probe;
            let gv = restrict(probe, grid)?;
            let overlap1 = inner_product(&restrict(f1, grid)?, &gv)?.norm();
            let overlap2 = inner_product(&restrict(f2, grid)?, &gv)?.norm();
            let pbasis = basis_for(&[f1, f2, probe], grid, DEFAULT_TOLERANCE)?;
            let pp = clifford_projection(f1, f2, Sign::Plus, &pbasis, grid)?;
            let phi_g = field(probe, &pbasis, grid)?;
            let phi1 = field(f1, &pbasis, grid)?.norm();
            let phi2 = field(f2, &pbasis, grid)?.norm();
            let commutator_norm = pp.commutator(&phi_g)?.norm();
            let mut dropped = basis.dropped.clone();
            dropped.extend(pbasis.dropped.iter().cloned());
            Ok((
                WitnessRow {
                    n,
                    f1f2: [f1f2.re, f1f2.im],
                    omega_p,
                    omega_q,
                    meet_rank: m.rank,
                    lambda_min: m.min_eigenvalue,
                    lambda_certificate: kprime.norm_sqr() / 4.0,
                    coherence: coherence.norm(),
                    anticommutator_scalar: kprime.norm(),
                    omega_meet,
                    witness: (omega_meet - omega_p * omega_q).abs(),
                    witness_certified: (omega_p * omega_q).abs(),
                    overlap1,
                    overlap2,
                    commutator_bound: overlap1 * phi2 + overlap2 * phi1,
                    commutator_norm,
                },
                dropped,
            ))
        })
        .collect();
    let mut out = Vec::new();
    let mut dropped = Vec::new();
    for r in rows {
        let (row, d) = r?;
        out.push(row);
        dropped.extend(d);
    }
    out.sort_by_key(|r| r.n);
    let w: Vec<f64> = out.iter().map(|r| r.witness).collect();
    let wc: Vec<f64> = out.iter().map(|r| r.witness_certified).collect();
    Ok(WitnessReport {
        monotone: nondecreasing(&w, params.noise),
        monotone_certified: nondecreasing(&wc, params.noise),
        rows: out,
        translation: a.clone(),
        meet_threshold: params.meet_threshold,
        noise: params.noise,
        dropped,
    })
}

/// Ordered sub-words (index subsets) of length ≤ max_len.
fn subwords(len: usize, max_len: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << len))
        .filter(|mask| mask.count_ones() as usize <= max_len)
        .map(|mask| (0..len).filter(|k| mask & (1 << k) != 0).collect())
        .collect()
}

/// ⟨Ω, X₁⋯X_r Ω⟩ by applying the factors right to left to Ω.
pub fn vacuum_value(ops: &[&FockOperator]) -> Complex64 {
    let Some(first) = ops.first() else {
        return c(1.0, 0.0);
    };
    let n = first.matrix.nrows();
    let mut v = DVector::<Complex64>::zeros(n);
    v[0] = c(1.0, 0.0);
    for op in ops.iter().rev() {
        v = &op.matrix * v;
    }
    v[0]
}

pub fn wick_from_table(indices: &[usize], table: &DMatrix<Complex64>) -> Complex64 {
    let n = indices.len();
    if n % 2 == 1 {
        return c(0.0, 0.0);
    }
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            a[(i, j)] = table[(indices[i], indices[j])];
            a[(j, i)] = -a[(i, j)];
        }
    }
    pfaffian(&a)
}

/// T_ij = ⟨f̄_i|f_j⟩, the pairings of the Wick expansion.
pub fn two_point_table(fs: &[&TestFunction], grid: &Arc<MassShellGrid>) -> Result<DMatrix<Complex64>> {
    let k = fs.len();
    let mut table = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            table[(i, j)] = two_point(fs[i], fs[j], grid)?;
        }
    }
    Ok(table)
}

/// |⟨Ω, ABΩ⟩ − ⟨Ω, BAΩ⟩| over all sub-words of A ⊂ W and B ⊂ W′.
pub fn weak_locality_check(
    a_word: &[TestFunction],
    b_word: &[TestFunction],
    grid: &Arc<MassShellGrid>,
    max_degree: usize,
) -> Result<LocalityReport> {
    let ra = Region::Union { parts: a_word.iter().map(|f| f.support.clone()).collect() };
    let rb = Region::Union { parts: b_word.iter().map(|f| f.support.clone()).collect() };
    if !ra.wedge_separated(&rb) {
        return Err(Error::Precondition("A and B supports are not in opposite wedges".into()));
    }
    weak_locality_residuals(a_word, b_word, grid, max_degree, "weak_locality", Some(1e-6))
}

/// The same residuals without the support precondition; `tol = None`
/// records instead of asserting (negative controls).
pub fn weak_locality_residuals(
    a_word: &[TestFunction],
    b_word: &[TestFunction],
    grid: &Arc<MassShellGrid>,
    max_degree: usize,
    title: &str,
    tol: Option<f64>,
) -> Result<LocalityReport> {
    let all: Vec<&TestFunction> = a_word.iter().chain(b_word).collect();
    let basis = basis_for(&all, grid, DEFAULT_TOLERANCE)?;
    let fields: Vec<FockOperator> = all.iter().map(|f| field(f, &basis, grid)).collect::<Result<_>>()?;
    let table = two_point_table(&all, grid)?;
    let na = a_word.len();
    let mut rep = LocalityReport::new(title);
    let (mut worst_m, mut worst_p, mut worst_c) = (0.0f64, 0.0f64, 0.0f64);
    for sa in subwords(na, max_degree) {
        for sb in subwords(b_word.len(), max_degree) {
            let ia: Vec<usize> = sa.clone();
            let ib: Vec<usize> = sb.iter().map(|j| j + na).collect();
            let ab: Vec<usize> = ia.iter().chain(&ib).copied().collect();
            let ba: Vec<usize> = ib.iter().chain(&ia).copied().collect();
            let ops = |idx: &[usize]| idx.iter().map(|&i| &fields[i]).collect::<Vec<_>>();
            let m_ab = vacuum_value(&ops(&ab));
            let m_ba = vacuum_value(&ops(&ba));
            let p_ab = wick_from_table(&ab, &table);
            let p_ba = wick_from_table(&ba, &table);
            let rm = (m_ab - m_ba).norm();
            let rp = (p_ab - p_ba).norm();
            let rc = (m_ab - p_ab).norm().max((m_ba - p_ba).norm());
            worst_m = worst_m.max(rm);
            worst_p = worst_p.max(rp);
            worst_c = worst_c.max(rc);
            rep.table.push(
                TableRow::new(format!("A{sa:?}B{sb:?}"))
                    .with("matrix", rm)
                    .with("pfaffian", rp)
                    .with("consistency", rc)
                    .with("abs_ab", m_ab.norm()),
            );
        }
    }
    match tol {
        Some(t) => {
            rep.push(Check::below("max residual (matrix)", worst_m, t));
            rep.push(Check::below("max residual (pfaffian)", worst_p, t));
        }
        None => {
            rep.push(Check::recorded("max residual (matrix)", worst_m));
            rep.push(Check::recorded("max residual (pfaffian)", worst_p));
        }
    }
    rep.push(Check::below("matrix vs pfaffian", worst_c, 1e-9));
    rep.functions = all.into_iter().cloned().collect();
    rep.absorb_basis(&basis);
    Ok(rep)
}

/// ‖[φ̂(f), φ(g)] − (⟨f̄|g⟩ − ⟨ḡ|f⟩)Z‖ and, for wedge-separated supports,
/// the size of the commutator itself.
pub fn relative_locality_check(
    f: &TestFunction,
    g: &TestFunction,
    basis: &Arc<ModeBasis>,
    grid: &Arc<MassShellGrid>,
    tol: f64,
) -> Result<LocalityReport> {
    let comm = twisted_field(f, basis, grid)?.commutator(&field(g, basis, grid)?)?;
    let scalar = commutator_value(f, g, grid)?;
    let z = parity_z(basis);
    let residual = comm.sub(&z.scaled(scalar))?.norm();
    let mut rep = LocalityReport::new("relative_locality");
    rep.push(Check::below("identity residual", residual, 1e-10));
    if f.support.wedge_separated(&g.support) {
        rep.push(Check::below("|commutator scalar|", scalar.norm(), tol));
        rep.push(Check::below("commutator norm", comm.norm(), tol));
    } else {
        rep.push(Check::recorded("|commutator scalar|", scalar.norm()));
        rep.push(Check::recorded("commutator norm", comm.norm()));
    }
    rep.functions = vec![f.clone(), g.clone()];
    rep.absorb_basis(basis);
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StringCheckOptions {
    pub tolerance: f64,
    /// Sample points (x₀, x₁, …) inside W₂ for the anticommutator function.
    pub profile_points: Vec<Vec<f64>>,
    /// Reference points fixing the scale of that function.
    pub reference_points: Vec<Vec<f64>>,
}

fn string_wedge_edge(sf: &StringFunction) -> f64 {
    match sf.branch {
        Branch::LowerVanishing => sf.slab.1,
        Branch::UpperVanishing => sf.slab.0,
    }
}

fn probe_in_w2(sf: &StringFunction, f: &TestFunction) -> bool {
    let edge = string_wedge_edge(sf);
    match sf.branch {
        Branch::LowerVanishing => f.support.in_right_wedge(edge),
        Branch::UpperVanishing => f.support.in_left_wedge(edge),
    }
}

/// {φ(h), φ(f)} for probes f ⊂ W₂, the anticommutator function over W₂,
/// nontriviality of φ(h), and recorded controls outside W₂.
pub fn string_locality_check(
    sf: &StringFunction,
    probes: &[TestFunction],
    controls: &[TestFunction],
    grid: &Arc<MassShellGrid>,
    opts: &StringCheckOptions,
) -> Result<LocalityReport> {
    let h = &sf.h;
    let mut rep = LocalityReport::new("string_locality");
    let own = basis_for(&[h], grid, DEFAULT_TOLERANCE)?;
    let phi_h = field(h, &own, grid)?;
    let phi_norm = phi_h.norm();
    if phi_norm == 0.0 {
        return Err(Error::Degenerate(format!("φ({}) vanishes", h.label)));
    }
    let omega_norm = restrict(h, grid)?.norm() / phi_norm;
    rep.push(Check::above("‖φ(h)Ω‖ at ‖φ(h)‖ = 1", omega_norm, 0.1));
    for (set, asserted) in [(probes, true), (controls, false)] {
        for f in set {
            let inside = probe_in_w2(sf, f);
            if asserted && !inside {
                return Err(Error::Precondition(format!("probe {} is not supported in W₂", f.label)));
            }
            let basis = basis_for(&[h, f], grid, DEFAULT_TOLERANCE)?;
            let ph = field(h, &basis, grid)?;
            let pf = field(f, &basis, grid)?;
            let scale = ph.norm() * pf.norm();
            let anti = ph.anticommutator(&pf)?;
            let scalar = anticommutator_value(h, f, grid)?;
            let matrix_rel = anti.norm() / scale;
            let scalar_rel = scalar.norm() / scale;
            let scalar_gap = anti.distance_to_scalar(scalar);
            rep.absorb_basis(&basis);
            if asserted {
                rep.push(Check::below(format!("{{φ(h),φ({})}} matrix", f.label), matrix_rel, opts.tolerance));
                rep.push(Check::below(format!("{{φ(h),φ({})}} scalar", f.label), scalar_rel, opts.tolerance));
                rep.push(Check::below(format!("CAR closure {}", f.label), scalar_gap, 1e-10));
            } else {
                rep.push(Check::recorded(format!("control {{φ(h),φ({})}}", f.label), scalar_rel));
            }
        }
    }
    if !opts.profile_points.is_empty() {
        let inside = pauli_jordan_profile(h, &opts.profile_points, grid)?;
        let reference = pauli_jordan_profile(h, &opts.reference_points, grid)?;
        let peak = reference.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let worst = inside.iter().map(|v| v.norm()).fold(0.0, f64::max);
        rep.push(Check::recorded("anticommutator function peak", peak));
        rep.push(Check::below("anticommutator function in W₂ (relative)", worst / peak, opts.tolerance));
        for (x, v) in opts.profile_points.iter().zip(&inside) {
            rep.table.push(TableRow::new(format!("{x:?}")).with("abs", v.norm()).with("relative", v.norm() / peak));
        }
    }
    rep.functions = std::iter::once(h.clone()).chain(probes.iter().cloned()).chain(controls.iter().cloned()).collect();
    Ok(rep)
}

/// φ(h₁)⋯φ(h_k) with the generators cycled to the requested degree.
pub fn monomial(hs: &[&TestFunction], degree: usize, basis: &Arc<ModeBasis>, grid: &Arc<MassShellGrid>) -> Result<FockOperator> {
    let mut out = FockOperator::identity(basis);
    if degree > 0 && hs.is_empty() {
        return Err(Error::Structural("no generators for a monomial of positive degree".into()));
    }
    for k in 0..degree {
        out = out.mul(&field(hs[k % hs.len()], basis, grid)?)?;
    }
    out.label = format!("mono{degree}");
    Ok(out)
}

/// A monomial in string fields for (W₁, W₂) and its commutation with
/// probes in W₂. Odd degrees are expected to fail and are recorded.
pub fn local_net_element(
    hs: &[&StringFunction],
    degree: usize,
    probes: &[TestFunction],
    grid: &Arc<MassShellGrid>,
    tol: f64,
) -> Result<(FockOperator, LocalityReport)> {
    let mut rep = LocalityReport::new(format!("local_net_degree_{degree}"));
    let gens: Vec<&TestFunction> = hs.iter().map(|s| &s.h).collect();
    let mut all: Vec<&TestFunction> = gens.clone();
    all.extend(probes.iter());
    let basis = basis_for(&all, grid, DEFAULT_TOLERANCE)?;
    let x = monomial(&gens, degree, &basis, grid)?;
    let xnorm = x.norm();
    for s in hs {
        let in_w1 = match s.branch {
            Branch::LowerVanishing => s.h.support.in_right_wedge(s.slab.0),
            Branch::UpperVanishing => s.h.support.in_left_wedge(s.slab.1),
        };
        rep.push(Check::holds(format!("{} generated in W₁", s.h.label), in_w1));
    }
    let even = degree % 2 == 0;
    let mut worst: f64 = 0.0;
    for f in probes {
        if let Some(s) = hs.iter().find(|s| !probe_in_w2(s, f)) {
            return Err(Error::Precondition(format!("probe {} is not in W₂ of {}", f.label, s.h.label)));
        }
        let pf = field(f, &basis, grid)?;
        let rel = if xnorm == 0.0 { 0.0 } else { x.commutator(&pf)?.norm() / (xnorm * pf.norm()) };
        worst = worst.max(rel);
        rep.table.push(TableRow::new(f.label.clone()).with("commutator", rel));
    }
    if even {
        rep.push(Check::below("max [X, φ(f)] over W₂ probes", worst, tol));
    } else {
        rep.push(Check::recorded("max [X, φ(f)] over W₂ probes (odd)", worst));
        rep.push(Check::holds("odd monomial fails to commute", worst > tol));
    }
    rep.functions = all.into_iter().cloned().collect();
    rep.absorb_basis(&basis);
    Ok((x, rep))
}

/// Regions W₁ ∩ W₂′ given by their time-zero base interval (lo, hi), with
/// W₁ = W_R + lo and W₂ = W_R + hi.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetScan {
    pub intervals: Vec<(f64, f64)>,
    /// (smaller, larger) index pairs.
    pub nested: Vec<(usize, usize)>,
    /// (left, right) index pairs with disjoint bases.
    pub spacelike: Vec<(usize, usize)>,
}

/// Two string generators with data in (lo, hi).
pub fn interval_generators(lo: f64, hi: f64, m: f64) -> Result<Vec<StringFunction>> {
    let w = hi - lo;
    [lo + w / 3.0, lo + 2.0 * w / 3.0]
        .iter()
        .map(|&x| string_function_in((lo, hi), &spatial_bump(&[x], w / 8.0)?, Branch::LowerVanishing, m))
        .collect()
}

/// Three bumps inside W_R + edge.
pub fn wedge_probes(edge: f64) -> Result<Vec<TestFunction>> {
    Ok(vec![
        testfn::bump(&[0.0, edge + 1.0], 0.5)?,
        testfn::bump(&[0.4, edge + 1.6], 0.4)?,
        testfn::bump(&[-0.6, edge + 2.2], 0.5)?,
    ])
}

fn relative_commutator(x: &FockOperator, y: &FockOperator) -> Result<f64> {
    let s = x.norm() * y.norm();
    Ok(if s == 0.0 { 0.0 } else { x.commutator(y)?.norm() / s })
}

/// Isotony (elements of a smaller region commute with the W₂ probes of a
/// larger one) and locality (elements of disjoint regions commute).
pub fn isotony_and_locality_scan(scan: &NetScan, grid: &Arc<MassShellGrid>, tol: f64) -> Result<LocalityReport> {
    let m = grid.mass();
    let mut rep = LocalityReport::new("isotony_and_locality");
    let gens: Vec<Vec<StringFunction>> = scan
        .intervals
        .iter()
        .map(|&(lo, hi)| interval_generators(lo, hi, m))
        .collect::<Result<_>>()?;
    for &(small, big) in &scan.nested {
        let (slo, shi) = scan.intervals[small];
        let (blo, bhi) = scan.intervals[big];
        if !(blo <= slo && shi <= bhi) {
            return Err(Error::Config(format!("interval {small} is not inside interval {big}")));
        }
        let hs: Vec<&TestFunction> = gens[small].iter().map(|s| &s.h).collect();
        let in_w1 = hs.iter().all(|h| h.support.in_right_wedge(blo));
        rep.push(Check::holds(format!("nested {small}⊂{big}: generators in W₁"), in_w1));
        let mut worst: f64 = 0.0;
        for f in wedge_probes(bhi)? {
            let mut all = hs.clone();
            all.push(&f);
            let basis = basis_for(&all, grid, DEFAULT_TOLERANCE)?;
            let x = monomial(&hs, 2, &basis, grid)?;
            let r = relative_commutator(&x, &field(&f, &basis, grid)?)?;
            worst = worst.max(r);
            rep.absorb_basis(&basis);
        }
        rep.push(Check::below(format!("nested {small}⊂{big}: [X, φ(f)], f ⊂ W₂"), worst, tol));
    }
    for &(left, right) in &scan.spacelike {
        let (_, lhi) = scan.intervals[left];
        let (rlo, _) = scan.intervals[right];
        if lhi > rlo {
            return Err(Error::Config(format!("intervals {left} and {right} overlap")));
        }
        let hl: Vec<&TestFunction> = gens[left].iter().map(|s| &s.h).collect();
        let hr: Vec<&TestFunction> = gens[right].iter().map(|s| &s.h).collect();
        let all: Vec<&TestFunction> = hl.iter().chain(&hr).copied().collect();
        let basis = basis_for(&all, grid, DEFAULT_TOLERANCE)?;
        let xl = monomial(&hl, 2, &basis, grid)?;
        let xr = monomial(&hr, 2, &basis, grid)?;
        let r = relative_commutator(&xl, &xr)?;
        let mut anti: f64 = 0.0;
        for a in &hl {
            for b in &hr {
                let s = anticommutator_value(a, b, grid)?.norm()
                    / (restrict(a, grid)?.norm() * restrict(b, grid)?.norm());
                anti = anti.max(s);
            }
        }
        rep.push(Check::below(format!("spacelike {left}|{right}: [X_l, X_r]"), r, tol));
        rep.push(Check::recorded(format!("spacelike {left}|{right}: max generator anticommutator"), anti));
        rep.absorb_basis(&basis);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subwords_count() {
        assert_eq!(subwords(4, 4).len(), 16);
        assert_eq!(subwords(4, 2).len(), 11);
        assert_eq!(subwords(0, 3), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn monotonicity_with_noise() {
        assert!(nondecreasing(&[0.1, 0.5, 0.4995, 0.9], 1e-3));
        assert!(!nondecreasing(&[0.1, 0.5, 0.45], 1e-3));
    }
}
