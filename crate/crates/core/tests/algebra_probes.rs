use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use wedgelab::algebra_probes::*;
use wedgelab::fock_car::*;
use wedgelab::mass_shell::{build_grid, restrict, GridSpec, MassShellGrid, ModelConfig};
use wedgelab::testfn::*;
use wedgelab::{Complex64, Error};

fn grid() -> Arc<MassShellGrid> {
    build_grid(ModelConfig::new(2, 1.0).unwrap(), GridSpec::resolving(512, 9.0, 5.0)).unwrap()
}

fn unit(f: &TestFunction, g: &Arc<MassShellGrid>) -> TestFunction {
    let n = restrict(f, g).unwrap().norm();
    scale(f, Complex64::new(1.0 / n, 0.0))
}

fn seed() -> TestFunction {
    seed_bump(&[0.0, 0.0], 0.5).unwrap()
}

/// A basis with M modes; the operators below only use its dimension.
fn basis(modes: usize) -> Arc<ModeBasis> {
    let g = build_grid(ModelConfig::new(2, 1.0).unwrap(), GridSpec::rapidity(128, 7.0)).unwrap();
    let vs: Vec<_> = (0..modes).map(|k| restrict(&bump(&[0.0, 1.5 * k as f64], 0.5).unwrap(), &g).unwrap()).collect();
    build_modes(&vs, DEFAULT_TOLERANCE).unwrap()
}

fn op(matrix: DMatrix<Complex64>, b: &Arc<ModeBasis>) -> FockOperator {
    FockOperator { matrix, basis: b.clone(), label: "test".into() }
}

fn diagonal_projection(mask: u32, b: &Arc<ModeBasis>) -> FockOperator {
    let n = b.fock_dim();
    op(DMatrix::from_fn(n, n, |i, j| if i == j && mask & (1 << i) != 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }), b)
}

fn rank_one(v: &[(f64, f64)], b: &Arc<ModeBasis>) -> FockOperator {
    let v = DVector::from_iterator(v.len(), v.iter().map(|(re, im)| Complex64::new(*re, *im)));
    let v = &v / Complex64::new(v.norm(), 0.0);
    op(&v * v.adjoint(), b)
}

#[test]
fn clifford_projections_of_the_lemma_pair() {
    let g = grid();
    let pair = lemma32_pair(1, &seed(), &g).unwrap();
    assert!(pair_defect(&pair.f1, &pair.f2, &g).unwrap() < 1e-13);
    let b = basis_for(&[&pair.f1, &pair.f2], &g, DEFAULT_TOLERANCE).unwrap();
    let pp = clifford_projection(&pair.f1, &pair.f2, Sign::Plus, &b, &g).unwrap();
    let pm = clifford_projection(&pair.f1, &pair.f2, Sign::Minus, &b, &g).unwrap();
    assert!(projection_defect(&pp) < 1e-12 && projection_defect(&pm) < 1e-12);
    assert!(pp.add(&pm).unwrap().sub(&FockOperator::identity(&b)).unwrap().norm() < 1e-14);
    assert!(pp.mul(&pm).unwrap().norm() < 1e-12);
    // ω(P₊) = ½(1 + i⟨f₁|f₂⟩).
    let ov = wedgelab::mass_shell::inner_product(&restrict(&pair.f1, &g).unwrap(), &restrict(&pair.f2, &g).unwrap()).unwrap();
    let expected = 0.5 * (Complex64::new(1.0, 0.0) + Complex64::new(0.0, 1.0) * ov);
    assert!((pp.vacuum_expectation() - expected).norm() < 1e-13);
}

#[test]
fn clifford_projection_preconditions() {
    let g = grid();
    let f = bump(&[0.0, 0.0], 0.5).unwrap();
    let h = bump(&[0.0, 2.0], 0.5).unwrap();
    let b = basis_for(&[&f, &h], &g, DEFAULT_TOLERANCE).unwrap();
    assert!(matches!(clifford_projection(&f, &h, Sign::Plus, &b, &g), Err(Error::NonOrthonormal(_))));
    let c = modulate(&unit(&f, &g), &[0.0, 1.0]);
    let b2 = basis_for(&[&c, &h], &g, DEFAULT_TOLERANCE).unwrap();
    assert!(matches!(clifford_projection(&c, &h, Sign::Plus, &b2, &g), Err(Error::Precondition(_))));
}

#[test]
fn meet_of_exchange_projections() {
    // Rank-one projections onto (1, 0) and (1, 1)/√2 in a 2-dim space meet in 0;
    // the eigenvalue gap is 1 − 1/√2.
    let b = basis(1);
    let e = rank_one(&[(1.0, 0.0), (0.0, 0.0)], &b);
    let f = rank_one(&[(1.0, 0.0), (1.0, 0.0)], &b);
    let m = meet(&e, &f).unwrap();
    assert_eq!(m.rank, 0);
    assert!((m.min_eigenvalue - (1.0 - 0.5f64.sqrt())).abs() < 1e-14);
    let same = meet(&e, &e).unwrap();
    assert_eq!(same.rank, 1);
    assert!(same.projection.sub(&e).unwrap().norm() < 1e-14);
}

#[test]
fn meet_rejects_non_projections() {
    let b = basis(1);
    let e = rank_one(&[(1.0, 0.0), (0.0, 0.0)], &b);
    let bad = e.scaled(Complex64::new(2.0, 0.0));
    assert!(matches!(meet(&e, &bad), Err(Error::NotProjection(_))));
    assert!(matches!(meet(&e, &diagonal_projection(1, &basis(1))), Err(Error::BasisMismatch)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn meet_of_diagonal_projections_is_intersection(a in 0u32..256, c in 0u32..256) {
        let b = basis(3);
        let m = meet(&diagonal_projection(a, &b), &diagonal_projection(c, &b)).unwrap();
        let expected = diagonal_projection(a & c, &b);
        prop_assert!(m.projection.sub(&expected).unwrap().norm() < 1e-12);
        prop_assert_eq!(m.rank, (a & c).count_ones() as usize);
    }

    #[test]
    fn meet_is_idempotent_and_commutative(
        mask in 0u32..256,
        v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8),
    ) {
        prop_assume!(v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3);
        let b = basis(3);
        let e = rank_one(&v, &b);
        let d = diagonal_projection(mask, &b);
        let ee = meet(&e, &e).unwrap();
        prop_assert!(ee.projection.sub(&e).unwrap().norm() < 1e-10);
        let ed = meet(&e, &d).unwrap().projection;
        let de = meet(&d, &e).unwrap().projection;
        prop_assert!(ed.sub(&de).unwrap().norm() < 1e-10);
        prop_assert!(projection_defect(&ed) < 1e-10);
        let one = FockOperator::identity(&b);
        prop_assert!(meet(&d, &one).unwrap().projection.sub(&d).unwrap().norm() < 1e-12);
    }
}

#[test]
fn st_identities_for_separated_pairs() {
    let g = grid();
    let pair = lemma32_pair(1, &seed(), &g).unwrap();
    let a = [0.0, 3.0];
    let g1 = translate(&pair.f1, &a);
    let g2 = translate(&pair.f2, &a);
    assert!(pair.f1.support.wedge_separated(&g1.support));
    let b = basis_for(&[&pair.f1, &pair.f2, &g1, &g2], &g, DEFAULT_TOLERANCE).unwrap();
    let rep = st_identity_check((&pair.f1, &pair.f2), (&g1, &g2), &b, &g).unwrap();
    assert!(rep.passed(), "{:?}", rep.checks);
    assert!(rep.check("kappa=half<f1+if2|g1-ig2>").is_some());
}

#[test]
fn coherence_gate_rejects_zero_shift() {
    let g = grid();
    let params = WitnessParams {
        n_values: vec![1],
        seed: seed(),
        translation: vec![0.0, 0.0],
        probe: bump(&[0.0, 3.0], 0.5).unwrap(),
        meet_threshold: MEET_THRESHOLD,
        gate_floor: 1e-12,
        noise: 1e-3,
    };
    assert!(matches!(central_sequence_experiment(&params, &g), Err(Error::CoherenceGate { n: 1, .. })));
}

#[test]
fn weak_locality_for_opposite_wedges() {
    let g = grid();
    let a: Vec<TestFunction> = vec![
        unit(&bump(&[0.0, 2.0], 0.5).unwrap(), &g),
        unit(&modulate(&bump(&[0.3, 2.5], 0.5).unwrap(), &[0.0, 1.0]), &g),
    ];
    let b: Vec<TestFunction> = a.iter().map(reflect).collect();
    let rep = weak_locality_check(&a, &b, &g, 2).unwrap();
    assert!(rep.passed(), "{:?}", rep.checks);
    // 1 + 2 + 1 ordered sub-words of each side of length ≤ 2.
    assert_eq!(rep.table.len(), 16);
    let same: Vec<TestFunction> = a.iter().map(|f| translate(f, &[0.9, 0.1])).collect();
    assert!(matches!(weak_locality_check(&a, &same, &g, 2), Err(Error::Precondition(_))));
    let control = weak_locality_residuals(&a, &same, &g, 2, "control", None).unwrap();
    assert!(control.check("max residual (matrix)").unwrap().value > 1e-3);
}

#[test]
fn table_wick_matches_direct_oracle() {
    let g = grid();
    let fs: Vec<TestFunction> = vec![
        unit(&bump(&[0.0, 0.0], 0.5).unwrap(), &g),
        unit(&modulate(&bump(&[0.5, 1.0], 0.5).unwrap(), &[0.3, -1.0]), &g),
        unit(&gaussian(&[0.0, -1.0], 0.7).unwrap(), &g),
    ];
    let refs: Vec<&TestFunction> = fs.iter().collect();
    let table = two_point_table(&refs, &g).unwrap();
    for word in [vec![0, 1], vec![1, 1], vec![0, 1, 2, 1], vec![2, 0, 0, 1, 2, 1]] {
        let picked: Vec<&TestFunction> = word.iter().map(|&i| &fs[i]).collect();
        let direct = vacuum_expectation_wick(&picked, &g).unwrap();
        assert!((wick_from_table(&word, &table) - direct).norm() < 1e-14, "{word:?}");
        let b = basis_for(&refs, &g, DEFAULT_TOLERANCE).unwrap();
        let ops: Vec<FockOperator> = picked.iter().map(|f| field(f, &b, &g).unwrap()).collect();
        let opr: Vec<&FockOperator> = ops.iter().collect();
        assert!((vacuum_value(&opr) - direct).norm() < 1e-12, "{word:?}");
    }
    assert_eq!(vacuum_value(&[]), Complex64::new(1.0, 0.0));
}

#[test]
fn relative_locality_identity_for_any_supports() {
    let g = grid();
    let f = unit(&bump(&[0.0, 0.0], 0.5).unwrap(), &g);
    for h in [unit(&bump(&[1.5, 0.0], 0.5).unwrap(), &g), unit(&bump(&[0.0, 2.5], 0.5).unwrap(), &g)] {
        let b = basis_for(&[&f, &h], &g, DEFAULT_TOLERANCE).unwrap();
        let rep = relative_locality_check(&f, &h, &b, &g, 1e-5).unwrap();
        assert!(rep.passed(), "{:?}", rep.checks);
    }
}

#[test]
fn local_net_degrees() {
    let g = grid();
    let gens = interval_generators(0.0, 1.0, 1.0).unwrap();
    let refs: Vec<&StringFunction> = gens.iter().collect();
    let probes = wedge_probes(1.0).unwrap();
    let (x0, r0) = local_net_element(&refs, 0, &probes, &g, 1e-5).unwrap();
    assert!(r0.passed());
    assert!(x0.sub(&FockOperator::identity(&x0.basis)).unwrap().norm() == 0.0);
    let (_, r2) = local_net_element(&refs, 2, &probes, &g, 1e-5).unwrap();
    assert!(r2.passed(), "{:?}", r2.checks);
    let (_, r1) = local_net_element(&refs, 1, &probes, &g, 1e-5).unwrap();
    assert!(r1.passed(), "{:?}", r1.checks);
    assert!(r1.check("odd monomial fails to commute").is_some());
    let inside = vec![bump(&[0.0, 0.5], 0.3).unwrap()];
    assert!(matches!(local_net_element(&refs, 2, &inside, &g, 1e-5), Err(Error::Precondition(_))));
}

#[test]
fn scan_with_identical_regions() {
    let g = grid();
    let scan = NetScan { intervals: vec![(0.0, 1.0), (1.5, 2.5)], nested: vec![(0, 0), (1, 1)], spacelike: vec![(0, 1)] };
    let rep = isotony_and_locality_scan(&scan, &g, 1e-5).unwrap();
    assert!(rep.passed(), "{:?}", rep.checks);
    let bad = NetScan { intervals: vec![(0.0, 1.0), (0.5, 2.0)], nested: vec![(1, 0)], spacelike: vec![] };
    assert!(matches!(isotony_and_locality_scan(&bad, &g, 1e-5), Err(Error::Config(_))));
    let overlap = NetScan { intervals: vec![(0.0, 1.0), (0.5, 2.0)], nested: vec![], spacelike: vec![(0, 1)] };
    assert!(matches!(isotony_and_locality_scan(&overlap, &g, 1e-5), Err(Error::Config(_))));
}

#[test]
fn monomial_needs_generators() {
    let b = basis(1);
    let g = b.grid.clone();
    assert!(matches!(monomial(&[], 2, &b, &g), Err(Error::Structural(_))));
    assert_eq!(monomial(&[], 0, &b, &g).unwrap().matrix, FockOperator::identity(&b).matrix);
}
