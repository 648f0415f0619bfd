use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use wedgelab::mass_shell::*;
use wedgelab::testfn::{bump, conjugate, delta, klein_gordon_image, modulate, translate, TestFunction};
use wedgelab::{Complex64, Error};

// π ∫ dθ |f̃|² and π ∫ dθ |f̃|² 2 sin(2 cosh θ) for the radius-1/2 bump at
// the origin, m = 1, by adaptive quadrature of an independently computed
// mollifier transform.
const BUMP_NORM_SQR: f64 = 5.104738102091286e-4;
const TIMELIKE_COMMUTATOR: f64 = 1.335657446738788e-4;

fn model() -> ModelConfig {
    ModelConfig::new(2, 1.0).unwrap()
}

fn grid() -> Arc<MassShellGrid> {
    build_grid(model(), GridSpec::resolving(256, 7.0, 4.0)).unwrap()
}

#[test]
fn rapidity_weights_integrate_the_measure() {
    for spec in [GridSpec::rapidity(256, 7.0), GridSpec::resolving(256, 7.0, 5.0)] {
        let g = build_grid(model(), spec).unwrap();
        let total: f64 = g.weights().iter().sum();
        assert!((total - 14.0 * PI).abs() < 1e-11, "{total}");
        assert!(g.weights().iter().all(|w| *w > 0.0));
        // Symmetric nodes: θ_i = −θ_{N−1−i}.
        let th = g.rapidities();
        for i in 0..th.len() {
            assert!((th[i] + th[th.len() - 1 - i]).abs() < 1e-14);
        }
        // π ∫ dθ / cosh θ over ℝ is π²; the tail past θ = 7 is 2π·2e^{-7}.
        let sech: f64 = (0..g.len()).map(|i| g.weight(i) / g.omega(i)).sum();
        let tail = 2.0 * PI * (2.0 * (-7.0f64).exp()).atan();
        assert!((sech + tail - PI * PI).abs() < 1e-6, "{sech}");
    }
}

#[test]
fn tensor_grid_in_three_dimensions() {
    let g = build_grid(ModelConfig::new(3, 1.0).unwrap(), GridSpec::tensor(32, 10.0)).unwrap();
    assert_eq!(g.len(), 32 * 32);
    assert_eq!(g.dim(), 3);
    for i in 0..g.len() {
        let p = g.momentum(i);
        assert!((g.omega(i) - (1.0 + p[0] * p[0] + p[1] * p[1]).sqrt()).abs() < 1e-12);
    }
}

#[test]
fn invalid_models_are_rejected() {
    assert!(matches!(ModelConfig::new(5, 1.0), Err(Error::Config(_))));
    assert!(matches!(ModelConfig::new(2, 0.0), Err(Error::Config(_))));
    assert!(build_grid(model(), GridSpec::rapidity(4, 7.0)).is_err());
    assert!(build_grid(model(), GridSpec::rapidity(64, 0.5)).is_err());
}

#[test]
fn bump_norm_against_adaptive_quadrature() {
    let f = bump(&[0.0, 0.0], 0.5).unwrap();
    for g in [grid(), build_grid(model(), GridSpec::rapidity(512, 7.0)).unwrap()] {
        let n2 = restrict(&f, &g).unwrap().norm_sqr();
        assert!((n2 / BUMP_NORM_SQR - 1.0).abs() < 1e-8, "{n2}");
    }
}

#[test]
fn timelike_commutator_against_adaptive_quadrature() {
    let g = grid();
    let f = bump(&[0.0, 0.0], 0.5).unwrap();
    let h = bump(&[2.0, 0.0], 0.5).unwrap();
    let v = commutator_value(&f, &h, &g).unwrap();
    assert!(v.re.abs() < 1e-18);
    assert!((v.im / TIMELIKE_COMMUTATOR - 1.0).abs() < 1e-7, "{v}");
}

#[test]
fn spacelike_commutator_vanishes() {
    let g = grid();
    let f = bump(&[0.0, 0.0], 0.5).unwrap();
    for shift in [[0.0, 2.0], [0.5, 1.5], [-0.3, -1.8]] {
        let h = translate(&f, &shift);
        assert!(commutator_value(&f, &h, &g).unwrap().norm() < 1e-17);
    }
}

#[test]
fn real_function_anticommutator_is_twice_norm() {
    let g = grid();
    let f = bump(&[0.2, -0.4], 0.5).unwrap();
    let a = anticommutator_value(&f, &f, &g).unwrap();
    assert!((a.re / (2.0 * BUMP_NORM_SQR) - 1.0).abs() < 1e-8);
    assert!(a.im.abs() < 1e-18);
}

#[test]
fn klein_gordon_images_vanish_on_shell() {
    let g = grid();
    let f = modulate(&bump(&[0.3, 0.1], 0.6).unwrap(), &[0.5, -1.0]);
    let kg = klein_gordon_image(&f, 1.0);
    assert!(restrict(&kg, &g).unwrap().norm() < 1e-14);
    // Off the shell it is m²f̃(0) at p = 0.
    assert!((kg.eval(&[0.0, 0.0]) - f.eval(&[0.0, 0.0])).norm() < 1e-15);
}

#[test]
fn pauli_jordan_profile_matches_commutator_with_delta() {
    let g = grid();
    let f = bump(&[0.0, 0.0], 0.5).unwrap();
    let points = vec![vec![0.0, 2.0], vec![1.5, 0.2], vec![0.0, 0.0]];
    let prof = pauli_jordan_profile(&f, &points, &g).unwrap();
    for (x, v) in points.iter().zip(&prof) {
        let dx = delta(x).unwrap();
        let a = anticommutator_value(&f, &dx, &g).unwrap();
        assert!((v - a).norm() < 1e-12 * (1.0 + a.norm()), "{x:?}");
    }
    assert!(pauli_jordan_profile(&f, &[vec![0.0]], &g).is_err());
}

#[test]
fn vectors_on_different_grids_do_not_mix() {
    let f = bump(&[0.0, 0.0], 0.5).unwrap();
    let a = restrict(&f, &grid()).unwrap();
    let b = restrict(&f, &grid()).unwrap();
    assert!(matches!(inner_product(&a, &b), Err(Error::GridMismatch)));
}

fn probe() -> impl Strategy<Value = TestFunction> {
    ((-1.0f64..1.0), (-1.0f64..1.0), (0.2f64..0.8), (-2.0f64..2.0), (-2.0f64..2.0))
        .prop_map(|(x0, x1, r, k0, k1)| modulate(&bump(&[x0, x1], r).unwrap(), &[k0, k1]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn inner_product_is_hermitian_and_positive(f in probe(), h in probe()) {
        let g = grid();
        let u = restrict(&f, &g).unwrap();
        let v = restrict(&h, &g).unwrap();
        let uv = inner_product(&u, &v).unwrap();
        let vu = inner_product(&v, &u).unwrap();
        prop_assert!((uv - vu.conj()).norm() <= 1e-15 * (1.0 + uv.norm()));
        let uu = inner_product(&u, &u).unwrap();
        prop_assert!(uu.re > 0.0 && uu.im == 0.0);
        prop_assert!(uv.norm() <= (uu.re * inner_product(&v, &v).unwrap().re).sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn two_point_is_translation_invariant(f in probe(), h in probe(), a0 in -1.0f64..1.0, a1 in -1.0f64..1.0) {
        let g = grid();
        let w = two_point(&f, &h, &g).unwrap();
        let wt = two_point(&translate(&f, &[a0, a1]), &translate(&h, &[a0, a1]), &g).unwrap();
        prop_assert!((w - wt).norm() < 1e-13 * (1.0 + w.norm()));
    }

    #[test]
    fn commutator_is_antisymmetric(f in probe(), h in probe()) {
        let g = grid();
        let fh = commutator_value(&f, &h, &g).unwrap();
        let hf = commutator_value(&h, &f, &g).unwrap();
        prop_assert!((fh + hf).norm() < 1e-18 + 1e-14 * fh.norm());
        let ah = anticommutator_value(&f, &h, &g).unwrap();
        let ha = anticommutator_value(&h, &f, &g).unwrap();
        prop_assert!((ah - ha).norm() < 1e-18 + 1e-14 * ah.norm());
    }

    #[test]
    fn two_point_of_conjugate_is_inner_product(f in probe(), h in probe()) {
        // ⟨(f̄)‾|h⟩ = ⟨f|h⟩.
        let g = grid();
        let direct = inner_product(&restrict(&f, &g).unwrap(), &restrict(&h, &g).unwrap()).unwrap();
        let via = two_point(&conjugate(&f), &h, &g).unwrap();
        prop_assert!((direct - via).norm() < 1e-15 * (1.0 + direct.norm()));
    }
}

#[test]
fn zero_translation_is_identity() {
    let f = bump(&[0.1, 0.2], 0.4).unwrap();
    assert_eq!(translate(&f, &[0.0, 0.0]), f);
    let g = grid();
    assert_eq!(restrict(&f, &g).unwrap().norm(), restrict(&translate(&f, &[0.7, -3.0]), &g).unwrap().norm());
}

#[test]
fn zero_vector_helpers() {
    let g = grid();
    let z = OneParticleVector::zeros(&g);
    assert_eq!(z.norm(), 0.0);
    let f = restrict(&bump(&[0.0, 0.0], 0.5).unwrap(), &g).unwrap();
    let s = z.add_scaled(Complex64::new(2.0, 0.0), &f).unwrap();
    assert!((s.norm() - 2.0 * f.norm()).abs() < 1e-15);
}
