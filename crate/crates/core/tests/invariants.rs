//! Property tests for the algebraic invariants the library is built on:
//! inner-product structure, pseudo-adjoints, representation equivalence, and
//! the conservation laws of the evolving-metric dynamics.

use geqm::evolution::dynamical_metric_grid;
use geqm::linalg::{
    adjoint, cr, eigen, evolve_state, identity, matrix_exp, max_abs, max_abs_vec, principal_sqrt,
    propagate, TimeDependentOperator, UniformGrid,
};
use geqm::metric::{is_pseudo_hermitian, pseudo_adjoint, spectral_metric, MetricOperator};
use geqm::{CMatrix, CVector};
use ndarray::{Array1, Array2};
use ndarray_linalg::Inverse;
use num_complex::Complex64;
use proptest::prelude::*;

fn c64() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn cmatrix(n: usize) -> impl Strategy<Value = CMatrix> {
    proptest::collection::vec(c64(), n * n)
        .prop_map(move |v| Array2::from_shape_vec((n, n), v).expect("shape matches length"))
}

fn cvector(n: usize) -> impl Strategy<Value = CVector> {
    proptest::collection::vec(c64(), n)
        .prop_map(Array1::from)
        .prop_filter("state must be nonzero", |v| max_abs_vec(v) > 1e-3)
}

fn dim() -> impl Strategy<Value = usize> {
    2usize..=4
}

/// Positive definite by construction: A†A + I/2, eigenvalues ≥ 1/2.
fn pd_matrix(n: usize) -> impl Strategy<Value = CMatrix> {
    cmatrix(n).prop_map(move |a| adjoint(&a).dot(&a) + identity(n) * cr(0.5))
}

fn hermitian(n: usize) -> impl Strategy<Value = CMatrix> {
    cmatrix(n).prop_map(|a| (&a + &adjoint(&a)) * cr(0.5))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_is_an_involution(m in dim().prop_flat_map(cmatrix)) {
        prop_assert_eq!(adjoint(&adjoint(&m)), m);
    }

    #[test]
    fn metric_inner_product_is_hermitian_and_positive(
        (eta, za, zb) in dim().prop_flat_map(|n| (pd_matrix(n), cvector(n), cvector(n)))
    ) {
        let metric = MetricOperator::new(&eta).expect("constructed matrix is PD");
        let ab = metric.inner(&za, &zb);
        let ba = metric.inner(&zb, &za);
        prop_assert!((ab - ba.conj()).norm() < 1e-12 * ab.norm().max(1.0));
        prop_assert!(metric.inner(&za, &za).re > 0.0);
        prop_assert!(metric.inner(&za, &za).im.abs() < 1e-12 * metric.inner(&za, &za).re.max(1.0));
    }

    #[test]
    fn pseudo_adjoint_moves_across_the_inner_product(
        (eta, h, za, zb) in dim().prop_flat_map(|n| (pd_matrix(n), cmatrix(n), cvector(n), cvector(n)))
    ) {
        let metric = MetricOperator::new(&eta).expect("constructed matrix is PD");
        let lhs = metric.inner(&za, &h.dot(&zb));
        let rhs = metric.inner(&pseudo_adjoint(&h, &metric).dot(&za), &zb);
        prop_assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0));
    }

    #[test]
    fn metric_observables_have_real_expectations(
        (eta, a, psi) in dim().prop_flat_map(|n| (pd_matrix(n), hermitian(n), cvector(n)))
    ) {
        // ρ⁻¹·(Hermitian)·ρ is self-adjoint in the η geometry.
        let metric = MetricOperator::new(&eta).expect("constructed matrix is PD");
        let o = metric.rho_inv.dot(&a).dot(&metric.rho);
        let val = metric.expectation(&o, &psi).expect("state is nonzero");
        prop_assert!(val.im.abs() < 1e-10 * val.re.abs().max(1.0));
    }

    #[test]
    fn metric_and_flat_representations_give_equal_expectations(
        (eta, a, psi) in dim().prop_flat_map(|n| (pd_matrix(n), hermitian(n), cvector(n)))
    ) {
        // ⟨ρ⁻¹ o ρ⟩ at ψ in the η geometry equals ⟨o⟩ at ρψ in the flat one.
        let metric = MetricOperator::new(&eta).expect("constructed matrix is PD");
        let o_eta = metric.rho_inv.dot(&a).dot(&metric.rho);
        let lhs = metric.expectation(&o_eta, &psi).expect("state is nonzero");
        let flat = MetricOperator::identity(eta.nrows());
        let rhs = flat.expectation(&a, &metric.rho.dot(&psi)).expect("state is nonzero");
        prop_assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0));
    }

    #[test]
    fn exponential_of_anti_hermitian_is_unitary(m in dim().prop_flat_map(cmatrix)) {
        let k = (&m - &adjoint(&m)) * cr(0.5);
        let e = matrix_exp(&k);
        let n = e.nrows();
        prop_assert!(max_abs(&(adjoint(&e).dot(&e) - identity(n))) < 1e-12);
    }

    #[test]
    fn principal_sqrt_squares_back(eta in dim().prop_flat_map(pd_matrix)) {
        let r = principal_sqrt(&eta).expect("constructed matrix is PD");
        prop_assert!(max_abs(&(r.dot(&r) - &eta)) < 1e-10 * max_abs(&eta).max(1.0));
    }

    #[test]
    fn spectral_metric_certifies_constructed_real_spectra(
        (n, a, shifts) in dim().prop_flat_map(|n| {
            (Just(n), cmatrix(n), proptest::collection::vec(0.0f64..0.4, n))
        })
    ) {
        // H = S · diag(w) · S⁻¹ with real, well-separated w and S near identity.
        let s = identity(n) + &a * cr(0.4 / max_abs(&a).max(1.0));
        let w: Vec<Complex64> = shifts.iter().enumerate().map(|(i, d)| cr(i as f64 + d)).collect();
        let d = Array2::from_diag(&Array1::from(w));
        let h = s.dot(&d).dot(&s.inv().expect("near-identity matrix is invertible"));
        let es = eigen(&h).expect("constructed matrix is diagonalizable");
        let metric = spectral_metric(&es).expect("spectrum is real by construction");
        let (ok, res) = is_pseudo_hermitian(&h, &metric, 1e-8);
        prop_assert!(ok, "residual {res}");
    }

    #[test]
    fn hermitian_generators_propagate_unitarily(
        (h0, h1) in dim().prop_flat_map(|n| (hermitian(n), hermitian(n)))
    ) {
        let n = h0.nrows();
        let hop = TimeDependentOperator::analytic(0.0, 1.0, n, move |t| {
            &h0 + &h1 * cr(t.sin())
        });
        let u = propagate(&hop, 0.0, 1.0, 200).expect("propagation succeeds");
        prop_assert!(max_abs(&(adjoint(&u).dot(&u) - identity(n))) < 1e-12);
    }

    #[test]
    fn evolving_metric_conserves_inner_products(
        (h, psi, phi) in dim().prop_flat_map(|n| (cmatrix(n), cvector(n), cvector(n)))
    ) {
        let n = h.nrows();
        let hop = TimeDependentOperator::constant(0.0, 1.0, h);
        let grid = UniformGrid::new(0.0, 1.0, 200).expect("valid grid");
        let eta0 = MetricOperator::identity(n);
        let metrics = dynamical_metric_grid(&hop, &eta0, grid).expect("metric stays PD");
        let pt = evolve_state(&hop, &psi, grid).expect("evolution succeeds");
        let ft = evolve_state(&hop, &phi, grid).expect("evolution succeeds");
        let want = metrics[0].inner(&pt.states[0], &ft.states[0]);
        for k in [50usize, 200] {
            let got = metrics[k].inner(&pt.states[k], &ft.states[k]);
            prop_assert!((got - want).norm() < 1e-11 * want.norm().max(1.0),
                "node {}: {} vs {}", k, got, want);
        }
    }
}
