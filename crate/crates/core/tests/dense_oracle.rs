//! The sparse superoperator against the master equation evaluated with
//! dense matrices, at excitation caps small enough for dense algebra.

use faer::Mat;
use optoheat::hybrid::{build_hybrid_liouvillian, hybridize};
use optoheat::liouvillian::{devectorize, vectorize, Liouvillian};
use optoheat::model::{SetupParams, SystemModel};
use optoheat::runner::model_liouvillian;
use optoheat::sparse::C64;
use optoheat::steadystate::{solve, SolverOptions};

const I: C64 = C64::new(0.0, 1.0);

fn setup(omega: f64, cap: usize) -> SetupParams {
    let mut p = SetupParams::reference(omega);
    p.cap = cap;
    p
}

/// `dρ/dt` from the model's operators, using only dense products.
fn master_equation(model: &SystemModel, rho: &Mat<C64>) -> Mat<C64> {
    let basis = model.basis().unwrap();
    let h = model.build_hamiltonian(&basis).unwrap().to_mat();
    let mut out = &(&h * rho - rho * &h) * faer::Scale(-I);
    for ch in model.build_collapse_channels(&basis).unwrap() {
        let a = ch.op.to_mat();
        let ada = a.adjoint() * &a;
        let d = &(&(&a * rho) * a.adjoint()) - &(&(&ada * rho + rho * &ada) * faer::Scale(C64::new(0.5, 0.0)));
        out += &d * faer::Scale(C64::new(ch.rate, 0.0));
    }
    for ch in model.build_cross_channels(&basis).unwrap() {
        let (a, b) = (ch.a.to_mat(), ch.b.to_mat());
        let sym = &(b.adjoint() * &a) + &(a.adjoint() * &b);
        let jump = &(&(&a * rho) * b.adjoint()) + &(&(&b * rho) * a.adjoint());
        let d = &jump - &(&(&sym * rho + rho * &sym) * faer::Scale(C64::new(0.5, 0.0)));
        out += &d * faer::Scale(C64::new(ch.rate, 0.0));
    }
    out
}

fn dense(l: &Liouvillian) -> Mat<C64> {
    l.matrix().to_mat()
}

fn compare_on_unit_matrices(model: &SystemModel, l: &Liouvillian) -> f64 {
    let n = l.dim();
    let ld = dense(l);
    let mut worst: f64 = 0.0;
    for k in 0..n * n {
        let mut e = Mat::<C64>::zeros(n, n);
        e[(k % n, k / n)] = C64::new(1.0, 0.0);
        let expected = vectorize(&master_equation(model, &e));
        for (r, want) in expected.iter().enumerate() {
            worst = worst.max((ld[(r, k)] - want).norm());
        }
    }
    worst / l.max_abs()
}

#[test]
fn superoperator_matches_dense_master_equation() {
    for cap in [1, 2] {
        let model = setup(35.0, cap).to_model().unwrap();
        let basis = model.basis().unwrap();
        let l = model_liouvillian(&model, &basis).unwrap();
        let dev = compare_on_unit_matrices(&model, &l);
        assert!(dev < 1e-14, "K={cap}: {dev:e}");
    }
}

#[test]
fn hybrid_superoperator_with_cross_decay_matches_dense() {
    let (_, hybrid) = hybridize(&setup(20.0, 2).to_model().unwrap()).unwrap();
    assert!(!hybrid.cross_decay.is_empty());
    let basis = hybrid.basis().unwrap();
    let l = build_hybrid_liouvillian(&hybrid, &basis).unwrap();
    let dev = compare_on_unit_matrices(&hybrid, &l);
    assert!(dev < 1e-14, "{dev:e}");
}

#[test]
fn liouvillian_spectrum_has_no_growing_modes() {
    for omega in [0.0, 35.0] {
        let model = setup(omega, 2).to_model().unwrap();
        let basis = model.basis().unwrap();
        let l = model_liouvillian(&model, &basis).unwrap();
        let eig = dense(&l).eigenvalues().unwrap();
        let max_re = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        assert!(max_re <= 1e-10, "Ω={omega}: max Re λ = {max_re:e}");
        let zero = eig.iter().filter(|z| z.norm() < 1e-9).count();
        assert_eq!(zero, 1, "Ω={omega}: {zero} zero eigenvalues");
    }
}

#[test]
fn steady_state_matches_dense_null_vector() {
    let model = setup(35.0, 2).to_model().unwrap();
    let basis = model.basis().unwrap();
    let l = model_liouvillian(&model, &basis).unwrap();
    let n = basis.dim();
    let svd = dense(&l).svd().unwrap();
    let v = svd.V();
    let last = n * n - 1;
    let null: Vec<C64> = (0..n * n).map(|k| v[(k, last)]).collect();
    let mut rho = devectorize(&null, n).unwrap();
    let tr: C64 = (0..n).map(|i| rho[(i, i)]).sum();
    rho /= faer::Scale(tr);
    for opts in [SolverOptions::default(), SolverOptions { backend: "iterative".parse().unwrap(), ..Default::default() }] {
        let ss = solve(&l, &basis, &opts).unwrap();
        let dev = (&ss.rho - &rho).norm_max();
        assert!(dev < 1e-10, "{:?}: {dev:e}", opts.backend);
    }
}
