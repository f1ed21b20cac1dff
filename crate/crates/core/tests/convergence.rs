//! Excitation-cap convergence of the effective temperatures for both
//! readings of the cavity linewidth: the stated κ_c = 5.4×10⁻² meV and
//! ω_c/Q_c with Q_c = 3×10⁵.

use optoheat::config::Variant;
use optoheat::model::{kappa_from_q, SetupParams};
use optoheat::runner::run_variant;
use optoheat::steadystate::SolverOptions;

fn temperatures(kappa_c: f64, cap: usize) -> [f64; 2] {
    let mut setup = SetupParams::reference(35.0);
    setup.cavity.kappa = kappa_c;
    setup.cap = cap;
    let o = run_variant(&setup, Variant::Full, &SolverOptions::default()).unwrap();
    [o.molecules[0].t_eff, o.molecules[1].t_eff]
}

#[test]
fn effective_temperatures_converge_in_the_cap_for_both_linewidths() {
    let from_q = kappa_from_q(1610.0, 3e5).unwrap();
    for kappa_c in [5.4e-2, from_q] {
        let (lo, hi) = (temperatures(kappa_c, 5), temperatures(kappa_c, 6));
        println!("κ_c = {kappa_c:.3e} meV: K=5 {lo:.2?} K, K=6 {hi:.2?} K");
        for j in 0..2 {
            assert!((lo[j] - hi[j]).abs() < 2.0, "κ_c = {kappa_c:e}, T{}: {} vs {}", j + 1, lo[j], hi[j]);
        }
    }
}
