//! Special-function contracts: the library's Γ, F_ν, and Hermite functions
//! are checked against independently coded constructions (Spouge series,
//! Bessel cosh-integral, raw three-term recurrence) rather than against
//! themselves.

mod oracles;

use hermipoisson::quad::QuadSpec;
use hermipoisson::special::{
    f_nu, f_nu_fd_residual, f_nu_ode_residual, gamma_fn, hermite_fn, hermite_fn_1d, ln_gamma,
    MultiIndex,
};

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

/// The two oracle routes to K_ν (cosh-integral vs. closed half-integer
/// forms) must agree with each other before either is trusted as a witness.
#[test]
fn bessel_oracle_self_check() {
    for (idx, nu) in [0.5, 1.5, 2.5].into_iter().enumerate() {
        for z in [0.2, 0.8, 1.0, 2.5, 6.0] {
            let integral = oracles::bessel_k(nu, z);
            let closed = oracles::bessel_k_half(idx, z);
            assert!(
                rel_err(integral, closed) < 1e-11,
                "K_{nu}({z}): integral {integral:e} vs closed form {closed:e}"
            );
        }
    }
}

#[test]
fn gamma_matches_spouge_series() {
    for x in [0.1, 0.3, 0.5, 1.0, 1.7, 2.5, 4.5, 9.2, 15.0, 25.0] {
        let got = gamma_fn(x);
        let want = oracles::gamma(x);
        assert!(rel_err(got, want) < 1e-11, "Γ({x}): {got:e} vs {want:e}");
        if x >= 0.5 {
            let lg = ln_gamma(x);
            assert!(
                (lg - want.ln()).abs() < 1e-11 * want.ln().abs().max(1.0),
                "lnΓ({x}): {lg} vs {}",
                want.ln()
            );
        }
    }
    // Fixed points with exact closed forms.
    assert!(rel_err(gamma_fn(0.5), std::f64::consts::PI.sqrt()) < 1e-13);
    assert!(rel_err(gamma_fn(5.0), 24.0) < 1e-13);
}

/// F_ν(z) = 2 (z/2)^ν K_ν(z), rebuilt here from the cosh-integral Bessel
/// oracle. Covers non-half-integer orders (ν = 0.75, 1) that the closed
/// forms cannot reach.
#[test]
fn f_nu_matches_independent_bessel_integral() {
    let spec = QuadSpec::with_rel_tol(1e-11);
    for nu in [0.5, 0.75, 1.0, 1.5, 2.5] {
        for z in [0.1, 0.3, 0.7, 1.0, 2.0, 4.0, 8.0] {
            let got = f_nu(nu, z, &spec).unwrap().to_real();
            let want = oracles::f_nu_oracle(nu, z);
            assert!(
                rel_err(got, want) < 1e-8,
                "F_{nu}({z}): {got:e} vs oracle {want:e} (rel {:.2e})",
                rel_err(got, want)
            );
        }
    }
}

/// As z → 0 the profile flattens to Γ(ν); the leading correction is
/// O(z^{2ν}) + O(z²), both below 5e-3 at z = 1e-3 for these orders.
#[test]
fn f_nu_small_argument_limit_is_gamma() {
    let spec = QuadSpec::with_rel_tol(1e-11);
    for nu in [0.5, 1.0, 1.6] {
        let got = f_nu(nu, 1e-3, &spec).unwrap().to_real();
        let want = oracles::gamma(nu);
        assert!(
            rel_err(got, want) < 5e-3,
            "F_{nu}(1e-3) = {got:e} should be near Γ(ν) = {want:e}"
        );
        // And the deviation must shrink with z: compare against z = 1e-2.
        let coarse = f_nu(nu, 1e-2, &spec).unwrap().to_real();
        assert!(
            (got - want).abs() < (coarse - want).abs(),
            "deviation from Γ(ν) must shrink as z decreases (ν = {nu})"
        );
    }
}

/// The modified-Bessel ODE residual, evaluated with exact derivative
/// formulas, vanishes to quadrature accuracy; the finite-difference variant
/// decays at second order when the step is halved.
#[test]
fn f_nu_ode_residuals_vanish_and_fd_decays_second_order() {
    let spec = QuadSpec::with_rel_tol(1e-11);
    for nu in [0.5, 0.75, 1.0, 1.5] {
        for z in [0.5, 1.0, 2.0, 4.0] {
            let r = f_nu_ode_residual(nu, z, &spec).unwrap().abs();
            assert!(r < 1e-8, "ODE residual at (ν={nu}, z={z}) is {r:e}");
        }
    }
    for (nu, z) in [(0.75, 2.0), (1.0, 1.0), (0.5, 3.0)] {
        let r_h = f_nu_fd_residual(nu, z, 0.05, &spec).unwrap();
        let r_half = f_nu_fd_residual(nu, z, 0.025, &spec).unwrap();
        assert!(r_h.abs() < 1e-3, "FD residual too large at (ν={nu}, z={z}): {r_h:e}");
        let ratio = r_h / r_half;
        assert!(
            (3.0..=5.5).contains(&ratio),
            "halving the step should cut the residual ~4x at (ν={nu}, z={z}); got {ratio}"
        );
    }
}

#[test]
fn hermite_functions_match_raw_recurrence() {
    for k in 0..=10 {
        for x in [-3.2, -1.0, -0.25, 0.0, 0.6, 1.7, 3.1] {
            let got = hermite_fn_1d(k, x).to_real();
            let want = oracles::hermite_fn(k, x);
            assert!(
                (got - want).abs() < 1e-10 * want.abs().max(1.0),
                "h_{k}({x}): {got:e} vs {want:e}"
            );
        }
    }
    // Tensor products reduce to products of the 1-d oracle.
    let k = MultiIndex::new(vec![2, 3]).unwrap();
    let x = [0.4, -1.1];
    let got = hermite_fn(&k, &x).unwrap().to_real();
    let want = oracles::hermite_fn(2, 0.4) * oracles::hermite_fn(3, -1.1);
    assert!(rel_err(got, want) < 1e-10, "h_(2,3): {got:e} vs {want:e}");
}

/// Reference values computed once with the independent oracles in
/// `tests/oracles` and frozen; guards both library and oracle against
/// silent drift.
#[test]
fn frozen_reference_values() {
    let spec = QuadSpec::with_rel_tol(1e-11);
    // F_{1/2}(1) = √π e^{-1} exactly.
    let f_half_1 = f_nu(0.5, 1.0, &spec).unwrap().to_real();
    assert!(rel_err(f_half_1, std::f64::consts::PI.sqrt() / std::f64::consts::E) < 1e-10);
    for (nu, z, frozen) in [
        (1.0, 1.0, 6.019072301972346e-1),  // = K_1(1)
        (0.75, 2.0, 2.5580595725835803e-1),
        (1.5, 0.5, 8.0628570262494015e-1),
    ] {
        let got = f_nu(nu, z, &spec).unwrap().to_real();
        assert!(
            rel_err(got, frozen) < 1e-9,
            "F_{nu}({z}) drifted from frozen reference: {got:.16e} vs {frozen:.16e}"
        );
        let oracle = oracles::f_nu_oracle(nu, z);
        assert!(rel_err(oracle, frozen) < 1e-9, "oracle drifted: {oracle:.16e}");
    }
    let h4 = hermite_fn_1d(4, 0.7).to_real();
    assert!(rel_err(h4, -2.3036447379803546e-1) < 1e-12, "h_4(0.7) = {h4:.16e}");
}
