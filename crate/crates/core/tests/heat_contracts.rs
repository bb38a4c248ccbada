//! Heat-kernel contracts: the log-domain Mehler evaluation is compared to a
//! plain-arithmetic closed form, and the semigroup law and operator action
//! are re-derived with a Simpson integrator that shares no code with the
//! library's quadrature.

mod oracles;

use hermipoisson::heat::{heat_apply, mehler_kernel, ApplyOpts, TimeVar};
use hermipoisson::quad::QuadSpec;
use hermipoisson::special::Params;
use hermipoisson::{LogScalar, ScalarField};

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn mehler_matches_plain_arithmetic_closed_form() {
    let points: [(&[f64], &[f64]); 3] = [
        (&[0.7], &[-0.4]),
        (&[0.7, -1.2], &[-0.4, 0.9]),
        (&[0.7, -1.2, 0.3], &[-0.4, 0.9, 1.6]),
    ];
    for (d, (x, y)) in (1..=3).zip(points) {
        for m in [-1.0, 0.0, 1.5] {
            let p = Params::new(d, m, 0.5).unwrap();
            for v in [0.05, 0.5, 2.0] {
                let got = mehler_kernel(&p, TimeVar::V(v), x, y).unwrap();
                let want = oracles::mehler(d, m, v, x, y);
                assert!(got.sign() > 0, "heat kernel must be positive");
                assert!(
                    (got.logmag() - want.ln()).abs() < 1e-11,
                    "d={d} m={m} v={v}: log {} vs oracle {}",
                    got.logmag(),
                    want.ln()
                );
            }
        }
    }
}

#[test]
fn time_parametrizations_agree() {
    let p = Params::new(2, -0.5, 0.5).unwrap();
    let (x, y) = ([0.9, -0.3], [-1.1, 0.4]);
    for v in [0.02, 0.3, 1.4] {
        let plain = mehler_kernel(&p, TimeVar::V(v), &x, &y).unwrap().logmag();
        let s = mehler_kernel(&p, TimeVar::S(v.tanh()), &x, &y).unwrap().logmag();
        let r = mehler_kernel(&p, TimeVar::R((-2.0 * v).exp()), &x, &y).unwrap().logmag();
        assert!((plain - s).abs() < 1e-12 && (plain - r).abs() < 1e-12);
    }
}

/// Semigroup law h_{v+w}(x,y) = ∫ h_v(x,z) h_w(z,y) dz, with the middle
/// integral done entirely by the oracle Simpson rule on oracle kernels.
#[test]
fn chapman_kolmogorov_via_simpson_composition() {
    for (m, v, w, x, y) in [
        (0.5, 0.15, 0.35, 0.4, -0.8),
        (0.5, 0.6, 0.2, 1.3, 0.7),
        (-1.0, 0.25, 0.25, -0.5, -1.6),
    ] {
        let composed = oracles::simpson(
            |z| oracles::mehler(1, m, v, &[x], &[z]) * oracles::mehler(1, m, w, &[z], &[y]),
            -12.0,
            12.0,
            4000,
        );
        let direct = oracles::mehler(1, m, v + w, &[x], &[y]);
        assert!(
            rel_err(composed, direct) < 1e-9,
            "m={m} v={v} w={w}: composed {composed:e} vs direct {direct:e}"
        );
        // The library kernel must land on the same composed value.
        let p = Params::new(1, m, 0.5).unwrap();
        let lib = mehler_kernel(&p, TimeVar::V(v + w), &[x], &[y]).unwrap().to_real();
        assert!(rel_err(lib, composed) < 1e-9);
    }
}

/// The heat operator applied to a concrete profile agrees with the oracle
/// quadrature ∫ h_v(x,y) f(y) dy.
#[test]
fn heat_apply_matches_simpson_quadrature() {
    let p = Params::new(1, 0.3, 0.5).unwrap();
    let f = ScalarField::Expr(hermipoisson::expr::parse_expr("exp(-r^2)*(1+r^2/2)").unwrap());
    let spec = QuadSpec::with_rel_tol(1e-10);
    let opts = ApplyOpts::default();
    for (v, x) in [(0.4, 0.6), (0.1, -1.2), (1.0, 0.0)] {
        let got = heat_apply(&p, TimeVar::V(v), &f, &[x], &spec, &opts).unwrap().value.to_real();
        let want = oracles::simpson(
            |y| oracles::mehler(1, 0.3, v, &[x], &[y]) * (-y * y).exp() * (1.0 + y * y / 2.0),
            -12.0,
            12.0,
            4000,
        );
        assert!(rel_err(got, want) < 1e-8, "v={v} x={x}: {got:e} vs {want:e}");
    }
}

/// Hermite functions (built from the oracle recurrence, fed in as opaque
/// sample functions) decay exactly by e^{-v(2k+d+m)} under the heat flow.
#[test]
fn heat_flow_scales_eigenfunctions_exactly() {
    let spec = QuadSpec::with_rel_tol(1e-10);
    let opts = ApplyOpts::default();
    for (m, k, v, x) in [(0.0, 2usize, 0.3, 0.5), (-1.0, 4, 0.7, 1.1), (1.0, 0, 0.1, -0.4)] {
        let p = Params::new(1, m, 0.5).unwrap();
        let f = ScalarField::from_real_fn(move |y: &[f64]| oracles::hermite_fn(k, y[0]));
        let got = heat_apply(&p, TimeVar::V(v), &f, &[x], &spec, &opts).unwrap().value.to_real();
        let lambda = 2.0 * k as f64 + 1.0 + m;
        let want = (-v * lambda).exp() * oracles::hermite_fn(k, x);
        assert!(
            (got - want).abs() < 1e-8 * want.abs().max(1e-3),
            "m={m} k={k}: {got:e} vs {want:e}"
        );
    }
}

/// Total heat mass ∫ h_v(x,y) dy follows the closed form for m = 0 ground
/// behavior: applying the flow to 1 at x = 0. Frozen from the oracle.
#[test]
fn frozen_heat_values() {
    let p = Params::new(1, 0.0, 0.5).unwrap();
    let got = mehler_kernel(&p, TimeVar::V(0.5), &[0.3], &[-0.7]).unwrap().to_real();
    let want = oracles::mehler(1, 0.0, 0.5, &[0.3], &[-0.7]);
    assert!(rel_err(got, want) < 1e-12);
    assert!(
        rel_err(want, 2.1031870545182171e-1) < 1e-12,
        "oracle drifted: {want:.16e}"
    );
    // Flowing the constant 1 from the origin: ∫ h_v(0,y) dy.
    let one = ScalarField::from_real_fn(|_| 1.0);
    let spec = QuadSpec::with_rel_tol(1e-10);
    let mass = heat_apply(&p, TimeVar::V(0.5), &one, &[0.0], &spec, &ApplyOpts::default())
        .unwrap()
        .value
        .to_real();
    let mass_oracle =
        oracles::simpson(|y| oracles::mehler(1, 0.0, 0.5, &[0.0], &[y]), -12.0, 12.0, 4000);
    assert!(rel_err(mass, mass_oracle) < 1e-9);
    assert!(mass < 1.0, "the potential drains mass: got {mass}");
    assert!(
        rel_err(mass_oracle, 8.0501818219458998e-1) < 1e-10,
        "oracle drifted: {mass_oracle:.16e}"
    );
}
