//! Independent numerical oracles for the integration tests.
//!
//! Everything here is implemented from scratch against textbook
//! definitions — no calls into the library under test — so agreement is
//! evidence, not circularity. Accuracy targets are ~1e-10 relative,
//! comfortably tighter than any tolerance asserted against them.

#![allow(dead_code)]

/// Gamma function by the Spouge approximation with a = 12, giving ~1e-12
/// relative accuracy on the positive half-line after reflection.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x));
    }
    const A: usize = 12;
    let z = x - 1.0;
    let mut acc = (2.0 * std::f64::consts::PI).sqrt();
    for k in 1..A {
        let kf = k as f64;
        // c_k = (-1)^{k-1}/(k-1)! · (a-k)^{k-1/2} e^{a-k}
        let mut c = (A as f64 - kf).powf(kf - 0.5) * (A as f64 - kf).exp();
        for j in 1..k {
            c /= -(j as f64);
        }
        acc += c / (z + kf);
    }
    acc * (z + A as f64).powf(z + 0.5) * (-(z + A as f64)).exp()
}

/// Trapezoid rule with uniform step; superalgebraically accurate for
/// smooth integrands that are flat (or even) at both ends.
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..n {
        s += f(a + h * i as f64);
    }
    s * h
}

/// Modified Bessel function of the second kind via the integral
/// representation `K_ν(z) = ∫₀^∞ e^{-z cosh u} cosh(νu) du`. The
/// integrand is even in u, so the trapezoid endpoint corrections vanish
/// at 0 and the decay kills them at the far end: convergence is
/// superalgebraic in the step.
pub fn bessel_k(nu: f64, z: f64) -> f64 {
    assert!(z > 0.0, "K_nu oracle needs z > 0");
    // cosh u grows like e^u/2; e^{-z cosh u} is dead once z cosh u > 750.
    let u_max = (2.0 * 750.0 / z).ln().max(4.0) + 2.0;
    let n = (u_max / 2.5e-4).ceil() as usize;
    trapezoid(|u| (-z * u.cosh()).exp() * (nu * u).cosh(), 0.0, u_max, n)
}

/// Half-integer `K` in closed form, an independent cross-check on
/// [`bessel_k`] itself.
pub fn bessel_k_half(k: usize, z: f64) -> f64 {
    let base = (std::f64::consts::PI / (2.0 * z)).sqrt() * (-z).exp();
    match k {
        0 => base,                                          // K_{1/2}
        1 => base * (1.0 + 1.0 / z),                        // K_{3/2}
        2 => base * (1.0 + 3.0 / z + 3.0 / (z * z)),        // K_{5/2}
        _ => panic!("only the first three half-integer orders are tabulated"),
    }
}

/// The subordination profile `F_ν(z) = 2 (z/2)^ν K_ν(z)` built purely
/// from the oracle pieces above.
pub fn f_nu_oracle(nu: f64, z: f64) -> f64 {
    2.0 * (z / 2.0).powf(nu) * bessel_k(nu, z)
}

/// L²(dx)-orthonormal Hermite functions
/// `h_k(x) = (2^k k! √π)^{-1/2} H_k(x) e^{-x²/2}`, with the physicists'
/// polynomial from the raw three-term recurrence; fine for the small
/// degrees the tests use.
pub fn hermite_fn(k: usize, x: f64) -> f64 {
    let mut h_prev = 1.0f64;
    let mut h = 2.0 * x;
    if k == 0 {
        h = h_prev;
    } else {
        for j in 2..=k {
            let next = 2.0 * x * h - 2.0 * (j as f64 - 1.0) * h_prev;
            h_prev = h;
            h = next;
        }
    }
    // ln(2^k k!) = Σ_{j=1}^k ln(2j)
    let log_scale = (1..=k).fold(0.0f64, |acc, j| acc + (2.0 * j as f64).ln());
    let denom = (log_scale + 0.5 * std::f64::consts::PI.ln()).exp().sqrt();
    h / denom * (-0.5 * x * x).exp()
}

/// Mehler kernel of `-Δ + |x|² + m` straight from the classical closed
/// form `e^{-mv} (2π sinh 2v)^{-d/2}
/// exp(-¼[|x-y|²/tanh v + |x+y|² tanh v])`, in plain arithmetic; valid
/// wherever the exponent stays within f64 range.
pub fn mehler(d: usize, m: f64, v: f64, x: &[f64], y: &[f64]) -> f64 {
    let sinh2v = (2.0 * v).sinh();
    let tanh_v = v.tanh();
    let mut e = 0.0;
    for i in 0..d {
        let (a, b) = (x[i], y[i]);
        e += -0.25 * ((a - b) * (a - b) / tanh_v + (a + b) * (a + b) * tanh_v);
    }
    (2.0 * std::f64::consts::PI * sinh2v).powf(-(d as f64) / 2.0) * e.exp() * (-m * v).exp()
}

/// Composite Simpson rule (n must be even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// Second central difference with step h.
pub fn second_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// First central difference with step h.
pub fn first_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}
