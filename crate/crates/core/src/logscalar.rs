//! Signed log-domain scalars.
//!
//! A [`LogScalar`] stores a real number as `sign * exp(logmag)`. Kernel
//! values in this crate routinely reach `exp(±800)` (a Gaussian factor
//! `e^{|x|²/2}` already overflows `f64` near `|x| ≈ 38.6`), so all kernel
//! and quadrature arithmetic is carried out on this type. Multiplication
//! adds log-magnitudes; addition goes through log-sum-exp with sign
//! handling.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A real number in signed log representation: `sign * exp(logmag)`.
///
/// Invariant: `sign ∈ {-1, 0, +1}` and `sign == 0` exactly when
/// `logmag == -∞`. A `logmag` of `+∞` encodes an overflowed magnitude and
/// survives arithmetic, mirroring IEEE infinities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogScalar {
    sign: i8,
    logmag: f64,
}

impl LogScalar {
    pub const fn zero() -> Self {
        LogScalar { sign: 0, logmag: f64::NEG_INFINITY }
    }

    pub const fn one() -> Self {
        LogScalar { sign: 1, logmag: 0.0 }
    }

    /// A positive value given directly by its natural logarithm.
    pub fn from_log(logmag: f64) -> Self {
        if logmag == f64::NEG_INFINITY {
            return Self::zero();
        }
        LogScalar { sign: 1, logmag }
    }

    /// A signed value given by sign and log-magnitude. `sign == 0` or
    /// `logmag == -∞` both normalize to zero.
    pub fn from_sign_log(sign: i8, logmag: f64) -> Self {
        debug_assert!((-1..=1).contains(&sign));
        if sign == 0 || logmag == f64::NEG_INFINITY {
            return Self::zero();
        }
        LogScalar { sign: sign.signum(), logmag }
    }

    /// Converts a plain double. Exact zero maps to the canonical zero.
    ///
    /// When `|x|` lies in the image of `exp` this round-trips exactly
    /// through [`to_real`](Self::to_real); the one-ulp nudge below repairs
    /// the composed rounding of `ln` then `exp` where an exact preimage
    /// exists.
    pub fn from_real(x: f64) -> Self {
        if x == 0.0 {
            return Self::zero();
        }
        let sign = if x > 0.0 { 1 } else { -1 };
        let ax = x.abs();
        let mut logmag = ax.ln();
        if logmag.is_finite() {
            let back = logmag.exp();
            if back != ax {
                let nudged = if back < ax { next_after(logmag, true) } else { next_after(logmag, false) };
                if nudged.exp() == ax {
                    logmag = nudged;
                }
            }
        }
        LogScalar { sign, logmag }
    }

    /// Back to a plain double; overflows to ±∞ and underflows to ±0.
    pub fn to_real(self) -> f64 {
        self.sign as f64 * self.logmag.exp()
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    /// Natural log of the magnitude; `-∞` for zero.
    pub fn logmag(self) -> f64 {
        self.logmag
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// True when the representation carries no NaN and no overflowed
    /// magnitude (zero counts as finite).
    pub fn is_finite(self) -> bool {
        !self.logmag.is_nan() && self.logmag < f64::INFINITY
    }

    pub fn is_nan(self) -> bool {
        self.logmag.is_nan()
    }

    pub fn abs(self) -> Self {
        LogScalar { sign: self.sign.abs(), logmag: self.logmag }
    }

    pub fn recip(self) -> Self {
        assert!(self.sign != 0, "log-domain reciprocal of zero");
        LogScalar { sign: self.sign, logmag: -self.logmag }
    }

    /// Integer power; `0^0 = 1` by convention.
    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        if self.sign == 0 {
            assert!(n > 0, "log-domain zero to a negative power");
            return Self::zero();
        }
        let sign = if self.sign < 0 && n % 2 != 0 { -1 } else { 1 };
        LogScalar { sign, logmag: self.logmag * n as f64 }
    }

    /// Real power of a non-negative value.
    pub fn powf(self, e: f64) -> Self {
        if e == 0.0 {
            return Self::one();
        }
        if self.sign == 0 {
            assert!(e > 0.0, "log-domain zero to a negative power");
            return Self::zero();
        }
        assert!(self.sign > 0, "log-domain real power of a negative value");
        LogScalar { sign: 1, logmag: self.logmag * e }
    }

    pub fn sqrt(self) -> Self {
        assert!(self.sign >= 0, "log-domain sqrt of a negative value");
        LogScalar { sign: self.sign, logmag: 0.5 * self.logmag }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Numerically stable sum of many terms: one shared exponent shift
    /// instead of a chain of pairwise log-sum-exps.
    pub fn sum<I: IntoIterator<Item = LogScalar>>(terms: I) -> Self {
        let terms: Vec<LogScalar> = terms.into_iter().collect();
        let shift = terms
            .iter()
            .filter(|t| t.sign != 0)
            .map(|t| t.logmag)
            .fold(f64::NEG_INFINITY, f64::max);
        if shift == f64::NEG_INFINITY {
            return Self::zero();
        }
        if shift == f64::INFINITY || shift.is_nan() {
            // Degenerate inputs: fall back to pairwise addition, which
            // propagates infinities/NaN with IEEE semantics.
            return terms.into_iter().fold(Self::zero(), |a, b| a + b);
        }
        let mut acc = 0.0f64;
        for t in &terms {
            if t.sign != 0 {
                acc += t.sign as f64 * (t.logmag - shift).exp();
            }
        }
        if acc == 0.0 {
            return Self::zero();
        }
        let sign = if acc > 0.0 { 1 } else { -1 };
        LogScalar { sign, logmag: shift + acc.abs().ln() }
    }
}

/// Next representable double above (`up = true`) or below `x`.
fn next_after(x: f64, up: bool) -> f64 {
    debug_assert!(x.is_finite());
    if x == 0.0 {
        return if up { f64::from_bits(1) } else { -f64::from_bits(1) };
    }
    let bits = x.to_bits();
    let bumped = if (x > 0.0) == up { bits + 1 } else { bits - 1 };
    f64::from_bits(bumped)
}

impl Default for LogScalar {
    fn default() -> Self {
        Self::zero()
    }
}

impl fmt::Display for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            1 => write!(f, "exp({})", self.logmag),
            _ => write!(f, "-exp({})", self.logmag),
        }
    }
}

impl Mul for LogScalar {
    type Output = LogScalar;

    fn mul(self, rhs: LogScalar) -> LogScalar {
        if self.sign == 0 || rhs.sign == 0 {
            return LogScalar::zero();
        }
        LogScalar { sign: self.sign * rhs.sign, logmag: self.logmag + rhs.logmag }
    }
}

impl Div for LogScalar {
    type Output = LogScalar;

    fn div(self, rhs: LogScalar) -> LogScalar {
        assert!(rhs.sign != 0, "log-domain division by zero");
        if self.sign == 0 {
            return LogScalar::zero();
        }
        LogScalar { sign: self.sign * rhs.sign, logmag: self.logmag - rhs.logmag }
    }
}

impl Neg for LogScalar {
    type Output = LogScalar;

    fn neg(self) -> LogScalar {
        LogScalar { sign: -self.sign, logmag: self.logmag }
    }
}

impl Add for LogScalar {
    type Output = LogScalar;

    fn add(self, rhs: LogScalar) -> LogScalar {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (hi, lo) = if self.logmag >= rhs.logmag { (self, rhs) } else { (rhs, self) };
        let delta = lo.logmag - hi.logmag; // ≤ 0
        if self.sign == rhs.sign {
            return LogScalar { sign: hi.sign, logmag: hi.logmag + delta.exp().ln_1p() };
        }
        // Opposite signs: log-diff-exp, dominated by the larger magnitude.
        if delta == 0.0 {
            return LogScalar::zero();
        }
        let diff = (-delta.exp()).ln_1p();
        LogScalar { sign: hi.sign, logmag: hi.logmag + diff }
    }
}

impl Sub for LogScalar {
    type Output = LogScalar;

    fn sub(self, rhs: LogScalar) -> LogScalar {
        self + (-rhs)
    }
}

impl PartialOrd for LogScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.logmag.is_nan() || other.logmag.is_nan() {
            return None;
        }
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => {}
            ord => return Some(ord),
        }
        match self.sign {
            0 => Some(Ordering::Equal),
            1 => self.logmag.partial_cmp(&other.logmag),
            _ => other.logmag.partial_cmp(&self.logmag),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_is_canonical() {
        let z = LogScalar::from_real(0.0);
        assert_eq!(z.sign(), 0);
        assert_eq!(z.logmag(), f64::NEG_INFINITY);
        assert_eq!(z, LogScalar::zero());
        assert_eq!((LogScalar::one() - LogScalar::one()), LogScalar::zero());
    }

    #[test]
    fn roundtrip_and_signs() {
        // Round-tripping x ↦ (sign, ln|x|) ↦ x loses up to |ln x|·ε
        // relative for values off the exp image (~1e-14 at |ln x| ≈ 55);
        // bit-exactness on the image itself is property-tested below.
        for &x in &[1.0, -1.0, 3.5, -2.75e-9, 6.02e23, -1.6e-19] {
            let l = LogScalar::from_real(x);
            assert_eq!(l.sign(), if x > 0.0 { 1 } else { -1 });
            assert_relative_eq!(l.to_real(), x, max_relative = 1e-13);
        }
    }

    #[test]
    fn huge_products_stay_finite() {
        let a = LogScalar::from_log(400.0);
        let b = LogScalar::from_log(412.5);
        let p = a * b;
        assert_eq!(p.logmag(), 812.5);
        assert!(p.is_finite());
        assert_eq!((p / b).logmag(), 400.0);
    }

    #[test]
    fn addition_matches_double_arithmetic() {
        let cases = [
            (3.25, 4.75),
            (1e-12, 1.0),
            (-2.5, 1.25),
            (7.5e10, -3.25e10),
            (-1e-280, -7e-281),
        ];
        for &(a, b) in &cases {
            let got = (LogScalar::from_real(a) + LogScalar::from_real(b)).to_real();
            assert_relative_eq!(got, a + b, max_relative = 1e-13);
        }
    }

    #[test]
    fn subtraction_near_cancellation() {
        let a = LogScalar::from_real(1.0 + 1e-9);
        let b = LogScalar::one();
        let d = (a - b).to_real();
        assert_relative_eq!(d, 1e-9, max_relative = 1e-6);
    }

    #[test]
    fn batch_sum_matches_sequential() {
        let terms: Vec<f64> = vec![1.0, -0.5, 0.25, -0.125, 3.75e-3, 9.0];
        let batch = LogScalar::sum(terms.iter().map(|&t| LogScalar::from_real(t)));
        let plain: f64 = terms.iter().sum();
        assert_relative_eq!(batch.to_real(), plain, max_relative = 1e-14);
    }

    #[test]
    fn ordering_follows_real_line() {
        let vals = [-3.0, -0.5, 0.0, 1e-8, 2.0, 1e9];
        for &a in &vals {
            for &b in &vals {
                let la = LogScalar::from_real(a);
                let lb = LogScalar::from_real(b);
                assert_eq!(la.partial_cmp(&lb), a.partial_cmp(&b), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn powers_and_roots() {
        let x = LogScalar::from_real(-2.0);
        assert_relative_eq!(x.powi(3).to_real(), -8.0, max_relative = 1e-14);
        assert_relative_eq!(x.powi(2).to_real(), 4.0, max_relative = 1e-14);
        assert_eq!(x.powi(0), LogScalar::one());
        let y = LogScalar::from_real(9.0);
        assert_relative_eq!(y.sqrt().to_real(), 3.0, max_relative = 1e-14);
        assert_relative_eq!(y.powf(-0.5).to_real(), 1.0 / 3.0, max_relative = 1e-14);
    }

    proptest! {
        // Exactness on the representable set: anything of the form exp(l)
        // round-trips bit-for-bit.
        #[test]
        fn roundtrip_exact_on_exp_image(l in -700.0f64..700.0) {
            let x = l.exp();
            prop_assert_eq!(LogScalar::from_real(x).to_real(), x);
            prop_assert_eq!(LogScalar::from_real(-x).to_real(), -x);
        }

        #[test]
        fn mul_agrees_with_doubles(a in -1e12f64..1e12, b in -1e12f64..1e12) {
            prop_assume!(a != 0.0 && b != 0.0);
            let got = (LogScalar::from_real(a) * LogScalar::from_real(b)).to_real();
            let want = a * b;
            prop_assert!((got - want).abs() <= 1e-13 * want.abs());
        }

        #[test]
        fn add_monotone_in_each_operand(a in -1e6f64..1e6, b in -1e6f64..1e6, c in 0.0f64..1e6) {
            let la = LogScalar::from_real(a);
            let lb = LogScalar::from_real(b);
            let lc = LogScalar::from_real(b + c);
            prop_assert!(la + lc >= la + lb);
        }
    }
}
