//! Exact arithmetic over the ℚ-span of `{1, √d}` and the λ mean family it
//! carries.
//!
//! A discontinuous additive function on all of ℝ needs a Hamel basis, which
//! has no constructive realization. Restricting to the two-dimensional span
//! `q0·1 + q1·√d` keeps everything computable while preserving the algebra
//! the construction relies on: a functional `α(q0 + q1√d) = a0·q0 + a1·q1`
//! is exactly additive on the span, yet fails to be ℝ-linear whenever
//! `(a0, a1)` is not proportional to `(1, √d)` — which for rational
//! coefficients only excludes `(0, 0)`.
//!
//! On top of the span sits the weighting family
//! `λ(u) = (|α(u)| + b) / (c|α(u)| + d)` and the pair step
//! `M(u,v) = λ(u)·u + (1−λ(u))·v`, `N(u,v) = (1−λ(u))·u + λ(u)·v`,
//! whose orbits contract toward the arithmetic mean of the starting pair.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{format_rational, parse_rational, rat, rational_to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HamelError {
    #[error("d = {0} is not a square-free integer >= 2")]
    NotSquareFree(u64),
    #[error("mixed Hamel contexts: sqrt({left}) vs sqrt({right})")]
    ContextMismatch { left: u64, right: u64 },
    #[error("additive functional (0, 0) is the zero functional; a1^2 = d*a0^2 holds, so it is not a discontinuity surrogate")]
    DegenerateFunctional,
    #[error("parameter constraint violated: {inequality}")]
    InvalidParams { inequality: &'static str },
    #[error("cannot parse {text:?} as a Hamel number (expected \"q0+q1*sqrt(d)\")")]
    Parse { text: String },
}

/// True when `d >= 2` and no prime square divides it.
pub fn is_square_free(d: u64) -> bool {
    if d < 2 {
        return false;
    }
    let mut m = d;
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return false;
            }
        }
        p += 1;
    }
    true
}

/// Exact element `q0 + q1·√d` of the ℚ-span of `{1, √d}`.
///
/// The representation is unique because `1` and `√d` are linearly
/// independent over ℚ for square-free `d >= 2`. All arithmetic is exact;
/// comparisons go through [`HamelNumber::sign`], which decides the sign of
/// `q0 + q1√d` by rational case analysis without ever approximating `√d`.
///
/// Values from different contexts (different `d`) cannot be combined;
/// the arithmetic operators panic on a mismatch, fallible entry points
/// return [`HamelError::ContextMismatch`].
#[derive(Debug, Clone, PartialEq)]
pub struct HamelNumber {
    q0: Rational,
    q1: Rational,
    d: u64,
}

impl HamelNumber {
    pub fn new(q0: Rational, q1: Rational, d: u64) -> Result<Self, HamelError> {
        if !is_square_free(d) {
            return Err(HamelError::NotSquareFree(d));
        }
        Ok(Self { q0, q1, d })
    }

    pub fn from_rational(q0: Rational, d: u64) -> Result<Self, HamelError> {
        Self::new(q0, Rational::zero(), d)
    }

    /// The basis element `√d` itself.
    pub fn sqrt_d(d: u64) -> Result<Self, HamelError> {
        Self::new(Rational::zero(), Rational::one(), d)
    }

    pub fn zero(d: u64) -> Result<Self, HamelError> {
        Self::from_rational(Rational::zero(), d)
    }

    pub fn coeff_unit(&self) -> &Rational {
        &self.q0
    }

    pub fn coeff_sqrt(&self) -> &Rational {
        &self.q1
    }

    pub fn context_d(&self) -> u64 {
        self.d
    }

    fn assert_same_context(&self, rhs: &Self) {
        assert_eq!(
            self.d, rhs.d,
            "mixed Hamel contexts: sqrt({}) vs sqrt({})",
            self.d, rhs.d
        );
    }

    /// Exact sign of the real number `q0 + q1√d`: −1, 0, or +1.
    ///
    /// When the terms have mixed signs the comparison reduces to
    /// `q0² ⋚ d·q1²` (multiply by the conjugate, which the sign split keeps
    /// positive); agreement of signs needs no comparison at all. The `Equal`
    /// arm of the mixed case is unreachable for square-free `d` unless both
    /// coefficients vanish.
    pub fn sign(&self) -> i32 {
        let s0 = rational_sign(&self.q0);
        let s1 = rational_sign(&self.q1);
        match (s0, s1) {
            (0, 0) => 0,
            (s, 0) => s,
            (0, s) => s,
            (1, 1) => 1,
            (-1, -1) => -1,
            _ => {
                let lhs = &self.q0 * &self.q0;
                let rhs = &self.q1 * &self.q1 * rat(self.d as i64, 1);
                match lhs.cmp(&rhs) {
                    Ordering::Greater => s0,
                    Ordering::Less => s1,
                    Ordering::Equal => 0,
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.q0.is_zero() && self.q1.is_zero()
    }

    pub fn abs(&self) -> Self {
        if self.sign() < 0 {
            -self
        } else {
            self.clone()
        }
    }

    /// Scales by an exact rational.
    pub fn scale(&self, q: &Rational) -> Self {
        Self {
            q0: &self.q0 * q,
            q1: &self.q1 * q,
            d: self.d,
        }
    }

    /// Exact reciprocal via the conjugate: `1/(q0+q1√d) = (q0−q1√d)/(q0²−d·q1²)`.
    /// The denominator is nonzero whenever the number is (linear independence).
    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let denom = &self.q0 * &self.q0 - &self.q1 * &self.q1 * rat(self.d as i64, 1);
        Some(Self {
            q0: &self.q0 / &denom,
            q1: -&self.q1 / &denom,
            d: self.d,
        })
    }

    pub fn half(&self) -> Self {
        self.scale(&rat(1, 2))
    }

    /// Nearest binary64 image of the exact value.
    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.q0) + rational_to_f64(&self.q1) * (self.d as f64).sqrt()
    }

    pub fn to_float(&self) -> HamelFloat {
        HamelFloat {
            q0: rational_to_f64(&self.q0),
            q1: rational_to_f64(&self.q1),
            d: self.d,
        }
    }

    /// Parses the text form `"q0+q1*sqrt(d)"`. Either term may be absent
    /// (`"3/4"`, `"sqrt(2)"`, `"-1/2*sqrt(2)"`); a bare `sqrt(d)` has
    /// coefficient 1. Any `sqrt(d')` in the text must match the context `d`.
    pub fn parse(text: &str, d: u64) -> Result<Self, HamelError> {
        if !is_square_free(d) {
            return Err(HamelError::NotSquareFree(d));
        }
        let err = || HamelError::Parse {
            text: text.to_owned(),
        };
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(err());
        }
        let mut q0 = Rational::zero();
        let mut q1 = Rational::zero();
        for (sign, term) in split_signed_terms(&compact).ok_or_else(err)? {
            let sgn = if sign { -Rational::one() } else { Rational::one() };
            if let Some(idx) = term.find("sqrt(") {
                let inner = &term[idx + 5..];
                let close = inner.find(')').ok_or_else(err)?;
                if !inner[close + 1..].is_empty() {
                    return Err(err());
                }
                let term_d: u64 = inner[..close].parse().map_err(|_| err())?;
                if term_d != d {
                    return Err(HamelError::ContextMismatch {
                        left: d,
                        right: term_d,
                    });
                }
                let coeff_text = &term[..idx];
                let coeff = if coeff_text.is_empty() {
                    Rational::one()
                } else {
                    let stripped = coeff_text.strip_suffix('*').ok_or_else(err)?;
                    parse_rational(stripped).map_err(|_| err())?
                };
                q1 += sgn * coeff;
            } else {
                q0 += sgn * parse_rational(&term).map_err(|_| err())?;
            }
        }
        Self::new(q0, q1, d)
    }
}

fn rational_sign(q: &Rational) -> i32 {
    if q.is_zero() {
        0
    } else if q.is_positive() {
        1
    } else {
        -1
    }
}

/// Splits `"a+b-c"` into `[(false,"a"), (false,"b"), (true,"c")]`,
/// keeping a leading sign attached to the first term.
fn split_signed_terms(s: &str) -> Option<Vec<(bool, String)>> {
    let mut terms = Vec::new();
    let mut current = String::new();
    let mut negative = false;
    for (i, ch) in s.char_indices() {
        if (ch == '+' || ch == '-') && i > 0 {
            if current.is_empty() {
                return None;
            }
            terms.push((negative, std::mem::take(&mut current)));
            negative = ch == '-';
        } else if ch == '-' {
            negative = true;
        } else if ch != '+' {
            current.push(ch);
        }
    }
    if current.is_empty() {
        return None;
    }
    terms.push((negative, current));
    Some(terms)
}

impl fmt::Display for HamelNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q1.is_zero() {
            return write!(f, "{}", format_rational(&self.q0));
        }
        let surd = format!("{}*sqrt({})", format_rational(&self.q1.abs()), self.d);
        if self.q0.is_zero() {
            if self.q1.is_negative() {
                write!(f, "-{surd}")
            } else {
                write!(f, "{surd}")
            }
        } else {
            let op = if self.q1.is_negative() { '-' } else { '+' };
            write!(f, "{}{op}{surd}", format_rational(&self.q0))
        }
    }
}

impl PartialOrd for HamelNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.d != other.d {
            return None;
        }
        Some((self - other).sign().cmp(&0))
    }
}

macro_rules! hamel_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &HamelNumber {
            type Output = HamelNumber;
            fn $method(self, rhs: &HamelNumber) -> HamelNumber {
                self.assert_same_context(rhs);
                HamelNumber {
                    q0: &self.q0 $op &rhs.q0,
                    q1: &self.q1 $op &rhs.q1,
                    d: self.d,
                }
            }
        }
        impl $trait for HamelNumber {
            type Output = HamelNumber;
            fn $method(self, rhs: HamelNumber) -> HamelNumber {
                (&self).$method(&rhs)
            }
        }
    };
}

hamel_binop!(Add, add, +);
hamel_binop!(Sub, sub, -);

impl Mul for &HamelNumber {
    type Output = HamelNumber;
    // (a + b√d)(a' + b'√d) = (aa' + d·bb') + (ab' + a'b)√d
    fn mul(self, rhs: &HamelNumber) -> HamelNumber {
        self.assert_same_context(rhs);
        let d = rat(self.d as i64, 1);
        HamelNumber {
            q0: &self.q0 * &rhs.q0 + (&self.q1 * &rhs.q1) * &d,
            q1: &self.q0 * &rhs.q1 + &self.q1 * &rhs.q0,
            d: self.d,
        }
    }
}

impl Mul for HamelNumber {
    type Output = HamelNumber;
    fn mul(self, rhs: HamelNumber) -> HamelNumber {
        (&self) * (&rhs)
    }
}

impl Neg for &HamelNumber {
    type Output = HamelNumber;
    fn neg(self) -> HamelNumber {
        HamelNumber {
            q0: -&self.q0,
            q1: -&self.q1,
            d: self.d,
        }
    }
}

impl Neg for HamelNumber {
    type Output = HamelNumber;
    fn neg(self) -> HamelNumber {
        -&self
    }
}

/// Exact sign of a Hamel number: −1, 0, or +1.
pub fn hamel_sign(x: &HamelNumber) -> i32 {
    x.sign()
}

/// ℚ-linear functional on the span: `α(q0·1 + q1·√d) = a0·q0 + a1·q1`.
///
/// Additivity `α(x+y) = α(x)+α(y)` holds exactly by construction. The
/// functional is the restriction of a discontinuous additive function
/// whenever `(a0, a1)` is not proportional to `(1, √d)`, certified by the
/// rational inequality `a1² ≠ d·a0²` — which, for rational coefficients and
/// square-free `d`, fails only at `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveFunctional {
    a0: Rational,
    a1: Rational,
    d: u64,
}

impl AdditiveFunctional {
    pub fn new(a0: Rational, a1: Rational, d: u64) -> Result<Self, HamelError> {
        if !is_square_free(d) {
            return Err(HamelError::NotSquareFree(d));
        }
        let lhs = &a1 * &a1;
        let rhs = &a0 * &a0 * rat(d as i64, 1);
        if lhs == rhs {
            return Err(HamelError::DegenerateFunctional);
        }
        Ok(Self { a0, a1, d })
    }

    /// The default surrogate: `α(q0 + q1√d) = q1`, i.e. `(a0, a1) = (0, 1)`.
    pub fn coefficient_reader(d: u64) -> Result<Self, HamelError> {
        Self::new(Rational::zero(), Rational::one(), d)
    }

    pub fn context_d(&self) -> u64 {
        self.d
    }

    pub fn coefficients(&self) -> (&Rational, &Rational) {
        (&self.a0, &self.a1)
    }

    /// Exact evaluation `a0·q0 + a1·q1`.
    pub fn eval(&self, x: &HamelNumber) -> Rational {
        assert_eq!(
            self.d,
            x.context_d(),
            "mixed Hamel contexts: sqrt({}) vs sqrt({})",
            self.d,
            x.context_d()
        );
        &self.a0 * x.coeff_unit() + &self.a1 * x.coeff_sqrt()
    }

    /// Binary64 image of the functional on a float-coefficient span element.
    pub fn eval_float(&self, x: &HamelFloat) -> f64 {
        debug_assert_eq!(self.d, x.d);
        rational_to_f64(&self.a0) * x.q0 + rational_to_f64(&self.a1) * x.q1
    }
}

/// Exact evaluation of an additive functional (free-function form).
pub fn alpha_eval(f: &AdditiveFunctional, x: &HamelNumber) -> Rational {
    f.eval(x)
}

/// Validated parameters `(b, c, d, κ)` of the weighting family
/// `λ(u) = (|α(u)| + b) / (c·|α(u)| + d)`.
///
/// The constraints force `λ` into `[(1−κ)/2, (1+κ)/2]` for every real
/// argument, which is exactly what makes the pair step contract the gap by
/// the factor `|2λ−1| ≤ κ` per iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaParams {
    b: Rational,
    c: Rational,
    d_param: Rational,
    kappa: Rational,
}

/// Checks the parameter constraints in exact rational arithmetic and names
/// the first violated inequality.
pub fn validate_lambda_params(
    b: Rational,
    c: Rational,
    d_param: Rational,
    kappa: Rational,
) -> Result<LambdaParams, HamelError> {
    let fail = |inequality| Err(HamelError::InvalidParams { inequality });
    let one = Rational::one();
    let two = rat(2, 1);
    if !(kappa > Rational::zero() && kappa < one) {
        return fail("0 < kappa < 1");
    }
    if c <= one {
        return fail("c > 1");
    }
    if b <= Rational::zero() {
        return fail("b > 0");
    }
    if b > d_param {
        return fail("b <= d");
    }
    if c < &two / (&one + &kappa) {
        return fail("2/(1+kappa) <= c");
    }
    if c > &two / (&one - &kappa) {
        return fail("c <= 2/(1-kappa)");
    }
    if d_param < &two * &b / (&one + &kappa) {
        return fail("2b/(1+kappa) <= d");
    }
    if d_param > &two * &b / (&one - &kappa) {
        return fail("d <= 2b/(1-kappa)");
    }
    Ok(LambdaParams {
        b,
        c,
        d_param,
        kappa,
    })
}

impl LambdaParams {
    /// The worked family `λ(u) = (3|α(u)|+3) / (4|α(u)|+12)`, i.e.
    /// `(b, c, d, κ) = (1, 4/3, 4, 1/2)`.
    pub fn standard() -> Self {
        validate_lambda_params(rat(1, 1), rat(4, 3), rat(4, 1), rat(1, 2))
            .expect("standard parameters satisfy the constraints")
    }

    pub fn kappa(&self) -> &Rational {
        &self.kappa
    }

    pub fn as_tuple(&self) -> (&Rational, &Rational, &Rational, &Rational) {
        (&self.b, &self.c, &self.d_param, &self.kappa)
    }

    /// `λ` as a function of `t = |α(u)| >= 0`, exact.
    pub fn lambda_at(&self, t: &Rational) -> Rational {
        debug_assert!(!t.is_negative());
        (t + &self.b) / (&self.c * t + &self.d_param)
    }

    /// Binary64 image of `lambda_at`, for float-coefficient orbits.
    pub fn lambda_at_f64(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        (t + rational_to_f64(&self.b)) / (rational_to_f64(&self.c) * t + rational_to_f64(&self.d_param))
    }

    /// Certified enclosure of the λ range over all real arguments.
    ///
    /// `λ(t) = (t+b)/(ct+d)` is monotone on `t >= 0` (the derivative sign is
    /// the sign of `d − bc`), so its range is squeezed between the endpoint
    /// `λ(0) = b/d` and the limit `1/c` as `t → ∞`; both lie in
    /// `[(1−κ)/2, (1+κ)/2]` by the validated constraints. The limit endpoint
    /// is approached but never attained (flagged by `*_attained`).
    pub fn lambda_range(&self) -> LambdaRange {
        let at_zero = &self.b / &self.d_param;
        let at_infinity = Rational::one() / &self.c;
        if at_zero <= at_infinity {
            LambdaRange {
                lo: at_zero,
                hi: at_infinity,
                lo_attained: true,
                hi_attained: false,
            }
        } else {
            LambdaRange {
                lo: at_infinity,
                hi: at_zero,
                lo_attained: false,
                hi_attained: true,
            }
        }
    }

    /// Certified exact bound on the per-step gap factor `|2λ − 1|`,
    /// valid for every real argument. Never exceeds κ.
    pub fn contraction_factor(&self) -> Rational {
        let range = self.lambda_range();
        let two = rat(2, 1);
        let lo_dev = (&two * &range.lo - Rational::one()).abs();
        let hi_dev = (&two * &range.hi - Rational::one()).abs();
        let factor = lo_dev.max(hi_dev);
        debug_assert!(factor <= self.kappa);
        factor
    }
}

/// Exact λ range with attainment flags; see [`LambdaParams::lambda_range`].
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaRange {
    pub lo: Rational,
    pub hi: Rational,
    pub lo_attained: bool,
    pub hi_attained: bool,
}

/// Exact `λ(u)` for a span element, via `t = |α(u)|`.
pub fn lambda_eval(params: &LambdaParams, f: &AdditiveFunctional, u: &HamelNumber) -> Rational {
    params.lambda_at(&f.eval(u).abs())
}

/// One exact step of the pair mapping:
/// `m = λ(u)·u + (1−λ(u))·v`, `n = (1−λ(u))·u + λ(u)·v`.
///
/// `m + n = u + v` holds exactly (the arithmetic mean is invariant), and
/// `|m − n| = |2λ(u)−1|·|u−v|` exactly.
pub fn mn_step(
    params: &LambdaParams,
    f: &AdditiveFunctional,
    u: &HamelNumber,
    v: &HamelNumber,
) -> (HamelNumber, HamelNumber) {
    let lambda = lambda_eval(params, f, u);
    let complement = Rational::one() - &lambda;
    let m = u.scale(&lambda) + v.scale(&complement);
    let n = u.scale(&complement) + v.scale(&lambda);
    (m, n)
}

/// Exact orbit `(M_k, N_k)` for `k = 0..=n`.
///
/// Exactness has a cost: λ feeds the full state back through a degree-two
/// rational map, so coefficient size roughly doubles per step and exact
/// orbits are practical only for `n` up to about 16. For gap bounds at
/// greater depth combine a short exact prefix with the certified per-step
/// factor from [`LambdaParams::contraction_factor`]; for limit values use
/// the float-coefficient image.
pub fn mn_orbit(
    params: &LambdaParams,
    f: &AdditiveFunctional,
    u: &HamelNumber,
    v: &HamelNumber,
    n: usize,
) -> Vec<(HamelNumber, HamelNumber)> {
    let mut pairs = Vec::with_capacity(n + 1);
    pairs.push((u.clone(), v.clone()));
    for _ in 0..n {
        let (m, nn) = {
            let (u_k, v_k) = pairs.last().expect("orbit is nonempty");
            mn_step(params, f, u_k, v_k)
        };
        pairs.push((m, nn));
    }
    pairs
}

/// Binary64 image of a span element: float coefficients over the exact
/// basis `{1, √d}`. This is the arithmetic the convergence-oriented
/// commands run in once exact orbits become too large to materialize.
///
/// Equality and ordering compare the real values `q0 + q1·√d`, not the
/// coefficient pairs, so orbit stopping rules see the same geometry the
/// trace output shows.
#[derive(Debug, Clone, Copy)]
pub struct HamelFloat {
    pub q0: f64,
    pub q1: f64,
    pub d: u64,
}

impl HamelFloat {
    pub fn new(q0: f64, q1: f64, d: u64) -> Self {
        Self { q0, q1, d }
    }

    pub fn value(&self) -> f64 {
        self.q0 + self.q1 * (self.d as f64).sqrt()
    }
}

impl PartialEq for HamelFloat {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.value() == other.value()
    }
}

impl PartialOrd for HamelFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.d != other.d {
            return None;
        }
        self.value().partial_cmp(&other.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Pow;

    fn sqrt2() -> HamelNumber {
        HamelNumber::sqrt_d(2).unwrap()
    }

    fn h(q0: Rational, q1: Rational) -> HamelNumber {
        HamelNumber::new(q0, q1, 2).unwrap()
    }

    #[test]
    fn square_free_screen() {
        assert!(is_square_free(2));
        assert!(is_square_free(3));
        assert!(is_square_free(10));
        assert!(!is_square_free(1));
        assert!(!is_square_free(4));
        assert!(!is_square_free(12));
        assert!(HamelNumber::new(Rational::zero(), Rational::zero(), 8).is_err());
    }

    #[test]
    fn sign_cases() {
        assert_eq!(h(rat(0, 1), rat(0, 1)).sign(), 0);
        // -1 + sqrt(2) > 0 because 2*1^2 > 1^2
        assert_eq!(h(rat(-1, 1), rat(1, 1)).sign(), 1);
        // 3 - 2*sqrt(2) > 0 because 9 > 8
        assert_eq!(h(rat(3, 1), rat(-2, 1)).sign(), 1);
        assert_eq!(h(rat(-3, 1), rat(2, 1)).sign(), -1);
        assert_eq!(h(rat(1, 1), rat(1, 1)).sign(), 1);
        assert_eq!(h(rat(-1, 2), rat(0, 1)).sign(), -1);
        // 7 - 5*sqrt(2) < 0 because 49 < 50
        assert_eq!(h(rat(7, 1), rat(-5, 1)).sign(), -1);
    }

    #[test]
    fn ordering_follows_sign() {
        let a = h(rat(1, 1), rat(1, 1)); // 1 + sqrt(2) ~ 2.414
        let b = h(rat(5, 2), rat(0, 1)); // 5/2
        assert!(a < b);
        assert!(b > a);
        let c = HamelNumber::sqrt_d(3).unwrap();
        assert_eq!(a.partial_cmp(&c), None);
    }

    #[test]
    fn reciprocal_inverts_exactly() {
        let x = h(rat(3, 1), rat(-2, 1));
        let inv = x.recip().unwrap();
        let product = &x * &inv;
        assert_eq!(product, h(rat(1, 1), rat(0, 1)));
        assert!(HamelNumber::zero(2).unwrap().recip().is_none());
    }

    #[test]
    fn parse_display_round_trip() {
        for text in [
            "0",
            "3",
            "-3/4",
            "1*sqrt(2)",
            "-1*sqrt(2)",
            "1/2+3/4*sqrt(2)",
            "1/2-3/4*sqrt(2)",
            "-1/2+2*sqrt(2)",
        ] {
            let x = HamelNumber::parse(text, 2).unwrap();
            assert_eq!(x.to_string(), text, "round trip of {text:?}");
        }
        // sugar accepted on input
        assert_eq!(HamelNumber::parse("sqrt(2)", 2).unwrap(), sqrt2());
        assert_eq!(
            HamelNumber::parse(" 1/2 + 3/4 * sqrt(2) ", 2).unwrap(),
            h(rat(1, 2), rat(3, 4))
        );
        assert!(matches!(
            HamelNumber::parse("sqrt(3)", 2),
            Err(HamelError::ContextMismatch { .. })
        ));
        assert!(HamelNumber::parse("1 + + 2", 2).is_err());
        assert!(HamelNumber::parse("sqrt(2)*3", 2).is_err());
    }

    #[test]
    fn functional_reads_coefficients() {
        let f = AdditiveFunctional::coefficient_reader(2).unwrap();
        assert_eq!(f.eval(&sqrt2()), rat(1, 1));
        assert_eq!(f.eval(&h(rat(3, 1), rat(0, 1))), rat(0, 1));
        assert_eq!(f.eval(&h(rat(1, 2), rat(3, 4))), rat(3, 4));
    }

    #[test]
    fn functional_degeneracy_certificate() {
        assert!(matches!(
            AdditiveFunctional::new(Rational::zero(), Rational::zero(), 2),
            Err(HamelError::DegenerateFunctional)
        ));
        // any nonzero rational pair passes: a1^2 = d*a0^2 would make sqrt(d) rational
        assert!(AdditiveFunctional::new(rat(1, 1), rat(0, 1), 2).is_ok());
        assert!(AdditiveFunctional::new(rat(2, 3), rat(-5, 7), 2).is_ok());
    }

    #[test]
    fn additivity_is_exact() {
        let f = AdditiveFunctional::new(rat(2, 3), rat(-5, 7), 2).unwrap();
        let x = h(rat(1, 2), rat(3, 4));
        let y = h(rat(-7, 5), rat(2, 9));
        assert_eq!(f.eval(&(&x + &y)), f.eval(&x) + f.eval(&y));
    }

    #[test]
    fn parameter_validation_names_the_inequality() {
        assert!(validate_lambda_params(rat(1, 1), rat(4, 3), rat(4, 1), rat(1, 2)).is_ok());
        let cases = [
            (
                (rat(1, 1), rat(1, 1), rat(4, 1), rat(1, 2)),
                "c > 1",
            ),
            (
                (rat(2, 1), rat(3, 2), rat(1, 1), rat(1, 2)),
                "b <= d",
            ),
            (
                (rat(1, 1), rat(5, 1), rat(4, 1), rat(1, 2)),
                "c <= 2/(1-kappa)",
            ),
            (
                (rat(-1, 1), rat(3, 2), rat(4, 1), rat(1, 2)),
                "b > 0",
            ),
            (
                (rat(1, 1), rat(3, 2), rat(4, 1), rat(3, 2)),
                "0 < kappa < 1",
            ),
        ];
        for ((b, c, d, kappa), expected) in cases {
            match validate_lambda_params(b, c, d, kappa) {
                Err(HamelError::InvalidParams { inequality }) => {
                    assert_eq!(inequality, expected)
                }
                other => panic!("expected InvalidParams({expected}), got {other:?}"),
            }
        }
    }

    #[test]
    fn lambda_values_match_the_worked_family() {
        let params = LambdaParams::standard();
        assert_eq!(params.lambda_at(&rat(0, 1)), rat(1, 4));
        assert_eq!(params.lambda_at(&rat(1, 1)), rat(3, 8));
        assert_eq!(params.lambda_at(&rat(10, 1)), rat(33, 52));
        let at_million = params.lambda_at(&rat(1_000_000, 1));
        assert_eq!(at_million, rat(3_000_003, 4_000_012));
        assert!(at_million < rat(3, 4));
    }

    #[test]
    fn lambda_range_is_certified() {
        let params = LambdaParams::standard();
        let range = params.lambda_range();
        assert_eq!(range.lo, rat(1, 4));
        assert_eq!(range.hi, rat(3, 4));
        assert!(range.lo_attained);
        assert!(!range.hi_attained);
        assert_eq!(params.contraction_factor(), rat(1, 2));

        // sampled arguments stay inside the enclosure, endpoints included
        for t in [rat(0, 1), rat(1, 7), rat(5, 3), rat(1_000_000, 1)] {
            let lambda = params.lambda_at(&t);
            assert!(lambda >= range.lo && lambda < range.hi);
        }
    }

    #[test]
    fn mn_step_worked_example() {
        let params = LambdaParams::standard();
        let f = AdditiveFunctional::coefficient_reader(2).unwrap();
        let u = sqrt2();
        let v = HamelNumber::zero(2).unwrap();
        let (m, n) = mn_step(&params, &f, &u, &v);
        assert_eq!(m, h(rat(0, 1), rat(3, 8)));
        assert_eq!(n, h(rat(0, 1), rat(5, 8)));
        // sum conservation and the exact gap identity
        assert_eq!(&m + &n, &u + &v);
        let lambda = lambda_eval(&params, &f, &u);
        let gap_factor = (rat(2, 1) * lambda - rat(1, 1)).abs();
        assert_eq!((&m - &n).abs(), (&u - &v).abs().scale(&gap_factor));
    }

    #[test]
    fn mn_step_fixes_the_diagonal() {
        let params = LambdaParams::standard();
        let f = AdditiveFunctional::coefficient_reader(2).unwrap();
        let t = h(rat(5, 3), rat(-1, 6));
        let (m, n) = mn_step(&params, &f, &t, &t);
        assert_eq!(m, t);
        assert_eq!(n, t);
    }

    #[test]
    fn mn_orbit_contracts_geometrically() {
        let params = LambdaParams::standard();
        let f = AdditiveFunctional::coefficient_reader(2).unwrap();
        let u = sqrt2();
        let v = HamelNumber::zero(2).unwrap();
        let pairs = mn_orbit(&params, &f, &u, &v, 10);
        assert_eq!(pairs.len(), 11);
        assert_eq!(pairs[1].0, h(rat(0, 1), rat(3, 8)));
        assert_eq!(pairs[1].1, h(rat(0, 1), rat(5, 8)));

        let total = &u + &v;
        let initial_gap = (&u - &v).abs();
        for (k, (m_k, n_k)) in pairs.iter().enumerate() {
            assert_eq!(&(m_k + n_k), &total, "sum conservation at step {k}");
            let gap = (m_k - n_k).abs();
            let bound = initial_gap.scale(&rat(1, 2).pow(k as i32));
            assert!(gap <= bound, "gap bound 2^-{k} violated");
        }
        // per-step factor bound, exact
        for window in pairs.windows(2) {
            let gap_before = (&window[0].0 - &window[0].1).abs();
            let gap_after = (&window[1].0 - &window[1].1).abs();
            assert!(gap_after <= gap_before.scale(&rat(1, 2)));
        }
    }

    #[test]
    fn float_image_tracks_the_value() {
        let x = h(rat(1, 2), rat(3, 4));
        let img = x.to_float();
        assert!((img.value() - x.to_f64()).abs() < 1e-15);
        assert!((x.to_f64() - (0.5 + 0.75 * 2f64.sqrt())).abs() < 1e-15);
    }
}
