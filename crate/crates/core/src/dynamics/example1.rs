//! The piecewise halving mapping on `I³` and its closed-form orbit.
//!
//! On the region `Λ = {v : |v₃−v₁| >= (v₂−v₁)²}` the mapping keeps the
//! first two coordinates and halves the third toward the first:
//! `(v₁, v₂, (v₁+v₃)/2)`. On the surface `2|v₃−v₁| = (v₂−v₁)²` it collapses
//! to the constant vector `(v₁, v₁, v₁)`. Between those two pinned surfaces
//! the definition is completed by the convex blend
//! `s·(v₁, v₂, (v₁+v₃)/2) + (1−s)·(v₁, v₁, v₁)` with
//! `s = (2|v₃−v₁| − (v₂−v₁)²) / (v₂−v₁)²`, and below the strip by the
//! collapse; the blend agrees with both pinned surfaces, so the completed
//! mapping is continuous on `I³` and every coordinate is a convex
//! combination of in-range values, hence a mean.
//!
//! Orbits of `w = (x, x+2⁻ⁱ, x+2⁻ⁱ)` follow the closed form
//! `(x, x+2⁻ⁱ, x+2⁻ⁱ⁻ⁿ)` for `n <= i+1` and `(x, x, x)` afterwards, which
//! keeps the spread constant for `i+1` steps: the first strict spread drop
//! happens at `n = i+2`, so no finite bound works for every starting
//! vector. All coordinates stay dyadic, so the whole orbit is decided
//! exactly in rational (or even binary64) arithmetic.

use num_bigint::BigInt;
use num_traits::{One, Pow, Signed};

use super::{DynamicsError, MeanMapping};
use crate::mean::{clamp_internal, Interval};
use crate::rational::Rational;

/// One step of the completed mapping, shared by the exact and binary64
/// instantiations. Exactness of the branch predicates is inherited from
/// the scalar: rationals always, floats on dyadic inputs.
fn step<S>(v: &[S]) -> [S; 3]
where
    S: Clone + Signed + PartialOrd,
{
    let (v1, v2, v3) = (v[0].clone(), v[1].clone(), v[2].clone());
    let two = S::one() + S::one();
    let gap = (v3.clone() - v1.clone()).abs();
    let delta = v2.clone() - v1.clone();
    let threshold = delta.clone() * delta;
    if gap >= threshold {
        let halved = (v1.clone() + v3) / two;
        return [v1, v2, halved];
    }
    let twice = two.clone() * gap;
    if twice <= threshold {
        return [v1.clone(), v1.clone(), v1];
    }
    // open strip between the pinned surfaces: blend toward the collapse
    let s = (twice - threshold.clone()) / threshold;
    let halved = (v1.clone() + v3) / two;
    let second = v1.clone() + s.clone() * (v2 - v1.clone());
    let third = v1.clone() + s * (halved - v1.clone());
    [v1, second, third]
}

/// Binary64 form of the mapping on a bounded interval.
pub struct Example1Mapping {
    interval: Interval,
}

impl Example1Mapping {
    /// The region test compares a first power against a square, so it only
    /// defines a sensible dynamic on a bounded interval.
    pub fn new(interval: Interval) -> Result<Self, DynamicsError> {
        if !interval.is_bounded() {
            return Err(DynamicsError::DomainViolation(
                "the halving mapping needs a bounded interval".into(),
            ));
        }
        Ok(Self { interval })
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }
}

/// Binary64 form of the mapping; see [`Example1Mapping::new`].
pub fn example1_mapping(interval: Interval) -> Result<Example1Mapping, DynamicsError> {
    Example1Mapping::new(interval)
}

impl MeanMapping<f64> for Example1Mapping {
    fn arity(&self) -> usize {
        3
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        for &x in v {
            if !self.interval.contains(x) {
                return Err(DynamicsError::DomainViolation(format!(
                    "input {x} outside [{}, {}]",
                    self.interval.lo(),
                    self.interval.hi()
                )));
            }
        }
        let out = step(v);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        out.into_iter()
            .map(|x| clamp_internal(x, lo, hi).map_err(DynamicsError::from))
            .collect()
    }

    fn name(&self) -> String {
        "example1".into()
    }
}

/// Exact-rational form of the mapping on a bounded rational interval.
/// Surface predicates and the blend are decided and evaluated exactly.
pub struct Example1Exact {
    lo: Rational,
    hi: Rational,
}

impl Example1Exact {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self, DynamicsError> {
        if lo >= hi {
            return Err(DynamicsError::DomainViolation(format!(
                "empty interval [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// The unit interval `[0, 1]`, where the built-in lives.
    pub fn unit() -> Self {
        Self::new(Rational::from_integer(0.into()), Rational::one())
            .expect("unit interval is nonempty")
    }

    fn contains(&self, x: &Rational) -> bool {
        *x >= self.lo && *x <= self.hi
    }
}

impl MeanMapping<Rational> for Example1Exact {
    fn arity(&self) -> usize {
        3
    }

    fn apply(&self, v: &[Rational]) -> Result<Vec<Rational>, DynamicsError> {
        for x in v {
            if !self.contains(x) {
                return Err(DynamicsError::DomainViolation(format!(
                    "input {x} outside [{}, {}]",
                    self.lo, self.hi
                )));
            }
        }
        Ok(step(v).to_vec())
    }

    fn name(&self) -> String {
        "example1".into()
    }
}

/// `1 / 2^exp` as an exact rational.
pub(crate) fn dyadic_unit(exp: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(2).pow(exp))
}

/// Closed-form orbit of `w = (x, x+2⁻ⁱ, x+2⁻ⁱ)` under the completed
/// mapping: `(x, x+2⁻ⁱ, x+2⁻ⁱ⁻ⁿ)` while `n <= i+1`, then `(x, x, x)`.
/// Serves as the independent oracle for the iterated mapping.
pub fn example1_orbit_formula(
    mapping: &Example1Exact,
    x: &Rational,
    i: u32,
    n: usize,
) -> Result<[Rational; 3], DynamicsError> {
    let top = x + dyadic_unit(i);
    if !mapping.contains(x) || !mapping.contains(&top) {
        return Err(DynamicsError::DomainViolation(format!(
            "starting vector ({x}, {top}, {top}) leaves [{}, {}]",
            mapping.lo, mapping.hi
        )));
    }
    if n as u64 <= u64::from(i) + 1 {
        let third = x + dyadic_unit(i + n as u32);
        Ok([x.clone(), top, third])
    } else {
        Ok([x.clone(), x.clone(), x.clone()])
    }
}
