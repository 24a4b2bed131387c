//! The invariance functional equation `F ∘ M = F`.
//!
//! When a mapping has a unique invariant mean `K`, the solutions of
//! `F ∘ M = F` that are continuous on the diagonal are exactly the
//! compositions `F = φ ∘ K` for continuous `φ`: every invariant `F`
//! restricts on the diagonal to `φ(t) = F(t, …, t)`, and conversely any
//! `φ ∘ K` is invariant because `K ∘ M = K`. Dropping the diagonal
//! continuity breaks the correspondence — defining `F` through the orbit
//! limit with a step `φ` still satisfies the equation at every point, yet
//! is not of the continuous form. Both directions are computable here.

use serde_json::{json, Value};
use thiserror::Error;

use crate::dynamics::{
    compound_mean, ConvergenceStatus, DynamicsError, MeanMapping, OrbitScalar,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunceqError {
    #[error("compound mean did not converge within {iterations} iterations")]
    NonConvergent { iterations: usize },
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("φ must be continuous here; use the orbit-limit (remark4) construction for a discontinuous φ")]
    DiscontinuousPhi,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// A scalar function `φ` on the diagonal: a small continuous catalog, an
/// interpolation table, or an explicitly discontinuous step.
#[derive(Debug, Clone, PartialEq)]
pub enum DiagonalFunction {
    Identity,
    Square,
    Exp,
    /// `ln t` on `t > 0`.
    Log,
    Negation,
    /// Sorted `(t, φ(t))` nodes with linear interpolation between them;
    /// evaluation outside the node range is a domain violation.
    Table(Vec<(f64, f64)>),
    /// `below` for `t < jump`, `at_or_above` for `t >= jump`. The one
    /// deliberately discontinuous member of the catalog.
    Step {
        jump: f64,
        below: f64,
        at_or_above: f64,
    },
}

impl DiagonalFunction {
    /// Looks up one of the five continuous catalog entries by name.
    pub fn catalog(name: &str) -> Option<Self> {
        match name {
            "identity" => Some(Self::Identity),
            "square" => Some(Self::Square),
            "exp" => Some(Self::Exp),
            "log" => Some(Self::Log),
            "negation" | "neg" => Some(Self::Negation),
            _ => None,
        }
    }

    /// Builds a table from two-column CSV text (`t,phi` per line, an
    /// optional header allowed). Needs at least two nodes.
    pub fn table_from_csv(text: &str) -> Result<Self, FunceqError> {
        let mut nodes = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split(',');
            let (a, b) = (cols.next(), cols.next());
            if cols.next().is_some() {
                return Err(FunceqError::DomainViolation(format!(
                    "table line {} has more than two columns",
                    idx + 1
                )));
            }
            match (
                a.and_then(|s| s.trim().parse::<f64>().ok()),
                b.and_then(|s| s.trim().parse::<f64>().ok()),
            ) {
                (Some(t), Some(phi)) => nodes.push((t, phi)),
                _ if idx == 0 => continue, // header
                _ => {
                    return Err(FunceqError::DomainViolation(format!(
                        "cannot parse table line {}: {line:?}",
                        idx + 1
                    )))
                }
            }
        }
        if nodes.len() < 2 {
            return Err(FunceqError::DomainViolation(
                "a table needs at least two nodes".into(),
            ));
        }
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self::Table(nodes))
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Self::Step { .. })
    }

    pub fn name(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::Square => "square".into(),
            Self::Exp => "exp".into(),
            Self::Log => "log".into(),
            Self::Negation => "negation".into(),
            Self::Table(nodes) => format!("table[{}]", nodes.len()),
            Self::Step { jump, .. } => format!("step@{jump}"),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64, FunceqError> {
        match self {
            Self::Identity => Ok(t),
            Self::Square => Ok(t * t),
            Self::Exp => Ok(t.exp()),
            Self::Log => {
                if t > 0.0 {
                    Ok(t.ln())
                } else {
                    Err(FunceqError::DomainViolation(format!(
                        "log undefined at {t}"
                    )))
                }
            }
            Self::Negation => Ok(-t),
            Self::Table(nodes) => {
                let first = nodes.first().expect("tables have nodes");
                let last = nodes.last().expect("tables have nodes");
                if t < first.0 || t > last.0 {
                    return Err(FunceqError::DomainViolation(format!(
                        "{t} outside the table range [{}, {}]",
                        first.0, last.0
                    )));
                }
                let idx = nodes.partition_point(|(node_t, _)| *node_t <= t);
                if idx == 0 {
                    return Ok(first.1);
                }
                let (t0, y0) = nodes[idx - 1];
                if t == t0 || idx == nodes.len() {
                    return Ok(y0);
                }
                let (t1, y1) = nodes[idx];
                Ok(y0 + (y1 - y0) * (t - t0) / (t1 - t0))
            }
            Self::Step {
                jump,
                below,
                at_or_above,
            } => Ok(if t >= *jump { *at_or_above } else { *below }),
        }
    }
}

/// `F(v) = φ(K̂(v))` where `K̂` is the compound mean computed by orbit
/// iteration at the stored tolerance.
pub struct InvariantFunction<'a, S: OrbitScalar> {
    mapping: &'a dyn MeanMapping<S>,
    phi: DiagonalFunction,
    tol: S,
    max_iter: usize,
    /// Verification samples whose compound value is closer than this to a
    /// step jump are filtered out (and reported): float error in the
    /// compound could flip the step.
    jump_margin: f64,
}

pub const DEFAULT_JUMP_MARGIN: f64 = 1e-6;

impl<'a, S: OrbitScalar> InvariantFunction<'a, S> {
    pub fn phi(&self) -> &DiagonalFunction {
        &self.phi
    }

    pub fn mapping_name(&self) -> String {
        self.mapping.name()
    }

    /// The compound value this function composes over, as a binary64 image.
    pub fn compound_value(&self, v: &[S]) -> Result<f64, FunceqError> {
        let result = compound_mean(self.mapping, v, self.tol.clone(), self.max_iter)?;
        if result.status != ConvergenceStatus::Converged {
            return Err(FunceqError::NonConvergent {
                iterations: result.iterations,
            });
        }
        Ok(result.value.to_f64())
    }

    pub fn eval(&self, v: &[S]) -> Result<f64, FunceqError> {
        self.phi.eval(self.compound_value(v)?)
    }

    /// Verifies `F ∘ M = F` over the samples. For a step `φ` the samples
    /// whose compound lands within the jump margin are excluded and
    /// counted in the report, never silently dropped.
    pub fn verify(&self, samples: &[Vec<S>], tol: f64) -> Result<VerificationReport, FunceqError> {
        let mut max_residual = 0.0f64;
        let mut used = 0;
        let mut filtered = 0;
        for v in samples {
            if let DiagonalFunction::Step { jump, .. } = &self.phi {
                let compound = self.compound_value(v)?;
                if (compound - jump).abs() < self.jump_margin {
                    filtered += 1;
                    continue;
                }
            }
            let image = self.mapping.apply(v)?;
            let residual = (self.eval(&image)? - self.eval(v)?).abs();
            max_residual = max_residual.max(residual);
            used += 1;
        }
        Ok(VerificationReport {
            max_residual,
            pass: max_residual <= tol,
            tol,
            samples_used: used,
            samples_filtered: filtered,
        })
    }
}

/// Composes a continuous `φ` with the compound mean of `M`.
///
/// The caller asserts (or has checked via the invariance-principle sweep)
/// that `M` has a unique invariant mean on the region of use. Discontinuous
/// `φ` is rejected here; that construction is [`remark4_counterexample`].
pub fn build_invariant_function<'a, S: OrbitScalar>(
    mapping: &'a dyn MeanMapping<S>,
    phi: DiagonalFunction,
    tol: S,
    max_iter: usize,
) -> Result<InvariantFunction<'a, S>, FunceqError> {
    if !phi.is_continuous() {
        return Err(FunceqError::DiscontinuousPhi);
    }
    Ok(InvariantFunction {
        mapping,
        phi,
        tol,
        max_iter,
        jump_margin: DEFAULT_JUMP_MARGIN,
    })
}

/// The orbit-limit construction with an arbitrary (possibly discontinuous)
/// `φ`: `F(v) = φ(t)` where the iterates of `v` converge to `(t, …, t)`.
/// `F ∘ M = F` holds wherever the orbit limit exists because `v` and
/// `M(v)` share the same orbit tail; where the compound fails to converge,
/// evaluation reports `NonConvergent` rather than extending `F`.
pub fn remark4_counterexample<'a, S: OrbitScalar>(
    phi: DiagonalFunction,
    mapping: &'a dyn MeanMapping<S>,
    tol: S,
    max_iter: usize,
) -> InvariantFunction<'a, S> {
    InvariantFunction {
        mapping,
        phi,
        tol,
        max_iter,
        jump_margin: DEFAULT_JUMP_MARGIN,
    }
}

/// Restricts `F` to the diagonal: returns the table `t ↦ F(t, …, t)` over
/// the given sample points. For `F = φ ∘ K` this recovers `φ` at the
/// samples because the compound of a constant vector is its value.
pub fn recover_phi(
    f: &dyn Fn(&[f64]) -> Result<f64, FunceqError>,
    arity: usize,
    samples: &[f64],
) -> Result<DiagonalFunction, FunceqError> {
    let mut nodes = Vec::with_capacity(samples.len());
    for &t in samples {
        let diagonal = vec![t; arity];
        nodes.push((t, f(&diagonal)?));
    }
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(DiagonalFunction::Table(nodes))
}

/// Residual report for `F ∘ M = F` over a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub max_residual: f64,
    pub pass: bool,
    pub tol: f64,
    pub samples_used: usize,
    pub samples_filtered: usize,
}

impl VerificationReport {
    pub fn to_json(&self, mapping: &str, phi: &str) -> Value {
        json!({
            "mapping": mapping,
            "phi": phi,
            "samples": self.samples_used,
            "samples_filtered": self.samples_filtered,
            "max_residual": self.max_residual,
            "tol": self.tol,
            "pass": self.pass,
        })
    }
}

/// Verifies `F ∘ M = F` for an arbitrary function of binary64 images.
pub fn verify_invariance_equation<S: OrbitScalar>(
    f: &dyn Fn(&[S]) -> Result<f64, FunceqError>,
    mapping: &dyn MeanMapping<S>,
    samples: &[Vec<S>],
    tol: f64,
) -> Result<VerificationReport, FunceqError> {
    let mut max_residual = 0.0f64;
    for v in samples {
        let image = mapping.apply(v)?;
        let residual = (f(&image)? - f(v)?).abs();
        max_residual = max_residual.max(residual);
    }
    Ok(VerificationReport {
        max_residual,
        pass: max_residual <= tol,
        tol,
        samples_used: samples.len(),
        samples_filtered: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{builtin_f64, HamelMnMapping};
    use crate::hamel::HamelFloat;

    fn ahm() -> Box<dyn MeanMapping<f64>> {
        builtin_f64("ahm").unwrap()
    }

    fn positive_samples(n: usize) -> Vec<Vec<f64>> {
        (1..=n)
            .map(|k| {
                let x = 0.2 + 9.3 * ((k * 7919) % 1000) as f64 / 1000.0;
                let y = 0.1 + 9.7 * ((k * 104729) % 1000) as f64 / 1000.0;
                vec![x, y]
            })
            .collect()
    }

    #[test]
    fn square_of_the_geometric_compound() {
        let mapping = ahm();
        let f = build_invariant_function(mapping.as_ref(), DiagonalFunction::Square, 1e-13, 1000)
            .unwrap();
        let value = f.eval(&[2.0, 8.0]).unwrap();
        assert!((value - 16.0).abs() < 1e-10, "got {value}");
    }

    #[test]
    fn identity_phi_reproduces_the_compound() {
        let mapping = ahm();
        let f = build_invariant_function(mapping.as_ref(), DiagonalFunction::Identity, 1e-13, 1000)
            .unwrap();
        let report = f.verify(&positive_samples(100), 1e-10).unwrap();
        assert!(report.pass, "max residual {}", report.max_residual);
        assert_eq!(report.samples_used, 100);
        // pre-mean property: on the diagonal F(t, …, t) = t
        for t in [0.5, 1.0, 4.0] {
            assert_eq!(f.eval(&[t, t]).unwrap(), t);
        }
    }

    #[test]
    fn exp_of_the_pair_family_compound() {
        let mapping = HamelMnMapping::standard();
        let tol = HamelFloat::new(1e-13, 0.0, 2);
        let f = build_invariant_function(&mapping, DiagonalFunction::Exp, tol, 10_000).unwrap();
        let v = [HamelFloat::new(0.0, 1.0, 2), HamelFloat::new(0.0, 0.0, 2)];
        let value = f.eval(&v).unwrap();
        let expected = (2f64.sqrt() / 2.0).exp();
        assert!((value - expected).abs() < 1e-10, "{value} vs {expected}");
    }

    #[test]
    fn build_rejects_discontinuous_phi() {
        let mapping = ahm();
        let step = DiagonalFunction::Step {
            jump: 4.0,
            below: 0.0,
            at_or_above: 1.0,
        };
        assert!(matches!(
            build_invariant_function(mapping.as_ref(), step, 1e-12, 1000),
            Err(FunceqError::DiscontinuousPhi)
        ));
    }

    #[test]
    fn recover_phi_from_the_product() {
        // F(u, v) = u*v is invariant under the arithmetic-harmonic pair
        // (it is the squared geometric compound); its diagonal is t².
        let f = |v: &[f64]| Ok(v[0] * v[1]);
        let table = recover_phi(&f, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(table.eval(4.0).unwrap(), 16.0);
        assert_eq!(table.eval(3.0).unwrap(), 9.0);

        let g = |v: &[f64]| Ok((v[0] * v[1]).sqrt());
        let table = recover_phi(&g, 2, &[1.0, 3.0, 5.0]).unwrap();
        assert_eq!(table.eval(3.0).unwrap(), 3.0);
    }

    #[test]
    fn round_trip_recovers_the_catalog_phi() {
        let mapping = ahm();
        let f = build_invariant_function(mapping.as_ref(), DiagonalFunction::Exp, 1e-13, 1000)
            .unwrap();
        let eval = |v: &[f64]| f.eval(v);
        let points = [0.5, 1.0, 2.0];
        let table = recover_phi(&eval, 2, &points).unwrap();
        for t in points {
            assert!(
                (table.eval(t).unwrap() - t.exp()).abs() < 1e-10,
                "φ({t}) mismatch"
            );
        }
    }

    #[test]
    fn step_phi_stays_invariant_off_the_jump() {
        let mapping = ahm();
        let step = DiagonalFunction::Step {
            jump: 4.0,
            below: 0.0,
            at_or_above: 1.0,
        };
        let f = remark4_counterexample(step, mapping.as_ref(), 1e-13, 1000);
        // compound(2,8) = 4 exactly in binary64; compound(1,9) = 3
        assert_eq!(f.eval(&[2.0, 8.0]).unwrap(), 1.0);
        assert_eq!(f.eval(&[1.0, 9.0]).unwrap(), 0.0);
        assert_eq!(f.eval(&[4.0, 4.0]).unwrap(), 1.0);

        let report = f.verify(&positive_samples(200), 0.0).unwrap();
        assert!(report.pass, "step residual {}", report.max_residual);
        assert_eq!(report.max_residual, 0.0);
        assert_eq!(report.samples_used + report.samples_filtered, 200);
    }

    #[test]
    fn non_invariant_function_fails_verification() {
        let agm = builtin_f64("agm").unwrap();
        let a = |v: &[f64]| Ok((v[0] + v[1]) / 2.0);
        let report =
            verify_invariance_equation(&a, agm.as_ref(), &[vec![1.0, 4.0]], 1e-10).unwrap();
        assert!(!report.pass);
        assert!((report.max_residual - 0.25).abs() < 1e-14);
    }

    #[test]
    fn table_interpolation_and_range() {
        let table = DiagonalFunction::table_from_csv("t,phi\n0,1\n2,5\n1,2\n").unwrap();
        assert_eq!(table.eval(0.0).unwrap(), 1.0);
        assert_eq!(table.eval(1.0).unwrap(), 2.0);
        assert_eq!(table.eval(1.5).unwrap(), 3.5);
        assert_eq!(table.eval(2.0).unwrap(), 5.0);
        assert!(table.eval(2.5).is_err());
        assert!(DiagonalFunction::table_from_csv("0,1\n").is_err());
        assert!(table.is_continuous());
    }

    #[test]
    fn nonconvergent_mapping_is_an_error() {
        let swap = builtin_f64("swap").unwrap();
        let f = build_invariant_function(swap.as_ref(), DiagonalFunction::Identity, 1e-12, 50)
            .unwrap();
        assert!(matches!(
            f.eval(&[1.0, 3.0]),
            Err(FunceqError::NonConvergent { .. })
        ));
    }
}
