use super::*;
use crate::hamel::HamelFloat;
use crate::mean::{GeneratorId, Interval, MeanExpr, ScalarDomain};
use crate::rational::{rat, Rational};

fn agm() -> Box<dyn MeanMapping<f64>> {
    builtin_f64("agm").unwrap()
}

fn ahm() -> Box<dyn MeanMapping<f64>> {
    builtin_f64("ahm").unwrap()
}

fn assert_close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

#[test]
fn apply_mapping_examples() {
    let out = apply_mapping(agm().as_ref(), &[1.0, 4.0]).unwrap();
    assert_eq!(out[0], 2.5);
    assert_close(out[1], 2.0, 1e-14);

    let out = apply_mapping(&SwapMapping, &[1.0, 3.0]).unwrap();
    assert_eq!(out, vec![3.0, 1.0]);

    let out = apply_mapping(ahm().as_ref(), &[2.0, 8.0]).unwrap();
    assert_eq!(out[0], 5.0);
    assert_close(out[1], 3.2, 1e-14);

    assert!(matches!(
        apply_mapping(agm().as_ref(), &[1.0, 2.0, 3.0]),
        Err(DynamicsError::ArityMismatch { .. })
    ));
}

#[test]
fn iterate_examples() {
    assert_eq!(
        iterate(agm().as_ref(), &[1.0, 4.0], 0).unwrap(),
        vec![1.0, 4.0]
    );
    assert_eq!(
        iterate(&SwapMapping, &[1.0, 3.0], 2).unwrap(),
        vec![1.0, 3.0]
    );
    let two_steps = iterate(ahm().as_ref(), &[2.0, 8.0], 2).unwrap();
    assert_close(two_steps[0], 4.1, 1e-12);
    assert_close(two_steps[1], 32.0 / 8.2, 1e-12);
}

#[test]
fn orbit_reaches_the_geometric_compound() {
    let trace = orbit(
        ahm().as_ref(),
        &[2.0, 8.0],
        &StopRule {
            spread_tol: 1e-12,
            max_iter: 100,
        },
    )
    .unwrap();
    assert_eq!(trace.stop_reason, StopReason::SpreadTol);
    for &x in &trace.last().v {
        assert_close(x, 4.0, 1e-11);
    }
    assert!(trace.envelopes_monotone());
}

#[test]
fn orbit_of_swap_is_periodic() {
    let trace = orbit(
        &SwapMapping,
        &[1.0f64, 3.0],
        &StopRule {
            spread_tol: 1e-12,
            max_iter: 10,
        },
    )
    .unwrap();
    assert_eq!(trace.stop_reason, StopReason::MaxIter);
    assert_eq!(trace.steps.len(), 11);
    assert!(trace.steps.iter().all(|s| s.spread == 2.0));
}

#[test]
fn orbit_of_constant_vector_is_a_fixpoint() {
    let trace = orbit(
        ahm().as_ref(),
        &[3.0, 3.0],
        &StopRule {
            spread_tol: 1e-12,
            max_iter: 10,
        },
    )
    .unwrap();
    assert_eq!(trace.stop_reason, StopReason::ExactFixpoint);
    assert_eq!(trace.last().n, 0);
}

#[test]
fn compound_of_ahm_is_geometric() {
    let result = compound_mean(ahm().as_ref(), &[2.0, 8.0], 1e-12, 100).unwrap();
    assert_eq!(result.status, ConvergenceStatus::Converged);
    assert!(result.iterations <= 60);
    assert_close(result.value, 4.0, 1e-12);
}

#[test]
fn compound_of_agm_matches_the_fixed_point_oracle() {
    // 50-digit value of the common limit of a_{k+1} = (a_k+g_k)/2,
    // g_{k+1} = sqrt(a_k g_k) from (1, 2), computed at high precision:
    // 1.4567910310469068691864323832650819749738639432213
    let result = compound_mean(agm().as_ref(), &[1.0, 2.0], 1e-12, 100).unwrap();
    assert_eq!(result.status, ConvergenceStatus::Converged);
    assert_close(result.value, 1.4567910310469068, 1e-12);
}

#[test]
fn compound_of_swap_does_not_converge() {
    let result = compound_mean(&SwapMapping, &[1.0f64, 3.0], 1e-12, 1000).unwrap();
    assert_eq!(result.status, ConvergenceStatus::MaxIterReached);
    assert_eq!(result.value, 2.0);
    assert_eq!(result.spread_at_stop, 2.0);
}

#[test]
fn compound_of_the_float_pair_family_is_the_arithmetic_mean() {
    let mapping = HamelMnMapping::standard();
    let start = [
        HamelFloat::new(0.0, 1.0, 2), // sqrt(2)
        HamelFloat::new(0.0, 0.0, 2),
    ];
    let tol = HamelFloat::new(1e-12, 0.0, 2);
    let result = compound_mean(&mapping, &start, tol, 1000).unwrap();
    assert_eq!(result.status, ConvergenceStatus::Converged);
    assert_close(result.value.to_f64(), 2f64.sqrt() / 2.0, 1e-12);
}

#[test]
fn envelopes_of_swap_are_the_input_extremes() {
    for n in [0, 1, 7, 100] {
        let est = envelope_limits(&SwapMapping, &[1.0f64, 3.0], n).unwrap();
        assert_eq!(est.lower, 1.0);
        assert_eq!(est.upper, 3.0);
    }
}

#[test]
fn envelopes_of_ahm_close_on_the_compound() {
    let est = envelope_limits(ahm().as_ref(), &[2.0, 8.0], 60).unwrap();
    assert_close(est.lower, 4.0, 1e-12);
    assert_close(est.upper, 4.0, 1e-12);
    assert!(est.lower <= est.upper);
}

#[test]
fn envelopes_of_the_exact_halving_orbit() {
    let mapping = Example1Exact::unit();
    let start = vec![rat(0, 1), rat(1, 4), rat(1, 4)];
    let est = envelope_limits(&mapping, &start, 3).unwrap();
    assert_eq!(est.lower, rat(0, 1));
    assert_eq!(est.upper, rat(1, 4));
}

#[test]
fn probe_finds_the_one_step_witness() {
    let report = weak_contractivity_probe(agm().as_ref(), &[1.0, 4.0], 10).unwrap();
    assert_eq!(report.n0, Some(1));
    assert_eq!(report.spread_history[0], 3.0);
    assert_close(report.spread_history[1], 0.5, 1e-14);
}

#[test]
fn probe_on_the_exact_halving_orbit_returns_i_plus_two() {
    let mapping = Example1Exact::unit();
    let i = 2u32;
    let start = vec![
        rat(0, 1),
        super::example1::dyadic_unit(i),
        super::example1::dyadic_unit(i),
    ];
    let report = weak_contractivity_probe(&mapping, &start, 20).unwrap();
    assert_eq!(report.n0, Some(i as usize + 2));
    // spread constant up to n = i+1, zero afterwards
    for n in 0..=(i as usize + 1) {
        assert_eq!(report.spread_history[n], super::example1::dyadic_unit(i));
    }
    assert_eq!(report.spread_history[i as usize + 2], rat(0, 1));
}

#[test]
fn probe_on_swap_finds_nothing() {
    let report = weak_contractivity_probe(&SwapMapping, &[1.0f64, 3.0], 50).unwrap();
    assert_eq!(report.n0, None);
    assert_eq!(report.n_max, 50);
    assert!(report.spread_history.iter().all(|&s| s == 2.0));
}

#[test]
fn probe_rejects_constant_input() {
    assert!(matches!(
        weak_contractivity_probe(&SwapMapping, &[3.0f64, 3.0], 5),
        Err(DynamicsError::ConstantInput)
    ));
}

#[test]
fn halving_mapping_pointwise_cases() {
    let mapping = Example1Mapping::new(Interval::new(0.0, 1.0).unwrap()).unwrap();
    // inside the halving region
    assert_eq!(
        mapping.apply(&[0.0, 0.25, 0.25]).unwrap(),
        vec![0.0, 0.25, 0.125]
    );
    // exactly on the collapse surface: 2*(1/32) = (1/4)^2
    assert_eq!(
        mapping.apply(&[0.0, 0.25, 0.03125]).unwrap(),
        vec![0.0, 0.0, 0.0]
    );
    // diagonal is fixed
    assert_eq!(
        mapping.apply(&[0.5, 0.5, 0.5]).unwrap(),
        vec![0.5, 0.5, 0.5]
    );
    // out of domain
    assert!(mapping.apply(&[0.0, 0.5, 2.0]).is_err());
}

#[test]
fn orbit_formula_matches_the_spec_points() {
    let mapping = Example1Exact::unit();
    let x = rat(0, 1);
    assert_eq!(
        example1_orbit_formula(&mapping, &x, 2, 0).unwrap(),
        [rat(0, 1), rat(1, 4), rat(1, 4)]
    );
    assert_eq!(
        example1_orbit_formula(&mapping, &x, 2, 2).unwrap(),
        [rat(0, 1), rat(1, 4), rat(1, 16)]
    );
    assert_eq!(
        example1_orbit_formula(&mapping, &x, 2, 4).unwrap(),
        [rat(0, 1), rat(0, 1), rat(0, 1)]
    );
    // leaving the interval is a domain violation
    assert!(example1_orbit_formula(&mapping, &rat(9, 10), 1, 0).is_err());
}

#[test]
fn exact_orbit_agrees_with_the_formula() {
    let mapping = Example1Exact::unit();
    for i in 1..=8u32 {
        for x in [rat(0, 1), rat(1, 2)] {
            let start = vec![
                x.clone(),
                &x + super::example1::dyadic_unit(i),
                &x + super::example1::dyadic_unit(i),
            ];
            for n in 0..=(i as usize + 3) {
                let iterated = iterate(&mapping, &start, n).unwrap();
                let formula: Vec<Rational> = example1_orbit_formula(&mapping, &x, i, n)
                    .unwrap()
                    .to_vec();
                assert_eq!(iterated, formula, "i={i}, x={x}, n={n}");
            }
        }
    }
}

#[test]
fn residual_of_the_geometric_mean_under_ahm() {
    let g = MeanExpr::geometric(2);
    let domain = ScalarDomain::positive();
    let k = move |v: &[f64]| g.eval(v, &domain).map_err(DynamicsError::from);
    let samples: Vec<Vec<f64>> = (1..=100)
        .map(|k| vec![0.05 + 0.09 * k as f64, 10.0 - 0.07 * k as f64])
        .collect();
    let residual = invariance_residual(&k, ahm().as_ref(), &samples).unwrap();
    assert!(residual < 1e-12, "residual {residual}");
}

#[test]
fn residual_of_the_arithmetic_mean_under_agm_is_visible() {
    let a = MeanExpr::arithmetic(2);
    let domain = ScalarDomain::positive();
    let k = move |v: &[f64]| a.eval(v, &domain).map_err(DynamicsError::from);
    let residual = invariance_residual(&k, agm().as_ref(), &[vec![1.0, 4.0]]).unwrap();
    assert_close(residual, 0.25, 1e-14);
}

#[test]
fn residual_of_the_arithmetic_mean_under_the_pair_family() {
    let mapping = HamelMnMapping::standard();
    let k = |v: &[HamelFloat]| Ok((v[0].value() + v[1].value()) / 2.0);
    let samples: Vec<Vec<HamelFloat>> = (0..100)
        .map(|k| {
            let t = k as f64 * 0.11 - 5.0;
            vec![
                HamelFloat::new(t, 1.0 + t / 7.0, 2),
                HamelFloat::new(-t / 3.0, t / 2.0, 2),
            ]
        })
        .collect();
    let residual = invariance_residual(&k, &mapping, &samples).unwrap();
    assert!(residual < 1e-12, "residual {residual}");
}

#[test]
fn principle_verdicts() {
    let samples: Vec<Vec<f64>> = (1..=50)
        .map(|k| vec![0.1 + 0.17 * k as f64, 9.7 - 0.11 * k as f64])
        .collect();
    let report = invariance_principle_check(ahm().as_ref(), &samples, 1e-12, 100_000).unwrap();
    assert!(report.consistent);
    assert!(report
        .verdicts
        .iter()
        .all(|s| s.verdict == PrincipleVerdict::ConvergedUnique));

    let report =
        invariance_principle_check(&SwapMapping, &[vec![1.0f64, 3.0]], 1e-12, 100_000).unwrap();
    assert!(report.consistent);
    let s = &report.verdicts[0];
    assert_eq!(s.verdict, PrincipleVerdict::DivergentNonUnique);
    assert_eq!(s.lower, 1.0);
    assert_eq!(s.upper, 3.0);

    let mapping = HamelMnMapping::standard();
    let start = vec![HamelFloat::new(0.0, 1.0, 2), HamelFloat::new(0.0, 0.0, 2)];
    let tol = HamelFloat::new(1e-12, 0.0, 2);
    let report = invariance_principle_check(&mapping, &[start], tol, 100_000).unwrap();
    let s = &report.verdicts[0];
    assert_eq!(s.verdict, PrincipleVerdict::ConvergedUnique);
    assert_close(
        s.compound.as_ref().unwrap().to_f64(),
        2f64.sqrt() / 2.0,
        1e-12,
    );
}

#[test]
fn log_conjugation_turns_arithmetic_into_geometric() {
    let weighted = ExprMapping::new(
        "a-pair",
        vec![
            MeanExpr::arithmetic(2),
            MeanExpr::weighted_arithmetic(vec![rat(1, 3), rat(2, 3)]).unwrap(),
        ],
        ScalarDomain::reals(),
    )
    .unwrap();
    let conjugated = conjugate_mapping(GeneratorId::Log, Box::new(weighted)).unwrap();
    let out = conjugated.apply(&[1.0, 4.0]).unwrap();
    // log-conjugate of the arithmetic mean is the geometric mean
    assert_close(out[0], 2.0, 1e-14);
    assert_close(out[1], 4f64.powf(2.0 / 3.0), 1e-13);
}

#[test]
fn identity_conjugation_changes_nothing() {
    let conjugated = conjugate_mapping(GeneratorId::Identity, ahm()).unwrap();
    let direct = ahm().apply(&[2.0, 8.0]).unwrap();
    assert_eq!(conjugated.apply(&[2.0, 8.0]).unwrap(), direct);
}

#[test]
fn conjugated_compound_is_the_generator_image() {
    let conjugated = conjugate_mapping(GeneratorId::Log, ahm()).unwrap();
    let e2 = 2f64.exp();
    let e4 = 4f64.exp();
    let outer = compound_mean(&conjugated, &[e2, e4], 1e-13, 1000).unwrap();
    let inner = compound_mean(ahm().as_ref(), &[2.0, 4.0], 1e-13, 1000).unwrap();
    assert_eq!(outer.status, ConvergenceStatus::Converged);
    assert_close(outer.value, inner.value.exp(), 1e-10);
}

#[test]
fn trace_csv_shape() {
    let trace = orbit(
        &SwapMapping,
        &[1.0f64, 3.0],
        &StopRule {
            spread_tol: 0.0,
            max_iter: 2,
        },
    )
    .unwrap();
    let csv = trace.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,v1,v2,min,max,spread");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0,1.0000000000000000e0,3.0000000000000000e0"));
}

#[test]
fn builtin_catalog() {
    assert_eq!(builtin_names().len(), 5);
    for name in ["agm", "ahm", "swap", "example1"] {
        assert!(builtin_f64(name).is_some(), "{name} missing");
    }
    assert!(builtin_f64("hamel-mn").is_none());
    assert!(builtin_f64("nope").is_none());
}
