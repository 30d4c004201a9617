use smms_core::catalog::*;
use smms_core::tensor_core::{weyl_from_bundle, FdConfig};
use smms_core::weighted::{condition_report, weighted_derivatives, weighted_point, ReportOptions};
use smms_core::SmmsError;

fn build(id: FamilyId) -> FamilyObject {
    build_family(id, &FamilyParams::canonical(id)).unwrap()
}

#[test]
fn every_canonical_family_builds() {
    for id in FamilyId::ALL {
        let obj = build(id);
        let chart = obj.smms_chart().unwrap();
        assert_eq!(chart.n(), obj.n(), "{id}");
        family_expected(id, &FamilyParams::canonical(id)).unwrap();
    }
}

#[test]
fn warped_families_solve_the_weighted_einstein_odes() {
    for id in FamilyId::ALL {
        let obj = build(id);
        let Some(w) = obj.as_warped() else { continue };
        let lambda = family_expected(id, &FamilyParams::canonical(id)).unwrap().lambda;
        for t in sample_ts(w, 7) {
            let r = w.ode_residuals(lambda, t).unwrap();
            assert!(r.max_abs() < 1e-10, "{id} t={t} {r:?}");
        }
    }
}

#[test]
fn scale_matches_closed_form() {
    let opts = ReportOptions::default();
    for id in FamilyId::ALL {
        let p = FamilyParams::canonical(id);
        let exp = family_expected(id, &p).unwrap();
        let Some(kappa) = exp.kappa else { continue };
        let obj = build(id);
        let chart = obj.smms_chart().unwrap();
        let report = condition_report(&chart, &sample_points(&obj, 4), &ReportOptions { lambda: Some(exp.lambda), ..opts }).unwrap();
        assert!((report.kappa - kappa).abs() < 1e-6, "{id}: {} vs {kappa}", report.kappa);
        assert!(report.kappa_spread < 1e-6, "{id}: spread {}", report.kappa_spread);
    }
}

#[test]
fn golden_components_match() {
    let cfg = FdConfig::default();
    for id in FamilyId::ALL {
        let p = FamilyParams::canonical(id);
        let exp = family_expected(id, &p).unwrap();
        let chart = build(id).smms_chart().unwrap();
        for gc in &exp.golden_components {
            let got = match gc.quantity {
                GoldenQuantity::WeightedWeyl => weighted_point(&chart, &gc.point, &cfg).unwrap().weyl.get(&gc.indices),
                GoldenQuantity::WeightedWeylDivergence => {
                    weighted_derivatives(&chart, &gc.point, &cfg).unwrap().weighted_weyl_divergence.get(&gc.indices)
                }
                GoldenQuantity::Weyl => {
                    let wp = weighted_point(&chart, &gc.point, &cfg).unwrap();
                    weyl_from_bundle(&wp.curvature, &wp.g).unwrap().get(&gc.indices)
                }
                GoldenQuantity::ScalarCurvature => weighted_point(&chart, &gc.point, &cfg).unwrap().curvature.scalar,
                GoldenQuantity::RicciTT => weighted_point(&chart, &gc.point, &cfg).unwrap().curvature.ricci.get(&gc.indices),
            };
            let tol = 1e-6 * gc.value.abs().max(1.0);
            assert!((got - gc.value).abs() < tol, "{id} {}: {got} vs {} ({})", gc.name, gc.value, gc.formula);
        }
    }
}

#[test]
fn counterexample_31_half_is_harmonic() {
    let p = FamilyParams { m: Some(0.5), ..Default::default() };
    let exp = family_expected(FamilyId::Counterexample31, &p).unwrap();
    assert!(exp.weighted_harmonic);
    assert_eq!(exp.golden_components[0].value, 0.0);
    let exp1 = family_expected(FamilyId::Counterexample31, &FamilyParams::canonical(FamilyId::Counterexample31)).unwrap();
    assert!(!exp1.weighted_harmonic);
    assert!(exp1.markers.contains(&Marker::NotWeightedHarmonic));
}

#[test]
fn counterexample_31_warped_form_solves_odes_only_when_harmonic() {
    let cfg = FdConfig::default();
    for m in [0.5, 1.0, 2.0] {
        let w = counterexample_31_as_warped(m).unwrap();
        let chart = w.warped_chart().unwrap();
        let harmonic = m == 0.5;
        for (t, pt) in sample_ts(&w, 5).into_iter().zip(sample_points(&FamilyObject::Warped(w.clone()), 5)) {
            // Weighted Einstein with λ = 0 in every case.
            let p = weighted_point(&chart, &pt, &cfg).unwrap().schouten.p;
            assert!(p.max_abs() < 1e-8, "m={m} P={}", p.max_abs());
            let r = w.ode_residuals(0.0, t).unwrap();
            assert_eq!(r.max_abs() < 1e-10, harmonic, "m={m} t={t} {r:?}");
        }
    }
}

#[test]
fn sphere_sub_cases_and_markers() {
    let base = FamilyParams::canonical(FamilyId::WeightedSphere);
    let std = FamilyParams { a: Some(1.0), b: Some(1.0), ..base };
    let exp = family_expected(FamilyId::WeightedSphere, &std).unwrap();
    assert!(exp.markers.contains(&Marker::StandardSphere));
    assert!(exp.markers.contains(&Marker::IncompleteDomain));
    let gauss = FamilyParams { a: Some(0.0), b: Some(1.0), ..base };
    let exp = family_expected(FamilyId::WeightedSphere, &gauss).unwrap();
    assert!(exp.markers.contains(&Marker::PositiveEllipticGaussian));
    assert_eq!(exp.kappa, Some(0.0));
    let w = build_family(FamilyId::WeightedSphere, &gauss).unwrap();
    let iv = w.as_warped().unwrap().interval();
    assert!((iv.hi - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
}

#[test]
fn canonical_sphere_forces_mu() {
    let exp = family_expected(FamilyId::WeightedSphere, &FamilyParams::canonical(FamilyId::WeightedSphere)).unwrap();
    assert_eq!(exp.mu_forced, Some(-3.0));
    assert_eq!(exp.kappa, Some(2.0));
}

#[test]
fn m_one_leaves_mu_free() {
    let p = FamilyParams { m: Some(1.0), mu: Some(7.5), ..FamilyParams::canonical(FamilyId::WeightedEuclidean) };
    let exp = family_expected(FamilyId::WeightedEuclidean, &p).unwrap();
    assert_eq!(exp.mu_forced, None);
    assert!(exp.markers.contains(&Marker::MuFree));
    let w = build_family(FamilyId::WeightedEuclidean, &p).unwrap();
    assert_eq!(w.as_warped().unwrap().mu(), 7.5);
}

#[test]
fn quasi_einstein_choice_of_constants() {
    // c3 = c2 c4 kills the scale for positive λ.
    let p = FamilyParams { c3: Some(0.3 * 0.5), ..FamilyParams::canonical(FamilyId::Thm41Positive) };
    let exp = family_expected(FamilyId::Thm41Positive, &p).unwrap();
    assert!(exp.markers.contains(&Marker::QuasiEinstein));
    let w = build_family(FamilyId::Thm41Positive, &p).unwrap();
    let iv = w.as_warped().unwrap().interval();
    assert!(iv.is_bounded());
    assert!(iv.contains(0.0));
}

#[test]
fn constraint_clauses() {
    let cases = [
        (FamilyId::WeightedHyperbolic, FamilyParams { a: Some(-2.0), ..FamilyParams::canonical(FamilyId::WeightedHyperbolic) }, "A>-B"),
        (FamilyId::Thm14_3b, FamilyParams { c: Some(5.0), ..FamilyParams::canonical(FamilyId::Thm14_3b) }, "AC<=B"),
        (FamilyId::Counterexample32, FamilyParams { m: Some(1.0), ..Default::default() }, "m=1/2"),
        (FamilyId::Example43, FamilyParams { n: Some(4), ..FamilyParams::canonical(FamilyId::Example43) }, "n=5"),
    ];
    for (id, p, clause) in cases {
        match build_family(id, &p) {
            Err(SmmsError::ParamConstraintViolation { clause: c, .. }) => assert_eq!(c, clause, "{id}"),
            other => panic!("{id}: {other:?}"),
        }
    }
}

#[test]
fn example12_at_b_three_halves_is_counterexample_31_half() {
    let p = FamilyParams { n: Some(4), a: Some(1.0), b: Some(1.5), ..Default::default() };
    let e12 = build_family(FamilyId::Example12, &p).unwrap();
    let e12 = e12.as_warped().unwrap();
    let c31 = counterexample_31_as_warped(0.5).unwrap();
    for t in [0.2, 0.7, 1.3, 4.0] {
        assert!((e12.phi().value(t) - c31.phi().value(t)).abs() < 1e-14, "phi at {t}");
        assert!((e12.f().value(t) - c31.f().value(t)).abs() < 1e-14, "f at {t}");
        for (x, y) in e12.phi().jet(t).iter().zip(c31.phi().jet(t)) {
            assert!((x - y).abs() < 1e-13, "phi jet at {t}");
        }
    }
    assert_eq!(e12.m(), c31.m());
    assert_eq!(e12.mu(), c31.mu());
}

#[test]
fn hyperbolic_with_zero_a_is_quasi_einstein() {
    let p = FamilyParams { a: Some(0.0), ..FamilyParams::canonical(FamilyId::WeightedHyperbolic) };
    let exp = family_expected(FamilyId::WeightedHyperbolic, &p).unwrap();
    assert!(exp.markers.contains(&Marker::QuasiEinstein));
    assert_eq!(exp.kappa, Some(0.0));
    let obj = build_family(FamilyId::WeightedHyperbolic, &p).unwrap();
    let s = obj.smms_chart().unwrap();
    let r = condition_report(&s, &sample_points(&obj, 4), &ReportOptions::default()).unwrap();
    assert!(r.quasi_einstein_residual < 1e-6, "{}", r.quasi_einstein_residual);
    assert!(r.kappa.abs() < 1e-6);
}

#[test]
fn m_one_reports_do_not_see_mu() {
    let base = FamilyParams { m: Some(1.0), ..FamilyParams::canonical(FamilyId::WeightedEuclidean) };
    let reports: Vec<_> = [0.0, 7.5]
        .into_iter()
        .map(|mu| {
            let obj = build_family(FamilyId::WeightedEuclidean, &FamilyParams { mu: Some(mu), ..base }).unwrap();
            let s = obj.smms_chart().unwrap();
            condition_report(&s, &sample_points(&obj, 3), &ReportOptions::default()).unwrap()
        })
        .collect();
    let (a, b) = (&reports[0], &reports[1]);
    assert_eq!(a.lambda_fit, b.lambda_fit);
    assert_eq!(a.einstein_residual, b.einstein_residual);
    assert_eq!(a.harmonic_residual, b.harmonic_residual);
    assert_eq!(a.kappa, b.kappa);
}
