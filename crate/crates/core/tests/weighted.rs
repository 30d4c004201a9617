use nalgebra::DMatrix;
use smms_core::catalog::{build_family, sample_points, FamilyId, FamilyObject, FamilyParams};
use smms_core::tensor_core::*;
use smms_core::weighted::*;

fn cfg() -> FdConfig {
    FdConfig::default()
}

fn flat(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static, m: f64, mu: f64) -> SmmsChart {
    SmmsChart::new(ChartMetric::euclidean(3), ScalarField::new(f), m, mu).unwrap()
}

fn family(id: FamilyId, p: FamilyParams) -> (FamilyObject, SmmsChart) {
    let obj = build_family(id, &p).unwrap();
    let s = obj.smms_chart().unwrap();
    (obj, s)
}

fn sphere_p() -> FamilyParams {
    FamilyParams { n: Some(3), m: Some(2.0), lambda: Some(0.5), a: Some(2.0), b: Some(1.0), ..Default::default() }
}

#[test]
fn bakry_emery_ricci_on_flat_space() {
    let s = flat(|x| 0.5 * x[0] * x[0], 2.0, 0.0);
    let rho = bakry_emery_ricci(&s, &[1.0, 0.3, -0.2], &cfg()).unwrap();
    assert!((rho.get2(0, 0) - 0.5).abs() < 1e-9);
    assert!(rho.get2(1, 1).abs() < 1e-9);
}

#[test]
fn bakry_emery_ricci_on_weighted_sphere() {
    let (obj, s) = family(FamilyId::WeightedSphere, sphere_p());
    let (n, m, lambda, kappa) = (3.0, 2.0, 0.5, 2.0);
    for p in sample_points(&obj, 3) {
        let wp = weighted_point(&s, &p, &cfg()).unwrap();
        let f = s.density().eval(&p).unwrap();
        let c = 2.0 * (n + m - 1.0) * lambda - m * kappa * (f / m).exp();
        let expected = TensorValue::sym2_from_matrix(&(wp.g.clone() * c));
        assert!(wp.rho_fm.sub(&expected).unwrap().max_abs() < 1e-7);
    }
}

#[test]
fn weighted_scalar_curvature_on_flat_space() {
    let tau = weighted_scalar_curvature(&flat(|x| x[0], 1.0, 5.0), &[0.4, 0.0, 0.0], &cfg()).unwrap();
    assert!((tau + 2.0).abs() < 1e-9, "m = 1 ignores mu: {tau}");
    let tau = weighted_scalar_curvature(&flat(|x| x[0], 2.0, 1.0), &[0.0, 0.0, 0.0], &cfg()).unwrap();
    assert!((tau - 0.5).abs() < 1e-9, "{tau}");
}

#[test]
fn schouten_vanishes_on_the_flat_families() {
    let p12 = FamilyParams { n: Some(4), a: Some(1.0), b: Some(1.0), ..Default::default() };
    let (_, s) = family(FamilyId::Example12, p12);
    assert!(weighted_schouten(&s, &[1.0, 0.1, 0.0, -0.1], &cfg()).unwrap().p.max_abs() < 1e-8);

    let (_, s) = family(FamilyId::Counterexample31, FamilyParams { m: Some(1.0), ..Default::default() });
    assert!(weighted_schouten(&s, &[1.5, 0.0, 0.2, 0.1], &cfg()).unwrap().p.max_abs() < 1e-8);

    let pe = FamilyParams { n: Some(3), m: Some(2.0), a: Some(1.0), b: Some(1.0), ..Default::default() };
    let (obj, s) = family(FamilyId::WeightedEuclidean, pe);
    assert_eq!(s.mu(), -4.0);
    let p = &sample_points(&obj, 3)[0];
    assert!(weighted_schouten(&s, p, &cfg()).unwrap().p.max_abs() < 1e-8);
}

#[test]
fn space_forms_have_vanishing_weighted_weyl() {
    let cases = [
        (FamilyId::WeightedSphere, sphere_p()),
        (FamilyId::WeightedEuclidean, FamilyParams::canonical(FamilyId::WeightedEuclidean)),
        (FamilyId::WeightedHyperbolic, FamilyParams::canonical(FamilyId::WeightedHyperbolic)),
    ];
    for (id, p) in cases {
        let (obj, s) = family(id, p);
        for pt in sample_points(&obj, 3) {
            assert!(weighted_weyl(&s, &pt, &cfg()).unwrap().max_abs() < 1e-7, "{id}");
        }
    }
}

#[test]
fn einstein_families_have_equal_weyl_tensors() {
    let (obj, s) = family(FamilyId::Thm41Negative, FamilyParams::canonical(FamilyId::Thm41Negative));
    for pt in sample_points(&obj, 3) {
        let wp = weighted_point(&s, &pt, &cfg()).unwrap();
        let w = weyl_from_bundle(&wp.curvature, &wp.g).unwrap();
        assert!(wp.weyl.sub(&w).unwrap().max_abs() < 1e-7);
    }
}

#[test]
fn cotton_vanishes_on_weighted_einstein_families() {
    for id in [FamilyId::Example12, FamilyId::WeightedHyperbolic, FamilyId::Thm41Zero, FamilyId::Counterexample32] {
        let (obj, s) = family(id, FamilyParams::canonical(id));
        let pt = &sample_points(&obj, 3)[1];
        let d = weighted_derivatives(&s, pt, &cfg()).unwrap();
        assert!(d.cotton.in_frame(&d.frame).max_abs() < 1e-6, "{id}");
    }
}

#[test]
fn cotton_is_antisymmetric_and_detects_perturbations() {
    let s = flat(|x| x[0], 1.0, 0.0);
    let c = weighted_cotton(&s, &[0.2, 0.1, 0.3], &cfg()).unwrap();
    for x in 0..3 {
        for y in 0..3 {
            for z in 0..3 {
                assert_eq!(c.get3(x, y, z), -c.get3(y, x, z));
            }
        }
    }

    let chart = ChartMetric::with_default_names(Domain::unbounded(3), |p| {
        let mut g = DMatrix::identity(3, 3);
        g[(1, 1)] += 0.05 * p[0] * p[0];
        g
    })
    .unwrap();
    let s = SmmsChart::new(chart, ScalarField::new(|x| x[0]), 2.0, 0.0).unwrap();
    let p = [0.8, 0.1, -0.2];
    let coarse = weighted_cotton(&s, &p, &cfg()).unwrap();
    let fine = weighted_cotton(&s, &p, &FdConfig { rel_step: cfg().rel_step / 2.0, ..cfg() }).unwrap();
    assert!(coarse.max_abs() > 1e-3, "{}", coarse.max_abs());
    assert!(coarse.sub(&fine).unwrap().max_abs() < 1e-6 * coarse.max_abs().max(1.0));
}

#[test]
fn weighted_divergence_of_power_law_weyl() {
    let cfg = cfg();
    for (m, expected) in [(1.0, 4.0), (0.5, 0.0)] {
        let (_, s) = family(FamilyId::Counterexample31, FamilyParams { m: Some(m), ..Default::default() });
        let field = |q: &[f64]| weighted_weyl(&s, q, &cfg);
        let d = weighted_divergence(&s, &field, &[1.0, 0.0, 0.0, 0.0], &cfg).unwrap();
        assert!((d.get3(1, 0, 1) - expected).abs() < 1e-6, "m = {m}: {}", d.get3(1, 0, 1));
    }
    let (_, s) = family(FamilyId::Counterexample32, FamilyParams::default());
    let d = weighted_weyl_divergence(&s, &[1.0, 0.0, 0.0], &cfg).unwrap();
    let expected = 4.0 * (6f64.sqrt() - 3.0) / 9.0;
    assert!((d.get3(1, 0, 1) - expected).abs() < 1e-6, "{}", d.get3(1, 0, 1));
}

#[test]
fn condition_reports_for_documented_families() {
    let (obj, s) = family(FamilyId::WeightedSphere, sphere_p());
    let r = condition_report(&s, &sample_points(&obj, 5), &ReportOptions::default()).unwrap();
    assert!((r.lambda_fit - 0.5).abs() < 1e-6);
    assert!(r.einstein_residual <= 1e-5);
    assert!((r.kappa - 2.0).abs() < 1e-5);
    assert!(r.kappa_spread <= 1e-5);
    assert!(r.harmonic_residual <= 1e-4);
    assert_eq!(r.branch, Branch::Einstein);

    let pe = FamilyParams { n: Some(3), m: Some(2.0), a: Some(1.0), b: Some(1.0), ..Default::default() };
    let (obj, s) = family(FamilyId::WeightedEuclidean, pe);
    let r = condition_report(&s, &sample_points(&obj, 5), &ReportOptions::default()).unwrap();
    assert!((r.kappa - 2.0).abs() < 1e-5);
    assert!(r.einstein_residual <= 1e-5);

    let (obj, s) = family(FamilyId::Counterexample31, FamilyParams { m: Some(1.0), ..Default::default() });
    let r = condition_report(&s, &sample_points(&obj, 5), &ReportOptions::default()).unwrap();
    assert!(r.einstein_residual <= 1e-5);
    assert!(r.lambda_fit.abs() < 1e-8);
    assert!(r.harmonic_residual > 1.0);
    assert_eq!(r.branch, Branch::Indeterminate);
}

#[test]
fn wrong_mu_breaks_the_euclidean_family() {
    let p = FamilyParams { n: Some(3), m: Some(2.0), a: Some(1.0), b: Some(1.0), ..Default::default() };
    let obj = build_family(FamilyId::WeightedEuclidean, &p).unwrap();
    let w = obj.as_warped().unwrap().clone().with_mu(-3.0);
    let s = w.warped_chart().unwrap();
    let r = condition_report(&s, &sample_points(&obj, 3), &ReportOptions::default()).unwrap();
    assert!(r.einstein_residual > 1e-3, "{}", r.einstein_residual);
}

#[test]
fn formal_warped_product_scalar_is_weighted_scalar() {
    let s = flat(|x| -2.0 * (1.0 + x[0] * x[0]).ln(), 2.0, 0.3);
    let product = formal_warped_product(&s, 2).unwrap();
    let base = [0.6, -0.2, 0.1];
    let tau = weighted_scalar_curvature(&s, &base, &cfg()).unwrap();
    let scalar = curvature_bundle(&product, &[0.6, -0.2, 0.1, 0.0, 0.0], &cfg()).unwrap().scalar;
    assert!((scalar - tau).abs() < 1e-6 * tau.abs().max(1.0), "{scalar} vs {tau}");
}

#[test]
fn formal_product_with_constant_density_is_a_direct_product() {
    let chart = ChartMetric::with_default_names(Domain::unbounded(3), |p| fiber_space_form_metric(p, 1.0)).unwrap();
    let s = SmmsChart::with_constant_density(chart, ScalarField::constant(0.0), 2.0, 0.5).unwrap();
    let product = formal_warped_product(&s, 2).unwrap();
    let scalar = curvature_bundle(&product, &[0.1, 0.2, 0.0, 0.0, 0.0], &cfg()).unwrap().scalar;
    assert!((scalar - 7.0).abs() < 1e-6, "{scalar}");
}

#[test]
fn constant_density_is_rejected() {
    let err = SmmsChart::new(ChartMetric::euclidean(3), ScalarField::constant(1.0), 2.0, 0.0).unwrap_err();
    assert_eq!(err, smms_core::SmmsError::ConstantDensity);
    assert!(SmmsChart::new(ChartMetric::euclidean(3), ScalarField::new(|x| x[0]), 0.0, 0.0).is_err());
}
