use std::f64::consts::PI;

use smms_core::catalog::*;
use smms_core::classify::*;
use smms_core::tensor_core::{weyl_from_bundle, FdConfig, Interval, TensorValue};
use smms_core::warped_closed::{FiberSpec, Profile, WarpedSmms};
use smms_core::weighted::{condition_report, weighted_point, ReportOptions};
use smms_core::SmmsError;

fn warped(id: FamilyId, p: &FamilyParams) -> WarpedSmms {
    build_family(id, p).unwrap().as_warped().unwrap().clone()
}

fn canonical(id: FamilyId) -> WarpedSmms {
    warped(id, &FamilyParams::canonical(id))
}

#[test]
fn harmonic_oscillator_closes() {
    let tr = integrate_ode(|_, y| vec![y[1], -y[0]], &[1.0, 0.0], (0.0, 2.0 * PI), &OdeOptions::default(), None).unwrap();
    assert!((tr.y_end()[0] - 1.0).abs() < 1e-8);
    assert!(tr.y_end()[1].abs() < 1e-8);
    for t in [0.3, 1.7, 4.0] {
        let y = tr.eval(t).unwrap();
        assert!((y[0] - t.cos()).abs() < 1e-9, "dense output at {t}");
    }
}

#[test]
fn exponential_growth() {
    let tr = integrate_ode(|_, y| vec![y[0]], &[1.0], (0.0, 1.0), &OdeOptions::default(), None).unwrap();
    assert!((tr.y_end()[0] - 1f64.exp()).abs() < 1e-9);
}

#[test]
fn backward_integration_and_eval_bounds() {
    let tr = integrate_ode(|_, y| vec![y[0]], &[1.0], (0.0, -1.0), &OdeOptions::default(), None).unwrap();
    assert!((tr.y_end()[0] - (-1f64).exp()).abs() < 1e-9);
    assert!(tr.eval(0.5).is_none());
    assert!((tr.eval(-0.5).unwrap()[0] - (-0.5f64).exp()).abs() < 1e-9);
}

#[test]
fn event_stops_at_first_sign_change() {
    let g = |_t: f64, y: &[f64]| y[0];
    let tr = integrate_ode(|_, y| vec![y[1], -y[0]], &[1.0, 0.0], (0.0, 10.0), &OdeOptions::default(), Some(&g)).unwrap();
    let (te, _) = tr.event.clone().unwrap();
    assert!((te - PI / 2.0).abs() < 1e-10);
    assert_eq!(tr.t_end(), te);
}

#[test]
fn non_finite_state_is_reported() {
    let r = integrate_ode(|_, y| vec![y[0] * y[0]], &[1.0], (0.0, 2.0), &OdeOptions::default(), None);
    assert!(matches!(r, Err(SmmsError::StepSizeUnderflow { .. }) | Err(SmmsError::NonFiniteState { .. })), "{r:?}");
}

#[test]
fn obata_closed_forms() {
    let cases = [(0.5, 2.0, 3.0), (0.0, 2.0, 1.0), (-0.5, 2.0 * -0.5 * 1.5 + 1.0, 1.5)];
    for (lambda, kappa, xi) in cases {
        let prob = ObataProblem::new(lambda, kappa, xi).unwrap();
        let sol = solve_obata_ivp(prob, 3, &ObataOptions::default()).unwrap();
        assert!(sol.closed_form_error() < 1e-8, "lambda={lambda}: {}", sol.closed_form_error());
        if lambda > 0.0 {
            assert!((sol.horizon.finite().unwrap() - PI / (2.0 * lambda).sqrt()).abs() < 1e-8);
        } else {
            assert_eq!(sol.horizon, Horizon::Infinite);
        }
    }
    let sol = solve_obata_ivp(ObataProblem::new(0.0, 2.0, 1.0).unwrap(), 3, &ObataOptions::default()).unwrap();
    let (u, _) = sol.state(3.0).unwrap();
    assert!((u - 10.0).abs() < 1e-8);
}

#[test]
fn obata_rejects_degenerate_initial_value() {
    assert!(matches!(ObataProblem::new(0.5, 3.0, 3.0), Err(SmmsError::InvalidProblem(_))));
}

#[test]
fn obata_chart_reproduces_weighted_sphere() {
    let p = FamilyParams::canonical(FamilyId::WeightedSphere);
    let w = warped(FamilyId::WeightedSphere, &p);
    let exp = family_expected(FamilyId::WeightedSphere, &p).unwrap();
    // ξ = v(0) = A + B.
    let prob = ObataProblem::new(0.5, exp.kappa.unwrap(), 3.0).unwrap();
    let sol = solve_obata_ivp(prob, 3, &ObataOptions::default()).unwrap();
    let obata = sol.chart().unwrap();
    let cat = w.warped_chart().unwrap();
    for pt in sample_points(&FamilyObject::Warped(w.clone()), 7) {
        let diff = (obata.metric(&pt).unwrap() - cat.chart().metric(&pt).unwrap()).abs().max();
        assert!(diff < 1e-6, "{pt:?}: {diff}");
        let (u, _) = sol.state(pt[0]).unwrap();
        assert!((u - w.v(pt[0])).abs() < 1e-6);
    }
}

#[test]
fn obata_residual_on_space_forms() {
    let opts = ReportOptions::default();
    for (id, a, b) in [
        (FamilyId::WeightedSphere, 2.0, 1.0),
        (FamilyId::WeightedEuclidean, 1.0, 1.0),
        (FamilyId::WeightedHyperbolic, 0.5, 1.0),
    ] {
        let p = FamilyParams { a: Some(a), b: Some(b), ..FamilyParams::canonical(id) };
        let exp = family_expected(id, &p).unwrap();
        let obj = build_family(id, &p).unwrap();
        let s = obj.smms_chart().unwrap();
        let r = obata_residual(&s, exp.lambda, exp.kappa.unwrap(), &sample_points(&obj, 5), &opts).unwrap();
        assert!(r < 1e-5, "{id}: {r}");
    }
}

#[test]
fn obata_residual_refuses_non_einstein_metric() {
    let id = FamilyId::Counterexample31;
    let obj = build_family(id, &FamilyParams::canonical(id)).unwrap();
    let s = obj.smms_chart().unwrap();
    let r = obata_residual(&s, 0.0, 0.0, &sample_points(&obj, 4), &ReportOptions::default());
    assert!(matches!(r, Err(SmmsError::PreconditionFailed(_))), "{r:?}");
}

fn thm41_draws() -> Vec<(FamilyId, FamilyParams)> {
    let mut out = Vec::new();
    for (k, (c1, c2, c3, c4)) in [(1.0, 0.3, 2.0, 0.5), (0.7, -0.4, 1.5, -0.3), (1.2, 0.8, 3.0, 0.2)].into_iter().enumerate() {
        let n = 3 + k;
        let m = [0.5, 2.0, 3.5][k];
        out.push((FamilyId::Thm41Positive, FamilyParams { n: Some(n), m: Some(m), lambda: Some(0.5 + 0.25 * k as f64), c1: Some(c1), c2: Some(c2), c3: Some(c3), c4: Some(c4), ..Default::default() }));
        out.push((FamilyId::Thm41Zero, FamilyParams { n: Some(n), m: Some(m), c1: Some(c1), c2: Some(c2.abs() + 0.5), c3: Some(c3), c4: Some(c4), ..Default::default() }));
        out.push((FamilyId::Thm41Negative, FamilyParams { n: Some(n), m: Some(m), lambda: Some(-0.5 - 0.25 * k as f64), c1: Some(c1), c2: Some(c2), c3: Some(c3), c4: Some(c4), ..Default::default() }));
    }
    out
}

#[test]
fn einstein_branch_for_theorem_families() {
    let tol = 1e-8;
    for (id, p) in thm41_draws() {
        let w = warped(id, &p);
        let cls = classify_branch(&w, &sample_ts(&w, 11), tol).unwrap();
        assert_eq!(cls.verdict.label(), "einstein", "{id} {p:?} {cls:?}");
        assert!(cls.probe.branch2_defect > 1e3 * tol, "{id}: defects not separated {cls:?}");
    }
}

#[test]
fn example12_branch_and_fit() {
    let tol = 1e-8;
    for (n, a, b) in [(3, 1.0, 1.0), (4, 1.0, 1.0), (5, 0.7, 2.5)] {
        let p = FamilyParams { n: Some(n), a: Some(a), b: Some(b), ..Default::default() };
        let w = warped(FamilyId::Example12, &p);
        let cls = classify_branch(&w, &sample_ts(&w, 11), tol).unwrap();
        match cls.verdict {
            BranchVerdict::NonEinsteinExample12 { a: fa, b: fb, .. } => {
                assert!((fa - a).abs() < 1e-6 && (fb - b).abs() < 1e-6, "{fa} {fb}");
            }
            other => panic!("{other:?}"),
        }
        assert!(cls.probe.einstein_defect > 1e3 * tol);
    }
}

#[test]
fn example12_with_wrong_m_is_indeterminate() {
    let w = canonical(FamilyId::Example12).with_m(0.75).unwrap();
    let cls = classify_branch(&w, &sample_ts(&w, 11), 1e-8).unwrap();
    assert_eq!(cls.verdict, BranchVerdict::Indeterminate);
    assert!(cls.ode_residual > 1e-3);
}

#[test]
fn example12_blowup_rate() {
    let w = canonical(FamilyId::Example12);
    let fit = blowup_probe(&w, Endpoint::Lower, &[0.1, 0.05, 0.02, 0.01, 0.005], 1e-6).unwrap();
    assert!((fit.values[0] - 200.0 / 3.0).abs() < 1e-9);
    assert!((fit.rate_exponent - 2.0).abs() < 0.01);
    assert!((fit.coefficient - 2.0 / 3.0).abs() < 1e-2);
    let fit = blowup_probe(&w, Endpoint::Lower, &geometric_samples(&w, Endpoint::Lower, 9).unwrap(), 1e-6).unwrap();
    assert!(fit.diverges);
}

#[test]
fn smooth_ends_do_not_blow_up() {
    // c4 < 0 keeps v positive for all t > 0.
    let p = FamilyParams { c4: Some(-0.25), ..FamilyParams::canonical(FamilyId::Thm41Negative) };
    let w = warped(FamilyId::Thm41Negative, &p);
    let w = WarpedSmms::new(w.n(), Interval::new(0.0, 5.0).unwrap(), w.phi().clone(), w.f().clone(), *w.fiber(), w.m(), w.mu(), w.lambda_target()).unwrap();
    for end in [Endpoint::Lower, Endpoint::Upper] {
        let fit = blowup_probe(&w, end, &geometric_samples(&w, end, 9).unwrap(), 1e-6).unwrap();
        assert!(!fit.diverges);
    }
    let flat = WarpedSmms::new(
        3,
        Interval::new(0.0, 2.0).unwrap(),
        Profile::with_jet(|_| [1.0, 0.0, 0.0]),
        Profile::with_jet(|t| [t, 1.0, 0.0]),
        FiberSpec::flat(2).unwrap(),
        1.0,
        0.0,
        None,
    )
    .unwrap();
    let fit = blowup_probe(&flat, Endpoint::Lower, &geometric_samples(&flat, Endpoint::Lower, 5).unwrap(), 1e-6).unwrap();
    assert!(!fit.diverges);
    assert_eq!(fit.coefficient, 0.0);
}

#[test]
fn blowup_rejects_exterior_samples() {
    let w = canonical(FamilyId::Example12);
    assert!(matches!(blowup_probe(&w, Endpoint::Lower, &[0.1, -0.01], 1e-6), Err(SmmsError::Domain { .. })));
}

#[test]
fn interior_critical_points() {
    assert_eq!(critical_points_of_v(&canonical(FamilyId::Thm14_3b)), 0);
    // The space forms have theirs at the poles only.
    for id in [FamilyId::WeightedSphere, FamilyId::WeightedEuclidean, FamilyId::WeightedHyperbolic] {
        assert_eq!(critical_points_of_v(&canonical(id)), 0, "{id}");
    }
}

fn global(id: FamilyId, p: &FamilyParams) -> GlobalVerdict {
    let obj = build_family(id, p).unwrap();
    let report = condition_report(&obj.smms_chart().unwrap(), &sample_points(&obj, 5), &ReportOptions::default()).unwrap();
    match_global(&obj, &report, &GlobalOptions::default())
}

#[test]
fn global_cases() {
    let v = global(FamilyId::WeightedSphere, &FamilyParams::canonical(FamilyId::WeightedSphere));
    assert_eq!(v.case, GlobalCase::Sphere, "{v:?}");
    assert_eq!(v.critical_points, 2);
    assert!((v.fitted_params.a.unwrap() - 2.0).abs() < 1e-6);

    let v = global(FamilyId::WeightedEuclidean, &FamilyParams::canonical(FamilyId::WeightedEuclidean));
    assert_eq!(v.case, GlobalCase::Euclidean, "{v:?}");
    assert_eq!(v.critical_points, 1);

    let p = FamilyParams { a: Some(0.0), b: Some(1.0), ..FamilyParams::canonical(FamilyId::WeightedHyperbolic) };
    let v = global(FamilyId::WeightedHyperbolic, &p);
    assert_eq!(v.case, GlobalCase::Hyperbolic, "{v:?}");
    assert_eq!(v.critical_points, 1);
    assert!(v.quasi_einstein);

    let p = FamilyParams { n: Some(5), ..FamilyParams::canonical(FamilyId::Thm14_3b) };
    let v = global(FamilyId::Thm14_3b, &p);
    assert_eq!(v.case, GlobalCase::WarpedRicciFlat, "{v:?}");
    assert_eq!(v.critical_points, 0);
    let f = v.fitted_params;
    assert!((f.a.unwrap() - 1.0).abs() < 1e-6 && (f.b.unwrap() - 2.0).abs() < 1e-6 && (f.c.unwrap() - 1.0).abs() < 1e-6, "{f:?}");

    let v = global(FamilyId::Example12, &FamilyParams::canonical(FamilyId::Example12));
    assert_eq!(v.case.label(), "incomplete: ricci-blowup");
    let fit = v.blowup.unwrap();
    assert!((fit.rate_exponent - 2.0).abs() < 0.02 && (fit.coefficient - 2.0 / 3.0).abs() < 1e-2);

    let std = FamilyParams { a: Some(1.0), b: Some(1.0), ..FamilyParams::canonical(FamilyId::WeightedSphere) };
    assert_eq!(global(FamilyId::WeightedSphere, &std).case, GlobalCase::Incomplete(IncompleteReason::DensityDegenerates));

    let v = global(FamilyId::Counterexample31, &FamilyParams::canonical(FamilyId::Counterexample31));
    assert_eq!(v.case, GlobalCase::Unmatched);
}

#[test]
fn einstein_branch_weyl_is_harmonic_and_annihilated_by_grad_f() {
    let cfg = FdConfig::default();
    for (id, p) in thm41_draws().into_iter().take(3) {
        let obj = build_family(id, &p).unwrap();
        let chart = obj.smms_chart().unwrap();
        let weyl = |q: &[f64]| {
            let wp = weighted_point(&chart, q, &cfg)?;
            weyl_from_bundle(&wp.curvature, &wp.g)
        };
        for pt in sample_points(&obj, 3) {
            let div = smms_core::tensor_core::divergence(chart.chart(), &weyl, &pt, &cfg).unwrap();
            let wp = weighted_point(&chart, &pt, &cfg).unwrap();
            let iota = smms_core::tensor_core::interior_product(&wp.density.grad_vector, &weyl(&pt).unwrap()).unwrap();
            let frame = smms_core::tensor_core::orthonormal_frame(&wp.g, &(0..chart.n()).collect::<Vec<_>>()).unwrap();
            assert!(div.in_frame(&frame).max_abs() < 1e-4, "{id} dW");
            assert!(norm(&iota, &frame) < 1e-4, "{id} iota");
        }
    }
}

fn norm(t: &TensorValue, frame: &nalgebra::DMatrix<f64>) -> f64 {
    t.in_frame(frame).max_abs()
}
