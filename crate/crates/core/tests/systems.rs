use proptest::prelude::*;

use bsym::gallery::{galilean, standard_model};
use bsym::systems::{is_cas_basic, normal_form, target_bracket_table, verify_system, NCBSystem};
use bsym::{BFunction, Error, Expr, SamplePlan};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn standard_models_satisfy_all_four_conditions(shape in 0usize..4, c in 0.3f64..4.0) {
        let (r, s) = [(1, 1), (1, 3), (2, 2), (2, 4)][shape];
        let e = standard_model(r, s, c).unwrap();
        let rep = verify_system(&e.system, &SamplePlan::with_counts(40, 20)).unwrap();
        prop_assert!(rep.pass, "{:?}", rep.failed());
    }

    #[test]
    fn normal_form_is_idempotent(c in 0.5f64..3.0, a in -1.0f64..1.0) {
        let e = standard_model(1, 3, 1.0).unwrap();
        let mut integrals = e.system.integrals.clone();
        integrals[0] = BFunction::new(c, Expr::var(2) * 0.5);
        integrals[2] = BFunction::new(a, Expr::var(3));
        let sys = NCBSystem::new(e.system.structure.clone(), integrals, 1).unwrap();
        let once = normal_form(&sys).unwrap();
        let twice = normal_form(&once.system).unwrap();
        prop_assert_eq!(&twice.system.integrals, &once.system.integrals);
        prop_assert_eq!(twice.transform, nalgebra::DMatrix::identity(3, 3));
        prop_assert_eq!(twice.defining.log_scale, once.system.integrals[0].g.clone());
    }
}

#[test]
fn normal_form_moves_the_b_integral_first() {
    let e = standard_model(2, 2, 1.0).unwrap();
    let mut integrals = e.system.integrals.clone();
    integrals.swap(0, 1);
    let sys = NCBSystem::new(e.system.structure.clone(), integrals, 2).unwrap();
    let nf = normal_form(&sys).unwrap();
    assert_eq!(nf.system.integrals, e.system.integrals);
    assert_eq!(nf.transform[(0, 1)], 1.0);
}

#[test]
fn normal_form_needs_a_commuting_b_integral() {
    let e = galilean("b_translations").unwrap();
    assert!(matches!(normal_form(&e.system), Err(Error::NoBIntegral)));
}

#[test]
fn wrong_integral_count_fails_the_dimension_condition() {
    let e = standard_model(2, 2, 1.0).unwrap();
    let sys = NCBSystem::new(e.system.structure.clone(), e.system.integrals[..1].to_vec(), 1).unwrap();
    let rep = verify_system(&sys, &SamplePlan::with_counts(20, 10)).unwrap();
    assert_eq!(rep.failed(), vec![3]);
}

#[test]
fn noncommuting_part_fails_involution() {
    // pi2 and pi3 are conjugate, so declaring both commuting breaks (2)
    let e = standard_model(1, 3, 1.0).unwrap();
    let sys = NCBSystem::new(e.system.structure.clone(), e.system.integrals.clone(), 3).unwrap();
    let rep = verify_system(&sys, &SamplePlan::with_counts(20, 10)).unwrap();
    assert!(rep.failed().contains(&2));
}

#[test]
fn casimirs_of_the_target_bracket() {
    let e = standard_model(1, 3, 1.5).unwrap();
    let chart = e.system.structure.chart_arc();
    let pts = SamplePlan::with_counts(20, 0).bulk_points(&chart);
    let log_t = e.system.integrals[0].prepare(chart.clone());
    assert!(is_cas_basic(&e.system, &log_t, &pts, 1e-8).unwrap().pass);
    let pi2 = e.system.integrals[1].prepare(chart.clone());
    assert!(!is_cas_basic(&e.system, &pi2, &pts, 1e-8).unwrap().pass);
}

#[test]
fn target_table_of_the_standard_model() {
    let e = standard_model(1, 3, 2.0).unwrap();
    let pts = SamplePlan::with_counts(10, 0).bulk_points(e.system.chart());
    let t = target_bracket_table(&e.system, &pts).unwrap();
    assert!(t.f_basic.iter().all(|&b| b));
    for v in &t.values {
        assert_eq!(v[(0, 1)], 0.0);
        assert_eq!(v[(0, 2)], 0.0);
        assert!((v[(1, 2)].abs() - 1.0).abs() < 1e-14);
    }
}
