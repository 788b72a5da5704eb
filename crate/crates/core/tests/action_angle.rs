
use bsym::action_angle::verify::{verify_normal_form, NormalFormMap, PULLBACK_STEP};
use bsym::action_angle::{ActionAngleChart, DarbouxChart, PipelineOptions};
use bsym::gallery::{scrambled, standard_model};
use bsym::{BFunction, Expr, SamplePlan};

#[test]
fn standard_model_pipeline_recovers_normal_form() {
    let e = standard_model(2, 2, 1.0).unwrap();
    let aa = ActionAngleChart::build(&e.system, &PipelineOptions::default()).unwrap();
    assert!((aa.modular_period() - 1.0).abs() < 1e-6);
    let pts = SamplePlan::with_counts(20, 0).bulk_points(e.system.chart());
    let rep = verify_normal_form(&e.system, &aa, &pts, PULLBACK_STEP, 1e-5).unwrap();
    println!("{}", serde_json::to_string(&rep.deviation.max_residual).unwrap());
    assert!(rep.pass, "{:?}", rep.deviation.max_residual);
}

#[test]
fn scrambled_pipeline_recovers_normal_form() {
    let e = scrambled(2.0).unwrap();
    let aa = ActionAngleChart::build(&e.system, &PipelineOptions::default()).unwrap();
    println!("lattice {:?}", aa.lattice());
    assert!((aa.modular_period() - 2.0).abs() < 1e-6);
    let pts = SamplePlan::with_counts(20, 0).bulk_points(e.system.chart());
    let rep = verify_normal_form(&e.system, &aa, &pts, PULLBACK_STEP, 1e-5).unwrap();
    println!("dev {} inv {}", rep.deviation.max_residual, rep.theta_invariance.max_residual);
    assert!(rep.pass);
}

#[test]
fn darboux_charts_on_standard_model() {
    let e = standard_model(2, 2, 1.5).unwrap();
    let s = &e.system.structure;
    let m = vec![0.3, 0.6, 0.0, 0.1];
    let pts: Vec<Vec<f64>> = SamplePlan::with_counts(30, 0)
        .random_points(e.system.chart(), 30)
        .into_iter()
        .map(|p| (0..4).map(|i| m[i] + 0.1 * (p[i] - e.system.chart().center()[i])).collect())
        .filter(|p: &Vec<f64>| p[2] != 0.0)
        .collect();
    for fs in [vec![], vec![BFunction::smooth(Expr::var(3))]] {
        let dc = DarbouxChart::build(s, &fs, &m).unwrap();
        let rep = dc.verify(&pts, 1e-5, 1e-5).unwrap();
        println!("k={} dev {}", fs.len(), rep.deviation.max_residual);
        assert!(rep.pass);
    }
}

/// `(theta, log|t|, a_2)` read off directly, optionally sheared.
struct ReadOff {
    c: f64,
    shear: f64,
}

impl NormalFormMap for ReadOff {
    fn rank(&self) -> usize {
        2
    }
    fn pairs(&self) -> usize {
        0
    }
    fn modular_period(&self) -> f64 {
        self.c
    }
    fn smooth_coordinates(&self, p: &[f64], _hint: Option<&[f64]>) -> bsym::Result<Vec<f64>> {
        Ok(vec![(p[0] + self.shear * p[3]).rem_euclid(1.0), p[1], 0.0, p[3]])
    }
}

#[test]
fn identity_chart_has_no_deviation() {
    let e = standard_model(2, 2, 1.7).unwrap();
    let pts = SamplePlan::with_counts(50, 10).all_points(e.system.chart());
    let rep = verify_normal_form(&e.system, &ReadOff { c: 1.7, shear: 0.0 }, &pts, 1e-3, 1e-12).unwrap();
    assert!(rep.pass, "{}", rep.deviation.max_residual);
    let rep = verify_normal_form(&e.system, &ReadOff { c: 1.7, shear: 0.1 }, &pts, 1e-3, 1e-12).unwrap();
    assert!(!rep.pass && rep.deviation.max_residual > 1e-2);
    let rep = verify_normal_form(&e.system, &ReadOff { c: 1.0, shear: 0.0 }, &pts, 1e-3, 1e-5).unwrap();
    assert!(!rep.pass);
}

#[test]
fn angles_start_at_the_section_and_follow_the_action() {
    let e = standard_model(2, 2, 1.3).unwrap();
    let aa = ActionAngleChart::build(&e.system, &PipelineOptions::default()).unwrap();
    for p in SamplePlan::with_counts(8, 4).all_points(e.system.chart()) {
        let base = aa.section(&p);
        let th = aa.angles(&base, None).unwrap();
        assert!(th.iter().all(|&x| x.min(1.0 - x) < 1e-9), "{th:?}");
        let q = aa.torus_action(&base, &[0.25, 0.0]).unwrap();
        let th = aa.angles(&q, None).unwrap();
        assert!((th[0] - 0.25).abs() < 1e-9 && th[1].min(1.0 - th[1]) < 1e-9, "{th:?}");
        let q = aa.torus_action(&base, &[0.4, 0.7]).unwrap();
        let th = aa.angles(&q, None).unwrap();
        assert!((th[0] - 0.4).abs() < 1e-9 && (th[1] - 0.7).abs() < 1e-9, "{th:?}");
    }
}

#[test]
fn torus_action_has_unit_periods() {
    let e = scrambled(2.5).unwrap();
    let aa = ActionAngleChart::build(&e.system, &PipelineOptions::default()).unwrap();
    for p in SamplePlan::with_counts(6, 3).all_points(e.system.chart()) {
        for s in [[1.0, 0.0], [0.0, 1.0], [1.0, -1.0]] {
            let q = aa.torus_action(&p, &s).unwrap();
            assert!(e.system.chart().distance(&q, &p) < 1e-8);
        }
        let half = aa.torus_action(&p, &[0.5, 0.0]).unwrap();
        assert!(e.system.chart().distance(&half, &p) > 1e-3);
    }
}

#[test]
fn actions_of_the_standard_model_are_its_integrals() {
    let e = standard_model(2, 2, 1.0).unwrap();
    let aa = ActionAngleChart::build(&e.system, &PipelineOptions::default()).unwrap();
    for p in SamplePlan::with_counts(20, 0).bulk_points(e.system.chart()) {
        let nc = aa.evaluate(&p).unwrap();
        assert!((nc.actions[1] - p[3]).abs() < 1e-10);
        assert!((nc.t_hat - p[2]).abs() < 1e-10 * p[2].abs().max(1e-3));
    }
}

#[test]
fn darboux_conjugate_is_the_angle() {
    let e = standard_model(2, 2, 1.5).unwrap();
    let m = vec![0.3, 0.6, 0.0, 0.1];
    let dc = DarbouxChart::build(&e.system.structure, &[BFunction::smooth(Expr::var(3))], &m).unwrap();
    let x = vec![0.31, 0.62, 0.02, 0.08];
    let h = 1e-4;
    let g = |d: f64| dc.coordinates(&[x[0], x[1] + d, x[2], x[3]], None).unwrap()[1];
    let slope = (g(h) - g(-h)) / (2.0 * h);
    assert!((slope.abs() - 1.0).abs() < 1e-8, "{slope}");
    for a in [0, 2, 3] {
        let mut y = x.clone();
        y[a] += h;
        let mut z = x.clone();
        z[a] -= h;
        let d = dc.coordinates(&y, None).unwrap()[1] - dc.coordinates(&z, None).unwrap()[1];
        assert!((d / (2.0 * h)).abs() < 1e-8);
    }
}

#[test]
fn darboux_chart_needs_a_point_of_z_and_commuting_functions() {
    let e = standard_model(2, 2, 1.0).unwrap();
    let s = &e.system.structure;
    assert!(DarbouxChart::build(s, &[], &[0.3, 0.6, 0.1, 0.1]).is_err());
    // theta_2 and pi_2 are conjugate
    let fs = [BFunction::smooth(Expr::var(3)), BFunction::smooth(Expr::var(1))];
    assert!(DarbouxChart::build(s, &fs, &[0.3, 0.6, 0.0, 0.1]).is_err());
}
