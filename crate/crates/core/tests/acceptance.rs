//! Acceptance run: one line per criterion, nonzero exit on any failure.

mod common;

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bsym::action_angle::verify::{verify_normal_form, PULLBACK_STEP};
use bsym::action_angle::{ActionAngleChart, DarbouxChart, PipelineOptions};
use bsym::dynamics::{period_lattice, Integrator, LatticeOptions};
use bsym::gallery::{all_entries, counterexample_2d, galilean, nonlinear_action, scrambled, standard_model, Fact};
use bsym::poisson::jacobi_residual;
use bsym::systems::{induced_target_bracket, normal_form, verify_system, NCBSystem};
use bsym::{BForm, BFunction, BSymplecticStructure, Chart, Error, Expr, Observable, SamplePlan, VectorField};

type Outcome = std::result::Result<(bool, String), Box<dyn std::error::Error>>;

fn amax(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn so3_brackets() -> Outcome {
    let e = galilean("so3_r3")?;
    let st = &e.system.structure;
    let chart = st.chart_arc();
    let f: Vec<_> = e.system.integrals[..3].iter().map(|g| g.prepare(chart.clone())).collect();
    let pts = SamplePlan { seed: 1, ..Default::default() }.random_points(&chart, 100);
    let mut worst = 0.0f64;
    for p in &pts {
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let b = st.bracket_at(p, &f[i], &f[j])?;
            worst = worst.max((b - f[k].value(p)?).abs());
        }
    }
    Ok((worst < 1e-12, format!("max |{{f_i,f_j}} - f_k| = {worst:.2e} over 100 points")))
}

fn counterexample() -> Outcome {
    let e = counterexample_2d(false)?;
    let rep = verify_system(&e.system, &SamplePlan::default())?;
    let failed = rep.failed();
    let field = e.system.structure.hamiltonian_field(&e.system.integrals[0])?;
    let zpts = SamplePlan::default().z_points(e.system.chart());
    let mut vanishes = !zpts.is_empty();
    for p in &zpts {
        vanishes &= field.smooth_components(p)?.iter().all(|&v| v == 0.0);
    }
    let z = &rep.z_independence;
    let witness = z.failures.first().cloned();
    Ok((
        failed == vec![4] && vanishes && witness.is_some() && z.max_residual == 0.0,
        format!(
            "failing conditions {failed:?}, X_z = 0 exactly at {} Z points, best singular value on Z {:e}, witness {witness:?}",
            zpts.len(),
            z.max_residual
        ),
    ))
}

fn jacobi() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let entries = all_entries()?;
    for e in &entries {
        let st = &e.system.structure;
        let chart = st.chart();
        for k in 0..50 {
            let [f, g, h] = [0; 3].map(|_| common::random_bfunction(&mut rng, chart));
            let pts = SamplePlan { seed: k, ..Default::default() }.random_points(chart, 10);
            worst = worst.max(jacobi_residual(st, &f, &g, &h, &pts)?);
        }
    }
    // dx1^dy1 + (2 + x1) dx2^dy2 is nondegenerate but not closed
    let chart = Arc::new(Chart::from_parts(&["x1", "x2", "y1", "y2"], None, &[(-1.0, 1.0); 4], &[false; 4])?);
    let omega = BForm::from_terms(4, 2, [(vec![0, 2], Expr::constant(1.0)), (vec![1, 3], Expr::var(0) + 2.0)]);
    let bad = BSymplecticStructure::new(chart.clone(), omega)?;
    let v = |i: usize| BFunction::smooth(Expr::var(i));
    let pts = SamplePlan::default().random_points(&chart, 50);
    let control = jacobi_residual(&bad, &v(1), &v(3), &v(2), &pts)?;
    Ok((
        worst < 1e-8 && control > 0.1,
        format!("max residual {worst:.2e} over {} forms x 50 triples; non-closed control {control:.3}", entries.len()),
    ))
}

fn normal_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut exact = true;
    for k in 0..20 {
        let base = standard_model(1, 3, rng.gen_range(0.5..3.0))?;
        let st = base.system.structure.clone();
        let chart = st.chart_arc();
        // functions of (t, pi2, pi3) keep every bracket F-basic
        let poly = |rng: &mut ChaCha8Rng| common::random_poly_in(rng, &[1, 2, 3]);
        let c = rng.gen_range(0.5..3.0);
        let integrals = vec![
            BFunction::new(c, poly(&mut rng)),
            BFunction::new(rng.gen_range(-1.0..1.0), Expr::var(2) + poly(&mut rng) * 0.3),
            BFunction::new(rng.gen_range(-1.0..1.0), Expr::var(3) + poly(&mut rng) * 0.3),
        ];
        let sys = NCBSystem::new(st, integrals, 1)?;
        let nf = normal_form(&sys)?;
        let f1 = &nf.system.integrals[0];
        exact &= f1.c == 1.0 && nf.defining.log_scale == f1.g;
        exact &= nf.system.integrals[1..].iter().all(|f| f.c == 0.0);
        let pts = SamplePlan { seed: k, ..Default::default() }.random_points(&chart, 8);
        for p in &pts {
            let t_new = nf.defining.evaluate(&chart, p)?;
            exact &= (t_new.abs().ln() - f1.evaluate(&chart, p)?).abs() < 1e-12;
        }
        let before = induced_target_bracket(&sys, &pts)?;
        let after = induced_target_bracket(&nf.system, &pts)?;
        for (a, b) in before.transformed(&nf.transform).iter().zip(&after.values) {
            worst = worst.max((a - b).amax());
        }
    }
    Ok((worst < 1e-10 && exact, format!("f_1 = log|t'| exact: {exact}; bracket table deviation {worst:.2e}")))
}

fn lattices() -> Outcome {
    let mut worst_c = 0.0f64;
    let mut worst_off = 0.0f64;
    let mut worst_det = 0.0f64;
    for (r, s) in [(1, 1), (1, 3), (2, 2)] {
        for c in [1.0, 2.0, 3.7] {
            let e = standard_model(r, s, c)?;
            let st = &e.system.structure;
            let fields = e.system.integrals[..r].iter().map(|f| st.hamiltonian_field(f)).collect::<bsym::Result<Vec<_>>>()?;
            let refs: Vec<&dyn VectorField> = fields.iter().map(|f| f as &dyn VectorField).collect();
            let lat = period_lattice(&LatticeOptions::default(), st.chart(), &refs, &st.chart().center())?;
            worst_c = worst_c.max((lat.basis[0][0].abs() - c).abs());
            for v in &lat.basis[1..] {
                worst_off = worst_off.max(v[0].abs());
            }
            // closed-form flow: periods c along theta_1 and 1 along the others
            let m = nalgebra::DMatrix::from_fn(r, r, |i, j| lat.basis[i][j]);
            worst_det = worst_det.max((m.determinant().abs() - c).abs());
        }
    }
    Ok((
        worst_c < 1e-6 && worst_off < 1e-8 && worst_det < 1e-6,
        format!("||lambda_1^1| - c| {worst_c:.2e}, |lambda_i^1| {worst_off:.2e}, covolume {worst_det:.2e}"),
    ))
}

fn uniformized() -> Outcome {
    let e = scrambled(2.0)?;
    let aa = ActionAngleChart::build(&e.system, &PipelineOptions::default())?;
    let pts = SamplePlan::with_counts(10, 0).bulk_points(e.system.chart());
    let ret = aa.uniformization().check_returns(&pts, 1e-6)?;
    let lie = aa.uniformization().check_lie(&pts, 1e-7)?;
    Ok((
        ret.pass && lie.pass,
        format!("return residual {:.2e}, |L_Y w| {:.2e} on 10 tori", ret.max_residual, lie.max_residual),
    ))
}

fn actions() -> Outcome {
    let e = nonlinear_action(1.5)?;
    let aa = Arc::new(ActionAngleChart::build(&e.system, &PipelineOptions::default())?);
    let chart = e.system.structure.chart_arc();
    let pts = SamplePlan::with_counts(40, 0).bulk_points(&chart);
    let (mut closed, mut grad, mut cas) = (0.0f64, 0.0f64, 0.0f64);
    let fs: Vec<_> = aa.system().integrals.iter().map(|f| f.prepare(chart.clone())).collect();
    for p in &pts {
        let b = p[3];
        closed = closed.max((aa.action_smooth(1, p)? - (b + b * b / 2.0)).abs());
        for i in 0..aa.rank() {
            let a = aa.action_observable(i);
            grad = grad.max(amax(&a.b_gradient(p)?, &aa.alpha(i, p)?));
            for f in &fs {
                cas = cas.max(e.system.structure.bracket_at(p, &a, f)?.abs());
            }
        }
    }
    Ok((
        closed < 1e-10 && grad < 1e-6 && cas < 1e-6,
        format!("a_2 vs closed form {closed:.2e}, da_i vs alpha_i {grad:.2e}, {{a_i, f_j}} {cas:.2e}"),
    ))
}

fn end_to_end() -> Outcome {
    let mut detail = Vec::new();
    let mut pass = true;
    for c in [2.0, 3.7] {
        let e = scrambled(c)?;
        let aa = ActionAngleChart::build(&e.system, &PipelineOptions::default())?;
        let pts = SamplePlan::with_counts(200, 0).bulk_points(e.system.chart());
        let rep = verify_normal_form(aa.system(), &aa, &pts, PULLBACK_STEP, 1e-5)?;
        // an independent lattice at a Z point of the raw system
        let st = &e.system.structure;
        let fields = e.system.integrals.iter().map(|f| st.hamiltonian_field(f)).collect::<bsym::Result<Vec<_>>>()?;
        let refs: Vec<&dyn VectorField> = fields.iter().map(|f| f as &dyn VectorField).collect();
        let lat = period_lattice(&LatticeOptions::default(), st.chart(), &refs, &st.chart().center())?;
        let period = lat.modular_period.ok_or("base point off Z")?;
        let dc = (aa.modular_period() - period).abs();
        pass &= rep.pass && dc < 1e-6 && (period - c).abs() < 1e-6;
        detail.push(format!(
            "c={c}: deviation {:.2e}, theta-invariance {:.2e}, |c - lattice| {dc:.2e}",
            rep.deviation.max_residual, rep.theta_invariance.max_residual
        ));
    }
    Ok((pass, detail.join("; ")))
}

fn darboux() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut detail = Vec::new();
    let mut pass = true;
    for c in [1.0, 2.5] {
        let e = standard_model(2, 2, c)?;
        let m = vec![0.3, 0.6, 0.0, 0.1];
        let pts = common::near(&mut rng, e.system.chart(), &m, 0.05, 100);
        for fs in [vec![], vec![BFunction::smooth(Expr::var(3))]] {
            let dc = DarbouxChart::build(&e.system.structure, &fs, &m)?;
            let rep = dc.verify(&pts, 1e-5, 1e-5)?;
            pass &= rep.pass;
            detail.push(format!("c={c} k={}: {:.2e}", fs.len(), rep.deviation.max_residual));
        }
    }
    Ok((pass, detail.join(", ")))
}

fn modular_period(e: &bsym::gallery::GalleryEntry) -> f64 {
    e.facts
        .iter()
        .find_map(|f| match f {
            Fact::ModularPeriod { c } => Some(*c),
            _ => None,
        })
        .unwrap_or(1.0)
}

/// Largest `|t|` along the flow; the time is halved until the orbit stays
/// in the box.
fn drift(chart: &Chart, y: &dyn VectorField, p: &[f64], mut time: f64) -> bsym::Result<(f64, f64)> {
    let t = chart.t_index().expect("chart with Z");
    let integ = Integrator::default();
    loop {
        match integ.trajectory(chart, y, p, time) {
            Ok(tr) => return Ok((tr.states.iter().map(|q| q[t].abs()).fold(0.0, f64::max), time)),
            Err(Error::DomainExit { .. }) if time > 1e-3 => time /= 2.0,
            Err(e) => return Err(e),
        }
    }
}

fn z_tangency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    let mut shortest = f64::INFINITY;
    let mut torus_horizon = f64::INFINITY;
    let mut exact = true;
    let mut fields_seen = 0usize;
    let mut zero_t = |chart: &Chart, y: &dyn VectorField, p: &[f64]| -> bsym::Result<()> {
        let t = chart.t_index().expect("chart with Z");
        exact &= chart.smooth_components(p, &y.b_components(p)?)[t] == 0.0;
        fields_seen += 1;
        Ok(())
    };
    for e in all_entries()? {
        let st = &e.system.structure;
        let chart = st.chart();
        if !chart.has_z() {
            continue;
        }
        let c = modular_period(&e);
        let zpts = SamplePlan::with_counts(0, 5).z_points(chart);
        let mut fns = e.system.integrals.clone();
        fns.extend((0..10).map(|_| common::random_bfunction(&mut rng, chart)));
        for (k, f) in fns.iter().enumerate() {
            let x = st.hamiltonian_field(f)?;
            for p in &zpts {
                zero_t(chart, &x, p)?;
                if k < e.system.integrals.len() {
                    let (d, time) = drift(chart, &x, p, 10.0 * c)?;
                    worst = worst.max(d);
                    shortest = shortest.min(time / c);
                    if k < e.system.rank && e.facts.iter().any(|f| matches!(f, Fact::ModularPeriod { .. })) {
                        torus_horizon = torus_horizon.min(time / c);
                    }
                }
            }
        }
    }
    for e in [standard_model(2, 2, 1.0)?, scrambled(2.0)?, nonlinear_action(1.5)?] {
        let aa = ActionAngleChart::build(&e.system, &PipelineOptions::default())?;
        let chart = e.system.chart();
        let c = aa.modular_period();
        let u = aa.uniformization();
        for p in SamplePlan::with_counts(0, 5).z_points(chart) {
            for y in [u.field(0), u.field(1), u.combination(&[0.3, -0.7])] {
                zero_t(chart, &y, &p)?;
                let (d, time) = drift(chart, &y, &p, 10.0 * c)?;
                worst = worst.max(d);
                torus_horizon = torus_horizon.min(time / c);
            }
        }
    }
    Ok((
        worst < 1e-10 && exact && torus_horizon >= 10.0,
        format!(
            "max |t| on Z orbits {worst:.1e} (torus flows over {torus_horizon} c, flows leaving the box over >= {shortest:.2} c), \
             smooth t-component exactly 0 for {fields_seen} field samples: {exact}"
        ),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("so(3) bracket table", so3_brackets),
        ("counterexample rejection", counterexample),
        ("Jacobi identity", jacobi),
        ("normal form", normal_forms),
        ("period lattice", lattices),
        ("uniformized action", uniformized),
        ("action coordinates", actions),
        ("end-to-end action-angle chart", end_to_end),
        ("Darboux-Caratheodory chart", darboux),
        ("Z-tangency", z_tangency),
    ];
    let mut failures = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        failures += usize::from(!pass);
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {} {name}: {verdict} {detail} [{:.1}s]", n + 1, start.elapsed().as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
