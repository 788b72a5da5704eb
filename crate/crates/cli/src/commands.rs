use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use serde::Serialize;
use serde_json::json;

use bsym::action_angle::verify::{verify_normal_form, PULLBACK_STEP, PULLBACK_TOL};
use bsym::action_angle::{ActionAngleChart, NormalFormReport, PipelineOptions};
use bsym::dynamics::{Integrator, PeriodLatticeBasis};
use bsym::gallery::by_name;
use bsym::report::SCHEMA;
use bsym::systems::{verify_system_with, SystemReport, VerifyTolerances, INVOLUTION_TOL};
use bsym::{Error, SamplePlan};

use crate::source::load;
use crate::{Common, Failure};

fn write_json<T: Serialize>(dir: &Path, file: &str, value: &T) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(file);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

/// Run details that change between identical runs live here, not in reports.
fn write_metadata(dir: &Path, command: &str) -> anyhow::Result<()> {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = json!({
        "command": command,
        "args": std::env::args().skip(1).collect::<Vec<_>>(),
        "version": env!("CARGO_PKG_VERSION"),
        "unix_time": now,
    });
    write_json(dir, "metadata.json", &meta)
}

fn plan(common: &Common, default: usize) -> SamplePlan {
    let bulk = common.samples.unwrap_or(default);
    SamplePlan { bulk, on_z: bulk / 2, seed: common.seed, ..Default::default() }
}

fn positive(tol: Option<f64>, default: f64) -> Result<f64, Failure> {
    match tol {
        Some(t) if !(t > 0.0) => Err(Failure::Input(anyhow!("tolerance must be positive, got {t}"))),
        Some(t) => Ok(t),
        None => Ok(default),
    }
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    schema: u32,
    system: &'a str,
    samples: SamplePlan,
    tolerances: VerifyTolerances,
    failed_conditions: Vec<usize>,
    report: &'a SystemReport,
}

pub fn verify(common: &Common, rank_tol: f64) -> Result<bool, Failure> {
    let (name, sys) = load(common)?;
    let tol = VerifyTolerances { rank: positive(Some(rank_tol), 0.0)?, involution: positive(common.tol, INVOLUTION_TOL)? };
    let plan = plan(common, 200);
    let report = verify_system_with(&sys, &plan, &tol)?;
    let failed = report.failed();
    let out = VerifyOutput {
        schema: SCHEMA,
        system: &name,
        samples: plan,
        tolerances: tol,
        failed_conditions: failed.clone(),
        report: &report,
    };
    write_json(&common.out, "verify.json", &out)?;
    write_metadata(&common.out, "verify")?;
    if failed.is_empty() {
        println!("{name}: all four conditions hold");
    } else {
        println!("{name}: failing conditions {failed:?}");
    }
    Ok(report.pass)
}

fn stage_of(e: &Error) -> &'static str {
    match e {
        Error::NoBIntegral | Error::NotFBasic(..) => "normal_form",
        Error::NoReturn | Error::SingularMonodromy => "period_lattice",
        Error::GridTooCoarse(_) => "uniformize",
        Error::Quadrature(_) => "action_coordinates",
        Error::Shooting(_) => "angle_coordinates",
        Error::NotStandardModel(_) | Error::Dimension(_) => "standard_model_form",
        _ => "pipeline",
    }
}

#[derive(Serialize)]
struct ActionAngleOutput<'a> {
    schema: u32,
    system: &'a str,
    modular_period: f64,
    lattice: &'a PeriodLatticeBasis,
    tolerance: f64,
    samples: SamplePlan,
    normal_form: &'a NormalFormReport,
    pass: bool,
}

pub fn action_angle(common: &Common, nodes: usize, export_samples: usize) -> Result<bool, Failure> {
    let (name, sys) = load(common)?;
    let tol = positive(common.tol, PULLBACK_TOL)?;
    let check = verify_system_with(&sys, &plan(common, 100), &VerifyTolerances::default())?;
    if !check.pass {
        println!("{name}: system does not verify (failing conditions {:?}); pipeline not run", check.failed());
        return Ok(false);
    }
    let opts = PipelineOptions { nodes_per_dim: nodes, ..Default::default() };
    let aa = ActionAngleChart::build(&sys, &opts).map_err(|e| anyhow!("stage {}: {e}", stage_of(&e)))?;
    let plan = plan(common, 200);
    let points = plan.bulk_points(aa.chart());
    let report = verify_normal_form(aa.system(), &aa, &points, PULLBACK_STEP, tol)
        .map_err(|e| anyhow!("stage {}: {e}", stage_of(&e)))?;
    let export = aa
        .export(&SamplePlan { bulk: export_samples, ..plan })
        .map_err(|e| anyhow!("stage export: {e}"))?;
    let out = ActionAngleOutput {
        schema: SCHEMA,
        system: &name,
        modular_period: aa.modular_period(),
        lattice: aa.lattice(),
        tolerance: tol,
        samples: plan,
        normal_form: &report,
        pass: report.pass,
    };
    write_json(&common.out, "action_angle.json", &out)?;
    write_json(&common.out, "chart.json", &export)?;
    write_metadata(&common.out, "action-angle")?;
    println!(
        "{name}: modular period {}, normal-form deviation {:e} (tolerance {tol:e})",
        aa.modular_period(),
        report.deviation.max_residual
    );
    Ok(report.pass)
}

pub fn trace(common: &Common, time: f64, point: Option<Vec<f64>>, integral: Option<Vec<usize>>) -> Result<bool, Failure> {
    let (_, sys) = load(common)?;
    let chart = sys.chart();
    let p0 = point.unwrap_or_else(|| chart.center());
    chart.check(&p0).map_err(|e| Failure::Input(anyhow!(e).context("initial point")))?;
    if !time.is_finite() {
        return Err(Failure::Input(anyhow!("time span must be finite")));
    }
    let which = integral.unwrap_or_else(|| (1..=sys.s()).collect());
    if let Some(&k) = which.iter().find(|&&k| k == 0 || k > sys.s()) {
        return Err(Failure::Input(anyhow!("integral index {k} outside 1..={}", sys.s())));
    }
    let rows = common.samples.unwrap_or(200).max(1);
    let times: Vec<f64> =
        if time == 0.0 { vec![0.0] } else { (0..=rows).map(|k| time * k as f64 / rows as f64).collect() };
    let integ = Integrator::default();
    let mut complete = true;
    for k in which {
        let field = sys.structure.hamiltonian_field(&sys.integrals[k - 1])?;
        let (kept, states) = match integ.sample(chart, &field, &p0, &times) {
            Ok(s) => (times.clone(), s),
            Err(Error::DomainExit { time: t_exit, state }) => {
                eprintln!("f{k}: left the domain at t = {t_exit}; last valid state {state:?}");
                complete = false;
                let kept: Vec<f64> = times.iter().cloned().filter(|t| t.abs() < t_exit.abs()).collect();
                let states = integ.sample(chart, &field, &p0, &kept)?;
                (kept, states)
            }
            Err(e) => return Err(e.into()),
        };
        fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
        let path = common.out.join(format!("trace_f{k}.csv"));
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        let mut header = vec!["t_sim".to_string()];
        header.extend(chart.names().iter().cloned());
        w.write_record(&header)?;
        for (t, q) in kept.iter().zip(states) {
            let mut row = vec![t.to_string()];
            row.extend(q.iter().map(|x| x.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        println!("wrote {}", path.display());
    }
    write_metadata(&common.out, "trace")?;
    Ok(complete)
}

pub fn export(common: &Common) -> Result<bool, Failure> {
    let name = common.gallery.as_ref().ok_or_else(|| Failure::Input(anyhow!("export needs --gallery")))?;
    let e = by_name(name).map_err(|e| Failure::Input(anyhow!(e)))?;
    let file = format!("{}.json", e.name.replace([':', ','], "_"));
    write_json(&common.out, &file, &e.descriptor())?;
    println!("wrote {}", common.out.join(file).display());
    Ok(true)
}
