use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use bsym::gallery::{all_entries, Fact};

fn bsym(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bsym"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn verify_exit_codes_follow_the_gallery() {
    let dir = tempfile::tempdir().unwrap();
    for e in all_entries().unwrap() {
        let expected = e.facts.iter().find_map(|f| match f {
            Fact::Verifier { pass, failing } => Some((*pass, failing.clone())),
            _ => None,
        });
        let Some((pass, failing)) = expected else { continue };
        let out = dir.path().join(e.name.replace([':', ','], "_"));
        let o = bsym(&["verify", "--gallery", &e.name, "--samples", "60"], &out);
        assert_eq!(o.status.code(), Some(if pass { 0 } else { 1 }), "{}", e.name);
        let report = json(&out.join("verify.json"));
        assert_eq!(report["schema"], 1);
        let got: Vec<usize> =
            report["failed_conditions"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).collect();
        assert_eq!(got, failing, "{}", e.name);
    }
}

#[test]
fn counterexample_report_names_condition_four() {
    let dir = tempfile::tempdir().unwrap();
    let o = bsym(&["verify", "--gallery", "counterexample_2d"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let report = json(&dir.path().join("verify.json"));
    assert_eq!(report["failed_conditions"], serde_json::json!([4]));
    assert_eq!(report["report"]["z_independence"]["pass"], false);
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let o = bsym(&["verify", "--file", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = bsym(&["verify", "--gallery", "no_such_system"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = bsym(&["verify", "--gallery", "galilean:b_so3_r3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = bsym(&["verify", "--gallery", "galilean:b_s1", "--tol", "-1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = bsym(&["trace", "--gallery", "standard_model:1,1,1", "--point", "0.5,9"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exported_descriptors_verify_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = bsym(&["export", "--gallery", "galilean:b_s1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let file = dir.path().join("galilean_b_s1.json");
    let o = bsym(&["verify", "--file", file.to_str().unwrap()], &dir.path().join("v"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&dir.path().join("v/verify.json"))["system"], "galilean:b_s1");
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = bsym(&["action-angle", "--gallery", "standard_model:1,1,2", "--samples", "40", "--seed", "7"], out);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["action_angle.json", "chart.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(a.join("metadata.json").exists());
}

#[test]
fn action_angle_recovers_the_modular_period() {
    let dir = tempfile::tempdir().unwrap();
    let o = bsym(&["action-angle", "--gallery", "standard_model:1,1,2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = json(&dir.path().join("action_angle.json"));
    assert!((r["modular_period"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    let chart = json(&dir.path().join("chart.json"));
    assert_eq!(chart["schema"], 1);
}

#[test]
fn action_angle_on_the_four_dimensional_model() {
    let dir = tempfile::tempdir().unwrap();
    let o = bsym(&["action-angle", "--gallery", "standard_model:2,2,1", "--samples", "60"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = json(&dir.path().join("action_angle.json"));
    assert!(r["normal_form"]["deviation"]["max_residual"].as_f64().unwrap() < 1e-5);
    // an impossible tolerance fails with exit 1
    let o = bsym(&["action-angle", "--gallery", "standard_model:2,2,1", "--samples", "20", "--tol", "1e-14"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn action_angle_refuses_non_verifying_systems() {
    let dir = tempfile::tempdir().unwrap();
    let o = bsym(&["action-angle", "--gallery", "counterexample_2d"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("action_angle.json").exists());
}

#[test]
fn traces_on_z_stay_on_z_and_close_after_one_period() {
    let dir = tempfile::tempdir().unwrap();
    let o = bsym(
        &["trace", "--gallery", "standard_model:2,2,1.5", "--time", "1.5", "--point", "0.1,0.2,0,0.3", "--integral", "1,2"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let f1 = rows(&dir.path().join("trace_f1.csv"));
    assert_eq!(f1.len(), 201);
    assert!(f1.iter().all(|r| r[3].abs() < 1e-10));
    let (first, last) = (&f1[0], &f1[f1.len() - 1]);
    for i in 1..first.len() {
        let d = (first[i] - last[i]).abs();
        assert!(d.min(1.0 - d) < 1e-6, "{first:?} {last:?}");
    }
    let header = fs::read_to_string(dir.path().join("trace_f2.csv")).unwrap();
    assert!(header.starts_with("t_sim,theta1,theta2,pi1,pi2\n"));
}

#[test]
fn zero_time_span_gives_the_initial_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = bsym(&["trace", "--gallery", "standard_model:1,1,1", "--time", "0", "--point", "0.25,-0.1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(rows(&dir.path().join("trace_f1.csv")), vec![vec![0.0, 0.25, -0.1]]);
}

#[test]
fn domain_exit_keeps_the_valid_part() {
    let dir = tempfile::tempdir().unwrap();
    let o = bsym(&["trace", "--gallery", "galilean:translations", "--time", "10", "--integral", "1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("last valid state"));
    let r = rows(&dir.path().join("trace_f1.csv"));
    assert!(!r.is_empty() && r.last().unwrap()[0] < 2.0);
}
