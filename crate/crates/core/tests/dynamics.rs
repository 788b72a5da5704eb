use nalgebra::DMatrix;
use proptest::prelude::*;

use bsym::dynamics::lattice::normalize_basis;
use bsym::dynamics::{period_lattice, Integrator, LatticeOptions};
use bsym::gallery::{galilean, nonlinear_action, standard_model};
use bsym::{BFunction, Error, Expr, Observable, VectorField};

fn matrix(b: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(b.len(), b.len(), |i, j| b[i][j])
}

fn unimodular(entries: &[i32]) -> DMatrix<f64> {
    // lower times upper triangular with unit diagonals
    let n = (entries.len() as f64).sqrt() as usize;
    let l = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else if i > j { entries[i * n + j] as f64 } else { 0.0 });
    let u = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else if i < j { entries[i * n + j] as f64 } else { 0.0 });
    l * u
}

proptest! {
    #[test]
    fn normalized_bases_span_the_same_lattice(
        entries in prop::collection::vec(-3i32..=3, 9),
        c in 0.5f64..4.0,
        shear in -0.5f64..0.5,
    ) {
        let base = DMatrix::from_row_slice(3, 3, &[c, 0.3, shear, 0.0, 1.0, 0.0, 0.0, shear, 0.5]);
        let scrambled = unimodular(&entries) * &base;
        let rows: Vec<Vec<f64>> = (0..3).map(|i| scrambled.row(i).iter().cloned().collect()).collect();
        let out = normalize_basis(rows);
        prop_assert!((out[0][0] + c).abs() < 1e-9);
        for (i, v) in out.iter().enumerate() {
            let lead = if v[i].abs() > 1e-12 { v[i] } else { *v.iter().find(|x| x.abs() > 1e-12).unwrap() };
            prop_assert!(lead < 0.0);
            if i > 0 {
                prop_assert_eq!(v[0], 0.0);
            }
        }
        let change = matrix(&out) * base.try_inverse().unwrap();
        for x in change.iter() {
            prop_assert!((x - x.round()).abs() < 1e-8);
        }
        prop_assert!((change.determinant().abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn flows_conserve_their_hamiltonian(x0 in -0.8f64..0.8, y0 in -0.8f64..0.8, time in 0.1f64..3.0) {
        let e = galilean("translations").unwrap();
        let s = &e.system.structure;
        let h = BFunction::smooth(Expr::var(0).powi(2) * 0.5 + Expr::var(3).powi(2) * 0.5 + Expr::var(0).powi(4) * 0.1);
        let x = s.hamiltonian_field(&h).unwrap();
        let p0 = vec![x0, 0.0, 0.0, y0, 0.0, 0.0];
        let integ = Integrator::default();
        let p1 = integ.endpoint(s.chart(), &x, &p0, time).unwrap();
        let hp = h.prepare(s.chart_arc());
        prop_assert!((hp.value(&p1).unwrap() - hp.value(&p0).unwrap()).abs() < 1e-11);
        let back = integ.endpoint(s.chart(), &x, &p1, -time).unwrap();
        for (a, b) in back.iter().zip(&p0) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn harmonic_oscillator_rotates() {
    // X_H = x d/dy - y d/dx for H = (x^2 + y^2)/2
    let e = galilean("translations").unwrap();
    let s = &e.system.structure;
    let h = BFunction::smooth(Expr::var(0).powi(2) * 0.5 + Expr::var(3).powi(2) * 0.5);
    let x = s.hamiltonian_field(&h).unwrap();
    let (x0, y0) = (0.6, -0.3);
    let times: Vec<f64> = (1..=20).map(|k| 0.37 * k as f64).collect();
    let states = Integrator::default().sample(s.chart(), &x, &[x0, 0.0, 0.0, y0, 0.0, 0.0], &times).unwrap();
    for (t, q) in times.iter().zip(states) {
        assert!((q[0] - (x0 * t.cos() - y0 * t.sin())).abs() < 1e-10);
        assert!((q[3] - (x0 * t.sin() + y0 * t.cos())).abs() < 1e-10);
    }
}

#[test]
fn leaving_the_box_is_an_error() {
    let e = galilean("translations").unwrap();
    let s = &e.system.structure;
    let x = s.hamiltonian_field(&BFunction::smooth(Expr::var(0))).unwrap();
    let r = Integrator::default().endpoint(s.chart(), &x, &[0.0; 6], 5.0);
    assert!(matches!(r, Err(Error::DomainExit { .. })));
}

#[test]
fn angles_wrap_and_t_is_pinned_on_z() {
    let e = standard_model(2, 2, 1.5).unwrap();
    let s = &e.system.structure;
    let x = s.hamiltonian_field(&e.system.integrals[1]).unwrap();
    let p0 = vec![0.9, 0.2, 0.0, 0.1];
    let p1 = Integrator::default().endpoint(s.chart(), &x, &p0, 0.35).unwrap();
    assert!((p1[1] - 0.55).abs() < 1e-12 || (p1[1] - 0.85).abs() < 1e-12, "{p1:?}");
    assert_eq!(p1[2], 0.0);
    assert_eq!(p1[3], 0.1);
}

#[test]
fn lattice_of_a_nonlinear_action_off_the_axis() {
    // lambda_2 = (0, -(1 + pi2)) in closed form
    let e = nonlinear_action(1.5).unwrap();
    let s = &e.system.structure;
    let fields: Vec<_> = e.system.integrals.iter().map(|f| s.hamiltonian_field(f).unwrap()).collect();
    let refs: Vec<&dyn VectorField> = fields.iter().map(|f| f as &dyn VectorField).collect();
    for pi2 in [-0.3, 0.0, 0.25] {
        let lat = period_lattice(&LatticeOptions::default(), s.chart(), &refs, &[0.1, 0.2, 0.0, pi2]).unwrap();
        assert!((lat.basis[0][0] + 1.5).abs() < 1e-6);
        assert!(lat.basis[1][0].abs() < 1e-8);
        assert!((lat.basis[1][1] + 1.0 + pi2).abs() < 1e-6, "{:?}", lat.basis);
        assert_eq!(lat.modular_period.map(|c| (c - 1.5).abs() < 1e-6), Some(true));
    }
}

#[test]
fn rank_zero_has_no_lattice() {
    let e = standard_model(1, 1, 1.0).unwrap();
    let s = &e.system.structure;
    assert!(period_lattice(&LatticeOptions::default(), s.chart(), &[], &s.chart().center()).is_err());
}
