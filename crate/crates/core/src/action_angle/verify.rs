//! Numerical check that a coordinate map pulls the action-angle normal form
//! back to the given b-symplectic form.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::observable::displaced;
use crate::report::{CheckReport, SCHEMA};
use crate::systems::NCBSystem;

pub const PULLBACK_STEP: f64 = 1e-5;
pub const PULLBACK_TOL: f64 = 1e-5;
pub const INVARIANCE_TOL: f64 = 1e-8;

/// A candidate action-angle chart.
///
/// `smooth_coordinates` returns `(theta_1..theta_r, w, a_2..a_r, p_1, q_1, ..)`
/// where `log|t_hat| = log|t| + w`; angles are `R/Z`-valued.
pub trait NormalFormMap {
    fn rank(&self) -> usize;
    fn pairs(&self) -> usize;
    fn modular_period(&self) -> f64;
    fn smooth_coordinates(&self, p: &[f64], hint: Option<&[f64]>) -> Result<Vec<f64>>;

    /// Points on the torus through `p`.
    fn orbit(&self, _p: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(Vec::new())
    }
}

/// The normal form in the coordinates `(theta, log|t_hat|, a_2.., p, q)`.
pub fn normal_form_matrix(rank: usize, pairs: usize, c: f64) -> DMatrix<f64> {
    let n = 2 * (rank + pairs);
    let mut m = DMatrix::zeros(n, n);
    let mut put = |i: usize, j: usize, v: f64| {
        m[(i, j)] = v;
        m[(j, i)] = -v;
    };
    put(0, rank, c);
    for i in 1..rank {
        put(i, rank + i, 1.0);
    }
    for k in 0..pairs {
        put(2 * rank + 2 * k, 2 * rank + 2 * k + 1, 1.0);
    }
    m
}

/// b-frame Jacobian `J[(k, a)] = D_a Psi_k` of the map at `p`, with the
/// `log|t_hat|` row carrying the exact `D_0 log|t| = 1`.
pub fn b_jacobian(sys: &NCBSystem, map: &dyn NormalFormMap, p: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let chart = sys.chart();
    let r = map.rank();
    let dim = chart.dim();
    let centre = map.smooth_coordinates(p, None)?;
    let hint = centre[..r].to_vec();
    let mut jac = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        if !(a == 0 && chart.on_z(p)) {
            let plus = map.smooth_coordinates(&displaced(chart, p, a, h), Some(&hint))?;
            let minus = map.smooth_coordinates(&displaced(chart, p, a, -h), Some(&hint))?;
            for k in 0..dim {
                let mut d = plus[k] - minus[k];
                if k < r {
                    d -= d.round();
                }
                jac[(k, a)] = d / (2.0 * h);
            }
        }
        if a == 0 && chart.has_z() {
            jac[(r, 0)] += 1.0;
        }
    }
    Ok(jac)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalFormReport {
    pub schema: u32,
    pub modular_period: f64,
    /// Entrywise deviation of the pulled-back normal form from the form.
    pub deviation: CheckReport,
    /// Spread of the integrals over torus orbits.
    pub theta_invariance: CheckReport,
    pub pass: bool,
}

/// Compares `Psi^* w_normal` with `w` at `points`, and checks that every
/// integral is constant on the orbits offered by the map.
pub fn verify_normal_form(
    sys: &NCBSystem,
    map: &dyn NormalFormMap,
    points: &[Vec<f64>],
    h: f64,
    tol: f64,
) -> Result<NormalFormReport> {
    let c = map.modular_period();
    let target = normal_form_matrix(map.rank(), map.pairs(), c);
    let mut deviation = CheckReport::new("normal_form_pullback");
    let mut invariance = CheckReport::new("theta_invariance");
    let obs = sys.observables();
    for p in points {
        let jac = b_jacobian(sys, map, p, h)?;
        let pulled = jac.transpose() * &target * &jac;
        let dev = (pulled - sys.structure.matrix(p)?).amax();
        deviation.record(p.clone(), dev, dev < tol);

        let base: Vec<f64> = obs.iter().map(|f| f.value(p)).collect::<Result<_>>()?;
        let mut spread = 0.0f64;
        for q in map.orbit(p)? {
            for (f, v0) in obs.iter().zip(&base) {
                let v = f.value(&q)?;
                if v.is_finite() && v0.is_finite() {
                    spread = spread.max((v - v0).abs());
                }
            }
        }
        invariance.record(p.clone(), spread, spread < INVARIANCE_TOL);
    }
    let pass = deviation.pass && invariance.pass;
    Ok(NormalFormReport { schema: SCHEMA, modular_period: c, deviation, theta_invariance: invariance, pass })
}
