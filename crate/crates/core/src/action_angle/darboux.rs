//! Local Darboux–Carathéodory charts at a point of `Z`: given commuting
//! smooth `f_1..f_k`, coordinates `(f, g, t, q_1, p_2, q_2, ..)` with
//! `w = sum df_i ^ dg_i + (1/t) dt ^ dq_1 + sum dp_j ^ dq_j`.
//!
//! The `g_i` are flow times of `X_{f_i}` back to a transversal; the other
//! coordinates are linear on that transversal, with covectors from a
//! symplectic basis of the b-cotangent space at the centre.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bfunction::{BFunction, PreparedFunction};
use crate::dynamics::integrator::{joint_flow, Integrator};
use crate::error::{Error, Result};
use crate::form::VectorField;
use crate::observable::{displaced, Observable};
use crate::poisson::{BSymplecticStructure, HamiltonianField};
use crate::report::{CheckReport, SCHEMA};

const ISOTROPY_TOL: f64 = 1e-8;

#[derive(Clone)]
pub struct DarbouxChart {
    structure: BSymplecticStructure,
    functions: Vec<PreparedFunction>,
    fields: Vec<HamiltonianField>,
    centre: Vec<f64>,
    /// b-coframe covectors with zero `dt/t` component: `g_1..g_k`, `q_1`,
    /// then `p_2, q_2, ..`.
    linear: Vec<Vec<f64>>,
    integrator: Integrator,
    /// Smallest singular value of the chart covectors at the centre.
    pub min_singular_value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DarbouxReport {
    pub schema: u32,
    pub k: usize,
    pub min_singular_value: f64,
    pub deviation: CheckReport,
    pub pass: bool,
}

fn null_space(rows: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let n = rows.ncols();
    let svd = rows.clone().svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax.max(1.0)).count();
    // v_t has min(m, n) rows; complete to a full basis
    let mut basis: Vec<DVector<f64>> = (0..rank).map(|i| vt.row(i).transpose()).collect();
    let mut out = Vec::new();
    for e in 0..n {
        let mut v = DVector::zeros(n);
        v[e] = 1.0;
        for b in basis.iter() {
            v -= b * b.dot(&v);
        }
        let nv = v.norm();
        if nv > 1e-8 {
            v /= nv;
            basis.push(v.clone());
            out.push(v);
        }
        if rank + out.len() == n {
            break;
        }
    }
    out
}

impl DarbouxChart {
    /// Builds the chart centred at `m` on `Z`.
    pub fn build(structure: &BSymplecticStructure, functions: &[BFunction], m: &[f64]) -> Result<Self> {
        let chart = structure.chart();
        if !chart.on_z(m) {
            return Err(Error::InvalidChart("centre must lie on Z".into()));
        }
        let dim = chart.dim();
        let k = functions.len();
        let prepared: Vec<PreparedFunction> = functions.iter().map(|f| f.prepare(structure.chart_arc())).collect();
        let omega = structure.matrix(m)?;
        let p = structure.poisson_matrix(m)?;
        let mut alpha: Vec<DVector<f64>> =
            prepared.iter().map(|f| Ok(DVector::from_vec(f.b_gradient(m)?))).collect::<Result<_>>()?;
        let mut e0 = DVector::zeros(dim);
        e0[0] = 1.0;
        alpha.push(e0);
        for i in 0..=k {
            for j in (i + 1)..=k {
                let b = alpha[i].dot(&(&p * &alpha[j]));
                if b.abs() > ISOTROPY_TOL {
                    return Err(Error::NonCommuting(b.abs()));
                }
            }
        }
        let a = DMatrix::from_columns(&alpha);
        let sv = a.clone().singular_values();
        if sv.iter().any(|&s| s < 1e-8) {
            return Err(Error::Dependent);
        }
        // q_1: iota_{t d/dt} w, so that P(v, zeta) = v_0 for every covector v
        let zeta = -(&omega * DVector::from_fn(dim, |i, _| if i == 0 { 1.0 } else { 0.0 }));
        // conjugates: P(alpha_i, beta_j) = delta_ij, P(zeta, beta_j) = 0
        let mut rows = DMatrix::zeros(k + 2, dim);
        for (i, al) in alpha.iter().enumerate() {
            rows.set_row(i, &(al.transpose() * &p));
        }
        rows.set_row(k + 1, &(zeta.transpose() * &p));
        let pinv = rows.clone().pseudo_inverse(1e-12).map_err(|_| Error::Dependent)?;
        let mut beta: Vec<DVector<f64>> = (0..k).map(|j| pinv.column(j).clone_owned()).collect();
        let g = DMatrix::from_fn(k, k, |i, j| beta[i].dot(&(&p * &beta[j])));
        for i in 0..k {
            for l in 0..k {
                if i != l {
                    beta[i] += &alpha[l] * (-g[(i, l)] / 2.0);
                }
            }
        }
        beta.push(zeta);
        let mut span: Vec<DVector<f64>> = alpha.clone();
        span.extend(beta.iter().cloned());
        let constraint = DMatrix::from_fn(span.len(), dim, |i, j| (span[i].transpose() * &p)[j]);
        let mut rest = null_space(&constraint);
        let mut pairs: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();
        while let Some(e) = rest.pop() {
            let Some(pos) = rest
                .iter()
                .enumerate()
                .map(|(i, v)| (i, e.dot(&(&p * v)).abs()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(i, _)| i)
            else {
                return Err(Error::Degenerate { point: m.to_vec(), det: 0.0 });
            };
            let f = rest.swap_remove(pos);
            let s = e.dot(&(&p * &f));
            let f = f / s;
            for u in rest.iter_mut() {
                let (pue, puf) = (u.dot(&(&p * &e)), u.dot(&(&p * &f)));
                *u = &*u - &e * puf + &f * pue;
            }
            pairs.push((e, f));
        }
        let mut linear: Vec<Vec<f64>> = beta.iter().map(|b| b.iter().cloned().collect()).collect();
        for (e, f) in &pairs {
            linear.push(e.iter().cloned().collect());
            linear.push(f.iter().cloned().collect());
        }
        let mut all: Vec<DVector<f64>> = alpha[..k].to_vec();
        all.extend(beta.iter().take(k).cloned());
        all.push(alpha[k].clone());
        all.push(beta[k].clone());
        for (e, f) in &pairs {
            all.push(e.clone());
            all.push(f.clone());
        }
        let full = DMatrix::from_columns(&all);
        let min_singular_value = full.singular_values().iter().cloned().fold(f64::INFINITY, f64::min);
        let fields = functions.iter().map(|f| structure.hamiltonian_field(f)).collect::<Result<Vec<_>>>()?;
        Ok(DarbouxChart {
            structure: structure.clone(),
            functions: prepared,
            fields,
            centre: m.to_vec(),
            linear,
            integrator: Integrator::default(),
            min_singular_value,
        })
    }

    pub fn k(&self) -> usize {
        self.functions.len()
    }

    fn ell(&self, cov: &[f64], y: &[f64]) -> f64 {
        let chart = self.structure.chart();
        let d = chart.difference(y, &self.centre);
        (1..cov.len()).map(|a| cov[a] * d[chart.slot_coord(a)]).sum()
    }

    /// Flow times `g` and landing point on the transversal `{ell_{beta_i} = 0}`.
    fn land(&self, x: &[f64], hint: Option<&[f64]>) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.k();
        let chart = self.structure.chart();
        let fields: Vec<&dyn VectorField> = self.fields.iter().map(|f| f as &dyn VectorField).collect();
        let mut s: Vec<f64> = match hint {
            Some(h) => h.iter().map(|g| -g).collect(),
            None => (0..k).map(|i| -self.ell(&self.linear[i], x)).collect(),
        };
        let mut y = joint_flow(&self.integrator, chart, &fields, x, &s)?;
        for _ in 0..30 {
            let res = DVector::from_fn(k, |i, _| self.ell(&self.linear[i], &y));
            if res.amax() < 1e-14 {
                break;
            }
            let mut jac = DMatrix::zeros(k, k);
            for j in 0..k {
                let v = self.fields[j].b_components(&y)?;
                for i in 0..k {
                    jac[(i, j)] = (1..v.len()).map(|a| self.linear[i][a] * v[a]).sum::<f64>();
                }
            }
            let delta = jac.lu().solve(&res).ok_or(Error::Shooting(res.amax()))?;
            for (a, d) in s.iter_mut().zip(delta.iter()) {
                *a -= d;
            }
            y = joint_flow(&self.integrator, chart, &fields, x, &s)?;
            if delta.amax() < 1e-15 {
                break;
            }
        }
        let res = (0..k).map(|i| self.ell(&self.linear[i], &y).abs()).fold(0.0f64, f64::max);
        if res > 1e-10 {
            return Err(Error::Shooting(res));
        }
        Ok((s.iter().map(|v| -v).collect(), y))
    }

    /// `(f_1..f_k, g_1..g_k, log|t|, q_1, p_2, q_2, ..)` at `x` (off `Z`).
    pub fn coordinates(&self, x: &[f64], hint: Option<&[f64]>) -> Result<Vec<f64>> {
        let k = self.k();
        let chart = self.structure.chart();
        let (g, y) = self.land(x, hint)?;
        let mut out = Vec::with_capacity(chart.dim());
        for f in &self.functions {
            out.push(f.value(x)?);
        }
        out.extend(g);
        let t = chart.t_value(&y).unwrap_or(0.0);
        out.push(t.abs().ln());
        for cov in &self.linear[k..] {
            out.push(self.ell(cov, &y));
        }
        Ok(out)
    }

    /// The target form in the coordinate order of [`Self::coordinates`].
    pub fn target_matrix(&self) -> DMatrix<f64> {
        let dim = self.structure.dim();
        let k = self.k();
        let mut m = DMatrix::zeros(dim, dim);
        let mut put = |i: usize, j: usize| {
            m[(i, j)] = 1.0;
            m[(j, i)] = -1.0;
        };
        for i in 0..k {
            put(i, k + i);
        }
        let mut i = 2 * k;
        while i + 1 < dim {
            put(i, i + 1);
            i += 2;
        }
        m
    }

    /// Pulls the target form back by central b-frame differences and
    /// compares with `w` at off-`Z` points.
    pub fn verify(&self, points: &[Vec<f64>], h: f64, tol: f64) -> Result<DarbouxReport> {
        let chart = self.structure.chart();
        let dim = chart.dim();
        let k = self.k();
        let target = self.target_matrix();
        let mut rep = CheckReport::new("darboux_caratheodory");
        for x in points {
            let centre = self.coordinates(x, None)?;
            let hint = centre[k..2 * k].to_vec();
            let mut jac = DMatrix::zeros(dim, dim);
            for a in 0..dim {
                let plus = self.coordinates(&displaced(chart, x, a, h), Some(&hint))?;
                let minus = self.coordinates(&displaced(chart, x, a, -h), Some(&hint))?;
                for c in 0..dim {
                    jac[(c, a)] = (plus[c] - minus[c]) / (2.0 * h);
                }
            }
            let dev = (jac.transpose() * &target * &jac - self.structure.matrix(x)?).amax();
            rep.record(x.clone(), dev, dev < tol);
        }
        let pass = rep.pass && self.min_singular_value > 1e-8;
        Ok(DarbouxReport { schema: SCHEMA, k, min_singular_value: self.min_singular_value, deviation: rep, pass })
    }
}
