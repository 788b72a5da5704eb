//! Period lattices of the joint flow on a Liouville torus.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chart::Chart;
use crate::dynamics::integrator::{joint_flow, Integrator};
use crate::error::{Error, Result};
use crate::form::VectorField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeOptions {
    /// Scan box: `s_1` in `[0, extent]`, the others in `[-extent, extent]`.
    pub extent: f64,
    pub step: f64,
    /// Grid minima below this residual are refined.
    pub accept: f64,
    /// Refined returns must close to this residual.
    pub tol: f64,
    /// Finite-difference step for the monodromy.
    pub fd_step: f64,
    pub integrator: Integrator,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        LatticeOptions {
            extent: 5.0,
            step: 0.1,
            accept: 0.25,
            tol: 1e-8,
            fd_step: 1e-6,
            integrator: Integrator::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodLatticeBasis {
    pub base_point: Vec<f64>,
    /// `basis[i][j] = lambda_i^j`.
    pub basis: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// `|lambda_1^1|` when the base point lies on `Z`.
    pub modular_period: Option<f64>,
}

/// Wrapped displacement `Phi^s(p0) - p0`.
pub fn return_residual(
    integ: &Integrator,
    chart: &Chart,
    fields: &[&dyn VectorField],
    p0: &[f64],
    s: &[f64],
) -> Result<Vec<f64>> {
    let q = joint_flow(integ, chart, fields, p0, s)?;
    Ok(chart.difference(&q, p0))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gauss–Newton on the return map with a central-difference monodromy.
pub fn refine_return(
    opts: &LatticeOptions,
    chart: &Chart,
    fields: &[&dyn VectorField],
    p0: &[f64],
    s0: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let integ = &opts.integrator;
    let r = s0.len();
    let mut s = s0.to_vec();
    let mut res = return_residual(integ, chart, fields, p0, &s)?;
    for _ in 0..30 {
        if norm(&res) < 1e-13 {
            break;
        }
        let mut jac = DMatrix::zeros(res.len(), r);
        for k in 0..r {
            let mut sp = s.clone();
            let mut sm = s.clone();
            sp[k] += opts.fd_step;
            sm[k] -= opts.fd_step;
            let rp = return_residual(integ, chart, fields, p0, &sp)?;
            let rm = return_residual(integ, chart, fields, p0, &sm)?;
            for i in 0..res.len() {
                let mut d = rp[i] - rm[i];
                if chart.periodic()[i] {
                    d -= d.round();
                }
                jac[(i, k)] = d / (2.0 * opts.fd_step);
            }
        }
        let sv = jac.clone().singular_values();
        let smax = sv.iter().cloned().fold(0.0f64, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if smax == 0.0 || smin / smax < 1e-10 {
            return Err(Error::SingularMonodromy);
        }
        let delta = jac
            .svd(true, true)
            .solve(&DVector::from_vec(res.clone()), 1e-14)
            .map_err(|_| Error::SingularMonodromy)?;
        let mut damp = 1.0;
        let before = norm(&res);
        loop {
            let trial: Vec<f64> = s.iter().zip(delta.iter()).map(|(a, d)| a - damp * d).collect();
            let rt = return_residual(integ, chart, fields, p0, &trial)?;
            if norm(&rt) < before || damp < 1e-3 {
                s = trial;
                res = rt;
                break;
            }
            damp *= 0.5;
        }
        if delta.norm() * damp < 1e-15 {
            break;
        }
    }
    let n = norm(&res);
    Ok((s, n))
}

/// Residuals of the joint flow on the tensor scan grid.
fn scan(
    opts: &LatticeOptions,
    chart: &Chart,
    fields: &[&dyn VectorField],
    p0: &[f64],
) -> Result<(Vec<Vec<f64>>, Vec<(Vec<usize>, f64)>)> {
    let r = fields.len();
    let m = (opts.extent / opts.step).round() as usize;
    let axes: Vec<Vec<f64>> = (0..r)
        .map(|j| {
            if j == 0 {
                (0..=m).map(|k| k as f64 * opts.step).collect()
            } else {
                (0..=2 * m).map(|k| (k as f64 - m as f64) * opts.step).collect()
            }
        })
        .collect();
    let mut out = Vec::new();
    // apply the last field first, matching joint_flow
    let mut stack: Vec<(usize, Vec<usize>, Vec<f64>)> = vec![(r, Vec::new(), p0.to_vec())];
    while let Some((level, idx, p)) = stack.pop() {
        if level == 0 {
            let mut full = idx.clone();
            full.reverse();
            out.push((full, norm(&chart.difference(&p, p0))));
            continue;
        }
        let j = level - 1;
        let axis = &axes[j];
        let pos: Vec<f64> = axis.iter().cloned().filter(|&v| v >= 0.0).collect();
        let neg: Vec<f64> = axis.iter().cloned().filter(|&v| v < 0.0).rev().collect();
        let mut pts = vec![None; axis.len()];
        for times in [pos, neg] {
            if times.is_empty() {
                continue;
            }
            let states = opts.integrator.sample(chart, fields[j], &p, &times)?;
            for (t, q) in times.iter().zip(states) {
                let k = ((t - axis[0]) / opts.step).round() as usize;
                pts[k] = Some(q);
            }
        }
        for (k, q) in pts.into_iter().enumerate() {
            let mut next = idx.clone();
            next.push(k);
            stack.push((j, next, q.expect("every scan node is sampled")));
        }
    }
    Ok((axes, out))
}

fn independent(vs: &[Vec<f64>]) -> bool {
    let r = vs[0].len();
    let m = DMatrix::from_fn(vs.len(), r, |i, j| vs[i][j]);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    sv.iter().all(|&s| s > 1e-6 * smax.max(1.0))
}

/// Reduce so that `lambda_i^1 = 0` for `i > 1`, then fix signs:
/// `lambda_1^1 < 0` and `lambda_i^i < 0` (or the first nonzero entry).
pub fn normalize_basis(mut basis: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let r = basis.len();
    if r == 0 {
        return basis;
    }
    let scale = basis.iter().map(|v| v[0].abs()).fold(0.0f64, f64::max).max(1e-300);
    let zero = |x: f64| x.abs() <= 1e-9 * scale.max(1.0);
    for _ in 0..200 {
        let nz: Vec<usize> = (0..r).filter(|&i| !zero(basis[i][0])).collect();
        if nz.len() <= 1 {
            break;
        }
        let piv = *nz.iter().min_by(|&&a, &&b| basis[a][0].abs().total_cmp(&basis[b][0].abs())).unwrap();
        for &i in &nz {
            if i == piv {
                continue;
            }
            let q = (basis[i][0] / basis[piv][0]).round();
            let pv = basis[piv].clone();
            for (x, y) in basis[i].iter_mut().zip(pv) {
                *x -= q * y;
            }
        }
    }
    if let Some(k) = (0..r).find(|&i| !zero(basis[i][0])) {
        basis.swap(0, k);
    }
    for v in basis.iter_mut().skip(1) {
        v[0] = 0.0;
    }
    for (i, v) in basis.iter_mut().enumerate() {
        let lead = if v[i].abs() > 1e-12 { v[i] } else { v.iter().cloned().find(|x| x.abs() > 1e-12).unwrap_or(0.0) };
        if lead > 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        // no signed zeros in reports
        v.iter_mut().filter(|x| **x == 0.0).for_each(|x| *x = 0.0);
    }
    basis
}

/// Detects the period lattice of the torus through `p0` for the commuting
/// fields `fields`.
pub fn period_lattice(
    opts: &LatticeOptions,
    chart: &Chart,
    fields: &[&dyn VectorField],
    p0: &[f64],
) -> Result<PeriodLatticeBasis> {
    let r = fields.len();
    if r == 0 {
        return Err(Error::Dimension("period lattice of a rank-0 system".into()));
    }
    let (axes, grid) = scan(opts, chart, fields, p0)?;
    let dims: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let flat = |idx: &[usize]| idx.iter().zip(&dims).fold(0usize, |acc, (i, d)| acc * d + i);
    let mut values = vec![f64::INFINITY; dims.iter().product()];
    for (idx, v) in &grid {
        values[flat(idx)] = *v;
    }
    let mut candidates = Vec::new();
    for (idx, v) in &grid {
        let s: Vec<f64> = idx.iter().zip(&axes).map(|(i, a)| a[*i]).collect();
        if *v >= opts.accept || norm(&s) < 0.5 * opts.step {
            continue;
        }
        let mut is_min = true;
        for off in 0..3usize.pow(r as u32) {
            let mut o = off;
            let mut nb = idx.clone();
            let mut inside = true;
            for (d, n) in nb.iter_mut().enumerate() {
                let delta = (o % 3) as isize - 1;
                o /= 3;
                let k = *n as isize + delta;
                if k < 0 || k >= dims[d] as isize {
                    inside = false;
                    break;
                }
                *n = k as usize;
            }
            if inside && nb != *idx && values[flat(&nb)] < *v {
                is_min = false;
                break;
            }
        }
        if is_min {
            candidates.push((s, *v));
        }
    }
    candidates.sort_by(|a, b| norm(&a.0).total_cmp(&norm(&b.0)));

    let mut refined: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for (s0, _) in candidates {
        let Ok((s, res)) = refine_return(opts, chart, fields, p0, &s0) else {
            continue;
        };
        if res >= opts.tol || norm(&s) < 1e-6 {
            continue;
        }
        if refined.iter().any(|(t, _)| norm(&t.iter().zip(&s).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-6) {
            continue;
        }
        refined.push((s, res));
    }
    refined.sort_by(|a, b| norm(&a.0).total_cmp(&norm(&b.0)));
    for (s, _) in &refined {
        let mut trial = basis.clone();
        trial.push(s.clone());
        if independent(&trial) {
            basis = trial;
            if basis.len() == r {
                break;
            }
        }
    }
    if basis.len() < r {
        return Err(Error::NoReturn);
    }
    let basis = normalize_basis(basis);
    let residuals = basis
        .iter()
        .map(|s| Ok(norm(&return_residual(&opts.integrator, chart, fields, p0, s)?)))
        .collect::<Result<Vec<_>>>()?;
    let modular_period = chart.on_z(p0).then(|| basis[0][0].abs());
    Ok(PeriodLatticeBasis { base_point: p0.to_vec(), basis, residuals, modular_period })
}
