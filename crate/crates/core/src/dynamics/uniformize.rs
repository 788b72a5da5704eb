//! Smooth lattice fields `b -> lambda_i(b)` and the uniformized fields
//! `Y_i = sum_j lambda_i^j X_{f_j}`.
//!
//! Charts follow the standard-model layout: periodic coordinates are the
//! torus angles, the remaining coordinates parametrize the tori.

use std::collections::VecDeque;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chart::Chart;
use crate::dynamics::integrator::Integrator;
use crate::dynamics::lattice::{refine_return, return_residual, LatticeOptions, PeriodLatticeBasis};
use crate::error::{Error, Result};
use crate::form::VectorField;
use crate::observable::{displaced, Observable};
use crate::poisson::{BSymplecticStructure, HamiltonianField};
use crate::report::CheckReport;

/// Angle and transverse coordinate indices of a standard-model chart.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusLayout {
    pub angles: Vec<usize>,
    pub transverse: Vec<usize>,
}

impl TorusLayout {
    pub fn of(chart: &Chart) -> Self {
        let (angles, transverse) = (0..chart.dim()).partition(|&i| chart.periodic()[i]);
        TorusLayout { angles, transverse }
    }

    pub fn transverse_values(&self, p: &[f64]) -> Vec<f64> {
        self.transverse.iter().map(|&i| p[i]).collect()
    }

    /// The `theta = 0` point over transverse values `b`.
    pub fn section(&self, chart: &Chart, b: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; chart.dim()];
        for &i in &self.angles {
            p[i] = chart.bounds()[i].0;
        }
        for (&i, v) in self.transverse.iter().zip(b) {
            p[i] = *v;
        }
        p
    }
}

/// Cubic Hermite weights on a uniform axis with central-difference slopes
/// inside and one-sided second-order slopes at the ends. Reproduces
/// quadratics exactly.
fn hermite_weights(axis: &[f64], x: f64) -> (Vec<f64>, Vec<f64>) {
    let n = axis.len();
    let h = axis[1] - axis[0];
    let k = (((x - axis[0]) / h).floor().max(0.0) as usize).min(n - 2);
    let u = (x - axis[k]) / h;
    let slope = |i: usize| -> Vec<(usize, f64)> {
        if i == 0 {
            vec![(0, -1.5 / h), (1, 2.0 / h), (2, -0.5 / h)]
        } else if i == n - 1 {
            vec![(n - 1, 1.5 / h), (n - 2, -2.0 / h), (n - 3, 0.5 / h)]
        } else {
            vec![(i + 1, 0.5 / h), (i - 1, -0.5 / h)]
        }
    };
    let (u2, u3) = (u * u, u * u * u);
    let b = [2.0 * u3 - 3.0 * u2 + 1.0, u3 - 2.0 * u2 + u, -2.0 * u3 + 3.0 * u2, u3 - u2];
    let db = [6.0 * u2 - 6.0 * u, 3.0 * u2 - 4.0 * u + 1.0, -6.0 * u2 + 6.0 * u, 3.0 * u2 - 2.0 * u];
    let mut w = vec![0.0; n];
    let mut dw = vec![0.0; n];
    w[k] += b[0];
    w[k + 1] += b[2];
    dw[k] += db[0] / h;
    dw[k + 1] += db[2] / h;
    for (node, coef, hb) in [(k, b[1], db[1]), (k + 1, b[3], db[3])] {
        for (i, c) in slope(node) {
            w[i] += coef * h * c;
            dw[i] += hb * c;
        }
    }
    (w, dw)
}

/// Chebyshev–Lobatto nodes on `[lo, hi]`, ascending.
fn chebyshev_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let x = -(std::f64::consts::PI * k as f64 / (n - 1) as f64).cos();
            0.5 * (lo + hi) + 0.5 * (hi - lo) * x
        })
        .collect()
}

/// Barycentric weights of the polynomial interpolant through Chebyshev–Lobatto
/// nodes, with their derivatives.
fn chebyshev_weights(axis: &[f64], x: f64) -> (Vec<f64>, Vec<f64>) {
    let n = axis.len();
    let bw: Vec<f64> = (0..n)
        .map(|k| {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == n - 1 {
                0.5 * s
            } else {
                s
            }
        })
        .collect();
    let scale = axis[n - 1] - axis[0];
    if let Some(j) = (0..n).find(|&k| (x - axis[k]).abs() <= 1e-14 * scale) {
        let mut w = vec![0.0; n];
        w[j] = 1.0;
        let mut dw = vec![0.0; n];
        for k in (0..n).filter(|&k| k != j) {
            dw[k] = (bw[k] / bw[j]) / (axis[j] - axis[k]);
            dw[j] -= dw[k];
        }
        return (w, dw);
    }
    let s: Vec<f64> = (0..n).map(|k| bw[k] / (x - axis[k])).collect();
    let ds: Vec<f64> = (0..n).map(|k| -bw[k] / (x - axis[k]).powi(2)).collect();
    let (sum, dsum) = (s.iter().sum::<f64>(), ds.iter().sum::<f64>());
    let w = s.iter().map(|v| v / sum).collect();
    let dw = (0..n).map(|k| (ds[k] * sum - s[k] * dsum) / (sum * sum)).collect();
    (w, dw)
}

/// Interpolation scheme of a [`LatticeField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Polynomial through Chebyshev–Lobatto nodes.
    #[default]
    Chebyshev,
    /// Piecewise cubic Hermite on a uniform grid.
    CubicHermite,
}

/// Tensor-product cubic interpolant of `r x r` lattice matrices over the
/// transverse box.
#[derive(Debug, Clone)]
pub struct LatticeField {
    chart: Arc<Chart>,
    layout: TorusLayout,
    axes: Vec<Vec<f64>>,
    r: usize,
    interpolation: Interpolation,
    /// Row-major `r * r` values per node, nodes in row-major axis order.
    nodes: Vec<Vec<f64>>,
    /// Largest return residual met while building.
    pub max_residual: f64,
}

impl LatticeField {
    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn layout(&self) -> &TorusLayout {
        &self.layout
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).fold(0, |acc, (i, a)| acc * a.len() + i)
    }

    /// `lambda[i][j]` at `p` together with its derivatives along each
    /// transverse coordinate.
    pub fn eval(&self, p: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
        let b = self.layout.transverse_values(p);
        let d = self.axes.len();
        let ws: Vec<_> = self
            .axes
            .iter()
            .zip(&b)
            .map(|(a, x)| match self.interpolation {
                Interpolation::Chebyshev => chebyshev_weights(a, *x),
                Interpolation::CubicHermite => hermite_weights(a, *x),
            })
            .collect();
        let support: Vec<Vec<usize>> = ws
            .iter()
            .map(|(w, dw)| (0..w.len()).filter(|&i| w[i] != 0.0 || dw[i] != 0.0).collect())
            .collect();
        let rr = self.r * self.r;
        let mut val = vec![0.0; rr];
        let mut grad = vec![vec![0.0; rr]; d];
        let mut pos = vec![0usize; d];
        let mut node = vec![0usize; d];
        loop {
            for k in 0..d {
                node[k] = support[k][pos[k]];
            }
            let v = &self.nodes[self.flat(&node)];
            let wv: f64 = (0..d).map(|k| ws[k].0[node[k]]).product();
            for (acc, x) in val.iter_mut().zip(v) {
                *acc += wv * x;
            }
            for g in 0..d {
                let wg: f64 = (0..d).map(|k| if k == g { ws[k].1[node[k]] } else { ws[k].0[node[k]] }).product();
                if wg != 0.0 {
                    for (acc, x) in grad[g].iter_mut().zip(v) {
                        *acc += wg * x;
                    }
                }
            }
            let mut k = d;
            loop {
                if k == 0 {
                    let shape = |v: &[f64]| v.chunks(self.r).map(|c| c.to_vec()).collect::<Vec<_>>();
                    return (shape(&val), grad.iter().map(|g| shape(g)).collect());
                }
                k -= 1;
                pos[k] += 1;
                if pos[k] < support[k].len() {
                    break;
                }
                pos[k] = 0;
            }
        }
    }

    /// Builds the field by continuation from the base lattice: every grid
    /// node is refined by Newton from an already solved neighbour.
    pub fn build(
        chart: Arc<Chart>,
        fields: &[&dyn VectorField],
        base: &PeriodLatticeBasis,
        nodes_per_dim: usize,
        interpolation: Interpolation,
        opts: &LatticeOptions,
    ) -> Result<Self> {
        let layout = TorusLayout::of(&chart);
        let r = base.basis.len();
        if layout.angles.len() != r {
            return Err(Error::NotStandardModel(format!(
                "{} periodic coordinates for rank {r}",
                layout.angles.len()
            )));
        }
        let n = nodes_per_dim.max(3);
        let axes: Vec<Vec<f64>> = layout
            .transverse
            .iter()
            .map(|&i| {
                let (lo, hi) = chart.bounds()[i];
                match interpolation {
                    Interpolation::Chebyshev => chebyshev_axis(lo, hi, n),
                    Interpolation::CubicHermite => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
                }
            })
            .collect();
        let d = axes.len();
        let total = n.pow(d as u32);
        let unflat = |mut f: usize| {
            let mut idx = vec![0; d];
            for k in (0..d).rev() {
                idx[k] = f % n;
                f /= n;
            }
            idx
        };
        let b0 = layout.transverse_values(&base.base_point);
        let start = (0..total)
            .min_by(|&a, &b| {
                let da: f64 = unflat(a).iter().zip(&axes).zip(&b0).map(|((i, ax), v)| (ax[*i] - v).powi(2)).sum();
                let db: f64 = unflat(b).iter().zip(&axes).zip(&b0).map(|((i, ax), v)| (ax[*i] - v).powi(2)).sum();
                da.total_cmp(&db)
            })
            .unwrap();
        let mut values: Vec<Option<Vec<f64>>> = vec![None; total];
        let mut max_residual = 0.0f64;
        let mut queue = VecDeque::new();
        queue.push_back((start, base.basis.concat()));
        let mut seen = vec![false; total];
        seen[start] = true;
        while let Some((f, guess)) = queue.pop_front() {
            let idx = unflat(f);
            let b: Vec<f64> = idx.iter().zip(&axes).map(|(i, a)| a[*i]).collect();
            let p = layout.section(&chart, &b);
            let mut sol = Vec::with_capacity(r * r);
            for i in 0..r {
                let (s, res) = refine_return(opts, &chart, fields, &p, &guess[i * r..(i + 1) * r])?;
                if res >= opts.tol {
                    return Err(Error::GridTooCoarse(res));
                }
                max_residual = max_residual.max(res);
                sol.extend(s);
            }
            for k in 0..d {
                for delta in [-1isize, 1] {
                    let j = idx[k] as isize + delta;
                    if j < 0 || j >= n as isize {
                        continue;
                    }
                    let mut nb = idx.clone();
                    nb[k] = j as usize;
                    let g = nb.iter().fold(0, |acc, i| acc * n + i);
                    if !seen[g] {
                        seen[g] = true;
                        queue.push_back((g, sol.clone()));
                    }
                }
            }
            values[f] = Some(sol);
        }
        let nodes = values.into_iter().map(|v| v.expect("grid is connected")).collect();
        Ok(LatticeField { chart, layout, axes, r, interpolation, nodes, max_residual })
    }

    /// A lattice field constant in `b`.
    pub fn constant(chart: Arc<Chart>, basis: &[Vec<f64>]) -> Self {
        let layout = TorusLayout::of(&chart);
        let axes: Vec<Vec<f64>> = layout
            .transverse
            .iter()
            .map(|&i| {
                let (lo, hi) = chart.bounds()[i];
                vec![lo, 0.5 * (lo + hi), hi]
            })
            .collect();
        let total = 3usize.pow(axes.len() as u32);
        LatticeField {
            chart,
            layout,
            axes,
            r: basis.len(),
            interpolation: Interpolation::CubicHermite,
            nodes: vec![basis.concat(); total],
            max_residual: 0.0,
        }
    }

    /// Entry `lambda_i^j` as an observable with exact b-gradient.
    pub fn entry(self: &Arc<Self>, i: usize, j: usize) -> LatticeEntry {
        LatticeEntry { field: self.clone(), i, j }
    }

    /// b-frame derivative `D_a` of all entries.
    fn b_derivatives(&self, p: &[f64], grad: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
        let chart = &self.chart;
        (0..chart.dim())
            .map(|a| {
                let c = chart.slot_coord(a);
                match self.layout.transverse.iter().position(|&k| k == c) {
                    Some(g) => {
                        let scale = match chart.t_index() {
                            Some(t) if a == 0 => p[t],
                            _ => 1.0,
                        };
                        grad[g].iter().map(|row| row.iter().map(|x| x * scale).collect()).collect()
                    }
                    None => vec![vec![0.0; self.r]; self.r],
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct LatticeEntry {
    field: Arc<LatticeField>,
    i: usize,
    j: usize,
}

impl Observable for LatticeEntry {
    fn value(&self, p: &[f64]) -> Result<f64> {
        Ok(self.field.eval(p).0[self.i][self.j])
    }

    fn b_gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        let (_, g) = self.field.eval(p);
        Ok(self.field.b_derivatives(p, &g).iter().map(|m| m[self.i][self.j]).collect())
    }
}

/// `sum_i w_i Y_i` with `Y_i = sum_j lambda_i^j(b) X_{f_j}`.
#[derive(Clone)]
pub struct UniformizedField {
    lattice: Arc<LatticeField>,
    fields: Arc<Vec<HamiltonianField>>,
    weights: Vec<f64>,
}

impl UniformizedField {
    fn coefficients(&self, lambda: &[Vec<f64>]) -> Vec<f64> {
        let r = self.lattice.r;
        (0..r).map(|j| (0..r).map(|i| self.weights[i] * lambda[i][j]).sum()).collect()
    }
}

impl VectorField for UniformizedField {
    fn b_components(&self, p: &[f64]) -> Result<Vec<f64>> {
        let (lambda, _) = self.lattice.eval(p);
        let mu = self.coefficients(&lambda);
        let mut out = vec![0.0; p.len()];
        for (x, m) in self.fields.iter().zip(mu) {
            if m == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(x.b_components(p)?) {
                *o += m * v;
            }
        }
        Ok(out)
    }

    fn b_jacobian(&self, p: &[f64]) -> Result<Option<DMatrix<f64>>> {
        let n = p.len();
        let (lambda, grad) = self.lattice.eval(p);
        let mu = self.coefficients(&lambda);
        let dl = self.lattice.b_derivatives(p, &grad);
        let mut j = DMatrix::zeros(n, n);
        for (k, x) in self.fields.iter().enumerate() {
            let Some(jx) = x.b_jacobian(p)? else {
                return Ok(None);
            };
            let v = x.b_components(p)?;
            j += jx * mu[k];
            for a in 0..n {
                let dmu: f64 = (0..self.lattice.r).map(|i| self.weights[i] * dl[a][i][k]).sum();
                if dmu != 0.0 {
                    for c in 0..n {
                        j[(c, a)] += dmu * v[c];
                    }
                }
            }
        }
        Ok(Some(j))
    }
}

/// The uniformized `T^r` action of a standard-model system.
#[derive(Clone)]
pub struct Uniformization {
    pub structure: BSymplecticStructure,
    pub lattice: Arc<LatticeField>,
    pub fields: Arc<Vec<HamiltonianField>>,
    pub integrator: Integrator,
}

impl Uniformization {
    pub fn new(structure: BSymplecticStructure, lattice: Arc<LatticeField>, fields: Vec<HamiltonianField>) -> Self {
        Uniformization { structure, lattice, fields: Arc::new(fields), integrator: Integrator::default() }
    }

    pub fn rank(&self) -> usize {
        self.lattice.r
    }

    pub fn combination(&self, weights: &[f64]) -> UniformizedField {
        UniformizedField { lattice: self.lattice.clone(), fields: self.fields.clone(), weights: weights.to_vec() }
    }

    /// `Y_i`, zero-based.
    pub fn field(&self, i: usize) -> UniformizedField {
        let mut w = vec![0.0; self.rank()];
        w[i] = 1.0;
        self.combination(&w)
    }

    /// Time-one return residual of every `Y_i` at each point.
    pub fn check_returns(&self, points: &[Vec<f64>], tol: f64) -> Result<CheckReport> {
        let chart = self.structure.chart();
        let mut rep = CheckReport::new("uniformized_return");
        for p in points {
            let mut worst = 0.0f64;
            for i in 0..self.rank() {
                let y = self.field(i);
                let d = return_residual(&self.integrator, chart, &[&y as &dyn VectorField], p, &[1.0])?;
                worst = worst.max(d.iter().map(|x| x * x).sum::<f64>().sqrt());
            }
            rep.record(p.clone(), worst, worst < tol);
        }
        Ok(rep)
    }

    /// Max entry of `L_{Y_i} w` at each point.
    pub fn check_lie(&self, points: &[Vec<f64>], tol: f64) -> Result<CheckReport> {
        let mut rep = CheckReport::new("lie_derivative");
        for p in points {
            let mut worst = 0.0f64;
            for i in 0..self.rank() {
                let l = self.structure.lie_derivative(&self.field(i), p)?;
                worst = worst.max(l.amax());
            }
            rep.record(p.clone(), worst, worst < tol);
        }
        Ok(rep)
    }
}

/// `L_Y L_Y w` at `p`, differentiating `L_Y w` by central b-frame
/// differences with step `h`.
pub fn double_lie_derivative(s: &BSymplecticStructure, y: &dyn VectorField, p: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let chart = s.chart();
    let eta = s.lie_derivative(y, p)?;
    let v = y.b_components(p)?;
    let jy = match y.b_jacobian(p)? {
        Some(j) => j,
        None => crate::poisson::vector_jacobian_fd(chart, y, p, h)?,
    };
    let mut out = jy.transpose() * &eta + &eta * &jy;
    for (c, vc) in v.iter().enumerate() {
        if *vc == 0.0 || (c == 0 && chart.on_z(p)) {
            continue;
        }
        let plus = s.lie_derivative(y, &displaced(chart, p, c, h))?;
        let minus = s.lie_derivative(y, &displaced(chart, p, c, -h))?;
        out += (plus - minus) * (vc / (2.0 * h));
    }
    Ok(out)
}
