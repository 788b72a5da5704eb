//! b-symplectic structures, Hamiltonian fields and brackets.
//!
//! Sign convention: `i_{X_f} w = -df` and `{f,g} = w(X_f, X_g)`. With
//! `W_ab = w(e_a, e_b)` in the b-frame and `P = -W^{-1}` this gives
//! `X_f = -P df` and `{f,g} = df^T P dg`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::bfunction::BFunction;
use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::form::{BForm, BVectorField, VectorField};
use crate::observable::{fd_b_derivative, Observable, FD_STEP};
use crate::report::CheckReport;

/// Threshold on `|det W| / max|W_ab|^dim`.
pub const NONDEGENERACY_TOL: f64 = 1e-10;

struct Inner {
    chart: Arc<Chart>,
    omega: BForm,
    /// `D_a W` as 2-forms, one per frame slot.
    d_omega: Vec<BForm>,
    constant: Option<DMatrix<f64>>,
}

/// A closed b-two-form on a chart. Cheap to clone.
#[derive(Clone)]
pub struct BSymplecticStructure {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for BSymplecticStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BSymplecticStructure").field("omega", &self.inner.omega).finish()
    }
}

fn relative_det(m: &DMatrix<f64>) -> f64 {
    let scale = m.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    (m.clone().lu().determinant() / scale.powi(m.nrows() as i32)).abs()
}

impl BSymplecticStructure {
    pub fn new(chart: Arc<Chart>, omega: BForm) -> Result<Self> {
        if omega.degree() != 2 || omega.dim() != chart.dim() {
            return Err(Error::Dimension("symplectic form must be a 2-form on the chart".into()));
        }
        let d_omega = (0..chart.dim())
            .map(|a| omega.map_coeffs(|c| chart.b_derivative(c, a)))
            .collect();
        let constant = if omega.is_constant() { Some(omega.matrix(&vec![0.0; chart.dim()])?) } else { None };
        Ok(BSymplecticStructure { inner: Arc::new(Inner { chart, omega, d_omega, constant }) })
    }

    pub fn chart(&self) -> &Chart {
        &self.inner.chart
    }

    pub fn chart_arc(&self) -> Arc<Chart> {
        self.inner.chart.clone()
    }

    pub fn omega(&self) -> &BForm {
        &self.inner.omega
    }

    pub fn dim(&self) -> usize {
        self.inner.chart.dim()
    }

    pub fn is_constant(&self) -> bool {
        self.inner.constant.is_some()
    }

    pub fn matrix(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        match &self.inner.constant {
            Some(m) => Ok(m.clone()),
            None => self.inner.omega.matrix(p),
        }
    }

    /// `D_a W` at `p`.
    pub fn matrix_derivative(&self, p: &[f64], a: usize) -> Result<DMatrix<f64>> {
        self.inner.d_omega[a].matrix(p)
    }

    /// `P = -W^{-1}`; fails where `W` is degenerate.
    pub fn poisson_matrix(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.matrix(p)?;
        let det = relative_det(&m);
        if det <= NONDEGENERACY_TOL {
            return Err(Error::Degenerate { point: p.to_vec(), det });
        }
        let inv = m.lu().try_inverse().ok_or(Error::Degenerate { point: p.to_vec(), det })?;
        Ok(-inv)
    }

    /// b-frame components of the Hamiltonian field of a covector `df`.
    pub fn hamiltonian_components(&self, p: &[f64], df: &[f64]) -> Result<Vec<f64>> {
        let pm = self.poisson_matrix(p)?;
        let v = -(pm * DVector::from_column_slice(df));
        Ok(v.iter().cloned().collect())
    }

    /// `df^T P dg`.
    pub fn bracket_covectors(&self, p: &[f64], df: &[f64], dg: &[f64]) -> Result<f64> {
        let pm = self.poisson_matrix(p)?;
        let a = DVector::from_column_slice(df);
        let b = DVector::from_column_slice(dg);
        Ok(a.dot(&(pm * b)))
    }

    pub fn bracket_at(&self, p: &[f64], f: &dyn Observable, g: &dyn Observable) -> Result<f64> {
        self.bracket_covectors(p, &f.b_gradient(p)?, &g.b_gradient(p)?)
    }

    /// Symbolic Hamiltonian field, available when `W` has constant
    /// coefficients.
    pub fn hamiltonian_field_symbolic(&self, f: &BFunction) -> Result<Option<BVectorField>> {
        if self.inner.constant.is_none() {
            return Ok(None);
        }
        let pm = self.poisson_matrix(&vec![0.0; self.dim()])?;
        let grad = f.b_gradient_exprs(self.chart());
        let n = self.dim();
        let coeffs = (0..n)
            .map(|a| Expr::sum((0..n).filter(|&b| pm[(a, b)] != 0.0).map(|b| -pm[(a, b)] * grad[b].clone())))
            .collect();
        Ok(Some(BVectorField::new(self.chart_arc(), coeffs)?))
    }

    /// Hamiltonian field of a b-function; symbolic when possible, pointwise
    /// otherwise.
    pub fn hamiltonian_field(&self, f: &BFunction) -> Result<HamiltonianField> {
        let obs: Arc<dyn Observable> = Arc::new(f.prepare(self.chart_arc()));
        let symbolic = self.hamiltonian_field_symbolic(f)?;
        Ok(HamiltonianField { s: self.clone(), f: obs, symbolic })
    }

    pub fn hamiltonian_of(&self, f: Arc<dyn Observable>) -> HamiltonianField {
        HamiltonianField { s: self.clone(), f, symbolic: None }
    }

    /// Symbolic bracket when `W` is constant.
    pub fn bracket_symbolic(&self, f: &BFunction, g: &BFunction) -> Result<Option<BFunction>> {
        if self.inner.constant.is_none() {
            return Ok(None);
        }
        let pm = self.poisson_matrix(&vec![0.0; self.dim()])?;
        let a = f.b_gradient_exprs(self.chart());
        let b = g.b_gradient_exprs(self.chart());
        let n = self.dim();
        let mut terms = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if pm[(i, j)] != 0.0 {
                    terms.push(pm[(i, j)] * (&a[i] * &b[j]));
                }
            }
        }
        Ok(Some(BFunction::smooth(Expr::sum(terms))))
    }

    /// `{f, g}` as an observable with exact gradient when both arguments
    /// carry exact Hessians.
    pub fn bracket(&self, f: Arc<dyn Observable>, g: Arc<dyn Observable>) -> Bracket {
        Bracket { s: self.clone(), f, g }
    }

    pub fn bracket_of(&self, f: &BFunction, g: &BFunction) -> Result<Arc<dyn Observable>> {
        if let Some(h) = self.bracket_symbolic(f, g)? {
            return Ok(Arc::new(h.prepare(self.chart_arc())));
        }
        Ok(Arc::new(self.bracket(
            Arc::new(f.prepare(self.chart_arc())),
            Arc::new(g.prepare(self.chart_arc())),
        )))
    }

    /// `(L_Y w)_ab = Y^c D_c W_ab + W_cb D_a Y^c + W_ac D_b Y^c`.
    pub fn lie_derivative(&self, y: &dyn VectorField, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let v = y.b_components(p)?;
        let j = match y.b_jacobian(p)? {
            Some(j) => j,
            None => vector_jacobian_fd(self.chart(), y, p, FD_STEP)?,
        };
        let w = self.matrix(p)?;
        let mut l = DMatrix::zeros(n, n);
        for (c, vc) in v.iter().enumerate() {
            if *vc != 0.0 {
                l += self.matrix_derivative(p, c)? * *vc;
            }
        }
        // W_cb D_a Y^c = (J^T W)_ab
        l += j.transpose() * &w + &w * &j;
        Ok(l)
    }
}

/// `J[(c, a)] = D_a Y^c` by central b-frame differences.
pub fn vector_jacobian_fd(chart: &Chart, y: &dyn VectorField, p: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let n = chart.dim();
    let mut j = DMatrix::zeros(n, n);
    for c in 0..n {
        let comp = |q: &[f64]| -> Result<f64> { Ok(y.b_components(q)?[c]) };
        for a in 0..n {
            j[(c, a)] = fd_b_derivative(chart, p, a, h, &comp)?;
        }
    }
    Ok(j)
}

/// Hamiltonian field of an observable.
#[derive(Clone)]
pub struct HamiltonianField {
    s: BSymplecticStructure,
    f: Arc<dyn Observable>,
    symbolic: Option<BVectorField>,
}

impl HamiltonianField {
    pub fn symbolic(&self) -> Option<&BVectorField> {
        self.symbolic.as_ref()
    }

    pub fn smooth_components(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.s.chart().smooth_components(p, &self.b_components(p)?))
    }
}

impl VectorField for HamiltonianField {
    fn b_components(&self, p: &[f64]) -> Result<Vec<f64>> {
        if let Some(v) = &self.symbolic {
            return v.b_components(p);
        }
        self.s.hamiltonian_components(p, &self.f.b_gradient(p)?)
    }

    /// `D_a X = -(D_a P) df - P D_a df` with `D_a P = P (D_a W) P`.
    fn b_jacobian(&self, p: &[f64]) -> Result<Option<DMatrix<f64>>> {
        if let Some(v) = &self.symbolic {
            return v.b_jacobian(p);
        }
        let Some(h) = self.f.b_hessian(p)? else {
            return Ok(None);
        };
        let n = self.s.dim();
        let pm = self.s.poisson_matrix(p)?;
        let df = DVector::from_vec(self.f.b_gradient(p)?);
        let mut j = DMatrix::zeros(n, n);
        for a in 0..n {
            let dp = &pm * self.s.matrix_derivative(p, a)? * &pm;
            let col = -(dp * &df) - &pm * h.row(a).transpose();
            j.set_column(a, &col);
        }
        Ok(Some(j))
    }
}

/// The bracket `{f, g}` evaluated pointwise.
#[derive(Clone)]
pub struct Bracket {
    s: BSymplecticStructure,
    f: Arc<dyn Observable>,
    g: Arc<dyn Observable>,
}

impl Observable for Bracket {
    fn value(&self, p: &[f64]) -> Result<f64> {
        self.s.bracket_at(p, self.f.as_ref(), self.g.as_ref())
    }

    /// `D_a{f,g} = (D_a df)^T P dg + df^T (D_a P) dg + df^T P (D_a dg)`.
    fn b_gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        let n = self.s.dim();
        match (self.f.b_hessian(p)?, self.g.b_hessian(p)?) {
            (Some(hf), Some(hg)) => {
                let pm = self.s.poisson_matrix(p)?;
                let df = DVector::from_vec(self.f.b_gradient(p)?);
                let dg = DVector::from_vec(self.g.b_gradient(p)?);
                let pdg = &pm * &dg;
                let pdf = pm.transpose() * &df;
                (0..n)
                    .map(|a| {
                        let dp = &pm * self.s.matrix_derivative(p, a)? * &pm;
                        Ok(hf.row(a).transpose().dot(&pdg)
                            + df.dot(&(dp * &dg))
                            + pdf.dot(&hg.row(a).transpose()))
                    })
                    .collect()
            }
            _ => {
                let v = |q: &[f64]| self.value(q);
                (0..n).map(|a| fd_b_derivative(self.s.chart(), p, a, FD_STEP, &v)).collect()
            }
        }
    }
}

/// Max cyclic sum `|{{f,g},h} + {{g,h},f} + {{h,f},g}|` over `points`.
pub fn jacobi_residual(
    s: &BSymplecticStructure,
    f: &BFunction,
    g: &BFunction,
    h: &BFunction,
    points: &[Vec<f64>],
) -> Result<f64> {
    let chart = s.chart_arc();
    let prep = |x: &BFunction| -> Arc<dyn Observable> { Arc::new(x.prepare(chart.clone())) };
    let (pf, pg, ph) = (prep(f), prep(g), prep(h));
    let fg = s.bracket_of(f, g)?;
    let gh = s.bracket_of(g, h)?;
    let hf = s.bracket_of(h, f)?;
    let mut worst = 0.0f64;
    for p in points {
        let r = s.bracket_at(p, fg.as_ref(), ph.as_ref())?
            + s.bracket_at(p, gh.as_ref(), pf.as_ref())?
            + s.bracket_at(p, hf.as_ref(), pg.as_ref())?;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// `w = dt/t ^ alpha + beta` with `alpha` restricted to `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueSplit {
    /// Degree `k-1`, coefficients evaluated at `t = 0`; no slot-0 terms.
    pub residue: BForm,
    /// Degree `k`, no slot-0 terms.
    pub smooth_part: BForm,
    /// `alpha` before restriction to `Z`.
    pub alpha: BForm,
}

pub fn residue_split(chart: &Chart, omega: &BForm) -> Result<ResidueSplit> {
    let k = omega.degree();
    if k == 0 {
        return Err(Error::Dimension("residue of a 0-form".into()));
    }
    let dim = omega.dim();
    let Some(t) = chart.t_index() else {
        return Ok(ResidueSplit {
            residue: BForm::zero(dim, k - 1),
            smooth_part: omega.clone(),
            alpha: BForm::zero(dim, k - 1),
        });
    };
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    for (idx, c) in omega.terms() {
        if idx[0] == 0 {
            alpha.push((idx[1..].to_vec(), c.clone()));
        } else {
            beta.push((idx.clone(), c.clone()));
        }
    }
    let alpha = BForm::from_terms(dim, k - 1, alpha);
    let residue = alpha.map_coeffs(|c| c.substitute(t, &Expr::zero()));
    Ok(ResidueSplit { residue, smooth_part: BForm::from_terms(dim, k, beta), alpha })
}

/// Closedness, b-nondegeneracy and criticality of `Z`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BSymplecticReport {
    pub closed: CheckReport,
    pub nondegenerate: CheckReport,
    /// `Z` is critical: the `dt/t` row of `W` is not identically zero on `Z`.
    pub z_critical: bool,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn verify_bsymplectic(chart: &Chart, omega: &BForm, points: &[Vec<f64>]) -> Result<BSymplecticReport> {
    let mut closed = CheckReport::new("closed");
    // top-degree forms are closed
    let d = if omega.degree() == omega.dim() { None } else { Some(omega.exterior_d(chart)?) };
    if let Some(d) = d.filter(|d| !d.is_exact_zero()) {
        for p in points {
            let r = d.eval_terms(p)?.iter().fold(0.0f64, |a, (_, v)| a.max(v.abs()));
            closed.record(p.clone(), r, r < 1e-12);
        }
    } else {
        closed.points_tested = points.len();
    }
    let mut nondeg = CheckReport::new("nondegenerate")
        .with_note("max_residual holds the smallest relative determinant");
    let mut z_critical = false;
    for p in points {
        let m = omega.matrix(p)?;
        let det = relative_det(&m);
        nondeg.record(p.clone(), det, det > NONDEGENERACY_TOL);
        if chart.on_z(p) && (0..chart.dim()).any(|b| m[(0, b)] != 0.0) {
            z_critical = true;
        }
    }
    // record the smallest relative determinant, not the largest
    nondeg.max_residual = points
        .iter()
        .map(|p| omega.matrix(p).map(|m| relative_det(&m)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let note = if z_critical { None } else { Some("Z not critical".to_string()) };
    let pass = closed.pass && nondeg.pass;
    Ok(BSymplecticReport { closed, nondegenerate: nondeg, z_critical, pass, note })
}
