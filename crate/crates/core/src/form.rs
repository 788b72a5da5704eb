//! b-forms and b-vector fields in the b-coframe / b-frame of a chart.
//!
//! Only strictly increasing multi-indices are stored, so antisymmetry is
//! structural. `dt` never appears directly: it is `t * (dt/t)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::Expr;

/// Sort `idx` in place; returns the permutation sign, or 0 on a repeat.
fn sort_with_sign(idx: &mut [usize]) -> i32 {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        0
    } else {
        sign
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FormDescriptor", into = "FormDescriptor")]
pub struct BForm {
    dim: usize,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormTerm {
    pub slots: Vec<usize>,
    pub coeff: Expr,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormDescriptor {
    pub dim: usize,
    pub degree: usize,
    pub terms: Vec<FormTerm>,
}

impl TryFrom<FormDescriptor> for BForm {
    type Error = Error;
    fn try_from(d: FormDescriptor) -> Result<BForm> {
        for t in &d.terms {
            if t.slots.len() != d.degree || t.slots.iter().any(|&s| s >= d.dim) {
                return Err(Error::Parse(format!("bad form term {:?}", t.slots)));
            }
        }
        Ok(BForm::from_terms(d.dim, d.degree, d.terms.into_iter().map(|t| (t.slots, t.coeff))))
    }
}

impl From<BForm> for FormDescriptor {
    fn from(f: BForm) -> Self {
        FormDescriptor {
            dim: f.dim,
            degree: f.degree,
            terms: f.terms.into_iter().map(|(slots, coeff)| FormTerm { slots, coeff }).collect(),
        }
    }
}

impl BForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        BForm { dim, degree, terms: BTreeMap::new() }
    }

    /// Builds a form from arbitrary (possibly unsorted) index lists.
    pub fn from_terms<I: IntoIterator<Item = (Vec<usize>, Expr)>>(
        dim: usize,
        degree: usize,
        terms: I,
    ) -> Self {
        let mut f = BForm::zero(dim, degree);
        for (mut idx, c) in terms {
            debug_assert_eq!(idx.len(), degree);
            let s = sort_with_sign(&mut idx);
            if s == 0 {
                continue;
            }
            f.accumulate(idx, if s < 0 { -c } else { c });
        }
        f
    }

    /// The basis element `e^{slots[0]} ^ ... ^ e^{slots[k-1]}`.
    pub fn basis(dim: usize, slots: &[usize]) -> Self {
        BForm::from_terms(dim, slots.len(), [(slots.to_vec(), Expr::one())])
    }

    pub fn one_form(coeffs: Vec<Expr>) -> Self {
        let dim = coeffs.len();
        BForm::from_terms(dim, 1, coeffs.into_iter().enumerate().map(|(i, c)| (vec![i], c)))
    }

    fn accumulate(&mut self, idx: Vec<usize>, c: Expr) {
        if c.is_zero() {
            return;
        }
        let merged = match self.terms.remove(&idx) {
            Some(old) => old + c,
            None => c,
        };
        if !merged.is_zero() {
            self.terms.insert(idx, merged);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.terms.iter()
    }

    pub fn coeff(&self, slots: &[usize]) -> Expr {
        let mut idx = slots.to_vec();
        let s = sort_with_sign(&mut idx);
        if s == 0 {
            return Expr::zero();
        }
        let c = self.terms.get(&idx).cloned().unwrap_or_else(Expr::zero);
        if s < 0 {
            -c
        } else {
            c
        }
    }

    /// Structurally zero: no stored coefficient survives constant folding.
    pub fn is_exact_zero(&self) -> bool {
        self.terms.values().all(|c| c.is_zero())
    }

    pub fn is_constant(&self) -> bool {
        self.terms.values().all(|c| c.as_const().is_some())
    }

    pub fn add(&self, other: &BForm) -> Result<BForm> {
        if self.dim != other.dim || self.degree != other.degree {
            return Err(Error::Dimension("adding forms of different shape".into()));
        }
        let mut f = self.clone();
        for (k, c) in &other.terms {
            f.accumulate(k.clone(), c.clone());
        }
        Ok(f)
    }

    pub fn scale(&self, s: &Expr) -> BForm {
        let mut f = BForm::zero(self.dim, self.degree);
        for (k, c) in &self.terms {
            f.accumulate(k.clone(), s * c);
        }
        f
    }

    pub fn neg(&self) -> BForm {
        self.scale(&Expr::constant(-1.0))
    }

    pub fn map_coeffs(&self, f: impl Fn(&Expr) -> Expr) -> BForm {
        let mut out = BForm::zero(self.dim, self.degree);
        for (k, c) in &self.terms {
            out.accumulate(k.clone(), f(c));
        }
        out
    }

    pub fn wedge(&self, other: &BForm) -> Result<BForm> {
        if self.dim != other.dim {
            return Err(Error::Dimension("wedge of forms on different charts".into()));
        }
        let deg = self.degree + other.degree;
        if deg > self.dim {
            return Err(Error::DegreeOverflow(deg, self.dim));
        }
        let mut f = BForm::zero(self.dim, deg);
        for (i, a) in &self.terms {
            for (j, b) in &other.terms {
                let mut idx: Vec<usize> = i.iter().chain(j.iter()).cloned().collect();
                let s = sort_with_sign(&mut idx);
                if s == 0 {
                    continue;
                }
                let c = a * b;
                f.accumulate(idx, if s < 0 { -c } else { c });
            }
        }
        Ok(f)
    }

    /// Exterior derivative in the b-complex: `d(c e^I) = sum_a D_a c e^a ^ e^I`,
    /// using `d(dt/t) = 0`.
    pub fn exterior_d(&self, chart: &Chart) -> Result<BForm> {
        if self.dim != chart.dim() {
            return Err(Error::Dimension("form and chart dimension differ".into()));
        }
        if self.degree >= self.dim {
            return Err(Error::DegreeOverflow(self.degree + 1, self.dim));
        }
        let mut f = BForm::zero(self.dim, self.degree + 1);
        for (idx, c) in &self.terms {
            for a in 0..self.dim {
                if idx.contains(&a) {
                    continue;
                }
                let dc = chart.b_derivative(c, a);
                if dc.is_zero() {
                    continue;
                }
                let mut full = Vec::with_capacity(idx.len() + 1);
                full.push(a);
                full.extend_from_slice(idx);
                let s = sort_with_sign(&mut full);
                f.accumulate(full, if s < 0 { -dc } else { dc });
            }
        }
        Ok(f)
    }

    /// Interior product with a symbolic b-vector field.
    pub fn interior(&self, v: &[Expr]) -> Result<BForm> {
        if self.degree == 0 {
            return Err(Error::Dimension("interior product of a 0-form".into()));
        }
        let mut f = BForm::zero(self.dim, self.degree - 1);
        for (idx, c) in &self.terms {
            for (m, &slot) in idx.iter().enumerate() {
                let rest: Vec<usize> =
                    idx.iter().enumerate().filter(|&(k, _)| k != m).map(|(_, &s)| s).collect();
                let term = c * &v[slot];
                f.accumulate(rest, if m % 2 == 1 { -term } else { term });
            }
        }
        Ok(f)
    }

    pub fn eval_terms(&self, p: &[f64]) -> Result<Vec<(Vec<usize>, f64)>> {
        self.terms.iter().map(|(k, c)| Ok((k.clone(), c.eval(p)?))).collect()
    }

    /// `Omega[a][b] = form(e_a, e_b)` for a 2-form.
    pub fn matrix(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        if self.degree != 2 {
            return Err(Error::Dimension("matrix of a non-2-form".into()));
        }
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (k, c) in &self.terms {
            let v = c.eval(p)?;
            m[(k[0], k[1])] = v;
            m[(k[1], k[0])] = -v;
        }
        Ok(m)
    }

    /// Contraction with `k` b-vectors given by their b-frame components.
    pub fn pair_values(&self, p: &[f64], vectors: &[Vec<f64>]) -> Result<f64> {
        if vectors.len() != self.degree {
            return Err(Error::Dimension(format!(
                "{}-form paired with {} vectors",
                self.degree,
                vectors.len()
            )));
        }
        let k = self.degree;
        let mut total = 0.0;
        for (idx, c) in &self.terms {
            let m = DMatrix::from_fn(k, k, |a, b| vectors[b][idx[a]]);
            total += c.eval(p)? * if k == 0 { 1.0 } else { m.determinant() };
        }
        Ok(total)
    }

    pub fn pair(&self, p: &[f64], vectors: &[&BVectorField]) -> Result<f64> {
        let vals: Vec<Vec<f64>> =
            vectors.iter().map(|v| v.b_components(p)).collect::<Result<_>>()?;
        self.pair_values(p, &vals)
    }

    /// Pullback through a coordinate change given by the b-differentials of
    /// the target frame functions and the images of the target coordinates.
    /// `frame[a]` is the b-differential (in the source coframe) of the function
    /// dual to target slot `a`: `d log|t'|` for slot 0, `dy_a` otherwise.
    pub fn pullback(&self, images: &[Expr], frame: &[BForm]) -> Result<BForm> {
        let dim = frame.first().map(|f| f.dim).unwrap_or(self.dim);
        let mut out = BForm::zero(dim, self.degree);
        for (idx, c) in &self.terms {
            let mut piece = BForm::from_terms(dim, 0, [(vec![], c.compose(images))]);
            for &slot in idx {
                piece = piece.wedge(&frame[slot])?;
            }
            out = out.add(&piece)?;
        }
        Ok(out)
    }
}

/// Pointwise b-vector field: components in the b-frame.
pub trait VectorField: Send + Sync {
    fn b_components(&self, p: &[f64]) -> Result<Vec<f64>>;

    /// `J[(c, a)] = D_a v^c` where exactly available.
    fn b_jacobian(&self, _p: &[f64]) -> Result<Option<DMatrix<f64>>> {
        Ok(None)
    }
}

/// A b-vector field with symbolic coefficients: `v_0` multiplies `t d/dt`
/// and `v_k` multiplies the `k`-th remaining coordinate direction.
#[derive(Debug, Clone)]
pub struct BVectorField {
    chart: Arc<Chart>,
    coeffs: Vec<Expr>,
}

impl BVectorField {
    pub fn new(chart: Arc<Chart>, coeffs: Vec<Expr>) -> Result<Self> {
        if coeffs.len() != chart.dim() {
            return Err(Error::Dimension("vector field length".into()));
        }
        Ok(BVectorField { chart, coeffs })
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    /// Ordinary coordinate components; the `t` entry is `t * v_0`.
    pub fn smooth_components(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.chart.smooth_components(p, &self.b_components(p)?))
    }
}

impl VectorField for BVectorField {
    fn b_components(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.coeffs.iter().map(|c| c.eval(p)).collect()
    }

    fn b_jacobian(&self, p: &[f64]) -> Result<Option<DMatrix<f64>>> {
        let n = self.chart.dim();
        let mut j = DMatrix::zeros(n, n);
        for c in 0..n {
            for a in 0..n {
                j[(c, a)] = self.chart.b_derivative(&self.coeffs[c], a).eval(p)?;
            }
        }
        Ok(Some(j))
    }
}
