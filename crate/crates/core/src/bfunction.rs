//! b-functions `c log|t| + g`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::form::BForm;
use crate::observable::Observable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BFunction {
    pub c: f64,
    #[serde(rename = "g_expr")]
    pub g: Expr,
}

impl BFunction {
    pub fn smooth(g: Expr) -> Self {
        BFunction { c: 0.0, g }
    }

    pub fn log_t(c: f64) -> Self {
        BFunction { c, g: Expr::zero() }
    }

    pub fn new(c: f64, g: Expr) -> Self {
        BFunction { c, g }
    }

    /// Accepts `coeff * log|t| + g` only when `coeff` folds to a constant.
    pub fn from_log_expression(coeff: &Expr, g: Expr) -> Result<Self> {
        match coeff.as_const() {
            Some(c) => Ok(BFunction { c, g }),
            None => Err(Error::NotBFunction(format!("log coefficient {coeff} is not constant"))),
        }
    }

    pub fn is_smooth(&self) -> bool {
        self.c == 0.0
    }

    /// `c log|t(p)| + g(p)`; infinite on `Z` when `c != 0`.
    pub fn evaluate(&self, chart: &Chart, p: &[f64]) -> Result<f64> {
        chart.check(p)?;
        let g = self.g.eval(p)?;
        if self.c == 0.0 {
            return Ok(g);
        }
        match chart.t_value(p) {
            Some(t) => Ok(self.c * t.abs().ln() + g),
            None => Err(Error::NotBFunction("log part on a chart without Z".into())),
        }
    }

    /// Coefficients in the b-coframe: `(c + t dg/dt, dg/dx_1, ...)`.
    pub fn b_differential(&self, chart: &Chart) -> BForm {
        BForm::one_form(self.b_gradient_exprs(chart))
    }

    pub fn b_gradient_exprs(&self, chart: &Chart) -> Vec<Expr> {
        let mut g: Vec<Expr> = (0..chart.dim()).map(|a| chart.b_derivative(&self.g, a)).collect();
        if self.c != 0.0 {
            g[0] = g[0].clone() + self.c;
        }
        g
    }

    pub fn scale(&self, k: f64) -> BFunction {
        BFunction { c: self.c * k, g: self.g.clone() * k }
    }

    pub fn sub(&self, other: &BFunction) -> BFunction {
        BFunction { c: self.c - other.c, g: &self.g - &other.g }
    }

    pub fn add(&self, other: &BFunction) -> BFunction {
        BFunction { c: self.c + other.c, g: &self.g + &other.g }
    }

    pub fn prepare(&self, chart: Arc<Chart>) -> PreparedFunction {
        PreparedFunction::new(chart, self.clone())
    }
}

/// A b-function with its b-gradient and b-Hessian differentiated once, up
/// front.
#[derive(Debug, Clone)]
pub struct PreparedFunction {
    chart: Arc<Chart>,
    f: BFunction,
    grad: Vec<Expr>,
    hess: Vec<Vec<Expr>>,
}

impl PreparedFunction {
    pub fn new(chart: Arc<Chart>, f: BFunction) -> Self {
        let grad = f.b_gradient_exprs(&chart);
        let hess = (0..chart.dim())
            .map(|a| grad.iter().map(|g| chart.b_derivative(g, a)).collect())
            .collect();
        PreparedFunction { chart, f, grad, hess }
    }

    pub fn function(&self) -> &BFunction {
        &self.f
    }

    pub fn gradient_exprs(&self) -> &[Expr] {
        &self.grad
    }
}

impl Observable for PreparedFunction {
    fn value(&self, p: &[f64]) -> Result<f64> {
        self.f.evaluate(&self.chart, p)
    }

    fn b_gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.grad.iter().map(|g| g.eval(p)).collect()
    }

    fn b_hessian(&self, p: &[f64]) -> Result<Option<DMatrix<f64>>> {
        let n = self.grad.len();
        let mut h = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                h[(a, b)] = self.hess[a][b].eval(p)?;
            }
        }
        Ok(Some(h))
    }
}

/// Change of defining function `t = exp(log_scale) * t'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefiningFunction {
    pub log_scale: Expr,
}

impl DefiningFunction {
    pub fn identity() -> Self {
        DefiningFunction { log_scale: Expr::zero() }
    }

    /// Value of the new defining function given the chart's own `t'`.
    pub fn evaluate(&self, chart: &Chart, p: &[f64]) -> Result<f64> {
        let t = chart.t_value(p).ok_or_else(|| Error::InvalidChart("chart has no Z".into()))?;
        Ok(self.log_scale.eval(p)?.exp() * t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> Chart {
        Chart::from_parts(&["t", "x1"], Some(0), &[(-3.0, 3.0); 2], &[false; 2]).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let c = chart();
        assert_eq!(BFunction::log_t(1.0).evaluate(&c, &[1.0, 0.0]).unwrap(), 0.0);
        let f = BFunction::new(2.0, Expr::var(0));
        let e = std::f64::consts::E;
        assert!((f.evaluate(&c, &[e, 0.0]).unwrap() - (2.0 + e)).abs() < 1e-14);
        assert_eq!(f.evaluate(&c, &[0.0, 0.0]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn differential_folds_dt() {
        let c = chart();
        let f = BFunction::new(1.0, Expr::var(0) * Expr::var(1));
        let df = f.b_differential(&c);
        let p = [0.5, 0.7];
        assert!((df.coeff(&[0]).eval(&p).unwrap() - (1.0 + 0.35)).abs() < 1e-14);
        assert!((df.coeff(&[1]).eval(&p).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(BFunction::log_t(1.0).b_differential(&c), BForm::basis(2, &[0]));
    }

    #[test]
    fn non_constant_log_coefficient_rejected() {
        let e = BFunction::from_log_expression(&Expr::var(2), Expr::zero());
        assert!(matches!(e, Err(Error::NotBFunction(_))));
    }
}
