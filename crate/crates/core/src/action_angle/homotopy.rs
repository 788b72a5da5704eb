//! The radial homotopy operator of the retraction `phi_tau` that scales the
//! first `r` transverse coordinates by `tau`.

use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::GaussLegendre;

use crate::chart::Chart;
use crate::error::{Error, Result};

pub const GL_NODES: usize = 32;

/// `I(alpha)(m) = int_0^1 alpha_{phi_tau m}(d/dtau phi_tau m) dtau`.
#[derive(Debug, Clone)]
pub struct HomotopyOperator {
    chart: Arc<Chart>,
    scaled: Vec<usize>,
    rule: Arc<GaussLegendre>,
    coarse: Arc<GaussLegendre>,
}

impl HomotopyOperator {
    /// `scaled` lists the chart coordinates contracted to 0; the box must
    /// contain 0 along each of them.
    pub fn new(chart: Arc<Chart>, scaled: Vec<usize>) -> Result<Self> {
        for &k in &scaled {
            let (lo, hi) = chart.bounds()[k];
            if chart.periodic()[k] || lo > 0.0 || hi < 0.0 {
                return Err(Error::NotStandardModel(format!("cannot contract coordinate {}", chart.names()[k])));
            }
        }
        let n = |k: usize| NonZeroUsize::new(k).expect("positive node count");
        Ok(HomotopyOperator {
            chart,
            scaled,
            rule: Arc::new(GaussLegendre::new(n(GL_NODES))),
            coarse: Arc::new(GaussLegendre::new(n(GL_NODES / 2))),
        })
    }

    pub fn scaled(&self) -> &[usize] {
        &self.scaled
    }

    /// `phi_tau(p)`.
    pub fn retract(&self, p: &[f64], tau: f64) -> Vec<f64> {
        let mut q = p.to_vec();
        for &k in &self.scaled {
            q[k] *= tau;
        }
        q
    }

    /// The contracted integrand at `tau`, given the b-coframe coefficients of
    /// a 1-form. The `t` slot enters as `alpha_0 / tau`, which stays bounded
    /// when `alpha_0` vanishes on `Z`.
    pub fn integrand<F>(&self, alpha: &F, p: &[f64], tau: f64) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
    {
        let q = self.retract(p, tau);
        let a = alpha(&q)?;
        let mut acc = 0.0;
        for &k in &self.scaled {
            if self.chart.t_index() == Some(k) {
                if p[k] != 0.0 {
                    acc += a[0] / tau;
                }
            } else {
                acc += a[self.chart.coord_slot(k)] * p[k];
            }
        }
        Ok(acc)
    }

    fn quadrature<F>(&self, rule: &GaussLegendre, alpha: &F, p: &[f64]) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
    {
        let mut err = None;
        let v = rule.integrate(0.0, 1.0, |tau| match self.integrand(alpha, p, tau) {
            Ok(x) => x,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    /// `I(alpha)(p)` for a closed 1-form with no residue along `Z`.
    /// Fails when the 16- and 32-node rules disagree beyond `1e-6`.
    pub fn apply<F>(&self, alpha: &F, p: &[f64]) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
    {
        let fine = self.quadrature(&self.rule, alpha, p)?;
        let coarse = self.quadrature(&self.coarse, alpha, p)?;
        if (fine - coarse).abs() > 1e-6 * (1.0 + fine.abs()) {
            return Err(Error::Quadrature(format!("rules disagree by {:e} at {p:?}", (fine - coarse).abs())));
        }
        Ok(fine)
    }
}
