//! Pointwise access to functions through their b-differentials.
//!
//! Symbolic b-functions expose exact first and second b-derivatives; numeric
//! functions (interpolated lattice data, constructed coordinates) fall back to
//! central differences taken in the b-frame: the `t d/dt` slot is
//! differentiated against `log|t|`, so the step is multiplicative in `t`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::chart::Chart;
use crate::error::Result;

/// Default step for b-frame finite differences.
pub const FD_STEP: f64 = 1e-5;

pub trait Observable: Send + Sync {
    fn value(&self, p: &[f64]) -> Result<f64>;

    /// Components of the b-differential in the b-coframe.
    fn b_gradient(&self, p: &[f64]) -> Result<Vec<f64>>;

    /// `H[a][b] = D_a (df)_b`, when available exactly.
    fn b_hessian(&self, _p: &[f64]) -> Result<Option<DMatrix<f64>>> {
        Ok(None)
    }
}

/// `p` displaced by `h` along b-frame slot `slot`; multiplicative in `t`.
pub fn displaced(chart: &Chart, p: &[f64], slot: usize, h: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    let c = chart.slot_coord(slot);
    match chart.t_index() {
        Some(t) if slot == 0 => q[t] *= h.exp(),
        _ => q[c] += h,
    }
    q
}

/// Central b-frame difference of a scalar function. Returns 0 for the
/// `t d/dt` slot exactly on `Z`, where a smooth function has no such
/// derivative; b-functions with a log part must add their coefficient.
pub fn fd_b_derivative<F>(chart: &Chart, p: &[f64], slot: usize, h: f64, f: &F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + ?Sized,
{
    if slot == 0 && chart.on_z(p) {
        return Ok(0.0);
    }
    let fp = f(&displaced(chart, p, slot, h))?;
    let fm = f(&displaced(chart, p, slot, -h))?;
    Ok((fp - fm) / (2.0 * h))
}

/// Same as [`fd_b_derivative`] for an `R/Z`-valued function.
pub fn fd_b_derivative_angle<F>(chart: &Chart, p: &[f64], slot: usize, h: f64, f: &F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + ?Sized,
{
    if slot == 0 && chart.on_z(p) {
        return Ok(0.0);
    }
    let fp = f(&displaced(chart, p, slot, h))?;
    let fm = f(&displaced(chart, p, slot, -h))?;
    let d = fp - fm;
    Ok((d - d.round()) / (2.0 * h))
}

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;

/// A function `log_coeff * log|t| + smooth(p)` known only pointwise.
#[derive(Clone)]
pub struct NumericObservable {
    chart: Arc<Chart>,
    smooth: ScalarFn,
    log_coeff: f64,
    angle: bool,
    step: f64,
}

impl NumericObservable {
    pub fn new(chart: Arc<Chart>, smooth: ScalarFn) -> Self {
        NumericObservable { chart, smooth, log_coeff: 0.0, angle: false, step: FD_STEP }
    }

    pub fn with_log(mut self, c: f64) -> Self {
        self.log_coeff = c;
        self
    }

    /// Treat values as `R/Z`-valued when differencing.
    pub fn angle(mut self) -> Self {
        self.angle = true;
        self
    }

    pub fn with_step(mut self, h: f64) -> Self {
        self.step = h;
        self
    }

    pub fn smooth_value(&self, p: &[f64]) -> Result<f64> {
        (self.smooth)(p)
    }
}

impl Observable for NumericObservable {
    fn value(&self, p: &[f64]) -> Result<f64> {
        let s = (self.smooth)(p)?;
        if self.log_coeff == 0.0 {
            return Ok(s);
        }
        let t = self.chart.t_value(p).unwrap_or(1.0);
        Ok(self.log_coeff * t.abs().ln() + s)
    }

    fn b_gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        let f = |q: &[f64]| (self.smooth)(q);
        let mut g = Vec::with_capacity(self.chart.dim());
        for slot in 0..self.chart.dim() {
            let d = if self.angle {
                fd_b_derivative_angle(&self.chart, p, slot, self.step, &f)?
            } else {
                fd_b_derivative(&self.chart, p, slot, self.step, &f)?
            };
            g.push(d);
        }
        if self.chart.has_z() {
            g[0] += self.log_coeff;
        }
        Ok(g)
    }
}
