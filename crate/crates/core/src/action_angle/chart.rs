//! Action-angle charts on a standard-model neighbourhood of a Liouville
//! torus meeting `Z`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::action_angle::homotopy::HomotopyOperator;
use crate::bfunction::PreparedFunction;
use crate::chart::Chart;
use crate::dynamics::lattice::{period_lattice, LatticeOptions, PeriodLatticeBasis};
use crate::dynamics::uniformize::{Interpolation, LatticeField, TorusLayout, Uniformization};
use crate::error::{Error, Result};
use crate::form::VectorField;
use crate::observable::{NumericObservable, Observable};
use crate::sampling::SamplePlan;
use crate::systems::{normal_form, NCBSystem};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub lattice: LatticeOptions,
    /// Transverse grid nodes per dimension for the lattice field.
    pub nodes_per_dim: usize,
    pub interpolation: Interpolation,
    /// Base point of the lattice scan; defaults to the chart centre on `Z`.
    pub base_point: Option<Vec<f64>>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            lattice: LatticeOptions::default(),
            nodes_per_dim: 11,
            interpolation: Interpolation::Chebyshev,
            base_point: None,
        }
    }
}

/// Values of the action-angle coordinates at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalCoordinates {
    pub angles: Vec<f64>,
    pub t_hat: f64,
    /// `a_1 = c log|t_hat|`, then `a_2..a_r`.
    pub actions: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// Maps `theta_1..theta_r`, `t_hat`, `a_2..a_r`, `p_k`, `q_k` in which
/// `w = (c/t_hat) dtheta_1 ^ dt_hat + sum dtheta_i ^ da_i + sum dp_k ^ dq_k`.
#[derive(Clone)]
pub struct ActionAngleChart {
    system: NCBSystem,
    prepared: Vec<PreparedFunction>,
    uniform: Uniformization,
    lattice: PeriodLatticeBasis,
    layout: TorusLayout,
    homotopy: HomotopyOperator,
    c: f64,
}

const SHOOT_TOL: f64 = 1e-9;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl ActionAngleChart {
    /// Normal form, period lattice on `Z`, lattice field, uniformization.
    pub fn build(sys: &NCBSystem, opts: &PipelineOptions) -> Result<Self> {
        let nf = normal_form(sys)?;
        let system = nf.system;
        let chart = system.structure.chart_arc();
        let r = system.rank;
        let n = chart.n();
        let layout = TorusLayout::of(&chart);
        let t = chart.t_index().ok_or_else(|| Error::NotStandardModel("chart has no critical hypersurface".into()))?;
        if layout.angles.len() != r || !layout.transverse[..r].contains(&t) {
            return Err(Error::NotStandardModel(format!(
                "need {r} periodic coordinates and t among the first {r} transverse ones"
            )));
        }
        if system.s() < r || (system.s() - r) % 2 != 0 || (system.s() - r) / 2 != n - r {
            return Err(Error::Dimension(format!("s = {}, r = {r}, n = {n}: need (s - r)/2 = n - r", system.s())));
        }
        let fields = (0..r)
            .map(|i| system.structure.hamiltonian_field(&system.integrals[i]))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&dyn VectorField> = fields.iter().map(|f| f as &dyn VectorField).collect();
        let base = opts.base_point.clone().unwrap_or_else(|| chart.center());
        let lattice = period_lattice(&opts.lattice, &chart, &refs, &base)?;
        let field = LatticeField::build(chart.clone(), &refs, &lattice, opts.nodes_per_dim, opts.interpolation, &opts.lattice)?;
        let uniform = Uniformization::new(system.structure.clone(), Arc::new(field), fields);
        let homotopy = HomotopyOperator::new(chart.clone(), layout.transverse[..r].to_vec())?;
        let prepared = system.integrals.iter().map(|f| f.prepare(chart.clone())).collect();
        let c = -lattice.basis[0][0] * system.integrals[0].c;
        Ok(ActionAngleChart { system, prepared, uniform, lattice, layout, homotopy, c })
    }

    pub fn modular_period(&self) -> f64 {
        self.c
    }

    pub fn rank(&self) -> usize {
        self.system.rank
    }

    pub fn chart(&self) -> &Chart {
        self.system.chart()
    }

    /// The system after normal form.
    pub fn system(&self) -> &NCBSystem {
        &self.system
    }

    pub fn lattice(&self) -> &PeriodLatticeBasis {
        &self.lattice
    }

    pub fn uniformization(&self) -> &Uniformization {
        &self.uniform
    }

    pub fn homotopy(&self) -> &HomotopyOperator {
        &self.homotopy
    }

    /// Number of transverse pairs `l = n - r`.
    pub fn pairs(&self) -> usize {
        (self.system.s() - self.rank()) / 2
    }

    /// b-coframe coefficients of `alpha_i = -sum_j lambda_i^j df_j`.
    pub fn alpha(&self, i: usize, p: &[f64]) -> Result<Vec<f64>> {
        let (lambda, _) = self.uniform.lattice.eval(p);
        let mut out = vec![0.0; p.len()];
        for (j, f) in self.prepared.iter().take(self.rank()).enumerate() {
            let l = lambda[i][j];
            if l == 0.0 {
                continue;
            }
            for (o, g) in out.iter_mut().zip(f.b_gradient(p)?) {
                *o -= l * g;
            }
        }
        Ok(out)
    }

    /// Smooth part of the action: `I(alpha_1 - c dt/t)` for `i = 0`,
    /// `a_{i+1} = I(alpha_{i+1})` otherwise.
    pub fn action_smooth(&self, i: usize, p: &[f64]) -> Result<f64> {
        let c = self.c;
        let alpha = |q: &[f64]| -> Result<Vec<f64>> {
            let mut a = self.alpha(i, q)?;
            if i == 0 {
                a[0] -= c;
            }
            Ok(a)
        };
        self.homotopy.apply(&alpha, p)
    }

    /// `t_hat = t exp(I(alpha_1 - c dt/t) / c)`.
    pub fn t_hat(&self, p: &[f64]) -> Result<f64> {
        let t = self.chart().t_value(p).unwrap_or(0.0);
        Ok(t * (self.action_smooth(0, p)? / self.c).exp())
    }

    /// Action `a_{i+1}` as an observable; `a_1` carries `c log|t|`.
    pub fn action_observable(self: &Arc<Self>, i: usize) -> NumericObservable {
        let me = self.clone();
        let obs = NumericObservable::new(self.system.structure.chart_arc(), Arc::new(move |p| me.action_smooth(i, p)));
        if i == 0 {
            obs.with_log(self.c)
        } else {
            obs
        }
    }

    /// Angle `theta_{i+1}` as an observable.
    pub fn angle_observable(self: &Arc<Self>, i: usize) -> NumericObservable {
        let me = self.clone();
        NumericObservable::new(self.system.structure.chart_arc(), Arc::new(move |p| Ok(me.angles(p, None)?[i]))).angle()
    }

    /// Flow of `sum_i s_i Y_i` for unit time.
    pub fn torus_action(&self, p: &[f64], s: &[f64]) -> Result<Vec<f64>> {
        if s.iter().all(|&x| x == 0.0) {
            return Ok(p.to_vec());
        }
        let y = self.uniform.combination(s);
        self.uniform.integrator.endpoint(self.chart(), &y, p, 1.0)
    }

    /// The reference point `sigma(b)` of the torus through `p`.
    pub fn section(&self, p: &[f64]) -> Vec<f64> {
        self.layout.section(self.chart(), &self.layout.transverse_values(p))
    }

    fn shoot_residual(&self, base: &[f64], p: &[f64], s: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let q = self.torus_action(base, s)?;
        Ok((self.chart().difference(&q, p), q))
    }

    /// Angles of `p`: the `s in [0,1)^r` with `sum s_i Y_i` carrying
    /// `sigma(b)` to `p`, by Gauss–Newton from `hint` or a `5^r` seed grid.
    pub fn angles(&self, p: &[f64], hint: Option<&[f64]>) -> Result<Vec<f64>> {
        let chart = self.chart();
        let r = self.rank();
        let base = self.section(p);
        let seeds: Vec<Vec<f64>> = match hint {
            Some(h) => vec![h.to_vec()],
            None => (0..5usize.pow(r as u32))
                .map(|mut k| {
                    (0..r)
                        .map(|_| {
                            let v = (k % 5) as f64 * 0.2;
                            k /= 5;
                            v
                        })
                        .collect()
                })
                .collect(),
        };
        let mut best: Option<(f64, Vec<f64>)> = None;
        for s in seeds {
            let (res, _) = self.shoot_residual(&base, p, &s)?;
            let n = norm(&res);
            if best.as_ref().map_or(true, |(b, _)| n < *b) {
                best = Some((n, s));
            }
        }
        let (_, mut s) = best.expect("at least one seed");
        let (mut res, mut q) = self.shoot_residual(&base, p, &s)?;
        for _ in 0..40 {
            let before = norm(&res);
            if before < 1e-14 {
                break;
            }
            let mut jac = DMatrix::zeros(p.len(), r);
            for i in 0..r {
                let y = self.uniform.field(i);
                let v = chart.smooth_components(&q, &y.b_components(&q)?);
                jac.set_column(i, &DVector::from_vec(v));
            }
            let delta = jac
                .svd(true, true)
                .solve(&DVector::from_vec(res.clone()), 1e-14)
                .map_err(|_| Error::Shooting(before))?;
            let mut damp = 1.0;
            loop {
                let trial: Vec<f64> = s.iter().zip(delta.iter()).map(|(a, d)| a - damp * d).collect();
                let (rt, qt) = self.shoot_residual(&base, p, &trial)?;
                if norm(&rt) < before || damp < 1e-3 {
                    s = trial;
                    res = rt;
                    q = qt;
                    break;
                }
                damp *= 0.5;
            }
            if delta.norm() * damp < 1e-15 {
                break;
            }
        }
        let n = norm(&res);
        if n > SHOOT_TOL {
            return Err(Error::Shooting(n));
        }
        Ok(s.into_iter().map(|x| x.rem_euclid(1.0)).collect())
    }

    /// All coordinates at `p`.
    pub fn evaluate(&self, p: &[f64]) -> Result<NormalCoordinates> {
        let r = self.rank();
        let angles = self.angles(p, None)?;
        let t_hat = self.t_hat(p)?;
        let mut actions = vec![self.c * t_hat.abs().ln()];
        for i in 1..r {
            actions.push(self.action_smooth(i, p)?);
        }
        let (mut pp, mut qq) = (Vec::new(), Vec::new());
        for k in 0..self.pairs() {
            pp.push(self.prepared[r + 2 * k].value(p)?);
            qq.push(self.prepared[r + 2 * k + 1].value(p)?);
        }
        Ok(NormalCoordinates { angles, t_hat, actions, p: pp, q: qq })
    }

    /// Grid export over the sample plan.
    pub fn export(&self, plan: &SamplePlan) -> Result<ChartExport> {
        let points = plan.bulk_points(self.chart());
        let values = points.iter().map(|p| self.evaluate(p)).collect::<Result<Vec<_>>>()?;
        Ok(ChartExport {
            schema: crate::report::SCHEMA,
            modular_period: self.c,
            coordinates: self.chart().names().to_vec(),
            lattice: self.lattice.clone(),
            points,
            values,
        })
    }
}

impl crate::action_angle::verify::NormalFormMap for ActionAngleChart {
    fn rank(&self) -> usize {
        self.rank()
    }

    fn pairs(&self) -> usize {
        self.pairs()
    }

    fn modular_period(&self) -> f64 {
        self.c
    }

    fn smooth_coordinates(&self, p: &[f64], hint: Option<&[f64]>) -> Result<Vec<f64>> {
        let r = self.rank();
        let mut out = self.angles(p, hint)?;
        out.push(self.action_smooth(0, p)? / self.c);
        for i in 1..r {
            out.push(self.action_smooth(i, p)?);
        }
        for k in 0..self.pairs() {
            out.push(self.prepared[r + 2 * k].value(p)?);
            out.push(self.prepared[r + 2 * k + 1].value(p)?);
        }
        Ok(out)
    }

    fn orbit(&self, p: &[f64]) -> Result<Vec<Vec<f64>>> {
        let r = self.rank();
        [0.25, 0.5, 0.8]
            .iter()
            .map(|&w| {
                let s: Vec<f64> = (0..r).map(|i| w * (i + 1) as f64 % 1.0).collect();
                self.torus_action(p, &s)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartExport {
    pub schema: u32,
    pub modular_period: f64,
    pub coordinates: Vec<String>,
    pub lattice: PeriodLatticeBasis,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<NormalCoordinates>,
}
