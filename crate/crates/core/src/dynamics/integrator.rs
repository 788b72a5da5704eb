//! Dormand–Prince 5(4) with adaptive steps, for flows of b-vector fields in
//! smooth coordinates.
//!
//! Periodic coordinates are integrated unwrapped and wrapped on output. The
//! `t` component of a b-field is `t * v_0`, so a trajectory started on `Z`
//! stays there exactly; the state is additionally pinned to `t = 0`.

use serde::{Deserialize, Serialize};

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::form::VectorField;

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integrator {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub min_step: f64,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator { rtol: 1e-12, atol: 1e-12, max_step: 0.5, min_step: 1e-13 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least the initial point")
    }
}

fn smooth_rhs(chart: &Chart, field: &dyn VectorField, y: &[f64]) -> Result<Vec<f64>> {
    let mut q = y.to_vec();
    chart.wrap(&mut q);
    let b = field.b_components(&q)?;
    Ok(chart.smooth_components(&q, &b))
}

impl Integrator {
    /// Endpoint of the flow for `time` (negative times run backwards).
    pub fn endpoint(&self, chart: &Chart, field: &dyn VectorField, p0: &[f64], time: f64) -> Result<Vec<f64>> {
        let mut out = self.sample(chart, field, p0, &[time])?;
        Ok(out.pop().unwrap())
    }

    /// Every accepted step, with the initial point first.
    pub fn trajectory(&self, chart: &Chart, field: &dyn VectorField, p0: &[f64], time: f64) -> Result<Trajectory> {
        let mut traj = Trajectory { times: vec![0.0], states: vec![wrapped(chart, p0)] };
        self.run(chart, field, p0, time, &[], &mut |t, y| {
            traj.times.push(t);
            traj.states.push(wrapped(chart, y));
        })?;
        Ok(traj)
    }

    /// States at the requested times, which must be monotone in one
    /// direction starting from 0.
    pub fn sample(&self, chart: &Chart, field: &dyn VectorField, p0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
        let end = times.iter().cloned().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        let mut out = Vec::with_capacity(times.len());
        let mut k = 0;
        while k < times.len() && times[k] == 0.0 {
            out.push(wrapped(chart, p0));
            k += 1;
        }
        let stops: Vec<f64> = times[k..].to_vec();
        self.run(chart, field, p0, end, &stops, &mut |t, y| {
            if k < times.len() && t == times[k] {
                out.push(wrapped(chart, y));
                k += 1;
            }
        })?;
        Ok(out)
    }

    fn run(
        &self,
        chart: &Chart,
        field: &dyn VectorField,
        p0: &[f64],
        t_end: f64,
        stops: &[f64],
        on_step: &mut dyn FnMut(f64, &[f64]),
    ) -> Result<()> {
        chart.check(p0)?;
        if t_end == 0.0 {
            return Ok(());
        }
        let dir = t_end.signum();
        let n = p0.len();
        let pin_z = chart.on_z(p0).then(|| chart.t_index().unwrap());
        let mut y = p0.to_vec();
        let mut t = 0.0f64;
        let mut h = (0.01f64).min(self.max_step).min(t_end.abs());
        let mut next_stop = 0;
        let mut k = vec![vec![0.0; n]; 7];
        k[0] = smooth_rhs(chart, field, &y)?;
        let mut ytmp = vec![0.0; n];
        while dir * (t_end - t) > 0.0 {
            let mut target = t_end;
            if next_stop < stops.len() {
                target = stops[next_stop];
            }
            let remaining = (target - t).abs();
            let step = h.min(remaining);
            let landing = step == remaining;
            if step < self.min_step && !landing {
                return Err(Error::StepUnderflow(t));
            }
            let hs = dir * step;
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for j in 0..s {
                        acc += hs * A[s][j] * k[j][i];
                    }
                    ytmp[i] = acc;
                }
                if let Some(ti) = pin_z {
                    ytmp[ti] = 0.0;
                }
                k[s] = smooth_rhs(chart, field, &ytmp)?;
            }
            // ytmp holds the 5th-order solution (FSAL stage)
            let mut err = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for s in 0..7 {
                    e += (B5[s] - B4[s]) * k[s][i];
                }
                let sc = self.atol + self.rtol * y[i].abs().max(ytmp[i].abs());
                err += (hs * e / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if err <= 1.0 {
                let t_new = if landing { target } else { t + hs };
                let mut probe = ytmp.clone();
                chart.wrap(&mut probe);
                if chart.check(&probe).is_err() {
                    let mut last = y.clone();
                    chart.wrap(&mut last);
                    return Err(Error::DomainExit { time: t, state: last });
                }
                t = t_new;
                y.copy_from_slice(&ytmp);
                k[0] = k[6].clone();
                if landing && next_stop < stops.len() {
                    next_stop += 1;
                }
                on_step(t, &y);
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !landing {
                    h = (step * fac).min(self.max_step);
                }
            } else {
                let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                h = step * fac;
                if h < self.min_step {
                    return Err(Error::StepUnderflow(t));
                }
            }
        }
        Ok(())
    }
}

fn wrapped(chart: &Chart, y: &[f64]) -> Vec<f64> {
    let mut q = y.to_vec();
    chart.wrap(&mut q);
    q
}

/// Composition of the flows of `fields[i]` for `times[i]`, applied last to
/// first.
pub fn joint_flow(
    integ: &Integrator,
    chart: &Chart,
    fields: &[&dyn VectorField],
    p0: &[f64],
    times: &[f64],
) -> Result<Vec<f64>> {
    let mut p = p0.to_vec();
    for (x, &s) in fields.iter().zip(times).rev() {
        if s != 0.0 {
            p = integ.endpoint(chart, *x, &p, s)?;
        }
    }
    Ok(p)
}
