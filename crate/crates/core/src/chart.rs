//! A single coordinate chart with an optional critical hypersurface
//! `Z = {t = 0}`.
//!
//! Frame slots: when the chart meets `Z`, slot 0 of every b-frame and
//! b-coframe is the `t` direction (`t d/dt` and `dt/t`); slots `1..dim` are the
//! remaining coordinates in increasing order. Without `Z`, slot `k` is
//! coordinate `k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;

/// Slack allowed on the boundary of the domain box.
pub const BOX_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChartDescriptor", into = "ChartDescriptor")]
pub struct Chart {
    names: Vec<String>,
    t_index: Option<usize>,
    bounds: Vec<(f64, f64)>,
    periodic: Vec<bool>,
    slot_coords: Vec<usize>,
    coord_slots: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartDescriptor {
    pub dim: usize,
    pub names: Vec<String>,
    pub t_index: Option<usize>,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub periodic: Vec<bool>,
}

impl TryFrom<ChartDescriptor> for Chart {
    type Error = Error;
    fn try_from(d: ChartDescriptor) -> Result<Chart> {
        if d.names.len() != d.dim {
            return Err(Error::InvalidChart(format!(
                "dim {} but {} names",
                d.dim,
                d.names.len()
            )));
        }
        Chart::new(
            d.names,
            d.t_index,
            d.bounds.into_iter().map(|b| (b[0], b[1])).collect(),
            d.periodic,
        )
    }
}

impl From<Chart> for ChartDescriptor {
    fn from(c: Chart) -> Self {
        ChartDescriptor {
            dim: c.dim(),
            names: c.names,
            t_index: c.t_index,
            bounds: c.bounds.into_iter().map(|(a, b)| [a, b]).collect(),
            periodic: c.periodic,
        }
    }
}

impl Chart {
    pub fn new(
        names: Vec<String>,
        t_index: Option<usize>,
        bounds: Vec<(f64, f64)>,
        periodic: Vec<bool>,
    ) -> Result<Self> {
        let dim = names.len();
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::InvalidChart(format!("dimension {dim} is not positive and even")));
        }
        if bounds.len() != dim || periodic.len() != dim {
            return Err(Error::InvalidChart("box/periodic length differs from dim".into()));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo < hi) {
                return Err(Error::InvalidChart(format!("empty interval for coordinate {i}")));
            }
        }
        let mut slot_coords = Vec::with_capacity(dim);
        if let Some(t) = t_index {
            if t >= dim {
                return Err(Error::InvalidChart(format!("t index {t} out of range")));
            }
            if periodic[t] {
                return Err(Error::InvalidChart("the t coordinate cannot be periodic".into()));
            }
            let (lo, hi) = bounds[t];
            if !(lo < 0.0 && hi > 0.0) {
                return Err(Error::InvalidChart("t interval must contain 0 in its interior".into()));
            }
            slot_coords.push(t);
            slot_coords.extend((0..dim).filter(|&i| i != t));
        } else {
            slot_coords.extend(0..dim);
        }
        let mut coord_slots = vec![0; dim];
        for (s, &c) in slot_coords.iter().enumerate() {
            coord_slots[c] = s;
        }
        Ok(Chart { names, t_index, bounds, periodic, slot_coords, coord_slots })
    }

    /// Convenience constructor from string slices.
    pub fn from_parts(
        names: &[&str],
        t_index: Option<usize>,
        bounds: &[(f64, f64)],
        periodic: &[bool],
    ) -> Result<Self> {
        Chart::new(
            names.iter().map(|s| s.to_string()).collect(),
            t_index,
            bounds.to_vec(),
            periodic.to_vec(),
        )
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn n(&self) -> usize {
        self.dim() / 2
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn t_index(&self) -> Option<usize> {
        self.t_index
    }

    pub fn has_z(&self) -> bool {
        self.t_index.is_some()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn slot_coord(&self, slot: usize) -> usize {
        self.slot_coords[slot]
    }

    pub fn coord_slot(&self, coord: usize) -> usize {
        self.coord_slots[coord]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn t_value(&self, p: &[f64]) -> Option<f64> {
        self.t_index.map(|t| p[t])
    }

    pub fn on_z(&self, p: &[f64]) -> bool {
        self.t_value(p) == Some(0.0)
    }

    /// Wrap periodic coordinates into `[lo, lo + 1)`.
    pub fn wrap(&self, p: &mut [f64]) {
        for i in 0..self.dim() {
            if self.periodic[i] {
                let lo = self.bounds[i].0;
                p[i] = lo + (p[i] - lo).rem_euclid(1.0);
            }
        }
    }

    /// Coordinate difference `a - b`, with periodic entries reduced to
    /// `[-1/2, 1/2)`.
    pub fn difference(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let d = a[i] - b[i];
                if self.periodic[i] {
                    d - d.round()
                } else {
                    d
                }
            })
            .collect()
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.difference(a, b).iter().map(|d| d * d).sum::<f64>().sqrt()
    }

    /// Domain check on the non-periodic coordinates. Periodic coordinates are
    /// wrapped rather than rejected.
    pub fn check(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::Dimension(format!("point has {} entries, chart {}", p.len(), self.dim())));
        }
        for i in 0..self.dim() {
            if self.periodic[i] {
                continue;
            }
            let (lo, hi) = self.bounds[i];
            let v = p[i];
            if !(v >= lo - BOX_SLACK && v <= hi + BOX_SLACK) {
                return Err(Error::OutsideDomain { coord: i, value: v });
            }
        }
        Ok(())
    }

    /// Bounds used for log certificates; periodic coordinates cover one full
    /// period starting at the lower bound.
    pub fn certificate_box(&self) -> Vec<(f64, f64)> {
        self.bounds.clone()
    }

    /// b-frame derivative `D_slot h`: `t dh/dt` in slot 0 of a chart with `Z`,
    /// an ordinary partial derivative otherwise.
    pub fn b_derivative(&self, h: &Expr, slot: usize) -> Expr {
        let c = self.slot_coord(slot);
        match self.t_index {
            Some(t) if slot == 0 => Expr::var(t) * h.diff(c),
            _ => h.diff(c),
        }
    }

    /// Converts b-frame vector components to ordinary coordinate components.
    /// The `t` component is `t * v_0`, so it is exactly zero on `Z`.
    pub fn smooth_components(&self, p: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (slot, v) in b.iter().enumerate() {
            let c = self.slot_coord(slot);
            out[c] = match self.t_index {
                Some(t) if slot == 0 => p[t] * v,
                _ => *v,
            };
        }
        out
    }

    /// Centre of the box, with `t = 0` when the chart meets `Z`.
    pub fn center(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.bounds.iter().map(|(a, b)| 0.5 * (a + b)).collect();
        for i in 0..self.dim() {
            if self.periodic[i] {
                p[i] = self.bounds[i].0;
            }
        }
        if let Some(t) = self.t_index {
            p[t] = 0.0;
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_layout_puts_t_first() {
        let c = Chart::from_parts(
            &["x", "t", "y", "z"],
            Some(1),
            &[(-1.0, 1.0); 4],
            &[false; 4],
        )
        .unwrap();
        assert_eq!(c.slot_coord(0), 1);
        assert_eq!(c.slot_coord(1), 0);
        assert_eq!(c.slot_coord(3), 3);
        assert_eq!(c.coord_slot(1), 0);
    }

    #[test]
    fn rejects_bad_charts() {
        assert!(Chart::from_parts(&["a", "b", "c"], None, &[(0.0, 1.0); 3], &[false; 3]).is_err());
        assert!(Chart::from_parts(&["t", "x"], Some(0), &[(0.0, 1.0); 2], &[false; 2]).is_err());
        assert!(Chart::from_parts(&["t", "x"], Some(0), &[(-1.0, 1.0); 2], &[true, false]).is_err());
    }

    #[test]
    fn smooth_t_component_vanishes_on_z() {
        let c = Chart::from_parts(&["t", "z"], Some(0), &[(-1.0, 1.0); 2], &[false; 2]).unwrap();
        let s = c.smooth_components(&[0.0, 0.3], &[5.0, 2.0]);
        assert_eq!(s, vec![0.0, 2.0]);
    }

    #[test]
    fn wrapped_difference() {
        let c = Chart::from_parts(&["th", "a"], None, &[(0.0, 1.0), (-1.0, 1.0)], &[true, false])
            .unwrap();
        let d = c.difference(&[0.95, 0.0], &[0.05, 0.0]);
        assert!((d[0] + 0.1).abs() < 1e-12);
        let mut p = [1.25, 0.0];
        c.wrap(&mut p);
        assert!((p[0] - 0.25).abs() < 1e-12);
    }
}
