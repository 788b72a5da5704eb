//! Quasi-random and seeded sample plans over a chart's domain box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chart::Chart;

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// `k`-th point of the Halton sequence in `[0,1)^dim`, skipping the origin.
pub fn halton(k: usize, dim: usize) -> Vec<f64> {
    (0..dim).map(|d| radical_inverse(k as u64 + 1, PRIMES[d % PRIMES.len()])).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    /// Samples on the full box.
    pub bulk: usize,
    /// Samples on `Z`.
    pub on_z: usize,
    /// Fraction of each interval trimmed at both ends.
    pub margin: f64,
    pub seed: u64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan { bulk: 200, on_z: 100, margin: 0.05, seed: 0 }
    }
}

impl SamplePlan {
    pub fn with_counts(bulk: usize, on_z: usize) -> Self {
        SamplePlan { bulk, on_z, ..Default::default() }
    }

    fn place(&self, chart: &Chart, u: &[f64]) -> Vec<f64> {
        chart
            .bounds()
            .iter()
            .zip(chart.periodic())
            .zip(u)
            .map(|((&(lo, hi), &per), &x)| {
                if per {
                    lo + x * (hi - lo)
                } else {
                    let w = hi - lo;
                    lo + self.margin * w + x * (1.0 - 2.0 * self.margin) * w
                }
            })
            .collect()
    }

    /// Halton points on the box, offset by the seed along the sequence.
    /// Exact zeros of `t` are nudged away so b-functions stay finite.
    pub fn bulk_points(&self, chart: &Chart) -> Vec<Vec<f64>> {
        let off = (self.seed % 10_000) as usize * 7919;
        (0..self.bulk)
            .map(|k| {
                let mut p = self.place(chart, &halton(off + k, chart.dim()));
                if let Some(t) = chart.t_index() {
                    if p[t] == 0.0 {
                        p[t] = 1e-3;
                    }
                }
                p
            })
            .collect()
    }

    /// Halton points on `Z` (empty when the chart has no `Z`).
    pub fn z_points(&self, chart: &Chart) -> Vec<Vec<f64>> {
        let Some(t) = chart.t_index() else {
            return Vec::new();
        };
        let off = (self.seed % 10_000) as usize * 7919;
        (0..self.on_z)
            .map(|k| {
                let mut p = self.place(chart, &halton(off + k, chart.dim()));
                p[t] = 0.0;
                p
            })
            .collect()
    }

    pub fn all_points(&self, chart: &Chart) -> Vec<Vec<f64>> {
        let mut v = self.bulk_points(chart);
        v.extend(self.z_points(chart));
        v
    }

    /// Pseudo-random points strictly off `Z`, reproducible from the seed.
    pub fn random_points(&self, chart: &Chart, count: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..count)
            .map(|_| {
                let u: Vec<f64> = (0..chart.dim()).map(|_| rng.gen::<f64>()).collect();
                let mut p = self.place(chart, &u);
                if let Some(t) = chart.t_index() {
                    if p[t].abs() < 1e-3 {
                        p[t] = 1e-3_f64.copysign(p[t]);
                    }
                }
                p
            })
            .collect()
    }
}
