#![allow(dead_code)]

use rand::Rng;

use bsym::chart::Chart;
use bsym::{BForm, BFunction, Expr};

/// Random polynomial of degree at most 2 in the chart coordinates.
pub fn random_poly<R: Rng>(rng: &mut R, dim: usize) -> Expr {
    random_poly_in(rng, &(0..dim).collect::<Vec<_>>())
}

/// Random polynomial of degree at most 2 in the listed coordinates.
pub fn random_poly_in<R: Rng>(rng: &mut R, vars: &[usize]) -> Expr {
    let mut e = Expr::constant(rng.gen_range(-1.0..1.0));
    for _ in 0..rng.gen_range(1..=4) {
        let pick = |rng: &mut R| Expr::var(vars[rng.gen_range(0..vars.len())]);
        let coef = rng.gen_range(-1.0..1.0);
        let mono = if rng.gen_bool(0.5) { pick(rng) } else { pick(rng) * pick(rng) };
        e = e + mono * coef;
    }
    e
}

/// Random `c log|t| + polynomial`, with `c = 0` on charts without `Z`.
pub fn random_bfunction<R: Rng>(rng: &mut R, chart: &Chart) -> BFunction {
    let c = if chart.has_z() && rng.gen_bool(0.5) { rng.gen_range(-1.0..1.0) } else { 0.0 };
    BFunction::new(c, random_poly(rng, chart.dim()))
}

/// Points within `radius` of `m` (non-critical coordinates) with
/// `|t| in [radius / 10, radius]`.
pub fn near<R: Rng>(rng: &mut R, chart: &Chart, m: &[f64], radius: f64, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let mut p = m.to_vec();
            for (i, x) in p.iter_mut().enumerate() {
                if chart.t_index() == Some(i) {
                    let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    *x = s * rng.gen_range(radius / 10.0..radius);
                } else {
                    *x += rng.gen_range(-radius..radius);
                }
            }
            p
        })
        .collect()
}

/// Smooth non-polynomial coefficient: a quadratic plus `a sin(x_i) + b exp(x_j / 2)`.
pub fn random_coeff<R: Rng>(rng: &mut R, dim: usize) -> Expr {
    let a = rng.gen_range(-1.0..1.0);
    let b = rng.gen_range(-1.0..1.0);
    random_poly(rng, dim)
        + Expr::var(rng.gen_range(0..dim)).sin() * a
        + (Expr::var(rng.gen_range(0..dim)) * 0.5).exp() * b
}

/// Random `degree`-form with every slot combination present with probability 1/2.
pub fn random_form<R: Rng>(rng: &mut R, dim: usize, degree: usize) -> BForm {
    let mut terms = Vec::new();
    for mask in 0u32..(1 << dim) {
        if mask.count_ones() as usize == degree && rng.gen_bool(0.5) {
            let slots: Vec<usize> = (0..dim).filter(|i| mask & (1 << i) != 0).collect();
            terms.push((slots, random_coeff(rng, dim)));
        }
    }
    BForm::from_terms(dim, degree, terms)
}

/// Largest coefficient of `a - b` at `p`.
pub fn form_gap(a: &BForm, b: &BForm, p: &[f64]) -> f64 {
    let d = a.add(&b.neg()).expect("same shape");
    d.eval_terms(p).expect("finite").iter().map(|(_, v)| v.abs()).fold(0.0, f64::max)
}

/// A 4D chart `(theta, t, x, y)` with `t` critical.
pub fn b_chart() -> Chart {
    Chart::from_parts(
        &["theta", "t", "x", "y"],
        Some(1),
        &[(0.0, 1.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
        &[true, false, false, false],
    )
    .expect("valid chart")
}

pub fn random_point<R: Rng>(rng: &mut R, chart: &Chart) -> Vec<f64> {
    chart.bounds().iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect()
}
