//! Non-commutative b-integrable systems: the four-condition verifier, the
//! normal form with `f_1 = log|t|`, induced target brackets and Cas-basic
//! tests.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bfunction::{BFunction, DefiningFunction};
use crate::chart::Chart;
use crate::dynamics::Integrator;
use crate::error::{Error, Result};
use crate::form::{BForm, VectorField};
use crate::observable::Observable;
use crate::poisson::BSymplecticStructure;
use crate::report::{CheckReport, SCHEMA};
use crate::sampling::SamplePlan;

/// Singular-value floor for independence tests.
pub const RANK_TOL: f64 = 1e-8;
/// Bracket tolerance for the involution condition.
pub const INVOLUTION_TOL: f64 = 1e-8;
/// Fraction of samples on which full rank is required.
pub const DENSE_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyTolerances {
    /// Smallest singular value counted as independent.
    pub rank: f64,
    /// Largest `|{f_i, f_j}|` counted as commuting.
    pub involution: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        VerifyTolerances { rank: RANK_TOL, involution: INVOLUTION_TOL }
    }
}

#[derive(Debug, Clone)]
pub struct NCBSystem {
    pub structure: BSymplecticStructure,
    pub integrals: Vec<BFunction>,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDescriptor {
    pub chart: Chart,
    pub omega: BForm,
    pub integrals: Vec<BFunction>,
    pub rank: usize,
}

impl NCBSystem {
    pub fn new(structure: BSymplecticStructure, integrals: Vec<BFunction>, rank: usize) -> Result<Self> {
        if rank > integrals.len() {
            return Err(Error::Dimension(format!("rank {rank} exceeds {} integrals", integrals.len())));
        }
        let bounds = structure.chart().certificate_box();
        for f in &integrals {
            f.g.certify(&bounds)?;
            if f.c != 0.0 && !structure.chart().has_z() {
                return Err(Error::NotBFunction("log part on a chart without Z".into()));
            }
        }
        for (_, c) in structure.omega().terms() {
            c.certify(&bounds)?;
        }
        Ok(NCBSystem { structure, integrals, rank })
    }

    pub fn from_descriptor(d: SystemDescriptor) -> Result<Self> {
        let s = BSymplecticStructure::new(Arc::new(d.chart), d.omega)?;
        NCBSystem::new(s, d.integrals, d.rank)
    }

    pub fn descriptor(&self) -> SystemDescriptor {
        SystemDescriptor {
            chart: self.chart().clone(),
            omega: self.structure.omega().clone(),
            integrals: self.integrals.clone(),
            rank: self.rank,
        }
    }

    pub fn chart(&self) -> &Chart {
        self.structure.chart()
    }

    pub fn s(&self) -> usize {
        self.integrals.len()
    }

    pub fn observables(&self) -> Vec<Arc<dyn Observable>> {
        let chart = self.structure.chart_arc();
        self.integrals
            .iter()
            .map(|f| Arc::new(f.prepare(chart.clone())) as Arc<dyn Observable>)
            .collect()
    }

    pub fn values(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.integrals.iter().map(|f| f.evaluate(self.chart(), p)).collect()
    }
}

fn min_singular_value(rows: &[Vec<f64>]) -> f64 {
    if rows.is_empty() {
        return f64::INFINITY;
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let sv = m.singular_values();
    if rows.len() > rows[0].len() {
        return 0.0;
    }
    sv.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemReport {
    pub schema: u32,
    pub independence: CheckReport,
    pub involution: CheckReport,
    pub dimension: CheckReport,
    pub z_independence: CheckReport,
    pub pass: bool,
}

impl SystemReport {
    pub fn conditions(&self) -> [&CheckReport; 4] {
        [&self.independence, &self.involution, &self.dimension, &self.z_independence]
    }

    /// Names of the failing conditions, numbered 1 to 4.
    pub fn failed(&self) -> Vec<usize> {
        self.conditions().iter().enumerate().filter(|(_, c)| !c.pass).map(|(i, _)| i + 1).collect()
    }
}

fn independence_on(obs: &[Arc<dyn Observable>], points: &[Vec<f64>], tol: f64) -> Result<(usize, f64, Vec<Vec<f64>>)> {
    let results: Vec<(Vec<f64>, f64)> = points
        .par_iter()
        .map(|p| {
            let rows = obs.iter().map(|o| o.b_gradient(p)).collect::<Result<Vec<_>>>()?;
            Ok((p.clone(), min_singular_value(&rows)))
        })
        .collect::<Result<_>>()?;
    let mut bad = Vec::new();
    let mut worst = f64::INFINITY;
    for (p, s) in results {
        worst = worst.min(s);
        if !(s > tol) {
            bad.push(p);
        }
    }
    Ok((bad.len(), worst, bad))
}

/// Checks the four defining conditions of a non-commutative b-integrable
/// system on the sample plan.
pub fn verify_system(sys: &NCBSystem, plan: &SamplePlan) -> Result<SystemReport> {
    verify_system_with(sys, plan, &VerifyTolerances::default())
}

pub fn verify_system_with(sys: &NCBSystem, plan: &SamplePlan, tol: &VerifyTolerances) -> Result<SystemReport> {
    let chart = sys.chart();
    let obs = sys.observables();
    let bulk = plan.bulk_points(chart);
    let zs = plan.z_points(chart);

    // (1) independence as b-covectors on a dense set of M and of Z
    let mut independence = CheckReport::new("independence")
        .with_note("max_residual holds the smallest singular value");
    let mut min_sv = f64::INFINITY;
    for pts in [&bulk, &zs] {
        if pts.is_empty() {
            continue;
        }
        let (bad, worst, locs) = independence_on(&obs, pts, tol.rank)?;
        min_sv = min_sv.min(worst);
        independence.points_tested += pts.len();
        if (pts.len() - bad) as f64 / (pts.len() as f64) < DENSE_FRACTION {
            independence.pass = false;
        }
        independence.failures.extend(locs.into_iter().take(16));
    }
    independence.max_residual = min_sv;

    // (2) the first r integrals commute with everything
    let mut involution = CheckReport::new("involution");
    let s = &sys.structure;
    let pairs: Vec<(usize, usize)> =
        (0..sys.rank).flat_map(|i| (0..sys.s()).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let all: Vec<&Vec<f64>> = bulk.iter().chain(zs.iter()).collect();
    for &(i, j) in &pairs {
        let b = s.bracket_of(&sys.integrals[i], &sys.integrals[j])?;
        let vals: Vec<(Vec<f64>, f64)> = all
            .par_iter()
            .map(|p| Ok(((*p).clone(), b.value(p)?.abs())))
            .collect::<Result<_>>()?;
        for (p, v) in vals {
            involution.record(p, v, v < tol.involution);
        }
    }

    // (3) r + s = dim
    let mut dimension = CheckReport::new("dimension");
    let lhs = sys.rank + sys.s();
    dimension.record(vec![], (lhs as f64 - chart.dim() as f64).abs(), lhs == chart.dim());
    dimension.note = Some(format!("r + s = {} + {} = {}, dim = {}", sys.rank, sys.s(), lhs, chart.dim()));

    // (4) the smooth fields X_{f_1..r} are independent somewhere on Z
    let mut z_independence = CheckReport::new("z_independence")
        .with_note("max_residual holds the best smallest singular value found on Z");
    if sys.rank == 0 {
        z_independence.note = Some("vacuous for rank 0".into());
    } else if !chart.has_z() {
        z_independence.note = Some("chart has no Z".into());
    } else {
        let fields = (0..sys.rank)
            .map(|i| s.hamiltonian_field(&sys.integrals[i]))
            .collect::<Result<Vec<_>>>()?;
        let mut best = 0.0f64;
        for p in &zs {
            let rows = fields.iter().map(|x| x.smooth_components(p)).collect::<Result<Vec<_>>>()?;
            let sv = min_singular_value(&rows);
            z_independence.points_tested += 1;
            if sv > best {
                best = sv;
                if sv > tol.rank {
                    z_independence.witness = Some(p.clone());
                }
            }
        }
        z_independence.max_residual = best;
        z_independence.pass = z_independence.witness.is_some();
        if !z_independence.pass {
            z_independence.failures = zs.iter().take(4).cloned().collect();
            z_independence.note = Some(format!(
                "smooth Hamiltonian fields of the commuting part are dependent at every Z sample (best singular value {best:e})"
            ));
        }
    }

    let pass = independence.pass && involution.pass && dimension.pass && z_independence.pass;
    Ok(SystemReport { schema: SCHEMA, independence, involution, dimension, z_independence, pass })
}

/// Output of [`normal_form`].
#[derive(Debug, Clone)]
pub struct NormalForm {
    pub system: NCBSystem,
    /// New defining function in terms of the chart's `t`.
    pub defining: DefiningFunction,
    /// `f' = M f` (the log parts are part of the linear change).
    pub transform: DMatrix<f64>,
}

/// Brings a system to the form `(log|t|, f_2, ..., f_s)` with smooth
/// `f_2..f_s`.
pub fn normal_form(sys: &NCBSystem) -> Result<NormalForm> {
    let s = sys.s();
    let lead = (0..sys.rank).find(|&i| sys.integrals[i].c != 0.0).ok_or(Error::NoBIntegral)?;
    let mut m = DMatrix::<f64>::identity(s, s);
    let mut fs = sys.integrals.clone();
    fs.swap(0, lead);
    m.swap_rows(0, lead);

    let c = fs[0].c;
    if c != 1.0 {
        fs[0] = fs[0].scale(1.0 / c);
        // c * (1/c) can round away from 1
        fs[0].c = 1.0;
        m.row_mut(0).scale_mut(1.0 / c);
    }
    let f1 = fs[0].clone();
    let row0 = m.row(0).clone_owned();
    for j in 1..s {
        let cj = fs[j].c;
        if cj != 0.0 {
            fs[j] = fs[j].sub(&f1.scale(cj));
            fs[j].c = 0.0;
            let r = m.row(j) - row0.clone() * cj;
            m.set_row(j, &r);
        }
    }
    let defining = DefiningFunction { log_scale: f1.g.clone() };
    let system = NCBSystem { structure: sys.structure.clone(), integrals: fs, rank: sys.rank };
    Ok(NormalForm { system, defining, transform: m })
}

/// Samples of `{f_i, f_j}` with an F-basicness flag per entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetBracketTable {
    pub points: Vec<Vec<f64>>,
    /// `values[k][(i, j)] = {f_i, f_j}(points[k])`.
    pub values: Vec<DMatrix<f64>>,
    pub f_basic: DMatrix<bool>,
    /// Largest spread of an entry between paired points on one F-fibre.
    pub max_spread: f64,
}

impl TargetBracketTable {
    /// `M T M^T` pointwise.
    pub fn transformed(&self, m: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        self.values.iter().map(|t| m * t * m.transpose()).collect()
    }
}

/// Tolerance on `|F(p) - F(q)|` for points counted as one fibre.
pub const FIBRE_MATCH_TOL: f64 = 1e-9;
/// Allowed bracket spread within a fibre.
pub const FIBRE_SPREAD_TOL: f64 = 1e-6;

/// Builds the bracket table and tests F-basicness. Partners on the same
/// fibre are produced by flowing the Hamiltonian fields of the commuting
/// integrals, which preserve every `f_j`.
pub fn target_bracket_table(sys: &NCBSystem, points: &[Vec<f64>]) -> Result<TargetBracketTable> {
    let s = sys.s();
    let st = &sys.structure;
    let mut brackets: Vec<Vec<Option<Arc<dyn Observable>>>> = vec![vec![None; s]; s];
    for i in 0..s {
        for j in (i + 1)..s {
            brackets[i][j] = Some(st.bracket_of(&sys.integrals[i], &sys.integrals[j])?);
        }
    }
    let table_at = |p: &[f64]| -> Result<DMatrix<f64>> {
        let mut t = DMatrix::zeros(s, s);
        for i in 0..s {
            for j in (i + 1)..s {
                let v = brackets[i][j].as_ref().unwrap().value(p)?;
                t[(i, j)] = v;
                t[(j, i)] = -v;
            }
        }
        Ok(t)
    };
    let values = points.par_iter().map(|p| table_at(p)).collect::<Result<Vec<_>>>()?;

    let mut f_basic = DMatrix::from_element(s, s, true);
    let mut max_spread = 0.0f64;
    if sys.rank > 0 {
        let integ = Integrator::default();
        let fields = (0..sys.rank)
            .map(|i| st.hamiltonian_field(&sys.integrals[i]))
            .collect::<Result<Vec<_>>>()?;
        let spreads: Vec<Option<DMatrix<f64>>> = points
            .par_iter()
            .zip(values.par_iter())
            .map(|(p, t0)| {
                let mut q = p.clone();
                for x in &fields {
                    match integ.endpoint(st.chart(), x as &dyn VectorField, &q, 0.25) {
                        Ok(e) => q = e,
                        Err(Error::DomainExit { .. }) => return Ok(None),
                        Err(e) => return Err(e),
                    }
                }
                let fp = sys.values(p)?;
                let fq = sys.values(&q)?;
                if fp.iter().zip(&fq).any(|(a, b)| (a - b).abs() > FIBRE_MATCH_TOL) {
                    return Ok(None);
                }
                Ok(Some((table_at(&q)? - t0).abs()))
            })
            .collect::<Result<_>>()?;
        for d in spreads.into_iter().flatten() {
            for i in 0..s {
                for j in 0..s {
                    max_spread = max_spread.max(d[(i, j)]);
                    if d[(i, j)] >= FIBRE_SPREAD_TOL {
                        f_basic[(i, j)] = false;
                    }
                }
            }
        }
    }
    Ok(TargetBracketTable { points: points.to_vec(), values, f_basic, max_spread })
}

/// As [`target_bracket_table`], failing on the first non-F-basic entry.
pub fn induced_target_bracket(sys: &NCBSystem, points: &[Vec<f64>]) -> Result<TargetBracketTable> {
    let t = target_bracket_table(sys, points)?;
    for i in 0..sys.s() {
        for j in 0..sys.s() {
            if !t.f_basic[(i, j)] {
                return Err(Error::NotFBasic(i, j, t.max_spread));
            }
        }
    }
    Ok(t)
}

pub const CAS_TOL: f64 = 1e-8;

/// `|{h, f_j}| < tol` for every integral at every point.
pub fn is_cas_basic(sys: &NCBSystem, h: &dyn Observable, points: &[Vec<f64>], tol: f64) -> Result<CheckReport> {
    let obs = sys.observables();
    let mut r = CheckReport::new("cas_basic");
    for p in points {
        let mut worst = 0.0f64;
        for o in &obs {
            worst = worst.max(sys.structure.bracket_at(p, h, o.as_ref())?.abs());
        }
        r.record(p.clone(), worst, worst < tol);
    }
    Ok(r)
}
