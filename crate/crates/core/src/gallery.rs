//! Worked example systems with machine-checkable expected facts.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bfunction::BFunction;
use crate::chart::Chart;
use crate::dynamics::lattice::{period_lattice, LatticeOptions};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::form::{BForm, VectorField};
use crate::poisson::{residue_split, BSymplecticStructure};
use crate::sampling::SamplePlan;
use crate::systems::{verify_system, NCBSystem, SystemDescriptor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BracketValue {
    Zero,
    /// `{f_i, f_j} = sign * f_k`.
    Integral { k: usize, sign: f64 },
    Constant { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fact", rename_all = "snake_case")]
pub enum Fact {
    /// Verifier outcome; `failing` lists the failing conditions (1 to 4).
    Verifier { pass: bool, failing: Vec<usize> },
    Bracket { i: usize, j: usize, value: BracketValue },
    /// Smooth components of `X_{f_i}` in chart coordinates.
    HamiltonianField { integral: usize, components: Vec<Expr> },
    /// `|lambda_1^1|` at the centre of `Z`.
    ModularPeriod { c: f64 },
    /// `|residue|` of the form along `Z` has this coefficient on `dx_coord`.
    Residue { coord: usize, abs_value: f64 },
    CriticalCoordinate { coord: usize },
}

#[derive(Debug, Clone)]
pub struct GalleryEntry {
    pub name: String,
    pub system: NCBSystem,
    pub facts: Vec<Fact>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntryDescriptor {
    pub name: String,
    pub system: SystemDescriptor,
    pub facts: Vec<Fact>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactOutcome {
    pub fact: String,
    pub pass: bool,
    pub detail: String,
}

/// `dx_i` in the b-coframe of `chart` (`t * dt/t` for the `t` coordinate).
pub fn coord_form(chart: &Chart, i: usize) -> BForm {
    let dim = chart.dim();
    let slot = chart.coord_slot(i);
    match chart.t_index() {
        Some(t) if t == i => BForm::from_terms(dim, 1, [(vec![0], Expr::var(t))]),
        _ => BForm::basis(dim, &[slot]),
    }
}

/// `dt/t`.
pub fn dlog_t(chart: &Chart) -> BForm {
    BForm::basis(chart.dim(), &[0])
}

fn wedge(a: &BForm, b: &BForm) -> BForm {
    a.wedge(b).expect("1-forms on one chart")
}

fn sum(forms: Vec<BForm>, dim: usize, degree: usize) -> BForm {
    forms.into_iter().fold(BForm::zero(dim, degree), |acc, f| acc.add(&f).expect("same shape"))
}

impl GalleryEntry {
    fn new(name: &str, chart: Chart, omega: BForm, integrals: Vec<BFunction>, rank: usize, facts: Vec<Fact>) -> Result<Self> {
        let s = BSymplecticStructure::new(Arc::new(chart), omega)?;
        Ok(GalleryEntry { name: name.to_string(), system: NCBSystem::new(s, integrals, rank)?, facts })
    }

    pub fn descriptor(&self) -> EntryDescriptor {
        EntryDescriptor { name: self.name.clone(), system: self.system.descriptor(), facts: self.facts.clone() }
    }

    pub fn from_descriptor(d: EntryDescriptor) -> Result<Self> {
        Ok(GalleryEntry { name: d.name, system: NCBSystem::from_descriptor(d.system)?, facts: d.facts })
    }

    /// Runs every expected fact.
    pub fn check_facts(&self, plan: &SamplePlan) -> Result<Vec<FactOutcome>> {
        let sys = &self.system;
        let chart = sys.chart();
        let pts = plan.random_points(chart, 100);
        let mut out = Vec::new();
        for fact in &self.facts {
            let label = serde_json::to_string(fact).unwrap_or_default();
            let (pass, detail) = match fact {
                Fact::Verifier { pass, failing } => {
                    let rep = verify_system(sys, plan)?;
                    let got = rep.failed();
                    (rep.pass == *pass && got == *failing, format!("failing conditions {got:?}"))
                }
                Fact::Bracket { i, j, value } => {
                    let b = sys.structure.bracket_of(&sys.integrals[*i], &sys.integrals[*j])?;
                    let mut worst = 0.0f64;
                    for p in &pts {
                        let expect = match value {
                            BracketValue::Zero => 0.0,
                            BracketValue::Integral { k, sign } => sign * sys.integrals[*k].evaluate(chart, p)?,
                            BracketValue::Constant { value } => *value,
                        };
                        worst = worst.max((b.value(p)? - expect).abs());
                    }
                    (worst < 1e-10, format!("max deviation {worst:e}"))
                }
                Fact::HamiltonianField { integral, components } => {
                    let x = sys.structure.hamiltonian_field(&sys.integrals[*integral])?;
                    let mut worst = 0.0f64;
                    for p in &pts {
                        let v = x.smooth_components(p)?;
                        for (a, e) in v.iter().zip(components) {
                            worst = worst.max((a - e.eval(p)?).abs());
                        }
                    }
                    (worst < 1e-12, format!("max deviation {worst:e}"))
                }
                Fact::ModularPeriod { c } => {
                    let s = &sys.structure;
                    let fields = (0..sys.rank)
                        .map(|i| s.hamiltonian_field(&sys.integrals[i]))
                        .collect::<Result<Vec<_>>>()?;
                    let refs: Vec<&dyn VectorField> = fields.iter().map(|f| f as &dyn VectorField).collect();
                    let lat = period_lattice(&LatticeOptions::default(), chart, &refs, &chart.center())?;
                    let got = lat.modular_period.unwrap_or(f64::NAN);
                    ((got - c).abs() < 1e-6, format!("detected {got}"))
                }
                Fact::Residue { coord, abs_value } => {
                    let split = residue_split(chart, sys.structure.omega())?;
                    let slot = chart.coord_slot(*coord);
                    let v = split.residue.coeff(&[slot]).eval(&chart.center())?;
                    ((v.abs() - abs_value).abs() < 1e-12, format!("residue coefficient {v}"))
                }
                Fact::CriticalCoordinate { coord } => {
                    (chart.t_index() == Some(*coord), format!("t index {:?}", chart.t_index()))
                }
            };
            out.push(FactOutcome { fact: label, pass, detail });
        }
        Ok(out)
    }
}

fn names(list: &[String]) -> Vec<String> {
    list.to_vec()
}

/// `T^r x B^s` with `w = (c/t) dtheta_1 ^ dt + sum dtheta_i ^ dpi_i + sum dp ^ dq`
/// and integrals `(log|pi_1|, pi_2, ..., pi_s)`.
pub fn standard_model(r: usize, s: usize, c: f64) -> Result<GalleryEntry> {
    if r == 0 || s < r || (s - r) % 2 != 0 {
        return Err(Error::Dimension(format!("standard model needs r >= 1, s >= r, s - r even; got ({r}, {s})")));
    }
    let dim = r + s;
    let mut nm: Vec<String> = (1..=r).map(|i| format!("theta{i}")).collect();
    nm.extend((1..=s).map(|i| format!("pi{i}")));
    let mut bounds = vec![(0.0, 1.0); r];
    bounds.extend(vec![(-0.5, 0.5); s]);
    let mut periodic = vec![true; r];
    periodic.extend(vec![false; s]);
    let chart = Chart::new(names(&nm), Some(r), bounds, periodic)?;
    let pi = |i: usize| r + i - 1;
    let mut terms = vec![wedge(&coord_form(&chart, 0), &dlog_t(&chart)).scale(&Expr::constant(c))];
    for i in 2..=r {
        terms.push(wedge(&coord_form(&chart, i - 1), &coord_form(&chart, pi(i))));
    }
    let ell = (s - r) / 2;
    for k in 0..ell {
        let p = pi(r + 2 * k + 1);
        terms.push(wedge(&coord_form(&chart, p), &coord_form(&chart, p + 1)));
    }
    let omega = sum(terms, dim, 2);
    let mut integrals = vec![BFunction::log_t(1.0)];
    integrals.extend((2..=s).map(|i| BFunction::smooth(Expr::var(pi(i)))));
    let mut facts = vec![
        Fact::Verifier { pass: true, failing: vec![] },
        Fact::ModularPeriod { c },
        Fact::CriticalCoordinate { coord: r },
        Fact::Residue { coord: 0, abs_value: c },
    ];
    for i in 0..r {
        for j in 0..s {
            if i != j {
                facts.push(Fact::Bracket { i, j, value: BracketValue::Zero });
            }
        }
    }
    for k in 0..ell {
        facts.push(Fact::Bracket { i: r + 2 * k, j: r + 2 * k + 1, value: BracketValue::Constant { value: 1.0 } });
    }
    GalleryEntry::new(&format!("standard_model:{r},{s},{c}"), chart, omega, integrals, r, facts)
}

/// `w = (c/t) dtheta_1 ^ dt + (1 + pi_2) dtheta_2 ^ dpi_2` with integrals
/// `(log|t|, pi_2)`: the second period is `1 + pi_2`.
pub fn nonlinear_action(c: f64) -> Result<GalleryEntry> {
    let chart = Chart::from_parts(
        &["theta1", "theta2", "pi1", "pi2"],
        Some(2),
        &[(0.0, 1.0), (0.0, 1.0), (-0.5, 0.5), (-0.5, 0.5)],
        &[true, true, false, false],
    )?;
    let omega = wedge(&coord_form(&chart, 0), &dlog_t(&chart))
        .scale(&Expr::constant(c))
        .add(&wedge(&coord_form(&chart, 1), &coord_form(&chart, 3)).scale(&(Expr::var(3) + 1.0)))?;
    let integrals = vec![BFunction::log_t(1.0), BFunction::smooth(Expr::var(3))];
    let facts = vec![
        Fact::Verifier { pass: true, failing: vec![] },
        Fact::ModularPeriod { c },
        Fact::Bracket { i: 0, j: 1, value: BracketValue::Zero },
    ];
    GalleryEntry::new(&format!("nonlinear_action:{c}"), chart, omega, integrals, 2, facts)
}

/// `standard_model(2, 2, c)` pulled back through a known b-diffeomorphism
/// preserving the b-volume: angles sheared by `(u1 + u2, u2)`, defining
/// function `T = v1 exp(v2 / 2)` and action `A = v2 + 0.2 T + 0.3 T^2`.
/// Integrals are the raw chart functions `(log|v1|, v2)`.
pub fn scrambled(c: f64) -> Result<GalleryEntry> {
    let chart = Chart::from_parts(
        &["u1", "u2", "v1", "v2"],
        Some(2),
        &[(0.0, 1.0), (0.0, 1.0), (-0.5, 0.5), (-0.5, 0.5)],
        &[true, true, false, false],
    )?;
    let (theta1, theta2, log_t, action) = scrambled_map(&chart);
    let omega = wedge(&theta1, &log_t)
        .scale(&Expr::constant(c))
        .add(&wedge(&theta2, &action))?;
    let integrals = vec![BFunction::log_t(1.0), BFunction::smooth(Expr::var(3))];
    let facts = vec![
        Fact::Verifier { pass: true, failing: vec![] },
        Fact::ModularPeriod { c },
        Fact::Bracket { i: 0, j: 1, value: BracketValue::Zero },
    ];
    GalleryEntry::new(&format!("scrambled:{c}"), chart, omega, integrals, 2, facts)
}

/// The defining expressions of the scrambling map, as b-differentials on
/// its chart: `(dtheta1, dtheta2, dT/T, dA)`.
pub fn scrambled_map(chart: &Chart) -> (BForm, BForm, BForm, BForm) {
    let theta1 = coord_form(chart, 0).add(&coord_form(chart, 1)).unwrap();
    let theta2 = coord_form(chart, 1);
    let log_t = BFunction::new(1.0, Expr::var(3) * 0.5).b_differential(chart);
    let action = BFunction::smooth(scrambled_action()).b_differential(chart);
    (theta1, theta2, log_t, action)
}

/// `T = v1 exp(v2 / 2)` on the scrambled chart.
pub fn scrambled_t() -> Expr {
    Expr::var(2) * (Expr::var(3) * 0.5).exp()
}

/// `A = v2 + 0.2 T + 0.3 T^2` on the scrambled chart.
pub fn scrambled_action() -> Expr {
    let t = scrambled_t();
    Expr::var(3) + t.clone() * 0.2 + t.powi(2) * 0.3
}

/// `N x (h, theta)` with `w_N + (1/h) dh ^ dtheta` and integrals
/// `(log|h|, f_1, ..., f_s)`.
pub fn boundary_double(base: &NCBSystem) -> Result<GalleryEntry> {
    let bc = base.chart();
    if bc.has_z() {
        return Err(Error::InvalidChart("base of a boundary double must be symplectic".into()));
    }
    let d = bc.dim();
    let mut nm = bc.names().to_vec();
    nm.push("h".into());
    nm.push("phi".into());
    let mut bounds = bc.bounds().to_vec();
    bounds.push((-1.0, 1.0));
    bounds.push((0.0, 1.0));
    let mut periodic = bc.periodic().to_vec();
    periodic.push(false);
    periodic.push(true);
    let chart = Chart::new(nm, Some(d), bounds, periodic)?;
    let mut omega = BForm::zero(d + 2, 2);
    for (idx, c) in base.structure.omega().terms() {
        let piece = wedge(&coord_form(&chart, idx[0]), &coord_form(&chart, idx[1])).scale(c);
        omega = omega.add(&piece)?;
    }
    omega = omega.add(&wedge(&dlog_t(&chart), &coord_form(&chart, d + 1)))?;
    let mut integrals = vec![BFunction::log_t(1.0)];
    integrals.extend(base.integrals.iter().cloned());
    let mut facts = vec![Fact::Verifier { pass: true, failing: vec![] }, Fact::CriticalCoordinate { coord: d }];
    for i in 0..base.s() {
        for j in (i + 1)..base.s() {
            if let Some(b) = base.structure.bracket_symbolic(&base.integrals[i], &base.integrals[j])? {
                if b.g.is_zero() {
                    facts.push(Fact::Bracket { i: i + 1, j: j + 1, value: BracketValue::Zero });
                }
            }
        }
    }
    GalleryEntry::new(&format!("boundary_double({})", base.s()), chart, omega, integrals, base.rank + 1, facts)
}

/// The system `(x)` on the symplectic plane, used as a boundary-double base.
pub fn plane_base() -> Result<NCBSystem> {
    let chart = Chart::from_parts(&["x", "y"], None, &[(-1.0, 1.0); 2], &[false; 2])?;
    let omega = BForm::basis(2, &[0, 1]);
    let s = BSymplecticStructure::new(Arc::new(chart), omega)?;
    NCBSystem::new(s, vec![BFunction::smooth(Expr::var(0))], 1)
}

/// Logarithmic Liouville form with b-function coefficients on coordinate
/// differentials.
struct LiouvilleForm {
    coeffs: Vec<(usize, BFunction)>,
}

impl LiouvilleForm {
    /// `-d(lambda)`.
    fn minus_d(&self, chart: &Chart) -> BForm {
        let mut w = BForm::zero(chart.dim(), 2);
        for (k, f) in &self.coeffs {
            w = w.add(&wedge(&f.b_differential(chart), &coord_form(chart, *k))).unwrap();
        }
        w.neg()
    }

    /// `<lambda, X>` for a constant coordinate field.
    fn contract(&self, field: &[f64]) -> BFunction {
        self.coeffs
            .iter()
            .filter(|(k, _)| field[*k] != 0.0)
            .fold(BFunction::smooth(Expr::zero()), |acc, (k, f)| acc.add(&f.scale(field[*k])))
    }
}

/// Twisted b-cotangent lift of the translation action of `S^1 x R^{n-1}`:
/// coordinates `(theta, x_1.., a, y_1..)`, `lambda = log|a| dtheta + sum y dx`.
pub fn twisted_lift(n: usize) -> Result<GalleryEntry> {
    if n == 0 {
        return Err(Error::Dimension("twisted lift needs n >= 1".into()));
    }
    let mut nm = vec!["theta".to_string()];
    nm.extend((1..n).map(|i| format!("x{i}")));
    nm.push("a".into());
    nm.extend((1..n).map(|i| format!("y{i}")));
    let mut bounds = vec![(0.0, 1.0)];
    bounds.extend(vec![(-1.0, 1.0); 2 * n - 1]);
    let mut periodic = vec![true];
    periodic.extend(vec![false; 2 * n - 1]);
    let chart = Chart::new(nm, Some(n), bounds, periodic)?;
    let mut coeffs = vec![(0, BFunction::log_t(1.0))];
    coeffs.extend((1..n).map(|i| (i, BFunction::smooth(Expr::var(n + i)))));
    let lambda = LiouvilleForm { coeffs };
    let omega = lambda.minus_d(&chart);
    let mut integrals = Vec::new();
    for k in 0..n {
        let mut v = vec![0.0; 2 * n];
        v[k] = 1.0;
        integrals.push(lambda.contract(&v));
    }
    let facts = vec![
        Fact::Verifier { pass: true, failing: vec![] },
        Fact::Residue { coord: 0, abs_value: 1.0 },
        Fact::CriticalCoordinate { coord: n },
    ];
    GalleryEntry::new(&format!("twisted_lift:{n}"), chart, omega, integrals, n, facts)
}

fn galilean_chart(with_z: bool) -> Result<Chart> {
    Chart::from_parts(
        &["x1", "x2", "x3", "y1", "y2", "y3"],
        with_z.then_some(3),
        &[(-2.0, 2.0); 6],
        &[false; 6],
    )
}

fn var(i: usize) -> Expr {
    Expr::var(i)
}

/// Angular momentum components `(f_1, f_2, f_3)` of `x x y`.
pub fn angular_momentum() -> [Expr; 3] {
    let (x, y) = (|i: usize| var(i - 1), |i: usize| var(i + 2));
    [
        x(2) * y(3) - x(3) * y(2),
        x(3) * y(1) - x(1) * y(3),
        x(1) * y(2) - x(2) * y(1),
    ]
}

fn galilean_omega(chart: &Chart, b: bool) -> BForm {
    let mut terms = Vec::new();
    for i in 0..3 {
        let (x, y) = (coord_form(chart, i), coord_form(chart, i + 3));
        terms.push(if b {
            // printed as (dy1/y1) ^ dx1 + sum dy_i ^ dx_i
            if i == 0 {
                wedge(&dlog_t(chart), &x)
            } else {
                wedge(&y, &x)
            }
        } else {
            wedge(&x, &y)
        });
    }
    sum(terms, 6, 2)
}

/// The Galilean subgroup systems on the space of motions.
pub fn galilean(variant: &str) -> Result<GalleryEntry> {
    let [f1, f2, f3] = angular_momentum();
    let sm = |e: Expr| BFunction::smooth(e);
    let b = variant.starts_with("b_");
    let chart = galilean_chart(b)?;
    let omega = galilean_omega(&chart, b);
    let (integrals, rank, facts) = match variant {
        "translations" => (
            (0..6).map(|i| sm(var(i))).collect(),
            0,
            vec![Fact::Verifier { pass: true, failing: vec![] }],
        ),
        "so3_r3" => {
            let x = |i: usize| var(i - 1);
            let y = |i: usize| var(i + 2);
            let e1 = vec![Expr::zero(), x(3), -x(2), Expr::zero(), y(3), -y(2)];
            let e2 = vec![-x(3), Expr::zero(), x(1), -y(3), Expr::zero(), y(1)];
            let e3 = vec![x(2), -x(1), Expr::zero(), y(2), -y(1), Expr::zero()];
            (
                vec![sm(f1), sm(f2), sm(f3), sm(var(0)), sm(var(1)), sm(var(2))],
                0,
                vec![
                    // x . (x cross y) = 0 gives sum x_i df_i + sum f_i dx_i = 0
                    Fact::Verifier { pass: false, failing: vec![1] },
                    Fact::Bracket { i: 0, j: 1, value: BracketValue::Integral { k: 2, sign: 1.0 } },
                    Fact::Bracket { i: 1, j: 2, value: BracketValue::Integral { k: 0, sign: 1.0 } },
                    Fact::Bracket { i: 2, j: 0, value: BracketValue::Integral { k: 1, sign: 1.0 } },
                    Fact::HamiltonianField { integral: 0, components: e1 },
                    Fact::HamiltonianField { integral: 1, components: e2 },
                    Fact::HamiltonianField { integral: 2, components: e3 },
                ],
            )
        }
        "s1_r3_r3" => (
            vec![sm(var(3)), sm(f1), sm(var(1)), sm(var(2)), sm(var(4))],
            1,
            vec![
                Fact::Verifier { pass: true, failing: vec![] },
                Fact::Bracket { i: 0, j: 1, value: BracketValue::Zero },
            ],
        ),
        "b_translations" => (
            vec![sm(var(0)), sm(var(1)), sm(var(2)), BFunction::log_t(1.0), sm(var(4)), sm(var(5))],
            0,
            vec![Fact::Verifier { pass: true, failing: vec![] }, Fact::CriticalCoordinate { coord: 3 }],
        ),
        "b_s1" => (
            vec![BFunction::log_t(1.0), sm(f1), sm(var(1)), sm(var(2)), sm(var(4))],
            1,
            vec![
                Fact::Verifier { pass: true, failing: vec![] },
                Fact::Bracket { i: 0, j: 1, value: BracketValue::Zero },
            ],
        ),
        "b_x1" => (
            vec![sm(var(0)), sm(f1), sm(var(1)), sm(var(2)), sm(var(4))],
            1,
            vec![
                Fact::Verifier { pass: false, failing: vec![4] },
                // X_{x1} = -y1 d/dy1 vanishes on Z
                Fact::HamiltonianField {
                    integral: 0,
                    components: vec![
                        Expr::zero(),
                        Expr::zero(),
                        Expr::zero(),
                        -var(3),
                        Expr::zero(),
                        Expr::zero(),
                    ],
                },
            ],
        ),
        "b_so3_r3" => return Err(galilean_b_rotation_hamiltonian().unwrap_err()),
        other => return Err(Error::Parse(format!("unknown Galilean variant {other}"))),
    };
    GalleryEntry::new(&format!("galilean:{variant}"), chart, omega, integrals, rank, facts)
}

/// Hamiltonian of the second rotation field for the b-structure:
/// `x3 log|y1| - x1 y3`, whose log coefficient is not constant.
pub fn galilean_b_rotation_hamiltonian() -> Result<BFunction> {
    BFunction::from_log_expression(&var(2), -(var(0) * var(5)))
}

/// `w = (1/t) dt ^ dz` with the single integral `z`, or `log|t|` when
/// `log_variant` is set.
pub fn counterexample_2d(log_variant: bool) -> Result<GalleryEntry> {
    let chart = Chart::from_parts(&["t", "z"], Some(0), &[(-1.0, 1.0); 2], &[false; 2])?;
    let omega = wedge(&dlog_t(&chart), &coord_form(&chart, 1));
    let (f, facts, name) = if log_variant {
        (BFunction::log_t(1.0), vec![Fact::Verifier { pass: true, failing: vec![] }], "counterexample_2d_log")
    } else {
        (
            BFunction::smooth(var(1)),
            vec![
                Fact::Verifier { pass: false, failing: vec![4] },
                Fact::HamiltonianField { integral: 0, components: vec![-var(0), Expr::zero()] },
            ],
            "counterexample_2d",
        )
    };
    GalleryEntry::new(name, chart, omega, vec![f], 1, facts)
}

/// Names accepted by [`by_name`].
pub fn catalogue() -> Vec<String> {
    let mut v: Vec<String> = [
        "standard_model:1,1,1",
        "standard_model:1,1,2",
        "standard_model:1,3,1",
        "standard_model:2,2,1",
        "standard_model:2,2,3",
        "scrambled:2",
        "nonlinear_action:1.5",
        "boundary_double",
        "twisted_lift:2",
        "counterexample_2d",
        "counterexample_2d_log",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for g in ["translations", "so3_r3", "s1_r3_r3", "b_translations", "b_s1", "b_x1"] {
        v.push(format!("galilean:{g}"));
    }
    v
}

/// Looks up `standard_model:r,s,c`, `scrambled:c`, `nonlinear_action:c`, `twisted_lift:n`,
/// `galilean:variant`, `boundary_double`, `counterexample_2d[_log]`.
pub fn by_name(name: &str) -> Result<GalleryEntry> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let bad = || Error::Parse(format!("bad gallery name {name}"));
    match (head, arg) {
        ("standard_model", Some(a)) => {
            let parts: Vec<&str> = a.split(',').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let r = parts[0].trim().parse().map_err(|_| bad())?;
            let s = parts[1].trim().parse().map_err(|_| bad())?;
            let c = parts[2].trim().parse().map_err(|_| bad())?;
            standard_model(r, s, c)
        }
        ("scrambled", a) => scrambled(a.map(|x| x.parse().map_err(|_| bad())).transpose()?.unwrap_or(2.0)),
        ("nonlinear_action", a) => {
            nonlinear_action(a.map(|x| x.parse().map_err(|_| bad())).transpose()?.unwrap_or(1.0))
        }
        ("twisted_lift", a) => twisted_lift(a.map(|x| x.parse().map_err(|_| bad())).transpose()?.unwrap_or(2)),
        ("galilean", Some(v)) => galilean(v),
        ("boundary_double", None) => boundary_double(&plane_base()?).map(|e| GalleryEntry { name: name.into(), ..e }),
        ("counterexample_2d", None) => counterexample_2d(false),
        ("counterexample_2d_log", None) => counterexample_2d(true),
        _ => Err(bad()),
    }
}

/// All gallery symplectic structures, for property sweeps.
pub fn all_entries() -> Result<Vec<GalleryEntry>> {
    catalogue().iter().map(|n| by_name(n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_model_layout() {
        let e = standard_model(1, 3, 1.0).unwrap();
        assert_eq!(e.system.chart().dim(), 4);
        assert_eq!(e.system.rank, 1);
        // l = (s - r) / 2 = 1 transverse pair
        assert!(e.facts.contains(&Fact::Bracket { i: 1, j: 2, value: BracketValue::Constant { value: 1.0 } }));
        assert!(standard_model(1, 2, 1.0).is_err());
    }

    #[test]
    fn b_rotation_is_not_a_b_function() {
        assert!(matches!(galilean_b_rotation_hamiltonian(), Err(Error::NotBFunction(_))));
        assert!(galilean("b_so3_r3").is_err());
    }

    #[test]
    fn names_resolve() {
        for n in catalogue() {
            assert_eq!(by_name(&n).unwrap().name, n);
        }
        assert!(by_name("standard_model:1,1").is_err());
        assert!(by_name("nope").is_err());
    }
}
