//! Scalar fields on a chart as immutable expression trees.
//!
//! Derivatives are obtained by differentiating the tree itself, so gradients
//! and Hessians carry no truncation error. Constructors fold constants and
//! flatten nested sums and products; there is no other simplification apart
//! from `log(exp(x)) = x`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, i32),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
    Log(Expr),
}

/// A smooth scalar field over chart coordinates.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Expr {
    fn node(n: Node) -> Self {
        Expr(Arc::new(n))
    }

    pub fn constant(value: f64) -> Self {
        Self::node(Node::Const(value))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn var(index: usize) -> Self {
        Self::node(Node::Var(index))
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Self {
        let mut acc = 0.0;
        let mut rest = Vec::new();
        for t in terms {
            match &*t.0 {
                Node::Const(c) => acc += c,
                Node::Add(inner) => {
                    for u in inner {
                        match &*u.0 {
                            Node::Const(c) => acc += c,
                            _ => rest.push(u.clone()),
                        }
                    }
                }
                _ => rest.push(t),
            }
        }
        if acc != 0.0 {
            rest.push(Expr::constant(acc));
        }
        match rest.len() {
            0 => Expr::zero(),
            1 => rest.pop().unwrap(),
            _ => Self::node(Node::Add(rest)),
        }
    }

    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Self {
        let mut acc = 1.0;
        let mut rest = Vec::new();
        for t in factors {
            match &*t.0 {
                Node::Const(c) => acc *= c,
                Node::Mul(inner) => {
                    for u in inner {
                        match &*u.0 {
                            Node::Const(c) => acc *= c,
                            _ => rest.push(u.clone()),
                        }
                    }
                }
                _ => rest.push(t),
            }
        }
        if acc == 0.0 {
            return Expr::zero();
        }
        if rest.is_empty() {
            return Expr::constant(acc);
        }
        if acc != 1.0 {
            rest.insert(0, Expr::constant(acc));
        }
        if rest.len() == 1 {
            return rest.pop().unwrap();
        }
        Self::node(Node::Mul(rest))
    }

    pub fn powi(&self, k: i32) -> Self {
        match (&*self.0, k) {
            (_, 0) => Expr::one(),
            (_, 1) => self.clone(),
            (Node::Const(c), _) => Expr::constant(c.powi(k)),
            (Node::Pow(base, j), _) => base.powi(j * k),
            _ => Self::node(Node::Pow(self.clone(), k)),
        }
    }

    pub fn sin(&self) -> Self {
        match &*self.0 {
            Node::Const(c) => Expr::constant(c.sin()),
            _ => Self::node(Node::Sin(self.clone())),
        }
    }

    pub fn cos(&self) -> Self {
        match &*self.0 {
            Node::Const(c) => Expr::constant(c.cos()),
            _ => Self::node(Node::Cos(self.clone())),
        }
    }

    pub fn exp(&self) -> Self {
        match &*self.0 {
            Node::Const(c) => Expr::constant(c.exp()),
            Node::Log(inner) => inner.clone(),
            _ => Self::node(Node::Exp(self.clone())),
        }
    }

    /// Natural log. Positivity of the argument is certified separately by
    /// [`Expr::certify`] against a domain box.
    pub fn ln(&self) -> Self {
        match &*self.0 {
            Node::Const(c) => Expr::constant(c.ln()),
            Node::Exp(inner) => inner.clone(),
            _ => Self::node(Node::Log(self.clone())),
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match &*self.0 {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn depends_on(&self, var: usize) -> bool {
        match &*self.0 {
            Node::Const(_) => false,
            Node::Var(i) => *i == var,
            Node::Add(a) | Node::Mul(a) => a.iter().any(|e| e.depends_on(var)),
            Node::Pow(e, _) | Node::Sin(e) | Node::Cos(e) | Node::Exp(e) | Node::Log(e) => {
                e.depends_on(var)
            }
        }
    }

    pub fn max_var(&self) -> Option<usize> {
        match &*self.0 {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Add(a) | Node::Mul(a) => a.iter().filter_map(|e| e.max_var()).max(),
            Node::Pow(e, _) | Node::Sin(e) | Node::Cos(e) | Node::Exp(e) | Node::Log(e) => {
                e.max_var()
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(match &*self.0 {
            Node::Const(c) => *c,
            Node::Var(i) => x[*i],
            Node::Add(a) => {
                let mut s = 0.0;
                for e in a {
                    s += e.eval(x)?;
                }
                s
            }
            Node::Mul(a) => {
                let mut s = 1.0;
                for e in a {
                    s *= e.eval(x)?;
                }
                s
            }
            Node::Pow(e, k) => {
                let v = e.eval(x)?;
                if *k < 0 && v == 0.0 {
                    return Err(Error::PowerOfZero);
                }
                v.powi(*k)
            }
            Node::Sin(e) => e.eval(x)?.sin(),
            Node::Cos(e) => e.eval(x)?.cos(),
            Node::Exp(e) => e.eval(x)?.exp(),
            Node::Log(e) => {
                let v = e.eval(x)?;
                if v <= 0.0 {
                    return Err(Error::LogNonPositive(v));
                }
                v.ln()
            }
        })
    }

    pub fn diff(&self, var: usize) -> Expr {
        match &*self.0 {
            Node::Const(_) => Expr::zero(),
            Node::Var(i) => {
                if *i == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(a) => Expr::sum(a.iter().map(|e| e.diff(var))),
            Node::Mul(a) => {
                let mut terms = Vec::new();
                for k in 0..a.len() {
                    let dk = a[k].diff(var);
                    if dk.is_zero() {
                        continue;
                    }
                    let mut fs: Vec<Expr> = Vec::with_capacity(a.len());
                    for (j, e) in a.iter().enumerate() {
                        fs.push(if j == k { dk.clone() } else { e.clone() });
                    }
                    terms.push(Expr::product(fs));
                }
                Expr::sum(terms)
            }
            Node::Pow(e, k) => {
                let de = e.diff(var);
                if de.is_zero() {
                    return Expr::zero();
                }
                Expr::product([Expr::constant(*k as f64), e.powi(k - 1), de])
            }
            Node::Sin(e) => Expr::product([e.cos(), e.diff(var)]),
            Node::Cos(e) => Expr::product([Expr::constant(-1.0), e.sin(), e.diff(var)]),
            Node::Exp(e) => Expr::product([self.clone(), e.diff(var)]),
            Node::Log(e) => Expr::product([e.diff(var), e.powi(-1)]),
        }
    }

    pub fn gradient(&self, dim: usize) -> Vec<Expr> {
        (0..dim).map(|i| self.diff(i)).collect()
    }

    /// Replace coordinate `var` by `with`, re-folding constants.
    pub fn substitute(&self, var: usize, with: &Expr) -> Expr {
        self.map_vars(&|i| if i == var { Some(with.clone()) } else { None })
    }

    /// Compose with a coordinate map: every `Var(i)` becomes `images[i]`.
    pub fn compose(&self, images: &[Expr]) -> Expr {
        self.map_vars(&|i| Some(images[i].clone()))
    }

    fn map_vars(&self, f: &dyn Fn(usize) -> Option<Expr>) -> Expr {
        match &*self.0 {
            Node::Const(_) => self.clone(),
            Node::Var(i) => f(*i).unwrap_or_else(|| self.clone()),
            Node::Add(a) => Expr::sum(a.iter().map(|e| e.map_vars(f))),
            Node::Mul(a) => Expr::product(a.iter().map(|e| e.map_vars(f))),
            Node::Pow(e, k) => e.map_vars(f).powi(*k),
            Node::Sin(e) => e.map_vars(f).sin(),
            Node::Cos(e) => e.map_vars(f).cos(),
            Node::Exp(e) => e.map_vars(f).exp(),
            Node::Log(e) => e.map_vars(f).ln(),
        }
    }

    /// Interval enclosure over an axis-aligned box.
    pub fn enclose(&self, bounds: &[(f64, f64)]) -> Result<Interval> {
        Ok(match &*self.0 {
            Node::Const(c) => Interval::point(*c),
            Node::Var(i) => Interval::new(bounds[*i].0, bounds[*i].1),
            Node::Add(a) => {
                let mut s = Interval::point(0.0);
                for e in a {
                    s = s.add(e.enclose(bounds)?);
                }
                s
            }
            Node::Mul(a) => {
                // repeated factors are enclosed as powers so that x*x >= 0
                let mut groups: Vec<(&Expr, i32)> = Vec::new();
                for e in a {
                    match groups.iter_mut().find(|(g, _)| *g == e) {
                        Some(g) => g.1 += 1,
                        None => groups.push((e, 1)),
                    }
                }
                let mut s = Interval::point(1.0);
                for (e, k) in groups {
                    s = s.mul(e.enclose(bounds)?.powi(k));
                }
                s
            }
            Node::Pow(e, k) => {
                let iv = e.enclose(bounds)?;
                if *k < 0 && iv.lo <= 0.0 && iv.hi >= 0.0 {
                    return Err(Error::PowerOfZero);
                }
                iv.powi(*k)
            }
            Node::Sin(e) | Node::Cos(e) => {
                e.enclose(bounds)?;
                Interval::new(-1.0, 1.0)
            }
            Node::Exp(e) => {
                let iv = e.enclose(bounds)?;
                Interval::new(iv.lo.exp(), iv.hi.exp())
            }
            Node::Log(e) => {
                let iv = e.enclose(bounds)?;
                if iv.lo <= 0.0 {
                    return Err(Error::LogCertificate(format!(
                        "argument {e} encloses [{}, {}]",
                        iv.lo, iv.hi
                    )));
                }
                Interval::new(iv.lo.ln(), iv.hi.ln())
            }
        })
    }

    /// Certify that every log argument is strictly positive on the box.
    pub fn certify(&self, bounds: &[(f64, f64)]) -> Result<()> {
        self.enclose(bounds).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo: lo.min(hi), hi: lo.max(hi) }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    fn add(self, o: Interval) -> Interval {
        Interval::new(self.lo + o.lo, self.hi + o.hi)
    }

    fn mul(self, o: Interval) -> Interval {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }

    fn powi(self, k: i32) -> Interval {
        if k >= 0 && k % 2 == 0 && self.lo < 0.0 && self.hi > 0.0 {
            let m = self.lo.abs().max(self.hi.abs()).powi(k);
            return Interval::new(0.0, m);
        }
        Interval::new(self.lo.powi(k), self.hi.powi(k))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(i) => write!(f, "x{i}"),
            Node::Add(a) => {
                write!(f, "(")?;
                for (k, e) in a.iter().enumerate() {
                    if k > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
            Node::Mul(a) => {
                for (k, e) in a.iter().enumerate() {
                    if k > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "{e}")?;
                }
                Ok(())
            }
            Node::Pow(e, k) => write!(f, "{e}^{k}"),
            Node::Sin(e) => write!(f, "sin({e})"),
            Node::Cos(e) => write!(f, "cos({e})"),
            Node::Exp(e) => write!(f, "exp({e})"),
            Node::Log(e) => write!(f, "log({e})"),
        }
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum([self, rhs])
    }
}

impl Add<f64> for Expr {
    type Output = Expr;
    fn add(self, rhs: f64) -> Expr {
        Expr::sum([self, Expr::constant(rhs)])
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sum([self, -rhs])
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::product([self, rhs])
    }
}

impl Mul<f64> for Expr {
    type Output = Expr;
    fn mul(self, rhs: f64) -> Expr {
        Expr::product([Expr::constant(rhs), self])
    }
}

impl Mul<Expr> for f64 {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::product([Expr::constant(self), rhs])
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::product([Expr::constant(-1.0), self])
    }
}

impl<'a> Add<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::sum([self.clone(), rhs.clone()])
    }
}

impl<'a> Sub<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::sum([self.clone(), -rhs.clone()])
    }
}

impl<'a> Mul<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::product([self.clone(), rhs.clone()])
    }
}

/// JSON form: `{"op": ..., "args": [...]}` plus `value`, `index` or
/// `exponent` for the leaf and power nodes.
#[derive(Serialize, Deserialize)]
struct WireNode {
    op: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    args: Vec<WireNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exponent: Option<i32>,
}

impl WireNode {
    fn op(op: &str, args: Vec<WireNode>) -> Self {
        WireNode { op: op.into(), args, value: None, index: None, exponent: None }
    }
}

impl From<&Expr> for WireNode {
    fn from(e: &Expr) -> Self {
        match &*e.0 {
            Node::Const(c) => WireNode { value: Some(*c), ..WireNode::op("const", vec![]) },
            Node::Var(i) => WireNode { index: Some(*i), ..WireNode::op("var", vec![]) },
            Node::Add(a) => WireNode::op("add", a.iter().map(Into::into).collect()),
            Node::Mul(a) => WireNode::op("mul", a.iter().map(Into::into).collect()),
            Node::Pow(b, k) => WireNode { exponent: Some(*k), ..WireNode::op("pow", vec![b.into()]) },
            Node::Sin(b) => WireNode::op("sin", vec![b.into()]),
            Node::Cos(b) => WireNode::op("cos", vec![b.into()]),
            Node::Exp(b) => WireNode::op("exp", vec![b.into()]),
            Node::Log(b) => WireNode::op("log", vec![b.into()]),
        }
    }
}

impl TryFrom<WireNode> for Expr {
    type Error = Error;

    fn try_from(w: WireNode) -> Result<Expr> {
        let missing = |what: &str| Error::Parse(format!("node '{}' missing {what}", w.op));
        let unary = |args: Vec<WireNode>| -> Result<Expr> {
            let mut it = args.into_iter();
            match (it.next(), it.next()) {
                (Some(a), None) => Expr::try_from(a),
                _ => Err(Error::Parse("unary node needs exactly one argument".into())),
            }
        };
        match w.op.as_str() {
            "const" => Ok(Expr::constant(w.value.ok_or_else(|| missing("value"))?)),
            "var" => Ok(Expr::var(w.index.ok_or_else(|| missing("index"))?)),
            "add" => Ok(Expr::sum(
                w.args.into_iter().map(Expr::try_from).collect::<Result<Vec<_>>>()?,
            )),
            "mul" => Ok(Expr::product(
                w.args.into_iter().map(Expr::try_from).collect::<Result<Vec<_>>>()?,
            )),
            "pow" => {
                let k = w.exponent.ok_or_else(|| missing("exponent"))?;
                Ok(unary(w.args)?.powi(k))
            }
            "sin" => Ok(unary(w.args)?.sin()),
            "cos" => Ok(unary(w.args)?.cos()),
            "exp" => Ok(unary(w.args)?.exp()),
            "log" => Ok(unary(w.args)?.ln()),
            other => Err(Error::Parse(format!("unknown op '{other}'"))),
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WireNode::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = WireNode::deserialize(d)?;
        Expr::try_from(w).map_err(serde::de::Error::custom)
    }
}
