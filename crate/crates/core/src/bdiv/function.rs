//! Conical functions `N_Q -> Q` and their evaluators.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::fan::{Fan, FanJson};
use crate::lattice::LatticeVector;
use crate::linalg;
use crate::rational::{parse_rational, serde_q, serde_q_vec, to_f64, Q};

/// Binary precision of numeric-mode evaluation.
pub const NUMERIC_PRECISION: u32 = 53;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Numeric,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Numeric => "numeric",
        })
    }
}

/// Hard-coded planar functions. Each is `min(a, b)` off the closed positive
/// quadrant; inside it they are `ab/(a+b)`, `sqrt(ab)`, `a^e b^(1-e)` and
/// `min(a, b)` respectively.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Builtin {
    Exa1,
    SqrtCusp,
    PowerEps(f64),
    MinQuadrant,
}

impl Builtin {
    pub fn parse(name: &str) -> Result<Self> {
        let name = name.trim();
        match name {
            "exa1" => Ok(Builtin::Exa1),
            "sqrt_cusp" => Ok(Builtin::SqrtCusp),
            "min_quadrant" => Ok(Builtin::MinQuadrant),
            _ => {
                let inner = name
                    .strip_prefix("power_eps(")
                    .and_then(|s| s.strip_suffix(')'))
                    .ok_or_else(|| Error::InvalidInput(format!("unknown builtin `{name}`")))?;
                let eps = match parse_rational(inner) {
                    Some(q) => to_f64(&q),
                    None => inner
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidInput(format!("bad exponent in `{name}`")))?,
                };
                Self::power_eps(eps)
            }
        }
    }

    pub fn power_eps(eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) || !eps.is_finite() {
            return Err(Error::InvalidInput(format!("power_eps exponent {eps} outside [0, 1]")));
        }
        Ok(Builtin::PowerEps(eps))
    }

    pub fn name(&self) -> String {
        match self {
            Builtin::Exa1 => "exa1".into(),
            Builtin::SqrtCusp => "sqrt_cusp".into(),
            Builtin::PowerEps(e) => format!("power_eps({e})"),
            Builtin::MinQuadrant => "min_quadrant".into(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Builtin::Exa1 | Builtin::MinQuadrant)
    }

    fn eval_exact(&self, a: &Q, b: &Q) -> Result<Q> {
        let quadrant = !a.is_negative() && !b.is_negative();
        match self {
            Builtin::Exa1 if quadrant => {
                let s = a + b;
                Ok(if s.is_zero() { Q::zero() } else { a * b / s })
            }
            Builtin::SqrtCusp | Builtin::PowerEps(_) if quadrant => {
                if a.is_zero() || b.is_zero() {
                    Ok(Q::zero())
                } else {
                    Err(Error::EvaluationNotExact(self.name()))
                }
            }
            _ => Ok(if a <= b { a.clone() } else { b.clone() }),
        }
    }

    #[inline]
    pub fn eval_f64(&self, a: f64, b: f64) -> f64 {
        if a >= 0.0 && b >= 0.0 {
            match self {
                Builtin::Exa1 => {
                    let s = a + b;
                    if s == 0.0 {
                        0.0
                    } else {
                        a * b / s
                    }
                }
                Builtin::SqrtCusp => (a * b).sqrt(),
                Builtin::PowerEps(e) => {
                    if a == 0.0 || b == 0.0 {
                        0.0
                    } else {
                        a.powf(*e) * b.powf(1.0 - e)
                    }
                }
                Builtin::MinQuadrant => a.min(b),
            }
        } else {
            a.min(b)
        }
    }
}

/// Point location in a complete simplicial fan, exact and in floating point.
#[derive(Clone, Debug)]
pub struct Locator {
    fan: Fan,
    inv_f64: Vec<Vec<Vec<f64>>>,
}

impl Locator {
    pub fn new(fan: Fan) -> Result<Self> {
        let n = fan.dim();
        let mut inv_f64 = Vec::new();
        for c in fan.max_cones() {
            if c.len() != n {
                return Err(Error::InvalidInput("fan has a maximal cone of lower dimension".into()));
            }
            let g: Vec<Vec<Q>> = (0..n)
                .map(|i| c.iter().map(|&r| Q::from_integer(fan.rays()[r].coords()[i].clone())).collect())
                .collect();
            let inv = linalg::inverse(&g).expect("independent generators");
            inv_f64.push(inv.iter().map(|row| row.iter().map(to_f64).collect()).collect());
        }
        Ok(Locator { fan, inv_f64 })
    }

    pub fn fan(&self) -> &Fan {
        &self.fan
    }

    pub fn locate(&self, v: &LatticeVector) -> Result<(usize, Vec<Q>)> {
        self.fan.locate_maximal(v)
    }

    pub fn locate_f64(&self, v: &[f64]) -> Option<(usize, Vec<f64>)> {
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for (ci, inv) in self.inv_f64.iter().enumerate() {
            let c: Vec<f64> = inv.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect();
            let worst = c.iter().copied().fold(f64::INFINITY, f64::min);
            if worst >= 0.0 {
                return Some((ci, c));
            }
            if best.as_ref().map_or(true, |b| worst > b.2) {
                best = Some((ci, c, worst));
            }
        }
        // rounding on a wall: take the least violated cone
        best.map(|(ci, c, _)| (ci, c))
    }
}

/// A conical function given by one expression per maximal cone of a fan,
/// with an optional fallback expression.
#[derive(Clone, Debug)]
pub struct ExprFunction {
    locator: Locator,
    exprs: Vec<Option<Expr>>,
    default: Option<Expr>,
    source: String,
}

impl ExprFunction {
    /// Parses the piece syntax
    ///
    /// ```text
    /// cone 0,1: (a*b)/(a+b)
    /// default: min(a,b)
    /// ```
    ///
    /// A source without `:` is a single expression used on every cone.
    pub fn parse(fan: &Fan, src: &str) -> Result<Self> {
        let mut exprs: Vec<Option<Expr>> = vec![None; fan.max_cones().len()];
        let mut default = None;
        if !src.contains(':') {
            default = Some(expr::parse(src)?);
        } else {
            for (ln, line) in src.lines().enumerate() {
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    continue;
                }
                let Some((head, body)) = line.split_once(':') else {
                    return Err(Error::Parse { line: ln + 1, column: 1, message: "expected `<selector>: <expr>`".into() });
                };
                let offset = head.chars().count() + 1;
                let e = expr::parse(body).map_err(|e| match e {
                    Error::Parse { line: 1, column, message } => {
                        Error::Parse { line: ln + 1, column: column + offset, message }
                    }
                    other => other,
                })?;
                let head = head.trim();
                if head == "default" {
                    default = Some(e);
                } else if let Some(list) = head.strip_prefix("cone") {
                    let mut idx = Vec::new();
                    for t in list.split(',') {
                        let i: usize = t.trim().parse().map_err(|_| Error::Parse {
                            line: ln + 1,
                            column: 1,
                            message: format!("bad ray index `{}`", t.trim()),
                        })?;
                        idx.push(i);
                    }
                    idx.sort_unstable();
                    let ci = fan.max_cones().iter().position(|c| *c == idx).ok_or_else(|| Error::Parse {
                        line: ln + 1,
                        column: 1,
                        message: format!("{idx:?} is not a maximal cone of the fan"),
                    })?;
                    exprs[ci] = Some(e);
                } else {
                    return Err(Error::Parse { line: ln + 1, column: 1, message: format!("unknown selector `{head}`") });
                }
            }
        }
        Self::new(fan, exprs, default, src.to_string())
    }

    pub fn new(fan: &Fan, exprs: Vec<Option<Expr>>, default: Option<Expr>, source: String) -> Result<Self> {
        let n = fan.dim();
        for e in exprs.iter().flatten().chain(default.iter()) {
            if e.arity() > n {
                return Err(Error::DimensionMismatch { expected: n, found: e.arity() });
            }
        }
        if exprs.iter().any(Option::is_none) && default.is_none() {
            return Err(Error::InvalidInput("some cone has no expression and no default is given".into()));
        }
        let f = ExprFunction { locator: Locator::new(fan.clone())?, exprs, default, source };
        f.check_conical()?;
        Ok(f)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn expr_for(&self, ci: usize) -> &Expr {
        self.exprs[ci].as_ref().or(self.default.as_ref()).expect("checked at construction")
    }

    /// Degree-one homogeneity at 20 deterministic interior points per cone,
    /// for the scalings 2, 3 and 5.
    fn check_conical(&self) -> Result<()> {
        let fan = self.locator.fan();
        let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
        for (ci, c) in fan.max_cones().iter().enumerate() {
            let e = self.expr_for(ci);
            for _ in 0..20 {
                let mut v = LatticeVector::zero(fan.dim());
                for &r in c {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    let k = BigInt::from(1 + (state >> 33) % 7);
                    v = &v + &fan.rays()[r].scale(&k);
                }
                let x = v.to_rational();
                let base = e.eval_exact(&x)?;
                for lambda in [2i64, 3, 5] {
                    let l = Q::from_integer(BigInt::from(lambda));
                    let xl: Vec<Q> = x.iter().map(|t| t * &l).collect();
                    let scaled = e.eval_exact(&xl)?;
                    if scaled != &base * &l {
                        return Err(Error::NotConical(format!(
                            "at {v} with scale {lambda}: phi({lambda}v) = {scaled}, {lambda}*phi(v) = {}",
                            &base * &l
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn eval_exact(&self, v: &LatticeVector) -> Result<Q> {
        let (ci, _) = self.locator.locate(v)?;
        self.expr_for(ci).eval_exact(&v.to_rational())
    }

    fn eval_f64(&self, v: &[f64]) -> f64 {
        match self.locator.locate_f64(v) {
            Some((ci, _)) => self.expr_for(ci).eval_f64(v),
            None => f64::NAN,
        }
    }
}

/// A function that is linear on each maximal cone of a complete fan.
#[derive(Clone, Debug)]
pub struct PiecewiseLinear {
    locator: Locator,
    values: Vec<Q>,
    forms: Vec<Vec<Q>>,
    forms_f64: Vec<Vec<f64>>,
}

impl PiecewiseLinear {
    pub fn new(fan: Fan, values: Vec<Q>) -> Result<Self> {
        if values.len() != fan.rays().len() {
            return Err(Error::DimensionMismatch { expected: fan.rays().len(), found: values.len() });
        }
        if fan.dim() <= 3 && !fan.is_complete()? {
            return Err(Error::InvalidInput("piecewise linear functions need a complete fan".into()));
        }
        let forms: Vec<Vec<Q>> = fan.max_cones().iter().map(|c| linear_form(&fan, c, &values)).collect();
        let forms_f64 = forms.iter().map(|m| m.iter().map(to_f64).collect()).collect();
        Ok(PiecewiseLinear { locator: Locator::new(fan)?, values, forms, forms_f64 })
    }

    pub fn fan(&self) -> &Fan {
        self.locator.fan()
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    /// The linear form `m_sigma` of each maximal cone.
    pub fn forms(&self) -> &[Vec<Q>] {
        &self.forms
    }

    fn eval_exact(&self, v: &LatticeVector) -> Result<Q> {
        let (ci, _) = self.locator.locate(v)?;
        Ok(v.pair(&self.forms[ci]))
    }

    fn eval_f64(&self, v: &[f64]) -> f64 {
        match self.locator.locate_f64(v) {
            Some((ci, _)) => self.forms_f64[ci].iter().zip(v).map(|(a, b)| a * b).sum(),
            None => f64::NAN,
        }
    }
}

/// Solves `<m, v_r> = values[r]` for the generators of a full-dimensional cone.
pub fn linear_form(fan: &Fan, cone: &[usize], values: &[Q]) -> Vec<Q> {
    let a: Vec<Vec<Q>> = cone.iter().map(|&r| fan.rays()[r].to_rational()).collect();
    let b: Vec<Q> = cone.iter().map(|&r| values[r].clone()).collect();
    linalg::solve(&a, &b).expect("maximal cones are full-dimensional")
}

#[derive(Clone, Debug)]
pub enum FunctionKind {
    PiecewiseLinear(PiecewiseLinear),
    Builtin(Builtin),
    Expression(ExprFunction),
    /// `v -> <m, v>`.
    Linear(Vec<Q>),
    Scaled(Q, Box<ConicalFunction>),
    Sum(Box<ConicalFunction>, Box<ConicalFunction>),
}

/// A positively homogeneous function of degree one on `N_Q`.
#[derive(Clone, Debug)]
pub struct ConicalFunction {
    dim: usize,
    kind: FunctionKind,
}

impl ConicalFunction {
    pub fn builtin(b: Builtin) -> Self {
        ConicalFunction { dim: 2, kind: FunctionKind::Builtin(b) }
    }

    pub fn piecewise_linear(fan: Fan, values: Vec<Q>) -> Result<Self> {
        let dim = fan.dim();
        Ok(ConicalFunction { dim, kind: FunctionKind::PiecewiseLinear(PiecewiseLinear::new(fan, values)?) })
    }

    /// The piecewise linear function of the toric divisor `sum a_r D_r`.
    pub fn from_coefficients(fan: Fan, coefficients: &[Q]) -> Result<Self> {
        Self::piecewise_linear(fan, coefficients.iter().map(|a| -a.clone()).collect())
    }

    pub fn expression(fan: &Fan, src: &str) -> Result<Self> {
        Ok(ConicalFunction { dim: fan.dim(), kind: FunctionKind::Expression(ExprFunction::parse(fan, src)?) })
    }

    pub fn linear(m: Vec<Q>) -> Self {
        ConicalFunction { dim: m.len(), kind: FunctionKind::Linear(m) }
    }

    pub fn zero(dim: usize) -> Self {
        Self::linear(vec![Q::zero(); dim])
    }

    pub fn scaled(&self, k: Q) -> Self {
        ConicalFunction { dim: self.dim, kind: FunctionKind::Scaled(k, Box::new(self.clone())) }
    }

    pub fn sum(&self, other: &ConicalFunction) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(ConicalFunction {
            dim: self.dim,
            kind: FunctionKind::Sum(Box::new(self.clone()), Box::new(other.clone())),
        })
    }

    /// `v -> phi(v) - <m, v>`: the function of `D + div(chi^m)`.
    pub fn shifted(&self, m: &[Q]) -> Result<Self> {
        self.sum(&Self::linear(m.iter().map(|x| -x.clone()).collect()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    /// Whether rational inputs give exactly computable rational values.
    pub fn is_exact(&self) -> bool {
        match &self.kind {
            FunctionKind::Builtin(b) => b.is_exact(),
            FunctionKind::Scaled(_, f) => f.is_exact(),
            FunctionKind::Sum(f, g) => f.is_exact() && g.is_exact(),
            _ => true,
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            FunctionKind::PiecewiseLinear(_) => "pl".into(),
            FunctionKind::Builtin(b) => b.name(),
            FunctionKind::Expression(_) => "expr".into(),
            FunctionKind::Linear(_) => "linear".into(),
            FunctionKind::Scaled(k, f) => format!("{k}*{}", f.describe()),
            FunctionKind::Sum(f, g) => format!("{}+{}", f.describe(), g.describe()),
        }
    }

    pub fn eval_exact(&self, v: &LatticeVector) -> Result<Q> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: v.dim() });
        }
        if v.is_zero() {
            return Ok(Q::zero());
        }
        match &self.kind {
            FunctionKind::PiecewiseLinear(p) => p.eval_exact(v),
            FunctionKind::Builtin(b) => {
                let c = v.coords();
                b.eval_exact(&Q::from_integer(c[0].clone()), &Q::from_integer(c[1].clone()))
            }
            FunctionKind::Expression(e) => e.eval_exact(v),
            FunctionKind::Linear(m) => Ok(v.pair(m)),
            FunctionKind::Scaled(k, f) => Ok(k * f.eval_exact(v)?),
            FunctionKind::Sum(f, g) => Ok(f.eval_exact(v)? + g.eval_exact(v)?),
        }
    }

    /// Evaluation at a rational point by homogeneity.
    pub fn eval_rational(&self, v: &[Q]) -> Result<Q> {
        let l = v.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
        let lq = Q::from_integer(l.clone());
        let w = LatticeVector::new(v.iter().map(|x| (x * &lq).to_integer()).collect());
        Ok(self.eval_exact(&w)? / lq)
    }

    pub fn eval_f64(&self, v: &[f64]) -> f64 {
        match &self.kind {
            FunctionKind::PiecewiseLinear(p) => p.eval_f64(v),
            FunctionKind::Builtin(b) => b.eval_f64(v[0], v[1]),
            FunctionKind::Expression(e) => e.eval_f64(v),
            FunctionKind::Linear(m) => m.iter().zip(v).map(|(a, b)| to_f64(a) * b).sum(),
            FunctionKind::Scaled(k, f) => to_f64(k) * f.eval_f64(v),
            FunctionKind::Sum(f, g) => f.eval_f64(v) + g.eval_f64(v),
        }
    }

    /// Value at a lattice point in the given mode.
    pub fn eval_mode(&self, v: &LatticeVector, mode: Mode) -> Result<Q> {
        match mode {
            Mode::Exact => self.eval_exact(v),
            Mode::Numeric => {
                let x = self.eval_f64(&v.to_f64());
                Q::from_float(x).ok_or_else(|| Error::InvalidInput(format!("non-finite value at {v}")))
            }
        }
    }

    /// A fan on which the function is linear on every cone, with its ray
    /// values, when the function is Cartier by construction.
    pub fn pl_model(&self) -> Option<PlModel> {
        match &self.kind {
            FunctionKind::PiecewiseLinear(p) => Some(PlModel::OnFan(p.fan().clone(), p.values().to_vec())),
            FunctionKind::Builtin(Builtin::MinQuadrant) => {
                let fan = Fan::from_i64(2, &[&[1, 0], &[1, 1], &[0, 1], &[-1, -1]], &[&[0, 1], &[1, 2], &[2, 3], &[0, 3]])
                    .expect("valid fan");
                let values = fan.rays().iter().map(|r| self.eval_exact(r).expect("exact")).collect();
                Some(PlModel::OnFan(fan, values))
            }
            FunctionKind::Builtin(_) | FunctionKind::Expression(_) => None,
            FunctionKind::Linear(m) => Some(PlModel::Global(m.clone())),
            FunctionKind::Scaled(k, f) => Some(match f.pl_model()? {
                PlModel::Global(m) => PlModel::Global(m.iter().map(|x| x * k).collect()),
                PlModel::OnFan(fan, vals) => PlModel::OnFan(fan, vals.iter().map(|x| x * k).collect()),
            }),
            FunctionKind::Sum(f, g) => {
                let (a, b) = (f.pl_model()?, g.pl_model()?);
                match (a, b) {
                    (PlModel::Global(m1), PlModel::Global(m2)) => {
                        Some(PlModel::Global(m1.iter().zip(&m2).map(|(x, y)| x + y).collect()))
                    }
                    (PlModel::Global(m), PlModel::OnFan(fan, vals)) | (PlModel::OnFan(fan, vals), PlModel::Global(m)) => {
                        let vals = fan.rays().iter().zip(vals).map(|(r, v)| v + r.pair(&m)).collect();
                        Some(PlModel::OnFan(fan, vals))
                    }
                    (PlModel::OnFan(f1, _), PlModel::OnFan(f2, _)) => {
                        let fan = common_refinement(&f1, &f2)?;
                        let vals = fan.rays().iter().map(|r| self.eval_exact(r)).collect::<Result<_>>().ok()?;
                        Some(PlModel::OnFan(fan, vals))
                    }
                }
            }
        }
    }

    /// Largest sup-norm of a ray of the Cartier model (1 for linear functions).
    pub fn cartier_height(&self) -> Option<u64> {
        match self.pl_model()? {
            PlModel::Global(_) => Some(1),
            PlModel::OnFan(fan, _) => fan.rays().iter().map(|r| r.sup_norm().to_u64()).max().flatten(),
        }
    }
}

/// Cartier data of a function.
#[derive(Clone, Debug)]
pub enum PlModel {
    Global(Vec<Q>),
    OnFan(Fan, Vec<Q>),
}

/// Common refinement of two complete fans: identical fans, or in dimension
/// two the fan on the union of their rays.
pub fn common_refinement(a: &Fan, b: &Fan) -> Option<Fan> {
    if a == b {
        return Some(a.clone());
    }
    if a.dim() != 2 || b.dim() != 2 {
        return None;
    }
    let mut rays: Vec<LatticeVector> = a.rays().to_vec();
    for r in b.rays() {
        if !rays.contains(r) {
            rays.push(r.clone());
        }
    }
    complete_planar_fan(rays).ok()
}

/// The complete planar fan whose rays are the given primitive vectors,
/// sorted by angle.
pub fn complete_planar_fan(mut rays: Vec<LatticeVector>) -> Result<Fan> {
    rays.sort_by(|u, v| planar_angle_cmp(u, v));
    rays.dedup();
    let k = rays.len();
    if k < 3 {
        return Err(Error::InvalidInput("a complete planar fan needs at least three rays".into()));
    }
    let cones: Vec<Vec<usize>> = (0..k)
        .map(|i| {
            let mut c = vec![i, (i + 1) % k];
            c.sort_unstable();
            c
        })
        .collect();
    Fan::new(2, rays, cones)
}

/// Counter-clockwise angular order starting from the positive x-axis.
pub fn planar_angle_cmp(u: &LatticeVector, v: &LatticeVector) -> std::cmp::Ordering {
    let half = |w: &LatticeVector| {
        let (x, y) = (&w.coords()[0], &w.coords()[1]);
        if y.is_positive() || (y.is_zero() && x.is_positive()) {
            0
        } else {
            1
        }
    };
    half(u).cmp(&half(v)).then_with(|| {
        let d = crate::lattice::det2(u, v);
        BigInt::zero().cmp(&d)
    })
}

/// JSON encoding of a function; `fan` defaults to the base fan of the divisor.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FunctionJson {
    Pl {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fan: Option<FanJson>,
        #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_q_vec")]
        values: Option<Vec<Q>>,
        #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_q_vec")]
        coefficients: Option<Vec<Q>>,
    },
    Builtin {
        name: String,
    },
    Expr {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fan: Option<FanJson>,
        source: String,
    },
    Linear {
        #[serde(with = "serde_q_vec")]
        m: Vec<Q>,
    },
    Scaled {
        #[serde(with = "serde_q")]
        factor: Q,
        function: Box<FunctionJson>,
    },
    Sum {
        terms: Vec<FunctionJson>,
    },
}

mod opt_q_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<Vec<Q>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(v) => serde_q_vec::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<Q>>, D::Error> {
        serde_q_vec::deserialize(d).map(Some)
    }
}

impl ConicalFunction {
    pub fn from_json(j: &FunctionJson, base: &Fan) -> Result<Self> {
        let pick = |f: &Option<FanJson>| -> Result<Fan> {
            match f {
                Some(fj) => Fan::from_json(fj.clone()),
                None => Ok(base.clone()),
            }
        };
        match j {
            FunctionJson::Pl { fan, values, coefficients } => {
                let fan = pick(fan)?;
                match (values, coefficients) {
                    (Some(v), None) => Self::piecewise_linear(fan, v.clone()),
                    (None, Some(a)) => Self::from_coefficients(fan, a),
                    _ => Err(Error::InvalidInput("pl function needs exactly one of `values`, `coefficients`".into())),
                }
            }
            FunctionJson::Builtin { name } => {
                if base.dim() != 2 {
                    return Err(Error::NotDimensionTwo(base.dim()));
                }
                Ok(Self::builtin(Builtin::parse(name)?))
            }
            FunctionJson::Expr { fan, source } => Self::expression(&pick(fan)?, source),
            FunctionJson::Linear { m } => Ok(Self::linear(m.clone())),
            FunctionJson::Scaled { factor, function } => Ok(Self::from_json(function, base)?.scaled(factor.clone())),
            FunctionJson::Sum { terms } => {
                let mut it = terms.iter();
                let first = it.next().ok_or_else(|| Error::InvalidInput("empty sum".into()))?;
                let mut acc = Self::from_json(first, base)?;
                for t in it {
                    acc = acc.sum(&Self::from_json(t, base)?)?;
                }
                Ok(acc)
            }
        }
    }

    pub fn to_json(&self) -> FunctionJson {
        match &self.kind {
            FunctionKind::PiecewiseLinear(p) => {
                FunctionJson::Pl { fan: Some(p.fan().to_json()), values: Some(p.values().to_vec()), coefficients: None }
            }
            FunctionKind::Builtin(b) => FunctionJson::Builtin { name: b.name() },
            FunctionKind::Expression(e) => {
                FunctionJson::Expr { fan: Some(e.locator.fan().to_json()), source: e.source().to_string() }
            }
            FunctionKind::Linear(m) => FunctionJson::Linear { m: m.clone() },
            FunctionKind::Scaled(k, f) => FunctionJson::Scaled { factor: k.clone(), function: Box::new(f.to_json()) },
            FunctionKind::Sum(f, g) => FunctionJson::Sum { terms: vec![f.to_json(), g.to_json()] },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn lv(c: &[i64]) -> LatticeVector {
        LatticeVector::from_i64(c)
    }

    #[test]
    fn builtin_values() {
        let e = ConicalFunction::builtin(Builtin::Exa1);
        assert_eq!(e.eval_exact(&lv(&[2, 3])).unwrap(), q(6, 5));
        assert_eq!(e.eval_exact(&lv(&[1, 1])).unwrap(), q(1, 2));
        assert_eq!(e.eval_exact(&lv(&[-1, -1])).unwrap(), qi(-1));
        assert_eq!(e.eval_exact(&lv(&[1, 0])).unwrap(), qi(0));
        assert_eq!(e.eval_exact(&lv(&[-2, 5])).unwrap(), qi(-2));
        assert_eq!(e.eval_f64(&[2.0, 3.0]), 1.2);
        let s = ConicalFunction::builtin(Builtin::SqrtCusp);
        assert!(!s.is_exact());
        assert!(matches!(s.eval_exact(&lv(&[1, 2])), Err(Error::EvaluationNotExact(_))));
        assert_eq!(s.eval_exact(&lv(&[0, 2])).unwrap(), qi(0));
        assert_eq!(s.eval_f64(&[4.0, 9.0]), 6.0);
        assert_eq!(Builtin::parse("power_eps(1/4)").unwrap(), Builtin::PowerEps(0.25));
        assert!(Builtin::parse("power_eps(2)").is_err());
        assert!(Builtin::parse("nope").is_err());
    }

    #[test]
    fn rational_points_use_homogeneity() {
        let e = ConicalFunction::builtin(Builtin::Exa1);
        assert_eq!(e.eval_rational(&[q(1, 2), q(1, 3)]).unwrap(), q(1, 5));
    }

    #[test]
    fn piecewise_linear_evaluation() {
        let p2 = Fan::projective_plane();
        let h = ConicalFunction::from_coefficients(p2.clone(), &[qi(0), qi(0), qi(1)]).unwrap();
        assert_eq!(h.eval_exact(&lv(&[2, 3])).unwrap(), qi(0));
        assert_eq!(h.eval_exact(&lv(&[-2, 3])).unwrap(), qi(-2));
        assert_eq!(h.eval_exact(&lv(&[1, -4])).unwrap(), qi(-4));
        assert_eq!(h.eval_f64(&[1.0, -4.0]), -4.0);
        assert_eq!(h.cartier_height(), Some(1));
    }

    #[test]
    fn expression_functions() {
        let p2 = Fan::projective_plane();
        let f = ConicalFunction::expression(&p2, "cone 0,1: (a*b)/(a+b)\ndefault: min(a,b)").unwrap();
        assert_eq!(f.eval_exact(&lv(&[2, 3])).unwrap(), q(6, 5));
        assert_eq!(f.eval_exact(&lv(&[-2, 3])).unwrap(), qi(-2));
        assert!(ConicalFunction::expression(&p2, "a + b").is_ok());
        assert!(matches!(ConicalFunction::expression(&p2, "a*b"), Err(Error::NotConical(_))));
        match ConicalFunction::expression(&p2, "cone 0,1: a +* b\ndefault: a") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (1, 14)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(ConicalFunction::expression(&p2, "cone 0,2: a"), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pl_models_of_combinations() {
        let p2 = Fan::projective_plane();
        let h = ConicalFunction::from_coefficients(p2.clone(), &[qi(0), qi(0), qi(1)]).unwrap();
        let mq = ConicalFunction::builtin(Builtin::MinQuadrant);
        let s = h.sum(&mq).unwrap();
        match s.pl_model().unwrap() {
            PlModel::OnFan(fan, vals) => {
                assert_eq!(fan.rays().len(), 4);
                for (r, v) in fan.rays().iter().zip(vals) {
                    assert_eq!(s.eval_exact(r).unwrap(), v);
                }
            }
            PlModel::Global(_) => panic!("expected a fan"),
        }
        assert!(ConicalFunction::builtin(Builtin::Exa1).pl_model().is_none());
        let shifted = h.shifted(&[qi(1), qi(2)]).unwrap();
        assert_eq!(shifted.eval_exact(&lv(&[1, 1])).unwrap(), qi(-3));
    }

    #[test]
    fn json_roundtrip() {
        let p2 = Fan::projective_plane();
        let text = r#"{"kind":"sum","terms":[{"kind":"builtin","name":"exa1"},{"kind":"pl","coefficients":[0,0,"1"]}]}"#;
        let j: FunctionJson = serde_json::from_str(text).unwrap();
        let f = ConicalFunction::from_json(&j, &p2).unwrap();
        assert_eq!(f.eval_exact(&lv(&[1, 1])).unwrap(), q(1, 2));
        assert_eq!(f.eval_exact(&lv(&[-1, -1])).unwrap(), qi(-2));
        let back = ConicalFunction::from_json(&f.to_json(), &p2).unwrap();
        assert_eq!(back.eval_exact(&lv(&[3, -7])).unwrap(), f.eval_exact(&lv(&[3, -7])).unwrap());
        assert!(serde_json::from_str::<FunctionJson>(r#"{"kind":"builtin","name":"exa1","x":1}"#).is_err());
    }
}
