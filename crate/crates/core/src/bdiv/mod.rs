//! Toric b-divisors given by conical functions: incarnations, nefness,
//! stability sets and degrees along the refinement net.

pub mod function;
pub mod region;

pub use function::{Builtin, ConicalFunction, FunctionJson, FunctionKind, Mode, PlModel, NUMERIC_PRECISION};
pub use region::MembershipRegion;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex::{mixed_volume, Halfspace, RationalPolytope};
use crate::error::{Error, Result};
use crate::fan::{primitive_vectors, Fan, FanJson, RefinementChain};
use crate::lattice::LatticeVector;
use crate::rational::{serde_q, to_f64, Q};

/// Default tolerance on successive outer degrees.
pub const DEFAULT_TOL: f64 = 1e-6;

pub fn default_hmax(dim: usize) -> u64 {
    if dim <= 2 {
        64
    } else {
        16
    }
}

/// A toric b-divisor on a smooth complete base fan.
#[derive(Clone, Debug)]
pub struct BDivisor {
    base: Fan,
    phi: ConicalFunction,
    mode: Mode,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BDivisorJson {
    pub fan: FanJson,
    pub function: FunctionJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
}

impl BDivisor {
    pub fn new(base: Fan, phi: ConicalFunction, mode: Mode) -> Result<Self> {
        if base.dim() != phi.dim() {
            return Err(Error::DimensionMismatch { expected: base.dim(), found: phi.dim() });
        }
        if !base.is_smooth() {
            return Err(Error::NotSmooth("base fan".into()));
        }
        if !base.is_complete()? {
            return Err(Error::InvalidInput("base fan is not complete".into()));
        }
        if mode == Mode::Exact && !phi.is_exact() {
            return Err(Error::EvaluationNotExact(format!("{} has no exact evaluator", phi.describe())));
        }
        Ok(BDivisor { base, phi, mode })
    }

    /// A builtin planar function over the fan of the projective plane, in
    /// exact mode when available.
    pub fn builtin(b: Builtin) -> Self {
        let mode = if b.is_exact() { Mode::Exact } else { Mode::Numeric };
        BDivisor { base: Fan::projective_plane(), phi: ConicalFunction::builtin(b), mode }
    }

    /// The Cartier b-divisor of `sum a_r D_r` on `fan`.
    pub fn from_coefficients(fan: Fan, coefficients: &[Q]) -> Result<Self> {
        let phi = ConicalFunction::from_coefficients(fan.clone(), coefficients)?;
        Self::new(fan, phi, Mode::Exact)
    }

    /// The hyperplane class on the projective plane.
    pub fn hyperplane() -> Self {
        let one = Q::one();
        Self::from_coefficients(Fan::projective_plane(), &[Q::zero(), Q::zero(), one]).expect("valid divisor")
    }

    pub fn zero(base: Fan) -> Result<Self> {
        let n = base.dim();
        Self::new(base, ConicalFunction::zero(n), Mode::Exact)
    }

    pub fn from_json(j: &BDivisorJson) -> Result<Self> {
        let base = Fan::from_json(j.fan.clone())?;
        let phi = ConicalFunction::from_json(&j.function, &base)?;
        let mode = j.mode.unwrap_or(if phi.is_exact() { Mode::Exact } else { Mode::Numeric });
        Self::new(base, phi, mode)
    }

    pub fn to_json(&self) -> BDivisorJson {
        BDivisorJson { fan: self.base.to_json(), function: self.phi.to_json(), mode: Some(self.mode) }
    }

    pub fn base(&self) -> &Fan {
        &self.base
    }

    pub fn phi(&self) -> &ConicalFunction {
        &self.phi
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn with_mode(&self, mode: Mode) -> Result<Self> {
        Self::new(self.base.clone(), self.phi.clone(), mode)
    }

    pub fn scaled(&self, k: &Q) -> Self {
        BDivisor { base: self.base.clone(), phi: self.phi.scaled(k.clone()), mode: self.mode }
    }

    pub fn sum(&self, other: &BDivisor) -> Result<Self> {
        let mode = if self.mode == Mode::Exact && other.mode == Mode::Exact { Mode::Exact } else { Mode::Numeric };
        Self::new(self.base.clone(), self.phi.sum(&other.phi)?, mode)
    }

    /// `D + div(chi^m)`.
    pub fn shifted(&self, m: &[Q]) -> Result<Self> {
        Self::new(self.base.clone(), self.phi.shifted(m)?, self.mode)
    }

    pub fn require_exact(&self) -> Result<()> {
        if self.mode == Mode::Exact {
            Ok(())
        } else {
            Err(Error::EvaluationNotExact(format!("{} is in numeric mode", self.phi.describe())))
        }
    }

    /// Value of the function in the divisor's mode.
    pub fn value(&self, v: &LatticeVector) -> Result<Q> {
        self.phi.eval_mode(v, self.mode)
    }

    pub fn membership(&self) -> Option<MembershipRegion> {
        if self.mode == Mode::Exact {
            MembershipRegion::of(&self.phi)
        } else {
            None
        }
    }

    pub fn cartier_height(&self) -> Option<u64> {
        self.phi.cartier_height()
    }
}

/// Coefficients `a_r = -phi(v_r)` on the rays of a refinement of the base fan.
pub fn incarnation(d: &BDivisor, fan: &Fan) -> Result<Vec<(LatticeVector, Q)>> {
    d.require_exact()?;
    if !fan.refines(d.base()) {
        return Err(Error::NotARefinement("fan does not refine the base fan".into()));
    }
    fan.rays().iter().map(|r| Ok((r.clone(), -d.phi().eval_exact(r)?))).collect()
}

/// Restriction of ray values on `fine` to the rays of `target`.
pub fn pushforward(fine: &Fan, values: &[Q], target: &Fan) -> Result<Vec<Q>> {
    if values.len() != fine.rays().len() {
        return Err(Error::DimensionMismatch { expected: fine.rays().len(), found: values.len() });
    }
    if !fine.refines(target) {
        return Err(Error::NotARefinement("source fan does not refine the target".into()));
    }
    target
        .rays()
        .iter()
        .map(|r| Ok(values[fine.ray_index(r).expect("refinement keeps rays")].clone()))
        .collect()
}

/// Piecewise linear extension of ray values on `coarse` to the rays of `fine`.
pub fn pullback(coarse: &Fan, values: &[Q], fine: &Fan) -> Result<Vec<Q>> {
    if values.len() != coarse.rays().len() {
        return Err(Error::DimensionMismatch { expected: coarse.rays().len(), found: values.len() });
    }
    if !fine.refines(coarse) {
        return Err(Error::NotARefinement("target fan does not refine the source".into()));
    }
    fine.rays().iter().map(|r| pl_interpolate(coarse, values, r)).collect()
}

/// Value at `v` of the function linear on the cones of `fan` with the given ray values.
pub fn pl_interpolate(fan: &Fan, values: &[Q], v: &LatticeVector) -> Result<Q> {
    if v.is_zero() {
        return Ok(Q::zero());
    }
    let (idx, coeffs) = fan.locate(v)?;
    Ok(idx.iter().zip(&coeffs).map(|(&i, c)| c * &values[i]).sum())
}

/// A failed concavity inequality `<m_sigma, v_ray> >= psi(v_ray)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NefWitness {
    pub ray: LatticeVector,
    pub cone: Vec<LatticeVector>,
    #[serde(with = "serde_q")]
    pub lhs: Q,
    #[serde(with = "serde_q")]
    pub rhs: Q,
}

/// First violated wall inequality of the piecewise linear function with the
/// given ray values, scanning rays in index order; `margin` absorbs rounding
/// of numeric values.
pub fn nef_witness(fan: &Fan, values: &[Q], margin: &Q) -> Result<Option<NefWitness>> {
    if fan.dim() > 3 {
        return Err(Error::UnsupportedDimension(fan.dim()));
    }
    let walls = fan.facet_map();
    let forms: Vec<Vec<Q>> = fan.max_cones().iter().map(|c| function::linear_form(fan, c, values)).collect();
    let mut containing: Vec<Vec<usize>> = vec![Vec::new(); fan.rays().len()];
    for (ci, c) in fan.max_cones().iter().enumerate() {
        for &r in c {
            containing[r].push(ci);
        }
    }
    for (ri, ray) in fan.rays().iter().enumerate() {
        for &ci in &containing[ri] {
            let facet: Vec<usize> = fan.max_cones()[ci].iter().copied().filter(|&r| r != ri).collect();
            let Some(pair) = walls.get(&facet) else { continue };
            for &other in pair.iter().filter(|&&o| o != ci) {
                let lhs = ray.pair(&forms[other]);
                let rhs = values[ri].clone();
                let slack = margin * (Q::one() + rhs.abs());
                if lhs < &rhs - &slack {
                    return Ok(Some(NefWitness {
                        ray: ray.clone(),
                        cone: fan.max_cones()[other].iter().map(|&r| fan.rays()[r].clone()).collect(),
                        lhs,
                        rhs,
                    }));
                }
            }
        }
    }
    Ok(None)
}

fn mode_margin(mode: Mode) -> Q {
    match mode {
        Mode::Exact => Q::zero(),
        Mode::Numeric => Q::from_float(1e-9).expect("finite"),
    }
}

/// Ray values of the incarnation of `d` on `fan`, in the divisor's mode.
pub fn ray_values(d: &BDivisor, fan: &Fan) -> Result<Vec<Q>> {
    fan.rays().par_iter().map(|r| d.value(r)).collect()
}

/// Whether the incarnation of `d` on `fan` is nef.
pub fn is_nef_incarnation(d: &BDivisor, fan: &Fan) -> Result<bool> {
    let values = ray_values(d, fan)?;
    Ok(nef_witness(fan, &values, &mode_margin(d.mode()))?.is_none())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum NefVerdict {
    NefUpToH { height: u64 },
    NotNef { height: u64, witness: NefWitness },
}

impl NefVerdict {
    pub fn is_nef(&self) -> bool {
        matches!(self, NefVerdict::NefUpToH { .. })
    }
}

/// Nef test along the height refinement chain: the base fan (height 0) and
/// the fan after each completed height `1..=h`.
pub fn is_nef_bdiv(d: &BDivisor, h: u64) -> Result<NefVerdict> {
    let margin = mode_margin(d.mode());
    let mut chain = RefinementChain::new(d.base().clone())?;
    for k in 0..=h {
        if k > 0 {
            chain.refine_by_height(k)?;
        }
        let fan = chain.fan();
        let values = ray_values(d, fan)?;
        if let Some(w) = nef_witness(fan, &values, &margin)? {
            return Ok(NefVerdict::NotNef { height: k, witness: w });
        }
    }
    Ok(NefVerdict::NefUpToH { height: h })
}

/// Halfspaces `<m, v> >= phi(v)` for every primitive `v` of sup-norm at most `h`.
pub fn stability_halfspaces(d: &BDivisor, h: u64) -> Result<Vec<Halfspace>> {
    d.require_exact()?;
    primitive_vectors(d.dim(), h)
        .into_par_iter()
        .map(|v| {
            let b = d.phi().eval_exact(&v)?;
            Ok(Halfspace::new(v, b))
        })
        .collect()
}

/// Like [`stability_outer`] but in the divisor's own mode: numeric divisors
/// get halfspace offsets rounded from binary floating point.
pub fn stability_outer_any(d: &BDivisor, h: u64) -> Result<RationalPolytope> {
    if h == 0 {
        return Err(Error::InvalidInput("height must be positive".into()));
    }
    let hs: Vec<Halfspace> = primitive_vectors(d.dim(), h)
        .into_par_iter()
        .map(|v| {
            let b = d.value(&v)?;
            Ok(Halfspace::new(v, b))
        })
        .collect::<Result<_>>()?;
    RationalPolytope::from_halfspaces(d.dim(), &hs)
}

/// Outer approximation of the stability set at height `h`.
pub fn stability_outer(d: &BDivisor, h: u64) -> Result<RationalPolytope> {
    if h == 0 {
        return Err(Error::InvalidInput("height must be positive".into()));
    }
    RationalPolytope::from_halfspaces(d.dim(), &stability_halfspaces(d, h)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub height: u64,
    #[serde(with = "serde_q")]
    pub value: Q,
    pub value_f64: f64,
}

/// A degree computed as a limit of outer approximations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeResult {
    #[serde(with = "serde_q")]
    pub value: Q,
    pub value_f64: f64,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    /// Cartier input whose outer approximation is exact at the final height.
    pub stabilized: bool,
    #[serde(with = "serde_q")]
    pub bracket_width: Q,
    pub bracket_width_f64: f64,
    pub final_height: u64,
}

/// Doubling schedule `1, 2, 4, ...` capped by (and ending at) `h_max`.
pub fn height_schedule(h_max: u64) -> Vec<u64> {
    let mut hs = Vec::new();
    let mut h = 1;
    while h < h_max {
        hs.push(h);
        h *= 2;
    }
    hs.push(h_max.max(1));
    hs
}

fn tol_q(tol: f64) -> Result<Q> {
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(Error::InvalidInput(format!("bad tolerance {tol}")));
    }
    Ok(Q::from_float(tol).expect("finite"))
}

/// Runs the height schedule, evaluating `value_at(h)` until successive values
/// differ by at most `tol`, or the Cartier height of every input is reached.
fn run_schedule<F>(ds: &[&BDivisor], tol: f64, h_max: u64, value_at: F) -> Result<DegreeResult>
where
    F: Fn(u64) -> Result<Q>,
{
    let tol = tol_q(tol)?;
    for d in ds {
        d.require_exact()?;
    }
    let cartier: Option<u64> = ds.iter().map(|d| d.cartier_height()).collect::<Option<Vec<_>>>().map(|v| {
        v.into_iter().max().unwrap_or(1)
    });
    let mut trace: Vec<TraceEntry> = Vec::new();
    for h in height_schedule(h_max) {
        let value = value_at(h)?;
        let entry = TraceEntry { height: h, value_f64: to_f64(&value), value };
        if let Some(prev) = trace.last() {
            debug_assert!(entry.value <= prev.value, "outer degrees must not increase");
        }
        let width = trace.last().map(|p| (&p.value - &entry.value).abs());
        trace.push(entry);
        let last = trace.last().expect("just pushed");
        let stabilized = cartier.is_some_and(|c| h >= c);
        let close = width.as_ref().is_some_and(|w| *w <= tol);
        if stabilized || close {
            return Ok(DegreeResult {
                value: last.value.clone(),
                value_f64: last.value_f64,
                converged: true,
                stabilized,
                bracket_width_f64: width.as_ref().filter(|_| !stabilized).map_or(0.0, to_f64),
                bracket_width: if stabilized { Q::zero() } else { width.expect("checked") },
                final_height: h,
                trace,
            });
        }
    }
    let last = trace.last().expect("schedule is nonempty").clone();
    let width = if trace.len() >= 2 { (&trace[trace.len() - 2].value - &last.value).abs() } else { Q::zero() };
    Err(Error::NotConverged(Box::new(DegreeResult {
        value: last.value,
        value_f64: last.value_f64,
        converged: false,
        stabilized: false,
        bracket_width_f64: to_f64(&width),
        bracket_width: width,
        final_height: last.height,
        trace,
    })))
}

fn factorial(n: usize) -> Q {
    Q::from_integer((1..=n).map(BigInt::from).product())
}

/// Degree `n! vol(Delta)` of a nef b-divisor from outer stability sets.
pub fn degree_nef(d: &BDivisor, tol: f64, h_max: u64) -> Result<DegreeResult> {
    let n = d.dim();
    run_schedule(&[d], tol, h_max, |h| Ok(factorial(n) * stability_outer(d, h)?.volume()))
}

/// Mixed degree of `n` nef b-divisors: the mixed volume of the outer stability sets.
pub fn mixed_degree(ds: &[BDivisor], tol: f64, h_max: u64) -> Result<DegreeResult> {
    let n = ds.first().ok_or_else(|| Error::InvalidInput("no divisors".into()))?.dim();
    if ds.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: ds.len() });
    }
    let refs: Vec<&BDivisor> = ds.iter().collect();
    run_schedule(&refs, tol, h_max, |h| {
        let ps: Vec<RationalPolytope> = ds.iter().map(|d| stability_outer(d, h)).collect::<Result<_>>()?;
        mixed_volume(&ps)
    })
}

fn binomial(n: usize, k: usize) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// `sum_i (-1)^i C(n,i) MV(P1^(n-i), P2^i)` for two polytopes.
pub fn difference_volume(p1: &RationalPolytope, p2: &RationalPolytope) -> Result<Q> {
    let n = p1.dim();
    let mut total = Q::zero();
    for i in 0..=n {
        let mut ks = vec![p1.clone(); n - i];
        ks.extend(std::iter::repeat(p2.clone()).take(i));
        let term = Q::from_integer(binomial(n, i)) * mixed_volume(&ks)?;
        if i % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    Ok(total)
}

/// Degree of `D1 - D2` for nef `D1`, `D2` by the binomial mixed-volume formula.
/// The schedule stops when successive values agree within `tol`; the
/// difference need not be monotone in the height.
pub fn degree_difference(d1: &BDivisor, d2: &BDivisor, tol: f64, h_max: u64) -> Result<DegreeResult> {
    if d1.dim() != d2.dim() {
        return Err(Error::DimensionMismatch { expected: d1.dim(), found: d2.dim() });
    }
    let tolq = tol_q(tol)?;
    d1.require_exact()?;
    d2.require_exact()?;
    let cartier = d1.cartier_height().zip(d2.cartier_height()).map(|(a, b)| a.max(b));
    let mut trace: Vec<TraceEntry> = Vec::new();
    for h in height_schedule(h_max) {
        let value = difference_volume(&stability_outer(d1, h)?, &stability_outer(d2, h)?)?;
        let width = trace.last().map(|p| (&p.value - &value).abs());
        trace.push(TraceEntry { height: h, value_f64: to_f64(&value), value: value.clone() });
        let stabilized = cartier.is_some_and(|c| h >= c);
        if stabilized || width.as_ref().is_some_and(|w| *w <= tolq) {
            return Ok(DegreeResult {
                value_f64: to_f64(&value),
                value,
                converged: true,
                stabilized,
                bracket_width_f64: width.as_ref().filter(|_| !stabilized).map_or(0.0, to_f64),
                bracket_width: if stabilized { Q::zero() } else { width.expect("checked") },
                final_height: h,
                trace,
            });
        }
    }
    let last = trace.last().expect("nonempty").clone();
    let width = if trace.len() >= 2 { (&trace[trace.len() - 2].value - &last.value).abs() } else { Q::zero() };
    Err(Error::NotConverged(Box::new(DegreeResult {
        value: last.value,
        value_f64: last.value_f64,
        converged: false,
        stabilized: false,
        bracket_width_f64: to_f64(&width),
        bracket_width: width,
        final_height: last.height,
        trace,
    })))
}

/// A closed interval of reals with `f64` endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RealInterval {
    pub lo: f64,
    pub hi: f64,
}

impl RealInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Best rational approximation of `x` with denominator at most `max_den`
/// (continued-fraction convergents of the exact binary value).
pub fn rational_approximation(x: f64, max_den: &BigInt) -> Q {
    let exact = Q::from_float(x).expect("finite");
    if exact.denom() <= max_den {
        return exact;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let mut r = exact.clone();
    loop {
        let a = r.floor().to_integer();
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        if &q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = &r - Q::from_integer(a);
        if frac.is_zero() {
            break;
        }
        r = frac.recip();
    }
    Q::new(p1, q1)
}

fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let b = x.to_bits();
    f64::from_bits(if x > 0.0 { b + 1 } else { b - 1 })
}

fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

/// Encloses the continuous extension of `phi` at a real point.
///
/// Coordinates are replaced by rational approximations with denominator at
/// most `2^precision`; the approximation error is propagated through a
/// Lipschitz constant sampled at radii `|r| 2^-k`.
pub fn extend_to_real(phi: &ConicalFunction, v: &[f64], precision: u32) -> Result<RealInterval> {
    if v.len() != phi.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), found: v.len() });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite coordinate".into()));
    }
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroVector);
    }
    let max_den = BigInt::one() << precision.min(1000);
    let r: Vec<Q> = v.iter().map(|&x| rational_approximation(x, &max_den)).collect();
    // distance to the real input: approximation error plus one ulp of the input
    let err: f64 = v
        .iter()
        .zip(&r)
        .map(|(&x, ri)| {
            let exact = Q::from_float(x).expect("finite");
            if exact == *ri {
                0.0
            } else {
                next_up(to_f64(&(exact - ri).abs())) + next_up(x.abs()) - x.abs()
            }
        })
        .sum();
    let (center, exact_center) = if phi.is_exact() {
        (to_f64(&phi.eval_rational(&r)?), true)
    } else {
        let rf: Vec<f64> = r.iter().map(to_f64).collect();
        (phi.eval_f64(&rf), false)
    };
    let mut radius = 0.0;
    if err > 0.0 {
        let rf: Vec<f64> = r.iter().map(to_f64).collect();
        let scale = rf.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let f0 = phi.eval_f64(&rf);
        let mut quotients = Vec::new();
        for k in 4..=24 {
            let delta = scale * 2f64.powi(-k);
            let mut q = 0.0f64;
            for i in 0..rf.len() {
                for s in [1.0, -1.0] {
                    let mut w = rf.clone();
                    w[i] += s * delta;
                    q = q.max((phi.eval_f64(&w) - f0).abs() / delta);
                }
            }
            quotients.push(q);
        }
        let tail = &quotients[quotients.len() - 4..];
        if tail.windows(2).all(|w| w[1] > 1.2 * w[0]) || quotients.iter().any(|q| !q.is_finite()) {
            return Err(Error::NoLipschitzBound(format!("{v:?}")));
        }
        let lipschitz = 2.0 * quotients.iter().fold(0.0f64, |m, &q| m.max(q));
        radius = lipschitz * err;
    }
    let slack = if exact_center { 0.0 } else { 8.0 * f64::EPSILON * center.abs().max(f64::MIN_POSITIVE) };
    let (lo, hi) = if radius == 0.0 && slack == 0.0 {
        // exact input: enclose the rational value itself
        let q = phi.eval_rational(&r)?;
        let c = to_f64(&q);
        let cq = Q::from_float(c).expect("finite");
        if cq == q {
            (c, c)
        } else {
            (next_down(c), next_up(c))
        }
    } else {
        (next_down(center - radius - slack), next_up(center + radius + slack))
    };
    Ok(RealInterval { lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn lv(c: &[i64]) -> LatticeVector {
        LatticeVector::from_i64(c)
    }

    #[test]
    fn incarnation_examples() {
        let h = BDivisor::hyperplane();
        let inc = incarnation(&h, &Fan::projective_plane()).unwrap();
        assert_eq!(inc.iter().map(|x| x.1.clone()).collect::<Vec<_>>(), vec![qi(0), qi(0), qi(1)]);
        let e = BDivisor::builtin(Builtin::Exa1);
        let inc = incarnation(&e, &Fan::projective_plane()).unwrap();
        assert_eq!(inc.iter().map(|x| x.1.clone()).collect::<Vec<_>>(), vec![qi(0), qi(0), qi(1)]);
        let sub = Fan::projective_plane().star_subdivide(&[0, 1]).unwrap();
        let inc = incarnation(&e, &sub).unwrap();
        assert_eq!(inc[3], (lv(&[1, 1]), q(-1, 2)));
        let numeric = BDivisor::builtin(Builtin::SqrtCusp);
        assert!(matches!(incarnation(&numeric, &sub), Err(Error::EvaluationNotExact(_))));
        assert!(matches!(incarnation(&e, &Fan::p1xp1()), Err(Error::NotARefinement(_))));
    }

    #[test]
    fn pushforward_and_pullback() {
        let p2 = Fan::projective_plane();
        let sub = p2.star_subdivide(&[0, 1]).unwrap();
        let vals = vec![qi(1), qi(2), qi(3), qi(7)];
        assert_eq!(pushforward(&sub, &vals, &p2).unwrap(), vec![qi(1), qi(2), qi(3)]);
        let up = pullback(&p2, &[qi(1), qi(2), qi(3)], &sub).unwrap();
        assert_eq!(up[3], qi(3));
        assert_eq!(pushforward(&sub, &up, &p2).unwrap(), vec![qi(1), qi(2), qi(3)]);
        let sub2 = sub.star_subdivide(&[0, 3]).unwrap();
        let vals2 = vec![qi(1), qi(2), qi(3), qi(7), qi(9)];
        let two = pushforward(&sub2, &vals2, &p2).unwrap();
        let one = pushforward(&sub, &pushforward(&sub2, &vals2, &sub).unwrap(), &p2).unwrap();
        assert_eq!(one, two);
        assert!(matches!(pushforward(&p2, &[qi(0), qi(0), qi(0)], &sub), Err(Error::NotARefinement(_))));
    }

    #[test]
    fn nef_examples() {
        let p2 = Fan::projective_plane();
        assert!(is_nef_incarnation(&BDivisor::hyperplane(), &p2).unwrap());
        let bad = BDivisor::new(
            p2.clone(),
            ConicalFunction::piecewise_linear(p2.clone(), vec![qi(1), qi(0), qi(0)]).unwrap(),
            Mode::Exact,
        )
        .unwrap();
        assert!(!is_nef_incarnation(&bad, &p2).unwrap());
        match is_nef_bdiv(&bad, 1).unwrap() {
            NefVerdict::NotNef { witness, .. } => assert_eq!(witness.ray, lv(&[1, 0])),
            v => panic!("unexpected {v:?}"),
        }
        let e = BDivisor::builtin(Builtin::Exa1);
        assert!(is_nef_bdiv(&e, 6).unwrap().is_nef());
    }

    #[test]
    fn stability_examples() {
        let h = BDivisor::hyperplane();
        let simplex = RationalPolytope::from_points(2, &[vec![qi(0), qi(0)], vec![qi(1), qi(0)], vec![qi(0), qi(1)]]).unwrap();
        for k in [1, 2, 3] {
            assert_eq!(stability_outer(&h, k).unwrap(), simplex);
        }
        let e = BDivisor::builtin(Builtin::Exa1);
        let p1 = stability_outer(&e, 1).unwrap();
        let expected = RationalPolytope::from_points(
            2,
            &[vec![qi(1), qi(0)], vec![qi(0), qi(1)], vec![q(1, 2), qi(0)], vec![qi(0), q(1, 2)]],
        )
        .unwrap();
        assert_eq!(p1, expected);
        let v4 = stability_outer(&e, 4).unwrap().volume();
        assert!(v4 < p1.volume() && v4 > q(1, 3));
    }

    #[test]
    fn cartier_degrees() {
        let h = BDivisor::hyperplane();
        let r = degree_nef(&h, 1e-6, 64).unwrap();
        assert_eq!(r.value, qi(1));
        assert_eq!(r.final_height, 1);
        assert!(r.stabilized);
        let two_h = h.scaled(&qi(2));
        assert_eq!(degree_nef(&two_h, 1e-6, 64).unwrap().value, qi(4));
        assert_eq!(mixed_degree(&[h.clone(), h.clone()], 1e-6, 64).unwrap().value, qi(1));
        assert_eq!(degree_difference(&h, &h, 1e-6, 64).unwrap().value, qi(0));
        assert_eq!(degree_difference(&two_h, &h, 1e-6, 64).unwrap().value, qi(1));
        let zero = BDivisor::zero(Fan::projective_plane()).unwrap();
        assert_eq!(degree_difference(&h, &zero, 1e-6, 64).unwrap().value, qi(1));
        assert_eq!(degree_nef(&zero, 1e-6, 64).unwrap().value, qi(0));
    }

    #[test]
    fn exa1_degree_scaling_per_height() {
        let e = BDivisor::builtin(Builtin::Exa1);
        let e2 = e.scaled(&qi(2));
        for h in [1, 2, 4] {
            let a = stability_outer(&e, h).unwrap().volume();
            let b = stability_outer(&e2, h).unwrap().volume();
            assert_eq!(b, a * qi(4));
        }
    }

    #[test]
    fn extension_to_reals() {
        let e = ConicalFunction::builtin(Builtin::Exa1);
        let i = extend_to_real(&e, &[1.0, 1.0], 30).unwrap();
        assert_eq!((i.lo, i.hi), (0.5, 0.5));
        let s2 = std::f64::consts::SQRT_2;
        let i = extend_to_real(&e, &[s2, 1.0], 30).unwrap();
        let truth = s2 / (s2 + 1.0);
        assert!(i.contains(truth), "{i:?} vs {truth}");
        assert!(i.width() < 1e-12);
        let j = extend_to_real(&e, &[3.0 * s2, 3.0], 30).unwrap();
        assert!(j.lo <= 3.0 * i.hi && 3.0 * i.lo <= j.hi);
        let cusp = ConicalFunction::builtin(Builtin::SqrtCusp);
        assert!(matches!(extend_to_real(&cusp, &[1.0, 1e-20], 30), Err(Error::NoLipschitzBound(_))));
        assert!(extend_to_real(&cusp, &[2.0, 0.7], 30).unwrap().contains((1.4f64).sqrt()));
        assert!(matches!(extend_to_real(&e, &[0.0, 0.0], 30), Err(Error::ZeroVector)));
    }

    #[test]
    fn rational_approximation_convergents() {
        let r = rational_approximation(std::f64::consts::PI, &BigInt::from(1000));
        assert_eq!(r, q(355, 113));
        assert_eq!(rational_approximation(0.5, &BigInt::from(10)), q(1, 2));
    }
}
