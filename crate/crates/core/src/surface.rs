//! Surfaces: the jumping function on the mediant tree, the series of its
//! squares, and the resulting degrees.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::bdiv::function::planar_angle_cmp;
use crate::bdiv::{BDivisor, Mode, NUMERIC_PRECISION};
use crate::error::{Error, Result};
use crate::fan::{Cone, Fan};
use crate::lattice::{euclid_split, LatticeVector, UnimodularMap};
use crate::rational::{serde_q, to_f64, Q};

/// Default tail tolerance of the series.
pub const DEFAULT_SERIES_TOL: f64 = 1e-4;
/// Number of trailing depth subtotals compared with the tolerance.
pub const DEFAULT_TAIL_DEPTHS: usize = 3;
/// Subtotal decay threshold: ratios at least `1 - delta` count as non-decaying.
pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_DEPTH: u32 = 24;
/// Depth at which the numeric traversal is cut into independent subtrees.
const SPLIT_DEPTH: u32 = 6;

/// One value of the jumping function.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpTerm {
    pub v: LatticeVector,
    pub v_alpha: LatticeVector,
    pub v_beta: LatticeVector,
    #[serde(with = "serde_q")]
    pub mu: Q,
    pub mu_f64: f64,
    pub depth: u32,
}

fn require_surface(d: &BDivisor) -> Result<()> {
    if d.dim() != 2 {
        Err(Error::NotDimensionTwo(d.dim()))
    } else {
        Ok(())
    }
}

/// Stern–Brocot depth of a primitive `(a, b)` with `a, b >= 1`: the sum of
/// the continued-fraction quotients of `a/b`, minus one.
fn mediant_depth(a: &BigInt, b: &BigInt) -> u32 {
    let (mut a, mut b) = (a.clone(), b.clone());
    let mut total = BigInt::zero();
    while !b.is_zero() {
        let (q, r) = a.div_rem(&b);
        total += q;
        a = b;
        b = r;
    }
    (total - 1u32).to_u32().unwrap_or(u32::MAX)
}

/// The jumping function at a primitive vector; zero on rays of the base fan.
pub fn jumping(d: &BDivisor, v: &LatticeVector) -> Result<JumpTerm> {
    require_surface(d)?;
    if v.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: v.dim() });
    }
    if !v.is_primitive() {
        return Err(Error::InvalidInput(format!("{v} is not primitive")));
    }
    if d.base().ray_index(v).is_some() {
        return Ok(JumpTerm {
            v: v.clone(),
            v_alpha: v.clone(),
            v_beta: LatticeVector::zero(2),
            mu: Q::zero(),
            mu_f64: 0.0,
            depth: 0,
        });
    }
    let (ci, _) = d.base().locate_maximal(v)?;
    let cone = &d.base().max_cones()[ci];
    let u = UnimodularMap::from_columns(&[d.base().rays()[cone[0]].clone(), d.base().rays()[cone[1]].clone()])?;
    let w = u.inverse().apply(v);
    let (wa, wb) = euclid_split(&w)?;
    let depth = mediant_depth(&w.coords()[0], &w.coords()[1]);
    let (va, vb) = (u.apply(&wa), u.apply(&wb));
    let mu = d.value(v)? - d.value(&va)? - d.value(&vb)?;
    Ok(JumpTerm { v: v.clone(), v_alpha: va, v_beta: vb, mu_f64: to_f64(&mu), mu, depth })
}

/// Breadth-first enumeration of the mediant tree of a smooth planar cone.
/// Layer `d` holds `2^d` vectors in lexicographic order.
pub struct SternBrocot {
    intervals: Vec<(LatticeVector, LatticeVector)>,
    layer: std::vec::IntoIter<(LatticeVector, LatticeVector, LatticeVector)>,
    depth: u32,
    max_depth: u32,
}

/// One node of the mediant tree: the vector, its two parents and its depth.
pub type MediantNode = (LatticeVector, LatticeVector, LatticeVector, u32);

pub fn stern_brocot(cone: &Cone, max_depth: u32) -> Result<SternBrocot> {
    if cone.dim() != 2 || cone.generators()[0].dim() != 2 {
        return Err(Error::NotDimensionTwo(cone.generators().first().map_or(0, |g| g.dim())));
    }
    if !cone.is_smooth() {
        return Err(Error::NotSmooth("mediant tree cone".into()));
    }
    let g = cone.generators();
    Ok(SternBrocot {
        intervals: vec![(g[0].clone(), g[1].clone())],
        layer: Vec::new().into_iter(),
        depth: 0,
        max_depth,
    })
}

impl Iterator for SternBrocot {
    type Item = MediantNode;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some((v, l, r)) = self.layer.next() {
                return Some((v, l, r, self.depth - 1));
            }
            if self.depth > self.max_depth || self.intervals.is_empty() {
                return None;
            }
            let mut nodes = Vec::with_capacity(self.intervals.len());
            let mut next = Vec::with_capacity(2 * self.intervals.len());
            for (l, r) in std::mem::take(&mut self.intervals) {
                let v = &l + &r;
                next.push((l.clone(), v.clone()));
                next.push((v.clone(), r.clone()));
                nodes.push((v, l, r));
            }
            nodes.sort_by(|a, b| a.0.cmp(&b.0));
            self.intervals = next;
            self.layer = nodes.into_iter();
            self.depth += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SeriesVerdict {
    Converged { tol: f64, tail: f64 },
    Diverging { ratios: Vec<f64> },
    Inconclusive { tail: f64 },
}

impl SeriesVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            SeriesVerdict::Converged { .. } => "converged",
            SeriesVerdict::Diverging { .. } => "diverging",
            SeriesVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// Thresholds of the series diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesConfig {
    pub tol: f64,
    pub tail_depths: usize,
    pub delta: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig { tol: DEFAULT_SERIES_TOL, tail_depths: DEFAULT_TAIL_DEPTHS, delta: DEFAULT_DELTA }
    }
}

/// Partial sums of `mu^2` over the mediant trees of the base cones.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesResult {
    pub partial_sum: f64,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_q")]
    pub partial_sum_exact: Option<Q>,
    pub terms_used: u64,
    pub per_depth: Vec<f64>,
    pub verdict: SeriesVerdict,
    pub mode: Mode,
    pub precision: Option<u32>,
    pub summation: &'static str,
}

mod opt_q {
    use super::*;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(x: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(q) => crate::rational::serde_q::serialize(q, s),
            None => s.serialize_none(),
        }
    }
}

/// Classifies per-depth subtotals: diverging when every ratio of consecutive
/// subtotals over the last four depths is at least `1 - delta`, converged
/// when the last `tail_depths` subtotals sum below `tol`.
pub fn divergence_probe(per_depth: &[f64], cfg: &SeriesConfig) -> SeriesVerdict {
    let k = cfg.tail_depths.max(1).min(per_depth.len());
    let tail: f64 = per_depth[per_depth.len() - k..].iter().sum();
    if per_depth.len() < 4 {
        return SeriesVerdict::Inconclusive { tail };
    }
    let last = &per_depth[per_depth.len() - 4..];
    if last.iter().all(|&s| s == 0.0) {
        return SeriesVerdict::Converged { tol: cfg.tol, tail };
    }
    let ratios: Vec<f64> = last.windows(2).map(|w| if w[0] == 0.0 { f64::INFINITY } else { w[1] / w[0] }).collect();
    if ratios.iter().all(|&r| r >= 1.0 - cfg.delta) {
        return SeriesVerdict::Diverging { ratios };
    }
    if tail < cfg.tol {
        SeriesVerdict::Converged { tol: cfg.tol, tail }
    } else {
        SeriesVerdict::Inconclusive { tail }
    }
}

/// Self-intersection of `sum a_i D_i` on the smooth complete toric surface of `fan`.
pub fn surface_self_intersection(fan: &Fan, a: &[Q]) -> Result<Q> {
    if fan.dim() != 2 {
        return Err(Error::NotDimensionTwo(fan.dim()));
    }
    let mut order: Vec<usize> = (0..fan.rays().len()).collect();
    order.sort_by(|&i, &j| planar_angle_cmp(&fan.rays()[i], &fan.rays()[j]));
    let k = order.len();
    let mut total = Q::zero();
    for p in 0..k {
        let (prev, cur, next) = (order[(p + k - 1) % k], order[p], order[(p + 1) % k]);
        let u = &fan.rays()[cur];
        let s = &fan.rays()[prev] + &fan.rays()[next];
        // s = b u for the self-intersection -b
        let b = if u.coords()[0].is_zero() { &s.coords()[1] / &u.coords()[1] } else { &s.coords()[0] / &u.coords()[0] };
        total -= Q::from_integer(b) * &a[cur] * &a[cur];
        total += Q::from_integer(BigInt::from(2)) * &a[cur] * &a[next];
    }
    Ok(total)
}

/// `D_Sigma^2` of the base incarnation.
pub fn base_degree(d: &BDivisor) -> Result<Q> {
    require_surface(d)?;
    let a: Vec<Q> = d.base().rays().iter().map(|r| Ok(-d.value(r)?)).collect::<Result<_>>()?;
    surface_self_intersection(d.base(), &a)
}

/// Degree from the series together with the series itself.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfaceDegree {
    pub base_degree: f64,
    #[serde(with = "serde_q")]
    pub base_degree_exact: Q,
    /// `D_Sigma^2 - partial_sum`, reported when the series converged.
    pub degree: Option<f64>,
    pub degree_estimate: f64,
    pub series: SeriesResult,
}

/// Compensated (Neumaier) accumulator.
#[derive(Clone, Copy, Debug, Default)]
struct Acc {
    sum: f64,
    comp: f64,
}

impl Acc {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

type Vec2 = [i64; 2];

fn add2(a: Vec2, b: Vec2) -> Result<Vec2> {
    match (a[0].checked_add(b[0]), a[1].checked_add(b[1])) {
        (Some(x), Some(y)) if x.abs() < (1 << 53) && y.abs() < (1 << 53) => Ok([x, y]),
        _ => Err(Error::Overflow("mediant coordinates exceed 2^53".into())),
    }
}

/// Depth-first accumulation of `mu^2` below the interval `(l, r)`; the node
/// `l + r` sits at `depth`. Coordinates must stay below `2^53` throughout,
/// which callers establish with [`subtree_fits`].
#[allow(clippy::too_many_arguments)]
fn dfs<F: Fn(f64, f64) -> f64>(f: &F, l: Vec2, r: Vec2, fl: f64, fr: f64, depth: u32, max_depth: u32, acc: &mut [Acc]) {
    let v = [l[0] + r[0], l[1] + r[1]];
    let fv = f(v[0] as f64, v[1] as f64);
    let mu = fv - fl - fr;
    acc[depth as usize].add(mu * mu);
    if depth < max_depth {
        dfs(f, l, v, fl, fv, depth + 1, max_depth, acc);
        dfs(f, v, r, fv, fr, depth + 1, max_depth, acc);
    }
}

/// Whether every mediant within `levels` levels below `(l, r)` has
/// coordinates below `2^53`: the coefficients of `l` and `r` in such a
/// mediant are bounded by the Fibonacci number `F(levels + 2)`.
fn subtree_fits(l: Vec2, r: Vec2, levels: u32) -> bool {
    let (mut a, mut b) = (1u128, 1u128);
    for _ in 0..levels {
        (a, b) = (b, a + b);
        if b >= 1 << 53 {
            return false;
        }
    }
    let m = l.iter().chain(&r).map(|x| x.unsigned_abs() as u128).max().unwrap_or(0);
    m.checked_mul(2 * b).is_some_and(|x| x < 1 << 53)
}

/// Intervals at the split depth, in angular order, with the nodes above it.
struct Frontier {
    intervals: Vec<(Vec2, Vec2, f64, f64)>,
}

fn numeric_series(d: &BDivisor, max_depth: u32) -> Result<(Vec<f64>, u64)> {
    let levels = max_depth as usize + 1;
    let mut totals = vec![Acc::default(); levels];
    let mut terms = 0u64;
    for cone in d.base().max_cones() {
        let to2 = |v: &LatticeVector| -> Result<Vec2> {
            let c = v.to_i64().ok_or_else(|| Error::Overflow("ray coordinates".into()))?;
            Ok([c[0], c[1]])
        };
        let (mut u1, mut u2) = (to2(&d.base().rays()[cone[0]])?, to2(&d.base().rays()[cone[1]])?);
        // orient counter-clockwise
        if (u1[0] as i128) * (u2[1] as i128) - (u1[1] as i128) * (u2[0] as i128) < 0 {
            std::mem::swap(&mut u1, &mut u2);
        }
        let f1 = d.phi().eval_f64(&[u1[0] as f64, u1[1] as f64]);
        let f2 = d.phi().eval_f64(&[u2[0] as f64, u2[1] as f64]);
        // breadth-first down to the split depth
        let split = SPLIT_DEPTH.min(max_depth);
        let mut frontier = Frontier { intervals: vec![(u1, u2, f1, f2)] };
        for depth in 0..split {
            let mut next = Vec::with_capacity(frontier.intervals.len() * 2);
            for &(l, r, fl, fr) in &frontier.intervals {
                let v = add2(l, r)?;
                let fv = d.phi().eval_f64(&[v[0] as f64, v[1] as f64]);
                let mu = fv - fl - fr;
                totals[depth as usize].add(mu * mu);
                terms += 1;
                next.push((l, v, fl, fv));
                next.push((v, r, fv, fr));
            }
            frontier.intervals = next;
        }
        if max_depth > split && !frontier.intervals.iter().all(|&(l, r, _, _)| subtree_fits(l, r, max_depth - split + 1)) {
            return Err(Error::Overflow("mediant coordinates exceed 2^53".into()));
        }
        let phi = d.phi();
        let f = |a: f64, b: f64| phi.eval_f64(&[a, b]);
        let below = if max_depth >= split { (1u64 << (max_depth - split + 1)) - 1 } else { 0 };
        let parts: Vec<Result<(Vec<Acc>, u64)>> = frontier
            .intervals
            .par_iter()
            .map(|&(l, r, fl, fr)| {
                let mut acc = vec![Acc::default(); levels];
                if max_depth >= split {
                    dfs(&f, l, r, fl, fr, split, max_depth, &mut acc);
                }
                Ok((acc, below))
            })
            .collect();
        for part in parts {
            let (acc, t) = part?;
            terms += t;
            for (tot, a) in totals.iter_mut().zip(&acc) {
                tot.add(a.sum);
                tot.add(a.comp);
            }
        }
    }
    Ok((totals.iter().map(Acc::value).collect(), terms))
}

fn exact_series(d: &BDivisor, max_depth: u32) -> Result<(Vec<Q>, u64)> {
    let mut per_depth = vec![Q::zero(); max_depth as usize + 1];
    let mut terms = 0u64;
    for c in d.base().max_cones() {
        let cone = d.base().cone(c);
        let nodes: Vec<MediantNode> = stern_brocot(&cone, max_depth)?.collect();
        let mus: Vec<(u32, Q)> = nodes
            .par_iter()
            .map(|(v, l, r, depth)| {
                let mu = d.phi().eval_exact(v)? - d.phi().eval_exact(l)? - d.phi().eval_exact(r)?;
                Ok((*depth, &mu * &mu))
            })
            .collect::<Result<_>>()?;
        for (depth, sq) in mus {
            per_depth[depth as usize] += sq;
            terms += 1;
        }
    }
    Ok((per_depth, terms))
}

/// Sums `mu^2` over the mediant trees of every base cone up to `max_depth`.
pub fn surface_series(d: &BDivisor, max_depth: u32, cfg: &SeriesConfig) -> Result<SeriesResult> {
    require_surface(d)?;
    match d.mode() {
        Mode::Numeric => {
            let (per_depth, terms) = numeric_series(d, max_depth)?;
            let mut acc = Acc::default();
            for s in &per_depth {
                acc.add(*s);
            }
            Ok(SeriesResult {
                partial_sum: acc.value(),
                partial_sum_exact: None,
                terms_used: terms,
                verdict: divergence_probe(&per_depth, cfg),
                per_depth,
                mode: Mode::Numeric,
                precision: Some(NUMERIC_PRECISION),
                summation: "per-depth compensated sums over subtrees split at depth 6, combined in angular order",
            })
        }
        Mode::Exact => {
            let (exact, terms) = exact_series(d, max_depth)?;
            let total: Q = exact.iter().sum();
            let per_depth: Vec<f64> = exact.iter().map(to_f64).collect();
            Ok(SeriesResult {
                partial_sum: to_f64(&total),
                partial_sum_exact: Some(total),
                terms_used: terms,
                verdict: divergence_probe(&per_depth, cfg),
                per_depth,
                mode: Mode::Exact,
                precision: None,
                summation: "exact rational",
            })
        }
    }
}

/// `D^2 = D_Sigma^2 - sum mu^2` from the series.
pub fn degree_surface(d: &BDivisor, max_depth: u32, cfg: &SeriesConfig) -> Result<SurfaceDegree> {
    let base = base_degree(d)?;
    let series = surface_series(d, max_depth, cfg)?;
    let base_f = to_f64(&base);
    let estimate = base_f - series.partial_sum;
    let degree = matches!(series.verdict, SeriesVerdict::Converged { .. }).then_some(estimate);
    Ok(SurfaceDegree { base_degree: base_f, base_degree_exact: base, degree, degree_estimate: estimate, series })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdiv::Builtin;
    use num_traits::Signed;
    use num_traits::One;
    use crate::rational::{q, qi};
    use std::collections::HashSet;

    fn lv(c: &[i64]) -> LatticeVector {
        LatticeVector::from_i64(c)
    }

    #[test]
    fn jumping_examples() {
        let e = BDivisor::builtin(Builtin::Exa1);
        let t = jumping(&e, &lv(&[2, 3])).unwrap();
        assert_eq!(t.mu, q(1, 30));
        assert_eq!(&t.v_alpha + &t.v_beta, lv(&[2, 3]));
        assert!(crate::lattice::det2(&t.v_alpha, &t.v_beta).abs().is_one());
        assert_eq!(t.depth, 2);
        assert_eq!(jumping(&e, &lv(&[1, 1])).unwrap().mu, q(1, 2));
        assert_eq!(jumping(&e, &lv(&[1, 0])).unwrap().mu, qi(0));
        // outside the quadrant exa1 is linear on each base cone
        assert_eq!(jumping(&e, &lv(&[-1, 2])).unwrap().mu, qi(0));
        assert!(matches!(jumping(&BDivisor::zero(Fan::projective_space(3)).unwrap(), &lv(&[1, 1, 1])), Err(Error::NotDimensionTwo(3))));
    }

    #[test]
    fn closed_form_oracle() {
        // mu(v) = 1/((v1+v2)(x-y)(v1+v2-x+y)) with v_alpha = (-y, x)
        let e = BDivisor::builtin(Builtin::Exa1);
        for a in 1..12i64 {
            for b in 1..12i64 {
                let v = lv(&[a, b]);
                if !v.is_primitive() {
                    continue;
                }
                let t = jumping(&e, &v).unwrap();
                let (y, x) = (-t.v_alpha.to_i64().unwrap()[0], t.v_alpha.to_i64().unwrap()[1]);
                let expected = q(1, (a + b) * (x - y) * (a + b - x + y));
                assert_eq!(t.mu, expected, "{v}");
            }
        }
    }

    #[test]
    fn stern_brocot_layers() {
        let quad = Cone::from_i64(&[&[1, 0], &[0, 1]]).unwrap();
        let nodes: Vec<_> = stern_brocot(&quad, 1).unwrap().collect();
        let vs: Vec<_> = nodes.iter().map(|n| (n.0.clone(), n.3)).collect();
        assert_eq!(vs, vec![(lv(&[1, 1]), 0), (lv(&[1, 2]), 1), (lv(&[2, 1]), 1)]);
        let nodes: Vec<_> = stern_brocot(&quad, 2).unwrap().collect();
        assert_eq!(nodes.len(), 7);
        let set: HashSet<_> = nodes.iter().map(|n| n.0.clone()).collect();
        assert_eq!(set.len(), 7);
        for (v, l, r, _) in stern_brocot(&quad, 8).unwrap() {
            assert!(v.is_primitive());
            let (a, b) = euclid_split(&v).unwrap();
            let mut got = vec![a, b];
            let mut want = vec![l, r];
            got.sort();
            want.sort();
            assert_eq!(got, want, "{v}");
        }
    }

    #[test]
    fn self_intersections() {
        let p2 = Fan::projective_plane();
        assert_eq!(surface_self_intersection(&p2, &[qi(0), qi(0), qi(1)]).unwrap(), qi(1));
        assert_eq!(surface_self_intersection(&p2, &[qi(1), qi(1), qi(1)]).unwrap(), qi(9));
        let p1 = Fan::p1xp1();
        assert_eq!(surface_self_intersection(&p1, &[qi(0), qi(0), qi(1), qi(1)]).unwrap(), qi(2));
        assert_eq!(surface_self_intersection(&p1, &[qi(0), qi(0), qi(1), qi(0)]).unwrap(), qi(0));
    }

    #[test]
    fn hyperplane_series_vanishes() {
        let h = BDivisor::hyperplane();
        let cfg = SeriesConfig::default();
        let r = degree_surface(&h, 6, &cfg).unwrap();
        assert_eq!(r.series.partial_sum_exact, Some(qi(0)));
        assert_eq!(r.degree, Some(1.0));
        let n = degree_surface(&h.with_mode(Mode::Numeric).unwrap(), 10, &cfg).unwrap();
        assert_eq!(n.series.partial_sum, 0.0);
        assert_eq!(n.series.verdict.name(), "converged");
    }

    #[test]
    fn exact_and_numeric_agree() {
        let e = BDivisor::builtin(Builtin::Exa1);
        let cfg = SeriesConfig::default();
        let ex = surface_series(&e, 8, &cfg).unwrap();
        let nu = surface_series(&e.with_mode(Mode::Numeric).unwrap(), 8, &cfg).unwrap();
        assert_eq!(ex.terms_used, nu.terms_used);
        assert!((ex.partial_sum - nu.partial_sum).abs() < 1e-14);
        for (a, b) in ex.per_depth.iter().zip(&nu.per_depth) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(ex.per_depth[0], 0.25);
    }

    #[test]
    fn probe_rules() {
        let cfg = SeriesConfig::default();
        assert_eq!(divergence_probe(&[0.0; 6], &cfg).name(), "converged");
        let geometric: Vec<f64> = (0..30).map(|k| 0.5f64.powi(k)).collect();
        assert_eq!(divergence_probe(&geometric, &cfg).name(), "converged");
        let harmonic: Vec<f64> = (1..30).map(|k| 1.0 / k as f64).collect();
        assert_eq!(divergence_probe(&harmonic, &cfg).name(), "diverging");
        assert_eq!(divergence_probe(&[1.0, 0.5], &cfg).name(), "inconclusive");
    }
}
