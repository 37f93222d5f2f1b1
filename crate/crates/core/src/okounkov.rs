//! Flag valuations of monomial sections, value semigroups and their
//! slices, and the model-level fibers of the global body.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::bdiv::{nef_witness, BDivisor, Mode, PlModel};
use crate::convex::{Halfspace, RationalPolytope};
use crate::error::{Error, Result};
use crate::fan::Fan;
use crate::lattice::{LatticeVector, UnimodularMap};
use crate::linalg;
use crate::rational::{format_rational, q_from_int, serde_q, to_f64, Q};
use crate::sections::{global_sections, is_big, Certification};

/// A smooth maximal cone of the base fan with ordered generators.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlagBasis {
    pub rays: Vec<usize>,
    pub generators: Vec<LatticeVector>,
    #[serde(skip)]
    map: UnimodularMap,
}

impl FlagBasis {
    pub fn new(fan: &Fan, rays: &[usize]) -> Result<Self> {
        let mut sorted = rays.to_vec();
        sorted.sort_unstable();
        if sorted.len() != fan.dim() || !fan.max_cones().contains(&sorted) {
            return Err(Error::ConeNotInFan(format!("{rays:?}")));
        }
        let generators: Vec<LatticeVector> = rays.iter().map(|&i| fan.rays()[i].clone()).collect();
        // rows are the generators, so applying the map pairs m with each v_i
        let rows: Vec<Vec<BigInt>> = generators.iter().map(|g| g.coords().to_vec()).collect();
        let map = UnimodularMap::new(rows).map_err(|_| Error::NotSmooth(format!("{rays:?}")))?;
        Ok(FlagBasis { rays: rays.to_vec(), generators, map })
    }

    /// First maximal cone of the fan, generators in index order.
    pub fn first(fan: &Fan) -> Result<Self> {
        Self::new(fan, &fan.max_cones()[0])
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    /// Exponent with the given valuation.
    pub fn preimage(&self, p: &LatticeVector) -> LatticeVector {
        self.map.inverse().apply(p)
    }
}

/// `(<m, v_1>, ..., <m, v_n>)`.
pub fn flag_valuation(fb: &FlagBasis, m: &LatticeVector) -> LatticeVector {
    fb.map.apply(m)
}

#[derive(Clone, Debug)]
pub struct Normalized {
    pub divisor: BDivisor,
    pub shift: LatticeVector,
}

/// Shifts `d` by the character `m` with `<m, v_i> = phi(v_i)` on the flag
/// rays, so the shifted function vanishes there.
pub fn normalize_trivial(d: &BDivisor, fb: &FlagBasis) -> Result<Normalized> {
    d.require_exact()?;
    let a: Vec<Vec<Q>> = fb.generators.iter().map(|g| g.to_rational()).collect();
    let b: Vec<Q> = fb.generators.iter().map(|g| d.value(g)).collect::<Result<_>>()?;
    let m = linalg::solve(&a, &b).ok_or_else(|| Error::NotSmooth(format!("{:?}", fb.rays)))?;
    if m.iter().any(|x| !x.is_integer()) {
        let shown: Vec<String> = m.iter().map(format_rational).collect();
        return Err(Error::NoIntegralShift(format!("({})", shown.join(", "))));
    }
    let shift = LatticeVector::new(m.iter().map(|x| x.to_integer()).collect());
    let divisor = if shift.is_zero() { d.clone() } else { d.shifted(&m)? };
    Ok(Normalized { divisor, shift })
}

/// One level of the value semigroup.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SemigroupLevel {
    pub level: u64,
    pub points: Vec<LatticeVector>,
    pub certification: Certification,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValuedSemigroup {
    pub l_max: u64,
    pub levels: Vec<SemigroupLevel>,
}

impl ValuedSemigroup {
    pub fn level(&self, l: u64) -> Option<&SemigroupLevel> {
        self.levels.get(l as usize)
    }

    /// Sums `p + q` with `p` at level `l1`, `q` at level `l2`, `l1 + l2 <= l_max`,
    /// missing from level `l1 + l2`.
    pub fn additivity_violations(&self) -> Vec<(u64, u64, LatticeVector)> {
        let sets: Vec<BTreeSet<&LatticeVector>> = self.levels.iter().map(|l| l.points.iter().collect()).collect();
        let mut out = Vec::new();
        for l1 in 0..=self.l_max {
            for l2 in l1..=self.l_max - l1 {
                for p in &self.levels[l1 as usize].points {
                    for q in &self.levels[l2 as usize].points {
                        let s = p + q;
                        if !sets[(l1 + l2) as usize].contains(&s) {
                            out.push((l1, l2, s));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Valuation of the section `chi^m` of `l D` read in the local frame at the
/// flag cone: `nu(m) - l * (phi(v_1), ..., phi(v_n))`.
fn framed_valuation(fb: &FlagBasis, m: &LatticeVector, l: u64, frame: &[Q]) -> Result<LatticeVector> {
    let nu = flag_valuation(fb, m);
    let lq = Q::from_integer(l.into());
    let coords = nu
        .coords()
        .iter()
        .zip(frame)
        .map(|(x, f)| {
            let y = q_from_int(x) - &lq * f;
            if y.is_integer() {
                Ok(y.to_integer())
            } else {
                Err(Error::NoIntegralShift(format!("frame value {} at level {l}", format_rational(f))))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LatticeVector::new(coords))
}

fn frame(d: &BDivisor, fb: &FlagBasis) -> Result<Vec<Q>> {
    fb.generators.iter().map(|g| d.value(g)).collect()
}

/// Framed valuations of the section spaces of `l D`, `l = 0..=l_max`.
pub fn semigroup_levels(d: &BDivisor, fb: &FlagBasis, l_max: u64, h: u64) -> Result<ValuedSemigroup> {
    let fr = frame(d, fb)?;
    let levels = (0..=l_max)
        .into_par_iter()
        .map(|l| {
            let s = global_sections(d, l, h)?;
            let mut points = s.points.iter().map(|m| framed_valuation(fb, m, l, &fr)).collect::<Result<Vec<_>>>()?;
            points.sort();
            Ok(SemigroupLevel { level: l, points, certification: s.certification })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ValuedSemigroup { l_max, levels })
}

/// Membership test for `m` in `l * Delta` that does not go through polytopes.
enum Predicate {
    Rays(Vec<(LatticeVector, Q)>),
    Point(Vec<Q>),
    Region(crate::bdiv::MembershipRegion),
    Outer(Vec<Halfspace>),
}

impl Predicate {
    fn of(d: &BDivisor, h: u64) -> Result<(Self, bool)> {
        if d.mode() == Mode::Exact {
            match d.phi().pl_model() {
                Some(PlModel::OnFan(fan, values)) => {
                    return Ok((Predicate::Rays(fan.rays().iter().cloned().zip(values).collect()), true))
                }
                Some(PlModel::Global(m)) => return Ok((Predicate::Point(m), true)),
                None => {}
            }
        }
        if let Some(r) = d.membership() {
            return Ok((Predicate::Region(r), true));
        }
        Ok((Predicate::Outer(crate::bdiv::stability_halfspaces(d, h).or_else(|_| outer_numeric(d, h))?), false))
    }

    fn holds(&self, m: &LatticeVector, l: u64) -> bool {
        let lq = Q::from_integer(l.into());
        match self {
            Predicate::Rays(rv) => rv.iter().all(|(v, x)| q_from_int(&m.dot(v)) >= &lq * x),
            Predicate::Point(p) => m.coords().iter().zip(p).all(|(a, b)| q_from_int(a) == &lq * b),
            Predicate::Region(r) => r.contains_lattice(m, l),
            Predicate::Outer(hs) => hs.iter().all(|h| q_from_int(&h.normal.dot(m)) >= &lq * &h.offset),
        }
    }
}

fn outer_numeric(d: &BDivisor, h: u64) -> Result<Vec<Halfspace>> {
    Ok(crate::bdiv::stability_outer_any(d, h)?.halfspaces().to_vec())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceMismatch {
    pub point: LatticeVector,
    /// Present in the semigroup level but not in the image of `l * Delta`.
    pub in_semigroup: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceLevel {
    pub level: u64,
    pub matches: bool,
    pub count: usize,
    pub certification: Certification,
    pub witness: Option<SliceMismatch>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceReport {
    pub flag: Vec<usize>,
    pub l_max: u64,
    pub height: u64,
    /// Whether the comparison predicate is exact for this divisor.
    pub exact_predicate: bool,
    pub passed: bool,
    pub levels: Vec<SliceLevel>,
}

/// Integer box containing `nu(l * P)` for the vertices of `P`.
fn valuation_box(fb: &FlagBasis, p: &RationalPolytope, l: u64) -> Vec<(BigInt, BigInt)> {
    let lq = Q::from_integer(l.into());
    (0..fb.dim())
        .map(|i| {
            let vals: Vec<Q> = p.vertices().iter().map(|v| fb.generators[i].pair(v) * &lq).collect();
            let lo = vals.iter().min().cloned().unwrap_or_default().floor().to_integer();
            let hi = vals.iter().max().cloned().unwrap_or_default().ceil().to_integer();
            (lo, hi)
        })
        .collect()
}

fn box_points(bounds: &[(BigInt, BigInt)]) -> Vec<LatticeVector> {
    let mut out = vec![Vec::<BigInt>::new()];
    for (lo, hi) in bounds {
        let mut next = Vec::new();
        for prefix in &out {
            let mut x = lo.clone();
            while &x <= hi {
                let mut p = prefix.clone();
                p.push(x.clone());
                next.push(p);
                x += 1;
            }
        }
        out = next;
    }
    out.into_iter().map(LatticeVector::new).collect()
}

/// Compares each semigroup level with `nu(l * Delta ∩ M)`, the latter found
/// by scanning a box in valuation coordinates with a direct membership test.
pub fn okounkov_slice_check(d: &BDivisor, fb: &FlagBasis, l_max: u64, h: u64) -> Result<SliceReport> {
    let sg = semigroup_levels(d, fb, l_max, h)?;
    let (pred, exact_predicate) = Predicate::of(d, h)?;
    let outer = crate::bdiv::stability_outer_any(d, h)?;
    let levels: Vec<SliceLevel> = sg
        .levels
        .par_iter()
        .map(|lvl| {
            let l = lvl.level;
            let mut image: Vec<LatticeVector> = if l == 0 {
                vec![LatticeVector::zero(fb.dim())]
            } else {
                box_points(&valuation_box(fb, &outer, l))
                    .into_iter()
                    .filter(|p| pred.holds(&fb.preimage(p), l))
                    .collect()
            };
            image.sort();
            let witness = first_difference(&lvl.points, &image);
            SliceLevel {
                level: l,
                matches: witness.is_none(),
                count: lvl.points.len(),
                certification: lvl.certification.clone(),
                witness,
            }
        })
        .collect();
    Ok(SliceReport {
        flag: fb.rays.clone(),
        l_max,
        height: h,
        exact_predicate,
        passed: levels.iter().all(|l| l.matches),
        levels,
    })
}

fn first_difference(sg: &[LatticeVector], image: &[LatticeVector]) -> Option<SliceMismatch> {
    let a: BTreeSet<&LatticeVector> = sg.iter().collect();
    let b: BTreeSet<&LatticeVector> = image.iter().collect();
    let x = a.difference(&b).next().map(|p| SliceMismatch { point: (*p).clone(), in_semigroup: true });
    let y = b.difference(&a).next().map(|p| SliceMismatch { point: (*p).clone(), in_semigroup: false });
    match (x, y) {
        (Some(x), Some(y)) => Some(if x.point <= y.point { x } else { y }),
        (x, y) => x.or(y),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthEstimate {
    pub level: u64,
    pub count: u64,
    /// `#S_l / l^n`.
    #[serde(with = "serde_q")]
    pub estimate: Q,
    pub estimate_f64: f64,
    /// `n! h0(l D) / l^n` from the section counts.
    pub normalized_sections_f64: f64,
    /// Volume of the outer polytope at the working height.
    pub volume_f64: f64,
    pub drift: f64,
}

/// Leading coefficient estimate `#S_l / l^n` at `l = l_max`.
pub fn growth_coefficient(d: &BDivisor, fb: &FlagBasis, l_max: u64, h: u64) -> Result<GrowthEstimate> {
    if l_max == 0 {
        return Err(Error::InvalidInput("level must be positive".into()));
    }
    if !is_big(d, h)?.big {
        return Err(Error::NotBig);
    }
    let fr = frame(d, fb)?;
    let s = global_sections(d, l_max, h)?;
    let image: BTreeSet<LatticeVector> =
        s.points.iter().map(|m| framed_valuation(fb, m, l_max, &fr)).collect::<Result<_>>()?;
    let n = d.dim() as u32;
    let count = image.len() as u64;
    let ln = BigInt::from(l_max).pow(n);
    let estimate = Q::new(BigInt::from(count), ln.clone());
    let nfact: BigInt = (1..=n as usize).map(BigInt::from).product();
    let normalized = Q::new(nfact * BigInt::from(s.points.len()), ln);
    let volume = to_f64(&crate::bdiv::stability_outer_any(d, h)?.volume());
    let estimate_f64 = to_f64(&estimate);
    Ok(GrowthEstimate {
        level: l_max,
        count,
        estimate_f64,
        estimate,
        normalized_sections_f64: to_f64(&normalized),
        volume_f64: volume,
        drift: (estimate_f64 - volume).abs(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OkounkovBody {
    #[serde(serialize_with = "serialize_polytope")]
    pub body: RationalPolytope,
    pub level: u64,
    /// False when the body is only the scaled hull of one level.
    pub exact: bool,
}

fn serialize_polytope<S: serde::Serializer>(p: &RationalPolytope, s: S) -> std::result::Result<S::Ok, S::Error> {
    p.to_json().serialize(s)
}

/// Convex hull of the level-`l` semigroup points scaled by `1/l`.
pub fn okounkov_body(d: &BDivisor, fb: &FlagBasis, l: u64, h: u64) -> Result<OkounkovBody> {
    if l == 0 {
        return Err(Error::InvalidInput("level must be positive".into()));
    }
    let sg = semigroup_levels(d, fb, l, h)?;
    let pts = &sg.levels[l as usize].points;
    if pts.is_empty() {
        return Err(Error::EmptyPolytope);
    }
    let hull = RationalPolytope::from_lattice_points(pts)?;
    let body = hull.scale(&Q::new(BigInt::one(), BigInt::from(l)))?;
    let exact = d.mode() == Mode::Exact && d.cartier_height().is_some_and(|c| c <= h) && {
        let model = crate::bdiv::stability_outer(d, h)?;
        let fr = frame(d, fb)?;
        let shifted: Vec<Vec<Q>> = model
            .vertices()
            .iter()
            .map(|v| fb.generators.iter().zip(&fr).map(|(g, f)| g.pair(v) - f).collect())
            .collect();
        RationalPolytope::from_points(d.dim(), &shifted)? == body
    };
    Ok(OkounkovBody { body, level: l, exact })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberLevel {
    pub level: u64,
    pub matches: bool,
    pub count: usize,
    pub witness: Option<SliceMismatch>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberReport {
    pub flag: Vec<usize>,
    pub l_max: u64,
    pub passed: bool,
    /// Translation `m0` with `<m0, v_i> = a_i` on the flag rays.
    pub translation: Vec<String>,
    pub levels: Vec<FiberLevel>,
}

/// Fiber of the nonnegative orthant in `R^rays` over the class of
/// `l * sum a_r D_r`, read in the flag coordinates, against the lattice
/// points of `l * P_D` translated by `l * m0` and valued by the flag.
pub fn global_fiber_check(fan: &Fan, coefficients: &[Q], l_max: u64) -> Result<FiberReport> {
    let fb = FlagBasis::first(fan)?;
    global_fiber_check_with(fan, coefficients, &fb, l_max)
}

pub fn global_fiber_check_with(fan: &Fan, coefficients: &[Q], fb: &FlagBasis, l_max: u64) -> Result<FiberReport> {
    let n = fan.dim();
    let r = fan.rays().len();
    if coefficients.len() != r {
        return Err(Error::DimensionMismatch { expected: r, found: coefficients.len() });
    }
    if !fan.is_smooth() || !fan.is_complete()? || n > 3 {
        return Err(Error::InvalidInput("fiber check needs a smooth complete fan of dimension at most 3".into()));
    }
    let values: Vec<Q> = coefficients.iter().map(|a| -a).collect();
    if nef_witness(fan, &values, &Q::zero())?.is_some() {
        return Err(Error::NotBigNef);
    }
    let hs: Vec<Halfspace> = fan.rays().iter().zip(&values).map(|(v, x)| Halfspace::new(v.clone(), x.clone())).collect();
    let pd = RationalPolytope::from_halfspaces(n, &hs)?;
    if !pd.is_full_dimensional() {
        return Err(Error::NotBigNef);
    }
    let flag_a: Vec<Q> = fb.rays.iter().map(|&i| coefficients[i].clone()).collect();
    let a_rows: Vec<Vec<Q>> = fb.generators.iter().map(|g| g.to_rational()).collect();
    let m0 = linalg::solve(&a_rows, &flag_a).expect("flag basis is invertible");
    let rest: Vec<usize> = (0..r).filter(|i| !fb.rays.contains(i)).collect();
    let levels: Vec<FiberLevel> = (0..=l_max)
        .into_par_iter()
        .map(|l| {
            let lq = Q::from_integer(l.into());
            // orthant side: x in Z^r_{>=0} with x - l a in the image of M
            let bound: Vec<BigInt> = (0..r)
                .map(|i| {
                    pd.vertices()
                        .iter()
                        .map(|v| (fan.rays()[i].pair(v) + &coefficients[i]) * &lq)
                        .max()
                        .unwrap_or_default()
                        .ceil()
                        .to_integer()
                        .max(BigInt::zero())
                })
                .collect();
            let flag_box: Vec<(BigInt, BigInt)> = fb.rays.iter().map(|&i| (BigInt::zero(), bound[i].clone())).collect();
            let mut fiber = Vec::new();
            for xs in box_points(&flag_box) {
                // the flag coordinates determine m; the others are forced
                let target: Vec<Q> = xs.coords().iter().zip(&flag_a).map(|(x, a)| q_from_int(x) - &lq * a).collect();
                let m = linalg::solve(&a_rows, &target).expect("invertible");
                if m.iter().any(|c| !c.is_integer()) {
                    continue;
                }
                let ok = rest.iter().all(|&i| {
                    let x = fan.rays()[i].pair(&m) + &lq * &coefficients[i];
                    !x.is_negative() && q_from_int(&bound[i]) >= x
                });
                if ok {
                    fiber.push(xs);
                }
            }
            fiber.sort();
            // polytope side
            let translated: Vec<LatticeVector> = if l == 0 {
                vec![LatticeVector::zero(n)]
            } else {
                pd.scale(&lq)
                    .map(|p| p.lattice_points())
                    .unwrap_or_default()
                    .iter()
                    .map(|m| {
                        let mq: Vec<Q> = m.to_rational().iter().zip(&m0).map(|(x, y)| x + &lq * y).collect();
                        LatticeVector::new(fb.generators.iter().map(|g| g.pair(&mq).to_integer()).collect())
                    })
                    .collect()
            };
            let mut translated = translated;
            translated.sort();
            let witness = first_difference(&fiber, &translated);
            FiberLevel { level: l, matches: witness.is_none(), count: fiber.len(), witness }
        })
        .collect();
    Ok(FiberReport {
        flag: fb.rays.clone(),
        l_max,
        passed: levels.iter().all(|l| l.matches),
        translation: m0.iter().map(format_rational).collect(),
        levels,
    })
}
