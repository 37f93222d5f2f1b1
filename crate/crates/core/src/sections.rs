//! Global sections of multiples of a b-divisor, Hilbert–Samuel tables,
//! bigness and finite-generation diagnostics.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::bdiv::{stability_outer_any, BDivisor, Mode};
use crate::convex::RationalPolytope;
use crate::error::Result;
use crate::lattice::LatticeVector;
use crate::rational::{serde_q, to_f64, Q};
use crate::surface::{surface_series, SeriesConfig};

pub const DEFAULT_SECTION_HEIGHT: u64 = 4;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certification {
    /// Exactly the lattice points of `l * Delta`.
    Exact,
    /// Lattice points of the outer polytope at this height; may over-count.
    OuterCandidate { height: u64 },
}

/// Monomial sections `chi^m` of `l D`, listed by exponent.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectionSpace {
    pub level: u64,
    pub points: Vec<LatticeVector>,
    pub certification: Certification,
}

/// How points of `l * Delta` are decided for a divisor.
enum Decider {
    /// The outer polytope at this height is `Delta` itself.
    Cartier,
    Region(crate::bdiv::MembershipRegion),
    Outer,
}

fn decider(d: &BDivisor, h: u64) -> Decider {
    if d.mode() == Mode::Exact && d.cartier_height().is_some_and(|c| c <= h) {
        Decider::Cartier
    } else if let Some(r) = d.membership() {
        Decider::Region(r)
    } else {
        Decider::Outer
    }
}

fn sections_in(d: &BDivisor, outer: &RationalPolytope, level: u64, h: u64, how: &Decider) -> Result<SectionSpace> {
    if level == 0 {
        return Ok(SectionSpace {
            level,
            points: vec![LatticeVector::zero(d.dim())],
            certification: Certification::Exact,
        });
    }
    let candidates = outer.scale(&Q::from_integer(level.into()))?.lattice_points();
    Ok(match how {
        Decider::Cartier => SectionSpace { level, points: candidates, certification: Certification::Exact },
        Decider::Region(r) => SectionSpace {
            level,
            points: candidates.into_iter().filter(|m| r.contains_lattice(m, level)).collect(),
            certification: Certification::Exact,
        },
        Decider::Outer => SectionSpace { level, points: candidates, certification: Certification::OuterCandidate { height: h } },
    })
}

/// Sections of `l D`: integer points of the height-`h` outer polytope of
/// `l * Delta`, filtered by an exact test when one is available.
pub fn global_sections(d: &BDivisor, level: u64, h: u64) -> Result<SectionSpace> {
    let outer = stability_outer_any(d, h)?;
    sections_in(d, &outer, level, h, &decider(d, h))
}

/// Section spaces for `l = 0..=l_max`, computed in parallel and returned in order.
pub fn section_levels(d: &BDivisor, l_max: u64, h: u64) -> Result<Vec<SectionSpace>> {
    let outer = stability_outer_any(d, h)?;
    let how = decider(d, h);
    (0..=l_max).into_par_iter().map(|l| sections_in(d, &outer, l, h, &how)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HilbertSamuelRow {
    pub level: u64,
    pub h0: u64,
    /// `n! h0 / l^n`.
    #[serde(with = "serde_q")]
    pub normalized: Q,
    pub normalized_f64: f64,
    pub certification: Certification,
}

fn factorial(n: usize) -> BigInt {
    (1..=n).map(BigInt::from).product()
}

fn hs_row(n: usize, s: &SectionSpace) -> HilbertSamuelRow {
    let h0 = s.points.len() as u64;
    let denom = BigInt::from(s.level).pow(n as u32);
    let normalized = Q::new(factorial(n) * BigInt::from(h0), denom);
    HilbertSamuelRow { level: s.level, h0, normalized_f64: to_f64(&normalized), normalized, certification: s.certification.clone() }
}

/// Rows for `l = 1..=l_max`.
pub fn hilbert_samuel_table(d: &BDivisor, l_max: u64, h: u64) -> Result<Vec<HilbertSamuelRow>> {
    hilbert_samuel_rows(d, &(1..=l_max).collect::<Vec<_>>(), h)
}

/// Rows for the given levels (each at least one).
pub fn hilbert_samuel_rows(d: &BDivisor, levels: &[u64], h: u64) -> Result<Vec<HilbertSamuelRow>> {
    let outer = stability_outer_any(d, h)?;
    let how = decider(d, h);
    levels
        .par_iter()
        .filter(|&&l| l > 0)
        .map(|&l| Ok(hs_row(d.dim(), &sections_in(d, &outer, l, h, &how)?)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BigVerdict {
    pub big: bool,
    pub height: u64,
    /// Distance from the centroid witness to the boundary of the outer polytope at `2h`.
    pub margin: f64,
    /// How far the outer polytope at `h` reaches beyond the one at `2h`.
    pub shrink: f64,
}

fn euclid_norm(v: &LatticeVector) -> f64 {
    v.to_f64().iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Bigness test: the outer polytope at `2h` is full-dimensional and its
/// centroid lies deeper inside than the outer polytopes move from `h` to `2h`.
pub fn is_big(d: &BDivisor, h: u64) -> Result<BigVerdict> {
    let ph = stability_outer_any(d, h)?;
    let p2 = stability_outer_any(d, 2 * h)?;
    if !p2.is_full_dimensional() {
        return Ok(BigVerdict { big: false, height: h, margin: 0.0, shrink: 0.0 });
    }
    let k = Q::from_integer(p2.vertices().len().into());
    let centroid: Vec<Q> = (0..d.dim())
        .map(|i| p2.vertices().iter().map(|v| v[i].clone()).sum::<Q>() / &k)
        .collect();
    let margin = p2
        .halfspaces()
        .iter()
        .map(|hs| to_f64(&(hs.normal.pair(&centroid) - &hs.offset)) / euclid_norm(&hs.normal))
        .fold(f64::INFINITY, f64::min);
    let shrink = ph
        .vertices()
        .iter()
        .flat_map(|v| {
            p2.halfspaces().iter().map(move |hs| to_f64(&(&hs.offset - hs.normal.pair(v))) / euclid_norm(&hs.normal))
        })
        .fold(0.0f64, f64::max);
    Ok(BigVerdict { big: margin > shrink, height: h, margin, shrink })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FgVerdict {
    CartierStabilized { model_height: u64 },
    NonPolyhedralEvidence { heights: Vec<u64> },
    Inconclusive,
}

impl FgVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            FgVerdict::CartierStabilized { .. } => "cartier_stabilized",
            FgVerdict::NonPolyhedralEvidence { .. } => "non_polyhedral_evidence",
            FgVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Compares outer polytopes at doubled heights up to `h`. Equal consecutive
/// polytopes (and, on surfaces, vanishing jumping terms in the two deepest
/// layers up to `depth`) indicate a Cartier divisor; a strict cut at every
/// doubling is evidence against finite generation.
pub fn finite_generation_probe(d: &BDivisor, h: u64, depth: u32) -> Result<FgVerdict> {
    let mut heights = vec![1u64];
    while heights.last().expect("nonempty") * 2 <= h.max(2) {
        let next = heights.last().expect("nonempty") * 2;
        heights.push(next);
    }
    let polys: Vec<RationalPolytope> = heights.iter().map(|&k| stability_outer_any(d, k)).collect::<Result<_>>()?;
    let mu_vanishes = || -> Result<bool> {
        if d.dim() != 2 {
            return Ok(true);
        }
        let series = surface_series(d, depth, &SeriesConfig::default())?;
        let k = series.per_depth.len();
        Ok(series.per_depth[k.saturating_sub(2)..].iter().all(|s| *s == 0.0))
    };
    for w in 0..polys.len() - 1 {
        if polys[w] == polys[w + 1] {
            if mu_vanishes()? {
                return Ok(FgVerdict::CartierStabilized { model_height: heights[w] });
            }
            return Ok(FgVerdict::Inconclusive);
        }
    }
    if polys.len() >= 3 {
        Ok(FgVerdict::NonPolyhedralEvidence { heights })
    } else {
        Ok(FgVerdict::Inconclusive)
    }
}

/// Pointwise sums of two section sets that fall outside a third.
pub fn product_violations(a: &SectionSpace, b: &SectionSpace, sum: &SectionSpace) -> Vec<LatticeVector> {
    let target: std::collections::HashSet<&LatticeVector> = sum.points.iter().collect();
    let mut out = Vec::new();
    for p in &a.points {
        for q in &b.points {
            let s = p + q;
            if !target.contains(&s) {
                out.push(s);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// `h0` as a count.
pub fn h0(s: &SectionSpace) -> u64 {
    s.points.len().to_u64().unwrap_or(u64::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdiv::{Builtin, ConicalFunction};
    use crate::fan::Fan;

    /// Brute force over the outer simplex with the integer predicate for exa1.
    fn exa1_points(l: i64) -> Vec<LatticeVector> {
        let mut out = Vec::new();
        for x in 0..=l {
            for y in 0..=l - x {
                if x + y >= l || 4 * x * y >= (l - x - y) * (l - x - y) {
                    out.push(LatticeVector::from_i64(&[x, y]));
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn section_examples() {
        let h = BDivisor::hyperplane();
        let s = global_sections(&h, 2, 1).unwrap();
        assert_eq!(s.points.len(), 6);
        assert_eq!(s.certification, Certification::Exact);
        let e = BDivisor::builtin(Builtin::Exa1);
        let s = global_sections(&e, 4, 2).unwrap();
        assert_eq!(s.points, exa1_points(4));
        assert_eq!(s.certification, Certification::Exact);
        let z = global_sections(&e, 0, 2).unwrap();
        assert_eq!(z.points, vec![LatticeVector::zero(2)]);
    }

    #[test]
    fn hilbert_samuel_examples() {
        let h = BDivisor::hyperplane();
        for row in hilbert_samuel_table(&h, 10, 1).unwrap() {
            let l = row.level as i64;
            assert_eq!(row.normalized, Q::new((l * l + 3 * l + 2).into(), (l * l).into()));
        }
        let zero = BDivisor::zero(Fan::projective_plane()).unwrap();
        for row in hilbert_samuel_table(&zero, 5, 1).unwrap() {
            assert_eq!(row.h0, 1);
        }
    }

    #[test]
    fn bigness() {
        assert!(is_big(&BDivisor::hyperplane(), 1).unwrap().big);
        assert!(is_big(&BDivisor::builtin(Builtin::Exa1), 4).unwrap().big);
        assert!(!is_big(&BDivisor::zero(Fan::projective_plane()).unwrap(), 1).unwrap().big);
    }

    #[test]
    fn finite_generation() {
        assert_eq!(
            finite_generation_probe(&BDivisor::hyperplane(), 16, 8).unwrap(),
            FgVerdict::CartierStabilized { model_height: 1 }
        );
        assert_eq!(finite_generation_probe(&BDivisor::builtin(Builtin::Exa1), 16, 8).unwrap().name(), "non_polyhedral_evidence");
        // concave function linear on the cones of the height-2 refinement
        let fan = crate::fan::refine_fan(&Fan::projective_plane(), 2).unwrap();
        let e = ConicalFunction::builtin(Builtin::Exa1);
        let vals: Vec<Q> = fan.rays().iter().map(|r| e.eval_exact(r).unwrap()).collect();
        let pl = BDivisor::new(Fan::projective_plane(), ConicalFunction::piecewise_linear(fan, vals).unwrap(), Mode::Exact).unwrap();
        assert_eq!(finite_generation_probe(&pl, 16, 8).unwrap(), FgVerdict::CartierStabilized { model_height: 2 });
    }

    #[test]
    fn product_containment_small() {
        let h = BDivisor::hyperplane();
        let e = BDivisor::builtin(Builtin::Exa1);
        let s = e.sum(&h).unwrap();
        for l in 1..=3 {
            let a = global_sections(&e, l, 4).unwrap();
            let b = global_sections(&h, l, 4).unwrap();
            let c = global_sections(&s, l, 4).unwrap();
            assert_eq!(c.certification, Certification::Exact);
            assert!(product_violations(&a, &b, &c).is_empty());
        }
    }
}
