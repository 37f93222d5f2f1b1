//! Randomized invariants across the library.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use proptest::prelude::*;

use torib::bdiv::{degree_nef, stability_outer, BDivisor, Builtin, Mode};
use torib::convex::{mixed_volume, RationalPolytope};
use torib::expr::parse;
use torib::fan::Fan;
use torib::lattice::{det2, euclid_split, LatticeVector};
use torib::okounkov::{flag_valuation, normalize_trivial, semigroup_levels, FlagBasis};
use torib::rational::{q, qi, Q};
use torib::sections::global_sections;

fn polygon(points: &[(i64, i64)]) -> Option<RationalPolytope> {
    let pts: Vec<Vec<Q>> = points.iter().map(|&(a, b)| vec![qi(a), qi(b)]).collect();
    let p = RationalPolytope::from_points(2, &pts).ok()?;
    p.is_full_dimensional().then_some(p)
}

fn points() -> impl Strategy<Value = Vec<(i64, i64)>> {
    prop::collection::vec((-5i64..6, -5i64..6), 3..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_a_unimodular_mediant(a in 1i64..5000, b in 1i64..5000) {
        prop_assume!(num_integer::gcd(a, b) == 1);
        let v = LatticeVector::from_i64(&[a, b]);
        let (al, be) = euclid_split(&v).unwrap();
        prop_assert_eq!(&al + &be, v);
        prop_assert_eq!(det2(&al, &be).abs(), BigInt::one());
        prop_assert!(al.coords()[1].is_positive() && !be.coords()[0].is_negative());
    }

    #[test]
    fn mixed_volume_is_multilinear(k in points(), l in points(), m in points(), s in 1i64..4, t in 1i64..4) {
        let (Some(k), Some(l), Some(m)) = (polygon(&k), polygon(&l), polygon(&m)) else { return Ok(()) };
        let (s, t) = (q(s, 2), q(t, 3));
        let comb = k.scale(&s).unwrap().minkowski_sum(&l.scale(&t).unwrap()).unwrap();
        let lhs = mixed_volume(&[comb, m.clone()]).unwrap();
        let rhs = &s * mixed_volume(&[k.clone(), m.clone()]).unwrap() + &t * mixed_volume(&[l.clone(), m.clone()]).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(mixed_volume(&[k.clone(), l.clone()]).unwrap(), mixed_volume(&[l.clone(), k.clone()]).unwrap());
    }

    #[test]
    fn minkowski_volume_expansion(k in points(), l in points()) {
        let (Some(k), Some(l)) = (polygon(&k), polygon(&l)) else { return Ok(()) };
        let sum = k.minkowski_sum(&l).unwrap();
        prop_assert_eq!(mixed_volume(&[k.clone(), k.clone()]).unwrap(), qi(2) * k.volume());
        prop_assert_eq!(sum.volume(), k.volume() + mixed_volume(&[k.clone(), l.clone()]).unwrap() + l.volume());
    }

    #[test]
    fn lattice_points_lie_inside(k in points()) {
        let Some(k) = polygon(&k) else { return Ok(()) };
        let pts = k.lattice_points();
        prop_assert!(pts.iter().all(|p| k.contains_lattice(p)));
        let sorted: Vec<_> = pts.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        prop_assert_eq!(pts, sorted);
    }

    #[test]
    fn valuation_is_additive(a in -50i64..50, b in -50i64..50, c in -50i64..50, d in -50i64..50) {
        let fb = FlagBasis::new(&Fan::projective_plane(), &[1, 2]).unwrap();
        let (m1, m2) = (LatticeVector::from_i64(&[a, b]), LatticeVector::from_i64(&[c, d]));
        prop_assert_eq!(flag_valuation(&fb, &(&m1 + &m2)), &flag_valuation(&fb, &m1) + &flag_valuation(&fb, &m2));
        prop_assert_eq!(fb.preimage(&flag_valuation(&fb, &m1)), m1);
    }

    #[test]
    fn expressions_print_and_reparse(a in 1i64..40, b in 1i64..40) {
        for src in ["(a1*a2)/(a1+a2)", "min(a1, 2*a2) - 3/4*a1", "-(a1 - a2) + a2"] {
            let e = parse(src).unwrap();
            let again = parse(&e.to_string()).unwrap();
            let v = [qi(a), qi(b)];
            prop_assert_eq!(e.eval_exact(&v).unwrap(), again.eval_exact(&v).unwrap());
        }
    }
}

#[test]
fn star_subdivision_adds_cones() {
    for fan in [Fan::projective_plane(), Fan::p1xp1(), Fan::projective_space(3)] {
        let n = fan.dim();
        for c in fan.max_cones().to_vec() {
            let sub = fan.star_subdivide(&c).unwrap();
            assert!(sub.is_smooth() && sub.is_complete().unwrap());
            assert_eq!(sub.max_cones().len(), fan.max_cones().len() + n - 1);
            assert!(sub.refines(&fan));
        }
    }
}

#[test]
fn sections_scale_with_the_divisor() {
    for d in [BDivisor::hyperplane(), BDivisor::builtin(Builtin::Exa1)] {
        for l in 1..=10u64 {
            let a = global_sections(&d, l, 4).unwrap();
            let b = global_sections(&d.scaled(&qi(l as i64)), 1, 4).unwrap();
            assert_eq!(a.points, b.points, "level {l}");
        }
    }
}

#[test]
fn normalization_translates_levels() {
    let fb = FlagBasis::new(&Fan::projective_plane(), &[0, 1]).unwrap();
    let d = BDivisor::from_coefficients(Fan::projective_plane(), &[qi(2), qi(-1), qi(1)]).unwrap();
    let n = normalize_trivial(&d, &fb).unwrap();
    for l in 0..=4u64 {
        let before = global_sections(&d, l, 1).unwrap().points;
        let after = global_sections(&n.divisor, l, 1).unwrap().points;
        let shifted: Vec<LatticeVector> =
            before.iter().map(|m| m - &n.shift.scale(&BigInt::from(l))).collect::<BTreeSet<_>>().into_iter().collect();
        assert_eq!(after, shifted);
    }
    let sg = semigroup_levels(&n.divisor, &fb, 4, 1).unwrap();
    assert!(sg.additivity_violations().is_empty());
}

#[test]
fn outer_polytopes_shrink_with_height() {
    let d = BDivisor::builtin(Builtin::Exa1);
    let mut prev: Option<RationalPolytope> = None;
    for h in [1u64, 2, 3, 4, 6, 8] {
        let p = stability_outer(&d, h).unwrap();
        if let Some(prev) = &prev {
            assert!(p.vertices().iter().all(|v| prev.contains(v)));
        }
        prev = Some(p);
    }
}

#[test]
fn numeric_inputs_are_rejected_by_exact_operations() {
    let cusp = BDivisor::builtin(Builtin::SqrtCusp);
    assert_eq!(cusp.mode(), Mode::Numeric);
    assert!(degree_nef(&cusp, 1e-3, 4).is_err());
    assert!(cusp.with_mode(Mode::Exact).is_err());
}
