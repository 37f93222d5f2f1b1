//! Planar fast paths: convex hulls, half-plane intersection and Minkowski
//! sums of convex polygons in exact rational arithmetic.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::rational::Q;

pub type Pt = Vec<Q>;

fn cross3(o: &Pt, a: &Pt, b: &Pt) -> Q {
    (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
}

/// Counter-clockwise convex hull without collinear points, starting at the
/// lexicographically smallest point.
pub fn hull(points: &[Pt]) -> Vec<Pt> {
    let mut pts: Vec<Pt> = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Pt> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && !cross3(&lower[lower.len() - 2], &lower[lower.len() - 1], p).is_positive() {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Pt> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && !cross3(&upper[upper.len() - 2], &upper[upper.len() - 1], p).is_positive() {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Twice the signed area of a polygon given in order.
pub fn twice_area(poly: &[Pt]) -> Q {
    let n = poly.len();
    if n < 3 {
        return Q::zero();
    }
    let mut s = Q::zero();
    for i in 0..n {
        let j = (i + 1) % n;
        s += &poly[i][0] * &poly[j][1] - &poly[j][0] * &poly[i][1];
    }
    s
}

fn half(d: (&BigInt, &BigInt)) -> u8 {
    // 0 for angles in [0, pi), 1 for [pi, 2 pi)
    if d.1.is_positive() || (d.1.is_zero() && d.0.is_positive()) {
        0
    } else {
        1
    }
}

fn cmp_angle(a: (&BigInt, &BigInt), b: (&BigInt, &BigInt)) -> Ordering {
    half(a).cmp(&half(b)).then_with(|| {
        let c = a.0 * b.1 - a.1 * b.0;
        if c.is_positive() {
            Ordering::Less
        } else if c.is_negative() {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    })
}

/// A half-plane `a . x >= b` with primitive integer normal.
#[derive(Clone, Debug)]
pub struct HalfPlane {
    pub a: [BigInt; 2],
    pub b: Q,
}

impl HalfPlane {
    // boundary direction with the feasible side on its left
    fn dir(&self) -> (BigInt, BigInt) {
        (self.a[1].clone(), -self.a[0].clone())
    }

    fn outside(&self, p: &Pt) -> bool {
        let v = &p[0] * Q::from_integer(self.a[0].clone()) + &p[1] * Q::from_integer(self.a[1].clone());
        v < self.b
    }
}

fn meet(h: &HalfPlane, g: &HalfPlane) -> Option<Pt> {
    let det = &h.a[0] * &g.a[1] - &h.a[1] * &g.a[0];
    if det.is_zero() {
        return None;
    }
    let det = Q::from_integer(det);
    let x = (&h.b * Q::from_integer(g.a[1].clone()) - &g.b * Q::from_integer(h.a[1].clone())) / &det;
    let y = (&g.b * Q::from_integer(h.a[0].clone()) - &h.b * Q::from_integer(g.a[0].clone())) / &det;
    Some(vec![x, y])
}

fn dir_cross(h: &HalfPlane, g: &HalfPlane) -> BigInt {
    let (a, b) = (h.dir(), g.dir());
    &a.0 * &b.1 - &a.1 * &b.0
}

/// Sorted-angle half-plane intersection. Returns `None` when the input is
/// degenerate (unbounded, empty, or hitting antiparallel boundaries), in which
/// case callers fall back on the general double description path.
pub fn halfplane_intersection(planes: &[HalfPlane]) -> Option<Vec<Pt>> {
    let mut hs: Vec<HalfPlane> = planes.to_vec();
    hs.sort_by(|x, y| {
        let (dx, dy) = (x.dir(), y.dir());
        cmp_angle((&dx.0, &dx.1), (&dy.0, &dy.1)).then_with(|| y.b.cmp(&x.b))
    });
    // keep the most restrictive of parallel, equally oriented half-planes
    hs.dedup_by(|later, earlier| {
        let (a, b) = (later.dir(), earlier.dir());
        cmp_angle((&a.0, &a.1), (&b.0, &b.1)) == Ordering::Equal
    });
    let k = hs.len();
    if k < 3 {
        return None;
    }
    for i in 0..k {
        if !dir_cross(&hs[i], &hs[(i + 1) % k]).is_positive() {
            return None;
        }
    }
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut pts: VecDeque<Pt> = VecDeque::new();
    for i in 0..k {
        let h = &hs[i];
        while dq.len() >= 2 && h.outside(pts.back().expect("points track lines")) {
            dq.pop_back();
            pts.pop_back();
        }
        while dq.len() >= 2 && h.outside(pts.front().expect("points track lines")) {
            dq.pop_front();
            pts.pop_front();
        }
        if let Some(&last) = dq.back() {
            if !dir_cross(&hs[last], h).is_positive() {
                return None;
            }
            pts.push_back(meet(&hs[last], h)?);
        }
        dq.push_back(i);
    }
    while dq.len() >= 3 && hs[*dq.front().expect("nonempty")].outside(pts.back().expect("nonempty")) {
        dq.pop_back();
        pts.pop_back();
    }
    while dq.len() >= 3 && hs[*dq.back().expect("nonempty")].outside(pts.front().expect("nonempty")) {
        dq.pop_front();
        pts.pop_front();
    }
    if dq.len() < 3 {
        return None;
    }
    let (first, last) = (*dq.front().expect("nonempty"), *dq.back().expect("nonempty"));
    if !dir_cross(&hs[last], &hs[first]).is_positive() {
        return None;
    }
    pts.push_back(meet(&hs[last], &hs[first])?);
    let poly: Vec<Pt> = pts.into_iter().collect();
    // the output must be a (possibly degenerate) counter-clockwise convex chain
    let n = poly.len();
    for i in 0..n {
        if cross3(&poly[i], &poly[(i + 1) % n], &poly[(i + 2) % n]).is_negative() {
            return None;
        }
    }
    Some(hull(&poly))
}

fn edge_half(d: &Pt) -> u8 {
    // angles measured from the downward direction: (-pi/2, pi/2] -> 0
    if d[0].is_positive() || (d[0].is_zero() && d[1].is_positive()) {
        0
    } else {
        1
    }
}

fn edge_cmp(a: &Pt, b: &Pt) -> Ordering {
    edge_half(a).cmp(&edge_half(b)).then_with(|| {
        let c = &a[0] * &b[1] - &a[1] * &b[0];
        if c.is_positive() {
            Ordering::Less
        } else if c.is_negative() {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    })
}

fn edges(poly: &[Pt]) -> Vec<Pt> {
    let n = poly.len();
    if n < 2 {
        return Vec::new();
    }
    (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            vec![&poly[j][0] - &poly[i][0], &poly[j][1] - &poly[i][1]]
        })
        .collect()
}

/// Minkowski sum of two convex polygons given as hull output.
pub fn minkowski(p: &[Pt], q: &[Pt]) -> Vec<Pt> {
    if p.is_empty() || q.is_empty() {
        return Vec::new();
    }
    let (ep, eq) = (edges(p), edges(q));
    let mut cur = vec![&p[0][0] + &q[0][0], &p[0][1] + &q[0][1]];
    let mut out = vec![cur.clone()];
    let (mut i, mut j) = (0, 0);
    while i < ep.len() || j < eq.len() {
        let step = if i == ep.len() {
            j += 1;
            eq[j - 1].clone()
        } else if j == eq.len() {
            i += 1;
            ep[i - 1].clone()
        } else {
            match edge_cmp(&ep[i], &eq[j]) {
                Ordering::Less => {
                    i += 1;
                    ep[i - 1].clone()
                }
                Ordering::Greater => {
                    j += 1;
                    eq[j - 1].clone()
                }
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                    vec![&ep[i - 1][0] + &eq[j - 1][0], &ep[i - 1][1] + &eq[j - 1][1]]
                }
            }
        };
        cur = vec![&cur[0] + &step[0], &cur[1] + &step[1]];
        out.push(cur.clone());
    }
    hull(&out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    fn p(x: i64, y: i64) -> Pt {
        vec![qi(x), qi(y)]
    }

    fn hp(a0: i64, a1: i64, b: i64) -> HalfPlane {
        HalfPlane { a: [BigInt::from(a0), BigInt::from(a1)], b: qi(b) }
    }

    #[test]
    fn hull_drops_interior_and_collinear() {
        let h = hull(&[p(0, 0), p(2, 0), p(1, 0), p(1, 1), p(0, 2), p(2, 2)]);
        assert_eq!(h, vec![p(0, 0), p(2, 0), p(2, 2), p(0, 2)]);
        assert_eq!(twice_area(&h), qi(8));
    }

    #[test]
    fn halfplanes_square_with_redundancy() {
        let hs = vec![hp(1, 0, 0), hp(-1, 0, -1), hp(0, 1, 0), hp(0, -1, -1), hp(-1, -1, -3)];
        let poly = halfplane_intersection(&hs).unwrap();
        assert_eq!(poly, vec![p(0, 0), p(1, 0), p(1, 1), p(0, 1)]);
    }

    #[test]
    fn halfplanes_degenerate_point() {
        let hs = vec![hp(1, 0, 0), hp(0, 1, 0), hp(-1, -1, 0)];
        assert_eq!(halfplane_intersection(&hs).unwrap(), vec![p(0, 0)]);
    }

    #[test]
    fn halfplanes_unbounded_falls_back() {
        assert!(halfplane_intersection(&[hp(1, 0, 0), hp(0, 1, 0)]).is_none());
    }

    #[test]
    fn minkowski_simplex_segment() {
        let simplex = hull(&[p(0, 0), p(1, 0), p(0, 1)]);
        let seg = hull(&[p(0, 0), p(1, 0)]);
        let s = minkowski(&simplex, &seg);
        assert_eq!(s, vec![p(0, 0), p(2, 0), p(1, 1), p(0, 1)]);
        let pt = hull(&[p(3, -1)]);
        assert_eq!(minkowski(&simplex, &pt), vec![p(3, -1), p(4, -1), p(3, 0)]);
    }
}
