//! Exact rational polytopes: H/V conversion, volumes, Minkowski sums,
//! mixed volumes and lattice points.

pub mod dd;
pub mod planar;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::lattice::LatticeVector;
use crate::linalg;
use crate::rational::{serde_q, serde_q_vec, Q};

/// `<m, normal> >= offset`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Halfspace {
    pub normal: LatticeVector,
    #[serde(with = "serde_q")]
    pub offset: Q,
}

impl Halfspace {
    pub fn new(normal: LatticeVector, offset: Q) -> Self {
        Halfspace { normal, offset }
    }

    /// Rescales to a primitive integer normal (positive factor).
    pub fn normalized(&self) -> Self {
        let g = self.normal.content();
        if g.is_zero() || g.is_one() {
            return self.clone();
        }
        Halfspace {
            normal: LatticeVector::new(self.normal.coords().iter().map(|c| c / &g).collect()),
            offset: &self.offset / Q::from_integer(g),
        }
    }

    /// Builds a halfspace from a rational normal by clearing denominators.
    pub fn from_rational(normal: &[Q], offset: &Q) -> Self {
        let l = normal.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
        let lq = Q::from_integer(l);
        let coords: Vec<BigInt> = normal.iter().map(|x| (x * &lq).to_integer()).collect();
        Halfspace { normal: LatticeVector::new(coords), offset: offset * &lq }.normalized()
    }

    pub fn contains(&self, p: &[Q]) -> bool {
        self.normal.pair(p) >= self.offset
    }

    pub fn contains_lattice(&self, m: &LatticeVector) -> bool {
        // <m, a> * den >= num
        let v = m.dot(&self.normal) * self.offset.denom();
        v >= *self.offset.numer()
    }
}

/// JSON form: `{ "halfspaces": [ {"normal": [...], "offset": "p/q"}, ... ] }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeJson {
    pub halfspaces: Vec<Halfspace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<VertexJson>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexJson(#[serde(with = "serde_q_vec")] pub Vec<Q>);

/// A nonempty bounded rational polytope with cached vertices and a canonical
/// irredundant H-representation (equalities appear as opposite pairs).
#[derive(Clone, Debug)]
pub struct RationalPolytope {
    dim: usize,
    vertices: Vec<Vec<Q>>,
    halfspaces: Vec<Halfspace>,
    affine_dim: usize,
}

impl PartialEq for RationalPolytope {
    fn eq(&self, other: &Self) -> bool {
        if self.dim != other.dim {
            return false;
        }
        let a: BTreeSet<&Vec<Q>> = self.vertices.iter().collect();
        let b: BTreeSet<&Vec<Q>> = other.vertices.iter().collect();
        a == b
    }
}

/// Vertices of the polytope cut out by `halfspaces` in dimension `dim`.
pub fn vertices_of(dim: usize, halfspaces: &[Halfspace]) -> Result<Vec<Vec<Q>>> {
    if dim == 0 || dim > 4 {
        return Err(Error::UnsupportedDimension(dim));
    }
    for h in halfspaces {
        if h.normal.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: h.normal.dim() });
        }
    }
    let hs: Vec<Halfspace> = halfspaces
        .iter()
        .filter(|h| !h.normal.is_zero())
        .map(Halfspace::normalized)
        .collect();
    // trivial constraints 0 >= b
    if halfspaces.iter().any(|h| h.normal.is_zero() && h.offset.is_positive()) {
        return Err(Error::EmptyPolytope);
    }
    if dim == 1 {
        return vertices_1d(&hs);
    }
    if dim == 2 {
        let planes: Vec<planar::HalfPlane> = hs
            .iter()
            .map(|h| planar::HalfPlane {
                a: [h.normal.coords()[0].clone(), h.normal.coords()[1].clone()],
                b: h.offset.clone(),
            })
            .collect();
        if let Some(poly) = planar::halfplane_intersection(&planes) {
            return Ok(poly);
        }
    }
    vertices_dd(dim, &hs)
}

fn vertices_1d(hs: &[Halfspace]) -> Result<Vec<Vec<Q>>> {
    let mut lo: Option<Q> = None;
    let mut hi: Option<Q> = None;
    for h in hs {
        let a = Q::from_integer(h.normal.coords()[0].clone());
        let bound = &h.offset / &a;
        if a.is_positive() {
            lo = Some(lo.map_or(bound.clone(), |l| l.max(bound.clone())));
        } else {
            hi = Some(hi.map_or(bound.clone(), |u| u.min(bound.clone())));
        }
    }
    match (lo, hi) {
        (Some(l), Some(u)) => {
            if l > u {
                Err(Error::EmptyPolytope)
            } else if l == u {
                Ok(vec![vec![l]])
            } else {
                Ok(vec![vec![l], vec![u]])
            }
        }
        _ => Err(Error::Unbounded),
    }
}

fn vertices_dd(dim: usize, hs: &[Halfspace]) -> Result<Vec<Vec<Q>>> {
    // homogenize: z = (t, m), rows (-b, a) and t >= 0
    let mut rows: Vec<Vec<BigInt>> = hs
        .iter()
        .map(|h| {
            let mut r = vec![-h.offset.clone()];
            r.extend(h.normal.to_rational());
            dd::integer_row(&r)
        })
        .collect();
    let mut t = vec![BigInt::zero(); dim + 1];
    t[0] = BigInt::one();
    rows.push(t);
    let rays = dd::extreme_rays(&rows, dim + 1).map_err(|_| Error::Unbounded)?;
    let mut verts = Vec::new();
    let mut recession = false;
    for z in rays {
        if z[0].is_zero() {
            recession = true;
        } else {
            let t = Q::from_integer(z[0].clone());
            verts.push(z[1..].iter().map(|x| Q::from_integer(x.clone()) / &t).collect::<Vec<Q>>());
        }
    }
    if verts.is_empty() {
        return Err(Error::EmptyPolytope);
    }
    if recession {
        return Err(Error::Unbounded);
    }
    verts.sort();
    verts.dedup();
    Ok(verts)
}

impl RationalPolytope {
    /// Builds the polytope `{m : <m, a_i> >= b_i}`.
    pub fn from_halfspaces(dim: usize, halfspaces: &[Halfspace]) -> Result<Self> {
        let v = vertices_of(dim, halfspaces)?;
        Self::from_points(dim, &v)
    }

    /// Convex hull of a finite nonempty point set.
    pub fn from_points(dim: usize, points: &[Vec<Q>]) -> Result<Self> {
        if dim == 0 || dim > 4 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if points.is_empty() {
            return Err(Error::EmptyPolytope);
        }
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
            }
        }
        match dim {
            1 => Ok(Self::hull_1d(points)),
            2 => Ok(Self::hull_2d(points)),
            _ => Self::hull_dd(dim, points),
        }
    }

    pub fn from_lattice_points(points: &[LatticeVector]) -> Result<Self> {
        let dim = points.first().ok_or(Error::EmptyPolytope)?.dim();
        let pts: Vec<Vec<Q>> = points.iter().map(|p| p.to_rational()).collect();
        Self::from_points(dim, &pts)
    }

    pub fn from_json(dim: usize, j: &PolytopeJson) -> Result<Self> {
        Self::from_halfspaces(dim, &j.halfspaces)
    }

    pub fn to_json(&self) -> PolytopeJson {
        PolytopeJson {
            halfspaces: self.halfspaces.clone(),
            vertices: Some(self.vertices.iter().cloned().map(VertexJson).collect()),
        }
    }

    fn hull_1d(points: &[Vec<Q>]) -> Self {
        let lo = points.iter().map(|p| p[0].clone()).min().expect("nonempty");
        let hi = points.iter().map(|p| p[0].clone()).max().expect("nonempty");
        let halfspaces = vec![
            Halfspace::new(LatticeVector::from_i64(&[1]), lo.clone()),
            Halfspace::new(LatticeVector::from_i64(&[-1]), -hi.clone()),
        ];
        let affine_dim = usize::from(lo != hi);
        let vertices = if lo == hi { vec![vec![lo]] } else { vec![vec![lo], vec![hi]] };
        RationalPolytope { dim: 1, vertices, halfspaces, affine_dim }
    }

    fn hull_2d(points: &[Vec<Q>]) -> Self {
        let h = planar::hull(points);
        let mut halfspaces = Vec::new();
        let affine_dim;
        match h.len() {
            1 => {
                affine_dim = 0;
                for (i, sign) in [(0usize, 1i64), (0, -1), (1, 1), (1, -1)] {
                    let mut n = [0i64; 2];
                    n[i] = sign;
                    halfspaces.push(Halfspace::new(
                        LatticeVector::from_i64(&n),
                        &h[0][i] * Q::from_integer(BigInt::from(sign)),
                    ));
                }
            }
            2 => {
                affine_dim = 1;
                let d = [&h[1][0] - &h[0][0], &h[1][1] - &h[0][1]];
                let perp = [-d[1].clone(), d[0].clone()];
                for s in [1i64, -1] {
                    let sq = Q::from_integer(BigInt::from(s));
                    let n: Vec<Q> = perp.iter().map(|x| x * &sq).collect();
                    halfspaces.push(Halfspace::from_rational(&n, &linalg::dot(&n, &h[0])));
                }
                let dn: Vec<Q> = d.to_vec();
                halfspaces.push(Halfspace::from_rational(&dn, &linalg::dot(&dn, &h[0])));
                let dm: Vec<Q> = d.iter().map(|x| -x.clone()).collect();
                halfspaces.push(Halfspace::from_rational(&dm, &linalg::dot(&dm, &h[1])));
            }
            _ => {
                affine_dim = 2;
                let n = h.len();
                for i in 0..n {
                    let j = (i + 1) % n;
                    // inward normal of a counter-clockwise edge
                    let normal = vec![-(&h[j][1] - &h[i][1]), &h[j][0] - &h[i][0]];
                    halfspaces.push(Halfspace::from_rational(&normal, &linalg::dot(&normal, &h[i])));
                }
            }
        }
        RationalPolytope { dim: 2, vertices: h, halfspaces, affine_dim }
    }

    fn hull_dd(dim: usize, points: &[Vec<Q>]) -> Result<Self> {
        let mut pts: Vec<Vec<Q>> = points.to_vec();
        pts.sort();
        pts.dedup();
        let k = linalg::affine_rank(&pts).expect("nonempty");
        // z = (beta, a): a . v - beta >= 0 for every point
        let prow: Vec<Vec<Q>> = pts
            .iter()
            .map(|p| {
                let mut r = vec![-Q::one()];
                r.extend(p.iter().cloned());
                r
            })
            .collect();
        let lineality = linalg::nullspace(&prow, dim + 1);
        let mut rows: Vec<Vec<BigInt>> = prow.iter().map(|r| dd::integer_row(r)).collect();
        let mut equalities = Vec::new();
        for l in &lineality {
            let li = dd::integer_row(l);
            rows.push(li.clone());
            rows.push(li.iter().map(|x| -x).collect());
            let a: Vec<Q> = l[1..].to_vec();
            let beta = l[0].clone();
            equalities.push(Halfspace::from_rational(&a, &beta));
            let na: Vec<Q> = a.iter().map(|x| -x.clone()).collect();
            equalities.push(Halfspace::from_rational(&na, &-beta));
        }
        let rays = dd::extreme_rays(&rows, dim + 1).map_err(|_| Error::Unbounded)?;
        let mut facets: Vec<Halfspace> = Vec::new();
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        for z in rays {
            if z[1..].iter().all(Zero::is_zero) {
                continue;
            }
            let a: Vec<Q> = z[1..].iter().map(|x| Q::from_integer(x.clone())).collect();
            let beta = Q::from_integer(z[0].clone());
            let tight: Vec<usize> = (0..pts.len()).filter(|&i| linalg::dot(&a, &pts[i]) == beta).collect();
            let tp: Vec<Vec<Q>> = tight.iter().map(|&i| pts[i].clone()).collect();
            if k == 0 || tp.is_empty() || linalg::affine_rank(&tp) != Some(k - 1) {
                continue;
            }
            if seen.insert(tight) {
                facets.push(Halfspace::from_rational(&a, &beta));
            }
        }
        // vertices: points where tight normals (plus equalities) have full rank
        let mut vertices = Vec::new();
        for p in &pts {
            let mut normals: Vec<Vec<Q>> = equalities.iter().map(|h| h.normal.to_rational()).collect();
            normals.extend(facets.iter().filter(|h| h.normal.pair(p) == h.offset).map(|h| h.normal.to_rational()));
            if linalg::rank(&normals) == dim {
                vertices.push(p.clone());
            }
        }
        let mut halfspaces = equalities;
        halfspaces.extend(facets);
        halfspaces.sort();
        halfspaces.dedup();
        Ok(RationalPolytope { dim, vertices, halfspaces, affine_dim: k })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn affine_dim(&self) -> usize {
        self.affine_dim
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.affine_dim == self.dim
    }

    pub fn vertices(&self) -> &[Vec<Q>] {
        &self.vertices
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn contains(&self, p: &[Q]) -> bool {
        self.halfspaces.iter().all(|h| h.contains(p))
    }

    pub fn contains_lattice(&self, m: &LatticeVector) -> bool {
        self.halfspaces.iter().all(|h| h.contains_lattice(m))
    }

    /// Dilation by a nonnegative rational factor.
    pub fn scale(&self, k: &Q) -> Result<Self> {
        if k.is_negative() {
            return Err(Error::InvalidInput("negative dilation factor".into()));
        }
        let pts: Vec<Vec<Q>> = self.vertices.iter().map(|v| v.iter().map(|x| x * k).collect()).collect();
        Self::from_points(self.dim, &pts)
    }

    pub fn translate(&self, t: &[Q]) -> Result<Self> {
        let pts: Vec<Vec<Q>> =
            self.vertices.iter().map(|v| v.iter().zip(t).map(|(x, y)| x + y).collect()).collect();
        Self::from_points(self.dim, &pts)
    }

    /// Euclidean volume (the lattice has covolume one); zero if not full-dimensional.
    pub fn volume(&self) -> Q {
        if !self.is_full_dimensional() {
            return Q::zero();
        }
        match self.dim {
            1 => &self.vertices[1][0] - &self.vertices[0][0],
            2 => planar::twice_area(&self.vertices).abs() / Q::from_integer(BigInt::from(2)),
            n => {
                let incidence: Vec<Vec<usize>> = self
                    .halfspaces
                    .iter()
                    .map(|h| (0..self.vertices.len()).filter(|&i| h.normal.pair(&self.vertices[i]) == h.offset).collect())
                    .collect();
                let all: Vec<usize> = (0..self.vertices.len()).collect();
                let simplices = triangulate(&self.vertices, &all, n, &incidence);
                let fact: BigInt = (1..=n).map(BigInt::from).product();
                let total = simplices.iter().fold(Q::zero(), |acc, s| {
                    let m: Vec<Vec<Q>> = s[1..]
                        .iter()
                        .map(|&i| self.vertices[i].iter().zip(&self.vertices[s[0]]).map(|(a, b)| a - b).collect())
                        .collect();
                    acc + linalg::det(&m).abs()
                });
                total / Q::from_integer(fact)
            }
        }
    }

    pub fn minkowski_sum(&self, other: &RationalPolytope) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        if self.dim == 2 {
            let sum = planar::minkowski(&self.vertices, &other.vertices);
            return Ok(Self::hull_2d(&sum));
        }
        let mut pts = Vec::with_capacity(self.vertices.len() * other.vertices.len());
        for a in &self.vertices {
            for b in &other.vertices {
                pts.push(a.iter().zip(b).map(|(x, y)| x + y).collect());
            }
        }
        Self::from_points(self.dim, &pts)
    }

    /// Integer points, in lexicographic order.
    pub fn lattice_points(&self) -> Vec<LatticeVector> {
        let n = self.dim;
        let lo: Vec<BigInt> = (0..n)
            .map(|i| self.vertices.iter().map(|v| v[i].ceil().to_integer()).min().expect("nonempty"))
            .collect();
        let hi: Vec<BigInt> = (0..n)
            .map(|i| self.vertices.iter().map(|v| v[i].floor().to_integer()).max().expect("nonempty"))
            .collect();
        let mut out = Vec::new();
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return out;
        }
        // fast path for machine-size data
        if let Some(fast) = self.lattice_points_i64(&lo, &hi) {
            return fast;
        }
        let mut cur = lo.clone();
        loop {
            let m = LatticeVector::new(cur.clone());
            if self.contains_lattice(&m) {
                out.push(m);
            }
            let mut i = n;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if cur[i] < hi[i] {
                    cur[i] += 1;
                    for j in i + 1..n {
                        cur[j] = lo[j].clone();
                    }
                    break;
                }
            }
        }
    }

    fn lattice_points_i64(&self, lo: &[BigInt], hi: &[BigInt]) -> Option<Vec<LatticeVector>> {
        let lo: Vec<i64> = lo.iter().map(|x| x.to_i64()).collect::<Option<_>>()?;
        let hi: Vec<i64> = hi.iter().map(|x| x.to_i64()).collect::<Option<_>>()?;
        if lo.iter().chain(&hi).any(|x| x.abs() > 1 << 20) {
            return None;
        }
        // <m, a> * den >= num, all in i128
        let hs: Vec<(Vec<i128>, i128, i128)> = self
            .halfspaces
            .iter()
            .map(|h| {
                let a: Option<Vec<i128>> = h.normal.coords().iter().map(|c| c.to_i128()).collect();
                Some((a?, h.offset.numer().to_i128()?, h.offset.denom().to_i128()?))
            })
            .collect::<Option<_>>()?;
        if hs.iter().any(|(a, n, d)| a.iter().any(|x| x.abs() > 1 << 40) || n.abs() > 1 << 60 || *d > 1 << 40) {
            return None;
        }
        let n = self.dim;
        let mut out = Vec::new();
        let mut cur = lo.clone();
        loop {
            let ok = hs.iter().all(|(a, num, den)| {
                let dot: i128 = a.iter().zip(&cur).map(|(x, y)| x * (*y as i128)).sum();
                dot * den >= *num
            });
            if ok {
                out.push(LatticeVector::from_i64(&cur));
            }
            let mut i = n;
            loop {
                if i == 0 {
                    return Some(out);
                }
                i -= 1;
                if cur[i] < hi[i] {
                    cur[i] += 1;
                    for j in i + 1..n {
                        cur[j] = lo[j];
                    }
                    break;
                }
            }
        }
    }
}

/// Fan triangulation of a face (given by vertex indices) of dimension `k`,
/// recursing through faces obtained by intersecting with facets.
fn triangulate(verts: &[Vec<Q>], face: &[usize], k: usize, incidence: &[Vec<usize>]) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![face[0]]];
    }
    if k == 1 {
        return vec![vec![face[0], face[face.len() - 1]]];
    }
    let apex = face[0];
    let mut subfaces: BTreeSet<Vec<usize>> = BTreeSet::new();
    for f in incidence {
        let s: Vec<usize> = face.iter().copied().filter(|i| f.binary_search(i).is_ok()).collect();
        if s.len() < k || s.len() == face.len() || s.contains(&apex) {
            continue;
        }
        let pts: Vec<Vec<Q>> = s.iter().map(|&i| verts[i].clone()).collect();
        if linalg::affine_rank(&pts) == Some(k - 1) {
            subfaces.insert(s);
        }
    }
    let mut out = Vec::new();
    for s in subfaces {
        for mut simplex in triangulate(verts, &s, k - 1, incidence) {
            simplex.insert(0, apex);
            out.push(simplex);
        }
    }
    out
}

/// Mixed volume of `n` polytopes in dimension `n`, normalized so that
/// `MV(K, ..., K) = n! vol(K)`, by inclusion–exclusion over subset sums.
pub fn mixed_volume(ks: &[RationalPolytope]) -> Result<Q> {
    let n = ks.len();
    if n == 0 {
        return Err(Error::InvalidInput("mixed volume of an empty list".into()));
    }
    for k in ks {
        if k.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: k.dim() });
        }
    }
    let mut sums: Vec<Option<RationalPolytope>> = vec![None; 1 << n];
    let mut total = Q::zero();
    for mask in 1usize..(1 << n) {
        let top = usize::BITS as usize - 1 - mask.leading_zeros() as usize;
        let rest = mask & !(1 << top);
        let s = if rest == 0 {
            ks[top].clone()
        } else {
            sums[rest].as_ref().expect("subsets computed in order").minkowski_sum(&ks[top])?
        };
        let sign = if (n - mask.count_ones() as usize) % 2 == 0 { Q::one() } else { -Q::one() };
        total += sign * s.volume();
        sums[mask] = Some(s);
    }
    Ok(total)
}
