//! Simplicial rational fans, star subdivisions and refinement chains.
//!
//! Fans are stored as a ray list plus maximal cones given by sorted ray
//! indices. Only simplicial cones are representable; smoothness and
//! completeness are checked on demand.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::lattice::{maximal_minors_gcd, LatticeVector};
use crate::linalg;
use crate::rational::Q;

/// A simplicial rational polyhedral cone spanned by primitive generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cone {
    generators: Vec<LatticeVector>,
}

impl Cone {
    pub fn new(generators: Vec<LatticeVector>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Ok(Cone { generators });
        };
        let n = first.dim();
        for g in &generators {
            if g.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: g.dim() });
            }
            if !g.is_primitive() {
                return Err(Error::InvalidInput(format!("generator {g} is not primitive")));
            }
        }
        let rows: Vec<Vec<Q>> = generators.iter().map(|g| g.to_rational()).collect();
        if linalg::rank(&rows) != generators.len() {
            return Err(Error::InvalidInput("cone generators are not linearly independent".into()));
        }
        Ok(Cone { generators })
    }

    pub fn from_i64(gens: &[&[i64]]) -> Result<Self> {
        Self::new(gens.iter().map(|g| LatticeVector::from_i64(g)).collect())
    }

    pub fn generators(&self) -> &[LatticeVector] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    /// Generators extend to a basis of the lattice.
    pub fn is_smooth(&self) -> bool {
        maximal_minors_gcd(&self.generators).is_one()
    }

    pub fn barycenter(&self) -> LatticeVector {
        let n = self.generators[0].dim();
        self.generators
            .iter()
            .fold(LatticeVector::zero(n), |acc, g| &acc + g)
    }

    /// Coefficients of `v` in the generators if `v` lies in the cone.
    pub fn coefficients(&self, v: &LatticeVector) -> Option<Vec<Q>> {
        let k = self.generators.len();
        let n = v.dim();
        // columns are generators: solve G c = v
        let mut m: Vec<Vec<Q>> = (0..n)
            .map(|i| {
                let mut row: Vec<Q> = self
                    .generators
                    .iter()
                    .map(|g| Q::from_integer(g.coords()[i].clone()))
                    .collect();
                row.push(Q::from_integer(v.coords()[i].clone()));
                row
            })
            .collect();
        let piv = linalg::row_reduce(&mut m);
        if piv.contains(&k) {
            return None;
        }
        let mut c = vec![Q::zero(); k];
        for (r, &p) in piv.iter().enumerate() {
            c[p] = m[r][k].clone();
        }
        if c.iter().any(|x| x.is_negative()) {
            None
        } else {
            Some(c)
        }
    }
}

/// JSON form of a fan: `{ "dim": n, "rays": [[...], ...], "max_cones": [[i, j, ...], ...] }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanJson {
    pub dim: usize,
    pub rays: Vec<LatticeVector>,
    pub max_cones: Vec<Vec<usize>>,
}

/// A simplicial fan in `N_R = R^dim`.
#[derive(Clone, Debug)]
pub struct Fan {
    dim: usize,
    rays: Vec<LatticeVector>,
    max_cones: Vec<Vec<usize>>,
    index: HashMap<LatticeVector, usize>,
    // inverse generator matrices of full-dimensional maximal cones
    inverses: Vec<Option<Vec<Vec<Q>>>>,
}

impl PartialEq for Fan {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.rays == other.rays && self.max_cones == other.max_cones
    }
}

impl Fan {
    pub fn new(dim: usize, rays: Vec<LatticeVector>, max_cones: Vec<Vec<usize>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("fan dimension must be positive".into()));
        }
        let mut index = HashMap::new();
        for (i, r) in rays.iter().enumerate() {
            if r.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.dim() });
            }
            if r.is_zero() || !r.is_primitive() {
                return Err(Error::InvalidInput(format!("ray {r} is not a primitive nonzero vector")));
            }
            if index.insert(r.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate ray {r}")));
            }
        }
        let mut cones = Vec::with_capacity(max_cones.len());
        for c in max_cones {
            let mut c = c;
            c.sort_unstable();
            c.dedup();
            if c.is_empty() || c.iter().any(|&i| i >= rays.len()) {
                return Err(Error::InvalidInput(format!("bad cone index list {c:?}")));
            }
            Cone::new(c.iter().map(|&i| rays[i].clone()).collect())?;
            cones.push(c);
        }
        let inverses = cones.iter().map(|c| cone_inverse(dim, &rays, c)).collect();
        Ok(Fan { dim, rays, max_cones: cones, index, inverses })
    }

    pub fn from_json(j: FanJson) -> Result<Self> {
        Self::new(j.dim, j.rays, j.max_cones)
    }

    pub fn to_json(&self) -> FanJson {
        FanJson { dim: self.dim, rays: self.rays.clone(), max_cones: self.max_cones.clone() }
    }

    pub fn from_i64(dim: usize, rays: &[&[i64]], cones: &[&[usize]]) -> Result<Self> {
        Self::new(
            dim,
            rays.iter().map(|r| LatticeVector::from_i64(r)).collect(),
            cones.iter().map(|c| c.to_vec()).collect(),
        )
    }

    /// The fan of the projective plane: rays (1,0), (0,1), (-1,-1).
    pub fn projective_plane() -> Self {
        Self::from_i64(2, &[&[1, 0], &[0, 1], &[-1, -1]], &[&[0, 1], &[1, 2], &[0, 2]])
            .expect("valid fan")
    }

    /// The fan of P^1 x P^1: the four quadrants.
    pub fn p1xp1() -> Self {
        Self::from_i64(
            2,
            &[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]],
            &[&[0, 1], &[1, 2], &[2, 3], &[0, 3]],
        )
        .expect("valid fan")
    }

    /// The fan of projective `n`-space.
    pub fn projective_space(n: usize) -> Self {
        let mut rays: Vec<LatticeVector> = (0..n).map(|i| LatticeVector::unit(n, i)).collect();
        rays.push(LatticeVector::new(vec![BigInt::from(-1); n]));
        let cones = (0..=n)
            .map(|skip| (0..=n).filter(|&i| i != skip).collect())
            .collect();
        Self::new(n, rays, cones).expect("valid fan")
    }

    /// The (non-complete) fan of the positive orthant and its faces.
    pub fn positive_orthant(n: usize) -> Self {
        let rays = (0..n).map(|i| LatticeVector::unit(n, i)).collect();
        Self::new(n, rays, vec![(0..n).collect()]).expect("valid fan")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &[LatticeVector] {
        &self.rays
    }

    pub fn max_cones(&self) -> &[Vec<usize>] {
        &self.max_cones
    }

    pub fn ray_index(&self, v: &LatticeVector) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn cone(&self, idx: &[usize]) -> Cone {
        Cone { generators: idx.iter().map(|&i| self.rays[i].clone()).collect() }
    }

    /// Ray indices of a cone given by generators, if it is a cone of the fan.
    pub fn find_cone(&self, c: &Cone) -> Option<Vec<usize>> {
        let mut idx: Vec<usize> = c
            .generators()
            .iter()
            .map(|g| self.ray_index(g))
            .collect::<Option<_>>()?;
        idx.sort_unstable();
        self.is_face(&idx).then_some(idx)
    }

    /// Whether the ray index set spans a cone of the fan.
    pub fn is_face(&self, idx: &[usize]) -> bool {
        self.max_cones
            .iter()
            .any(|c| idx.iter().all(|i| c.binary_search(i).is_ok()))
    }

    pub fn is_smooth(&self) -> bool {
        self.max_cones.iter().all(|c| self.cone(c).is_smooth())
    }

    /// Facet pairing test: every codimension-one face of a full-dimensional
    /// maximal cone lies in exactly two maximal cones.
    pub fn is_complete(&self) -> Result<bool> {
        if self.dim > 3 {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        if self.max_cones.is_empty() || self.max_cones.iter().any(|c| c.len() != self.dim) {
            return Ok(false);
        }
        Ok(self.facet_map().values().all(|v| v.len() == 2))
    }

    /// Map from codimension-one faces to the maximal cones containing them.
    pub fn facet_map(&self) -> BTreeMap<Vec<usize>, Vec<usize>> {
        let mut map: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for (ci, c) in self.max_cones.iter().enumerate() {
            for skip in 0..c.len() {
                let facet: Vec<usize> =
                    c.iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, &r)| r).collect();
                map.entry(facet).or_default().push(ci);
            }
        }
        map
    }

    /// Star subdivision at the barycenter of the face spanned by `face` (ray indices).
    pub fn star_subdivide(&self, face: &[usize]) -> Result<Fan> {
        let mut face = face.to_vec();
        face.sort_unstable();
        face.dedup();
        if !self.is_face(&face) {
            return Err(Error::ConeNotInFan(format!("{face:?}")));
        }
        let cone = self.cone(&face);
        if cone.dim() < 2 {
            return Err(Error::InvalidInput("star subdivision needs a cone of dimension >= 2".into()));
        }
        if !cone.is_smooth() {
            return Err(Error::NotSmooth(format!("{face:?}")));
        }
        let bary = cone.barycenter();
        let new_index = self.rays.len();
        let mut rays = self.rays.clone();
        rays.push(bary.clone());
        let mut index = self.index.clone();
        index.insert(bary, new_index);
        let mut cones = Vec::with_capacity(self.max_cones.len() + face.len());
        let mut inverses = Vec::with_capacity(cones.capacity());
        for (c, inv) in self.max_cones.iter().zip(&self.inverses) {
            if face.iter().all(|i| c.binary_search(i).is_ok()) {
                for g in &face {
                    let mut nc: Vec<usize> = c.iter().copied().filter(|r| r != g).collect();
                    nc.push(new_index);
                    inverses.push(cone_inverse(self.dim, &rays, &nc));
                    cones.push(nc);
                }
            } else {
                cones.push(c.clone());
                inverses.push(inv.clone());
            }
        }
        Ok(Fan { dim: self.dim, rays, max_cones: cones, index, inverses })
    }

    /// Star subdivision at a cone given by its generators.
    pub fn star_subdivide_cone(&self, sigma: &Cone) -> Result<Fan> {
        let idx = self
            .find_cone(sigma)
            .ok_or_else(|| Error::ConeNotInFan(format!("{:?}", sigma.generators())))?;
        self.star_subdivide(&idx)
    }

    /// The minimal cone containing `v` and the (nonnegative) coefficients of
    /// `v` in that cone's generators.
    pub fn locate(&self, v: &LatticeVector) -> Result<(Vec<usize>, Vec<Q>)> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: v.dim() });
        }
        if v.is_zero() {
            return Err(Error::ZeroVector);
        }
        if let Some(i) = self.ray_index(v) {
            return Ok((vec![i], vec![Q::one()]));
        }
        let vq = v.to_rational();
        for (ci, c) in self.max_cones.iter().enumerate() {
            let coeffs = match &self.inverses[ci] {
                Some(inv) => {
                    let c: Vec<Q> = inv.iter().map(|row| linalg::dot(row, &vq)).collect();
                    if c.iter().any(|x| x.is_negative()) {
                        continue;
                    }
                    c
                }
                None => match self.cone(c).coefficients(v) {
                    Some(c) => c,
                    None => continue,
                },
            };
            let (idx, co): (Vec<usize>, Vec<Q>) = c
                .iter()
                .zip(coeffs)
                .filter(|(_, x)| !x.is_zero())
                .map(|(&r, x)| (r, x))
                .unzip();
            return Ok((idx, co));
        }
        Err(Error::InvalidInput(format!("vector {v} is not in the support of the fan")))
    }

    /// Index of the first maximal cone containing `v`, with its coefficients.
    pub fn locate_maximal(&self, v: &LatticeVector) -> Result<(usize, Vec<Q>)> {
        let vq = v.to_rational();
        for (ci, c) in self.max_cones.iter().enumerate() {
            let coeffs = match &self.inverses[ci] {
                Some(inv) => inv.iter().map(|row| linalg::dot(row, &vq)).collect::<Vec<_>>(),
                None => match self.cone(c).coefficients(v) {
                    Some(c) => c,
                    None => continue,
                },
            };
            if coeffs.iter().all(|x| !x.is_negative()) {
                return Ok((ci, coeffs));
            }
        }
        Err(Error::InvalidInput(format!("vector {v} is not in the support of the fan")))
    }

    /// Whether every ray and maximal cone of `self` sits inside `coarse`.
    pub fn refines(&self, coarse: &Fan) -> bool {
        if self.dim != coarse.dim {
            return false;
        }
        if coarse.rays.iter().any(|r| self.ray_index(r).is_none()) {
            return false;
        }
        self.max_cones.iter().all(|c| {
            let bary = self.cone(c).barycenter();
            match coarse.locate_maximal(&bary) {
                Ok((ci, _)) => {
                    let target = coarse.cone(&coarse.max_cones[ci]);
                    c.iter().all(|&r| target.coefficients(&self.rays[r]).is_some())
                }
                Err(_) => false,
            }
        })
    }
}

/// Inverse of the generator matrix (generators as columns) of a full-dimensional cone.
fn cone_inverse(dim: usize, rays: &[LatticeVector], c: &[usize]) -> Option<Vec<Vec<Q>>> {
    if c.len() != dim {
        return None;
    }
    let m: Vec<Vec<Q>> = (0..dim)
        .map(|i| c.iter().map(|&r| Q::from_integer(rays[r].coords()[i].clone())).collect())
        .collect();
    linalg::inverse(&m)
}

/// All primitive vectors of sup-norm at most `h` in `Z^n`, lexicographically.
pub fn primitive_vectors(n: usize, h: u64) -> Vec<LatticeVector> {
    let h = h as i64;
    let mut out = Vec::new();
    let mut cur = vec![-h; n];
    loop {
        let v = LatticeVector::from_i64(&cur);
        if v.is_primitive() {
            out.push(v);
        }
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < h {
                cur[i] += 1;
                for c in cur.iter_mut().skip(i + 1) {
                    *c = -h;
                }
                break;
            }
        }
    }
}

/// One star subdivision step recorded in a refinement chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainStep {
    pub cone: Vec<usize>,
    pub barycenter: LatticeVector,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainJson {
    pub base: FanJson,
    pub steps: Vec<ChainStep>,
}

/// A base fan together with a sequence of star subdivisions.
#[derive(Clone, Debug)]
pub struct RefinementChain {
    base: Fan,
    steps: Vec<ChainStep>,
    current: Fan,
    // fan size after each completed height, for height-indexed checks
    height_marks: Vec<(u64, usize)>,
}

impl RefinementChain {
    pub fn new(base: Fan) -> Result<Self> {
        if !base.is_smooth() {
            return Err(Error::NotSmooth("base fan".into()));
        }
        Ok(RefinementChain { current: base.clone(), base, steps: Vec::new(), height_marks: Vec::new() })
    }

    pub fn from_json(j: ChainJson) -> Result<Self> {
        let mut chain = Self::new(Fan::from_json(j.base)?)?;
        for s in j.steps {
            chain.push(&s.cone)?;
            if chain.steps.last().map(|l| &l.barycenter) != Some(&s.barycenter) {
                return Err(Error::InvalidInput(format!(
                    "recorded barycenter {} does not match cone {:?}",
                    s.barycenter, s.cone
                )));
            }
        }
        Ok(chain)
    }

    pub fn to_json(&self) -> ChainJson {
        ChainJson { base: self.base.to_json(), steps: self.steps.clone() }
    }

    pub fn base(&self) -> &Fan {
        &self.base
    }

    pub fn fan(&self) -> &Fan {
        &self.current
    }

    pub fn steps(&self) -> &[ChainStep] {
        &self.steps
    }

    /// Heights completed by `refine_by_height`, with the chain length at that point.
    pub fn height_marks(&self) -> &[(u64, usize)] {
        &self.height_marks
    }

    /// Subdivides the current fan at the face with the given ray indices.
    pub fn push(&mut self, face: &[usize]) -> Result<()> {
        let next = self.current.star_subdivide(face)?;
        let bary = next.rays().last().expect("subdivision adds a ray").clone();
        let mut face = face.to_vec();
        face.sort_unstable();
        face.dedup();
        self.steps.push(ChainStep { cone: face, barycenter: bary });
        self.current = next;
        Ok(())
    }

    /// Replays the first `k` steps from the base fan.
    pub fn fan_at(&self, k: usize) -> Result<Fan> {
        let mut f = self.base.clone();
        for s in &self.steps[..k] {
            f = f.star_subdivide(&s.cone)?;
        }
        Ok(f)
    }

    /// Extends the chain until every primitive vector of sup-norm `<= h` is a ray.
    ///
    /// Each round collects the minimal cones of the missing vectors, sorts them
    /// by generator list and subdivides those still present in the fan.
    pub fn refine_by_height(&mut self, h: u64) -> Result<()> {
        let n = self.current.dim();
        let targets = primitive_vectors(n, h);
        loop {
            let mut pending: BTreeSet<Vec<LatticeVector>> = BTreeSet::new();
            for v in &targets {
                if self.current.ray_index(v).is_some() {
                    continue;
                }
                let (idx, _) = self.current.locate(v)?;
                let mut gens: Vec<LatticeVector> =
                    idx.iter().map(|&i| self.current.rays()[i].clone()).collect();
                gens.sort();
                pending.insert(gens);
            }
            if pending.is_empty() {
                break;
            }
            for gens in pending {
                let idx: Option<Vec<usize>> = gens.iter().map(|g| self.current.ray_index(g)).collect();
                let Some(mut idx) = idx else { continue };
                idx.sort_unstable();
                if self.current.is_face(&idx) {
                    self.push(&idx)?;
                }
            }
        }
        self.height_marks.push((h, self.steps.len()));
        Ok(())
    }
}

/// Convenience: the fan obtained from `base` by `refine_by_height(h)`.
pub fn refine_fan(base: &Fan, h: u64) -> Result<Fan> {
    let mut chain = RefinementChain::new(base.clone())?;
    chain.refine_by_height(h)?;
    Ok(chain.fan().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    fn lv(c: &[i64]) -> LatticeVector {
        LatticeVector::from_i64(c)
    }

    /// Brute-force search for a vector completing `gens` to a basis of Z^2.
    fn has_completion_2d(a: &LatticeVector) -> bool {
        (-3..=3).any(|x| (-3..=3).any(|y| crate::lattice::det2(a, &lv(&[x, y])).abs().is_one()))
    }

    #[test]
    fn smoothness_examples() {
        assert!(Cone::from_i64(&[&[1, 0], &[0, 1]]).unwrap().is_smooth());
        let bad = Cone::from_i64(&[&[1, 0], &[1, 2]]).unwrap();
        assert!(!bad.is_smooth());
        // no pair within |coords| <= 3 has determinant ±1 with both generators
        let det = crate::lattice::det2(&lv(&[1, 0]), &lv(&[1, 2]));
        assert_eq!(det, BigInt::from(2));
        assert!(has_completion_2d(&lv(&[1, 0])));
        let c3 = Cone::from_i64(&[&[1, 0, 0], &[1, 1, 0]]).unwrap();
        assert!(c3.is_smooth());
        let completed = vec![
            vec![BigInt::from(1), BigInt::from(0), BigInt::from(0)],
            vec![BigInt::from(1), BigInt::from(1), BigInt::from(0)],
            vec![BigInt::from(0), BigInt::from(0), BigInt::from(1)],
        ];
        assert!(crate::lattice::det(&completed).abs().is_one());
    }

    #[test]
    fn completeness_examples() {
        assert!(Fan::projective_plane().is_complete().unwrap());
        assert!(Fan::p1xp1().is_complete().unwrap());
        assert!(!Fan::positive_orthant(2).is_complete().unwrap());
        assert!(Fan::projective_space(3).is_complete().unwrap());
        let f4 = Fan::projective_space(4);
        assert!(matches!(f4.is_complete(), Err(Error::UnsupportedDimension(4))));
    }

    #[test]
    fn star_subdivisions_of_orthant() {
        let f = Fan::positive_orthant(3);
        let full = f.star_subdivide(&[0, 1, 2]).unwrap();
        assert_eq!(full.rays().last().unwrap(), &lv(&[1, 1, 1]));
        assert_eq!(full.max_cones().len(), 3);
        assert!(full.is_smooth());
        let face = f.star_subdivide(&[0, 1]).unwrap();
        assert_eq!(face.rays().last().unwrap(), &lv(&[1, 1, 0]));
        assert_eq!(face.max_cones().len(), 2);
    }

    #[test]
    fn star_subdivision_of_p2() {
        let f = Fan::projective_plane();
        let g = f.star_subdivide_cone(&Cone::from_i64(&[&[1, 0], &[0, 1]]).unwrap()).unwrap();
        assert_eq!(g.rays().len(), 4);
        assert!(g.ray_index(&lv(&[1, 1])).is_some());
        assert!(g.is_smooth());
        assert!(g.is_complete().unwrap());
        assert_eq!(g.max_cones().len(), 4);
        assert!(g.refines(&f));
        assert!(!f.refines(&g));
        assert!(matches!(
            f.star_subdivide_cone(&Cone::from_i64(&[&[1, 0], &[1, 1]]).unwrap()),
            Err(Error::ConeNotInFan(_))
        ));
    }

    #[test]
    fn locate_examples() {
        let f = Fan::projective_plane();
        let (c, co) = f.locate(&lv(&[2, 3])).unwrap();
        assert_eq!(c, vec![0, 1]);
        assert_eq!(co, vec![qi(2), qi(3)]);
        let (c, co) = f.locate(&lv(&[-1, -1])).unwrap();
        assert_eq!((c, co), (vec![2], vec![qi(1)]));
        let (c, co) = f.locate(&lv(&[-2, 1])).unwrap();
        assert_eq!(c, vec![1, 2]);
        // (-2, 1) = 3 (0, 1) + 2 (-1, -1)
        assert_eq!(co, vec![qi(3), qi(2)]);
    }

    #[test]
    fn refine_by_height_examples() {
        let base = Fan::projective_plane();
        let mut chain = RefinementChain::new(base.clone()).unwrap();
        chain.refine_by_height(1).unwrap();
        let f1 = chain.fan().clone();
        for v in [[1, 1], [-1, 0], [0, -1]] {
            assert!(f1.ray_index(&lv(&v)).is_some());
        }
        for v in primitive_vectors(2, 1) {
            assert!(f1.ray_index(&v).is_some(), "{v} missing");
        }
        chain.refine_by_height(2).unwrap();
        let f2 = chain.fan();
        assert_eq!(primitive_vectors(2, 2).len(), 16);
        for v in primitive_vectors(2, 2) {
            assert!(f2.ray_index(&v).is_some(), "{v} missing");
        }
        for r in f1.rays() {
            assert!(f2.ray_index(r).is_some());
        }
        assert!(f2.is_smooth() && f2.is_complete().unwrap());
        let len = chain.steps().len();
        chain.refine_by_height(2).unwrap();
        assert_eq!(chain.steps().len(), len);
    }

    #[test]
    fn chain_json_roundtrip() {
        let mut chain = RefinementChain::new(Fan::projective_plane()).unwrap();
        chain.refine_by_height(2).unwrap();
        let text = serde_json::to_string(&chain.to_json()).unwrap();
        let back = RefinementChain::from_json(serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.fan(), chain.fan());
        assert_eq!(chain.fan_at(chain.steps().len()).unwrap(), *chain.fan());
    }

    #[test]
    fn fan_json_rejects_unknown_fields() {
        let bad = r#"{"dim": 2, "rays": [[1,0]], "max_cones": [[0]], "extra": 1}"#;
        assert!(serde_json::from_str::<FanJson>(bad).is_err());
    }
}
