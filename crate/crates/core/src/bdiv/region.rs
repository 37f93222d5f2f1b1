//! Exact membership tests for `l * Delta` in the plane.
//!
//! On each cone `cone(u1, u2)` of a complete planar fan the function is
//! `phi(s u1 + t u2) = c st/(s+t) + alpha s + beta t` (`c = 0` when linear).
//! Then `m` lies in `l * Delta` iff on every cone
//! `x = <m,u1> - l alpha >= 0`, `y = <m,u2> - l beta >= 0` and, when `c > 0`,
//! `sqrt(x) + sqrt(y) >= sqrt(l c)`, decided without square roots as
//! `x + y >= l c` or `4xy >= (l c - x - y)^2`.

use num_traits::{Signed, Zero};

use super::function::{common_refinement, Builtin, ConicalFunction, FunctionKind, PlModel};
use crate::fan::Fan;
use crate::lattice::LatticeVector;
use crate::linalg;
use crate::rational::Q;

#[derive(Clone, Debug, PartialEq)]
pub struct RegionPiece {
    pub u1: LatticeVector,
    pub u2: LatticeVector,
    pub c: Q,
    pub alpha: Q,
    pub beta: Q,
}

impl RegionPiece {
    fn linear_form(&self) -> Vec<Q> {
        let a = vec![self.u1.to_rational(), self.u2.to_rational()];
        linalg::solve(&a, &[self.alpha.clone(), self.beta.clone()]).expect("independent generators")
    }

    fn contains(&self, m: &[Q], level: &Q) -> bool {
        let x = self.u1.pair(m) - level * &self.alpha;
        let y = self.u2.pair(m) - level * &self.beta;
        if x.is_negative() || y.is_negative() {
            return false;
        }
        if !self.c.is_positive() {
            return true;
        }
        let lc = level * &self.c;
        let s = &x + &y;
        if s >= lc {
            return true;
        }
        let gap = &lc - &s;
        Q::from_integer(4.into()) * x * y >= &gap * &gap
    }
}

#[derive(Clone, Debug)]
enum Pieces {
    Global(Vec<Q>),
    OnFan(Fan, Vec<RegionPiece>),
}

/// Exact description of `Delta` for planar functions built from `exa1`,
/// piecewise linear and linear parts on compatible fans.
#[derive(Clone, Debug)]
pub struct MembershipRegion {
    pieces: Vec<RegionPiece>,
    global: Option<Vec<Q>>,
    fast: Option<Vec<FastPiece>>,
}

/// A piece scaled by the common denominator `den` of its parameters.
#[derive(Clone, Debug)]
struct FastPiece {
    u1: [i128; 2],
    u2: [i128; 2],
    den: i128,
    c: i128,
    alpha: i128,
    beta: i128,
}

fn fast_pieces(pieces: &[RegionPiece]) -> Option<Vec<FastPiece>> {
    use num_integer::Integer;
    use num_traits::ToPrimitive;
    pieces
        .iter()
        .map(|p| {
            let den = p.c.denom().lcm(p.alpha.denom()).lcm(p.beta.denom());
            let scale = |x: &Q| -> Option<i128> {
                let v = (x * Q::from_integer(den.clone())).to_integer().to_i128()?;
                (v.abs() < 1 << 40).then_some(v)
            };
            let vec2 = |u: &LatticeVector| -> Option<[i128; 2]> {
                let c = u.to_i64()?;
                Some([c[0] as i128, c[1] as i128])
            };
            let den_i = den.to_i128().filter(|d| *d < 1 << 40)?;
            Some(FastPiece {
                u1: vec2(&p.u1)?,
                u2: vec2(&p.u2)?,
                den: den_i,
                c: scale(&p.c)?,
                alpha: scale(&p.alpha)?,
                beta: scale(&p.beta)?,
            })
        })
        .collect()
}

impl MembershipRegion {
    pub fn of(phi: &ConicalFunction) -> Option<Self> {
        if phi.dim() != 2 {
            return None;
        }
        match pieces_of(phi)? {
            Pieces::Global(m) => Some(MembershipRegion { pieces: Vec::new(), global: Some(m), fast: None }),
            Pieces::OnFan(_, pieces) => {
                let fast = fast_pieces(&pieces);
                Some(MembershipRegion { pieces, global: None, fast })
            }
        }
    }

    pub fn pieces(&self) -> &[RegionPiece] {
        &self.pieces
    }

    /// Membership of a lattice point in machine integers when the data fit;
    /// `None` defers to the exact test.
    fn contains_i128(&self, m: &[i64], level: i64) -> Option<bool> {
        let fast = self.fast.as_ref()?;
        let l = level as i128;
        for p in fast {
            let dot = |u: &[i128; 2]| -> Option<i128> {
                u[0].checked_mul(m[0] as i128)?.checked_add(u[1].checked_mul(m[1] as i128)?)
            };
            let x = dot(&p.u1)?.checked_mul(p.den)?.checked_sub(l.checked_mul(p.alpha)?)?;
            let y = dot(&p.u2)?.checked_mul(p.den)?.checked_sub(l.checked_mul(p.beta)?)?;
            if x < 0 || y < 0 {
                return Some(false);
            }
            if p.c <= 0 {
                continue;
            }
            let lc = l.checked_mul(p.c)?;
            let s = x.checked_add(y)?;
            if s >= lc {
                continue;
            }
            let gap = lc - s;
            if 4i128.checked_mul(x)?.checked_mul(y)? < gap.checked_mul(gap)? {
                return Some(false);
            }
        }
        Some(true)
    }

    /// Whether `m` lies in `level * Delta`.
    pub fn contains(&self, m: &[Q], level: &Q) -> bool {
        if let Some(g) = &self.global {
            // Delta is the single point g
            return m.iter().zip(g).all(|(a, b)| *a == b * level);
        }
        self.pieces.iter().all(|p| p.contains(m, level))
    }

    pub fn contains_lattice(&self, m: &LatticeVector, level: u64) -> bool {
        if let (Some(mi), Ok(l)) = (m.to_i64(), i64::try_from(level)) {
            if mi.iter().all(|x| x.abs() < 1 << 40) && l < 1 << 20 {
                if let Some(r) = self.contains_i128(&mi, l) {
                    return r;
                }
            }
        }
        self.contains(&m.to_rational(), &Q::from_integer(level.into()))
    }
}

fn linear_pieces(fan: &Fan, values: &[Q]) -> Vec<RegionPiece> {
    fan.max_cones()
        .iter()
        .map(|c| RegionPiece {
            u1: fan.rays()[c[0]].clone(),
            u2: fan.rays()[c[1]].clone(),
            c: Q::zero(),
            alpha: values[c[0]].clone(),
            beta: values[c[1]].clone(),
        })
        .collect()
}

fn pieces_of(phi: &ConicalFunction) -> Option<Pieces> {
    match phi.kind() {
        FunctionKind::Builtin(Builtin::Exa1) => {
            let fan = Fan::projective_plane();
            let values: Vec<Q> = fan.rays().iter().map(|r| phi.eval_exact(r).expect("exact")).collect();
            let mut pieces = linear_pieces(&fan, &values);
            // the positive quadrant is the cone on rays 0 and 1
            pieces[0].c = Q::from_integer(1.into());
            Some(Pieces::OnFan(fan, pieces))
        }
        FunctionKind::Builtin(_) | FunctionKind::Expression(_) | FunctionKind::PiecewiseLinear(_) | FunctionKind::Linear(_) => {
            match phi.pl_model()? {
                PlModel::Global(m) => Some(Pieces::Global(m)),
                PlModel::OnFan(fan, values) => {
                    let pieces = linear_pieces(&fan, &values);
                    Some(Pieces::OnFan(fan, pieces))
                }
            }
        }
        FunctionKind::Scaled(k, f) => Some(match pieces_of(f)? {
            Pieces::Global(m) => Pieces::Global(m.iter().map(|x| x * k).collect()),
            Pieces::OnFan(fan, ps) => Pieces::OnFan(
                fan,
                ps.into_iter()
                    .map(|p| RegionPiece { c: &p.c * k, alpha: &p.alpha * k, beta: &p.beta * k, ..p })
                    .collect(),
            ),
        }),
        FunctionKind::Sum(f, g) => match (pieces_of(f)?, pieces_of(g)?) {
            (Pieces::Global(a), Pieces::Global(b)) => Some(Pieces::Global(a.iter().zip(&b).map(|(x, y)| x + y).collect())),
            (Pieces::Global(m), Pieces::OnFan(fan, ps)) | (Pieces::OnFan(fan, ps), Pieces::Global(m)) => {
                let ps = ps
                    .into_iter()
                    .map(|p| RegionPiece { alpha: &p.alpha + p.u1.pair(&m), beta: &p.beta + p.u2.pair(&m), ..p })
                    .collect();
                Some(Pieces::OnFan(fan, ps))
            }
            (Pieces::OnFan(f1, p1), Pieces::OnFan(f2, p2)) => {
                let fan = common_refinement(&f1, &f2)?;
                let r1 = restrict(&f1, &p1, &fan)?;
                let r2 = restrict(&f2, &p2, &fan)?;
                let ps = r1
                    .into_iter()
                    .zip(r2)
                    .map(|(a, b)| RegionPiece { c: &a.c + &b.c, alpha: &a.alpha + &b.alpha, beta: &a.beta + &b.beta, ..a })
                    .collect();
                Some(Pieces::OnFan(fan, ps))
            }
        },
    }
}

/// Pieces of `coarse` transported to the cones of the refinement `fine`.
/// Curved pieces can only be kept on cones that are not subdivided.
fn restrict(coarse: &Fan, pieces: &[RegionPiece], fine: &Fan) -> Option<Vec<RegionPiece>> {
    fine.max_cones()
        .iter()
        .map(|c| {
            let (u1, u2) = (fine.rays()[c[0]].clone(), fine.rays()[c[1]].clone());
            let bary = &u1 + &u2;
            let (ci, _) = coarse.locate_maximal(&bary).ok()?;
            let p = &pieces[ci];
            let same = |a: &LatticeVector, b: &LatticeVector| a == &p.u1 && b == &p.u2;
            if same(&u1, &u2) {
                return Some(p.clone());
            }
            if same(&u2, &u1) {
                return Some(RegionPiece { u1, u2, c: p.c.clone(), alpha: p.beta.clone(), beta: p.alpha.clone() });
            }
            if !p.c.is_zero() {
                return None;
            }
            let m = p.linear_form();
            Some(RegionPiece { alpha: u1.pair(&m), beta: u2.pair(&m), u1, u2, c: Q::zero() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    /// Integer predicate for sqrt(x) + sqrt(y) >= sqrt(l) on the simplex part
    /// of exa1, written independently of the region code.
    fn exa1_oracle(x: i64, y: i64, l: i64) -> bool {
        x >= 0 && y >= 0 && x + y <= l && (x + y >= l || 4 * x * y >= (l - x - y) * (l - x - y))
    }

    #[test]
    fn exa1_matches_oracle() {
        let r = MembershipRegion::of(&ConicalFunction::builtin(Builtin::Exa1)).unwrap();
        for l in 0..=12i64 {
            for x in -3..=15i64 {
                for y in -3..=15i64 {
                    let m = LatticeVector::from_i64(&[x, y]);
                    assert_eq!(r.contains_lattice(&m, l as u64), exa1_oracle(x, y, l), "({x},{y}) at {l}");
                }
            }
        }
    }

    #[test]
    fn sums_and_scalings() {
        let p2 = Fan::projective_plane();
        let h = ConicalFunction::from_coefficients(p2, &[qi(0), qi(0), qi(1)]).unwrap();
        let e = ConicalFunction::builtin(Builtin::Exa1);
        let s = MembershipRegion::of(&e.sum(&h).unwrap()).unwrap();
        let e2 = MembershipRegion::of(&e.scaled(qi(2))).unwrap();
        let e1 = MembershipRegion::of(&e).unwrap();
        for x in -2..=8i64 {
            for y in -2..=8i64 {
                let m = LatticeVector::from_i64(&[x, y]);
                assert_eq!(e2.contains_lattice(&m, 1), e1.contains_lattice(&m, 2));
            }
        }
        assert!(s.contains_lattice(&LatticeVector::from_i64(&[2, 0]), 1));
        assert!(!s.contains_lattice(&LatticeVector::from_i64(&[0, 0]), 1));
        assert!(MembershipRegion::of(&ConicalFunction::builtin(Builtin::SqrtCusp)).is_none());
    }
}
