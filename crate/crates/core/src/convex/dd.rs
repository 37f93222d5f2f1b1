//! Double description method for pointed polyhedral cones `{z : A z >= 0}`.
//!
//! Integer arithmetic throughout; rays are kept primitive. Adjacency of a
//! positive and a negative ray is decided combinatorially from their sets of
//! tight constraints.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use std::cmp::Ordering;

use crate::rational::Q;

#[derive(Debug, PartialEq, Eq)]
pub struct NotPointed;

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn make_primitive(v: &mut [BigInt]) {
    let g = v.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if !g.is_zero() && g != BigInt::from(1) {
        for x in v.iter_mut() {
            *x = &*x / &g;
        }
    }
}

/// Scales a rational row by a positive factor so that it becomes integral and primitive.
pub fn integer_row(row: &[Q]) -> Vec<BigInt> {
    let l = row.iter().fold(BigInt::from(1), |l, x| l.lcm(x.denom()));
    let mut out: Vec<BigInt> = row.iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect();
    make_primitive(&mut out);
    out
}

struct Ray {
    z: Vec<BigInt>,
    tight: Vec<u32>,
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn is_superset(big: &[u32], small: &[u32]) -> bool {
    let mut j = 0;
    for &x in big {
        if j < small.len() && x == small[j] {
            j += 1;
        }
    }
    j == small.len()
}

/// Extreme rays of the cone `{z in Q^d : row . z >= 0 for all rows}`.
pub fn extreme_rays(rows: &[Vec<BigInt>], d: usize) -> Result<Vec<Vec<BigInt>>, NotPointed> {
    // pick d linearly independent rows greedily
    let qrows: Vec<Vec<Q>> = rows
        .iter()
        .map(|r| r.iter().map(|x| Q::from_integer(x.clone())).collect())
        .collect();
    let mut basis: Vec<usize> = Vec::with_capacity(d);
    let mut echelon: Vec<Vec<Q>> = Vec::new();
    for (i, r) in qrows.iter().enumerate() {
        let mut trial = echelon.clone();
        trial.push(r.clone());
        if crate::linalg::rank(&trial) > echelon.len() {
            let piv = crate::linalg::row_reduce(&mut trial);
            trial.truncate(piv.len());
            echelon = trial;
            basis.push(i);
            if basis.len() == d {
                break;
            }
        }
    }
    if basis.len() < d {
        return Err(NotPointed);
    }
    let bmat: Vec<Vec<Q>> = basis.iter().map(|&i| qrows[i].clone()).collect();
    let inv = crate::linalg::inverse(&bmat).expect("basis rows are independent");
    let mut rays: Vec<Ray> = (0..d)
        .map(|j| {
            let col: Vec<Q> = (0..d).map(|i| inv[i][j].clone()).collect();
            let z = integer_row(&col);
            let mut tight: Vec<u32> =
                basis.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &i)| i as u32).collect();
            tight.sort_unstable();
            Ray { z, tight }
        })
        .collect();

    let in_basis: std::collections::HashSet<usize> = basis.iter().copied().collect();
    for (ri, row) in rows.iter().enumerate() {
        if in_basis.contains(&ri) {
            continue;
        }
        let vals: Vec<BigInt> = rays.iter().map(|r| dot(row, &r.z)).collect();
        if vals.iter().all(|v| !v.is_negative()) {
            for (r, v) in rays.iter_mut().zip(&vals) {
                if v.is_zero() {
                    r.tight.push(ri as u32);
                }
            }
            continue;
        }
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_positive()).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_negative()).collect();
        let mut new_rays = Vec::new();
        for &p in &pos {
            for &n in &neg {
                let common = intersect(&rays[p].tight, &rays[n].tight);
                if common.len() + 2 < d {
                    continue;
                }
                let adjacent = (0..rays.len())
                    .all(|o| o == p || o == n || !is_superset(&rays[o].tight, &common));
                if !adjacent {
                    continue;
                }
                let mut z: Vec<BigInt> = rays[n]
                    .z
                    .iter()
                    .zip(&rays[p].z)
                    .map(|(zn, zp)| &vals[p] * zn - &vals[n] * zp)
                    .collect();
                make_primitive(&mut z);
                let mut tight = common;
                tight.push(ri as u32);
                tight.sort_unstable();
                new_rays.push(Ray { z, tight });
            }
        }
        let mut kept: Vec<Ray> = Vec::with_capacity(rays.len() + new_rays.len());
        for (r, v) in rays.into_iter().zip(vals) {
            if v.is_negative() {
                continue;
            }
            let mut r = r;
            if v.is_zero() {
                let pos = r.tight.binary_search(&(ri as u32)).unwrap_or_else(|e| e);
                r.tight.insert(pos, ri as u32);
            }
            kept.push(r);
        }
        kept.extend(new_rays);
        rays = kept;
    }
    Ok(rays.into_iter().map(|r| r.z).collect())
}
