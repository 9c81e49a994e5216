//! The `n + 1` diagonally shifted dyadic filtrations of `Rⁿ`.
//!
//! Filtration `m` (for `0 <= m <= n`) has its generation-0 cubes at
//! `[0,1)ⁿ + (m/p)·(1,…,1) + Zⁿ`, where `p` is the smallest odd integer
//! strictly greater than `n`. Finer generations subdivide dyadically. Coarser
//! generations are fixed by choosing, at each step up, the parent of the
//! diagonal cube whose lower corner stays on the lattice `2^{-k+1}/p · Z`
//! along the diagonal. Exactly one of the two diagonal candidates qualifies
//! because `p` is odd.
//!
//! Generation `k` of filtration `m` is the lattice of cubes with side `2^{-k}`
//! and lower corners `2^{-k}·j + o(m,k)·(1,…,1)`, `j ∈ Zⁿ`. The scalar offset
//! `o(m,k)` is `m/p` for `k >= 0` and `2^{-k}·a_k/p` for `k < 0`, where
//! `a_0 = m` and `a_{k-1} = (a_k − t·p)/2` with `t = a_k mod 2`.

use std::sync::RwLock;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cube, Point};
use crate::rational::Rational;

/// Identifies cube `j` of generation `k` in filtration `m`; side `2^{-k}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CubeId {
    pub m: usize,
    pub k: i64,
    pub j: Vec<i128>,
}

impl CubeId {
    pub fn new(m: usize, k: i64, j: Vec<i128>) -> Self {
        CubeId { m, k, j }
    }

    pub fn side(&self) -> Rational {
        Rational::pow2(-self.k)
    }
}

impl std::fmt::Display for CubeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "A{}[k={}, j={:?}]", self.m, self.k, self.j)
    }
}

/// The family `A_0, …, A_n` for a fixed ambient dimension.
#[derive(Debug)]
pub struct GridFamily {
    dim: usize,
    p: i64,
    // a_0, a_{-1}, a_{-2}, … per filtration; grows on demand
    residues: RwLock<Vec<Vec<i64>>>,
}

impl Clone for GridFamily {
    fn clone(&self) -> Self {
        let residues = self.residues.read().expect("offset memo poisoned").clone();
        GridFamily { dim: self.dim, p: self.p, residues: RwLock::new(residues) }
    }
}

impl PartialEq for GridFamily {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
    }
}

/// Smallest odd integer strictly greater than `n`.
pub fn shift_denominator(n: usize) -> i64 {
    let n = n as i64;
    if n % 2 == 0 {
        n + 1
    } else {
        n + 2
    }
}

impl GridFamily {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let residues = (0..=dim).map(|m| vec![m as i64]).collect();
        Ok(GridFamily { dim, p: shift_denominator(dim), residues: RwLock::new(residues) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The odd shift denominator `p`.
    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn filtration_count(&self) -> usize {
        self.dim + 1
    }

    pub fn filtrations(&self) -> std::ops::RangeInclusive<usize> {
        0..=self.dim
    }

    /// Largest allowed ratio `side(cover) / side(query)`, namely `2p`.
    pub fn ratio_bound(&self) -> Rational {
        Rational::integer(2 * self.p)
    }

    fn check_m(&self, m: usize) -> Result<()> {
        if m > self.dim {
            return Err(Error::InvalidArgument(format!(
                "filtration index {m} out of range 0..={}",
                self.dim
            )));
        }
        Ok(())
    }

    /// The integer `a_k` with `o(m,k) = 2^{-k}·a_k/p` for `k <= 0`.
    pub fn residue(&self, m: usize, k: i64) -> Result<i64> {
        self.check_m(m)?;
        Ok(self.residue_unchecked(m, k.min(0)))
    }

    fn residue_unchecked(&self, m: usize, k: i64) -> i64 {
        debug_assert!(k <= 0);
        let depth = k.unsigned_abs() as usize;
        {
            let memo = self.residues.read().expect("offset memo poisoned");
            if let Some(a) = memo[m].get(depth) {
                return *a;
            }
        }
        let mut memo = self.residues.write().expect("offset memo poisoned");
        let chain = &mut memo[m];
        while chain.len() <= depth {
            let a = *chain.last().expect("chain starts with a_0");
            chain.push(parent_residue(a, self.p));
        }
        chain[depth]
    }

    /// Scalar diagonal offset `o(m,k)` of generation `k` in filtration `m`.
    pub fn offset(&self, m: usize, k: i64) -> Result<Rational> {
        self.check_m(m)?;
        Ok(self.offset_unchecked(m, k))
    }

    pub(crate) fn offset_unchecked(&self, m: usize, k: i64) -> Rational {
        if k >= 0 {
            Rational::ratio(m as i64, self.p)
        } else {
            let a = self.residue_unchecked(m, k);
            Rational::ratio(a, self.p).mul_pow2(-k)
        }
    }

    /// The exact half-open cube of `id`.
    pub fn cube_box(&self, id: &CubeId) -> Cube {
        let side = id.side();
        let o = self.offset_unchecked(id.m, id.k);
        let lower = id
            .j
            .iter()
            .map(|&ji| &side * Rational::integer(ji) + &o)
            .collect();
        Cube { lower: Point(lower), side }
    }

    /// The unique cube of generation `k` in filtration `m` containing `x`.
    ///
    /// Panics if a lattice index leaves the `i128` range, which needs
    /// `|2^k·x|` beyond `2^126`.
    pub fn locate(&self, m: usize, k: i64, x: &Point) -> CubeId {
        let o = self.offset_unchecked(m, k);
        let j = x
            .0
            .iter()
            .map(|xi| {
                let idx = (xi - &o).mul_pow2(k).floor();
                to_index(&idx)
            })
            .collect();
        CubeId { m, k, j }
    }

    pub fn parent(&self, id: &CubeId) -> CubeId {
        let b = self.cube_box(id);
        self.locate(id.m, id.k - 1, &b.lower)
    }

    /// The ancestor `levels` generations up.
    pub fn ancestor(&self, id: &CubeId, levels: u32) -> CubeId {
        if levels == 0 {
            return id.clone();
        }
        let b = self.cube_box(id);
        self.locate(id.m, id.k - levels as i64, &b.lower)
    }

    /// The `2^n` cubes of generation `k + 1` inside `id`.
    pub fn children(&self, id: &CubeId) -> Vec<CubeId> {
        let b = self.cube_box(id);
        let half = b.side.half();
        let n = self.dim;
        (0..1usize << n)
            .map(|mask| {
                let corner = Point(
                    b.lower
                        .0
                        .iter()
                        .enumerate()
                        .map(|(i, c)| if mask >> i & 1 == 1 { c + &half } else { c.clone() })
                        .collect(),
                );
                self.locate(id.m, id.k + 1, &corner)
            })
            .collect()
    }

    /// Whether every coordinate of `x` lies in `2^{-k}/p · Z`.
    pub fn in_lattice(&self, x: &Point, k: i64) -> bool {
        let scale = Rational::integer(self.p);
        x.0.iter().all(|xi| (xi * &scale).mul_pow2(k).is_integer())
    }

    /// All cubes of generation `k` in filtration `m` meeting `window`, capped at `limit`.
    pub fn cubes_meeting(&self, m: usize, k: i64, window: &Cube, limit: usize) -> Result<Vec<CubeId>> {
        self.check_m(m)?;
        window.lower.check_dim(self.dim)?;
        let o = self.offset_unchecked(m, k);
        let ranges: Vec<(i128, i128)> = window
            .lower
            .0
            .iter()
            .map(|lo| {
                let first = to_index(&(lo - &o).mul_pow2(k).floor());
                let last = to_index(&(lo + &window.side - &o).mul_pow2(k).ceil()) - 1;
                (first, last)
            })
            .collect();
        let total = ranges
            .iter()
            .try_fold(1u128, |acc, (a, b)| acc.checked_mul((b - a + 1) as u128));
        match total {
            Some(t) if t <= limit as u128 => {}
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "window meets more than {limit} cubes at generation {k}"
                )))
            }
        }
        let mut out = vec![Vec::new()];
        for (a, b) in ranges {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<i128>| {
                    (a..=b).map(move |ji| {
                        let mut v = prefix.clone();
                        v.push(ji);
                        v
                    })
                })
                .collect();
        }
        Ok(out.into_iter().map(|j| CubeId { m, k, j }).collect())
    }
}

/// One step up the diagonal: exactly one parity choice `t ∈ {0,1}` makes
/// `a − t·p` even, since `p` is odd.
fn parent_residue(a: i64, p: i64) -> i64 {
    let admissible: Vec<i64> = (0..2).filter(|t| (a - t * p).rem_euclid(2) == 0).collect();
    assert_eq!(admissible.len(), 1, "diagonal parent not unique for a = {a}, p = {p}");
    (a - admissible[0] * p) / 2
}

fn to_index(v: &BigInt) -> i128 {
    v.to_i128().expect("lattice index exceeds i128 range")
}
