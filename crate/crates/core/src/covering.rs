//! Fitting balls and cubes into a single cube of the shifted family.
//!
//! For a query cube of side `s`, pick the generation `k0` with
//! `2^{-k0-1}/p <= s < 2^{-k0}/p`. At that generation all cube vertices of
//! every filtration lie on `(2^{-k0}/p)·Zⁿ`, whose points are farther apart
//! than `s`, and the per-axis vertex sets of different filtrations are
//! disjoint. Each axis can therefore be cut by at most one filtration, and
//! with `n + 1` filtrations against `n` axes some filtration cuts none. The
//! query then sits inside one of its generation-`k0` cubes, whose side is at
//! most `2p·s`.
//!
//! [`uncovered_witness`] goes the other way: given at most `n` of the
//! filtrations it builds a small ball that none of them can hold in a cube
//! of bounded relative size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Ball, Cube, Point};
use crate::grids::{CubeId, GridFamily};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverResult {
    pub cube: CubeId,
    pub k0: i64,
    /// `side(cube) / side(query)`, always in `(1, 2p]`.
    pub side_ratio: Rational,
}

/// The unique `k0` with `2^{-k0-1}/p <= side < 2^{-k0}/p`.
pub fn fit_scale(family: &GridFamily, side: &Rational) -> Result<i64> {
    if !side.is_positive() {
        return Err(Error::InvalidArgument(format!("side must be positive, got {side}")));
    }
    // 2^{-k0} is the smallest power of two strictly above p·side
    let scaled = side * Rational::integer(family.p());
    Ok(-(scaled.floor_log2() + 1))
}

/// Finds a cube of the family containing `b` with side at most `2p·side(b)`.
///
/// Filtrations are tried in order `0..=n` and the first hit is returned. A
/// miss means the covering guarantee failed and is reported as
/// [`Error::Violation`].
pub fn cover_box(family: &GridFamily, b: &Cube) -> Result<CoverResult> {
    b.lower.check_dim(family.dim())?;
    let k0 = fit_scale(family, &b.side)?;
    for m in family.filtrations() {
        let id = family.locate(m, k0, &b.lower);
        let candidate = family.cube_box(&id);
        if candidate.contains_cube_unchecked(b) {
            let side_ratio = &candidate.side / &b.side;
            if side_ratio > family.ratio_bound() {
                return Err(Error::Violation(format!(
                    "cover of {b} has ratio {side_ratio} above 2p = {}",
                    family.ratio_bound()
                )));
            }
            return Ok(CoverResult { cube: id, k0, side_ratio });
        }
    }
    Err(Error::Violation(format!(
        "no filtration covers {b} at generation {k0} (dimension {})",
        family.dim()
    )))
}

pub fn cover_ball(family: &GridFamily, ball: &Ball) -> Result<CoverResult> {
    ball.center.check_dim(family.dim())?;
    cover_box(family, &ball.circumscribed())
}

/// Whether some cube of the listed filtrations contains `b` with side at
/// most `max_ratio·side(b)`. Only one cube per generation can contain `b`:
/// the one holding its lower corner.
pub fn covered_within(family: &GridFamily, subset: &[usize], b: &Cube, max_ratio: &Rational) -> bool {
    let limit = &b.side * max_ratio;
    // generations whose side lies in [side(b), max_ratio·side(b)]
    let k_fine = -b.side.floor_log2() - if is_power_of_two(&b.side) { 0 } else { 1 };
    let k_coarse = -limit.floor_log2();
    subset.iter().any(|&m| {
        (k_coarse..=k_fine).any(|k| {
            let c = family.cube_box(&family.locate(m, k, &b.lower));
            c.side <= limit && c.contains_cube_unchecked(b)
        })
    })
}

fn is_power_of_two(x: &Rational) -> bool {
    Rational::pow2(x.floor_log2()) == *x
}

/// Upper bound on radius halvings in [`uncovered_witness`].
pub const WITNESS_HALVINGS: u32 = 64;

/// A ball that no cube of the `subset` filtrations contains with
/// `side(cube) <= max_ratio·side(R_B)`, where `R_B` is the circumscribed cube.
///
/// Candidate centers put coordinate `i` on a generation-0 boundary hyperplane
/// of the filtration assigned to axis `i`, so each filtration is cut along
/// some axis at every generation finer than 0. The radius is halved until the
/// exact certificate from [`covered_within`] says no cube fits. For the full
/// family this never succeeds and [`Error::NotFound`] is returned.
pub fn uncovered_witness(family: &GridFamily, subset: &[usize], max_ratio: &Rational) -> Result<Ball> {
    for &m in subset {
        if m > family.dim() {
            return Err(Error::InvalidArgument(format!("filtration {m} out of range")));
        }
    }
    if *max_ratio < 1 {
        return Err(Error::InvalidArgument(format!("max_ratio {max_ratio} below 1")));
    }
    let mut members: Vec<usize> = subset.to_vec();
    members.sort_unstable();
    members.dedup();
    let n = family.dim();

    for center in candidate_centers(family, &members, n) {
        let mut radius = Rational::one();
        for _ in 0..=WITNESS_HALVINGS {
            let ball = Ball::new(center.clone(), radius.clone())?;
            if !covered_within(family, &members, &ball.circumscribed(), max_ratio) {
                return Ok(ball);
            }
            radius = radius.half();
        }
    }
    Err(Error::NotFound(format!(
        "no uncovered ball for filtrations {members:?} at ratio {max_ratio} within {WITNESS_HALVINGS} halvings"
    )))
}

/// Centers whose `i`-th coordinate is the generation-0 offset of the
/// filtration assigned to axis `i`, over all assignments of axes to members.
fn candidate_centers(family: &GridFamily, members: &[usize], n: usize) -> Vec<Point> {
    if members.is_empty() {
        return vec![Point::origin(n)];
    }
    if members.len() > n {
        // more filtrations than axes: no assignment can cut them all, so only
        // the cyclic ones are tried before giving up
        return (0..members.len())
            .map(|shift| {
                Point((0..n).map(|i| family.offset_unchecked(members[(i + shift) % members.len()], 0)).collect())
            })
            .collect();
    }
    let count = members.len().pow(n as u32).min(1 << 12);
    let mut centers = Vec::with_capacity(count);
    for code in 0..count {
        let mut c = code;
        let coords = (0..n)
            .map(|_| {
                let m = members[c % members.len()];
                c /= members.len();
                family.offset_unchecked(m, 0)
            })
            .collect();
        centers.push(Point(coords));
    }
    // assignments covering every member come first
    centers.sort_by_key(|p| {
        let distinct: std::collections::BTreeSet<&Rational> = p.0.iter().collect();
        std::cmp::Reverse(distinct.len())
    });
    centers
}
