//! Finite atomic measures carrying a density, and doubling-cube searches.
//!
//! A [`DiscreteMeasure`] is a list of distinct atoms, each with a positive
//! mass and a nonnegative value of `f`. Every integral is a finite sum, so
//! masses of cubes are exact rationals.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::covering::cover_box;
use crate::error::{Error, Result};
use crate::geometry::{Cube, Point};
use crate::grids::{CubeId, GridFamily};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub x: Point,
    pub mass: Rational,
    pub f: Rational,
}

/// On-disk measure description; `f` may be signed here.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureFile {
    pub dimension: usize,
    pub growth_dim: Rational,
    pub points: Vec<Atom>,
}

impl MeasureFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn has_negative_f(&self) -> bool {
        self.points.iter().any(|a| a.f.is_negative())
    }

    /// Splits `f = f⁺ − f⁻` into two measures with the same atoms.
    pub fn split_signed(&self) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
        let part = |positive: bool| {
            let points = self
                .points
                .iter()
                .map(|a| {
                    let keep = if positive { a.f.is_positive() } else { a.f.is_negative() };
                    Atom { x: a.x.clone(), mass: a.mass.clone(), f: if keep { a.f.abs() } else { Rational::zero() } }
                })
                .collect();
            DiscreteMeasure::new(self.dimension, self.growth_dim.clone(), points)
        };
        Ok((part(true)?, part(false)?))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MeasureFile", into = "MeasureFile")]
pub struct DiscreteMeasure {
    dim: usize,
    growth_dim: Rational,
    atoms: Vec<Atom>,
}

impl TryFrom<MeasureFile> for DiscreteMeasure {
    type Error = Error;

    fn try_from(file: MeasureFile) -> Result<Self> {
        DiscreteMeasure::new(file.dimension, file.growth_dim, file.points)
    }
}

impl From<DiscreteMeasure> for MeasureFile {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureFile { dimension: m.dim, growth_dim: m.growth_dim, points: m.atoms }
    }
}

impl DiscreteMeasure {
    /// Validates and builds a measure: distinct points, positive masses,
    /// nonnegative `f`, and `0 < growth_dim <= dim`.
    pub fn new(dim: usize, growth_dim: Rational, atoms: Vec<Atom>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !growth_dim.is_positive() || growth_dim > dim as i64 {
            return Err(Error::InvalidArgument(format!("growth dimension {growth_dim} outside (0, {dim}]")));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidArgument("measure has no atoms".into()));
        }
        let mut seen = HashSet::with_capacity(atoms.len());
        for (i, a) in atoms.iter().enumerate() {
            a.x.check_dim(dim)?;
            if !a.mass.is_positive() {
                return Err(Error::InvalidArgument(format!("atom {i} has nonpositive mass {}", a.mass)));
            }
            if a.f.is_negative() {
                return Err(Error::InvalidArgument(format!("atom {i} has negative f {}", a.f)));
            }
            if !seen.insert(&a.x) {
                return Err(Error::InvalidArgument(format!("duplicate atom at {}", a.x)));
            }
        }
        Ok(DiscreteMeasure { dim, growth_dim, atoms })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        MeasureFile::from_json(text)?.try_into()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn growth_dim(&self) -> &Rational {
        &self.growth_dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Same atoms and masses with a different density.
    pub fn with_density(&self, f: Vec<Rational>) -> Result<Self> {
        if f.len() != self.atoms.len() {
            return Err(Error::DimensionMismatch { expected: self.atoms.len(), found: f.len() });
        }
        let atoms = self
            .atoms
            .iter()
            .zip(f)
            .map(|(a, f)| Atom { x: a.x.clone(), mass: a.mass.clone(), f })
            .collect();
        DiscreteMeasure::new(self.dim, self.growth_dim.clone(), atoms)
    }

    pub fn total_mass(&self) -> Rational {
        self.atoms.iter().map(|a| &a.mass).sum()
    }

    /// `‖f‖₁ = Σ f·mass`.
    pub fn f_l1(&self) -> Rational {
        self.atoms.iter().map(|a| &a.f * &a.mass).sum()
    }

    /// `‖f‖₁ / ‖μ‖`, the lower limit for admissible levels.
    pub fn mean_f(&self) -> Rational {
        self.f_l1() / self.total_mass()
    }

    pub fn box_mass(&self, b: &Cube) -> Rational {
        self.atoms.iter().filter(|a| b.contains_point(&a.x)).map(|a| &a.mass).sum()
    }

    /// `Σ weight·mass` over atoms in `b`; `weights` is indexed like the atoms.
    pub fn integral(&self, b: &Cube, weights: &[Rational]) -> Rational {
        self.atoms
            .iter()
            .zip(weights)
            .filter(|(a, _)| b.contains_point(&a.x))
            .map(|(a, w)| w * &a.mass)
            .sum()
    }

    /// `∫_b f dμ`.
    pub fn integral_f(&self, b: &Cube) -> Rational {
        self.atoms.iter().filter(|a| b.contains_point(&a.x)).map(|a| &a.f * &a.mass).sum()
    }

    /// Indices of atoms inside `b`.
    pub fn atoms_in(&self, b: &Cube) -> Vec<usize> {
        (0..self.atoms.len()).filter(|&i| b.contains_point(&self.atoms[i].x)).collect()
    }

    pub fn index_of(&self, x: &Point) -> Option<usize> {
        self.atoms.iter().position(|a| a.x == *x)
    }

    /// Smallest sup-norm distance between distinct atoms, `None` for one atom.
    pub fn min_separation(&self) -> Option<Rational> {
        let mut best: Option<Rational> = None;
        for (i, a) in self.atoms.iter().enumerate() {
            for b in &self.atoms[i + 1..] {
                let d = a.x.dist_inf(&b.x);
                if best.as_ref().map_or(true, |cur| d < *cur) {
                    best = Some(d);
                }
            }
        }
        best
    }

    /// Sup-norm diameter of the support.
    pub fn diameter(&self) -> Rational {
        (0..self.dim)
            .map(|i| {
                let lo = self.atoms.iter().map(|a| &a.x.0[i]).min().expect("nonempty");
                let hi = self.atoms.iter().map(|a| &a.x.0[i]).max().expect("nonempty");
                hi - lo
            })
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Largest absolute coordinate over the support.
    pub fn coordinate_radius(&self) -> Rational {
        self.atoms
            .iter()
            .flat_map(|a| a.x.0.iter().map(Rational::abs))
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Certified upper bound of `sup μ(B(x,r)) / r^d` over atom centers `x`
    /// and radii `r >= r_min` taken from `{r_min} ∪ {|x − y| : y an atom}`.
    ///
    /// Balls are closed. For fractional `d` the power `r^d` is rounded
    /// down, so the ratio is rounded up.
    pub fn growth_constant(&self, r_min: &Rational) -> Result<Rational> {
        if !r_min.is_positive() {
            return Err(Error::InvalidArgument(format!("r_min must be positive, got {r_min}")));
        }
        let half_d = self.growth_dim.half();
        let r_min2 = r_min * r_min;
        let mut best = Rational::zero();
        for a in &self.atoms {
            let mut by_dist: Vec<(Rational, &Rational)> =
                self.atoms.iter().map(|b| (a.x.dist2(&b.x), &b.mass)).collect();
            by_dist.sort_by(|l, r| l.0.cmp(&r.0));
            let mut cumulative = Vec::with_capacity(by_dist.len());
            let mut acc = Rational::zero();
            for (_, m) in &by_dist {
                acc += *m;
                cumulative.push(acc.clone());
            }
            let mass_within = |r2: &Rational| -> Rational {
                let count = by_dist.partition_point(|(d2, _)| d2 <= r2);
                if count == 0 {
                    Rational::zero()
                } else {
                    cumulative[count - 1].clone()
                }
            };
            let mut consider = |r2: &Rational| {
                let ratio = mass_within(r2) / r2.pow_lower(&half_d);
                if ratio > best {
                    best = ratio;
                }
            };
            consider(&r_min2);
            for (d2, _) in &by_dist {
                if *d2 >= r_min2 {
                    consider(d2);
                }
            }
        }
        Ok(best)
    }

    /// Default growth resolution: half the smallest sup-norm separation (1 for a single atom).
    pub fn default_r_min(&self) -> Rational {
        self.min_separation().map_or_else(Rational::one, |d| d.half())
    }

    pub fn is_doubling(&self, b: &Cube, params: &DoublingParams) -> bool {
        let outer = self.box_mass(&b.scaled(&params.alpha));
        outer <= &params.beta * self.box_mass(b)
    }

    /// First `(α,β)`-doubling cube above `start`.
    ///
    /// Walks `start, parent(start), …` in the same filtration. Once the walk
    /// reaches the scale where the chain's trace on the support stops
    /// changing (side beyond `p` times the coordinate radius of support and
    /// start) without finding a doubling cube, it continues through covering
    /// cubes of triple dilations, which reach the whole support after one step.
    pub fn doubling_ancestor(&self, family: &GridFamily, start: &CubeId, params: &DoublingParams) -> Result<CubeId> {
        let start_box = family.cube_box(start);
        let reach = start_box
            .corners()
            .iter()
            .flat_map(|c| c.0.iter().map(Rational::abs))
            .max()
            .expect("cube has corners")
            .max(self.coordinate_radius());
        let settle = &reach * Rational::integer(family.p());
        let mut current = start.clone();
        loop {
            let b = family.cube_box(&current);
            if self.is_doubling(&b, params) {
                return Ok(current);
            }
            if b.side > settle && current.k <= -2 {
                break;
            }
            current = family.parent(&current);
        }
        let three = Rational::integer(3);
        for _ in 0..64 {
            let b = family.cube_box(&current);
            current = cover_box(family, &b.scaled(&three))?.cube;
            if self.is_doubling(&family.cube_box(&current), params) {
                return Ok(current);
            }
        }
        Err(Error::Violation(format!("no doubling cube found above {start}")))
    }

    /// First doubling cube containing atom `x` scanning generations
    /// `k_start, k_start + 1, …` and filtrations `0..=n` within each.
    pub fn small_doubling_cube(
        &self,
        family: &GridFamily,
        x: &Point,
        params: &DoublingParams,
        k_start: i64,
    ) -> Result<CubeId> {
        if self.index_of(x).is_none() {
            return Err(Error::InvalidArgument(format!("{x} is not an atom")));
        }
        // beyond this generation αQ holds only x
        let k_stop = match self.min_separation() {
            Some(sep) => {
                let ratio = (&params.alpha + Rational::one()) / sep;
                (ratio.floor_log2() + 2).max(k_start)
            }
            None => k_start,
        };
        for k in k_start..=k_stop {
            for m in family.filtrations() {
                let id = family.locate(m, k, x);
                if self.is_doubling(&family.cube_box(&id), params) {
                    return Ok(id);
                }
            }
        }
        Err(Error::Violation(format!("no small doubling cube at {x} by generation {k_stop}")))
    }
}

/// Parameters of the `(α,β)`-doubling condition `μ(αQ) <= β·μ(Q)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoublingParams {
    pub alpha: Rational,
    pub beta: Rational,
}

impl DoublingParams {
    pub fn new(alpha: Rational, beta: Rational) -> Result<Self> {
        if alpha <= 3 {
            return Err(Error::InvalidArgument(format!("alpha must exceed 3, got {alpha}")));
        }
        if beta <= 1 {
            return Err(Error::InvalidArgument(format!("beta must exceed 1, got {beta}")));
        }
        Ok(DoublingParams { alpha, beta })
    }

    /// `α = 6c`, `β = (6c²)^d + 1` with the rational covering constant `c` of
    /// [`covering_constant`]. `β` is rounded up for fractional `d`.
    pub fn defaults(family: &GridFamily, growth_dim: &Rational) -> Self {
        let c = covering_constant(family);
        let six = Rational::integer(6);
        let alpha = &six * &c;
        let beta = (&six * &c * &c).pow_upper(growth_dim) + Rational::one();
        DoublingParams { alpha, beta }
    }

    /// Whether `β > (c·α)^e`, the threshold for arbitrarily small (`e = n`) or
    /// large (`e = d`) doubling cubes.
    pub fn exceeds_threshold(&self, family: &GridFamily, exponent: &Rational) -> bool {
        let base = covering_constant(family) * &self.alpha;
        self.beta > base.pow_upper(exponent)
    }
}

/// Rational covering constant `3p·r` where `r = ⌈256·√n⌉/256 >= √n`.
pub fn covering_constant(family: &GridFamily) -> Rational {
    Rational::integer(3 * family.p()) * Rational::sqrt_upper_256(family.dim() as u64)
}
