//! Generation windows, the dyadic maximal function and maximal heavy cubes.
//!
//! A cube `Q` is heavy at level `λ` when `∫_Q f dμ > λ·μ(2Q)`. Only a finite
//! window of generations matters for a finite measure:
//!
//! * at `k_max`, with `3·2^{-k_max}` below the smallest atom separation, a
//!   cube and its double hold a single atom, so the ratio is `f(x)` there and
//!   at every finer generation;
//! * at `k_min`, with `2^{-k_min} >= 2·diam(supp μ)`, the double of any cube
//!   meeting the support holds all of it, so the ratio is at most
//!   `‖f‖₁/‖μ‖ < λ` there and at every coarser generation.
//!
//! Heavy cubes are found through integer lattice indices: the double of a
//! generation-`k` cube is a `4ⁿ` block of generation-`k+1` cells.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::{CubeId, GridFamily};
use crate::measure::DiscreteMeasure;
use crate::rational::Rational;

/// Inclusive generation range `[k_min, k_max]` searched for heavy cubes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub k_min: i64,
    pub k_max: i64,
}

impl Window {
    pub fn for_measure(mu: &DiscreteMeasure) -> Window {
        let diam = mu.diameter();
        let k_min = if diam.is_positive() {
            -((&diam + &diam).floor_log2() + 1)
        } else {
            0
        };
        let k_max = match mu.min_separation() {
            // 2^{-k_max} <= sep/3 / 2 < sep/3
            Some(sep) => -(sep / Rational::integer(3)).floor_log2() + 1,
            None => k_min,
        };
        Window { k_min, k_max: k_max.max(k_min) }
    }

    pub fn widened(&self, extra: i64) -> Window {
        Window { k_min: self.k_min - extra, k_max: self.k_max + extra }
    }

    pub fn generations(&self) -> std::ops::RangeInclusive<i64> {
        self.k_min..=self.k_max
    }
}

/// `M f(x) = sup_{x ∈ Q} ∫_Q f dμ / μ(2Q)` at atom `atom`, exactly.
///
/// Each filtration's chain of cubes at `x` is walked from `window.k_max` up.
/// Beyond `k_min` the double of every chain cube holds the whole support, so
/// the ratio only depends on the chain's trace. The walk continues until that
/// trace is frozen: side above `p` times the coordinate radius and, for the
/// shifted filtrations, a negative diagonal residue, after which the chain
/// cube contains a fixed centered cube of side `2s/p`.
pub fn maximal_function(mu: &DiscreteMeasure, family: &GridFamily, atom: usize, window: &Window) -> Result<Rational> {
    let x = &mu
        .atoms()
        .get(atom)
        .ok_or_else(|| Error::InvalidArgument(format!("atom index {atom} out of range")))?
        .x;
    let radius = mu.coordinate_radius().max(Rational::one());
    let settle = &radius * Rational::integer(family.p());
    let two = Rational::integer(2);
    let mut best = mu.atoms()[atom].f.clone();
    for m in family.filtrations() {
        let mut k = window.k_max;
        loop {
            let q = family.cube_box(&family.locate(m, k, x));
            let ratio = mu.integral_f(&q) / mu.box_mass(&q.scaled(&two));
            if ratio > best {
                best = ratio;
            }
            let frozen = k <= window.k_min
                && q.side > settle
                && (m == 0 || family.residue(m, k).expect("valid filtration") < 0);
            if frozen {
                break;
            }
            k -= 1;
        }
    }
    Ok(best)
}

/// Per-generation lattice data for one filtration.
struct Generation {
    /// Lattice index of each atom.
    index: Vec<Vec<i128>>,
    cells: HashMap<Vec<i128>, Cell>,
}

struct Cell {
    atoms: Vec<usize>,
    mass: Rational,
    f_integral: Rational,
}

/// Lattice indices of every atom in every filtration over a generation range,
/// plus the integer shift between consecutive generations.
pub(crate) struct GridIndex<'a> {
    family: &'a GridFamily,
    k_min: i64,
    // [m][k - k_min], covering k_min..=k_max + 1
    gens: Vec<Vec<Generation>>,
    // [m][k - k_min]: lower corner of cell j at generation k sits at cell 2j + shift at k+1
    shift: Vec<Vec<i128>>,
}

impl<'a> GridIndex<'a> {
    pub(crate) fn build(mu: &DiscreteMeasure, family: &'a GridFamily, window: &Window) -> Self {
        let k_min = window.k_min;
        let k_top = window.k_max + 1;
        let mut gens = Vec::with_capacity(family.filtration_count());
        let mut shift = Vec::with_capacity(family.filtration_count());
        for m in family.filtrations() {
            let mut per_k = Vec::new();
            let mut shifts = Vec::new();
            for k in k_min..=k_top {
                let index: Vec<Vec<i128>> = mu.atoms().iter().map(|a| family.locate(m, k, &a.x).j).collect();
                let mut cells: HashMap<Vec<i128>, Cell> = HashMap::new();
                for (i, (j, a)) in index.iter().zip(mu.atoms()).enumerate() {
                    let cell = cells.entry(j.clone()).or_insert_with(|| Cell {
                        atoms: Vec::new(),
                        mass: Rational::zero(),
                        f_integral: Rational::zero(),
                    });
                    cell.atoms.push(i);
                    cell.mass += &a.mass;
                    cell.f_integral += &a.f * &a.mass;
                }
                per_k.push(Generation { index, cells });
                let delta = (family.offset_unchecked(m, k) - family.offset_unchecked(m, k + 1)).mul_pow2(k + 1);
                assert!(delta.is_integer(), "generation {k} corners are not generation {} corners", k + 1);
                shifts.push(delta.numer().try_into().expect("shift fits i128"));
            }
            gens.push(per_k);
            shift.push(shifts);
        }
        GridIndex { family, k_min, gens, shift }
    }

    fn generation(&self, m: usize, k: i64) -> &Generation {
        &self.gens[m][(k - self.k_min) as usize]
    }

    pub(crate) fn atom_cell(&self, m: usize, k: i64, atom: usize) -> &[i128] {
        &self.generation(m, k).index[atom]
    }

    /// Cells of generation `k + 1` making up the double of cell `j` at `k`.
    fn double_block(&self, m: usize, k: i64, j: &[i128]) -> Vec<Vec<i128>> {
        let s = self.shift[m][(k - self.k_min) as usize];
        let base: Vec<i128> = j.iter().map(|ji| 2 * ji + s).collect();
        let mut out = vec![Vec::with_capacity(base.len())];
        for b in &base {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (b - 1..=b + 2).map(move |v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }

    fn double_mass(&self, m: usize, k: i64, j: &[i128]) -> Rational {
        let finer = self.generation(m, k + 1);
        self.double_block(m, k, j)
            .iter()
            .filter_map(|c| finer.cells.get(c))
            .map(|c| &c.mass)
            .sum()
    }

    fn double_atoms(&self, m: usize, k: i64, j: &[i128]) -> Vec<usize> {
        let finer = self.generation(m, k + 1);
        let mut atoms: Vec<usize> = self
            .double_block(m, k, j)
            .iter()
            .filter_map(|c| finer.cells.get(c))
            .flat_map(|c| c.atoms.iter().copied())
            .collect();
        atoms.sort_unstable();
        atoms
    }

    /// Heavy cells per `(m, k)`, each with the atoms it holds.
    fn heavy(&self, lambda: &Rational, window: &Window) -> HashMap<CubeId, Vec<usize>> {
        let mut out = HashMap::new();
        for m in self.family.filtrations() {
            for k in window.generations() {
                for (j, cell) in &self.generation(m, k).cells {
                    if !cell.f_integral.is_positive() {
                        continue;
                    }
                    if cell.f_integral > lambda * self.double_mass(m, k, j) {
                        out.insert(CubeId::new(m, k, j.clone()), cell.atoms.clone());
                    }
                }
            }
        }
        out
    }
}

/// The level set as maximal heavy cubes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSet {
    pub lambda: Rational,
    /// The maximal heavy cubes `Q_j`, sorted by `(m, k, j)`.
    pub cubes: Vec<CubeId>,
    /// Atoms inside each `Q_j`.
    pub members: Vec<Vec<usize>>,
    /// Per atom, the number of `Q_j` containing it.
    pub overlap: Vec<u32>,
}

impl LevelSet {
    /// `w_j(x) = χ_{Q_j}(x) / Σ_k χ_{Q_k}(x)` at every atom.
    pub fn weight(&self, j: usize) -> Vec<Rational> {
        let mut w = vec![Rational::zero(); self.overlap.len()];
        for &a in &self.members[j] {
            w[a] = Rational::ratio(1, self.overlap[a] as i64);
        }
        w
    }

    pub fn in_union(&self, atom: usize) -> bool {
        self.overlap[atom] > 0
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }
}

fn check_level(mu: &DiscreteMeasure, lambda: &Rational) -> Result<()> {
    let mean = mu.mean_f();
    if *lambda <= mean {
        return Err(Error::Hypothesis(format!("level {lambda} is not above ‖f‖₁/‖μ‖ = {mean}")));
    }
    Ok(())
}

/// Heavy cubes in the window, keeping only the coarsest cube of each run of
/// same-filtration ancestors that share both `Q ∩ supp μ` and `2Q ∩ supp μ`.
pub fn heavy_cubes(mu: &DiscreteMeasure, family: &GridFamily, lambda: &Rational, window: &Window) -> Result<Vec<CubeId>> {
    check_level(mu, lambda)?;
    let index = GridIndex::build(mu, family, window);
    let heavy = index.heavy(lambda, window);
    let mut kept: Vec<CubeId> = heavy
        .iter()
        .filter(|(id, atoms)| {
            if id.k <= window.k_min {
                return true;
            }
            let rep = atoms[0];
            let parent = CubeId::new(id.m, id.k - 1, index.atom_cell(id.m, id.k - 1, rep).to_vec());
            match heavy.get(&parent) {
                Some(parent_atoms) => {
                    parent_atoms != *atoms
                        || index.double_atoms(parent.m, parent.k, &parent.j) != index.double_atoms(id.m, id.k, &id.j)
                }
                None => true,
            }
        })
        .map(|(id, _)| id.clone())
        .collect();
    kept.sort();
    Ok(kept)
}

/// Heavy cubes not strictly contained in any other heavy cube of the family.
pub fn maximal_heavy(mu: &DiscreteMeasure, family: &GridFamily, lambda: &Rational, window: &Window) -> Result<LevelSet> {
    check_level(mu, lambda)?;
    let index = GridIndex::build(mu, family, window);
    let heavy = index.heavy(lambda, window);
    let mut chosen: Vec<(CubeId, Vec<usize>)> = Vec::new();
    for (id, atoms) in &heavy {
        let rep = atoms[0];
        let own = family.cube_box(id);
        // a strictly larger cube has a strictly smaller generation and holds rep
        let dominated = family.filtrations().any(|m| {
            (window.k_min..id.k).any(|k| {
                let cand = CubeId::new(m, k, index.atom_cell(m, k, rep).to_vec());
                heavy.contains_key(&cand) && (m == id.m || family.cube_box(&cand).contains_cube_unchecked(&own))
            })
        });
        if !dominated {
            chosen.push((id.clone(), atoms.clone()));
        }
    }
    chosen.sort();
    let mut overlap = vec![0u32; mu.len()];
    for (_, atoms) in &chosen {
        for &a in atoms {
            overlap[a] += 1;
        }
    }
    let (cubes, members) = chosen.into_iter().unzip();
    Ok(LevelSet { lambda: lambda.clone(), cubes, members, overlap })
}
