//! Dyadic nondoubling Calderón–Zygmund decomposition of a finite measure.
//!
//! Given `f >= 0` on a [`DiscreteMeasure`] and a level `λ > ‖f‖₁/‖μ‖`:
//!
//! 1. the level set is the union of the maximal heavy cubes `Q_j`
//!    ([`maximal_heavy`]), with overlap weights `w_j = χ_{Q_j}/Σ_k χ_{Q_k}`;
//! 2. each `Q_j` gets an `(α,β)`-doubling cube `R_j ⊇ 3Q_j` from a
//!    [`Selector`];
//! 3. the `R_j` are processed by nondecreasing side. Piece `ℓ` is
//!    `φ_ℓ = γ_ℓ·χ_{A_ℓ}`, where `A_ℓ` is the part of `R_ℓ` on which the
//!    pieces already placed sum to at most `2βλ`, and
//!    `γ_ℓ·μ(A_ℓ) = ∫ f w_ℓ dμ`;
//! 4. `g = f·χ_{outside ∪Q_j} + Σ φ_j` and `b = Σ (f w_j − φ_j)`.
//!
//! The construction guarantees `μ(A_ℓ) >= μ(R_ℓ)/2` and `γ_ℓ <= 2βλ`. Both
//! are checked as each piece is placed, and a failure aborts with
//! [`Error::Violation`]. [`verify_czd`] re-derives every claimed property
//! from the measure.

mod annuli;
mod level;
mod verify;

use serde::{Deserialize, Serialize};

pub use annuli::{annuli_bound_check, smallest_doubling_container, AnnuliReport};
pub use level::{heavy_cubes, maximal_function, maximal_heavy, LevelSet, Window};
pub use verify::{verify_czd, Check, VerificationReport};

use crate::covering::cover_box;
use crate::error::{Error, Result};
use crate::grids::{CubeId, GridFamily};
use crate::measure::{DiscreteMeasure, DoublingParams};
use crate::rational::Rational;

/// Chooses the doubling cube `R_j` for a maximal cube `Q_j`.
pub trait Selector {
    fn select(&self, mu: &DiscreteMeasure, family: &GridFamily, q: &CubeId, params: &DoublingParams) -> Result<CubeId>;
}

/// Covers `3Q_j` by a cube of the family, then climbs to the first doubling cube.
#[derive(Clone, Copy, Debug, Default)]
pub struct DefaultSelector;

impl Selector for DefaultSelector {
    fn select(&self, mu: &DiscreteMeasure, family: &GridFamily, q: &CubeId, params: &DoublingParams) -> Result<CubeId> {
        default_r_selector(mu, family, q, params)
    }
}

impl<F> Selector for F
where
    F: Fn(&DiscreteMeasure, &GridFamily, &CubeId, &DoublingParams) -> Result<CubeId>,
{
    fn select(&self, mu: &DiscreteMeasure, family: &GridFamily, q: &CubeId, params: &DoublingParams) -> Result<CubeId> {
        self(mu, family, q, params)
    }
}

pub fn default_r_selector(mu: &DiscreteMeasure, family: &GridFamily, q: &CubeId, params: &DoublingParams) -> Result<CubeId> {
    let tripled = family.cube_box(q).scaled(&Rational::integer(3));
    let start = cover_box(family, &tripled)?.cube;
    let r = mu.doubling_ancestor(family, &start, params)?;
    let r_box = family.cube_box(&r);
    if !r_box.contains_cube_unchecked(&tripled) || !mu.is_doubling(&r_box, params) {
        return Err(Error::Violation(format!("selected {r} for {q} is not a doubling cover of 3Q")));
    }
    Ok(r)
}

/// One piece `φ_j = γ_j·χ_{A_j}` of the decomposition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Piece {
    pub q: CubeId,
    pub r: CubeId,
    /// Atom indices of `A_j ⊆ R_j ∩ supp μ`.
    pub a: Vec<usize>,
    pub gamma: Rational,
    /// `∫ f w_j dμ`.
    pub target: Rational,
    /// Position in the processing order (nondecreasing side of `R_j`).
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CzDecomposition {
    pub params: DoublingParams,
    pub window: Window,
    pub level_set: LevelSet,
    /// Indexed like `level_set.cubes`.
    pub pieces: Vec<Piece>,
    pub g: Vec<Rational>,
    pub b: Vec<Rational>,
}

impl CzDecomposition {
    pub fn lambda(&self) -> &Rational {
        &self.level_set.lambda
    }

    /// `Σ_j φ_j` at every atom.
    pub fn phi_sum(&self) -> Vec<Rational> {
        let mut sum = vec![Rational::zero(); self.g.len()];
        for p in &self.pieces {
            for &a in &p.a {
                sum[a] += &p.gamma;
            }
        }
        sum
    }
}

/// Runs the decomposition with the default window and selector.
pub fn czd(mu: &DiscreteMeasure, family: &GridFamily, lambda: &Rational, params: &DoublingParams) -> Result<CzDecomposition> {
    czd_with(mu, family, lambda, params, &DefaultSelector, &Window::for_measure(mu))
}

pub fn czd_with(
    mu: &DiscreteMeasure,
    family: &GridFamily,
    lambda: &Rational,
    params: &DoublingParams,
    selector: &dyn Selector,
    window: &Window,
) -> Result<CzDecomposition> {
    if mu.dim() != family.dim() {
        return Err(Error::DimensionMismatch { expected: family.dim(), found: mu.dim() });
    }
    let level_set = maximal_heavy(mu, family, lambda, window)?;
    let atoms = mu.atoms();

    let mut pieces = Vec::with_capacity(level_set.cubes.len());
    for (j, q) in level_set.cubes.iter().enumerate() {
        let r = selector.select(mu, family, q, params)?;
        let target: Rational = level_set.members[j]
            .iter()
            .map(|&a| &atoms[a].f * &atoms[a].mass / Rational::integer(level_set.overlap[a]))
            .sum();
        pieces.push(Piece { q: q.clone(), r, a: Vec::new(), gamma: Rational::zero(), target, rank: 0 });
    }

    let mut order: Vec<usize> = (0..pieces.len()).collect();
    // smaller side = larger generation; stable, so equal keys keep Q order
    order.sort_by(|&x, &y| {
        let (rx, ry) = (&pieces[x].r, &pieces[y].r);
        ry.k.cmp(&rx.k).then_with(|| rx.cmp(ry))
    });

    let cap = Rational::integer(2) * &params.beta * lambda;
    let mut running = vec![Rational::zero(); mu.len()];
    for (rank, &l) in order.iter().enumerate() {
        let r_box = family.cube_box(&pieces[l].r);
        let in_r = mu.atoms_in(&r_box);
        let r_mass: Rational = in_r.iter().map(|&a| &atoms[a].mass).sum();
        let a_set: Vec<usize> = in_r.into_iter().filter(|&a| running[a] <= cap).collect();
        let a_mass: Rational = a_set.iter().map(|&a| &atoms[a].mass).sum();
        if a_mass.is_zero() || a_mass < r_mass.half() {
            return Err(Error::Violation(format!(
                "μ(A) = {a_mass} below μ(R)/2 = {} for R = {}",
                r_mass.half(),
                pieces[l].r
            )));
        }
        let gamma = &pieces[l].target / &a_mass;
        if gamma > cap {
            return Err(Error::Violation(format!("γ = {gamma} exceeds 2βλ = {cap} for R = {}", pieces[l].r)));
        }
        for &a in &a_set {
            running[a] += &gamma;
        }
        let piece = &mut pieces[l];
        piece.a = a_set;
        piece.gamma = gamma;
        piece.rank = rank;
    }

    // g = f outside ∪Q_j plus Σφ_j, b = Σ_j (f w_j − φ_j)
    let mut g = vec![Rational::zero(); mu.len()];
    let mut b = vec![Rational::zero(); mu.len()];
    for (i, atom) in atoms.iter().enumerate() {
        if !level_set.in_union(i) {
            g[i] = atom.f.clone();
        }
    }
    for (j, piece) in pieces.iter().enumerate() {
        for (i, w) in level_set.weight(j).iter().enumerate() {
            if !w.is_zero() {
                b[i] += &atoms[i].f * w;
            }
        }
        for &a in &piece.a {
            g[a] += &piece.gamma;
            b[a] -= &piece.gamma;
        }
    }

    Ok(CzDecomposition { params: params.clone(), window: *window, level_set, pieces, g, b })
}

/// A decomposition bundled with its measure and verification, as written to disk.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub dimension: usize,
    pub measure: DiscreteMeasure,
    pub decomposition: CzDecomposition,
    pub verification: VerificationReport,
}

impl Report {
    pub fn new(mu: &DiscreteMeasure, family: &GridFamily, decomposition: CzDecomposition) -> Self {
        let verification = verify_czd(mu, family, &decomposition);
        Report { dimension: mu.dim(), measure: mu.clone(), decomposition, verification }
    }
}
