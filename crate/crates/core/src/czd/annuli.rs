//! The annuli bound: `∫_{R∖Q} dμ(x)/|x − x_Q|^d` is controlled by
//! `μ(Q_N)/ℓ(Q_N)^d`, where `Q_j = (cα)^j Q` and `Q_N` is the first
//! `(cα, β)`-doubling dilate, provided `R` is the smallest doubling cube of
//! the family containing `Q`.
//!
//! Splitting `R∖Q` into the shells `Q_j∖Q_{j−1}`, `j = 1..=N+1`, and using
//! `|x − x_Q| >= ℓ(Q_{j−1})/2` on each shell together with the chain
//! `μ(Q_j) <= μ(Q_{j+1})/β` gives
//!
//! ```text
//! I <= (2cα)^d · (Σ_{i>=0} ((cα)^d/β)^i + β/(cα)^d) · μ(Q_N)/ℓ(Q_N)^d.
//! ```
//!
//! The chain starts at `j = 0`, so `Q` itself must not be `(cα, β)`-doubling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Cube;
use crate::grids::{CubeId, GridFamily};
use crate::measure::{covering_constant, DiscreteMeasure, DoublingParams};
use crate::rational::Rational;

/// Generations scanned above `Q` before giving up.
const SCAN_LIMIT: i64 = 256;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnuliReport {
    /// Index of the first `(cα, β)`-doubling dilate.
    pub n: u32,
    /// `μ(Q_j)` for `j = 0..=N+1`.
    pub masses: Vec<Rational>,
    pub chain_ok: bool,
    pub r_in_3c_qn: bool,
    pub three_c_qn_in_qn1: bool,
    /// Certified upper bound on the annuli integral.
    pub integral: Rational,
    /// Certified lower bound on `C_chain·μ(Q_N)/ℓ(Q_N)^d`.
    pub bound: Rational,
    pub c_chain: Rational,
    pub passed: bool,
}

/// The smallest `(α,β)`-doubling cube of the family containing `q`,
/// scanning generations from the one of side `>= side(q)` upward and
/// filtrations `0..=n` within each.
pub fn smallest_doubling_container(
    mu: &DiscreteMeasure,
    family: &GridFamily,
    q: &Cube,
    params: &DoublingParams,
) -> Result<CubeId> {
    let k_start = -q.side.floor_log2();
    for k in (k_start - SCAN_LIMIT..=k_start).rev() {
        for m in family.filtrations() {
            let id = family.locate(m, k, &q.lower);
            let b = family.cube_box(&id);
            if b.contains_cube_unchecked(q) && mu.is_doubling(&b, params) {
                return Ok(id);
            }
        }
    }
    Err(Error::NotFound(format!("no doubling cube contains {q} within {SCAN_LIMIT} generations")))
}

/// Runs the diagnostic for `q ⊆ R`. Fails with [`Error::Hypothesis`] if a
/// doubling cube of the family with side below `side(R)` contains `q`, or
/// if `q` is itself `(cα, β)`-doubling.
pub fn annuli_bound_check(
    mu: &DiscreteMeasure,
    family: &GridFamily,
    q: &Cube,
    r: &CubeId,
    params: &DoublingParams,
) -> Result<AnnuliReport> {
    q.lower.check_dim(family.dim())?;
    let r_box = family.cube_box(r);
    if !r_box.contains_cube_unchecked(q) {
        return Err(Error::Hypothesis(format!("{q} is not inside R = {r}")));
    }
    let below = smallest_doubling_container(mu, family, q, params)?;
    if below.side() < r.side() {
        return Err(Error::Hypothesis(format!("{below} is a smaller doubling cube containing {q}")));
    }

    let d = mu.growth_dim();
    let c = covering_constant(family);
    let ca = &c * &params.alpha;
    let chain_params = DoublingParams { alpha: ca.clone(), beta: params.beta.clone() };
    if mu.is_doubling(q, &chain_params) {
        return Err(Error::Hypothesis(format!("{q} is already (cα, β)-doubling")));
    }
    let ca_d_hi = ca.pow_upper(d);
    let ca_d_lo = ca.pow_lower(d);
    if params.beta <= ca_d_hi {
        return Err(Error::Hypothesis(format!("β = {} does not exceed (cα)^d", params.beta)));
    }

    // the dilates grow geometrically, so N is small once they hold the support
    let mut dilates = vec![q.clone()];
    let n = loop {
        let j = dilates.len();
        let next = dilates[j - 1].scaled(&ca);
        dilates.push(next);
        if j >= 1 && mu.is_doubling(&dilates[j], &chain_params) {
            break j;
        }
        if j > 4096 {
            return Err(Error::Violation(format!("no (cα, β)-doubling dilate of {q}")));
        }
    };
    dilates.push(dilates[n].scaled(&ca));
    let masses: Vec<Rational> = dilates.iter().map(|b| mu.box_mass(b)).collect();

    let chain_ok = (0..n).all(|j| &masses[j] * &params.beta <= masses[j + 1]);
    let qn3 = dilates[n].scaled(&(Rational::integer(3) * &c));
    let r_in_3c_qn = qn3.contains_cube_unchecked(&r_box);
    let three_c_qn_in_qn1 = dilates[n + 1].contains_cube_unchecked(&qn3);

    let center = q.center();
    let mut integral = Rational::zero();
    for atom in mu.atoms() {
        if r_box.contains_point(&atom.x) && !q.contains_point(&atom.x) {
            // |x − x_Q|^d from below, via (|x − x_Q|²)^{d/2}
            let dist_d = atom.x.dist2(&center).pow_lower(&d.half());
            integral += &atom.mass / dist_d;
        }
    }

    let ratio_lo = &ca_d_lo / &params.beta;
    let geometric_lo = Rational::one() / (Rational::one() - ratio_lo);
    let c_chain = (Rational::integer(2) * &ca).pow_lower(d) * (geometric_lo + &params.beta / &ca_d_hi);
    let side_d_hi = dilates[n].side.pow_upper(d);
    let bound = &c_chain * &masses[n] / side_d_hi;

    let passed = chain_ok && r_in_3c_qn && three_c_qn_in_qn1 && integral <= bound;
    Ok(AnnuliReport { n: n as u32, masses, chain_ok, r_in_3c_qn, three_c_qn_in_qn1, integral, bound, c_chain, passed })
}
