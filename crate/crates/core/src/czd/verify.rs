//! Independent re-check of every quantitative claim about a decomposition.
//!
//! Each check records its worst-case slack `bound − value` as an exact
//! rational (zero for identities that hold, negative on failure). Nothing
//! is taken from the decomposition except the cubes, the sets `A_j`, the
//! `γ_j` and the per-atom `g`, `b`; all integrals are recomputed from `μ`.

use serde::{Deserialize, Serialize};

use super::CzDecomposition;
use crate::covering::cover_box;
use crate::geometry::Cube;
use crate::grids::GridFamily;
use crate::measure::DiscreteMeasure;
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub description: String,
    pub passed: bool,
    /// Minimum of `bound − value` over all instances; `None` if vacuous.
    pub slack: Option<Rational>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.id.as_str()).collect()
    }
}

/// Accumulates `value <= bound` instances for one check.
struct Tally {
    id: &'static str,
    description: &'static str,
    slack: Option<Rational>,
    failures: Vec<String>,
}

const MAX_LISTED: usize = 16;

impl Tally {
    fn new(id: &'static str, description: &'static str) -> Self {
        Tally { id, description, slack: None, failures: Vec::new() }
    }

    fn le(&mut self, value: &Rational, bound: &Rational, what: impl FnOnce() -> String) {
        let s = bound - value;
        if s.is_negative() && self.failures.len() < MAX_LISTED {
            self.failures.push(format!("{}: {value} > {bound}", what()));
        }
        self.slack = Some(match self.slack.take() {
            Some(old) => old.min(s),
            None => s,
        });
    }

    fn eq(&mut self, lhs: &Rational, rhs: &Rational, what: impl FnOnce() -> String) {
        let s = -(lhs - rhs).abs();
        if !s.is_zero() && self.failures.len() < MAX_LISTED {
            self.failures.push(format!("{}: {lhs} != {rhs}", what()));
        }
        self.slack = Some(match self.slack.take() {
            Some(old) => old.min(s),
            None => s,
        });
    }

    fn holds(&mut self, ok: bool, what: impl FnOnce() -> String) {
        let s = if ok { Rational::zero() } else { Rational::integer(-1) };
        self.eq(&s, &Rational::zero(), || format!("{} does not hold", what()));
    }

    fn finish(self) -> Check {
        let passed = self.slack.as_ref().map_or(true, |s| !s.is_negative());
        Check { id: self.id.into(), description: self.description.into(), passed, slack: self.slack, failures: self.failures }
    }
}

pub fn verify_czd(mu: &DiscreteMeasure, family: &GridFamily, dec: &CzDecomposition) -> VerificationReport {
    let atoms = mu.atoms();
    let ls = &dec.level_set;
    let lambda = &ls.lambda;
    let beta = &dec.params.beta;
    let two = Rational::integer(2);
    let cap2 = &two * beta * lambda;
    let cap4 = &cap2 * &two;
    let n1 = Rational::integer(family.dim() as i64 + 1);

    let mut heavy = Tally::new("heavy", "every Q_j is heavy: ∫_Q f > λ·μ(2Q)");
    let mut overlap = Tally::new("overlap", "overlap count at every atom of ∪Q_j lies in 1..n+1");
    let mut doubling = Tally::new("doubling", "R_j is (α,β)-doubling and 3Q_j ⊆ R_j");
    let mut a = Tally::new("a", "γ_j <= (2/μ(R_j))·∫_{Q_j} f and γ_j <= 2βλ");
    let mut b_chk = Tally::new("b", "Σ_j φ_j <= 4βλ at every atom");
    let mut c = Tally::new("c", "A_j ⊆ R_j");
    let mut d = Tally::new("d", "γ_j·μ(A_j) = ∫ f w_j exactly");
    let mut e = Tally::new("e", "∫_{Q_j} f/(n+1) <= ∫ f w_j <= ∫_{Q_j} f");
    let mut f_chk = Tally::new("f", "g + b = f at every atom");
    let mut g_chk = Tally::new("g", "∫ b_j = 0 for every j");
    let mut h = Tally::new("h", "‖b‖₁ <= 2‖f‖₁");
    let mut i_chk = Tally::new("i", "|g| <= (1 + 4β)λ at every atom");
    let mut j_chk = Tally::new("j", "S = cover(3R_j): ∫_{3R_j} f <= λ·μ(2S) and 2S ⊆ αR_j");
    let mut union = Tally::new("union", "Σ_j ∫ f w_j = ∫_{∪Q_j} f");

    // overlap counts, recomputed from the cube boxes
    let q_boxes: Vec<Cube> = ls.cubes.iter().map(|q| family.cube_box(q)).collect();
    let counts: Vec<usize> = atoms.iter().map(|at| q_boxes.iter().filter(|b| b.contains_point(&at.x)).count()).collect();
    for (i, &k) in counts.iter().enumerate() {
        if k > 0 {
            overlap.le(&Rational::integer(k as i64), &n1, || format!("atom {i}"));
        }
    }

    let mut phi = vec![Rational::zero(); atoms.len()];
    let mut target_total = Rational::zero();
    for (jj, piece) in dec.pieces.iter().enumerate() {
        let q_box = &family.cube_box(&piece.q);
        let q_int = mu.integral_f(q_box);
        heavy.le(&(lambda * mu.box_mass(&q_box.scaled(&two))), &q_int, || format!("Q_{jj} = {}", piece.q));

        let r_box = family.cube_box(&piece.r);
        let r_mass = mu.box_mass(&r_box);
        let tripled = q_box.scaled(&Rational::integer(3));
        doubling.holds(
            mu.is_doubling(&r_box, &dec.params) && r_box.contains_cube_unchecked(&tripled),
            || format!("R_{jj} = {}", piece.r),
        );

        // target recomputed from the overlap counts
        let target: Rational = atoms
            .iter()
            .zip(&counts)
            .filter(|(at, _)| q_box.contains_point(&at.x))
            .map(|(at, &k)| &at.f * &at.mass / Rational::integer(k as i64))
            .sum();
        target_total += &target;

        if r_mass.is_positive() {
            a.le(&piece.gamma, &(&two * &q_int / &r_mass), || format!("j = {jj}, bound by μ(R)"));
        }
        a.le(&piece.gamma, &cap2, || format!("j = {jj}, bound 2βλ"));

        let all_in_r = piece.a.iter().all(|&x| x < atoms.len() && r_box.contains_point(&atoms[x].x));
        c.holds(all_in_r, || format!("A_{jj} ⊆ R_{jj}"));

        let a_mass: Rational = piece.a.iter().filter(|&&x| x < atoms.len()).map(|&x| &atoms[x].mass).sum();
        d.eq(&(&piece.gamma * &a_mass), &target, || format!("j = {jj}"));
        e.le(&(&q_int / &n1), &target, || format!("j = {jj}, lower"));
        e.le(&target, &q_int, || format!("j = {jj}, upper"));

        // ∫ b_j = ∫ f w_j − γ_j μ(A_j), with b_j built per atom
        let b_j: Rational = atoms
            .iter()
            .enumerate()
            .map(|(x, at)| {
                let w = if q_box.contains_point(&at.x) {
                    Rational::one() / Rational::integer(counts[x] as i64)
                } else {
                    Rational::zero()
                };
                let in_a = piece.a.contains(&x);
                let phi_x = if in_a { piece.gamma.clone() } else { Rational::zero() };
                (&at.f * w - phi_x) * &at.mass
            })
            .sum();
        g_chk.eq(&b_j, &Rational::zero(), || format!("j = {jj}"));

        for &x in piece.a.iter().filter(|&&x| x < atoms.len()) {
            phi[x] += &piece.gamma;
        }

        let s = cover_box(family, &r_box.scaled(&Rational::integer(3)));
        match s {
            Ok(s) => {
                let s_box = family.cube_box(&s.cube);
                let r3 = r_box.scaled(&Rational::integer(3));
                j_chk.le(&mu.integral_f(&r3), &(lambda * mu.box_mass(&s_box.scaled(&two))), || {
                    format!("ℓ = {jj}, S = {}", s.cube)
                });
                j_chk.holds(r_box.scaled(&dec.params.alpha).contains_cube_unchecked(&s_box.scaled(&two)), || {
                    format!("2S ⊆ αR for ℓ = {jj}")
                });
            }
            Err(err) => j_chk.holds(false, || format!("covering 3R_{jj}: {err}")),
        }
    }

    let union_int: Rational = atoms.iter().zip(&counts).filter(|(_, &k)| k > 0).map(|(at, _)| &at.f * &at.mass).sum();
    union.eq(&target_total, &union_int, || "Σ target".into());

    let bound_g = (Rational::one() + Rational::integer(4) * beta) * lambda;
    let mut b_l1 = Rational::zero();
    let sized = dec.g.len() == atoms.len() && dec.b.len() == atoms.len();
    for (x, at) in atoms.iter().enumerate().filter(|_| sized) {
        b_chk.le(&phi[x], &cap4, || format!("atom {x}"));
        f_chk.eq(&(&dec.g[x] + &dec.b[x]), &at.f, || format!("atom {x}"));
        i_chk.le(&dec.g[x].abs(), &bound_g, || format!("atom {x}"));
        b_l1 += dec.b[x].abs() * &at.mass;
    }
    if !sized {
        f_chk.holds(false, || "g, b have one value per atom".into());
    }
    h.le(&b_l1, &(&two * mu.f_l1()), || "‖b‖₁".into());

    VerificationReport {
        checks: vec![
            heavy.finish(),
            overlap.finish(),
            doubling.finish(),
            a.finish(),
            b_chk.finish(),
            c.finish(),
            d.finish(),
            e.finish(),
            f_chk.finish(),
            g_chk.finish(),
            h.finish(),
            i_chk.finish(),
            j_chk.finish(),
            union.finish(),
        ],
    }
}
