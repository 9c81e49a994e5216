//! Seeded experiment drivers, one per acceptance criterion.
//!
//! Every driver takes an explicit seed and size, is deterministic, and
//! returns an [`Outcome`]. Random rationals are drawn from documented
//! integer ranges through a ChaCha8 stream, so runs are reproducible
//! across machines:
//!
//! * ball centers: `a/b` with `a ∈ [−10⁶, 10⁶]`, `b ∈ [1, 1000]`;
//! * ball radii: `2^e·(1 + u/2¹⁶)` with `e ∈ [−40, 40)`, `u ∈ [0, 2¹⁶)`;
//! * CZ instances: see [`random_instance`].

use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::{cover_ball, covered_within, uncovered_witness};
use crate::czd::{
    annuli_bound_check, czd_with, maximal_function, maximal_heavy, smallest_doubling_container, verify_czd,
    DefaultSelector, Window,
};
use crate::czo::{apply_truncated, default_eps, lipschitz_graph_measure, weak11_statistic, Kernel};
use crate::error::Result;
use crate::geometry::{Ball, Cube, Point};
use crate::grids::{CubeId, GridFamily};
use crate::measure::{Atom, DiscreteMeasure, DoublingParams};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub millis: u128,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] criterion {}: {} — {} ({} ms)", self.id, self.name, self.detail, self.millis)
    }
}

fn outcome(id: u32, name: &str, start: Instant, failures: usize, detail: String) -> Outcome {
    Outcome { id, name: name.into(), passed: failures == 0, detail, millis: start.elapsed().as_millis() }
}

/// Sizes for the full battery; [`SuiteSizes::quick`] is a smoke-test version.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteSizes {
    pub balls_per_dim: usize,
    pub czd_instances: usize,
    pub oracle_instances: usize,
    pub annuli_pairs: usize,
    pub weak11_per_size: usize,
}

impl SuiteSizes {
    pub fn full() -> Self {
        SuiteSizes {
            balls_per_dim: 100_000,
            czd_instances: 1000,
            oracle_instances: 200,
            annuli_pairs: 1000,
            weak11_per_size: 20,
        }
    }

    pub fn quick() -> Self {
        SuiteSizes { balls_per_dim: 2000, czd_instances: 40, oracle_instances: 20, annuli_pairs: 60, weak11_per_size: 4 }
    }
}

pub fn run_all(seed: u64, sizes: &SuiteSizes) -> Vec<Outcome> {
    let mut out = vec![covering(seed, sizes.balls_per_dim), optimality(), lattice(seed)];
    let (b, w) = theorem_b(seed, sizes.czd_instances);
    out.push(b);
    out.push(oracle(seed, sizes.oracle_instances));
    out.push(annuli(seed, sizes.annuli_pairs));
    out.push(weak11(seed, sizes.weak11_per_size));
    out.push(w);
    out.sort_by_key(|o| o.id);
    out
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn random_ball<R: Rng>(rng: &mut R, dim: usize) -> Ball {
    let center = Point((0..dim).map(|_| Rational::ratio(rng.gen_range(-1_000_000..=1_000_000), rng.gen_range(1..=1000))).collect());
    let e = rng.gen_range(-40..40);
    let radius = Rational::pow2(e) * Rational::ratio(65536 + rng.gen_range(0..65536), 65536);
    Ball::new(center, radius).expect("positive radius")
}

/// Criterion 1: every random ball is covered with ratio at most `2p`.
pub fn covering(seed: u64, per_dim: usize) -> Outcome {
    let start = Instant::now();
    let mut failures = 0;
    let mut worst = Vec::new();
    for n in 1..=5usize {
        let family = GridFamily::new(n).expect("positive dimension");
        let bound = family.ratio_bound();
        let chunks = 64u64;
        let per_chunk = per_dim.div_ceil(chunks as usize);
        let results: Vec<(usize, Rational)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = rng_for(seed, (n as u64) << 32 | c);
                let mut bad = 0;
                let mut max_ratio = Rational::zero();
                let todo = per_chunk.min(per_dim.saturating_sub(c as usize * per_chunk));
                for _ in 0..todo {
                    let ball = random_ball(&mut rng, n);
                    match cover_ball(&family, &ball) {
                        Ok(r) => {
                            let cube = family.cube_box(&r.cube);
                            let rb = ball.circumscribed();
                            let ratio = &cube.side / &rb.side;
                            if !cube.contains_cube_unchecked(&rb) || ratio > bound {
                                bad += 1;
                            }
                            max_ratio = max_ratio.max(ratio);
                        }
                        Err(_) => bad += 1,
                    }
                }
                (bad, max_ratio)
            })
            .collect();
        failures += results.iter().map(|r| r.0).sum::<usize>();
        let max = results.into_iter().map(|r| r.1).max().unwrap_or_default();
        worst.push(format!("n={n}: max ratio {max} <= {bound}"));
    }
    outcome(1, "covering theorem", start, failures, format!("{per_dim} balls per n; {failures} failures; {}", worst.join(", ")))
}

/// Criterion 2: every `n`-subset of the filtrations misses some ball.
pub fn optimality() -> Outcome {
    let start = Instant::now();
    let mut failures = 0;
    let mut checked = 0;
    for n in 1..=4usize {
        let family = GridFamily::new(n).expect("positive dimension");
        let ratio = family.ratio_bound();
        for skip in family.filtrations() {
            let subset: Vec<usize> = family.filtrations().filter(|&m| m != skip).collect();
            checked += 1;
            match uncovered_witness(&family, &subset, &ratio) {
                Ok(ball) if !covered_within(&family, &subset, &ball.circumscribed(), &ratio) => {}
                _ => failures += 1,
            }
        }
    }
    outcome(2, "optimality witnesses", start, failures, format!("{checked} subsets, {failures} without certified witness"))
}

/// Criterion 3: nesting, partition, lattice membership and vertex disjointness.
pub fn lattice(seed: u64) -> Outcome {
    let start = Instant::now();
    let mut rng = rng_for(seed, 3);
    let mut failures = 0;
    let mut checks = 0usize;
    for n in 1..=5usize {
        let family = GridFamily::new(n).expect("positive dimension");
        let p = Rational::integer(family.p());
        for k in -20i64..=20 {
            // vertex sets of distinct filtrations are disjoint on every axis
            for m in family.filtrations() {
                for m2 in family.filtrations().filter(|&m2| m2 > m) {
                    checks += 1;
                    let diff = (family.offset_unchecked(m, k) - family.offset_unchecked(m2, k)).mul_pow2(k);
                    if diff.is_integer() {
                        failures += 1;
                    }
                }
            }
            for m in family.filtrations() {
                for _ in 0..4 {
                    let j: Vec<i128> = (0..n).map(|_| rng.gen_range(-1_000_000i128..=1_000_000)).collect();
                    let id = CubeId::new(m, k, j);
                    let b = family.cube_box(&id);
                    checks += 4;
                    if !family.in_lattice(&b.lower, k) || !(&b.lower.0[0] * &p).mul_pow2(k).is_integer() {
                        failures += 1;
                    }
                    // nesting: the parent holds the cube
                    if !family.cube_box(&family.parent(&id)).contains_cube_unchecked(&b) {
                        failures += 1;
                    }
                    // partition: 2^n distinct children, each inside, of total volume |Q|
                    let kids = family.children(&id);
                    let distinct: BTreeSet<&CubeId> = kids.iter().collect();
                    let inside = kids.iter().all(|c| b.contains_cube_unchecked(&family.cube_box(c)));
                    if distinct.len() != 1 << n || !inside || kids.iter().any(|c| c.k != k + 1) {
                        failures += 1;
                    }
                    // locate agrees with the box at a random interior point
                    let t = Rational::ratio(rng.gen_range(0..1024), 1024);
                    let x = Point(b.lower.0.iter().map(|c| c + &b.side * &t).collect());
                    if family.locate(m, k, &x) != id {
                        failures += 1;
                    }
                }
            }
        }
    }
    outcome(3, "lattice and grid invariants", start, failures, format!("{checks} checks, {failures} failures"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Uniform,
    NearLine,
    Clustered,
}

/// A random measure in dimension `n` with density and a level above the mean.
///
/// * `Uniform`: coordinates `a/64`, `a ∈ [−512, 512]`, growth `d = n`;
/// * `NearLine`: points `(t, s·t + e)` with `t = a/64`, slope `s = b/4`,
///   `b ∈ [−4, 4]`, jitter `e ∈ {0, ±1/4096}`, growth `d = 1`;
/// * `Clustered`: up to five centers as above plus offsets `a/4096`,
///   `a ∈ [−64, 64]`, growth `d = n`.
///
/// Masses are `u/16`, `u ∈ [1, 64]`; densities `u/4`, `u ∈ [0, 40]`, with
/// one atom in ten spiked by a factor `10..=50`. The level is
/// `mean·(1 + v/8)`, `v ∈ [1, 24]`.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, size: usize, shape: Shape) -> (DiscreteMeasure, Rational) {
    let mut coords: BTreeSet<Vec<Rational>> = BTreeSet::new();
    let centers: Vec<Vec<Rational>> =
        (0..rng.gen_range(1..=5)).map(|_| (0..n).map(|_| Rational::ratio(rng.gen_range(-512..=512), 64)).collect()).collect();
    let slope = Rational::ratio(rng.gen_range(-4..=4), 4);
    let mut attempts = 0;
    while coords.len() < size && attempts < 50 * size {
        attempts += 1;
        let x: Vec<Rational> = match shape {
            Shape::Uniform => (0..n).map(|_| Rational::ratio(rng.gen_range(-512..=512), 64)).collect(),
            Shape::NearLine => {
                let t = Rational::ratio(rng.gen_range(-512..=512), 64);
                let mut x = vec![t.clone()];
                if n > 1 {
                    let e = Rational::ratio(rng.gen_range(-1..=1), 4096);
                    x.push(&slope * &t + e);
                    x.extend((2..n).map(|_| Rational::zero()));
                }
                x
            }
            Shape::Clustered => {
                let c = centers.choose(rng).expect("at least one center");
                c.iter().map(|ci| ci + Rational::ratio(rng.gen_range(-64..=64), 4096)).collect()
            }
        };
        coords.insert(x);
    }
    let atoms: Vec<Atom> = coords
        .into_iter()
        .map(|x| {
            let mut f = Rational::ratio(rng.gen_range(0..=40), 4);
            if rng.gen_range(0..10) == 0 {
                f = f * Rational::integer(rng.gen_range(10..=50));
            }
            Atom { x: Point(x), mass: Rational::ratio(rng.gen_range(1..=64), 16), f }
        })
        .collect();
    let d = if shape == Shape::NearLine { Rational::one() } else { Rational::integer(n as i64) };
    let mu = DiscreteMeasure::new(n, d, atoms).expect("distinct points with positive mass");
    let lambda = mu.mean_f() * Rational::ratio(8 + rng.gen_range(1..=24), 8);
    // an all-zero density has mean 0; any positive level is then valid
    let lambda = if lambda.is_positive() { lambda } else { Rational::one() };
    (mu, lambda)
}

fn instance_for(seed: u64, i: usize, max_size: usize) -> (DiscreteMeasure, Rational) {
    let mut rng = rng_for(seed, 4 << 32 | i as u64);
    let n = 1 + i % 2;
    let shape = [Shape::Uniform, Shape::NearLine, Shape::Clustered][i / 2 % 3];
    let size = rng.gen_range(20..=max_size);
    random_instance(&mut rng, n, size, shape)
}

/// Criteria 4 and 8: every identity and inequality on random instances, and
/// invariance under widening the generation window by five.
pub fn theorem_b(seed: u64, count: usize) -> (Outcome, Outcome) {
    let start = Instant::now();
    let results: Vec<(std::result::Result<(), String>, bool, usize)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let (mu, lambda) = instance_for(seed, i, 200);
            let family = GridFamily::new(mu.dim()).expect("positive dimension");
            let params = DoublingParams::defaults(&family, mu.growth_dim());
            let window = Window::for_measure(&mu);
            let dec = match czd_with(&mu, &family, &lambda, &params, &DefaultSelector, &window) {
                Ok(dec) => dec,
                Err(e) => return (Err(format!("instance {i}: {e}")), false, 0),
            };
            let report = verify_czd(&mu, &family, &dec);
            let verdict = if report.all_passed() {
                Ok(())
            } else {
                Err(format!("instance {i}: failed {:?}", report.failed()))
            };
            let wide = czd_with(&mu, &family, &lambda, &params, &DefaultSelector, &window.widened(5));
            let same = matches!(wide, Ok(w) if w.level_set == dec.level_set && w.pieces == dec.pieces && w.g == dec.g && w.b == dec.b);
            (verdict, same, dec.pieces.len())
        })
        .collect();
    let elapsed = start.elapsed().as_millis();
    let bad: Vec<&String> = results.iter().filter_map(|r| r.0.as_ref().err()).collect();
    let pieces: usize = results.iter().map(|r| r.2).sum();
    let nonempty = results.iter().filter(|r| r.2 > 0).count();
    let mut b = Outcome {
        id: 4,
        name: "decomposition identities and bounds".into(),
        passed: bad.is_empty(),
        detail: format!("{count} instances ({nonempty} with cubes, {pieces} pieces), {} failures", bad.len()),
        millis: elapsed,
    };
    if let Some(first) = bad.first() {
        b.detail.push_str(&format!("; first: {first}"));
    }
    let changed = results.iter().filter(|r| !r.1).count();
    let w = Outcome {
        id: 8,
        name: "window robustness".into(),
        passed: changed == 0,
        detail: format!("{count} instances rerun with window widened by 5, {changed} changed"),
        millis: elapsed,
    };
    (b, w)
}

/// Brute-force inclusion-maximal heavy cubes: every cube of every
/// filtration in the window that holds an atom, with integrals by direct
/// summation over all atoms.
pub fn brute_force_maximal_heavy(mu: &DiscreteMeasure, family: &GridFamily, lambda: &Rational, window: &Window) -> Vec<CubeId> {
    let two = Rational::integer(2);
    let mut heavy: BTreeSet<CubeId> = BTreeSet::new();
    for m in family.filtrations() {
        for k in window.generations() {
            for atom in mu.atoms() {
                let id = family.locate(m, k, &atom.x);
                if heavy.contains(&id) {
                    continue;
                }
                let q = family.cube_box(&id);
                let int: Rational = mu.atoms().iter().filter(|a| q.contains_point(&a.x)).map(|a| &a.f * &a.mass).sum();
                let dbl = q.scaled(&two);
                let mass: Rational = mu.atoms().iter().filter(|a| dbl.contains_point(&a.x)).map(|a| a.mass.clone()).sum();
                if int > lambda * mass {
                    heavy.insert(id);
                }
            }
        }
    }
    let boxes: Vec<(CubeId, Cube)> = heavy.iter().map(|id| (id.clone(), family.cube_box(id))).collect();
    boxes
        .iter()
        .filter(|(_, b)| !boxes.iter().any(|(_, c)| c != b && c.contains_cube_unchecked(b)))
        .map(|(id, _)| id.clone())
        .collect()
}

/// Criterion 5: maximal heavy cubes match brute force, and the level set of
/// the maximal function matches their union on the support.
pub fn oracle(seed: u64, count: usize) -> Outcome {
    let start = Instant::now();
    let failures: Vec<String> = (0..count)
        .into_par_iter()
        .filter_map(|i| {
            let (mu, lambda) = instance_for(seed ^ 0x5eed, i, 30);
            let family = GridFamily::new(mu.dim()).expect("positive dimension");
            let window = Window::for_measure(&mu);
            let ls = match maximal_heavy(&mu, &family, &lambda, &window) {
                Ok(ls) => ls,
                Err(e) => return Some(format!("instance {i}: {e}")),
            };
            let mut got = ls.cubes.clone();
            got.sort();
            let mut want = brute_force_maximal_heavy(&mu, &family, &lambda, &window.widened(2));
            want.sort();
            if got != want {
                return Some(format!("instance {i}: cube lists differ ({} vs {})", got.len(), want.len()));
            }
            for a in 0..mu.len() {
                let mf = maximal_function(&mu, &family, a, &window).ok()?;
                if (mf > lambda) != ls.in_union(a) {
                    return Some(format!("instance {i}: level set differs at atom {a}"));
                }
            }
            None
        })
        .collect();
    let mut detail = format!("{count} instances, {} mismatches", failures.len());
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; first: {f}"));
    }
    outcome(5, "heavy-cube oracle equivalence", start, failures.len(), detail)
}

/// A line-supported measure in the plane (growth `d = 1`): atoms `(t, s·t)`
/// with `t = a/256`, `a ∈ [−4096, 4096]`, slope `s = b/4`, `b ∈ [−4, 4]`, in
/// a few clusters, with masses `2^{−u}`, `u ∈ [0, 16]`.
pub fn line_measure<R: Rng>(rng: &mut R, size: usize) -> DiscreteMeasure {
    let slope = Rational::ratio(rng.gen_range(-4..=4), 4);
    let centers: Vec<i64> = (0..rng.gen_range(1..=4)).map(|_| rng.gen_range(-4096..=4096)).collect();
    let mut ts: BTreeSet<i64> = BTreeSet::new();
    while ts.len() < size {
        let c = centers.choose(rng).expect("at least one center");
        let spread = 1 << rng.gen_range(0..10);
        ts.insert(c + rng.gen_range(-spread..=spread));
    }
    let atoms = ts
        .into_iter()
        .map(|a| {
            let t = Rational::ratio(a, 256);
            Atom { x: Point(vec![t.clone(), &slope * &t]), mass: Rational::pow2(-rng.gen_range(0..=16)), f: Rational::zero() }
        })
        .collect();
    DiscreteMeasure::new(2, Rational::one(), atoms).expect("distinct points")
}

/// Draws a cube `Q` of the family around a random atom that is not
/// `(α,β)`-doubling; `None` if the draw found none.
pub fn non_doubling_cube<R: Rng>(rng: &mut R, mu: &DiscreteMeasure, family: &GridFamily, params: &DoublingParams) -> Option<Cube> {
    for _ in 0..64 {
        let atom = &mu.atoms()[rng.gen_range(0..mu.len())];
        let k = rng.gen_range(-4..=14);
        let m = rng.gen_range(0..=family.dim());
        let q = family.cube_box(&family.locate(m, k, &atom.x));
        if !mu.is_doubling(&q, params) {
            return Some(q);
        }
    }
    None
}

/// Criterion 6: the chain and the final estimate of the annuli bound.
pub fn annuli(seed: u64, count: usize) -> Outcome {
    let start = Instant::now();
    let family = GridFamily::new(2).expect("positive dimension");
    let params = DoublingParams::defaults(&family, &Rational::one());
    let results: Vec<std::result::Result<u32, String>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, 6 << 32 | i as u64);
            loop {
                let size = rng.gen_range(10..=60);
                let mu = line_measure(&mut rng, size);
                let Some(q) = non_doubling_cube(&mut rng, &mu, &family, &params) else { continue };
                let r = smallest_doubling_container(&mu, &family, &q, &params).map_err(|e| format!("pair {i}: {e}"))?;
                let rep = annuli_bound_check(&mu, &family, &q, &r, &params).map_err(|e| format!("pair {i}: {e}"))?;
                return if rep.passed { Ok(rep.n) } else { Err(format!("pair {i}: {rep:?}")) };
            }
        })
        .collect();
    let bad: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    let max_n = results.iter().filter_map(|r| r.as_ref().ok()).max().copied().unwrap_or(0);
    let mut detail = format!("{count} pairs, {} failures, largest N = {max_n}", bad.len());
    if let Some(f) = bad.first() {
        detail.push_str(&format!("; first: {f}"));
    }
    outcome(6, "annuli-bound diagnostic", start, bad.len(), detail)
}

/// The weak-(1,1) statistic of `T_ε f` for the measure's own density.
pub fn weak11_of(mu: &DiscreteMeasure, ker: &Kernel, eps: &Rational) -> Result<f64> {
    let t = apply_truncated(mu, ker, eps)?;
    weak11_statistic(mu, &t.values, mu.f_l1().to_f64())
}

pub const WEAK11_SIZES: [usize; 5] = [50, 100, 200, 350, 500];

/// Criterion 7: stability of the empirical weak-(1,1) constant across sizes
/// and its exact invariance under dyadic scaling of `f`.
pub fn weak11(seed: u64, per_size: usize) -> Outcome {
    let start = Instant::now();
    let ker = Kernel::cauchy_real();
    let jobs: Vec<(usize, usize)> = WEAK11_SIZES.iter().flat_map(|&s| (0..per_size).map(move |i| (s, i))).collect();
    let results: Vec<(f64, bool)> = jobs
        .par_iter()
        .map(|&(size, i)| {
            let mut rng = rng_for(seed, 7 << 32 | (size as u64) << 16 | i as u64);
            let mu = loop {
                let mu = lipschitz_graph_measure(&mut rng, size, 1).expect("size >= 2");
                if mu.f_l1().is_positive() {
                    break mu;
                }
            };
            let eps = default_eps(&mu);
            let s = weak11_of(&mu, &ker, &eps).expect("valid input");
            let scaled = mu.with_density(mu.atoms().iter().map(|a| &a.f * Rational::integer(4)).collect()).expect("nonnegative");
            let s4 = weak11_of(&scaled, &ker, &eps).expect("valid input");
            (s, s == s4)
        })
        .collect();
    let mut stats: Vec<f64> = results.iter().map(|r| r.0).collect();
    stats.sort_by(f64::total_cmp);
    let median = stats[stats.len() / 2];
    let max = *stats.last().unwrap_or(&0.0);
    let ratio = if median > 0.0 { max / median } else { f64::INFINITY };
    let not_invariant = results.iter().filter(|r| !r.1).count();
    let failures = usize::from(!(ratio < 10.0)) + not_invariant;
    outcome(
        7,
        "weak-(1,1) experiment",
        start,
        failures,
        format!(
            "{} measures, statistic min {:.4} median {median:.4} max {max:.4}, max/median {ratio:.3} (< 10), {not_invariant} not scale-invariant",
            stats.len(),
            stats.first().unwrap_or(&0.0)
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_battery_passes() {
        let sizes = SuiteSizes::quick();
        let out = run_all(11, &sizes);
        assert_eq!(out.len(), 8);
        for o in &out {
            assert!(o.passed, "{o}");
        }
    }

    #[test]
    fn instances_are_deterministic() {
        assert_eq!(instance_for(5, 3, 50), instance_for(5, 3, 50));
        let mut a = rng_for(1, 2);
        let mut b = rng_for(1, 2);
        assert_eq!(random_ball(&mut a, 3), random_ball(&mut b, 3));
    }
}
