use std::collections::BTreeSet;

use dyadic_cz::covering::cover_box;
use dyadic_cz::czd::{
    czd, czd_with, default_r_selector, maximal_function, maximal_heavy, verify_czd, CzDecomposition, DefaultSelector,
    Report, Window,
};
use dyadic_cz::geometry::{Cube, Point};
use dyadic_cz::grids::{CubeId, GridFamily};
use dyadic_cz::measure::{Atom, DiscreteMeasure, DoublingParams};
use dyadic_cz::rational::Rational;
use dyadic_cz::suite::{random_instance, Shape};
use dyadic_cz::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn q(s: &str) -> Rational {
    s.parse().unwrap()
}

fn line(points: &[(&str, &str, &str)]) -> DiscreteMeasure {
    let atoms = points.iter().map(|(x, m, f)| Atom { x: Point(vec![q(x)]), mass: q(m), f: q(f) }).collect();
    DiscreteMeasure::new(1, q("1"), atoms).unwrap()
}

fn three_atoms() -> DiscreteMeasure {
    line(&[("0", "1", "10"), ("1/100", "1", "10"), ("10", "1", "1/10")])
}

fn int_f(mu: &DiscreteMeasure, b: &Cube) -> Rational {
    mu.atoms().iter().filter(|a| b.contains_point(&a.x)).map(|a| &a.f * &a.mass).sum()
}

fn mass(mu: &DiscreteMeasure, b: &Cube) -> Rational {
    mu.atoms().iter().filter(|a| b.contains_point(&a.x)).map(|a| a.mass.clone()).sum()
}

// every cube holding an atom, generation by generation over a wide range,
// then the inclusion-maximal heavy ones
fn brute_maximal(mu: &DiscreteMeasure, g: &GridFamily, lambda: &Rational, ks: std::ops::RangeInclusive<i64>) -> Vec<CubeId> {
    let mut heavy = BTreeSet::new();
    for m in 0..=g.dim() {
        for k in ks.clone() {
            for a in mu.atoms() {
                let id = g.locate(m, k, &a.x);
                let b = g.cube_box(&id);
                if int_f(mu, &b) > lambda * mass(mu, &b.dilate(&q("2")).unwrap()) {
                    heavy.insert(id);
                }
            }
        }
    }
    let boxes: Vec<_> = heavy.iter().map(|id| (id.clone(), g.cube_box(id))).collect();
    let mut out: Vec<CubeId> = boxes
        .iter()
        .filter(|(_, b)| !boxes.iter().any(|(_, c)| c != b && c.contains_cube(b).unwrap()))
        .map(|(id, _)| id.clone())
        .collect();
    out.sort();
    out
}

// sup over every cube containing the atom in a wide generation range
fn brute_maximal_function(mu: &DiscreteMeasure, g: &GridFamily, atom: usize, ks: std::ops::RangeInclusive<i64>) -> Rational {
    let x = &mu.atoms()[atom].x;
    let mut best = Rational::zero();
    for m in 0..=g.dim() {
        for k in ks.clone() {
            let b = g.cube_box(&g.locate(m, k, x));
            let r = int_f(mu, &b) / mass(mu, &b.dilate(&q("2")).unwrap());
            best = best.max(r);
        }
    }
    best
}

#[test]
fn maximal_function_examples() {
    let g = GridFamily::new(1).unwrap();
    let mu = line(&[("0", "1", "4"), ("1", "1", "0")]);
    let w = Window::for_measure(&mu);
    assert_eq!(maximal_function(&mu, &g, 0, &w).unwrap(), q("4"));
    assert_eq!(maximal_function(&mu, &g, 1, &w).unwrap(), q("2"));

    let flat = line(&[("0", "1", "3/2"), ("1/3", "2", "3/2"), ("5", "1/7", "3/2")]);
    let w = Window::for_measure(&flat);
    for a in 0..3 {
        assert_eq!(maximal_function(&flat, &g, a, &w).unwrap(), q("3/2"));
    }
    let single = line(&[("7/3", "5", "9")]);
    assert_eq!(maximal_function(&single, &g, 0, &Window::for_measure(&single)).unwrap(), q("9"));
}

#[test]
fn maximal_function_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for i in 0..12 {
        let n = 1 + i % 2;
        let (mu, _) = random_instance(&mut rng, n, 12, [Shape::Uniform, Shape::Clustered][i % 2]);
        let g = GridFamily::new(n).unwrap();
        let w = Window::for_measure(&mu);
        for a in 0..mu.len() {
            let want = brute_maximal_function(&mu, &g, a, w.k_min - 6..=w.k_max + 2);
            assert_eq!(maximal_function(&mu, &g, a, &w).unwrap(), want, "instance {i} atom {a}");
        }
    }
}

#[test]
fn three_atom_level_set() {
    let g = GridFamily::new(1).unwrap();
    let mu = three_atoms();
    let lambda = q("8");
    let w = Window::for_measure(&mu);
    let ls = maximal_heavy(&mu, &g, &lambda, &w).unwrap();
    let want = brute_maximal(&mu, &g, &lambda, -12..=14);
    let mut got = ls.cubes.clone();
    got.sort();
    assert_eq!(got, want);
    // frozen from the brute-force run above
    assert_eq!(got, vec![CubeId::new(1, -3, vec![0])]);
    assert!(ls.in_union(0) && ls.in_union(1) && !ls.in_union(2));
}

#[test]
fn below_mean_level_is_rejected() {
    let g = GridFamily::new(1).unwrap();
    let mu = three_atoms();
    let params = DoublingParams::defaults(&g, &q("1"));
    // mean is 201/30
    assert!(matches!(czd(&mu, &g, &q("201/30"), &params), Err(Error::Hypothesis(_))));
    assert!(czd(&mu, &g, &q("202/30"), &params).is_ok());
}

#[test]
fn flat_density_has_no_cubes() {
    let g = GridFamily::new(2).unwrap();
    let atoms = (0..6)
        .map(|i| Atom { x: Point(vec![Rational::ratio(i, 3), Rational::ratio(i * i, 5)]), mass: q("1/2"), f: q("1") })
        .collect();
    let mu = DiscreteMeasure::new(2, q("2"), atoms).unwrap();
    let dec = czd(&mu, &g, &q("2"), &DoublingParams::defaults(&g, &q("2"))).unwrap();
    assert!(dec.pieces.is_empty());
    assert!(dec.g.iter().all(|v| *v == q("1")));
    assert!(dec.b.iter().all(|v| v.is_zero()));
}

/// The construction of `g`, `b` and the pieces written out directly from
/// the cubes and their doubling containers, without the library's bookkeeping.
fn reference(mu: &DiscreteMeasure, g: &GridFamily, lambda: &Rational, beta: &Rational, qs: &[CubeId], rs: &[CubeId]) -> (Vec<Vec<usize>>, Vec<Rational>, Vec<Rational>, Vec<Rational>) {
    let n_atoms = mu.len();
    let inside = |id: &CubeId, i: usize| g.cube_box(id).contains_point(&mu.atoms()[i].x);
    let count: Vec<i64> = (0..n_atoms).map(|i| qs.iter().filter(|id| inside(id, i)).count() as i64).collect();
    let w = |j: usize, i: usize| if inside(&qs[j], i) { Rational::ratio(1, count[i]) } else { Rational::zero() };
    let target: Vec<Rational> = (0..qs.len())
        .map(|j| (0..n_atoms).map(|i| &mu.atoms()[i].f * &mu.atoms()[i].mass * w(j, i)).sum())
        .collect();

    let mut order: Vec<usize> = (0..qs.len()).collect();
    order.sort_by(|&a, &b| (rs[a].side(), rs[a].m, rs[a].k, &rs[a].j, a).cmp(&(rs[b].side(), rs[b].m, rs[b].k, &rs[b].j, b)));
    let cap = Rational::integer(2) * beta * lambda;
    let mut sets = vec![Vec::new(); qs.len()];
    let mut gammas = vec![Rational::zero(); qs.len()];
    for (pos, &l) in order.iter().enumerate() {
        let a_set: Vec<usize> = (0..n_atoms)
            .filter(|&i| inside(&rs[l], i))
            .filter(|&i| {
                let placed: Rational = order[..pos].iter().filter(|&&s| sets[s].contains(&i)).map(|&s| gammas[s].clone()).sum();
                placed <= cap
            })
            .collect();
        let a_mass: Rational = a_set.iter().map(|&i| mu.atoms()[i].mass.clone()).sum();
        gammas[l] = &target[l] / a_mass;
        sets[l] = a_set;
    }
    let phi = |j: usize, i: usize| if sets[j].contains(&i) { gammas[j].clone() } else { Rational::zero() };
    let gs: Vec<Rational> = (0..n_atoms)
        .map(|i| {
            let outside = if count[i] == 0 { mu.atoms()[i].f.clone() } else { Rational::zero() };
            outside + (0..qs.len()).map(|j| phi(j, i)).sum::<Rational>()
        })
        .collect();
    let bs: Vec<Rational> = (0..n_atoms)
        .map(|i| (0..qs.len()).map(|j| &mu.atoms()[i].f * w(j, i) - phi(j, i)).sum())
        .collect();
    (sets, gammas, gs, bs)
}

fn check_against_reference(mu: &DiscreteMeasure, g: &GridFamily, lambda: &Rational, dec: &CzDecomposition) {
    let qs: Vec<CubeId> = dec.pieces.iter().map(|p| p.q.clone()).collect();
    let rs: Vec<CubeId> = dec.pieces.iter().map(|p| p.r.clone()).collect();
    let (sets, gammas, gs, bs) = reference(mu, g, lambda, &dec.params.beta, &qs, &rs);
    for (j, p) in dec.pieces.iter().enumerate() {
        assert_eq!(p.a, sets[j], "A_{j}");
        assert_eq!(p.gamma, gammas[j], "γ_{j}");
    }
    assert_eq!(dec.g, gs);
    assert_eq!(dec.b, bs);
}

#[test]
fn three_atom_decomposition() {
    let g = GridFamily::new(1).unwrap();
    let mu = three_atoms();
    let lambda = q("8");
    let params = DoublingParams::defaults(&g, &q("1"));
    assert_eq!((params.alpha.clone(), params.beta.clone()), (q("54"), q("487")));
    let dec = czd(&mu, &g, &lambda, &params).unwrap();
    check_against_reference(&mu, &g, &lambda, &dec);

    // frozen from the reference run
    assert_eq!(dec.pieces.len(), 1);
    let p = &dec.pieces[0];
    assert_eq!(p.r, CubeId::new(1, -7, vec![0]));
    assert_eq!(p.a, vec![0, 1, 2]);
    assert_eq!(p.target, q("20"));
    assert_eq!(p.gamma, q("20/3"));
    assert_eq!(dec.g, vec![q("20/3"), q("20/3"), q("203/30")]);
    assert_eq!(dec.b, vec![q("10/3"), q("10/3"), q("-20/3")]);

    let rep = verify_czd(&mu, &g, &dec);
    assert!(rep.all_passed(), "{:?}", rep.failed());
    for id in ["a", "b", "h", "i"] {
        assert!(rep.get(id).unwrap().slack.as_ref().unwrap().is_positive(), "check {id}");
    }
}

#[test]
fn ascent_forced_by_a_heavy_neighbour() {
    let g = GridFamily::new(1).unwrap();
    let params = DoublingParams::defaults(&g, &q("1"));
    let lambda = q("8");
    let base = three_atoms();
    let dec = czd(&base, &g, &lambda, &params).unwrap();
    let qid = &dec.pieces[0].q;
    let s = cover_box(&g, &g.cube_box(qid).dilate(&q("3")).unwrap()).unwrap().cube;
    let parent = g.parent(&s);
    let (sb, pb) = (g.cube_box(&s), g.cube_box(&parent));
    // a heavy atom in parent(S) \ S, away from 2Q: S stops being doubling
    let x = if pb.lower == sb.lower { pb.upper().0[0].clone() - q("1/1000") } else { pb.lower.0[0].clone() };
    assert!(pb.contains_point(&Point(vec![x.clone()])) && !sb.contains_point(&Point(vec![x.clone()])));
    let mut atoms = base.atoms().to_vec();
    atoms.push(Atom { x: Point(vec![x]), mass: q("1000000"), f: q("0") });
    let mu = DiscreteMeasure::new(1, q("1"), atoms).unwrap();

    assert!(!mu.is_doubling(&sb, &params));
    assert!(mu.is_doubling(&pb, &params));
    assert_eq!(default_r_selector(&mu, &g, qid, &params).unwrap(), parent);
}

#[test]
fn report_round_trips_through_json() {
    let g = GridFamily::new(1).unwrap();
    let mu = three_atoms();
    let dec = czd(&mu, &g, &q("8"), &DoublingParams::defaults(&g, &q("1"))).unwrap();
    let report = Report::new(&mu, &g, dec);
    let text = serde_json::to_string(&report).unwrap();
    let back: Report = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
}

fn instance(seed: u64, n: usize, size: usize, shape: u8) -> (DiscreteMeasure, Rational) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_instance(&mut rng, n, size, [Shape::Uniform, Shape::NearLine, Shape::Clustered][shape as usize % 3])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn construction_matches_reference(seed in any::<u64>(), n in 1usize..=2, size in 5usize..25, shape in 0u8..3) {
        let (mu, lambda) = instance(seed, n, size, shape);
        let g = GridFamily::new(n).unwrap();
        let params = DoublingParams::defaults(&g, mu.growth_dim());
        let dec = czd(&mu, &g, &lambda, &params).unwrap();
        check_against_reference(&mu, &g, &lambda, &dec);
        let rep = verify_czd(&mu, &g, &dec);
        prop_assert!(rep.all_passed(), "{:?}", rep.failed());
        // determinism
        prop_assert_eq!(czd(&mu, &g, &lambda, &params).unwrap(), dec);
    }

    #[test]
    fn heavy_cubes_match_brute_force(seed in any::<u64>(), n in 1usize..=2, size in 3usize..16, shape in 0u8..3) {
        let (mu, lambda) = instance(seed, n, size, shape);
        let g = GridFamily::new(n).unwrap();
        let w = Window::for_measure(&mu);
        let ls = maximal_heavy(&mu, &g, &lambda, &w).unwrap();
        let mut got = ls.cubes.clone();
        got.sort();
        prop_assert_eq!(got, brute_maximal(&mu, &g, &lambda, w.k_min - 3..=w.k_max + 3));
        for a in 0..mu.len() {
            let mf = maximal_function(&mu, &g, a, &w).unwrap();
            prop_assert_eq!(mf > lambda, ls.in_union(a));
        }
        // one cube per filtration at most, so overlap <= n + 1
        for a in 0..mu.len() {
            let hits: Vec<&CubeId> = ls.cubes.iter().filter(|c| g.cube_box(c).contains_point(&mu.atoms()[a].x)).collect();
            prop_assert!(hits.len() <= n + 1);
            let ms: BTreeSet<usize> = hits.iter().map(|c| c.m).collect();
            prop_assert_eq!(ms.len(), hits.len());
        }
    }

    #[test]
    fn wider_window_changes_nothing(seed in any::<u64>(), n in 1usize..=2, size in 5usize..30, shape in 0u8..3) {
        let (mu, lambda) = instance(seed, n, size, shape);
        let g = GridFamily::new(n).unwrap();
        let params = DoublingParams::defaults(&g, mu.growth_dim());
        let w = Window::for_measure(&mu);
        let a = czd_with(&mu, &g, &lambda, &params, &DefaultSelector, &w).unwrap();
        let b = czd_with(&mu, &g, &lambda, &params, &DefaultSelector, &w.widened(5)).unwrap();
        prop_assert_eq!(a.level_set, b.level_set);
        prop_assert_eq!(a.pieces, b.pieces);
        prop_assert_eq!(a.g, b.g);
        prop_assert_eq!(a.b, b.b);
    }
}
