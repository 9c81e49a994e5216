use dyadic_cz::czo::{apply_truncated, default_eps, kernel_eval, lipschitz_graph_measure, weak11_statistic, Kernel, KernelKind};
use dyadic_cz::geometry::Point;
use dyadic_cz::measure::{Atom, DiscreteMeasure};
use dyadic_cz::rational::Rational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pt(x: Rational, y: Rational) -> Point {
    Point(vec![x, y])
}

// the kernel is rational, so the truncated sum has an exact value
fn exact_cauchy(mu: &DiscreteMeasure, eps: &Rational) -> Vec<Rational> {
    let e2 = eps * eps;
    let atoms = mu.atoms();
    (0..atoms.len())
        .map(|i| {
            atoms
                .iter()
                .enumerate()
                .filter(|&(j, a)| j != i && atoms[i].x.dist2(&a.x) > e2)
                .map(|(_, a)| {
                    let dx = &atoms[i].x.0[0] - &a.x.0[0];
                    dx / atoms[i].x.dist2(&a.x) * &a.f * &a.mass
                })
                .sum()
        })
        .collect()
}

fn random_plane_measure(seed: u64, size: usize) -> DiscreteMeasure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms = (0..size)
        .map(|i| {
            let x = Rational::ratio(i as i64 * 64 + rng.gen_range(0..32), 64 * size as i64);
            let y = Rational::ratio(rng.gen_range(-100..100), 997);
            Atom { x: pt(x, y), mass: Rational::ratio(1, size as i64), f: Rational::ratio(rng.gen_range(0..40), 7) }
        })
        .collect();
    DiscreteMeasure::new(2, Rational::one(), atoms).unwrap()
}

#[test]
fn hundred_atoms_against_exact_sum() {
    for seed in 0..4 {
        let mu = random_plane_measure(seed, 100);
        let ker = Kernel::cauchy_real();
        for eps in [default_eps(&mu), Rational::ratio(1, 20), Rational::ratio(3, 10)] {
            let t = apply_truncated(&mu, &ker, &eps).unwrap();
            for (i, want) in exact_cauchy(&mu, &eps).iter().enumerate() {
                let diff = (t.values[i] - want.to_f64()).abs();
                assert!(diff <= t.error_bounds[i] + want.to_f64().abs() * f64::EPSILON, "seed {seed} atom {i}: {diff} > {}", t.error_bounds[i]);
            }
        }
    }
}

#[test]
fn cutoff_is_strict_and_exact() {
    // distance exactly 1/10, which f64 cannot represent
    let atoms = vec![
        Atom { x: pt(Rational::zero(), Rational::zero()), mass: Rational::one(), f: Rational::one() },
        Atom { x: pt(Rational::ratio(3, 50), Rational::ratio(2, 25)), mass: Rational::one(), f: Rational::one() },
    ];
    let mu = DiscreteMeasure::new(2, Rational::one(), atoms).unwrap();
    let ker = Kernel::cauchy_real();
    let at = apply_truncated(&mu, &ker, &Rational::ratio(1, 10)).unwrap();
    assert_eq!(at.values, vec![0.0, 0.0]);
    let below = apply_truncated(&mu, &ker, &Rational::ratio(999_999, 10_000_000)).unwrap();
    assert!((below.values[0] - -6.0).abs() < 1e-12);
    assert!((below.values[1] - 6.0).abs() < 1e-12);
}

#[test]
fn symmetric_configuration_is_antisymmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut atoms = Vec::new();
    for _ in 0..40 {
        let x = Rational::ratio(rng.gen_range(1..1000), 1000);
        let y = Rational::ratio(rng.gen_range(-500..500), 1000);
        let mass = Rational::ratio(rng.gen_range(1..10), 10);
        let f = Rational::ratio(rng.gen_range(0..10), 3);
        atoms.push(Atom { x: pt(x.clone(), y.clone()), mass: mass.clone(), f: f.clone() });
        atoms.push(Atom { x: pt(-x, y), mass, f });
    }
    let mu = DiscreteMeasure::new(2, Rational::one(), atoms).unwrap();
    let t = apply_truncated(&mu, &Kernel::cauchy_real(), &Rational::ratio(1, 50)).unwrap();
    for i in (0..t.values.len()).step_by(2) {
        let tol = t.error_bounds[i] + t.error_bounds[i + 1];
        assert!((t.values[i] + t.values[i + 1]).abs() <= tol, "pair {i}");
    }
}

#[test]
fn size_condition_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let plane = Kernel::cauchy_real();
    let riesz = Kernel::riesz(&Rational::ratio(3, 2)).unwrap();
    for _ in 0..10_000 {
        let mut coord = || Rational::ratio(rng.gen_range(-1_000_000..1_000_000), rng.gen_range(1..10_000));
        let (x, y) = (Point(vec![coord(), coord(), coord()]), Point(vec![coord(), coord(), coord()]));
        if x == y {
            continue;
        }
        let dist = x.dist2(&y).to_f64().sqrt();
        let (v, err) = kernel_eval(&riesz, &x, &y).unwrap();
        assert!((v.abs() - err) * dist.powf(1.5) <= riesz.size_constant * (1.0 + 1e-12));
        let (x2, y2) = (Point(x.0[..2].to_vec()), Point(y.0[..2].to_vec()));
        if x2 == y2 {
            continue;
        }
        let (v, err) = kernel_eval(&plane, &x2, &y2).unwrap();
        assert!((v.abs() - err) * x2.dist2(&y2).to_f64().sqrt() <= plane.size_constant * (1.0 + 1e-12));
    }
}

#[test]
fn kernel_rejects_bad_input() {
    let x = pt(Rational::one(), Rational::zero());
    assert!(kernel_eval(&Kernel::cauchy_real(), &x, &x).is_err());
    assert!(kernel_eval(&Kernel::cauchy_real(), &x, &Point(vec![Rational::one()])).is_err());
    assert!(Kernel::for_measure(KernelKind::CauchyReal, 3, &Rational::one()).is_err());
    assert!(Kernel::riesz(&Rational::zero()).is_err());
    assert!(apply_truncated(&random_plane_measure(0, 5), &Kernel::cauchy_real(), &Rational::zero()).is_err());
    assert_eq!("riesz_d".parse::<KernelKind>().unwrap(), KernelKind::RieszD);
    assert!("hilbert".parse::<KernelKind>().is_err());
}

#[test]
fn weak_statistic_by_hand() {
    let atoms = (0..4)
        .map(|i| Atom { x: pt(Rational::integer(i), Rational::zero()), mass: Rational::one(), f: Rational::one() })
        .collect();
    let mu = DiscreteMeasure::new(2, Rational::one(), atoms).unwrap();
    // t = 4: 4·1/4; t = 2: 2·3/4, the tie counts; t = 1: 1·4/4
    let s = weak11_statistic(&mu, &[4.0, -2.0, 2.0, 1.0], 4.0).unwrap();
    assert_eq!(s, 1.5);
    let s = weak11_statistic(&mu, &[4.0, -3.0, 3.0, 3.0], 2.0).unwrap();
    assert_eq!(s, 6.0);
    assert_eq!(weak11_statistic(&mu, &[0.0; 4], 1.0).unwrap(), 0.0);
    assert!(weak11_statistic(&mu, &[1.0; 3], 1.0).is_err());
    assert!(weak11_statistic(&mu, &[1.0; 4], 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dyadic_rescaling_is_invariant(seed in any::<u64>(), size in 10usize..80, shift in -4i64..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = lipschitz_graph_measure(&mut rng, size, 1 + (seed % 3) as u32).unwrap();
        let c = Rational::pow2(shift);
        let scaled: Vec<Atom> = mu
            .atoms()
            .iter()
            .map(|a| Atom { x: Point(a.x.0.iter().map(|v| v * &c).collect()), mass: &a.mass * &c, f: a.f.clone() })
            .collect();
        let nu = DiscreteMeasure::new(2, Rational::one(), scaled).unwrap();
        let ker = Kernel::cauchy_real();
        let eps = default_eps(&mu);
        let a = apply_truncated(&mu, &ker, &eps).unwrap();
        let b = apply_truncated(&nu, &ker, &(&eps * &c)).unwrap();
        prop_assert_eq!(&a.values, &b.values);
        let sa = weak11_statistic(&mu, &a.values, mu.f_l1().to_f64()).unwrap();
        let sb = weak11_statistic(&nu, &b.values, nu.f_l1().to_f64()).unwrap();
        prop_assert_eq!(sa, sb);
    }

    #[test]
    fn graph_measures_are_well_formed(seed in any::<u64>(), size in 2usize..200, lip in 1u32..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = lipschitz_graph_measure(&mut rng, size, lip).unwrap();
        prop_assert_eq!(mu.len(), size);
        prop_assert_eq!(mu.dim(), 2);
        for w in mu.atoms().windows(2) {
            prop_assert!(w[0].x.0[0] < w[1].x.0[0]);
            let slope = (&w[1].x.0[1] - &w[0].x.0[1]) / (&w[1].x.0[0] - &w[0].x.0[0]);
            prop_assert!(slope.abs() <= Rational::integer(lip as i64));
        }
        for a in mu.atoms() {
            prop_assert!(a.mass.is_positive());
            prop_assert!(!a.f.is_negative() && a.f <= Rational::one());
        }
    }
}
