use dyadic_cz::geometry::Point;
use dyadic_cz::grids::{shift_denominator, CubeId, GridFamily};
use dyadic_cz::rational::Rational;
use proptest::prelude::*;

// p is the smallest odd integer above n, straight from the definition
fn p_oracle(n: usize) -> i64 {
    (n as i64 + 1..).find(|q| q % 2 == 1).unwrap()
}

// o(m,k) walked up from o(m,0) = m/p: the generation-k corner through o(m,k+1)
// is o(m,k+1) or o(m,k+1) − 2^{-k-1}, whichever lies on (2^{-k}/p)·Z
fn offset_oracle(n: usize, m: usize, k: i64) -> Rational {
    let p = p_oracle(n);
    let mut o = Rational::ratio(m as i64, p);
    for level in (k..0).rev() {
        let step = Rational::pow2(-(level + 1));
        let on_lattice = |c: &Rational| (c * Rational::integer(p)).mul_pow2(level).is_integer();
        let stay = o.clone();
        let moved = &o - &step;
        assert!(on_lattice(&stay) != on_lattice(&moved), "exactly one candidate");
        o = if on_lattice(&stay) { stay } else { moved };
    }
    o
}

#[test]
fn shift_denominators() {
    for n in 1..=9 {
        assert_eq!(shift_denominator(n), p_oracle(n));
        assert_eq!(GridFamily::new(n).unwrap().p(), p_oracle(n));
    }
}

#[test]
fn offsets_match_oracle() {
    for n in 1..=5 {
        let g = GridFamily::new(n).unwrap();
        for m in 0..=n {
            for k in -30..=5 {
                assert_eq!(g.offset(m, k).unwrap(), offset_oracle(n, m, k), "n={n} m={m} k={k}");
            }
        }
    }
}

#[test]
fn residues_stay_bounded() {
    for n in 1..=6 {
        let g = GridFamily::new(n).unwrap();
        for m in 0..=n {
            let mut went_negative = false;
            for k in (-200..=0).rev() {
                let a = g.residue(m, k).unwrap();
                assert!(a.abs() < g.p());
                if went_negative {
                    assert!(a < 0, "residue left the negative range");
                }
                went_negative |= a < 0;
            }
            if m == 0 {
                assert_eq!(g.residue(0, -200).unwrap(), 0);
            }
        }
    }
}

#[test]
fn distinct_filtrations_have_disjoint_vertex_coordinates() {
    for n in 1..=5 {
        let g = GridFamily::new(n).unwrap();
        for k in -40..=40 {
            for m in 0..=n {
                for m2 in m + 1..=n {
                    let d = (g.offset(m, k).unwrap() - g.offset(m2, k).unwrap()).mul_pow2(k);
                    assert!(!d.is_integer(), "n={n} k={k} m={m} m2={m2}");
                }
            }
        }
    }
}

fn arb_cube(max_n: usize) -> impl Strategy<Value = (usize, CubeId)> {
    (1..=max_n).prop_flat_map(|n| {
        (Just(n), 0..=n, -25i64..=25, prop::collection::vec(-1_000_000i128..1_000_000, n))
            .prop_map(|(n, m, k, j)| (n, CubeId::new(m, k, j)))
    })
}

proptest! {
    #[test]
    fn parent_contains_and_children_partition((n, id) in arb_cube(4)) {
        let g = GridFamily::new(n).unwrap();
        let b = g.cube_box(&id);
        let parent = g.cube_box(&g.parent(&id));
        prop_assert!(parent.contains_cube(&b).unwrap());
        prop_assert_eq!(parent.side.clone(), &b.side * Rational::integer(2));

        let kids = g.children(&id);
        prop_assert_eq!(kids.len(), 1 << n);
        let mut vol = Rational::zero();
        for (i, c) in kids.iter().enumerate() {
            let cb = g.cube_box(c);
            prop_assert!(b.contains_cube(&cb).unwrap());
            prop_assert_eq!(g.parent(c), id.clone());
            for d in &kids[i + 1..] {
                prop_assert!(!cb.intersects(&g.cube_box(d)));
            }
            vol += cb.side.powi(n as i32);
        }
        prop_assert_eq!(vol, b.side.powi(n as i32));
    }

    #[test]
    fn corners_lie_on_the_common_lattice((n, id) in arb_cube(5)) {
        let g = GridFamily::new(n).unwrap();
        let b = g.cube_box(&id);
        for c in b.corners() {
            prop_assert!(g.in_lattice(&c, id.k));
        }
    }

    #[test]
    fn locate_is_the_unique_container(
        n in 1usize..=3,
        k in -12i64..=12,
        coords in prop::collection::vec((-10_000i64..10_000, 1i64..500), 3),
    ) {
        let g = GridFamily::new(n).unwrap();
        let x = Point(coords[..n].iter().map(|&(a, b)| Rational::ratio(a, b)).collect());
        for m in 0..=n {
            let id = g.locate(m, k, &x);
            let b = g.cube_box(&id);
            prop_assert!(b.contains_point(&x));
            // the neighbours along each axis do not hold x
            for axis in 0..n {
                for delta in [-1i128, 1] {
                    let mut j = id.j.clone();
                    j[axis] += delta;
                    prop_assert!(!g.cube_box(&CubeId::new(m, k, j)).contains_point(&x));
                }
            }
        }
    }

    #[test]
    fn ancestors_compose(n in 1usize..=3, (m_raw, k) in (0usize..4, -10i64..10), levels in 0u32..12,
                         j in prop::collection::vec(-5000i128..5000, 3)) {
        let g = GridFamily::new(n).unwrap();
        let id = CubeId::new(m_raw % (n + 1), k, j[..n].to_vec());
        let mut walk = id.clone();
        for _ in 0..levels {
            walk = g.parent(&walk);
        }
        prop_assert_eq!(g.ancestor(&id, levels), walk);
    }
}
