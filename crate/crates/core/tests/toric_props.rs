use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use severi_core::toric::*;

/// Convex hull of a few random lattice points, when it has area.
fn polygon(span: i64) -> impl Strategy<Value = LatticePolygon> {
    prop::collection::vec((-span..=span, -span..=span), 3..8)
        .prop_filter_map("degenerate hull", |pts| LatticePolygon::new(convex_hull(&pts)).ok())
}

/// Products of the elementary shears and their inverses.
fn unimodular() -> impl Strategy<Value = [[i64; 2]; 2]> {
    prop::collection::vec(0u8..4, 0..6).prop_map(|gens| {
        gens.iter().fold([[1, 0], [0, 1]], |m, g| {
            let e = match g {
                0 => [[1, 1], [0, 1]],
                1 => [[1, -1], [0, 1]],
                2 => [[1, 0], [1, 1]],
                _ => [[1, 0], [-1, 1]],
            };
            [
                [m[0][0] * e[0][0] + m[0][1] * e[1][0], m[0][0] * e[0][1] + m[0][1] * e[1][1]],
                [m[1][0] * e[0][0] + m[1][1] * e[1][0], m[1][0] * e[0][1] + m[1][1] * e[1][1]],
            ]
        })
    })
}

proptest! {
    #[test]
    fn edges_balance(p in polygon(6)) {
        let (sx, sy) = p.edge_data().iter().fold((0, 0), |(x, y), e| {
            let k = e.lattice_length as i64;
            (x + k * e.primitive.0, y + k * e.primitive.1)
        });
        prop_assert_eq!((sx, sy), (0, 0));
        for e in p.edge_data() {
            prop_assert_eq!(num_integer::gcd(e.primitive.0, e.primitive.1), 1);
        }
    }

    #[test]
    fn exponents_solve_edge_system(p in polygon(5), seed in any::<u64>()) {
        let roots = random_generic_roots(&p, &mut ChaCha8Rng::seed_from_u64(seed));
        let one = num_rational::BigRational::from_integer(1.into());
        let rp = build_generic_param(&p, &roots, one.clone(), one).unwrap();
        prop_assert_eq!(rp.degrees(), (0, 0));
        let edges = p.edge_data();
        let dets = p.consecutive_determinants();
        for r in &rp.roots {
            let (a, b) = edges[r.edge].primitive;
            let (a1, b1) = edges[(r.edge + 1) % edges.len()].primitive;
            prop_assert_eq!(a * r.x_exp + b * r.y_exp, 0);
            // equals k_ij exactly when the corner is smooth
            prop_assert_eq!(a1 * r.x_exp + b1 * r.y_exp, i64::from(r.multiplicity) * dets[r.edge]);
        }
    }

    #[test]
    fn determinants_are_unimodular_invariants(p in polygon(6), m in unimodular(), shift in (-9i64..9, -9i64..9)) {
        let moved: Vec<Point> = p
            .vertices()
            .iter()
            .map(|&(x, y)| (m[0][0] * x + m[0][1] * y + shift.0, m[1][0] * x + m[1][1] * y + shift.1))
            .collect();
        let q = LatticePolygon::new(moved).unwrap();
        prop_assert!(!q.was_reoriented());
        prop_assert_eq!(q.consecutive_determinants(), p.consecutive_determinants());
        prop_assert_eq!(q.is_smooth(), p.is_smooth());
        prop_assert_eq!(q.is_smooth(), p.consecutive_determinants().iter().all(|&d| d == 1));
        let lens = |p: &LatticePolygon| p.edge_data().iter().map(|e| e.lattice_length).collect::<Vec<_>>();
        prop_assert_eq!(lens(&q), lens(&p));
    }

    #[test]
    fn clockwise_input_is_reoriented(p in polygon(6)) {
        let mut rev = p.vertices().to_vec();
        rev.reverse();
        let q = LatticePolygon::new(rev).unwrap();
        prop_assert!(q.was_reoriented());
        prop_assert_eq!(q.normalized_vertices(), p.normalized_vertices());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn implicitization_support_in_polygon(p in polygon(2), seed in any::<u64>()) {
        prop_assume!(p.lattice_points().len() <= 16);
        let roots = random_generic_roots(&p, &mut ChaCha8Rng::seed_from_u64(seed));
        let one = num_rational::BigRational::from_integer(1.into());
        let rp = build_generic_param(&p, &roots, one.clone(), one).unwrap();
        let imp = implicitize(&rp, &p).unwrap();
        prop_assert!(imp.contained);
        prop_assert!(imp.relation.iter().all(|(pt, _)| p.contains(*pt)));
    }
}
