use num_bigint::BigUint;
use proptest::prelude::*;
use severi_core::gamma::*;
use severi_core::lattice::SurfaceParam;
use severi_core::union_find::UnionFind;

fn gamma(n: u32, d: u32, k: u32) -> DegenerationCurve {
    build_gamma(SurfaceParam::new(n), d.into(), k.into()).unwrap()
}

/// Counts spanning trees by trying every (V−1)-subset of edges.
fn brute_force_trees(g: &DegenerationCurve) -> u64 {
    let (v, e) = (g.component_count(), g.node_count());
    if v == 1 {
        return 1;
    }
    let mut count = 0;
    for mask in 0u32..(1 << e) {
        if mask.count_ones() as usize != v - 1 {
            continue;
        }
        let mut uf = UnionFind::new(v);
        let acyclic = (0..e).filter(|i| mask >> i & 1 == 1).all(|i| {
            let (a, b) = g.endpoints(i);
            uf.union(a, b)
        });
        count += u64::from(acyclic);
    }
    count
}

#[test]
fn node_count_is_delta_prime() {
    for n in 0..=4u32 {
        for d in 1..=6u32 {
            for k in 0..=6u32 {
                let g = gamma(n, d, k);
                let expected = d * k + n * d * (d - 1) / 2;
                assert_eq!(g.node_count() as u32, expected, "n={n} d={d} k={k}");
                let mut sorted = g.nodes().to_vec();
                sorted.sort();
                assert_eq!(sorted, g.nodes(), "canonical order");
            }
        }
    }
}

#[test]
fn vertex_degrees() {
    for (n, d, k) in [(1, 3, 2), (2, 2, 3), (0, 3, 3), (3, 1, 4)] {
        let g = gamma(n, d, k);
        let mut deg = vec![0u32; g.component_count()];
        for i in 0..g.node_count() {
            let (a, b) = g.endpoints(i);
            deg[a] += 1;
            deg[b] += 1;
        }
        for (v, &dv) in deg.iter().enumerate() {
            let expected = match g.component_at(v).kind {
                ComponentKind::L => n * (d - 1) + k,
                ComponentKind::F => d,
            };
            assert_eq!(dv, expected);
        }
    }
}

#[test]
fn matrix_tree_matches_brute_force() {
    for n in 0..=3u32 {
        for d in 1..=4u32 {
            for k in 0..=4u32 {
                let g = gamma(n, d, k);
                if g.node_count() > 12 {
                    continue;
                }
                assert_eq!(
                    g.spanning_tree_count(),
                    BigUint::from(brute_force_trees(&g)),
                    "n={n} d={d} k={k}"
                );
            }
        }
    }
}

fn instance() -> impl Strategy<Value = (u32, u32, u32)> {
    (0u32..3, 1u32..4, 0u32..4)
}

proptest! {
    #[test]
    fn removal_is_monotone((n, d, k) in instance(), bits in any::<u64>(), extra in 0usize..64) {
        let g = gamma(n, d, k);
        let e = g.node_count();
        prop_assume!(e > 0);
        let set: Vec<NodeId> = (0..e).filter(|i| bits >> i & 1 == 1).map(|i| g.node(i)).collect();
        let mut bigger = set.clone();
        let q = g.node(extra % e);
        if !bigger.contains(&q) {
            bigger.push(q);
        }
        if g.is_connected_after_removal(&bigger).unwrap() {
            prop_assert!(g.is_connected_after_removal(&set).unwrap());
        }
    }

    #[test]
    fn mask_and_list_agree((n, d, k) in instance(), bits in any::<u64>()) {
        let g = gamma(n, d, k);
        let e = g.node_count();
        let mask = if e == 64 { bits } else { bits & ((1u64 << e) - 1) };
        let set: Vec<NodeId> = (0..e).filter(|i| mask >> i & 1 == 1).map(|i| g.node(i)).collect();
        let mut uf = UnionFind::new(0);
        prop_assert_eq!(g.connected_without_mask(mask, &mut uf), g.is_connected_after_removal(&set).unwrap());
    }

    #[test]
    fn document_round_trip((n, d, k) in instance()) {
        let g = gamma(n, d, k);
        let json = serde_json::to_string(&g.to_document()).unwrap();
        let back: GammaDocument = serde_json::from_str(&json).unwrap();
        let curve = back.into_curve().unwrap();
        prop_assert_eq!(curve.nodes(), g.nodes());
    }
}
