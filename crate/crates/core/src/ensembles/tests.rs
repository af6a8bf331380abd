use super::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn ens1_cardinalities() {
    let e = ensemble1(4, 1, 0.5).unwrap();
    assert_eq!(e.cardinality(), Some(6));
    let e = ensemble1(8, 2, 0.5).unwrap();
    // Ordered placements C(8,2) C(6,2) = 420, unordered 210.
    assert_eq!(e.cardinality(), Some(210));
    assert!((e.log_cardinality() - 210f64.ln()).abs() < 1e-9);
    // Perfect matchings of 4 vertices: alpha = 2 needs p >= 8 by the p/4 rule.
    assert!(ensemble1(4, 2, 0.5).is_err());
}

#[test]
fn ens1_matchings_of_four_vertices() {
    // The alpha <= p/4 precondition holds at p = 8, but the members on the
    // first 4 vertices are exactly the 3 perfect matchings.
    let e = ensemble1(8, 2, 0.5).unwrap();
    let count = (0..e.cardinality().unwrap())
        .filter(|&i| {
            let g = e.index_to_graph(i).unwrap();
            g.edges().iter().all(|&(_, b)| b <= 3)
        })
        .count();
    assert_eq!(count, 3);
}

#[test]
fn ens1_round_trip_all_members() {
    let e = ensemble1(8, 2, 0.3).unwrap();
    for idx in 0..e.cardinality().unwrap() {
        let g = e.index_to_graph(idx).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.max_degree(), 1);
        assert_eq!(e.graph_to_index(&g).unwrap(), idx);
    }
}

#[test]
fn ens1_placement_product() {
    let got = ensemble1_log_placement_product(8, 2);
    assert!((got - (28f64 * 15.0).ln()).abs() < 1e-9);
}

#[test]
fn kl_radius_zero_at_lambda_zero() {
    assert_eq!(ensemble1(8, 2, 0.0).unwrap().kl_radius(), 0.0);
    assert_eq!(ensemble1a(8, 2, 0.0).unwrap().kl_radius(), 0.0);
    assert_eq!(ensemble2(6, 3, 2, 0.0).unwrap().kl_radius(), 0.0);
    assert_eq!(ensemble3(8, 4, 1, 0.0).unwrap().kl_radius(), 0.0);
    assert_eq!(ensemble4(32, 4, 3, 0, 2, 2, 0.0).unwrap().kl_radius(), 0.0);
}

#[test]
fn ens1a_cardinalities() {
    let e = ensemble1a(100, 12, 0.2).unwrap();
    assert_eq!(e.cardinality(), Some(121_399_651_100));
    let e = ensemble1a(4, 2, 0.2).unwrap();
    assert_eq!(e.cardinality(), Some(1));
    assert!(ensemble1a(5, 1, 0.2).is_err());
    assert!(ensemble1a(4, 3, 0.2).is_err());
}

#[test]
fn ens1a_round_trip_all_members() {
    let e = ensemble1a(8, 2, 0.4).unwrap();
    assert_eq!(e.cardinality(), Some(6));
    for idx in 0..6u128 {
        let g = e.index_to_graph(idx).unwrap();
        assert_eq!(e.graph_to_index(&g).unwrap(), idx);
    }
    // Indices are ordered lexicographically by chosen pair set.
    let g0 = e.index_to_graph(0).unwrap();
    assert_eq!(g0.edges(), &[(0, 1), (2, 3)]);
}

#[test]
fn ens2_structure() {
    let e = ensemble2(6, 3, 2, 0.5).unwrap();
    assert_eq!(e.cardinality(), Some(1 << 6));
    assert!((e.log_cardinality() - 6.0 * std::f64::consts::LN_2).abs() < 1e-12);
    // The zero-index member is the reference (empty) graph.
    let g0 = e.index_to_graph(0).unwrap();
    assert_eq!(&g0, e.reference_graph());
    assert!(ensemble2(5, 3, 2, 0.5).is_err());
}

#[test]
fn ens3_structure() {
    let e = ensemble3(8, 4, 1, 0.5).unwrap();
    assert_eq!(e.cardinality(), Some(1 << 12));
    // Degree budget 2m - 1 over the extreme members and a sample.
    for idx in [0u128, (1 << 12) - 1, 37, 1000, 2718] {
        let g = e.index_to_graph(idx).unwrap();
        assert!(g.max_degree() <= 7);
        assert!(g.edge_count() <= 28); // alpha * C(2m, 2)
        assert_eq!(e.graph_to_index(&g).unwrap(), idx);
    }
    // Reference is the full 8-clique.
    assert_eq!(e.reference_graph().edge_count(), 28);
    assert_eq!(e.reference_graph().max_degree(), 7);
}

#[test]
fn ens4_vi_c_configuration() {
    let e = ensemble4(32, 4, 3, 0, 2, 2, 0.5).unwrap();
    assert_eq!(e.cardinality(), Some(1 << 12));
    let blocks = e.blocks().unwrap();
    assert_eq!(blocks.len(), 2);
    for b in blocks {
        assert_eq!(b.vertices.len(), 16);
        assert_eq!(b.variable_edges.len(), 6); // 2^6 subproblem per block
    }
    // Edge counts span [alpha eta1 (2 eta2 + m ell), alpha eta1 ((eta1-1)/2 + 2 eta2 + m ell)].
    let min_edges = e.index_to_graph(0).unwrap().edge_count();
    let max_edges = e.index_to_graph((1 << 12) - 1).unwrap().edge_count();
    assert_eq!(min_edges, 48);
    assert_eq!(max_edges, 60);
    // Maximal degree < eta1 + 2 eta2 + 2m = 10.
    for idx in [0u128, (1 << 12) - 1, 123, 4000] {
        assert!(e.index_to_graph(idx).unwrap().max_degree() < 10);
    }
    assert!(ensemble4(31, 4, 3, 0, 2, 2, 0.5).is_err());
}

#[test]
fn ens4_length_ell_paths_and_wraparound() {
    // eta1 = 3, eta2 = 1, one length-3 path per pair: 3 pairs including (3,1).
    let e = ensemble4(18, 3, 1, 1, 3, 1, 0.5).unwrap();
    let g0 = e.index_to_graph(0).unwrap();
    // Per pair: 2 edges for the length-2 path + 3 edges for the length-3 path.
    assert_eq!(g0.edge_count(), 3 * 5);
    // Rejects length-ell paths shorter than 2.
    assert!(ensemble4(18, 3, 1, 1, 1, 1, 0.5).is_err());
    // eta1 = 2 keeps a single pair (no wrap-around double counting).
    let e2 = ensemble4(8, 2, 2, 0, 2, 1, 0.5).unwrap();
    let g0 = e2.index_to_graph(0).unwrap();
    assert_eq!(g0.edge_count(), 4); // two length-2 paths
    assert_eq!(e2.cardinality(), Some(2)); // one optional center edge
}

#[test]
fn counterpart_single_edge_members() {
    let e = counterpart_single_edge(100, 0.3).unwrap();
    assert_eq!(e.cardinality(), Some(4950));
    let e = counterpart_single_edge(2, 0.3).unwrap();
    assert_eq!(e.cardinality(), Some(1));
    let e = counterpart_single_edge(6, 0.3).unwrap();
    for idx in 0..15u128 {
        let g = e.index_to_graph(idx).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(e.graph_to_index(&g).unwrap(), idx);
    }
}

#[test]
fn counterpart_clique_members() {
    let e = counterpart_clique_minus_edge(8, 8, 1.0).unwrap();
    assert_eq!(e.cardinality(), Some(28));
    for idx in 0..28u128 {
        let g = e.index_to_graph(idx).unwrap();
        assert_eq!(
            crate::graph::edit_distance(g.edges(), e.reference_graph().edges()),
            1
        );
        assert_eq!(e.graph_to_index(&g).unwrap(), idx);
    }
    let e = counterpart_clique_minus_edge(3, 3, 1.0).unwrap();
    assert_eq!(e.cardinality(), Some(3));
    for idx in 0..3u128 {
        let g = e.index_to_graph(idx).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.max_degree(), 2); // each member is a 2-edge path
    }
}

#[test]
fn counterpart_paths_members() {
    let e = counterpart_disjoint_paths(40, 4, 8, 0.5).unwrap();
    assert_eq!(e.cardinality(), Some(4));
    assert_eq!(e.reference_graph().edge_count(), 68);
    assert_eq!(e.reference_graph().max_degree(), 9);
    for idx in 0..4u128 {
        let g = e.index_to_graph(idx).unwrap();
        assert_eq!(g.edge_count(), 67);
        assert_eq!(
            crate::graph::edit_distance(g.edges(), e.reference_graph().edges()),
            1
        );
        assert_eq!(e.graph_to_index(&g).unwrap(), idx);
    }
    let e = counterpart_disjoint_paths(10, 1, 8, 0.5).unwrap();
    assert_eq!(e.cardinality(), Some(1));
}

#[test]
fn ens4_members_satisfy_separation() {
    // Members separate with eta = eta1 + eta2 blockers against paths of
    // length at most ell - 1.
    let e = ensemble4(12, 3, 1, 1, 3, 1, 0.5).unwrap();
    let (eta, gamma) = (3 + 1, 3 - 1);
    for idx in [0u128, 1, 5, 7] {
        let g = e.index_to_graph(idx).unwrap();
        assert!(
            verify_separation(&g, eta, gamma).unwrap(),
            "member {idx} not separated"
        );
        let cp = ClassParams {
            k: g.edge_count(),
            d: 10,
            eta,
            gamma,
        };
        assert!(class_membership(&g, &cp, ClassId::Gkdeg).unwrap());
    }
}

#[test]
fn ens1a_ball_bound_matches_matching_family_form() {
    // The genie-aided family reuses the matching family's product bound.
    let a = ensemble1a(8, 2, 0.5).unwrap();
    let b = ensemble1(8, 2, 0.5).unwrap();
    for q in 0..=3usize {
        assert_eq!(a.log_ball_count(q).unwrap(), b.log_ball_count(q).unwrap());
    }
}

#[test]
fn ball_counts() {
    let e = ensemble2(6, 3, 2, 0.5).unwrap();
    assert_eq!(e.log_ball_count(0).unwrap(), 0.0);
    let e = ensemble3(8, 4, 1, 0.5).unwrap();
    assert!((e.log_ball_count(3).unwrap() - 299f64.ln()).abs() < 1e-9);
    // Validity range: q at most half the free edges.
    let e = ensemble2(3, 3, 1, 0.5).unwrap();
    assert!(e.log_ball_count(2).is_err());
}

#[test]
fn ball_count_exact_matches_binomial_sum_for_ens2() {
    let e = ensemble2(3, 3, 1, 0.5).unwrap();
    for q in 0..=3usize {
        let exact = e.exact_ball_count(5, q).unwrap();
        let analytic: u64 = (0..=q.min(3))
            .map(|j| binom_u128(3, j as u64).unwrap() as u64)
            .sum();
        assert_eq!(exact, analytic);
    }
}

#[test]
fn ball_count_product_bound_dominates_exact_for_ens1_families() {
    let e1 = ensemble1(8, 2, 0.5).unwrap();
    let e1a = ensemble1a(8, 3, 0.5).unwrap();
    for e in [&e1, &e1a] {
        for q in 0..=4usize {
            let exact = e.exact_ball_count(0, q).unwrap() as f64;
            let bound = e.log_ball_count(q).unwrap();
            assert!(
                bound >= exact.ln() - 1e-9,
                "product-form A(q) bound below exact ball size at q={q}"
            );
        }
    }
}

#[test]
fn ens1a_closed_form_ball_matches_enumeration() {
    let e = ensemble1a(8, 2, 0.5).unwrap();
    for center in 0..e.cardinality().unwrap() {
        for q in 0..=5usize {
            assert_eq!(
                e.exact_ball_count(center, q).unwrap(),
                e.enumerated_ball_count(center, q).unwrap(),
                "center {center}, q {q}"
            );
        }
    }
}

#[test]
fn member_edit_distance_matches_graphs() {
    let cases: Vec<GraphEnsemble> = vec![
        ensemble1(8, 2, 0.5).unwrap(),
        ensemble1a(8, 2, 0.5).unwrap(),
        ensemble2(6, 3, 2, 0.5).unwrap(),
        ensemble3(4, 2, 1, 0.5).unwrap(),
        counterpart_clique_minus_edge(4, 4, 0.5).unwrap(),
    ];
    for e in &cases {
        let card = e.cardinality().unwrap().min(40);
        for a in 0..card {
            for b in 0..card {
                let ga = e.index_to_graph(a).unwrap();
                let gb = e.index_to_graph(b).unwrap();
                assert_eq!(
                    e.member_edit_distance(a, b).unwrap(),
                    crate::graph::edit_distance(ga.edges(), gb.edges()),
                    "family {} a={a} b={b}",
                    e.family().name()
                );
            }
        }
    }
}

#[test]
fn uniform_draw_is_deterministic() {
    let e = ensemble1a(12, 2, 0.5).unwrap();
    let (i1, _) = e.uniform_draw(77).unwrap();
    let (i2, _) = e.uniform_draw(77).unwrap();
    assert_eq!(i1, i2);
    // |T| = 1 always draws index 0.
    let single = ensemble1a(4, 2, 0.5).unwrap();
    for seed in 0..5 {
        assert_eq!(single.uniform_draw(seed).unwrap().0, 0);
    }
}

#[test]
fn uniform_draw_chi_squared() {
    // 15 members; chi-squared goodness of fit at significance 1e-4.
    let e = ensemble1a(12, 2, 0.5).unwrap();
    let members = e.cardinality().unwrap() as usize;
    assert_eq!(members, 15);
    let draws = 100_000usize;
    let mut counts = vec![0u64; members];
    for t in 0..draws {
        let idx = e.draw_index(crate::rng::derive_seed(2024, &[t as u64])).unwrap();
        counts[idx as usize] += 1;
    }
    let expect = draws as f64 / members as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expect).powi(2) / expect)
        .sum();
    let crit = ChiSquared::new((members - 1) as f64)
        .unwrap()
        .inverse_cdf(1.0 - 1e-4);
    assert!(stat < crit, "chi-squared {stat} above critical {crit}");
}

#[test]
fn descriptors_round_trip() {
    let all = [
        ensemble1(8, 2, 0.5).unwrap(),
        ensemble1a(8, 2, 0.25).unwrap(),
        ensemble2(6, 3, 2, 1.0).unwrap(),
        ensemble3(8, 4, 1, 0.5).unwrap(),
        ensemble4(32, 4, 3, 0, 2, 2, 0.1).unwrap(),
        counterpart_single_edge(10, 0.3).unwrap(),
        counterpart_clique_minus_edge(8, 8, 2.0).unwrap(),
        counterpart_disjoint_paths(40, 4, 8, 0.75).unwrap(),
    ];
    for e in &all {
        let d = e.descriptor();
        let back = GraphEnsemble::from_descriptor(&d).unwrap();
        assert_eq!(back.descriptor(), d);
        assert_eq!(back.cardinality(), e.cardinality());
    }
    assert_eq!(
        ensemble3(8, 4, 1, 0.5).unwrap().descriptor(),
        "family=ens3 p=8 m=4 alpha=1 lambda=0.5"
    );
}

#[test]
fn graph_to_index_rejects_non_members() {
    let e = ensemble1a(8, 2, 0.5).unwrap();
    let g = Graph::new(8, &[(0, 2), (4, 5)]).unwrap();
    assert!(e.graph_to_index(&g).is_err());
    let e = ensemble3(8, 4, 1, 0.5).unwrap();
    let g = Graph::empty(8);
    assert!(e.graph_to_index(&g).is_err());
}
