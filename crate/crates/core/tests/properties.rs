use infomgf::eval::{clustering_metrics, gen_sbm, perturb_edges, PerturbMode, SbmSpec};
use infomgf::postprocess::approx_topk;
use infomgf::{cosine_similarity, normalize_sym, postprocess, seeded_rng, topk_rows, Dense, Graph, Sparse};
use proptest::prelude::*;

fn matrix(max_n: usize, max_d: usize) -> impl Strategy<Value = Dense> {
    (2..=max_n, 1..=max_d).prop_flat_map(|(n, d)| {
        proptest::collection::vec(-1.0f64..1.0, n * d).prop_map(move |v| Dense::from_vec(n, d, v).unwrap())
    })
}

fn graph_edges(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (3..=max_n).prop_flat_map(|n| {
        let pairs = proptest::collection::btree_set((0..n, 0..n), 0..3 * n);
        pairs.prop_map(move |s| {
            let e = s
                .into_iter()
                .filter(|(a, b)| a != b)
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            (n, e)
        })
    })
}

proptest! {
    #[test]
    fn postprocess_is_symmetric_nonnegative_and_looped(h in matrix(16, 5), k in 1usize..8) {
        let s = cosine_similarity(&h);
        let k = k.min(s.n_rows());
        let a = postprocess(&s, k).unwrap();
        prop_assert!(a.is_symmetric());
        prop_assert!(a.values().iter().all(|&v| v >= 0.0));
        for i in 0..a.n_rows() {
            prop_assert!(a.get(i, i) > 0.0);
        }
    }

    #[test]
    fn normalized_rows_have_bounded_spectrum(edges in graph_edges(12)) {
        let (n, e) = edges;
        let a: Sparse = Graph::adjacency_from_edges(n, &e).unwrap();
        let an = normalize_sym(&a).unwrap();
        // D^{-1/2} (A + I) D^{-1/2} has spectral radius 1 with eigenvector d^{1/2}.
        let deg: Vec<f64> = (0..n).map(|i| 1.0 + a.row(i).count() as f64).collect();
        let v = Dense::from_fn(n, 1, |r, _| deg[r].sqrt());
        let av = an.spmm(&v).unwrap();
        prop_assert!(av.max_abs_diff(&v) < 1e-12);
    }

    #[test]
    fn approx_topk_with_full_batch_is_exact(h in matrix(14, 4), k in 1usize..5, seed in 0u64..100) {
        let n = h.n_rows();
        let k = k.min(n);
        let exact = topk_rows(&cosine_similarity(&h), k);
        let approx = approx_topk(&h, k, n, seed).unwrap();
        prop_assert_eq!(exact.pattern(), approx.pattern());
        let diff = exact.values().iter().zip(approx.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12);
    }

    #[test]
    fn clustering_metrics_ignore_relabeling(pred in proptest::collection::vec(0usize..3, 12), perm in Just([2usize, 0, 1])) {
        let truth: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let relabeled: Vec<usize> = pred.iter().map(|&p| perm[p]).collect();
        let a = clustering_metrics(&pred, &truth, 3).unwrap();
        let b = clustering_metrics(&relabeled, &truth, 3).unwrap();
        prop_assert!((a.acc - b.acc).abs() < 1e-12);
        prop_assert!((a.nmi - b.nmi).abs() < 1e-12);
        prop_assert!((a.ari - b.ari).abs() < 1e-12);
        prop_assert!((a.f1 - b.f1).abs() < 1e-12);
    }

    #[test]
    fn perturbation_edge_sets_nest(rate in 0.0f64..1.0, seed in 0u64..50) {
        let g = gen_sbm(&SbmSpec { n: 60, ..SbmSpec::reference(seed) }).unwrap();
        let cut = perturb_edges(&g, rate, PerturbMode::Delete, &mut seeded_rng(seed)).unwrap();
        let grown = perturb_edges(&g, rate, PerturbMode::Add, &mut seeded_rng(seed)).unwrap();
        for v in 0..g.view_count() {
            let orig = Graph::edge_list(&g.views[v]);
            let m = orig.len();
            let want = (rate * m as f64).floor() as usize;
            let small = Graph::edge_list(&cut.views[v]);
            let big = Graph::edge_list(&grown.views[v]);
            prop_assert_eq!(small.len(), m - want);
            prop_assert_eq!(big.len(), m + want);
            prop_assert!(small.iter().all(|e| orig.binary_search(e).is_ok()));
            prop_assert!(orig.iter().all(|e| big.binary_search(e).is_ok()));
        }
    }
}

#[test]
fn sbm_views_share_exactly_the_common_edges() {
    let spec = SbmSpec {
        p_in_unique: vec![0.0],
        p_out: 0.0,
        ..SbmSpec::reference(8)
    };
    let g = gen_sbm(&spec).unwrap();
    assert_eq!(g.views[0], g.views[1]);
    assert_eq!(gen_sbm(&spec).unwrap(), g);
}
