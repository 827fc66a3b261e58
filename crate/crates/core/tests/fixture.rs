mod common;

use common::*;
use diskhop::oracle::{dijkstra_oracle, stored_edges};
use diskhop::query::{ppd_backward, SearchState};
use diskhop::{ssd_query, sssp_query, Distance, EdgeKind};

#[test]
fn builds_three_rounds_with_example_ranks() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = build(&fixture(), &fixture_config(), dir.path());
    let meta = bundle.meta();
    assert_eq!(meta.iterations.len(), 3, "{:#?}", meta.iterations);
    let ranks: Vec<u32> = (1..=10).map(|k| bundle.rank(v(k))).collect();
    assert_eq!(ranks, vec![1, 1, 1, 2, 2, 2, 3, 3, 4, 4]);
    assert_eq!(meta.order, (1..=8).map(v).collect::<Vec<_>>());
}

#[test]
fn creates_exactly_the_example_shortcuts() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = build(&fixture(), &fixture_config(), dir.path());
    let mut shortcuts: Vec<_> = stored_edges(&bundle)
        .unwrap()
        .into_iter()
        .filter(|e| e.kind != EdgeKind::Original)
        .map(|e| (e.from, e.to, e.length, e.pred_hint))
        .collect();
    shortcuts.sort();
    assert_eq!(
        shortcuts,
        vec![(v(8), v(9), 2, v(4)), (v(9), v(7), 2, v(6)), (v(9), v(10), 3, v(7))]
    );
}

#[test]
fn ssd_from_v1_matches_example_distances() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = build(&fixture(), &fixture_config(), dir.path());
    let r = ssd_query(&bundle, v(1)).unwrap();
    let expected = [(9, 1), (6, 2), (7, 3), (10, 4), (8, 5), (5, 5), (4, 6), (2, 7), (3, 5), (1, 0)];
    for (k, d) in expected {
        assert_eq!(r.distance(v(k)), Distance::finite(d), "v{k}");
    }
    let oracle = dijkstra_oracle(&fixture(), v(1)).unwrap();
    assert_eq!(r.distances, oracle.distances);
}

#[test]
fn sssp_from_v1_routes_v7_through_v6() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = build(&fixture(), &fixture_config(), dir.path());
    let r = sssp_query(&bundle, v(1)).unwrap();
    assert_eq!(r.predecessor(v(7)), Some(v(6)));
    assert_eq!(r.predecessor(v(9)), Some(v(1)));
    assert_eq!(r.path_to(v(10)), Some(vec![v(1), v(9), v(6), v(7), v(10)]));
    assert_eq!(r.path_to(v(2)).unwrap().last(), Some(&v(2)));
}

#[test]
fn target_side_search_uses_shortcut_into_v7() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = build(&fixture(), &fixture_config(), dir.path());
    let mut st = SearchState::new(10, false, true);
    ppd_backward(&bundle, v(7), &mut st).unwrap();
    assert_eq!(st.kappa_b[v(9) as usize], Distance::finite(2));
    assert_eq!(st.kappa_b[v(7) as usize], Distance::ZERO);
}

#[test]
fn ppd_examples() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = build(&fixture(), &fixture_config(), dir.path());
    assert_eq!(diskhop::ppd_query(&bundle, v(1), v(10)).unwrap().distance, Distance::finite(4));
    assert_eq!(diskhop::ppd_query(&bundle, v(3), v(3)).unwrap().distance, Distance::ZERO);
    assert_eq!(diskhop::ppd_query(&bundle, v(2), v(1)).unwrap().distance, Distance::UNREACHABLE);
}
