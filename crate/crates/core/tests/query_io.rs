mod common;

use common::*;
use diskhop::oracle::dijkstra_oracle;
use diskhop::query::{backward_scan_ssd, core_search_ssd, forward_search, SearchState};
use diskhop::store::IoTrace;
use diskhop::{BuildConfig, NodeId, QueryEngine};

fn tight(seed: u64) -> BuildConfig {
    BuildConfig {
        memory_budget: 24 * 200,
        block_size: 256,
        min_shrink: 0.2,
        rng_seed: seed,
        ..Default::default()
    }
}

fn one_scan(t: &IoTrace, what: &str) {
    assert!(t.within_one_scan(), "{what}: {} fetches of {} blocks", t.fetch_count(), t.file_blocks());
}

#[test]
fn ssd_reads_each_file_at_most_once_in_order() {
    let g = random_graph(300, 1200, 40, 1);
    let dir = tempfile::tempdir().unwrap();
    let bundle = build(&g, &tight(1), dir.path());
    assert!(bundle.archived_count() > 100);
    for s in [0, 17, 150, 299] {
        for r in [diskhop::ssd_query(&bundle, s).unwrap(), diskhop::sssp_query(&bundle, s).unwrap()] {
            let st = &r.stats;
            if let Some(f) = &st.forward.io {
                one_scan(f, "forward");
                assert!(f.strictly_increasing(), "forward {:?}", f.fetches);
            }
            let core = st.core_load.as_ref().unwrap();
            one_scan(core, "core");
            assert!(core.strictly_increasing());
            let b = st.backward.io.as_ref().unwrap();
            one_scan(b, "backward");
            assert!(b.strictly_increasing(), "backward file is read front to back");
            assert_eq!(b.fetch_count() as u64, b.file_blocks());
            assert_eq!((st.backward.pushes, st.backward.pops), (0, 0));
        }
    }
}

#[test]
fn ppd_target_side_reads_backward_file_once_in_reverse() {
    let g = random_graph(300, 1200, 40, 2);
    let dir = tempfile::tempdir().unwrap();
    let engine = QueryEngine::new(build(&g, &tight(2), dir.path())).unwrap();
    for (s, t) in [(0, 299), (5, 6), (100, 3)] {
        let r = engine.ppd(s, t).unwrap();
        if let Some(f) = &r.stats.forward.io {
            one_scan(f, "forward");
            assert!(f.strictly_increasing());
        }
        if let Some(b) = &r.stats.target_side.io {
            one_scan(b, "target side");
            assert!(b.strictly_decreasing(), "{:?}", b.fetches);
        }
        assert_eq!(r.stats.backward, Default::default());
    }
}

#[test]
fn tables_stay_upper_bounds_through_each_phase() {
    for seed in 0..5 {
        let g = random_graph(200, 800, 25, seed);
        let dir = tempfile::tempdir().unwrap();
        let bundle = build(&g, &tight(seed), dir.path());
        let core = bundle.load_core().unwrap();
        for s in (0..200 as NodeId).step_by(37) {
            let exact = dijkstra_oracle(&g, s).unwrap().distances;
            let mut st = SearchState::new(200, false, false);
            let bounded = |st: &SearchState| st.kappa_f.iter().zip(&exact).all(|(k, d)| k >= d);
            forward_search(&bundle, s, &mut st).unwrap();
            assert!(bounded(&st));
            core_search_ssd(&core, &mut st).unwrap();
            assert!(bounded(&st));
            assert!(st.stats.core.max_expansions_per_node <= 1);
            for &v in core.nodes() {
                assert_eq!(st.kappa_f[v as usize], exact[v as usize], "core node {v} final after core search");
            }
            backward_scan_ssd(&bundle, &mut st).unwrap();
            assert_eq!(st.kappa_f, exact);
        }
    }
}

#[test]
fn forward_pass_starts_at_the_source_block() {
    let g = random_graph(200, 500, 10, 9);
    let dir = tempfile::tempdir().unwrap();
    let bundle = build(&g, &tight(9), dir.path());
    let last = bundle.archived_count() - 1;
    let s = bundle.meta().order[last];
    let r = diskhop::ssd_query(&bundle, s).unwrap();
    let f = r.stats.forward.io.as_ref().unwrap();
    assert_eq!(f.fetches[0], bundle.meta().forward_offsets[last] / 256);
    assert_eq!(r.stats.forward.expanded, 1);
}

#[test]
fn unknown_source_is_rejected() {
    let g = random_graph(20, 40, 5, 0);
    let dir = tempfile::tempdir().unwrap();
    let engine = QueryEngine::new(build(&g, &small_config(0), dir.path())).unwrap();
    assert!(matches!(engine.ssd(20), Err(diskhop::Error::UnknownNode(20))));
    assert!(matches!(engine.ppd(0, 99), Err(diskhop::Error::UnknownNode(99))));
}
