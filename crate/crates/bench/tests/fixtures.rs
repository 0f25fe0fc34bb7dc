use ban_router_bench::nightly_fixture;
use ban_router_core::{run_query, SearchOptions};

#[test]
fn fixture_is_deterministic_and_solvable() {
    let (a, qa) = nightly_fixture(800, 3, &[4, 6], 3);
    let (b, qb) = nightly_fixture(800, 3, &[4, 6], 3);
    assert_eq!(a.edges(), b.edges());
    assert_eq!(qa, qb);
    assert!(a.ban_count() > 0);
    assert!(!qa.is_empty());
    for q in &qa {
        let sol = run_query(&a, q, SearchOptions::default()).unwrap();
        assert!(!sol.pairs.is_empty());
    }
}
