use ban_router_core::ch::ContractionHierarchy;
use ban_router_core::export::{solution_geojson, solution_json};
use ban_router_core::format::{parse_instance, parse_queries, write_instance, write_query};
use ban_router_core::generators::{
    exponential_gadget, partition_gadget, random_instance, rank_queries, GadgetLayout, RandomParams,
};
use ban_router_core::model::{route_cost, route_is_feasible};
use ban_router_core::oracle::oracle_solve;
use ban_router_core::potentials::{backward_dijkstra, PotentialSource};
use ban_router_core::search::run_query_with;
use ban_router_core::{run_query, CostParams, Query, SearchOptions};
use proptest::prelude::*;

fn params(vertices: usize, edges: usize) -> RandomParams {
    RandomParams {
        vertices,
        edges,
        ban_density: 0.4,
        horizon: 120,
        time_per_unit: 3.0,
        costs: CostParams::new(3, vec![3, 2, 1]).unwrap(),
        rating_mix: vec![0.6, 0.2, 0.2],
        ..RandomParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn text_round_trip(seed in any::<u64>(), n in 2usize..30, m in 0usize..80) {
        let inst = random_instance(seed, &params(n, m)).unwrap();
        let text = write_instance(&inst);
        let again = parse_instance(&text).unwrap();
        prop_assert_eq!(write_instance(&again), text);
        prop_assert_eq!(again.edges(), inst.edges());
    }

    #[test]
    fn query_round_trip(s in 0usize..50, z in 0usize..50, t in 0i64..100, len in 1i64..100, cs in proptest::option::of(0i64..5)) {
        let mut q = Query::new(s, z, t, t + len);
        q.source_wait_cost = cs;
        prop_assert_eq!(parse_queries(&write_query(&q)).unwrap(), vec![q]);
    }

    #[test]
    fn research_mode_matches_oracle(seed in any::<u64>()) {
        let mut p = params(9, 24);
        p.costs = CostParams::new(3, vec![2, 1]).unwrap();
        p.rating_mix = vec![0.7, 0.3];
        let inst = random_instance(seed, &p).unwrap();
        let q = Query::new(0, (seed % 9) as usize, 0, 80);
        let sol = run_query(&inst, &q, SearchOptions::default()).unwrap();
        prop_assert_eq!(&sol.pairs, &oracle_solve(&inst, &q).unwrap().pairs);
        for (route, &(_, c)) in sol.routes.iter().zip(&sol.pairs) {
            prop_assert!(route_is_feasible(&inst, &q, route).unwrap());
            prop_assert_eq!(route_cost(&inst, &q, route).unwrap(), c);
        }
    }
}

#[test]
fn gadgets_agree_with_oracle_in_both_layouts() {
    for layout in [GadgetLayout::Simple, GadgetLayout::Parallel] {
        let g = exponential_gadget(3, CostParams::new(3, vec![1]).unwrap(), layout).unwrap();
        let sol = run_query(&g.instance, &g.query, SearchOptions::default()).unwrap();
        assert_eq!(sol.pairs, oracle_solve(&g.instance, &g.query).unwrap().pairs);
        assert_eq!(sol.pairs.len(), 8);

        let p = partition_gadget(&[4, 1, 3, 2], CostParams::new(1, vec![3]).unwrap(), layout).unwrap();
        let sol = run_query(&p.instance, &p.query, SearchOptions::default()).unwrap();
        assert_eq!(sol.pairs, oracle_solve(&p.instance, &p.query).unwrap().pairs);
        assert!(sol.pairs.iter().any(|&(_, c)| c <= p.threshold));
    }
}

#[test]
fn hierarchy_potentials_drive_the_same_search() {
    let inst = random_instance(17, &params(300, 1000)).unwrap();
    let mut buf = Vec::new();
    ContractionHierarchy::build(&inst).write_to(&mut buf).unwrap();
    let ch = ContractionHierarchy::read_from(buf.as_slice()).unwrap();
    assert!(ch.matches(&inst));
    let (queries, _) = rank_queries(&inst, 17, 5, &[4, 6, 8], 0, 300);
    assert!(!queries.is_empty());
    for r in queries {
        let z = r.query.target;
        assert_eq!(ch.potentials(z), backward_dijkstra(&inst, z));
        let a = run_query_with(&inst, &r.query, SearchOptions::default(), PotentialSource::Hierarchy(&ch)).unwrap();
        let b = run_query(&inst, &r.query, SearchOptions::plain()).unwrap();
        assert_eq!(a.pairs, b.pairs);
        assert!(a.stats.pops <= b.stats.pops);
    }
}

#[test]
fn exports_of_a_generated_instance() {
    let inst = random_instance(5, &params(60, 200)).unwrap();
    let (queries, _) = rank_queries(&inst, 5, 3, &[4], 0, 120);
    for r in queries {
        let sol = run_query(&inst, &r.query, SearchOptions::default()).unwrap();
        let geo = solution_geojson(&inst, &sol).unwrap();
        assert_eq!(geo["features"].as_array().unwrap().len(), sol.pairs.len());
        let js = solution_json(&inst, &r.query, &sol).unwrap();
        for route in js["routes"].as_array().unwrap() {
            assert_eq!(route["cost"], route["checked_cost"]);
        }
    }
}
