//! Fixtures shared by the criterion benchmarks.

use ban_router_core::generators::{random_instance, rank_queries, BanPattern, RandomParams};
use ban_router_core::{Query, RoadInstance};

/// Grid-like graph with nightly bans in its centre and rank-ordered queries
/// that start in the evening so that many routes meet a ban.
pub fn nightly_fixture(vertices: usize, seed: u64, ranks: &[u32], sources: usize) -> (RoadInstance, Vec<Query>) {
    let params = RandomParams {
        vertices,
        edges: vertices * 3,
        ban_density: 0.3,
        ban_pattern: BanPattern::Nightly {
            period: 1440,
            start: 1320,
            length: 360,
            region: 0.6,
        },
        horizon: 2880,
        ..RandomParams::default()
    };
    let instance = random_instance(seed, &params).expect("fixture parameters are valid");
    let (ranked, _) = rank_queries(&instance, seed, sources, ranks, 1200, 2640);
    (instance, ranked.into_iter().map(|r| r.query).collect())
}
