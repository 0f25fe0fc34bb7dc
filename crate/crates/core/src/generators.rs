//! Gadget instances and seeded synthetic workloads.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Cost, CostParams, Edge, Query, Rating, RoadInstance, Time, VertexId};

/// How the gadgets avoid parallel edges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum GadgetLayout {
    /// Every lower edge goes through its own middle vertex.
    #[default]
    Simple,
    /// Upper and lower edges run in parallel between consecutive vertices.
    Parallel,
}

#[derive(Clone, Debug)]
pub struct PartitionGadget {
    pub instance: RoadInstance,
    pub query: Query,
    /// Cost bound reached exactly when the numbers split evenly.
    pub threshold: Cost,
    /// Opening time of the last edge.
    pub x: Time,
}

/// Path `v_1 … v_{n+1}` with an upper edge of driving time `2 x_i + 2` and a
/// lower connection of driving time 2 per number, then one edge to the
/// destination that opens at `x = Σ x_i + 2n`.
pub fn partition_gadget(numbers: &[i64], costs: CostParams, layout: GadgetLayout) -> Result<PartitionGadget> {
    if numbers.is_empty() {
        return Err(Error::InvalidArgument("partition gadget needs at least one number".into()));
    }
    if let Some(bad) = numbers.iter().find(|&&x| x <= 0) {
        return Err(Error::InvalidArgument(format!("numbers must be positive, got {bad}")));
    }
    if costs.driving >= costs.unrated_waiting() {
        return Err(Error::InvalidArgument(
            "partition gadget needs driving cost below unrated waiting cost".into(),
        ));
    }
    let n = numbers.len();
    let x: Time = numbers.iter().sum::<i64>() + 2 * n as Time;
    let target = n + 1;
    let mut edges = Vec::new();
    let mut vertex_count = n + 2;
    for (i, &xi) in numbers.iter().enumerate() {
        edges.push(Edge::new(i, i + 1, 2 * xi + 2));
        match layout {
            GadgetLayout::Simple => {
                let middle = vertex_count;
                vertex_count += 1;
                edges.push(Edge::new(i, middle, 1));
                edges.push(Edge::new(middle, i + 1, 1));
            }
            GadgetLayout::Parallel => edges.push(Edge::new(i, i + 1, 2)),
        }
    }
    edges.push(Edge::new(n, target, 1).with_bans([(0, x)]));
    let threshold = costs.driving * (x + 1);
    let instance = RoadInstance::new(vertex_count, costs, vec![0; vertex_count], edges)?;
    Ok(PartitionGadget {
        instance,
        query: Query::new(0, target, 0, 2 * x + 2),
        threshold,
        x,
    })
}

#[derive(Clone, Debug)]
pub struct ExponentialGadget {
    pub instance: RoadInstance,
    pub query: Query,
    pub k: u32,
    pub x: Time,
}

impl ExponentialGadget {
    /// Earliest arrival of the path whose `i`-th bit selects the upper edge.
    pub fn arrival(&self, p: u64) -> Time {
        ((1i64 << self.k) - 1) * self.x + 2 * p as Time
    }

    pub fn cost(&self, p: u64) -> Cost {
        let costs = self.instance.costs();
        let (d, c0) = (costs.driving, costs.unrated_waiting());
        ((1i64 << self.k) - 1) * d * self.x + p as Cost * (2 * d - self.x * (d - c0))
    }
}

/// `k` sections; section `i` has a lower edge of driving time `2^{i-1} x` and
/// an upper edge of driving time `2^i` whose ban of length `2^{i-1} x` starts
/// at `(2^i - 1) + (2^{i-1} - 1) x`.
pub fn exponential_gadget(k: u32, costs: CostParams, layout: GadgetLayout) -> Result<ExponentialGadget> {
    let (d, c0) = (costs.driving, costs.unrated_waiting());
    if d <= c0 {
        return Err(Error::InvalidArgument(
            "exponential gadget needs driving cost above unrated waiting cost".into(),
        ));
    }
    if k > 24 {
        return Err(Error::InvalidArgument(format!("gadget size {k} too large")));
    }
    let x = (2 * d + (d - c0) - 1) / (d - c0) + 1;
    let mut edges = Vec::new();
    let mut vertex_count = k as usize + 1;
    for i in 1..=k {
        let (u, v) = (i as usize - 1, i as usize);
        let half = 1i64 << (i - 1);
        let start = (2 * half - 1) + (half - 1) * x;
        edges.push(Edge::new(u, v, 2 * half).with_bans([(start, start + half * x)]));
        match layout {
            GadgetLayout::Simple => {
                let middle = vertex_count;
                vertex_count += 1;
                edges.push(Edge::new(u, middle, 1));
                edges.push(Edge::new(middle, v, half * x - 1));
            }
            GadgetLayout::Parallel => edges.push(Edge::new(u, v, half * x)),
        }
    }
    let instance = RoadInstance::new(vertex_count, costs, vec![0; vertex_count], edges)?;
    let t_max = (((1i64 << k) - 1) * (x + 2)).max(1);
    Ok(ExponentialGadget {
        instance,
        query: Query::new(0, k as usize, 0, t_max),
        k,
        x,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BanPattern {
    /// Up to `max_per_edge` closures of up to `max_len` units anywhere in the horizon.
    SingleClosures { max_per_edge: usize, max_len: Time },
    /// A closure of `length` starting at `start` every `period`, on edges
    /// inside the central `region` share of the grid.
    Nightly {
        period: Time,
        start: Time,
        length: Time,
        region: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomParams {
    pub vertices: usize,
    pub edges: usize,
    /// Probability that an eligible edge gets bans.
    pub ban_density: f64,
    pub ban_pattern: BanPattern,
    pub max_total_bans: Option<usize>,
    /// Relative weight of each rating `0..=r`.
    pub rating_mix: Vec<f64>,
    pub horizon: Time,
    /// Driving time per grid spacing.
    pub time_per_unit: f64,
    pub costs: CostParams,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            vertices: 100,
            edges: 300,
            ban_density: 0.1,
            ban_pattern: BanPattern::SingleClosures {
                max_per_edge: 2,
                max_len: 20,
            },
            max_total_bans: None,
            rating_mix: vec![0.8, 0.04, 0.04, 0.04, 0.04, 0.04],
            horizon: 400,
            time_per_unit: 5.0,
            costs: CostParams::truck_default(),
        }
    }
}

const LAT0: f64 = 48.0;
const LON0: f64 = 11.0;
const SPACING: f64 = 0.01;

/// Perturbed grid with edges between neighbouring cells, driving times from
/// distances, and bans and ratings drawn from `params`.
pub fn random_instance(seed: u64, params: &RandomParams) -> Result<RoadInstance> {
    let n = params.vertices;
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one vertex".into()));
    }
    if params.rating_mix.len() != params.costs.waiting.len() {
        return Err(Error::InvalidArgument(format!(
            "rating mix has {} weights for {} ratings",
            params.rating_mix.len(),
            params.costs.waiting.len()
        )));
    }
    if !(0.0..=1.0).contains(&params.ban_density) {
        return Err(Error::InvalidArgument("ban density must lie in [0, 1]".into()));
    }
    if params.horizon < 1 || params.time_per_unit <= 0.0 {
        return Err(Error::InvalidArgument("horizon and time scale must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    let pos: Vec<(f64, f64)> = (0..n)
        .map(|v| {
            let (r, c) = ((v / cols) as f64, (v % cols) as f64);
            (r + rng.gen_range(-0.3..0.3), c + rng.gen_range(-0.3..0.3))
        })
        .collect();

    let mut candidates = Vec::new();
    for v in 0..n {
        let (r, c) = ((v / cols) as i64, (v % cols) as i64);
        for (dr, dc) in [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)] {
            let (nr, nc) = (r + dr, c + dc);
            if nr < 0 || nc < 0 || nc >= cols as i64 || nr >= rows as i64 {
                continue;
            }
            let w = nr as usize * cols + nc as usize;
            if w < n {
                candidates.push((v, w));
            }
        }
    }
    candidates.shuffle(&mut rng);
    candidates.truncate(params.edges);
    while candidates.len() < params.edges && n > 1 {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            candidates.push((u, v));
        }
    }

    let in_region = |v: VertexId, share: f64| {
        let (r, c) = (pos[v].0 / rows.max(1) as f64, pos[v].1 / cols as f64);
        let lo = (1.0 - share) / 2.0;
        (lo..=1.0 - lo).contains(&r) && (lo..=1.0 - lo).contains(&c)
    };
    let mut total_bans = 0usize;
    let mut edges = Vec::with_capacity(candidates.len());
    for (u, v) in candidates {
        let dist = ((pos[u].0 - pos[v].0).powi(2) + (pos[u].1 - pos[v].1).powi(2)).sqrt();
        let driving_time = ((dist * params.time_per_unit).round() as Time).max(1);
        let mut bans: Vec<(Time, Time)> = Vec::new();
        let eligible = match &params.ban_pattern {
            BanPattern::SingleClosures { .. } => true,
            BanPattern::Nightly { region, .. } => in_region(u, *region) && in_region(v, *region),
        };
        if eligible && rng.gen_bool(params.ban_density) {
            match &params.ban_pattern {
                BanPattern::SingleClosures { max_per_edge, max_len } => {
                    let count = rng.gen_range(1..=(*max_per_edge).max(1));
                    for _ in 0..count {
                        let start = rng.gen_range(0..params.horizon);
                        let len = rng.gen_range(1..=(*max_len).max(1));
                        bans.push((start, start + len));
                    }
                }
                BanPattern::Nightly {
                    period,
                    start,
                    length,
                    ..
                } => {
                    let mut t = *start;
                    while t < params.horizon {
                        bans.push((t, t + length));
                        t += (*period).max(1);
                    }
                }
            }
        }
        let mut bans = normalise_bans(bans);
        if let Some(cap) = params.max_total_bans {
            bans.truncate(cap.saturating_sub(total_bans));
        }
        total_bans += bans.len();
        edges.push(Edge::new(u, v, driving_time).with_bans(bans));
    }

    let weights = WeightedIndex::new(&params.rating_mix)
        .map_err(|e| Error::InvalidArgument(format!("rating mix: {e}")))?;
    let ratings: Vec<Rating> = (0..n).map(|_| weights.sample(&mut rng)).collect();
    let coords = pos
        .iter()
        .map(|&(r, c)| Some((LAT0 + r * SPACING, LON0 + c * SPACING)))
        .collect();
    RoadInstance::new(n, params.costs.clone(), ratings, edges)?.with_coords(coords)
}

/// Sorts bans and fuses overlapping or touching ones.
fn normalise_bans(mut bans: Vec<(Time, Time)>) -> Vec<(Time, Time)> {
    bans.sort_unstable();
    let mut out: Vec<(Time, Time)> = Vec::with_capacity(bans.len());
    for (a, b) in bans {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Vertices in the order an unrestricted Dijkstra from `source` settles them.
pub fn settle_order(instance: &RoadInstance, source: VertexId) -> Vec<VertexId> {
    let mut dist: Vec<Option<Time>> = vec![None; instance.vertex_count()];
    let mut done = vec![false; instance.vertex_count()];
    let mut order = Vec::new();
    let mut heap = BinaryHeap::new();
    dist[source] = Some(0);
    heap.push(Reverse((0, source)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        order.push(v);
        for &e in instance.outgoing(v) {
            let edge = instance.edge(e);
            let nd = d + edge.driving_time;
            if dist[edge.head].is_none_or(|old| nd < old) {
                dist[edge.head] = Some(nd);
                heap.push(Reverse((nd, edge.head)));
            }
        }
    }
    order
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankedQuery {
    pub query: Query,
    pub rank: u32,
}

/// For each of `sources` random sources and each rank `i`, the query to the
/// `2^i`-th settled vertex (the source itself is the first). Ranks beyond the
/// settled count are skipped; the number of skipped queries is returned too.
pub fn rank_queries(
    instance: &RoadInstance,
    seed: u64,
    sources: usize,
    ranks: &[u32],
    t_min: Time,
    t_max: Time,
) -> (Vec<RankedQuery>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut skipped = 0;
    if ranks.is_empty() || instance.vertex_count() == 0 {
        return (out, skipped);
    }
    for _ in 0..sources {
        let source = rng.gen_range(0..instance.vertex_count());
        let order = settle_order(instance, source);
        for &rank in ranks {
            match 1usize.checked_shl(rank).and_then(|i| order.get(i - 1)) {
                Some(&target) => out.push(RankedQuery {
                    query: Query::new(source, target, t_min, t_max),
                    rank,
                }),
                None => {
                    log::info!("source {source} settles fewer than 2^{rank} vertices, query skipped");
                    skipped += 1;
                }
            }
        }
    }
    (out, skipped)
}

/// Box `(lat_min, lon_min, lat_max, lon_max)`.
pub type Region = (f64, f64, f64, f64);

fn vertices_in(instance: &RoadInstance, region: Region) -> Result<Vec<VertexId>> {
    let mut out = Vec::new();
    for v in 0..instance.vertex_count() {
        let (lat, lon) = instance.coord(v).ok_or(Error::NoCoordinates(v))?;
        if (region.0..=region.2).contains(&lat) && (region.1..=region.3).contains(&lon) {
            out.push(v);
        }
    }
    Ok(out)
}

/// `count` random vertex pairs between two regions, each in both directions.
pub fn region_queries(
    instance: &RoadInstance,
    seed: u64,
    count: usize,
    from: Region,
    to: Region,
    t_min: Time,
    t_max: Time,
) -> Result<Vec<Query>> {
    let a = vertices_in(instance, from)?;
    let b = vertices_in(instance, to)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("a region contains no vertex".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * count);
    for _ in 0..count {
        let s = *a.choose(&mut rng).expect("non-empty");
        let z = *b.choose(&mut rng).expect("non-empty");
        out.push(Query::new(s, z, t_min, t_max));
        out.push(Query::new(z, s, t_min, t_max));
    }
    Ok(out)
}
