//! Label-correcting profile search from a source over a time-keyed queue.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{route_cost, Cost, EdgeId, Query, RoadInstance, Route, Time, VertexId};
use crate::potentials::PotentialSource;
use crate::profile::{first_below, link, merge_into, wait_envelope, CostProfile, Parent, Via};
use crate::queue::VertexQueue;
use crate::travel_time::TravelTimeCache;

/// Caps applied when driving and unrated waiting costs differ and none are given.
pub const RESEARCH_ITERATION_CAP: u64 = 2_000_000;
pub const RESEARCH_PIECE_CAP: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SearchOptions {
    pub astar: bool,
    pub prune_target: bool,
    pub prune_bounds: bool,
    pub prune_parent: bool,
    pub iteration_cap: Option<u64>,
    pub piece_cap: Option<usize>,
    /// Count profiles that break the piece-count bound after each iteration.
    pub check_piece_bounds: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            astar: true,
            prune_target: true,
            prune_bounds: true,
            prune_parent: true,
            iteration_cap: None,
            piece_cap: None,
            check_piece_bounds: false,
        }
    }
}

impl SearchOptions {
    /// No potentials and no pruning.
    pub fn plain() -> Self {
        SearchOptions {
            astar: false,
            prune_target: false,
            prune_bounds: false,
            prune_parent: false,
            ..Self::default()
        }
    }

    /// Options from four on/off bits: A*, target, bounds, parent-loop.
    pub fn from_bits(bits: u8) -> Self {
        SearchOptions {
            astar: bits & 1 != 0,
            prune_target: bits & 2 != 0,
            prune_bounds: bits & 4 != 0,
            prune_parent: bits & 8 != 0,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub pops: u64,
    pub relaxations: u64,
    pub improvements: u64,
    pub pruned_vertices: u64,
    pub pruned_bounds: u64,
    pub pruned_parent: u64,
    pub skipped_insertions: u64,
    pub max_pieces: usize,
    pub piece_bound_violations: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ParetoSolution {
    pub pairs: Vec<(Time, Cost)>,
    pub routes: Vec<Route>,
    pub stats: SearchStats,
}

pub struct Search<'a> {
    instance: &'a RoadInstance,
    query: Query,
    options: SearchOptions,
    potentials: Vec<Option<Time>>,
    profiles: Vec<CostProfile>,
    queue: VertexQueue,
    ttfs: TravelTimeCache,
    stats: SearchStats,
    cheapest_rate: Cost,
    touched: Vec<VertexId>,
}

impl<'a> Search<'a> {
    pub fn new(instance: &'a RoadInstance, query: Query, options: SearchOptions) -> Result<Self> {
        Self::with_source(instance, query, options, PotentialSource::Dijkstra)
    }

    pub fn with_source(
        instance: &'a RoadInstance,
        query: Query,
        options: SearchOptions,
        source: PotentialSource<'_>,
    ) -> Result<Self> {
        instance.check_query(&query)?;
        let potentials = if options.astar {
            source.potentials(instance, query.target)
        } else {
            vec![Some(0); instance.vertex_count()]
        };
        Self::with_potentials(instance, query, options, potentials)
    }

    /// Uses the given potentials as they are; they must be consistent lower
    /// bounds on the driving time to the target.
    pub fn with_potentials(
        instance: &'a RoadInstance,
        query: Query,
        mut options: SearchOptions,
        potentials: Vec<Option<Time>>,
    ) -> Result<Self> {
        instance.check_query(&query)?;
        if potentials.len() != instance.vertex_count() {
            return Err(Error::InvalidArgument(format!(
                "{} potentials for {} vertices",
                potentials.len(),
                instance.vertex_count()
            )));
        }
        if !instance.costs().tractable() {
            options.iteration_cap.get_or_insert(RESEARCH_ITERATION_CAP);
            options.piece_cap.get_or_insert(RESEARCH_PIECE_CAP);
        }
        let n = instance.vertex_count();
        let mut profiles = vec![CostProfile::infinite(query.t_max); n];
        let s = query.source;
        profiles[s] = CostProfile::source(query.t_min, query.t_max, instance.waiting_cost(&query, s));
        let mut queue = VertexQueue::new(n);
        let mut stats = SearchStats::default();
        match potentials[s] {
            Some(pi) if query.t_min + pi <= query.t_max => {
                queue.push_or_decrease(s, query.t_min + pi);
            }
            _ => stats.skipped_insertions += 1,
        }
        let cheapest_rate = (0..n)
            .map(|v| instance.waiting_cost(&query, v))
            .chain([instance.costs().driving])
            .min()
            .unwrap_or(0);
        Ok(Search {
            instance,
            ttfs: TravelTimeCache::new(instance, query.t_min, query.t_max),
            query,
            options,
            potentials,
            profiles,
            queue,
            stats,
            cheapest_rate,
            touched: Vec::new(),
        })
    }

    pub fn query(&self) -> &Query {
        &self.query
    }

    pub fn options(&self) -> &SearchOptions {
        &self.options
    }

    pub fn profile(&self, v: VertexId) -> &CostProfile {
        &self.profiles[v]
    }

    pub fn profiles(&self) -> &[CostProfile] {
        &self.profiles
    }

    pub fn potentials(&self) -> &[Option<Time>] {
        &self.potentials
    }

    pub fn stats(&self) -> &SearchStats {
        &self.stats
    }

    pub fn travel_times(&self) -> &TravelTimeCache {
        &self.ttfs
    }

    pub fn is_finished(&self) -> bool {
        self.queue.is_empty()
    }

    /// Runs until the queue is empty.
    pub fn run(&mut self) -> Result<()> {
        while self.step()?.is_some() {}
        Ok(())
    }

    /// Visits one vertex. Returns the vertex and its visiting time.
    pub fn step(&mut self) -> Result<Option<(VertexId, Time)>> {
        let Some((u, key)) = self.queue.pop() else {
            return Ok(None);
        };
        self.stats.pops += 1;
        if let Some(cap) = self.options.iteration_cap {
            if self.stats.pops > cap {
                return Err(Error::CapExceeded {
                    what: "iteration",
                    cap,
                });
            }
        }
        let t_visit = key - self.potentials[u].expect("queued vertices have potentials");
        if self.options.prune_target && self.prune_vertex(u, t_visit) {
            self.stats.pruned_vertices += 1;
            return Ok(Some((u, t_visit)));
        }
        for &e in self.instance.outgoing(u) {
            if self.options.prune_bounds && self.prune_edge(e) {
                self.stats.pruned_bounds += 1;
                continue;
            }
            if self.options.prune_parent && self.prune_parent_loop(u, e) {
                self.stats.pruned_parent += 1;
                continue;
            }
            self.relax_edge(u, e, t_visit);
        }
        let touched = std::mem::take(&mut self.touched);
        for &v in &touched {
            let pieces = self.profiles[v].pieces().len();
            self.stats.max_pieces = self.stats.max_pieces.max(pieces);
            if let Some(cap) = self.options.piece_cap {
                if pieces > cap {
                    return Err(Error::CapExceeded {
                        what: "piece",
                        cap: cap as u64,
                    });
                }
            }
            if self.options.check_piece_bounds && !self.within_piece_bound(v) {
                log::warn!("piece bound broken at vertex {v} after {} iterations", self.stats.pops);
                self.stats.piece_bound_violations += 1;
            }
        }
        self.touched = touched;
        self.touched.clear();
        Ok(Some((u, t_visit)))
    }

    fn within_piece_bound(&self, v: VertexId) -> bool {
        let counts = self.profiles[v].classify();
        let limit = self.stats.pops as usize * self.instance.ban_count();
        counts.convex <= limit
            && counts.discontinuous <= limit
            && counts.max_concave_run <= self.waiting_classes()
            && counts.jumps_up == 0
    }

    /// Distinct waiting rates below the unrated one, counting a source override.
    fn waiting_classes(&self) -> usize {
        let costs = self.instance.costs();
        let mut rates: Vec<Cost> = costs.waiting[1..].to_vec();
        rates.extend(self.query.source_wait_cost);
        rates.retain(|&c| c < costs.unrated_waiting());
        rates.sort_unstable();
        rates.dedup();
        rates.len()
    }

    /// True if no route through `u` leaving at or after `t_visit` can reach
    /// the target as cheaply as the target's current profile.
    ///
    /// Any such route leaves `u` at some `t`, drives at least `π(u)` and
    /// spends every further time unit at no less than the cheapest rate, so
    /// its cost at the target is bounded below by the shifted profile of `u`
    /// under waiting at that rate.
    pub fn prune_vertex(&self, u: VertexId, t_visit: Time) -> bool {
        let target = &self.profiles[self.query.target];
        if target.is_infinite() {
            return false;
        }
        let Some(pi) = self.potentials[u] else {
            return true;
        };
        let last = self.query.t_max - pi;
        if t_visit > last {
            return true;
        }
        let bound = self.profiles[u].shifted(t_visit, last, pi, self.instance.costs().driving * pi);
        let bound = wait_envelope(&bound, self.cheapest_rate);
        first_below(target, &bound, 1).is_none()
    }

    /// True if relaxing `e` cannot lower the head's profile anywhere.
    pub fn prune_edge(&self, e: EdgeId) -> bool {
        let edge = self.instance.edge(e);
        let from = self.profiles[edge.tail].bounds();
        let to = self.profiles[edge.head].bounds();
        let (Some(alpha_u), Some(beta_u)) = (from.alpha, from.beta) else {
            return true;
        };
        let (Some(alpha_v), Some(gamma_v)) = (to.alpha, to.gamma) else {
            return false;
        };
        let cheaper = beta_u + edge.driving_time * self.instance.costs().driving <= gamma_v;
        let earlier = alpha_u + edge.driving_time < alpha_v;
        !(cheaper || earlier)
    }

    /// True if `e` leads back to the vertex all of `u`'s pieces came from,
    /// `u` has no parking and driving is no cheaper than waiting there.
    pub fn prune_parent_loop(&self, u: VertexId, e: EdgeId) -> bool {
        if self.instance.rating(u) != 0 {
            return false;
        }
        let head = self.instance.edge(e).head;
        if self.instance.costs().driving < self.instance.waiting_cost(&self.query, head) {
            return false;
        }
        let pieces = self.profiles[u].pieces();
        !pieces.is_empty()
            && pieces
                .iter()
                .all(|p| p.parent.parent_vertex() == Some(head))
    }

    /// Link, envelope and merge along `e`; queues the head on improvement.
    pub fn relax_edge(&mut self, u: VertexId, e: EdgeId, t_visit: Time) {
        self.stats.relaxations += 1;
        let v = self.instance.edge(e).head;
        let ttf = self.ttfs.get(self.instance, e);
        let candidate = link(&self.profiles[u], ttf, u, self.instance.costs(), t_visit);
        if candidate.is_infinite() {
            return;
        }
        let candidate = wait_envelope(&candidate, self.instance.waiting_cost(&self.query, v));
        let Some(t_star) = merge_into(&mut self.profiles[v], &candidate) else {
            return;
        };
        self.stats.improvements += 1;
        self.touched.push(v);
        match self.potentials[v] {
            Some(pi) if t_star + pi <= self.query.t_max => {
                self.queue.push_or_decrease(v, t_star + pi);
            }
            _ => self.stats.skipped_insertions += 1,
        }
    }

    /// Pareto-optimal arrival pairs at the target.
    pub fn pareto_pairs(&self) -> Vec<(Time, Cost)> {
        self.profiles[self.query.target].pareto_pairs()
    }

    /// Follows parent pointers back from the target at time `t`.
    pub fn reconstruct(&self, t: Time) -> Result<Route> {
        let q = &self.query;
        let mut vertices = Vec::new();
        let mut arrivals = Vec::new();
        let mut departures = Vec::new();
        let mut edges = Vec::new();
        let (mut v, mut dep) = (q.target, t);
        loop {
            let piece = self.profiles[v]
                .piece_at(dep)
                .ok_or_else(|| Error::Reconstruction(format!("vertex {v} unreachable at {dep}")))?;
            let (arr, via) = match piece.parent {
                Parent::Arrive(via) => (dep, via),
                Parent::Wait { since, via } => (since, via),
            };
            vertices.push(v);
            arrivals.push(arr);
            departures.push(dep);
            match via {
                Via::Start => {
                    if v != q.source || arr != q.t_min {
                        return Err(Error::Reconstruction(format!(
                            "start marker at vertex {v}, time {arr}"
                        )));
                    }
                    break;
                }
                Via::Edge { edge, tail } => {
                    let leave = self
                        .ttfs
                        .get(self.instance, edge)
                        .latest_departure(arr)
                        .ok_or_else(|| Error::Reconstruction(format!("edge {edge} unusable at {arr}")))?;
                    edges.push(edge);
                    v = tail;
                    dep = leave;
                }
            }
        }
        Ok(reversed_route(vertices, arrivals, departures, edges))
    }

    /// Collects the Pareto pairs with one checked route each.
    pub fn solution(&self) -> Result<ParetoSolution> {
        let pairs = self.pareto_pairs();
        let routes = pairs
            .iter()
            .map(|&(t, cost)| {
                let route = self.reconstruct(t)?;
                check_route(self.instance, &self.query, &route, t, cost)?;
                Ok(route)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ParetoSolution {
            pairs,
            routes,
            stats: self.stats.clone(),
        })
    }
}

fn reversed_route(
    mut vertices: Vec<VertexId>,
    mut arrivals: Vec<Time>,
    mut departures: Vec<Time>,
    mut edges: Vec<EdgeId>,
) -> Route {
    vertices.reverse();
    arrivals.reverse();
    departures.reverse();
    edges.reverse();
    Route {
        vertices,
        arrivals,
        departures,
        edges,
    }
}

fn check_route(instance: &RoadInstance, query: &Query, route: &Route, t: Time, cost: Cost) -> Result<()> {
    let actual = route_cost(instance, query, route)?;
    if actual != cost || route.arrival() != t {
        return Err(Error::Reconstruction(format!(
            "route arrives at {} with cost {actual}, expected ({t}, {cost})",
            route.arrival()
        )));
    }
    Ok(())
}

/// Rebuilds a route from final profiles alone: at each vertex look for an
/// incoming edge whose tail value plus edge cost accounts for the current
/// value, otherwise step back one unit of waiting.
pub fn reconstruct_from_profiles(
    instance: &RoadInstance,
    query: &Query,
    profiles: &[CostProfile],
    ttfs: &TravelTimeCache,
    t: Time,
) -> Result<Route> {
    let costs = instance.costs();
    let mut vertices = Vec::new();
    let mut arrivals = Vec::new();
    let mut departures = Vec::new();
    let mut edges = Vec::new();
    let (mut v, mut dep, mut at) = (query.target, t, t);
    'walk: loop {
        let value = profiles[v]
            .value(at)
            .ok_or_else(|| Error::Reconstruction(format!("vertex {v} unreachable at {at}")))?;
        if v == query.source && at == query.t_min {
            vertices.push(v);
            arrivals.push(at);
            departures.push(dep);
            break;
        }
        for &e in instance.incoming(v) {
            let edge = instance.edge(e);
            let Some(leave) = ttfs.get(instance, e).latest_departure(at) else {
                continue;
            };
            let Some(before) = profiles[edge.tail].value(leave) else {
                continue;
            };
            if before + costs.edge_cost(edge.driving_time, at - leave) <= value {
                vertices.push(v);
                arrivals.push(at);
                departures.push(dep);
                edges.push(e);
                v = edge.tail;
                dep = leave;
                at = leave;
                continue 'walk;
            }
        }
        let rate = instance.waiting_cost(query, v);
        match profiles[v].value(at - 1) {
            Some(before) if at > query.t_min && before + rate <= value => at -= 1,
            _ => {
                return Err(Error::Reconstruction(format!(
                    "no predecessor for vertex {v} at {at}"
                )))
            }
        }
    }
    Ok(reversed_route(vertices, arrivals, departures, edges))
}

/// Runs a query with backward-Dijkstra potentials.
pub fn run_query(instance: &RoadInstance, query: &Query, options: SearchOptions) -> Result<ParetoSolution> {
    run_query_with(instance, query, options, PotentialSource::Dijkstra)
}

pub fn run_query_with(
    instance: &RoadInstance,
    query: &Query,
    options: SearchOptions,
    source: PotentialSource<'_>,
) -> Result<ParetoSolution> {
    let mut search = Search::with_source(instance, query.clone(), options, source)?;
    search.run()?;
    search.solution()
}
