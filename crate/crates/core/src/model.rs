//! Road instances, queries, routes, and the reference semantics of route
//! feasibility and route cost that every solver in this crate is checked against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;
/// Integer point in time.
pub type Time = i64;
/// Integer cost. Rational cost parameters must be scaled by a common denominator.
pub type Cost = i64;
pub type Rating = usize;

/// Half-open span `[closed, open)` during which an edge must not be traversed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BanInterval {
    pub closed: Time,
    pub open: Time,
}

impl BanInterval {
    pub fn new(closed: Time, open: Time) -> Self {
        BanInterval { closed, open }
    }

    pub fn len(&self) -> Time {
        self.open - self.closed
    }

    pub fn is_empty(&self) -> bool {
        self.open <= self.closed
    }

    /// Number of time units shared with `[from, to)`.
    pub fn overlap(&self, from: Time, to: Time) -> Time {
        (self.open.min(to) - self.closed.max(from)).max(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub tail: VertexId,
    pub head: VertexId,
    pub driving_time: Time,
    pub bans: Vec<BanInterval>,
}

impl Edge {
    pub fn new(tail: VertexId, head: VertexId, driving_time: Time) -> Self {
        Edge {
            tail,
            head,
            driving_time,
            bans: Vec::new(),
        }
    }

    pub fn with_bans(mut self, bans: impl IntoIterator<Item = (Time, Time)>) -> Self {
        self.bans
            .extend(bans.into_iter().map(|(c, o)| BanInterval::new(c, o)));
        self
    }

    /// Time units of `[from, to)` during which the edge is closed.
    pub fn closed_time(&self, from: Time, to: Time) -> Time {
        self.bans.iter().map(|ban| ban.overlap(from, to)).sum()
    }
}

/// Driving cost and per-rating waiting costs, all per time unit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostParams {
    pub driving: Cost,
    /// `waiting[i]` is the cost of waiting one time unit at a vertex with rating `i`.
    /// Index 0 also applies to waiting on edges.
    pub waiting: Vec<Cost>,
}

impl CostParams {
    pub fn new(driving: Cost, waiting: Vec<Cost>) -> Result<Self> {
        let params = CostParams { driving, waiting };
        params.validate()?;
        Ok(params)
    }

    /// Driving cost 14, waiting costs 14, 7, 6, 5, 4, 3 for ratings 0..=5.
    pub fn truck_default() -> Self {
        CostParams {
            driving: 14,
            waiting: vec![14, 7, 6, 5, 4, 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.waiting.is_empty() {
            return Err(Error::InvalidInstance(
                "at least the unrated waiting cost is required".into(),
            ));
        }
        if self.driving < 0 || self.waiting.iter().any(|&c| c < 0) {
            return Err(Error::InvalidInstance("costs must be non-negative".into()));
        }
        for (i, pair) in self.waiting.windows(2).enumerate() {
            if pair[1] >= pair[0] {
                return Err(Error::InvalidInstance(format!(
                    "waiting cost of rating {} must be below that of rating {}",
                    i + 1,
                    i
                )));
            }
        }
        Ok(())
    }

    pub fn max_rating(&self) -> Rating {
        self.waiting.len() - 1
    }

    pub fn unrated_waiting(&self) -> Cost {
        self.waiting[0]
    }

    /// True iff driving costs as much as waiting at an unrated location, the
    /// regime in which the profile search runs in polynomial time.
    pub fn tractable(&self) -> bool {
        self.driving == self.waiting[0]
    }

    /// Cost of traversing an edge with driving time `driving_time` in `duration` time units.
    pub fn edge_cost(&self, driving_time: Time, duration: Time) -> Cost {
        self.driving * driving_time + self.waiting[0] * (duration - driving_time)
    }
}

/// Immutable road graph with ban intervals, ratings and cost parameters.
#[derive(Clone, Debug)]
pub struct RoadInstance {
    vertex_count: usize,
    edges: Vec<Edge>,
    ratings: Vec<Rating>,
    costs: CostParams,
    coords: Vec<Option<(f64, f64)>>,
    out_offsets: Vec<usize>,
    out_edges: Vec<EdgeId>,
    in_offsets: Vec<usize>,
    in_edges: Vec<EdgeId>,
}

impl RoadInstance {
    /// Builds and validates an instance. The maximal rating is `costs.waiting.len() - 1`.
    pub fn new(
        vertex_count: usize,
        costs: CostParams,
        ratings: Vec<Rating>,
        edges: Vec<Edge>,
    ) -> Result<Self> {
        costs.validate()?;
        let max_rating = costs.max_rating();
        if max_rating > vertex_count {
            return Err(Error::InvalidInstance(format!(
                "maximal rating {max_rating} exceeds vertex count {vertex_count}"
            )));
        }
        if ratings.len() != vertex_count {
            return Err(Error::InvalidInstance(format!(
                "{} ratings for {vertex_count} vertices",
                ratings.len()
            )));
        }
        if let Some((v, &rating)) = ratings.iter().enumerate().find(|(_, &r)| r > max_rating) {
            return Err(Error::InvalidInstance(format!(
                "vertex {v} has rating {rating} above the maximum {max_rating}"
            )));
        }
        for (id, edge) in edges.iter().enumerate() {
            validate_edge(id, edge, vertex_count)?;
        }

        let (out_offsets, out_edges) = adjacency(vertex_count, &edges, |e| e.tail);
        let (in_offsets, in_edges) = adjacency(vertex_count, &edges, |e| e.head);
        Ok(RoadInstance {
            vertex_count,
            edges,
            ratings,
            costs,
            coords: vec![None; vertex_count],
            out_offsets,
            out_edges,
            in_offsets,
            in_edges,
        })
    }

    pub fn with_coords(mut self, coords: Vec<Option<(f64, f64)>>) -> Result<Self> {
        if coords.len() != self.vertex_count {
            return Err(Error::InvalidInstance(format!(
                "{} coordinates for {} vertices",
                coords.len(),
                self.vertex_count
            )));
        }
        self.coords = coords;
        Ok(self)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn costs(&self) -> &CostParams {
        &self.costs
    }

    pub fn max_rating(&self) -> Rating {
        self.costs.max_rating()
    }

    pub fn rating(&self, v: VertexId) -> Rating {
        self.ratings[v]
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    pub fn coord(&self, v: VertexId) -> Option<(f64, f64)> {
        self.coords[v]
    }

    pub fn has_coords(&self) -> bool {
        self.coords.iter().any(Option::is_some)
    }

    /// Total number of ban intervals over all edges.
    pub fn ban_count(&self) -> usize {
        self.edges.iter().map(|e| e.bans.len()).sum()
    }

    pub fn outgoing(&self, v: VertexId) -> &[EdgeId] {
        &self.out_edges[self.out_offsets[v]..self.out_offsets[v + 1]]
    }

    pub fn incoming(&self, v: VertexId) -> &[EdgeId] {
        &self.in_edges[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    /// Waiting cost per time unit at `v` for `query`, honoring the source override.
    pub fn waiting_cost(&self, query: &Query, v: VertexId) -> Cost {
        match query.source_wait_cost {
            Some(cost) if v == query.source => cost,
            _ => self.costs.waiting[self.ratings[v]],
        }
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v < self.vertex_count {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    pub fn check_query(&self, query: &Query) -> Result<()> {
        self.check_vertex(query.source)?;
        self.check_vertex(query.target)?;
        if query.t_min >= query.t_max {
            return Err(Error::InvalidQuery(format!(
                "empty planning horizon [{}, {}]",
                query.t_min, query.t_max
            )));
        }
        if let Some(cost) = query.source_wait_cost {
            if cost < 0 || cost > self.costs.unrated_waiting() {
                return Err(Error::InvalidQuery(format!(
                    "source waiting cost {cost} must lie in 0..={}",
                    self.costs.unrated_waiting()
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn validate_edge(id: EdgeId, edge: &Edge, vertex_count: usize) -> Result<()> {
    if edge.tail >= vertex_count || edge.head >= vertex_count {
        return Err(Error::InvalidInstance(format!(
            "edge {id} ({} -> {}) references a vertex outside 0..{vertex_count}",
            edge.tail, edge.head
        )));
    }
    if edge.driving_time < 1 {
        return Err(Error::InvalidInstance(format!(
            "edge {id} has driving time {}, at least 1 is required",
            edge.driving_time
        )));
    }
    let mut last_open = None;
    for ban in &edge.bans {
        if ban.is_empty() {
            return Err(Error::InvalidInstance(format!(
                "edge {id} has an empty ban interval [{}, {})",
                ban.closed, ban.open
            )));
        }
        if last_open.is_some_and(|prev| ban.closed < prev) {
            return Err(Error::InvalidInstance(format!(
                "edge {id} has overlapping or unsorted ban intervals"
            )));
        }
        last_open = Some(ban.open);
    }
    Ok(())
}

fn adjacency(
    vertex_count: usize,
    edges: &[Edge],
    key: impl Fn(&Edge) -> VertexId,
) -> (Vec<usize>, Vec<EdgeId>) {
    let mut offsets = vec![0; vertex_count + 1];
    for edge in edges {
        offsets[key(edge) + 1] += 1;
    }
    for i in 0..vertex_count {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut ids = vec![0; edges.len()];
    for (id, edge) in edges.iter().enumerate() {
        let slot = &mut fill[key(edge)];
        ids[*slot] = id;
        *slot += 1;
    }
    (offsets, ids)
}

/// Source, destination and planning horizon `[t_min, t_max]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub source: VertexId,
    pub target: VertexId,
    pub t_min: Time,
    pub t_max: Time,
    /// Replaces the rating-based waiting cost at the source vertex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_wait_cost: Option<Cost>,
}

impl Query {
    pub fn new(source: VertexId, target: VertexId, t_min: Time, t_max: Time) -> Self {
        Query {
            source,
            target,
            t_min,
            t_max,
            source_wait_cost: None,
        }
    }

    pub fn with_source_wait_cost(mut self, cost: Cost) -> Self {
        self.source_wait_cost = Some(cost);
        self
    }
}

/// Vertices, arrival and departure times, and the edges between consecutive vertices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    #[serde(rename = "R")]
    pub vertices: Vec<VertexId>,
    #[serde(rename = "A")]
    pub arrivals: Vec<Time>,
    #[serde(rename = "D")]
    pub departures: Vec<Time>,
    #[serde(rename = "E")]
    pub edges: Vec<EdgeId>,
}

impl Route {
    /// Route that stays at `v` during `[arrival, departure]`.
    pub fn single(v: VertexId, arrival: Time, departure: Time) -> Self {
        Route {
            vertices: vec![v],
            arrivals: vec![arrival],
            departures: vec![departure],
            edges: Vec::new(),
        }
    }

    /// Resolves the edge between each pair of consecutive vertices. Among parallel
    /// edges the one that admits the traversal at the lowest cost is chosen.
    pub fn from_vertices(
        instance: &RoadInstance,
        vertices: Vec<VertexId>,
        arrivals: Vec<Time>,
        departures: Vec<Time>,
    ) -> Result<Self> {
        for &v in &vertices {
            instance.check_vertex(v)?;
        }
        let mut edges = Vec::with_capacity(vertices.len().saturating_sub(1));
        for i in 1..vertices.len() {
            let (tail, head) = (vertices[i - 1], vertices[i]);
            let (dep, arr) = (
                departures.get(i - 1).copied().unwrap_or_default(),
                arrivals.get(i).copied().unwrap_or_default(),
            );
            let candidates = instance
                .outgoing(tail)
                .iter()
                .copied()
                .filter(|&e| instance.edge(e).head == head);
            let best = candidates
                .clone()
                .filter(|&e| traversal_ok(instance.edge(e), dep, arr))
                .min_by_key(|&e| {
                    let edge = instance.edge(e);
                    (instance.costs().edge_cost(edge.driving_time, arr - dep), e)
                })
                .or_else(|| candidates.min());
            edges.push(best.ok_or(Error::MissingEdge { tail, head })?);
        }
        Ok(Route {
            vertices,
            arrivals,
            departures,
            edges,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn arrival(&self) -> Time {
        *self.arrivals.last().expect("route has at least one vertex")
    }

    /// Sum of driving times along the route.
    pub fn driving_time(&self, instance: &RoadInstance) -> Time {
        self.edges
            .iter()
            .map(|&e| instance.edge(e).driving_time)
            .sum()
    }

    fn check_structure(&self, instance: &RoadInstance) -> Result<()> {
        let len = self.vertices.len();
        if len == 0 || self.arrivals.len() != len || self.departures.len() != len {
            return Err(Error::InfeasibleRoute(format!(
                "sequence lengths {}, {}, {} must agree and be positive",
                len,
                self.arrivals.len(),
                self.departures.len()
            )));
        }
        if self.edges.len() + 1 != len {
            return Err(Error::InfeasibleRoute(format!(
                "{} edges for {len} vertices",
                self.edges.len()
            )));
        }
        for &v in &self.vertices {
            instance.check_vertex(v)?;
        }
        for (i, &e) in self.edges.iter().enumerate() {
            if e >= instance.edge_count() {
                return Err(Error::UnknownEdge(e));
            }
            let edge = instance.edge(e);
            if edge.tail != self.vertices[i] || edge.head != self.vertices[i + 1] {
                return Err(Error::MissingEdge {
                    tail: self.vertices[i],
                    head: self.vertices[i + 1],
                });
            }
        }
        Ok(())
    }
}

fn traversal_ok(edge: &Edge, dep: Time, arr: Time) -> bool {
    let span = arr - dep;
    span >= edge.driving_time && edge.closed_time(dep, arr) <= span - edge.driving_time
}

/// Whether `route` is a feasible source-destination route for `query`.
///
/// Errors only when the route references vertices or edges that do not exist
/// or when its sequences are malformed.
pub fn route_is_feasible(instance: &RoadInstance, query: &Query, route: &Route) -> Result<bool> {
    route.check_structure(instance)?;
    let last = route.len() - 1;
    if route.vertices[0] != query.source || route.vertices[last] != query.target {
        return Ok(false);
    }
    if route.arrivals[0] != query.t_min || route.departures[last] > query.t_max {
        return Ok(false);
    }
    if route
        .arrivals
        .iter()
        .zip(&route.departures)
        .any(|(a, d)| a > d)
    {
        return Ok(false);
    }
    Ok(route.edges.iter().enumerate().all(|(i, &e)| {
        traversal_ok(
            instance.edge(e),
            route.departures[i],
            route.arrivals[i + 1],
        )
    }))
}

/// Travel-time cost of a feasible route: rated waiting at vertices, unrated
/// waiting on edges, and driving.
pub fn route_cost(instance: &RoadInstance, query: &Query, route: &Route) -> Result<Cost> {
    if !route_is_feasible(instance, query, route)? {
        return Err(Error::InfeasibleRoute(format!(
            "route {:?} violates the horizon or a ban interval",
            route.vertices
        )));
    }
    let costs = instance.costs();
    let waiting: Cost = route
        .vertices
        .iter()
        .zip(route.arrivals.iter().zip(&route.departures))
        .map(|(&v, (a, d))| instance.waiting_cost(query, v) * (d - a))
        .sum();
    let travelling: Cost = route
        .edges
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            costs.edge_cost(
                instance.edge(e).driving_time,
                route.arrivals[i + 1] - route.departures[i],
            )
        })
        .sum();
    Ok(waiting + travelling)
}

/// Keeps the (time, cost) pairs not dominated by an earlier-or-equal pair of
/// lower-or-equal cost, sorted by time.
pub fn pareto_filter(pairs: &[(Time, Cost)]) -> Vec<(Time, Cost)> {
    let mut sorted = pairs.to_vec();
    sorted.sort_unstable();
    let mut front: Vec<(Time, Cost)> = Vec::new();
    for (t, c) in sorted {
        if front.last().is_none_or(|&(_, best)| c < best) {
            front.push((t, c));
        }
    }
    front
}
