//! Lower bounds on the remaining driving time to the destination.
//!
//! `None` marks vertices from which the destination cannot be reached.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::ch::ContractionHierarchy;
use crate::model::{RoadInstance, Time, VertexId};

/// Where A* potentials come from.
#[derive(Clone, Copy, Debug)]
pub enum PotentialSource<'a> {
    /// Backward Dijkstra on driving times.
    Dijkstra,
    Hierarchy(&'a ContractionHierarchy),
}

impl PotentialSource<'_> {
    pub fn potentials(&self, instance: &RoadInstance, target: VertexId) -> Vec<Option<Time>> {
        match self {
            PotentialSource::Dijkstra => backward_dijkstra(instance, target),
            PotentialSource::Hierarchy(ch) => ch.potentials(target),
        }
    }
}

/// Shortest driving time from every vertex to `target`.
pub fn backward_dijkstra(instance: &RoadInstance, target: VertexId) -> Vec<Option<Time>> {
    let mut dist: Vec<Option<Time>> = vec![None; instance.vertex_count()];
    let mut heap = BinaryHeap::new();
    dist[target] = Some(0);
    heap.push(Reverse((0, target)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if dist[v] != Some(d) {
            continue;
        }
        for &e in instance.incoming(v) {
            let edge = instance.edge(e);
            let nd = d + edge.driving_time;
            if dist[edge.tail].is_none_or(|old| nd < old) {
                dist[edge.tail] = Some(nd);
                heap.push(Reverse((nd, edge.tail)));
            }
        }
    }
    dist
}

/// True if `π(u) ≤ δ(u, v) + π(v)` on every edge and `π(target) = 0`.
pub fn is_consistent(instance: &RoadInstance, target: VertexId, pi: &[Option<Time>]) -> bool {
    pi[target] == Some(0)
        && instance.edges().iter().all(|e| match (pi[e.tail], pi[e.head]) {
            (Some(a), Some(b)) => a <= e.driving_time + b,
            (None, Some(_)) => false,
            _ => true,
        })
}
