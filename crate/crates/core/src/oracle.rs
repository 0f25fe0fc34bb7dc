//! Exact reference solver over the time-expanded graph.
//!
//! One table entry per vertex and integer time holds the least cost of any
//! feasible route from the source that is at that vertex at that time. Edge
//! transitions leave the tail no later than the latest feasible departure;
//! the open-unit bookkeeping here is separate from the travel-time module.

use crate::error::{Error, Result};
use crate::model::{pareto_filter, Cost, EdgeId, Query, RoadInstance, Route, Time, VertexId};

pub const DEFAULT_STATE_LIMIT: u64 = 1_000_000;

#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub t_min: Time,
    /// `costs[v][t - t_min]`, `None` for unreachable states.
    pub costs: Vec<Vec<Option<Cost>>>,
    pub pairs: Vec<(Time, Cost)>,
    target: VertexId,
    source: VertexId,
    latest: Vec<Vec<Option<Time>>>,
}

/// Latest departure for every arrival time, from a per-unit open mask.
fn latest_departures(instance: &RoadInstance, e: EdgeId, t_min: Time, t_max: Time) -> Vec<Option<Time>> {
    let edge = instance.edge(e);
    let len = (t_max - t_min) as usize;
    let mut open = vec![true; len];
    for ban in &edge.bans {
        for t in ban.closed.max(t_min)..ban.open.min(t_max) {
            open[(t - t_min) as usize] = false;
        }
    }
    let open_times: Vec<Time> = (0..len)
        .filter(|&i| open[i])
        .map(|i| t_min + i as Time)
        .collect();
    let mut out = Vec::with_capacity(len + 1);
    let mut seen = 0usize;
    for i in 0..=len {
        // `seen` open units lie in [t_min, t_min + i)
        let k = seen as Time - edge.driving_time;
        out.push((k >= 0).then(|| open_times[k as usize]));
        if i < len && open[i] {
            seen += 1;
        }
    }
    out
}

pub fn oracle_solve(instance: &RoadInstance, query: &Query) -> Result<OracleSolution> {
    oracle_solve_limited(instance, query, DEFAULT_STATE_LIMIT)
}

pub fn oracle_solve_limited(instance: &RoadInstance, query: &Query, limit: u64) -> Result<OracleSolution> {
    instance.check_query(query)?;
    let n = instance.vertex_count();
    let steps = (query.t_max - query.t_min + 1) as u64;
    let states = steps.saturating_mul(n as u64);
    if states > limit {
        return Err(Error::OracleTooLarge { states, limit });
    }
    let steps = steps as usize;
    let costs_params = instance.costs();
    let (d, c0) = (costs_params.driving, costs_params.unrated_waiting());
    let latest: Vec<Vec<Option<Time>>> = (0..instance.edge_count())
        .map(|e| latest_departures(instance, e, query.t_min, query.t_max))
        .collect();

    let mut costs: Vec<Vec<Option<Cost>>> = vec![vec![None; steps]; n];
    // best[v][i]: least cost[v][j] - c0 * j over j <= i (relative times)
    let mut best: Vec<Vec<Option<Cost>>> = vec![vec![None; steps]; n];
    costs[query.source][0] = Some(0);
    for i in 0..steps {
        for v in 0..n {
            let mut value = costs[v][i];
            if i > 0 {
                if let Some(prev) = costs[v][i - 1] {
                    let w = prev + instance.waiting_cost(query, v);
                    value = Some(value.map_or(w, |x| x.min(w)));
                }
            }
            for &e in instance.incoming(v) {
                let edge = instance.edge(e);
                let Some(leave) = latest[e][i] else {
                    continue;
                };
                let j = (leave - query.t_min) as usize;
                if let Some(b) = best[edge.tail][j] {
                    let via = b + d * edge.driving_time + c0 * (i as Time - edge.driving_time);
                    value = Some(value.map_or(via, |x| x.min(via)));
                }
            }
            costs[v][i] = value;
        }
        for v in 0..n {
            let here = costs[v][i].map(|c| c - c0 * i as Time);
            let before = if i > 0 { best[v][i - 1] } else { None };
            best[v][i] = match (here, before) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
        }
    }
    let all: Vec<(Time, Cost)> = costs[query.target]
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|c| (query.t_min + i as Time, c)))
        .collect();
    Ok(OracleSolution {
        t_min: query.t_min,
        pairs: pareto_filter(&all),
        costs,
        target: query.target,
        source: query.source,
        latest,
    })
}

impl OracleSolution {
    pub fn cost(&self, v: VertexId, t: Time) -> Option<Cost> {
        self.costs[v].get((t - self.t_min) as usize).copied().flatten()
    }

    /// A route achieving the table entry of the target at `t`, found by
    /// walking the table backwards.
    pub fn route(&self, instance: &RoadInstance, query: &Query, t: Time) -> Result<Route> {
        let (d, c0) = (instance.costs().driving, instance.costs().unrated_waiting());
        let mut vertices = vec![self.target];
        let mut arrivals = Vec::new();
        let mut departures = vec![t];
        let mut edges = Vec::new();
        let (mut v, mut at) = (self.target, t);
        'back: loop {
            let value = self
                .cost(v, at)
                .ok_or_else(|| Error::Reconstruction(format!("no entry for vertex {v} at {at}")))?;
            if v == self.source && at == self.t_min {
                arrivals.push(at);
                break;
            }
            let i = (at - self.t_min) as usize;
            for &e in instance.incoming(v) {
                let edge = instance.edge(e);
                let Some(leave) = self.latest[e][i] else {
                    continue;
                };
                for dep in (self.t_min..=leave).rev() {
                    if let Some(before) = self.cost(edge.tail, dep) {
                        let via = before + d * edge.driving_time + c0 * (at - dep - edge.driving_time);
                        if via == value {
                            arrivals.push(at);
                            edges.push(e);
                            vertices.push(edge.tail);
                            departures.push(dep);
                            v = edge.tail;
                            at = dep;
                            continue 'back;
                        }
                    }
                }
            }
            match self.cost(v, at - 1) {
                Some(before) if at > self.t_min && before + instance.waiting_cost(query, v) == value => {
                    at -= 1
                }
                _ => return Err(Error::Reconstruction(format!("stuck at vertex {v}, time {at}"))),
            }
        }
        vertices.reverse();
        arrivals.reverse();
        departures.reverse();
        edges.reverse();
        Ok(Route {
            vertices,
            arrivals,
            departures,
            edges,
        })
    }
}

/// True iff some route reaches the target with cost at most `threshold`.
pub fn oracle_check_decision(instance: &RoadInstance, query: &Query, threshold: Cost) -> Result<bool> {
    let solution = oracle_solve(instance, query)?;
    Ok(solution.pairs.iter().any(|&(_, c)| c <= threshold))
}

/// First entry where two Pareto sets differ, as `(index, left, right)`.
pub fn first_divergence(
    left: &[(Time, Cost)],
    right: &[(Time, Cost)],
) -> Option<(usize, Option<(Time, Cost)>, Option<(Time, Cost)>)> {
    let k = left.iter().zip(right).take_while(|(a, b)| a == b).count();
    (k < left.len().max(right.len())).then(|| (k, left.get(k).copied(), right.get(k).copied()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_instance;
    use crate::model::route_cost;
    use crate::travel_time::latest_departure;

    #[test]
    fn trivial_cases() {
        let inst = parse_instance("instance 2 0\ncosts 2 2\nedge 0 1 3\n").unwrap();
        let sol = oracle_solve(&inst, &Query::new(0, 0, 0, 10)).unwrap();
        assert_eq!(sol.pairs, vec![(0, 0)]);
        let sol = oracle_solve(&inst, &Query::new(0, 1, 2, 10)).unwrap();
        assert_eq!(sol.pairs, vec![(5, 6)]);
        assert!(oracle_check_decision(&inst, &Query::new(0, 1, 0, 10), Cost::MAX).unwrap());
        assert!(!oracle_check_decision(&inst, &Query::new(0, 1, 0, 10), 5).unwrap());
        assert!(!oracle_check_decision(&inst, &Query::new(1, 0, 0, 10), Cost::MAX).unwrap());
    }

    #[test]
    fn divergence_of_corrupted_sets() {
        let good = vec![(5, 9), (7, 8)];
        assert_eq!(first_divergence(&good, &good), None);
        assert_eq!(first_divergence(&good, &[(5, 9), (7, 7)]), Some((1, Some((7, 8)), Some((7, 7)))));
        assert_eq!(first_divergence(&good, &good[..1]), Some((1, Some((7, 8)), None)));
        assert_eq!(first_divergence(&[], &good), Some((0, None, Some((5, 9)))));
    }

    #[test]
    fn guard() {
        let inst = parse_instance("instance 2 0\ncosts 2 2\nedge 0 1 3\n").unwrap();
        let err = oracle_solve_limited(&inst, &Query::new(0, 1, 0, 100), 50).unwrap_err();
        assert!(matches!(err, Error::OracleTooLarge { states: 202, limit: 50 }));
    }

    #[test]
    fn latest_departure_table_matches_scan() {
        let inst = parse_instance("instance 2 0\ncosts 1 1\nedge 0 1 3 4 6 8 9 11 12\n").unwrap();
        let table = latest_departures(&inst, 0, 0, 30);
        for t in 0..=30 {
            assert_eq!(table[t as usize], latest_departure(inst.edge(0), t, 0), "t = {t}");
        }
    }

    #[test]
    fn routes_from_table_cost_their_entry() {
        let inst = parse_instance(
            "instance 4 1\ncosts 3 3 1\nrating 2 1\nedge 0 1 2 3 7\nedge 0 2 1\nedge 2 1 1 2 6\nedge 1 3 2\n",
        )
        .unwrap();
        let q = Query::new(0, 3, 0, 25);
        let sol = oracle_solve(&inst, &q).unwrap();
        assert!(!sol.pairs.is_empty());
        for &(t, c) in &sol.pairs {
            let route = sol.route(&inst, &q, t).unwrap();
            assert_eq!(route.arrival(), t);
            assert_eq!(route_cost(&inst, &q, &route).unwrap(), c);
        }
    }

    #[test]
    fn horizon_extension_never_raises_entries() {
        let inst = parse_instance("instance 3 0\ncosts 2 2\nedge 0 1 2 3 5\nedge 1 2 2 6 9\n").unwrap();
        let short = oracle_solve(&inst, &Query::new(0, 2, 0, 12)).unwrap();
        let long = oracle_solve(&inst, &Query::new(0, 2, 0, 30)).unwrap();
        for v in 0..3 {
            for t in 0..=12 {
                if let Some(c) = short.cost(v, t) {
                    assert!(long.cost(v, t).unwrap() <= c);
                }
            }
        }
    }
}
