//! Output encodings for solutions, profiles and travel-time functions.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::{route_cost, Query, RoadInstance, Route};
use crate::profile::{CostProfile, Parent, Via};
use crate::search::ParetoSolution;
use crate::travel_time::TravelTimeFunction;

/// Waiting stops of a route as `(vertex, arrival, departure)`.
pub fn stops(route: &Route) -> Vec<(usize, i64, i64)> {
    route
        .vertices
        .iter()
        .zip(route.arrivals.iter().zip(&route.departures))
        .filter(|(_, (a, d))| d > a)
        .map(|(&v, (&a, &d))| (v, a, d))
        .collect()
}

pub fn solution_json(instance: &RoadInstance, query: &Query, solution: &ParetoSolution) -> Result<Value> {
    let routes = solution
        .pairs
        .iter()
        .zip(&solution.routes)
        .map(|(&(arrival, cost), route)| {
            Ok(json!({
                "arrival": arrival,
                "cost": cost,
                "checked_cost": route_cost(instance, query, route)?,
                "route": route,
                "stops": stops(route),
            }))
        })
        .collect::<Result<Vec<Value>>>()?;
    Ok(json!({
        "query": query,
        "pareto_size": solution.pairs.len(),
        "routes": routes,
        "stats": solution.stats,
    }))
}

pub fn solution_csv(solution: &ParetoSolution) -> String {
    let mut out = String::from("arrival,cost,vertices,arrivals,departures\n");
    for (&(t, c), route) in solution.pairs.iter().zip(&solution.routes) {
        let join = |xs: &[_]| {
            xs.iter()
                .map(|x: &i64| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let vertices: Vec<i64> = route.vertices.iter().map(|&v| v as i64).collect();
        writeln!(
            out,
            "{t},{c},{},{},{}",
            join(&vertices),
            join(&route.arrivals),
            join(&route.departures)
        )
        .unwrap();
    }
    out
}

pub fn solution_table(solution: &ParetoSolution) -> String {
    let mut out = format!("{:>8} {:>10} {:>6}  path\n", "arrival", "cost", "stops");
    for (&(t, c), route) in solution.pairs.iter().zip(&solution.routes) {
        let path: Vec<String> = route.vertices.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{t:>8} {c:>10} {:>6}  {}", stops(route).len(), path.join(">")).unwrap();
    }
    if solution.pairs.is_empty() {
        out.push_str("no route within the horizon\n");
    }
    out
}

/// One LineString feature per route, coordinates as `[lon, lat]`.
pub fn solution_geojson(instance: &RoadInstance, solution: &ParetoSolution) -> Result<Value> {
    let features = solution
        .pairs
        .iter()
        .zip(&solution.routes)
        .map(|(&(arrival, cost), route)| {
            let coords = route
                .vertices
                .iter()
                .map(|&v| {
                    let (lat, lon) = instance.coord(v).ok_or(Error::NoCoordinates(v))?;
                    Ok(json!([lon, lat]))
                })
                .collect::<Result<Vec<Value>>>()?;
            let waits: Vec<Value> = stops(route)
                .into_iter()
                .map(|(v, a, d)| json!({"vertex": v, "from": a, "until": d}))
                .collect();
            Ok(json!({
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": coords},
                "properties": {"arrival": arrival, "cost": cost, "waits": waits},
            }))
        })
        .collect::<Result<Vec<Value>>>()?;
    Ok(json!({"type": "FeatureCollection", "features": features}))
}

fn parent_label(parent: &Parent) -> String {
    let via = |via: &Via| match via {
        Via::Start => "start".to_string(),
        Via::Edge { edge, tail } => format!("edge {edge} from {tail}"),
    };
    match parent {
        Parent::Arrive(v) => via(v),
        Parent::Wait { since, via: v } => format!("wait since {since} after {}", via(v)),
    }
}

pub fn profile_csv(profile: &CostProfile) -> String {
    let mut out = String::from("start,cost,slope,parent\n");
    for p in profile.pieces() {
        writeln!(out, "{},{},{},{}", p.start, p.cost, p.slope, parent_label(&p.parent)).unwrap();
    }
    out
}

pub fn ttf_csv(ttf: &TravelTimeFunction) -> String {
    let mut out = String::from("start,departure,slope\n");
    for p in ttf.pieces() {
        writeln!(out, "{},{},{}", p.start, p.departure, p.slope).unwrap();
    }
    let points = ttf.classify_breakpoints();
    let list = |xs: &[i64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    writeln!(out, "# convex {}", list(&points.convex)).unwrap();
    writeln!(out, "# concave {}", list(&points.concave)).unwrap();
    writeln!(out, "# discontinuous {}", list(&points.discontinuous)).unwrap();
    out
}
