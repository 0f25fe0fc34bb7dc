//! Batch query runs with per-query statistics and aggregates.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::settle_order;
use crate::model::{Query, RoadInstance, Time};
use crate::potentials::{backward_dijkstra, PotentialSource};
use crate::search::{ParetoSolution, Search, SearchOptions};

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct QueryReport {
    pub id: usize,
    pub source: usize,
    pub target: usize,
    pub rank: Option<u32>,
    pub pareto_size: usize,
    /// Latest minus earliest optimal arrival.
    pub arrival_deviation: Time,
    pub runtime_us: u64,
    pub trivial: bool,
    /// Waiting time summed over all optimal routes, by rating; the source is
    /// counted separately.
    pub waiting_by_rating: Vec<Time>,
    pub source_waiting: Time,
    /// Waiting stops away from the source, over all optimal routes.
    pub extra_stops: usize,
    pub precarious: bool,
    pub pops: u64,
    pub error: Option<String>,
}

/// True iff there is exactly one optimal route and its driving time equals
/// the unrestricted shortest driving time.
pub fn classify_trivial(instance: &RoadInstance, query: &Query, solution: &ParetoSolution) -> bool {
    if solution.routes.len() != 1 {
        return false;
    }
    let static_time = backward_dijkstra(instance, query.target)[query.source];
    static_time == Some(solution.routes[0].driving_time(instance))
}

pub fn report_for(
    id: usize,
    instance: &RoadInstance,
    query: &Query,
    rank: Option<u32>,
    solution: &ParetoSolution,
    runtime_us: u64,
) -> QueryReport {
    let mut waiting_by_rating = vec![0; instance.max_rating() + 1];
    let mut source_waiting = 0;
    let mut extra_stops = 0;
    let mut precarious = false;
    for route in &solution.routes {
        for (i, &v) in route.vertices.iter().enumerate() {
            let wait = route.departures[i] - route.arrivals[i];
            if wait == 0 {
                continue;
            }
            if v == query.source && i == 0 {
                source_waiting += wait;
                continue;
            }
            waiting_by_rating[instance.rating(v)] += wait;
            extra_stops += 1;
            if instance.rating(v) == 0 && v != query.source {
                precarious = true;
            }
        }
    }
    let arrivals = solution.pairs.iter().map(|p| p.0);
    let arrival_deviation = match (arrivals.clone().min(), arrivals.max()) {
        (Some(a), Some(b)) => b - a,
        _ => 0,
    };
    QueryReport {
        id,
        source: query.source,
        target: query.target,
        rank,
        pareto_size: solution.pairs.len(),
        arrival_deviation,
        runtime_us,
        trivial: classify_trivial(instance, query, solution),
        waiting_by_rating,
        source_waiting,
        extra_stops,
        precarious,
        pops: solution.stats.pops,
        error: None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub queries: usize,
    pub failures: usize,
    pub avg_runtime_us: f64,
    pub median_runtime_us: f64,
    pub avg_pareto_size: f64,
    pub avg_arrival_deviation: f64,
    pub trivial_share: f64,
    pub precarious_share: f64,
    pub avg_pops: f64,
    /// Percent of all waiting by rating, then the source as the last entry.
    pub waiting_share: Vec<f64>,
}

impl Aggregate {
    pub fn from_reports(reports: &[QueryReport]) -> Self {
        let ok: Vec<&QueryReport> = reports.iter().filter(|r| r.error.is_none()).collect();
        let count = ok.len().max(1) as f64;
        let mean = |f: &dyn Fn(&QueryReport) -> f64| ok.iter().map(|r| f(r)).sum::<f64>() / count;
        let mut runtimes: Vec<u64> = ok.iter().map(|r| r.runtime_us).collect();
        runtimes.sort_unstable();
        let median = match runtimes.len() {
            0 => 0.0,
            l if l % 2 == 1 => runtimes[l / 2] as f64,
            l => (runtimes[l / 2 - 1] + runtimes[l / 2]) as f64 / 2.0,
        };
        let classes = ok.iter().map(|r| r.waiting_by_rating.len()).max().unwrap_or(0);
        let mut totals = vec![0i64; classes + 1];
        for r in &ok {
            for (i, w) in r.waiting_by_rating.iter().enumerate() {
                totals[i] += w;
            }
            totals[classes] += r.source_waiting;
        }
        let all: i64 = totals.iter().sum();
        let waiting_share = totals
            .iter()
            .map(|&t| if all == 0 { 0.0 } else { 100.0 * t as f64 / all as f64 })
            .collect();
        Aggregate {
            queries: reports.len(),
            failures: reports.len() - ok.len(),
            avg_runtime_us: mean(&|r| r.runtime_us as f64),
            median_runtime_us: median,
            avg_pareto_size: mean(&|r| r.pareto_size as f64),
            avg_arrival_deviation: mean(&|r| r.arrival_deviation as f64),
            trivial_share: mean(&|r| f64::from(u8::from(r.trivial))),
            precarious_share: mean(&|r| f64::from(u8::from(r.precarious))),
            avg_pops: mean(&|r| r.pops as f64),
            waiting_share,
        }
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let rows: Vec<(&str, String)> = vec![
            ("queries", self.queries.to_string()),
            ("failures", self.failures.to_string()),
            ("avg runtime [ms]", format!("{:.3}", self.avg_runtime_us / 1000.0)),
            ("median runtime [ms]", format!("{:.3}", self.median_runtime_us / 1000.0)),
            ("avg routes", format!("{:.3}", self.avg_pareto_size)),
            ("avg arrival deviation", format!("{:.3}", self.avg_arrival_deviation)),
            ("trivial [%]", format!("{:.1}", 100.0 * self.trivial_share)),
            ("precarious [%]", format!("{:.1}", 100.0 * self.precarious_share)),
            ("avg settled", format!("{:.1}", self.avg_pops)),
        ];
        for (name, value) in rows {
            writeln!(out, "{name:<24}{value:>14}").unwrap();
        }
        let classes = self.waiting_share.len();
        for (i, share) in self.waiting_share.iter().enumerate() {
            let name = if i + 1 == classes {
                "waiting at source [%]".to_string()
            } else {
                format!("waiting rating {i} [%]")
            };
            writeln!(out, "{name:<24}{share:>14.1}").unwrap();
        }
        out
    }
}

pub const CSV_HEADER: &str = "id,source,target,rank,pareto_size,arrival_deviation,runtime_us,trivial,source_waiting,waiting_by_rating,extra_stops,precarious,pops,error";

/// One line per report; `waiting_by_rating` is space separated, `rank` and
/// `error` may be empty.
pub fn reports_csv(reports: &[QueryReport]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in reports {
        let waits: Vec<String> = r.waiting_by_rating.iter().map(|w| w.to_string()).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.id,
            r.source,
            r.target,
            r.rank.map(|x| x.to_string()).unwrap_or_default(),
            r.pareto_size,
            r.arrival_deviation,
            r.runtime_us,
            r.trivial,
            r.source_waiting,
            waits.join(" "),
            r.extra_stops,
            r.precarious,
            r.pops,
            r.error.as_deref().unwrap_or("").replace(',', ";"),
        )
        .unwrap();
    }
    out
}

pub fn parse_reports_csv(text: &str) -> Result<Vec<QueryReport>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "unexpected report header".into(),
            })
        }
    }
    lines
        .map(|(i, line)| {
            let err = |what: &str| Error::Parse {
                line: i + 1,
                message: format!("bad {what}"),
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 14 {
                return Err(err("field count"));
            }
            let num = |k: usize, what: &str| f[k].parse::<i64>().map_err(|_| err(what));
            Ok(QueryReport {
                id: num(0, "id")? as usize,
                source: num(1, "source")? as usize,
                target: num(2, "target")? as usize,
                rank: if f[3].is_empty() { None } else { Some(num(3, "rank")? as u32) },
                pareto_size: num(4, "pareto size")? as usize,
                arrival_deviation: num(5, "deviation")?,
                runtime_us: num(6, "runtime")? as u64,
                trivial: f[7].parse().map_err(|_| err("trivial flag"))?,
                source_waiting: num(8, "source waiting")?,
                waiting_by_rating: f[9]
                    .split_whitespace()
                    .map(|w| w.parse().map_err(|_| err("waiting")))
                    .collect::<Result<_>>()?,
                extra_stops: num(10, "stops")? as usize,
                precarious: f[11].parse().map_err(|_| err("precarious flag"))?,
                pops: num(12, "pops")? as u64,
                error: (!f[13].is_empty()).then(|| f[13].to_string()),
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub options: SearchOptions,
    pub hierarchy: bool,
    pub reports: Vec<QueryReport>,
    pub aggregate: Aggregate,
}

/// Runs every query on a pool of `threads` workers (0 picks a default).
/// Failed queries are recorded and do not stop the run. Timings exclude
/// potential computation.
pub fn run_benchmark(
    instance: &RoadInstance,
    queries: &[(Query, Option<u32>)],
    options: SearchOptions,
    potentials: PotentialSource<'_>,
    threads: usize,
) -> Result<BenchReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let reports: Vec<QueryReport> = pool.install(|| {
        queries
            .par_iter()
            .enumerate()
            .map(|(id, (query, rank))| run_one(id, instance, query, *rank, options, potentials))
            .collect()
    });
    Ok(BenchReport {
        options,
        hierarchy: matches!(potentials, PotentialSource::Hierarchy(_)),
        aggregate: Aggregate::from_reports(&reports),
        reports,
    })
}

fn run_one(
    id: usize,
    instance: &RoadInstance,
    query: &Query,
    rank: Option<u32>,
    options: SearchOptions,
    source: PotentialSource<'_>,
) -> QueryReport {
    let failed = |e: Error| QueryReport {
        id,
        source: query.source,
        target: query.target,
        rank,
        error: Some(e.to_string()),
        ..QueryReport::default()
    };
    if let Err(e) = instance.check_query(query) {
        return failed(e);
    }
    let potentials = if options.astar {
        source.potentials(instance, query.target)
    } else {
        vec![Some(0); instance.vertex_count()]
    };
    let start = Instant::now();
    let solution = Search::with_potentials(instance, query.clone(), options, potentials)
        .and_then(|mut s| s.run().and_then(|_| s.solution()));
    let runtime_us = start.elapsed().as_micros() as u64;
    match solution {
        Ok(sol) => report_for(id, instance, query, rank, &sol, runtime_us),
        Err(e) => failed(e),
    }
}

/// Number of vertices an unrestricted search from the source settles.
pub fn reachable_count(instance: &RoadInstance, source: usize) -> usize {
    settle_order(instance, source).len()
}
