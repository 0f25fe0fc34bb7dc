//! Line-oriented text formats for instances and queries.
//!
//! ```text
//! # comment
//! instance <n> <r>
//! costs <d> <c0> <c1> ... <cr>
//! rating <vertex> <rating>
//! coord <vertex> <lat> <lon>
//! edge <tail> <head> <driving_time> [<t_closed> <t_open>]*
//! query <source> <target> <t_min> <t_max> [<source_wait_cost>]
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{validate_edge, CostParams, Edge, Query, RoadInstance};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: FromStr>(line: usize, name: &str, token: Option<&str>) -> Result<T> {
    let token = token.ok_or_else(|| parse_err(line, format!("missing {name}")))?;
    token
        .parse()
        .map_err(|_| parse_err(line, format!("bad {name} '{token}'")))
}

/// Iterates `(line number, tokens)` over non-empty, non-comment lines.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

pub fn parse_instance(text: &str) -> Result<RoadInstance> {
    let mut header: Option<(usize, usize)> = None;
    let mut costs: Option<CostParams> = None;
    let mut ratings: Vec<(usize, usize, usize)> = Vec::new();
    let mut coords: Vec<(usize, usize, f64, f64)> = Vec::new();
    let mut edges: Vec<(usize, Edge)> = Vec::new();
    let mut last_line = 0;

    for (line, tokens) in records(text) {
        last_line = line;
        let mut it = tokens.iter().copied();
        let keyword = it.next().unwrap_or_default();
        if header.is_none() && keyword != "instance" {
            return Err(parse_err(line, "expected 'instance <n> <r>' first"));
        }
        match keyword {
            "instance" => {
                if header.is_some() {
                    return Err(parse_err(line, "duplicate instance line"));
                }
                let n = field(line, "vertex count", it.next())?;
                let r = field(line, "maximal rating", it.next())?;
                header = Some((n, r));
            }
            "costs" => {
                let (_, r) = header.unwrap_or_default();
                let driving = field(line, "driving cost", it.next())?;
                let waiting = it
                    .by_ref()
                    .map(|tok| field(line, "waiting cost", Some(tok)))
                    .collect::<Result<Vec<i64>>>()?;
                if waiting.len() != r + 1 {
                    return Err(parse_err(
                        line,
                        format!("expected {} waiting costs, found {}", r + 1, waiting.len()),
                    ));
                }
                let params = CostParams { driving, waiting };
                params.validate().map_err(|e| parse_err(line, e.to_string()))?;
                costs = Some(params);
            }
            "rating" => {
                let v = field(line, "vertex", it.next())?;
                let rating = field(line, "rating", it.next())?;
                ratings.push((line, v, rating));
            }
            "coord" => {
                let v = field(line, "vertex", it.next())?;
                let lat = field(line, "latitude", it.next())?;
                let lon = field(line, "longitude", it.next())?;
                coords.push((line, v, lat, lon));
            }
            "edge" => {
                let tail = field(line, "tail", it.next())?;
                let head = field(line, "head", it.next())?;
                let delta = field(line, "driving time", it.next())?;
                let rest: Vec<i64> = it
                    .by_ref()
                    .map(|tok| field(line, "ban bound", Some(tok)))
                    .collect::<Result<_>>()?;
                if !rest.len().is_multiple_of(2) {
                    return Err(parse_err(line, "ban bounds must come in pairs"));
                }
                let edge = Edge::new(tail, head, delta)
                    .with_bans(rest.chunks(2).map(|pair| (pair[0], pair[1])));
                edges.push((line, edge));
            }
            other => return Err(parse_err(line, format!("unknown keyword '{other}'"))),
        }
        if let Some(extra) = it.next() {
            return Err(parse_err(line, format!("unexpected token '{extra}'")));
        }
    }

    let (n, r) = header.ok_or_else(|| parse_err(last_line.max(1), "missing instance line"))?;
    let costs = costs.ok_or_else(|| parse_err(last_line.max(1), "missing costs line"))?;
    let mut rating_of = vec![0; n];
    for (line, v, rating) in ratings {
        if v >= n {
            return Err(parse_err(line, format!("vertex {v} out of range")));
        }
        if rating > r {
            return Err(parse_err(line, format!("rating {rating} above maximum {r}")));
        }
        rating_of[v] = rating;
    }
    let mut coord_of = vec![None; n];
    for (line, v, lat, lon) in coords {
        if v >= n {
            return Err(parse_err(line, format!("vertex {v} out of range")));
        }
        coord_of[v] = Some((lat, lon));
    }
    // Attribute edge validation failures to their line.
    for (id, (line, edge)) in edges.iter().enumerate() {
        validate_edge(id, edge, n).map_err(|e| parse_err(*line, e.to_string()))?;
    }
    let edges = edges.into_iter().map(|(_, e)| e).collect();
    RoadInstance::new(n, costs, rating_of, edges)
        .map_err(|e| parse_err(last_line.max(1), e.to_string()))?
        .with_coords(coord_of)
}

pub fn write_instance(instance: &RoadInstance) -> String {
    let mut out = String::new();
    let costs = instance.costs();
    writeln!(out, "instance {} {}", instance.vertex_count(), instance.max_rating()).unwrap();
    write!(out, "costs {}", costs.driving).unwrap();
    for c in &costs.waiting {
        write!(out, " {c}").unwrap();
    }
    out.push('\n');
    for (v, &rating) in instance.ratings().iter().enumerate() {
        if rating != 0 {
            writeln!(out, "rating {v} {rating}").unwrap();
        }
    }
    for v in 0..instance.vertex_count() {
        if let Some((lat, lon)) = instance.coord(v) {
            writeln!(out, "coord {v} {lat} {lon}").unwrap();
        }
    }
    for edge in instance.edges() {
        write!(out, "edge {} {} {}", edge.tail, edge.head, edge.driving_time).unwrap();
        for ban in &edge.bans {
            write!(out, " {} {}", ban.closed, ban.open).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Parses every `query` line of `text`.
pub fn parse_queries(text: &str) -> Result<Vec<Query>> {
    records(text)
        .map(|(line, tokens)| {
            let mut it = tokens.iter().copied();
            if it.next() != Some("query") {
                return Err(parse_err(line, "expected 'query <s> <z> <t_min> <t_max>'"));
            }
            let mut query = Query::new(
                field(line, "source", it.next())?,
                field(line, "target", it.next())?,
                field(line, "t_min", it.next())?,
                field(line, "t_max", it.next())?,
            );
            if let Some(tok) = it.next() {
                query.source_wait_cost = Some(field(line, "source waiting cost", Some(tok))?);
            }
            if let Some(extra) = it.next() {
                return Err(parse_err(line, format!("unexpected token '{extra}'")));
            }
            if query.t_min >= query.t_max {
                return Err(parse_err(line, "t_min must be below t_max"));
            }
            Ok(query)
        })
        .collect()
}

/// Parses a text that must hold exactly one query.
pub fn parse_query(text: &str) -> Result<Query> {
    let mut queries = parse_queries(text)?;
    match queries.len() {
        1 => Ok(queries.pop().unwrap()),
        0 => Err(parse_err(1, "no query line")),
        k => Err(parse_err(1, format!("expected one query, found {k}"))),
    }
}

pub fn write_query(query: &Query) -> String {
    let mut out = format!(
        "query {} {} {} {}",
        query.source, query.target, query.t_min, query.t_max
    );
    if let Some(cost) = query.source_wait_cost {
        write!(out, " {cost}").unwrap();
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# two vertices
instance 3 2
costs 4 4 1 0
rating 0 2
rating 1 1
coord 0 48.1 11.5
edge 0 1 3 4 6 8 9 11 12
edge 1 2 2
";

    #[test]
    fn parses_sample() {
        let inst = parse_instance(SAMPLE).unwrap();
        assert_eq!(inst.vertex_count(), 3);
        assert_eq!(inst.max_rating(), 2);
        assert_eq!(inst.costs().waiting, vec![4, 1, 0]);
        assert_eq!(inst.rating(0), 2);
        assert_eq!(inst.rating(2), 0);
        assert_eq!(inst.edge(0).bans.len(), 3);
        assert_eq!(inst.ban_count(), 3);
        assert_eq!(inst.coord(0), Some((48.1, 11.5)));
        assert_eq!(inst.coord(1), None);
    }

    #[test]
    fn write_then_parse_is_identity() {
        let inst = parse_instance(SAMPLE).unwrap();
        let text = write_instance(&inst);
        let again = parse_instance(&text).unwrap();
        assert_eq!(write_instance(&again), text);
        assert_eq!(again.edges(), inst.edges());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "instance 2 0\ncosts 1 1\nedge 0 1 x\n";
        match parse_instance(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let out_of_range = "instance 2 0\ncosts 1 1\n\n# c\nedge 0 5 1\n";
        match parse_instance(out_of_range) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_instance("costs 1 1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_instance("instance 2 1\ncosts 1 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_instance("instance 2 0\ncosts 1 1\nedge 0 1 2 5\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn queries_round_trip() {
        let q = parse_query("query 0 2 0 40 0\n").unwrap();
        assert_eq!(q.source_wait_cost, Some(0));
        assert_eq!(parse_query(&write_query(&q)).unwrap(), q);
        assert!(parse_query("query 0 2 5 5").is_err());
        assert_eq!(
            parse_queries("query 0 1 0 9\nquery 1 0 0 9\n").unwrap().len(),
            2
        );
    }
}
