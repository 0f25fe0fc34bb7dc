//! Per-edge travel-time functions.
//!
//! For an edge and an arrival time `t` at its head, the travel time is the
//! shortest period `p` such that `[t - p, t)` contains at least `driving_time`
//! open time units and `t - p` is not before the start of the horizon. The
//! latest departure `t - p` is non-decreasing in `t`.

use std::sync::OnceLock;

use serde::Serialize;

use crate::model::{Edge, EdgeId, RoadInstance, Time};

/// Minimal traversal period of `edge` arriving at `t`, or `None` when no
/// departure at or after `t_min` works.
pub fn eval_travel_time(edge: &Edge, t: Time, t_min: Time) -> Option<Time> {
    latest_departure(edge, t, t_min).map(|dep| t - dep)
}

/// Latest departure from the tail of `edge` that reaches the head by `t`.
pub fn latest_departure(edge: &Edge, t: Time, t_min: Time) -> Option<Time> {
    let mut cursor = t;
    let mut need = edge.driving_time;
    for ban in edge.bans.iter().rev() {
        if ban.closed >= cursor {
            continue;
        }
        let open_units = cursor - ban.open.min(cursor);
        if open_units >= need {
            break;
        }
        need -= open_units;
        cursor = ban.closed;
    }
    let dep = cursor - need;
    (dep >= t_min).then_some(dep)
}

/// Linear stretch of the latest-departure function: for `t` from `start` up to
/// the next piece, the latest departure is `departure + slope * (t - start)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TtfPiece {
    pub start: Time,
    pub departure: Time,
    /// 1 while departures move with arrivals, 0 while the edge is closed.
    pub slope: Time,
}

impl TtfPiece {
    fn departure_at(&self, t: Time) -> Time {
        self.departure + self.slope * (t - self.start)
    }
}

/// Piecewise representation of the travel-time function of one edge over a horizon.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TravelTimeFunction {
    pub edge: EdgeId,
    pub driving_time: Time,
    pub t_min: Time,
    pub t_max: Time,
    pieces: Vec<TtfPiece>,
    /// Maximal open spans `[a, b)` within `[t_min, t_max)`.
    #[serde(skip)]
    open_spans: Vec<(Time, Time)>,
    /// Ban intervals with adjacent ones coalesced.
    #[serde(skip)]
    closed_spans: Vec<(Time, Time)>,
}

impl TravelTimeFunction {
    pub fn build(edge_id: EdgeId, edge: &Edge, t_min: Time, t_max: Time) -> Self {
        let mut closed_spans: Vec<(Time, Time)> = Vec::with_capacity(edge.bans.len());
        for ban in &edge.bans {
            match closed_spans.last_mut() {
                Some(last) if last.1 >= ban.closed => last.1 = last.1.max(ban.open),
                _ => closed_spans.push((ban.closed, ban.open)),
            }
        }
        // unit t_max is included so the last time keeps the slope of its predecessor
        let end = t_max + 1;
        let mut open_spans = Vec::with_capacity(closed_spans.len() + 1);
        let mut cursor = t_min;
        for &(closed, open) in &closed_spans {
            if closed > cursor && cursor < end {
                open_spans.push((cursor, closed.min(end)));
            }
            cursor = cursor.max(open);
        }
        if cursor < end {
            open_spans.push((cursor, end));
        }

        let mut ttf = TravelTimeFunction {
            edge: edge_id,
            driving_time: edge.driving_time,
            t_min,
            t_max,
            pieces: Vec::new(),
            open_spans,
            closed_spans,
        };
        ttf.pieces = ttf.compute_pieces();
        ttf
    }

    /// Open units in `[t_min, t)`.
    fn open_before(&self, t: Time) -> Time {
        self.open_spans
            .iter()
            .take_while(|&&(a, _)| a < t)
            .map(|&(a, b)| b.min(t) - a)
            .sum()
    }

    /// Position of the `k`-th open unit, counting from zero.
    fn open_unit(&self, mut k: Time) -> Option<Time> {
        for &(a, b) in &self.open_spans {
            if k < b - a {
                return Some(a + k);
            }
            k -= b - a;
        }
        None
    }

    fn departure_direct(&self, t: Time) -> Option<Time> {
        let k = self.open_before(t) - self.driving_time;
        if k < 0 {
            None
        } else {
            self.open_unit(k)
        }
    }

    fn compute_pieces(&self) -> Vec<TtfPiece> {
        let first = match self
            .open_unit(self.driving_time - 1)
            .map(|unit| unit + 1)
            .filter(|&t| t <= self.t_max)
        {
            Some(t) => t,
            None => return Vec::new(),
        };
        // The departure is linear between span boundaries and the arrival times
        // at which it jumps across a closed span.
        let mut candidates = vec![first];
        for &(a, b) in &self.open_spans {
            candidates.push(a);
            candidates.push(b);
        }
        let mut prefix = 0;
        for &(a, b) in &self.open_spans {
            if prefix > 0 {
                if let Some(unit) = self.open_unit(prefix + self.driving_time - 1) {
                    candidates.push(unit + 1);
                }
            }
            prefix += b - a;
        }
        candidates.retain(|&t| t >= first && t <= self.t_max);
        candidates.sort_unstable();
        candidates.dedup();

        let mut pieces: Vec<TtfPiece> = Vec::with_capacity(candidates.len());
        for &start in &candidates {
            let departure = self
                .departure_direct(start)
                .expect("departure exists after the first finite time");
            let unit_open = self
                .open_spans
                .iter()
                .any(|&(a, b)| a <= start && start < b);
            let slope = Time::from(unit_open);
            if let Some(last) = pieces.last() {
                if last.slope == slope && last.departure_at(start) == departure {
                    continue;
                }
            }
            pieces.push(TtfPiece {
                start,
                departure,
                slope,
            });
        }
        pieces
    }

    pub fn pieces(&self) -> &[TtfPiece] {
        &self.pieces
    }

    /// Earliest arrival time with a finite travel time.
    pub fn first_finite(&self) -> Option<Time> {
        self.pieces.first().map(|p| p.start)
    }

    /// End (inclusive) of the `i`-th piece.
    pub fn piece_end(&self, i: usize) -> Time {
        self.pieces
            .get(i + 1)
            .map_or(self.t_max, |next| next.start - 1)
    }

    pub fn latest_departure(&self, t: Time) -> Option<Time> {
        if t > self.t_max {
            return None;
        }
        let idx = self.pieces.partition_point(|p| p.start <= t);
        (idx > 0).then(|| self.pieces[idx - 1].departure_at(t))
    }

    pub fn eval(&self, t: Time) -> Option<Time> {
        self.latest_departure(t).map(|dep| t - dep)
    }

    /// Convex, concave and discontinuous points of the travel time: ban starts,
    /// ban ends, and arrival times whose latest departure jumps to a ban end.
    pub fn classify_breakpoints(&self) -> Breakpoints {
        let mut out = Breakpoints::default();
        let Some(first) = self.first_finite() else {
            return out;
        };
        let inside = |t: Time| t > first && t <= self.t_max;
        for &(closed, open) in &self.closed_spans {
            if inside(closed) {
                out.convex.push(closed);
            }
            if inside(open) {
                out.concave.push(open);
            }
        }
        for window in self.pieces.windows(2) {
            let (prev, next) = (window[0], window[1]);
            if next.departure > prev.departure_at(next.start - 1) + 1
                && self.closed_spans.iter().any(|&(_, o)| o == next.departure)
            {
                out.discontinuous.push(next.start);
            }
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Breakpoints {
    pub convex: Vec<Time>,
    pub concave: Vec<Time>,
    pub discontinuous: Vec<Time>,
}

/// Travel-time functions for one horizon, built on first use per edge.
#[derive(Debug)]
pub struct TravelTimeCache {
    t_min: Time,
    t_max: Time,
    slots: Vec<OnceLock<TravelTimeFunction>>,
}

impl TravelTimeCache {
    pub fn new(instance: &RoadInstance, t_min: Time, t_max: Time) -> Self {
        TravelTimeCache {
            t_min,
            t_max,
            slots: (0..instance.edge_count()).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn get(&self, instance: &RoadInstance, edge: EdgeId) -> &TravelTimeFunction {
        self.slots[edge].get_or_init(|| {
            TravelTimeFunction::build(edge, instance.edge(edge), self.t_min, self.t_max)
        })
    }

    /// Number of functions materialized so far.
    pub fn materialized(&self) -> usize {
        self.slots.iter().filter(|slot| slot.get().is_some()).count()
    }
}
