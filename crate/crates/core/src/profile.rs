//! Piecewise-linear cost profiles over an integer planning horizon.
//!
//! A profile maps each integer time to the least cost of being at a vertex at
//! that time, or infinity. It is stored as a sorted list of pieces; a piece
//! holds from its start up to the start of the next piece (or the end of the
//! horizon). Profiles are infinite before their first piece and finite after it.
//!
//! Every piece remembers how its values are achieved so routes can be read
//! back without searching: either by arriving over an edge (or starting at the
//! source) at that time, or by waiting since an earlier arrival.

use serde::Serialize;

use crate::model::{CostParams, EdgeId, Time, VertexId};
use crate::travel_time::TravelTimeFunction;
use crate::Cost;

/// How a vertex was reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Via {
    /// The route starts here at the beginning of the horizon.
    Start,
    Edge { edge: EdgeId, tail: VertexId },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Parent {
    /// The value at `t` is achieved by arriving at `t`.
    Arrive(Via),
    /// The value at `t` is achieved by arriving at `since` and waiting until `t`.
    Wait { since: Time, via: Via },
}

impl Parent {
    pub fn via(&self) -> Via {
        match *self {
            Parent::Arrive(via) | Parent::Wait { via, .. } => via,
        }
    }

    /// Vertex the route came from, if any.
    pub fn parent_vertex(&self) -> Option<VertexId> {
        match self.via() {
            Via::Start => None,
            Via::Edge { tail, .. } => Some(tail),
        }
    }

    fn as_wait_from(&self, t: Time) -> Parent {
        match *self {
            Parent::Arrive(via) => Parent::Wait { since: t, via },
            wait @ Parent::Wait { .. } => wait,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Piece {
    pub start: Time,
    pub cost: Cost,
    pub slope: Cost,
    pub parent: Parent,
}

impl Piece {
    #[inline]
    pub fn value_at(&self, t: Time) -> Cost {
        self.cost + self.slope * (t - self.start)
    }

    fn continues(&self, next: &Piece) -> bool {
        self.slope == next.slope
            && self.parent == next.parent
            && self.value_at(next.start) == next.cost
    }
}

/// Earliest finite time, least value, and greatest value of a profile;
/// `None` stands for infinity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ProfileBounds {
    pub alpha: Option<Time>,
    pub beta: Option<Cost>,
    pub gamma: Option<Cost>,
}

impl ProfileBounds {
    fn include(&mut self, start: Time, first: Cost, last: Cost) {
        if self.alpha.is_none() {
            self.alpha = Some(start);
        }
        let (lo, hi) = (first.min(last), first.max(last));
        self.beta = Some(self.beta.map_or(lo, |b| b.min(lo)));
        self.gamma = Some(self.gamma.map_or(hi, |g| g.max(hi)));
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CostProfile {
    pieces: Vec<Piece>,
    t_max: Time,
    #[serde(skip)]
    bounds: ProfileBounds,
}

/// Accumulates segments in time order, coalescing continuations and
/// tracking bounds on the way.
struct Builder {
    pieces: Vec<Piece>,
    t_max: Time,
    bounds: ProfileBounds,
}

impl Builder {
    fn new(t_max: Time) -> Self {
        Builder {
            pieces: Vec::new(),
            t_max,
            bounds: ProfileBounds::default(),
        }
    }

    /// Appends the segment `[start, end]` of a line through `(start, cost)`.
    fn push(&mut self, start: Time, end: Time, cost: Cost, slope: Cost, parent: Parent) {
        debug_assert!(start <= end && end <= self.t_max);
        debug_assert!(self.pieces.last().is_none_or(|p| p.start < start));
        let piece = Piece {
            start,
            cost,
            slope,
            parent,
        };
        self.bounds
            .include(start, cost, cost + slope * (end - start));
        match self.pieces.last() {
            Some(last) if last.continues(&piece) => {}
            _ => self.pieces.push(piece),
        }
    }

    /// Appends `[start, end]` of an existing piece.
    fn push_from(&mut self, piece: &Piece, start: Time, end: Time) {
        self.push(start, end, piece.value_at(start), piece.slope, piece.parent);
    }

    fn finish(self) -> CostProfile {
        CostProfile {
            pieces: self.pieces,
            t_max: self.t_max,
            bounds: self.bounds,
        }
    }
}

impl CostProfile {
    /// Profile that is infinite over the whole horizon.
    pub fn infinite(t_max: Time) -> Self {
        CostProfile {
            pieces: Vec::new(),
            t_max,
            bounds: ProfileBounds::default(),
        }
    }

    /// Cost of waiting at the source from `t_min` on at `rate` per time unit.
    pub fn source(t_min: Time, t_max: Time, rate: Cost) -> Self {
        let mut b = Builder::new(t_max);
        b.push(
            t_min,
            t_max,
            0,
            rate,
            Parent::Wait {
                since: t_min,
                via: Via::Start,
            },
        );
        b.finish()
    }

    /// Builds a profile from raw pieces, coalescing continuations.
    ///
    /// Panics if the starts are not strictly increasing or exceed `t_max`.
    pub fn from_pieces(pieces: impl IntoIterator<Item = Piece>, t_max: Time) -> Self {
        let pieces: Vec<Piece> = pieces.into_iter().collect();
        let mut b = Builder::new(t_max);
        for (i, piece) in pieces.iter().enumerate() {
            let end = pieces.get(i + 1).map_or(t_max, |next| next.start - 1);
            assert!(piece.start <= end, "piece starts must increase within the horizon");
            b.push_from(piece, piece.start, end);
        }
        b.finish()
    }

    /// Greedy fit of per-time values starting at `start`; `None` entries are
    /// only allowed as a prefix.
    pub fn from_values(start: Time, values: &[Option<Cost>], parent: Parent) -> Self {
        let t_max = start + values.len() as Time - 1;
        let mut b = Builder::new(t_max);
        let first = match values.iter().position(Option::is_some) {
            Some(i) => i,
            None => return b.finish(),
        };
        let finite: Vec<Cost> = values[first..]
            .iter()
            .map(|v| v.expect("values are finite after the first finite one"))
            .collect();
        let mut i = 0;
        while i < finite.len() {
            let slope = if i + 1 < finite.len() {
                finite[i + 1] - finite[i]
            } else {
                0
            };
            let mut j = i + 1;
            while j < finite.len() && finite[j] == finite[i] + slope * (j - i) as Cost {
                j += 1;
            }
            let t0 = start + (first + i) as Time;
            b.push(t0, t0 + (j - 1 - i) as Time, finite[i], slope, parent);
            i = j;
        }
        b.finish()
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn t_max(&self) -> Time {
        self.t_max
    }

    pub fn is_infinite(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn bounds(&self) -> ProfileBounds {
        self.bounds
    }

    pub fn first_time(&self) -> Option<Time> {
        self.pieces.first().map(|p| p.start)
    }

    /// Inclusive end of the `i`-th piece.
    pub fn piece_end(&self, i: usize) -> Time {
        self.pieces
            .get(i + 1)
            .map_or(self.t_max, |next| next.start - 1)
    }

    /// Index of the piece covering `t`.
    pub fn piece_index(&self, t: Time) -> Option<usize> {
        if t > self.t_max {
            return None;
        }
        let idx = self.pieces.partition_point(|p| p.start <= t);
        idx.checked_sub(1)
    }

    pub fn piece_at(&self, t: Time) -> Option<&Piece> {
        self.piece_index(t).map(|i| &self.pieces[i])
    }

    pub fn value(&self, t: Time) -> Option<Cost> {
        self.piece_at(t).map(|p| p.value_at(t))
    }

    /// The part on `[from, to]`, moved `shift` later and raised by `add`.
    pub fn shifted(&self, from: Time, to: Time, shift: Time, add: Cost) -> CostProfile {
        let mut b = Builder::new(self.t_max);
        let Some(mut i) = self.piece_index(from.max(self.first_time().unwrap_or(from))) else {
            return b.finish();
        };
        let mut x = from.max(self.pieces[i].start);
        while i < self.pieces.len() && x <= to {
            let end = self.piece_end(i).min(to);
            let p = &self.pieces[i];
            b.push(x + shift, end + shift, p.value_at(x) + add, p.slope, p.parent);
            x = end + 1;
            i += 1;
        }
        b.finish()
    }

    /// Pairs `(t, value(t))` such that no earlier time has a lower or equal value.
    pub fn pareto_pairs(&self) -> Vec<(Time, Cost)> {
        let mut out = Vec::new();
        let mut best: Option<Cost> = None;
        for (i, piece) in self.pieces.iter().enumerate() {
            let end = self.piece_end(i);
            let improves = |c: Cost, best: Option<Cost>| best.is_none_or(|b| c < b);
            if piece.slope >= 0 {
                if improves(piece.cost, best) {
                    out.push((piece.start, piece.cost));
                    best = Some(piece.cost);
                }
            } else {
                // strictly decreasing: every point from the first improving one
                let first = match best {
                    None => piece.start,
                    Some(b) if piece.cost < b => piece.start,
                    Some(b) => {
                        let gap = piece.cost - b;
                        piece.start + gap.div_euclid(-piece.slope) + 1
                    }
                };
                for t in first..=end {
                    out.push((t, piece.value_at(t)));
                }
                if first <= end {
                    best = Some(piece.value_at(end));
                }
            }
        }
        out
    }

    /// Parent-free canonical pieces `(start, cost, slope)`, as a greedy fit of
    /// the values would produce them.
    pub fn shape(&self) -> Vec<(Time, Cost, Cost)> {
        let mut fit = GreedyFit::default();
        for (i, piece) in self.pieces.iter().enumerate() {
            let (s, e) = (piece.start, self.piece_end(i));
            fit.point(s, piece.cost);
            if s < e {
                fit.point(s + 1, piece.cost + piece.slope);
                if s + 1 < e {
                    let run = fit.run.as_mut().expect("a point was just added");
                    run.2 = Some(piece.slope);
                    run.3 = e;
                }
            }
        }
        fit.finish()
    }

    /// Convex, concave and discontinuous points between consecutive pieces.
    ///
    /// Two lines meeting between `t - 1` and `t` form a kink; a piece that lies
    /// below (or above) its predecessor at both `t - 1` and `t` is a jump.
    pub fn classify(&self) -> PointCounts {
        let mut counts = PointCounts::default();
        let mut run = 0;
        for pair in self.pieces.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            let t = next.start;
            let prev_here = prev.value_at(t);
            let next_before = next.value_at(t - 1);
            let prev_before = prev.value_at(t - 1);
            if next.cost < prev_here && next_before < prev_before {
                counts.discontinuous += 1;
                run = 0;
            } else if next.cost > prev_here && next_before > prev_before {
                counts.jumps_up += 1;
                run = 0;
            } else if next.slope > prev.slope {
                counts.convex += 1;
                run = 0;
            } else if next.slope < prev.slope {
                counts.concave += 1;
                run += 1;
                counts.max_concave_run = counts.max_concave_run.max(run);
            }
        }
        counts
    }
}

#[derive(Default)]
struct GreedyFit {
    done: Vec<(Time, Cost, Cost)>,
    // start, cost, slope once two points are known, end
    run: Option<(Time, Cost, Option<Cost>, Time)>,
}

impl GreedyFit {
    fn point(&mut self, t: Time, v: Cost) {
        match &mut self.run {
            None => self.run = Some((t, v, None, t)),
            Some(run) => match run.2 {
                None => {
                    run.2 = Some(v - run.1);
                    run.3 = t;
                }
                Some(slope) if run.1 + slope * (t - run.0) == v => run.3 = t,
                Some(_) => {
                    let (s, c, slope, _) = *run;
                    self.done.push((s, c, slope.unwrap_or(0)));
                    self.run = Some((t, v, None, t));
                }
            },
        }
    }

    fn finish(mut self) -> Vec<(Time, Cost, Cost)> {
        if let Some((s, c, slope, _)) = self.run {
            self.done.push((s, c, slope.unwrap_or(0)));
        }
        self.done
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PointCounts {
    pub convex: usize,
    pub concave: usize,
    pub discontinuous: usize,
    pub jumps_up: usize,
    /// Longest run of concave points not interrupted by a convex or discontinuous one.
    pub max_concave_run: usize,
}

/// Cost at the head of `edge` for every arrival time whose latest departure
/// is at or after `t_visit`, given the profile at the tail.
pub fn link(
    tail_profile: &CostProfile,
    ttf: &TravelTimeFunction,
    tail: VertexId,
    params: &CostParams,
    t_visit: Time,
) -> CostProfile {
    let mut b = Builder::new(tail_profile.t_max);
    let Some(first) = tail_profile.first_time() else {
        return b.finish();
    };
    let lo = first.max(t_visit);
    let driving_time = ttf.driving_time;
    let parent = Parent::Arrive(Via::Edge {
        edge: ttf.edge,
        tail,
    });
    let horizon_end = tail_profile.t_max.min(ttf.t_max);

    for (i, piece) in ttf.pieces().iter().enumerate() {
        let end = ttf.piece_end(i).min(horizon_end);
        if piece.start > end {
            break;
        }
        if piece.slope == 0 {
            if piece.departure < lo {
                continue;
            }
            let base = tail_profile
                .value(piece.departure)
                .expect("tail profile is finite after its first piece");
            let cost = base + params.edge_cost(driving_time, piece.start - piece.departure);
            b.push(piece.start, end, cost, params.unrated_waiting(), parent);
        } else {
            let period = piece.start - piece.departure;
            let dep_from = piece.departure.max(lo);
            let dep_to = piece.departure + (end - piece.start);
            if dep_from > dep_to {
                continue;
            }
            let extra = params.edge_cost(driving_time, period);
            let mut idx = tail_profile
                .piece_index(dep_from)
                .expect("departure lies within the finite part");
            let mut dep = dep_from;
            while dep <= dep_to {
                let tp = &tail_profile.pieces[idx];
                let seg_end = tail_profile.piece_end(idx).min(dep_to);
                b.push(
                    dep + period,
                    seg_end + period,
                    tp.value_at(dep) + extra,
                    tp.slope,
                    parent,
                );
                dep = seg_end + 1;
                idx += 1;
            }
        }
    }
    b.finish()
}

fn div_ceil(a: Cost, b: Cost) -> Cost {
    debug_assert!(b > 0);
    -((-a).div_euclid(b))
}

/// Lower envelope under waiting at `rate` per time unit: the value at `t`
/// becomes the least of the value itself and any earlier value plus the
/// waiting cost up to `t`. Ties keep the original piece.
pub fn wait_envelope(profile: &CostProfile, rate: Cost) -> CostProfile {
    let mut b = Builder::new(profile.t_max);
    // best point to start waiting from: (time, value, parent while waiting)
    let mut anchor: Option<(Time, Cost, Parent)> = None;
    for (i, piece) in profile.pieces.iter().enumerate() {
        let (s, e) = (piece.start, profile.piece_end(i));
        let wait_at = |anchor: (Time, Cost, Parent), t: Time| anchor.1 + rate * (t - anchor.0);
        // points of this piece that beat waiting: t in [p_from, p_to]
        let (p_from, p_to) = match anchor {
            None => (s, e),
            Some(a) => {
                let d0 = piece.cost - wait_at(a, s);
                let k = piece.slope - rate;
                if k > 0 {
                    if d0 <= 0 {
                        (s, s)
                    } else {
                        (e + 1, e)
                    }
                } else if d0 <= 0 {
                    (s, e)
                } else if k == 0 {
                    (e + 1, e)
                } else {
                    (s + div_ceil(d0, -k), e)
                }
            }
        };
        let p_to = if piece.slope > rate { p_to.min(p_from) } else { p_to };
        // waiting wins before p_from
        if let Some(a) = anchor {
            let w_end = (p_from - 1).min(e);
            if s <= w_end {
                b.push(s, w_end, wait_at(a, s), rate, a.2);
            }
        }
        if p_from <= p_to {
            b.push_from(piece, p_from, p_to);
            let at = if piece.slope > rate { p_from } else { p_to };
            anchor = Some((at, piece.value_at(at), piece.parent.as_wait_from(at)));
            if p_to < e {
                let a = anchor.expect("just set");
                b.push(p_to + 1, e, wait_at(a, p_to + 1), rate, a.2);
            }
        }
    }
    b.finish()
}

/// Earliest time at which `candidate` is strictly below `existing`.
pub fn first_improvement(existing: &CostProfile, candidate: &CostProfile) -> Option<Time> {
    first_below(existing, candidate, 0)
}

/// Earliest time `t` with `candidate(t) < existing(t) + slack`.
pub fn first_below(existing: &CostProfile, candidate: &CostProfile, slack: Cost) -> Option<Time> {
    let cand_first = candidate.first_time()?;
    let mut ie = existing.piece_index(cand_first);
    let mut ic = 0;
    let mut x = cand_first;
    loop {
        let ce = &candidate.pieces[ic];
        let c_end = candidate.piece_end(ic);
        let Some(i) = ie else {
            return Some(x);
        };
        let ex = &existing.pieces[i];
        let e_end = existing.piece_end(i);
        let y = c_end.min(e_end);
        let d0 = ce.value_at(x) - ex.value_at(x) - slack;
        let k = ce.slope - ex.slope;
        if d0 < 0 {
            return Some(x);
        }
        if k < 0 {
            let t = x + d0.div_euclid(-k) + 1;
            if t <= y {
                return Some(t);
            }
        }
        if y >= candidate.t_max {
            return None;
        }
        x = y + 1;
        if x > c_end {
            ic += 1;
        }
        if x > e_end {
            ie = Some(i + 1);
        }
    }
}

/// Pointwise minimum of `existing` and `candidate` from the first time the
/// candidate is strictly better; `existing` is untouched before that time and
/// wins ties. Returns the improvement time, or `None` if nothing changed.
pub fn merge_into(existing: &mut CostProfile, candidate: &CostProfile) -> Option<Time> {
    let t_star = first_improvement(existing, candidate)?;
    let mut b = Builder::new(existing.t_max);
    for (i, piece) in existing.pieces.iter().enumerate() {
        if piece.start >= t_star {
            break;
        }
        let end = existing.piece_end(i).min(t_star - 1);
        b.push_from(piece, piece.start, end);
    }

    let mut ie = existing.piece_index(t_star);
    let mut ic = candidate
        .piece_index(t_star)
        .expect("candidate is finite at its improvement");
    let existing_first = existing.first_time().unwrap_or(Time::MAX);
    let mut x = t_star;
    while x <= existing.t_max {
        let ce = &candidate.pieces[ic];
        let c_end = candidate.piece_end(ic);
        let (y, ex) = match ie {
            None => (c_end.min(existing_first - 1), None),
            Some(i) => (c_end.min(existing.piece_end(i)), Some(&existing.pieces[i])),
        };
        match ex {
            None => b.push_from(ce, x, y),
            Some(ex) => {
                let d0 = ce.value_at(x) - ex.value_at(x);
                let k = ce.slope - ex.slope;
                // candidate wins exactly on [w_from, w_to]
                let (w_from, w_to) = if k == 0 {
                    if d0 < 0 {
                        (x, y)
                    } else {
                        (y + 1, y)
                    }
                } else if k > 0 {
                    if d0 < 0 {
                        (x, x + div_ceil(-d0, k) - 1)
                    } else {
                        (y + 1, y)
                    }
                } else if d0 < 0 {
                    (x, y)
                } else {
                    (x + d0.div_euclid(-k) + 1, y)
                };
                let (w_from, w_to) = (w_from.max(x), w_to.min(y));
                if w_from > w_to {
                    b.push_from(ex, x, y);
                } else {
                    if x < w_from {
                        b.push_from(ex, x, w_from - 1);
                    }
                    b.push_from(ce, w_from, w_to);
                    if w_to < y {
                        b.push_from(ex, w_to + 1, y);
                    }
                }
            }
        }
        x = y + 1;
        if x > c_end {
            ic += 1;
        }
        match ie {
            Some(i) if x > existing.piece_end(i) => ie = Some(i + 1),
            None if x >= existing_first => ie = Some(0),
            _ => {}
        }
    }
    *existing = b.finish();
    Some(t_star)
}

/// Pure form of [`merge_into`].
pub fn merge(existing: &CostProfile, candidate: &CostProfile) -> (CostProfile, Option<Time>) {
    let mut merged = existing.clone();
    let t_star = merge_into(&mut merged, candidate);
    (merged, t_star)
}
