//! Contraction hierarchy on driving times, used for exact A* potentials.
//!
//! Vertices are contracted by edge difference with lazy updates; witness
//! searches are bounded, so some shortcuts may be superfluous but none is
//! missing. Potentials toward a target come from a backward upward search
//! followed by one sweep over the vertices from the highest rank down.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{RoadInstance, Time, VertexId};

const MAGIC: &[u8; 4] = b"BRCH";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug)]
pub struct BuildParams {
    /// Vertices settled per witness search before giving up.
    pub witness_settle_limit: usize,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams {
            witness_settle_limit: 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractionHierarchy {
    edge_count: usize,
    edge_hash: u64,
    /// Vertices by increasing rank.
    order: Vec<VertexId>,
    /// `up[u]`: edges `(u, w)` with `w` ranked above `u`.
    up: Vec<Vec<(VertexId, Time)>>,
    /// `down_rev[y]`: edges `(x, y)` with `x` ranked above `y`, stored at `y`.
    down_rev: Vec<Vec<(VertexId, Time)>>,
    shortcuts: usize,
}

/// FNV-1a over the edge list, to tie a cached hierarchy to its instance.
fn edge_hash(instance: &RoadInstance) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for e in instance.edges() {
        for x in [e.tail as u64, e.head as u64, e.driving_time as u64] {
            for byte in x.to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
    }
    h
}

struct Contractor {
    out: Vec<HashMap<VertexId, Time>>,
    inc: Vec<HashMap<VertexId, Time>>,
    contracted: Vec<bool>,
    deleted_neighbours: Vec<i64>,
    settle_limit: usize,
}

impl Contractor {
    /// Distances from `from` to the vertices in `targets`, avoiding `skip`
    /// and contracted vertices, up to `limit`.
    fn witness(
        &self,
        from: VertexId,
        skip: VertexId,
        limit: Time,
        targets: &HashMap<VertexId, Time>,
    ) -> HashMap<VertexId, Time> {
        let mut dist: HashMap<VertexId, Time> = HashMap::new();
        let mut found = HashMap::new();
        let mut heap = BinaryHeap::new();
        dist.insert(from, 0);
        heap.push(Reverse((0, from)));
        let mut settled = 0;
        while let Some(Reverse((d, x))) = heap.pop() {
            if dist.get(&x) != Some(&d) {
                continue;
            }
            if targets.contains_key(&x) {
                found.insert(x, d);
                if found.len() == targets.len() {
                    break;
                }
            }
            settled += 1;
            if settled > self.settle_limit || d > limit {
                break;
            }
            for (&y, &len) in &self.out[x] {
                if y == skip || self.contracted[y] {
                    continue;
                }
                let nd = d + len;
                if nd <= limit && dist.get(&y).is_none_or(|&old| nd < old) {
                    dist.insert(y, nd);
                    heap.push(Reverse((nd, y)));
                }
            }
        }
        found
    }

    fn needed_shortcuts(&self, v: VertexId) -> Vec<(VertexId, VertexId, Time)> {
        let mut shortcuts = Vec::new();
        let max_out = self.out[v].values().copied().max().unwrap_or(0);
        for (&u, &lu) in &self.inc[v] {
            let targets: HashMap<VertexId, Time> = self.out[v]
                .iter()
                .filter(|(&w, _)| w != u)
                .map(|(&w, &lw)| (w, lu + lw))
                .collect();
            if targets.is_empty() {
                continue;
            }
            let found = self.witness(u, v, lu + max_out, &targets);
            for (&w, &via) in &targets {
                if found.get(&w).is_none_or(|&d| d > via) {
                    shortcuts.push((u, w, via));
                }
            }
        }
        shortcuts
    }

    fn priority(&self, v: VertexId) -> i64 {
        let shortcuts = self.needed_shortcuts(v).len() as i64;
        shortcuts - (self.inc[v].len() + self.out[v].len()) as i64 + self.deleted_neighbours[v]
    }
}

impl ContractionHierarchy {
    pub fn build(instance: &RoadInstance) -> Self {
        Self::build_with(instance, BuildParams::default())
    }

    pub fn build_with(instance: &RoadInstance, params: BuildParams) -> Self {
        let n = instance.vertex_count();
        let mut c = Contractor {
            out: vec![HashMap::new(); n],
            inc: vec![HashMap::new(); n],
            contracted: vec![false; n],
            deleted_neighbours: vec![0; n],
            settle_limit: params.witness_settle_limit,
        };
        for e in instance.edges() {
            if e.tail == e.head {
                continue;
            }
            let len = c.out[e.tail].entry(e.head).or_insert(e.driving_time);
            *len = (*len).min(e.driving_time);
            c.inc[e.head].insert(e.tail, *len);
        }

        let mut heap: BinaryHeap<Reverse<(i64, VertexId)>> =
            (0..n).map(|v| Reverse((c.priority(v), v))).collect();
        let mut order = Vec::with_capacity(n);
        let mut up = vec![Vec::new(); n];
        let mut down_rev = vec![Vec::new(); n];
        let mut shortcut_count = 0;

        while let Some(Reverse((_, v))) = heap.pop() {
            if c.contracted[v] {
                continue;
            }
            let prio = c.priority(v);
            if let Some(&Reverse((next, _))) = heap.peek() {
                if prio > next {
                    heap.push(Reverse((prio, v)));
                    continue;
                }
            }
            for (u, w, len) in c.needed_shortcuts(v) {
                let entry = c.out[u].entry(w).or_insert(len);
                if len <= *entry {
                    *entry = len;
                    c.inc[w].insert(u, len);
                    shortcut_count += 1;
                }
            }
            up[v] = c.out[v].iter().map(|(&w, &len)| (w, len)).collect();
            down_rev[v] = c.inc[v].iter().map(|(&u, &len)| (u, len)).collect();
            up[v].sort_unstable();
            down_rev[v].sort_unstable();
            let neighbours: Vec<VertexId> = c.out[v].keys().chain(c.inc[v].keys()).copied().collect();
            for &w in c.out[v].keys() {
                c.inc[w].remove(&v);
            }
            for &u in c.inc[v].keys() {
                c.out[u].remove(&v);
            }
            for x in neighbours {
                c.deleted_neighbours[x] += 1;
            }
            c.out[v].clear();
            c.inc[v].clear();
            c.contracted[v] = true;
            order.push(v);
        }

        ContractionHierarchy {
            edge_count: instance.edge_count(),
            edge_hash: edge_hash(instance),
            order,
            up,
            down_rev,
            shortcuts: shortcut_count,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.order.len()
    }

    pub fn shortcut_count(&self) -> usize {
        self.shortcuts
    }

    /// True if this hierarchy was built for `instance`'s edge list.
    pub fn matches(&self, instance: &RoadInstance) -> bool {
        self.vertex_count() == instance.vertex_count()
            && self.edge_count == instance.edge_count()
            && self.edge_hash == edge_hash(instance)
    }

    /// Exact shortest driving times from every vertex to `target`.
    pub fn potentials(&self, target: VertexId) -> Vec<Option<Time>> {
        let n = self.vertex_count();
        let mut dist: Vec<Option<Time>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[target] = Some(0);
        heap.push(Reverse((0, target)));
        while let Some(Reverse((d, y))) = heap.pop() {
            if dist[y] != Some(d) {
                continue;
            }
            for &(x, len) in &self.down_rev[y] {
                let nd = d + len;
                if dist[x].is_none_or(|old| nd < old) {
                    dist[x] = Some(nd);
                    heap.push(Reverse((nd, x)));
                }
            }
        }
        for &u in self.order.iter().rev() {
            for &(w, len) in &self.up[u] {
                if let Some(dw) = dist[w] {
                    if dist[u].is_none_or(|old| dw + len < old) {
                        dist[u] = Some(dw + len);
                    }
                }
            }
        }
        dist
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        for x in [self.order.len() as u64, self.edge_count as u64, self.edge_hash, self.shortcuts as u64] {
            w.write_all(&x.to_le_bytes())?;
        }
        for &v in &self.order {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        for lists in [&self.up, &self.down_rev] {
            for list in lists.iter() {
                w.write_all(&(list.len() as u32).to_le_bytes())?;
                for &(x, len) in list {
                    w.write_all(&(x as u32).to_le_bytes())?;
                    w.write_all(&len.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::CorruptCache("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::CorruptCache(format!("unsupported version {version}")));
        }
        let n = read_u64(&mut r)? as usize;
        let edge_count = read_u64(&mut r)? as usize;
        let edge_hash = read_u64(&mut r)?;
        let shortcuts = read_u64(&mut r)? as usize;
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for _ in 0..n {
            let v = read_u32(&mut r)? as usize;
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(Error::CorruptCache(format!("bad order entry {v}")));
            }
            order.push(v);
        }
        let read_lists = |r: &mut dyn Read| -> Result<Vec<Vec<(VertexId, Time)>>> {
            (0..n)
                .map(|_| {
                    let len = read_u32(r)? as usize;
                    (0..len)
                        .map(|_| {
                            let x = read_u32(r)? as usize;
                            if x >= n {
                                return Err(Error::CorruptCache(format!("vertex {x} out of range")));
                            }
                            Ok((x, read_u64(r)? as Time))
                        })
                        .collect()
                })
                .collect()
        };
        let up = read_lists(&mut r)?;
        let down_rev = read_lists(&mut r)?;
        Ok(ContractionHierarchy {
            edge_count,
            edge_hash,
            order,
            up,
            down_rev,
            shortcuts,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Loads a cached hierarchy and checks that it belongs to `instance`.
    pub fn load(path: &Path, instance: &RoadInstance) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let ch = Self::read_from(std::io::BufReader::new(file))?;
        if !ch.matches(instance) {
            return Err(Error::CorruptCache("built for a different instance".into()));
        }
        Ok(ch)
    }
}

fn read_u32(r: &mut dyn Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|e| Error::CorruptCache(e.to_string()))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut dyn Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::CorruptCache(e.to_string()))?;
    Ok(u64::from_le_bytes(buf))
}
