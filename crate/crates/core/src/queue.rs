//! Indexed binary min-heap over vertices with decrease-key.

use crate::model::{Time, VertexId};

const ABSENT: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct VertexQueue {
    heap: Vec<(Time, VertexId)>,
    position: Vec<usize>,
}

impl VertexQueue {
    pub fn new(n: usize) -> Self {
        VertexQueue {
            heap: Vec::new(),
            position: vec![ABSENT; n],
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn key(&self, v: VertexId) -> Option<Time> {
        match self.position[v] {
            ABSENT => None,
            i => Some(self.heap[i].0),
        }
    }

    /// Inserts `v` or lowers its key. Returns false if `v` already had a key
    /// at most `key`.
    pub fn push_or_decrease(&mut self, v: VertexId, key: Time) -> bool {
        match self.position[v] {
            ABSENT => {
                self.heap.push((key, v));
                self.position[v] = self.heap.len() - 1;
                self.sift_up(self.heap.len() - 1);
                true
            }
            i if key < self.heap[i].0 => {
                self.heap[i].0 = key;
                self.sift_up(i);
                true
            }
            _ => false,
        }
    }

    /// Removes the entry with the least `(key, vertex)`.
    pub fn pop(&mut self) -> Option<(VertexId, Time)> {
        if self.heap.is_empty() {
            return None;
        }
        let last = self.heap.len() - 1;
        self.swap(0, last);
        let (key, v) = self.heap.pop().expect("non-empty");
        self.position[v] = ABSENT;
        if !self.heap.is_empty() {
            self.sift_down(0);
        }
        Some((v, key))
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.position[self.heap[i].1] = i;
        self.position[self.heap[j].1] = j;
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if self.heap[i] >= self.heap[parent] {
                break;
            }
            self.swap(i, parent);
            i = parent;
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut least = i;
            if l < self.heap.len() && self.heap[l] < self.heap[least] {
                least = l;
            }
            if r < self.heap.len() && self.heap[r] < self.heap[least] {
                least = r;
            }
            if least == i {
                break;
            }
            self.swap(i, least);
            i = least;
        }
    }
}
