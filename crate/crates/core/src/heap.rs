//! Bounded top-k container ordered by `(distance, id)`.

use crate::vectors::VectorId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    Exact,
    /// Provisional upper bound on the candidate's distance.
    UpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeapEntry {
    pub distance: f64,
    pub id: VectorId,
    pub kind: EntryKind,
}

impl HeapEntry {
    #[inline]
    fn before(&self, distance: f64, id: VectorId) -> bool {
        self.distance < distance || (self.distance == distance && self.id < id)
    }
}

/// The `k` smallest entries seen so far. Ties at equal distance are resolved
/// in favour of the smaller id, so results are deterministic regardless of
/// arrival order.
///
/// Entries are kept sorted ascending; `k` is small in practice.
#[derive(Debug, Clone)]
pub struct ResultHeap {
    capacity: usize,
    entries: Vec<HeapEntry>,
}

impl ResultHeap {
    pub fn new(k: usize) -> Self {
        assert!(k > 0, "ResultHeap needs a positive capacity");
        Self {
            capacity: k,
            entries: Vec::with_capacity(k.min(1 << 16) + 1),
        }
    }

    #[inline]
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    /// `d_k`: the largest held distance once full, `+∞` before.
    #[inline]
    pub fn threshold(&self) -> f64 {
        if self.is_full() {
            self.entries[self.capacity - 1].distance
        } else {
            f64::INFINITY
        }
    }

    /// True if `(distance, id)` would currently be kept.
    #[inline]
    pub fn admits(&self, distance: f64, id: VectorId) -> bool {
        if !self.is_full() {
            return true;
        }
        let last = &self.entries[self.capacity - 1];
        distance < last.distance || (distance == last.distance && id < last.id)
    }

    /// Inserts an exact distance, replacing any entry for the same id.
    pub fn push_exact(&mut self, distance: f64, id: VectorId) -> bool {
        self.insert(distance, id, EntryKind::Exact)
    }

    /// Inserts an upper bound for `id`, replacing a looser bound for the same
    /// id. An exact entry for `id` is never overwritten.
    pub fn push_upper_bound(&mut self, distance: f64, id: VectorId) -> bool {
        if let Some(pos) = self.position(id) {
            let e = self.entries[pos];
            if e.kind == EntryKind::Exact || e.distance <= distance {
                return false;
            }
        }
        self.insert(distance, id, EntryKind::UpperBound)
    }

    /// Removes an upper-bound entry for `id`, if any.
    pub fn remove_upper_bound(&mut self, id: VectorId) -> bool {
        match self.position(id) {
            Some(pos) if self.entries[pos].kind == EntryKind::UpperBound => {
                self.entries.remove(pos);
                true
            }
            _ => false,
        }
    }

    pub fn has_upper_bounds(&self) -> bool {
        self.entries.iter().any(|e| e.kind == EntryKind::UpperBound)
    }

    pub fn entries(&self) -> &[HeapEntry] {
        &self.entries
    }

    /// Entries in ascending `(distance, id)` order.
    pub fn into_sorted(self) -> Vec<HeapEntry> {
        self.entries
    }

    fn position(&self, id: VectorId) -> Option<usize> {
        self.entries.iter().position(|e| e.id == id)
    }

    fn insert(&mut self, distance: f64, id: VectorId, kind: EntryKind) -> bool {
        if let Some(pos) = self.position(id) {
            self.entries.remove(pos);
        }
        if !self.admits(distance, id) {
            return false;
        }
        let at = self.entries.partition_point(|e| e.before(distance, id));
        self.entries.insert(at, HeapEntry { distance, id, kind });
        self.entries.truncate(self.capacity);
        true
    }
}
