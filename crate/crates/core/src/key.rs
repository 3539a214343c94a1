//! Keys, entries and row ranges.
//!
//! A key is the five-part tuple `(row, column family, column qualifier,
//! visibility, timestamp)`. Visibility and timestamp are carried for format
//! fidelity only: every key built by this crate has an empty visibility and
//! a zero timestamp.

use std::fmt;
use std::ops::Deref;

use smallvec::SmallVec;

/// Byte string stored inline when it is at most 16 bytes long.
///
/// Vertex labels are short decimal strings, so almost every key component
/// fits inline and cloning an entry never touches the allocator.
#[derive(PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Bytes(SmallVec<[u8; 16]>);

impl Bytes {
    pub fn new() -> Self {
        Bytes(SmallVec::new())
    }

    pub fn from_slice(bytes: &[u8]) -> Self {
        Bytes(SmallVec::from_slice(bytes))
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn push(&mut self, b: u8) {
        self.0.push(b);
    }
}

// SmallVec's own Clone copies element by element.
impl Clone for Bytes {
    fn clone(&self) -> Self {
        Bytes::from_slice(&self.0)
    }
}

impl Deref for Bytes {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl From<&[u8]> for Bytes {
    fn from(b: &[u8]) -> Self {
        Bytes::from_slice(b)
    }
}

impl From<&str> for Bytes {
    fn from(s: &str) -> Self {
        Bytes::from_slice(s.as_bytes())
    }
}

impl PartialEq<[u8]> for Bytes {
    fn eq(&self, other: &[u8]) -> bool {
        self.as_slice() == other
    }
}

impl fmt::Debug for Bytes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", String::from_utf8_lossy(&self.0))
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Key {
    pub row: Bytes,
    pub family: Bytes,
    pub qualifier: Bytes,
    pub visibility: Bytes,
    pub timestamp: i64,
}

impl Key {
    pub fn new(row: &[u8], family: &[u8], qualifier: &[u8]) -> Self {
        Key {
            row: Bytes::from_slice(row),
            family: Bytes::from_slice(family),
            qualifier: Bytes::from_slice(qualifier),
            visibility: Bytes::new(),
            timestamp: 0,
        }
    }

    /// Key with an empty column family; the shape used for matrix entries.
    pub fn cell(row: &[u8], qualifier: &[u8]) -> Self {
        Key::new(row, b"", qualifier)
    }
}

impl fmt::Debug for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}",
            String::from_utf8_lossy(&self.row),
            String::from_utf8_lossy(&self.family),
            String::from_utf8_lossy(&self.qualifier)
        )
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Entry {
    pub key: Key,
    pub value: u64,
}

impl Entry {
    pub fn new(key: Key, value: u64) -> Self {
        Entry { key, value }
    }

    pub fn cell(row: &[u8], qualifier: &[u8], value: u64) -> Self {
        Entry::new(Key::cell(row, qualifier), value)
    }

    pub fn row(&self) -> &[u8] {
        &self.key.row
    }
}

impl fmt::Debug for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?} = {})", self.key, self.value)
    }
}

/// Half-open row interval `[start, end)`; a missing bound is unbounded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RowRange {
    pub start: Option<Bytes>,
    pub end: Option<Bytes>,
}

impl RowRange {
    pub fn all() -> Self {
        RowRange::default()
    }

    pub fn new(start: Option<&[u8]>, end: Option<&[u8]>) -> Self {
        RowRange {
            start: start.map(Bytes::from_slice),
            end: end.map(Bytes::from_slice),
        }
    }

    pub fn contains(&self, row: &[u8]) -> bool {
        self.start.as_deref().is_none_or(|s| row >= s) && !self.is_past_end(row)
    }

    pub fn is_past_end(&self, row: &[u8]) -> bool {
        self.end.as_deref().is_some_and(|e| row >= e)
    }

    pub fn is_empty(&self) -> bool {
        matches!((&self.start, &self.end), (Some(s), Some(e)) if s >= e)
    }

    /// Intersection of two ranges.
    pub fn intersect(&self, other: &RowRange) -> RowRange {
        let start = match (&self.start, &other.start) {
            (Some(a), Some(b)) => Some(a.max(b).clone()),
            (a, b) => a.clone().or_else(|| b.clone()),
        };
        let end = match (&self.end, &other.end) {
            (Some(a), Some(b)) => Some(a.min(b).clone()),
            (a, b) => a.clone().or_else(|| b.clone()),
        };
        RowRange { start, end }
    }
}
