use std::fmt;

use crate::error::{Error, Result};

/// Reducer applied to all values sharing a key. Must be associative and
/// commutative; returns `None` on overflow.
pub type ReduceFn = fn(u64, u64) -> Option<u64>;

/// An associative-commutative reducer attached to a table.
///
/// Combiners run lazily: when a tablet is scanned and when its runs are
/// merged by compaction. Plain writes never combine.
#[derive(Clone, Copy)]
pub struct Combiner {
    name: &'static str,
    reduce: ReduceFn,
}

impl Combiner {
    pub const fn new(name: &'static str, reduce: ReduceFn) -> Self {
        Combiner { name, reduce }
    }

    /// Checked unsigned addition.
    pub const fn sum() -> Self {
        Combiner::new("sum", u64::checked_add)
    }

    pub const fn min() -> Self {
        Combiner::new("min", |a, b| Some(a.min(b)))
    }

    pub const fn max() -> Self {
        Combiner::new("max", |a, b| Some(a.max(b)))
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn reduce(&self, a: u64, b: u64) -> Result<u64> {
        (self.reduce)(a, b).ok_or(Error::AddOverflow(self.name))
    }

    /// Looks up one of the built-in combiners by name.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "sum" => Some(Combiner::sum()),
            "min" => Some(Combiner::min()),
            "max" => Some(Combiner::max()),
            _ => None,
        }
    }
}

impl Default for Combiner {
    fn default() -> Self {
        Combiner::sum()
    }
}

impl fmt::Debug for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Combiner({})", self.name)
    }
}
