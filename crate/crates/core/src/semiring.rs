use std::fmt;

use crate::combiner::Combiner;
use crate::iterators::TimesFn;

/// The `(⊕, ⊗)` pair a multiply runs under. `⊕` is the combiner installed
/// on the output table; `zero` is its identity and is never stored.
#[derive(Clone, Copy)]
pub struct Semiring {
    pub name: &'static str,
    pub plus: Combiner,
    pub times: TimesFn,
    pub zero: u64,
}

impl Semiring {
    /// Ordinary `(+, ×)` over unsigned integers, overflow checked.
    pub const fn plus_times() -> Self {
        Semiring {
            name: "plus-times",
            plus: Combiner::sum(),
            times: u64::checked_mul,
            zero: 0,
        }
    }

    /// Tropical `(min, +)`: stored values are path lengths, absence stands
    /// for an infinite distance.
    pub const fn min_plus() -> Self {
        Semiring {
            name: "min-plus",
            plus: Combiner::min(),
            times: u64::checked_add,
            zero: u64::MAX,
        }
    }

    /// `(max, min)`: widest-path / bottleneck capacity.
    pub const fn max_min() -> Self {
        Semiring {
            name: "max-min",
            plus: Combiner::max(),
            times: |a, b| Some(a.min(b)),
            zero: 0,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        [Semiring::plus_times(), Semiring::min_plus(), Semiring::max_min()]
            .into_iter()
            .find(|s| s.name == name)
    }

    pub fn times(&self, a: u64, b: u64) -> Option<u64> {
        (self.times)(a, b)
    }
}

impl Default for Semiring {
    fn default() -> Self {
        Semiring::plus_times()
    }
}

impl fmt::Debug for Semiring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Semiring({})", self.name)
    }
}
