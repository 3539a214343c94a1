//! The three TableMult pipeline stages.
//!
//! ```text
//!  table Aᵀ ──remote_source──┐
//!                            ├─ TwoTableJoin ── partial products ── remote_write ──> table C
//!  tablet of B ──scan────────┘
//! ```
//!
//! The join aligns the two streams on their row (the shared index `k`),
//! buffers one row of Aᵀ and streams the matching row of B against it.
//! Partial products leave in `(k, i, j)` generation order; summing them is
//! left to the combiner on the target table.

use std::ops::AddAssign;

use crate::error::{Error, Result};
use crate::key::{Bytes, Entry, Key, RowRange};
use crate::store::Store;
use crate::table::{Scan, Table};

/// Semiring multiply; returns `None` on overflow.
pub type TimesFn = fn(u64, u64) -> Option<u64>;

pub const DEFAULT_ROW_BUFFER_CAP: usize = 1 << 22;

/// One `A(i,k) ⊗ B(k,j)` term.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartialProduct {
    pub row: Bytes,
    pub col: Bytes,
    pub value: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct JoinStats {
    pub partial_products: u64,
    pub rows_aligned: u64,
    pub entries_read_a: u64,
    pub entries_read_b: u64,
}

impl AddAssign for JoinStats {
    fn add_assign(&mut self, o: JoinStats) {
        self.partial_products += o.partial_products;
        self.rows_aligned += o.rows_aligned;
        self.entries_read_a += o.entries_read_a;
        self.entries_read_b += o.entries_read_b;
    }
}

/// Scan stage feeding the buffered side of the join; counts what it reads.
pub struct RemoteSource {
    scan: Scan,
    read: u64,
}

impl RemoteSource {
    pub fn new(table: &Table, range: &RowRange) -> Self {
        RemoteSource {
            scan: table.scan(range),
            read: 0,
        }
    }

    pub fn entries_read(&self) -> u64 {
        self.read
    }
}

impl Iterator for RemoteSource {
    type Item = Result<Entry>;

    fn next(&mut self) -> Option<Result<Entry>> {
        let e = self.scan.next()?;
        self.read += 1;
        Some(e)
    }
}

pub fn remote_source(store: &Store, table: &str, range: &RowRange) -> Result<RemoteSource> {
    Ok(RemoteSource::new(&*store.table(table)?, range))
}

/// Checks that a stream is key-sorted as it is consumed.
struct Sorted<I> {
    inner: I,
    last: Option<Key>,
    name: &'static str,
    read: u64,
}

impl<I: Iterator<Item = Result<Entry>>> Sorted<I> {
    fn new(inner: I, name: &'static str) -> Self {
        Sorted {
            inner,
            last: None,
            name,
            read: 0,
        }
    }

    fn next(&mut self) -> Option<Result<Entry>> {
        let e = match self.inner.next()? {
            Ok(e) => e,
            Err(err) => return Some(Err(err)),
        };
        self.read += 1;
        if self.last.as_ref().is_some_and(|l| *l > e.key) {
            return Some(Err(Error::UnsortedInput(self.name)));
        }
        self.last = Some(e.key.clone());
        Some(Ok(e))
    }
}

/// Row-aligned join of Aᵀ (row `k`, qualifier `i`) with B (row `k`,
/// qualifier `j`), yielding `(i, j, a ⊗ b)` for every aligned pair.
pub struct TwoTableJoin<A: Iterator<Item = Result<Entry>>, B: Iterator<Item = Result<Entry>>> {
    a: Sorted<A>,
    a_head: Option<Entry>,
    a_exhausted: bool,
    b: Sorted<B>,
    times: TimesFn,
    row_cap: usize,
    row_key: Option<Bytes>,
    row_buf: Vec<(Bytes, u64)>,
    current_b: Option<(Bytes, u64)>,
    emit: usize,
    partial_products: u64,
    rows_aligned: u64,
    done: bool,
}

impl<A, B> TwoTableJoin<A, B>
where
    A: Iterator<Item = Result<Entry>>,
    B: Iterator<Item = Result<Entry>>,
{
    pub fn new(stream_at: A, stream_b: B, times: TimesFn) -> Self {
        TwoTableJoin {
            a: Sorted::new(stream_at, "A transpose"),
            a_head: None,
            a_exhausted: false,
            b: Sorted::new(stream_b, "B"),
            times,
            row_cap: DEFAULT_ROW_BUFFER_CAP,
            row_key: None,
            row_buf: Vec::new(),
            current_b: None,
            emit: 0,
            partial_products: 0,
            rows_aligned: 0,
            done: false,
        }
    }

    /// Caps the number of entries buffered for a single row of Aᵀ.
    pub fn with_row_cap(mut self, cap: usize) -> Self {
        self.row_cap = cap;
        self
    }

    pub fn stats(&self) -> JoinStats {
        JoinStats {
            partial_products: self.partial_products,
            rows_aligned: self.rows_aligned,
            entries_read_a: self.a.read,
            entries_read_b: self.b.read,
        }
    }

    fn peek_a(&mut self) -> Result<Option<&Entry>> {
        if self.a_head.is_none() && !self.a_exhausted {
            self.a_head = self.a.next().transpose()?;
            self.a_exhausted = self.a_head.is_none();
        }
        Ok(self.a_head.as_ref())
    }

    // Positions A at the first row >= target, buffering that row when it
    // equals target.
    fn align_to(&mut self, target: &Bytes) -> Result<()> {
        self.row_key = None;
        self.row_buf.clear();
        while let Some(head) = self.peek_a()? {
            if head.key.row >= *target {
                break;
            }
            self.a_head = None;
        }
        while let Some(head) = self.peek_a()? {
            if head.key.row != *target {
                break;
            }
            if self.row_buf.len() >= self.row_cap {
                return Err(Error::RowBufferOverflow { cap: self.row_cap });
            }
            let head = self.a_head.take().expect("peeked");
            self.row_buf.push((head.key.qualifier, head.value));
        }
        if !self.row_buf.is_empty() {
            self.row_key = Some(target.clone());
            self.rows_aligned += 1;
        }
        Ok(())
    }

    fn step(&mut self) -> Result<Option<PartialProduct>> {
        loop {
            if let Some((col, b_val)) = &self.current_b {
                if let Some((row, a_val)) = self.row_buf.get(self.emit) {
                    self.emit += 1;
                    let value = (self.times)(*a_val, *b_val).ok_or(Error::MultiplyOverflow)?;
                    self.partial_products += 1;
                    return Ok(Some(PartialProduct {
                        row: row.clone(),
                        col: col.clone(),
                        value,
                    }));
                }
                self.current_b = None;
            }
            if self.row_key.is_none() && self.a_exhausted {
                // nothing left in Aᵀ can align with the rest of B
                return Ok(None);
            }
            let Some(b) = self.b.next().transpose()? else {
                // the remote side is always read to the end of its range
                while self.peek_a()?.is_some() {
                    self.a_head = None;
                }
                return Ok(None);
            };
            if self.row_key.as_ref() != Some(&b.key.row) {
                let ahead = matches!(&self.a_head, Some(h) if h.key.row > b.key.row);
                if ahead && self.row_key.is_none() {
                    continue;
                }
                self.align_to(&b.key.row)?;
                if self.row_key.is_none() {
                    continue;
                }
            }
            self.current_b = Some((b.key.qualifier, b.value));
            self.emit = 0;
        }
    }
}

impl<A, B> Iterator for TwoTableJoin<A, B>
where
    A: Iterator<Item = Result<Entry>>,
    B: Iterator<Item = Result<Entry>>,
{
    type Item = Result<PartialProduct>;

    fn next(&mut self) -> Option<Result<PartialProduct>> {
        if self.done {
            return None;
        }
        match self.step() {
            Ok(Some(p)) => Some(Ok(p)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

const WRITE_BATCH: usize = 4096;

/// Writes partial products into `target`, unsorted and uncombined. The
/// target's combiner performs the ⊕ when it is next scanned or compacted.
pub fn remote_write<I>(products: I, target: &Table) -> Result<u64>
where
    I: IntoIterator<Item = Result<PartialProduct>>,
{
    if target.combiner().is_none() {
        return Err(Error::MissingCombiner(target.name().to_string()));
    }
    let mut batch = Vec::with_capacity(WRITE_BATCH);
    let mut written = 0;
    for p in products {
        let p = p?;
        batch.push(Entry::new(
            Key {
                row: p.row,
                qualifier: p.col,
                ..Key::default()
            },
            p.value,
        ));
        if batch.len() == WRITE_BATCH {
            written += target.write(batch.drain(..))?;
        }
    }
    written += target.write(batch)?;
    Ok(written)
}
