//! A single tablet: a row range holding immutable sorted runs plus a write
//! buffer, and the merge/combine iterators that read them.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::sync::Arc;

use parking_lot::Mutex;

use crate::combiner::Combiner;
use crate::error::Result;
use crate::key::{Entry, Key, RowRange};

/// Immutable key-sorted run. Equal keys may repeat inside a run; their
/// relative order is write order.
pub(crate) type Run = Arc<Vec<Entry>>;

#[derive(Clone, Copy, Debug)]
pub struct TabletConfig {
    /// Write buffer size at which it is sorted into a new run.
    pub flush_threshold: usize,
    /// Merge adjacent runs of similar size (with the combiner applied) after
    /// each flush, keeping the run count logarithmic in the data size.
    pub merge_runs: bool,
}

impl Default for TabletConfig {
    fn default() -> Self {
        TabletConfig {
            flush_threshold: 1 << 16,
            merge_runs: true,
        }
    }
}

#[derive(Default)]
struct TabletState {
    runs: Vec<Run>,
    buffer: Vec<Entry>,
}

impl TabletState {
    /// Sorts the write buffer into a new run. With a combiner this is a
    /// minor compaction and equal keys are reduced; an overflow leaves them
    /// uncombined for the next scan or compaction to report.
    fn freeze_buffer(&mut self, combiner: Option<Combiner>) {
        if self.buffer.is_empty() {
            return;
        }
        let sorted = sort_stable(std::mem::take(&mut self.buffer));
        let run = match combiner {
            Some(c) if has_duplicates(&sorted) => {
                match CombineIter::new(sorted.iter().cloned(), Some(c)).collect::<Result<Vec<_>>>() {
                    Ok(combined) => combined,
                    Err(_) => sorted,
                }
            }
            _ => sorted,
        };
        self.runs.push(Arc::new(run));
    }
}

fn has_duplicates(run: &[Entry]) -> bool {
    run.windows(2).any(|w| w[0].key == w[1].key)
}

/// Short-key sort proxy: padded 8-byte prefixes plus lengths fully order
/// keys whose row and qualifier fit in 8 bytes and whose other components
/// are empty. Other keys fall back to a full comparison.
#[derive(Clone, Copy)]
struct SortProxy {
    row: u64,
    qualifier: u64,
    row_len: u8,
    qualifier_len: u8,
    exact: bool,
    index: u32,
}

fn prefix8(bytes: &[u8]) -> u64 {
    let mut buf = [0u8; 8];
    let n = bytes.len().min(8);
    buf[..n].copy_from_slice(&bytes[..n]);
    u64::from_be_bytes(buf)
}

impl SortProxy {
    fn new(key: &Key, index: usize) -> Self {
        SortProxy {
            row: prefix8(&key.row),
            qualifier: prefix8(&key.qualifier),
            row_len: key.row.len().min(255) as u8,
            qualifier_len: key.qualifier.len().min(255) as u8,
            exact: key.row.len() <= 8
                && key.qualifier.len() <= 8
                && key.family.is_empty()
                && key.visibility.is_empty()
                && key.timestamp == 0,
            index: index as u32,
        }
    }
}

/// Key order with write order among equal keys.
fn sort_stable(entries: Vec<Entry>) -> Vec<Entry> {
    if entries.len() > u32::MAX as usize {
        let mut entries = entries;
        entries.sort_by(|a, b| a.key.cmp(&b.key));
        return entries;
    }
    let mut proxies: Vec<SortProxy> = entries
        .iter()
        .enumerate()
        .map(|(i, e)| SortProxy::new(&e.key, i))
        .collect();
    proxies.sort_unstable_by(|a, b| {
        let ord = if a.exact && b.exact {
            (a.row, a.row_len, a.qualifier, a.qualifier_len)
                .cmp(&(b.row, b.row_len, b.qualifier, b.qualifier_len))
        } else {
            a.row
                .cmp(&b.row)
                .then_with(|| entries[a.index as usize].key.cmp(&entries[b.index as usize].key))
        };
        ord.then(a.index.cmp(&b.index))
    });
    let mut slots: Vec<Option<Entry>> = entries.into_iter().map(Some).collect();
    proxies
        .iter()
        .map(|p| slots[p.index as usize].take().expect("each index once"))
        .collect()
}

pub struct Tablet {
    range: RowRange,
    combiner: Option<Combiner>,
    config: TabletConfig,
    state: Mutex<TabletState>,
    // serializes compactions; runs are otherwise append-only
    compaction: Mutex<()>,
}

impl Tablet {
    pub(crate) fn new(range: RowRange, combiner: Option<Combiner>, config: TabletConfig) -> Self {
        Tablet::with_runs(range, combiner, config, Vec::new())
    }

    pub(crate) fn with_runs(
        range: RowRange,
        combiner: Option<Combiner>,
        config: TabletConfig,
        runs: Vec<Run>,
    ) -> Self {
        Tablet {
            range,
            combiner,
            config,
            state: Mutex::new(TabletState {
                runs,
                buffer: Vec::new(),
            }),
            compaction: Mutex::new(()),
        }
    }

    pub fn range(&self) -> &RowRange {
        &self.range
    }

    /// Appends already-routed entries to the write buffer.
    pub(crate) fn write(&self, batch: impl IntoIterator<Item = Entry>) {
        let mut state = self.state.lock();
        state.buffer.extend(batch);
        if state.buffer.len() >= self.config.flush_threshold {
            state.freeze_buffer(self.combiner);
            if self.config.merge_runs {
                self.merge_tail(&mut state);
            }
        }
    }

    // Binary-counter style merging: fold the newest run into its predecessor
    // while the predecessor is no larger. A merge that overflows is abandoned
    // and the error resurfaces at the next scan or compaction.
    fn merge_tail(&self, state: &mut TabletState) {
        while state.runs.len() >= 2 {
            let n = state.runs.len();
            if state.runs[n - 2].len() > state.runs[n - 1].len() {
                break;
            }
            let merged = merge_pair(&state.runs[n - 2], &state.runs[n - 1], self.combiner);
            match merged {
                Ok(merged) => {
                    state.runs.truncate(n - 2);
                    state.runs.push(Arc::new(merged));
                }
                Err(_) => break,
            }
        }
    }

    /// Point-in-time view of this tablet's contents.
    pub(crate) fn snapshot(&self) -> Vec<Run> {
        let mut state = self.state.lock();
        state.freeze_buffer(self.combiner);
        state.runs.clone()
    }

    pub fn scan(&self, range: &RowRange) -> TabletScan {
        let runs = self.snapshot();
        CombineIter::new(MergeIter::new(runs, range), self.combiner)
    }

    /// Merges every run and the write buffer into a single combined run.
    pub fn compact(&self) -> Result<()> {
        let _guard = self.compaction.lock();
        let runs = self.snapshot();
        if runs.len() <= 1 && runs.iter().all(|r| is_combined(r)) {
            return Ok(());
        }
        let taken = runs.len();
        let merged: Vec<Entry> =
            CombineIter::new(MergeIter::new(runs, &RowRange::all()), self.combiner)
                .collect::<Result<_>>()?;
        let mut state = self.state.lock();
        let newer = state.runs.split_off(taken);
        state.runs.clear();
        if !merged.is_empty() {
            state.runs.push(Arc::new(merged));
        }
        state.runs.extend(newer);
        Ok(())
    }

    pub fn run_count(&self) -> usize {
        let state = self.state.lock();
        state.runs.len() + usize::from(!state.buffer.is_empty())
    }

    /// Number of stored entries before combining.
    pub fn raw_len(&self) -> usize {
        let state = self.state.lock();
        state.runs.iter().map(|r| r.len()).sum::<usize>() + state.buffer.len()
    }
}

/// Two-way merge of an older and a newer run with equal keys collapsed.
fn merge_pair(older: &[Entry], newer: &[Entry], combiner: Option<Combiner>) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::with_capacity(older.len() + newer.len());
    let (mut i, mut j) = (0, 0);
    loop {
        let next = match (older.get(i), newer.get(j)) {
            (Some(a), Some(b)) if a.key <= b.key => {
                i += 1;
                a
            }
            (_, Some(b)) => {
                j += 1;
                b
            }
            (Some(a), None) => {
                i += 1;
                a
            }
            (None, None) => return Ok(out),
        };
        match out.last_mut() {
            Some(last) if last.key == next.key => {
                last.value = match combiner {
                    Some(c) => c.reduce(last.value, next.value)?,
                    None => next.value,
                };
            }
            _ => out.push(next.clone()),
        }
    }
}

fn is_combined(run: &[Entry]) -> bool {
    run.windows(2).all(|w| w[0].key < w[1].key)
}

pub type TabletScan = CombineIter<MergeIter>;

struct Head {
    key: Key,
    run: usize,
}

impl PartialEq for Head {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Head {}
impl PartialOrd for Head {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Head {
    fn cmp(&self, other: &Self) -> Ordering {
        // older runs first among equal keys
        self.key.cmp(&other.key).then(self.run.cmp(&other.run))
    }
}

/// K-way merge of sorted runs restricted to a row range.
pub struct MergeIter {
    runs: Vec<Run>,
    pos: Vec<usize>,
    heap: BinaryHeap<Reverse<Head>>,
    range: RowRange,
}

impl MergeIter {
    pub(crate) fn new(runs: Vec<Run>, range: &RowRange) -> Self {
        let mut pos = Vec::with_capacity(runs.len());
        let mut heap = BinaryHeap::with_capacity(runs.len());
        for (i, run) in runs.iter().enumerate() {
            let start = match &range.start {
                Some(s) => run.partition_point(|e| e.key.row.as_slice() < s.as_slice()),
                None => 0,
            };
            pos.push(start);
            if let Some(e) = run.get(start) {
                if range.is_empty() || range.is_past_end(&e.key.row) {
                    continue;
                }
                heap.push(Reverse(Head {
                    key: e.key.clone(),
                    run: i,
                }));
            }
        }
        MergeIter {
            runs,
            pos,
            heap,
            range: range.clone(),
        }
    }
}

impl Iterator for MergeIter {
    type Item = Entry;

    fn next(&mut self) -> Option<Entry> {
        let Reverse(head) = self.heap.pop()?;
        let run = &self.runs[head.run];
        let p = self.pos[head.run];
        let entry = Entry::new(head.key, run[p].value);
        self.pos[head.run] = p + 1;
        if let Some(next) = run.get(p + 1) {
            if !self.range.is_past_end(&next.key.row) {
                self.heap.push(Reverse(Head {
                    key: next.key.clone(),
                    run: head.run,
                }));
            }
        }
        Some(entry)
    }
}

/// Collapses runs of equal keys. With a combiner the values are reduced;
/// without one the most recently written value wins.
pub struct CombineIter<I: Iterator<Item = Entry>> {
    inner: std::iter::Peekable<I>,
    combiner: Option<Combiner>,
}

impl<I: Iterator<Item = Entry>> CombineIter<I> {
    pub(crate) fn new(inner: I, combiner: Option<Combiner>) -> Self {
        CombineIter {
            inner: inner.peekable(),
            combiner,
        }
    }
}

impl<I: Iterator<Item = Entry>> Iterator for CombineIter<I> {
    type Item = Result<Entry>;

    fn next(&mut self) -> Option<Result<Entry>> {
        let mut current = self.inner.next()?;
        while let Some(next) = self.inner.next_if(|e| e.key == current.key) {
            current.value = match self.combiner {
                Some(c) => match c.reduce(current.value, next.value) {
                    Ok(v) => v,
                    Err(e) => return Some(Err(e)),
                },
                None => next.value,
            };
        }
        Some(Ok(current))
    }
}
