//! Table-resident SpGEMM: `C = (Aᵀ)ᵀ ⊕.⊗ B`.
//!
//! The stored table in the Aᵀ slot has the shared index `k` as its row and
//! `i` as its qualifier; B has row `k` and qualifier `j`. Each tablet of B
//! runs its own pipeline (remote source of Aᵀ over the tablet's row range,
//! row-aligned join, write into C). Workers pull tablets from a shared
//! queue, so `workers` bounds the parallelism.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use parking_lot::Mutex;

use crate::error::{Error, Result};
use crate::iterators::{
    remote_write, JoinStats, RemoteSource, TwoTableJoin, DEFAULT_ROW_BUFFER_CAP,
};
use crate::key::Bytes;
use crate::metrics::RunMetrics;
use crate::semiring::Semiring;
use crate::store::Store;
use crate::table::{Scan, Table};

#[derive(Clone, Debug)]
pub struct MultSpec {
    /// Table holding Aᵀ.
    pub table_at: String,
    pub table_b: String,
    pub table_c: String,
    pub semiring: Semiring,
    pub workers: usize,
    pub row_buffer_cap: usize,
}

impl MultSpec {
    pub fn new(table_at: &str, table_b: &str, table_c: &str) -> Self {
        MultSpec {
            table_at: table_at.to_string(),
            table_b: table_b.to_string(),
            table_c: table_c.to_string(),
            semiring: Semiring::plus_times(),
            workers: 2,
            row_buffer_cap: DEFAULT_ROW_BUFFER_CAP,
        }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn semiring(mut self, semiring: Semiring) -> Self {
        self.semiring = semiring;
        self
    }

    /// Checks everything that does not need the store.
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::InvalidArgument("workers must be positive".into()));
        }
        if self.table_c == self.table_at || self.table_c == self.table_b {
            return Err(Error::AliasedOutput(self.table_c.clone()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MultRun {
    pub metrics: RunMetrics,
    pub stats: JoinStats,
    /// Entries written into C (equals the partial-product count).
    pub written: u64,
}

/// Creates an empty output table pre-split like `like`, with the
/// semiring's ⊕ as its combiner.
pub fn prepare_output(
    store: &Store,
    name: &str,
    like: &str,
    semiring: &Semiring,
) -> Result<Arc<Table>> {
    let splits = store.table(like)?.splits();
    store.create_table(name, splits, Some(semiring.plus))
}

pub fn table_mult(store: &Store, spec: &MultSpec) -> Result<MultRun> {
    spec.validate()?;
    let at = store.table(&spec.table_at)?;
    let b = store.table(&spec.table_b)?;
    let c = store.table(&spec.table_c)?;
    match c.combiner() {
        None => return Err(Error::MissingCombiner(spec.table_c.clone())),
        Some(comb) if comb.name() != spec.semiring.plus.name() => {
            return Err(Error::CombinerMismatch {
                table: spec.table_c.clone(),
                expected: spec.semiring.plus.name(),
                found: comb.name(),
            })
        }
        Some(_) => {}
    }
    if !c.is_empty()? {
        return Err(Error::OutputNotEmpty(spec.table_c.clone()));
    }

    let ranges = b.tablet_ranges();
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let totals = Mutex::new((JoinStats::default(), 0u64));
    let first_error: Mutex<Option<Error>> = Mutex::new(None);
    let threads = spec.workers.min(ranges.len()).max(1);

    let start = Instant::now();
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| {
                let mut stats = JoinStats::default();
                let mut written = 0;
                while !abort.load(Ordering::Relaxed) {
                    let idx = next.fetch_add(1, Ordering::Relaxed);
                    let Some(range) = ranges.get(idx) else { break };
                    let mut join =
                        TwoTableJoin::new(RemoteSource::new(&at, range), b.scan(range), spec.semiring.times)
                            .with_row_cap(spec.row_buffer_cap);
                    match remote_write(&mut join, &c) {
                        Ok(n) => written += n,
                        Err(e) => {
                            abort.store(true, Ordering::Relaxed);
                            first_error.lock().get_or_insert(e);
                        }
                    }
                    stats += join.stats();
                }
                let mut t = totals.lock();
                t.0 += stats;
                t.1 += written;
            });
        }
    });
    let elapsed = start.elapsed();

    if let Some(e) = first_error.into_inner() {
        return Err(e);
    }
    let (stats, written) = totals.into_inner();
    Ok(MultRun {
        metrics: RunMetrics::new(
            stats.partial_products,
            elapsed,
            spec.workers.div_ceil(2),
            String::new(),
        ),
        stats,
        written,
    })
}

/// `(row, entry count)` for each row of a sorted scan.
struct RowCounts {
    scan: std::iter::Peekable<Scan>,
}

impl Iterator for RowCounts {
    type Item = Result<(Bytes, u64)>;

    fn next(&mut self) -> Option<Self::Item> {
        let row = match self.scan.next()? {
            Ok(e) => e.key.row,
            Err(e) => return Some(Err(e)),
        };
        let mut n = 1;
        while let Some(Ok(_)) = self.scan.next_if(|e| matches!(e, Ok(e) if e.key.row == row)) {
            n += 1;
        }
        Some(Ok((row, n)))
    }
}

/// Σ over shared rows `k` of `nnz(Aᵀ row k) · nnz(B row k)`, from two
/// coordinated scans and without multiplying anything.
pub fn count_partial_products(at: &Table, b: &Table) -> Result<u64> {
    let mut a_rows = RowCounts {
        scan: at.scan_all().peekable(),
    };
    let mut b_rows = RowCounts {
        scan: b.scan_all().peekable(),
    };
    let mut a = a_rows.next().transpose()?;
    let mut bb = b_rows.next().transpose()?;
    let mut total = 0u64;
    while let (Some((ra, na)), Some((rb, nb))) = (&a, &bb) {
        match ra.cmp(rb) {
            std::cmp::Ordering::Less => a = a_rows.next().transpose()?,
            std::cmp::Ordering::Greater => bb = b_rows.next().transpose()?,
            std::cmp::Ordering::Equal => {
                total += na * nb;
                a = a_rows.next().transpose()?;
                bb = b_rows.next().transpose()?;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combiner::Combiner;
    use crate::key::Entry;

    fn store_with(cells_at: &[(&str, &str, u64)], cells_b: &[(&str, &str, u64)]) -> Store {
        let store = Store::new();
        for (name, cells) in [("AT", cells_at), ("B", cells_b)] {
            store.create_table(name, vec![], Some(Combiner::sum())).unwrap();
            store
                .write(
                    name,
                    cells.iter().map(|(r, q, v)| Entry::cell(r.as_bytes(), q.as_bytes(), *v)),
                )
                .unwrap();
        }
        store
    }

    #[test]
    fn single_aligned_pair() {
        let store = store_with(&[("2", "1", 3)], &[("2", "4", 5)]);
        prepare_output(&store, "C", "B", &Semiring::plus_times()).unwrap();
        let run = table_mult(&store, &MultSpec::new("AT", "B", "C")).unwrap();
        assert_eq!(run.stats.partial_products, 1);
        assert_eq!(run.written, 1);
        let c: Vec<_> = store.scan("C", None).unwrap().map(|e| e.unwrap()).collect();
        assert_eq!(c, vec![Entry::cell(b"1", b"4", 15)]);
    }

    #[test]
    fn spec_and_output_checks() {
        let store = store_with(&[("1", "1", 1)], &[("1", "1", 1)]);
        assert!(matches!(
            table_mult(&store, &MultSpec::new("AT", "B", "AT")),
            Err(Error::AliasedOutput(_))
        ));
        assert!(matches!(
            table_mult(&store, &MultSpec::new("AT", "B", "C")),
            Err(Error::UnknownTable(_))
        ));
        assert!(matches!(
            table_mult(&store, &MultSpec::new("AT", "B", "C").workers(0)),
            Err(Error::InvalidArgument(_))
        ));
        prepare_output(&store, "C", "B", &Semiring::plus_times()).unwrap();
        store.write("C", [Entry::cell(b"x", b"y", 1)]).unwrap();
        assert!(matches!(
            table_mult(&store, &MultSpec::new("AT", "B", "C")),
            Err(Error::OutputNotEmpty(_))
        ));
        prepare_output(&store, "D", "B", &Semiring::min_plus()).unwrap();
        assert!(matches!(
            table_mult(&store, &MultSpec::new("AT", "B", "D")),
            Err(Error::CombinerMismatch { .. })
        ));
        store.create_table("E", vec![], None).unwrap();
        assert!(matches!(
            table_mult(&store, &MultSpec::new("AT", "B", "E")),
            Err(Error::MissingCombiner(_))
        ));
    }

    #[test]
    fn counting_without_multiplying() {
        let store = store_with(&[("1", "a", 1), ("2", "b", 1)], &[("3", "c", 1)]);
        let (at, b) = (store.table("AT").unwrap(), store.table("B").unwrap());
        assert_eq!(count_partial_products(&at, &b).unwrap(), 0);

        let a16: Vec<_> = (0..16).map(|i| ("k".to_string(), format!("{i:02}"), 1u64)).collect();
        let a16: Vec<_> = a16.iter().map(|(r, q, v)| (r.as_str(), q.as_str(), *v)).collect();
        let store = store_with(&a16, &a16);
        let (at, b) = (store.table("AT").unwrap(), store.table("B").unwrap());
        assert_eq!(count_partial_products(&at, &b).unwrap(), 256);
    }

    #[test]
    fn overflow_is_reported() {
        let store = store_with(&[("k", "i", u64::MAX)], &[("k", "j", 2)]);
        prepare_output(&store, "C", "B", &Semiring::plus_times()).unwrap();
        assert!(matches!(
            table_mult(&store, &MultSpec::new("AT", "B", "C")),
            Err(Error::MultiplyOverflow)
        ));
    }
}
