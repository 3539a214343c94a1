//! Split-partitioned tables.
//!
//! Tablet `i` owns rows in `[splits[i-1], splits[i])`; a row equal to a split
//! point belongs to the higher tablet.

use std::sync::Arc;

use parking_lot::RwLock;

use crate::combiner::Combiner;
use crate::error::{Error, Result};
use crate::key::{Bytes, Entry, RowRange};
use crate::tablet::{MergeIter, Tablet, TabletConfig, TabletScan};

const WRITE_CHUNK: usize = 4096;

struct Layout {
    splits: Vec<Bytes>,
    tablets: Vec<Arc<Tablet>>,
}

pub struct Table {
    name: String,
    combiner: Option<Combiner>,
    config: TabletConfig,
    layout: RwLock<Layout>,
}

pub(crate) fn validate_splits(splits: &[Bytes]) -> Result<()> {
    match splits.windows(2).position(|w| w[0] >= w[1]) {
        Some(i) => Err(Error::UnsortedSplits { index: i + 1 }),
        None => Ok(()),
    }
}

fn tablet_ranges(splits: &[Bytes]) -> Vec<RowRange> {
    (0..=splits.len())
        .map(|i| RowRange {
            start: i.checked_sub(1).map(|p| splits[p].clone()),
            end: splits.get(i).cloned(),
        })
        .collect()
}

fn tablet_index(splits: &[Bytes], row: &[u8]) -> usize {
    splits.partition_point(|s| s.as_slice() <= row)
}

impl Table {
    pub(crate) fn new(
        name: String,
        splits: Vec<Bytes>,
        combiner: Option<Combiner>,
        config: TabletConfig,
    ) -> Result<Self> {
        validate_splits(&splits)?;
        let tablets = tablet_ranges(&splits)
            .into_iter()
            .map(|r| Arc::new(Tablet::new(r, combiner, config)))
            .collect();
        Ok(Table {
            name,
            combiner,
            config,
            layout: RwLock::new(Layout { splits, tablets }),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn combiner(&self) -> Option<Combiner> {
        self.combiner
    }

    pub fn splits(&self) -> Vec<Bytes> {
        self.layout.read().splits.clone()
    }

    pub fn tablet_count(&self) -> usize {
        self.layout.read().tablets.len()
    }

    pub fn tablet_ranges(&self) -> Vec<RowRange> {
        let layout = self.layout.read();
        layout.tablets.iter().map(|t| t.range().clone()).collect()
    }

    /// Routes each entry to the tablet owning its row. Entries are validated
    /// as they stream; on the first invalid entry the valid ones before it
    /// remain written and the error is returned.
    pub fn write<I: IntoIterator<Item = Entry>>(&self, entries: I) -> Result<u64> {
        let layout = self.layout.read();
        let mut batches: Vec<Vec<Entry>> = vec![Vec::new(); layout.tablets.len()];
        let mut pending = 0usize;
        let mut accepted = 0u64;
        let flush = |batches: &mut Vec<Vec<Entry>>| {
            for (tablet, batch) in layout.tablets.iter().zip(batches.iter_mut()) {
                if !batch.is_empty() {
                    tablet.write(batch.drain(..));
                }
            }
        };
        for entry in entries {
            let invalid = if entry.value == 0 {
                Some(Error::ZeroValueEntry)
            } else if entry.key.row.is_empty() {
                Some(Error::EmptyRow)
            } else {
                None
            };
            if let Some(err) = invalid {
                flush(&mut batches);
                return Err(err);
            }
            let idx = tablet_index(&layout.splits, &entry.key.row);
            batches[idx].push(entry);
            accepted += 1;
            pending += 1;
            if pending >= WRITE_CHUNK {
                flush(&mut batches);
                pending = 0;
            }
        }
        flush(&mut batches);
        Ok(accepted)
    }

    /// Sorted, combined scan. Each tablet is snapshotted when the scan
    /// reaches it.
    pub fn scan(&self, range: &RowRange) -> Scan {
        let layout = self.layout.read();
        let tablets = if range.is_empty() {
            Vec::new()
        } else {
            layout
                .tablets
                .iter()
                .filter(|t| {
                    let r = t.range().intersect(range);
                    !r.is_empty()
                })
                .cloned()
                .collect()
        };
        Scan {
            tablets: tablets.into_iter(),
            range: range.clone(),
            current: None,
        }
    }

    pub fn scan_all(&self) -> Scan {
        self.scan(&RowRange::all())
    }

    pub fn compact(&self) -> Result<()> {
        let tablets = self.layout.read().tablets.clone();
        tablets.iter().try_for_each(|t| t.compact())
    }

    /// Re-partitions the table. Stored entries move uncombined, so scans
    /// before and after are identical.
    pub fn apply_splits(&self, splits: Vec<Bytes>) -> Result<()> {
        validate_splits(&splits)?;
        let mut layout = self.layout.write();
        let runs = layout.tablets.iter().flat_map(|t| t.snapshot()).collect();
        let ranges = tablet_ranges(&splits);
        let mut parts: Vec<Vec<Entry>> = vec![Vec::new(); ranges.len()];
        for entry in MergeIter::new(runs, &RowRange::all()) {
            parts[tablet_index(&splits, &entry.key.row)].push(entry);
        }
        layout.tablets = ranges
            .into_iter()
            .zip(parts)
            .map(|(range, part)| {
                let runs = if part.is_empty() {
                    Vec::new()
                } else {
                    vec![Arc::new(part)]
                };
                Arc::new(Tablet::with_runs(range, self.combiner, self.config, runs))
            })
            .collect();
        layout.splits = splits;
        Ok(())
    }

    /// Split points at entry-count quantiles: split `j` is the row of the
    /// entry with `ceil(j * total / num_tablets)` entries before it in key
    /// order. Repeated rows (a single row spanning a quantile boundary)
    /// collapse, so fewer than `num_tablets - 1` splits may come back.
    pub fn compute_optimal_splits(&self, num_tablets: usize) -> Result<Vec<Bytes>> {
        if num_tablets == 0 {
            return Err(Error::InvalidArgument("number of tablets must be positive".into()));
        }
        let mut total = 0u64;
        for e in self.scan_all() {
            e?;
            total += 1;
        }
        if total == 0 {
            return Err(Error::EmptyTable(self.name.clone()));
        }
        let k = num_tablets as u64;
        let ranks: Vec<u64> = (1..k).map(|j| (j * total).div_ceil(k)).collect();
        let mut splits: Vec<Bytes> = Vec::with_capacity(ranks.len());
        let mut next = ranks.iter().peekable();
        for (idx, e) in self.scan_all().enumerate() {
            let e = e?;
            while next.next_if(|&&r| r == idx as u64).is_some() {
                if splits.last() != Some(&e.key.row) {
                    splits.push(e.key.row.clone());
                }
            }
            if next.peek().is_none() {
                break;
            }
        }
        Ok(splits)
    }

    /// Combined entry count per tablet.
    pub fn tablet_entry_counts(&self) -> Result<Vec<u64>> {
        let tablets = self.layout.read().tablets.clone();
        tablets
            .iter()
            .map(|t| {
                t.scan(&RowRange::all())
                    .try_fold(0u64, |n, e| e.map(|_| n + 1))
            })
            .collect()
    }

    pub fn run_counts(&self) -> Vec<usize> {
        let layout = self.layout.read();
        layout.tablets.iter().map(|t| t.run_count()).collect()
    }

    pub fn is_empty(&self) -> Result<bool> {
        match self.scan_all().next() {
            None => Ok(true),
            Some(Ok(_)) => Ok(false),
            Some(Err(e)) => Err(e),
        }
    }
}

/// Sorted, combined stream across tablets.
pub struct Scan {
    tablets: std::vec::IntoIter<Arc<Tablet>>,
    range: RowRange,
    current: Option<TabletScan>,
}

impl Iterator for Scan {
    type Item = Result<Entry>;

    fn next(&mut self) -> Option<Result<Entry>> {
        loop {
            if let Some(cur) = &mut self.current {
                if let Some(e) = cur.next() {
                    return Some(e);
                }
            }
            let tablet = self.tablets.next()?;
            let range = tablet.range().intersect(&self.range);
            self.current = Some(tablet.scan(&range));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> Bytes {
        Bytes::from_slice(s.as_bytes())
    }

    fn table(splits: &[&str]) -> Table {
        Table::new(
            "t".into(),
            splits.iter().map(|s| b(s)).collect(),
            Some(Combiner::sum()),
            TabletConfig::default(),
        )
        .unwrap()
    }

    fn rows(t: &Table) -> Vec<String> {
        t.scan_all()
            .map(|e| String::from_utf8(e.unwrap().key.row.to_vec()).unwrap())
            .collect()
    }

    #[test]
    fn split_row_goes_to_higher_tablet() {
        let splits = vec![b("m")];
        assert_eq!(tablet_index(&splits, b"a"), 0);
        assert_eq!(tablet_index(&splits, b"m"), 1);
        assert_eq!(tablet_index(&splits, b"z"), 1);
        let t = table(&["m"]);
        t.write([Entry::cell(b"m", b"q", 1)]).unwrap();
        assert_eq!(t.tablet_entry_counts().unwrap(), vec![0, 1]);
    }

    #[test]
    fn tablet_counts_follow_splits() {
        assert_eq!(table(&[]).tablet_count(), 1);
        assert_eq!(table(&["000512"]).tablet_count(), 2);
        assert!(matches!(
            Table::new("t".into(), vec![b("b"), b("a")], None, TabletConfig::default()),
            Err(Error::UnsortedSplits { index: 1 })
        ));
        assert!(matches!(
            Table::new("t".into(), vec![b("a"), b("a")], None, TabletConfig::default()),
            Err(Error::UnsortedSplits { .. })
        ));
    }

    #[test]
    fn write_rejects_zero_and_empty_row() {
        let t = table(&[]);
        assert!(matches!(
            t.write([Entry::cell(b"a", b"q", 0)]),
            Err(Error::ZeroValueEntry)
        ));
        assert!(matches!(
            t.write([Entry::cell(b"", b"q", 1)]),
            Err(Error::EmptyRow)
        ));
        assert!(t.is_empty().unwrap());
    }

    #[test]
    fn scan_across_tablets_is_sorted() {
        let t = table(&["c", "f"]);
        t.write(["h", "a", "d", "c", "b", "g"].map(|r| Entry::cell(r.as_bytes(), b"q", 1)))
            .unwrap();
        assert_eq!(rows(&t), ["a", "b", "c", "d", "g", "h"]);
        let ranged: Vec<_> = t
            .scan(&RowRange::new(Some(b"b"), Some(b"e")))
            .map(|e| e.unwrap().key.row.to_vec())
            .collect();
        assert_eq!(ranged, [b"b".to_vec(), b"c".to_vec(), b"d".to_vec()]);
    }

    #[test]
    fn apply_splits_preserves_content() {
        let t = table(&[]);
        for i in 0..50u64 {
            t.write([Entry::cell(format!("{:03}", i % 17).as_bytes(), b"q", i + 1)])
                .unwrap();
        }
        let before: Vec<_> = t.scan_all().map(|e| e.unwrap()).collect();
        t.apply_splits(vec![b("005"), b("010")]).unwrap();
        assert_eq!(t.tablet_count(), 3);
        let after: Vec<_> = t.scan_all().map(|e| e.unwrap()).collect();
        assert_eq!(before, after);
        let counts = t.tablet_entry_counts().unwrap();
        assert!(counts.iter().all(|&c| c > 0));
        t.apply_splits(vec![]).unwrap();
        assert_eq!(t.tablet_count(), 1);
        assert_eq!(before, t.scan_all().map(|e| e.unwrap()).collect::<Vec<_>>());
    }

    #[test]
    fn optimal_splits_at_quantiles() {
        let t = table(&[]);
        t.write((0..100).map(|i| Entry::cell(format!("{:03}", i).as_bytes(), b"q", 1)))
            .unwrap();
        assert_eq!(t.compute_optimal_splits(1).unwrap(), Vec::<Bytes>::new());
        assert_eq!(
            t.compute_optimal_splits(4).unwrap(),
            vec![b("025"), b("050"), b("075")]
        );
        assert!(table(&[]).compute_optimal_splits(2).is_err());
    }
}
