//! Unpermuted Kronecker (Graph500-style) power-law graph generator.
//!
//! Each edge picks one quadrant per bit of the vertex id with probabilities
//! `(A, B, C, D) = (0.57, 0.19, 0.19, 0.05)`. Without the final relabeling
//! step vertex 0 is the hub and degree falls off with the number of set
//! bits in the id.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::key::{Bytes, Entry, Key};
use crate::rng::CounterRng;
use crate::store::Store;
use crate::table::Table;

pub const KRONECKER_A: f64 = 0.57;
pub const KRONECKER_B: f64 = 0.19;
pub const KRONECKER_C: f64 = 0.19;

pub const DEFAULT_EDGES_PER_VERTEX: u64 = 16;
pub const MAX_SCALE: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphSpec {
    pub scale: u32,
    pub edges_per_vertex: u64,
    pub seed: u64,
}

impl GraphSpec {
    pub fn new(scale: u32, seed: u64) -> Self {
        GraphSpec {
            scale,
            edges_per_vertex: DEFAULT_EDGES_PER_VERTEX,
            seed,
        }
    }

    pub fn edges_per_vertex(mut self, epv: u64) -> Self {
        self.edges_per_vertex = epv;
        self
    }

    pub fn vertex_count(&self) -> u64 {
        1 << self.scale
    }

    /// Raw edges generated, before duplicates collapse.
    pub fn edge_count(&self) -> u64 {
        self.edges_per_vertex << self.scale
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale == 0 || self.scale > MAX_SCALE {
            return Err(Error::InvalidArgument(format!(
                "scale must be in 1..={MAX_SCALE}, got {}",
                self.scale
            )));
        }
        if self.edges_per_vertex == 0 {
            return Err(Error::InvalidArgument("edges per vertex must be positive".into()));
        }
        self.edges_per_vertex
            .checked_shl(self.scale)
            .filter(|n| n >> self.scale == self.edges_per_vertex)
            .ok_or_else(|| Error::InvalidArgument("edge count overflows".into()))?;
        Ok(())
    }

    /// Source and destination of edge `index`.
    pub fn edge(&self, rng: &CounterRng, index: u64) -> (u64, u64) {
        let mut stream = rng.stream(index);
        let (mut src, mut dst) = (0u64, 0u64);
        for _ in 0..self.scale {
            let r = stream.next_f64();
            let (s, d) = if r < KRONECKER_A {
                (0, 0)
            } else if r < KRONECKER_A + KRONECKER_B {
                (0, 1)
            } else if r < KRONECKER_A + KRONECKER_B + KRONECKER_C {
                (1, 0)
            } else {
                (1, 1)
            };
            src = src << 1 | s;
            dst = dst << 1 | d;
        }
        (src, dst)
    }

    pub fn edges(&self, range: std::ops::Range<u64>) -> impl Iterator<Item = (u64, u64)> + '_ {
        let rng = CounterRng::new(self.seed);
        range.map(move |i| self.edge(&rng, i))
    }
}

/// Decimal digits in `2^scale`; every label of the graph has this width.
pub fn label_width(scale: u32) -> usize {
    (1u64 << scale).to_string().len()
}

/// Zero-padded decimal label, so byte order equals numeric order.
pub fn vertex_label(id: u64, scale: u32) -> Bytes {
    let width = label_width(scale);
    Bytes::from_slice(format!("{id:0width$}").as_bytes())
}

pub fn parse_vertex_label(label: &[u8], scale: u32) -> Result<u64> {
    let bad = |why: &str| Error::InvalidArgument(format!("bad vertex label: {why}"));
    if scale > MAX_SCALE {
        return Err(bad("scale out of range"));
    }
    if label.len() != label_width(scale) {
        return Err(bad("wrong width"));
    }
    if !label.iter().all(u8::is_ascii_digit) {
        return Err(bad("not decimal"));
    }
    let id: u64 = std::str::from_utf8(label)
        .expect("ascii digits")
        .parse()
        .map_err(|_| bad("overflow"))?;
    if id >> scale != 0 {
        return Err(bad("id out of range"));
    }
    Ok(id)
}

const GEN_CHUNK: u64 = 1 << 14;

fn write_edges(table: &Table, spec: &GraphSpec, range: std::ops::Range<u64>) -> Result<u64> {
    let mut written = 0;
    let mut start = range.start;
    while start < range.end {
        let end = (start + GEN_CHUNK).min(range.end);
        written += table.write(spec.edges(start..end).map(|(s, d)| {
            Entry::new(
                Key {
                    row: vertex_label(s, spec.scale),
                    qualifier: vertex_label(d, spec.scale),
                    ..Key::default()
                },
                1,
            )
        }))?;
        start = end;
    }
    Ok(written)
}

/// Writes the graph's raw edges (value 1 each) into `target`, splitting the
/// edge index range across `shards` threads. Returns the raw edge count.
pub fn generate_graph(store: &Store, spec: &GraphSpec, target: &str, shards: usize) -> Result<u64> {
    spec.validate()?;
    let table = store.table(target)?;
    let total = spec.edge_count();
    let shards = (shards.max(1) as u64).min(total);
    let per = total.div_ceil(shards);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..shards)
            .map(|i| {
                let table = &table;
                let range = (i * per).min(total)..((i + 1) * per).min(total);
                s.spawn(move || write_edges(table, spec, range))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("generator shard panicked"))
            .sum::<Result<u64>>()
    })
}

/// Maps out-degree (distinct qualifiers in a row) to the number of rows
/// with that degree.
pub fn degree_histogram(table: &Table) -> Result<BTreeMap<u64, u64>> {
    let mut hist = BTreeMap::new();
    let mut current: Option<(Bytes, u64)> = None;
    for e in table.scan_all() {
        let e = e?;
        match &mut current {
            Some((row, n)) if *row == e.key.row => *n += 1,
            _ => {
                if let Some((_, n)) = current.replace((e.key.row, 1)) {
                    *hist.entry(n).or_insert(0) += 1;
                }
            }
        }
    }
    if let Some((_, n)) = current {
        *hist.entry(n).or_insert(0) += 1;
    }
    Ok(hist)
}
