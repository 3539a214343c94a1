//! Row extraction through a binary diagonal matrix.
//!
//! `E` holds a 1 at `(n, n)` for every sampled vertex `n`. `E` is its own
//! transpose, so it sits directly in the Aᵀ slot of a multiply and
//! `E · G` keeps exactly the sampled rows of `G`.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::graphgen::{vertex_label, MAX_SCALE};
use crate::key::{Entry, Key};
use crate::rng::CounterRng;
use crate::semiring::Semiring;
use crate::store::Store;
use crate::tablemult::{table_mult, MultRun, MultSpec};

// keeps sampling draws apart from edge streams of the same seed
const SAMPLE_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSet {
    pub vertices: BTreeSet<u64>,
    pub scale: u32,
    pub seed: u64,
}

impl SampleSet {
    /// Draws `size` distinct vertices of `[0, 2^scale)` with a partial
    /// Fisher–Yates shuffle.
    pub fn random(scale: u32, size: u64, seed: u64) -> Result<Self> {
        if scale > MAX_SCALE {
            return Err(Error::InvalidArgument(format!("scale must be at most {MAX_SCALE}")));
        }
        let n = 1u64 << scale;
        if size > n {
            return Err(Error::InvalidArgument(format!(
                "cannot sample {size} of {n} vertices"
            )));
        }
        let mut stream = CounterRng::new(seed).stream(SAMPLE_STREAM);
        // sparse view of the permutation array: absent slots hold their index
        let mut swapped: HashMap<u64, u64> = HashMap::new();
        let mut vertices = BTreeSet::new();
        for i in 0..size {
            let j = i + stream.below(n - i);
            let at_j = *swapped.get(&j).unwrap_or(&j);
            let at_i = *swapped.get(&i).unwrap_or(&i);
            swapped.insert(j, at_i);
            vertices.insert(at_j);
        }
        Ok(SampleSet {
            vertices,
            scale,
            seed,
        })
    }

    pub fn from_vertices(scale: u32, vertices: impl IntoIterator<Item = u64>) -> Result<Self> {
        let vertices: BTreeSet<u64> = vertices.into_iter().collect();
        if scale > MAX_SCALE || vertices.iter().any(|&v| v >> scale != 0) {
            return Err(Error::InvalidArgument("vertex outside the graph".into()));
        }
        Ok(SampleSet {
            vertices,
            scale,
            seed: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Writes the diagonal matrix for `sample` into the empty table `target`.
pub fn build_extraction_table(store: &Store, sample: &SampleSet, target: &str) -> Result<u64> {
    let table = store.table(target)?;
    if !table.is_empty()? {
        return Err(Error::OutputNotEmpty(target.to_string()));
    }
    table.write(sample.vertices.iter().map(|&v| {
        let label = vertex_label(v, sample.scale);
        Entry::new(
            Key {
                row: label.clone(),
                qualifier: label,
                ..Key::default()
            },
            1,
        )
    }))
}

/// Multiplies the diagonal `extraction` table against `graph` into
/// `output`, leaving the sampled rows of the graph in `output`.
pub fn extract_rows(
    store: &Store,
    extraction: &str,
    graph: &str,
    output: &str,
    workers: usize,
) -> Result<MultRun> {
    let spec = MultSpec::new(extraction, graph, output)
        .workers(workers)
        .semiring(Semiring::plus_times());
    table_mult(store, &spec)
}
