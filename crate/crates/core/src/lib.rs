//! A miniature tablet store with a streaming, table-resident sparse matrix
//! multiply.
//!
//! Tables are sorted `(key, u64)` collections partitioned into tablets by
//! split points. Values sharing a key are reduced lazily by the table's
//! combiner when a tablet is scanned or compacted. [`tablemult::table_mult`]
//! multiplies two tables under a [`Semiring`] by running one
//! source → join → write pipeline per tablet of the right-hand table, and
//! leaves the ⊕ to the output table's combiner.
//!
//! ```
//! use tabulo::{Combiner, Entry, MultSpec, Semiring, Store};
//! use tabulo::tablemult::{prepare_output, table_mult};
//!
//! let store = Store::new();
//! store.create_table("AT", vec![], Some(Combiner::sum())).unwrap();
//! store.create_table("B", vec![], Some(Combiner::sum())).unwrap();
//! store.write("AT", [Entry::cell(b"2", b"1", 3)]).unwrap();
//! store.write("B", [Entry::cell(b"2", b"4", 5)]).unwrap();
//! prepare_output(&store, "C", "B", &Semiring::plus_times()).unwrap();
//!
//! let run = table_mult(&store, &MultSpec::new("AT", "B", "C")).unwrap();
//! assert_eq!(run.stats.partial_products, 1);
//! let c: Vec<_> = store.scan("C", None).unwrap().map(Result::unwrap).collect();
//! assert_eq!(c, vec![Entry::cell(b"1", b"4", 15)]);
//! ```

pub mod bench;
pub mod combiner;
pub mod error;
pub mod extraction;
pub mod format;
pub mod graphgen;
pub mod iterators;
pub mod key;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod semiring;
pub mod store;
pub mod table;
pub mod tablemult;
pub mod tablet;

pub use combiner::Combiner;
pub use error::{Error, Result};
pub use key::{Bytes, Entry, Key, RowRange};
pub use metrics::{compute_speedup, RunMetrics};
pub use semiring::Semiring;
pub use store::Store;
pub use table::Table;
pub use tablemult::{MultRun, MultSpec};
pub use tablet::TabletConfig;
