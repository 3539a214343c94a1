//! Thread-safe table registry.

use std::collections::BTreeMap;
use std::sync::Arc;

use parking_lot::RwLock;

use crate::combiner::Combiner;
use crate::error::{Error, Result};
use crate::key::{Bytes, Entry, RowRange};
use crate::table::{Scan, Table};
use crate::tablet::TabletConfig;

/// Table names are identifiers usable as directory names.
pub fn is_valid_table_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('.')
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'))
}

#[derive(Default)]
pub struct Store {
    tables: RwLock<BTreeMap<String, Arc<Table>>>,
    config: TabletConfig,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    pub fn with_config(config: TabletConfig) -> Self {
        Store {
            tables: RwLock::default(),
            config,
        }
    }

    pub fn create_table(
        &self,
        name: &str,
        splits: Vec<Bytes>,
        combiner: Option<Combiner>,
    ) -> Result<Arc<Table>> {
        if !is_valid_table_name(name) {
            return Err(Error::InvalidTableName(name.to_string()));
        }
        let mut tables = self.tables.write();
        if tables.contains_key(name) {
            return Err(Error::DuplicateTableName(name.to_string()));
        }
        let table = Arc::new(Table::new(name.to_string(), splits, combiner, self.config)?);
        tables.insert(name.to_string(), table.clone());
        Ok(table)
    }

    pub fn table(&self, name: &str) -> Result<Arc<Table>> {
        self.tables
            .read()
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownTable(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tables.read().contains_key(name)
    }

    pub fn drop_table(&self, name: &str) -> Result<()> {
        self.tables
            .write()
            .remove(name)
            .map(|_| ())
            .ok_or_else(|| Error::UnknownTable(name.to_string()))
    }

    pub fn table_names(&self) -> Vec<String> {
        self.tables.read().keys().cloned().collect()
    }

    pub fn write<I: IntoIterator<Item = Entry>>(&self, name: &str, entries: I) -> Result<u64> {
        self.table(name)?.write(entries)
    }

    pub fn scan(&self, name: &str, range: Option<&RowRange>) -> Result<Scan> {
        let table = self.table(name)?;
        Ok(match range {
            Some(r) => table.scan(r),
            None => table.scan_all(),
        })
    }

    pub fn compact(&self, name: &str) -> Result<()> {
        self.table(name)?.compact()
    }

    pub fn apply_splits(&self, name: &str, splits: Vec<Bytes>) -> Result<()> {
        self.table(name)?.apply_splits(splits)
    }

    pub fn compute_optimal_splits(&self, name: &str, num_tablets: usize) -> Result<Vec<Bytes>> {
        self.table(name)?.compute_optimal_splits(num_tablets)
    }
}
