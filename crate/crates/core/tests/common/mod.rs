//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use tabulo::tablemult::{prepare_output, table_mult};
use tabulo::{Combiner, Entry, MultSpec, Semiring, Store};

pub type Triple = (u32, u32, u64);
pub type Cell = (Vec<u8>, Vec<u8>, u64);

pub fn label(i: u32) -> Vec<u8> {
    i.to_string().into_bytes()
}

/// Sparse matrix with random shape (each side in `1..=max_dim`), density
/// and small values; coordinates are unique.
pub fn random_sparse(rng: &mut StdRng, rows: u32, cols: u32, max_value: u64) -> Vec<Triple> {
    let density: f64 = rng.gen_range(0.0..0.3);
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if rng.gen_bool(density) {
                out.push((r, c, rng.gen_range(1..=max_value)));
            }
        }
    }
    out
}

pub fn load(store: &Store, name: &str, triples: &[Triple], combiner: Combiner) {
    store.create_table(name, vec![], Some(combiner)).unwrap();
    store
        .write(name, triples.iter().map(|&(r, c, v)| Entry::cell(&label(r), &label(c), v)))
        .unwrap();
}

pub fn scan_cells(store: &Store, name: &str) -> Vec<Cell> {
    store
        .scan(name, None)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.key.row.to_vec(), e.key.qualifier.to_vec(), e.value)
        })
        .collect()
}

fn to_cells(map: impl IntoIterator<Item = ((u32, u32), u64)>) -> Vec<Cell> {
    let mut cells: Vec<Cell> = map.into_iter().map(|((i, j), v)| (label(i), label(j), v)).collect();
    cells.sort();
    cells
}

/// Dense triple loop for C = Aᵀᵀ·B under (+, ×), `at` given as (k, i, v).
pub fn dense_plus_times(at: &[Triple], b: &[Triple], dim: usize) -> Vec<Cell> {
    let mut a = vec![vec![0u64; dim]; dim];
    let mut bb = vec![vec![0u64; dim]; dim];
    for &(k, i, v) in at {
        a[i as usize][k as usize] = v;
    }
    for &(k, j, v) in b {
        bb[k as usize][j as usize] = v;
    }
    let mut c = BTreeMap::new();
    for (i, a_row) in a.iter().enumerate() {
        for j in 0..dim {
            let sum: u64 = a_row.iter().zip(&bb).map(|(x, b_row)| x * b_row[j]).sum();
            if sum != 0 {
                c.insert((i as u32, j as u32), sum);
            }
        }
    }
    to_cells(c)
}

/// Brute-force (min, +) product; absent entries are +∞.
pub fn brute_min_plus(at: &[Triple], b: &[Triple]) -> Vec<Cell> {
    let mut c: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    for &(ka, i, va) in at {
        for &(kb, j, vb) in b {
            if ka == kb {
                let v = va + vb;
                c.entry((i, j)).and_modify(|x| *x = (*x).min(v)).or_insert(v);
            }
        }
    }
    to_cells(c)
}

/// Σ_k nnz(Aᵀ row k) · nnz(B row k).
pub fn pp_oracle(at: &[Triple], b: &[Triple]) -> u64 {
    let mut a_rows: HashMap<u32, u64> = HashMap::new();
    for &(k, _, _) in at {
        *a_rows.entry(k).or_default() += 1;
    }
    b.iter().map(|(k, _, _)| a_rows.get(k).copied().unwrap_or(0)).sum()
}

/// Group-by-key-and-sum.
pub fn hash_aggregate(cells: &[Cell]) -> Vec<Cell> {
    let mut agg: HashMap<(Vec<u8>, Vec<u8>), u64> = HashMap::new();
    for (r, c, v) in cells {
        *agg.entry((r.clone(), c.clone())).or_default() += v;
    }
    let mut out: Vec<Cell> = agg.into_iter().map(|((r, c), v)| (r, c, v)).collect();
    out.sort();
    out
}

/// Entries of `graph` whose row label is in `rows`.
pub fn row_filter(graph: &[Cell], rows: &BTreeSet<Vec<u8>>) -> Vec<Cell> {
    graph.iter().filter(|(r, _, _)| rows.contains(r)).cloned().collect()
}

/// Multiplies `at` by `b` into a fresh table `C` and returns its scan.
pub fn multiply(store: &Store, semiring: Semiring, workers: usize) -> (Vec<Cell>, u64) {
    prepare_output(store, "C", "B", &semiring).unwrap();
    let run = table_mult(store, &MultSpec::new("AT", "B", "C").workers(workers).semiring(semiring)).unwrap();
    store.compact("C").unwrap();
    (scan_cells(store, "C"), run.stats.partial_products)
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random splits over decimal labels below `dim`.
pub fn random_splits(rng: &mut StdRng, dim: u32) -> Vec<tabulo::Bytes> {
    let n = rng.gen_range(0..4);
    let mut labels: Vec<Vec<u8>> = (0..n).map(|_| label(rng.gen_range(0..dim))).collect();
    labels.sort();
    labels.dedup();
    labels.iter().map(|l| tabulo::Bytes::from_slice(l)).collect()
}

/// Summary of a randomized table-operation sequence.
#[derive(Debug, Default)]
pub struct OpsReport {
    pub writes: usize,
    pub compactions: usize,
    pub resplits: usize,
    pub checks: usize,
}

fn random_key_entry(r: &mut StdRng) -> Entry {
    let row = label(r.gen_range(0..60));
    let family: &[u8] = if r.gen_bool(0.1) { b"f" } else { b"" };
    let qualifier = label(r.gen_range(0..8));
    Entry::new(tabulo::Key::new(&row, family, &qualifier), r.gen_range(1..1000))
}

/// Runs `ops` random writes, compactions and re-splits against a table with
/// a small flush threshold and compares every scan with a `BTreeMap` model:
/// summed values with a sum combiner, newest value without one.
pub fn run_table_ops(seed: u64, ops: usize, combiner: Option<Combiner>) -> Result<OpsReport, String> {
    let mut r = rng(seed);
    let store = Store::with_config(tabulo::TabletConfig {
        flush_threshold: 16,
        merge_runs: r.gen_bool(0.5),
    });
    let table = store.create_table("T", vec![], combiner).map_err(|e| e.to_string())?;
    let mut model: BTreeMap<tabulo::Key, u64> = BTreeMap::new();
    let mut written_sum: u128 = 0;
    let mut report = OpsReport::default();
    let scan = |table: &tabulo::Table| -> Result<Vec<(tabulo::Key, u64)>, String> {
        table
            .scan_all()
            .map(|e| e.map(|e| (e.key, e.value)).map_err(|e| e.to_string()))
            .collect()
    };
    for step in 0..ops {
        match r.gen_range(0..100) {
            0..=79 => {
                let n = r.gen_range(1..6);
                let batch: Vec<Entry> = (0..n).map(|_| random_key_entry(&mut r)).collect();
                for e in &batch {
                    written_sum += u128::from(e.value);
                    match combiner {
                        Some(c) => {
                            let slot = model.entry(e.key.clone()).or_insert(0);
                            *slot = if *slot == 0 { e.value } else { c.reduce(*slot, e.value).unwrap() };
                        }
                        None => {
                            model.insert(e.key.clone(), e.value);
                        }
                    }
                }
                table.write(batch).map_err(|e| e.to_string())?;
                report.writes += 1;
            }
            80..=89 => {
                let before = scan(&table)?;
                table.compact().map_err(|e| e.to_string())?;
                if scan(&table)? != before {
                    return Err(format!("step {step}: compaction changed the scan"));
                }
                if table.run_counts().iter().any(|&n| n > 1) {
                    return Err(format!("step {step}: compaction left several runs"));
                }
                report.compactions += 1;
            }
            _ => {
                let before = scan(&table)?;
                let splits = random_splits(&mut r, 60);
                table.apply_splits(splits).map_err(|e| e.to_string())?;
                if scan(&table)? != before {
                    return Err(format!("step {step}: re-split changed the scan"));
                }
                report.resplits += 1;
            }
        }
        if step % 10 == 0 || step + 1 == ops {
            let got = scan(&table)?;
            if got.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(format!("step {step}: scan not strictly ascending"));
            }
            let expected: Vec<(tabulo::Key, u64)> = model.iter().map(|(k, v)| (k.clone(), *v)).collect();
            if got != expected {
                return Err(format!("step {step}: scan differs from model"));
            }
            if combiner.map(|c| c.name()) == Some("sum") {
                let total: u128 = got.iter().map(|(_, v)| u128::from(*v)).sum();
                if total != written_sum {
                    return Err(format!("step {step}: value sum {total} != written {written_sum}"));
                }
            }
            report.checks += 1;
        }
    }
    Ok(report)
}
