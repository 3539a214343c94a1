//! Strong and weak scaling experiments for TableMult and row extraction.
//!
//! A simulated node is two tablets and two workers. For each node count the
//! inputs are re-split at entry-count quantiles, the output table is created
//! with the splits of B, inputs and output are compacted, and only the
//! multiply itself is timed. Each configuration runs `repetitions` times and
//! the run with the median elapsed time represents it.

use std::fmt;

use crate::combiner::Combiner;
use crate::error::{Error, Result};
use crate::extraction::{build_extraction_table, extract_rows, SampleSet};
use crate::graphgen::{generate_graph, GraphSpec, DEFAULT_EDGES_PER_VERTEX};
use crate::metrics::{compute_speedup, RunMetrics};
use crate::report::ReportRow;
use crate::rng::mix64;
use crate::semiring::Semiring;
use crate::store::Store;
use crate::tablemult::{prepare_output, table_mult, MultSpec};

pub const TABLETS_PER_NODE: usize = 2;

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub seed: u64,
    pub repetitions: usize,
    pub edges_per_vertex: u64,
    /// Threads used to generate input graphs (does not affect their content).
    pub generator_shards: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seed: 1,
            repetitions: 3,
            edges_per_vertex: DEFAULT_EDGES_PER_VERTEX,
            generator_shards: available_cores(),
        }
    }
}

pub fn available_cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Strong,
    Weak,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Strong => "strong",
            Mode::Weak => "weak",
        })
    }
}

#[derive(Clone, Debug)]
pub struct ScalingRow {
    /// Median run.
    pub metrics: RunMetrics,
    pub sample_size: Option<u64>,
    pub speedup: f64,
    pub runs: Vec<RunMetrics>,
}

#[derive(Clone, Debug)]
pub struct ScalingReport {
    pub experiment: &'static str,
    pub mode: Mode,
    pub rows: Vec<ScalingRow>,
    pub repetitions: usize,
    /// Node counts whose worker count exceeds the host's cores.
    pub oversubscribed: Vec<usize>,
}

impl ScalingReport {
    pub fn to_rows(&self) -> Vec<ReportRow> {
        let mode = self.mode.to_string();
        self.rows
            .iter()
            .map(|r| {
                ReportRow::new(
                    self.experiment,
                    &mode,
                    r.metrics.nodes,
                    &r.metrics.scale_label,
                    r.sample_size,
                    r.metrics.partial_products,
                    r.metrics.elapsed_seconds,
                    r.metrics.rate,
                    r.speedup,
                )
            })
            .collect()
    }

    pub fn speedups(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.speedup).collect()
    }
}

/// Scales of the two inputs at `nodes` for a weak-scaling run: each doubling
/// of the node count adds one to a single graph's scale, first A then B.
pub fn weak_scales(base_scale: u32, nodes: usize) -> Result<(u32, u32)> {
    if !nodes.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "weak scaling needs power-of-two node counts, got {nodes}"
        )));
    }
    let steps = nodes.trailing_zeros();
    Ok((base_scale + steps.div_ceil(2), base_scale + steps / 2))
}

pub fn scale_label(a: u32, b: u32) -> String {
    format!("{a}x{b}")
}

fn validate_nodes(node_counts: &[usize], cfg: &BenchConfig) -> Result<()> {
    if node_counts.first() != Some(&1) {
        return Err(Error::InvalidArgument("node counts must start at 1".into()));
    }
    if node_counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("node counts must be ascending".into()));
    }
    if cfg.repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be positive".into()));
    }
    Ok(())
}

fn oversubscribed(node_counts: &[usize]) -> Vec<usize> {
    let cores = available_cores();
    node_counts
        .iter()
        .copied()
        .filter(|n| n * TABLETS_PER_NODE > cores)
        .collect()
}

fn median_run(mut runs: Vec<RunMetrics>) -> (RunMetrics, Vec<RunMetrics>) {
    let mut sorted = runs.clone();
    sorted.sort_by(|a, b| a.elapsed_seconds.total_cmp(&b.elapsed_seconds));
    let median = sorted.swap_remove((sorted.len() - 1) / 2);
    runs.shrink_to_fit();
    (median, runs)
}

fn speedup_over(baseline: &RunMetrics, run: &RunMetrics) -> Result<f64> {
    if baseline.partial_products == 0 && run.partial_products == 0 {
        // no work to rate; compare times instead
        return Ok(baseline.elapsed_seconds / run.elapsed_seconds);
    }
    compute_speedup(baseline.rate, run.rate)
}

fn load_graph(store: &Store, name: &str, scale: u32, seed: u64, cfg: &BenchConfig) -> Result<()> {
    store.create_table(name, vec![], Some(Combiner::sum()))?;
    let spec = GraphSpec::new(scale, seed).edges_per_vertex(cfg.edges_per_vertex);
    generate_graph(store, &spec, name, cfg.generator_shards)?;
    store.compact(name)
}

fn split_for_nodes(store: &Store, name: &str, nodes: usize) -> Result<()> {
    let splits = store.compute_optimal_splits(name, nodes * TABLETS_PER_NODE)?;
    store.apply_splits(name, splits)?;
    store.compact(name)
}

/// Re-splits A and B for `nodes`, then times `repetitions` multiplies.
fn multiply_runs(store: &Store, nodes: usize, label: &str, cfg: &BenchConfig) -> Result<Vec<RunMetrics>> {
    split_for_nodes(store, "A", nodes)?;
    split_for_nodes(store, "B", nodes)?;
    let semiring = Semiring::plus_times();
    let spec = MultSpec::new("A", "B", "C")
        .workers(nodes * TABLETS_PER_NODE)
        .semiring(semiring);
    let mut runs = Vec::with_capacity(cfg.repetitions);
    for _ in 0..cfg.repetitions {
        prepare_output(store, "C", "B", &semiring)?;
        store.compact("C")?;
        let result = table_mult(store, &spec);
        store.drop_table("C")?;
        let run = result?;
        runs.push(RunMetrics {
            nodes,
            scale_label: label.to_string(),
            ..run.metrics
        });
    }
    Ok(runs)
}

fn assemble(
    experiment: &'static str,
    mode: Mode,
    node_counts: &[usize],
    cfg: &BenchConfig,
    per_node: Vec<Vec<(Option<u64>, Vec<RunMetrics>)>>,
) -> Result<ScalingReport> {
    let mut rows: Vec<ScalingRow> = Vec::new();
    let mut baselines: Vec<(Option<u64>, RunMetrics)> = Vec::new();
    for groups in per_node {
        for (sample_size, runs) in groups {
            let (median, runs) = median_run(runs);
            let speedup = match baselines.iter().find(|(s, _)| *s == sample_size) {
                Some((_, base)) => speedup_over(base, &median)?,
                None => {
                    baselines.push((sample_size, median.clone()));
                    1.0
                }
            };
            rows.push(ScalingRow {
                metrics: median,
                sample_size,
                speedup,
                runs,
            });
        }
    }
    Ok(ScalingReport {
        experiment,
        mode,
        rows,
        repetitions: cfg.repetitions,
        oversubscribed: oversubscribed(node_counts),
    })
}

/// Fixed `scale x scale` multiply across node counts.
pub fn run_strong_scaling(scale: u32, node_counts: &[usize], cfg: &BenchConfig) -> Result<ScalingReport> {
    validate_nodes(node_counts, cfg)?;
    let store = Store::new();
    load_graph(&store, "A", scale, cfg.seed, cfg)?;
    load_graph(&store, "B", scale, cfg.seed.wrapping_add(1), cfg)?;
    let label = scale_label(scale, scale);
    let per_node = node_counts
        .iter()
        .map(|&n| Ok(vec![(None, multiply_runs(&store, n, &label, cfg)?)]))
        .collect::<Result<Vec<_>>>()?;
    assemble("tablemult", Mode::Strong, node_counts, cfg, per_node)
}

/// Multiply whose inputs grow with the node count (see [`weak_scales`]).
pub fn run_weak_scaling(base_scale: u32, node_counts: &[usize], cfg: &BenchConfig) -> Result<ScalingReport> {
    validate_nodes(node_counts, cfg)?;
    let per_node = node_counts
        .iter()
        .map(|&n| {
            let (sa, sb) = weak_scales(base_scale, n)?;
            let store = Store::new();
            load_graph(&store, "A", sa, cfg.seed, cfg)?;
            load_graph(&store, "B", sb, cfg.seed.wrapping_add(1), cfg)?;
            Ok(vec![(None, multiply_runs(&store, n, &scale_label(sa, sb), cfg)?)])
        })
        .collect::<Result<Vec<_>>>()?;
    assemble("tablemult", Mode::Weak, node_counts, cfg, per_node)
}

fn sample_seed(seed: u64, nodes: usize, size: u64, rep: usize) -> u64 {
    mix64(seed ^ mix64((nodes as u64) << 32 ^ size ^ mix64(rep as u64 + 1)))
}

/// Row extraction with a fresh random diagonal matrix per repetition. In
/// strong mode the graph stays at `scale`; in weak mode it is
/// `scale + log2(nodes)`.
pub fn run_extraction_scaling(
    mode: Mode,
    scale: u32,
    sample_sizes: &[u64],
    node_counts: &[usize],
    cfg: &BenchConfig,
) -> Result<ScalingReport> {
    validate_nodes(node_counts, cfg)?;
    if sample_sizes.is_empty() {
        return Err(Error::InvalidArgument("no sample sizes given".into()));
    }
    let mut shared: Option<Store> = None;
    let mut per_node = Vec::with_capacity(node_counts.len());
    for &nodes in node_counts {
        let graph_scale = match mode {
            Mode::Strong => scale,
            Mode::Weak => {
                if !nodes.is_power_of_two() {
                    return Err(Error::InvalidArgument(format!(
                        "weak scaling needs power-of-two node counts, got {nodes}"
                    )));
                }
                scale + nodes.trailing_zeros()
            }
        };
        let fresh;
        let store = match mode {
            Mode::Strong => shared.get_or_insert_with(Store::new),
            Mode::Weak => {
                fresh = Store::new();
                &fresh
            }
        };
        if !store.contains("G") {
            load_graph(store, "G", graph_scale, cfg.seed, cfg)?;
        }
        split_for_nodes(store, "G", nodes)?;
        let label = graph_scale.to_string();
        let mut groups = Vec::with_capacity(sample_sizes.len());
        for &size in sample_sizes {
            let mut runs = Vec::with_capacity(cfg.repetitions);
            for rep in 0..cfg.repetitions {
                let sample = SampleSet::random(graph_scale, size, sample_seed(cfg.seed, nodes, size, rep))?;
                store.create_table("E", vec![], Some(Combiner::sum()))?;
                build_extraction_table(store, &sample, "E")?;
                store.compact("E")?;
                prepare_output(store, "O", "G", &Semiring::plus_times())?;
                store.compact("O")?;
                let result = extract_rows(store, "E", "G", "O", nodes * TABLETS_PER_NODE);
                store.drop_table("E")?;
                store.drop_table("O")?;
                let run = result?;
                runs.push(RunMetrics {
                    nodes,
                    scale_label: label.clone(),
                    ..run.metrics
                });
            }
            groups.push((Some(size), runs));
        }
        per_node.push(groups);
    }
    assemble("extract", mode, node_counts, cfg, per_node)
}
