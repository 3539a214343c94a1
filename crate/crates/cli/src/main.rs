use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tabulo::bench::{self, BenchConfig, Mode, ScalingReport};
use tabulo::extraction::{build_extraction_table, extract_rows, SampleSet};
use tabulo::format::{self, DumpReader};
use tabulo::graphgen::{generate_graph, GraphSpec, DEFAULT_EDGES_PER_VERTEX};
use tabulo::report::{write_report, ReportRow};
use tabulo::store::is_valid_table_name;
use tabulo::tablemult::{prepare_output, table_mult};
use tabulo::{Combiner, MultRun, MultSpec, RowRange, Semiring, Store};

#[derive(Parser, Debug)]
#[command(name = "tabulo", version, about = "Tablet store with a streaming sparse matrix multiply")]
struct Cli {
    /// Directory holding persisted tables.
    #[arg(long, env = "TABULO_DATA_DIR", default_value = "tabulo-data", global = true)]
    data_dir: PathBuf,
    /// Worker threads for multiplies.
    #[arg(long, default_value_t = 2, global = true)]
    workers: usize,
    /// Seed for every random operation.
    #[arg(long, default_value_t = 1, global = true)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a Kronecker power-law graph into a new table.
    Generate {
        #[arg(long)]
        scale: u32,
        #[arg(long, default_value_t = DEFAULT_EDGES_PER_VERTEX)]
        epv: u64,
        #[arg(long)]
        table: String,
        /// Generator threads; the output does not depend on it.
        #[arg(long, default_value_t = 1)]
        shards: usize,
    },
    /// Read dump lines from stdin into a table, creating it if needed.
    Ingest {
        #[arg(long)]
        table: String,
        #[arg(long, value_enum, default_value_t = CombinerArg::Sum)]
        combiner: CombinerArg,
        /// Splits file used when the table is created.
        #[arg(long)]
        splits: Option<PathBuf>,
    },
    /// Write a table's entries to stdout.
    Dump {
        #[arg(long)]
        table: String,
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        end: Option<String>,
    },
    /// Compute or apply tablet split points.
    Splits {
        #[command(subcommand)]
        action: SplitsAction,
    },
    /// Merge every tablet of a table into a single run.
    Compact {
        #[arg(long)]
        table: String,
    },
    /// C = A ⊕.⊗ B, where A is stored transposed.
    Tablemult {
        #[arg(long = "a-transpose")]
        a_transpose: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        c: String,
        #[arg(long, value_enum, default_value_t = SemiringArg::PlusTimes)]
        semiring: SemiringArg,
        /// Also write a CSV report row here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Copy a random sample of a graph's rows into a new table.
    Extract {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        output: String,
        #[arg(long)]
        sample_size: u64,
        /// Scale the graph was generated at (fixes the label width).
        #[arg(long)]
        scale: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scaling experiments.
    Bench {
        #[command(subcommand)]
        kind: BenchKind,
    },
    /// Describe stored tables.
    Info {
        #[arg(long)]
        table: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum SplitsAction {
    /// Print split points that balance entries over N tablets.
    Compute {
        #[arg(long)]
        table: String,
        #[arg(long)]
        tablets: usize,
    },
    /// Re-split a table using a splits file ("-" for stdin).
    Apply {
        #[arg(long)]
        table: String,
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Args, Debug)]
struct BenchCommon {
    /// Comma-separated simulated node counts, starting at 1.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4])]
    nodes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
    #[arg(long, default_value_t = DEFAULT_EDGES_PER_VERTEX)]
    epv: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum BenchKind {
    /// Fixed SCALE x SCALE multiply.
    Strong {
        #[arg(long)]
        scale: u32,
        #[command(flatten)]
        common: BenchCommon,
    },
    /// Inputs grow by one scale per node doubling.
    Weak {
        #[arg(long)]
        base_scale: u32,
        #[command(flatten)]
        common: BenchCommon,
    },
    /// Row extraction from a generated graph.
    Extract {
        #[arg(long, value_enum, default_value_t = ModeArg::Strong)]
        mode: ModeArg,
        #[arg(long)]
        scale: u32,
        #[arg(long, value_delimiter = ',', default_values_t = [64u64, 1024])]
        sample_sizes: Vec<u64>,
        #[command(flatten)]
        common: BenchCommon,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CombinerArg {
    Sum,
    Min,
    Max,
    None,
}

impl CombinerArg {
    fn combiner(self) -> Option<Combiner> {
        match self {
            CombinerArg::Sum => Some(Combiner::sum()),
            CombinerArg::Min => Some(Combiner::min()),
            CombinerArg::Max => Some(Combiner::max()),
            CombinerArg::None => None,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SemiringArg {
    PlusTimes,
    MinPlus,
    MaxMin,
}

impl SemiringArg {
    fn semiring(self) -> Semiring {
        match self {
            SemiringArg::PlusTimes => Semiring::plus_times(),
            SemiringArg::MinPlus => Semiring::min_plus(),
            SemiringArg::MaxMin => Semiring::max_min(),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Strong,
    Weak,
}

/// Errors that exit 1 rather than 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                eprintln!("\nFor more information, try '--help'.");
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.workers == 0 {
        return Err(usage("--workers must be positive"));
    }
    let root = cli.data_dir.as_path();
    match cli.command {
        Command::Generate { scale, epv, table, shards } => {
            check_name(&table, "--table")?;
            let spec = GraphSpec::new(scale, cli.seed).edges_per_vertex(epv);
            spec.validate().map_err(|e| usage(e.to_string()))?;
            if shards == 0 {
                return Err(usage("--shards must be positive"));
            }
            if format::table_exists_on_disk(root, &table) {
                bail!("table `{table}` already exists");
            }
            let store = Store::new();
            store.create_table(&table, vec![], Some(Combiner::sum()))?;
            let edges = generate_graph(&store, &spec, &table, shards)?;
            store.compact(&table)?;
            persist(&store, root, &table)?;
            eprintln!("generated {edges} edges into `{table}` (scale {scale}, epv {epv})");
        }
        Command::Ingest { table, combiner, splits } => {
            check_name(&table, "--table")?;
            let store = Store::new();
            let existed = format::table_exists_on_disk(root, &table);
            if existed {
                if splits.is_some() {
                    return Err(usage("--splits only applies when creating a table"));
                }
                format::load_table(&store, root, &table)?;
            } else {
                let splits = match splits {
                    Some(path) => format::parse_splits(&read_input(&path)?)?,
                    None => Vec::new(),
                };
                store.create_table(&table, splits, combiner.combiner())?;
            }
            let t = store.table(&table)?;
            let stdin = io::stdin();
            let mut count = 0u64;
            let mut batch = Vec::with_capacity(4096);
            for entry in DumpReader::new(stdin.lock()) {
                batch.push(entry?);
                if batch.len() == batch.capacity() {
                    count += t.write(batch.drain(..))?;
                }
            }
            count += t.write(batch)?;
            t.compact()?;
            persist(&store, root, &table)?;
            eprintln!("ingested {count} entries into `{table}`");
        }
        Command::Dump { table, start, end } => {
            let store = Store::new();
            let t = format::load_table(&store, root, &table)?;
            let range = RowRange::new(start.as_deref().map(str::as_bytes), end.as_deref().map(str::as_bytes));
            let stdout = io::stdout();
            let mut out = io::BufWriter::new(stdout.lock());
            format::write_dump(&mut out, t.scan(&range))?;
            out.flush()?;
        }
        Command::Splits { action } => match action {
            SplitsAction::Compute { table, tablets } => {
                if tablets == 0 {
                    return Err(usage("--tablets must be positive"));
                }
                let store = Store::new();
                let t = format::load_table(&store, root, &table)?;
                let splits = t.compute_optimal_splits(tablets)?;
                io::stdout().write_all(&format::format_splits(&splits))?;
            }
            SplitsAction::Apply { table, file } => {
                let splits = format::parse_splits(&read_input(&file)?)?;
                let store = Store::new();
                let t = format::load_table(&store, root, &table)?;
                t.apply_splits(splits)?;
                t.compact()?;
                format::save_table(&t, root)?;
                eprintln!("`{table}` now has {} tablets", t.tablet_count());
            }
        },
        Command::Compact { table } => {
            let store = Store::new();
            let t = format::load_table(&store, root, &table)?;
            t.compact()?;
            format::save_table(&t, root)?;
        }
        Command::Tablemult { a_transpose, b, c, semiring, out } => {
            check_name(&c, "--c")?;
            let spec = MultSpec::new(&a_transpose, &b, &c)
                .workers(cli.workers)
                .semiring(semiring.semiring());
            spec.validate().map_err(|e| usage(e.to_string()))?;
            if format::table_exists_on_disk(root, &c) {
                bail!("output table `{c}` already exists");
            }
            let store = Store::new();
            format::load_table(&store, root, &a_transpose)?;
            format::load_table(&store, root, &b)?;
            prepare_output(&store, &c, &b, &spec.semiring)?;
            let run = table_mult(&store, &spec)?;
            store.compact(&c)?;
            persist(&store, root, &c)?;
            report_run("tablemult", &run, None, out.as_deref())?;
        }
        Command::Extract { graph, output, sample_size, scale, out } => {
            check_name(&output, "--output")?;
            if graph == output {
                return Err(usage("--output must differ from --graph"));
            }
            let sample = SampleSet::random(scale, sample_size, cli.seed).map_err(|e| usage(e.to_string()))?;
            if format::table_exists_on_disk(root, &output) {
                bail!("output table `{output}` already exists");
            }
            let store = Store::new();
            format::load_table(&store, root, &graph)?;
            let e_name = scratch_name(&store, "extract");
            store.create_table(&e_name, vec![], Some(Combiner::sum()))?;
            build_extraction_table(&store, &sample, &e_name)?;
            store.compact(&e_name)?;
            prepare_output(&store, &output, &graph, &Semiring::plus_times())?;
            let run = extract_rows(&store, &e_name, &graph, &output, cli.workers)?;
            store.compact(&output)?;
            persist(&store, root, &output)?;
            report_run("extract", &run, Some(sample.len() as u64), out.as_deref())?;
        }
        Command::Bench { kind } => run_bench(kind, cli.seed)?,
        Command::Info { table } => {
            let names = match table {
                Some(t) => vec![t],
                None => stored_tables(root)?,
            };
            let stdout = io::stdout();
            let mut out = stdout.lock();
            for name in names {
                let store = Store::new();
                let t = format::load_table(&store, root, &name)?;
                let counts = t.tablet_entry_counts()?;
                let splits: Vec<String> =
                    t.splits().iter().map(|s| String::from_utf8_lossy(s).into_owned()).collect();
                writeln!(
                    out,
                    "{name}\tentries={}\ttablets={}\tcombiner={}\tsplits=[{}]\tper_tablet={:?}",
                    counts.iter().sum::<u64>(),
                    t.tablet_count(),
                    t.combiner().map_or("none", |c| c.name()),
                    splits.join(","),
                    counts,
                )?;
            }
        }
    }
    Ok(())
}

fn check_name(name: &str, flag: &str) -> anyhow::Result<()> {
    if is_valid_table_name(name) {
        Ok(())
    } else {
        Err(usage(format!("invalid table name `{name}` for {flag}")))
    }
}

fn scratch_name(store: &Store, base: &str) -> String {
    (0..)
        .map(|i| format!("_{base}{i}"))
        .find(|n| !store.contains(n))
        .expect("unbounded")
}

/// Saves a freshly built table; a failed save leaves nothing behind.
fn persist(store: &Store, root: &Path, name: &str) -> anyhow::Result<()> {
    fs::create_dir_all(root).with_context(|| format!("creating data dir {}", root.display()))?;
    let table = store.table(name)?;
    if let Err(e) = format::save_table(&table, root) {
        let _ = format::remove_table_dir(root, name);
        return Err(e).with_context(|| format!("saving `{name}`"));
    }
    Ok(())
}

fn read_input(path: &Path) -> anyhow::Result<Vec<u8>> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        io::stdin().lock().read_to_end(&mut buf)?;
        Ok(buf)
    } else {
        fs::read(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn stored_tables(root: &Path) -> anyhow::Result<Vec<String>> {
    let mut names = Vec::new();
    let entries = match fs::read_dir(root) {
        Ok(entries) => entries,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(names),
        Err(e) => return Err(e.into()),
    };
    for entry in entries {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if is_valid_table_name(&name) && format::table_exists_on_disk(root, &name) {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

fn report_run(experiment: &str, run: &MultRun, rows: Option<u64>, out: Option<&Path>) -> anyhow::Result<()> {
    let m = &run.metrics;
    eprintln!(
        "{experiment}: {} partial products in {:.3} s ({:.0} pp/s), {} rows aligned",
        m.partial_products, m.elapsed_seconds, m.rate, run.stats.rows_aligned
    );
    if let Some(path) = out {
        let row = ReportRow::new(experiment, "single", m.nodes, &m.scale_label, rows, m.partial_products, m.elapsed_seconds, m.rate, 1.0);
        write_csv(Some(path), &[row])?;
    }
    Ok(())
}

fn write_csv(out: Option<&Path>, rows: &[ReportRow]) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_report(io::BufWriter::new(file), rows)?;
        }
        None => write_report(io::stdout().lock(), rows)?,
    }
    Ok(())
}

fn run_bench(kind: BenchKind, seed: u64) -> anyhow::Result<()> {
    let config = |common: &BenchCommon| BenchConfig {
        seed,
        repetitions: common.repetitions,
        edges_per_vertex: common.epv,
        ..BenchConfig::default()
    };
    let invalid = |e: tabulo::Error| match e {
        tabulo::Error::InvalidArgument(m) => usage(m),
        e => anyhow!(e),
    };
    let (report, out) = match kind {
        BenchKind::Strong { scale, common } => {
            (bench::run_strong_scaling(scale, &common.nodes, &config(&common)).map_err(invalid)?, common.out)
        }
        BenchKind::Weak { base_scale, common } => {
            (bench::run_weak_scaling(base_scale, &common.nodes, &config(&common)).map_err(invalid)?, common.out)
        }
        BenchKind::Extract { mode, scale, sample_sizes, common } => {
            let mode = match mode {
                ModeArg::Strong => Mode::Strong,
                ModeArg::Weak => Mode::Weak,
            };
            let report = bench::run_extraction_scaling(mode, scale, &sample_sizes, &common.nodes, &config(&common))
                .map_err(invalid)?;
            (report, common.out)
        }
    };
    summarize(&report);
    write_csv(out.as_deref(), &report.to_rows())
}

fn summarize(report: &ScalingReport) {
    eprintln!("{} {} scaling, median of {} runs", report.experiment, report.mode, report.repetitions);
    for row in &report.rows {
        let m = &row.metrics;
        let sample = row.sample_size.map(|s| format!(" sample={s}")).unwrap_or_default();
        eprintln!(
            "  nodes={:<3} scale={}{sample}  pp={}  {:.3} s  {:.0} pp/s  speedup {:.2}",
            m.nodes, m.scale_label, m.partial_products, m.elapsed_seconds, m.rate, row.speedup
        );
    }
    if !report.oversubscribed.is_empty() {
        eprintln!(
            "  note: node counts {:?} use more workers than the {} available cores",
            report.oversubscribed,
            bench::available_cores()
        );
    }
}
