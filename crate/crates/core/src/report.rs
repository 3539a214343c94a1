//! Benchmark report CSV.
//!
//! Header: `experiment,mode,nodes,scale_label,rows,partial_products,seconds,rate_pp_per_sec,speedup`.
//! Floats carry 6 significant digits; `rows` is empty for multiply runs.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const HEADER: [&str; 9] = [
    "experiment",
    "mode",
    "nodes",
    "scale_label",
    "rows",
    "partial_products",
    "seconds",
    "rate_pp_per_sec",
    "speedup",
];

const SIG_DIGITS: usize = 6;

/// `%g`-style rendering with 6 significant digits.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Rounds to what the CSV can represent.
pub fn round_sig(x: f64) -> f64 {
    format_sig(x).parse().unwrap_or(x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub mode: String,
    pub nodes: usize,
    pub scale_label: String,
    pub rows: Option<u64>,
    pub partial_products: u64,
    pub seconds: f64,
    pub rate: f64,
    pub speedup: f64,
}

impl ReportRow {
    /// Builds a row with its floats already rounded to CSV precision.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        experiment: &str,
        mode: &str,
        nodes: usize,
        scale_label: &str,
        rows: Option<u64>,
        partial_products: u64,
        seconds: f64,
        rate: f64,
        speedup: f64,
    ) -> Self {
        ReportRow {
            experiment: experiment.to_string(),
            mode: mode.to_string(),
            nodes,
            scale_label: scale_label.to_string(),
            rows,
            partial_products,
            seconds: round_sig(seconds),
            rate: round_sig(rate),
            speedup: round_sig(speedup),
        }
    }
}

pub fn write_report<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            r.mode.clone(),
            r.nodes.to_string(),
            r.scale_label.clone(),
            r.rows.map(|n| n.to_string()).unwrap_or_default(),
            r.partial_products.to_string(),
            format_sig(r.seconds),
            format_sig(r.rate),
            format_sig(r.speedup),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn report_to_string(rows: &[ReportRow]) -> String {
    let mut buf = Vec::new();
    write_report(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn parse_report<R: Read>(input: R) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| Error::parse(1, "missing header"))??;
    if header.iter().ne(HEADER) {
        return Err(Error::parse(1, "unexpected header"));
    }
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != HEADER.len() {
            return Err(Error::parse(line, format!("expected {} fields", HEADER.len())));
        }
        let int = |idx: usize| -> Result<u64> {
            rec[idx]
                .parse()
                .map_err(|_| Error::parse(line, format!("bad integer in `{}`", HEADER[idx])))
        };
        let float = |idx: usize| -> Result<f64> {
            rec[idx]
                .parse()
                .map_err(|_| Error::parse(line, format!("bad number in `{}`", HEADER[idx])))
        };
        rows.push(ReportRow {
            experiment: rec[0].to_string(),
            mode: rec[1].to_string(),
            nodes: int(2)? as usize,
            scale_label: rec[3].to_string(),
            rows: if rec[4].is_empty() { None } else { Some(int(4)?) },
            partial_products: int(5)?,
            seconds: float(6)?,
            rate: float(7)?,
            speedup: float(8)?,
        });
    }
    Ok(rows)
}
