//! Text dump format and on-disk table directories.
//!
//! One entry per line: `row<TAB>family<TAB>qualifier<TAB>value`. Tabs,
//! newlines and backslashes inside fields are written as `\t`, `\n` and
//! `\\`. Bytes that are not valid UTF-8 are written as `\xHH` so any key
//! survives a round trip.
//!
//! A table directory holds one dump file per tablet (`tablet-NNNNN.tsv`), a
//! `splits` file with one escaped split point per line, and an optional
//! `combiner` file naming the table's combiner.

use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::combiner::Combiner;
use crate::error::{Error, Result};
use crate::key::{Bytes, Entry, Key};
use crate::store::Store;
use crate::table::{validate_splits, Table};

pub fn escape_field(field: &[u8], out: &mut Vec<u8>) {
    for chunk in field.utf8_chunks() {
        for b in chunk.valid().bytes() {
            match b {
                b'\t' => out.extend_from_slice(b"\\t"),
                b'\n' => out.extend_from_slice(b"\\n"),
                b'\\' => out.extend_from_slice(b"\\\\"),
                _ => out.push(b),
            }
        }
        for b in chunk.invalid() {
            out.extend_from_slice(format!("\\x{b:02x}").as_bytes());
        }
    }
}

pub fn unescape_field(field: &[u8]) -> std::result::Result<Bytes, String> {
    let mut out = Bytes::new();
    let mut it = field.iter().copied();
    while let Some(b) = it.next() {
        match b {
            b'\\' => match it.next() {
                Some(b't') => out.push(b'\t'),
                Some(b'n') => out.push(b'\n'),
                Some(b'\\') => out.push(b'\\'),
                Some(b'x') => {
                    let hi = it.next().and_then(hex_digit);
                    let lo = it.next().and_then(hex_digit);
                    match (hi, lo) {
                        (Some(h), Some(l)) => out.push(h << 4 | l),
                        _ => return Err("malformed \\x escape".into()),
                    }
                }
                Some(c) => return Err(format!("unknown escape `\\{}`", c as char)),
                None => return Err("dangling backslash".into()),
            },
            b'\t' | b'\n' => return Err("unescaped separator inside field".into()),
            _ => out.push(b),
        }
    }
    Ok(out)
}

fn hex_digit(b: u8) -> Option<u8> {
    (b as char).to_digit(16).map(|d| d as u8)
}

/// Appends one dump line, newline included.
pub fn format_entry(entry: &Entry, out: &mut Vec<u8>) {
    escape_field(&entry.key.row, out);
    out.push(b'\t');
    escape_field(&entry.key.family, out);
    out.push(b'\t');
    escape_field(&entry.key.qualifier, out);
    out.push(b'\t');
    out.extend_from_slice(entry.value.to_string().as_bytes());
    out.push(b'\n');
}

/// Parses one dump line without its trailing newline.
pub fn parse_entry(line: &[u8]) -> std::result::Result<Entry, String> {
    std::str::from_utf8(line).map_err(|_| "line is not valid UTF-8".to_string())?;
    let fields: Vec<&[u8]> = line.split(|&b| b == b'\t').collect();
    let [row, family, qualifier, value] = fields[..] else {
        return Err(format!("expected 4 tab-separated fields, found {}", fields.len()));
    };
    let row = unescape_field(row)?;
    if row.is_empty() {
        return Err("empty row".into());
    }
    let value = std::str::from_utf8(value)
        .ok()
        .filter(|v| !v.is_empty() && v.bytes().all(|b| b.is_ascii_digit()))
        .and_then(|v| v.parse::<u64>().ok())
        .ok_or_else(|| "value is not an unsigned 64-bit integer".to_string())?;
    if value == 0 {
        return Err("zero value".into());
    }
    Ok(Entry::new(
        Key {
            row,
            family: unescape_field(family)?,
            qualifier: unescape_field(qualifier)?,
            ..Key::default()
        },
        value,
    ))
}

/// Streams entries out of a dump. Line numbers in errors are 1-based.
pub struct DumpReader<R> {
    reader: R,
    line: usize,
    buf: Vec<u8>,
}

impl<R: BufRead> DumpReader<R> {
    pub fn new(reader: R) -> Self {
        DumpReader {
            reader,
            line: 0,
            buf: Vec::new(),
        }
    }
}

impl<R: BufRead> Iterator for DumpReader<R> {
    type Item = Result<Entry>;

    fn next(&mut self) -> Option<Result<Entry>> {
        self.buf.clear();
        match self.reader.read_until(b'\n', &mut self.buf) {
            Ok(0) => return None,
            Ok(_) => {}
            Err(e) => return Some(Err(e.into())),
        }
        self.line += 1;
        if self.buf.last() == Some(&b'\n') {
            self.buf.pop();
        }
        Some(parse_entry(&self.buf).map_err(|m| Error::parse(self.line, m)))
    }
}

/// Writes a dump of `entries`; returns the number of lines written.
pub fn write_dump<W: Write, I: IntoIterator<Item = Result<Entry>>>(
    out: W,
    entries: I,
) -> Result<u64> {
    let mut out = BufWriter::new(out);
    let mut line = Vec::with_capacity(64);
    let mut n = 0;
    for e in entries {
        line.clear();
        format_entry(&e?, &mut line);
        out.write_all(&line)?;
        n += 1;
    }
    out.flush()?;
    Ok(n)
}

pub fn format_splits(splits: &[Bytes]) -> Vec<u8> {
    let mut out = Vec::new();
    for s in splits {
        escape_field(s, &mut out);
        out.push(b'\n');
    }
    out
}

/// Parses a splits file: one escaped split point per line, strictly
/// ascending. A trailing newline is optional.
pub fn parse_splits(text: &[u8]) -> Result<Vec<Bytes>> {
    std::str::from_utf8(text).map_err(|_| Error::parse(0, "splits file is not valid UTF-8"))?;
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let body = text.strip_suffix(b"\n").unwrap_or(text);
    let splits = body
        .split(|&b| b == b'\n')
        .enumerate()
        .map(|(i, l)| unescape_field(l).map_err(|m| Error::parse(i + 1, m)))
        .collect::<Result<Vec<_>>>()?;
    validate_splits(&splits)?;
    Ok(splits)
}

fn tablet_file(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("tablet-{i:05}.tsv"))
}

/// Writes the combined contents of `table` to `root/<name>`, replacing any
/// previous copy.
pub fn save_table(table: &Table, root: &Path) -> Result<()> {
    let final_dir = root.join(table.name());
    let tmp = root.join(format!(".{}.tmp-{}", table.name(), std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir_all(&tmp)?;
    let splits = table.splits();
    fs::write(tmp.join("splits"), format_splits(&splits))?;
    if let Some(c) = table.combiner() {
        fs::write(tmp.join("combiner"), format!("{}\n", c.name()))?;
    }
    for (i, range) in table.tablet_ranges().iter().enumerate() {
        let file = fs::File::create(tablet_file(&tmp, i))?;
        write_dump(file, table.scan(range))?;
    }
    if final_dir.exists() {
        fs::remove_dir_all(&final_dir)?;
    }
    fs::rename(&tmp, &final_dir)?;
    Ok(())
}

pub fn table_exists_on_disk(root: &Path, name: &str) -> bool {
    root.join(name).join("splits").is_file()
}

/// Loads `root/<name>` into `store`. Each tablet file must be sorted and
/// hold only rows inside its tablet's range.
pub fn load_table(store: &Store, root: &Path, name: &str) -> Result<Arc<Table>> {
    let dir = root.join(name);
    if !dir.join("splits").is_file() {
        return Err(Error::UnknownTable(name.to_string()));
    }
    let splits = parse_splits(&fs::read(dir.join("splits"))?)?;
    let combiner = match fs::read_to_string(dir.join("combiner")) {
        Ok(s) => {
            let s = s.trim();
            Some(Combiner::by_name(s).ok_or_else(|| Error::parse(1, format!("unknown combiner `{s}`")))?)
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(e.into()),
    };
    let table = store.create_table(name, splits, combiner)?;
    let result = (|| {
        for (i, range) in table.tablet_ranges().iter().enumerate() {
            let file = fs::File::open(tablet_file(&dir, i))?;
            let mut prev: Option<Key> = None;
            let mut entries = Vec::new();
            for (line, e) in DumpReader::new(std::io::BufReader::new(file)).enumerate() {
                let e = e?;
                if !range.contains(&e.key.row) {
                    return Err(Error::parse(line + 1, format!("row outside tablet {i}")));
                }
                if prev.as_ref().is_some_and(|p| *p >= e.key) {
                    return Err(Error::parse(line + 1, "tablet file is not strictly sorted"));
                }
                prev = Some(e.key.clone());
                entries.push(e);
            }
            table.write(entries)?;
        }
        table.compact()
    })();
    if let Err(e) = result {
        let _ = store.drop_table(name);
        return Err(e);
    }
    Ok(table)
}

pub fn remove_table_dir(root: &Path, name: &str) -> Result<()> {
    let dir = root.join(name);
    if dir.exists() {
        fs::remove_dir_all(dir)?;
    }
    Ok(())
}
