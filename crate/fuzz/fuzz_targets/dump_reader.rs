#![no_main]

use libfuzzer_sys::fuzz_target;
use tabulo::format::{write_dump, DumpReader};
use tabulo::{Combiner, Store};

fuzz_target!(|data: &[u8]| {
    let entries: Result<Vec<_>, _> = DumpReader::new(data).collect();
    let Ok(entries) = entries else { return };
    let store = Store::new();
    let table = store.create_table("T", vec![], Some(Combiner::max())).unwrap();
    table.write(entries).unwrap();
    let mut first = Vec::new();
    write_dump(&mut first, table.scan_all()).unwrap();
    let reread: Vec<_> = DumpReader::new(&first[..]).collect::<Result<_, _>>().unwrap();
    let mut second = Vec::new();
    write_dump(&mut second, reread.into_iter().map(Ok)).unwrap();
    assert_eq!(first, second);
});
