#![no_main]

use libfuzzer_sys::fuzz_target;
use tabulo::graphgen::{parse_vertex_label, vertex_label};

fuzz_target!(|data: &[u8]| {
    let Some((&scale, label)) = data.split_first() else { return };
    let scale = u32::from(scale % 48);
    if let Ok(id) = parse_vertex_label(label, scale) {
        assert!(id >> scale == 0);
        assert_eq!(vertex_label(id, scale).as_slice(), label);
    }
});
