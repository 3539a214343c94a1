mod common;

use std::collections::BTreeSet;

use rand::Rng;

use common::*;
use tabulo::graphgen::{generate_graph, vertex_label, GraphSpec};
use tabulo::iterators::{remote_source, remote_write, PartialProduct, TwoTableJoin};
use tabulo::tablemult::{count_partial_products, prepare_output, table_mult};
use tabulo::{Bytes, Combiner, Error, MultSpec, RowRange, Semiring, Store};

#[test]
fn plus_times_matches_dense_reference() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let dim = r.gen_range(1..=64u32);
        let at = random_sparse(&mut r, dim, dim, 50);
        let b = random_sparse(&mut r, dim, dim, 50);
        let store = Store::new();
        load(&store, "AT", &at, Combiner::sum());
        load(&store, "B", &b, Combiner::sum());
        store.apply_splits("B", random_splits(&mut r, dim)).unwrap();
        let (c, pp) = multiply(&store, Semiring::plus_times(), r.gen_range(1..5));
        assert_eq!(c, dense_plus_times(&at, &b, dim as usize), "seed {seed}");
        assert_eq!(pp, pp_oracle(&at, &b), "seed {seed}");
    }
}

#[test]
fn min_plus_matches_brute_force() {
    for seed in 100..120 {
        let mut r = rng(seed);
        let dim = r.gen_range(1..=24u32);
        let at = random_sparse(&mut r, dim, dim, 1000);
        let b = random_sparse(&mut r, dim, dim, 1000);
        let store = Store::new();
        load(&store, "AT", &at, Combiner::min());
        load(&store, "B", &b, Combiner::min());
        let (c, pp) = multiply(&store, Semiring::min_plus(), 3);
        assert_eq!(c, brute_min_plus(&at, &b), "seed {seed}");
        assert_eq!(pp, pp_oracle(&at, &b));
    }
}

#[test]
fn output_must_carry_matching_combiner() {
    let store = Store::new();
    load(&store, "AT", &[(1, 1, 1)], Combiner::sum());
    load(&store, "B", &[(1, 1, 1)], Combiner::sum());
    store.create_table("C", vec![], None).unwrap();
    let spec = MultSpec::new("AT", "B", "C");
    assert!(matches!(table_mult(&store, &spec), Err(Error::MissingCombiner(_))));
    store.drop_table("C").unwrap();
    prepare_output(&store, "C", "B", &Semiring::plus_times()).unwrap();
    assert!(matches!(
        table_mult(&store, &spec.clone().semiring(Semiring::min_plus())),
        Err(Error::CombinerMismatch { .. })
    ));
    table_mult(&store, &spec).unwrap();
    assert!(matches!(table_mult(&store, &spec), Err(Error::OutputNotEmpty(_))));
    assert!(matches!(
        table_mult(&store, &MultSpec::new("AT", "B", "B")),
        Err(Error::AliasedOutput(_))
    ));
    assert!(matches!(
        table_mult(&store, &MultSpec::new("AT", "nope", "D")),
        Err(Error::UnknownTable(_))
    ));
}

#[test]
fn multiply_overflow_is_an_error() {
    let store = Store::new();
    load(&store, "AT", &[(1, 1, u64::MAX)], Combiner::sum());
    load(&store, "B", &[(1, 1, 2)], Combiner::sum());
    prepare_output(&store, "C", "B", &Semiring::plus_times()).unwrap();
    let err = table_mult(&store, &MultSpec::new("AT", "B", "C")).unwrap_err();
    assert!(matches!(err, Error::MultiplyOverflow), "{err}");
}

#[test]
fn identity_left_factor_copies_b() {
    let mut r = rng(7);
    let b = random_sparse(&mut r, 40, 40, 9);
    let store = Store::new();
    load(&store, "AT", &(0..40).map(|i| (i, i, 1)).collect::<Vec<_>>(), Combiner::sum());
    load(&store, "B", &b, Combiner::sum());
    let (c, _) = multiply(&store, Semiring::plus_times(), 2);
    assert_eq!(c, scan_cells(&store, "B"));
}

#[test]
fn single_aligned_pair() {
    let store = Store::new();
    load(&store, "AT", &[(2, 1, 3)], Combiner::sum());
    load(&store, "B", &[(2, 4, 5)], Combiner::sum());
    let (c, pp) = multiply(&store, Semiring::plus_times(), 1);
    assert_eq!(c, vec![(b"1".to_vec(), b"4".to_vec(), 15)]);
    assert_eq!(pp, 1);
}

#[test]
fn counting_matches_join_stats_on_generated_graphs() {
    let store = Store::new();
    for (name, seed) in [("AT", 1), ("B", 2)] {
        store.create_table(name, vec![], Some(Combiner::sum())).unwrap();
        generate_graph(&store, &GraphSpec::new(8, seed), name, 2).unwrap();
        store.compact(name).unwrap();
    }
    store.apply_splits("B", store.compute_optimal_splits("B", 4).unwrap()).unwrap();
    let counted = count_partial_products(&store.table("AT").unwrap(), &store.table("B").unwrap()).unwrap();
    let (_, pp) = multiply(&store, Semiring::plus_times(), 4);
    assert_eq!(counted, pp);
    assert!(pp > 0);

    // disjoint rows
    let s = Store::new();
    load(&s, "AT", &[(1, 1, 1), (3, 2, 1)], Combiner::sum());
    load(&s, "B", &[(2, 1, 1), (4, 2, 1)], Combiner::sum());
    assert_eq!(count_partial_products(&s.table("AT").unwrap(), &s.table("B").unwrap()).unwrap(), 0);

    // one shared row of 16 x 16
    let s = Store::new();
    load(&s, "AT", &(0..16).map(|i| (5, i, 1)).collect::<Vec<_>>(), Combiner::sum());
    load(&s, "B", &(0..16).map(|j| (5, j, 1)).collect::<Vec<_>>(), Combiner::sum());
    assert_eq!(count_partial_products(&s.table("AT").unwrap(), &s.table("B").unwrap()).unwrap(), 256);
}

#[test]
fn remote_write_matches_hash_aggregate() {
    let mut r = rng(42);
    let store = Store::new();
    let target = store.create_table("T", vec![Bytes::from("5")], Some(Combiner::sum())).unwrap();
    let products: Vec<PartialProduct> = (0..10_000)
        .map(|_| PartialProduct {
            row: Bytes::from_slice(&label(r.gen_range(0..50))),
            col: Bytes::from_slice(&label(r.gen_range(0..50))),
            value: r.gen_range(1..1000),
        })
        .collect();
    let cells: Vec<Cell> = products.iter().map(|p| (p.row.to_vec(), p.col.to_vec(), p.value)).collect();
    let written = remote_write(products.into_iter().map(Ok), &target).unwrap();
    assert_eq!(written, 10_000);
    assert_eq!(scan_cells(&store, "T"), hash_aggregate(&cells));
    assert_eq!(remote_write(std::iter::empty(), &target).unwrap(), 0);
}

#[test]
fn join_buffers_one_row_and_respects_cap() {
    let store = Store::new();
    load(&store, "AT", &(0..10).map(|i| (1, i, 1)).collect::<Vec<_>>(), Combiner::sum());
    load(&store, "B", &[(1, 0, 1), (1, 1, 1)], Combiner::sum());
    let all = RowRange::all();
    let join = TwoTableJoin::new(
        remote_source(&store, "AT", &all).unwrap(),
        remote_source(&store, "B", &all).unwrap(),
        u64::checked_mul,
    )
    .with_row_cap(9);
    let err = join.collect::<Result<Vec<_>, _>>().unwrap_err();
    assert!(matches!(err, Error::RowBufferOverflow { cap: 9 }));

    let mut join = TwoTableJoin::new(
        remote_source(&store, "AT", &all).unwrap(),
        remote_source(&store, "B", &all).unwrap(),
        u64::checked_mul,
    )
    .with_row_cap(10);
    assert_eq!(join.by_ref().count(), 20);
    let stats = join.stats();
    assert_eq!(stats.partial_products, 20);
    assert_eq!(stats.rows_aligned, 1);
}

#[test]
fn worker_counts_agree() {
    let store = Store::new();
    for (name, seed) in [("AT", 3), ("B", 4)] {
        store.create_table(name, vec![], Some(Combiner::sum())).unwrap();
        generate_graph(&store, &GraphSpec::new(9, seed), name, 1).unwrap();
    }
    store.apply_splits("B", store.compute_optimal_splits("B", 8).unwrap()).unwrap();
    let mut reference = None;
    for workers in [1, 3, 8] {
        let (c, pp) = multiply(&store, Semiring::plus_times(), workers);
        store.drop_table("C").unwrap();
        match &reference {
            None => reference = Some((c, pp)),
            Some(r) => assert_eq!(r, &(c, pp), "workers={workers}"),
        }
    }
}

#[test]
fn extraction_matches_row_filter() {
    use tabulo::extraction::{build_extraction_table, extract_rows, SampleSet};
    let scale = 10;
    let store = Store::new();
    store.create_table("G", vec![], Some(Combiner::sum())).unwrap();
    generate_graph(&store, &GraphSpec::new(scale, 11), "G", 1).unwrap();
    store.apply_splits("G", store.compute_optimal_splits("G", 4).unwrap()).unwrap();
    let graph = scan_cells(&store, "G");
    for (size, seed) in [(0, 1), (1, 2), (64, 3), (1024, 4)] {
        let sample = SampleSet::random(scale, size, seed).unwrap();
        store.create_table("E", vec![], Some(Combiner::sum())).unwrap();
        build_extraction_table(&store, &sample, "E").unwrap();
        prepare_output(&store, "O", "G", &Semiring::plus_times()).unwrap();
        let run = extract_rows(&store, "E", "G", "O", 4).unwrap();
        store.compact("O").unwrap();
        let rows: BTreeSet<Vec<u8>> = sample.vertices.iter().map(|&v| vertex_label(v, scale).to_vec()).collect();
        let expected = row_filter(&graph, &rows);
        assert_eq!(scan_cells(&store, "O"), expected, "size {size}");
        // E values are 1, so each graph entry is one partial product
        assert_eq!(run.stats.partial_products, expected.len() as u64);
        store.drop_table("E").unwrap();
        store.drop_table("O").unwrap();
    }
}

#[test]
fn extraction_table_is_binary_diagonal() {
    use tabulo::extraction::{build_extraction_table, SampleSet};
    let store = Store::new();
    store.create_table("E", vec![], Some(Combiner::sum())).unwrap();
    let sample = SampleSet::from_vertices(6, [3, 9, 40]).unwrap();
    assert_eq!(build_extraction_table(&store, &sample, "E").unwrap(), 3);
    assert_eq!(
        scan_cells(&store, "E"),
        vec![
            (b"03".to_vec(), b"03".to_vec(), 1),
            (b"09".to_vec(), b"09".to_vec(), 1),
            (b"40".to_vec(), b"40".to_vec(), 1)
        ]
    );
    assert!(matches!(build_extraction_table(&store, &sample, "E"), Err(Error::OutputNotEmpty(_))));
    assert!(SampleSet::from_vertices(6, [64]).is_err());
}
