//! Criterion benchmarks for the search engine and aggregation paths; see
//! the `benches/` directory.
