//! Placeholder library so the benchmark crate builds; benches live under `benches/`.
