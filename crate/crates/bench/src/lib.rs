//! Criterion benchmarks for the interflow kernels live under benches/.
