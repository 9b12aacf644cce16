//! Benchmarks for the pipeline, Obata curvature and the homotopy operator; see `benches/`.
