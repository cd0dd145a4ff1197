//! Hardware-aware neural architecture search toolkit.
//!
//! The crate covers the full loop of predictor-based NAS experiments on
//! tabular benchmarks:
//!
//! * [`space`] — NAS-Bench-201/101 cell parsing, graph optimization and the
//!   adjacency/feature encoding consumed by the GCN.
//! * [`bench`] — benchmark tables (accuracy / latency / FLOPS ground truth),
//!   including a deterministic synthetic generator for desk-scale runs.
//! * [`gcn`] — a from-scratch GCN with hand-derived gradients, AdamW,
//!   learning-rate schedules, early stopping and weight transfer.
//! * [`predictors`] — unary latency/accuracy predictors, the binary relation
//!   predictor, and layer-wise / FLOPS baselines.
//! * [`search`] — binary-relation predictor search with iterative data
//!   selection, aging evolution and random search.
//! * [`analysis`] — error-bound reports, Spearman correlation, Pareto fronts,
//!   oracle-search error accounting and relation diagnostics.
//! * [`measurement`] — quartile-trimmed latency aggregation and a timing
//!   harness.
//! * [`cli`] — the `hwnas` command-line surface.

pub mod analysis;
pub mod bench;
pub mod cli;
pub mod gcn;
pub mod measurement;
pub mod predictors;
pub mod search;
pub mod space;
pub mod util;
