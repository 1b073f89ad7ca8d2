//! Monte Carlo experiment engine and file formats on top of
//! `torus-waves-core`: reproducible seeded trial runs, moment aggregation,
//! universality comparisons, schema-versioned run manifests, and CSV export.
//! The `torus-waves` binary in this crate multiplexes the CLI subcommands.

pub mod cli;
pub mod harness;
pub mod manifest;
