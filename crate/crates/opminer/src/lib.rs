//! File formats, simulation bundles, experiment grids and rank statistics
//! around `opminer-core`. The `opminer` binary exposes them as subcommands.

pub mod budget;
pub mod bundle;
pub mod formats;
pub mod grid;
pub mod stats;
