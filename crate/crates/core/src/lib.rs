//! Coverage hole detection for wireless sensor networks from connectivity
//! alone.
//!
//! The pipeline estimates node positions from the topology with a
//! force-directed engine ([`layout`]), rasterizes sensing disks
//! ([`raster`]), extracts enclosed uncovered regions ([`detect`]), resolves
//! the nodes bordering each region ([`boundary`]) and scores the result at
//! node level ([`metrics`]). [`pipeline`] wires the stages into single runs
//! and experiment grids.

pub mod boundary;
pub mod detect;
pub mod error;
pub mod geom;
pub mod layout;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod topology;

pub use error::{Error, Result};
pub use geom::Point;
pub use topology::{NodeId, Topology};
