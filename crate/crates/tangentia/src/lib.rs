//! File formats, CSV/SVG reports, parallel drivers and the `tangentia`
//! command line on top of [`tangentia_core`].

pub mod cli;
pub mod io;
pub mod par;
pub mod plot;
pub mod report;

pub use tangentia_core as core;
