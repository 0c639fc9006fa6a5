//! Helicity decomposition of vortex filaments with file formats, a periodic
//! Gross-Pitaevskii solver and the `helicity` command-line tool.
//!
//! The numerical core (geometry, linking, writhe, twist, Seifert framing,
//! coarse-graining) lives in [`helicity_core`], re-exported as [`core`].

pub use helicity_core as core;

pub mod gpe;
pub mod cli;
pub mod io;
