//! Topological decomposition of helicity for closed vortex filaments.
//!
//! The crate is `no_std` (with `alloc`). It covers:
//!
//! * [`geometry`]: discrete closed curves, arclength resampling, Frenet frames
//!   and generators for torus knots, rings and vortex bundles;
//! * [`topology`]: Gauss linking number, writhe, ribbon twist, self-linking,
//!   helicity assembly and the local integrals behind the twist term;
//! * [`field`]: Biot-Savart velocity, the multivalued velocity potential and
//!   the constant-phase (Seifert) framing;
//! * [`coarsegrain`]: mollified vorticity and quasiclassical helicity on grids.
//!
//! Enable the `parallel` feature to spread the O(N²) pair sums over a rayon
//! pool. Reductions are always performed in a fixed order so results do not
//! depend on the thread count.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod coarsegrain;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod math;
mod par;
pub mod quadrature;
pub mod spectral;
pub mod topology;

pub use coarsegrain::{coarse_velocity, coarse_vorticity, quasiclassical_helicity, VorticityGrid};
pub use field::{
    biot_savart_velocity, circulation, phase_along_path, seifert_framing, velocity_field_on_grid,
    FieldError, PhasePath, VelocitySample,
};
pub use geometry::{
    make_bundle, make_circle, make_torus_knot, resample_arclength, Filament, FrenetData,
    GeometryError, TorusKnotParams,
};
pub use grid::{GridSpec, VectorGrid};
pub use math::Vec3;
pub use topology::{
    assemble_helicity, linking_number, push_off, self_linking, twist, writhe, Framing,
    HelicityReport, LinkingNumber, Tolerances, TopologyError,
};
