//! Couplings, spectral points, framings and their matrix representatives.

mod build;
mod coupling;
mod point;
mod quadruple;
mod sample;

pub use build::{build_dual, build_qmodel, dual_x_blocks, embed_framing};
pub use coupling::{derived_constants, Coupling, Regularity};
pub use point::{QModelPoint, SpectralPoint, SpinFraming};
pub use quadruple::{Convention, Quadruple};
pub use sample::{case_rng, sample_coupling, sample_framing, sample_point, sample_qpoint};
