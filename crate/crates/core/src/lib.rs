//! Spectral coordinates, integrable flows and interpolation curves on
//! Calogero–Moser spaces attached to the cyclic quiver with `m` vertices.
//!
//! Points are carried either as spectral data ([`SpectralPoint`], optionally
//! with a [`SpinFraming`]) or as a gauge-orbit representative ([`Quadruple`]).

pub mod canonical;
pub mod curves;
pub mod dynamics;
pub mod error;
pub mod kernel;
pub mod model;
pub mod poisson;
pub mod serde_cx;
pub mod spectral;
pub mod tolerances;
pub mod verify;

pub use num_complex::Complex64 as C64;

pub use error::{CmError, Result};
pub use kernel::{CMatrix, DensePoly};
pub use model::{Convention, Coupling, QModelPoint, Quadruple, SpectralPoint, SpinFraming};
pub use tolerances::Tolerances;
pub use canonical::{OrbitCoordinates, RationalFn};
pub use curves::{CurvePolys, QuotientSample};
pub use dynamics::FlowSpec;
pub use spectral::SpectralFnBundle;
pub use verify::{Suite, VerifyConfig, VerifyReport};
