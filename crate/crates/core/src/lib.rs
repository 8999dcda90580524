pub mod dynamics;
pub mod entanglement;
pub mod error;
pub(crate) mod linalg;
pub mod localization;
pub mod model;
pub mod spectral;
pub mod sweep;

pub use error::{Error, Result};
pub use faer::c64;
