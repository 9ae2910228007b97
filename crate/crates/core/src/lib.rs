//! Engel structures on parallelizable 4-manifold models.

pub mod dynamics;
pub mod engel;
pub mod error;
pub mod frame;
pub mod lorentz;
pub mod presets;
pub mod prolong;
pub mod report;
pub mod rigidity;
pub mod numeric;
pub mod surface;

pub use error::{EngelError, Result};
