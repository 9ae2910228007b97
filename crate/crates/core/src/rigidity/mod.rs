//! Curves tangent to `D` in Engel–Darboux charts and the rigidity
//! phenomena they exhibit.

pub mod access;
pub mod dcurve;
pub mod inaba;
pub mod iwr;
pub mod null_variation;

pub use access::{accessible_membership, boundary_cone_value, AccessRegion};
pub use dcurve::{sample_d_curve, sample_d_curve_in, Controls, DCurve, DarbouxChart};
pub use inaba::{inaba_identity_check, rigidity_probe, ProbeConfig, ProbeReport};
pub use iwr::{infinitesimal_rigidity_check, IwrKind, IwrReport, Perturbation};
pub use null_variation::{null_variation_check, NullVariationReport};
