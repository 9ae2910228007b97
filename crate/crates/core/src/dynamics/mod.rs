//! Dynamics of the Cauchy characteristic: transport on `E/W`, developing
//! maps, holonomy of closed orbits and the global type.

pub mod geodesic;
pub mod global;
pub mod holonomy;
pub mod orbit;

pub use geodesic::{geodesic_projection_check, GeodesicResiduals};
pub use global::{estimate_global_type, EstimatorConfig, GlobalEstimate, GlobalType};
pub use holonomy::{classify_projective, first_return, holonomy_closed_form, ClosedOrbit, HolonomyLift, ProjectiveType};
pub use orbit::{characteristic_orbit, developing_map, integrate_characteristic, transport_emodw, OrbitTrace};
