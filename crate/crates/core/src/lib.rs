//! Numerical experiments with the Zorich map and its second iterate.
//!
//! The Zorich map `Z(x) = e^{x3} h(x1, x2)` is a three-dimensional analogue
//! of the complex exponential. This crate evaluates it and its inverse
//! branches, the symmetry group `G` with `Z o g = Z`, the cone-shaped
//! preimages of horizontal planes, distortion estimates, and Monte Carlo
//! experiments on the density of `Z o Z` applied to lines.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod distortion;
pub mod error;
pub mod group;
pub mod point;
pub mod preimage;
pub mod runner;
pub mod sampling;
pub mod thresholds;
pub mod verify;
pub mod zorich;

pub use error::{Error, Result, Stage};
pub use group::{find_g, reduce_to_fundamental_domain, GroupElement};
pub use point::{PlanePoint, Point3, UnitVector3};
pub use zorich::{zorich, zorich_inverse, zorich_second, BeamIndex};
