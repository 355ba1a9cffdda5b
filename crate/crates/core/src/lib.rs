//! Geometry of the Y^{p,q} Sasaki-Einstein spaces and their Calabi-Yau cones:
//! metrics, Killing forms, toric data and geodesic dynamics.

pub mod cone;
pub mod dynamics;
pub mod error;
pub mod forms;
pub mod geom;
pub mod jet;
pub mod toric;
pub mod ypq;

pub use error::{Error, Result};
