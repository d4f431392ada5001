//! Holonomy of gerbes with connection over maps from triangulated
//! surfaces: closed oriented, unoriented (Jandl), with D-brane boundary and
//! with bi-brane defect lines, plus SU(2) WZW and free-boson brane arithmetic.

pub mod criteria;
pub mod error;
pub mod fields;
pub mod fixtures;
pub mod freeboson;
pub mod gerbedata;
pub mod holonomy;
pub mod mesh;
pub mod quat;
pub mod registry;
pub mod sampling;
pub mod wzw;

pub use error::{Error, Result};
pub use fields::{Connection, FormOracle, SurfaceMap, TargetSpace};
pub use mesh::{Circle, DoubleCover, Orientability, TriangulatedSurface};
