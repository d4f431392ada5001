//! Target spaces, differential-form oracles, piecewise maps from surfaces,
//! quadrature and line holonomy.

mod form;
mod integrate;
mod map;
mod target;

pub use form::{
    antisymmetry_defect, exterior_derivative, exterior_derivative_fd, pushforward, pushforward4,
    FormFn, FormOracle, D_STEP,
};
pub use integrate::{
    face_integral, face_integrals, line_holonomy, path_holonomy, pullback_integrate,
    pullback_integrate_with, segment_integral, side_integral, side_velocity, trace, Connection,
    Quadrature, SegmentFn, PUSH_STEP,
};
pub use map::{interpolate_corners, MapSpec, SurfaceMap, SEAM_TOL};
pub use target::{Atom, TargetSpace};
