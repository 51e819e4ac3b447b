//! Hyperball packings of hyperbolic 3-space in the projective (Beltrami–Cayley–Klein) model.
//!
//! The crate is organised bottom-up:
//!
//! - [`lorentz`]: the signature-(1,3) form, point classes, polarity, distances, isometries;
//! - [`hyperball`]: hyperballs, packing admissibility, plane/hyperball clearance and the
//!   volume of a hyperball prism piece over a polygon;
//! - [`polytope`]: compact projective polyhedra, vertex enumeration, outer incidence
//!   points, polar truncation, splitting and truncated-tetrahedron recognition;
//! - [`decompose`]: the local cell around a Dirichlet–Voronoi vertex and its recursive
//!   polar cutting into truncated tetrahedra;
//! - [`volume`]: hyperbolic volumes and areas, the regular truncated tetrahedron family
//!   and packing densities.

pub mod decompose;
pub mod hyperball;
pub mod lorentz;
pub mod polytope;
pub mod volume;

pub use lorentz::{
    classify, common_perpendicular, incident, minkowski, plane_relation, point_distance,
    point_plane_distance, polar, reflect_in_plane, GeometryError, HVec4, Isometry, Plane,
    PlaneRelation, PointClass, EPS,
};
