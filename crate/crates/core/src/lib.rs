//! Voronoi cells of lattices in low dimensions, their (anisotropic)
//! perimeters, and a derivative-free search for the lattice whose Voronoi
//! cell has least perimeter at fixed covolume.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`]: bases, LLL reduction, ellipsoid enumeration, shortest vectors.
//! * [`voronoi`]: the Voronoi cell as an explicit polytope (facets, vertices,
//!   measures, covering radius).
//! * [`anisotropy`]: norms and the facet-sum perimeter.
//! * [`bounds`]: unit-ball volumes, ζ(n) and the isoperimetric bracket.
//! * [`optimizer`]: Nelder–Mead over lattice parameterizations.
//! * [`catalog`]: named reference lattices.
//! * [`report`], [`export`]: analysis reports, invariant sweeps and file formats
//!   used by the `foamlat` binary.

pub mod anisotropy;
pub mod bounds;
pub mod catalog;
pub mod error;
pub mod export;
pub mod lattice;
pub mod nelder_mead;
pub mod optimizer;
mod polytope;
pub mod report;
pub mod voronoi;

pub use anisotropy::{eval_norm, perimeter, NormKind, NormSpec};
pub use error::{Error, Result};
pub use lattice::{
    enumerate_points, make_lattice, reduce_basis, shortest_vector, Lattice, LatticeInvariants,
    LatticePoint,
};
pub use voronoi::{build_cell, contains, covering_radius, relevant_vectors, Facet, VoronoiCell};
