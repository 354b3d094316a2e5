//! Exact convex-geometric engine for canonical measures on tropicalizations
//! of subvarieties of abelian varieties.
//!
//! All arithmetic is exact rational. The crate is `no_std` (alloc only); IO,
//! file formats and the command line live in the companion `canmeas-cli`
//! crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod gamma;
pub mod lattice;
pub mod mat;
pub mod measure;
pub mod modelfun;
pub mod periodic;
pub mod pluriblock;
pub mod polytope;
pub mod rat;
pub mod skeleton;

pub use error::Error;
pub use gamma::Gamma;
pub use lattice::{BilinearForm, Lattice};
pub use mat::QMat;
pub use measure::{DiscreteMeasure, PolytopalMeasure, Scenario};
pub use modelfun::{CocycleData, ModelFunction};
pub use periodic::{PeriodicDecomposition, SigmaFamily};
pub use polytope::{AffineMap, FaceLattice, Halfspace, Polytope};
pub use rat::Rat;
pub use skeleton::{SkeletonComplex, TropicalMap};
