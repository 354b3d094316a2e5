//! Recursive plurisimplices: the polytopes attached to iterated blocks of
//! unit equations, their defining inequalities, and the order-reversing
//! correspondence between their open faces and strata.

use alloc::format;
use alloc::vec::Vec;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::periodic::all_faces;
use crate::polytope::{Halfspace, Polytope};
use crate::rat::{dot, zeros, QVec, Rat};

/// An affine function `u -> coeffs . u + constant` on the coordinates of
/// the previous levels.
#[derive(Clone, Debug)]
pub struct AffineBound {
    pub coeffs: QVec,
    pub constant: Rat,
}

impl AffineBound {
    pub fn constant(c: Rat) -> Self {
        AffineBound { coeffs: Vec::new(), constant: c }
    }

    fn eval(&self, u: &[Rat]) -> Rat {
        dot(&self.coeffs, &u[..self.coeffs.len()]) + &self.constant
    }
}

/// One level of a block specification: `p_k` groups of `n_i^{(k)}`
/// coordinates, each bounded by an affine function on the previous levels.
#[derive(Clone, Debug)]
pub struct LevelSpec {
    pub sizes: Vec<usize>,
    pub bounds: Vec<AffineBound>,
}

/// A recursive block specification of length `l`.
#[derive(Clone, Debug)]
pub struct BlockSpec {
    pub levels: Vec<LevelSpec>,
}

/// The polytope of a block specification, with the book-keeping of which
/// coordinates `(level, group, index)` survive and which are identically
/// zero and dropped.
#[derive(Clone, Debug)]
pub struct Plurisimplex {
    pub polytope: Polytope,
    pub coords: Vec<(usize, usize, usize)>,
    pub dropped: Vec<(usize, usize, usize)>,
}

/// An open face of the plurisimplex; the corresponding stratum has
/// codimension equal to the face dimension, reversing the order.
#[derive(Clone, Debug)]
pub struct StratumFace {
    pub face: Polytope,
    pub dim: usize,
    pub codim: usize,
}

/// The face poset of a plurisimplex; `order` lists the strict containments
/// `(sub, sup)` of closed faces.
#[derive(Clone, Debug)]
pub struct FaceStrataPoset {
    pub faces: Vec<StratumFace>,
    pub order: Vec<(usize, usize)>,
}

impl FaceStrataPoset {
    /// The vertices, one per irreducible component.
    pub fn components(&self) -> Vec<&StratumFace> {
        self.faces.iter().filter(|f| f.dim == 0).collect()
    }

    pub fn count_of_codim(&self, codim: usize) -> usize {
        self.faces.iter().filter(|f| f.codim == codim).count()
    }
}

/// Builds `Delta_l` from its defining inequalities: nonnegativity of every
/// coordinate plus `u_{i1}^{(k)} + .. + u_{in}^{(k)} <= A_i^{(k)}` per
/// group, after checking each bound is nonnegative on the previous stage
/// and dropping coordinates of identically-zero groups.
pub fn build_plurisimplex(spec: &BlockSpec) -> Result<Plurisimplex> {
    let mut coords: Vec<(usize, usize, usize)> = Vec::new();
    let mut dropped: Vec<(usize, usize, usize)> = Vec::new();
    // groups kept so far, with the coordinate range of each level
    let mut stage = Polytope::point(&[]);
    let mut polytope = stage.clone();
    let mut full_offset = 0usize; // coordinates of previous levels, dropped ones excluded
    for (k, level) in spec.levels.iter().enumerate() {
        if level.sizes.len() != level.bounds.len() {
            return Err(Error::InconsistentInput(format!(
                "level {k}: {} groups but {} bounds",
                level.sizes.len(),
                level.bounds.len()
            )));
        }
        let mut keep: Vec<(usize, usize)> = Vec::new();
        for (i, (&size, bound)) in level.sizes.iter().zip(&level.bounds).enumerate() {
            if size == 0 {
                return Err(Error::InconsistentInput(format!(
                    "level {k} group {i}: group size must be positive"
                )));
            }
            if bound.coeffs.len() > full_offset {
                return Err(Error::DimensionMismatch {
                    expected: full_offset,
                    got: bound.coeffs.len(),
                });
            }
            // the bound must be a unit: nonnegative on the previous stage
            let mut all_zero = true;
            if stage.vertices.is_empty() {
                // previous stage is the empty product: evaluate the constant
                if bound.constant.is_negative() {
                    return Err(Error::InconsistentInput(format!(
                        "level {k} group {i}: bound is negative"
                    )));
                }
                all_zero = bound.constant.is_zero();
            } else {
                for v in &stage.vertices {
                    let val = bound.eval(v);
                    if val.is_negative() {
                        return Err(Error::InconsistentInput(format!(
                            "level {k} group {i}: bound is negative at a vertex of the previous stage"
                        )));
                    }
                    if !val.is_zero() {
                        all_zero = false;
                    }
                }
            }
            if all_zero {
                // the whole group is identically zero on Delta_l
                for j in 0..size {
                    dropped.push((k, i, j));
                }
                continue;
            }
            keep.push((i, size));
        }
        let added: usize = keep.iter().map(|&(_, s)| s).sum();
        let dim = full_offset + added;
        let mut hs: Vec<Halfspace> = Vec::new();
        // previous-stage inequalities, padded with zeros
        for h in &polytope.halfspaces {
            let mut normal = zeros(dim);
            normal[..h.normal.len()].clone_from_slice(&h.normal);
            hs.push(Halfspace::new(normal, h.offset.clone()));
        }
        // nonnegativity of the new coordinates
        for j in 0..added {
            let mut normal = zeros(dim);
            normal[full_offset + j] = -Rat::from_integer(1.into());
            hs.push(Halfspace::new(normal, Rat::zero()));
        }
        // one group inequality per kept group
        let mut pos = full_offset;
        for &(i, size) in &keep {
            let bound = &level.bounds[i];
            let mut normal = zeros(dim);
            for c in 0..bound.coeffs.len() {
                normal[c] = -bound.coeffs[c].clone();
            }
            for j in 0..size {
                normal[pos + j] += Rat::from_integer(1.into());
            }
            hs.push(Halfspace::new(normal, bound.constant.clone()));
            for j in 0..size {
                coords.push((k, i, j));
            }
            pos += size;
        }
        polytope = Polytope::from_halfspaces(dim, &hs)?;
        stage = polytope.clone();
        full_offset = dim;
    }
    Ok(Plurisimplex { polytope, coords, dropped })
}

/// The order-reversing face-strata correspondence: every nonempty face of
/// the plurisimplex, tagged with the codimension of its stratum, together
/// with the containment order of the closed faces.
pub fn face_strata(spec: &BlockSpec) -> Result<FaceStrataPoset> {
    let ps = build_plurisimplex(spec)?;
    let mut faces: Vec<StratumFace> = Vec::new();
    for face in all_faces(&ps.polytope) {
        if face.is_empty() {
            continue;
        }
        let dim = face.affine_dim().max(0) as usize;
        if faces.iter().any(|f| f.face.eq_as_set(&face)) {
            continue;
        }
        faces.push(StratumFace { face, dim, codim: dim });
    }
    let mut order = Vec::new();
    for a in 0..faces.len() {
        for b in 0..faces.len() {
            if a == b || faces[a].dim >= faces[b].dim {
                continue;
            }
            // faces of a polytope are comparable exactly when the vertex
            // sets are nested
            let contained = faces[a]
                .face
                .vertices
                .iter()
                .all(|v| faces[b].face.vertices.contains(v));
            if contained {
                order.push((a, b));
            }
        }
    }
    Ok(FaceStrataPoset { faces, order })
}
