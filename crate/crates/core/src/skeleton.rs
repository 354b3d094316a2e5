//! Skeletons of strictly semistable models: strata posets carrying canonical
//! simplices and affine tropical maps, skeleton subdivisions against a
//! periodic decomposition, refined-model strata, non-degeneracy, and the
//! piecewise-linear charts of the canonical subset.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::gamma::Gamma;
use crate::lattice::Lattice;
use crate::mat::QMat;
use crate::periodic::{all_faces, PeriodicDecomposition, ValidationReport};
use crate::polytope::{AffineMap, Polytope};
use crate::rat::{lex_cmp, vsub, Int, QVec, Rat};

/// The canonical simplex of a stratum, realized in the coordinates with
/// `u0'` dropped: `Sigma_S = { u' in R_+^r : u_1' + ... + u_r' <= v(pi) }`.
#[derive(Clone, Debug)]
pub struct CanonicalSimplex {
    pub r: usize,
    pub pi_val: Rat,
}

impl CanonicalSimplex {
    pub fn new(r: usize, pi_val: Rat) -> Result<Self> {
        if !pi_val.is_positive() {
            return Err(Error::InconsistentInput(String::from(
                "uniformizer valuation must be positive",
            )));
        }
        Ok(CanonicalSimplex { r, pi_val })
    }

    /// `Sigma_S` as a polytope in `R^r`.
    pub fn realization(&self) -> Polytope {
        let r = self.r;
        if r == 0 {
            return Polytope::point(&[]);
        }
        let mut verts: Vec<QVec> = vec![crate::rat::zeros(r)];
        for j in 0..r {
            let mut v = crate::rat::zeros(r);
            v[j] = self.pi_val.clone();
            verts.push(v);
        }
        Polytope::from_vertices(r, &verts).expect("simplex vertices are affinely independent")
    }
}

/// Intersection numbers of a stratum closure against multisets of bundle
/// indices. For a stratum of dimension `e` the keys are sorted multisets of
/// size `e` over `{0, .., n_bundles-1}`; the single-bundle shorthand stores
/// one entry under the constant multiset.
#[derive(Clone, Debug, Default)]
pub struct StratumWeights {
    pub table: BTreeMap<Vec<usize>, Rat>,
}

impl StratumWeights {
    pub fn empty() -> Self {
        StratumWeights::default()
    }

    /// Single-bundle shorthand: `deg_H(S)` for a stratum of dimension `e`.
    pub fn scalar(e: usize, bundle: usize, value: Rat) -> Self {
        let mut table = BTreeMap::new();
        table.insert(vec![bundle; e], value);
        StratumWeights { table }
    }

    pub fn get(&self, key: &[usize]) -> Rat {
        let mut k = key.to_vec();
        k.sort_unstable();
        self.table.get(&k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.table.values().all(|v| v.is_zero())
    }
}

#[derive(Clone, Debug)]
pub struct Stratum {
    pub id: usize,
    /// Dimension `e` of the stratum in the special fibre.
    pub dim_stratum: usize,
    pub weights: StratumWeights,
}

/// An affine embedding of one canonical simplex onto a face of another,
/// realizing the order-reversing incidence `T <= S  <->  Delta_T face of
/// Delta_S`.
#[derive(Clone, Debug)]
pub struct FaceEmbedding {
    /// Index of the stratum whose simplex is the face.
    pub sub: usize,
    /// Index of the stratum whose simplex contains it.
    pub sup: usize,
    /// Affine map `Sigma_sub -> Sigma_sup`.
    pub map: AffineMap,
}

/// The combinatorial skeleton: strata with weights, their canonical
/// simplices, and the face incidences between them.
#[derive(Clone, Debug)]
pub struct SkeletonComplex {
    /// Dimension of the ambient tropical torus `R^n / Lambda`.
    pub n: usize,
    /// Dimension of the variety (top stratum dimension of the model).
    pub d: usize,
    pub lattice: Lattice,
    pub strata: Vec<Stratum>,
    pub simplices: Vec<CanonicalSimplex>,
    pub incidence: Vec<FaceEmbedding>,
}

/// Affine lifts `f_aff` of the tropical map, one per canonical simplex:
/// `u' -> M_S u' + off_S` with `M_S` an integer `n x r` matrix.
#[derive(Clone, Debug)]
pub struct TropicalMap {
    pub maps: Vec<(QMat, Vec<Gamma>)>,
}

impl TropicalMap {
    /// The affine lift of simplex `s` with a rational offset, as a map of
    /// polytopes; errors if the offset is symbolic.
    pub fn affine_map(&self, s: usize) -> Result<AffineMap> {
        let (m, off) = &self.maps[s];
        let off: QVec = off.iter().map(|g| g.to_rat()).collect::<Result<_>>()?;
        Ok(AffineMap { mat: m.clone(), off })
    }
}

/// One cell of a skeleton subdivision, with back-references to the source
/// decomposition cell and lattice translate that produced it.
#[derive(Clone, Debug)]
pub struct SubdivCell {
    pub cell: Polytope,
    pub source_cell: usize,
    pub translate: QVec,
}

/// Subdivision `D = { Delta_S  intersect  f_aff^{-1}(sigma + lambda) }` of
/// every canonical simplex, grouped per stratum.
#[derive(Clone, Debug)]
pub struct SkeletonSubdivision {
    pub per_simplex: Vec<Vec<SubdivCell>>,
}

/// A stratum of the refined model: one per open face of the subdivision,
/// with codimension equal to the face dimension.
#[derive(Clone, Debug)]
pub struct RefinedStratum {
    pub simplex: usize,
    pub face: Polytope,
    pub dim_face: usize,
    pub codim: usize,
}

#[derive(Clone, Debug)]
pub struct RefinedStrata {
    pub nodes: Vec<RefinedStratum>,
    /// Pairs `(i, j)` with face `i` a proper face of face `j` (closure of
    /// stratum `j` contains stratum `i` reversed: smaller face = larger
    /// codimension).
    pub order: Vec<(usize, usize)>,
}

impl RefinedStrata {
    pub fn components(&self) -> Vec<&RefinedStratum> {
        self.nodes.iter().filter(|s| s.dim_face == 0).collect()
    }
}

/// A chart of the canonical subset: an injective affine map from a
/// non-degenerate canonical simplex to the tropical torus, tagged with the
/// class of charts sharing the same image modulo the lattice.
#[derive(Clone, Debug)]
pub struct Chart {
    pub stratum: usize,
    pub map: AffineMap,
    pub image_class: usize,
}

impl SkeletonComplex {
    /// Consistency report: dimensions, incidence embeddings, and the
    /// compatibility of the affine lifts across shared faces modulo the
    /// lattice.
    pub fn validate(&self, tm: &TropicalMap) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.simplices.len() != self.strata.len() || tm.maps.len() != self.strata.len() {
            report
                .issues
                .push(String::from("strata, simplices and lifts must be parallel lists"));
            return report;
        }
        for (i, (stratum, simplex)) in self.strata.iter().zip(&self.simplices).enumerate() {
            if stratum.dim_stratum + simplex.r != self.d {
                report.issues.push(format!(
                    "stratum {i}: dim(Delta_S) = {} but d - dim(S) = {}",
                    simplex.r,
                    self.d - stratum.dim_stratum.min(self.d)
                ));
            }
            let (m, off) = &tm.maps[i];
            if m.rows != self.n || m.cols != simplex.r || off.len() != self.n {
                report.issues.push(format!("lift {i} has wrong shape"));
                continue;
            }
            if !m.is_integer() {
                report.issues.push(format!("lift {i} has a non-integer linear part"));
            }
        }
        for emb in &self.incidence {
            let sub = &self.simplices[emb.sub];
            let sup = &self.simplices[emb.sup];
            if self.strata[emb.sub].dim_stratum <= self.strata[emb.sup].dim_stratum {
                report.issues.push(format!(
                    "incidence {} <= {} is not order reversing",
                    emb.sub, emb.sup
                ));
            }
            let face = match sub.realization().affine_image(&emb.map) {
                Ok(f) => f,
                Err(e) => {
                    report
                        .issues
                        .push(format!("incidence {} <= {}: {e}", emb.sub, emb.sup));
                    continue;
                }
            };
            if !face.is_face_of(&sup.realization()) {
                report.issues.push(format!(
                    "embedded simplex {} is not a face of simplex {}",
                    emb.sub, emb.sup
                ));
            }
            // lifts must agree on the shared face up to a lattice translate
            let (m_sub, off_sub) = &tm.maps[emb.sub];
            let (m_sup, off_sup) = &tm.maps[emb.sup];
            let lin_ok = m_sup.mul_mat(&emb.map.mat) == m_sub.clone();
            let shift = m_sup.mul_vec(&emb.map.off);
            let mut diff_ok = true;
            let mut diff_rational = Vec::with_capacity(self.n);
            for k in 0..self.n {
                let diff = off_sup[k]
                    .add(&Gamma::from_rat(shift[k].clone()))
                    .sub(&off_sub[k]);
                if !diff.is_rational() {
                    diff_ok = false;
                    break;
                }
                diff_rational.push(diff.rational_part().clone());
            }
            if !lin_ok || !diff_ok || !self.lattice.contains(&diff_rational) {
                report.issues.push(format!(
                    "lifts of simplices {} and {} differ by a non-lattice vector on their shared face",
                    emb.sub, emb.sup
                ));
            }
        }
        report
    }

    /// Pulls a periodic decomposition of the target torus back through the
    /// affine lifts and intersects with every canonical simplex.
    pub fn subdivide(
        &self,
        tm: &TropicalMap,
        c1: &PeriodicDecomposition,
    ) -> Result<SkeletonSubdivision> {
        if c1.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: c1.n });
        }
        let shift = c1.rational_shift()?;
        let mut per_simplex = Vec::with_capacity(self.simplices.len());
        for (s, simplex) in self.simplices.iter().enumerate() {
            let sigma = simplex.realization();
            let f = tm.affine_map(s)?;
            let image = sigma.affine_image(&f)?;
            let mut cells: Vec<SubdivCell> = Vec::new();
            for (ci, cell) in c1.cells.iter().enumerate() {
                let cell0 = cell.translate(&shift);
                for (t, moved) in c1.overlapping_translates(&image, &cell0) {
                    // pull { u' : f(u') in moved } back to simplex coordinates
                    let piece = preimage_in(&sigma, &f, &moved)?;
                    if piece.is_empty() || piece.affine_dim() < sigma.affine_dim() {
                        continue;
                    }
                    if cells.iter().any(|c| c.cell.eq_as_set(&piece)) {
                        continue;
                    }
                    cells.push(SubdivCell { cell: piece, source_cell: ci, translate: t });
                }
            }
            // a produced vertex interior to the simplex forces injectivity
            let (m, _) = &tm.maps[s];
            for c in &cells {
                for v in &c.cell.vertices {
                    if sigma.relint_contains(v) && m.rank() != simplex.r {
                        return Err(Error::InconsistentInput(format!(
                            "subdivision vertex interior to simplex {s} with a rank-deficient lift"
                        )));
                    }
                }
            }
            check_covers(&sigma, &cells, s)?;
            cells.sort_by(|a, b| lex_cmp(&a.cell.vertices[0], &b.cell.vertices[0]));
            per_simplex.push(cells);
        }
        Ok(SkeletonSubdivision { per_simplex })
    }

    /// Strata of the refined model: one per open face of the subdivision,
    /// per simplex, with codimension equal to the face dimension.
    pub fn refined_strata(&self, subdiv: &SkeletonSubdivision) -> RefinedStrata {
        let mut nodes: Vec<RefinedStratum> = Vec::new();
        for (s, cells) in subdiv.per_simplex.iter().enumerate() {
            for c in cells {
                for face in all_faces(&c.cell) {
                    if face.is_empty() {
                        continue;
                    }
                    if nodes
                        .iter()
                        .any(|n| n.simplex == s && n.face.eq_as_set(&face))
                    {
                        continue;
                    }
                    let dim_face = face.affine_dim().max(0) as usize;
                    nodes.push(RefinedStratum { simplex: s, face, dim_face, codim: dim_face });
                }
            }
        }
        let mut order = Vec::new();
        for i in 0..nodes.len() {
            for j in 0..nodes.len() {
                if i != j
                    && nodes[i].simplex == nodes[j].simplex
                    && nodes[i].dim_face < nodes[j].dim_face
                    && nodes[i].face.is_face_of(&nodes[j].face)
                {
                    order.push((i, j));
                }
            }
        }
        RefinedStrata { nodes, order }
    }

    /// Strata whose lift has full rank on the simplex and whose weight
    /// table is not identically zero.
    pub fn nondegenerate_simplices(&self, tm: &TropicalMap) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, simplex) in self.simplices.iter().enumerate() {
            let (m, _) = &tm.maps[i];
            if m.rank() == simplex.r && !self.strata[i].weights.is_zero() {
                out.push(i);
            }
        }
        out
    }

    /// Charts of the canonical subset: the affine lifts restricted to the
    /// non-degenerate simplices, grouped into classes with equal image
    /// modulo the lattice.
    pub fn canonical_subset_charts(&self, tm: &TropicalMap) -> Result<Vec<Chart>> {
        let mut charts: Vec<Chart> = Vec::new();
        let mut class_reps: Vec<Polytope> = Vec::new();
        let canon =
            PeriodicDecomposition::new(self.lattice.clone(), Vec::new())?;
        for s in self.nondegenerate_simplices(tm) {
            let simplex = &self.simplices[s];
            let f = tm.affine_map(s)?;
            if f.mat.rank() != simplex.r {
                return Err(Error::InconsistentInput(format!(
                    "lift of non-degenerate simplex {s} is not injective"
                )));
            }
            let image = canon.canonicalize(&simplex.realization().affine_image(&f)?);
            let image_class = match class_reps.iter().position(|p| p.eq_as_set(&image)) {
                Some(k) => k,
                None => {
                    class_reps.push(image);
                    class_reps.len() - 1
                }
            };
            charts.push(Chart { stratum: s, map: f, image_class });
        }
        Ok(charts)
    }
}

/// `{ u' in sigma : f(u') in target }` as a polytope in the simplex
/// coordinates, computed from the halfspace description of the target.
fn preimage_in(sigma: &Polytope, f: &AffineMap, target: &Polytope) -> Result<Polytope> {
    let mut hs = sigma.halfspaces.clone();
    for h in &target.halfspaces {
        // a . (M u' + off) <= c   becomes   (M^T a) . u' <= c - a . off
        let normal = f.mat.transpose().mul_vec(&h.normal);
        let offset = &h.offset - crate::rat::dot(&h.normal, &f.off);
        if normal.iter().all(|x| x.is_zero()) {
            if offset.is_negative() {
                return Ok(Polytope::empty(sigma.dim));
            }
            continue;
        }
        hs.push(crate::polytope::Halfspace::new(normal, offset));
    }
    Polytope::from_halfspaces(sigma.dim, &hs)
}

/// Full-dimensional covering check for a subdivision of one simplex.
fn check_covers(sigma: &Polytope, cells: &[SubdivCell], s: usize) -> Result<()> {
    let total: Rat = cells.iter().map(|c| c.cell.volume()).sum();
    if total != sigma.volume() {
        return Err(Error::InconsistentInput(format!(
            "subdivision of simplex {s} covers volume {total} of {}",
            sigma.volume()
        )));
    }
    for i in 0..cells.len() {
        for j in (i + 1)..cells.len() {
            let inter = cells[i].cell.intersect(&cells[j].cell)?;
            if !inter.is_empty()
                && (!inter.is_face_of(&cells[i].cell) || !inter.is_face_of(&cells[j].cell))
            {
                return Err(Error::InconsistentInput(format!(
                    "subdivision of simplex {s} is not face to face"
                )));
            }
        }
    }
    Ok(())
}

/// Builds the skeleton of the torus `R^n / Lambda` from a periodic
/// triangulation: one stratum per face class, canonical simplices scaled so
/// the lifts are integral, weights `deg` on the zero-dimensional strata
/// (maximal simplices) and zero elsewhere.
pub fn torus_skeleton(
    dec: &PeriodicDecomposition,
    deg: Rat,
) -> Result<(SkeletonComplex, TropicalMap)> {
    torus_skeleton_weighted(dec, dec.n, deg)
}

/// Torus skeleton for a variety of dimension `d_bundles = n + b`: strata of
/// a face class of dimension `r` have fibre dimension `(n - r) + b`, and the
/// maximal classes carry the constant weight `deg` on every sorted
/// `b`-subset of the bundle indices.
pub fn torus_skeleton_weighted(
    dec: &PeriodicDecomposition,
    d_bundles: usize,
    deg: Rat,
) -> Result<(SkeletonComplex, TropicalMap)> {
    let n = dec.n;
    if d_bundles < n {
        return Err(Error::InconsistentInput(String::from(
            "need at least as many bundles as the torus dimension",
        )));
    }
    let classes = dec.face_classes();
    let mut strata = Vec::new();
    let mut simplices = Vec::new();
    let mut maps = Vec::new();
    let mut realizations: Vec<Polytope> = Vec::new();
    for (id, face) in classes.iter().enumerate() {
        let r = face.affine_dim().max(0) as usize;
        if face.vertices.len() != r + 1 {
            return Err(Error::InconsistentInput(String::from(
                "decomposition cell is not a simplex",
            )));
        }
        let v0 = &face.vertices[0];
        let edges: Vec<QVec> = face.vertices[1..].iter().map(|v| vsub(v, v0)).collect();
        // smallest positive integer clearing all edge denominators
        let mut m_c = Int::one();
        for e in &edges {
            for x in e {
                m_c = num_integer::lcm(m_c, x.denom().clone());
            }
        }
        let scale = Rat::from_integer(m_c.clone());
        let m = QMat::from_cols(
            &edges
                .iter()
                .map(|e| e.iter().map(|x| x * &scale).collect::<QVec>())
                .collect::<Vec<_>>(),
        );
        let m = if r == 0 { QMat::zeros(n, 0) } else { m };
        let e_dim = d_bundles - r;
        let weights = if r == n {
            let mut table = BTreeMap::new();
            for key in crate::lattice::combinations(d_bundles, e_dim) {
                table.insert(key, deg.clone());
            }
            StratumWeights { table }
        } else {
            StratumWeights::empty()
        };
        strata.push(Stratum { id, dim_stratum: e_dim, weights });
        simplices.push(CanonicalSimplex::new(r, Rat::one() / &scale)?);
        maps.push((m, v0.iter().map(|x| Gamma::from_rat(x.clone())).collect()));
        realizations.push(face.clone());
    }
    // incidences: each face class embeds into the simplices it bounds
    let mut incidence = Vec::new();
    for sub in 0..classes.len() {
        for sup in 0..classes.len() {
            if simplices[sub].r >= simplices[sup].r {
                continue;
            }
            for (t, moved) in dec.overlapping_translates(&realizations[sub], &realizations[sup]) {
                let shifted = realizations[sub].translate(
                    &t.iter().map(|x| -x.clone()).collect::<QVec>(),
                );
                let _ = moved;
                if !shifted.is_face_of(&realizations[sup]) {
                    continue;
                }
                if let Some(map) =
                    simplex_face_embedding(&simplices[sub], &maps[sub], &simplices[sup], &maps[sup], &t)
                {
                    incidence.push(FaceEmbedding { sub, sup, map });
                    break;
                }
            }
        }
    }
    let d = d_bundles;
    let sk = SkeletonComplex {
        n,
        d,
        lattice: dec.lattice.clone(),
        strata,
        simplices,
        incidence,
    };
    Ok((sk, TropicalMap { maps }))
}

/// Affine map `Sigma_sub -> Sigma_sup` matching the lifts up to the
/// lattice translate `t`, solved from the vertex images.
fn simplex_face_embedding(
    sub: &CanonicalSimplex,
    sub_map: &(QMat, Vec<Gamma>),
    sup: &CanonicalSimplex,
    sup_map: &(QMat, Vec<Gamma>),
    t: &[Rat],
) -> Option<AffineMap> {
    let f_sub = AffineMap {
        mat: sub_map.0.clone(),
        off: sub_map.1.iter().map(|g| g.rational_part().clone()).collect(),
    };
    let f_sup = AffineMap {
        mat: sup_map.0.clone(),
        off: sup_map.1.iter().map(|g| g.rational_part().clone()).collect(),
    };
    // send each vertex p of Sigma_sub to the q in Sigma_sup with
    // f_sup(q) = f_sub(p) - t
    let sub_verts = sub.realization().vertices;
    let mut images: Vec<QVec> = Vec::with_capacity(sub_verts.len());
    for p in &sub_verts {
        let target = vsub(&f_sub.apply(p), &t.to_vec());
        let q = sup
            .realization()
            .vertices
            .iter()
            .find(|q| f_sup.apply(q) == target)?
            .clone();
        images.push(q);
    }
    // vertices of Sigma_sub are 0 and pi_val * e_j, so the map reads off
    let off = images[0].clone();
    let inv_scale = Rat::one() / &sub.pi_val;
    let cols: Vec<QVec> = images[1..]
        .iter()
        .map(|img| {
            vsub(img, &off)
                .iter()
                .map(|x| x * &inv_scale)
                .collect::<QVec>()
        })
        .collect();
    let mat = if cols.is_empty() {
        QMat::zeros(sup.r, 0)
    } else {
        QMat::from_cols(&cols)
    };
    Some(AffineMap { mat, off })
}
