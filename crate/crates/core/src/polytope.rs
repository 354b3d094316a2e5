//! Bounded rational polytopes with dual V/H representations.
//!
//! Vertex enumeration runs the double description method on the homogenized
//! cone; facet enumeration goes through the polar dual inside the affine
//! hull. All arithmetic is exact.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::mat::QMat;
use crate::rat::{dot, is_zero_vec, lex_cmp, primitive, vadd, vscale, vsub, zeros, QVec, Rat};

/// The halfspace `normal . u <= offset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Halfspace {
    pub normal: QVec,
    pub offset: Rat,
}

impl Halfspace {
    pub fn new(normal: QVec, offset: Rat) -> Self {
        Halfspace { normal, offset }
    }

    pub fn contains(&self, u: &[Rat]) -> bool {
        dot(&self.normal, u) <= self.offset
    }

    pub fn active_at(&self, u: &[Rat]) -> bool {
        dot(&self.normal, u) == self.offset
    }

    /// Canonical scaling: primitive integer normal.
    fn normalized(&self) -> Halfspace {
        if is_zero_vec(&self.normal) {
            return self.clone();
        }
        let p = primitive(&self.normal);
        // primitive() flips sign to make the leading entry positive; undo
        // that so the inequality keeps its orientation.
        let lead = self.normal.iter().find(|x| !x.is_zero()).unwrap();
        let plead = p.iter().find(|x| !x.is_zero()).unwrap();
        let keep_sign = lead.is_positive() == plead.is_positive();
        let factor = if keep_sign {
            plead / lead
        } else {
            -(plead / lead)
        };
        Halfspace {
            normal: vscale(&factor, &self.normal),
            offset: &self.offset * &factor,
        }
    }
}

/// An affine map `u -> mat * u + off`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap {
    pub mat: QMat,
    pub off: QVec,
}

impl AffineMap {
    pub fn identity(n: usize) -> Self {
        AffineMap { mat: QMat::identity(n), off: zeros(n) }
    }

    pub fn apply(&self, u: &[Rat]) -> QVec {
        vadd(&self.mat.mul_vec(u), &self.off)
    }

    /// `self` after `inner`: u -> self(inner(u)).
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap {
            mat: self.mat.mul_mat(&inner.mat),
            off: vadd(&self.mat.mul_vec(&inner.off), &self.off),
        }
    }
}

/// A bounded polytope in `R^dim`, possibly lower-dimensional or empty.
#[derive(Clone, Debug)]
pub struct Polytope {
    /// Ambient dimension.
    pub dim: usize,
    /// Affine dimension; -1 encoded as None for the empty polytope.
    pub adim: Option<usize>,
    /// Vertices in lexicographic order. Empty iff the polytope is empty.
    pub vertices: Vec<QVec>,
    /// Irredundant facet inequalities (within the affine hull) followed by
    /// affine-hull equalities stored as inequality pairs.
    pub halfspaces: Vec<Halfspace>,
    /// Number of leading entries of `halfspaces` that are genuine facets.
    pub n_facets: usize,
}

// --- double description -----------------------------------------------------

/// Ray of a pointed cone, with its zero set against the processed rows.
struct Ray {
    v: QVec,
    zero: Vec<bool>,
}

/// Extreme rays of the pointed cone `{ y : rows[i] . y >= 0 }`.
/// Errors with `RankDeficient` when the row rank is below the ambient
/// dimension (the cone then has a lineality space).
pub fn dd_cone(rows: &[QVec], dim: usize) -> Result<Vec<QVec>> {
    // deduplicate rows up to positive scaling
    let mut uniq: Vec<QVec> = Vec::new();
    for r in rows {
        if is_zero_vec(r) {
            continue;
        }
        let hs = Halfspace { normal: r.clone(), offset: Rat::zero() }.normalized();
        if !uniq.iter().any(|u| *u == hs.normal) {
            uniq.push(hs.normal);
        }
    }
    // initial basis: dim linearly independent rows
    let mut base_idx: Vec<usize> = Vec::new();
    let mut cur = QMat::zeros(0, dim);
    for (i, r) in uniq.iter().enumerate() {
        let mut cand_rows: Vec<QVec> = (0..cur.rows).map(|k| cur.row(k)).collect();
        cand_rows.push(r.clone());
        let cand = QMat::from_rows(&cand_rows);
        if cand.rank() == cand_rows.len() {
            base_idx.push(i);
            cur = cand;
            if base_idx.len() == dim {
                break;
            }
        }
    }
    if base_idx.len() < dim {
        return Err(Error::RankDeficient(String::from(
            "constraint cone has a lineality space",
        )));
    }
    let binv = cur.inverse()?;
    // initial rays = columns of the inverse of the basis rows
    let order: Vec<usize> = {
        let mut rest: Vec<usize> =
            (0..uniq.len()).filter(|i| !base_idx.contains(i)).collect();
        let mut o = base_idx.clone();
        o.append(&mut rest);
        o
    };
    let mut rays: Vec<Ray> = (0..dim)
        .map(|j| {
            let v = abs_primitive(&binv.col(j));
            let mut zero = vec![false; uniq.len()];
            for (pos, &ri) in order.iter().take(dim).enumerate() {
                zero[ri] = pos != j;
            }
            Ray { v, zero }
        })
        .collect();
    let mut processed: Vec<usize> = order[..dim].to_vec();
    for &ri in &order[dim..] {
        let row = &uniq[ri];
        let vals: Vec<Rat> = rays.iter().map(|r| dot(row, &r.v)).collect();
        let plus: Vec<usize> =
            (0..rays.len()).filter(|&k| vals[k].is_positive()).collect();
        let minus: Vec<usize> =
            (0..rays.len()).filter(|&k| vals[k].is_negative()).collect();
        if minus.is_empty() {
            for (k, r) in rays.iter_mut().enumerate() {
                r.zero[ri] = vals[k].is_zero();
            }
            processed.push(ri);
            continue;
        }
        let mut new_rays: Vec<Ray> = Vec::new();
        for &p in &plus {
            for &q in &minus {
                if !adjacent(&rays, p, q, &processed) {
                    continue;
                }
                let v = vadd(
                    &vscale(&vals[p], &rays[q].v),
                    &vscale(&(-vals[q].clone()), &rays[p].v),
                );
                let v = abs_primitive(&v);
                let mut zero = vec![false; uniq.len()];
                for &pi in &processed {
                    zero[pi] = rays[p].zero[pi] && rays[q].zero[pi];
                }
                zero[ri] = true;
                new_rays.push(Ray { v, zero });
            }
        }
        let mut kept: Vec<Ray> = Vec::new();
        for (k, r) in rays.drain(..).enumerate() {
            if !vals[k].is_negative() {
                let mut r = r;
                r.zero[ri] = vals[k].is_zero();
                kept.push(r);
            }
        }
        kept.append(&mut new_rays);
        rays = kept;
        processed.push(ri);
    }
    Ok(rays.into_iter().map(|r| r.v).collect())
}

/// Primitive representative with the natural sign kept (rays are only
/// determined up to positive scaling, so keep the orientation).
fn abs_primitive(v: &[Rat]) -> QVec {
    let p = primitive(v);
    let lead = v.iter().find(|x| !x.is_zero());
    match lead {
        None => p,
        Some(l) => {
            let pl = p.iter().find(|x| !x.is_zero()).unwrap();
            if l.is_positive() == pl.is_positive() {
                p
            } else {
                p.iter().map(|x| -x.clone()).collect()
            }
        }
    }
}

/// Combinatorial adjacency of rays `p` and `q` against processed rows.
fn adjacent(rays: &[Ray], p: usize, q: usize, processed: &[usize]) -> bool {
    let common: Vec<usize> = processed
        .iter()
        .copied()
        .filter(|&i| rays[p].zero[i] && rays[q].zero[i])
        .collect();
    for (k, r) in rays.iter().enumerate() {
        if k == p || k == q {
            continue;
        }
        if common.iter().all(|&i| r.zero[i]) {
            return false;
        }
    }
    true
}

// --- construction ------------------------------------------------------------

impl Polytope {
    pub fn empty(dim: usize) -> Self {
        Polytope {
            dim,
            adim: None,
            vertices: Vec::new(),
            halfspaces: vec![Halfspace::new(zeros(dim), -Rat::one())],
            n_facets: 0,
        }
    }

    pub fn from_vertices(dim: usize, verts: &[QVec]) -> Result<Self> {
        for v in verts {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
        }
        let mut vs: Vec<QVec> = Vec::new();
        for v in verts {
            if !vs.iter().any(|w| w == v) {
                vs.push(v.clone());
            }
        }
        if vs.is_empty() {
            return Ok(Self::empty(dim));
        }
        // strip non-extreme points so vertex lists are canonical
        let hull = convex_hull_structure(dim, &vs)?;
        Ok(hull)
    }

    pub fn from_halfspaces(dim: usize, hs: &[Halfspace]) -> Result<Self> {
        for h in hs {
            if h.normal.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: h.normal.len() });
            }
        }
        // homogenize: a.u <= c  becomes  (-a, c).(u, t) >= 0, plus t >= 0
        let mut rows: Vec<QVec> = Vec::new();
        for h in hs {
            let mut r: QVec = h.normal.iter().map(|x| -x.clone()).collect();
            r.push(h.offset.clone());
            rows.push(r);
        }
        let mut t_row = zeros(dim);
        t_row.push(Rat::one());
        rows.push(t_row);
        let rays = match dd_cone(&rows, dim + 1) {
            Ok(r) => r,
            Err(Error::RankDeficient(_)) => return Err(Error::Unbounded),
            Err(e) => return Err(e),
        };
        let mut verts: Vec<QVec> = Vec::new();
        for r in &rays {
            let t = &r[dim];
            if t.is_zero() {
                if !is_zero_vec(&r[..dim]) {
                    return Err(Error::Unbounded);
                }
                continue;
            }
            let inv = t.recip();
            verts.push(r[..dim].iter().map(|x| x * &inv).collect());
        }
        if verts.is_empty() {
            return Ok(Self::empty(dim));
        }
        Self::from_vertices(dim, &verts)
    }

    pub fn point(p: &[Rat]) -> Self {
        Self::from_vertices(p.len(), &[p.to_vec()]).expect("single point")
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Affine dimension, with -1 for the empty polytope.
    pub fn affine_dim(&self) -> isize {
        match self.adim {
            None => -1,
            Some(d) => d as isize,
        }
    }

    pub fn contains(&self, u: &[Rat]) -> bool {
        !self.is_empty() && self.halfspaces.iter().all(|h| h.contains(u))
    }

    /// Membership in the relative interior: all affine-hull equalities hold
    /// and every facet inequality is strict. A 0-dimensional polytope's
    /// relative interior is the point itself.
    pub fn relint_contains(&self, u: &[Rat]) -> bool {
        if self.is_empty() {
            return false;
        }
        for (i, h) in self.halfspaces.iter().enumerate() {
            let v = dot(&h.normal, u);
            if i < self.n_facets {
                if v >= h.offset {
                    return false;
                }
            } else if v != h.offset {
                return false;
            }
        }
        true
    }

    pub fn eq_as_set(&self, other: &Polytope) -> bool {
        self.dim == other.dim && self.vertices == other.vertices
    }

    pub fn translate(&self, t: &[Rat]) -> Polytope {
        if self.is_empty() {
            return self.clone();
        }
        let verts: Vec<QVec> = self.vertices.iter().map(|v| vadd(v, t)).collect();
        Self::from_vertices(self.dim, &verts).expect("translate preserves validity")
    }

    /// Image under an affine map; the result lives in the map's codomain.
    pub fn affine_image(&self, f: &AffineMap) -> Result<Polytope> {
        let out_dim = f.mat.rows;
        if self.is_empty() {
            return Ok(Polytope::empty(out_dim));
        }
        let verts: Vec<QVec> = self.vertices.iter().map(|v| f.apply(v)).collect();
        Self::from_vertices(out_dim, &verts)
    }

    pub fn dilate(&self, s: &Rat) -> Polytope {
        if self.is_empty() {
            return self.clone();
        }
        let verts: Vec<QVec> = self.vertices.iter().map(|v| vscale(s, v)).collect();
        Self::from_vertices(self.dim, &verts).expect("dilation preserves validity")
    }

    pub fn intersect(&self, other: &Polytope) -> Result<Polytope> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if self.is_empty() || other.is_empty() {
            return Ok(Polytope::empty(self.dim));
        }
        let mut hs = self.halfspaces.clone();
        hs.extend(other.halfspaces.iter().cloned());
        Self::from_halfspaces(self.dim, &hs)
    }

    /// Centroid of the vertex set (an interior point of the relative
    /// interior for nonempty polytopes).
    pub fn vertex_centroid(&self) -> Option<QVec> {
        if self.is_empty() {
            return None;
        }
        let n = Rat::from_integer(crate::rat::Int::from(self.vertices.len() as i64));
        let mut s = zeros(self.dim);
        for v in &self.vertices {
            s = vadd(&s, v);
        }
        Some(vscale(&n.recip(), &s))
    }

    /// Orthonormal-free basis of the direction space of the affine hull
    /// (differences of vertices, reduced to a basis).
    pub fn direction_basis(&self) -> Vec<QVec> {
        if self.vertices.len() <= 1 {
            return Vec::new();
        }
        let v0 = &self.vertices[0];
        let diffs: Vec<QVec> =
            self.vertices[1..].iter().map(|v| vsub(v, v0)).collect();
        row_space_basis(&diffs)
    }

    /// Full-dimensional volume in `R^dim`; zero for lower-dimensional sets.
    pub fn volume(&self) -> Rat {
        if self.adim != Some(self.dim) {
            return Rat::zero();
        }
        simplex_volume_sum(&self.vertices, self.dim)
    }

    /// Volume inside the affine hull, measured against the given basis of
    /// the direction space (unit cell of the basis has volume 1).
    pub fn volume_in_basis(&self, basis: &[QVec]) -> Result<Rat> {
        let d = match self.adim {
            None => return Ok(Rat::zero()),
            Some(d) => d,
        };
        if d == 0 {
            return Ok(Rat::zero());
        }
        if basis.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: basis.len() });
        }
        let bmat = QMat::from_cols(basis);
        let v0 = &self.vertices[0];
        let mut coords: Vec<QVec> = Vec::with_capacity(self.vertices.len());
        for v in &self.vertices {
            let rhs = vsub(v, v0);
            let x = bmat.solve(&rhs).ok_or(Error::LatticeMismatch)?;
            if bmat.mul_vec(&x) != rhs {
                return Err(Error::LatticeMismatch);
            }
            coords.push(x);
        }
        Ok(simplex_volume_sum(&coords, d))
    }

    /// Facets as polytopes, one per leading halfspace.
    pub fn facets(&self) -> Vec<Polytope> {
        (0..self.n_facets)
            .map(|i| {
                let h = &self.halfspaces[i];
                let verts: Vec<QVec> = self
                    .vertices
                    .iter()
                    .filter(|v| h.active_at(v))
                    .cloned()
                    .collect();
                Polytope::from_vertices(self.dim, &verts).expect("facet is a polytope")
            })
            .collect()
    }

    /// Vertex-index sets of the facets.
    fn facet_vertex_sets(&self) -> Vec<BTreeSet<usize>> {
        (0..self.n_facets)
            .map(|i| {
                let h = &self.halfspaces[i];
                self.vertices
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| h.active_at(v))
                    .map(|(k, _)| k)
                    .collect()
            })
            .collect()
    }

    /// The full face lattice, including the empty face and the polytope.
    pub fn face_lattice(&self) -> FaceLattice {
        let mut sets: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
        let full: BTreeSet<usize> = (0..self.vertices.len()).collect();
        sets.insert(full.clone());
        sets.insert(BTreeSet::new());
        let facets = self.facet_vertex_sets();
        for f in &facets {
            sets.insert(f.clone());
        }
        // close under intersection
        loop {
            let cur: Vec<BTreeSet<usize>> = sets.iter().cloned().collect();
            let before = sets.len();
            for i in 0..cur.len() {
                for j in i + 1..cur.len() {
                    let inter: BTreeSet<usize> =
                        cur[i].intersection(&cur[j]).copied().collect();
                    sets.insert(inter);
                }
            }
            if sets.len() == before {
                break;
            }
        }
        let faces: Vec<Face> = sets
            .into_iter()
            .map(|s| {
                let pts: Vec<QVec> =
                    s.iter().map(|&k| self.vertices[k].clone()).collect();
                let dim = if pts.is_empty() {
                    -1
                } else {
                    affine_dim_of_points(&pts) as isize
                };
                Face { vertex_indices: s, dim }
            })
            .collect();
        FaceLattice { faces }
    }

    /// Whether `self` coincides with a face of `other`.
    pub fn is_face_of(&self, other: &Polytope) -> bool {
        if self.dim != other.dim {
            return false;
        }
        if self.is_empty() {
            return true;
        }
        if !self.vertices.iter().all(|v| other.contains(v)) {
            return false;
        }
        // active facets of `other` on all of self
        let mut hs: Vec<Halfspace> = other.halfspaces.clone();
        for i in 0..other.n_facets {
            let h = &other.halfspaces[i];
            if self.vertices.iter().all(|v| h.active_at(v)) {
                hs.push(Halfspace::new(
                    h.normal.iter().map(|x| -x.clone()).collect(),
                    -h.offset.clone(),
                ));
            }
        }
        match Polytope::from_halfspaces(self.dim, &hs) {
            Ok(face) => face.eq_as_set(self),
            Err(_) => false,
        }
    }
}

/// A face recorded by its vertex indices and affine dimension (-1 = empty).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    pub vertex_indices: BTreeSet<usize>,
    pub dim: isize,
}

#[derive(Clone, Debug)]
pub struct FaceLattice {
    pub faces: Vec<Face>,
}

impl FaceLattice {
    /// Alternating sum of (-1)^dim over all faces, empty face included.
    /// Zero for every nonempty polytope (Euler relation).
    pub fn euler_sum(&self) -> i64 {
        self.faces
            .iter()
            .map(|f| if f.dim.rem_euclid(2) == 0 { 1 } else { -1 })
            .sum()
    }

    pub fn faces_of_dim(&self, d: isize) -> Vec<&Face> {
        self.faces.iter().filter(|f| f.dim == d).collect()
    }
}

// --- helpers -----------------------------------------------------------------

/// Basis of the row space of the given vectors.
pub fn row_space_basis(rows: &[QVec]) -> Vec<QVec> {
    if rows.is_empty() {
        return Vec::new();
    }
    let m = QMat::from_rows(rows);
    let (r, pivots) = m.rref();
    (0..pivots.len()).map(|i| r.row(i)).collect()
}

pub fn affine_dim_of_points(pts: &[QVec]) -> usize {
    if pts.len() <= 1 {
        return 0;
    }
    let diffs: Vec<QVec> = pts[1..].iter().map(|p| vsub(p, &pts[0])).collect();
    QMat::from_rows(&diffs).rank()
}

/// Sum of |det|/d! over a boundary triangulation from the lex-min vertex.
fn simplex_volume_sum(verts: &[QVec], d: usize) -> Rat {
    let simplices = triangulate(verts, d);
    let mut total = Rat::zero();
    let mut dfact = Rat::one();
    for k in 1..=d {
        dfact *= Rat::from_integer(crate::rat::Int::from(k as i64));
    }
    for s in &simplices {
        let cols: Vec<QVec> = s[1..].iter().map(|v| vsub(v, &s[0])).collect();
        total += QMat::from_cols(&cols).det().abs();
    }
    total / dfact
}

/// Triangulates a full-dimensional polytope given by vertices in `R^d` into
/// d-simplices (each returned as d+1 points). Assumes the points are in
/// general position no stronger than convex position (they are vertices).
fn triangulate(verts: &[QVec], d: usize) -> Vec<Vec<QVec>> {
    if verts.len() == d + 1 {
        return vec![verts.to_vec()];
    }
    if d == 1 {
        let mut sorted = verts.to_vec();
        sorted.sort_by(|a, b| lex_cmp(a, b));
        return vec![vec![sorted[0].clone(), sorted[sorted.len() - 1].clone()]];
    }
    let p = Polytope::from_vertices(d, verts).expect("triangulate input");
    let v0 = p
        .vertices
        .iter()
        .min_by(|a, b| lex_cmp(a, b))
        .expect("nonempty")
        .clone();
    let mut out = Vec::new();
    for facet in p.facets() {
        if facet.vertices.iter().any(|v| *v == v0) {
            continue;
        }
        // coordinates of the facet inside its hyperplane
        let basis = facet.direction_basis();
        let bmat = QMat::from_cols(&basis);
        let base = facet.vertices[0].clone();
        let coords: Vec<QVec> = facet
            .vertices
            .iter()
            .map(|v| bmat.solve(&vsub(v, &base)).expect("facet coords"))
            .collect();
        for s in triangulate(&coords, d - 1) {
            let mut simplex: Vec<QVec> = s
                .iter()
                .map(|c| vadd(&base, &bmat.mul_vec(c)))
                .collect();
            simplex.push(v0.clone());
            out.push(simplex);
        }
    }
    out
}

/// Builds the canonical polytope structure from a spanning point set:
/// extreme points, facet inequalities via the polar dual in affine-hull
/// coordinates, and affine-hull equalities.
fn convex_hull_structure(dim: usize, pts: &[QVec]) -> Result<Polytope> {
    // affine hull
    let p0 = pts[0].clone();
    let diffs: Vec<QVec> = pts[1..].iter().map(|p| vsub(p, &p0)).collect();
    let basis = row_space_basis(&diffs);
    let k = basis.len();
    // equalities: left kernel of the direction space
    let mut equalities: Vec<Halfspace> = Vec::new();
    if k < dim {
        let normal_rows = if basis.is_empty() {
            QMat::identity(dim).kernel() // kernel of nothing: whole space
        } else {
            QMat::from_rows(&basis).kernel()
        };
        let normals: Vec<QVec> = if basis.is_empty() {
            (0..dim)
                .map(|i| {
                    let mut e = zeros(dim);
                    e[i] = Rat::one();
                    e
                })
                .collect()
        } else {
            normal_rows
        };
        for f in normals {
            let c = dot(&f, &p0);
            equalities.push(Halfspace::new(f.clone(), c.clone()).normalized());
            equalities.push(
                Halfspace::new(f.iter().map(|x| -x.clone()).collect(), -c).normalized(),
            );
        }
    }
    if k == 0 {
        return Ok(Polytope {
            dim,
            adim: Some(0),
            vertices: vec![p0],
            halfspaces: equalities,
            n_facets: 0,
        });
    }
    // coordinates in the affine hull
    let bmat = QMat::from_cols(&basis);
    let btb = bmat.transpose().mul_mat(&bmat);
    let btb_inv = btb.inverse()?;
    let to_coords = |u: &[Rat]| -> QVec {
        btb_inv.mul_vec(&bmat.transpose().mul_vec(&vsub(u, &p0)))
    };
    let coords: Vec<QVec> = pts.iter().map(|u| to_coords(u)).collect();
    // centroid is interior in the hull coordinates
    let nrat = Rat::from_integer(crate::rat::Int::from(coords.len() as i64));
    let mut c = zeros(k);
    for x in &coords {
        c = vadd(&c, x);
    }
    let c = vscale(&nrat.recip(), &c);
    let shifted: Vec<QVec> = coords.iter().map(|x| vsub(x, &c)).collect();
    // polar dual: { y : y . w <= 1 for all shifted points w }
    let polar_hs: Vec<Halfspace> =
        shifted.iter().map(|w| Halfspace::new(w.clone(), Rat::one())).collect();
    let mut rows: Vec<QVec> = Vec::new();
    for h in &polar_hs {
        let mut r: QVec = h.normal.iter().map(|x| -x.clone()).collect();
        r.push(h.offset.clone());
        rows.push(r);
    }
    let mut t_row = zeros(k);
    t_row.push(Rat::one());
    rows.push(t_row);
    let rays = dd_cone(&rows, k + 1).map_err(|e| match e {
        Error::RankDeficient(_) => Error::NotConvex(
            "point set does not span its affine hull".to_owned(),
        ),
        other => other,
    })?;
    let mut polar_verts: Vec<QVec> = Vec::new();
    for r in &rays {
        let t = &r[k];
        if t.is_zero() {
            // polar of a bounded set with interior origin is bounded
            continue;
        }
        let inv = t.recip();
        polar_verts.push(r[..k].iter().map(|x| x * &inv).collect());
    }
    // each polar vertex y gives the primal facet  y.(x - c) <= 1
    let mut facet_hs_coords: Vec<(QVec, Rat)> = Vec::new();
    for y in &polar_verts {
        let off = Rat::one() + dot(y, &c);
        facet_hs_coords.push((y.clone(), off));
    }
    // extreme points: those attaining equality on at least k facets whose
    // normals span; equivalently those not expressible as a convex
    // combination. Cheap test: x is a vertex iff its active facet normals
    // have rank k.
    let mut extreme: Vec<usize> = Vec::new();
    for (i, x) in coords.iter().enumerate() {
        let active: Vec<QVec> = facet_hs_coords
            .iter()
            .filter(|(n, o)| dot(n, x) == *o)
            .map(|(n, _)| n.clone())
            .collect();
        if !active.is_empty() && QMat::from_rows(&active).rank() == k {
            extreme.push(i);
        }
    }
    let mut verts: Vec<QVec> = extreme.iter().map(|&i| pts[i].clone()).collect();
    verts.sort_by(|a, b| lex_cmp(a, b));
    verts.dedup();
    // map facet inequalities back to ambient coordinates:
    // y . coords(u) <= off  with coords(u) = btb_inv bmat^T (u - p0)
    let back = btb_inv.mul_mat(&bmat.transpose());
    let mut halfspaces: Vec<Halfspace> = Vec::new();
    for (y, off) in &facet_hs_coords {
        let a = back.transpose().mul_vec(y);
        let c = off + dot(&a, &p0);
        halfspaces.push(Halfspace::new(a, c).normalized());
    }
    halfspaces.sort_by(|a, b| {
        lex_cmp(&a.normal, &b.normal).then_with(|| a.offset.cmp(&b.offset))
    });
    halfspaces.dedup();
    let n_facets = halfspaces.len();
    halfspaces.extend(equalities);
    Ok(Polytope { dim, adim: Some(k), vertices: verts, halfspaces, n_facets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rint};

    fn unit_square() -> Polytope {
        Polytope::from_vertices(
            2,
            &[
                vec![rint(0), rint(0)],
                vec![rint(1), rint(0)],
                vec![rint(0), rint(1)],
                vec![rint(1), rint(1)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn square_roundtrip() {
        let s = unit_square();
        assert_eq!(s.adim, Some(2));
        assert_eq!(s.vertices.len(), 4);
        assert_eq!(s.n_facets, 4);
        assert_eq!(s.volume(), rint(1));
        let back = Polytope::from_halfspaces(2, &s.halfspaces).unwrap();
        assert!(back.eq_as_set(&s));
    }

    #[test]
    fn interior_point_strips_to_hull() {
        let p = Polytope::from_vertices(
            2,
            &[
                vec![rint(0), rint(0)],
                vec![rint(2), rint(0)],
                vec![rint(0), rint(2)],
                vec![rat(1, 2), rat(1, 2)],
            ],
        )
        .unwrap();
        assert_eq!(p.vertices.len(), 3);
        assert_eq!(p.volume(), rint(2));
    }

    #[test]
    fn lower_dimensional_segment() {
        let seg = Polytope::from_vertices(
            3,
            &[vec![rint(0), rint(0), rint(0)], vec![rint(2), rint(2), rint(0)]],
        )
        .unwrap();
        assert_eq!(seg.adim, Some(1));
        assert_eq!(seg.volume(), rint(0));
        let basis = seg.direction_basis();
        assert_eq!(basis.len(), 1);
        let rel = seg.volume_in_basis(&basis).unwrap();
        assert!(rel > rint(0));
        assert!(seg.relint_contains(&[rint(1), rint(1), rint(0)]));
        assert!(!seg.relint_contains(&[rint(0), rint(0), rint(0)]));
        assert!(!seg.relint_contains(&[rint(1), rint(0), rint(0)]));
    }

    #[test]
    fn unbounded_detected() {
        let hs = vec![Halfspace::new(vec![rint(-1), rint(0)], rint(0))];
        assert!(matches!(
            Polytope::from_halfspaces(2, &hs),
            Err(Error::Unbounded)
        ));
    }

    #[test]
    fn empty_intersection() {
        let a = unit_square();
        let b = a.translate(&[rint(5), rint(5)]);
        let c = a.intersect(&b).unwrap();
        assert!(c.is_empty());
        assert_eq!(c.affine_dim(), -1);
    }

    #[test]
    fn cube_face_lattice_and_euler() {
        let mut verts = Vec::new();
        for i in 0..8 {
            verts.push(vec![
                rint((i & 1) as i64),
                rint(((i >> 1) & 1) as i64),
                rint(((i >> 2) & 1) as i64),
            ]);
        }
        let cube = Polytope::from_vertices(3, &verts).unwrap();
        assert_eq!(cube.volume(), rint(1));
        assert_eq!(cube.n_facets, 6);
        let fl = cube.face_lattice();
        assert_eq!(fl.faces_of_dim(0).len(), 8);
        assert_eq!(fl.faces_of_dim(1).len(), 12);
        assert_eq!(fl.faces_of_dim(2).len(), 6);
        assert_eq!(fl.euler_sum(), 0);
    }

    #[test]
    fn simplex_volume_and_faces() {
        let t = Polytope::from_vertices(
            3,
            &[
                vec![rint(0), rint(0), rint(0)],
                vec![rint(1), rint(0), rint(0)],
                vec![rint(0), rint(1), rint(0)],
                vec![rint(0), rint(0), rint(1)],
            ],
        )
        .unwrap();
        assert_eq!(t.volume(), rat(1, 6));
        assert_eq!(t.face_lattice().euler_sum(), 0);
        let edge = Polytope::from_vertices(
            3,
            &[vec![rint(0), rint(0), rint(0)], vec![rint(1), rint(0), rint(0)]],
        )
        .unwrap();
        assert!(edge.is_face_of(&t));
        let not_face = Polytope::from_vertices(
            3,
            &[vec![rint(0), rint(0), rint(0)], vec![rat(1, 2), rat(1, 2), rint(0)]],
        )
        .unwrap();
        assert!(!not_face.is_face_of(&t));
    }

    #[test]
    fn is_face_of_requires_whole_face() {
        let s = unit_square();
        // half of an edge is contained in the boundary but is not a face
        let half_edge = Polytope::from_vertices(
            2,
            &[vec![rint(0), rint(0)], vec![rat(1, 2), rint(0)]],
        )
        .unwrap();
        assert!(!half_edge.is_face_of(&s));
        let edge = Polytope::from_vertices(
            2,
            &[vec![rint(0), rint(0)], vec![rint(1), rint(0)]],
        )
        .unwrap();
        assert!(edge.is_face_of(&s));
        let vertex = Polytope::point(&[rint(1), rint(1)]);
        assert!(vertex.is_face_of(&s));
        assert!(s.is_face_of(&s));
    }
}
