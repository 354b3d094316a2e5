//! Lattice-periodic rational polytopal decompositions of `R^n`, i.e. finite
//! polytopal decompositions of the torus `R^n / Λ`.
//!
//! Cells are stored as canonical representatives: each maximal cell is
//! translated so that its vertex centroid lies in the fundamental cube
//! `[0,1)^n` in lattice coordinates. A decomposition may carry a global
//! translation with symbolic (value-group extension) entries; the polytope
//! data itself stays rational.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::gamma::Gamma;
use crate::lattice::Lattice;
use crate::mat::QMat;
use crate::polytope::{row_space_basis, Polytope};
use crate::rat::{ceil_rat, floor_rat, vadd, vsub, QVec, Rat};

#[derive(Clone, Debug)]
pub struct PeriodicDecomposition {
    pub n: usize,
    pub lattice: Lattice,
    /// Canonical representatives of the maximal cells modulo the lattice.
    pub cells: Vec<Polytope>,
    /// Global translation applied to every cell; entries may be symbolic.
    pub shift: Vec<Gamma>,
}

/// Outcome of a structural check; `issues` is empty iff the input is valid.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.issues.is_empty()
    }
}

/// One stratum of the Mumford model attached to a decomposition: an open
/// face class of the decomposition together with the stratum dimension.
#[derive(Clone, Debug)]
pub struct StratumNode {
    pub face: Polytope,
    pub dim_face: isize,
    pub dim_stratum: isize,
}

/// Strata poset; `order` lists pairs `(i, j)` with face `i` a proper face of
/// face `j` up to lattice translation (so stratum `j` lies in the closure of
/// stratum `i`).
#[derive(Clone, Debug)]
pub struct MumfordStrata {
    pub nodes: Vec<StratumNode>,
    pub order: Vec<(usize, usize)>,
}

/// A lattice-periodic, face-closed family of rational polytopes, stored by
/// representatives modulo the lattice.
#[derive(Clone, Debug)]
pub struct SigmaFamily {
    pub n: usize,
    pub members: Vec<Polytope>,
}

impl SigmaFamily {
    /// Builds the family from generators, closing under taking faces.
    pub fn new(n: usize, generators: &[Polytope]) -> Result<Self> {
        let mut members: Vec<Polytope> = Vec::new();
        for g in generators {
            if g.dim != n {
                return Err(Error::DimensionMismatch { expected: n, got: g.dim });
            }
            if g.is_empty() {
                continue;
            }
            for face in all_faces(g) {
                if !members.iter().any(|m| m.eq_as_set(&face)) {
                    members.push(face);
                }
            }
        }
        Ok(SigmaFamily { n, members })
    }
}

/// All nonempty faces of a polytope (including itself), as polytopes.
pub fn all_faces(p: &Polytope) -> Vec<Polytope> {
    let fl = p.face_lattice();
    fl.faces
        .iter()
        .filter(|f| !f.vertex_indices.is_empty())
        .map(|f| {
            let pts: Vec<QVec> =
                f.vertex_indices.iter().map(|&k| p.vertices[k].clone()).collect();
            Polytope::from_vertices(p.dim, &pts).expect("face of polytope")
        })
        .collect()
}

impl PeriodicDecomposition {
    pub fn new(lattice: Lattice, cells: Vec<Polytope>) -> Result<Self> {
        let n = lattice.ambient;
        if lattice.rank() != n {
            return Err(Error::RankDeficient(String::from(
                "periodic decomposition needs a full-rank lattice",
            )));
        }
        let mut dec = PeriodicDecomposition {
            n,
            lattice,
            cells: Vec::new(),
            shift: vec![Gamma::zero(); n],
        };
        for c in cells {
            if c.dim != n {
                return Err(Error::DimensionMismatch { expected: n, got: c.dim });
            }
            if c.is_empty() {
                continue;
            }
            let canon = dec.canonicalize(&c);
            if !dec.cells.iter().any(|p| p.eq_as_set(&canon)) {
                dec.cells.push(canon);
            }
        }
        Ok(dec)
    }

    pub fn with_shift(mut self, shift: Vec<Gamma>) -> Result<Self> {
        if shift.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: shift.len() });
        }
        self.shift = shift;
        Ok(self)
    }

    pub fn has_rational_shift(&self) -> bool {
        self.shift.iter().all(|g| g.is_rational())
    }

    pub fn rational_shift(&self) -> Result<QVec> {
        self.shift.iter().map(|g| g.to_rat()).collect()
    }

    /// Translates a cell by a lattice vector so its vertex centroid lies in
    /// `[0,1)^n` in lattice coordinates.
    pub fn canonicalize(&self, p: &Polytope) -> Polytope {
        let c = p.vertex_centroid().expect("nonempty cell");
        let binv = self
            .lattice
            .basis_matrix()
            .inverse()
            .expect("full-rank lattice");
        let x = binv.mul_vec(&c);
        let k: QVec = x.iter().map(|v| Rat::from_integer(floor_rat(v))).collect();
        let t = self.lattice.basis_matrix().mul_vec(&k);
        p.translate(&t.iter().map(|v| -v.clone()).collect::<QVec>())
    }

    /// Lattice coordinates of a point.
    fn lattice_coords(&self, u: &[Rat]) -> QVec {
        self.lattice
            .basis_matrix()
            .inverse()
            .expect("full-rank lattice")
            .mul_vec(u)
    }

    /// Integer translation vectors `k` such that `q + B k` can intersect `p`
    /// (bounding-box bound in lattice coordinates).
    fn translate_range(&self, p: &Polytope, q: &Polytope) -> Vec<QVec> {
        let coords = |poly: &Polytope| -> Vec<QVec> {
            poly.vertices.iter().map(|v| self.lattice_coords(v)).collect()
        };
        let (pmin, pmax) = bbox(&coords(p), self.n);
        let (qmin, qmax) = bbox(&coords(q), self.n);
        let lo: Vec<Rat> =
            (0..self.n).map(|i| Rat::from_integer(ceil_rat(&(&pmin[i] - &qmax[i])))).collect();
        let hi: Vec<Rat> =
            (0..self.n).map(|i| Rat::from_integer(floor_rat(&(&pmax[i] - &qmin[i])))).collect();
        let mut out = Vec::new();
        let mut cur: QVec = lo.clone();
        'outer: loop {
            out.push(cur.clone());
            let mut i = 0;
            loop {
                cur[i] += Rat::one();
                if cur[i] <= hi[i] {
                    break;
                }
                cur[i] = lo[i].clone();
                i += 1;
                if i == self.n {
                    break 'outer;
                }
            }
        }
        out
    }

    /// All lattice translates of `q` that can meet `p`, as translated cells.
    pub(crate) fn overlapping_translates(
        &self,
        p: &Polytope,
        q: &Polytope,
    ) -> Vec<(QVec, Polytope)> {
        self.translate_range(p, q)
            .into_iter()
            .map(|k| {
                let t = self.lattice.basis_matrix().mul_vec(&k);
                let moved = q.translate(&t);
                (t, moved)
            })
            .collect()
    }

    /// Face-to-face, covering, and dimension checks.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (i, c) in self.cells.iter().enumerate() {
            if c.adim != Some(self.n) {
                report.issues.push(format!(
                    "cell {} is not full-dimensional (affine dim {})",
                    i,
                    c.affine_dim()
                ));
            }
        }
        if !report.ok() {
            return report;
        }
        // covering by volume
        let mut total = Rat::zero();
        for c in &self.cells {
            total += c.volume();
        }
        let covol = self.lattice.covolume().expect("full rank");
        if total != covol {
            report.issues.push(format!(
                "covering volume mismatch: cells sum to {} but covolume is {}",
                total, covol
            ));
        }
        // face-to-face across all interacting translates
        for i in 0..self.cells.len() {
            for j in 0..self.cells.len() {
                for (t, moved) in
                    self.overlapping_translates(&self.cells[i], &self.cells[j])
                {
                    if i == j && t.iter().all(|x| x.is_zero()) {
                        continue;
                    }
                    let inter = match self.cells[i].intersect(&moved) {
                        Ok(p) => p,
                        Err(e) => {
                            report
                                .issues
                                .push(format!("intersection failed on cells {i},{j}: {e}"));
                            continue;
                        }
                    };
                    if inter.is_empty() {
                        continue;
                    }
                    if i == j && inter.eq_as_set(&self.cells[i]) {
                        report.issues.push(format!(
                            "cell {i} overlaps its own lattice translate entirely"
                        ));
                        continue;
                    }
                    if !inter.is_face_of(&self.cells[i]) || !inter.is_face_of(&moved) {
                        report.issues.push(format!(
                            "cells {i} and {j} (translated) meet in a non-face"
                        ));
                    }
                }
            }
        }
        report
    }

    /// Common refinement: all full-dimensional intersections of cells of
    /// `self` with lattice translates of cells of `other`.
    pub fn refine(&self, other: &PeriodicDecomposition) -> Result<PeriodicDecomposition> {
        if !self.lattice.eq_lattice(&other.lattice) {
            return Err(Error::LatticeMismatch);
        }
        if self.shift != other.shift {
            // cells are stored unshifted, so a differing rational shift can
            // be folded into the second factor's cells
            let ds: Vec<Gamma> = other
                .shift
                .iter()
                .zip(&self.shift)
                .map(|(a, b)| a.sub(b))
                .collect();
            if !ds.iter().all(|g| g.is_rational()) {
                return Err(Error::SymbolicValue);
            }
            let dv: QVec = ds.iter().map(|g| g.to_rat().unwrap()).collect();
            let moved: Vec<Polytope> =
                other.cells.iter().map(|c| c.translate(&dv)).collect();
            let other2 = PeriodicDecomposition::new(other.lattice.clone(), moved)?
                .with_shift(self.shift.clone())?;
            return self.refine(&other2);
        }
        let mut out_cells: Vec<Polytope> = Vec::new();
        for p in &self.cells {
            for q in &other.cells {
                for (_t, moved) in self.overlapping_translates(p, q) {
                    let inter = p.intersect(&moved)?;
                    if inter.adim == Some(self.n) {
                        let canon = self.canonicalize(&inter);
                        if !out_cells.iter().any(|c| c.eq_as_set(&canon)) {
                            out_cells.push(canon);
                        }
                    }
                }
            }
        }
        PeriodicDecomposition::new(self.lattice.clone(), out_cells)
            .and_then(|d| d.with_shift(self.shift.clone()))
    }

    /// Scales every cell by `1/m`; the lattice is unchanged, so the cell
    /// count per class multiplies by `m^n`.
    pub fn scale(&self, m: u32) -> Result<PeriodicDecomposition> {
        if m == 0 {
            return Err(Error::Invalid(String::from("scale factor must be positive")));
        }
        let mrat = Rat::from_integer(crate::rat::Int::from(m as i64));
        let inv = mrat.recip();
        let mut out_cells = Vec::new();
        // representatives of Λ / mΛ
        let mut k = vec![Rat::zero(); self.n];
        loop {
            let t = self.lattice.basis_matrix().mul_vec(&k);
            for c in &self.cells {
                out_cells.push(c.translate(&t).dilate(&inv));
            }
            let mut i = 0;
            loop {
                if i == self.n {
                    let dec =
                        PeriodicDecomposition::new(self.lattice.clone(), out_cells)?;
                    let shift: Vec<Gamma> =
                        self.shift.iter().map(|g| g.scale(&inv)).collect();
                    return dec.with_shift(shift);
                }
                k[i] += Rat::one();
                if k[i] < mrat {
                    break;
                }
                k[i] = Rat::zero();
                i += 1;
            }
        }
    }

    /// Maximal cells (as actual translates) incident to the vertex `u`.
    pub fn star(&self, u: &[Rat]) -> Result<Vec<Polytope>> {
        if !self.has_rational_shift() {
            return Err(Error::SymbolicValue);
        }
        let s = self.rational_shift()?;
        let u0 = vsub(&u.to_vec(), &s);
        let probe = Polytope::point(&u0);
        let mut out = Vec::new();
        let mut is_vertex = false;
        for c in &self.cells {
            for (_t, moved) in self.overlapping_translates(&probe, c) {
                if moved.contains(&u0) {
                    if moved.vertices.iter().any(|v| v == &u0) {
                        is_vertex = true;
                    }
                    out.push(moved.translate(&s));
                }
            }
        }
        if !is_vertex {
            return Err(Error::NotAVertex);
        }
        Ok(out)
    }

    /// All face classes of the decomposition modulo the lattice, each as a
    /// canonical representative.
    pub fn face_classes(&self) -> Vec<Polytope> {
        let mut out: Vec<Polytope> = Vec::new();
        for c in &self.cells {
            for f in all_faces(c) {
                let canon = self.canonicalize(&f);
                if !out.iter().any(|p| p.eq_as_set(&canon)) {
                    out.push(canon);
                }
            }
        }
        out
    }

    /// Strata poset of the Mumford model of an abelian variety of dimension
    /// `dim_a >= n`: one node per open face class, with
    /// `dim_stratum = dim_a - dim(face)`.
    pub fn strata_poset(&self, dim_a: usize) -> Result<MumfordStrata> {
        if dim_a < self.n {
            return Err(Error::Invalid(format!(
                "abelian dimension {dim_a} below torus rank {}",
                self.n
            )));
        }
        let faces = self.face_classes();
        let nodes: Vec<StratumNode> = faces
            .iter()
            .map(|f| StratumNode {
                face: f.clone(),
                dim_face: f.affine_dim(),
                dim_stratum: dim_a as isize - f.affine_dim(),
            })
            .collect();
        let mut order = Vec::new();
        for (i, fi) in faces.iter().enumerate() {
            for (j, fj) in faces.iter().enumerate() {
                if i == j || fi.affine_dim() >= fj.affine_dim() {
                    continue;
                }
                let mut found = false;
                for (_t, moved) in self.overlapping_translates(fj, fi) {
                    if moved.is_face_of(fj) {
                        found = true;
                        break;
                    }
                }
                if found {
                    order.push((i, j));
                }
            }
        }
        Ok(MumfordStrata { nodes, order })
    }

    /// Whether the (shifted) decomposition is generic for the family: for
    /// every face class of the decomposition and every family member, the
    /// affine hulls span `R^n` when the dimension count allows intersection,
    /// and no lattice translate brings the hulls together otherwise.
    pub fn is_sigma_generic(&self, sigma: &SigmaFamily) -> Result<bool> {
        if sigma.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: sigma.n });
        }
        for delta in self.face_classes() {
            for sg in &sigma.members {
                let dd = delta.affine_dim();
                let ds = sg.affine_dim();
                let d_expected = ds + dd - self.n as isize;
                let u = sg.direction_basis();
                let v = delta.direction_basis();
                let mut joint = u.clone();
                joint.extend(v.iter().cloned());
                let span_dim = if joint.is_empty() {
                    0
                } else {
                    QMat::from_rows(&joint).rank()
                };
                if d_expected >= 0 {
                    if span_dim != self.n {
                        return Ok(false);
                    }
                } else {
                    // hulls must avoid each other for every lattice translate
                    if self.hulls_meet_some_translate(&delta, sg, &joint)? {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Decides whether `A_sigma + lambda` meets `A_delta + shift` for some
    /// lattice vector `lambda`, where the hull directions jointly span the
    /// given subspace.
    fn hulls_meet_some_translate(
        &self,
        delta: &Polytope,
        sg: &Polytope,
        joint_dirs: &[QVec],
    ) -> Result<bool> {
        // offset difference must avoid  Λ + span(joint)  in the quotient
        let perp: Vec<QVec> = if joint_dirs.is_empty() {
            (0..self.n)
                .map(|i| {
                    let mut e = vec![Rat::zero(); self.n];
                    e[i] = Rat::one();
                    e
                })
                .collect()
        } else {
            let basis = row_space_basis(joint_dirs);
            if basis.len() == self.n {
                return Ok(true);
            }
            QMat::from_rows(&basis).kernel()
        };
        let pmat = QMat::from_rows(&perp);
        // symbolic shift components must lie in the span, i.e. die under P
        let mut sym_coeff_vectors: Vec<QVec> = Vec::new();
        let max_terms = self.shift.iter().map(|g| g.coeffs.len()).max().unwrap_or(0);
        for t in 0..max_terms {
            let vt: QVec = self
                .shift
                .iter()
                .map(|g| g.coeffs.get(t).cloned().unwrap_or_else(Rat::zero))
                .collect();
            sym_coeff_vectors.push(vt);
        }
        for vt in &sym_coeff_vectors {
            if pmat.mul_vec(vt).iter().any(|x| !x.is_zero()) {
                // the symbolic part pushes the hull off every rational
                // translate of the family member
                return Ok(false);
            }
        }
        let shift_rat: QVec = self.shift.iter().map(|g| g.rational_part().clone()).collect();
        let diff = vadd(&vsub(&delta.vertices[0], &sg.vertices[0]), &shift_rat);
        let projected = pmat.mul_vec(&diff);
        let gens: Vec<QVec> = (0..self.n)
            .map(|j| pmat.mul_vec(&self.lattice.basis_matrix().col(j)))
            .collect();
        let proj_lattice = Lattice::from_generators(pmat.rows, &gens);
        Ok(proj_lattice.contains(&projected))
    }

    /// Transversality: every actual intersection of a cell face with a
    /// family member (over all lattice translates) is empty or of dimension
    /// `dim(face) + dim(member) - n`. For symbolic shifts this falls back to
    /// genericity, which implies transversality.
    pub fn is_sigma_transversal(&self, sigma: &SigmaFamily) -> Result<bool> {
        if sigma.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: sigma.n });
        }
        if !self.has_rational_shift() {
            return self.is_sigma_generic(sigma);
        }
        let s = self.rational_shift()?;
        for delta in self.face_classes() {
            let moved_delta = delta.translate(&s);
            for sg in &sigma.members {
                let d_expected = sg.affine_dim() + moved_delta.affine_dim() - self.n as isize;
                for (_t, tr) in self.overlapping_translates(&moved_delta, sg) {
                    let inter = moved_delta.intersect(&tr)?;
                    if !inter.is_empty() && inter.affine_dim() != d_expected {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

fn bbox(coords: &[QVec], n: usize) -> (QVec, QVec) {
    let mut mn = coords[0].clone();
    let mut mx = coords[0].clone();
    for c in coords.iter().skip(1) {
        for i in 0..n {
            if c[i] < mn[i] {
                mn[i] = c[i].clone();
            }
            if c[i] > mx[i] {
                mx[i] = c[i].clone();
            }
        }
    }
    let _ = n;
    (mn, mx)
}

/// The standard decomposition of `R / Z` into `[0,1/2]` and `[1/2,1]`.
#[cfg(test)]
fn halves() -> PeriodicDecomposition {
    use crate::rat::{rat, rint};
    let cells = vec![
        Polytope::from_vertices(1, &[vec![rint(0)], vec![rat(1, 2)]]).unwrap(),
        Polytope::from_vertices(1, &[vec![rat(1, 2)], vec![rint(1)]]).unwrap(),
    ];
    PeriodicDecomposition::new(Lattice::standard(1), cells).unwrap()
}
