//! Piecewise-affine model functions on lattice tori: cocycle data, validity
//! and convexity checks, the Delaunay generator, and dual polytopes of
//! vertices together with the periodic dual tiling identity.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::gamma::Gamma;
use crate::lattice::{BilinearForm, Lattice};
use crate::periodic::{PeriodicDecomposition, ValidationReport};
use crate::polytope::{Halfspace, Polytope};
use crate::rat::{ceil_rat, dot, vadd, vsub, Int, QVec, Rat};

/// The 1-cocycle `z_lambda(u) = z_lambda(0) + b(u, lambda)` determining how
/// a model function transforms under lattice translation. `z0` holds the
/// values `z_lambda(0)` on the lattice basis; all other values follow from
/// the quadratic extension rule.
#[derive(Clone, Debug)]
pub struct CocycleData {
    pub b: BilinearForm,
    pub z0: Vec<Gamma>,
}

impl CocycleData {
    pub fn new(b: BilinearForm, z0: Vec<Gamma>) -> Result<Self> {
        if z0.len() != b.dim() {
            return Err(Error::DimensionMismatch { expected: b.dim(), got: z0.len() });
        }
        Ok(CocycleData { b, z0 })
    }

    /// The theta normalization `z_lambda(0) = b(lambda,lambda)/2`.
    pub fn theta(b: BilinearForm, lattice: &Lattice) -> Self {
        let half = Rat::new(Int::one(), Int::from(2));
        let z0 = lattice
            .basis
            .iter()
            .map(|l| Gamma::from_rat(b.eval(l, l) * &half))
            .collect();
        CocycleData { b, z0 }
    }

    /// `z_lambda(0)` for `lambda` with integer coordinates `k` in the
    /// lattice basis, via `z(0) = b(lambda,lambda)/2 + sum k_i (z0_i -
    /// b(l_i,l_i)/2)`; this is the unique extension satisfying
    /// `z_{l+m}(0) = z_l(0) + z_m(0) + b(l,m)`.
    pub fn z_zero(&self, lattice: &Lattice, lambda: &[Rat]) -> Result<Gamma> {
        let bm = lattice.basis_matrix();
        let k = bm.solve(lambda).ok_or(Error::LatticeMismatch)?;
        if bm.mul_vec(&k) != lambda || k.iter().any(|c| !c.denom().is_one()) {
            return Err(Error::LatticeMismatch);
        }
        let half = Rat::new(Int::one(), Int::from(2));
        let mut z = Gamma::from_rat(self.b.eval(lambda, lambda) * &half);
        for (i, ki) in k.iter().enumerate() {
            let li = &lattice.basis[i];
            let lin = self.z0[i]
                .sub(&Gamma::from_rat(self.b.eval(li, li) * &half))
                .scale(ki);
            z = z.add(&lin);
        }
        Ok(z)
    }

    /// `z_lambda(u)`.
    pub fn z(&self, lattice: &Lattice, lambda: &[Rat], u: &[Rat]) -> Result<Gamma> {
        Ok(self
            .z_zero(lattice, lambda)?
            .add(&Gamma::from_rat(self.b.eval(u, lambda))))
    }

    pub fn add(&self, other: &CocycleData) -> Result<CocycleData> {
        if self.b.dim() != other.b.dim() || self.z0.len() != other.z0.len() {
            return Err(Error::DimensionMismatch {
                expected: self.b.dim(),
                got: other.b.dim(),
            });
        }
        Ok(CocycleData {
            b: self.b.add(&other.b),
            z0: self.z0.iter().zip(&other.z0).map(|(a, c)| a.add(c)).collect(),
        })
    }
}

/// A model function: affine pieces `u -> m . u + c` over the maximal cells
/// of a periodic decomposition, extended to all of `R^n` by the cocycle.
#[derive(Clone, Debug)]
pub struct ModelFunction {
    pub dec: PeriodicDecomposition,
    /// One `(slope, offset)` pair per cell of `dec`, in the same order.
    pub pieces: Vec<(QVec, Gamma)>,
    pub cocycle: CocycleData,
}

/// The affine data of a piece transported to the lattice translate
/// `cell + t`: slope `m + B t`, offset adjusted by the cocycle.
fn translated_piece(
    mf: &ModelFunction,
    idx: usize,
    t: &[Rat],
) -> Result<(QVec, Gamma)> {
    let (m, c) = &mf.pieces[idx];
    let bt = mf.cocycle.b.mat.mul_vec(t);
    let slope = vadd(m, &bt);
    // f(x) = m.(x-t) + c + z_t(x-t)  =  (m + Bt).x + c - m.t + z_t(0) - b(t,t)
    let z0 = mf.cocycle.z_zero(&mf.dec.lattice, t)?;
    let off = c
        .add(&z0)
        .add(&Gamma::from_rat(-dot(m, t) - mf.cocycle.b.eval(t, t)));
    Ok((slope, off))
}

impl ModelFunction {
    pub fn new(
        dec: PeriodicDecomposition,
        pieces: Vec<(QVec, Gamma)>,
        cocycle: CocycleData,
    ) -> Result<Self> {
        if pieces.len() != dec.cells.len() {
            return Err(Error::InconsistentInput(String::from(
                "piece count differs from cell count",
            )));
        }
        if cocycle.b.dim() != dec.n {
            return Err(Error::DimensionMismatch { expected: dec.n, got: cocycle.b.dim() });
        }
        Ok(ModelFunction { dec, pieces, cocycle })
    }

    /// Checks slope integrality and continuity across every interior facet
    /// (which also exercises the cocycle on translated neighbours).
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (i, (m, _)) in self.pieces.iter().enumerate() {
            if m.len() != self.dec.n {
                report.issues.push(format!("slope {i} has wrong dimension"));
                continue;
            }
            if m.iter().any(|x| !x.denom().is_one()) {
                report.issues.push(format!("slope {i} is not integral: {:?}", m));
            }
        }
        for (i, j, t, facet) in self.interior_facets() {
            let (si, oi) = match translated_piece(self, i, &crate::rat::zeros(self.dec.n)) {
                Ok(p) => p,
                Err(e) => {
                    report.issues.push(format!("piece {i}: {e}"));
                    continue;
                }
            };
            let (sj, oj) = match translated_piece(self, j, &t) {
                Ok(p) => p,
                Err(e) => {
                    report.issues.push(format!("piece {j}: {e}"));
                    continue;
                }
            };
            let ds = vsub(&si, &sj);
            let doff = oi.sub(&oj);
            // affine functions must agree on the facet
            let x0 = &facet.vertices[0];
            let at_x0 = doff.add(&Gamma::from_rat(dot(&ds, x0)));
            let mut agree = at_x0.is_zero();
            for dir in facet.direction_basis() {
                if !dot(&ds, &dir).is_zero() {
                    agree = false;
                }
            }
            if !agree {
                report.issues.push(format!(
                    "discontinuity across facet between cells {i} and {j}"
                ));
            }
        }
        report
    }

    /// Interior facets as `(i, j, translate, facet)`: the facet is shared by
    /// cell `i` and the translate of cell `j` by `t` (each unordered pair of
    /// incidences appears once per orientation; duplicates are harmless for
    /// checking).
    fn interior_facets(&self) -> Vec<(usize, usize, QVec, Polytope)> {
        let mut out = Vec::new();
        let n = self.dec.n;
        for i in 0..self.dec.cells.len() {
            for j in 0..self.dec.cells.len() {
                for (t, moved) in
                    overlapping_translates(&self.dec, &self.dec.cells[i], &self.dec.cells[j])
                {
                    if i == j && t.iter().all(|x| x.is_zero()) {
                        continue;
                    }
                    if let Ok(inter) = self.dec.cells[i].intersect(&moved) {
                        if inter.adim == Some(n - 1) {
                            out.push((i, j, t, inter));
                        }
                    }
                }
            }
        }
        out
    }

    /// Evaluates `f` at a rational point, reducing modulo the lattice via
    /// the cocycle.
    pub fn evaluate(&self, u: &[Rat]) -> Result<Gamma> {
        if u.len() != self.dec.n {
            return Err(Error::DimensionMismatch { expected: self.dec.n, got: u.len() });
        }
        let shift = self.dec.rational_shift()?;
        let u0 = vsub(&u.to_vec(), &shift);
        let probe = Polytope::point(&u0);
        for (i, cell) in self.dec.cells.iter().enumerate() {
            for (t, moved) in overlapping_translates(&self.dec, &probe, cell) {
                if moved.contains(&u0) {
                    let (slope, off) = translated_piece(self, i, &t)?;
                    return Ok(off.add(&Gamma::from_rat(dot(&slope, &u0))));
                }
            }
        }
        Err(Error::InconsistentInput(String::from(
            "decomposition does not cover the evaluation point",
        )))
    }

    /// Strong polyhedral convexity: across every interior facet the slope
    /// jump is strictly positive in the crossing direction, so the maximal
    /// cells are exactly the maximal affine domains.
    pub fn is_strongly_polyhedral_convex(&self) -> Result<bool> {
        for (i, j, t, _facet) in self.interior_facets() {
            let (si, _) = translated_piece(self, i, &crate::rat::zeros(self.dec.n))?;
            let (sj, _) = translated_piece(self, j, &t)?;
            let ds = vsub(&sj, &si);
            // crossing direction: from cell i's side towards cell j's
            let ci = self.dec.cells[i].vertex_centroid().expect("nonempty");
            let cj = self.dec.cells[j].translate(&t).vertex_centroid().expect("nonempty");
            let dir = vsub(&cj, &ci);
            let jump = dot(&ds, &dir);
            if !jump.is_positive() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Pointwise sum of two model functions on the same decomposition
    /// (tensor product of the underlying bundles).
    pub fn add(&self, other: &ModelFunction) -> Result<ModelFunction> {
        if self.dec.cells.len() != other.dec.cells.len()
            || !self
                .dec
                .cells
                .iter()
                .zip(&other.dec.cells)
                .all(|(a, b)| a.eq_as_set(b))
        {
            return Err(Error::InconsistentInput(String::from(
                "model functions live on different decompositions",
            )));
        }
        let pieces = self
            .pieces
            .iter()
            .zip(&other.pieces)
            .map(|((m1, c1), (m2, c2))| (vadd(m1, m2), c1.add(c2)))
            .collect();
        Ok(ModelFunction {
            dec: self.dec.clone(),
            pieces,
            cocycle: self.cocycle.add(&other.cocycle)?,
        })
    }

    /// Cells of the decomposition (as actual translates) forming the star
    /// of `u`, with their transported affine data.
    /// The model function of the translated divisor: `g(x) = f(x - h)`.
    /// Cells move by `h` (then return to canonical position), slopes are
    /// unchanged, and the cocycle constants pick up `-b(h, lambda_i)`.
    pub fn translate(&self, h: &[Rat]) -> Result<ModelFunction> {
        let n = self.dec.n;
        if h.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: h.len() });
        }
        let basis = self.dec.lattice.basis_matrix();
        let mut z0 = Vec::with_capacity(n);
        for j in 0..n {
            let lam = basis.col(j);
            z0.push(
                self.cocycle.z0[j]
                    .add(&Gamma::from_rat(-self.cocycle.b.eval(h, &lam))),
            );
        }
        let cocycle = CocycleData::new(self.cocycle.b.clone(), z0)?;
        let mut cells = Vec::new();
        let mut pieces = Vec::new();
        for (i, cell) in self.dec.cells.iter().enumerate() {
            let moved = cell.translate(h);
            let (m, c) = &self.pieces[i];
            // g on the moved cell: slope m, offset c - m.h
            let c_moved = c.add(&Gamma::from_rat(-dot(m, h)));
            let rep = self.dec.canonicalize(&moved);
            // lex order of vertices survives translation
            let mu = vsub(&rep.vertices[0], &moved.vertices[0]);
            let bmu = cocycle.b.mat.mul_vec(&mu);
            let slope = vadd(m, &bmu);
            let z0mu = cocycle.z_zero(&self.dec.lattice, &mu)?;
            let off = c_moved
                .add(&z0mu)
                .add(&Gamma::from_rat(-dot(m, &mu) - cocycle.b.eval(&mu, &mu)));
            cells.push(rep);
            pieces.push((slope, off));
        }
        let dec = PeriodicDecomposition::new(self.dec.lattice.clone(), cells)?
            .with_shift(self.dec.shift.clone())?;
        ModelFunction::new(dec, pieces, cocycle)
    }

    pub fn star_pieces(&self, u: &[Rat]) -> Result<Vec<(Polytope, QVec, Gamma)>> {
        let probe = Polytope::point(u);
        let mut out = Vec::new();
        for (i, cell) in self.dec.cells.iter().enumerate() {
            for (t, moved) in overlapping_translates(&self.dec, &probe, cell) {
                if moved.contains(u) {
                    let (slope, off) = translated_piece(self, i, &t)?;
                    out.push((moved, slope, off));
                }
            }
        }
        Ok(out)
    }

    /// Dual polytope `{u}^g` of a vertex of the decomposition.
    pub fn dual_polytope(&self, u: &[Rat]) -> Result<Polytope> {
        let star = self.star_pieces(u)?;
        if star.is_empty() {
            return Err(Error::NotAVertex);
        }
        dual_polytope_from_star(
            &star
                .iter()
                .map(|(p, m, _)| (p.clone(), m.clone()))
                .collect::<Vec<_>>(),
            u,
        )
    }

    /// Vertex classes of the decomposition modulo the lattice.
    pub fn vertex_classes(&self) -> Vec<QVec> {
        let mut out: Vec<QVec> = Vec::new();
        for cell in &self.dec.cells {
            for v in &cell.vertices {
                let canon = self.dec.canonicalize(&Polytope::point(v));
                let p = canon.vertices[0].clone();
                if !out.iter().any(|q| q == &p) {
                    out.push(p);
                }
            }
        }
        out.sort_by(|a, b| crate::rat::lex_cmp(a, b));
        out
    }

    /// Verifies the dual tiling identity: the dual polytopes of the vertex
    /// classes tile `R^n` periodically under the induced dual lattice, so
    /// their volumes sum to its covolume and their interiors are disjoint.
    pub fn dual_tiling_check(&self) -> Result<ValidationReport> {
        let mut report = ValidationReport::default();
        let duals: Vec<(QVec, Polytope)> = self
            .vertex_classes()
            .into_iter()
            .map(|v| {
                let d = self.dual_polytope(&v)?;
                Ok((v, d))
            })
            .collect::<Result<_>>()?;
        let mut total = Rat::zero();
        for (_, d) in &duals {
            total += d.volume();
        }
        let dual_lattice = induced_dual_lattice(
            &crate::mat::QMat::identity(self.dec.n),
            &self.cocycle.b,
            &self.dec.lattice,
        )?;
        let covol = dual_lattice.covolume()?;
        if total != covol {
            report.issues.push(format!(
                "dual volumes sum to {total} but the induced dual covolume is {covol}"
            ));
        }
        // pairwise interior disjointness across dual-lattice translates
        let aux = PeriodicDecomposition::new(
            dual_lattice,
            duals.iter().map(|(_, d)| d.clone()).filter(|d| !d.is_empty()).collect(),
        )?;
        let sub = aux.validate();
        for issue in sub.issues {
            report.issues.push(format!("dual tiling: {issue}"));
        }
        Ok(report)
    }
}

/// Dual polytope of `u` with respect to the local convex function given by
/// its star cells and their slopes: all `w` in `R^r` with
/// `w . (x - u) <= g(x) - g(u)` for `x` in the star.
pub fn dual_polytope_from_star(star: &[(Polytope, QVec)], u: &[Rat]) -> Result<Polytope> {
    let r = u.len();
    let mut hs: Vec<Halfspace> = Vec::new();
    for (cell, slope) in star {
        if !cell.contains(u) {
            return Err(Error::NotAVertex);
        }
        for w in &cell.vertices {
            let d = vsub(w, &u.to_vec());
            if d.iter().all(|x| x.is_zero()) {
                continue;
            }
            hs.push(Halfspace::new(d.clone(), dot(slope, &d)));
        }
    }
    Polytope::from_halfspaces(r, &hs)
}

/// The induced dual lattice `{ x -> b(ell(x), lambda) : lambda in L }`,
/// identified with a lattice in `R^r` via the standard pairing. `ell` is
/// the linear part of the simplex chart, a full-column-rank n-by-r matrix.
pub fn induced_dual_lattice(
    ell: &crate::mat::QMat,
    b: &BilinearForm,
    lattice: &Lattice,
) -> Result<Lattice> {
    let r = ell.cols;
    if ell.rank() != r {
        return Err(Error::RankDeficient(String::from(
            "simplex chart map is not injective",
        )));
    }
    if b.dim() != ell.rows || lattice.ambient != ell.rows {
        return Err(Error::DimensionMismatch { expected: ell.rows, got: b.dim() });
    }
    // omega_lambda(x) = b(ell x, lambda) = (ell^T B lambda) . x
    let gens: Vec<QVec> = lattice
        .basis
        .iter()
        .map(|l| ell.transpose().mul_vec(&b.mat.mul_vec(l)))
        .collect();
    Ok(Lattice::from_generators(r, &gens))
}

/// Model function from the tropical theta rule for a positive-definite
/// form: `f(u) = max over lattice window of (b(u,l) - b(l,l)/2)`, whose
/// maximal affine domains are the Voronoi cells of the form. The window
/// radius (in lattice coordinates) must certify the max is stable.
pub fn delaunay_model_function(
    b: BilinearForm,
    lattice: Lattice,
    search_radius: u32,
) -> Result<ModelFunction> {
    let n = lattice.ambient;
    if lattice.rank() != n {
        return Err(Error::RankDeficient(String::from(
            "delaunay generator needs a full-rank lattice",
        )));
    }
    if b.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.dim() });
    }
    if !b.is_positive_definite() {
        return Err(Error::InconsistentInput(String::from(
            "form is not positive definite",
        )));
    }
    let half = Rat::new(Int::one(), Int::from(2));
    // Voronoi cell of the origin: b(u, l) <= b(l,l)/2 for window points l
    let mut hs: Vec<Halfspace> = Vec::new();
    let r = search_radius as i64;
    let mut idx = vec![-r; n];
    loop {
        if idx.iter().any(|&x| x != 0) {
            let k: QVec = idx.iter().map(|&x| Rat::from_integer(Int::from(x))).collect();
            let l = lattice.basis_matrix().mul_vec(&k);
            let normal = b.mat.mul_vec(&l);
            hs.push(Halfspace::new(normal, b.eval(&l, &l) * &half));
        }
        let mut i = 0;
        loop {
            if i == n {
                break;
            }
            idx[i] += 1;
            if idx[i] <= r {
                break;
            }
            idx[i] = -r;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    let cell = Polytope::from_halfspaces(n, &hs).map_err(|e| match e {
        Error::Unbounded => Error::InsufficientRadius { suggested: search_radius + 1 },
        other => other,
    })?;
    // certify the window: any lattice point outside must lose the max on
    // the whole cell; Cauchy-Schwarz reduces this to
    // (R+1)^2 / max_i (G^{-1})_{ii}  >=  4 max_v b(v,v)
    let gram = lattice.basis_matrix().transpose().mul_mat(&b.mat).mul_mat(&lattice.basis_matrix());
    let ginv = gram.inverse()?;
    let gdiag = (0..n).map(|i| ginv.at(i, i).clone()).max().expect("n >= 1");
    let vmax = cell
        .vertices
        .iter()
        .map(|v| b.eval(v, v))
        .max()
        .expect("cell has vertices");
    let rr = Rat::from_integer(Int::from(r + 1));
    if &rr * &rr < Rat::from_integer(Int::from(4)) * &vmax * &gdiag {
        let need = Rat::from_integer(Int::from(4)) * &vmax * &gdiag;
        // smallest integer R with (R+1)^2 >= need
        let mut c = ceil_rat(&need);
        let mut root = Int::zero();
        while &root * &root < c {
            root += 1;
        }
        c = root;
        let suggested = num_traits::ToPrimitive::to_u32(&c).unwrap_or(u32::MAX);
        return Err(Error::InsufficientRadius { suggested });
    }
    let dec = PeriodicDecomposition::new(lattice.clone(), vec![cell])?;
    let pieces = vec![(crate::rat::zeros(n), Gamma::zero()); dec.cells.len()];
    let cocycle = CocycleData::theta(b, &lattice);
    ModelFunction::new(dec, pieces, cocycle)
}

fn overlapping_translates(
    dec: &PeriodicDecomposition,
    p: &Polytope,
    q: &Polytope,
) -> Vec<(QVec, Polytope)> {
    dec.overlapping_translates(p, q)
}
