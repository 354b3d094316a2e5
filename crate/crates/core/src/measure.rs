//! The canonical-measure engine: degrees of components via dual polytopes,
//! the explicit measure formula (single and multi-bundle), pushforward to
//! the tropical variety, the limit discrete measures, the Haar corollary,
//! dimension-bound validation, and the product-case closed-form scenario.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::gamma::Gamma;
use crate::lattice::{
    binomial, combinations, factorial, mixed_discriminant, BilinearForm, Lattice,
};
use crate::mat::{integer_kernel, QMat};
use crate::modelfun::ModelFunction;
use crate::periodic::PeriodicDecomposition;
use crate::polytope::{affine_dim_of_points, AffineMap, Polytope};
use crate::rat::{dot, floor_rat, lex_cmp, vscale, vsub, Int, QVec, Rat};
use crate::skeleton::{
    torus_skeleton, SkeletonComplex, SkeletonSubdivision, Stratum, StratumWeights,
    TropicalMap,
};

/// Where the support polytope of a piece lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ambient {
    /// Coordinates of the canonical simplex `Sigma_S` of the given stratum.
    Simplex(usize),
    /// A fundamental-domain representative in `R^n / Lambda`.
    Torus,
}

/// A polytopal piece with a density relative to Lebesgue measure on the
/// affine hull of the support, normalized so the unit cell of `basis` has
/// volume one.
#[derive(Clone, Debug)]
pub struct MeasurePiece {
    pub support: Polytope,
    pub ambient: Ambient,
    pub dim: usize,
    pub basis: Vec<QVec>,
    pub density: Rat,
}

impl MeasurePiece {
    pub fn mass(&self) -> Result<Rat> {
        Ok(&self.density * self.support.volume_in_basis(&self.basis)?)
    }
}

/// A point mass, tagged with the stratum that produced it when known.
#[derive(Clone, Debug)]
pub struct Atom {
    pub point: QVec,
    pub mass: Rat,
    pub stratum: Option<usize>,
}

/// A measure given by finitely many polytopal pieces with densities plus
/// finitely many atoms.
#[derive(Clone, Debug, Default)]
pub struct PolytopalMeasure {
    pub pieces: Vec<MeasurePiece>,
    pub atoms: Vec<Atom>,
}

impl PolytopalMeasure {
    pub fn total_mass(&self) -> Result<Rat> {
        let mut total = Rat::zero();
        for p in &self.pieces {
            total += p.mass()?;
        }
        for a in &self.atoms {
            total += a.mass.clone();
        }
        Ok(total)
    }

    /// Measure of a region, for pieces living in the same coordinates as
    /// `omega` (intersections of lower dimension than a piece count zero).
    /// Supports are compared as given, so for torus measures `omega` should
    /// sit inside the fundamental domain of the representatives.
    pub fn mass_on(&self, omega: &Polytope) -> Result<Rat> {
        let mut total = Rat::zero();
        for p in &self.pieces {
            let inter = p.support.intersect(omega)?;
            if inter.is_empty() {
                continue;
            }
            if inter.affine_dim() < p.dim as isize {
                continue;
            }
            total += &p.density * inter.volume_in_basis(&p.basis)?;
        }
        for a in &self.atoms {
            if omega.contains(&a.point) {
                total += a.mass.clone();
            }
        }
        Ok(total)
    }
}

pub fn total_mass(mu: &PolytopalMeasure) -> Result<Rat> {
    mu.total_mass()
}

/// A finite atomic measure on the tropical torus.
#[derive(Clone, Debug, Default)]
pub struct DiscreteMeasure {
    pub atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    pub fn total_mass(&self) -> Rat {
        self.atoms.iter().map(|a| a.mass.clone()).sum()
    }

    pub fn mass_on(&self, omega: &Polytope) -> Rat {
        self.atoms
            .iter()
            .filter(|a| omega.contains(&a.point))
            .map(|a| a.mass.clone())
            .sum()
    }
}

/// All data of one computation: an abelian variety with toric rank `n` and
/// abelian part of dimension `b`, a `d`-dimensional subvariety presented by
/// its weighted skeleton and tropical map, the `d` toric bilinear forms of
/// the line bundles, and the degree of the alteration.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub n: usize,
    pub b: usize,
    pub d: usize,
    pub lattice: Lattice,
    pub forms: Vec<BilinearForm>,
    pub sk: SkeletonComplex,
    pub tm: TropicalMap,
    pub mf: Option<ModelFunction>,
    pub deg_f: Rat,
}

impl Scenario {
    pub fn validate(&self) -> crate::periodic::ValidationReport {
        let mut report = crate::periodic::ValidationReport::default();
        if self.d > self.n + self.b {
            report.issues.push(format!(
                "variety dimension {} exceeds n + b = {}",
                self.d,
                self.n + self.b
            ));
        }
        if self.sk.n != self.n {
            report.issues.push(String::from("skeleton torus dimension differs from n"));
        }
        if self.sk.d != self.d {
            report.issues.push(String::from("skeleton variety dimension differs from d"));
        }
        if !self.sk.lattice.eq_lattice(&self.lattice) {
            report.issues.push(String::from("skeleton lattice differs from the scenario lattice"));
        }
        if self.forms.len() != self.d {
            report.issues.push(format!(
                "expected {} bilinear forms, found {}",
                self.d,
                self.forms.len()
            ));
        }
        for (i, f) in self.forms.iter().enumerate() {
            if f.dim() != self.n {
                report.issues.push(format!("form {i} has the wrong dimension"));
            }
            if f.mat != f.mat.transpose() {
                report.issues.push(format!("form {i} is not symmetric"));
            }
        }
        if !self.deg_f.is_positive() {
            report.issues.push(String::from("alteration degree must be positive"));
        }
        for (s, st) in self.sk.strata.iter().enumerate() {
            let r = self.sk.simplices[s].r;
            if st.dim_stratum + r != self.d {
                report
                    .issues
                    .push(format!("stratum {s}: simplex dimension plus fibre dimension is not d"));
            }
        }
        let sk_report = self.sk.validate(&self.tm);
        report.issues.extend(sk_report.issues);
        report
    }
}

/// A fundamental-domain representative of `x` modulo the lattice.
pub fn torus_reduce(lattice: &Lattice, x: &[Rat]) -> QVec {
    let binv = lattice.basis_matrix().inverse().expect("full-rank lattice");
    let coords = binv.mul_vec(x);
    let shift: QVec = coords.iter().map(|c| Rat::from_integer(floor_rat(c))).collect();
    vsub(x, &lattice.basis_matrix().mul_vec(&shift))
}

fn identity_basis(r: usize) -> Vec<QVec> {
    (0..r)
        .map(|j| {
            let mut e = crate::rat::zeros(r);
            e[j] = Rat::one();
            e
        })
        .collect()
}

fn rat_pow(base: &Rat, k: usize) -> Rat {
    let mut out = Rat::one();
    for _ in 0..k {
        out *= base;
    }
    out
}

/// The pullback basis matrix `K` of `Lambda_S = f_aff^{-1}(Lambda)` in
/// simplex coordinates, oriented so `det K > 0`, plus `det K`.
fn stratum_pullback(scn: &Scenario, s: usize, f: &AffineMap) -> Result<(QMat, Rat)> {
    let r = scn.sk.simplices[s].r;
    if r == 0 {
        return Ok((QMat::identity(0), Rat::one()));
    }
    if f.mat.rank() < r {
        return Err(Error::RankDeficient(format!(
            "tropical lift on stratum {s} is not injective"
        )));
    }
    let span: Vec<QVec> = (0..r).map(|j| f.mat.col(j)).collect();
    let l = scn.lattice.intersect_subspace(&span)?;
    if l.rank() != r {
        return Err(Error::RankDeficient(format!(
            "lattice meets the image of stratum {s} in rank {}",
            l.rank()
        )));
    }
    let mut cols = Vec::with_capacity(r);
    for j in 0..r {
        let bj = l.basis_matrix().col(j);
        let x = f.mat.solve(&bj).ok_or(Error::LatticeMismatch)?;
        if f.mat.mul_vec(&x) != bj {
            return Err(Error::LatticeMismatch);
        }
        cols.push(x);
    }
    let mut k = QMat::from_cols(&cols);
    let mut detk = k.det();
    if detk.is_negative() {
        for i in 0..r {
            let v = -k.at(i, 0).clone();
            k.set(i, 0, v);
        }
        detk = -detk;
    }
    if detk.is_zero() {
        return Err(Error::RankDeficient(format!("degenerate pullback lattice on stratum {s}")));
    }
    Ok((k, detk))
}

/// The explicit formula: one piece per non-degenerate canonical simplex,
/// with density `r! sum_i w(complement of i) D(G_{i_1}, .., G_{i_r}) /
/// det K` against standard Lebesgue measure in simplex coordinates, where
/// `G_i = M^T F_i M K`; zero-dimensional simplices with weight become
/// atoms. Degenerate simplices contribute nothing.
pub fn canonical_measure(scn: &Scenario) -> Result<PolytopalMeasure> {
    let d = scn.d;
    let mut pieces = Vec::new();
    let mut atoms = Vec::new();
    for (s, st) in scn.sk.strata.iter().enumerate() {
        if st.weights.is_zero() {
            continue;
        }
        let simplex = &scn.sk.simplices[s];
        let r = simplex.r;
        let f = scn.tm.affine_map(s)?;
        if r == 0 {
            let key: Vec<usize> = (0..d).collect();
            let mass = st.weights.get(&key);
            if !mass.is_zero() {
                atoms.push(Atom {
                    point: torus_reduce(&scn.lattice, &f.off),
                    mass,
                    stratum: Some(s),
                });
            }
            continue;
        }
        let (k, detk) = stratum_pullback(scn, s, &f)?;
        let gs: Vec<QMat> = scn
            .forms
            .iter()
            .map(|fi| f.mat.transpose().mul_mat(&fi.mat).mul_mat(&f.mat).mul_mat(&k))
            .collect();
        let mut sum = Rat::zero();
        for subset in combinations(d, r) {
            let comp: Vec<usize> =
                (0..d).filter(|i| !subset.contains(i)).collect();
            let w = st.weights.get(&comp);
            if w.is_zero() {
                continue;
            }
            let sel: Vec<QMat> = subset.iter().map(|&i| gs[i].clone()).collect();
            sum += w * mixed_discriminant(&sel)?;
        }
        let density = factorial(r) * sum / &detk;
        if density.is_zero() {
            continue;
        }
        pieces.push(MeasurePiece {
            support: simplex.realization(),
            ambient: Ambient::Simplex(s),
            dim: r,
            basis: identity_basis(r),
            density,
        });
    }
    Ok(PolytopalMeasure { pieces, atoms })
}

/// Maps every simplex piece through its affine lift, transports the
/// normalizing basis (so masses are preserved), merges pieces with
/// identical image supports by adding densities, and multiplies everything
/// by the alteration degree.
pub fn pushforward(
    mu: &PolytopalMeasure,
    tm: &TropicalMap,
    deg_f: &Rat,
) -> Result<PolytopalMeasure> {
    if !deg_f.is_positive() {
        return Err(Error::Invalid(String::from("alteration degree must be positive")));
    }
    let mut pieces: Vec<MeasurePiece> = Vec::new();
    for p in &mu.pieces {
        let cand = match p.ambient {
            Ambient::Torus => p.clone(),
            Ambient::Simplex(s) => {
                let f = tm.affine_map(s)?;
                if f.mat.rank() < p.dim {
                    return Err(Error::RankDeficient(format!(
                        "piece over stratum {s} maps non-injectively"
                    )));
                }
                MeasurePiece {
                    support: p.support.affine_image(&f)?,
                    ambient: Ambient::Torus,
                    dim: p.dim,
                    basis: p.basis.iter().map(|v| f.mat.mul_vec(v)).collect(),
                    density: p.density.clone(),
                }
            }
        };
        match pieces
            .iter_mut()
            .find(|q| q.dim == cand.dim && q.support.eq_as_set(&cand.support))
        {
            Some(q) => {
                let mass = cand.mass()?;
                let vol = q.support.volume_in_basis(&q.basis)?;
                q.density += mass / vol;
            }
            None => pieces.push(cand),
        }
    }
    let mut atoms: Vec<Atom> = Vec::new();
    for a in &mu.atoms {
        match atoms.iter_mut().find(|x| x.point == a.point) {
            Some(x) => {
                x.mass += a.mass.clone();
                if x.stratum != a.stratum {
                    x.stratum = None;
                }
            }
            None => atoms.push(a.clone()),
        }
    }
    for p in &mut pieces {
        p.density *= deg_f;
    }
    for a in &mut atoms {
        a.mass *= deg_f;
    }
    Ok(PolytopalMeasure { pieces, atoms })
}

/// Report of the Haar comparison for scenarios modelling the abelian
/// variety itself.
#[derive(Clone, Debug)]
pub struct HaarReport {
    pub issues: Vec<String>,
    /// The constant density with respect to Lebesgue measure on `R^n`,
    /// when it exists.
    pub density: Option<Rat>,
    pub total: Rat,
}

impl HaarReport {
    pub fn ok(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Checks that the pushforward of the canonical measure is a multiple of
/// Haar measure: no atoms, every piece of full dimension, and one constant
/// standard-Lebesgue density across all pieces.
pub fn haar_check(scn: &Scenario) -> Result<HaarReport> {
    let mu = canonical_measure(scn)?;
    let pushed = pushforward(&mu, &scn.tm, &scn.deg_f)?;
    let mut issues = Vec::new();
    if !pushed.atoms.is_empty() {
        issues.push(String::from("measure carries atoms"));
    }
    let mut density: Option<Rat> = None;
    for (i, p) in pushed.pieces.iter().enumerate() {
        if p.dim != scn.n {
            issues.push(format!("piece {i} has dimension {} instead of {}", p.dim, scn.n));
            continue;
        }
        let vol = p.support.volume();
        if vol.is_zero() {
            issues.push(format!("piece {i} has degenerate support"));
            continue;
        }
        let std_density = p.mass()? / vol;
        match &density {
            None => density = Some(std_density),
            Some(d0) => {
                if *d0 != std_density {
                    issues.push(format!(
                        "piece {i} has density {std_density} instead of {d0}"
                    ));
                }
            }
        }
    }
    let total = pushed.total_mass()?;
    Ok(HaarReport { issues, density, total })
}

/// Asserts `d - b <= dim <= d` for every support piece of a pushed-forward
/// measure and returns the sorted set of occurring dimensions; atoms count
/// as dimension zero.
pub fn validate_dimension_bounds(
    scn: &Scenario,
    mu_pushed: &PolytopalMeasure,
) -> Result<Vec<usize>> {
    let lower = scn.d.saturating_sub(scn.b);
    let mut dims: Vec<usize> = Vec::new();
    let mut record = |dim: usize| -> Result<()> {
        if dim < lower || dim > scn.d {
            return Err(Error::InconsistentInput(format!(
                "support piece of dimension {dim} outside [{lower}, {}]",
                scn.d
            )));
        }
        if !dims.contains(&dim) {
            dims.push(dim);
        }
        Ok(())
    };
    for p in &mu_pushed.pieces {
        record(p.dim)?;
    }
    for _ in &mu_pushed.atoms {
        record(0)?;
    }
    dims.sort_unstable();
    Ok(dims)
}

/// Pullback of a full-dimensional cell through an injective affine map,
/// via its halfspace description.
fn pull_cell(cell: &Polytope, f: &AffineMap, r: usize) -> Result<Polytope> {
    let mut hs = Vec::new();
    for h in &cell.halfspaces {
        let normal = f.mat.transpose().mul_vec(&h.normal);
        let offset = &h.offset - dot(&h.normal, &f.off);
        if normal.iter().all(Zero::is_zero) {
            if offset.is_negative() {
                return Ok(Polytope::empty(r));
            }
            continue;
        }
        hs.push(crate::polytope::Halfspace::new(normal, offset));
    }
    Polytope::from_halfspaces(r, &hs)
}

/// Local convexity of the pulled-back star: every affine piece must lie
/// below the function value on every cell of the star.
fn check_local_convexity(pulled: &[(Polytope, QVec, Gamma)]) -> Result<()> {
    for (cj, mj, cj_off) in pulled {
        for w in &cj.vertices {
            let val_j = cj_off.add(&Gamma::from_rat(dot(mj, w)));
            for (_, mi, ci_off) in pulled {
                let val_i = ci_off.add(&Gamma::from_rat(dot(mi, w)));
                if val_i > val_j {
                    return Err(Error::NotConvex(format!(
                        "piece exceeds the function value at a star vertex of the cell with first vertex {:?}",
                        cj.vertices.first()
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Core of the degree formula `d!/e! * deg_H(S) * vol({u}^g)` in simplex
/// coordinates at the (possibly rescaled) point `u` of stratum `s`. Returns
/// zero without further checks when the dual polytope has no volume;
/// otherwise verifies transversality and local convexity of `g = f o f_aff`.
fn degree_at(
    scn: &Scenario,
    s: usize,
    q: &[Rat],
    mf: &ModelFunction,
    strict: bool,
) -> Result<Rat> {
    let simplex = &scn.sk.simplices[s];
    let r = simplex.r;
    let e = scn.d - r;
    // single driving bundle: the weight table is uniform over its keys and
    // deg_H(S) is that common value (the d!/e! prefactor already counts
    // the r-subsets of bundle slots)
    let table = &scn.sk.strata[s].weights.table;
    let w0 = table.values().next().cloned().unwrap_or_else(Rat::zero);
    if table.values().any(|v| *v != w0) {
        return Err(Error::InconsistentInput(format!(
            "stratum {s} carries a non-uniform weight table; the discrete \
measure is defined for a single driving bundle"
        )));
    }
    let coef = factorial(scn.d) / factorial(e) * &w0;
    if r == 0 {
        // the dual polytope is a point of zero-dimensional volume one
        return Ok(coef);
    }
    if w0.is_zero() {
        return Ok(Rat::zero());
    }
    let f = scn.tm.affine_map(s)?;
    if f.mat.rank() < r {
        return Err(Error::RankDeficient(format!(
            "tropical lift on stratum {s} is not injective"
        )));
    }
    let star = mf.star_pieces(q)?;
    if star.is_empty() {
        return Err(Error::NotAVertex);
    }
    let mt = f.mat.transpose();
    let mut slopes: Vec<QVec> = Vec::new();
    for (_, m, _) in &star {
        let pm = mt.mul_vec(m);
        if !slopes.contains(&pm) {
            slopes.push(pm);
        }
    }
    if affine_dim_of_points(&slopes) < r {
        return Ok(Rat::zero());
    }
    let dual = Polytope::from_vertices(r, &slopes)?;
    let vol = dual.volume();
    if vol.is_zero() {
        return Ok(Rat::zero());
    }
    // transversality: the open face of the image point must have
    // codimension r. A smaller face (the chart runs through a corner)
    // still restricts correctly — the projected slopes are exactly the
    // subdifferential of the restriction — so it is only rejected when a
    // strict check is requested.
    let mut inter = star[0].0.clone();
    for (cell, _, _) in star.iter().skip(1) {
        inter = inter.intersect(cell)?;
    }
    let expected = (scn.n - r) as isize;
    if inter.affine_dim() > expected || (strict && inter.affine_dim() != expected) {
        return Err(Error::TransversalityFailure(format!(
            "face at the image point has dimension {} but codimension {} was expected; cell first vertex {:?}",
            inter.affine_dim(),
            r,
            star[0].0.vertices.first()
        )));
    }
    // local convexity of the pullback, in the chart u -> M u + q
    // centered at the evaluation point
    let fq = AffineMap { mat: f.mat.clone(), off: q.to_vec() };
    let mut pulled = Vec::with_capacity(star.len());
    for (cell, m, c) in &star {
        let pcell = pull_cell(cell, &fq, r)?;
        if pcell.is_empty() {
            continue;
        }
        let val = c.add(&Gamma::from_rat(dot(m, q)));
        pulled.push((pcell, mt.mul_vec(m), val));
    }
    check_local_convexity(&pulled)?;
    Ok(coef * vol)
}

/// Degree of the component of the refined special fibre at a subdivision
/// vertex interior to the canonical simplex of stratum `s`.
pub fn degree_of_component(
    scn: &Scenario,
    subdiv: &SkeletonSubdivision,
    s: usize,
    u_prime: &[Rat],
    mf: &ModelFunction,
) -> Result<Rat> {
    let cells = &subdiv.per_simplex[s];
    let is_vertex = cells
        .iter()
        .any(|c| c.cell.vertices.iter().any(|v| v == u_prime));
    if !is_vertex {
        return Err(Error::NotAVertex);
    }
    let sigma = scn.sk.simplices[s].realization();
    if scn.sk.simplices[s].r > 0 && !sigma.relint_contains(u_prime) {
        return Err(Error::InconsistentInput(String::from(
            "vertex is not in the relative interior of the canonical simplex",
        )));
    }
    let f = scn.tm.affine_map(s)?;
    degree_at(scn, s, &f.apply(u_prime), mf, true)
}

/// The level-`m` discrete measure: atoms at the vertex classes of the
/// subdivision by the `m`-rescaled decomposition, with mass
/// `m^{-2d} * d!/e! * deg_H(S) * vol({m u'}^g) * m^{2e+r} =
/// degree / m^r` per class.
pub fn discrete_measure(
    scn: &Scenario,
    mf: &ModelFunction,
    m: u32,
) -> Result<DiscreteMeasure> {
    if !mf.is_strongly_polyhedral_convex()? {
        return Err(Error::NotConvex(String::from(
            "model function is not strongly polyhedral convex",
        )));
    }
    let c1m = mf.dec.scale(m)?;
    let subdiv = scn.sk.subdivide(&scn.tm, &c1m)?;
    let mrat = Rat::from_integer(Int::from(m as i64));
    // a vertex class shared by several strata is a single component; its
    // degree sums one contribution per local tangent direction of the
    // skeleton. Simplices running through the class with the same image
    // direction space belong to one periodic tiling and are counted once
    // (two maximal triangles of a torus triangulation), while distinct
    // directions contribute separately (the edges meeting at a vertex).
    let mut seen: Vec<(QVec, Vec<QVec>)> = Vec::new();
    let mut atoms: Vec<Atom> = Vec::new();
    for (s, st) in scn.sk.strata.iter().enumerate() {
        if st.weights.is_zero() {
            continue;
        }
        let r = scn.sk.simplices[s].r;
        let f = scn.tm.affine_map(s)?;
        let direction = crate::polytope::row_space_basis(
            &(0..f.mat.cols).map(|j| f.mat.col(j)).collect::<Vec<_>>(),
        );
        let scale = rat_pow(&mrat, r);
        for cell in &subdiv.per_simplex[s] {
            for v in &cell.cell.vertices {
                let class = torus_reduce(&scn.lattice, &f.apply(v));
                let key = (class.clone(), direction.clone());
                if seen.contains(&key) {
                    continue;
                }
                seen.push(key);
                // the level-m vertex evaluates the unscaled function at
                // m times its image point
                let q = vscale(&mrat, &f.apply(v));
                let deg = degree_at(scn, s, &q, mf, false)?;
                if deg.is_zero() {
                    continue;
                }
                let mass = deg / &scale;
                match atoms.iter_mut().find(|a| a.point == class) {
                    Some(a) => a.mass += mass,
                    None => atoms.push(Atom { point: class, mass, stratum: Some(s) }),
                }
            }
        }
    }
    atoms.sort_by(|a, b| lex_cmp(&a.point, &b.point));
    Ok(DiscreteMeasure { atoms })
}

/// Builds the product-case scenario: the subvariety of `B_1 x B_2` given by
/// a spectrum of dimensions, with toric rank `n`, abelian part `b`, excess
/// `m`, toric form `form2` and a KKMS triangulation of the torus. Returns
/// the scenario together with the closed-form mass of every simplex class
/// of dimension at least `n - m`.
pub fn spectrum_scenario(
    b: usize,
    n: usize,
    m: usize,
    deg_l1_b1: &Rat,
    form2: &BilinearForm,
    triangulation: &PeriodicDecomposition,
) -> Result<(Scenario, Vec<(usize, Rat)>)> {
    if m > b.min(n) {
        return Err(Error::Invalid(String::from(
            "the excess dimension must be at most min(b, n)",
        )));
    }
    if form2.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: form2.dim() });
    }
    if triangulation.n != n {
        return Err(Error::DimensionMismatch { expected: n, got: triangulation.n });
    }
    let lattice = triangulation.lattice.clone();
    if !lattice.eq_lattice(&Lattice::standard(n)) {
        return Err(Error::InconsistentInput(String::from(
            "the product scenario requires the standard lattice",
        )));
    }
    let d = b + n - m;
    let (sk0, tm) = torus_skeleton(triangulation, Rat::one())?;
    // KKMS condition: each maximal cell is a unimodular image of the scaled
    // standard simplex
    for (s, simplex) in sk0.simplices.iter().enumerate() {
        if simplex.r == n && tm.maps[s].0.det().abs() != Rat::one() {
            return Err(Error::InconsistentInput(format!(
                "triangulation is not of KKMS type: maximal cell {s} is not unimodular at its scale"
            )));
        }
    }
    // theta model function of the toric factor, translated so the
    // triangulation vertices are kinks
    let mut radius = 4u32;
    let base = loop {
        match crate::modelfun::delaunay_model_function(form2.clone(), lattice.clone(), radius) {
            Ok(mf) => break mf,
            Err(Error::InsufficientRadius { suggested }) => radius = suggested,
            Err(e) => return Err(e),
        }
    };
    let mut tri_vertices: Vec<QVec> = Vec::new();
    for cell in &triangulation.cells {
        for v in &cell.vertices {
            let c = torus_reduce(&lattice, v);
            if !tri_vertices.contains(&c) {
                tri_vertices.push(c);
            }
        }
    }
    let half = vec![crate::rat::rat(1, 2); n];
    let mut mf_opt = None;
    for h in [crate::rat::zeros(n), half] {
        let cand = base.translate(&h)?;
        let kinks = cand.vertex_classes();
        if tri_vertices.iter().all(|v| kinks.contains(v)) {
            mf_opt = Some(cand);
            break;
        }
    }
    let mf = mf_opt.ok_or_else(|| {
        Error::InconsistentInput(String::from(
            "triangulation vertices are not kinks of the theta model function",
        ))
    })?;
    // per-stratum weights and closed-form masses
    let mut strata = Vec::new();
    let mut closed = Vec::new();
    for s in 0..sk0.strata.len() {
        let simplex = &sk0.simplices[s];
        let r = simplex.r;
        let e = d - r;
        let f = tm.affine_map(s)?;
        let m_c = simplex.pi_val.recip();
        let delta = simplex.realization().affine_image(&f)?;
        let u0 = f.off.clone();
        let e_mat = f.mat.scale(&simplex.pi_val);
        // the dual face Delta^g: slopes of the pieces whose linearity
        // domain covers a neighbourhood of u0 inside Delta
        let star = mf.star_pieces(&u0)?;
        let mut slopes: Vec<QVec> = Vec::new();
        for (cell, slope, _) in &star {
            let inter = cell.intersect(&delta)?;
            if inter.is_empty() || inter.affine_dim() != r as isize || !inter.contains(&u0) {
                continue;
            }
            if !slopes.contains(slope) {
                slopes.push(slope.clone());
            }
        }
        if slopes.is_empty() {
            return Err(Error::NotAVertex);
        }
        let v_g = if r == n {
            if slopes.len() != 1 {
                return Err(Error::InconsistentInput(format!(
                    "maximal simplex {s} is not contained in a single linearity domain"
                )));
            }
            Rat::one()
        } else {
            let perp: Vec<QVec> = integer_kernel(&e_mat.transpose())
                .iter()
                .map(|v| v.iter().map(|x| Rat::from_integer(x.clone())).collect())
                .collect();
            let dual = Polytope::from_vertices(n, &slopes)?;
            let dd = dual.affine_dim();
            if dd < (n - r) as isize {
                Rat::zero()
            } else if dd > (n - r) as isize {
                return Err(Error::InconsistentInput(format!(
                    "dual face of simplex {s} exceeds its expected dimension"
                )));
            } else {
                dual.volume_in_basis(&perp)?
            }
        };
        let w = binomial(m, n - r) * deg_l1_b1 * factorial(n - r) * &v_g;
        let weights = if w.is_zero() {
            StratumWeights::empty()
        } else {
            let mut table = alloc::collections::BTreeMap::new();
            for key in combinations(d, e) {
                table.insert(key, w.clone());
            }
            StratumWeights { table }
        };
        strata.push(Stratum { id: s, dim_stratum: e, weights });
        if r + m >= n {
            let coef = factorial(d) * factorial(m)
                / (factorial(d - r) * factorial(m + r - n));
            let mass_cf = if r == 0 {
                coef * deg_l1_b1 * &v_g
            } else {
                let span: Vec<QVec> = (0..r).map(|j| e_mat.col(j)).collect();
                let l_delta = lattice.intersect_subspace(&span)?;
                let bcols: Vec<QVec> =
                    (0..r).map(|j| l_delta.basis_matrix().col(j)).collect();
                let v_l = &m_c
                    * e_mat
                        .transpose()
                        .mul_mat(&form2.mat)
                        .mul_mat(&QMat::from_cols(&bcols))
                        .det()
                        .abs();
                let v_delta = delta.volume_in_basis(&bcols)?;
                coef * deg_l1_b1 * &v_g * v_l * v_delta
            };
            closed.push((s, mass_cf));
        }
    }
    let sk = SkeletonComplex {
        n,
        d,
        lattice: lattice.clone(),
        strata,
        simplices: sk0.simplices,
        incidence: sk0.incidence,
    };
    let scn = Scenario {
        n,
        b,
        d,
        lattice,
        forms: vec![form2.clone(); d],
        sk,
        tm,
        mf: Some(mf),
        deg_f: Rat::one(),
    };
    Ok((scn, closed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BilinearForm;
    use crate::modelfun::delaunay_model_function;
    use crate::rat::{rat, rint};
    use crate::skeleton::torus_skeleton_weighted;

    fn interval(a: Rat, b: Rat) -> Polytope {
        Polytope::from_vertices(1, &[vec![a], vec![b]]).unwrap()
    }

    fn elliptic_scenario(form: i64, cells: Vec<Polytope>) -> Scenario {
        let dec = PeriodicDecomposition::new(Lattice::standard(1), cells).unwrap();
        let (sk, tm) = torus_skeleton(&dec, rint(1)).unwrap();
        Scenario {
            n: 1,
            b: 0,
            d: 1,
            lattice: Lattice::standard(1),
            forms: vec![BilinearForm::new(QMat::from_rows(&[vec![rint(form)]])).unwrap()],
            sk,
            tm,
            mf: None,
            deg_f: rint(1),
        }
    }

    #[test]
    fn elliptic_canonical_measure_is_haar() {
        let scn = elliptic_scenario(
            3,
            vec![interval(rint(0), rat(1, 2)), interval(rat(1, 2), rint(1))],
        );
        assert!(scn.validate().ok());
        let mu = canonical_measure(&scn).unwrap();
        assert_eq!(mu.pieces.len(), 2);
        for p in &mu.pieces {
            assert_eq!(p.density, rint(3));
        }
        assert_eq!(mu.total_mass().unwrap(), rint(3));
        let report = haar_check(&scn).unwrap();
        assert!(report.ok(), "{:?}", report.issues);
        assert_eq!(report.density, Some(rint(3)));
        assert_eq!(report.total, rint(3));
    }

    #[test]
    fn two_dimensional_torus_is_haar() {
        // unit square split along the diagonal
        let t1 = Polytope::from_vertices(
            2,
            &[
                vec![rint(0), rint(0)],
                vec![rint(1), rint(0)],
                vec![rint(1), rint(1)],
            ],
        )
        .unwrap();
        let t2 = Polytope::from_vertices(
            2,
            &[
                vec![rint(0), rint(0)],
                vec![rint(0), rint(1)],
                vec![rint(1), rint(1)],
            ],
        )
        .unwrap();
        let dec = PeriodicDecomposition::new(Lattice::standard(2), vec![t1, t2]).unwrap();
        let (sk, tm) = torus_skeleton(&dec, rint(1)).unwrap();
        let scn = Scenario {
            n: 2,
            b: 0,
            d: 2,
            lattice: Lattice::standard(2),
            forms: vec![
                BilinearForm::new(QMat::identity(2)).unwrap(),
                BilinearForm::new(QMat::identity(2)).unwrap(),
            ],
            sk,
            tm,
            mf: None,
            deg_f: rint(1),
        };
        let report = haar_check(&scn).unwrap();
        assert!(report.ok(), "{:?}", report.issues);
        assert_eq!(report.density, Some(rint(2)));
        assert_eq!(report.total, rint(2));
    }

    #[test]
    fn zero_dimensional_stratum_becomes_atom() {
        // a single point stratum with fibre dimension d = 1 and weight 5
        let sk = SkeletonComplex {
            n: 1,
            d: 1,
            lattice: Lattice::standard(1),
            strata: vec![Stratum {
                id: 0,
                dim_stratum: 1,
                weights: StratumWeights::scalar(1, 0, rint(5)),
            }],
            simplices: vec![crate::skeleton::CanonicalSimplex { r: 0, pi_val: rint(1) }],
            incidence: vec![],
        };
        let tm = TropicalMap {
            maps: vec![(QMat::zeros(1, 0), vec![Gamma::from_rat(rat(7, 3))])],
        };
        let scn = Scenario {
            n: 1,
            b: 1,
            d: 1,
            lattice: Lattice::standard(1),
            forms: vec![BilinearForm::new(QMat::identity(1)).unwrap()],
            sk,
            tm,
            mf: None,
            deg_f: rint(1),
        };
        let mu = canonical_measure(&scn).unwrap();
        assert!(mu.pieces.is_empty());
        assert_eq!(mu.atoms.len(), 1);
        assert_eq!(mu.atoms[0].point, vec![rat(1, 3)]);
        assert_eq!(mu.atoms[0].mass, rint(5));
        let pushed = pushforward(&mu, &scn.tm, &scn.deg_f).unwrap();
        assert_eq!(validate_dimension_bounds(&scn, &pushed).unwrap(), vec![0]);
    }

    #[test]
    fn pushforward_preserves_mass_and_merges_sheets() {
        let scn = elliptic_scenario(
            3,
            vec![interval(rint(0), rat(1, 2)), interval(rat(1, 2), rint(1))],
        );
        let mu = canonical_measure(&scn).unwrap();
        let pushed = pushforward(&mu, &scn.tm, &rint(1)).unwrap();
        assert_eq!(pushed.total_mass().unwrap(), rint(3));
        // doubling the measure and pushing both copies merges them
        let mut doubled = mu.clone();
        doubled.pieces.extend(mu.pieces.clone());
        let merged = pushforward(&doubled, &scn.tm, &rint(1)).unwrap();
        assert_eq!(merged.pieces.len(), pushed.pieces.len());
        assert_eq!(merged.total_mass().unwrap(), rint(6));
        // the alteration degree scales everything
        let scaled = pushforward(&mu, &scn.tm, &rint(4)).unwrap();
        assert_eq!(scaled.total_mass().unwrap(), rint(12));
    }

    #[test]
    fn degree_at_interior_kink() {
        // skeleton cell [1/4, 5/4] puts the theta kink of b = 3 at the
        // interior point u' = 1/4
        let scn = elliptic_scenario(3, vec![interval(rat(1, 4), rat(5, 4))]);
        let form = BilinearForm::new(QMat::from_rows(&[vec![rint(3)]])).unwrap();
        let mf = delaunay_model_function(form.clone(), Lattice::standard(1), 4).unwrap();
        let subdiv = scn.sk.subdivide(&scn.tm, &mf.dec).unwrap();
        let s = scn.sk.simplices.iter().position(|x| x.r == 1).unwrap();
        let deg = degree_of_component(&scn, &subdiv, s, &[rat(1, 4)], &mf).unwrap();
        assert_eq!(deg, rint(3));
        // endpoints of the simplex are rejected
        assert!(matches!(
            degree_of_component(&scn, &subdiv, s, &[rint(0)], &mf),
            Err(Error::InconsistentInput(_))
        ));
    }

    #[test]
    fn discrete_measure_total_is_scale_invariant() {
        let scn = elliptic_scenario(3, vec![interval(rat(1, 4), rat(5, 4))]);
        let form = BilinearForm::new(QMat::from_rows(&[vec![rint(3)]])).unwrap();
        let mf = delaunay_model_function(form.clone(), Lattice::standard(1), 4).unwrap();
        for m in 1..=4u32 {
            let dm = discrete_measure(&scn, &mf, m).unwrap();
            assert_eq!(dm.total_mass(), rint(3), "level {m}");
            assert_eq!(dm.atoms.len(), m as usize);
        }
    }

    #[test]
    fn discrete_measure_survives_cocycle_translation() {
        let scn = elliptic_scenario(3, vec![interval(rat(1, 4), rat(5, 4))]);
        let form = BilinearForm::new(QMat::from_rows(&[vec![rint(3)]])).unwrap();
        let mf = delaunay_model_function(form.clone(), Lattice::standard(1), 4).unwrap();
        let shifted = mf.translate(&[rat(1, 4)]).unwrap();
        assert!(shifted.validate().ok());
        for m in 1..=3u32 {
            let dm = discrete_measure(&scn, &shifted, m).unwrap();
            assert_eq!(dm.total_mass(), rint(3), "level {m}");
        }
    }

    #[test]
    fn abelian_times_torus_total() {
        // b = 1, n = 1, d = 2 with both forms [2] and abelian weight 7 on
        // the maximal stratum: density 2!/1! * 7 * 2 = 28 on each class
        let dec = PeriodicDecomposition::new(
            Lattice::standard(1),
            vec![interval(rint(0), rint(1))],
        )
        .unwrap();
        let (sk, tm) = torus_skeleton_weighted(&dec, 2, rint(7)).unwrap();
        let form = BilinearForm::new(QMat::from_rows(&[vec![rint(2)]])).unwrap();
        let scn = Scenario {
            n: 1,
            b: 1,
            d: 2,
            lattice: Lattice::standard(1),
            forms: vec![form.clone(), form],
            sk,
            tm,
            mf: None,
            deg_f: rint(1),
        };
        assert!(scn.validate().ok(), "{:?}", scn.validate().issues);
        let report = haar_check(&scn).unwrap();
        assert!(report.ok(), "{:?}", report.issues);
        assert_eq!(report.density, Some(rint(28)));
        assert_eq!(report.total, rint(28));
    }

    fn unit_interval_dec() -> PeriodicDecomposition {
        PeriodicDecomposition::new(
            Lattice::standard(1),
            vec![interval(rint(0), rint(1))],
        )
        .unwrap()
    }

    fn engine_masses_by_stratum(scn: &Scenario) -> Vec<(usize, Rat)> {
        let mu = canonical_measure(scn).unwrap();
        let mut out: Vec<(usize, Rat)> = Vec::new();
        for p in &mu.pieces {
            if let Ambient::Simplex(s) = p.ambient {
                out.push((s, p.mass().unwrap()));
            }
        }
        for a in &mu.atoms {
            out.push((a.stratum.unwrap(), a.mass.clone()));
        }
        out
    }

    fn assert_closed_form_matches(scn: &Scenario, closed: &[(usize, Rat)]) {
        let engine = engine_masses_by_stratum(scn);
        for (s, mass_cf) in closed {
            let got = engine
                .iter()
                .find(|(t, _)| t == s)
                .map(|(_, m)| m.clone())
                .unwrap_or_else(Rat::zero);
            assert_eq!(&got, mass_cf, "stratum {s}");
        }
        // no engine mass outside the closed-form support
        for (s, mass) in &engine {
            if !closed.iter().any(|(t, _)| t == s) {
                assert!(mass.is_zero(), "unexpected mass on stratum {s}");
            }
        }
    }

    #[test]
    fn spectrum_no_excess_is_haar_times_degree() {
        let form = BilinearForm::new(QMat::from_rows(&[vec![rint(3)]])).unwrap();
        let (scn, closed) =
            spectrum_scenario(1, 1, 0, &rint(5), &form, &unit_interval_dec()).unwrap();
        assert_eq!(scn.d, 2);
        // only the maximal simplex carries mass: 2 * 3 * 5
        assert_eq!(closed.len(), 1);
        assert_eq!(closed[0].1, rint(30));
        assert_closed_form_matches(&scn, &closed);
        let report = haar_check(&scn).unwrap();
        assert!(report.ok(), "{:?}", report.issues);
        assert_eq!(report.total, rint(30));
    }

    #[test]
    fn spectrum_full_excess_has_atoms() {
        let form = BilinearForm::new(QMat::from_rows(&[vec![rint(3)]])).unwrap();
        let (scn, closed) =
            spectrum_scenario(1, 1, 1, &rint(5), &form, &unit_interval_dec()).unwrap();
        assert_eq!(scn.d, 1);
        // edge mass 3*5 and vertex atom 3*5
        let edge: Rat = closed
            .iter()
            .filter(|(s, _)| scn.sk.simplices[*s].r == 1)
            .map(|(_, m)| m.clone())
            .sum();
        let vertex: Rat = closed
            .iter()
            .filter(|(s, _)| scn.sk.simplices[*s].r == 0)
            .map(|(_, m)| m.clone())
            .sum();
        assert_eq!(edge, rint(15));
        assert_eq!(vertex, rint(15));
        assert_closed_form_matches(&scn, &closed);
        let mu = canonical_measure(&scn).unwrap();
        assert_eq!(mu.atoms.len(), 1);
        let pushed = pushforward(&mu, &scn.tm, &scn.deg_f).unwrap();
        assert_eq!(validate_dimension_bounds(&scn, &pushed).unwrap(), vec![0, 1]);
    }
}
