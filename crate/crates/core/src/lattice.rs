//! Full- and lower-rank lattices in `Q^n`, bilinear forms, and mixed volumes.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::mat::{hnf_cols, integer_kernel, QMat};
use crate::rat::{Int, QVec, Rat};

/// A lattice given by a basis, stored as columns in ambient coordinates.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub ambient: usize,
    pub basis: Vec<QVec>,
}

impl Lattice {
    pub fn standard(n: usize) -> Self {
        let basis = (0..n)
            .map(|i| {
                let mut e = vec![Rat::zero(); n];
                e[i] = Rat::one();
                e
            })
            .collect();
        Lattice { ambient: n, basis }
    }

    pub fn from_basis(ambient: usize, basis: Vec<QVec>) -> Result<Self> {
        for b in &basis {
            if b.len() != ambient {
                return Err(Error::DimensionMismatch { expected: ambient, got: b.len() });
            }
        }
        if !basis.is_empty() {
            let m = QMat::from_cols(&basis);
            if m.rank() != basis.len() {
                return Err(Error::RankDeficient(String::from(
                    "lattice basis is linearly dependent",
                )));
            }
        }
        Ok(Lattice { ambient, basis })
    }

    /// Lattice generated by arbitrary rational vectors; the generators are
    /// reduced to a basis of their integer span.
    pub fn from_generators(ambient: usize, gens: &[QVec]) -> Self {
        let mut denom = Int::one();
        for g in gens {
            for x in g {
                denom = num_integer::lcm(denom, x.denom().clone());
            }
        }
        let int_cols: Vec<Vec<Int>> = gens
            .iter()
            .map(|g| g.iter().map(|x| x.numer() * (&denom / x.denom())).collect())
            .collect();
        let reduced = hnf_cols(&int_cols);
        let d = Rat::from_integer(denom);
        let basis: Vec<QVec> = reduced
            .iter()
            .map(|c| c.iter().map(|x| Rat::from_integer(x.clone()) / &d).collect())
            .collect();
        Lattice { ambient, basis }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis_matrix(&self) -> QMat {
        QMat::from_cols(&self.basis)
    }

    /// Covolume of a full-rank lattice.
    pub fn covolume(&self) -> Result<Rat> {
        if self.rank() != self.ambient {
            return Err(Error::RankDeficient(String::from(
                "covolume requires a full-rank lattice",
            )));
        }
        if self.ambient == 0 {
            return Ok(Rat::one());
        }
        Ok(self.basis_matrix().det().abs())
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        if v.len() != self.ambient {
            return false;
        }
        if v.iter().all(|x| x.is_zero()) {
            return true;
        }
        if self.basis.is_empty() {
            return false;
        }
        let m = self.basis_matrix();
        match m.solve(v) {
            None => false,
            Some(x) => {
                m.mul_vec(&x) == v && x.iter().all(|c| c.denom().is_one())
            }
        }
    }

    pub fn is_sublattice_of(&self, other: &Lattice) -> bool {
        self.ambient == other.ambient && self.basis.iter().all(|b| other.contains(b))
    }

    pub fn eq_lattice(&self, other: &Lattice) -> bool {
        self.is_sublattice_of(other) && other.is_sublattice_of(self)
    }

    /// Dual lattice of a full-rank lattice: `{ y : y . x in Z for x in L }`.
    pub fn dual(&self) -> Result<Lattice> {
        if self.rank() != self.ambient {
            return Err(Error::RankDeficient(String::from(
                "dual requires a full-rank lattice",
            )));
        }
        let inv_t = self.basis_matrix().inverse()?.transpose();
        let basis = (0..self.ambient).map(|j| inv_t.col(j)).collect();
        Ok(Lattice { ambient: self.ambient, basis })
    }

    /// `L ∩ W` for a linear subspace `W` given by spanning vectors. The
    /// result is a saturated sublattice of rank `dim(L ∩ W)`.
    pub fn intersect_subspace(&self, span: &[QVec]) -> Result<Lattice> {
        for s in span {
            if s.len() != self.ambient {
                return Err(Error::DimensionMismatch { expected: self.ambient, got: s.len() });
            }
        }
        if self.basis.is_empty() {
            return Ok(self.clone());
        }
        // x = B k lies in W iff P x = 0 where the rows of P span W^perp.
        let perp: Vec<QVec> = if span.is_empty() {
            (0..self.ambient)
                .map(|i| {
                    let mut e = vec![Rat::zero(); self.ambient];
                    e[i] = Rat::one();
                    e
                })
                .collect()
        } else {
            QMat::from_rows(span).kernel()
        };
        if perp.is_empty() {
            return Ok(self.clone());
        }
        let pb = QMat::from_rows(&perp).mul_mat(&self.basis_matrix());
        let kernel = integer_kernel(&pb);
        let basis: Vec<QVec> = kernel
            .iter()
            .map(|k| {
                let kq: QVec = k.iter().map(|x| Rat::from_integer(x.clone())).collect();
                self.basis_matrix().mul_vec(&kq)
            })
            .collect();
        Lattice::from_basis(self.ambient, basis)
    }
}

/// A symmetric rational bilinear form on `R^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BilinearForm {
    pub mat: QMat,
}

impl BilinearForm {
    pub fn new(mat: QMat) -> Result<Self> {
        if mat.rows != mat.cols {
            return Err(Error::DimensionMismatch { expected: mat.rows, got: mat.cols });
        }
        for i in 0..mat.rows {
            for j in 0..i {
                if mat.at(i, j) != mat.at(j, i) {
                    return Err(Error::InconsistentInput(String::from(
                        "bilinear form matrix is not symmetric",
                    )));
                }
            }
        }
        Ok(BilinearForm { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.rows
    }

    pub fn eval(&self, u: &[Rat], v: &[Rat]) -> Rat {
        crate::rat::dot(u, &self.mat.mul_vec(v))
    }

    /// Sylvester's criterion: all leading principal minors positive.
    pub fn is_positive_definite(&self) -> bool {
        let n = self.dim();
        for k in 1..=n {
            let mut sub = QMat::zeros(k, k);
            for i in 0..k {
                for j in 0..k {
                    sub.set(i, j, self.mat.at(i, j).clone());
                }
            }
            if !sub.det().is_positive() {
                return false;
            }
        }
        true
    }

    pub fn add(&self, other: &BilinearForm) -> BilinearForm {
        BilinearForm { mat: self.mat.add(&other.mat) }
    }

    pub fn scale(&self, s: &Rat) -> BilinearForm {
        BilinearForm { mat: self.mat.scale(s) }
    }
}

/// Mixed volume of the zonotopes spanned by the given lattice bases: the sum
/// of `|det|` over all ways to pick one basis vector per lattice, divided by
/// `r!`. Depends on the chosen bases, agrees with the covolume when all
/// arguments coincide.
pub fn mixed_lattice_volume(bases: &[Vec<QVec>]) -> Result<Rat> {
    let r = bases.len();
    for b in bases {
        if b.len() != r {
            return Err(Error::DimensionMismatch { expected: r, got: b.len() });
        }
        for v in b {
            if v.len() != r {
                return Err(Error::DimensionMismatch { expected: r, got: v.len() });
            }
        }
    }
    if r == 0 {
        return Ok(Rat::one());
    }
    let mut total = Rat::zero();
    let mut idx = vec![0usize; r];
    loop {
        let cols: Vec<QVec> = (0..r).map(|i| bases[i][idx[i]].clone()).collect();
        total += QMat::from_cols(&cols).det().abs();
        // odometer over index tuples
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < r {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == r {
                return Ok(total / factorial(r));
            }
        }
    }
}

/// Volume of the zonotope spanned by the given generators in `R^dim`:
/// the sum of `|det|` over all `dim`-subsets.
pub fn zonotope_volume(gens: &[QVec], dim: usize) -> Rat {
    let mut total = Rat::zero();
    let mut subset: Vec<usize> = (0..dim).collect();
    if gens.len() < dim || dim == 0 {
        return if dim == 0 { Rat::one() } else { Rat::zero() };
    }
    loop {
        let cols: Vec<QVec> = subset.iter().map(|&i| gens[i].clone()).collect();
        total += QMat::from_cols(&cols).det().abs();
        // next combination
        let mut k = dim;
        loop {
            if k == 0 {
                return total;
            }
            k -= 1;
            if subset[k] + 1 <= gens.len() - (dim - k) {
                subset[k] += 1;
                for j in k + 1..dim {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Mixed discriminant: the polarization of the determinant. For square
/// matrices `A_1 .. A_r` this is `(1/r!) * sum over permutations s of
/// det(column j taken from A_{s(j)})`. Multilinear and symmetric in the
/// arguments, with `D(A,..,A) = det A`.
pub fn mixed_discriminant(mats: &[QMat]) -> Result<Rat> {
    let r = mats.len();
    for m in mats {
        if m.rows != r || m.cols != r {
            return Err(Error::DimensionMismatch { expected: r, got: m.rows });
        }
    }
    if r == 0 {
        return Ok(Rat::one());
    }
    let mut total = Rat::zero();
    let mut perm: Vec<usize> = (0..r).collect();
    permute_sum(&mut perm, 0, mats, &mut total);
    Ok(total / factorial(r))
}

fn permute_sum(perm: &mut Vec<usize>, k: usize, mats: &[QMat], total: &mut Rat) {
    let r = perm.len();
    if k == r {
        let cols: Vec<QVec> = (0..r).map(|j| mats[perm[j]].col(j)).collect();
        *total += QMat::from_cols(&cols).det();
        return;
    }
    for i in k..r {
        perm.swap(k, i);
        permute_sum(perm, k + 1, mats, total);
        perm.swap(k, i);
    }
}

pub fn factorial(k: usize) -> Rat {
    let mut f = Rat::one();
    for i in 2..=k {
        f *= Rat::from_integer(Int::from(i as i64));
    }
    f
}

/// Binomial coefficient as a rational.
pub fn binomial(n: usize, k: usize) -> Rat {
    if k > n {
        return Rat::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// All strictly increasing `k`-subsets of `{0, .., n-1}`, in lexicographic
/// order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // advance to the next subset
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] + 1 <= n - (k - i) {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rint};

    #[test]
    fn covolume_and_membership() {
        let l = Lattice::from_basis(
            2,
            vec![vec![rint(2), rint(0)], vec![rint(0), rint(1)]],
        )
        .unwrap();
        assert_eq!(l.covolume().unwrap(), rint(2));
        assert!(l.contains(&[rint(4), rint(3)]));
        assert!(!l.contains(&[rint(1), rint(0)]));
        assert!(l.is_sublattice_of(&Lattice::standard(2)));
        assert!(!Lattice::standard(2).is_sublattice_of(&l));
    }

    #[test]
    fn generators_are_reduced() {
        let l = Lattice::from_generators(
            2,
            &[vec![rint(2), rint(0)], vec![rint(3), rint(0)], vec![rint(0), rint(1)]],
        );
        assert_eq!(l.rank(), 2);
        assert!(l.eq_lattice(&Lattice::standard(2)));
        let half = Lattice::from_generators(1, &[vec![rat(1, 2)], vec![rat(1, 3)]]);
        assert_eq!(half.covolume().unwrap(), rat(1, 6));
    }

    #[test]
    fn dual_of_scaled() {
        let l = Lattice::from_basis(
            2,
            vec![vec![rint(2), rint(0)], vec![rint(0), rint(3)]],
        )
        .unwrap();
        let d = l.dual().unwrap();
        assert_eq!(d.covolume().unwrap(), rat(1, 6));
        assert!(d.contains(&[rat(1, 2), rat(1, 3)]));
    }

    #[test]
    fn subspace_intersection_is_saturated() {
        let l = Lattice::standard(2);
        let diag = l.intersect_subspace(&[vec![rint(1), rint(1)]]).unwrap();
        assert_eq!(diag.rank(), 1);
        assert!(diag.contains(&[rint(1), rint(1)]));
        assert!(diag.contains(&[rint(-3), rint(-3)]));
        assert!(!diag.contains(&[rat(1, 2), rat(1, 2)]));

        let skew = l.intersect_subspace(&[vec![rint(1), rint(2)]]).unwrap();
        assert!(skew.contains(&[rint(1), rint(2)]));
        assert!(!skew.contains(&[rat(1, 2), rint(1)]));

        let two = Lattice::from_basis(
            2,
            vec![vec![rint(2), rint(0)], vec![rint(0), rint(2)]],
        )
        .unwrap();
        let d2 = two.intersect_subspace(&[vec![rint(1), rint(1)]]).unwrap();
        assert!(d2.contains(&[rint(2), rint(2)]));
        assert!(!d2.contains(&[rint(1), rint(1)]));
    }

    #[test]
    fn positive_definiteness() {
        let good = BilinearForm::new(QMat::from_rows(&[
            vec![rint(2), rint(1)],
            vec![rint(1), rint(2)],
        ]))
        .unwrap();
        assert!(good.is_positive_definite());
        let bad = BilinearForm::new(QMat::from_rows(&[
            vec![rint(1), rint(2)],
            vec![rint(2), rint(1)],
        ]))
        .unwrap();
        assert!(!bad.is_positive_definite());
        assert!(BilinearForm::new(QMat::from_rows(&[
            vec![rint(1), rint(2)],
            vec![rint(3), rint(1)],
        ]))
        .is_err());
    }

    #[test]
    fn mixed_volume_example() {
        let e = vec![vec![rint(1), rint(0)], vec![rint(0), rint(1)]];
        let f = vec![vec![rint(2), rint(0)], vec![rint(0), rint(1)]];
        assert_eq!(mixed_lattice_volume(&[e.clone(), e.clone()]).unwrap(), rint(1));
        assert_eq!(mixed_lattice_volume(&[f.clone(), f.clone()]).unwrap(), rint(2));
        assert_eq!(mixed_lattice_volume(&[e.clone(), f.clone()]).unwrap(), rat(3, 2));
        assert_eq!(
            mixed_lattice_volume(&[e, f.clone()]).unwrap(),
            mixed_lattice_volume(&[f.clone(), vec![vec![rint(1), rint(0)], vec![rint(0), rint(1)]]])
                .unwrap()
        );
    }

    #[test]
    fn mixed_discriminant_diag_and_multilinear() {
        let a = QMat::from_rows(&[vec![rint(2), rint(1)], vec![rint(1), rint(2)]]);
        let b = QMat::from_rows(&[vec![rint(1), rint(0)], vec![rint(0), rint(3)]]);
        assert_eq!(mixed_discriminant(&[a.clone(), a.clone()]).unwrap(), a.det());
        let dab = mixed_discriminant(&[a.clone(), b.clone()]).unwrap();
        let dba = mixed_discriminant(&[b.clone(), a.clone()]).unwrap();
        assert_eq!(dab, dba);
        let sum = a.add(&b);
        let dss = mixed_discriminant(&[sum.clone(), sum]).unwrap();
        // det(a+b) = D(a,a) + 2 D(a,b) + D(b,b)
        assert_eq!(dss, a.det() + rint(2) * &dab + b.det());
    }

    #[test]
    fn zonotope_volume_matches_polarization_on_diagonal() {
        let gens = vec![vec![rint(1), rint(0)], vec![rint(1), rint(2)]];
        // parallelogram spanned by the generators
        assert_eq!(zonotope_volume(&gens, 2), rint(2));
        let three = vec![
            vec![rint(1), rint(0)],
            vec![rint(0), rint(1)],
            vec![rint(1), rint(1)],
        ];
        assert_eq!(zonotope_volume(&three, 2), rint(3));
    }
}
