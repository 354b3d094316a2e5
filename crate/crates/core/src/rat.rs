//! Exact rational scalars and vector helpers.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::{One, Signed, Zero};

pub type Int = num_bigint::BigInt;
/// Exact rational scalar; always kept in lowest terms by `num-rational`.
pub type Rat = num_rational::BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(Int::from(n), Int::from(d))
}

pub fn rint(n: i64) -> Rat {
    Rat::from_integer(Int::from(n))
}

pub type QVec = Vec<Rat>;

pub fn zeros(n: usize) -> QVec {
    vec![Rat::zero(); n]
}

pub fn vadd(a: &[Rat], b: &[Rat]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vsub(a: &[Rat], b: &[Rat]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vscale(c: &Rat, a: &[Rat]) -> QVec {
    a.iter().map(|x| c * x).collect()
}

pub fn vneg(a: &[Rat]) -> QVec {
    a.iter().map(|x| -x).collect()
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(Rat::zero(), |s, (x, y)| s + x * y)
}

pub fn is_zero_vec(a: &[Rat]) -> bool {
    a.iter().all(|x| x.is_zero())
}

/// Scales a rational vector to a primitive integer vector with positive
/// leading entry. Used as a canonical form for directions and normals.
pub fn primitive(a: &[Rat]) -> QVec {
    if is_zero_vec(a) {
        return a.to_vec();
    }
    let mut denom_lcm = Int::one();
    for x in a {
        denom_lcm = num_integer::lcm(denom_lcm, x.denom().clone());
    }
    let ints: Vec<Int> = a.iter().map(|x| x.numer() * (&denom_lcm / x.denom())).collect();
    let mut g = Int::zero();
    for v in &ints {
        g = num_integer::gcd(g, v.abs());
    }
    let first = ints.iter().find(|v| !v.is_zero()).unwrap();
    let sign = if first.is_negative() { -Int::one() } else { Int::one() };
    let g = g * sign;
    ints.iter().map(|v| Rat::from_integer(v / &g)).collect()
}

pub fn to_f64(x: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

/// Lexicographic comparison of rational vectors.
pub fn lex_cmp(a: &[Rat], b: &[Rat]) -> core::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            core::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

pub fn floor_rat(x: &Rat) -> Int {
    x.floor().to_integer()
}

pub fn ceil_rat(x: &Rat) -> Int {
    x.ceil().to_integer()
}
