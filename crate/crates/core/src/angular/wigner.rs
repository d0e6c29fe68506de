//! Wigner 3j, 6j and 9j symbols and Clebsch–Gordan coefficients.
//!
//! 3j and 6j use Racah's single-sum formulas evaluated in exact rational
//! arithmetic; only the final square root is taken in floating point. 9j is
//! a contraction over three 6j symbols. All symbols return 0 when a triangle
//! or projection rule is violated.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::halfint::{triangle, HalfInt};

fn factorial_table() -> &'static RwLock<Vec<BigInt>> {
    static TABLE: OnceLock<RwLock<Vec<BigInt>>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(vec![BigInt::one()]))
}

fn factorial(n: i32) -> BigInt {
    assert!(n >= 0, "factorial of negative number {n}");
    let n = n as usize;
    {
        let table = factorial_table().read().unwrap();
        if n < table.len() {
            return table[n].clone();
        }
    }
    let mut table = factorial_table().write().unwrap();
    while table.len() <= n {
        let k = table.len();
        let next = &table[k - 1] * BigInt::from(k);
        table.push(next);
    }
    table[n].clone()
}

/// Factorial of a doubled argument that must be even.
fn fact2(twice: i32) -> BigInt {
    debug_assert!(twice % 2 == 0);
    factorial(twice / 2)
}

/// Δ(abc) = (a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)!
fn delta(a: i32, b: i32, c: i32) -> BigRational {
    BigRational::new(
        fact2(a + b - c) * fact2(a - b + c) * fact2(-a + b + c),
        fact2(a + b + c + 2),
    )
}

/// sign(s)·sqrt(s²·p) rounded once.
fn signed_sqrt_product(s: &BigRational, p: &BigRational) -> f64 {
    if s.is_zero() {
        return 0.0;
    }
    let sq = s * s * p;
    let mag = sq.to_f64().expect("finite rational").sqrt();
    if s.is_negative() {
        -mag
    } else {
        mag
    }
}

type Key3 = [i32; 6];
type Key6 = [i32; 6];

fn cache3() -> &'static RwLock<HashMap<Key3, f64>> {
    static C: OnceLock<RwLock<HashMap<Key3, f64>>> = OnceLock::new();
    C.get_or_init(Default::default)
}

fn cache6() -> &'static RwLock<HashMap<Key6, f64>> {
    static C: OnceLock<RwLock<HashMap<Key6, f64>>> = OnceLock::new();
    C.get_or_init(Default::default)
}

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3).
pub fn wigner3j(j1: HalfInt, j2: HalfInt, j3: HalfInt, m1: HalfInt, m2: HalfInt, m3: HalfInt) -> f64 {
    let key = [j1.twice(), j2.twice(), j3.twice(), m1.twice(), m2.twice(), m3.twice()];
    if let Some(v) = cache3().read().unwrap().get(&key) {
        return *v;
    }
    let v = wigner3j_uncached(key);
    cache3().write().unwrap().insert(key, v);
    v
}

fn wigner3j_uncached([j1, j2, j3, m1, m2, m3]: [i32; 6]) -> f64 {
    if m1 + m2 + m3 != 0 {
        return 0.0;
    }
    if !triangle(HalfInt::from_twice(j1), HalfInt::from_twice(j2), HalfInt::from_twice(j3)) {
        return 0.0;
    }
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        if m.abs() > j || (j - m) % 2 != 0 {
            return 0.0;
        }
    }
    // all quantities below are doubled; every factorial argument is even
    let kmin = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let kmax = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut sum = BigRational::zero();
    let mut k = kmin;
    while k <= kmax {
        let den = fact2(k)
            * fact2(j1 + j2 - j3 - k)
            * fact2(j1 - m1 - k)
            * fact2(j2 + m2 - k)
            * fact2(j3 - j2 + m1 + k)
            * fact2(j3 - j1 - m2 + k);
        let term = BigRational::new(BigInt::one(), den);
        if (k / 2) % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        k += 2;
    }
    let pref = delta(j1, j2, j3)
        * BigRational::from_integer(
            fact2(j1 + m1) * fact2(j1 - m1) * fact2(j2 + m2) * fact2(j2 - m2) * fact2(j3 + m3) * fact2(j3 - m3),
        );
    let phase = (j1 - j2 - m3) / 2;
    let v = signed_sqrt_product(&sum, &pref);
    if phase.rem_euclid(2) == 1 {
        -v
    } else {
        v
    }
}

/// Clebsch–Gordan coefficient ⟨j1 m1 j2 m2 | j m⟩ (Condon–Shortley phase).
pub fn clebsch_gordan(j1: HalfInt, m1: HalfInt, j2: HalfInt, m2: HalfInt, j: HalfInt, m: HalfInt) -> f64 {
    let w = wigner3j(j1, j2, j, m1, m2, -m);
    if w == 0.0 {
        return 0.0;
    }
    let phase = (j1.twice() - j2.twice() + m.twice()) / 2;
    let sign = if phase.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * (j.multiplicity() as f64).sqrt() * w
}

/// Wigner 6j symbol {j1 j2 j3; j4 j5 j6}.
pub fn wigner6j(j1: HalfInt, j2: HalfInt, j3: HalfInt, j4: HalfInt, j5: HalfInt, j6: HalfInt) -> f64 {
    let key = [j1.twice(), j2.twice(), j3.twice(), j4.twice(), j5.twice(), j6.twice()];
    if let Some(v) = cache6().read().unwrap().get(&key) {
        return *v;
    }
    let v = wigner6j_uncached(key);
    cache6().write().unwrap().insert(key, v);
    v
}

fn wigner6j_uncached([a, b, c, d, e, f]: [i32; 6]) -> f64 {
    let h = HalfInt::from_twice;
    let triads = [(a, b, c), (a, e, f), (d, b, f), (d, e, c)];
    if triads.iter().any(|&(x, y, z)| !triangle(h(x), h(y), h(z))) {
        return 0.0;
    }
    let alphas = [a + b + c, a + e + f, d + b + f, d + e + c];
    let betas = [a + b + d + e, b + c + e + f, c + a + f + d];
    let tmin = *alphas.iter().max().unwrap();
    let tmax = *betas.iter().min().unwrap();
    let mut sum = BigRational::zero();
    let mut t = tmin;
    while t <= tmax {
        let mut den = BigInt::one();
        for al in alphas {
            den *= fact2(t - al);
        }
        for be in betas {
            den *= fact2(be - t);
        }
        let term = BigRational::new(fact2(t + 2), den);
        if (t / 2) % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        t += 2;
    }
    let pref = triads
        .iter()
        .fold(BigRational::one(), |acc, &(x, y, z)| acc * delta(x, y, z));
    signed_sqrt_product(&sum, &pref)
}

/// Wigner 9j symbol
/// {j1 j2 j3}
/// {j4 j5 j6}
/// {j7 j8 j9}
/// as a sum over products of three 6j symbols.
#[allow(clippy::too_many_arguments)]
pub fn wigner9j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
    j7: HalfInt,
    j8: HalfInt,
    j9: HalfInt,
) -> f64 {
    let rows = [(j1, j2, j3), (j4, j5, j6), (j7, j8, j9)];
    let cols = [(j1, j4, j7), (j2, j5, j8), (j3, j6, j9)];
    if rows.iter().chain(cols.iter()).any(|&(a, b, c)| !triangle(a, b, c)) {
        return 0.0;
    }
    let lo = (j1.twice() - j9.twice())
        .abs()
        .max((j4.twice() - j8.twice()).abs())
        .max((j2.twice() - j6.twice()).abs());
    let hi = (j1.twice() + j9.twice())
        .min(j4.twice() + j8.twice())
        .min(j2.twice() + j6.twice());
    let mut sum = 0.0;
    let mut x2 = lo;
    while x2 <= hi {
        let x = HalfInt::from_twice(x2);
        let sign = if x2 % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign
            * (x2 + 1) as f64
            * wigner6j(j1, j4, j7, j8, j9, x)
            * wigner6j(j2, j5, j8, j4, x, j6)
            * wigner6j(j3, j6, j9, x, j1, j2);
        x2 += 2;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(t: i32) -> HalfInt {
        HalfInt::from_twice(t)
    }

    #[test]
    fn documented_values() {
        let v = wigner3j(h(1), h(1), h(0), h(1), h(-1), h(0));
        assert!((v - 0.5_f64.sqrt()).abs() < 1e-15);
        assert_eq!(wigner3j(h(2), h(2), h(2), h(0), h(0), h(0)), 0.0);
        let v = wigner3j(h(2), h(2), h(4), h(2), h(2), h(-4));
        assert!((v - 0.2_f64.sqrt()).abs() < 1e-15);
        let v = wigner6j(h(1), h(1), h(2), h(1), h(1), h(2));
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(wigner6j(h(1), h(1), h(6), h(1), h(1), h(2)), 0.0);
    }

    #[test]
    fn nonconserving_projection_is_zero() {
        assert_eq!(wigner3j(h(2), h(2), h(2), h(2), h(0), h(0)), 0.0);
        assert_eq!(wigner3j(h(2), h(2), h(2), h(4), h(-4), h(0)), 0.0);
    }

    #[test]
    fn cg_spin_half_singlet_triplet() {
        let s = 0.5_f64.sqrt();
        assert!((clebsch_gordan(h(1), h(1), h(1), h(-1), h(0), h(0)) - s).abs() < 1e-15);
        assert!((clebsch_gordan(h(1), h(-1), h(1), h(1), h(0), h(0)) + s).abs() < 1e-15);
        assert!((clebsch_gordan(h(1), h(1), h(1), h(-1), h(2), h(0)) - s).abs() < 1e-15);
        assert!((clebsch_gordan(h(1), h(1), h(1), h(1), h(2), h(2)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nine_j_with_zero_reduces_to_six_j() {
        // {a b e; c d e; f f 0} = (-1)^{b+c+e+f} {a b e; d c f} / sqrt((2e+1)(2f+1))
        for (a, b, c, d, e, f) in [(1, 1, 1, 1, 2, 2), (2, 2, 2, 2, 2, 4), (3, 1, 1, 3, 2, 2), (2, 4, 4, 2, 4, 2)] {
            let nine = wigner9j(h(a), h(b), h(e), h(c), h(d), h(e), h(f), h(f), h(0));
            let six = wigner6j(h(a), h(b), h(e), h(d), h(c), h(f));
            let phase = if ((b + c + e + f) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let expect = phase * six / (((e + 1) * (f + 1)) as f64).sqrt();
            assert!((nine - expect).abs() < 1e-14, "{nine} vs {expect}");
        }
    }
}
