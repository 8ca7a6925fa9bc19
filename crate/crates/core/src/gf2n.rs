//! Arithmetic in GF(2^n) over a polynomial basis.
//!
//! Elements are integer-coded coefficient vectors: bit `i` is the
//! coefficient of `x^i`. Addition is XOR and multiplication is a carry-less
//! product reduced modulo the field's irreducible polynomial.

use std::fmt;
use std::ops::BitXor;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_DEGREE: u32 = 2;
pub const MAX_DEGREE: u32 = 24;

/// Lexicographically smallest irreducible polynomial of each degree 2..=24.
const DEFAULT_MODULI: [u32; 23] = [
    0x7, 0xb, 0x13, 0x25, 0x43, 0x83, 0x11b, 0x203, 0x409, 0x805, 0x1009, 0x201b, 0x4021, 0x8003,
    0x1002b, 0x20009, 0x40009, 0x80027, 0x100009, 0x200005, 0x400003, 0x800021, 0x100001b,
];

/// Log/antilog tables are only built up to this degree (8 MiB at n = 20).
const LOG_TABLE_MAX_DEGREE: u32 = 20;

/// An element of GF(2^n), stored as its coefficient vector.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Elem(pub u32);

impl Elem {
    pub const ZERO: Elem = Elem(0);
    pub const ONE: Elem = Elem(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.0
    }
}

impl BitXor for Elem {
    type Output = Elem;

    #[inline]
    fn bitxor(self, rhs: Elem) -> Elem {
        Elem(self.0 ^ rhs.0)
    }
}

impl From<u32> for Elem {
    fn from(v: u32) -> Self {
        Elem(v)
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

impl fmt::LowerHex for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::LowerHex::fmt(&self.0, f)
    }
}

struct LogTables {
    log: Vec<u32>,
    exp: Vec<u32>,
}

struct Precomputed {
    /// Bit `i` holds `Tr(x^i)`, so `Tr(a) = parity(a & trace_mask)`.
    trace_mask: u32,
    /// Echelon basis `(image, preimage)` of `y -> y^2 + y` restricted to
    /// `span{x, x^2, ..., x^(n-1)}`, a complement of its kernel `{0, 1}`.
    /// Sorted by the leading bit of `image`, highest first.
    artin_schreier: Vec<(u32, u32)>,
    logs: OnceLock<Option<LogTables>>,
}

/// Descriptor of GF(2^n): degree, modulus and the derived `m = floor(n/2)`.
///
/// Cloning is cheap; precomputed tables are shared.
#[derive(Clone)]
pub struct FieldSpec {
    n: u32,
    modulus: u32,
    m: u32,
    even: bool,
    inner: Arc<Precomputed>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("n", &self.n)
            .field("modulus", &format_args!("{:#x}", self.modulus))
            .field("m", &self.m)
            .field("even", &self.even)
            .finish()
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.modulus == other.modulus
    }
}

impl Eq for FieldSpec {}

/// Built-in modulus for degree `n`, if supported.
pub fn default_modulus(n: u32) -> Option<u32> {
    if (MIN_DEGREE..=MAX_DEGREE).contains(&n) {
        Some(DEFAULT_MODULI[(n - MIN_DEGREE) as usize])
    } else {
        None
    }
}

impl FieldSpec {
    /// GF(2^n) with the built-in modulus.
    pub fn new(n: u32) -> Result<Self> {
        let modulus = default_modulus(n).ok_or(Error::UnsupportedDegree(n))?;
        Self::with_modulus(n, modulus as u64)
    }

    /// GF(2^n) with an explicit modulus, checked for degree and irreducibility.
    pub fn with_modulus(n: u32, modulus: u64) -> Result<Self> {
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&n) {
            return Err(Error::UnsupportedDegree(n));
        }
        if modulus >> n != 1 {
            return Err(Error::ModulusDegree { modulus, n });
        }
        if !poly::is_irreducible(modulus, n) {
            return Err(Error::Reducible(modulus));
        }
        let mut spec = FieldSpec {
            n,
            modulus: modulus as u32,
            m: n / 2,
            even: n.is_multiple_of(2),
            inner: Arc::new(Precomputed {
                trace_mask: 0,
                artin_schreier: Vec::new(),
                logs: OnceLock::new(),
            }),
        };
        let trace_mask = (0..n)
            .filter(|&i| spec.trace_by_definition(Elem(1 << i)) == 1)
            .fold(0u32, |acc, i| acc | (1 << i));
        let artin_schreier = spec.build_artin_schreier_basis();
        spec.inner = Arc::new(Precomputed {
            trace_mask,
            artin_schreier,
            logs: OnceLock::new(),
        });
        Ok(spec)
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// `m = floor(n / 2)`, so that `n = 2m` or `n = 2m + 1`.
    #[inline]
    pub fn m(&self) -> u32 {
        self.m
    }

    #[inline]
    pub fn is_even(&self) -> bool {
        self.even
    }

    /// Number of field elements, `2^n`.
    #[inline]
    pub fn order(&self) -> usize {
        1usize << self.n
    }

    #[inline]
    pub fn contains(&self, a: Elem) -> bool {
        a.0 >> self.n == 0
    }

    pub fn element(&self, value: u64) -> Result<Elem> {
        if value >> self.n != 0 {
            return Err(Error::ElementRange { value, n: self.n });
        }
        Ok(Elem(value as u32))
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> + Clone {
        (0..1u32 << self.n).map(Elem)
    }

    /// The exponent `2^(m+1) - 1` of the power map studied here.
    pub fn closed_form_exponent(&self) -> u64 {
        (1u64 << (self.m + 1)) - 1
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        let wide = a.0 as u64;
        let mut acc = 0u64;
        let mut rest = b.0;
        let mut shift = 0;
        while rest != 0 {
            if rest & 1 == 1 {
                acc ^= wide << shift;
            }
            rest >>= 1;
            shift += 1;
        }
        Elem(self.reduce(acc))
    }

    #[inline]
    fn reduce(&self, mut v: u64) -> u32 {
        let modulus = self.modulus as u64;
        while v >> self.n != 0 {
            let top = 63 - v.leading_zeros();
            v ^= modulus << (top - self.n);
        }
        v as u32
    }

    #[inline]
    pub fn square(&self, a: Elem) -> Elem {
        self.mul(a, a)
    }

    /// `a^(2^k)`.
    pub fn frobenius(&self, a: Elem, k: u32) -> Elem {
        (0..k).fold(a, |acc, _| self.square(acc))
    }

    /// `a^e` with `0^0 = 1`. For nonzero `a` the exponent is reduced mod `2^n - 1`.
    pub fn pow(&self, a: Elem, e: u64) -> Elem {
        if e == 0 {
            return Elem::ONE;
        }
        if a.is_zero() {
            return Elem::ZERO;
        }
        let group = (1u64 << self.n) - 1;
        let e = e % group;
        match self.log_tables() {
            Some(t) => {
                let l = t.log[a.0 as usize] as u64;
                Elem(t.exp[((l * e) % group) as usize])
            }
            None => self.pow_by_squaring(a, e),
        }
    }

    fn pow_by_squaring(&self, a: Elem, mut e: u64) -> Elem {
        let mut base = a;
        let mut acc = Elem::ONE;
        while e != 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.square(base);
            e >>= 1;
        }
        acc
    }

    /// `a^(2^n - 2)`, the multiplicative inverse of a nonzero element.
    pub fn inv(&self, a: Elem) -> Result<Elem> {
        if a.is_zero() {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(a, (1u64 << self.n) - 2))
    }

    pub fn div(&self, a: Elem, b: Elem) -> Result<Elem> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Absolute trace `Tr_1^n(a)`.
    #[inline]
    pub fn trace(&self, a: Elem) -> u8 {
        ((a.0 & self.inner.trace_mask).count_ones() & 1) as u8
    }

    fn trace_by_definition(&self, a: Elem) -> u8 {
        let mut acc = Elem::ZERO;
        let mut term = a;
        for _ in 0..self.n {
            acc = acc ^ term;
            term = self.square(term);
        }
        debug_assert!(acc.0 <= 1);
        acc.0 as u8
    }

    /// `Tr_1^m(a)` for `a` in the subfield GF(2^m) of GF(2^(2m)).
    pub fn subfield_trace(&self, a: Elem) -> Result<u8> {
        if !self.is_in_subfield(a)? {
            return Err(Error::NotInSubfield(a.0));
        }
        let mut acc = Elem::ZERO;
        let mut term = a;
        for _ in 0..self.m {
            acc = acc ^ term;
            term = self.square(term);
        }
        debug_assert!(acc.0 <= 1, "subfield trace left the prime field");
        Ok(acc.0 as u8)
    }

    /// Whether `a^(2^m) = a`, i.e. `a` lies in GF(2^m). Even degree only.
    pub fn is_in_subfield(&self, a: Elem) -> Result<bool> {
        if !self.even {
            return Err(Error::OddDegree(self.n));
        }
        Ok(self.frobenius(a, self.m) == a)
    }

    /// Membership in the unit circle `{x : x^(2^m+1) = 1}`. Even degree only.
    pub fn in_unit_circle(&self, a: Elem) -> Result<bool> {
        if !self.even {
            return Err(Error::OddDegree(self.n));
        }
        Ok(!a.is_zero() && self.mul(self.frobenius(a, self.m), a) == Elem::ONE)
    }

    /// All roots of `a x^2 + b x + c` in GF(2^n), in ascending order.
    pub fn solve_quadratic(&self, a: Elem, b: Elem, c: Elem) -> Result<Vec<Elem>> {
        if a.is_zero() {
            return Err(Error::ZeroLeadingCoefficient);
        }
        let a_inv = self.inv(a)?;
        if b.is_zero() {
            let root = self.frobenius(self.mul(c, a_inv), self.n - 1);
            return Ok(vec![root]);
        }
        // x = (b/a) y turns the equation into y^2 + y = ac/b^2.
        let scale = self.mul(b, a_inv);
        let u = self.mul(self.mul(a, c), self.inv(self.square(b))?);
        let Some(y) = self.solve_artin_schreier(u) else {
            return Ok(Vec::new());
        };
        let mut roots = vec![self.mul(scale, y), self.mul(scale, y ^ Elem::ONE)];
        roots.sort();
        Ok(roots)
    }

    /// One solution of `y^2 + y = u`, or `None` when `Tr(u) = 1`.
    pub fn solve_artin_schreier(&self, u: Elem) -> Option<Elem> {
        let mut residual = u.0;
        let mut y = 0u32;
        for &(image, preimage) in &self.inner.artin_schreier {
            let lead = 31 - image.leading_zeros();
            if residual >> lead & 1 == 1 {
                residual ^= image;
                y ^= preimage;
            }
        }
        (residual == 0).then_some(Elem(y))
    }

    fn build_artin_schreier_basis(&self) -> Vec<(u32, u32)> {
        let mut rows: Vec<(u32, u32)> = Vec::with_capacity(self.n as usize - 1);
        for i in 1..self.n {
            let e = Elem(1 << i);
            let mut image = (self.square(e) ^ e).0;
            let mut preimage = e.0;
            for &(img, pre) in &rows {
                let lead = 31 - img.leading_zeros();
                if image >> lead & 1 == 1 {
                    image ^= img;
                    preimage ^= pre;
                }
            }
            // The map is injective on the complement, so no row vanishes.
            debug_assert_ne!(image, 0);
            let pos = rows
                .iter()
                .position(|&(img, _)| img.leading_zeros() > image.leading_zeros())
                .unwrap_or(rows.len());
            rows.insert(pos, (image, preimage));
        }
        rows
    }

    fn log_tables(&self) -> Option<&LogTables> {
        self.inner
            .logs
            .get_or_init(|| {
                (self.n <= LOG_TABLE_MAX_DEGREE).then(|| {
                    let group = (1u32 << self.n) - 1;
                    let g = self.multiplicative_generator();
                    let mut log = vec![0u32; 1 << self.n];
                    let mut exp = vec![0u32; group as usize];
                    let mut x = Elem::ONE;
                    for (i, slot) in exp.iter_mut().enumerate() {
                        *slot = x.0;
                        log[x.0 as usize] = i as u32;
                        x = self.mul(x, g);
                    }
                    LogTables { log, exp }
                })
            })
            .as_ref()
    }

    /// Smallest element of multiplicative order `2^n - 1`.
    pub fn multiplicative_generator(&self) -> Elem {
        let group = (1u64 << self.n) - 1;
        let factors = prime_factors(group);
        (2..1u32 << self.n)
            .map(Elem)
            .find(|&g| {
                factors
                    .iter()
                    .all(|&p| self.pow_by_squaring(g, group / p) != Elem::ONE)
            })
            .unwrap_or(Elem::ONE)
    }
}

fn prime_factors(mut v: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= v {
        if v.is_multiple_of(p) {
            out.push(p);
            while v.is_multiple_of(p) {
                v /= p;
            }
        }
        p += 1;
    }
    if v > 1 {
        out.push(v);
    }
    out
}

/// Polynomials over GF(2) packed into `u64`, used for the irreducibility test.
mod poly {
    fn degree(p: u64) -> i32 {
        63 - p.leading_zeros() as i32
    }

    fn rem(mut a: u64, m: u64) -> u64 {
        let dm = degree(m);
        while a != 0 && degree(a) >= dm {
            a ^= m << (degree(a) - dm);
        }
        a
    }

    fn mulmod(a: u64, b: u64, m: u64) -> u64 {
        let dm = degree(m);
        let mut acc = 0u64;
        let mut a = a;
        let mut b = b;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if degree(a) >= dm {
                a ^= m;
            }
        }
        acc
    }

    fn gcd(mut a: u64, mut b: u64) -> u64 {
        while b != 0 {
            let r = rem(a, b);
            a = b;
            b = r;
        }
        a
    }

    /// `x^(2^k) mod m`.
    fn x_pow_pow2(k: u32, m: u64) -> u64 {
        (0..k).fold(rem(2, m), |acc, _| mulmod(acc, acc, m))
    }

    /// Rabin's test: `x^(2^n) = x` and `gcd(x^(2^(n/q)) - x, m) = 1` for
    /// every prime `q | n`.
    pub(super) fn is_irreducible(m: u64, n: u32) -> bool {
        let x = rem(2, m);
        if x_pow_pow2(n, m) != x {
            return false;
        }
        super::prime_factors(n as u64)
            .into_iter()
            .all(|q| gcd(m, x_pow_pow2(n / q as u32, m) ^ x) == 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf8() -> FieldSpec {
        FieldSpec::new(3).unwrap()
    }

    #[test]
    fn add_is_xor() {
        let f = gf8();
        assert_eq!(f.add(Elem(0b101), Elem(0b011)), Elem(0b110));
        assert_eq!(f.add(Elem(0b101), Elem::ZERO), Elem(0b101));
        assert_eq!(f.add(Elem(0b101), Elem(0b101)), Elem::ZERO);
    }

    #[test]
    fn mul_small_cases() {
        let f = gf8();
        assert_eq!(f.modulus(), 0b1011);
        assert_eq!(f.mul(Elem(0b010), Elem(0b011)), Elem(0b110));
        assert_eq!(f.mul(Elem(0b100), Elem(0b010)), Elem(0b011));
        for a in f.elements() {
            assert_eq!(f.mul(a, Elem::ONE), a);
        }
    }

    #[test]
    fn pow_conventions() {
        let f = gf8();
        assert_eq!(f.pow(Elem(0b010), 7), Elem::ONE);
        assert_eq!(f.pow(Elem::ZERO, 5), Elem::ZERO);
        assert_eq!(f.pow(Elem(0b110), 0), Elem::ONE);
        assert_eq!(f.pow(Elem::ZERO, 0), Elem::ONE);
    }

    #[test]
    fn pow_table_path_matches_square_and_multiply() {
        for n in [5, 8, 11] {
            let f = FieldSpec::new(n).unwrap();
            for a in f.elements().step_by(7) {
                for e in [1u64, 2, 3, 15, 255, (1 << (f.m() + 1)) + 2, 1 << 40] {
                    let expected = if a.is_zero() {
                        Elem::ZERO
                    } else {
                        f.pow_by_squaring(a, e)
                    };
                    assert_eq!(f.pow(a, e), expected, "n={n} a={a} e={e}");
                }
            }
        }
    }

    #[test]
    fn inverse_small_cases() {
        let f = gf8();
        assert_eq!(f.inv(Elem::ONE).unwrap(), Elem::ONE);
        let brute = f
            .elements()
            .find(|&y| f.mul(Elem(0b010), y) == Elem::ONE)
            .unwrap();
        assert_eq!(brute, Elem(0b101));
        assert_eq!(f.inv(Elem(0b010)).unwrap(), Elem(0b101));
        assert_eq!(f.inv(Elem::ZERO), Err(Error::ZeroInverse));
    }

    #[test]
    fn inverse_exhaustive_up_to_12() {
        for n in 2..=12 {
            let f = FieldSpec::new(n).unwrap();
            for a in f.elements().skip(1) {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), Elem::ONE);
            }
        }
    }

    #[test]
    fn trace_small_cases() {
        let f = gf8();
        assert_eq!(f.trace(Elem::ZERO), 0);
        assert_eq!(f.trace(Elem::ONE), 1);
        let x = Elem(0b010);
        let sum = x ^ f.pow(x, 2) ^ f.pow(x, 4);
        assert_eq!(sum, Elem::ZERO);
        assert_eq!(f.trace(x), 0);
    }

    #[test]
    fn trace_is_linear_and_frobenius_invariant() {
        for n in 2..=10 {
            let f = FieldSpec::new(n).unwrap();
            let ones = f.elements().filter(|&a| f.trace(a) == 1).count();
            assert_eq!(ones, f.order() / 2);
            for a in f.elements() {
                assert_eq!(f.trace(a), f.trace_by_definition(a));
                assert_eq!(f.trace(f.square(a)), f.trace(a));
                let b = Elem((a.0.wrapping_mul(2654435761)) & (f.order() as u32 - 1));
                assert_eq!(f.trace(a ^ b), f.trace(a) ^ f.trace(b));
            }
        }
    }

    #[test]
    fn subfield_membership_and_trace() {
        let f = FieldSpec::new(4).unwrap();
        let sub: Vec<Elem> = f
            .elements()
            .filter(|&a| f.is_in_subfield(a).unwrap())
            .collect();
        assert_eq!(sub.len(), 4);
        assert!(sub.contains(&Elem::ZERO) && sub.contains(&Elem::ONE));
        assert_eq!(f.subfield_trace(Elem::ZERO).unwrap(), 0);
        assert_eq!(f.subfield_trace(Elem::ONE).unwrap(), 0);
        // the two generators of GF(4) satisfy u^2 + u + 1 = 0
        for &u in sub.iter().filter(|u| u.0 > 1) {
            assert_eq!(f.square(u) ^ u ^ Elem::ONE, Elem::ZERO);
            assert_eq!(f.subfield_trace(u).unwrap(), 1);
        }
        let outside = f.elements().find(|a| !sub.contains(a)).unwrap();
        assert_eq!(
            f.subfield_trace(outside),
            Err(Error::NotInSubfield(outside.0))
        );
        assert_eq!(
            FieldSpec::new(5).unwrap().is_in_subfield(Elem::ONE),
            Err(Error::OddDegree(5))
        );
    }

    #[test]
    fn subfield_elements_have_zero_absolute_trace() {
        for n in [2, 4, 6, 8, 10] {
            let f = FieldSpec::new(n).unwrap();
            let mut count = 0;
            for a in f.elements().filter(|&a| f.is_in_subfield(a).unwrap()) {
                count += 1;
                assert_eq!(f.trace(a), 0);
                assert!(f.subfield_trace(a).unwrap() <= 1);
            }
            assert_eq!(count, 1 << f.m());
        }
    }

    #[test]
    fn unit_circle() {
        let f = FieldSpec::new(4).unwrap();
        assert!(f.in_unit_circle(Elem::ONE).unwrap());
        assert!(!f.in_unit_circle(Elem::ZERO).unwrap());
        let count = f
            .elements()
            .filter(|&a| f.in_unit_circle(a).unwrap())
            .count();
        assert_eq!(count, 5);
        let g = f.multiplicative_generator();
        assert!((1..15).all(|e| f.pow(g, e) != Elem::ONE));
        assert!(!f.in_unit_circle(g).unwrap());
    }

    #[test]
    fn quadratic_examples() {
        let f = gf8();
        for v in f.elements() {
            let roots = f.solve_quadratic(Elem::ONE, Elem::ZERO, v).unwrap();
            assert_eq!(roots, vec![f.pow(v, 4)]);
        }
        assert_eq!(
            f.solve_quadratic(Elem::ONE, Elem::ONE, Elem::ZERO).unwrap(),
            vec![Elem::ZERO, Elem::ONE]
        );
        assert!(f
            .solve_quadratic(Elem::ONE, Elem::ONE, Elem::ONE)
            .unwrap()
            .is_empty());
        assert_eq!(
            f.solve_quadratic(Elem::ZERO, Elem::ONE, Elem::ONE),
            Err(Error::ZeroLeadingCoefficient)
        );
    }

    #[test]
    fn default_moduli_are_irreducible() {
        for n in MIN_DEGREE..=MAX_DEGREE {
            let m = default_modulus(n).unwrap() as u64;
            assert!(poly::is_irreducible(m, n), "n={n}");
            // nothing smaller of the same degree is irreducible
            assert!(((1u64 << n) | 1..m)
                .step_by(2)
                .all(|p| !poly::is_irreducible(p, n)));
        }
    }

    #[test]
    fn modulus_validation() {
        assert!(FieldSpec::with_modulus(4, 0x19).is_ok());
        assert_eq!(
            FieldSpec::with_modulus(4, 0x15),
            Err(Error::Reducible(0x15))
        );
        assert_eq!(
            FieldSpec::with_modulus(4, 0x0b),
            Err(Error::ModulusDegree { modulus: 0xb, n: 4 })
        );
        // (x+1)(x^2+x+1)(x^3+x+1): passes x^64 = x and x^8 != x, x^4 != x
        let reducible = clmul(clmul(0b11, 0b111), 0b1011);
        assert_eq!(reducible >> 6, 1);
        assert!(!poly::is_irreducible(reducible, 6));
        assert_eq!(FieldSpec::new(25), Err(Error::UnsupportedDegree(25)));
        assert_eq!(FieldSpec::new(1), Err(Error::UnsupportedDegree(1)));
    }

    fn clmul(a: u64, b: u64) -> u64 {
        (0..32)
            .filter(|i| b >> i & 1 == 1)
            .fold(0, |acc, i| acc ^ (a << i))
    }
}
