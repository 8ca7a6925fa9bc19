//! S-boxes on GF(2^n) as fully materialized lookup tables.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gf2n::{Elem, FieldSpec};

/// A function on GF(2^n), `lut[x] = F(x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SBox {
    spec: FieldSpec,
    lut: Vec<u32>,
    exponent: Option<u64>,
}

impl SBox {
    /// `F(x) = x^d`.
    pub fn power(spec: &FieldSpec, d: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroExponent);
        }
        let lut = spec.elements().map(|x| spec.pow(x, d).0).collect();
        Ok(SBox {
            spec: spec.clone(),
            lut,
            exponent: Some(d),
        })
    }

    /// `F(x) = x^(2^(m+1) - 1)`, the power map with known closed-form tables.
    pub fn closed_form_map(spec: &FieldSpec) -> Self {
        Self::power(spec, spec.closed_form_exponent()).expect("exponent is positive")
    }

    /// Inverse map `x^(2^n - 2)`.
    pub fn inversion(spec: &FieldSpec) -> Self {
        Self::power(spec, (1u64 << spec.n()) - 2).expect("exponent is positive")
    }

    pub fn from_lut(spec: &FieldSpec, values: &[u64]) -> Result<Self> {
        if values.len() != spec.order() {
            return Err(Error::LutLength {
                got: values.len(),
                expected: spec.order(),
            });
        }
        let lut = values
            .iter()
            .enumerate()
            .map(|(index, &v)| {
                spec.element(v)
                    .map(Elem::bits)
                    .map_err(|_| Error::LutRange {
                        index,
                        value: v,
                        n: spec.n(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SBox {
            spec: spec.clone(),
            lut,
            exponent: None,
        })
    }

    /// Parses the line-oriented LUT format: one value per line in index
    /// order, decimal or `0x` hex, `#` starts a comment, blank lines ignored.
    pub fn parse_lut(spec: &FieldSpec, text: &str) -> Result<Self> {
        let mut values = Vec::with_capacity(spec.order());
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let value = parse_int(line).ok_or_else(|| Error::LutParse {
                line: i + 1,
                message: format!("cannot parse {line:?} as an integer"),
            })?;
            values.push(value);
        }
        Self::from_lut(spec, &values)
    }

    pub fn to_lut_text(&self) -> String {
        let mut out = String::with_capacity(self.lut.len() * 6);
        match self.exponent {
            Some(d) => {
                let _ = writeln!(
                    out,
                    "# x^{d} over GF(2^{}), modulus {:#x}",
                    self.spec.n(),
                    self.spec.modulus()
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "# GF(2^{}), modulus {:#x}",
                    self.spec.n(),
                    self.spec.modulus()
                );
            }
        }
        for v in &self.lut {
            let _ = writeln!(out, "{v:#x}");
        }
        out
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn n(&self) -> u32 {
        self.spec.n()
    }

    pub fn size(&self) -> usize {
        self.lut.len()
    }

    pub fn lut(&self) -> &[u32] {
        &self.lut
    }

    pub fn exponent(&self) -> Option<u64> {
        self.exponent
    }

    /// True for `x^(2^(m+1) - 1)` on its own field, the map the closed forms describe.
    pub fn is_closed_form_map(&self) -> bool {
        let group = (1u64 << self.spec.n()) - 1;
        self.exponent
            .is_some_and(|d| d % group == self.spec.closed_form_exponent() % group)
    }

    #[inline]
    pub fn apply(&self, x: u32) -> u32 {
        self.lut[x as usize]
    }

    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.lut.len()];
        self.lut
            .iter()
            .all(|&y| !std::mem::replace(&mut seen[y as usize], true))
    }

    pub fn inverse(&self) -> Result<SBox> {
        let mut inv = vec![u32::MAX; self.lut.len()];
        for (x, &y) in self.lut.iter().enumerate() {
            if inv[y as usize] != u32::MAX {
                return Err(Error::NotPermutation);
            }
            inv[y as usize] = x as u32;
        }
        Ok(SBox {
            spec: self.spec.clone(),
            lut: inv,
            exponent: None,
        })
    }
}

pub(crate) fn parse_int(s: &str) -> Option<u64> {
    let s = s.trim();
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }

    #[test]
    fn power_boxes() {
        let f3 = FieldSpec::new(3).unwrap();
        let id = SBox::power(&f3, 1).unwrap();
        assert_eq!(id.lut(), &[0, 1, 2, 3, 4, 5, 6, 7]);
        let cube = SBox::power(&f3, 3).unwrap();
        assert_eq!(cube.apply(0b010), 0b011);
        assert_eq!(SBox::power(&f3, 0), Err(Error::ZeroExponent));

        let f4 = FieldSpec::new(4).unwrap();
        let s = SBox::power(&f4, 7).unwrap();
        let mut outputs = s.lut().to_vec();
        outputs.sort_unstable();
        outputs.dedup();
        assert_eq!(outputs.len(), 16);
        assert!(s.is_permutation());
    }

    #[test]
    fn closed_form_exponents() {
        for (n, d) in [(3, 3), (4, 7), (5, 7), (6, 15)] {
            let f = FieldSpec::new(n).unwrap();
            let s = SBox::closed_form_map(&f);
            assert_eq!(s.exponent(), Some(d));
            assert!(s.is_closed_form_map());
        }
        assert!(!SBox::power(&FieldSpec::new(4).unwrap(), 3)
            .unwrap()
            .is_closed_form_map());
    }

    #[test]
    fn from_lut_validation() {
        let f = FieldSpec::new(2).unwrap();
        let id = SBox::from_lut(&f, &[0, 1, 2, 3]).unwrap();
        assert_eq!(id.exponent(), None);
        assert_eq!(
            SBox::from_lut(&f, &[0, 1, 2]),
            Err(Error::LutLength {
                got: 3,
                expected: 4
            })
        );
        assert_eq!(
            SBox::from_lut(&f, &[0, 1, 2, 4]),
            Err(Error::LutRange {
                index: 3,
                value: 4,
                n: 2
            })
        );
    }

    #[test]
    fn lut_text_format() {
        let f = FieldSpec::new(2).unwrap();
        let s = SBox::parse_lut(&f, "# header\n0\n0x3 # three\n\n2\n1\n").unwrap();
        assert_eq!(s.lut(), &[0, 3, 2, 1]);
        let again = SBox::parse_lut(&f, &s.to_lut_text()).unwrap();
        assert_eq!(again.lut(), s.lut());
        match SBox::parse_lut(&f, "0\n1\nzz\n3\n") {
            Err(Error::LutParse { line: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn permutation_and_inverse() {
        let f3 = FieldSpec::new(3).unwrap();
        assert!(SBox::power(&f3, 3).unwrap().is_permutation());
        let f4 = FieldSpec::new(4).unwrap();
        let cube = SBox::power(&f4, 3).unwrap();
        assert!(!cube.is_permutation());
        assert_eq!(cube.inverse(), Err(Error::NotPermutation));

        let id = SBox::power(&f4, 1).unwrap();
        assert_eq!(id.inverse().unwrap().lut(), id.lut());
        let s = SBox::power(&f4, 7).unwrap();
        let inv = s.inverse().unwrap();
        for x in 0..16 {
            assert_eq!(inv.apply(s.apply(x)), x);
        }
    }

    #[test]
    fn power_permutation_iff_coprime() {
        for n in 2..=8 {
            let f = FieldSpec::new(n).unwrap();
            let group = (1u64 << n) - 1;
            for d in 1..=(1u64 << n) {
                let s = SBox::power(&f, d).unwrap();
                assert_eq!(s.is_permutation(), gcd(d, group) == 1, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn closed_form_map_permutation_by_parity() {
        for n in 2..=12 {
            let f = FieldSpec::new(n).unwrap();
            let s = SBox::closed_form_map(&f);
            let expected = if f.is_even() { f.m().is_multiple_of(2) } else { true };
            assert_eq!(s.is_permutation(), expected, "n={n}");
        }
    }
}
