//! Closed-form DDT, FBCT, FBDT and FBET of `F(x) = x^(2^(m+1)-1)` over
//! GF(2^n), `n = 2m` or `n = 2m + 1`.
//!
//! Each table is described as a list of disjoint index sets, each carrying
//! one value. Every set is evaluated as its own predicate; a tuple matching
//! two sets is reported as [`Error::CaseConflict`], and a tuple matching
//! none falls into the `otherwise` class, whose value is 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2n::{Elem, FieldSpec};
use crate::spectrum::{Domain, Spectrum};
use crate::tables::TableKind;

/// Label of the fallback class, valued 0.
pub const OTHERWISE: &str = "otherwise";

/// A coordinate tuple, the closed-form case it falls in, and the predicted count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryClassification {
    pub table: TableKind,
    #[serde(with = "hex::vec")]
    pub coords: Vec<u32>,
    /// `t = c / a^(2^(m+1)-1)` (called `t1` for the FBET), when `a != 0`.
    #[serde(with = "hex::opt")]
    pub t: Option<u32>,
    /// `t2 = d / b^(2^(m+1)-1)` for the FBET, when `b != 0`.
    #[serde(with = "hex::opt", skip_serializing_if = "Option::is_none", default)]
    pub t2: Option<u32>,
    pub case_label: String,
    pub predicted: u32,
}

/// Where `t` falls for the even-degree DDT rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EvenClass {
    One,
    /// `t^(2^m+1) = 1`, `t != 1`.
    UnitCircle,
    /// Off the unit circle; carries `Tr_1^m((t^(2^m)+t+1)/(t^(2^(m+1)+2)+1))`.
    Trace(u8),
}

/// Closed-form predictor bound to one field.
#[derive(Clone, Debug)]
pub struct ClosedForm {
    spec: FieldSpec,
    exponent: u64,
}

struct Case {
    label: &'static str,
    value: u32,
    holds: bool,
}

fn case(label: &'static str, value: u32, holds: bool) -> Case {
    Case {
        label,
        value,
        holds,
    }
}

impl ClosedForm {
    pub fn new(spec: &FieldSpec) -> Self {
        ClosedForm {
            spec: spec.clone(),
            exponent: spec.closed_form_exponent(),
        }
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    fn q(&self) -> u32 {
        1 << self.spec.n()
    }

    fn two_m(&self) -> u32 {
        1 << self.spec.m()
    }

    fn m_odd(&self) -> bool {
        self.spec.m() % 2 == 1
    }

    fn element(&self, v: u32) -> Result<Elem> {
        self.spec.element(v as u64)
    }

    /// `c / a^(2^(m+1)-1)` for `a != 0`.
    fn t_of(&self, a: Elem, c: Elem) -> Option<Elem> {
        if a.is_zero() {
            return None;
        }
        let denom = self.spec.pow(a, self.exponent);
        Some(self.spec.div(c, denom).expect("a^d is nonzero for a != 0"))
    }

    /// `Tr_1^n(1 / t^(2^m+1))`, reading `1/0` as `0`.
    fn odd_trace(&self, t: Elem) -> u8 {
        let s = self.spec.pow(t, (1u64 << self.spec.m()) + 1);
        if s.is_zero() {
            0
        } else {
            self.spec.trace(self.spec.inv(s).expect("nonzero"))
        }
    }

    /// The subfield-trace argument `(t^(2^m)+t+1) / (t^(2^(m+1)+2)+1)` for
    /// `t` off the unit circle.
    pub fn even_trace_argument(&self, t: Elem) -> Option<Elem> {
        let f = &self.spec;
        let frob = f.frobenius(t, f.m());
        let norm = f.mul(frob, t);
        if norm == Elem::ONE {
            return None;
        }
        let num = frob ^ t ^ Elem::ONE;
        let den = f.square(norm) ^ Elem::ONE;
        Some(
            f.div(num, den)
                .expect("denominator nonzero off the unit circle"),
        )
    }

    fn even_class(&self, t: Elem) -> Result<EvenClass> {
        if t == Elem::ONE {
            return Ok(EvenClass::One);
        }
        match self.even_trace_argument(t) {
            None => Ok(EvenClass::UnitCircle),
            Some(arg) => Ok(EvenClass::Trace(self.spec.subfield_trace(arg)?)),
        }
    }

    /// `a / b` lies in GF(2^m) minus {0, 1}; requires even `n`, `ab(a+b) != 0`.
    fn ratio_in_subfield(&self, a: Elem, b: Elem) -> Result<bool> {
        let r = self.spec.div(a, b)?;
        self.spec.is_in_subfield(r)
    }

    fn pick(
        &self,
        table: TableKind,
        coords: &[u32],
        t: Option<Elem>,
        t2: Option<Elem>,
        cases: &[Case],
    ) -> Result<EntryClassification> {
        let mut hits = cases.iter().filter(|c| c.holds);
        let (label, value) = match (hits.next(), hits.next()) {
            (None, _) => (OTHERWISE, 0),
            (Some(c), None) => (c.label, c.value),
            (Some(_), Some(_)) => {
                return Err(Error::CaseConflict {
                    coords: coords.to_vec(),
                    count: cases.iter().filter(|c| c.holds).count(),
                })
            }
        };
        Ok(EntryClassification {
            table,
            coords: coords.to_vec(),
            t: t.map(Elem::bits),
            t2: t2.map(Elem::bits),
            case_label: label.to_string(),
            predicted: value,
        })
    }

    /// DDT rules for `(a, b)` as a case list; `t = b / a^(2^(m+1)-1)`.
    fn ddt_cases(&self, a: Elem, b: Elem, t: Option<Elem>) -> Result<Vec<Case>> {
        let (q, two_m) = (self.q(), self.two_m());
        let (a0, b0) = (a.is_zero(), b.is_zero());
        let mut cases = vec![case("a=b=0", q, a0 && b0), case("a=0,b!=0", 0, a0 && !b0)];
        if !self.spec.is_even() {
            let tr = match t {
                Some(t) if !b0 => Some(self.odd_trace(t)),
                _ => None,
            };
            cases.extend([
                case("a!=0,b=0", 0, !a0 && b0),
                case("Tr_1^n=1", 2, tr == Some(1)),
                case("Tr_1^n=0", 0, tr == Some(0)),
            ]);
        } else {
            let class = match t {
                Some(t) if !b0 => Some(self.even_class(t)?),
                _ => None,
            };
            cases.extend([
                case("a!=0,b=0,m odd", 2, !a0 && b0 && self.m_odd()),
                case("a!=0,b=0,m even", 0, !a0 && b0 && !self.m_odd()),
                case("t=1", two_m, class == Some(EvenClass::One)),
                case(
                    "t^(2^m+1)!=1,Tr_1^m=1",
                    2,
                    class == Some(EvenClass::Trace(1)),
                ),
                case("t!=1,t^(2^m+1)=1", 0, class == Some(EvenClass::UnitCircle)),
                case(
                    "t^(2^m+1)!=1,Tr_1^m=0",
                    0,
                    class == Some(EvenClass::Trace(0)),
                ),
            ]);
        }
        Ok(cases)
    }

    pub fn ddt_entry(&self, a: u32, b: u32) -> Result<EntryClassification> {
        let (ea, eb) = (self.element(a)?, self.element(b)?);
        let t = self.t_of(ea, eb);
        let cases = self.ddt_cases(ea, eb, t)?;
        self.pick(TableKind::Ddt, &[a, b], t, None, &cases)
    }

    pub fn fbct_entry(&self, a: u32, b: u32) -> Result<EntryClassification> {
        let (ea, eb) = (self.element(a)?, self.element(b)?);
        let degenerate = a == 0 || b == 0 || a == b;
        let mut cases = vec![case("ab(a+b)=0", self.q(), degenerate)];
        if self.spec.is_even() {
            let sub = if degenerate {
                None
            } else {
                Some(self.ratio_in_subfield(ea, eb)?)
            };
            cases.extend([
                case("a/b in GF(2^m)\\{0,1}", self.two_m(), sub == Some(true)),
                case("a/b not in GF(2^m)", 0, sub == Some(false)),
            ]);
        } else {
            cases.push(case("ab(a+b)!=0", 0, !degenerate));
        }
        self.pick(TableKind::Fbct, &[a, b], None, None, &cases)
    }

    pub fn fbdt_entry(&self, a: u32, c: u32, b: u32) -> Result<EntryClassification> {
        let (ea, ec, eb) = (self.element(a)?, self.element(c)?, self.element(b)?);
        let (a0, c0) = (a == 0, c == 0);
        let b_edge = b == 0 || b == a;
        let t = self.t_of(ea, ec);
        let q = self.q();
        let cases = if !self.spec.is_even() {
            let tr = t.map(|t| self.odd_trace(t));
            vec![
                case("I_{2^n}", q, a0 && c0),
                case("I_2", 2, !a0 && b_edge && tr == Some(1)),
                case("I_0^(1)", 0, a0 && !c0),
                case("I_0^(2)", 0, !a0 && b_edge && tr == Some(0)),
                case("I_0^(3)", 0, !a0 && !b_edge),
            ]
        } else {
            let two_m = self.two_m();
            let class = match t {
                Some(t) if !c0 => Some(self.even_class(t)?),
                _ => None,
            };
            let sub = if a0 || b_edge {
                None
            } else {
                Some(self.ratio_in_subfield(ea, eb)?)
            };
            let t_one = class == Some(EvenClass::One);
            let live = !a0 && !c0;
            vec![
                case("I_{2^n}", q, a0 && c0),
                case("I_{2^m}^(1)", two_m, live && b_edge && t_one),
                case(
                    "I_{2^m}^(2)",
                    two_m,
                    live && !b_edge && t_one && sub == Some(true),
                ),
                case(
                    "I_2^(1)",
                    2,
                    live && b_edge && class == Some(EvenClass::Trace(1)),
                ),
                case("I_2^(2)", 2, !a0 && c0 && b_edge && self.m_odd()),
                case("I_0^(1)", 0, a0 && !c0),
                case("I_0^(2)", 0, !a0 && c0 && b_edge && !self.m_odd()),
                case(
                    "I_0^(3)",
                    0,
                    live && b_edge && class == Some(EvenClass::Trace(0)),
                ),
                case(
                    "I_0^(4)",
                    0,
                    live && b_edge && class == Some(EvenClass::UnitCircle),
                ),
                case("I_0^(5)", 0, live && !b_edge && !t_one && sub == Some(true)),
                case("I_0^(6)", 0, live && !b_edge && sub == Some(false)),
            ]
        };
        self.pick(TableKind::Fbdt, &[a, c, b], t, None, &cases)
    }

    pub fn fbet_entry(&self, a: u32, c: u32, b: u32, d: u32) -> Result<EntryClassification> {
        let (ea, ec, eb, ed) = (
            self.element(a)?,
            self.element(c)?,
            self.element(b)?,
            self.element(d)?,
        );
        let (a0, c0, b0, d0) = (a == 0, c == 0, b == 0, d == 0);
        let t1 = self.t_of(ea, ec);
        let t2 = self.t_of(eb, ed);
        let q = self.q();
        // a = c = 0 with b, d != 0; a, c != 0 with b = d = 0; a = b, c = d, both nonzero.
        let lower = a0 && c0 && !b0 && !d0;
        let upper = !a0 && !c0 && b0 && d0;
        let diagonal = !a0 && a == b && !c0 && c == d;
        let cases = if !self.spec.is_even() {
            let tr1 = t1.map(|t| self.odd_trace(t));
            let tr2 = t2.map(|t| self.odd_trace(t));
            vec![
                case("I_{2^n}", q, a0 && c0 && b0 && d0),
                case("I_2^(1)", 2, lower && tr2 == Some(1)),
                case("I_2^(2)", 2, upper && tr1 == Some(1)),
                case("I_2^(3)", 2, diagonal && tr1 == Some(1)),
            ]
        } else {
            let two_m = self.two_m();
            let class1 = match t1 {
                Some(t) if !c0 => Some(self.even_class(t)?),
                _ => None,
            };
            let class2 = match t2 {
                Some(t) if !d0 => Some(self.even_class(t)?),
                _ => None,
            };
            let generic = !a0 && !b0 && a != b;
            let sub = if generic {
                self.ratio_in_subfield(ea, eb)?
            } else {
                false
            };
            let one1 = class1 == Some(EvenClass::One);
            let one2 = class2 == Some(EvenClass::One);
            let m_odd = self.m_odd();
            vec![
                case("I_{2^n}", q, a0 && c0 && b0 && d0),
                case("I_{2^m}^(1)", two_m, lower && one2),
                case("I_{2^m}^(2)", two_m, upper && one1),
                case("I_{2^m}^(3)", two_m, diagonal && one1),
                case("I_{2^m}^(4)", two_m, generic && sub && one1 && one2),
                case("I_2^(1)", 2, lower && class2 == Some(EvenClass::Trace(1))),
                case("I_2^(2)", 2, a0 && c0 && !b0 && d0 && m_odd),
                case("I_2^(3)", 2, upper && class1 == Some(EvenClass::Trace(1))),
                case("I_2^(4)", 2, !a0 && c0 && b0 && d0 && m_odd),
                case(
                    "I_2^(5)",
                    2,
                    diagonal && class1 == Some(EvenClass::Trace(1)),
                ),
                case("I_2^(6)", 2, !a0 && a == b && c0 && d0 && m_odd),
            ]
        };
        self.pick(TableKind::Fbet, &[a, c, b, d], t1, t2, &cases)
    }

    /// Dispatches on `table`; `coords` must have the table's arity.
    pub fn entry(&self, table: TableKind, coords: &[u32]) -> Result<EntryClassification> {
        let expected = table.arity();
        if coords.len() != expected {
            return Err(Error::Arity {
                expected,
                got: coords.len(),
            });
        }
        match table {
            TableKind::Ddt => self.ddt_entry(coords[0], coords[1]),
            TableKind::Fbct => self.fbct_entry(coords[0], coords[1]),
            TableKind::Fbdt => self.fbdt_entry(coords[0], coords[1], coords[2]),
            TableKind::Fbet => self.fbet_entry(coords[0], coords[1], coords[2], coords[3]),
            TableKind::Bct => Err(Error::NotClosedFormSBox),
        }
    }

    fn counts(&self) -> (u128, u128, u32, u32) {
        (
            1u128 << self.spec.n(),
            1u128 << self.spec.m(),
            self.spec.n(),
            self.spec.m(),
        )
    }

    /// DDT value counts over all `(a, b)`.
    pub fn ddt_spectrum(&self) -> Spectrum {
        let (q, two_m, n, m) = self.counts();
        let half_q = 1u128 << (n - 1);
        if self.spec.is_even() {
            let half_two_m = 1u128 << (m - 1);
            Spectrum::from_entries(
                Domain::Pairs,
                [
                    (q as u32, 1),
                    (two_m as u32, q - 1),
                    (2, (half_q - half_two_m) * (q - 1)),
                    (0, (half_q + half_two_m) * (q - 1)),
                ],
            )
        } else {
            Spectrum::from_entries(
                Domain::Pairs,
                [
                    (q as u32, 1),
                    (2, half_q * (q - 1)),
                    (0, (1u128 << (2 * n - 1)) + half_q - 1),
                ],
            )
        }
    }

    /// Differential uniformity: 2 for odd `n`, `2^m` for even `n`.
    pub fn delta(&self) -> u32 {
        if self.spec.is_even() {
            self.two_m().max(2)
        } else {
            2
        }
    }

    pub fn fbct_spectrum(&self) -> Spectrum {
        let (q, two_m, _, _) = self.counts();
        if self.spec.is_even() {
            Spectrum::from_entries(
                Domain::Pairs,
                [
                    (q as u32, 3 * q - 2),
                    (two_m as u32, (two_m - 2) * (q - 1)),
                    (0, (q - two_m) * (q - 1)),
                ],
            )
        } else {
            Spectrum::from_entries(
                Domain::Pairs,
                [(q as u32, 3 * q - 2), (0, (q - 2) * (q - 1))],
            )
        }
    }

    /// Feistel boomerang uniformity `β_c`: `2^m` for even `n`, 0 for odd.
    ///
    /// For `n = 2` the `2^m` class is empty, so `β_c = 0` there.
    pub fn beta_c(&self) -> u32 {
        if self.spec.is_even() && self.spec.m() >= 2 {
            self.two_m()
        } else {
            0
        }
    }

    pub fn fbdt_spectrum(&self) -> Spectrum {
        let (q, two_m, _, _) = self.counts();
        if self.spec.is_even() {
            Spectrum::from_entries(
                Domain::Triples,
                [
                    (q as u32, q),
                    (two_m as u32, two_m * (q - 1)),
                    (2, (q - two_m) * (q - 1)),
                    (0, q * q * (q - 1)),
                ],
            )
        } else {
            Spectrum::from_entries(
                Domain::Triples,
                [(q as u32, q), (2, q * (q - 1)), (0, q * q * (q - 1))],
            )
        }
    }

    /// `β_d`: `2^m` for even `n`, 2 for odd.
    pub fn beta_d(&self) -> u32 {
        self.delta()
    }

    pub fn fbet_spectrum(&self) -> Spectrum {
        let (q, two_m, n, _) = self.counts();
        let half_q = 1u128 << (n - 1);
        let all = q * q * q * q;
        if self.spec.is_even() {
            Spectrum::from_entries(
                Domain::Quadruples,
                [
                    (q as u32, 1),
                    (two_m as u32, (two_m + 1) * (q - 1)),
                    (2, 3 * (half_q - two_m) * (q - 1)),
                    (0, all - (3 * half_q - 2 * two_m + 1) * (q - 1) - 1),
                ],
            )
        } else {
            Spectrum::from_entries(
                Domain::Quadruples,
                [
                    (q as u32, 1),
                    (2, 3 * half_q * (q - 1)),
                    (0, all - 3 * ((1u128 << (2 * n - 1)) - half_q) - 1),
                ],
            )
        }
    }

    /// FBET value counts obtained by sizing each case set of
    /// [`ClosedForm::fbet_entry`] directly.
    ///
    /// Differs from [`ClosedForm::fbet_spectrum`] for even `n`: the 2-valued
    /// sets hold `3 (2^(n-1) - 2^(m-1)) (2^n - 1)` tuples, three copies of
    /// the DDT's 2-entries off `b = 0` (plus the `m` odd column), not
    /// `3 (2^(n-1) - 2^m) (2^n - 1)`.
    pub fn fbet_spectrum_from_cases(&self) -> Spectrum {
        if !self.spec.is_even() {
            return self.fbet_spectrum();
        }
        let (q, two_m, n, m) = self.counts();
        let twos = 3 * ((1u128 << (n - 1)) - (1u128 << (m - 1))) * (q - 1);
        let fours = (two_m + 1) * (q - 1);
        Spectrum::from_entries(
            Domain::Quadruples,
            [
                (q as u32, 1),
                (two_m as u32, fours),
                (2, twos),
                (0, q * q * q * q - 1 - fours - twos),
            ],
        )
    }

    /// `β_e`: `2^m` for even `n`, 2 for odd.
    pub fn beta_e(&self) -> u32 {
        self.delta()
    }

    pub fn spectrum(&self, table: TableKind) -> Result<Spectrum> {
        match table {
            TableKind::Ddt => Ok(self.ddt_spectrum()),
            TableKind::Fbct => Ok(self.fbct_spectrum()),
            TableKind::Fbdt => Ok(self.fbdt_spectrum()),
            TableKind::Fbet => Ok(self.fbet_spectrum()),
            TableKind::Bct => Err(Error::NotClosedFormSBox),
        }
    }

    pub fn uniformity(&self, table: TableKind) -> Result<u32> {
        match table {
            TableKind::Ddt => Ok(self.delta()),
            TableKind::Fbct => Ok(self.beta_c()),
            TableKind::Fbdt => Ok(self.beta_d()),
            TableKind::Fbet => Ok(self.beta_e()),
            TableKind::Bct => Err(Error::NotClosedFormSBox),
        }
    }
}

/// Hex-string serde for coordinates and t-values.
mod hex {
    fn parse<E: serde::de::Error>(s: &str) -> Result<u32, E> {
        let digits = s
            .strip_prefix("0x")
            .ok_or_else(|| E::custom("expected 0x prefix"))?;
        u32::from_str_radix(digits, 16).map_err(E::custom)
    }

    pub mod vec {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[u32], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(|x| format!("{x:#x}")))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u32>, D::Error> {
            Vec::<String>::deserialize(d)?
                .iter()
                .map(|s| super::parse(s))
                .collect()
        }
    }

    pub mod opt {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &Option<u32>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(x) => s.serialize_some(&format!("{x:#x}")),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u32>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|s| super::parse(&s))
                .transpose()
        }
    }
}
