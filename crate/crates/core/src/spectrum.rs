//! Value multiplicities over a declared index domain.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The index set a spectrum counts over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    /// All `(a, b)`.
    Pairs,
    /// `a != 0`, all `b` (the differential spectrum).
    NonzeroInputPairs,
    /// All `(a, c, b)`.
    Triples,
    /// All `(a, c, b, d)`.
    Quadruples,
}

impl Domain {
    pub fn descriptor(self) -> &'static str {
        match self {
            Domain::Pairs => "all (a,b)",
            Domain::NonzeroInputPairs => "a!=0, all b",
            Domain::Triples => "all (a,c,b)",
            Domain::Quadruples => "all (a,c,b,d)",
        }
    }

    pub fn from_descriptor(s: &str) -> Option<Self> {
        [
            Domain::Pairs,
            Domain::NonzeroInputPairs,
            Domain::Triples,
            Domain::Quadruples,
        ]
        .into_iter()
        .find(|d| d.descriptor() == s)
    }

    /// Number of cells in the domain over GF(2^n).
    pub fn size(self, n: u32) -> u128 {
        let q = 1u128 << n;
        match self {
            Domain::Pairs => q * q,
            Domain::NonzeroInputPairs => (q - 1) * q,
            Domain::Triples => q * q * q,
            Domain::Quadruples => q * q * q * q,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.descriptor())
    }
}

/// Multiset `{value -> multiplicity}`.
///
/// Serializes as a flat JSON object keyed by value in descending order,
/// followed by a `"domain"` descriptor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spectrum {
    domain: Domain,
    entries: BTreeMap<u32, u128>,
}

impl Spectrum {
    pub fn new(domain: Domain) -> Self {
        Spectrum {
            domain,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_entries(domain: Domain, entries: impl IntoIterator<Item = (u32, u128)>) -> Self {
        let mut s = Spectrum::new(domain);
        for (v, k) in entries {
            s.add(v, k);
        }
        s
    }

    /// Adds `multiplicity` occurrences of `value`; zero multiplicities are not stored.
    pub fn add(&mut self, value: u32, multiplicity: u128) {
        if multiplicity > 0 {
            *self.entries.entry(value).or_insert(0) += multiplicity;
        }
    }

    pub fn merge(&mut self, other: &Spectrum) {
        for (&v, &k) in &other.entries {
            self.add(v, k);
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn get(&self, value: u32) -> u128 {
        self.entries.get(&value).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u128 {
        self.entries.values().sum()
    }

    /// `sum(value * multiplicity)`.
    pub fn weighted_total(&self) -> u128 {
        self.entries.iter().map(|(&v, &k)| v as u128 * k).sum()
    }

    pub fn max_value(&self) -> Option<u32> {
        self.entries.keys().next_back().copied()
    }

    /// Entries in descending order of value.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u128)> + '_ {
        self.entries.iter().rev().map(|(&v, &k)| (v, k))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spectrum serializes")
    }
}

impl fmt::Display for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, k)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}: {k}")?;
        }
        write!(f, "}} over {}", self.domain)
    }
}

impl Serialize for Spectrum {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.entries.len() + 1))?;
        for (v, k) in self.iter() {
            map.serialize_entry(&v.to_string(), &k)?;
        }
        map.serialize_entry("domain", self.domain.descriptor())?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for Spectrum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct SpectrumVisitor;

        impl<'de> Visitor<'de> for SpectrumVisitor {
            type Value = Spectrum;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object of value -> multiplicity with a domain")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Spectrum, A::Error> {
                let mut domain = None;
                let mut entries = Vec::new();
                while let Some(key) = map.next_key::<String>()? {
                    if key == "domain" {
                        let s: String = map.next_value()?;
                        domain =
                            Some(Domain::from_descriptor(&s).ok_or_else(|| {
                                de::Error::custom(format!("unknown domain {s:?}"))
                            })?);
                    } else {
                        let v: u32 = key
                            .parse()
                            .map_err(|_| de::Error::custom(format!("bad value key {key:?}")))?;
                        entries.push((v, map.next_value::<u128>()?));
                    }
                }
                let domain = domain.ok_or_else(|| de::Error::missing_field("domain"))?;
                Ok(Spectrum::from_entries(domain, entries))
            }
        }

        deserializer.deserialize_map(SpectrumVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_is_descending_with_trailing_domain() {
        let s = Spectrum::from_entries(Domain::Quadruples, [(0, 4011), (2, 84), (8, 1)]);
        assert_eq!(
            s.to_json(),
            r#"{"8":1,"2":84,"0":4011,"domain":"all (a,c,b,d)"}"#
        );
        let back: Spectrum = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert_eq!(s.total(), Domain::Quadruples.size(3));
    }

    #[test]
    fn zero_multiplicities_are_dropped() {
        let mut s = Spectrum::new(Domain::Pairs);
        s.add(4, 0);
        s.add(2, 3);
        s.add(2, 1);
        assert_eq!(s.get(4), 0);
        assert_eq!(s.get(2), 4);
        assert_eq!(s.weighted_total(), 8);
        assert_eq!(s.max_value(), Some(2));
    }

    #[test]
    fn rejects_unknown_domain() {
        assert!(serde_json::from_str::<Spectrum>(r#"{"1":2,"domain":"nope"}"#).is_err());
        assert!(serde_json::from_str::<Spectrum>(r#"{"1":2}"#).is_err());
    }
}
