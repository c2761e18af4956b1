use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Capacity and register widths of a dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DictBounds {
    pub capacity: usize,
    pub address_bits: usize,
    pub value_bits: usize,
}

impl DictBounds {
    pub const MAX_WIDTH: usize = 32;

    pub fn new(capacity: usize, address_bits: usize, value_bits: usize) -> Result<Self> {
        let b = DictBounds {
            capacity,
            address_bits,
            value_bits,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::InvalidBounds("capacity must be at least 1".into()));
        }
        for (name, w) in [
            ("address_bits", self.address_bits),
            ("value_bits", self.value_bits),
        ] {
            if !(1..=Self::MAX_WIDTH).contains(&w) {
                return Err(Error::InvalidBounds(format!(
                    "{name} must be in 1..={}, got {w}",
                    Self::MAX_WIDTH
                )));
            }
        }
        Ok(())
    }

    /// `2^A - 1`, the address reserved for empty slots.
    pub fn max_address(&self) -> u64 {
        (1u64 << self.address_bits) - 1
    }

    pub fn max_value(&self) -> u64 {
        (1u64 << self.value_bits) - 1
    }

    /// Qubits held by the encoded pair list.
    pub fn dict_qubits(&self) -> usize {
        self.capacity * (self.address_bits + self.value_bits)
    }
}

impl fmt::Display for DictBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "C={} A={} V={}",
            self.capacity, self.address_bits, self.value_bits
        )
    }
}

/// A classical mapping from addresses to non-zero values. Absent addresses
/// read as zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "DictLiteral", into = "DictLiteral")]
pub struct ClassicalDict {
    bounds: DictBounds,
    entries: BTreeMap<u64, u64>,
}

impl ClassicalDict {
    pub fn empty(bounds: DictBounds) -> Self {
        Self {
            bounds,
            entries: BTreeMap::new(),
        }
    }

    pub fn new(bounds: DictBounds, entries: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        bounds.validate()?;
        let mut map = BTreeMap::new();
        for (a, v) in entries {
            if a > bounds.max_address() {
                return Err(Error::AddressOutOfRange {
                    address: a,
                    bits: bounds.address_bits as u32,
                });
            }
            if a == bounds.max_address() {
                return Err(Error::ReservedAddress(a));
            }
            if v == 0 {
                return Err(Error::ZeroValue(a));
            }
            if v > bounds.max_value() {
                return Err(Error::ValueTooWide {
                    value: v,
                    width: bounds.value_bits,
                });
            }
            map.insert(a, v);
        }
        if map.len() > bounds.capacity {
            return Err(Error::CapacityExceeded {
                entries: map.len(),
                capacity: bounds.capacity,
            });
        }
        Ok(Self {
            bounds,
            entries: map,
        })
    }

    pub fn bounds(&self) -> DictBounds {
        self.bounds
    }

    pub fn entries(&self) -> &BTreeMap<u64, u64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The stored value, or 0 when absent.
    pub fn get(&self, address: u64) -> u64 {
        self.entries.get(&address).copied().unwrap_or(0)
    }

    pub fn contains(&self, address: u64) -> bool {
        self.entries.contains_key(&address)
    }

    pub fn has_space(&self) -> bool {
        self.entries.len() < self.bounds.capacity
    }

    /// Writes `value` at `address`; zero removes the entry. Does not check
    /// capacity, callers do that.
    pub(crate) fn with_value(&self, address: u64, value: u64) -> Self {
        let mut d = self.clone();
        if value == 0 {
            d.entries.remove(&address);
        } else {
            d.entries.insert(address, value);
        }
        d
    }

    /// The unique pair list for this mapping: sorted by address, padded with
    /// `(MAX_ADDRESS, 0)`.
    pub fn canonical_pairs(&self) -> Vec<(u64, u64)> {
        let mut pairs: Vec<(u64, u64)> = self.entries.iter().map(|(&a, &v)| (a, v)).collect();
        pairs.resize(self.bounds.capacity, (self.bounds.max_address(), 0));
        pairs
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let lit: DictLiteral = serde_json::from_str(text)
            .map_err(|e| literal_err(field_from_serde(&e.to_string()), e))?;
        ClassicalDict::try_from(lit)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dictionary literal serializes")
    }
}

fn field_from_serde(msg: &str) -> String {
    msg.split('`').nth(1).unwrap_or("<root>").to_string()
}

impl fmt::Display for ClassicalDict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (a, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}: {v}")?;
        }
        f.write_str("}")
    }
}

/// JSON form: `{"capacity": C, "address_bits": A, "value_bits": V,
/// "entries": {"addr": value, ...}}` with decimal string keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictLiteral {
    pub capacity: usize,
    pub address_bits: usize,
    pub value_bits: usize,
    #[serde(default)]
    pub entries: BTreeMap<String, u64>,
}

fn literal_err(field: impl Into<String>, e: impl fmt::Display) -> Error {
    Error::Literal {
        field: field.into(),
        message: e.to_string(),
    }
}

impl TryFrom<DictLiteral> for ClassicalDict {
    type Error = Error;

    fn try_from(lit: DictLiteral) -> Result<Self> {
        let bounds = DictBounds {
            capacity: lit.capacity,
            address_bits: lit.address_bits,
            value_bits: lit.value_bits,
        };
        if let Err(e) = bounds.validate() {
            let field = if lit.capacity == 0 {
                "capacity"
            } else if !(1..=DictBounds::MAX_WIDTH).contains(&lit.address_bits) {
                "address_bits"
            } else {
                "value_bits"
            };
            return Err(literal_err(field, e));
        }
        let mut entries = Vec::with_capacity(lit.entries.len());
        for (key, &value) in &lit.entries {
            let field = format!("entries.{key}");
            let addr: u64 = key
                .parse()
                .map_err(|_| literal_err(&field, "address keys must be decimal integers"))?;
            ClassicalDict::new(bounds, [(addr, value)]).map_err(|e| literal_err(&field, e))?;
            entries.push((addr, value));
        }
        ClassicalDict::new(bounds, entries).map_err(|e| literal_err("entries", e))
    }
}

impl From<ClassicalDict> for DictLiteral {
    fn from(d: ClassicalDict) -> Self {
        DictLiteral {
            capacity: d.bounds.capacity,
            address_bits: d.bounds.address_bits,
            value_bits: d.bounds.value_bits,
            entries: d.entries.iter().map(|(a, v)| (a.to_string(), *v)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(c: usize, a: usize, v: usize) -> DictBounds {
        DictBounds::new(c, a, v).unwrap()
    }

    #[test]
    fn canonical_pairs_sort_and_pad() {
        assert_eq!(
            ClassicalDict::empty(b(2, 2, 1)).canonical_pairs(),
            vec![(3, 0), (3, 0)]
        );
        let d = ClassicalDict::new(b(3, 3, 2), [(5, 1), (2, 3)]).unwrap();
        assert_eq!(d.canonical_pairs(), vec![(2, 3), (5, 1), (7, 0)]);
        let d = ClassicalDict::new(b(2, 2, 1), [(1, 1), (0, 1)]).unwrap();
        assert_eq!(d.canonical_pairs(), vec![(0, 1), (1, 1)]);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            ClassicalDict::new(b(1, 2, 1), [(0, 1), (1, 1)]),
            Err(Error::CapacityExceeded {
                entries: 2,
                capacity: 1
            })
        );
        assert_eq!(
            ClassicalDict::new(b(1, 2, 1), [(3, 1)]),
            Err(Error::ReservedAddress(3))
        );
        assert_eq!(
            ClassicalDict::new(b(1, 2, 1), [(1, 0)]),
            Err(Error::ZeroValue(1))
        );
        assert!(DictBounds::new(0, 2, 1).is_err());
    }

    #[test]
    fn has_space() {
        assert!(ClassicalDict::empty(b(1, 3, 1)).has_space());
        assert!(!ClassicalDict::new(b(1, 3, 1), [(2, 1)])
            .unwrap()
            .has_space());
        assert!(ClassicalDict::new(b(2, 3, 1), [(2, 1)])
            .unwrap()
            .has_space());
    }

    #[test]
    fn json_literal() {
        let d = ClassicalDict::from_json(
            r#"{"capacity": 3, "address_bits": 3, "value_bits": 2, "entries": {"2": 3, "5": 1}}"#,
        )
        .unwrap();
        assert_eq!(d.get(2), 3);
        assert_eq!(d.get(4), 0);
        assert_eq!(ClassicalDict::from_json(&d.to_json()).unwrap(), d);

        let err = ClassicalDict::from_json(
            r#"{"capacity": 3, "address_bits": 3, "value_bits": 2, "entries": {"x": 3}}"#,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::Literal { ref field, .. } if field == "entries.x"),
            "{err}"
        );
        let err = ClassicalDict::from_json(
            r#"{"capacity": 3, "address_bits": 3, "value_bits": 2, "entries": {"7": 3}}"#,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::Literal { ref field, .. } if field == "entries.7"),
            "{err}"
        );
        let err = ClassicalDict::from_json(r#"{"address_bits": 3, "value_bits": 2}"#).unwrap_err();
        assert!(
            matches!(err, Error::Literal { ref field, .. } if field == "capacity"),
            "{err}"
        );
        let err = ClassicalDict::from_json(
            r#"{"capacity": 0, "address_bits": 3, "value_bits": 2, "entries": {}}"#,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::Literal { ref field, .. } if field == "capacity"),
            "{err}"
        );
    }
}
