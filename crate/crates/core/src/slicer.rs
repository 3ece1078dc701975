//! Overall, unitary and intersectional slices of an evaluation set.

use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ingest::{EvaluationRecord, EvaluationSet, UNKNOWN};

/// Slices smaller than this are suppressed unless configured otherwise.
pub const DEFAULT_MIN_CELL: usize = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SliceError {
    #[error("factor `{0}` is not declared in the evaluation set")]
    UndeclaredFactor(String),
    #[error("factor `{0}` appears more than once in the tuple")]
    DuplicateFactor(String),
    #[error("an intersection needs at least two factors, got {0}")]
    TooFewFactors(usize),
}

/// Ordered factor assignments. The empty key is the overall population.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SliceKey(Vec<(String, String)>);

impl SliceKey {
    pub fn overall() -> Self {
        Self::default()
    }

    /// Panics if a factor name repeats; callers build keys from validated tuples.
    pub fn new(assignments: Vec<(String, String)>) -> Self {
        for (i, (f, _)) in assignments.iter().enumerate() {
            assert!(
                assignments[..i].iter().all(|(g, _)| g != f),
                "factor `{f}` assigned twice in slice key"
            );
        }
        Self(assignments)
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn is_overall(&self) -> bool {
        self.0.is_empty()
    }

    pub fn assignments(&self) -> &[(String, String)] {
        &self.0
    }

    pub fn get(&self, factor: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(f, _)| f == factor)
            .map(|(_, v)| v.as_str())
    }

    pub fn matches(&self, record: &EvaluationRecord) -> bool {
        self.0
            .iter()
            .all(|(f, v)| record.factor_values.get(f).is_some_and(|rv| rv == v))
    }

    /// The unitary keys this key projects onto.
    pub fn projections(&self) -> impl Iterator<Item = SliceKey> + '_ {
        self.0.iter().map(|a| SliceKey(vec![a.clone()]))
    }
}

impl fmt::Display for SliceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("overall");
        }
        for (i, (factor, value)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{factor}={value}")?;
        }
        Ok(())
    }
}

impl Serialize for SliceKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for SliceKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct KeyVisitor;

        impl<'de> Visitor<'de> for KeyVisitor {
            type Value = SliceKey;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of factor name to value")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<SliceKey, A::Error> {
                let mut pairs: Vec<(String, String)> = Vec::new();
                while let Some((k, v)) = access.next_entry::<String, String>()? {
                    if pairs.iter().any(|(f, _)| *f == k) {
                        return Err(serde::de::Error::custom(format!(
                            "factor `{k}` repeated in slice key"
                        )));
                    }
                    pairs.push((k, v));
                }
                Ok(SliceKey(pairs))
            }
        }

        deserializer.deserialize_map(KeyVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slice {
    pub key: SliceKey,
    pub member_indices: Vec<usize>,
    pub suppressed: bool,
}

impl Slice {
    fn new(key: SliceKey, member_indices: Vec<usize>, min_cell: usize) -> Self {
        let suppressed = member_indices.len() < min_cell;
        Self {
            key,
            member_indices,
            suppressed,
        }
    }

    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }

    pub fn records<'a>(
        &'a self,
        set: &'a EvaluationSet,
    ) -> impl Iterator<Item = &'a EvaluationRecord> + 'a {
        self.member_indices.iter().map(move |&i| &set.records()[i])
    }
}

pub fn overall_slice(set: &EvaluationSet, min_cell: usize) -> Slice {
    Slice::new(SliceKey::overall(), (0..set.len()).collect(), min_cell)
}

/// One slice per (factor, value), factors in the order given and values in
/// schema order. Records whose value is `unknown` belong to no slice of that
/// factor.
pub fn unitary_slices<S: AsRef<str>>(
    set: &EvaluationSet,
    factors: &[S],
    min_cell: usize,
) -> Result<Vec<Slice>, SliceError> {
    let mut out = Vec::new();
    for factor in factors {
        let factor = factor.as_ref();
        let schema = set
            .schema(factor)
            .ok_or_else(|| SliceError::UndeclaredFactor(factor.to_string()))?;
        let values: Vec<&str> = schema.known_values().collect();
        let mut members = vec![Vec::new(); values.len()];
        for (i, r) in set.records().iter().enumerate() {
            let v = r.factor_values[factor].as_str();
            if let Some(pos) = values.iter().position(|x| *x == v) {
                members[pos].push(i);
            }
        }
        out.extend(values.iter().zip(members).map(|(v, m)| {
            Slice::new(
                SliceKey(vec![(factor.to_string(), v.to_string())]),
                m,
                min_cell,
            )
        }));
    }
    Ok(out)
}

/// One slice per element of the Cartesian product of the tuple's known
/// values, ordered lexicographically with the first factor most significant.
pub fn intersectional_slices<S: AsRef<str>>(
    set: &EvaluationSet,
    factor_tuple: &[S],
    min_cell: usize,
) -> Result<Vec<Slice>, SliceError> {
    if factor_tuple.len() < 2 {
        return Err(SliceError::TooFewFactors(factor_tuple.len()));
    }
    let mut value_lists: Vec<(&str, Vec<&str>)> = Vec::with_capacity(factor_tuple.len());
    for factor in factor_tuple {
        let factor = factor.as_ref();
        if value_lists.iter().any(|(f, _)| *f == factor) {
            return Err(SliceError::DuplicateFactor(factor.to_string()));
        }
        let schema = set
            .schema(factor)
            .ok_or_else(|| SliceError::UndeclaredFactor(factor.to_string()))?;
        value_lists.push((factor, schema.known_values().collect()));
    }

    let cells: usize = value_lists.iter().map(|(_, v)| v.len()).product();
    let mut members = vec![Vec::new(); cells];
    'records: for (i, r) in set.records().iter().enumerate() {
        let mut cell = 0;
        for (factor, values) in &value_lists {
            let v = r.factor_values[*factor].as_str();
            match values.iter().position(|x| *x == v) {
                Some(pos) => cell = cell * values.len() + pos,
                None => continue 'records,
            }
        }
        members[cell].push(i);
    }

    let mut out = Vec::with_capacity(cells);
    for (cell, m) in members.into_iter().enumerate() {
        let mut rest = cell;
        let mut key = Vec::with_capacity(value_lists.len());
        for (factor, values) in value_lists.iter().rev() {
            key.push((factor.to_string(), values[rest % values.len()].to_string()));
            rest /= values.len();
        }
        key.reverse();
        out.push(Slice::new(SliceKey(key), m, min_cell));
    }
    Ok(out)
}

/// Records that fall out of every slice for these factors because at least
/// one of them is `unknown`.
pub fn excluded_count<S: AsRef<str>>(set: &EvaluationSet, factors: &[S]) -> usize {
    set.records()
        .iter()
        .filter(|r| {
            factors
                .iter()
                .any(|f| r.factor_values.get(f.as_ref()).is_none_or(|v| v == UNKNOWN))
        })
        .count()
}
