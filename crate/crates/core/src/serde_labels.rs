//! Labels travel as `0`/`1` integers in every file and protocol.

use serde::de::{Error, Unexpected};
use serde::{Deserialize, Deserializer, Serializer};

pub fn to_u8(label: bool) -> u8 {
    label as u8
}

pub fn from_u8<E: Error>(value: u8) -> Result<bool, E> {
    match value {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(E::invalid_value(Unexpected::Unsigned(other as u64), &"0 or 1")),
    }
}

pub mod one {
    use super::*;

    pub fn serialize<S: Serializer>(label: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(to_u8(*label))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        from_u8(u8::deserialize(d)?)
    }
}

pub mod many {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(labels: &[bool], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(labels.len()))?;
        for &l in labels {
            seq.serialize_element(&to_u8(l))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        Vec::<u8>::deserialize(d)?.into_iter().map(from_u8).collect()
    }
}

pub mod optional_many {
    use super::*;

    pub fn serialize<S: Serializer>(labels: &Option<Vec<bool>>, s: S) -> Result<S::Ok, S::Error> {
        match labels {
            Some(l) => many::serialize(l, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<bool>>, D::Error> {
        Option::<Vec<u8>>::deserialize(d)?
            .map(|v| v.into_iter().map(from_u8).collect())
            .transpose()
    }
}

/// Rules travel as canonical text.
pub mod rule_text {
    use super::*;
    use crate::grammar::{parse, RuleAst};

    pub fn serialize<S: Serializer>(rule: &RuleAst, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rule.render())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<RuleAst, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(D::Error::custom)
    }
}
