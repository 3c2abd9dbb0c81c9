//! Canonical encoding: UTF-8 JSON, keys sorted, no whitespace, integers only.

use std::fmt;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::Sha256;

/// 32-byte SHA-256 digest, hex encoded on the wire.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; 32]);

    pub fn of(bytes: &[u8]) -> Self {
        use sha2::Digest as _;
        Digest(Sha256::digest(bytes).into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("digest must be 64 lowercase hex characters")]
pub struct DigestParseError;

impl FromStr for Digest {
    type Err = DigestParseError;

    // Uppercase hex is rejected so every digest has exactly one textual form.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 64 || !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            return Err(DigestParseError);
        }
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|_| DigestParseError)?;
        Ok(Digest(out))
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CanonicalError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("floating point value in canonical payload")]
    Float,
    #[error("input is not in canonical form")]
    NotCanonical,
}

/// Encodes `value` canonically. Object keys come out sorted because
/// `serde_json::Map` is a `BTreeMap` (the `preserve_order` feature is off).
pub fn to_vec<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, CanonicalError> {
    let tree = serde_json::to_value(value)?;
    reject_floats(&tree)?;
    Ok(serde_json::to_vec(&tree)?)
}

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> Result<String, CanonicalError> {
    // to_vec only ever produces UTF-8.
    Ok(String::from_utf8(to_vec(value)?).expect("serde_json emits UTF-8"))
}

pub fn digest<T: Serialize + ?Sized>(value: &T) -> Result<Digest, CanonicalError> {
    Ok(Digest::of(&to_vec(value)?))
}

/// Decodes `bytes` and insists they were already canonical: re-encoding the
/// decoded value must reproduce the input exactly.
pub fn from_slice_strict<T: Serialize + DeserializeOwned>(bytes: &[u8]) -> Result<T, CanonicalError> {
    let value: T = serde_json::from_slice(bytes)?;
    if to_vec(&value)? != bytes {
        return Err(CanonicalError::NotCanonical);
    }
    Ok(value)
}

fn reject_floats(value: &serde_json::Value) -> Result<(), CanonicalError> {
    use serde_json::Value;
    match value {
        Value::Number(n) if !(n.is_u64() || n.is_i64()) => Err(CanonicalError::Float),
        Value::Array(items) => items.iter().try_for_each(reject_floats),
        Value::Object(map) => map.values().try_for_each(reject_floats),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_and_compact() {
        let v = json!({"zeta": 1, "alpha": {"b": 2, "a": [3, 4]}});
        assert_eq!(to_string(&v).unwrap(), r#"{"alpha":{"a":[3,4],"b":2},"zeta":1}"#);
    }

    #[test]
    fn floats_are_refused() {
        assert!(matches!(to_vec(&json!({"x": 1.5})), Err(CanonicalError::Float)));
    }

    #[test]
    fn strict_decode_rejects_whitespace_and_uppercase_digests() {
        let ok: serde_json::Value = from_slice_strict(br#"{"a":1}"#).unwrap();
        assert_eq!(ok, json!({"a": 1}));
        assert!(from_slice_strict::<serde_json::Value>(br#"{ "a":1}"#).is_err());

        let d = Digest::of(b"x").to_hex().to_uppercase();
        assert!(d.parse::<Digest>().is_err());
    }

    #[test]
    fn digest_hex_round_trip() {
        let d = Digest::of(b"hello");
        assert_eq!(d.to_hex().parse::<Digest>().unwrap(), d);
        assert_eq!(
            d.to_hex(),
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
    }
}
