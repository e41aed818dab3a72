//! Seed derivation shared by every randomised stage.
//!
//! All randomness descends from one 64-bit run seed. Per-item seeds are
//! `derive_seed(seed, i) = splitmix64(seed ^ splitmix64(i))`, where
//! `splitmix64` is the standard SplitMix64 finaliser (Steele, Lea and
//! Flood; constants 0x9E3779B97F4A7C15, 0xBF58476D1CE4E5B9,
//! 0x94D049BB133111EB). Streams are then drawn from ChaCha8 seeded with
//! the derived value, which is portable across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Parses a seed written in decimal or as `0x`-prefixed hex.
pub fn parse_seed(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
        None => t.replace('_', "").parse(),
    };
    parsed.map_err(|e| format!("invalid seed `{s}`: {e}"))
}

/// Serde adapter for formats whose integers are signed 64-bit (TOML):
/// seeds above `i64::MAX` are written as hex strings, and both forms are
/// accepted on input.
pub mod serde_seed {
    use std::fmt;

    use serde::{de, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*v) {
            Ok(i) => s.serialize_i64(i),
            Err(_) => s.serialize_str(&format!("{v:#018x}")),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        struct Seed;
        impl de::Visitor<'_> for Seed {
            type Value = u64;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a non-negative integer, or a decimal or 0x-hex string")
            }
            fn visit_u64<E>(self, v: u64) -> Result<u64, E> {
                Ok(v)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<u64, E> {
                u64::try_from(v).map_err(|_| E::custom("seed must be non-negative"))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<u64, E> {
                super::parse_seed(v).map_err(E::custom)
            }
        }
        d.deserialize_any(Seed)
    }
}

/// Domain tags so that stages drawing from the same run seed do not share
/// streams.
pub mod stream {
    pub const DESIGN: u64 = 0x4445_5349_474E; // "DESIGN"
    pub const CURRENT: u64 = 0x4355_5252; // "CURR"
    pub const SPLIT: u64 = 0x53_504C_4954; // "SPLIT"
    pub const RESTART: u64 = 0x5245_5354; // "REST"
}
