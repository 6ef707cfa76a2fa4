//! Versioned JSON envelopes for machine-readable outputs.

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON of `body` with a leading `"schema_version"` field. `body`
/// must serialize as a map.
pub fn to_json<T: Serialize>(body: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(&Versioned {
        schema_version: SCHEMA_VERSION,
        body,
    })?;
    s.push('\n');
    Ok(s)
}
