//! Canonical JSON form of a [`Network`].
//!
//! ```json
//! {
//!   "version": 1,
//!   "base_mva": 100.0,
//!   "buses": [{"id": 0, "ext_id": 1, "pd": 0.9, "qd": 0.3,
//!              "pg_min": 0.0, "pg_max": 0.0, "qg_min": 0.0, "qg_max": 0.0,
//!              "v_min": 0.9, "v_max": 1.1, "shunt": [0.0, 0.0], "cost": null}],
//!   "lines": [{"from": 0, "to": 1, "y": [1.0, -2.0], "rating": 2.5,
//!              "i_max": null, "s_max": null, "p_max": null}]
//! }
//! ```
//!
//! Values are per unit; `shunt` and `y` are `[re, im]` pairs. Floats are
//! written with shortest round-trip formatting, so a write/read cycle
//! reproduces the network bit for bit.

use serde::{Deserialize, Serialize};

use super::{Bus, Line, Network};
use crate::error::ParseError;

pub const JSON_VERSION: u32 = 1;

#[derive(Serialize)]
struct Out<'a> {
    version: u32,
    base_mva: f64,
    buses: &'a [Bus],
    lines: &'a [Line],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct In {
    version: u32,
    base_mva: f64,
    buses: Vec<Bus>,
    lines: Vec<Line>,
}

pub fn to_json(net: &Network) -> String {
    serde_json::to_string_pretty(&Out {
        version: JSON_VERSION,
        base_mva: net.base_mva,
        buses: &net.buses,
        lines: &net.lines,
    })
    .expect("network serialization cannot fail")
}

pub fn from_json(text: &str) -> Result<Network, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let raw: In = serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        match message.strip_prefix("unknown field `") {
            Some(rest) => ParseError::Unsupported {
                field: rest.split('`').next().unwrap_or_default().to_string(),
                reason: "not part of the canonical schema".into(),
            },
            None => ParseError::Syntax {
                line: e.line(),
                column: e.column(),
                message,
            },
        }
    })?;
    if raw.version != JSON_VERSION {
        return Err(ParseError::Unsupported {
            field: "version".into(),
            reason: format!("expected {JSON_VERSION}, found {}", raw.version),
        });
    }
    let n = raw.buses.len();
    if let Some((i, b)) = raw.buses.iter().enumerate().find(|(i, b)| b.id != *i) {
        return Err(ParseError::Reference {
            field: "buses.id".into(),
            message: format!("bus at position {i} has id {}", b.id),
        });
    }
    if let Some(j) = raw.lines.iter().position(|l| l.from >= n || l.to >= n) {
        return Err(ParseError::Reference {
            field: "lines".into(),
            message: format!("line {j} references a bus outside 0..{n}"),
        });
    }
    Ok(Network {
        base_mva: raw.base_mva,
        buses: raw.buses,
        lines: raw.lines,
    })
}
