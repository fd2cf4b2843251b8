//! Approximation schemes backed by an external membership oracle.
//!
//! The executable is started once per query with one JSON object on stdin
//! and must print one JSON object on stdout:
//!
//! * `{"op": "member", "n": n, "generators": rows}` → `{"member": bool}`
//! * `{"op": "distance", "n": n, "point": [..], "p": "1" | "2" | "inf"}` →
//!   `{"distance": x}`
//! * `{"op": "sample", "n": n, "dim": d, "seed": s}` → `{"generators": rows}`
//!
//! `generators` are the rows of a `dim × k` matrix whose columns span the
//! member. A failed query counts as a non-member, an unknown distance or
//! the zero member.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::Arc;

use rand::Rng;
use serde_json::{json, Value};
use snum_core::schemes::{ApproximationScheme, Member};
use snum_core::Matrix;

fn query(path: &PathBuf, request: &Value) -> Option<Value> {
    let mut child = Command::new(path).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::null()).spawn().ok()?;
    child.stdin.take()?.write_all(request.to_string().as_bytes()).ok()?;
    let out = child.wait_with_output().ok()?;
    if !out.status.success() {
        return None;
    }
    serde_json::from_slice(&out.stdout).ok()
}

pub fn script_scheme(path: PathBuf) -> ApproximationScheme {
    let name = format!("script:{}", path.display());
    let path = Arc::new(path);
    let (p1, p2, p3) = (path.clone(), path.clone(), path);
    ApproximationScheme::custom(
        name,
        move |n, a: &Member| {
            query(&p1, &json!({ "op": "member", "n": n, "generators": a.generators() }))
                .and_then(|v| v.get("member")?.as_bool())
                .unwrap_or(false)
        },
        move |n, point: &[f64], p| {
            query(&p2, &json!({ "op": "distance", "n": n, "point": point, "p": p }))
                .and_then(|v| v.get("distance")?.as_f64())
                .unwrap_or(f64::NAN)
        },
        move |n, dim, rng| {
            let seed: u64 = rng.gen();
            query(&p3, &json!({ "op": "sample", "n": n, "dim": dim, "seed": seed }))
                .and_then(|v| serde_json::from_value::<Matrix>(v.get("generators")?.clone()).ok())
                .filter(|g| g.rows() == dim)
                .map(Member::span)
                .unwrap_or_else(|| Member::zero(dim))
        },
    )
}
