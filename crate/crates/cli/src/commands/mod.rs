//! One module per subcommand.

pub mod counterexample;
pub mod verify;
pub mod weights;

use serde_json::{json, Value};

/// JSON number (negative zero normalized), or null for non-finite values.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x + 0.0)
    } else {
        Value::Null
    }
}
