//! CSV and JSON writers. Floats carry 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use lindkrotov::optimizer::IterationRecord;
use serde_json::Value;

use crate::error::CliError;

pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const RESULT_FILE: &str = "result.json";

pub const CONVERGENCE_HEADER: &str = "k,J,fidelity,fluence,delta_J";
pub const TRAJECTORY_HEADER: &str = "t,D1_free,D1_controlled,xi";

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Node-sampled curves of one run, all of length `N + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub t: Vec<f64>,
    pub d1_free: Vec<f64>,
    pub d1_controlled: Vec<f64>,
    pub xi: Vec<f64>,
}

/// Row `k = 0` holds the seed field; later rows one iteration each.
pub fn convergence_csv(initial: &IterationRecord, records: &[IterationRecord]) -> String {
    let mut out = String::from(CONVERGENCE_HEADER);
    out.push('\n');
    for r in std::iter::once(initial).chain(records) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.iteration,
            fmt_f64(r.cost),
            fmt_f64(r.fidelity),
            fmt_f64(r.fluence),
            fmt_f64(r.delta_cost)
        );
    }
    out
}

pub fn trajectory_csv(table: &TrajectoryTable) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for n in 0..table.t.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(table.t[n]),
            fmt_f64(table.d1_free[n]),
            fmt_f64(table.d1_controlled[n]),
            fmt_f64(table.xi[n])
        );
    }
    out
}

/// Pretty JSON with floats at 17 significant digits.
pub fn render_json(value: &Value) -> String {
    let mut out = String::new();
    render(value, 0, &mut out);
    out.push('\n');
    out
}

fn render(value: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize| "  ".repeat(d);
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            out.push_str(&fmt_f64(x));
        }
        Value::Array(items) if !items.is_empty() => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                render(item, depth + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (k, v)) in map.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                render(v, depth + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    fs::write(path, render_json(value))?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)?;
    Ok(())
}
