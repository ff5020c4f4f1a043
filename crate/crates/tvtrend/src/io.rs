//! Plain-text formats.
//!
//! Signals are single-column CSV: one finite number per line, an optional
//! header on the first line, trailing blank lines ignored. Numbers are
//! written in the shortest form that parses back to the same `f64`.

use std::fmt::Write as _;
use std::path::Path;

use tvtrend_core::experiments::TrialRecord;

use crate::error::{CliError, Result};

pub const TRIAL_HEADER: &str = "trial_id,mse,bound_rhs,held,event_u,event_v,kkt_residual,seconds";

fn is_header(field: &str) -> bool {
    let mut chars = field.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && field.parse::<f64>().is_err()
}

/// Parses a single-column signal; `source` names the input in errors.
pub fn parse_column(text: &str, source: &str) -> Result<Vec<f64>> {
    let lines: Vec<&str> = text.lines().collect();
    let end = lines
        .iter()
        .rposition(|l| !l.trim().is_empty())
        .map_or(0, |p| p + 1);
    let mut values = Vec::with_capacity(end);
    for (idx, raw) in lines[..end].iter().enumerate() {
        let field = raw.trim();
        let bad = |message: String| CliError::Input {
            source_name: source.to_string(),
            line: idx + 1,
            message,
        };
        if idx == 0 && is_header(field) {
            continue;
        }
        if field.is_empty() {
            return Err(bad("empty line".into()));
        }
        if field.contains(',') {
            return Err(bad(format!("expected one column, found `{field}`")));
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) => return Err(bad(format!("non-finite value `{field}`"))),
            Err(_) => return Err(bad(format!("not a number: `{field}`"))),
        }
    }
    if values.is_empty() {
        return Err(CliError::Input {
            source_name: source.to_string(),
            line: 1,
            message: "no values".into(),
        });
    }
    Ok(values)
}

pub fn read_column(path: &Path) -> Result<Vec<f64>> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(&name, e))?;
    parse_column(&text, &name)
}

/// Shortest round-trip representation; exponent form outside `[1e-5, 1e16)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_column(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 20);
    for v in values {
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
    out
}

/// Per-trial CSV; absent values are empty fields.
pub fn write_trials(records: &[TrialRecord]) -> String {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut out = String::new();
    out.push_str(TRIAL_HEADER);
    out.push('\n');
    for r in records {
        let held = r.held.map(|h| h.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.trial_id,
            fmt_f64(r.mse),
            opt(r.bound_rhs),
            held,
            r.event_u,
            r.event_v,
            fmt_f64(r.kkt_residual),
            opt(r.seconds)
        )
        .expect("write to String");
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_trailing_blank_lines() {
        let v = parse_column("y\n1\n-2.5\n3e-3\n\n\n", "t").unwrap();
        assert_eq!(v, vec![1.0, -2.5, 3e-3]);
    }

    #[test]
    fn malformed_lines_report_their_number() {
        for (text, line) in [("1\n2\nabc\n", 3), ("1\n\n2\n", 2), ("1\n2,3\n", 2), ("y\nnan\n", 2)] {
            match parse_column(text, "in.csv") {
                Err(CliError::Input { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{other:?}"),
            }
        }
        assert!(parse_column("\n\n", "e").is_err());
    }

    #[test]
    fn trial_rows_leave_missing_values_empty() {
        let r = TrialRecord {
            trial_id: 4,
            mse: 0.5,
            bound_rhs: None,
            held: None,
            event_u: true,
            event_v: false,
            kkt_residual: 1e-12,
            seconds: None,
        };
        let csv = write_trials(&[r]);
        assert_eq!(csv, format!("{TRIAL_HEADER}\n4,0.5,,,true,false,1e-12,\n"));
    }

    proptest! {
        #[test]
        fn column_round_trips(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, 1..50)) {
            let back = parse_column(&write_column(&values), "p").unwrap();
            prop_assert_eq!(back, values);
        }
    }
}
