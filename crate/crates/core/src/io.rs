//! Plain-text trace files.
//!
//! ```text
//! # kind = s21
//! freq_hz,re,im
//! 7.0e9,0.0123,-0.0456
//! ```
//!
//! Power traces use the header `freq_hz,power`. Lines starting with `#` are
//! comments; a `# kind = s11` comment marks a reflection trace (complex
//! traces default to `s21`).

use std::io::{BufRead, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::error::Error;
use crate::trace::{ComplexTrace, TraceKind};

pub const COMPLEX_HEADER: &str = "freq_hz,re,im";
pub const POWER_HEADER: &str = "freq_hz,power";

#[derive(Debug, Error)]
pub enum TraceFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] Error),
}

/// Writes `trace` with shortest round-trip float formatting, so reading the
/// file back yields bit-identical values.
pub fn write_trace<W: Write>(trace: &ComplexTrace, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# kind = {}", trace.kind.as_str())?;
    match trace.kind {
        TraceKind::PowerNormalized => {
            writeln!(out, "{POWER_HEADER}")?;
            for (f, v) in trace.freqs.iter().zip(&trace.values) {
                writeln!(out, "{f:e},{:e}", v.re)?;
            }
        }
        _ => {
            writeln!(out, "{COMPLEX_HEADER}")?;
            for (f, v) in trace.freqs.iter().zip(&trace.values) {
                writeln!(out, "{f:e},{:e},{:e}", v.re, v.im)?;
            }
        }
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(input: R) -> Result<ComplexTrace, TraceFileError> {
    let mut declared: Option<TraceKind> = None;
    let mut columns: Option<usize> = None;
    let mut freqs = Vec::new();
    let mut values = Vec::new();

    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(comment) = text.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "kind" {
                    declared = Some(parse_kind(value.trim()).ok_or_else(|| TraceFileError::Parse {
                        line: lineno,
                        message: format!("unknown trace kind `{}`", value.trim()),
                    })?);
                }
            }
            continue;
        }
        let Some(ncol) = columns else {
            let header: Vec<&str> = text.split(',').map(str::trim).collect();
            columns = Some(match header.as_slice() {
                ["freq_hz", "re", "im"] => 3,
                ["freq_hz", "power"] => 2,
                _ => {
                    return Err(TraceFileError::Parse {
                        line: lineno,
                        message: format!("expected header `{COMPLEX_HEADER}` or `{POWER_HEADER}`, got `{text}`"),
                    })
                }
            });
            continue;
        };
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if fields.len() != ncol {
            return Err(TraceFileError::Parse {
                line: lineno,
                message: format!("expected {ncol} columns, got {}", fields.len()),
            });
        }
        let mut nums = [0.0f64; 3];
        for (slot, field) in nums.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| TraceFileError::Parse {
                line: lineno,
                message: format!("not a number: `{field}`"),
            })?;
        }
        freqs.push(nums[0]);
        values.push(if ncol == 3 {
            Complex64::new(nums[1], nums[2])
        } else {
            Complex64::new(nums[1], 0.0)
        });
    }

    let kind = match (columns, declared) {
        (None, _) => {
            return Err(TraceFileError::Parse {
                line: 0,
                message: "missing header".into(),
            })
        }
        (Some(2), _) => TraceKind::PowerNormalized,
        (Some(_), Some(TraceKind::PowerNormalized)) => {
            return Err(TraceFileError::Parse {
                line: 0,
                message: "power kind declared for a complex table".into(),
            })
        }
        (Some(_), Some(k)) => k,
        (Some(_), None) => TraceKind::S21,
    };
    Ok(ComplexTrace::new(freqs, values, kind)?)
}

fn parse_kind(s: &str) -> Option<TraceKind> {
    match s.to_ascii_lowercase().as_str() {
        "s21" => Some(TraceKind::S21),
        "s11" => Some(TraceKind::S11),
        "power" | "power_normalized" => Some(TraceKind::PowerNormalized),
        _ => None,
    }
}
