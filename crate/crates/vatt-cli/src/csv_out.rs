//! CSV emission of diagnostic traces.
//!
//! One row per sample, header
//! `t,principal_angle_rad,werr_x,werr_y,werr_z,berr_x,berr_y,berr_z,V,U,T`,
//! every value printed with 17 significant digits so a parse reproduces the
//! trace bit-exactly. LF line endings.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use vatt_core::diagnostics::ErrorSample;
use vatt_core::so3::Vector3;

pub const CSV_HEADER: &str = "t,principal_angle_rad,werr_x,werr_y,werr_z,berr_x,berr_y,berr_z,V,U,T";

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("refusing to write an empty trace to {path}")]
    EmptyTrace { path: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed row: {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },
}

/// `{:.16e}` gives one leading digit plus 16 fractional digits: the 17
/// significant digits that make f64 round-trips exact.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn emit_csv(trace: &[ErrorSample], path: &Path) -> Result<(), CsvError> {
    if trace.is_empty() {
        return Err(CsvError::EmptyTrace {
            path: path.display().to_string(),
        });
    }
    let io_err = |source| CsvError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = Vec::with_capacity(trace.len() * 200);
    out.extend_from_slice(CSV_HEADER.as_bytes());
    out.push(b'\n');
    for s in trace {
        let row = [
            fmt(s.t),
            fmt(s.principal_angle),
            fmt(s.omega_err.x),
            fmt(s.omega_err.y),
            fmt(s.omega_err.z),
            fmt(s.beta_err.x),
            fmt(s.beta_err.y),
            fmt(s.beta_err.z),
            fmt(s.v),
            fmt(s.u_pot),
            fmt(s.t_kin),
        ]
        .join(",");
        out.extend_from_slice(row.as_bytes());
        out.push(b'\n');
    }
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(&out).map_err(io_err)?;
    Ok(())
}

/// Parses a file produced by [`emit_csv`] back into samples.
pub fn parse_csv(path: &Path) -> Result<Vec<ErrorSample>, CsvError> {
    let text = std::fs::read_to_string(path).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let malformed = |line: usize, reason: String| CsvError::Malformed {
        path: path.display().to_string(),
        line,
        reason,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        other => {
            return Err(malformed(
                1,
                format!("bad header: {:?}", other.map(|(_, h)| h)),
            ))
        }
    }
    let mut samples = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| malformed(idx + 1, e.to_string()))?;
        if fields.len() != 11 {
            return Err(malformed(idx + 1, format!("{} fields", fields.len())));
        }
        samples.push(ErrorSample {
            t: fields[0],
            principal_angle: fields[1],
            omega_err: Vector3::new(fields[2], fields[3], fields[4]),
            beta_err: Vector3::new(fields[5], fields[6], fields[7]),
            v: fields[8],
            u_pot: fields[9],
            t_kin: fields[10],
        });
    }
    Ok(samples)
}
