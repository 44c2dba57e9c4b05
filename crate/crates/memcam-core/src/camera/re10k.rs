//! RealEstate10K-style pose file parsing.
//!
//! Each data line carries 19 whitespace-separated numbers: a timestamp,
//! normalized intrinsics `fx fy cx cy`, two reserved fields, then the twelve
//! row-major `[R|t]` entries. An optional first line carrying a URL is
//! skipped.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{Matrix3, Vector3};

use crate::math;

use super::{CameraPose, FileIntrinsics, Intrinsics};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Re10kError {
    /// A data line did not have exactly 19 fields. Line numbers are 1-based
    /// and count every line of the input, including a skipped URL line.
    FieldCount { line: usize, found: usize },
    /// A field failed to parse as a finite number, or a numeric field was
    /// outside its valid domain (e.g. `fx <= 0`).
    NonNumeric { line: usize },
    /// The rotation block of a line is not a proper rotation.
    NotARotation { line: usize },
}

impl fmt::Display for Re10kError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Re10kError::FieldCount { line, found } => {
                write!(f, "line {line}: expected 19 fields, found {found}")
            }
            Re10kError::NonNumeric { line } => write!(f, "line {line}: non-numeric field"),
            Re10kError::NotARotation { line } => {
                write!(f, "line {line}: rotation block is not a proper rotation")
            }
        }
    }
}

impl core::error::Error for Re10kError {}

/// One parsed pose-file line.
#[derive(Clone, Debug, PartialEq)]
pub struct Re10kRecord {
    pub timestamp: f64,
    pub intrinsics: Intrinsics,
    pub pose: CameraPose,
}

/// Parses pose-file text into records. Blank lines are ignored; a first line
/// consisting of a single non-numeric token (the clip URL) is skipped.
pub fn parse_re10k(text: &str) -> Result<Vec<Re10kRecord>, Re10kError> {
    let mut out = Vec::new();
    let mut first_content_line = true;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if first_content_line && fields.len() == 1 && fields[0].parse::<f64>().is_err() {
            first_content_line = false;
            continue;
        }
        first_content_line = false;

        if fields.len() != 19 {
            return Err(Re10kError::FieldCount {
                line: line_no,
                found: fields.len(),
            });
        }
        let mut values = [0.0f64; 19];
        for (i, field) in fields.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Re10kError::NonNumeric { line: line_no })?;
            if !v.is_finite() {
                return Err(Re10kError::NonNumeric { line: line_no });
            }
            values[i] = v;
        }

        let (fx, fy) = (values[1], values[2]);
        if fx <= 0.0 || fy <= 0.0 {
            return Err(Re10kError::NonNumeric { line: line_no });
        }
        // Normalized fx = f/W and fy = f/H with square pixels, so the frame
        // aspect W/H is fy/fx and the horizontal FOV is 2·atan(0.5/fx).
        let fov_h_deg = (2.0 * math::atan(0.5 / fx)).to_degrees();
        let mut intrinsics = Intrinsics::new(fov_h_deg, fy / fx)
            .map_err(|_| Re10kError::NonNumeric { line: line_no })?;
        intrinsics.file_params = Some(FileIntrinsics {
            fx,
            fy,
            cx: values[3],
            cy: values[4],
        });

        let mut rotation = Matrix3::zeros();
        let mut translation = Vector3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                rotation[(i, j)] = values[7 + 4 * i + j];
            }
            translation[i] = values[7 + 4 * i + 3];
        }
        let pose = CameraPose::from_rt(rotation, translation)
            .map_err(|_| Re10kError::NotARotation { line: line_no })?;

        out.push(Re10kRecord {
            timestamp: values[0],
            intrinsics,
            pose,
        });
    }
    Ok(out)
}

/// Writes records in the 19-field line format accepted by [`parse_re10k`].
/// Numbers use Rust's shortest round-trip formatting, so parsing the output
/// reproduces the poses exactly.
pub fn serialize_re10k(records: &[Re10kRecord]) -> String {
    let mut out = String::new();
    for rec in records {
        let fp = rec.intrinsics.file_params.unwrap_or(FileIntrinsics {
            fx: 0.5 / math::tan(rec.intrinsics.fov_h_deg().to_radians() / 2.0),
            fy: 0.5 / math::tan(rec.intrinsics.fov_h_deg().to_radians() / 2.0)
                * rec.intrinsics.aspect(),
            cx: 0.5,
            cy: 0.5,
        });
        out.push_str(&format!(
            "{} {} {} {} {} 0 0",
            rec.timestamp, fp.fx, fp.fy, fp.cx, fp.cy
        ));
        for v in rec.pose.flatten() {
            out.push_str(&format!(" {v}"));
        }
        out.push('\n');
    }
    out
}
