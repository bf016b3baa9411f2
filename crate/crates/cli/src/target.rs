//! Gate labels used on the command line and in schedule files.

use std::f64::consts::PI;
use std::path::Path;

use abab_core::linalg::{hadamard, identity, is_unitary, pauli_x, rotation_operator};
use abab_core::{AxisAngle, ComplexMatrix, GateKind};
use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Identity,
    Hadamard,
    Rz(f64),
    Ry(f64),
    Matrix(ComplexMatrix),
    Swap,
    Nnor,
}

impl Target {
    pub fn parse(label: &str) -> Result<Self> {
        let (head, arg) = match label.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (label, None),
        };
        let need = |what: &str| arg.ok_or_else(|| anyhow!("gate `{head}` needs an argument, e.g. `{head}:{what}`"));
        Ok(match head {
            "identity" | "id" => Target::Identity,
            "h" => Target::Hadamard,
            "rz" => Target::Rz(parse_angle(need("pi/2")?)?),
            "ry" => Target::Ry(parse_angle(need("pi/2")?)?),
            "u" => Target::Matrix(read_matrix(Path::new(need("matrix.json")?))?),
            "swap" => Target::Swap,
            "nnor" => Target::Nnor,
            _ => bail!("unknown gate `{label}` (expected h, rz:ANGLE, ry:ANGLE, u:PATH, swap, nnor or identity)"),
        })
    }

    pub fn gate_kind(&self) -> GateKind {
        match self {
            Target::Identity => GateKind::RotationZ(0.0),
            Target::Hadamard => GateKind::Hadamard,
            Target::Rz(a) => GateKind::RotationZ(*a),
            Target::Ry(a) => GateKind::RotationY(*a),
            Target::Matrix(u) => GateKind::Arbitrary(u.clone()),
            Target::Swap => GateKind::Swap,
            Target::Nnor => GateKind::Nnor,
        }
    }

    /// Logical 2×2 target; `None` for nNOR.
    pub fn logical(&self) -> Option<ComplexMatrix> {
        Some(match self {
            Target::Identity => identity(2),
            Target::Hadamard => hadamard(),
            Target::Rz(a) => rotation_operator(&AxisAngle::z(*a)),
            Target::Ry(a) => rotation_operator(&AxisAngle::y(*a)),
            Target::Matrix(u) => u.clone(),
            Target::Swap => pauli_x(),
            Target::Nnor => return None,
        })
    }
}

/// Angles as plain numbers or multiples of pi: `1.2`, `pi`, `-pi/2`, `3pi/4`.
pub fn parse_angle(text: &str) -> Result<f64> {
    let s = text.trim();
    if let Ok(x) = s.parse::<f64>() {
        if x.is_finite() {
            return Ok(x);
        }
    }
    let bad = || anyhow!("cannot parse angle `{text}`");
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d.trim().parse::<f64>().map_err(|_| bad())?),
        None => (s, 1.0),
    };
    let coeff = num
        .trim()
        .strip_suffix("pi")
        .ok_or_else(bad)?
        .trim()
        .trim_end_matches('*');
    let k = match coeff {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    if den == 0.0 {
        return Err(bad());
    }
    Ok(k * PI / den)
}

/// Matrix file entry: a real number or `[re, im]`.
#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

/// A 2×2 unitary stored as JSON rows `[[a, b], [c, d]]`.
fn read_matrix(path: &Path) -> Result<ComplexMatrix> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rows: [[Entry; 2]; 2] = serde_json::from_str(&text).map_err(|e| {
        anyhow!(
            "{} line {} column {}: expected [[a, b], [c, d]]: {e}",
            path.display(),
            e.line(),
            e.column()
        )
    })?;
    let entries: Vec<Complex64> = rows
        .iter()
        .flatten()
        .map(|e| match *e {
            Entry::Real(x) => Complex64::new(x, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        })
        .collect();
    let u = ComplexMatrix::from_row_slice(2, 2, &entries);
    if !is_unitary(&u, 1e-10) {
        bail!("{}: matrix is not unitary", path.display());
    }
    Ok(u)
}
