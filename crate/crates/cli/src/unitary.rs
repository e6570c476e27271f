//! Target-unitary grammar shared by `synth` and `verify`.

use std::str::FromStr;

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use sagnac_switch::discrimination::GateSet;
use sagnac_switch::su2::{rotation, Axis, Matrix2};
use sagnac_switch::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    X,
    Y,
    Z,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::X => Axis::X,
            AxisArg::Y => Axis::Y,
            AxisArg::Z => Axis::Z,
        }
    }
}

#[derive(Clone, Debug, Default, Args)]
pub struct UnitaryArgs {
    /// Rotation axis; the target is R_axis(angle).
    #[arg(long, value_enum, requires = "angle", conflicts_with_all = ["matrix", "gate"])]
    pub axis: Option<AxisArg>,
    /// Rotation angle in degrees.
    #[arg(long, requires = "axis", allow_negative_numbers = true)]
    pub angle: Option<f64>,
    /// Matrix "a,b;c,d" with complex entries such as 0.5+0.5i.
    #[arg(long, conflicts_with = "gate")]
    pub matrix: Option<String>,
    /// Index 0..9 into {I, X, Y, Z, (X+Y)/sqrt2, (X-Y)/sqrt2, (X+Z)/sqrt2, (X-Z)/sqrt2,
    /// (Y+Z)/sqrt2, (Y-Z)/sqrt2}.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..10))]
    pub gate: Option<u8>,
}

impl UnitaryArgs {
    pub fn is_given(&self) -> bool {
        self.axis.is_some() || self.matrix.is_some() || self.gate.is_some()
    }

    pub fn resolve(&self) -> Result<Matrix2> {
        if let (Some(axis), Some(angle)) = (self.axis, self.angle) {
            return rotation(axis.into(), angle.to_radians());
        }
        if let Some(text) = &self.matrix {
            let m = parse_matrix(text)?;
            if !m.is_unitary(sagnac_switch::su2::UNITARY_TOL) {
                return Err(Error::NotUnitary(m.unitarity_defect()));
            }
            return Ok(m);
        }
        if let Some(k) = self.gate {
            return GateSet::new().get(k as usize).copied();
        }
        Err(Error::InvalidInput(
            "give a target with --axis/--angle, --matrix or --gate".into(),
        ))
    }
}

/// Parses `"a,b;c,d"` (rows separated by `;`).
pub fn parse_matrix(text: &str) -> Result<Matrix2> {
    let rows: Vec<&str> = text.split(';').collect();
    if rows.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "expected two rows separated by ';' in {text:?}"
        )));
    }
    let mut entries = Vec::with_capacity(4);
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != 2 {
            return Err(Error::InvalidInput(format!(
                "expected two comma-separated entries in row {row:?}"
            )));
        }
        for cell in cells {
            let cleaned: String = cell.chars().filter(|c| !c.is_whitespace()).collect();
            let z = Complex64::from_str(&cleaned)
                .map_err(|_| Error::InvalidInput(format!("cannot parse complex number {cell:?}")))?;
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite entry {cell:?}")));
            }
            entries.push(z);
        }
    }
    Ok(Matrix2::new(entries[0], entries[1], entries[2], entries[3]))
}
