//! Retarders, Faraday rotators and the direction-dependent Jones matrices of element trains.
//!
//! Waveplate orientations are measured from the vertical axis. In the Pauli convention of
//! [`crate::su2`] the plates are
//!
//! ```text
//! Q(t) = R_y(2t) R_z(pi/2) R_y(-2t)
//! H(t) = R_y(2t) R_z(pi)   R_y(-2t)
//! F(t) = R_y(t)            (F+ = F(pi/2), F- = F(-pi/2))
//! ```
//!
//! Counter-propagation negates the orientation of a linear retarder and the circular
//! retardance of a Faraday rotator. For trains built only from linear retarders this is
//! equivalent to `M_bw = Z M_fw^T Z`; Faraday rotators break that rule.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::su2::{phase_distance, rot, wrap_angle, Axis, Matrix2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementKind {
    QuarterWave,
    HalfWave,
    Faraday,
}

/// A single optical element. For waveplates `angle` is the orientation (normalized to
/// `(-pi/2, pi/2]`); for Faraday rotators it is the circular retardance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Element {
    kind: ElementKind,
    angle: f64,
}

impl Element {
    pub fn new(kind: ElementKind, angle: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::InvalidInput(format!(
                "element angle must be finite, got {angle}"
            )));
        }
        Ok(Self::raw(kind, angle))
    }

    fn raw(kind: ElementKind, angle: f64) -> Self {
        let angle = match kind {
            ElementKind::QuarterWave | ElementKind::HalfWave => wrap_angle(angle, PI),
            ElementKind::Faraday => angle,
        };
        Self { kind, angle }
    }

    pub fn qwp(angle: f64) -> Self {
        Self::raw(ElementKind::QuarterWave, angle)
    }

    pub fn hwp(angle: f64) -> Self {
        Self::raw(ElementKind::HalfWave, angle)
    }

    pub fn faraday(retardance: f64) -> Self {
        Self::raw(ElementKind::Faraday, retardance)
    }

    /// `F+`: circular retardance `+pi/2`.
    pub fn faraday_plus() -> Self {
        Self::faraday(FRAC_PI_2)
    }

    /// `F-`: circular retardance `-pi/2`.
    pub fn faraday_minus() -> Self {
        Self::faraday(-FRAC_PI_2)
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn is_waveplate(&self) -> bool {
        self.kind != ElementKind::Faraday
    }

    /// Same element with its orientation offset by `delta`. Faraday rotators are unchanged.
    pub fn rotated(&self, delta: f64) -> Self {
        match self.kind {
            ElementKind::Faraday => *self,
            kind => Self::raw(kind, self.angle + delta),
        }
    }
}

/// Jones matrix of an element for forward propagation.
pub fn jones(e: &Element) -> Matrix2 {
    match e.kind {
        ElementKind::QuarterWave => {
            rot(Axis::Y, 2.0 * e.angle) * rot(Axis::Z, FRAC_PI_2) * rot(Axis::Y, -2.0 * e.angle)
        }
        ElementKind::HalfWave => {
            rot(Axis::Y, 2.0 * e.angle) * rot(Axis::Z, PI) * rot(Axis::Y, -2.0 * e.angle)
        }
        ElementKind::Faraday => rot(Axis::Y, e.angle),
    }
}

/// The element as seen by a counter-propagating photon.
pub fn reverse_element(e: &Element) -> Element {
    Element::raw(e.kind, -e.angle)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn label(&self) -> &'static str {
        match self {
            Direction::Forward => "fw",
            Direction::Backward => "bw",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReciprocityMode {
    Exact,
    UpToPhase,
}

/// Elements in the order a forward-propagating photon meets them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ElementSequence {
    elements: Vec<Element>,
}

impl ElementSequence {
    pub fn new(elements: Vec<Element>) -> Self {
        Self { elements }
    }

    /// Builds a train from an operator product written left to right, i.e. the rightmost
    /// factor is the first element the forward photon meets.
    pub fn from_operator_order(mut product: Vec<Element>) -> Self {
        product.reverse();
        Self::new(product)
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn push(&mut self, e: Element) {
        self.elements.push(e);
    }

    /// The train traversed from the other end, with every element reversed.
    pub fn counter_propagating(&self) -> ElementSequence {
        Self::new(self.elements.iter().rev().map(reverse_element).collect())
    }

    /// Applies `offset()` to each waveplate orientation, in physical order.
    pub fn perturb_waveplates(&self, mut offset: impl FnMut() -> f64) -> ElementSequence {
        Self::new(
            self.elements
                .iter()
                .map(|e| if e.is_waveplate() { e.rotated(offset()) } else { *e })
                .collect(),
        )
    }

    pub fn matrix(&self, direction: Direction) -> Result<Matrix2> {
        sequence_matrix(self, direction)
    }
}

/// Jones matrix of a train in the given propagation direction.
///
/// Forward: `J(e_n) ... J(e_1)`. Backward: `J(rev e_1) ... J(rev e_n)`.
pub fn sequence_matrix(seq: &ElementSequence, direction: Direction) -> Result<Matrix2> {
    if seq.is_empty() {
        return Err(Error::InvalidInput("element sequence is empty".into()));
    }
    let m = match direction {
        Direction::Forward => seq
            .elements
            .iter()
            .fold(Matrix2::identity(), |acc, e| jones(e) * acc),
        Direction::Backward => seq
            .elements
            .iter()
            .fold(Matrix2::identity(), |acc, e| acc * jones(&reverse_element(e))),
    };
    Ok(m)
}

/// Whether forward and backward traversal give the same matrix.
pub fn is_reciprocal(seq: &ElementSequence, tol: f64, mode: ReciprocityMode) -> Result<bool> {
    let fw = sequence_matrix(seq, Direction::Forward)?;
    let bw = sequence_matrix(seq, Direction::Backward)?;
    Ok(match mode {
        ReciprocityMode::Exact => fw.approx_eq(&bw, tol),
        ReciprocityMode::UpToPhase => phase_distance(&fw, &bw) <= tol,
    })
}

fn format_deg(rad: f64) -> String {
    format!("{:.6}", rad.to_degrees())
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ElementKind::QuarterWave => write!(f, "QWP:{}", format_deg(self.angle)),
            ElementKind::HalfWave => write!(f, "HWP:{}", format_deg(self.angle)),
            ElementKind::Faraday if self.angle == FRAC_PI_2 => f.write_str("F:+"),
            ElementKind::Faraday if self.angle == -FRAC_PI_2 => f.write_str("F:-"),
            ElementKind::Faraday => write!(f, "F:{}", format_deg(self.angle)),
        }
    }
}

impl FromStr for Element {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (tag, value) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("element `{s}` is missing `:`")))?;
        let degrees = |v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|d| d.is_finite())
                .ok_or_else(|| Error::InvalidInput(format!("bad angle `{v}` in element `{s}`")))
        };
        match tag.trim().to_ascii_uppercase().as_str() {
            "QWP" | "Q" => Ok(Element::qwp(degrees(value)?.to_radians())),
            "HWP" | "H" => Ok(Element::hwp(degrees(value)?.to_radians())),
            "F" => match value.trim() {
                "+" => Ok(Element::faraday_plus()),
                "-" => Ok(Element::faraday_minus()),
                v => Ok(Element::faraday(degrees(v)?.to_radians())),
            },
            other => Err(Error::InvalidInput(format!("unknown element kind `{other}`"))),
        }
    }
}

/// Whitespace-separated tokens such as `QWP:45 HWP:22.5 F:+`, in physical order.
impl fmt::Display for ElementSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.elements.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl FromStr for ElementSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let elements = s
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<Element>>>()?;
        if elements.is_empty() {
            return Err(Error::InvalidInput("element train is empty".into()));
        }
        Ok(Self::new(elements))
    }
}
