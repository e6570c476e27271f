//! Complex 2x2 linear algebra for polarization qubits.
//!
//! Basis convention: `|H> = [1, 0]`, `|V> = [0, 1]`, `|+> = [1, 1]/sqrt2`,
//! `|-> = [1, -1]/sqrt2`, `|L> = [1, i]/sqrt2`, `|R> = [1, -i]/sqrt2`. The Stokes
//! parameters (S1, S2, S3) map onto the Pauli matrices (X, Y, Z), and single-axis
//! rotations are `R_k(t) = exp(-i t sigma_k / 2)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tolerance used when checking that a matrix is unitary.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance on density-matrix trace, hermiticity and negative eigenvalues.
pub const STATE_TOL: f64 = 1e-9;

/// A complex 2x2 matrix stored row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct Matrix2 {
    m: [Complex64; 4],
}

impl Matrix2 {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self { m: [a, b, c, d] }
    }

    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    /// Entry at `(row, col)`.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.m[2 * row + col]
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> [Complex64; 4] {
        self.m
    }

    pub fn adjoint(&self) -> Self {
        let [a, b, c, d] = self.m;
        Self::new(a.conj(), c.conj(), b.conj(), d.conj())
    }

    pub fn transpose(&self) -> Self {
        let [a, b, c, d] = self.m;
        Self::new(a, c, b, d)
    }

    pub fn conj(&self) -> Self {
        let [a, b, c, d] = self.m;
        Self::new(a.conj(), b.conj(), c.conj(), d.conj())
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0] + self.m[3]
    }

    pub fn det(&self) -> Complex64 {
        self.m[0] * self.m[3] - self.m[1] * self.m[2]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let [a, b, c, d] = self.m;
        Self::new(s * a, s * b, s * c, s * d)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        // Eigenvalues of the Hermitian A^dagger A in closed form.
        let g = self.adjoint() * *self;
        let a = g.get(0, 0).re;
        let d = g.get(1, 1).re;
        let b = g.get(0, 1).norm();
        let mean = 0.5 * (a + d);
        let half_gap = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mean + half_gap).max(0.0).sqrt()
    }

    /// Largest absolute entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Matrix2) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation of `M^dagger M` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Matrix2::identity())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn apply(&self, ket: &Ket2) -> Ket2 {
        let [a, b, c, d] = self.m;
        let [x, y] = ket.amps;
        Ket2 {
            amps: [a * x + b * y, c * x + d * y],
        }
    }

    pub fn approx_eq(&self, other: &Matrix2, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    pub(crate) fn ensure_unitary(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let defect = self.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(Error::NotUnitary(defect));
        }
        Ok(())
    }
}

impl fmt::Debug for Matrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{:.6}, {:.6}], [{:.6}, {:.6}]]",
            self.m[0], self.m[1], self.m[2], self.m[3]
        )
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;

    fn mul(self, rhs: Matrix2) -> Matrix2 {
        let [a, b, c, d] = self.m;
        let [e, f, g, h] = rhs.m;
        Matrix2::new(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)
    }
}

impl Mul<Complex64> for Matrix2 {
    type Output = Matrix2;

    fn mul(self, rhs: Complex64) -> Matrix2 {
        self.scale(rhs)
    }
}

impl Mul<f64> for Matrix2 {
    type Output = Matrix2;

    fn mul(self, rhs: f64) -> Matrix2 {
        self.scale(rhs.into())
    }
}

impl Add for Matrix2 {
    type Output = Matrix2;

    fn add(self, rhs: Matrix2) -> Matrix2 {
        let mut m = self.m;
        m.iter_mut().zip(rhs.m).for_each(|(x, y)| *x += y);
        Matrix2 { m }
    }
}

impl Sub for Matrix2 {
    type Output = Matrix2;

    fn sub(self, rhs: Matrix2) -> Matrix2 {
        let mut m = self.m;
        m.iter_mut().zip(rhs.m).for_each(|(x, y)| *x -= y);
        Matrix2 { m }
    }
}

impl Neg for Matrix2 {
    type Output = Matrix2;

    fn neg(self) -> Matrix2 {
        self.scale(-ONE)
    }
}

/// A normalized two-component state vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ket2 {
    amps: [Complex64; 2],
}

impl Ket2 {
    /// Builds a ket from amplitudes that must already be normalized.
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "ket must have unit norm, got {norm}"
            )));
        }
        Ok(Self { amps: [a, b] })
    }

    /// Builds a ket by normalizing arbitrary nonzero amplitudes.
    pub fn normalized(a: Complex64, b: Complex64) -> Result<Self> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            amps: [a / norm, b / norm],
        })
    }

    pub(crate) const fn raw(a: Complex64, b: Complex64) -> Self {
        Self { amps: [a, b] }
    }

    pub fn h() -> Self {
        Self::raw(ONE, ZERO)
    }

    pub fn v() -> Self {
        Self::raw(ZERO, ONE)
    }

    pub fn plus() -> Self {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self::raw(s, s)
    }

    pub fn minus() -> Self {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self::raw(s, -s)
    }

    pub fn l() -> Self {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self::raw(s, I * s)
    }

    pub fn r() -> Self {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self::raw(s, -I * s)
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        (self.amps[0].norm_sqr() + self.amps[1].norm_sqr()).sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Ket2) -> Complex64 {
        self.amps[0].conj() * other.amps[0] + self.amps[1].conj() * other.amps[1]
    }

    pub fn conj(&self) -> Ket2 {
        Self::raw(self.amps[0].conj(), self.amps[1].conj())
    }

    /// `|self><self|`.
    pub fn projector(&self) -> Matrix2 {
        let [a, b] = self.amps;
        Matrix2::new(a * a.conj(), a * b.conj(), b * a.conj(), b * b.conj())
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix(self.projector())
    }
}

/// A rotation axis for single-axis rotations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// The identity and the three Pauli matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl From<Axis> for Pauli {
    fn from(axis: Axis) -> Self {
        match axis {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }
}

pub fn pauli(k: Pauli) -> Matrix2 {
    match k {
        Pauli::I => Matrix2::identity(),
        Pauli::X => Matrix2::new(ZERO, ONE, ONE, ZERO),
        Pauli::Y => Matrix2::new(ZERO, -I, I, ZERO),
        Pauli::Z => Matrix2::new(ONE, ZERO, ZERO, -ONE),
    }
}

/// `R_k(theta) = cos(theta/2) 1 - i sin(theta/2) sigma_k`.
pub fn rotation(axis: Axis, theta: f64) -> Result<Matrix2> {
    if !theta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "rotation angle must be finite, got {theta}"
        )));
    }
    Ok(rot(axis, theta))
}

/// Infallible rotation for internal use where the angle is known to be finite.
#[inline]
pub(crate) fn rot(axis: Axis, theta: f64) -> Matrix2 {
    let (s, c) = (0.5 * theta).sin_cos();
    let c = Complex64::new(c, 0.0);
    match axis {
        Axis::X => Matrix2::new(c, Complex64::new(0.0, -s), Complex64::new(0.0, -s), c),
        Axis::Y => Matrix2::new(c, (-s).into(), s.into(), c),
        Axis::Z => Matrix2::new(
            Complex64::new(c.re, -s),
            ZERO,
            ZERO,
            Complex64::new(c.re, s),
        ),
    }
}

pub fn commutator(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    *a * *b - *b * *a
}

pub fn anticommutator(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    *a * *b + *b * *a
}

/// Distance between two unitaries after optimally aligning their global phase:
/// `min_phi ||a - e^{i phi} b||_F`.
pub fn phase_distance(a: &Matrix2, b: &Matrix2) -> f64 {
    let overlap = (b.adjoint() * *a).trace();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    (*a - b.scale(phase)).frobenius_norm()
}

/// True when `a` and `b` agree up to a global phase within `tol` (Frobenius distance).
pub fn phase_equal(a: &Matrix2, b: &Matrix2, tol: f64) -> Result<bool> {
    a.ensure_unitary()?;
    b.ensure_unitary()?;
    Ok(phase_distance(a, b) <= tol)
}

/// `|tr(a^dagger b)/2|^2`, the phase-insensitive overlap of two unitaries.
pub fn unitary_fidelity(a: &Matrix2, b: &Matrix2) -> f64 {
    ((a.adjoint() * *b).trace() * 0.5).norm_sqr()
}

/// Lifts a unitary into SU(2).
///
/// Matrices that already have unit determinant are returned unchanged. Otherwise the
/// matrix is multiplied by `e^{-i arg(det)/2}` and the sign of the two possible lifts is
/// fixed by the first nonzero entry (row-major): its argument must lie in `[-pi/2, pi/2)`.
pub fn su2_canonicalize(u: &Matrix2) -> Result<Matrix2> {
    u.ensure_unitary()?;
    let det = u.det();
    if (det - ONE).norm() <= 1e-12 {
        return Ok(*u);
    }
    let lifted = u.scale(Complex64::from_polar(1.0, -0.5 * det.arg()));
    let lead = lifted
        .entries()
        .into_iter()
        .find(|z| z.norm() > 1e-12)
        .unwrap_or(ONE);
    let keep = lead.re > 1e-12 || (lead.re.abs() <= 1e-12 && lead.im < 0.0);
    Ok(if keep { lifted } else { -lifted })
}

/// Rotation axis and angle of an SU(2) element: `U = exp(-i angle n.sigma / 2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisAngle {
    axis: [f64; 3],
    angle: f64,
}

impl AxisAngle {
    /// Normalizes `axis` and wraps `angle` into `(-2pi, 2pi]`.
    pub fn new(axis: [f64; 3], angle: f64) -> Result<Self> {
        let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm < 1e-300 || !angle.is_finite() {
            return Err(Error::InvalidInput(
                "axis must be a finite nonzero vector and the angle finite".into(),
            ));
        }
        Ok(Self {
            axis: axis.map(|x| x / norm),
            angle: wrap_angle(angle, 4.0 * PI),
        })
    }

    /// Extracts the axis-angle form of an SU(2) matrix; the angle is in `[0, 2pi]`.
    pub fn from_su2(u: &Matrix2) -> Result<Self> {
        u.ensure_unitary()?;
        if (u.det() - ONE).norm() > 1e-10 {
            return Err(Error::InvalidInput("matrix is not in SU(2)".into()));
        }
        let cos_half = 0.5 * u.trace().re;
        let sn = [Pauli::X, Pauli::Y, Pauli::Z].map(|k| -0.5 * (pauli(k) * *u).trace().im);
        let sin_half = sn.iter().map(|x| x * x).sum::<f64>().sqrt();
        if sin_half < 1e-15 {
            let angle = if cos_half > 0.0 { 0.0 } else { 2.0 * PI };
            return Ok(Self {
                axis: [0.0, 0.0, 1.0],
                angle,
            });
        }
        Ok(Self {
            axis: sn.map(|x| x / sin_half),
            angle: 2.0 * sin_half.atan2(cos_half),
        })
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn matrix(&self) -> Matrix2 {
        let (s, c) = (0.5 * self.angle).sin_cos();
        let [nx, ny, nz] = self.axis;
        let generator = pauli(Pauli::X) * nx + pauli(Pauli::Y) * ny + pauli(Pauli::Z) * nz;
        Matrix2::identity() * c - generator.scale(I * s)
    }
}

/// Wraps `x` into the half-open interval `(-period/2, period/2]`.
pub fn wrap_angle(x: f64, period: f64) -> f64 {
    let half = 0.5 * period;
    let mut y = (x + half).rem_euclid(period) - half;
    if y <= -half {
        y += period;
    }
    y
}

/// A validated single-qubit density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(Matrix2);

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity. Eigenvalues down to
    /// `-STATE_TOL` are accepted and clipped to zero.
    pub fn new(m: Matrix2) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        if m.max_abs_diff(&m.adjoint()) > STATE_TOL {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let tr = m.trace().re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let (lo, _) = hermitian_eigenvalues(&m);
        if lo < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {lo:.3e}"
            )));
        }
        Ok(Self::clip(&m))
    }

    /// Projects an arbitrary Hermitian matrix onto the state space by clipping negative
    /// eigenvalues and renormalizing the trace.
    pub fn project(m: &Matrix2) -> Result<Self> {
        let herm = (*m + m.adjoint()) * 0.5;
        let clipped = Self::clip(&herm);
        let tr = clipped.0.trace().re;
        if tr.is_nan() || tr <= 0.0 {
            return Err(Error::InvalidState(
                "matrix has no positive part to project onto".into(),
            ));
        }
        Ok(DensityMatrix(clipped.0 * (1.0 / tr)))
    }

    /// `(1 + x X + y Y + z Z) / 2`, projected onto the state space when `|r| > 1`.
    pub fn from_bloch(x: f64, y: f64, z: f64) -> Result<Self> {
        let m = (Matrix2::identity()
            + pauli(Pauli::X) * x
            + pauli(Pauli::Y) * y
            + pauli(Pauli::Z) * z)
            * 0.5;
        Self::project(&m)
    }

    fn clip(m: &Matrix2) -> Self {
        let [x, y, z] = bloch_of(m);
        let a = 0.5 * m.trace().re;
        let r = (x * x + y * y + z * z).sqrt();
        if a - r / 2.0 >= 0.0 {
            return DensityMatrix(*m);
        }
        // Only the upper eigenvalue a + r/2 survives; its projector is (1 + n.sigma)/2.
        let top = a + 0.5 * r;
        let projector = (Matrix2::identity()
            + (pauli(Pauli::X) * x + pauli(Pauli::Y) * y + pauli(Pauli::Z) * z) * (1.0 / r))
            * 0.5;
        DensityMatrix(projector * top.max(0.0))
    }

    pub fn matrix(&self) -> Matrix2 {
        self.0
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }
}

/// Eigenvalues (ascending) of a Hermitian 2x2 matrix.
pub fn hermitian_eigenvalues(m: &Matrix2) -> (f64, f64) {
    let a = m.get(0, 0).re;
    let d = m.get(1, 1).re;
    let b = m.get(0, 1);
    let mean = 0.5 * (a + d);
    let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    (mean - half_gap, mean + half_gap)
}

fn bloch_of(m: &Matrix2) -> [f64; 3] {
    [Pauli::X, Pauli::Y, Pauli::Z].map(|k| (pauli(k) * *m).trace().re)
}

/// `(tr[X rho], tr[Y rho], tr[Z rho])`.
pub fn bloch_expectations(rho: &DensityMatrix) -> (f64, f64, f64) {
    let [x, y, z] = bloch_of(&rho.0);
    (x, y, z)
}

/// Uhlmann fidelity `(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
///
/// For qubits this equals `tr(rho sigma) + 2 sqrt(det rho det sigma)`.
pub fn state_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let overlap = (rho.0 * sigma.0).trace().re;
    let dets = rho.0.det().re.max(0.0) * sigma.0.det().re.max(0.0);
    (overlap + 2.0 * dets.sqrt()).clamp(0.0, 1.0)
}

/// `|<a|b>|^2` for pure states.
pub fn ket_fidelity(a: &Ket2, b: &Ket2) -> f64 {
    a.inner(b).norm_sqr()
}
