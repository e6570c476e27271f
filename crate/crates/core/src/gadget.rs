//! Reciprocal polarization gadgets and waveplate-angle synthesis.
//!
//! The X-rotation gadget `G_x(t) = H(pi/8) F- Q(pi/2) H((t+2pi)/4) Q(pi/2) F+ H(pi/8)`
//! implements `R_x(t)` in both propagation directions: the Faraday rotators undo the sign
//! flip that counter-propagation imposes on the central X rotation. Sandwiching it between a
//! quarter/half-wave pair and its mirror image,
//!
//! ```text
//! G_R = Q(theta) H(phi) G_x(psi) H(-phi) Q(-theta)
//! ```
//!
//! gives a palindromic, hence reciprocal, train that reaches every element of SU(2).
//! Merging neighbouring waveplates removes two plates from the eleven-element form.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::optics::{Direction, Element, ElementSequence};
use crate::su2::{
    bloch_expectations, phase_distance, rot, su2_canonicalize, unitary_fidelity, wrap_angle,
    Axis, Ket2, Matrix2,
};

/// Phase-insensitive Frobenius distance accepted by [`synthesize`].
pub const SYNTHESIS_TOL: f64 = 1e-10;

/// Below this magnitude both `atan2` arguments are treated as zero and the angle is set to 0.
const ATAN2_DEGENERATE: f64 = 1e-12;

/// Waveplate angles of the reciprocal gadget, in radians.
///
/// `theta`, `phi` and `alpha` parameterize the eleven-element train; the remaining fields
/// are the orientations of the reduced nine-element train.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GadgetAngles {
    pub theta: f64,
    pub phi: f64,
    /// Orientation of the central half-wave plate.
    pub alpha: f64,
    pub theta1: f64,
    pub phi1: f64,
    pub theta2: f64,
    pub phi2: f64,
}

impl GadgetAngles {
    /// The eleven-element train `Q(th) H(ph) G_x H(-ph) Q(-th)` with central plate `H(alpha)`.
    pub fn full_sequence(&self) -> ElementSequence {
        let mut product = vec![Element::qwp(self.theta), Element::hwp(self.phi)];
        product.extend(gx_operator_product(self.alpha));
        product.extend([Element::hwp(-self.phi), Element::qwp(-self.theta)]);
        ElementSequence::from_operator_order(product)
    }

    /// The nine-element train actually mounted on the bench.
    pub fn reduced_sequence(&self) -> ElementSequence {
        reciprocal_gadget_sequence(self)
    }
}

fn gx_operator_product(alpha: f64) -> [Element; 7] {
    [
        Element::hwp(FRAC_PI_8),
        Element::faraday_minus(),
        Element::qwp(FRAC_PI_2),
        Element::hwp(alpha),
        Element::qwp(FRAC_PI_2),
        Element::faraday_plus(),
        Element::hwp(FRAC_PI_8),
    ]
}

/// Seven-element train implementing `R_x(theta)` in both directions.
pub fn gx_sequence(theta: f64) -> ElementSequence {
    ElementSequence::from_operator_order(gx_operator_product((theta + 2.0 * PI) / 4.0).to_vec())
}

/// Reduced train `Q(th1) H(ph1) F- Q(pi/2) H(alpha) Q(pi/2) F+ H(ph2) Q(th2)`, written as an
/// operator product (the photon meets `Q(th2)` first when propagating forwards).
pub fn reciprocal_gadget_sequence(a: &GadgetAngles) -> ElementSequence {
    ElementSequence::from_operator_order(vec![
        Element::qwp(a.theta1),
        Element::hwp(a.phi1),
        Element::faraday_minus(),
        Element::qwp(FRAC_PI_2),
        Element::hwp(a.alpha),
        Element::qwp(FRAC_PI_2),
        Element::faraday_plus(),
        Element::hwp(a.phi2),
        Element::qwp(a.theta2),
    ])
}

/// Fills in the reduced-train orientations using
/// `Q(a)H(b)H(c) = Q(a+pi/2)H(a-b+c-pi/2)` and `H(a)H(b)Q(c) = H(a-b+c-pi/2)Q(c+pi/2)`.
pub fn reduce_angles(theta: f64, phi: f64, alpha: f64) -> GadgetAngles {
    GadgetAngles {
        theta,
        phi,
        alpha,
        theta1: theta + FRAC_PI_2,
        phi1: theta - phi + FRAC_PI_8 - FRAC_PI_2,
        theta2: -theta + FRAC_PI_2,
        phi2: FRAC_PI_8 + phi - theta - FRAC_PI_2,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GadgetReport {
    pub fw_fidelity: f64,
    pub bw_fidelity: f64,
    pub reciprocity_fidelity: f64,
}

impl GadgetReport {
    pub fn min(&self) -> f64 {
        self.fw_fidelity
            .min(self.bw_fidelity)
            .min(self.reciprocity_fidelity)
    }
}

/// Fidelities `|tr(A^dagger B)/2|^2` of the reduced train against `u` in both directions,
/// and between the two directions.
pub fn verify_gadget(a: &GadgetAngles, u: &Matrix2) -> Result<GadgetReport> {
    let seq = reciprocal_gadget_sequence(a);
    let fw = seq.matrix(Direction::Forward)?;
    let bw = seq.matrix(Direction::Backward)?;
    Ok(GadgetReport {
        fw_fidelity: unitary_fidelity(&fw, u),
        bw_fidelity: unitary_fidelity(&bw, u),
        reciprocity_fidelity: unitary_fidelity(&fw, &bw),
    })
}

fn atan2_or_zero(y: f64, x: f64) -> f64 {
    if y.abs() < ATAN2_DEGENERATE && x.abs() < ATAN2_DEGENERATE {
        0.0
    } else {
        y.atan2(x)
    }
}

/// Both eigenpairs of a 2x2 matrix; a multiple of the identity yields `|H>`, `|V>`.
fn eigenpairs(v: &Matrix2) -> [(Complex64, Ket2); 2] {
    let half_tr = v.trace() * 0.5;
    let root = (half_tr * half_tr - v.det()).sqrt();
    let [a, b, c, d] = v.entries();
    let pair = |mu: Complex64, fallback: Ket2| {
        let first = (b, mu - a);
        let second = (mu - d, c);
        let norm = |(p, q): (Complex64, Complex64)| p.norm_sqr() + q.norm_sqr();
        let (p, q) = if norm(first) >= norm(second) { first } else { second };
        let ket = if norm((p, q)) < 1e-24 {
            fallback
        } else {
            Ket2::normalized(p, q).unwrap_or(fallback)
        };
        (mu, ket)
    };
    [
        pair(half_tr + root, Ket2::h()),
        pair(half_tr - root, Ket2::v()),
    ]
}

/// Gadget angles for one eigenbranch of `R_x(pi) U`.
fn angles_for_branch(mu: Complex64, v_plus: &Ket2) -> GadgetAngles {
    // V |v+> = e^{-i lambda/2} |v+>.
    let lambda = -2.0 * mu.arg();

    // gamma, delta rotate |v+> onto |+>.
    let (x, _, z) = bloch_expectations(&v_plus.density());
    let gamma = atan2_or_zero(z, x);
    let tilted = rot(Axis::Y, gamma).apply(v_plus);
    let (x1, y1, _) = bloch_expectations(&tilted.density());
    let delta = -atan2_or_zero(y1, x1);

    let psi = lambda - PI;

    // (Q(theta) H(phi))^-1 = R_x(-pi/2) R_z(-delta) R_y(-gamma).
    let inverse_pair = rot(Axis::X, -FRAC_PI_2) * rot(Axis::Z, -delta) * rot(Axis::Y, -gamma);

    // Orientations for the order H(phi') Q(theta').
    let l_prime = inverse_pair.apply(&Ket2::l());
    let (lx, _, lz) = bloch_expectations(&l_prime.density());
    let theta_p = 0.5 * atan2_or_zero(lx, lz) + PI / 4.0;

    let quarter = crate::optics::jones(&Element::qwp(theta_p));
    let h_prime = (quarter * inverse_pair).apply(&Ket2::h());
    let (hx, _, hz) = bloch_expectations(&h_prime.density());
    let phi_p = 0.25 * atan2_or_zero(hx, hz);

    // H(a)Q(b) = Q(2a - b)H(a).
    let phi = phi_p;
    let theta = 2.0 * phi - theta_p;
    let alpha = wrap_angle(psi, 4.0 * PI) / 4.0 + FRAC_PI_2;

    reduce_angles(
        wrap_angle(theta, PI),
        wrap_angle(phi, PI),
        wrap_angle(alpha, PI),
    )
}

/// Waveplate angles whose reciprocal gadget implements `u` (up to global phase) in both
/// propagation directions.
///
/// The target is first lifted into SU(2). Both eigenbranches of `R_x(pi) U` are tried in
/// turn; the first whose reconstruction matches in both directions is returned.
pub fn synthesize(u: &Matrix2) -> Result<GadgetAngles> {
    let target = su2_canonicalize(u)?;
    let v = rot(Axis::X, PI) * target;
    let mut worst = f64::INFINITY;
    for (mu, v_plus) in eigenpairs(&v) {
        let angles = angles_for_branch(mu, &v_plus);
        let seq = reciprocal_gadget_sequence(&angles);
        let fw = seq.matrix(Direction::Forward)?;
        let bw = seq.matrix(Direction::Backward)?;
        let err = phase_distance(&fw, &target).max(phase_distance(&bw, &target));
        if err <= SYNTHESIS_TOL {
            return Ok(angles);
        }
        worst = worst.min(err);
    }
    Err(Error::Consistency(format!(
        "gadget reconstruction misses the target by {worst:.3e} on both eigenbranches"
    )))
}
