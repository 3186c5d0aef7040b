//! Closed-form minimizers of the per-coordinate quadratic and cubic
//! upper-bound models, plain and l1-regularized, plus elastic-net
//! absorption.
//!
//! The quadratic model is grad*dx + (1/2)*L2*dx^2, the cubic model
//! grad*dx + (1/2)*hess*dx^2 + (1/6)*L3*|dx|^3; both upper-bound the loss
//! along one coordinate, so stepping to their minimizer can never
//! increase the loss. The l1 variants add lambda1*|current + dx| and stay
//! analytic: a dead zone snaps the coefficient to zero, and outside it
//! the step solves a shifted stationarity equation.
//!
//! Radicals are rationalized throughout, e.g. the cubic step is computed
//! as -2*grad / (hess + sqrt(hess^2 + 2*L3*|grad|)), which degrades
//! continuously to the Newton step -grad/hess as L3 -> 0 instead of
//! hitting 0/0.

use crate::error::{Error, Result};

/// Inputs of the l1-regularized quadratic step.
///
/// `curvature` must be positive when a step is requested: zero curvature
/// with a nonzero gradient has no finite minimizer and is reported as an
/// error for the caller to handle.
#[derive(Debug, Clone, Copy)]
pub struct QuadStepInput {
    /// first derivative of the smooth part at the current point
    pub grad: f64,
    /// curvature constant of the quadratic model (L2, or L2 + 2*lambda2
    /// after elastic-net absorption)
    pub curvature: f64,
    /// current coefficient value
    pub current: f64,
    /// l1 penalty weight, >= 0
    pub lambda1: f64,
}

/// Inputs of the l1-regularized cubic step.
#[derive(Debug, Clone, Copy)]
pub struct CubicStepInput {
    /// first derivative of the smooth part at the current point
    pub grad: f64,
    /// second derivative of the smooth part, >= 0
    pub hess: f64,
    /// bound on the third derivative's magnitude, >= 0
    pub third_bound: f64,
    /// current coefficient value
    pub current: f64,
    /// l1 penalty weight, >= 0
    pub lambda1: f64,
}

/// Minimizer of the quadratic model: -grad / l2.
pub fn quad_step(grad: f64, l2: f64) -> Result<f64> {
    if grad == 0.0 {
        return Ok(0.0);
    }
    if l2 <= 0.0 {
        return Err(Error::DegenerateCurvature(format!(
            "quadratic model has curvature {l2} with gradient {grad}"
        )));
    }
    Ok(-grad / l2)
}

/// Minimizer of the cubic model. Continuous in l3: as l3 -> 0 the step
/// tends to the Newton step -grad/hess.
pub fn cubic_step(grad: f64, hess: f64, l3: f64) -> Result<f64> {
    if grad == 0.0 {
        return Ok(0.0);
    }
    if hess < 0.0 || l3 < 0.0 {
        return Err(Error::Validation(format!(
            "cubic model needs hess >= 0 and l3 >= 0, got {hess}, {l3}"
        )));
    }
    if hess == 0.0 && l3 == 0.0 {
        return Err(Error::DegenerateCurvature(format!(
            "cubic model is flat with gradient {grad}"
        )));
    }
    Ok(-2.0 * grad / (hess + (hess * hess + 2.0 * l3 * grad.abs()).sqrt()))
}

/// Minimizer of the l1-regularized quadratic model
/// grad*dx + (1/2)*curvature*dx^2 + lambda1*|current + dx|.
///
/// Three branches: step past the kink from either side, or land exactly
/// on it (the soft-threshold dead zone, where the coefficient becomes
/// zero). Ties in the branch conditions land on the kink.
pub fn quad_step_l1(input: &QuadStepInput) -> Result<f64> {
    let QuadStepInput { grad: a, curvature: b, current: c, lambda1 } = *input;
    debug_assert!(lambda1 >= 0.0);
    if b == 0.0 {
        if a == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::DegenerateCurvature(format!(
            "quadratic model has zero curvature with gradient {a}"
        )));
    }
    let pivot = b * c - a;
    if pivot < -lambda1 {
        Ok(-(a - lambda1) / b)
    } else if pivot > lambda1 {
        Ok(-(a + lambda1) / b)
    } else {
        Ok(-c)
    }
}

/// Minimizer of the l1-regularized cubic model
/// grad*dx + (1/2)*hess*dx^2 + (1/6)*third_bound*|dx|^3
///   + lambda1*|current + dx|.
///
/// Derivation sketch: with psi(dx) = grad + hess*dx
/// + (1/2)*third_bound*dx*|dx| (the strictly increasing derivative of the
/// smooth part), the solution is the root of psi = -lambda1 when
/// psi(-current) < -lambda1, the root of psi = +lambda1 when
/// psi(-current) > +lambda1, and exactly -current otherwise. The four
/// branches below are those roots split by which side of zero they fall
/// on, written with sgn(current) folded in (sgn(0) treated as +1) and
/// every radical rationalized so third_bound = 0 degrades to the
/// quadratic soft-threshold step.
pub fn cubic_step_l1(input: &CubicStepInput) -> Result<f64> {
    let CubicStepInput { grad: a, hess: b, third_bound: c, current: d, lambda1 } = *input;
    debug_assert!(lambda1 >= 0.0);
    if b < 0.0 || c < 0.0 {
        return Err(Error::Validation(format!(
            "cubic model needs hess >= 0 and third_bound >= 0, got {b}, {c}"
        )));
    }
    if b == 0.0 && c == 0.0 {
        if a != 0.0 {
            return Err(Error::DegenerateCurvature(format!(
                "cubic model is flat with gradient {a}"
            )));
        }
        // only the penalty remains: snap onto the kink (or stay put when
        // there is no penalty)
        return Ok(if lambda1 > 0.0 { -d } else { 0.0 });
    }

    let sd = if d < 0.0 { -1.0 } else { 1.0 };
    let shifted_up = sd * a + lambda1;
    if shifted_up <= 0.0 {
        // solution on the far side of zero from the kink: root of
        // psi = -sgn(d)*lambda1 with sign sgn(d)
        return Ok(sd * (-2.0 * shifted_up) / (b + (b * b - 2.0 * c * shifted_up).sqrt()));
    }
    // psi evaluated at the kink -d, reoriented by sgn(d)
    let at_kink = sd * (a - b * d) - 0.5 * c * d * d;
    if at_kink > lambda1 {
        // the branch condition forces shifted_down > 0 here
        let shifted_down = sd * a - lambda1;
        Ok(sd * (-2.0 * shifted_down) / (b + (b * b + 2.0 * c * shifted_down).sqrt()))
    } else if at_kink < -lambda1 {
        Ok(sd * (-2.0 * shifted_up) / (b + (b * b + 2.0 * c * shifted_up).sqrt()))
    } else {
        // dead zone: land exactly on the kink, zeroing the coefficient
        Ok(-d)
    }
}

/// Fold the l2 part of an elastic-net penalty lambda1*|.| + lambda2*(.)^2
/// into the smooth model's coefficients, leaving a pure l1 problem:
/// the gradient gains 2*lambda2*current, the curvature gains 2*lambda2.
/// (For the cubic model the same absorption applies to grad and hess;
/// the l2 term has zero third derivative, so the third-order bound is
/// untouched.)
pub fn elasticnet_absorb(grad: f64, curvature: f64, lambda2: f64, current: f64) -> (f64, f64) {
    (grad + 2.0 * lambda2 * current, curvature + 2.0 * lambda2)
}
