//! Closed-form constants of the density argument.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Added to the separation constant so the defining inequalities are strict.
pub const SEPARATION_MARGIN: f64 = 1e-9;

fn check_x0(x0_abs: f64) -> Result<f64> {
    if !(x0_abs > 0.0) || !x0_abs.is_finite() || x0_abs == 1.0 {
        return Err(Error::Domain(format!("|x0| must be positive and != 1, got {x0_abs}")));
    }
    Ok(x0_abs.ln().abs())
}

/// Smallest height gap `a` (plus margin) with `e^{2a} > 3` and
/// `e^{t2}/sqrt 2 - e^{t1} > 2 pi` whenever `t1 > ln|ln x0|` and `t2 > t1 + a`.
pub fn separation_constant_a(x0_abs: f64) -> Result<f64> {
    let l = check_x0(x0_abs)?;
    let gap = (SQRT_2 * (2.0 * PI / l + 1.0)).ln();
    Ok(gap.max(3f64.ln() / 2.0) + SEPARATION_MARGIN)
}

/// Upper bound on `e^{t2 - t1}` when the image of a face band is at most `4 pi` wide.
pub fn width_window_bound(x0_abs: f64) -> Result<f64> {
    let l = check_x0(x0_abs)?;
    Ok(SQRT_2 * (1.0 + 4.0 * PI / l))
}

/// `g(t) = (t - 1) / (t/2 - 1)`, decreasing on `(2, inf)`.
pub fn trapezoid_ratio_g(t: f64) -> f64 {
    (t - 1.0) / (t / 2.0 - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogSquareQuantities {
    /// Area of the image of a face band: a quarter annulus sector.
    pub area_image: f64,
    /// Area of the inscribed trapezoid.
    pub area_trapezoid: f64,
    pub ratio: f64,
}

pub fn logsquare_quantities(t1: f64, t2: f64) -> Result<LogSquareQuantities> {
    if !(t1 < t2) || !t1.is_finite() || !t2.is_finite() {
        return Err(Error::Domain(format!("need t1 < t2, got t1 = {t1}, t2 = {t2}")));
    }
    let em1 = (2.0 * (t2 - t1)).exp_m1();
    // e^{2 delta} <= 2
    if em1 <= 1.0 {
        return Err(Error::Degenerate(format!(
            "trapezoid is empty for height gap {} (e^(2 gap) <= 2)",
            t2 - t1
        )));
    }
    let base = (2.0 * t1).exp();
    let area_image = PI / 4.0 * base * em1;
    let area_trapezoid = base * (em1 - 1.0) / 2.0;
    let ratio = PI / 4.0 * em1 / ((em1 - 1.0) / 2.0);
    Ok(LogSquareQuantities { area_image, area_trapezoid, ratio })
}

fn check_c_inputs(r0: f64, x0_abs: f64, lambda: f64) -> Result<f64> {
    let l = check_x0(x0_abs)?;
    if !(r0 > 0.0 && r0 < x0_abs) {
        return Err(Error::Domain(format!("need 0 < r0 < |x0|, got r0 = {r0}, |x0| = {x0_abs}")));
    }
    if !(lambda >= 1.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("lambda must be >= 1, got {lambda}")));
    }
    Ok(l)
}

/// The lower density constant `C`.
pub fn coverage_constant_c(r0: f64, x0_abs: f64, lambda: f64) -> Result<f64> {
    let l = check_c_inputs(r0, x0_abs, lambda)?;
    Ok(r0 * r0
        / (2f64.powi(11) * lambda.powi(4) * PI * (2.0 * x0_abs).exp() * (1.0 + 4.0 * PI / l)))
}

/// The intermediate bound `r0^2 / (2^9 lambda^2 e^{2|x0|})` that `C` refines.
pub fn tsmall_bound(r0: f64, x0_abs: f64, lambda: f64) -> Result<f64> {
    check_c_inputs(r0, x0_abs, lambda)?;
    Ok(r0 * r0 / (2f64.powi(9) * lambda * lambda * (2.0 * x0_abs).exp()))
}

/// All constants of the density estimate for one set of input data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityConstants {
    pub x0_abs: f64,
    pub r0: f64,
    pub lambda: f64,
    pub a: f64,
    pub c: f64,
    pub eps: f64,
}

impl DensityConstants {
    pub fn new(x0_abs: f64, r0: f64, lambda: f64) -> Result<Self> {
        let a = separation_constant_a(x0_abs)?;
        let c = coverage_constant_c(r0, x0_abs, lambda)?;
        Ok(Self { x0_abs, r0, lambda, a, c, eps: c / 16.0 })
    }
}
