//! The Zorich map `Z(x) = e^{x3} h(x1, x2)` and its inverse branches.
//!
//! `h` sends the square `B = [-pi/2, pi/2]^2` onto the closed upper
//! hemisphere: a point at max-norm `M` lands at polar angle `M`, in the
//! direction of `(x1, x2)`. Outside `B`, `h` is extended by reflecting in
//! the sides of the squares of side `pi` in the domain and in the equator
//! in the range, which makes it doubly periodic with period `2 pi` in each
//! coordinate.
//!
//! `Z` maps the beam `B x R` onto the closed upper half-space minus the
//! origin, and every neighbouring beam onto the lower half-space. Since the
//! map is many-to-one, inverse branches are selected by naming the beam
//! explicitly with a [`BeamIndex`].

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage};
use crate::point::{PlanePoint, Point3, UnitVector3};

/// Largest height accepted by [`zorich`]; `e^700` is still finite in f64.
pub const OVERFLOW_HEIGHT: f64 = 700.0;

/// Slack allowed outside the square in [`h_square`].
pub const SQUARE_TOLERANCE: f64 = 1e-12;

/// Below this polar angle [`h_inverse`] returns the pole `(0, 0)`.
pub const POLE_CUTOFF: f64 = 1e-12;

/// Result of folding a real number into `[-pi/2, pi/2]` by reflections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldResult {
    pub folded: f64,
    pub strip_index: i64,
    pub parity: u8,
}

/// Folds `t` into `[-pi/2, pi/2]`.
///
/// The strip index is `q = floor((t + pi/2) / pi)`, so the strips are the
/// half-open intervals `[-pi/2 + q pi, pi/2 + q pi)`, and the folded value
/// is `(-1)^q (t - q pi)`.
#[inline]
pub fn fold(t: f64) -> FoldResult {
    let q = ((t + FRAC_PI_2) / PI).floor();
    let shifted = t - q * PI;
    let parity = (q as i64).rem_euclid(2) as u8;
    let folded = if parity == 0 { shifted } else { -shifted };
    FoldResult {
        folded: folded.clamp(-FRAC_PI_2, FRAC_PI_2),
        strip_index: q as i64,
        parity,
    }
}

/// Inverse of [`fold`] on strip `q`: `q pi + (-1)^q t`.
#[inline]
pub fn unfold(folded: f64, q: i64) -> f64 {
    let sign = if q.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    q as f64 * PI + sign * folded
}

/// `h` on the square, without the domain check.
#[inline]
pub(crate) fn h_core(x1: f64, x2: f64) -> (f64, f64, f64) {
    let r = x1.hypot(x2);
    if r == 0.0 {
        return (0.0, 0.0, 1.0);
    }
    let m = x1.abs().max(x2.abs());
    let (s, c) = m.sin_cos();
    let k = s / r;
    (x1 * k, x2 * k, c)
}

/// The bi-Lipschitz map from the square `B` onto the upper hemisphere.
pub fn h_square(p: PlanePoint) -> Result<UnitVector3> {
    if !p.is_finite() || p.max_norm() > FRAC_PI_2 + SQUARE_TOLERANCE {
        return Err(Error::Domain(format!(
            "({}, {}) lies outside the square max(|x1|,|x2|) <= pi/2",
            p.x1, p.x2
        )));
    }
    let (a, b, c) = h_core(p.x1, p.x2);
    Ok(UnitVector3::new_unchecked(a, b, c))
}

#[inline]
pub(crate) fn h_extended_core(x1: f64, x2: f64) -> (f64, f64, f64) {
    let fa = fold(x1);
    let fb = fold(x2);
    let (v1, v2, v3) = h_core(fa.folded, fb.folded);
    if (fa.parity + fb.parity).is_multiple_of(2) {
        (v1, v2, v3)
    } else {
        (v1, v2, -v3)
    }
}

/// The doubly periodic extension of `h` to the whole plane.
pub fn h_extended(p: PlanePoint) -> UnitVector3 {
    let (a, b, c) = h_extended_core(p.x1, p.x2);
    UnitVector3::new_unchecked(a, b, c)
}

fn check_height(x: Point3, stage: Stage) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("non-finite input {x}")));
    }
    if x.x3 > OVERFLOW_HEIGHT {
        return Err(Error::Overflow { stage, height: x.x3, limit: OVERFLOW_HEIGHT });
    }
    Ok(())
}

/// Evaluates `Z` without checking for overflow; callers guarantee `x3 <= 700`.
#[inline]
pub(crate) fn zorich_unchecked(x: Point3) -> Point3 {
    let (a, b, c) = h_extended_core(x.x1, x.x2);
    let r = x.x3.exp();
    Point3::new(r * a, r * b, r * c)
}

/// The Zorich map `Z(x) = e^{x3} h(x1, x2)`.
pub fn zorich(x: Point3) -> Result<Point3> {
    check_height(x, Stage::First)?;
    Ok(zorich_unchecked(x))
}

/// The second iterate `f = Z o Z`.
pub fn zorich_second(x: Point3) -> Result<Point3> {
    check_height(x, Stage::First)?;
    let z = zorich_unchecked(x);
    check_height(z, Stage::Second)?;
    Ok(zorich_unchecked(z))
}

/// Inverse of [`h_square`] on the closed upper hemisphere.
pub fn h_inverse(u: UnitVector3) -> Result<PlanePoint> {
    let n2 = u.u1 * u.u1 + u.u2 * u.u2 + u.u3 * u.u3;
    if !n2.is_finite() || (n2 - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("|u|^2 = {n2} is not 1")));
    }
    if u.u3 < -1e-12 {
        return Err(Error::Domain(format!("u3 = {} lies below the equator", u.u3)));
    }
    // atan2 agrees with arccos(u3) on the sphere and keeps full precision
    // near the pole.
    let m = u.u1.hypot(u.u2).atan2(u.u3.max(0.0)).min(FRAC_PI_2);
    if m < POLE_CUTOFF {
        return Ok(PlanePoint::new(0.0, 0.0));
    }
    let inf = u.u1.abs().max(u.u2.abs());
    Ok(PlanePoint::new(m * u.u1 / inf, m * u.u2 / inf))
}

/// Index of the beam `[-pi/2 + i pi, pi/2 + i pi] x [-pi/2 + j pi, pi/2 + j pi] x R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BeamIndex {
    pub i: i64,
    pub j: i64,
}

impl BeamIndex {
    pub const fn new(i: i64, j: i64) -> Self {
        Self { i, j }
    }

    /// 0 if `Z` maps the beam interior to the upper half-space, 1 otherwise.
    pub fn parity(self) -> u8 {
        (self.i + self.j).rem_euclid(2) as u8
    }

    /// The beam whose half-open cell contains `x`.
    pub fn containing(x: Point3) -> Self {
        Self { i: fold(x.x1).strip_index, j: fold(x.x2).strip_index }
    }

    /// Closed-beam membership with slack `tol`.
    pub fn contains(self, x: Point3, tol: f64) -> bool {
        let c1 = self.i as f64 * PI;
        let c2 = self.j as f64 * PI;
        (x.x1 - c1).abs() <= FRAC_PI_2 + tol && (x.x2 - c2).abs() <= FRAC_PI_2 + tol
    }
}

/// The branch of `Z^{-1}` with values in the given beam.
pub fn zorich_inverse(y: Point3, beam: BeamIndex) -> Result<Point3> {
    if !y.is_finite() {
        return Err(Error::Domain(format!("non-finite input {y}")));
    }
    let r = y.norm();
    if r < 1e-300 {
        return Err(Error::ZeroInput(r));
    }
    let mut u = UnitVector3::new_unchecked(y.x1 / r, y.x2 / r, y.x3 / r);
    if beam.parity() == 1 {
        u.u3 = -u.u3;
    }
    if u.u3 < -1e-12 {
        return Err(Error::ParityMismatch { y3: y.x3, i: beam.i, j: beam.j });
    }
    let ab = h_inverse(u)?;
    Ok(Point3::new(unfold(ab.x1, beam.i), unfold(ab.x2, beam.j), r.ln()))
}

/// Distance from `(x1, x2)` to the lattice of branch lines `(pi/2 + j pi, pi/2 + k pi)`.
pub fn branch_distance(x: Point3) -> f64 {
    let d = |t: f64| {
        let s = t - FRAC_PI_2;
        (s - PI * (s / PI).round()).abs()
    };
    d(x.x1).hypot(d(x.x2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{E, FRAC_PI_4, SQRT_2};

    fn close(a: Point3, b: Point3, tol: f64) {
        assert!((a - b).max_abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn h_square_examples() {
        let v = h_square(PlanePoint::new(0.0, 0.0)).unwrap();
        assert_eq!((v.u1, v.u2, v.u3), (0.0, 0.0, 1.0));
        let v = h_square(PlanePoint::new(FRAC_PI_2, 0.0)).unwrap();
        close(v.to_point(), Point3::new(1.0, 0.0, 0.0), 1e-15);
        let v = h_square(PlanePoint::new(FRAC_PI_4, FRAC_PI_4)).unwrap();
        close(v.to_point(), Point3::new(0.5, 0.5, SQRT_2 / 2.0), 1e-15);
    }

    #[test]
    fn h_square_rejects_outside() {
        assert!(h_square(PlanePoint::new(FRAC_PI_2 + 1e-9, 0.0)).is_err());
        assert!(h_square(PlanePoint::new(0.0, f64::NAN)).is_err());
        assert!(h_square(PlanePoint::new(FRAC_PI_2 + 1e-13, 0.0)).is_ok());
    }

    #[test]
    fn fold_examples() {
        let f = fold(FRAC_PI_4);
        assert_eq!((f.strip_index, f.parity), (0, 0));
        assert_abs_diff_eq!(f.folded, FRAC_PI_4, epsilon = 1e-16);
        let f = fold(PI);
        assert_eq!((f.strip_index, f.parity), (1, 1));
        assert_abs_diff_eq!(f.folded, 0.0, epsilon = 1e-15);
        let f = fold(-3.0 * FRAC_PI_4);
        assert_eq!((f.strip_index, f.parity), (-1, 1));
        assert_abs_diff_eq!(f.folded, -FRAC_PI_4, epsilon = 1e-15);
    }

    #[test]
    fn fold_unfold_roundtrip() {
        for k in -400..400 {
            let t = k as f64 * 0.0731 + 0.013;
            let f = fold(t);
            assert!(f.folded.abs() <= FRAC_PI_2);
            assert_abs_diff_eq!(unfold(f.folded, f.strip_index), t, epsilon = 1e-13);
        }
    }

    #[test]
    fn h_extended_examples() {
        close(h_extended(PlanePoint::new(PI, 0.0)).to_point(), Point3::new(0.0, 0.0, -1.0), 1e-15);
        let p = PlanePoint::new(0.3, -1.1);
        assert_eq!(h_extended(p), h_square(p).unwrap());
        let a = h_extended(PlanePoint::new(FRAC_PI_2 + 0.1, 0.0));
        let b = h_extended(PlanePoint::new(FRAC_PI_2 - 0.1, 0.0));
        assert_abs_diff_eq!(a.u1, b.u1, epsilon = 1e-15);
        assert_abs_diff_eq!(a.u2, b.u2, epsilon = 1e-15);
        assert_abs_diff_eq!(a.u3, -b.u3, epsilon = 1e-15);
    }

    #[test]
    fn zorich_examples() {
        close(zorich(Point3::ORIGIN).unwrap(), Point3::new(0.0, 0.0, 1.0), 0.0);
        close(
            zorich(Point3::new(FRAC_PI_4, FRAC_PI_4, 2f64.ln())).unwrap(),
            Point3::new(1.0, 1.0, SQRT_2),
            1e-14,
        );
        let t = 0.7;
        let z = zorich(Point3::new(PI, 0.0, t)).unwrap();
        close(z, Point3::new(0.0, 0.0, -t.exp()), 1e-14);
    }

    #[test]
    fn zorich_overflow_guard() {
        assert!(matches!(
            zorich(Point3::new(0.0, 0.0, 701.0)),
            Err(Error::Overflow { stage: Stage::First, .. })
        ));
        assert!(zorich(Point3::new(0.0, 0.0, 699.0)).is_ok());
        // Z(0,0,7) = (0,0,e^7) and e^7 > 700.
        assert!(matches!(
            zorich_second(Point3::new(0.0, 0.0, 7.0)),
            Err(Error::Overflow { stage: Stage::Second, .. })
        ));
    }

    #[test]
    fn zorich_second_examples() {
        close(zorich_second(Point3::ORIGIN).unwrap(), Point3::new(0.0, 0.0, E), 1e-15);
        let h10 = h_extended(PlanePoint::new(1.0, 0.0)).to_point();
        close(zorich_second(Point3::new(FRAC_PI_2, 0.0, 0.0)).unwrap(), h10, 1e-15);
    }

    #[test]
    fn h_inverse_examples() {
        let p = h_inverse(UnitVector3::new(0.0, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!((p.x1, p.x2), (0.0, 0.0));
        let p = h_inverse(UnitVector3::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(p.x1, FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(p.x2, 0.0, epsilon = 1e-15);
        let p = h_inverse(UnitVector3::new(0.5, 0.5, SQRT_2 / 2.0).unwrap()).unwrap();
        assert_abs_diff_eq!(p.x1, FRAC_PI_4, epsilon = 1e-15);
        assert_abs_diff_eq!(p.x2, FRAC_PI_4, epsilon = 1e-15);
        assert!(h_inverse(UnitVector3::new(0.0, 0.6, -0.8).unwrap()).is_err());
    }

    #[test]
    fn zorich_inverse_examples() {
        let x = zorich_inverse(Point3::new(0.0, 0.0, E), BeamIndex::new(0, 0)).unwrap();
        close(x, Point3::new(0.0, 0.0, 1.0), 1e-15);
        let x = zorich_inverse(Point3::new(0.0, 0.0, -1.0), BeamIndex::new(1, 0)).unwrap();
        close(x, Point3::new(PI, 0.0, 0.0), 1e-15);
    }

    #[test]
    fn zorich_inverse_errors() {
        assert!(matches!(
            zorich_inverse(Point3::ORIGIN, BeamIndex::new(0, 0)),
            Err(Error::ZeroInput(_))
        ));
        assert!(matches!(
            zorich_inverse(Point3::new(0.0, 0.0, -1.0), BeamIndex::new(0, 0)),
            Err(Error::ParityMismatch { .. })
        ));
        assert!(matches!(
            zorich_inverse(Point3::new(0.0, 0.0, 1.0), BeamIndex::new(0, 1)),
            Err(Error::ParityMismatch { .. })
        ));
        // Points on the equator are reachable from both parities.
        assert!(zorich_inverse(Point3::new(1.0, 0.0, 0.0), BeamIndex::new(0, 0)).is_ok());
        assert!(zorich_inverse(Point3::new(1.0, 0.0, 0.0), BeamIndex::new(1, 0)).is_ok());
    }

    #[test]
    fn branch_distance_examples() {
        assert_abs_diff_eq!(branch_distance(Point3::new(FRAC_PI_2, FRAC_PI_2, 5.0)), 0.0);
        assert_abs_diff_eq!(branch_distance(Point3::ORIGIN), PI / SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(
            branch_distance(Point3::new(FRAC_PI_2, 0.0, 0.0)),
            FRAC_PI_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn beam_parity_and_membership() {
        assert_eq!(BeamIndex::new(0, 0).parity(), 0);
        assert_eq!(BeamIndex::new(1, 0).parity(), 1);
        assert_eq!(BeamIndex::new(-1, 0).parity(), 1);
        assert_eq!(BeamIndex::containing(Point3::new(PI, 0.2, 3.0)), BeamIndex::new(1, 0));
        assert!(BeamIndex::new(1, 0).contains(Point3::new(FRAC_PI_2, 0.0, 0.0), 0.0));
    }

    #[test]
    fn continuity_across_square_edges() {
        for eps in [1e-6, 1e-8] {
            for x2 in [-1.2, 0.0, 0.4, 1.5] {
                let a = h_extended(PlanePoint::new(FRAC_PI_2 + eps, x2)).to_point();
                let b = h_extended(PlanePoint::new(FRAC_PI_2 - eps, x2)).to_point();
                assert!((a - b).norm() < 1e-5);
            }
        }
    }
}
