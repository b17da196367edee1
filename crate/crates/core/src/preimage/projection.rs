//! Central projection from a base point onto the planes `x1 = pi/2 + M pi`
//! and onto cone faces, and the strips `K_l` that connect the two.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::density::{y_point_valid, PatchSpec, YFace, YPoint};
use crate::error::{Error, Result};
use crate::point::Point3;
use crate::zorich::{BeamIndex, OVERFLOW_HEIGHT};

use super::constants::separation_constant_a;
use super::{ConeSurface, FaceId};

/// Coarse samples used to bracket the first root along a ray.
pub const RAY_SCAN_SAMPLES: usize = 1024;

const BISECTION_LIMIT: usize = 200;
const RESIDUAL_TOLERANCE: f64 = 1e-10;
const PLANE_TOLERANCE: f64 = 1e-9;

/// The `x1` coordinate of the plane `Omega_M`.
#[inline]
pub fn plane_m_x1(m: i64) -> f64 {
    FRAC_PI_2 + m as f64 * PI
}

/// Central projection from `p` of the face `x1 = 1` of `Y` onto `Omega_M`.
pub fn project_to_plane_m(p: Point3, u: YPoint, m: i64) -> Result<Point3> {
    if u.face != YFace::PosX1 || !y_point_valid(&u) {
        return Err(Error::Domain(format!("{u:?} is not a valid point of the face x1 = 1")));
    }
    let c = plane_m_x1(m) - p.x1;
    if !(c > 0.0) {
        return Err(Error::Degenerate(format!(
            "plane x1 = {} does not lie in front of the base point",
            plane_m_x1(m)
        )));
    }
    Ok(Point3::new(plane_m_x1(m), p.x2 + c * u.u2, p.x3 + c * u.u3))
}

/// The strip `K_l` of `Omega_M`, trimmed by `eta` on both sides and cut below at height `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripSpec {
    pub m: i64,
    pub l: i64,
    pub eta: f64,
    pub s: f64,
}

impl StripSpec {
    pub fn new(m: i64, l: i64, eta: f64, s: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < PI / 4.0) {
            return Err(Error::Domain(format!("eta must lie in (0, pi/4), got {eta}")));
        }
        if !s.is_finite() {
            return Err(Error::Domain(format!("strip height must be finite, got {s}")));
        }
        Ok(Self { m, l, eta, s })
    }

    /// Open `x2` interval of the strip.
    pub fn x2_range(&self) -> (f64, f64) {
        let l = self.l as f64;
        (FRAC_PI_2 + (l - 1.0) * PI + self.eta, FRAC_PI_2 + l * PI - self.eta)
    }
}

pub fn strip_contains(spec: &StripSpec, x: Point3) -> bool {
    let (lo, hi) = spec.x2_range();
    (x.x1 - plane_m_x1(spec.m)).abs() <= PLANE_TOLERANCE
        && x.x2 > lo
        && x.x2 < hi
        && x.x3 > spec.s
}

/// A root of the cone equation along a ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayHit {
    pub point: Point3,
    /// Ray parameter: `point = p + param (alpha - p)`.
    pub param: f64,
    /// `cos M - |level| e^{-x3}` in local coordinates.
    pub residual: f64,
}

/// A ray in the face coordinates of one cone face, clipped to the face wedge.
struct FaceRay {
    p: Point3,
    d: Point3,
    n0: f64,
    dn: f64,
    x30: f64,
    d3: f64,
    level: f64,
    lo: f64,
    hi: f64,
}

impl FaceRay {
    fn new(p: Point3, alpha: Point3, cone: &ConeSurface, face: FaceId) -> Result<Self> {
        let d = alpha - p;
        if !(d.norm() > 0.0) || !d.is_finite() || !p.is_finite() {
            return Err(Error::Degenerate(format!("no ray from {p} through {alpha}")));
        }
        let y0 = cone.to_local(p);
        let dy = cone.local_direction(d);
        let (n0, t0) = face.face_coords(y0.x1, y0.x2);
        let (dn, dt) = face.face_coords(dy.x1, dy.x2);

        let mut lo = 0.0f64;
        let mut hi = f64::INFINITY;
        let mut clip = |a: f64, b: f64, strict: bool| -> bool {
            // a + b s >= 0
            if b == 0.0 {
                return if strict { a > 0.0 } else { a >= 0.0 };
            }
            let root = -a / b;
            if b > 0.0 {
                lo = lo.max(root);
            } else {
                hi = hi.min(root);
            }
            true
        };
        let inside = clip(n0 - t0, dn - dt, false)
            && clip(n0 + t0, dn + dt, false)
            && clip(FRAC_PI_2 - n0, -dn, true);
        if dy.x3 > 0.0 {
            hi = hi.min((OVERFLOW_HEIGHT - y0.x3) / dy.x3);
        } else if dy.x3 < 0.0 {
            hi = hi.min((-OVERFLOW_HEIGHT - y0.x3) / dy.x3);
        }
        if !inside || !(lo < hi) || !hi.is_finite() {
            return Err(Error::NoIntersection { lo, hi: if hi.is_finite() { hi } else { lo } });
        }
        Ok(Self { p, d, n0, dn, x30: y0.x3, d3: dy.x3, level: cone.level.abs(), lo, hi })
    }

    fn phi(&self, s: f64) -> f64 {
        let nu = (self.n0 + s * self.dn).clamp(0.0, FRAC_PI_2);
        nu.cos() - self.level * (-(self.x30 + s * self.d3)).exp()
    }

    fn dphi(&self, s: f64) -> f64 {
        let nu = (self.n0 + s * self.dn).clamp(0.0, FRAC_PI_2);
        -nu.sin() * self.dn + self.level * self.d3 * (-(self.x30 + s * self.d3)).exp()
    }
}

/// First point where the ray from `p` through `alpha` meets `face` of `cone`.
pub fn ray_cone_intersect(p: Point3, alpha: Point3, cone: &ConeSurface, face: FaceId) -> Result<Point3> {
    ray_cone_hit(p, alpha, cone, face).map(|h| h.point)
}

/// As [`ray_cone_intersect`], also returning the parameter and residual.
///
/// In local coordinates the face is `{nu >= |tau|, nu < pi/2}`, a convex
/// wedge, so the ray meets it in one parameter interval. On that interval
/// the face equation is `e^{x3} cos nu = |level|`; it is solved in the
/// scaled form `cos nu - |level| e^{-x3} = 0`, which is free of overflow
/// and has the same sign.
pub fn ray_cone_hit(p: Point3, alpha: Point3, cone: &ConeSurface, face: FaceId) -> Result<RayHit> {
    let ray = FaceRay::new(p, alpha, cone, face)?;
    let (lo, hi, d, level) = (ray.lo, ray.hi, ray.d, ray.level);
    let phi = |s: f64| ray.phi(s);

    let step = (hi - lo) / RAY_SCAN_SAMPLES as f64;
    let mut a = lo;
    let mut fa = phi(a);
    let mut bracket = None;
    if fa == 0.0 && a > 0.0 {
        bracket = Some((a, a));
    } else {
        for k in 1..=RAY_SCAN_SAMPLES {
            let b = if k == RAY_SCAN_SAMPLES { hi } else { lo + step * k as f64 };
            let fb = phi(b);
            if fb == 0.0 && b > 0.0 {
                bracket = Some((b, b));
                break;
            }
            if fa != 0.0 && (fa < 0.0) != (fb < 0.0) {
                bracket = Some((a, b));
                break;
            }
            a = b;
            fa = fb;
        }
    }
    let tol = RESIDUAL_TOLERANCE * level.max(1.0);
    if bracket.is_none() {
        // High on the cone the face lies within rounding of the wedge edge
        // nu = pi/2, where cos nu cannot resolve the root; the edge itself
        // then solves the equation to tolerance.
        let edge = [lo, hi]
            .into_iter()
            .filter(|&s| s > 0.0)
            .map(|s| (s, phi(s)))
            .filter(|&(_, r)| r.abs() <= tol)
            .min_by(|x, y| x.1.abs().total_cmp(&y.1.abs()));
        if let Some((s, residual)) = edge {
            return Ok(RayHit { point: p + d * s, param: s, residual });
        }
    }
    let (mut a, mut b) = bracket.ok_or(Error::NoIntersection { lo, hi })?;
    let mut fa = phi(a);
    for _ in 0..BISECTION_LIMIT {
        let mid = 0.5 * (a + b);
        if !(mid > a && mid < b) {
            break;
        }
        let fm = phi(mid);
        if fm == 0.0 {
            a = mid;
            b = mid;
            break;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let s = if phi(a).abs() <= phi(b).abs() { a } else { b };
    let residual = phi(s);
    if residual.abs() > tol {
        return Err(Error::Degenerate(format!(
            "root at parameter {s} has residual {residual:e}"
        )));
    }
    Ok(RayHit { point: p + d * s, param: s, residual })
}

const NEWTON_LIMIT: usize = 60;

/// Root of the face equation along the ray by Newton's method from `guess`,
/// falling back to [`ray_cone_hit`] when the iteration leaves the face wedge
/// or stalls.
///
/// Unlike [`ray_cone_hit`] it does not scan for the first root, so it is
/// meant for rays known to cross the face once, such as the rays of a
/// [`FaceConfig`].
pub fn ray_cone_newton(
    p: Point3,
    alpha: Point3,
    cone: &ConeSurface,
    face: FaceId,
    guess: f64,
) -> Result<RayHit> {
    let ray = FaceRay::new(p, alpha, cone, face)?;
    let tol = RESIDUAL_TOLERANCE * ray.level.max(1.0);
    let mut s = guess.clamp(ray.lo, ray.hi);
    for _ in 0..NEWTON_LIMIT {
        let f = ray.phi(s);
        let df = ray.dphi(s);
        if !(df != 0.0) || !df.is_finite() {
            break;
        }
        let next = s - f / df;
        if !(next >= ray.lo && next <= ray.hi) {
            break;
        }
        if (next - s).abs() <= 4.0 * f64::EPSILON * s.abs().max(1.0) {
            let residual = ray.phi(next);
            if residual.abs() <= tol && next > 0.0 {
                return Ok(RayHit { point: ray.p + ray.d * next, param: next, residual });
            }
            break;
        }
        s = next;
    }
    ray_cone_hit(p, alpha, cone, face)
}

/// The projection set-up around one base point: plane `Omega_M`, the strips
/// `K_l` on it and the cone faces `F_l` behind them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceConfig {
    pub p: Point3,
    /// The target level `ln|x0|`.
    pub level: f64,
    pub eta: f64,
    /// Lower strip height; every strip point is within `eta/3` of its beam boundary.
    pub s: f64,
    pub m: i64,
}

impl FaceConfig {
    /// Lowest strip height `s0 = ln(|level| / sin(eta/3))`.
    pub fn min_height(level: f64, eta: f64) -> f64 {
        (level.abs() / (eta / 3.0).sin()).ln()
    }

    pub fn new(p: Point3, x0_abs: f64, eta: f64, m: i64) -> Result<Self> {
        if !(x0_abs > 0.0) || x0_abs == 1.0 || !x0_abs.is_finite() {
            return Err(Error::Domain(format!("|x0| must be positive and != 1, got {x0_abs}")));
        }
        if !(eta > 0.0 && eta < PI / 4.0) {
            return Err(Error::Domain(format!("eta must lie in (0, pi/4), got {eta}")));
        }
        let level = x0_abs.ln();
        let cfg = Self { p, level, eta, s: Self::min_height(level, eta), m };
        if !(cfg.c() > 0.0) {
            return Err(Error::Degenerate(format!(
                "plane x1 = {} does not lie in front of the base point",
                plane_m_x1(m)
            )));
        }
        Ok(cfg)
    }

    /// Chooses `M` so that the image of `patch` is at least `max(4 pi, a)`
    /// wide and lies above the strip height.
    pub fn for_patch(p: Point3, x0_abs: f64, eta: f64, patch: &PatchSpec) -> Result<Self> {
        if patch.center.face != YFace::PosX1 {
            return Err(Error::Domain("face configurations use the face x1 = 1".into()));
        }
        let a = separation_constant_a(x0_abs)?;
        let level = x0_abs.ln();
        let s0 = Self::min_height(level, eta);
        let width = (4.0 * PI).max(a);
        let mut c = width / (2.0 * patch.delta);
        let floor = patch.center.u3 - patch.delta;
        if floor > 0.0 {
            c = c.max((s0 - p.x3) / floor);
        } else if p.x3 <= s0 {
            return Err(Error::Degenerate("patch reaches down to u3 = 0".into()));
        }
        let m = ((c + p.x1 - FRAC_PI_2) / PI).ceil() as i64;
        let cfg = Self::new(p, x0_abs, eta, m.max(0))?;
        let top = p.x3 + cfg.c() * (patch.center.u3 + patch.delta);
        if !(top < OVERFLOW_HEIGHT) {
            return Err(Error::Degenerate(format!(
                "the projected patch reaches height {top}, above {OVERFLOW_HEIGHT}"
            )));
        }
        Ok(cfg)
    }

    /// Distance `c` from the base point to the plane along `x1`.
    pub fn c(&self) -> f64 {
        plane_m_x1(self.m) - self.p.x1
    }

    pub fn strip(&self, l: i64) -> StripSpec {
        StripSpec { m: self.m, l, eta: self.eta, s: self.s }
    }

    /// The cone and face behind the strip `K_l`.
    pub fn face(&self, l: i64) -> Result<(ConeSurface, FaceId)> {
        let want = if self.level > 0.0 { 0 } else { 1 };
        let i = if (self.m + l).rem_euclid(2) == want { self.m } else { self.m + 1 };
        let cone = ConeSurface::in_beam(self.level, BeamIndex::new(i, l))?;
        let y = cone.to_local(Point3::new(plane_m_x1(self.m), l as f64 * PI, 0.0));
        let face = if y.x1 > 0.0 { FaceId::PosX1 } else { FaceId::NegX1 };
        Ok((cone, face))
    }

    /// The box `J_l` of face coordinates `(u2, u3)` whose projection lies in `K_l`.
    /// Returns `(u2_lo, u2_hi, u3_lo)`; the box is open and unbounded above.
    pub fn j_box(&self, l: i64) -> (f64, f64, f64) {
        let (lo, hi) = self.strip(l).x2_range();
        let c = self.c();
        ((lo - self.p.x2) / c, (hi - self.p.x2) / c, (self.s - self.p.x3) / c)
    }

    /// Strip indices whose `J_l` meets `patch` in a box of positive area,
    /// together with that box `(u2_lo, u2_hi, u3_lo, u3_hi)`.
    pub fn strips_in_patch(&self, patch: &PatchSpec) -> Vec<(i64, [f64; 4])> {
        let (cu2, cu3, dl) = (patch.center.u2, patch.center.u3, patch.delta);
        let c = self.c();
        let x2_lo = self.p.x2 + c * (cu2 - dl);
        let x2_hi = self.p.x2 + c * (cu2 + dl);
        let l_lo = ((x2_lo - FRAC_PI_2) / PI).floor() as i64;
        let l_hi = ((x2_hi - FRAC_PI_2) / PI).ceil() as i64 + 1;
        let mut out = Vec::new();
        for l in l_lo..=l_hi {
            let (a, b, floor) = self.j_box(l);
            let u2_lo = a.max(cu2 - dl);
            let u2_hi = b.min(cu2 + dl);
            let u3_lo = floor.max(cu3 - dl);
            let u3_hi = cu3 + dl;
            if u2_lo < u2_hi && u3_lo < u3_hi {
                out.push((l, [u2_lo, u2_hi, u3_lo, u3_hi]));
            }
        }
        out
    }

    /// Projection `Pi_{F_l}` of a face point `(1, u2, u3)` onto `F_l`.
    pub fn project_to_face(&self, l: i64, u2: f64, u3: f64) -> Result<Point3> {
        let (cone, face) = self.face(l)?;
        let alpha = self.p + Point3::new(1.0, u2, u3);
        ray_cone_intersect(self.p, alpha, &cone, face)
    }

    /// [`project_to_face`](Self::project_to_face) by Newton's method started
    /// at the plane `Omega_M`, for dense evaluation.
    pub fn face_map(&self, l: i64) -> Result<impl Fn([f64; 2]) -> Result<Point3> + Sync + '_> {
        let (cone, face) = self.face(l)?;
        let guess = self.c();
        Ok(move |u: [f64; 2]| {
            let alpha = self.p + Point3::new(1.0, u[0], u[1]);
            ray_cone_newton(self.p, alpha, &cone, face, guess).map(|h| h.point)
        })
    }
}
