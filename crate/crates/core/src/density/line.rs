//! Lines through a base point, parametrized by where they cross the square tube `Y`.
//!
//! `Y` is the tube `max(|x1|, |x2|) = 1, x3 > 0` around the base point `P`.
//! Each of its four faces is given coordinates `(u, u3)` with `|u| < 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum YFace {
    /// `x1 = 1`, the face used by the projection onto the planes `x1 = const`.
    PosX1,
    NegX1,
    PosX2,
    NegX2,
}

impl YFace {
    pub const ALL: [YFace; 4] = [YFace::PosX1, YFace::NegX1, YFace::PosX2, YFace::NegX2];
}

/// A point of `Y`, relative to the base point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YPoint {
    pub face: YFace,
    /// Coordinate along the face, in `(-1, 1)`.
    pub u2: f64,
    /// Height above the base point.
    pub u3: f64,
}

impl YPoint {
    /// A validated point; see [`y_point_valid`].
    pub fn new(face: YFace, u2: f64, u3: f64) -> Result<Self> {
        let y = Self { face, u2, u3 };
        if !y_point_valid(&y) {
            return Err(Error::Domain(format!(
                "({u2}, {u3}) on face {face:?} is outside Y or on an excluded plane"
            )));
        }
        Ok(y)
    }

    /// The offset `alpha - P`.
    pub fn offset(&self) -> Point3 {
        match self.face {
            YFace::PosX1 => Point3::new(1.0, self.u2, self.u3),
            YFace::NegX1 => Point3::new(-1.0, self.u2, self.u3),
            YFace::PosX2 => Point3::new(self.u2, 1.0, self.u3),
            YFace::NegX2 => Point3::new(self.u2, -1.0, self.u3),
        }
    }
}

/// True iff `alpha` lies on `Y` off the excluded planes `x1 x2 (x1^2 - x2^2) = 0`.
pub fn y_point_valid(alpha: &YPoint) -> bool {
    alpha.u3 > 0.0
        && alpha.u3.is_finite()
        && alpha.u2.abs() < 1.0
        && alpha.u2 != 0.0
}

/// The line `x(s) = p + s d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    pub p: Point3,
    pub d: Point3,
}

impl LineSpec {
    /// The line through `p` and the point `alpha` of `Y` around it.
    pub fn through(p: Point3, alpha: YPoint) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::Domain(format!("base point {p} is not finite")));
        }
        if !y_point_valid(&alpha) {
            return Err(Error::Domain(format!("{alpha:?} is not a valid point of Y")));
        }
        Ok(Self { p, d: alpha.offset() })
    }

    /// A line with an arbitrary direction, including the excluded families.
    pub fn from_direction(p: Point3, d: Point3) -> Result<Self> {
        if !p.is_finite() || !d.is_finite() || d.norm() == 0.0 {
            return Err(Error::Domain(format!("cannot build a line from {p} along {d}")));
        }
        Ok(Self { p, d })
    }

    #[inline]
    pub fn at(&self, s: f64) -> Point3 {
        self.p + self.d * s
    }
}

/// The ball `B(q, delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub q: Point3,
    pub delta: f64,
}

impl BallSpec {
    pub fn new(q: Point3, delta: f64) -> Result<Self> {
        let r = q.norm();
        if !(delta > 0.0 && delta < r) || r == 1.0 || !r.is_finite() {
            return Err(Error::Domain(format!(
                "ball B({q}, {delta}) needs 0 < delta < |q| and |q| != 1"
            )));
        }
        Ok(Self { q, delta })
    }

    pub fn contains(&self, x: Point3) -> bool {
        x.distance(self.q) < self.delta
    }
}

/// The square `E_delta` of `Y`-points around `center`, on the same face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub center: YPoint,
    pub delta: f64,
}

impl PatchSpec {
    pub fn new(center: YPoint, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!("patch half-width must be positive, got {delta}")));
        }
        if !(center.u2.abs() + delta <= 1.0 && center.u3 - delta >= 0.0) {
            return Err(Error::Domain(format!(
                "patch of half-width {delta} around ({}, {}) leaves the face",
                center.u2, center.u3
            )));
        }
        Ok(Self { center, delta })
    }

    /// Cell centres of an `n x n` grid over the patch; entries are `None` on excluded planes.
    pub fn grid(&self, n: usize) -> Vec<Option<YPoint>> {
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let fi = (2 * i + 1) as f64 / n as f64 - 1.0;
                let fj = (2 * j + 1) as f64 / n as f64 - 1.0;
                let y = YPoint {
                    face: self.center.face,
                    u2: self.center.u2 + self.delta * fi,
                    u3: self.center.u3 + self.delta * fj,
                };
                out.push(y_point_valid(&y).then_some(y));
            }
        }
        out
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.center, delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validity_examples() {
        assert!(y_point_valid(&YPoint { face: YFace::PosX1, u2: 0.5, u3: 2.0 }));
        assert!(!y_point_valid(&YPoint { face: YFace::PosX1, u2: 0.0, u3: 2.0 }));
        assert!(!y_point_valid(&YPoint { face: YFace::PosX1, u2: 0.5, u3: 0.0 }));
        assert!(!y_point_valid(&YPoint { face: YFace::NegX2, u2: -1.0, u3: 1.0 }));
    }

    #[test]
    fn offsets_lie_on_y() {
        for face in YFace::ALL {
            let o = YPoint::new(face, -0.3, 0.7).unwrap().offset();
            assert_eq!(o.x1.abs().max(o.x2.abs()), 1.0);
            assert!(o.x1 * o.x2 * (o.x1 * o.x1 - o.x2 * o.x2) != 0.0);
        }
    }

    #[test]
    fn ball_rejects_origin_and_unit_sphere() {
        assert!(BallSpec::new(Point3::new(3.0, 0.0, 0.0), 0.5).is_ok());
        assert!(BallSpec::new(Point3::new(3.0, 0.0, 0.0), 3.5).is_err());
        assert!(BallSpec::new(Point3::new(0.0, 1.0, 0.0), 0.1).is_err());
    }

    #[test]
    fn patch_grid_marks_excluded_points() {
        let c = YPoint::new(YFace::PosX1, 0.05, 0.5).unwrap();
        let patch = PatchSpec::new(c, 0.05).unwrap();
        let g = patch.grid(4);
        assert_eq!(g.len(), 16);
        assert!(g.iter().all(|y| y.is_some()));
        let patch = PatchSpec::new(c, 0.05).unwrap();
        // odd n puts a column on u2 = 0.05 only; shift the center onto the excluded plane
        let shifted = PatchSpec { center: YPoint { u2: 0.0, ..c }, ..patch };
        assert_eq!(shifted.grid(5).iter().filter(|y| y.is_none()).count(), 5);
    }
}
