//! Preimages of horizontal planes: the cone surfaces `S_t` and their faces.
//!
//! For `t > 0` the piece of `Z^{-1}(H_t)` inside the beam `B0` is the graph
//! `x3 = ln(t / cos M(x1, x2))`, a cone with square cross-sections and
//! vertex `(0, 0, ln t)`. For `t < 0` the piece in `B1` is the mirror image
//! of `S_{-t}` in the common face `x1 = pi/2`. Every other component is the
//! image of one of these under an element of `G`.
//!
//! Points on a cone are described in *local* coordinates: the coordinates
//! of the corresponding point on the base cone `S_{|t|}` in `B0`.

mod constants;
mod projection;

pub use constants::{
    coverage_constant_c, logsquare_quantities, separation_constant_a, trapezoid_ratio_g,
    tsmall_bound, width_window_bound, LogSquareQuantities, DensityConstants, SEPARATION_MARGIN,
};
pub use projection::{
    plane_m_x1, project_to_plane_m, ray_cone_hit, ray_cone_intersect, ray_cone_newton, strip_contains,
    FaceConfig, RayHit, StripSpec, RAY_SCAN_SAMPLES,
};

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::point::{PlanePoint, Point3};
use crate::zorich::BeamIndex;

/// Height of the base cone `S_level` above the point `p` of the square.
pub fn cone_height(level: f64, p: PlanePoint) -> Result<f64> {
    if !(level > 0.0) || !level.is_finite() {
        return Err(Error::Domain(format!("cone level must be positive, got {level}")));
    }
    let m = p.max_norm();
    if !(m < FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "({}, {}) has max-norm {m} >= pi/2; the cone has no point above it",
            p.x1, p.x2
        )));
    }
    Ok((level / m.cos()).ln())
}

/// Distance from a point of `S_level` at height `x3` to the boundary of its beam.
pub fn beam_boundary_distance(level: f64, x3: f64) -> Result<f64> {
    if !(level > 0.0) || !level.is_finite() {
        return Err(Error::Domain(format!("cone level must be positive, got {level}")));
    }
    let v = level * (-x3).exp();
    if v > 1.0 {
        return Err(Error::Domain(format!(
            "height {x3} lies below the vertex ln({level}) = {}",
            level.ln()
        )));
    }
    Ok(v.asin())
}

/// A component `g(S_level)` of `Z^{-1}(H_level)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeSurface {
    pub level: f64,
    pub element: GroupElement,
}

impl ConeSurface {
    pub fn new(level: f64, element: GroupElement) -> Result<Self> {
        if level == 0.0 || !level.is_finite() {
            return Err(Error::Domain(format!(
                "cone level must be finite and nonzero, got {level}"
            )));
        }
        Ok(Self { level, element })
    }

    /// The component of `Z^{-1}(H_level)` lying in `beam`.
    pub fn in_beam(level: f64, beam: BeamIndex) -> Result<Self> {
        let want = if level > 0.0 { 0 } else { 1 };
        if beam.parity() != want {
            return Err(Error::Domain(format!(
                "beam ({}, {}) contains no component of the preimage of level {level}",
                beam.i, beam.j
            )));
        }
        let (i, j) = (beam.i, beam.j);
        let element = match (level > 0.0, i.rem_euclid(2) == 0) {
            (true, true) => GroupElement::translation(i / 2, j / 2),
            (true, false) => GroupElement::new((i - 1) / 2, (j - 1) / 2, true),
            (false, false) => GroupElement::translation((i - 1) / 2, j / 2),
            (false, true) => GroupElement::new(i / 2, (j - 1) / 2, true),
        };
        Self::new(level, element)
    }

    /// The beam containing this component.
    pub fn beam(&self) -> BeamIndex {
        BeamIndex::containing(self.vertex())
    }

    pub fn vertex(&self) -> Point3 {
        self.from_local(Point3::new(0.0, 0.0, self.level.abs().ln()))
    }

    /// Maps a point of space to local coordinates.
    #[inline]
    pub fn to_local(&self, x: Point3) -> Point3 {
        let mut y = self.element.inverse().apply(x);
        if self.level < 0.0 {
            y.x1 = PI - y.x1;
        }
        y
    }

    #[inline]
    pub fn from_local(&self, y: Point3) -> Point3 {
        let mut y = y;
        if self.level < 0.0 {
            y.x1 = PI - y.x1;
        }
        self.element.apply(y)
    }

    /// Linear part of [`to_local`](Self::to_local), for direction vectors.
    #[inline]
    pub fn local_direction(&self, d: Point3) -> Point3 {
        let s = if self.element.flip { -1.0 } else { 1.0 };
        let r = if self.level < 0.0 { -1.0 } else { 1.0 };
        Point3::new(s * r * d.x1, s * d.x2, d.x3)
    }

    /// The point of the cone above local horizontal coordinates `p`.
    pub fn point(&self, p: PlanePoint) -> Result<Point3> {
        cone_point(self, p)
    }

    /// The point of `face` at height `x3`, at relative position `v` in
    /// `[-1, 1]` along the face's cross-section.
    pub fn face_point(&self, face: FaceId, x3: f64, v: f64) -> Result<Point3> {
        let m = self.cross_section_radius(x3)?;
        let (y1, y2) = face.from_face_coords(m, v.clamp(-1.0, 1.0) * m);
        Ok(self.from_local(Point3::new(y1, y2, x3)))
    }

    /// Max-norm radius of the square cross-section at height `x3`.
    pub fn cross_section_radius(&self, x3: f64) -> Result<f64> {
        let v = self.level.abs() * (-x3).exp();
        if v > 1.0 {
            return Err(Error::Domain(format!("height {x3} lies below the cone vertex")));
        }
        Ok(v.acos())
    }

    /// Residual of the defining equation `e^{x3} cos M = |level|`, divided by `e^{x3}`.
    pub fn scaled_residual(&self, x: Point3) -> f64 {
        let y = self.to_local(x);
        PlanePoint::new(y.x1, y.x2).max_norm().cos() - self.level.abs() * (-y.x3).exp()
    }
}

/// The point of `cone` above local horizontal coordinates `p`.
pub fn cone_point(cone: &ConeSurface, p: PlanePoint) -> Result<Point3> {
    let x3 = cone_height(cone.level.abs(), p)?;
    Ok(cone.from_local(Point3::new(p.x1, p.x2, x3)))
}

/// One of the four faces of a cone, named in local coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaceId {
    /// `x1 >= |x2|`
    PosX1,
    /// `-x1 >= |x2|`
    NegX1,
    /// `x2 >= |x1|`
    PosX2,
    /// `-x2 >= |x1|`
    NegX2,
}

impl FaceId {
    pub const ALL: [FaceId; 4] = [FaceId::PosX1, FaceId::NegX1, FaceId::PosX2, FaceId::NegX2];

    /// `(normal, tangent)` coordinates: the face is `normal >= |tangent|`.
    #[inline]
    pub fn face_coords(self, y1: f64, y2: f64) -> (f64, f64) {
        match self {
            FaceId::PosX1 => (y1, y2),
            FaceId::NegX1 => (-y1, y2),
            FaceId::PosX2 => (y2, y1),
            FaceId::NegX2 => (-y2, y1),
        }
    }

    #[inline]
    pub fn from_face_coords(self, normal: f64, tangent: f64) -> (f64, f64) {
        match self {
            FaceId::PosX1 => (normal, tangent),
            FaceId::NegX1 => (-normal, tangent),
            FaceId::PosX2 => (tangent, normal),
            FaceId::NegX2 => (tangent, -normal),
        }
    }

    /// The face whose quadrant contains the local point `(y1, y2)`.
    pub fn dominant(y1: f64, y2: f64) -> FaceId {
        if y1.abs() >= y2.abs() {
            if y1 >= 0.0 {
                FaceId::PosX1
            } else {
                FaceId::NegX1
            }
        } else if y2 >= 0.0 {
            FaceId::PosX2
        } else {
            FaceId::NegX2
        }
    }

    pub fn contains_local(self, y1: f64, y2: f64, tol: f64) -> bool {
        let (n, t) = self.face_coords(y1, y2);
        n + tol >= t.abs()
    }
}

/// The band `F(t1, t2) = F ∩ {t1 < x3 < t2}` of one face of a cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceRegion {
    pub cone: ConeSurface,
    pub face: FaceId,
    pub t1: f64,
    pub t2: f64,
}

impl FaceRegion {
    pub fn new(cone: ConeSurface, face: FaceId, t1: f64, t2: f64) -> Result<Self> {
        let vertex = cone.level.abs().ln();
        if !(vertex < t1 && t1 < t2) {
            return Err(Error::Domain(format!(
                "face band needs vertex height {vertex} < t1 = {t1} < t2 = {t2}"
            )));
        }
        Ok(Self { cone, face, t1, t2 })
    }

    /// Point at height fraction `u` in `[0, 1]` and cross-section position `v` in `[-1, 1]`.
    pub fn sample(&self, u: f64, v: f64) -> Result<Point3> {
        let x3 = self.t1 + u.clamp(0.0, 1.0) * (self.t2 - self.t1);
        self.cone.face_point(self.face, x3, v)
    }

    pub fn contains(&self, x: Point3, tol: f64) -> bool {
        let y = self.cone.to_local(x);
        y.x3 > self.t1 - tol
            && y.x3 < self.t2 + tol
            && self.face.contains_local(y.x1, y.x2, tol)
            && self.cone.scaled_residual(x).abs() <= tol
    }
}

/// Triangulates the part of a cone between its vertex and height `x3_max`.
///
/// Each face is covered by an `n x n` grid of quads, each split in two.
pub fn cone_mesh(cone: &ConeSurface, x3_max: f64, n: usize) -> Result<Vec<[Point3; 3]>> {
    if n == 0 {
        return Err(Error::Invalid("mesh resolution must be positive".into()));
    }
    let m_max = cone.cross_section_radius(x3_max)?;
    let level = cone.level.abs();
    let mut tris = Vec::with_capacity(8 * n * n);
    for face in FaceId::ALL {
        let vertex = |k: usize, t: usize| -> Point3 {
            let m = m_max * k as f64 / n as f64;
            let tangent = m * (2.0 * t as f64 / n as f64 - 1.0);
            let (y1, y2) = face.from_face_coords(m, tangent);
            let x3 = (level / m.cos()).ln();
            cone.from_local(Point3::new(y1, y2, x3))
        };
        for k in 0..n {
            for t in 0..n {
                let a = vertex(k, t);
                let b = vertex(k + 1, t);
                let c = vertex(k + 1, t + 1);
                let d = vertex(k, t + 1);
                tris.push([a, b, c]);
                if k > 0 {
                    tris.push([a, c, d]);
                }
            }
        }
    }
    Ok(tris)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zorich::zorich;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{E, FRAC_PI_4, FRAC_PI_6, SQRT_2};

    #[test]
    fn cone_height_examples() {
        assert_abs_diff_eq!(cone_height(1.0, PlanePoint::new(0.0, 0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            cone_height(1.0, PlanePoint::new(FRAC_PI_4, 0.0)).unwrap(),
            SQRT_2.ln(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(cone_height(E, PlanePoint::new(0.0, 0.0)).unwrap(), 1.0);
        assert!(cone_height(1.0, PlanePoint::new(FRAC_PI_2, 0.0)).is_err());
        assert!(cone_height(-1.0, PlanePoint::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn cone_point_examples() {
        let up = ConeSurface::new(1.0, GroupElement::IDENTITY).unwrap();
        let x = cone_point(&up, PlanePoint::new(0.0, 0.0)).unwrap();
        assert_eq!(x, Point3::ORIGIN);
        assert_abs_diff_eq!(zorich(x).unwrap().x3, 1.0);

        let down = ConeSurface::new(-1.0, GroupElement::IDENTITY).unwrap();
        let x = cone_point(&down, PlanePoint::new(0.0, 0.0)).unwrap();
        assert_eq!(x, Point3::new(PI, 0.0, 0.0));
        let z = zorich(x).unwrap();
        assert_abs_diff_eq!(z.x3, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn in_beam_places_vertex_in_the_beam() {
        for i in -3..=3 {
            for j in -3..=3 {
                let beam = BeamIndex::new(i, j);
                let level = if beam.parity() == 0 { 2.5 } else { -0.4 };
                let cone = ConeSurface::in_beam(level, beam).unwrap();
                assert_eq!(cone.beam(), beam);
                let x = cone.point(PlanePoint::new(0.3, -0.9)).unwrap();
                assert!(beam.contains(x, 1e-12));
                let z = zorich(x).unwrap();
                assert!((z.x3 - level).abs() < 1e-12 * level.abs().max(1.0));
                assert!(ConeSurface::in_beam(-level, beam).is_err());
            }
        }
    }

    #[test]
    fn local_direction_matches_affine_difference() {
        let cone = ConeSurface::in_beam(-2.0, BeamIndex::new(2, -3)).unwrap();
        let x = Point3::new(0.3, -0.7, 1.1);
        let d = Point3::new(0.25, -1.5, 0.5);
        let expect = cone.to_local(x + d) - cone.to_local(x);
        assert!((cone.local_direction(d) - expect).max_abs() < 1e-14);
    }

    #[test]
    fn beam_boundary_distance_examples() {
        assert_abs_diff_eq!(
            beam_boundary_distance(1.0, 2f64.ln()).unwrap(),
            FRAC_PI_6,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(beam_boundary_distance(1.0, 0.0).unwrap(), FRAC_PI_2);
        let mut prev = f64::INFINITY;
        for k in 0..60 {
            let d = beam_boundary_distance(1.0, k as f64 * 0.5).unwrap();
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 1e-12);
        assert!(beam_boundary_distance(1.0, -0.1).is_err());
    }

    #[test]
    fn face_ids_partition_the_square() {
        for (y1, y2, face) in [
            (1.0, 0.5, FaceId::PosX1),
            (-1.0, 0.5, FaceId::NegX1),
            (0.2, 0.5, FaceId::PosX2),
            (0.2, -0.5, FaceId::NegX2),
        ] {
            assert_eq!(FaceId::dominant(y1, y2), face);
            assert!(face.contains_local(y1, y2, 0.0));
            let (n, t) = face.face_coords(y1, y2);
            assert_eq!(face.from_face_coords(n, t), (y1, y2));
        }
    }

    #[test]
    fn face_region_rejects_bands_below_vertex() {
        let cone = ConeSurface::new(2.0, GroupElement::IDENTITY).unwrap();
        assert!(FaceRegion::new(cone, FaceId::PosX1, 0.5, 1.0).is_err());
        let band = FaceRegion::new(cone, FaceId::PosX1, 1.0, 2.0).unwrap();
        let x = band.sample(0.5, 0.3).unwrap();
        assert!(band.contains(x, 1e-12));
        assert!(!band.contains(band.cone.face_point(FaceId::NegX1, 1.5, 0.0).unwrap(), 1e-12));
    }

    #[test]
    fn mesh_vertices_lie_on_the_cone() {
        let cone = ConeSurface::in_beam(-1.5, BeamIndex::new(0, 1)).unwrap();
        let tris = cone_mesh(&cone, 3.0, 6).unwrap();
        assert_eq!(tris.len(), 4 * (6 * 6 * 2 - 6));
        for t in &tris {
            for v in t {
                assert!(cone.scaled_residual(*v).abs() < 1e-12);
            }
        }
    }
}
