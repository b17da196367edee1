//! The discrete isometry group `G` under which the Zorich map is strongly
//! automorphic.
//!
//! `G` is generated by the translations `g1 = +(2 pi, 0, 0)`,
//! `g2 = +(0, 2 pi, 0)` and the half-turn `g3(x) = (pi - x1, pi - x2, x3)`
//! about a branch line. Every element has the canonical form
//! `x -> sigma(x1, x2) + 2 pi (m, n)` with `sigma` the identity or the
//! half-turn, so the group is `Z^2` semidirect `Z/2` and all group
//! arithmetic is exact integer arithmetic.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point3;
use crate::zorich::fold;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct GroupElement {
    pub m: i64,
    pub n: i64,
    pub flip: bool,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { m: 0, n: 0, flip: false };

    pub const fn new(m: i64, n: i64, flip: bool) -> Self {
        Self { m, n, flip }
    }

    pub const fn translation(m: i64, n: i64) -> Self {
        Self { m, n, flip: false }
    }

    pub fn is_identity(self) -> bool {
        self == Self::IDENTITY
    }

    #[inline]
    pub fn apply(self, x: Point3) -> Point3 {
        let (a, b) = if self.flip { (PI - x.x1, PI - x.x2) } else { (x.x1, x.x2) };
        Point3::new(a + TAU * self.m as f64, b + TAU * self.n as f64, x.x3)
    }

    /// `self o other`: apply `other` first.
    pub fn compose(self, other: GroupElement) -> GroupElement {
        let s = if self.flip { -1 } else { 1 };
        GroupElement {
            m: self.m + s * other.m,
            n: self.n + s * other.n,
            flip: self.flip ^ other.flip,
        }
    }

    pub fn inverse(self) -> GroupElement {
        if self.flip {
            // Half-turns composed with translations are involutions.
            self
        } else {
            GroupElement::translation(-self.m, -self.n)
        }
    }

    /// Product of the word's letters, leftmost letter applied last.
    pub fn from_word(word: &GeneratorWord) -> GroupElement {
        word.0
            .iter()
            .fold(GroupElement::IDENTITY, |acc, g| acc.compose(g.element()))
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(m={}, n={}, flip={})", self.m, self.n, u8::from(self.flip))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    G1,
    G1Inv,
    G2,
    G2Inv,
    G3,
}

impl Generator {
    pub const ALL: [Generator; 5] =
        [Generator::G1, Generator::G1Inv, Generator::G2, Generator::G2Inv, Generator::G3];

    pub fn element(self) -> GroupElement {
        match self {
            Generator::G1 => GroupElement::translation(1, 0),
            Generator::G1Inv => GroupElement::translation(-1, 0),
            Generator::G2 => GroupElement::translation(0, 1),
            Generator::G2Inv => GroupElement::translation(0, -1),
            Generator::G3 => GroupElement::new(0, 0, true),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generator::G1 => "g1",
            Generator::G1Inv => "g1^-1",
            Generator::G2 => "g2",
            Generator::G2Inv => "g2^-1",
            Generator::G3 => "g3",
        })
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "g1" => Ok(Generator::G1),
            "g1^-1" => Ok(Generator::G1Inv),
            "g2" => Ok(Generator::G2),
            "g2^-1" => Ok(Generator::G2Inv),
            "g3" | "g3^-1" => Ok(Generator::G3),
            other => Err(Error::Invalid(format!("unknown generator {other:?}"))),
        }
    }
}

/// A finite word in the generators.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GeneratorWord(pub Vec<Generator>);

impl FromStr for GeneratorWord {
    type Err = Error;

    /// Parses whitespace-separated letters, e.g. `"g3 g1^-1 g3"`.
    fn from_str(s: &str) -> Result<Self> {
        s.split_whitespace().map(str::parse).collect::<Result<Vec<_>>>().map(GeneratorWord)
    }
}

impl fmt::Display for GeneratorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Finds `g` with `g(x) = y`, up to `tol` in each coordinate.
///
/// Solves `sigma(x) + 2 pi (m, n) = y` for both choices of `sigma`.
pub fn find_g(x: Point3, y: Point3, tol: f64) -> Result<GroupElement> {
    if (x.x3 - y.x3).abs() > tol {
        return Err(Error::Invalid(format!("{x} and {y} have different heights")));
    }
    for flip in [false, true] {
        let base = GroupElement::new(0, 0, flip).apply(x);
        let m = ((y.x1 - base.x1) / TAU).round() as i64;
        let n = ((y.x2 - base.x2) / TAU).round() as i64;
        let g = GroupElement::new(m, n, flip);
        let r = g.apply(x) - y;
        if r.x1.abs() <= tol && r.x2.abs() <= tol {
            return Ok(g);
        }
    }
    Err(Error::Invalid(format!("{x} and {y} lie in different orbits")))
}

/// Membership in the fundamental domain used by [`reduce_to_fundamental_domain`].
///
/// The domain is `[-pi/2, 3pi/2) x (-pi/2, pi/2) x R`, together with the
/// segments `[-pi/2, pi/2] x {+-pi/2} x R` of its top and bottom faces.
pub fn in_fundamental_domain(x: Point3) -> bool {
    let in_x1 = x.x1 >= -FRAC_PI_2 && x.x1 < 3.0 * FRAC_PI_2;
    if x.x2 > -FRAC_PI_2 && x.x2 < FRAC_PI_2 {
        in_x1
    } else if x.x2 == FRAC_PI_2 || x.x2 == -FRAC_PI_2 {
        x.x1 >= -FRAC_PI_2 && x.x1 <= FRAC_PI_2
    } else {
        false
    }
}

/// Returns `(x', g)` with `x'` in the fundamental domain and `g(x') = x`.
pub fn reduce_to_fundamental_domain(x: Point3) -> (Point3, GroupElement) {
    let fa = fold(x.x1);
    let fb = fold(x.x2);
    let (a, b) = (fa.folded, fb.folded);
    // Even beams reduce into B0 at local coordinates (a, b); odd beams into
    // B1, whose local coordinates (a, b) sit at (pi - a, b).
    let mut r = if (fa.parity + fb.parity).is_multiple_of(2) {
        Point3::new(a, b, x.x3)
    } else {
        Point3::new(PI - a, b, x.x3)
    };
    if r.x1 >= 3.0 * FRAC_PI_2 {
        r.x1 = -FRAC_PI_2;
    }
    if (r.x2 == FRAC_PI_2 || r.x2 == -FRAC_PI_2) && r.x1 > FRAC_PI_2 {
        // Top and bottom faces are glued to themselves by the half-turn
        // about x1 = pi/2; keep the B0 half.
        r.x1 = PI - r.x1;
    }
    let g = find_g(r, x, 1e-9 * (1.0 + x.x1.abs().max(x.x2.abs())))
        .expect("reduced point lies in the orbit of its input");
    (r, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zorich::zorich;

    fn close(a: Point3, b: Point3, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn apply_examples() {
        let x = Point3::new(0.0, 0.0, 5.0);
        assert_eq!(GroupElement::translation(1, 0).apply(x), Point3::new(TAU, 0.0, 5.0));
        assert_eq!(GroupElement::new(0, 0, true).apply(x), Point3::new(PI, PI, 5.0));
        let y = Point3::new(0.3, -2.0, 1.0);
        let g3 = Generator::G3.element();
        assert!(close(g3.apply(g3.apply(y)), y, 1e-15));
    }

    #[test]
    fn compose_matches_pointwise_action() {
        let x = Point3::new(0.4, 1.7, -0.2);
        let flip = Generator::G3.element();
        let g1 = Generator::G1.element();
        assert!(close(flip.compose(g1).apply(x), flip.apply(g1.apply(x)), 1e-12));
    }

    #[test]
    fn word_g3_g1_g3_is_backward_translation() {
        let w: GeneratorWord = "g3 g1 g3".parse().unwrap();
        assert_eq!(GroupElement::from_word(&w), GroupElement::translation(-1, 0));
    }

    #[test]
    fn inverse_example() {
        let g = GroupElement::new(2, -1, true);
        let h = g.inverse();
        assert!(h.compose(g).is_identity());
        assert!(g.compose(h).is_identity());
        let t = GroupElement::translation(3, -4);
        assert_eq!(t.inverse(), GroupElement::translation(-3, 4));
    }

    #[test]
    fn reduce_examples() {
        let (r, g) = reduce_to_fundamental_domain(Point3::new(0.0, 0.0, 3.0));
        assert_eq!(r, Point3::new(0.0, 0.0, 3.0));
        assert!(g.is_identity());

        let (r, g) = reduce_to_fundamental_domain(Point3::new(TAU, 0.0, 3.0));
        assert!(close(r, Point3::new(0.0, 0.0, 3.0), 1e-15));
        assert_eq!(g, GroupElement::translation(1, 0));

        let x = Point3::new(-PI, 0.0, 3.0);
        let (r, g) = reduce_to_fundamental_domain(x);
        assert!(close(r, Point3::new(PI, 0.0, 3.0), 1e-15));
        assert!(close(g.apply(r), x, 1e-12));
    }

    #[test]
    fn reduce_boundary_faces() {
        // Top face: no representative with x2 = -pi/2 exists.
        let x = Point3::new(2.0, FRAC_PI_2, 0.0);
        let (r, g) = reduce_to_fundamental_domain(x);
        assert!(in_fundamental_domain(r), "{r}");
        assert!(close(g.apply(r), x, 1e-12));
        // Bottom face of B1 is identified with the bottom face of B0.
        let x = Point3::new(2.0, -FRAC_PI_2, 0.0);
        let (r, _) = reduce_to_fundamental_domain(x);
        assert!(close(r, Point3::new(PI - 2.0, -FRAC_PI_2, 0.0), 1e-15));
        // The face x1 = 3pi/2 is a translate of x1 = -pi/2.
        let x = Point3::new(3.0 * FRAC_PI_2, 0.3, 0.0);
        let (r, g) = reduce_to_fundamental_domain(x);
        assert!(in_fundamental_domain(r));
        assert!(close(g.apply(r), x, 1e-12));
    }

    #[test]
    fn reduction_preserves_image() {
        let x = Point3::new(-7.3, 11.9, 0.8);
        let (r, _) = reduce_to_fundamental_domain(x);
        assert!(close(zorich(r).unwrap(), zorich(x).unwrap(), 1e-12));
    }

    #[test]
    fn find_g_rejects_other_orbits() {
        assert!(find_g(Point3::new(0.1, 0.2, 0.0), Point3::new(0.3, 0.2, 0.0), 1e-9).is_err());
        assert!(find_g(Point3::new(0.1, 0.2, 0.0), Point3::new(0.1, 0.2, 1.0), 1e-9).is_err());
    }

    #[test]
    fn generator_parsing() {
        assert!("g4".parse::<Generator>().is_err());
        let w: GeneratorWord = "g1^-1 g2 g3".parse().unwrap();
        assert_eq!(w.to_string(), "g1^-1 g2 g3");
    }
}
