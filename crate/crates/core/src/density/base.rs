//! A countable base of balls for the topology of `R^3 \ (S^2 ∪ {0})`.
//!
//! Level `k = 0, 1, 2, ...` lists the dyadic points of spacing `2^-k` in
//! `[-2^k, 2^k]^3` in lexicographic order, keeping those with `|q| > 2^-k`
//! and `||q| - 1| > 2^-k`, each with radius `2^-(k+1)`. The ball then
//! avoids the origin and the unit sphere, radii are nonincreasing, and
//! every open subset of the complement contains one of the balls.

use super::line::BallSpec;
use crate::point::Point3;

/// Iterator over the base, starting with the first ball.
#[derive(Debug, Clone)]
pub struct BaseSequence {
    level: u32,
    per_axis: u64,
    pos: u64,
}

impl BaseSequence {
    pub fn new() -> Self {
        Self { level: 0, per_axis: Self::axis_count(0), pos: 0 }
    }

    fn axis_count(k: u32) -> u64 {
        (1u64 << (2 * k + 1)) + 1
    }

    /// The candidate at `pos` on the current level, if it passes the filter.
    fn candidate(&self, pos: u64) -> Option<BallSpec> {
        let n = self.per_axis;
        let step = (-(self.level as i32) as f64).exp2();
        let lo = (self.level as f64).exp2();
        let coord = |i: u64| -lo + i as f64 * step;
        let q = Point3::new(coord(pos / (n * n)), coord((pos / n) % n), coord(pos % n));
        let r = q.norm();
        if r > step && (r - 1.0).abs() > step {
            Some(BallSpec { q, delta: step / 2.0 })
        } else {
            None
        }
    }
}

impl Default for BaseSequence {
    fn default() -> Self {
        Self::new()
    }
}

impl Iterator for BaseSequence {
    type Item = BallSpec;

    fn next(&mut self) -> Option<BallSpec> {
        loop {
            if self.pos == self.per_axis.pow(3) {
                self.level += 1;
                if self.level > 20 {
                    return None;
                }
                self.per_axis = Self::axis_count(self.level);
                self.pos = 0;
            }
            let c = self.candidate(self.pos);
            self.pos += 1;
            if c.is_some() {
                return c;
            }
        }
    }
}

/// The `n`-th ball of the base, counting from 1.
pub fn base_sequence(n: u64) -> BallSpec {
    assert!(n >= 1, "the base is indexed from 1");
    BaseSequence::new()
        .nth((n - 1) as usize)
        .expect("index beyond the enumerated levels")
}
