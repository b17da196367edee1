//! Deterministic point sets: direction sets and low-discrepancy sequences.
//!
//! Nothing here takes a seed; every sample is a pure function of its index.

use std::f64::consts::{PI, TAU};

/// `n` quasi-uniform unit vectors on the sphere (Fibonacci lattice).
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2 * k + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// `n` equally spaced unit vectors in the plane, starting at `(1, 0)`.
pub fn circle_directions(n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|k| {
            let a = TAU * k as f64 / n as f64;
            [a.cos(), a.sin()]
        })
        .collect()
}

/// The additive recurrence `frac(1/2 + k alpha)` with the generalized golden
/// ratio for dimension `D`, giving points of `[0, 1)^D`.
#[derive(Debug, Clone, Copy)]
pub struct RSequence<const D: usize> {
    alpha: [f64; D],
}

impl<const D: usize> RSequence<D> {
    pub fn new() -> Self {
        // unique positive root of x^{D+1} = x + 1
        let mut phi = 2.0f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (D as f64 + 1.0));
        }
        let mut alpha = [0.0; D];
        for (i, a) in alpha.iter_mut().enumerate() {
            *a = (1.0 / phi.powi(i as i32 + 1)).fract();
        }
        Self { alpha }
    }

    /// The `k`-th point.
    pub fn point(&self, k: u64) -> [f64; D] {
        let mut out = [0.0; D];
        for (o, a) in out.iter_mut().zip(self.alpha.iter()) {
            // split k to keep the product exact enough for large k
            let hi = (k >> 20) as f64;
            let lo = (k & 0xF_FFFF) as f64;
            let v = 0.5 + (hi * (a * 1_048_576.0).fract()).fract() + (lo * a).fract();
            *o = v.fract();
        }
        out
    }
}

impl<const D: usize> Default for RSequence<D> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_directions_are_unit_and_balanced() {
        let d = fibonacci_sphere(64);
        let mut sum = [0.0; 3];
        for v in &d {
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            assert!((n - 1.0).abs() < 1e-14);
            for i in 0..3 {
                sum[i] += v[i];
            }
        }
        for s in sum {
            assert!(s.abs() < 1.0);
        }
    }

    #[test]
    fn r_sequence_fills_the_cube() {
        let seq = RSequence::<3>::new();
        let mut counts = [0usize; 8];
        for k in 0..8000 {
            let p = seq.point(k);
            assert!(p.iter().all(|x| (0.0..1.0).contains(x)));
            let idx = (p[0] >= 0.5) as usize + 2 * (p[1] >= 0.5) as usize + 4 * (p[2] >= 0.5) as usize;
            counts[idx] += 1;
        }
        for c in counts {
            assert!((c as i64 - 1000).abs() < 50, "{counts:?}");
        }
    }

    #[test]
    fn r_sequence_large_index_stays_in_range() {
        let seq = RSequence::<2>::new();
        let p = seq.point(u64::MAX / 3);
        assert!(p.iter().all(|x| (0.0..1.0).contains(x)));
    }
}
