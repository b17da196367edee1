//! Voxel occupancy over the box `[-R, R]^3`, with the origin and the unit
//! sphere masked out.

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point3;

use super::trace::TracePoint;

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    half_extent: f64,
    resolution: usize,
    r_excl: f64,
    shell_w: f64,
    occupied: BitVec,
    excluded: BitVec,
    /// Occupied voxels outside the exclusion mask.
    counted: usize,
    allowed: usize,
}

impl VoxelGrid {
    /// A grid whose exclusion radius and shell half-width are one voxel diagonal.
    pub fn new(half_extent: f64, resolution: usize) -> Result<Self> {
        if !(half_extent > 1.0) || !half_extent.is_finite() {
            return Err(Error::Invalid(format!(
                "box half-width must exceed 1 so the unit sphere is inside, got {half_extent}"
            )));
        }
        if !(1..=2048).contains(&resolution) {
            return Err(Error::Invalid(format!("resolution must be in 1..=2048, got {resolution}")));
        }
        let diag = 3f64.sqrt() * 2.0 * half_extent / resolution as f64;
        Self::with_exclusion(half_extent, resolution, diag, diag)
    }

    pub fn with_exclusion(half_extent: f64, resolution: usize, r_excl: f64, shell_w: f64) -> Result<Self> {
        let n = resolution;
        let total = n * n * n;
        let mut g = Self {
            half_extent,
            resolution,
            r_excl,
            shell_w,
            occupied: bitvec![0; total],
            excluded: bitvec![0; total],
            counted: 0,
            allowed: 0,
        };
        let w = g.voxel_size();
        for idx in 0..total {
            let (i, j, k) = g.unflatten(idx);
            let mut dmin2 = 0.0;
            let mut dmax2 = 0.0;
            for c in [i, j, k] {
                let lo = -half_extent + c as f64 * w;
                let hi = lo + w;
                let near = if lo > 0.0 { lo } else if hi < 0.0 { -hi } else { 0.0 };
                let far = lo.abs().max(hi.abs());
                dmin2 += near * near;
                dmax2 += far * far;
            }
            let (dmin, dmax) = (dmin2.sqrt(), dmax2.sqrt());
            let hits_ball = dmin < r_excl;
            let hits_shell = dmin < 1.0 + shell_w && dmax > 1.0 - shell_w;
            if hits_ball || hits_shell {
                g.excluded.set(idx, true);
            }
        }
        g.allowed = total - g.excluded.count_ones();
        if g.allowed == 0 {
            return Err(Error::Invalid("exclusion mask covers the whole grid".into()));
        }
        Ok(g)
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn voxel_size(&self) -> f64 {
        2.0 * self.half_extent / self.resolution as f64
    }

    fn unflatten(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.resolution;
        (idx % n, (idx / n) % n, idx / (n * n))
    }

    /// Flat index of the voxel containing `p`, if `p` is in the box.
    pub fn voxel_of(&self, p: Point3) -> Option<usize> {
        let n = self.resolution;
        let w = self.voxel_size();
        let mut idx = [0usize; 3];
        for (slot, x) in idx.iter_mut().zip([p.x1, p.x2, p.x3]) {
            if !(x.abs() <= self.half_extent) {
                return None;
            }
            *slot = (((x + self.half_extent) / w) as usize).min(n - 1);
        }
        Some(idx[0] + n * (idx[1] + n * idx[2]))
    }

    pub fn voxel_center(&self, idx: usize) -> Point3 {
        let (i, j, k) = self.unflatten(idx);
        let w = self.voxel_size();
        let c = |t: usize| -self.half_extent + (t as f64 + 0.5) * w;
        Point3::new(c(i), c(j), c(k))
    }

    /// Marks the voxel of `p`; returns true if it was newly occupied.
    pub fn mark(&mut self, p: Point3) -> bool {
        let Some(idx) = self.voxel_of(p) else {
            return false;
        };
        if self.occupied[idx] {
            return false;
        }
        self.occupied.set(idx, true);
        if !self.excluded[idx] {
            self.counted += 1;
        }
        true
    }

    pub fn is_excluded(&self, idx: usize) -> bool {
        self.excluded[idx]
    }

    pub fn is_occupied(&self, idx: usize) -> bool {
        self.occupied[idx]
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.count_ones()
    }

    pub fn coverage(&self) -> f64 {
        self.counted as f64 / self.allowed as f64
    }

    /// Bitwise union with a grid of the same shape.
    pub fn merge(&mut self, other: &VoxelGrid) -> Result<()> {
        if self.half_extent != other.half_extent
            || self.resolution != other.resolution
            || self.r_excl != other.r_excl
            || self.shell_w != other.shell_w
        {
            return Err(Error::Invalid("cannot merge voxel grids of different shapes".into()));
        }
        self.occupied |= &other.occupied;
        let mut live = self.occupied.clone();
        live &= !self.excluded.clone();
        self.counted = live.count_ones();
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveragePoint {
    pub points_consumed: u64,
    pub coverage: f64,
    pub cap_hit_fraction: f64,
}

/// Marks a point stream into a grid and records coverage at the
/// checkpoints `10^3, 10^4, ...` and at the end.
#[derive(Debug, Clone)]
pub struct CoverageRecorder {
    pub grid: VoxelGrid,
    consumed: u64,
    capped: u64,
    next_checkpoint: u64,
    series: Vec<CoveragePoint>,
}

impl CoverageRecorder {
    pub fn new(grid: VoxelGrid) -> Self {
        Self { grid, consumed: 0, capped: 0, next_checkpoint: 1000, series: Vec::new() }
    }

    pub fn push(&mut self, p: &TracePoint) {
        self.consumed += 1;
        if p.capped {
            self.capped += 1;
        }
        if p.in_box {
            self.grid.mark(p.value);
        }
        if self.consumed == self.next_checkpoint {
            self.record();
            self.next_checkpoint = self.next_checkpoint.saturating_mul(10);
        }
    }

    fn record(&mut self) {
        let cap = if self.consumed == 0 { 0.0 } else { self.capped as f64 / self.consumed as f64 };
        self.series.push(CoveragePoint {
            points_consumed: self.consumed,
            coverage: self.grid.coverage(),
            cap_hit_fraction: cap,
        });
    }

    /// The series, closed with a final entry for the whole stream.
    pub fn finish(mut self) -> (VoxelGrid, Vec<CoveragePoint>) {
        if self.series.last().map(|c| c.points_consumed) != Some(self.consumed) {
            self.record();
        }
        (self.grid, self.series)
    }
}

/// Marks every point of `points` lying in the box and returns the coverage series.
pub fn mark_and_coverage<I>(grid: VoxelGrid, points: I) -> (VoxelGrid, Vec<CoveragePoint>)
where
    I: IntoIterator<Item = Point3>,
{
    let mut rec = CoverageRecorder::new(grid);
    for p in points {
        let in_box = rec.grid.voxel_of(p).is_some();
        rec.push(&TracePoint { s: 0.0, value: p, in_box, capped: false });
    }
    rec.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_stream_has_zero_coverage() {
        let (_, s) = mark_and_coverage(VoxelGrid::new(4.0, 16).unwrap(), std::iter::empty());
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].coverage, 0.0);
        assert_eq!(s[0].points_consumed, 0);
    }

    #[test]
    fn single_point_occupies_one_voxel() {
        let (g, _) = mark_and_coverage(VoxelGrid::new(4.0, 16).unwrap(), [Point3::new(3.0, 3.0, 3.0)]);
        assert_eq!(g.occupied_count(), 1);
    }

    #[test]
    fn all_centres_give_full_coverage() {
        let g = VoxelGrid::new(4.0, 16).unwrap();
        let centres: Vec<_> = (0..g.len()).map(|i| g.voxel_center(i)).collect();
        let (g, s) = mark_and_coverage(g, centres);
        assert_eq!(g.coverage(), 1.0);
        assert!(s.windows(2).all(|w| w[0].coverage <= w[1].coverage));
        assert_eq!(s.first().unwrap().points_consumed, 1000);
    }

    #[test]
    fn exclusion_covers_origin_and_sphere() {
        let g = VoxelGrid::new(4.0, 32).unwrap();
        for p in [
            Point3::ORIGIN,
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, -0.6, 0.8),
            Point3::new(0.577, 0.577, 0.577),
        ] {
            assert!(g.is_excluded(g.voxel_of(p).unwrap()), "{p}");
        }
        assert!(!g.is_excluded(g.voxel_of(Point3::new(3.0, 0.0, 0.0)).unwrap()));
        // marking an excluded voxel does not change coverage
        let mut g = g;
        g.mark(Point3::new(1.0, 0.0, 0.0));
        assert_eq!(g.coverage(), 0.0);
    }

    #[test]
    fn merge_is_union() {
        let mut a = VoxelGrid::new(4.0, 8).unwrap();
        let mut b = a.clone();
        a.mark(Point3::new(3.0, 3.0, 3.0));
        b.mark(Point3::new(-3.0, 3.0, 3.0));
        b.mark(Point3::new(3.0, 3.0, 3.0));
        let mut ab = a.clone();
        ab.merge(&b).unwrap();
        let mut ba = b.clone();
        ba.merge(&a).unwrap();
        assert_eq!(ab, ba);
        assert_eq!(ab.occupied_count(), 2);
        assert!(a.merge(&VoxelGrid::new(4.0, 16).unwrap()).is_err());
    }

    #[test]
    fn points_outside_box_are_ignored() {
        let mut g = VoxelGrid::new(4.0, 8).unwrap();
        assert!(!g.mark(Point3::new(5.0, 0.0, 0.0)));
        assert!(g.mark(Point3::new(4.0, 4.0, 4.0)));
    }
}
