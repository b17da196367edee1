//! Ball hitting, voxel coverage of a traced line, and the patch density experiment.

use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point3;

use super::line::{BallSpec, LineSpec, PatchSpec, YFace, YPoint};
use super::trace::{adaptive_trace, ParamWindow, TraceConfig, TracePoint, TraceStats};
use super::voxel::{CoveragePoint, CoverageRecorder, VoxelGrid};

/// Default window for ball hitting: heights of the line's points.
pub const HIT_WINDOW: ParamWindow = ParamWindow::Height { x3_min: -8.0, x3_max: 12.0 };
/// `h_max` as a fraction of the ball radius.
pub const HIT_RESOLUTION: f64 = 0.25;
/// Largest fraction of excluded grid points tolerated on a patch.
pub const MAX_INVALID_FRACTION: f64 = 0.05;

/// Window for coverage runs. Above it the rounding of the line points,
/// amplified by `e^{x3}`, stops being small against a voxel.
pub const COVERAGE_WINDOW: ParamWindow = ParamWindow::Height { x3_min: -8.0, x3_max: 12.0 };
/// Slopes `u3` of the pseudorandom coverage lines, drawn log-uniformly.
///
/// Images of lines fill the box through one radial arc per beam crossing,
/// and the crossing count grows like `1/u3`, so only shallow lines reach
/// high coverage within the window.
pub const COVERAGE_SLOPE_RANGE: (f64, f64) = (1e-4, 2e-4);
/// Bounds on `|u2|`, keeping the lines off the excluded planes.
pub const COVERAGE_U2_RANGE: (f64, f64) = (0.05, 0.95);

/// `n` valid parameters in `Y` drawn from a fixed-seed stream: uniform face,
/// uniform sign and `|u2|` in [`COVERAGE_U2_RANGE`], log-uniform `u3` in
/// [`COVERAGE_SLOPE_RANGE`].
pub fn pseudorandom_y_points(seed: u64, n: usize) -> Vec<YPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = COVERAGE_SLOPE_RANGE;
    let (a, b) = COVERAGE_U2_RANGE;
    (0..n)
        .map(|_| {
            let face = YFace::ALL[rng.gen_range(0..4)];
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let u2 = sign * rng.gen_range(a..b);
            let u3 = (lo.ln() + rng.gen::<f64>() * (hi / lo).ln()).exp();
            YPoint::new(face, u2, u3).expect("ranges keep the point valid")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    pub hit: bool,
    pub witness_param: Option<f64>,
    pub min_distance: f64,
    pub evaluations: u64,
}

/// Whether the traced curve `f(L)` enters `ball`, over the default window.
pub fn hits_ball(line: &LineSpec, ball: &BallSpec, budget: u64) -> Result<HitRecord> {
    hits_ball_in(line, ball, budget, HIT_WINDOW)
}

pub fn hits_ball_in(line: &LineSpec, ball: &BallSpec, budget: u64, window: ParamWindow) -> Result<HitRecord> {
    let cfg = TraceConfig::new(
        ball.q.norm() + ball.delta,
        HIT_RESOLUTION * ball.delta,
        budget,
        window,
    );
    let mut min_distance = f64::INFINITY;
    let mut witness = None;
    let stats = adaptive_trace(line, &cfg, |p| {
        let d = p.value.distance(ball.q);
        min_distance = min_distance.min(d);
        if d < ball.delta {
            witness = Some(p.s);
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(HitRecord {
        hit: witness.is_some(),
        witness_param: witness,
        min_distance,
        evaluations: stats.evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRun {
    pub series: Vec<CoveragePoint>,
    pub stats: TraceStats,
    pub coverage: f64,
}

/// Traces `line` into a fresh grid and returns the coverage series and the grid.
pub fn coverage_run(line: &LineSpec, grid: VoxelGrid, cfg: &TraceConfig) -> Result<(CoverageRun, VoxelGrid)> {
    coverage_run_with(line, grid, cfg, |_| {})
}

/// As [`coverage_run`], also passing every emitted point to `observe`.
pub fn coverage_run_with<F>(
    line: &LineSpec,
    grid: VoxelGrid,
    cfg: &TraceConfig,
    mut observe: F,
) -> Result<(CoverageRun, VoxelGrid)>
where
    F: FnMut(&TracePoint),
{
    if (cfg.half_extent - grid.half_extent()).abs() > 0.0 {
        return Err(Error::Invalid("trace box and voxel grid must have the same half-width".into()));
    }
    let mut rec = CoverageRecorder::new(grid);
    let stats = adaptive_trace(line, cfg, |p| {
        rec.push(p);
        observe(p);
        ControlFlow::Continue(())
    })?;
    let (grid, series) = rec.finish();
    let coverage = grid.coverage();
    Ok((CoverageRun { series, stats, coverage }, grid))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRecord {
    pub delta: f64,
    pub grid_n: usize,
    pub valid_points: usize,
    pub hits: usize,
    pub fraction: f64,
}

/// Hit fraction of `ball` over `grid_n x grid_n` lines through the patch,
/// for the patch and each of `rungs - 1` successive halvings of its size.
pub fn epsilon_density(
    base: Point3,
    patch: &PatchSpec,
    ball: &BallSpec,
    grid_n: usize,
    budget_per_line: u64,
    rungs: usize,
) -> Result<Vec<DensityRecord>> {
    if grid_n < 16 {
        return Err(Error::Invalid(format!("grid_n must be at least 16, got {grid_n}")));
    }
    if rungs == 0 {
        return Err(Error::Invalid("need at least one rung".into()));
    }
    let mut out = Vec::with_capacity(rungs);
    let mut delta = patch.delta;
    for _ in 0..rungs {
        let p = patch.with_delta(delta)?;
        let grid = p.grid(grid_n);
        let total = grid.len();
        let valid: Vec<_> = grid.into_iter().flatten().collect();
        let skipped = total - valid.len();
        if skipped as f64 > MAX_INVALID_FRACTION * total as f64 {
            return Err(Error::Degenerate(format!(
                "{skipped} of {total} patch points lie on excluded planes"
            )));
        }
        let hits: usize = valid
            .par_iter()
            .map(|&alpha| {
                let line = LineSpec::through(base, alpha)?;
                hits_ball(&line, ball, budget_per_line).map(|r| r.hit as usize)
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        out.push(DensityRecord {
            delta,
            grid_n,
            valid_points: valid.len(),
            hits,
            fraction: hits as f64 / valid.len() as f64,
        });
        delta /= 2.0;
    }
    Ok(out)
}

/// A set that the image of an excluded line is known to stay in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Confinement {
    /// `|f| <= radius`, for horizontal lines.
    Bounded { radius: f64 },
    /// `f1 = 0`, for lines in the plane `x1 = 0`.
    PlaneX1,
    /// `f2 = 0`, for lines in the plane `x2 = 0`.
    PlaneX2,
    /// `f2 = sign f1`, for lines in the plane `x2 = sign x1`.
    Diagonal { sign: f64 },
}

impl Confinement {
    pub fn holds(&self, p: Point3) -> bool {
        match *self {
            Confinement::Bounded { radius } => p.norm() <= radius * (1.0 + 1e-12),
            Confinement::PlaneX1 => p.x1 == 0.0,
            Confinement::PlaneX2 => p.x2 == 0.0,
            Confinement::Diagonal { sign } => p.x2 == sign * p.x1,
        }
    }
}

/// The confinement that the geometry of `line` forces on its image, if any.
///
/// Covers the lines excluded from the parametrization by `Y` when the base
/// point is on the corresponding plane: horizontal lines, lines in the
/// coordinate planes `x1 = 0`, `x2 = 0`, and lines in the diagonal planes.
pub fn image_confinement(line: &LineSpec) -> Option<Confinement> {
    let (p, d) = (line.p, line.d);
    if d.x3 == 0.0 {
        return Some(Confinement::Bounded { radius: p.x3.exp().exp() });
    }
    if d.x1 == 0.0 && p.x1 == 0.0 {
        return Some(Confinement::PlaneX1);
    }
    if d.x2 == 0.0 && p.x2 == 0.0 {
        return Some(Confinement::PlaneX2);
    }
    if d.x1 == d.x2 && p.x1 == p.x2 {
        return Some(Confinement::Diagonal { sign: 1.0 });
    }
    if d.x1 == -d.x2 && p.x1 == -p.x2 {
        return Some(Confinement::Diagonal { sign: -1.0 });
    }
    None
}
