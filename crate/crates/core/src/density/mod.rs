//! Lines through `Y`, their images under `f = Z o Z`, and density experiments.

mod base;
mod experiment;
mod line;
mod trace;
mod voxel;

pub use line::{y_point_valid, BallSpec, LineSpec, PatchSpec, YFace, YPoint};
pub use trace::{
    adaptive_trace, trace_points, ParamWindow, TraceConfig, TracePoint, TraceStats,
    DEFAULT_INITIAL_INTERVALS, FIRST_STAGE_CHORD, H_DERIVATIVE_BOUND, MAX_DEPTH, MIN_BUDGET,
};
pub use voxel::{mark_and_coverage, CoveragePoint, CoverageRecorder, VoxelGrid};
pub use base::{base_sequence, BaseSequence};
pub use experiment::{
    coverage_run, coverage_run_with, epsilon_density, hits_ball, hits_ball_in, image_confinement,
    pseudorandom_y_points, Confinement, CoverageRun, DensityRecord, HitRecord, COVERAGE_SLOPE_RANGE,
    COVERAGE_U2_RANGE, COVERAGE_WINDOW, HIT_RESOLUTION, HIT_WINDOW, MAX_INVALID_FRACTION,
};
