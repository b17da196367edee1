//! Adaptive sampling of the curve `f(L)` for a line `L` and `f = Z o Z`.
//!
//! The parameter window is cut into a fixed uniform partition and each
//! piece is bisected depth-first, left to right. A piece is refined while
//! its image chord is longer than `h_max` near the box `[-R, R]^3`, or
//! while it cannot be certified to stay outside that box. Certification
//! uses the derivative bound `|Dh| <= sqrt 2`, so `|DZ(x)| <= sqrt 2 e^{x3}`.

use std::f64::consts::SQRT_2;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point3;
use crate::zorich::{zorich_unchecked, OVERFLOW_HEIGHT};

use super::line::LineSpec;

/// Upper bound on the operator norm of `Dh`, and hence on `|DZ| e^{-x3}`.
pub const H_DERIVATIVE_BOUND: f64 = SQRT_2;
pub const MAX_DEPTH: u32 = 48;
pub const MIN_BUDGET: u64 = 1000;
/// Largest first-stage chord accepted on a leaf. `f` is `2 pi`-periodic in
/// the first stage's horizontal coordinates, so image chords alone cannot
/// see a full turn.
pub const FIRST_STAGE_CHORD: f64 = std::f64::consts::FRAC_PI_4;
pub const DEFAULT_INITIAL_INTERVALS: u32 = 256;

/// The part of the line to trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParamWindow {
    /// Parameters whose point has height in `[x3_min, x3_max]`; needs a non-horizontal line.
    Height { x3_min: f64, x3_max: f64 },
    Explicit { s_min: f64, s_max: f64 },
}

impl ParamWindow {
    pub fn resolve(&self, line: &LineSpec) -> Result<(f64, f64)> {
        let (a, b) = match *self {
            ParamWindow::Explicit { s_min, s_max } => (s_min, s_max),
            ParamWindow::Height { x3_min, x3_max } => {
                if line.d.x3 == 0.0 {
                    return Err(Error::Invalid(
                        "a horizontal line needs an explicit parameter window".into(),
                    ));
                }
                let s1 = (x3_min - line.p.x3) / line.d.x3;
                let s2 = (x3_max - line.p.x3) / line.d.x3;
                (s1.min(s2), s1.max(s2))
            }
        };
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Invalid(format!("empty parameter window [{a}, {b}]")));
        }
        Ok((a, b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    /// Half-width `R` of the box of interest.
    pub half_extent: f64,
    pub h_max: f64,
    /// Maximum number of parameter samples evaluated.
    pub budget: u64,
    pub window: ParamWindow,
    pub initial_intervals: u32,
    pub max_depth: u32,
}

impl TraceConfig {
    pub fn new(half_extent: f64, h_max: f64, budget: u64, window: ParamWindow) -> Self {
        Self {
            half_extent,
            h_max,
            budget,
            window,
            initial_intervals: DEFAULT_INITIAL_INTERVALS,
            max_depth: MAX_DEPTH,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.half_extent > 0.0) || !self.half_extent.is_finite() {
            return Err(Error::Invalid(format!("box half-width must be positive, got {}", self.half_extent)));
        }
        if !(self.h_max > 0.0) {
            return Err(Error::Invalid(format!("h_max must be positive, got {}", self.h_max)));
        }
        if self.budget < MIN_BUDGET {
            return Err(Error::Invalid(format!("budget must be at least {MIN_BUDGET}, got {}", self.budget)));
        }
        if self.initial_intervals == 0 || self.max_depth > 60 {
            return Err(Error::Invalid("initial_intervals must be positive and max_depth <= 60".into()));
        }
        Ok(())
    }

    /// First-stage height above which `|f| > 2 e R` is certain.
    pub fn skip_height(&self) -> f64 {
        (2.0 * self.half_extent).ln() + 1.0
    }
}

/// An emitted sample of the curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub s: f64,
    pub value: Point3,
    pub in_box: bool,
    /// The leaf interval ending here stopped at the depth cap.
    pub capped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceStats {
    pub evaluations: u64,
    pub emitted: u64,
    pub emitted_in_box: u64,
    pub leaves: u64,
    pub capped_leaves: u64,
    /// Samples whose first stage exceeded the overflow height; dropped.
    pub overflow_dropped: u64,
    pub budget_exhausted: bool,
    pub stopped_early: bool,
    /// Consecutive in-box points more than `h_max` apart on uncapped leaves.
    pub audit_violations: u64,
}

impl TraceStats {
    pub fn cap_hit_fraction(&self) -> f64 {
        if self.leaves == 0 {
            0.0
        } else {
            self.capped_leaves as f64 / self.leaves as f64
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    s: f64,
    x3: f64,
    z: Point3,
    f: Option<Point3>,
    /// Lower bound on the distance from `f` to the box.
    box_gap: f64,
}

fn box_distance(p: Point3, r: f64) -> f64 {
    let dx = (p.x1.abs() - r).max(0.0);
    let dy = (p.x2.abs() - r).max(0.0);
    let dz = (p.x3.abs() - r).max(0.0);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

struct Tracer<'a> {
    line: &'a LineSpec,
    cfg: &'a TraceConfig,
    skip_height: f64,
    dnorm: f64,
    stats: TraceStats,
    last_in_box: Option<Point3>,
}

impl<'a> Tracer<'a> {
    fn eval(&mut self, s: f64) -> Option<Sample> {
        self.stats.evaluations += 1;
        let x = self.line.at(s);
        if !(x.x3 <= OVERFLOW_HEIGHT) {
            self.stats.overflow_dropped += 1;
            return None;
        }
        let z = zorich_unchecked(x);
        let r = self.cfg.half_extent;
        if z.x3 > self.skip_height {
            // |f| = e^{z3}
            let gap = (z.x3.exp() - 3f64.sqrt() * r).max(0.0);
            return Some(Sample { s, x3: x.x3, z, f: None, box_gap: gap });
        }
        let f = zorich_unchecked(z);
        Some(Sample { s, x3: x.x3, z, f: Some(f), box_gap: box_distance(f, r) })
    }

    fn emit<F>(&mut self, smp: &Sample, capped: bool, sink: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&TracePoint) -> ControlFlow<()>,
    {
        let Some(f) = smp.f else {
            self.last_in_box = None;
            return ControlFlow::Continue(());
        };
        let in_box = smp.box_gap == 0.0;
        if in_box {
            if let Some(prev) = self.last_in_box {
                if !capped && prev.distance(f) > self.cfg.h_max {
                    self.stats.audit_violations += 1;
                }
            }
            self.last_in_box = Some(f);
            self.stats.emitted_in_box += 1;
        } else {
            self.last_in_box = None;
        }
        self.stats.emitted += 1;
        sink(&TracePoint { s: smp.s, value: f, in_box, capped })
    }

    /// `Some(capped)` when `[a, b]` is a leaf.
    fn leaf(&self, a: &Sample, b: &Sample, depth: u32) -> Option<bool> {
        // at float resolution the rounding error of the samples exceeds the
        // Lipschitz bounds below, so nothing can be certified
        let mid = 0.5 * (a.s + b.s);
        if !(mid > a.s && mid < b.s) {
            return Some(true);
        }
        let len = b.s - a.s;
        // speed of the first stage along the line
        let lz = H_DERIVATIVE_BOUND * a.x3.max(b.x3).exp() * self.dnorm;
        // the first stage stays above the skip height
        if 0.5 * (a.z.x3 + b.z.x3 - lz * len) > self.skip_height {
            return Some(false);
        }
        let zmax = 0.5 * (a.z.x3 + b.z.x3 + lz * len);
        // the image stays in a ball of diameter h_max around the origin
        if zmax.exp() <= 0.5 * self.cfg.h_max {
            return Some(false);
        }
        // the image stays outside the box
        if zmax <= OVERFLOW_HEIGHT {
            let lf = H_DERIVATIVE_BOUND * zmax.exp() * lz;
            if 0.5 * (a.box_gap + b.box_gap - lf * len) > 0.0 {
                return Some(false);
            }
        }
        if let (Some(fa), Some(fb)) = (a.f, b.f) {
            if fa.distance(fb) <= self.cfg.h_max && a.z.distance(b.z) <= FIRST_STAGE_CHORD {
                return Some(false);
            }
        }
        if depth >= self.cfg.max_depth {
            return Some(true);
        }
        None
    }
}

/// Traces `f(L)` over the configured window, passing each emitted point to
/// `sink` in increasing parameter order. The sink may stop the trace early.
pub fn adaptive_trace<F>(line: &LineSpec, cfg: &TraceConfig, mut sink: F) -> Result<TraceStats>
where
    F: FnMut(&TracePoint) -> ControlFlow<()>,
{
    cfg.validate()?;
    let (s_lo, s_hi) = cfg.window.resolve(line)?;
    let mut t = Tracer {
        line,
        cfg,
        skip_height: cfg.skip_height(),
        dnorm: line.d.norm(),
        stats: TraceStats::default(),
        last_in_box: None,
    };
    let n0 = cfg.initial_intervals as usize;
    let knot = |k: usize| s_lo + (s_hi - s_lo) * k as f64 / n0 as f64;

    let mut left = t.eval(knot(0));
    if let Some(a) = &left {
        if t.emit(a, false, &mut sink).is_break() {
            t.stats.stopped_early = true;
            return Ok(t.stats);
        }
    }
    let mut stack: Vec<(Sample, Sample, u32)> = Vec::with_capacity(2 * MAX_DEPTH as usize + 2);
    'outer: for k in 1..=n0 {
        if t.stats.evaluations >= cfg.budget {
            t.stats.budget_exhausted = true;
            break;
        }
        let right = t.eval(knot(k));
        match (left, right) {
            (Some(a), Some(b)) => stack.push((a, b, 0)),
            (_, Some(b)) => {
                // no left sample: the interval is past the overflow height
                if t.emit(&b, false, &mut sink).is_break() {
                    t.stats.stopped_early = true;
                    break 'outer;
                }
            }
            _ => {}
        }
        while let Some((a, b, depth)) = stack.pop() {
            match t.leaf(&a, &b, depth) {
                Some(capped) => {
                    t.stats.leaves += 1;
                    if capped {
                        t.stats.capped_leaves += 1;
                    }
                    if t.emit(&b, capped, &mut sink).is_break() {
                        t.stats.stopped_early = true;
                        break 'outer;
                    }
                }
                None => {
                    if t.stats.evaluations >= cfg.budget {
                        t.stats.budget_exhausted = true;
                        break 'outer;
                    }
                    let Some(m) = t.eval(0.5 * (a.s + b.s)) else {
                        t.stats.leaves += 1;
                        continue;
                    };
                    stack.push((m, b, depth + 1));
                    stack.push((a, m, depth + 1));
                }
            }
        }
        left = right;
    }
    Ok(t.stats)
}

/// Collects the emitted points of a trace.
pub fn trace_points(line: &LineSpec, cfg: &TraceConfig) -> Result<(Vec<TracePoint>, TraceStats)> {
    let mut pts = Vec::new();
    let stats = adaptive_trace(line, cfg, |p| {
        pts.push(*p);
        ControlFlow::Continue(())
    })?;
    Ok((pts, stats))
}
