//! Pointwise Lipschitz constants, relative distortion and the measure
//! transport inequality, estimated by finite differences.
//!
//! Maps are closures from a domain point (`[f64; 2]` for surface maps,
//! `[f64; 3]` for solid maps) to a point of space.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{PlanePoint, Point3};
use crate::sampling::{circle_directions, fibonacci_sphere, RSequence};
use crate::zorich::{branch_distance, h_extended, zorich};

/// Finite-difference radius used unless a caller overrides it.
pub const DEFAULT_RADIUS: f64 = 1e-5;
pub const DEFAULT_DIRECTIONS: usize = 64;
pub const MIN_DIRECTIONS: usize = 32;
/// Smallest lower Lipschitz estimate accepted as nondegenerate.
pub const LOWER_FLOOR: f64 = 1e-14;
/// Relative slack on the slab bound.
pub const SLAB_TOLERANCE: f64 = 0.01;
/// Relative inflation of `lambda` in the transport check.
pub const TRANSPORT_INFLATION: f64 = 0.02;
/// Minimum number of cells for mapped-cell image measures.
pub const MIN_MEASURE_CELLS: usize = 1_000_000;

const LAMBDA_RADIUS: f64 = 1e-6;

/// A point type that finite differences can be taken in.
pub trait Domain: Copy + Send + Sync + 'static {
    const DIM: usize;
    fn directions(n: usize) -> Vec<Self>;
    fn offset(self, dir: Self, r: f64) -> Self;
}

impl Domain for [f64; 2] {
    const DIM: usize = 2;
    fn directions(n: usize) -> Vec<Self> {
        circle_directions(n)
    }
    fn offset(self, d: Self, r: f64) -> Self {
        [self[0] + r * d[0], self[1] + r * d[1]]
    }
}

impl Domain for [f64; 3] {
    const DIM: usize = 3;
    fn directions(n: usize) -> Vec<Self> {
        fibonacci_sphere(n)
    }
    fn offset(self, d: Self, r: f64) -> Self {
        [self[0] + r * d[0], self[1] + r * d[1], self[2] + r * d[2]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzSample {
    pub upper: f64,
    pub lower: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionEstimate {
    pub sup_upper: f64,
    pub inf_lower: f64,
    pub d: f64,
    pub sample_count: usize,
    pub radius: f64,
}

fn check_params(radius: f64, n_dirs: usize) -> Result<()> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Invalid(format!("radius must be positive, got {radius}")));
    }
    if n_dirs < MIN_DIRECTIONS {
        return Err(Error::Invalid(format!(
            "need at least {MIN_DIRECTIONS} directions, got {n_dirs}"
        )));
    }
    Ok(())
}

fn lipschitz_with<D, F>(map: &F, x: D, radius: f64, dirs: &[D]) -> Result<LipschitzSample>
where
    D: Domain,
    F: Fn(D) -> Result<Point3> + ?Sized,
{
    let fx = map(x)?;
    let mut upper = 0.0f64;
    let mut lower = f64::INFINITY;
    for &v in dirs {
        let q = (map(x.offset(v, radius))? - fx).norm() / radius;
        upper = upper.max(q);
        lower = lower.min(q);
    }
    if !(lower >= LOWER_FLOOR) || !upper.is_finite() {
        return Err(Error::Degenerate(format!(
            "lower Lipschitz estimate {lower:e} (upper {upper:e}): map is locally degenerate"
        )));
    }
    Ok(LipschitzSample { upper, lower })
}

/// Largest and smallest difference quotient over `n_dirs` directions at radius `radius`.
pub fn pointwise_lipschitz<D, F>(map: &F, x: D, radius: f64, n_dirs: usize) -> Result<LipschitzSample>
where
    D: Domain,
    F: Fn(D) -> Result<Point3> + ?Sized,
{
    check_params(radius, n_dirs)?;
    lipschitz_with(map, x, radius, &D::directions(n_dirs))
}

/// `D = sup upper / inf lower` over the sample points.
pub fn relative_distortion<D, F>(
    map: &F,
    samples: &[D],
    radius: f64,
    n_dirs: usize,
) -> Result<DistortionEstimate>
where
    D: Domain,
    F: Fn(D) -> Result<Point3> + Sync + ?Sized,
{
    check_params(radius, n_dirs)?;
    if samples.is_empty() {
        return Err(Error::Invalid("no sample points".into()));
    }
    let dirs = D::directions(n_dirs);
    let (sup_upper, inf_lower) = samples
        .par_iter()
        .map(|&x| lipschitz_with(map, x, radius, &dirs).map(|s| (s.upper, s.lower)))
        .try_reduce(|| (0.0, f64::INFINITY), |a, b| Ok((a.0.max(b.0), a.1.min(b.1))))?;
    Ok(DistortionEstimate {
        sup_upper,
        inf_lower,
        d: sup_upper / inf_lower,
        sample_count: samples.len(),
        radius,
    })
}

fn h_map(x: [f64; 2]) -> Result<Point3> {
    Ok(h_extended(PlanePoint::new(x[0], x[1])).to_point())
}

/// Estimate of the bi-Lipschitz constant of `h` on the square: the largest
/// `max(upper, 1/lower)` over a `grid_n x grid_n` cell-centred grid.
pub fn lambda_h_estimate(grid_n: usize) -> Result<f64> {
    if grid_n < 64 {
        return Err(Error::Invalid(format!("grid_n must be at least 64, got {grid_n}")));
    }
    let dirs = <[f64; 2]>::directions(DEFAULT_DIRECTIONS);
    let step = 2.0 * FRAC_PI_2 / grid_n as f64;
    let worst = (0..grid_n * grid_n)
        .into_par_iter()
        .map(|k| {
            let x = [
                -FRAC_PI_2 + ((k / grid_n) as f64 + 0.5) * step,
                -FRAC_PI_2 + ((k % grid_n) as f64 + 0.5) * step,
            ];
            lipschitz_with(&h_map, x, LAMBDA_RADIUS, &dirs).map(|s| s.upper.max(1.0 / s.lower))
        })
        .try_reduce(|| 1.0f64, |a, b| Ok(a.max(b)))?;
    Ok(worst.max(1.0))
}

/// The horizontal slab `t1 < x3 < t2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slab {
    pub t1: f64,
    pub t2: f64,
}

impl Slab {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        if !(t1 < t2) || !t1.is_finite() || !t2.is_finite() {
            return Err(Error::Domain(format!("slab needs t1 < t2, got ({t1}, {t2})")));
        }
        Ok(Self { t1, t2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabReport {
    pub d_est: f64,
    pub bound: f64,
    pub lambda: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Options for [`verify_slab_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabOptions {
    pub radius: f64,
    pub n_dirs: usize,
    /// Relative slack on `lambda^2 e^{t2 - t1}`.
    pub tolerance: f64,
}

impl Default for SlabOptions {
    fn default() -> Self {
        Self { radius: DEFAULT_RADIUS, n_dirs: DEFAULT_DIRECTIONS, tolerance: SLAB_TOLERANCE }
    }
}

/// Quasi-random points of the slab over one period cell, at branch distance
/// above `margin`.
pub fn slab_samples(slab: &Slab, n: usize, margin: f64) -> Vec<[f64; 3]> {
    let seq = RSequence::<3>::new();
    let mut out = Vec::with_capacity(n);
    let mut k = 0u64;
    while out.len() < n {
        let u = seq.point(k);
        k += 1;
        let x = [
            -FRAC_PI_2 + 4.0 * FRAC_PI_2 * u[0],
            -FRAC_PI_2 + 2.0 * FRAC_PI_2 * u[1],
            slab.t1 + (slab.t2 - slab.t1) * u[2],
        ];
        if branch_distance(Point3::from(x)) > margin {
            out.push(x);
        }
    }
    out
}

/// Checks `D(Z, slab) <= lambda^2 e^{t2 - t1}` up to the relative tolerance.
pub fn verify_slab_bound(
    slab: &Slab,
    n_samples: usize,
    lambda: f64,
    opts: &SlabOptions,
) -> Result<SlabReport> {
    if n_samples < 1000 {
        return Err(Error::Invalid(format!("need at least 1000 samples, got {n_samples}")));
    }
    if !(slab.t2 - slab.t1 <= 20.0) {
        return Err(Error::Invalid("slab thickness must be at most 20".into()));
    }
    if !(lambda >= 1.0) {
        return Err(Error::Invalid(format!("lambda must be >= 1, got {lambda}")));
    }
    let samples = slab_samples(slab, n_samples, 10.0 * opts.radius);
    let z = |x: [f64; 3]| zorich(Point3::from(x));
    let est = relative_distortion(&z, &samples, opts.radius, opts.n_dirs)?;
    let bound = lambda * lambda * (slab.t2 - slab.t1).exp() * (1.0 + opts.tolerance);
    Ok(SlabReport { d_est: est.d, bound, lambda, samples: n_samples, pass: est.d <= bound })
}

/// An axis-aligned box of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion<const N: usize> {
    #[serde(with = "serde_arrays")]
    pub lo: [f64; N],
    #[serde(with = "serde_arrays")]
    pub hi: [f64; N],
}

mod serde_arrays {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(a: &[f64; N], s: S) -> Result<S::Ok, S::Error> {
        a.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[f64; N], D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        v.try_into().map_err(|_| serde::de::Error::custom(format!("expected {N} values")))
    }
}

impl<const N: usize> BoxRegion<N> {
    pub fn new(lo: [f64; N], hi: [f64; N]) -> Result<Self> {
        if lo.iter().zip(hi.iter()).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::Domain(format!("empty or unbounded box {lo:?} .. {hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    pub fn measure(&self) -> f64 {
        self.lo.iter().zip(self.hi.iter()).map(|(a, b)| b - a).product()
    }

    pub fn contains_box(&self, other: &BoxRegion<N>) -> bool {
        (0..N).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    /// Lattice point `idx` of a `k^N` lattice of cell corners.
    fn lattice(&self, idx: [usize; N], k: usize) -> [f64; N] {
        let mut x = [0.0; N];
        for i in 0..N {
            x[i] = self.lo[i] + (self.hi[i] - self.lo[i]) * idx[i] as f64 / k as f64;
        }
        x
    }

    /// Cell centres of a `k^N` grid.
    pub fn grid(&self, k: usize) -> Vec<[f64; N]> {
        let total = k.pow(N as u32);
        (0..total)
            .map(|mut c| {
                let mut x = [0.0; N];
                for (i, xi) in x.iter_mut().enumerate() {
                    let j = c % k;
                    c /= k;
                    *xi = self.lo[i] + (self.hi[i] - self.lo[i]) * (j as f64 + 0.5) / k as f64;
                }
                x
            })
            .collect()
    }
}

fn evaluate_lattice<const N: usize, F>(map: &F, region: &BoxRegion<N>, k: usize) -> Result<Vec<Point3>>
where
    F: Fn([f64; N]) -> Result<Point3> + Sync + ?Sized,
{
    let side = k + 1;
    let total = side.pow(N as u32);
    (0..total)
        .into_par_iter()
        .map(|mut c| {
            let mut idx = [0usize; N];
            for slot in idx.iter_mut() {
                *slot = c % side;
                c /= side;
            }
            map(region.lattice(idx, k))
        })
        .collect()
}

/// Volume of the image of a box under a solid map: each grid cell is split
/// into six tetrahedra along its main diagonal and the mapped tetrahedra
/// are summed.
pub fn mapped_cell_volume<F>(map: &F, region: &BoxRegion<3>, cells: usize) -> Result<f64>
where
    F: Fn([f64; 3]) -> Result<Point3> + Sync + ?Sized,
{
    let k = (cells as f64).cbrt().ceil() as usize;
    let v = evaluate_lattice(map, region, k)?;
    let s = k + 1;
    let at = |i: usize, j: usize, l: usize| v[i + s * (j + s * l)];
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let total: f64 = (0..k * k * k)
        .into_par_iter()
        .map(|c| {
            let (i, j, l) = (c % k, (c / k) % k, c / (k * k));
            let p0 = at(i, j, l);
            let p7 = at(i + 1, j + 1, l + 1);
            let mut vol = 0.0;
            for perm in PERMS {
                let mut idx = [i, j, l];
                idx[perm[0]] += 1;
                let a = at(idx[0], idx[1], idx[2]);
                idx[perm[1]] += 1;
                let b = at(idx[0], idx[1], idx[2]);
                vol += (a - p0).cross(b - p0).dot(p7 - p0).abs() / 6.0;
            }
            vol
        })
        .sum();
    Ok(total)
}

/// Area of the image of a box under a surface map, by two mapped triangles per cell.
pub fn mapped_cell_area<F>(map: &F, region: &BoxRegion<2>, cells: usize) -> Result<f64>
where
    F: Fn([f64; 2]) -> Result<Point3> + Sync + ?Sized,
{
    let k = (cells as f64).sqrt().ceil() as usize;
    let v = evaluate_lattice(map, region, k)?;
    let s = k + 1;
    let at = |i: usize, j: usize| v[i + s * j];
    let total: f64 = (0..k * k)
        .into_par_iter()
        .map(|c| {
            let (i, j) = (c % k, c / k);
            let (a, b, cc, d) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            0.5 * ((b - a).cross(cc - a).norm() + (cc - a).cross(d - a).norm())
        })
        .sum();
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportReport {
    pub dim: usize,
    /// `lambda` used in the bounds, after inflation.
    pub lambda: f64,
    pub distortion: f64,
    pub domain_ratio: f64,
    pub image_ratio: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOptions {
    /// Points per axis at which the distortion is estimated.
    pub samples_per_axis: usize,
    pub radius: f64,
    pub n_dirs: usize,
    pub inflation: f64,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self {
            samples_per_axis: 12,
            radius: DEFAULT_RADIUS,
            n_dirs: DEFAULT_DIRECTIONS,
            inflation: TRANSPORT_INFLATION,
        }
    }
}

/// Checks `m(U)/m(E) / lambda^n <= m(f U)/m(f E) <= lambda^n m(U)/m(E)` with
/// `lambda = D(f, E)` measured on a grid and inflated by `opts.inflation`.
///
/// `image_measure` returns the measure of the image of a box.
pub fn verify_area_transport<const N: usize, F, M>(
    map: &F,
    e: &BoxRegion<N>,
    u: &BoxRegion<N>,
    image_measure: M,
    opts: &TransportOptions,
) -> Result<TransportReport>
where
    [f64; N]: Domain,
    F: Fn([f64; N]) -> Result<Point3> + Sync + ?Sized,
    M: Fn(&F, &BoxRegion<N>) -> Result<f64>,
{
    if !e.contains_box(u) {
        return Err(Error::Domain("U must be contained in E".into()));
    }
    let samples = e.grid(opts.samples_per_axis);
    let est = relative_distortion(map, &samples, opts.radius, opts.n_dirs)?;
    let lambda = est.d * (1.0 + opts.inflation);
    let ln = lambda.powi(N as i32);
    let domain_ratio = u.measure() / e.measure();
    let fe = image_measure(map, e)?;
    let fu = image_measure(map, u)?;
    if !(fe > 0.0) {
        return Err(Error::Degenerate("image of E has zero measure".into()));
    }
    let image_ratio = fu / fe;
    let lower_bound = domain_ratio / ln;
    let upper_bound = domain_ratio * ln;
    Ok(TransportReport {
        dim: N,
        lambda,
        distortion: est.d,
        domain_ratio,
        image_ratio,
        lower_bound,
        upper_bound,
        pass: lower_bound <= image_ratio && image_ratio <= upper_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn identity3(x: [f64; 3]) -> Result<Point3> {
        Ok(Point3::from(x))
    }

    #[test]
    fn identity_and_scaling() {
        let s = pointwise_lipschitz(&identity3, [0.3, -1.0, 2.0], 1e-3, 64).unwrap();
        assert_relative_eq!(s.upper, 1.0, max_relative = 1e-12);
        assert_relative_eq!(s.lower, 1.0, max_relative = 1e-12);
        let triple = |x: [f64; 3]| Ok(Point3::from(x) * 3.0);
        let s = pointwise_lipschitz(&triple, [1.0, 2.0, 3.0], 1e-4, 32).unwrap();
        assert_relative_eq!(s.upper, 3.0, max_relative = 1e-10);
        assert_relative_eq!(s.lower, 3.0, max_relative = 1e-10);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(pointwise_lipschitz(&identity3, [0.0; 3], 0.0, 64).is_err());
        assert!(pointwise_lipschitz(&identity3, [0.0; 3], 1e-3, 16).is_err());
        let constant = |_: [f64; 3]| Ok(Point3::ORIGIN);
        assert!(matches!(
            pointwise_lipschitz(&constant, [0.0; 3], 1e-3, 32),
            Err(Error::Degenerate(_))
        ));
        let empty: Vec<[f64; 3]> = vec![];
        assert!(relative_distortion(&identity3, &empty, 1e-3, 32).is_err());
    }

    #[test]
    fn distortion_of_linear_maps_is_one() {
        let pts = BoxRegion::new([0.0; 3], [1.0; 3]).unwrap().grid(4);
        let double = |x: [f64; 3]| Ok(Point3::from(x) * 2.0);
        let est = relative_distortion(&double, &pts, 1e-4, 64).unwrap();
        assert_relative_eq!(est.d, 1.0, max_relative = 1e-10);
        assert_eq!(est.sample_count, 64);
    }

    #[test]
    fn zorich_at_origin_within_lambda() {
        let lambda = lambda_h_estimate(64).unwrap();
        let z = |x: [f64; 3]| zorich(Point3::from(x));
        let s = pointwise_lipschitz(&z, [0.0; 3], 1e-5, 64).unwrap();
        assert!(s.lower >= 1.0 / lambda);
        assert!(s.upper <= lambda * 1e-5f64.exp());
    }

    #[test]
    fn lambda_h_is_finite_and_at_least_one() {
        let l = lambda_h_estimate(64).unwrap();
        // the infimum of the lower constant, about 0.30, is approached at the corners
        assert!((3.0..3.5).contains(&l), "{l}");
        assert!(lambda_h_estimate(10).is_err());
    }

    #[test]
    fn slab_bound_formula() {
        let slab = Slab::new(0.0, 1.0).unwrap();
        let r = verify_slab_bound(&slab, 1000, 1.2, &SlabOptions::default()).unwrap();
        assert_relative_eq!(r.bound, 1.44 * 1f64.exp() * 1.01, max_relative = 1e-14);
        assert!(Slab::new(1.0, 1.0).is_err());
    }

    #[test]
    fn mapped_cells_are_exact_for_affine_maps() {
        let b = BoxRegion::new([0.0, 1.0, -1.0], [1.0, 2.0, 0.5]).unwrap();
        let affine = |x: [f64; 3]| Ok(Point3::new(2.0 * x[0] + x[1], x[1], 3.0 * x[2] - x[0]));
        let v = mapped_cell_volume(&affine, &b, 1000).unwrap();
        assert_relative_eq!(v, 6.0 * b.measure(), max_relative = 1e-12);
        let sq = BoxRegion::new([0.0, 0.0], [2.0, 1.0]).unwrap();
        let embed = |x: [f64; 2]| Ok(Point3::new(x[0], x[1], x[0] + x[1]));
        let a = mapped_cell_area(&embed, &sq, 100).unwrap();
        assert_relative_eq!(a, 2.0 * 3f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn transport_for_doubling_map() {
        let e = BoxRegion::new([0.0; 3], [1.0; 3]).unwrap();
        let u = BoxRegion::new([0.0; 3], [0.5, 1.0, 1.0]).unwrap();
        let double = |x: [f64; 3]| Ok(Point3::from(x) * 2.0);
        let r = verify_area_transport(
            &double,
            &e,
            &u,
            |m, b| mapped_cell_volume(m, b, 8000),
            &TransportOptions::default(),
        )
        .unwrap();
        assert!(r.pass);
        assert_relative_eq!(r.image_ratio, 0.5, max_relative = 1e-12);
    }
}
