//! Placements, disk adjacency and normalized union-of-disks areas.
//!
//! The union-area distribution enters every decoding formula through its
//! moments: for `k` unit disks whose centers are uniform in the unit disk
//! `B(0, 1)`, the normalized area `alpha_k = area(union) / pi` lies in
//! `[1, 4]`. [`MomentTable`] stores Monte Carlo estimates of
//! `E[alpha_k^s]` for `k = 1..=k_max`, `s = 1..=s_max`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use thiserror::Error;

use crate::stream::{substream, tag};

/// Side of the bounding square `B_inf(0, 2)` squared: the sampling frame area.
const FRAME_AREA: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("radius must be positive and finite, got {0}")]
    NonPositiveRadius(f64),
    #[error("at least one disk center is required")]
    NoCenters,
    #[error("disk center ({x}, {y}) lies outside the unit disk")]
    CenterOutsideUnitDisk { x: f64, y: f64 },
    #[error("point ({x}, {y}) lies outside the unit square")]
    OutsideUnitSquare { x: f64, y: f64 },
    #[error("{0} must be positive")]
    ZeroCount(&'static str),
    #[error("moment table is inconsistent: {0}")]
    InvalidTable(&'static str),
}

/// A point in the plane.
///
/// Deployment positions live in the unit square `[-1/2, 1/2]^2`; use
/// [`Point2::in_unit_square`] to enforce that. Disk centers used for the
/// union-area estimator live in the unit disk instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    /// Checked constructor for deployment positions.
    pub fn in_unit_square(x: f64, y: f64) -> Result<Self, GeometryError> {
        let p = Point2 { x, y };
        if p.is_in_unit_square() {
            Ok(p)
        } else {
            Err(GeometryError::OutsideUnitSquare { x, y })
        }
    }

    pub fn is_in_unit_square(&self) -> bool {
        self.x.abs() <= 0.5 && self.y.abs() <= 0.5
    }

    #[inline]
    pub fn distance_squared(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        libm::sqrt(self.distance_squared(other))
    }

    /// Whether the point lies in the square `B_inf(0, half_side)`.
    pub fn within_square(&self, half_side: f64) -> bool {
        self.x.abs() <= half_side && self.y.abs() <= half_side
    }
}

/// Uniform point in the unit square `[-1/2, 1/2]^2`.
pub fn uniform_point<R: Rng + ?Sized>(rng: &mut R) -> Point2 {
    let x = rng.gen::<f64>() - 0.5;
    let y = rng.gen::<f64>() - 0.5;
    Point2 { x, y }
}

/// Uniform point in the unit disk `B(0, 1)`, by rejection from its square.
pub fn uniform_in_unit_disk<R: Rng + ?Sized>(rng: &mut R) -> Point2 {
    loop {
        let x = 2.0 * rng.gen::<f64>() - 1.0;
        let y = 2.0 * rng.gen::<f64>() - 1.0;
        if x * x + y * y <= 1.0 {
            return Point2 { x, y };
        }
    }
}

/// Closed-ball adjacency: `|u - b| <= r`.
pub fn is_adjacent(u: Point2, b: Point2, r: f64) -> Result<bool, GeometryError> {
    check_radius(r)?;
    Ok(u.distance_squared(&b) <= r * r)
}

pub(crate) fn check_radius(r: f64) -> Result<(), GeometryError> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::NonPositiveRadius(r))
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Estimate {
    /// Whether `target` lies within `z` standard errors of the estimate.
    pub fn within(&self, target: f64, z: f64) -> bool {
        (self.value - target).abs() <= z * self.std_err
    }
}

/// Normalized area of the union of unit disks centered at `centers`.
///
/// Samples `n_samples` points uniformly in `B_inf(0, 2)`, which contains every
/// such union, and scales the hit fraction by `16 / pi`.
pub fn disk_union_area<R: Rng + ?Sized>(
    centers: &[Point2],
    n_samples: usize,
    rng: &mut R,
) -> Result<Estimate, GeometryError> {
    if centers.is_empty() {
        return Err(GeometryError::NoCenters);
    }
    if n_samples == 0 {
        return Err(GeometryError::ZeroCount("n_samples"));
    }
    if let Some(c) = centers.iter().find(|c| c.distance_squared(&Point2::ORIGIN) > 1.0) {
        return Err(GeometryError::CenterOutsideUnitDisk { x: c.x, y: c.y });
    }

    let mut hits = 0usize;
    for _ in 0..n_samples {
        let s = Point2::new(4.0 * rng.gen::<f64>() - 2.0, 4.0 * rng.gen::<f64>() - 2.0);
        if centers.iter().any(|c| c.distance_squared(&s) <= 1.0) {
            hits += 1;
        }
    }
    Ok(hit_fraction_estimate(hits, n_samples))
}

fn hit_fraction_estimate(hits: usize, n_samples: usize) -> Estimate {
    let n = n_samples as f64;
    let frac = hits as f64 / n;
    let scale = FRAME_AREA / PI;
    Estimate {
        value: scale * frac,
        std_err: scale * libm::sqrt(frac * (1.0 - frac) / n),
    }
}

/// Estimates `alpha_1, ..., alpha_{k_max}` for one nested placement.
///
/// Draws `k_max` centers uniformly in the unit disk; `alpha_k` is the
/// normalized union area of the first `k` of them. All `k` share the same
/// sample points, so for every sample only the index of the first covering
/// disk is needed and the estimates are nondecreasing in `k`.
pub fn nested_union_areas<R: Rng + ?Sized>(
    k_max: usize,
    n_samples: usize,
    rng: &mut R,
) -> Vec<f64> {
    let centers: Vec<Point2> = (0..k_max).map(|_| uniform_in_unit_disk(rng)).collect();
    // first_hit[i] counts samples whose first covering disk is i
    let mut first_hit = vec![0usize; k_max];
    for _ in 0..n_samples {
        let s = Point2::new(4.0 * rng.gen::<f64>() - 2.0, 4.0 * rng.gen::<f64>() - 2.0);
        if s.x * s.x + s.y * s.y > 4.0 {
            continue;
        }
        if let Some(i) = centers.iter().position(|c| c.distance_squared(&s) <= 1.0) {
            first_hit[i] += 1;
        }
    }
    let mut covered = 0usize;
    first_hit
        .iter()
        .map(|&h| {
            covered += h;
            hit_fraction_estimate(covered, n_samples).value
        })
        .collect()
}

/// Largest moment order: sums of `alpha^(2s) <= 4^(2s)` stay finite for
/// up to a million placements.
pub const MAX_S: usize = 240;

/// Sampling parameters of a moment table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableSpec {
    pub k_max: usize,
    pub s_max: usize,
    pub placements_per_k: usize,
    pub samples_per_placement: usize,
    pub seed: u64,
}

impl TableSpec {
    /// `k_max = 34`, 4000 placements of 30000 samples each.
    pub const fn standard(seed: u64) -> Self {
        TableSpec {
            k_max: 34,
            s_max: 1,
            placements_per_k: 4000,
            samples_per_placement: 30_000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.k_max == 0 {
            return Err(GeometryError::ZeroCount("k_max"));
        }
        if self.s_max == 0 {
            return Err(GeometryError::ZeroCount("s_max"));
        }
        if self.s_max > MAX_S {
            return Err(GeometryError::InvalidTable("s_max above 240 overflows the moment sums"));
        }
        if self.placements_per_k == 0 {
            return Err(GeometryError::ZeroCount("placements_per_k"));
        }
        if self.samples_per_placement == 0 {
            return Err(GeometryError::ZeroCount("samples_per_placement"));
        }
        Ok(())
    }

    /// The `alpha_k` estimates of placement `index`, drawn from its own
    /// sub-stream.
    pub fn placement(&self, index: usize) -> Vec<f64> {
        let mut rng = substream(self.seed, &[tag::MOMENT_TABLE, index as u64]);
        nested_union_areas(self.k_max, self.samples_per_placement, &mut rng)
    }
}

/// Running sums of `alpha^s` over placements.
///
/// Placements must be pushed in index order for bit-identical results.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    spec: TableSpec,
    count: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(spec: TableSpec) -> Result<Self, GeometryError> {
        spec.validate()?;
        let cells = spec.k_max * spec.s_max;
        Ok(MomentAccumulator {
            spec,
            count: 0,
            sum: vec![0.0; cells],
            sum_sq: vec![0.0; cells],
        })
    }

    pub fn push(&mut self, alphas: &[f64]) {
        debug_assert_eq!(alphas.len(), self.spec.k_max);
        let s_max = self.spec.s_max;
        for (k, &a) in alphas.iter().enumerate() {
            let mut power = 1.0;
            for s in 0..s_max {
                power *= a;
                let cell = k * s_max + s;
                self.sum[cell] += power;
                self.sum_sq[cell] += power * power;
            }
        }
        self.count += 1;
    }

    pub fn finish(self) -> Result<MomentTable, GeometryError> {
        if self.count != self.spec.placements_per_k {
            return Err(GeometryError::InvalidTable("placement count mismatch"));
        }
        let n = self.count as f64;
        let s_max = self.spec.s_max;
        let mut moments = Vec::with_capacity(self.sum.len());
        let mut std_errs = Vec::with_capacity(self.sum.len());
        for (cell, (&sum, &sum_sq)) in self.sum.iter().zip(&self.sum_sq).enumerate() {
            if cell < s_max {
                // k = 1: a single unit disk, alpha_1 = 1 exactly
                moments.push(1.0);
                std_errs.push(0.0);
                continue;
            }
            let mean = sum / n;
            let var = if self.count > 1 {
                ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
            } else {
                0.0
            };
            moments.push(mean);
            std_errs.push(libm::sqrt(var / n));
        }
        MomentTable::from_parts(self.spec, moments, std_errs)
    }
}

/// Tabulates `E[alpha_k^s]` sequentially.
pub fn tabulate_moments(spec: TableSpec) -> Result<MomentTable, GeometryError> {
    let mut acc = MomentAccumulator::new(spec)?;
    for index in 0..spec.placements_per_k {
        acc.push(&spec.placement(index));
    }
    acc.finish()
}

/// Moments `E[alpha_k^s]` of the normalized union-of-disks area, with the
/// standard error of each entry.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    spec: TableSpec,
    moments: Vec<f64>,
    std_errs: Vec<f64>,
}

impl MomentTable {
    /// Builds a table from row-major `(k, s)` entries and validates it.
    pub fn from_parts(
        spec: TableSpec,
        moments: Vec<f64>,
        std_errs: Vec<f64>,
    ) -> Result<Self, GeometryError> {
        spec.validate()?;
        let cells = spec.k_max * spec.s_max;
        if moments.len() != cells || std_errs.len() != cells {
            return Err(GeometryError::InvalidTable("entry count does not match k_max * s_max"));
        }
        let table = MomentTable {
            spec,
            moments,
            std_errs,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn spec(&self) -> &TableSpec {
        &self.spec
    }

    pub fn k_max(&self) -> usize {
        self.spec.k_max
    }

    pub fn s_max(&self) -> usize {
        self.spec.s_max
    }

    /// `E[alpha_k^s]`; `s = 0` gives 1. Panics when out of range.
    pub fn moment(&self, k: usize, s: usize) -> f64 {
        assert!(k >= 1 && k <= self.spec.k_max, "k = {k} out of range");
        assert!(s <= self.spec.s_max, "s = {s} out of range");
        if s == 0 {
            1.0
        } else {
            self.moments[(k - 1) * self.spec.s_max + s - 1]
        }
    }

    /// `E[alpha_k]`.
    pub fn mean_area(&self, k: usize) -> f64 {
        self.moment(k, 1)
    }

    pub fn std_err(&self, k: usize, s: usize) -> f64 {
        assert!(k >= 1 && k <= self.spec.k_max && s >= 1 && s <= self.spec.s_max);
        self.std_errs[(k - 1) * self.spec.s_max + s - 1]
    }

    /// Row-major `(k, s)` moments.
    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    pub fn std_errs(&self) -> &[f64] {
        &self.std_errs
    }

    /// Checks the structural invariants of the area distribution: the first
    /// row is exactly one, first moments lie in `[1, 4]` and grow with `k`,
    /// and `E[a^s] <= E[a^(s+1)] <= 4 E[a^s]`.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let s_max = self.spec.s_max;
        if self.moments.iter().chain(&self.std_errs).any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidTable("non-finite entry"));
        }
        if self.std_errs.iter().any(|&v| v < 0.0) {
            return Err(GeometryError::InvalidTable("negative standard error"));
        }
        if (1..=s_max).any(|s| self.moment(1, s) != 1.0) {
            return Err(GeometryError::InvalidTable("row k = 1 must be exactly one"));
        }
        let mut prev = 1.0;
        for k in 1..=self.spec.k_max {
            let first = self.moment(k, 1);
            if !(1.0..=4.0).contains(&first) {
                return Err(GeometryError::InvalidTable("first moment outside [1, 4]"));
            }
            if first < prev {
                return Err(GeometryError::InvalidTable("first moment decreases in k"));
            }
            prev = first;
            for s in 1..s_max {
                let (lo, hi) = (self.moment(k, s), self.moment(k, s + 1));
                if hi < lo || hi > 4.0 * lo {
                    return Err(GeometryError::InvalidTable("moments violate support [1, 4]"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::substream;

    #[test]
    fn adjacency_is_closed_ball() {
        let o = Point2::ORIGIN;
        assert!(is_adjacent(o, o, 0.1).unwrap());
        assert!(!is_adjacent(o, Point2::new(0.2, 0.0), 0.1).unwrap());
        assert!(is_adjacent(o, Point2::new(0.1, 0.0), 0.1).unwrap());
        assert_eq!(
            is_adjacent(o, o, 0.0),
            Err(GeometryError::NonPositiveRadius(0.0))
        );
        assert!(is_adjacent(o, o, -1.0).is_err());
    }

    #[test]
    fn uniform_point_is_seeded() {
        let a = uniform_point(&mut substream(3, &[]));
        let b = uniform_point(&mut substream(3, &[]));
        assert_eq!(a, b);
        assert!(a.is_in_unit_square());
    }

    #[test]
    fn uniform_point_moments() {
        let mut rng = substream(11, &[]);
        let n = 1_000_000;
        let (mut sx, mut sy, mut inner) = (0.0, 0.0, 0usize);
        for _ in 0..n {
            let p = uniform_point(&mut rng);
            assert!(p.is_in_unit_square());
            sx += p.x;
            sy += p.y;
            if p.within_square(0.25) {
                inner += 1;
            }
        }
        assert!((sx / n as f64).abs() < 0.01);
        assert!((sy / n as f64).abs() < 0.01);
        assert!((inner as f64 / n as f64 - 0.25).abs() < 0.01);
    }

    #[test]
    fn square_constructor_rejects_outside() {
        assert!(Point2::in_unit_square(0.5, -0.5).is_ok());
        assert!(Point2::in_unit_square(0.51, 0.0).is_err());
    }

    #[test]
    fn union_area_single_and_coincident() {
        let one = disk_union_area(&[Point2::new(0.3, -0.4)], 100_000, &mut substream(5, &[1])).unwrap();
        assert!(one.within(1.0, 3.0), "{one:?}");
        let c = Point2::new(-0.2, 0.1);
        let two = disk_union_area(&[c, c], 100_000, &mut substream(5, &[2])).unwrap();
        assert!(two.within(1.0, 3.0), "{two:?}");
    }

    #[test]
    fn union_area_rejects_bad_input() {
        let mut rng = substream(5, &[]);
        assert_eq!(disk_union_area(&[], 10, &mut rng), Err(GeometryError::NoCenters));
        assert!(matches!(
            disk_union_area(&[Point2::new(0.9, 0.9)], 10, &mut rng),
            Err(GeometryError::CenterOutsideUnitDisk { .. })
        ));
        assert!(disk_union_area(&[Point2::ORIGIN], 0, &mut rng).is_err());
    }

    #[test]
    fn nested_areas_are_monotone() {
        let mut rng = substream(9, &[]);
        let a = nested_union_areas(12, 5000, &mut rng);
        assert_eq!(a.len(), 12);
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.iter().all(|&v| v <= 4.0 + 0.2));
    }

    #[test]
    fn k_max_one_table_is_all_ones() {
        let spec = TableSpec {
            k_max: 1,
            s_max: 4,
            placements_per_k: 3,
            samples_per_placement: 10,
            seed: 1,
        };
        let t = tabulate_moments(spec).unwrap();
        assert!(t.moments().iter().all(|&v| v == 1.0));
        assert!(t.std_errs().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_counts_rejected() {
        let mut spec = TableSpec::standard(0);
        spec.placements_per_k = 0;
        assert_eq!(
            tabulate_moments(spec),
            Err(GeometryError::ZeroCount("placements_per_k"))
        );
    }

    #[test]
    fn from_parts_validates() {
        let spec = TableSpec {
            k_max: 2,
            s_max: 1,
            placements_per_k: 1,
            samples_per_placement: 1,
            seed: 0,
        };
        assert!(MomentTable::from_parts(spec, vec![1.0, 1.5], vec![0.0, 0.01]).is_ok());
        assert!(MomentTable::from_parts(spec, vec![1.0, 0.9], vec![0.0, 0.0]).is_err());
        assert!(MomentTable::from_parts(spec, vec![1.1, 1.5], vec![0.0, 0.0]).is_err());
        assert!(MomentTable::from_parts(spec, vec![1.0], vec![0.0]).is_err());
        let spec2 = TableSpec { s_max: 2, ..spec };
        // second moment below the first
        assert!(MomentTable::from_parts(spec2, vec![1.0, 1.0, 1.5, 1.4], vec![0.0; 4]).is_err());
    }
}
