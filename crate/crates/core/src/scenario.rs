//! One slot's network realization and its decoding graph.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use thiserror::Error;

use crate::geometry::{uniform_point, Point2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("number of users must be positive")]
    NoUsers,
    #[error("number of base stations must be positive")]
    NoStations,
    #[error("radius must lie in (0, 1/4], got {0}")]
    RadiusOutOfRange(f64),
    #[error("activation probability must lie in (0, 1], got {0}")]
    ProbabilityOutOfRange(f64),
    #[error("expected {expected} {what}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("position ({x}, {y}) lies outside the unit square")]
    OutsideUnitSquare { x: f64, y: f64 },
    #[error("user index {0} out of range")]
    UserOutOfRange(usize),
    #[error("degree {d} outside 0..={max}")]
    DegreeOutOfRange { d: usize, max: usize },
    #[error("disk probability {0} outside [0, 1]")]
    DiskProbabilityOutOfRange(f64),
    #[error("{0} must be nonnegative and finite")]
    InvalidMean(&'static str),
    #[error("epsilon must lie in (0, 1), got {0}")]
    EpsilonOutOfRange(f64),
}

/// System size and geometry: `n` users, `m` stations, radius `r`, activation
/// probability `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    n: usize,
    m: usize,
    r: f64,
    p: f64,
}

impl SystemParams {
    pub fn new(n: usize, m: usize, r: f64, p: f64) -> Result<Self, ScenarioError> {
        if n == 0 {
            return Err(ScenarioError::NoUsers);
        }
        if m == 0 {
            return Err(ScenarioError::NoStations);
        }
        if !(r > 0.0 && r <= 0.25) {
            return Err(ScenarioError::RadiusOutOfRange(r));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(ScenarioError::ProbabilityOutOfRange(p));
        }
        Ok(SystemParams { n, m, r, p })
    }

    /// Radius giving mean user degree `lambda = m r^2 pi`.
    pub fn radius_for_lambda(lambda: f64, m: usize) -> f64 {
        libm::sqrt(lambda / (m as f64 * PI))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Area of one coverage disk, `r^2 pi`.
    pub fn disk_area(&self) -> f64 {
        self.r * self.r * PI
    }

    /// Normalized load `G = n p / m`.
    pub fn load(&self) -> f64 {
        self.n as f64 * self.p / self.m as f64
    }

    /// `lambda = m r^2 pi`.
    pub fn lambda(&self) -> f64 {
        self.m as f64 * self.disk_area()
    }

    /// `psi = n p r^2 pi`.
    pub fn psi(&self) -> f64 {
        self.n as f64 * self.p * self.disk_area()
    }

    /// Half side of the nominal square `B_inf(0, 1/2 - 2r)`.
    pub fn nominal_half_side(&self) -> f64 {
        0.5 - 2.0 * self.r
    }

    pub fn is_nominal(&self, q: &Point2) -> bool {
        q.within_square(self.nominal_half_side())
    }

    /// Probability `8r - 16r^2` of a boundary placement.
    pub fn boundary_probability(&self) -> f64 {
        8.0 * self.r - 16.0 * self.r * self.r
    }
}

/// Positions and activation of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInstance {
    pub params: SystemParams,
    pub user_positions: Vec<Point2>,
    pub station_positions: Vec<Point2>,
    pub active: Vec<bool>,
}

impl NetworkInstance {
    /// Assembles an instance from explicit positions, checking lengths and
    /// that every position lies in the unit square.
    pub fn from_parts(
        params: SystemParams,
        user_positions: Vec<Point2>,
        station_positions: Vec<Point2>,
        active: Vec<bool>,
    ) -> Result<Self, ScenarioError> {
        check_len("user positions", params.n, user_positions.len())?;
        check_len("station positions", params.m, station_positions.len())?;
        check_len("activation flags", params.n, active.len())?;
        if let Some(q) = user_positions
            .iter()
            .chain(&station_positions)
            .find(|q| !q.is_in_unit_square())
        {
            return Err(ScenarioError::OutsideUnitSquare { x: q.x, y: q.y });
        }
        Ok(NetworkInstance {
            params,
            user_positions,
            station_positions,
            active,
        })
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Same placement, different activation mask.
    pub fn with_mask(&self, active: Vec<bool>) -> Result<Self, ScenarioError> {
        check_len("activation flags", self.params.n, active.len())?;
        Ok(NetworkInstance {
            active,
            ..self.clone()
        })
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), ScenarioError> {
    if expected == got {
        Ok(())
    } else {
        Err(ScenarioError::LengthMismatch {
            what,
            expected,
            got,
        })
    }
}

/// Draws user positions, then station positions, then activation flags.
pub fn generate_instance<R: Rng + ?Sized>(params: SystemParams, rng: &mut R) -> NetworkInstance {
    let user_positions: Vec<Point2> = (0..params.n).map(|_| uniform_point(rng)).collect();
    let station_positions: Vec<Point2> = (0..params.m).map(|_| uniform_point(rng)).collect();
    let active: Vec<bool> = (0..params.n).map(|_| rng.gen::<f64>() < params.p).collect();
    NetworkInstance {
        params,
        user_positions,
        station_positions,
        active,
    }
}

/// Station/active-user incidence.
///
/// `station_neighbors[l]` holds the active users heard by station `l`, in
/// increasing order; `user_neighbors[i]` holds the stations hearing user `i`
/// and is empty for inactive users.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    station_neighbors: Vec<Vec<usize>>,
    user_neighbors: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    /// Builds the graph from per-station user lists over `n_users` users.
    pub fn from_station_lists(
        n_users: usize,
        mut station_neighbors: Vec<Vec<usize>>,
    ) -> Result<Self, ScenarioError> {
        let mut user_neighbors = vec![Vec::new(); n_users];
        for (l, users) in station_neighbors.iter_mut().enumerate() {
            users.sort_unstable();
            users.dedup();
            for &i in users.iter() {
                user_neighbors
                    .get_mut(i)
                    .ok_or(ScenarioError::UserOutOfRange(i))?
                    .push(l);
            }
        }
        Ok(BipartiteGraph {
            station_neighbors,
            user_neighbors,
        })
    }

    pub fn station_neighbors(&self) -> &[Vec<usize>] {
        &self.station_neighbors
    }

    pub fn user_neighbors(&self) -> &[Vec<usize>] {
        &self.user_neighbors
    }

    pub fn n_users(&self) -> usize {
        self.user_neighbors.len()
    }

    pub fn n_stations(&self) -> usize {
        self.station_neighbors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.station_neighbors.iter().map(Vec::len).sum()
    }

    /// Users with at least one incident edge.
    pub fn is_covered(&self, user: usize) -> bool {
        !self.user_neighbors[user].is_empty()
    }

    /// Keeps only the edges of users flagged in `active`.
    pub fn restrict(&self, active: &[bool]) -> BipartiteGraph {
        let station_neighbors = self
            .station_neighbors
            .iter()
            .map(|users| users.iter().copied().filter(|&i| active[i]).collect())
            .collect();
        let user_neighbors = self
            .user_neighbors
            .iter()
            .zip(active)
            .map(|(stations, &a)| if a { stations.clone() } else { Vec::new() })
            .collect();
        BipartiteGraph {
            station_neighbors,
            user_neighbors,
        }
    }
}

/// Decoding graph of `instance`: exhaustive distance test between every
/// station and every active user.
pub fn build_adjacency(instance: &NetworkInstance) -> BipartiteGraph {
    adjacency_for(instance, |i| instance.active[i])
}

/// Graph as if every user were active, for re-use under many masks via
/// [`BipartiteGraph::restrict`].
pub fn build_full_adjacency(instance: &NetworkInstance) -> BipartiteGraph {
    adjacency_for(instance, |_| true)
}

fn adjacency_for(instance: &NetworkInstance, include: impl Fn(usize) -> bool) -> BipartiteGraph {
    let r2 = instance.params.r * instance.params.r;
    let n = instance.user_positions.len();
    let included: Vec<usize> = (0..n).filter(|&i| include(i)).collect();
    let mut user_neighbors = vec![Vec::new(); n];
    let station_neighbors = instance
        .station_positions
        .iter()
        .enumerate()
        .map(|(l, b)| {
            let mut users = Vec::new();
            for &i in &included {
                if instance.user_positions[i].distance_squared(b) <= r2 {
                    users.push(i);
                    user_neighbors[i].push(l);
                }
            }
            users
        })
        .collect();
    BipartiteGraph {
        station_neighbors,
        user_neighbors,
    }
}

/// `ln C(n, k)`.
pub fn ln_choose(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// `C(trials, d) q^d (1-q)^(trials-d)`, evaluated in log space.
pub fn binomial_pmf(d: usize, trials: usize, q: f64) -> Result<f64, ScenarioError> {
    if d > trials {
        return Err(ScenarioError::DegreeOutOfRange { d, max: trials });
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(ScenarioError::DiskProbabilityOutOfRange(q));
    }
    if q == 0.0 {
        return Ok(if d == 0 { 1.0 } else { 0.0 });
    }
    if q == 1.0 {
        return Ok(if d == trials { 1.0 } else { 0.0 });
    }
    let ln = ln_choose(trials, d) + d as f64 * libm::log(q) + (trials - d) as f64 * libm::log1p(-q);
    Ok(libm::exp(ln))
}

/// Probability that a nominally placed user hears exactly `d` of `m` stations.
pub fn user_degree_pmf(d: usize, m: usize, r: f64) -> Result<f64, ScenarioError> {
    binomial_pmf(d, m, r * r * PI)
}

/// Probability that a nominally placed station hears exactly `d` active users
/// among the `n - 1` users other than a fixed one.
pub fn station_degree_pmf(d: usize, n: usize, p: f64, r: f64) -> Result<f64, ScenarioError> {
    if n == 0 {
        return Err(ScenarioError::NoUsers);
    }
    binomial_pmf(d, n - 1, p * r * r * PI)
}

/// `e^-mean mean^d / d!`, evaluated in log space.
pub fn poisson_pmf(d: usize, mean: f64) -> Result<f64, ScenarioError> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(ScenarioError::InvalidMean("Poisson mean"));
    }
    if mean == 0.0 {
        return Ok(if d == 0 { 1.0 } else { 0.0 });
    }
    let ln = -mean + d as f64 * libm::log(mean) - libm::lgamma(d as f64 + 1.0);
    Ok(libm::exp(ln))
}

/// Asymptotic probability `1 - e^-lambda` that a user hears some station.
pub fn coverage_probability(lambda: f64) -> Result<f64, ScenarioError> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(ScenarioError::InvalidMean("lambda"));
    }
    Ok(-libm::expm1(-lambda))
}

/// Smallest `lambda` with coverage at least `1 - eps`: `ln(1 / eps)`.
pub fn lambda_min(eps: f64) -> Result<f64, ScenarioError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ScenarioError::EpsilonOutOfRange(eps));
    }
    Ok(-libm::log(eps))
}
