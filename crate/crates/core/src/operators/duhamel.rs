//! Boundary Duhamel integrals `H(f)(x, t) = int_0^t G_1[f(s)](x, t - s) ds`.
//!
//! With `tau = sqrt(t - s)` the boundary factor `2 g_1(0, t - s) ds` becomes
//! the constant `2/sqrt(pi) dtau`, so a midpoint rule in `tau` sees a bounded
//! integrand.

use std::f64::consts::PI;
use std::sync::Arc;

use super::nonlinearity::NonlinearitySpec;
use super::potential::{evaluate_potential, Potential};
use super::semigroup::{check_time, normal_profile, Operators};
use super::sweep::add_outer;
use crate::error::{Error, Result};
use crate::grid::{BoundaryFunction, Grid, GridFunction};

pub const DEFAULT_TIME_NODES: usize = 64;
pub const MIN_TIME_NODES: usize = 8;

/// Composite midpoint rule in `tau = sqrt(t - s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeQuadrature {
    nodes: usize,
}

impl TimeQuadrature {
    pub fn new(nodes: usize) -> Result<Self> {
        if nodes < MIN_TIME_NODES {
            return Err(Error::Config(format!(
                "time quadrature needs >= {MIN_TIME_NODES} nodes, got {nodes}"
            )));
        }
        Ok(TimeQuadrature { nodes })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// `(s_k, tau_k, h)`: source time, node, and node spacing.
    pub fn points(&self, t: f64) -> impl Iterator<Item = (f64, f64, f64)> {
        let h = t.sqrt() / self.nodes as f64;
        (0..self.nodes).map(move |k| {
            let tau = (k as f64 + 0.5) * h;
            (t - tau * tau, tau, h)
        })
    }
}

impl Default for TimeQuadrature {
    fn default() -> Self {
        TimeQuadrature {
            nodes: DEFAULT_TIME_NODES,
        }
    }
}

/// Boundary fields at increasing times, linearly interpolated in between
/// and held constant below the first time.
#[derive(Debug, Clone)]
pub struct BoundaryTrajectory {
    grid: Arc<Grid>,
    times: Vec<f64>,
    fields: Vec<Vec<f64>>,
}

impl BoundaryTrajectory {
    pub fn new(times: Vec<f64>, fields: Vec<BoundaryFunction>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::Config("trajectory needs one field per time".into()));
        }
        if times[0] <= 0.0 || times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("trajectory times must be positive and increasing".into()));
        }
        let grid = Arc::clone(fields[0].grid());
        Ok(BoundaryTrajectory {
            grid,
            times,
            fields: fields.into_iter().map(|f| f.into_values()).collect(),
        })
    }

    pub(crate) fn from_raw(grid: &Arc<Grid>, times: Vec<f64>, fields: Vec<Vec<f64>>) -> Self {
        BoundaryTrajectory {
            grid: Arc::clone(grid),
            times,
            fields,
        }
    }

    /// Same field at every time.
    pub fn constant(f: &BoundaryFunction, times: Vec<f64>) -> Result<Self> {
        let fields = vec![f.clone(); times.len()];
        Self::new(times, fields)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn raw(&self, level: usize) -> &[f64] {
        &self.fields[level]
    }

    pub fn field(&self, level: usize) -> BoundaryFunction {
        BoundaryFunction::from_values_unchecked(&self.grid, self.fields[level].clone())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Field values at time `s`.
    pub fn at(&self, s: f64) -> Result<Vec<f64>> {
        let last = *self.times.last().expect("nonempty");
        if s > last * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "trajectory queried at s = {s} beyond its last time {last}"
            )));
        }
        if s <= self.times[0] {
            return Ok(self.fields[0].clone());
        }
        let hi = self.times.partition_point(|&v| v < s).min(self.times.len() - 1);
        let lo = hi - 1;
        let (t0, t1) = (self.times[lo], self.times[hi]);
        let w = ((s - t0) / (t1 - t0)).clamp(0.0, 1.0);
        Ok(self.fields[lo]
            .iter()
            .zip(&self.fields[hi])
            .map(|(a, b)| a + w * (b - a))
            .collect())
    }
}

impl Operators {
    /// Duhamel integral of a boundary source at time `t`. The interior part
    /// is computed only when `interior` is set.
    pub(crate) fn duhamel_with(
        &self,
        source: impl Fn(f64) -> Result<Vec<f64>>,
        t: f64,
        tq: TimeQuadrature,
        interior: bool,
    ) -> Result<(Option<Vec<f64>>, Vec<f64>)> {
        check_time(t)?;
        let grid = self.grid();
        let nb = grid.boundary_len();
        let mut bnd = vec![0.0; nb];
        let mut int = interior.then(|| vec![0.0; grid.interior_len()]);
        let cb = 2.0 / PI.sqrt();
        for (s, tau, h) in tq.points(t) {
            let f = source(s)?;
            let sigma = tau * tau;
            let lat = self.apply_lateral(&f, sigma, 1);
            for (b, l) in bnd.iter_mut().zip(&lat) {
                *b += h * cb * l;
            }
            if let Some(acc) = int.as_mut() {
                let w = h * 2.0 * tau;
                let prof: Vec<f64> = normal_profile(grid.normal_axis(), sigma)
                    .into_iter()
                    .map(|p| w * p)
                    .collect();
                add_outer(acc, &lat, &prof);
            }
        }
        Ok((int, bnd))
    }

    pub fn duhamel(
        &self,
        f: &BoundaryTrajectory,
        t: f64,
        tq: TimeQuadrature,
    ) -> Result<(GridFunction, BoundaryFunction)> {
        let (int, bnd) = self.duhamel_with(|s| f.at(s), t, tq, true)?;
        self.wrap(int.expect("interior requested"), bnd)
    }

    pub fn nonlinear_term(
        &self,
        u: &BoundaryTrajectory,
        h: &NonlinearitySpec,
        t: f64,
        tq: TimeQuadrature,
    ) -> Result<(GridFunction, BoundaryFunction)> {
        let src = |s: f64| -> Result<Vec<f64>> {
            Ok(u.at(s)?.into_iter().map(|a| h.apply(a)).collect())
        };
        let (int, bnd) = self.duhamel_with(src, t, tq, true)?;
        self.wrap(int.expect("interior requested"), bnd)
    }

    pub fn potential_term(
        &self,
        u: &BoundaryTrajectory,
        v: &BoundaryFunction,
        t: f64,
        tq: TimeQuadrature,
    ) -> Result<(GridFunction, BoundaryFunction)> {
        let src = |s: f64| -> Result<Vec<f64>> {
            Ok(u.at(s)?.iter().zip(v.values()).map(|(a, b)| a * b).collect())
        };
        let (int, bnd) = self.duhamel_with(src, t, tq, true)?;
        self.wrap(int.expect("interior requested"), bnd)
    }

    fn wrap(&self, int: Vec<f64>, bnd: Vec<f64>) -> Result<(GridFunction, BoundaryFunction)> {
        if int.iter().chain(&bnd).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite value in a Duhamel integral".into()));
        }
        Ok((
            GridFunction::from_values_unchecked(self.grid(), int),
            BoundaryFunction::from_values_unchecked(self.grid(), bnd),
        ))
    }
}

#[allow(non_snake_case)]
pub fn duhamel_H(
    f: &BoundaryTrajectory,
    t: f64,
    tq: TimeQuadrature,
) -> Result<(GridFunction, BoundaryFunction)> {
    Operators::new(f.grid()).duhamel(f, t, tq)
}

pub fn nonlinear_term(
    u: &BoundaryTrajectory,
    h: &NonlinearitySpec,
    t: f64,
    tq: TimeQuadrature,
) -> Result<(GridFunction, BoundaryFunction)> {
    Operators::new(u.grid()).nonlinear_term(u, h, t, tq)
}

pub fn potential_term(
    u: &BoundaryTrajectory,
    v: &Potential,
    t: f64,
    tq: TimeQuadrature,
) -> Result<(GridFunction, BoundaryFunction)> {
    let vb = evaluate_potential(v, u.grid())?;
    Operators::new(u.grid()).potential_term(u, &vb, t, tq)
}
