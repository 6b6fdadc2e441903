//! Picard iteration for the mild solution
//! `u = E(t) u0 + N(u) + T(u)`, with `N(u) = H(h(u|bdry))` and
//! `T(u) = H(V u|bdry)`, plus empirical calibration of the smallness
//! constants.
//!
//! The iteration runs on the boundary trajectory: the Duhamel terms only see
//! `u` on the boundary, so boundary values are kept at every storage level
//! (dense in `t`), and interior fields are produced at the report levels.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{BoundaryFunction, Grid, GridFunction};
use crate::lorentz::{norm, xpq_norm, LorentzIndex};
use crate::operators::{
    evaluate_potential, BoundaryTrajectory, NonlinearitySpec, Operators, Potential,
    TimeQuadrature,
};

/// Geometric time levels. Report levels are `t_1 2^j`; storage levels add
/// `levels_per_octave - 1` levels inside each octave and extend
/// `lead_octaves` below `t_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeLevels {
    first: f64,
    report_levels: usize,
    levels_per_octave: usize,
    lead_octaves: usize,
}

impl TimeLevels {
    pub fn new(first: f64, report_levels: usize) -> Result<Self> {
        Self::with_storage(first, report_levels, 4, 6)
    }

    pub fn with_storage(
        first: f64,
        report_levels: usize,
        levels_per_octave: usize,
        lead_octaves: usize,
    ) -> Result<Self> {
        if !(first > 0.0 && first.is_finite()) {
            return Err(Error::Config(format!("first time level {first} must be > 0")));
        }
        if report_levels == 0 || levels_per_octave == 0 {
            return Err(Error::Config("need at least one report level and one level per octave".into()));
        }
        Ok(TimeLevels {
            first,
            report_levels,
            levels_per_octave,
            lead_octaves,
        })
    }

    pub fn first(&self) -> f64 {
        self.first
    }

    pub fn report_levels(&self) -> usize {
        self.report_levels
    }

    pub fn levels_per_octave(&self) -> usize {
        self.levels_per_octave
    }

    pub fn lead_octaves(&self) -> usize {
        self.lead_octaves
    }

    pub fn report_times(&self) -> Vec<f64> {
        (0..self.report_levels)
            .map(|j| self.first * 2f64.powi(j as i32))
            .collect()
    }

    pub fn storage_times(&self) -> Vec<f64> {
        let l = self.levels_per_octave as i64;
        let lo = -(self.lead_octaves as i64) * l;
        let hi = (self.report_levels as i64 - 1) * l;
        (lo..=hi)
            .map(|j| {
                if j % l == 0 {
                    self.first * 2f64.powi((j / l) as i32)
                } else {
                    self.first * 2f64.powf(j as f64 / l as f64)
                }
            })
            .collect()
    }

    /// Position of each report level among the storage levels.
    pub fn report_indices(&self) -> Vec<usize> {
        (0..self.report_levels)
            .map(|m| (self.lead_octaves + m) * self.levels_per_octave)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub rho: f64,
    pub max_iterations: usize,
    pub residual_tolerance: f64,
    pub time_levels: TimeLevels,
    pub time_quadrature: TimeQuadrature,
    /// Run even when the admissibility check fails.
    pub allow_inadmissible: bool,
    pub cache_matrices: bool,
    /// Gaussian probe widths for calibration, as fractions of the radius.
    pub probe_widths: Vec<f64>,
}

impl SolverConfig {
    pub fn new(rho: f64, time_levels: TimeLevels) -> Self {
        SolverConfig {
            rho,
            max_iterations: 20,
            residual_tolerance: 1e-6,
            time_levels,
            time_quadrature: TimeQuadrature::default(),
            allow_inadmissible: false,
            cache_matrices: true,
            probe_widths: vec![0.0625, 0.125, 0.25],
        }
    }

    /// Interior weak exponent `p = n (rho - 1)`.
    pub fn p(&self, n: usize) -> f64 {
        n as f64 * (self.rho - 1.0)
    }

    /// Boundary weak exponent `q = (n - 1)(rho - 1)`.
    pub fn q(&self, n: usize) -> f64 {
        (n as f64 - 1.0) * (self.rho - 1.0)
    }

    pub fn check_hypothesis(&self, n: usize) -> Result<()> {
        if !(self.rho > 1.0) {
            return Err(Error::Config(format!("rho = {} must be > 1", self.rho)));
        }
        let ratio = self.rho / (self.rho - 1.0);
        let bound = n as f64 - 1.0;
        if ratio < bound {
            Ok(())
        } else {
            Err(Error::Hypothesis { ratio, bound })
        }
    }
}

/// Empirical operator constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// `max ||E(.) psi||_E / ||psi||_(p,inf)` over the probes.
    pub delta2: f64,
    /// `max ||T(w)||_E / (||V||_(n-1,inf) sup_t ||w||_(q,inf))` over the probes.
    pub delta1: f64,
    /// `max ||N(u)||_E / ||u||_E^rho` over the probes.
    pub k: f64,
    pub probes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub p: f64,
    pub q: f64,
    pub potential_norm: f64,
    pub data_norm: f64,
    pub calibration: Calibration,
    pub gamma: f64,
    pub epsilon: f64,
    /// `epsilon / delta2`, the admissible data size.
    pub data_bound: f64,
    pub admissible: bool,
}

impl AdmissibilityReport {
    /// `2 epsilon / (1 - gamma)`, the radius containing every iterate.
    pub fn ball_radius(&self) -> f64 {
        2.0 * self.epsilon / (1.0 - self.gamma)
    }

    pub fn summary(&self) -> String {
        format!(
            "p={} q={} ||V||={:.6e} ||u0||={:.6e} delta1={:.6e} delta2={:.6e} K={:.6e} gamma={:.6e} epsilon={:.6e} bound={:.6e} admissible={}",
            self.p,
            self.q,
            self.potential_norm,
            self.data_norm,
            self.calibration.delta1,
            self.calibration.delta2,
            self.calibration.k,
            self.gamma,
            self.epsilon,
            self.data_bound,
            self.admissible
        )
    }
}

/// Largest `epsilon` with `2^rho eps^{rho-1} K / (1-gamma)^{rho-1} + gamma < 1`,
/// shrunk by a 0.999 margin so the inequality is strict.
pub fn epsilon_star(gamma: f64, k: f64, rho: f64) -> f64 {
    if gamma >= 1.0 {
        return 0.0;
    }
    if k == 0.0 {
        return f64::INFINITY;
    }
    let one = 1.0 - gamma;
    0.999 * one * (one / (2f64.powf(rho) * k)).powf(1.0 / (rho - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// Correction step `k` (the first correction produces `u_2`).
    pub iteration: usize,
    /// `||u_{k+1} - u_k||_E`.
    pub difference: f64,
    /// `r_k`, with `0/0 = 0`.
    pub ratio: f64,
}

/// Per-level norms of a solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelNorms {
    pub t: f64,
    pub interior_weak_p: f64,
    pub boundary_weak_q: f64,
    pub xpq: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    grid: Arc<Grid>,
    rho: f64,
    p: f64,
    q: f64,
    times: Vec<f64>,
    interior: Vec<GridFunction>,
    boundary: Vec<BoundaryFunction>,
    trajectory: BoundaryTrajectory,
    first_iterate_norm: f64,
    history: Vec<IterationRecord>,
    status: SolveStatus,
    admissibility: AdmissibilityReport,
}

impl Solution {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn interior(&self) -> &[GridFunction] {
        &self.interior
    }

    pub fn boundary(&self) -> &[BoundaryFunction] {
        &self.boundary
    }

    /// Boundary values at every storage level.
    pub fn trajectory(&self) -> &BoundaryTrajectory {
        &self.trajectory
    }

    /// `||u_1||_E`, the size of the free evolution.
    pub fn first_iterate_norm(&self) -> f64 {
        self.first_iterate_norm
    }

    pub fn history(&self) -> &[IterationRecord] {
        &self.history
    }

    pub fn status(&self) -> SolveStatus {
        self.status
    }

    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// Number of correction steps taken.
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn admissibility(&self) -> &AdmissibilityReport {
        &self.admissibility
    }

    pub fn level_norms(&self) -> Result<Vec<LevelNorms>> {
        let ip = LorentzIndex::weak(self.p)?;
        let iq = LorentzIndex::weak(self.q)?;
        Ok(self
            .times
            .iter()
            .zip(self.interior.iter().zip(&self.boundary))
            .map(|(&t, (i, b))| {
                let a = norm(i, ip);
                let c = norm(b, iq);
                LevelNorms {
                    t,
                    interior_weak_p: a,
                    boundary_weak_q: c,
                    xpq: a + c,
                }
            })
            .collect())
    }

    /// `sup` over report levels of the `X_{p,q}` norm.
    pub fn e_norm(&self) -> Result<f64> {
        Ok(self.level_norms()?.iter().map(|l| l.xpq).fold(0.0, f64::max))
    }
}

/// Interior fields at report levels and boundary values at storage levels.
struct Evolution {
    interior: Vec<Vec<f64>>,
    boundary: Vec<Vec<f64>>,
}

struct Engine<'a> {
    ops: Operators,
    cfg: &'a SolverConfig,
    storage: Vec<f64>,
    report_idx: Vec<usize>,
    p: f64,
    q: f64,
}

impl<'a> Engine<'a> {
    fn new(grid: &Arc<Grid>, cfg: &'a SolverConfig) -> Result<Self> {
        cfg.check_hypothesis(grid.n())?;
        if cfg.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if !(cfg.residual_tolerance > 0.0) {
            return Err(Error::Config("residual_tolerance must be > 0".into()));
        }
        let ops = if cfg.cache_matrices {
            Operators::with_cache(grid)
        } else {
            Operators::new(grid)
        };
        Ok(Engine {
            ops,
            cfg,
            storage: cfg.time_levels.storage_times(),
            report_idx: cfg.time_levels.report_indices(),
            p: cfg.p(grid.n()),
            q: cfg.q(grid.n()),
        })
    }

    fn grid(&self) -> &Arc<Grid> {
        self.ops.grid()
    }

    fn free(&self, u0: &GridFunction) -> Result<Evolution> {
        let boundary = self
            .storage
            .par_iter()
            .map(|&s| self.ops.trace(u0, s).map(|b| b.into_values()))
            .collect::<Result<Vec<_>>>()?;
        let interior = self
            .report_idx
            .par_iter()
            .map(|&j| self.ops.semigroup(u0, self.storage[j]).map(|f| f.into_values()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Evolution { interior, boundary })
    }

    /// Duhamel integral of `s -> source(u(s))` at every storage level.
    fn duhamel(
        &self,
        traj: &BoundaryTrajectory,
        source: impl Fn(&[f64]) -> Vec<f64> + Sync,
    ) -> Result<Evolution> {
        let tq = self.cfg.time_quadrature;
        let m = self.storage.len();
        let results = (0..m)
            .into_par_iter()
            .map(|j| {
                let want_interior = self.report_idx.contains(&j);
                self.ops
                    .duhamel_with(|s| Ok(source(&traj.at(s)?)), self.storage[j], tq, want_interior)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut interior = Vec::with_capacity(self.report_idx.len());
        let mut boundary = Vec::with_capacity(m);
        for (int, bnd) in results {
            if let Some(i) = int {
                interior.push(i);
            }
            boundary.push(bnd);
        }
        Ok(Evolution { interior, boundary })
    }

    fn trajectory(&self, ev: &Evolution) -> BoundaryTrajectory {
        BoundaryTrajectory::from_raw(self.grid(), self.storage.clone(), ev.boundary.clone())
    }

    /// `sup` over report levels of `X_{p,q}` of `a - b` (or of `a`).
    fn e_norm(&self, a: &Evolution, b: Option<&Evolution>) -> Result<f64> {
        let grid = self.grid();
        let mut best: f64 = 0.0;
        for (r, &j) in self.report_idx.iter().enumerate() {
            let diff = |x: &[f64], y: Option<&[f64]>| -> Vec<f64> {
                match y {
                    Some(y) => x.iter().zip(y).map(|(a, b)| a - b).collect(),
                    None => x.to_vec(),
                }
            };
            let i = diff(&a.interior[r], b.map(|e| e.interior[r].as_slice()));
            let bd = diff(&a.boundary[j], b.map(|e| e.boundary[j].as_slice()));
            let v = xpq_norm(
                &GridFunction::from_values_unchecked(grid, i),
                &BoundaryFunction::from_values_unchecked(grid, bd),
                self.p,
                self.q,
            )?;
            best = best.max(v);
        }
        Ok(best)
    }

    fn sup_boundary_q(&self, ev: &Evolution) -> Result<f64> {
        let iq = LorentzIndex::weak(self.q)?;
        Ok(self
            .report_idx
            .iter()
            .map(|&j| norm(&BoundaryFunction::from_values_unchecked(self.grid(), ev.boundary[j].clone()), iq))
            .fold(0.0, f64::max))
    }

    fn calibrate(
        &self,
        u0: &GridFunction,
        v: &BoundaryFunction,
        h: &NonlinearitySpec,
    ) -> Result<Calibration> {
        let grid = self.grid();
        let ip = LorentzIndex::weak(self.p)?;
        let radius = grid.radius();
        let mut probes = Vec::new();
        for &w in &self.cfg.probe_widths {
            let width = w * radius;
            probes.push(GridFunction::sample(grid, |x| {
                (-x.iter().map(|c| c * c).sum::<f64>() / (width * width)).exp()
            })?);
        }
        if u0.values().iter().any(|x| *x != 0.0) {
            probes.push(u0.clone());
        }
        let v_norm = norm(v, LorentzIndex::weak(grid.n() as f64 - 1.0)?);
        let v_zero = v.values().iter().all(|x| *x == 0.0);
        let mut cal = Calibration {
            delta2: 0.0,
            delta1: 0.0,
            k: 0.0,
            probes: probes.len(),
        };
        for probe in &probes {
            let pn = norm(probe, ip);
            if pn == 0.0 {
                continue;
            }
            let psi = probe.scaled(1.0 / pn);
            let free = self.free(&psi)?;
            let e = self.e_norm(&free, None)?;
            cal.delta2 = cal.delta2.max(e);
            let traj = self.trajectory(&free);
            if !v_zero {
                let vv = v.values();
                let t = self.duhamel(&traj, |u| u.iter().zip(vv).map(|(a, b)| a * b).collect())?;
                let denom = v_norm * self.sup_boundary_q(&free)?;
                if denom > 0.0 {
                    cal.delta1 = cal.delta1.max(self.e_norm(&t, None)? / denom);
                }
            }
            if !h.is_zero() && e > 0.0 {
                let nl = self.duhamel(&traj, |u| u.iter().map(|&a| h.apply(a)).collect())?;
                cal.k = cal.k.max(self.e_norm(&nl, None)? / e.powf(h.rho()));
            }
        }
        Ok(cal)
    }

    fn admissibility(
        &self,
        u0: &GridFunction,
        v: &BoundaryFunction,
        h: &NonlinearitySpec,
    ) -> Result<AdmissibilityReport> {
        let grid = self.grid();
        let calibration = self.calibrate(u0, v, h)?;
        let potential_norm = norm(v, LorentzIndex::weak(grid.n() as f64 - 1.0)?);
        let data_norm = norm(u0, LorentzIndex::weak(self.p)?);
        let gamma = calibration.delta1 * potential_norm;
        let epsilon = epsilon_star(gamma, calibration.k, self.cfg.rho);
        let data_bound = if calibration.delta2 > 0.0 {
            epsilon / calibration.delta2
        } else {
            f64::INFINITY
        };
        let admissible = gamma < 1.0 && data_norm <= data_bound;
        Ok(AdmissibilityReport {
            p: self.p,
            q: self.q,
            potential_norm,
            data_norm,
            calibration,
            gamma,
            epsilon,
            data_bound,
            admissible,
        })
    }
}

fn check_inputs(u0: &GridFunction, h: &NonlinearitySpec, config: &SolverConfig) -> Result<()> {
    config.check_hypothesis(u0.grid().n())?;
    if h.rho() != config.rho {
        return Err(Error::Config(format!(
            "nonlinearity exponent {} differs from solver rho {}",
            h.rho(),
            config.rho
        )));
    }
    Ok(())
}

/// Calibrates the constants and evaluates the smallness condition.
pub fn check_admissibility(
    u0: &GridFunction,
    v: &Potential,
    h: &NonlinearitySpec,
    config: &SolverConfig,
) -> Result<AdmissibilityReport> {
    check_inputs(u0, h, config)?;
    let vb = evaluate_potential(v, u0.grid())?;
    Engine::new(u0.grid(), config)?.admissibility(u0, &vb, h)
}

/// Picard iteration `u_1 = E(t) u0`, `u_{k+1} = u_1 + N(u_k) + T(u_k)`.
pub fn picard_solve(
    u0: &GridFunction,
    v: &Potential,
    h: &NonlinearitySpec,
    config: &SolverConfig,
) -> Result<Solution> {
    check_inputs(u0, h, config)?;
    let grid = u0.grid();
    let vb = evaluate_potential(v, grid)?;
    let engine = Engine::new(grid, config)?;
    let report = engine.admissibility(u0, &vb, h)?;
    if !report.admissible && !config.allow_inadmissible {
        return Err(Error::Precondition(format!(
            "data is not admissible ({}); set allow_inadmissible to run anyway",
            report.summary()
        )));
    }
    let u1 = engine.free(u0)?;
    let first_norm = engine.e_norm(&u1, None)?;
    let mut current = Evolution {
        interior: u1.interior.clone(),
        boundary: u1.boundary.clone(),
    };
    let mut prev = first_norm;
    let mut history = Vec::new();
    let mut status = SolveStatus::Diverged;
    let vv = vb.values();
    let nonlinear = !h.is_zero();
    let has_potential = !vb.values().iter().all(|x| *x == 0.0);
    for k in 1..=config.max_iterations {
        let traj = engine.trajectory(&current);
        let next = if nonlinear || has_potential {
            let d = engine.duhamel(&traj, |u| {
                u.iter()
                    .zip(vv)
                    .map(|(&a, &b)| {
                        let mut s = 0.0;
                        if nonlinear {
                            s += h.apply(a);
                        }
                        if has_potential {
                            s += b * a;
                        }
                        s
                    })
                    .collect()
            })?;
            Evolution {
                interior: add(&u1.interior, &d.interior),
                boundary: add(&u1.boundary, &d.boundary),
            }
        } else {
            Evolution {
                interior: u1.interior.clone(),
                boundary: u1.boundary.clone(),
            }
        };
        if next
            .interior
            .iter()
            .chain(&next.boundary)
            .any(|f| f.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::Numerical(format!("non-finite field in Picard iterate {}", k + 1)));
        }
        let diff = engine.e_norm(&next, Some(&current))?;
        let ratio = if diff == 0.0 { 0.0 } else { diff / prev };
        history.push(IterationRecord {
            iteration: k,
            difference: diff,
            ratio,
        });
        current = next;
        prev = diff;
        if diff < config.residual_tolerance {
            status = SolveStatus::Converged;
            break;
        }
    }
    let times = config.time_levels.report_times();
    let interior = current
        .interior
        .iter()
        .map(|v| GridFunction::from_values_unchecked(grid, v.clone()))
        .collect();
    let boundary = engine
        .report_idx
        .iter()
        .map(|&j| BoundaryFunction::from_values_unchecked(grid, current.boundary[j].clone()))
        .collect();
    Ok(Solution {
        grid: Arc::clone(grid),
        rho: config.rho,
        p: engine.p,
        q: engine.q,
        times,
        interior,
        boundary,
        trajectory: engine.trajectory(&current),
        first_iterate_norm: first_norm,
        history,
        status,
        admissibility: report,
    })
}

fn add(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
        .collect()
}

/// `sup` over report levels of `X_{p,q}` of `u - (E u0 + N(u) + T(u))`.
pub fn fixed_point_residual(
    solution: &Solution,
    u0: &GridFunction,
    v: &Potential,
    h: &NonlinearitySpec,
    config: &SolverConfig,
) -> Result<f64> {
    let grid = solution.grid();
    let vb = evaluate_potential(v, grid)?;
    let engine = Engine::new(grid, config)?;
    let u1 = engine.free(u0)?;
    let traj = solution.trajectory();
    let vv = vb.values();
    let d = engine.duhamel(traj, |u| {
        u.iter().zip(vv).map(|(&a, &b)| h.apply(a) + b * a).collect()
    })?;
    let image = Evolution {
        interior: add(&u1.interior, &d.interior),
        boundary: add(&u1.boundary, &d.boundary),
    };
    let current = Evolution {
        interior: solution.interior.iter().map(|f| f.values().to_vec()).collect(),
        boundary: (0..traj.len()).map(|j| traj.raw(j).to_vec()).collect(),
    };
    engine.e_norm(&image, Some(&current))
}

/// Ratio table of a Picard run.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub rows: Vec<IterationRecord>,
    pub max_ratio: f64,
    /// Differences decrease at every step.
    pub monotone: bool,
    /// Some ratio is `>= 1`.
    pub flagged: bool,
}

pub fn contraction_report(solution: &Solution) -> Result<ContractionReport> {
    let rows = solution.history().to_vec();
    if rows.is_empty() {
        return Err(Error::Precondition("contraction report needs at least two iterates".into()));
    }
    if rows.iter().any(|r| !r.ratio.is_finite()) {
        return Err(Error::Numerical("non-finite contraction ratio".into()));
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let monotone = rows.windows(2).all(|w| w[1].difference <= w[0].difference);
    Ok(ContractionReport {
        flagged: max_ratio >= 1.0,
        rows,
        max_ratio,
        monotone,
    })
}

/// `sup` over report levels of `X_{p,q}` of the difference of two solutions
/// on the same grid and levels.
pub fn solution_distance(a: &Solution, b: &Solution) -> Result<f64> {
    if a.times != b.times || a.grid.interior_len() != b.grid.interior_len() {
        return Err(Error::Precondition("solutions must share grid and time levels".into()));
    }
    let mut best: f64 = 0.0;
    for r in 0..a.times.len() {
        let i = a.interior[r].combine(1.0, &b.interior[r], -1.0);
        let bd = a.boundary[r].combine(1.0, &b.boundary[r], -1.0);
        best = best.max(xpq_norm(&i, &bd, a.p, a.q)?);
    }
    Ok(best)
}

/// `||u0 - w0||_(p,inf) + ||V - W||_(n-1,inf)`.
pub fn data_distance(
    u0: &GridFunction,
    w0: &GridFunction,
    v: &Potential,
    w: &Potential,
    rho: f64,
) -> Result<f64> {
    let grid = u0.grid();
    let n = grid.n() as f64;
    let du = u0.combine(1.0, w0, -1.0);
    let dv = evaluate_potential(v, grid)?.combine(1.0, &evaluate_potential(w, grid)?, -1.0);
    Ok(norm(&du, LorentzIndex::weak(n * (rho - 1.0))?) + norm(&dv, LorentzIndex::weak(n - 1.0)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn small_config(rho: f64) -> SolverConfig {
        let mut c = SolverConfig::new(rho, TimeLevels::with_storage(0.25, 3, 2, 3).unwrap());
        c.time_quadrature = TimeQuadrature::new(16).unwrap();
        c.probe_widths = vec![0.25];
        c
    }

    #[test]
    fn exponents_and_hypothesis() {
        let c = small_config(3.0);
        assert_eq!(c.p(3), 6.0);
        assert_eq!(c.q(3), 4.0);
        assert!(c.check_hypothesis(3).is_ok());
        let bad = small_config(2.0);
        assert!(matches!(bad.check_hypothesis(3), Err(Error::Hypothesis { .. })));
        assert!(small_config(1.4).check_hypothesis(3).is_err());
        assert!(small_config(2.0).check_hypothesis(4).is_ok());
    }

    #[test]
    fn storage_contains_report_times_exactly() {
        let tl = TimeLevels::new(0.0625, 6).unwrap();
        let st = tl.storage_times();
        for (t, &j) in tl.report_times().iter().zip(&tl.report_indices()) {
            assert_eq!(st[j], *t);
        }
        assert!(st.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(st[0], 0.0625 / 64.0);
    }

    #[test]
    fn epsilon_star_satisfies_the_condition() {
        let (gamma, k, rho) = (0.3, 2.5, 3.0);
        let e = epsilon_star(gamma, k, rho);
        let lhs = 2f64.powf(rho) * e.powf(rho - 1.0) * k / (1.0 - gamma).powf(rho - 1.0) + gamma;
        assert!(lhs < 1.0 && lhs > 0.99);
        assert_eq!(epsilon_star(1.2, k, rho), 0.0);
        assert!(epsilon_star(0.0, 0.0, rho).is_infinite());
    }

    #[test]
    fn linear_free_case_converges_in_one_step() {
        let grid = Grid::build(GridSpec::uniform(3, 4.0, 8)).unwrap();
        let u0 = GridFunction::sample(&grid, |x| (-x.iter().map(|c| c * c).sum::<f64>()).exp()).unwrap();
        let cfg = small_config(3.0);
        let h = NonlinearitySpec::zero(3.0).unwrap();
        let sol = picard_solve(&u0, &Potential::zero(), &h, &cfg).unwrap();
        assert!(sol.converged());
        assert_eq!(sol.iterations(), 1);
        assert_eq!(sol.history()[0].ratio, 0.0);
        let e = crate::operators::heat_semigroup(&u0, sol.times()[1]).unwrap();
        assert_eq!(sol.interior()[1].values(), e.values());
        let rep = contraction_report(&sol).unwrap();
        assert_eq!(rep.max_ratio, 0.0);
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let grid = Grid::build(GridSpec::uniform(3, 4.0, 8)).unwrap();
        let u0 = GridFunction::zeros(&grid);
        let cfg = small_config(3.0);
        let h = NonlinearitySpec::power_law(3.0, 1.0).unwrap();
        let rep = check_admissibility(&u0, &Potential::zero(), &h, &cfg).unwrap();
        assert!(rep.admissible);
        assert_eq!(rep.gamma, 0.0);
        let sol = picard_solve(&u0, &Potential::radial(0.05, 2), &h, &cfg).unwrap();
        assert!(sol.converged());
        for f in sol.interior() {
            assert!(f.values().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn large_potential_is_inadmissible_and_diverges() {
        let grid = Grid::build(GridSpec::uniform(3, 4.0, 8)).unwrap();
        let u0 = GridFunction::sample(&grid, |x| 0.01 * (-x.iter().map(|c| c * c).sum::<f64>()).exp()).unwrap();
        let mut cfg = small_config(3.0);
        let h = NonlinearitySpec::zero(3.0).unwrap();
        let v = Potential::radial(50.0, 2);
        let rep = check_admissibility(&u0, &v, &h, &cfg).unwrap();
        assert!(rep.gamma >= 1.0 && !rep.admissible);
        assert!(matches!(picard_solve(&u0, &v, &h, &cfg), Err(Error::Precondition(_))));
        cfg.allow_inadmissible = true;
        cfg.max_iterations = 6;
        let sol = picard_solve(&u0, &v, &h, &cfg).unwrap();
        assert_eq!(sol.status(), SolveStatus::Diverged);
        assert!(contraction_report(&sol).unwrap().flagged);
    }

    #[test]
    fn mismatched_rho_is_rejected() {
        let grid = Grid::build(GridSpec::uniform(3, 4.0, 8)).unwrap();
        let u0 = GridFunction::zeros(&grid);
        let h = NonlinearitySpec::power_law(2.5, 1.0).unwrap();
        assert!(matches!(
            picard_solve(&u0, &Potential::zero(), &h, &small_config(3.0)),
            Err(Error::Config(_))
        ));
    }
}
