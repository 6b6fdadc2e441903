//! Numerical checks of the decay, integrability, scaling, sign and symmetry
//! statements: exponent fits, truncation ladders for time-weighted
//! integrals, self-similarity defects, positivity and exact symmetry
//! defects.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{BoundaryFunction, Grid, GridFunction};
use crate::lorentz::{norm, LorentzIndex};
use crate::operators::Operators;
use crate::quadrature::{gauss_legendre, linear_fit};
use crate::solver::Solution;

/// Least-squares slope of `log norm` against `log t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub theory: f64,
    /// `|slope - theory| / |theory|`, or the absolute gap when `theory = 0`.
    pub deviation: f64,
}

impl ExponentFit {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.deviation <= tolerance
    }
}

pub const MIN_FIT_SAMPLES: usize = 6;

pub fn fit_exponent(times: &[f64], norms: &[f64], theory: f64) -> Result<ExponentFit> {
    if times.len() != norms.len() || times.len() < MIN_FIT_SAMPLES {
        return Err(Error::Precondition(format!(
            "an exponent fit needs >= {MIN_FIT_SAMPLES} samples, got {}",
            times.len()
        )));
    }
    let (lo, hi) = times
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    if !(lo > 0.0) || hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "sample times must be positive and span a decade, got [{lo}, {hi}]"
        )));
    }
    let top = norms.iter().cloned().fold(0.0, f64::max);
    if !(top > 1e-280) || norms.iter().any(|v| !v.is_finite() || *v <= 1e-13 * top) {
        return Err(Error::Range(
            "norms at or below the floating noise floor; increase the data amplitude".into(),
        ));
    }
    let x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    let (slope, intercept) = linear_fit(&x, &y);
    let deviation = if theory == 0.0 {
        slope.abs()
    } else {
        ((slope - theory) / theory).abs()
    };
    Ok(ExponentFit {
        times: times.to_vec(),
        norms: norms.to_vec(),
        slope,
        intercept,
        theory,
        deviation,
    })
}

fn check_indices(d1: f64, d2: f64) -> Result<()> {
    if !(d1 > 1.0 && d1 < d2 && d2.is_finite()) {
        return Err(Error::Precondition(format!(
            "indices must satisfy 1 < d1 < d2 < inf, got d1 = {d1}, d2 = {d2}"
        )));
    }
    Ok(())
}

/// Decay of `||[E(t) u0]|_bdry||_(d2, r)`; theory `-(n/(2 d1) - (n-1)/(2 d2))`.
pub fn fit_trace_decay(
    u0: &GridFunction,
    d1: f64,
    d2: f64,
    r: f64,
    times: &[f64],
) -> Result<ExponentFit> {
    check_indices(d1, d2)?;
    let n = u0.grid().n() as f64;
    let idx = LorentzIndex::new(d2, r)?;
    let ops = Operators::new(u0.grid());
    let norms = times
        .iter()
        .map(|&t| ops.trace(u0, t).map(|b| norm(&b, idx)))
        .collect::<Result<Vec<_>>>()?;
    fit_exponent(times, &norms, -(n / (2.0 * d1) - (n - 1.0) / (2.0 * d2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum G1Target {
    Boundary,
    Interior,
}

/// Decay of `||G_1(psi)(t)||_(d2, r)` on the boundary or in the interior.
pub fn fit_g1_decay(
    psi: &BoundaryFunction,
    d1: f64,
    d2: f64,
    r: f64,
    target: G1Target,
    times: &[f64],
) -> Result<ExponentFit> {
    check_indices(d1, d2)?;
    let n = psi.grid().n() as f64;
    let idx = LorentzIndex::new(d2, r)?;
    let ops = Operators::new(psi.grid());
    let norms = times
        .iter()
        .map(|&t| match target {
            G1Target::Boundary => ops.g1_boundary(psi, t).map(|f| norm(&f, idx)),
            G1Target::Interior => ops.g1_interior(psi, t).map(|f| norm(&f, idx)),
        })
        .collect::<Result<Vec<_>>>()?;
    let theory = match target {
        G1Target::Boundary => -((n - 1.0) / (2.0 * d1) - (n - 1.0) / (2.0 * d2) + 0.5),
        G1Target::Interior => -((n - 1.0) / (2.0 * d1) - n / (2.0 * d2) + 0.5),
    };
    fit_exponent(times, &norms, theory)
}

/// The three time-integrated estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YamazakiEstimate {
    /// `int t^{a-1} ||G_1 psi|_bdry||_(d2,1) dt`, `a = (n-1)/(2d1) - (n-1)/(2d2) + 1/2`.
    Key2Est1,
    /// `int t^{a-1} ||G_1 psi||_(d2,1) dt` over the half-space, `a = (n-1)/(2d1) - n/(2d2) + 1/2`.
    Key2Est2,
    /// `int t^{a-1} ||G_2 phi||_(d2,1) dt`, `a = n/(2d1) - (n-1)/(2d2)`.
    Key1Est1,
}

impl YamazakiEstimate {
    pub fn name(&self) -> &'static str {
        match self {
            YamazakiEstimate::Key2Est1 => "key2-est1",
            YamazakiEstimate::Key2Est2 => "key2-est2",
            YamazakiEstimate::Key1Est1 => "key1-est1",
        }
    }

    /// Exponent of the time weight `t^{a-1}`.
    pub fn weight_exponent(&self, n: f64, d1: f64, d2: f64) -> f64 {
        match self {
            YamazakiEstimate::Key2Est1 => (n - 1.0) / (2.0 * d1) - (n - 1.0) / (2.0 * d2) - 0.5,
            YamazakiEstimate::Key2Est2 => (n - 1.0) / (2.0 * d1) - n / (2.0 * d2) - 0.5,
            YamazakiEstimate::Key1Est1 => n / (2.0 * d1) - (n - 1.0) / (2.0 * d2) - 1.0,
        }
    }
}

/// Input of a time-integrated estimate.
#[derive(Debug, Clone)]
pub enum YamazakiInput {
    Boundary(BoundaryFunction),
    Interior(GridFunction),
}

impl YamazakiInput {
    fn grid(&self) -> &Arc<Grid> {
        match self {
            YamazakiInput::Boundary(f) => f.grid(),
            YamazakiInput::Interior(f) => f.grid(),
        }
    }
}

/// Truncation ladder `[t0 2^{-k}, t0 2^{k}]`, `k = start_octaves, ...`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ladder {
    pub center: f64,
    pub start_octaves: usize,
    pub max_steps: usize,
    /// Gauss-Legendre nodes per octave in `ln t`.
    pub nodes_per_octave: usize,
    pub tolerance: f64,
}

impl Default for Ladder {
    fn default() -> Self {
        Ladder {
            center: 1.0,
            start_octaves: 4,
            max_steps: 20,
            nodes_per_octave: 8,
            tolerance: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderStatus {
    Converged,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderStep {
    pub t_min: f64,
    pub t_max: f64,
    pub integral: f64,
    pub relative_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YamazakiReport {
    pub estimate: YamazakiEstimate,
    pub steps: Vec<LadderStep>,
    pub status: LadderStatus,
    pub integral: f64,
    pub input_norm: f64,
    /// `integral / ||input||_(d1,1)`, zero for zero input.
    pub constant: f64,
}

pub fn check_yamazaki_integrals(
    input: &YamazakiInput,
    d1: f64,
    d2: f64,
    which: YamazakiEstimate,
    ladder: Ladder,
) -> Result<YamazakiReport> {
    check_indices(d1, d2)?;
    let grid = input.grid();
    let n = grid.n() as f64;
    match (which, input) {
        (YamazakiEstimate::Key1Est1, YamazakiInput::Interior(_)) => {}
        (YamazakiEstimate::Key1Est1, _) => {
            return Err(Error::Precondition("key1-est1 takes an interior field".into()))
        }
        (_, YamazakiInput::Boundary(_)) => {}
        _ => return Err(Error::Precondition(format!("{} takes a boundary field", which.name()))),
    }
    if ladder.nodes_per_octave == 0 || ladder.max_steps == 0 || ladder.start_octaves == 0 {
        return Err(Error::Config("ladder needs nodes, steps and a starting width".into()));
    }
    let idx1 = LorentzIndex::new(d2, 1.0)?;
    let ops = Operators::new(grid);
    let a = which.weight_exponent(n, d1, d2);
    let measure = |t: f64| -> Result<f64> {
        Ok(match (which, input) {
            (YamazakiEstimate::Key1Est1, YamazakiInput::Interior(phi)) => norm(&ops.g2(phi, t)?, idx1),
            (YamazakiEstimate::Key2Est1, YamazakiInput::Boundary(psi)) => {
                norm(&ops.g1_boundary(psi, t)?, idx1)
            }
            (YamazakiEstimate::Key2Est2, YamazakiInput::Boundary(psi)) => {
                norm(&ops.g1_interior(psi, t)?, idx1)
            }
            _ => unreachable!("checked above"),
        })
    };
    let (gx, gw) = gauss_legendre(ladder.nodes_per_octave);
    let ln2 = std::f64::consts::LN_2;
    let mut octaves: HashMap<i64, f64> = HashMap::new();
    // int over [t0 2^k, t0 2^{k+1}] of t^a ||.|| dt, in u = ln t
    let mut octave = |k: i64| -> Result<f64> {
        if let Some(v) = octaves.get(&k) {
            return Ok(*v);
        }
        let lo = ladder.center.ln() + k as f64 * ln2;
        let mut acc = 0.0;
        for (x, w) in gx.iter().zip(&gw) {
            let u = lo + 0.5 * ln2 * (x + 1.0);
            let t = u.exp();
            acc += w * 0.5 * ln2 * t.powf(a + 1.0) * measure(t)?;
        }
        octaves.insert(k, acc);
        Ok(acc)
    };
    let mut steps: Vec<LadderStep> = Vec::new();
    let mut status = LadderStatus::Inconclusive;
    for s in 0..ladder.max_steps {
        let k = (ladder.start_octaves + s) as i64;
        let mut integral = 0.0;
        for j in -k..k {
            integral += octave(j)?;
        }
        let relative_change = steps.last().map(|prev| {
            let d = (integral - prev.integral).abs();
            if d == 0.0 {
                0.0
            } else {
                d / integral.abs()
            }
        });
        steps.push(LadderStep {
            t_min: ladder.center * 2f64.powi(-k as i32),
            t_max: ladder.center * 2f64.powi(k as i32),
            integral,
            relative_change,
        });
        if relative_change.is_some_and(|c| c < ladder.tolerance) {
            status = LadderStatus::Converged;
            break;
        }
    }
    let integral = steps.last().expect("at least one step").integral;
    let input_norm = match input {
        YamazakiInput::Boundary(f) => norm(f, LorentzIndex::new(d1, 1.0)?),
        YamazakiInput::Interior(f) => norm(f, LorentzIndex::new(d1, 1.0)?),
    };
    let constant = if input_norm == 0.0 { 0.0 } else { integral / input_norm };
    Ok(YamazakiReport {
        estimate: which,
        steps,
        status,
        integral,
        input_norm,
        constant,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilarityReport {
    pub max_defect: f64,
    pub compared: usize,
    /// Cells whose image left the centroid hull.
    pub excluded: usize,
    pub floor: f64,
    pub core_radius: f64,
    pub worst: Option<DefectSite>,
}

/// Where the largest self-similarity defect was found.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectSite {
    pub t: f64,
    pub lambda: f64,
    pub point: Vec<f64>,
    pub on_boundary: bool,
}

/// Multilinear interpolation of a cell field at `x`; `None` outside the
/// centroid hull.
fn interpolate(axes: &[crate::grid::Axis], values: &[f64], x: &[f64]) -> Option<f64> {
    let d = axes.len();
    let mut lo = vec![0usize; d];
    let mut w = vec![0.0; d];
    for a in 0..d {
        let (l, wa) = axes[a].bracket(x[a])?;
        lo[a] = l;
        w[a] = wa;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << d) {
        let mut weight = 1.0;
        let mut flat = 0usize;
        for a in 0..d {
            let up = (corner >> a) & 1 == 1;
            let len = axes[a].len();
            let i = if up { (lo[a] + 1).min(len - 1) } else { lo[a] };
            weight *= if up { w[a] } else { 1.0 - w[a] };
            flat = flat * len + i;
        }
        if weight != 0.0 {
            acc += weight * values[flat];
        }
    }
    Some(acc)
}

/// `max |lambda^{1/(rho-1)} u(lambda x, lambda^2 t) - u(x, t)| / (|u(x, t)| + floor)`
/// over trusted-core cells, report levels and both components.
pub fn check_self_similarity(
    solution: &Solution,
    rho: f64,
    lambdas: &[f64],
) -> Result<SelfSimilarityReport> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::Precondition("scaling factors must be positive".into()));
    }
    let grid = solution.grid();
    let times = solution.times();
    let max_lambda = lambdas.iter().cloned().fold(0.0, f64::max);
    let core_radius = grid.radius() / (2.0 * max_lambda);
    let peak = solution
        .interior()
        .iter()
        .flat_map(|f| f.values().iter())
        .chain(solution.boundary().iter().flat_map(|f| f.values().iter()))
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-8 * peak;
    let mut acc = DefectScan {
        floor,
        core_radius,
        max_defect: 0.0,
        compared: 0,
        excluded: 0,
        worst: None,
    };
    let mut pairs = 0;
    for &lambda in lambdas {
        let amp = lambda.powf(1.0 / (rho - 1.0));
        for (i, &t) in times.iter().enumerate() {
            let target = lambda * lambda * t;
            let Some(j) = times
                .iter()
                .position(|&s| ((s - target) / target).abs() < 1e-12)
            else {
                continue;
            };
            pairs += 1;
            let site = (t, lambda, amp);
            acc.scan(
                grid.axes(),
                solution.interior()[i].values(),
                solution.interior()[j].values(),
                |c, out| grid.interior_centroid(c, out),
                site,
                false,
            );
            acc.scan(
                grid.lateral_axes(),
                solution.boundary()[i].values(),
                solution.boundary()[j].values(),
                |c, out| grid.boundary_centroid(c, out),
                site,
                true,
            );
        }
    }
    if pairs == 0 {
        return Err(Error::Precondition(
            "no pair of report levels related by lambda^2".into(),
        ));
    }
    Ok(SelfSimilarityReport {
        max_defect: acc.max_defect,
        compared: acc.compared,
        excluded: acc.excluded,
        floor,
        core_radius,
        worst: acc.worst,
    })
}

struct DefectScan {
    floor: f64,
    core_radius: f64,
    max_defect: f64,
    compared: usize,
    excluded: usize,
    worst: Option<DefectSite>,
}

impl DefectScan {
    fn scan(
        &mut self,
        axes: &[crate::grid::Axis],
        src: &[f64],
        dst: &[f64],
        centroid: impl Fn(usize, &mut [f64]),
        (t, lambda, amp): (f64, f64, f64),
        on_boundary: bool,
    ) {
        let d = axes.len();
        let mut x = vec![0.0; d];
        let mut y = vec![0.0; d];
        for (c, &u) in src.iter().enumerate() {
            centroid(c, &mut x);
            if x.iter().map(|v| v * v).sum::<f64>().sqrt() > self.core_radius {
                continue;
            }
            for a in 0..d {
                y[a] = lambda * x[a];
            }
            let Some(v) = interpolate(axes, dst, &y) else {
                self.excluded += 1;
                continue;
            };
            self.compared += 1;
            let defect = (amp * v - u).abs() / (u.abs() + self.floor);
            if defect > self.max_defect {
                self.max_defect = defect;
                self.worst = Some(DefectSite {
                    t,
                    lambda,
                    point: x.clone(),
                    on_boundary,
                });
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignReport {
    pub min: f64,
    pub max: f64,
    /// Every stored value is exactly zero.
    pub zero_solution: bool,
    pub pass: bool,
}

fn extremes(solution: &Solution) -> (f64, f64) {
    solution
        .interior()
        .iter()
        .flat_map(|f| f.values().iter())
        .chain(solution.boundary().iter().flat_map(|f| f.values().iter()))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// `min u > 0` over all cells and report levels.
pub fn check_positivity(solution: &Solution) -> SignReport {
    let (min, max) = extremes(solution);
    let zero_solution = min == 0.0 && max == 0.0;
    SignReport {
        min,
        max,
        zero_solution,
        pass: min > 0.0,
    }
}

/// `max u < 0` over all cells and report levels.
pub fn check_negativity(solution: &Solution) -> SignReport {
    let (min, max) = extremes(solution);
    let zero_solution = min == 0.0 && max == 0.0;
    SignReport {
        min,
        max,
        zero_solution,
        pass: max < 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryTransform {
    /// `(x_1, x_2) -> (-x_2, x_1)` in the first two lateral coordinates.
    Rotation,
    /// `(x', x_n) -> (-x', x_n)`.
    Reflection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Symmetric,
    Antisymmetric,
}

/// Lateral index permutation `c -> T(c)`, or a configuration error when the
/// grid is not closed under `T`.
pub fn lateral_permutation(grid: &Grid, transform: SymmetryTransform) -> Result<Vec<usize>> {
    let axes = grid.lateral_axes();
    let d = axes.len();
    match transform {
        SymmetryTransform::Rotation => {
            if d < 2 || axes[0].edges() != axes[1].edges() || !axes[0].is_mirror_symmetric() {
                return Err(Error::Config(
                    "grid is not closed under the quarter rotation".into(),
                ));
            }
        }
        SymmetryTransform::Reflection => {
            if !axes.iter().all(|a| a.is_mirror_symmetric()) {
                return Err(Error::Config("grid is not closed under x' -> -x'".into()));
            }
        }
    }
    let mut m = vec![0usize; d];
    let mut out = vec![0usize; d];
    Ok((0..grid.boundary_len())
        .map(|b| {
            grid.boundary_multi_index(b, &mut m);
            out.copy_from_slice(&m);
            match transform {
                SymmetryTransform::Rotation => {
                    let len = axes[0].len();
                    // centroid (c_i, c_j) maps to (-c_j, c_i) = (c_{N-1-j}, c_i)
                    out[0] = len - 1 - m[1];
                    out[1] = m[0];
                }
                SymmetryTransform::Reflection => {
                    for a in 0..d {
                        out[a] = axes[a].len() - 1 - m[a];
                    }
                }
            }
            grid.boundary_index(&out)
        })
        .collect())
}

/// `max |u(T x) -+ u(x)|` for one interior field.
pub fn interior_symmetry_defect(
    f: &GridFunction,
    transform: SymmetryTransform,
    parity: Parity,
) -> Result<f64> {
    let perm = lateral_permutation(f.grid(), transform)?;
    let nn = f.grid().normal_axis().len();
    let sign = match parity {
        Parity::Symmetric => -1.0,
        Parity::Antisymmetric => 1.0,
    };
    let v = f.values();
    let mut worst: f64 = 0.0;
    for (b, &tb) in perm.iter().enumerate() {
        for k in 0..nn {
            worst = worst.max((v[tb * nn + k] + sign * v[b * nn + k]).abs());
        }
    }
    Ok(worst)
}

/// `max |u(T x') -+ u(x')|` for one boundary field.
pub fn boundary_symmetry_defect(
    f: &BoundaryFunction,
    transform: SymmetryTransform,
    parity: Parity,
) -> Result<f64> {
    let perm = lateral_permutation(f.grid(), transform)?;
    let sign = match parity {
        Parity::Symmetric => -1.0,
        Parity::Antisymmetric => 1.0,
    };
    let v = f.values();
    Ok(perm
        .iter()
        .enumerate()
        .map(|(b, &tb)| (v[tb] + sign * v[b]).abs())
        .fold(0.0, f64::max))
}

/// Largest symmetry defect over every report level and the full boundary
/// trajectory.
pub fn check_symmetry(
    solution: &Solution,
    transform: SymmetryTransform,
    parity: Parity,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for f in solution.interior() {
        worst = worst.max(interior_symmetry_defect(f, transform, parity)?);
    }
    for f in solution.boundary() {
        worst = worst.max(boundary_symmetry_defect(f, transform, parity)?);
    }
    let traj = solution.trajectory();
    for j in 0..traj.len() {
        worst = worst.max(boundary_symmetry_defect(&traj.field(j), transform, parity)?);
    }
    Ok(worst)
}

/// `<u(t) - u0, phi>` for each test function (rows) and report level
/// (columns).
pub fn weak_trace_pairings(
    solution: &Solution,
    u0: &GridFunction,
    tests: &[&dyn Fn(&[f64]) -> f64],
) -> Vec<Vec<f64>> {
    tests
        .iter()
        .map(|phi| {
            solution
                .interior()
                .iter()
                .map(|u| u.combine(1.0, u0, -1.0).pair_with(phi))
                .collect()
        })
        .collect()
}
