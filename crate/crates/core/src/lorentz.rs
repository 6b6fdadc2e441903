//! Distribution functions, decreasing rearrangements and Lorentz
//! quasi-norms / norms of cell-sampled fields.
//!
//! A sampled field is a step function, so its rearrangement `f*` is an exact
//! finite step function and `f**` is piecewise of the form `A/t + v`. All
//! norms below are evaluated in closed form on those pieces, except the
//! `f**` norm for non-integer `r`, which uses Gauss-Legendre on `ln t`.

use crate::error::{Error, Result};
use crate::grid::{BoundaryFunction, Field, GridFunction, Support};

/// Anything that carries `(value, measure)` pairs.
pub trait Measured {
    fn values(&self) -> &[f64];
    fn measures(&self) -> &[f64];
}

impl<S: Support> Measured for Field<S> {
    fn values(&self) -> &[f64] {
        Field::values(self)
    }
    fn measures(&self) -> &[f64] {
        Field::measures(self)
    }
}

/// Raw weighted samples.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSamples {
    pub values: Vec<f64>,
    pub measures: Vec<f64>,
}

impl WeightedSamples {
    pub fn new(values: Vec<f64>, measures: Vec<f64>) -> Result<Self> {
        if values.len() != measures.len() {
            return Err(Error::Config("values and measures differ in length".into()));
        }
        if measures.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(Error::Config("cell measures must be finite and > 0".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sample values must be finite".into()));
        }
        Ok(WeightedSamples { values, measures })
    }
}

impl Measured for WeightedSamples {
    fn values(&self) -> &[f64] {
        &self.values
    }
    fn measures(&self) -> &[f64] {
        &self.measures
    }
}

/// Lorentz index `(p, r)` with `p > 1` and `r` in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzIndex {
    p: f64,
    r: f64,
}

impl LorentzIndex {
    pub fn new(p: f64, r: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Config(format!("Lorentz exponent p = {p} must be > 1")));
        }
        if !(r >= 1.0) {
            return Err(Error::Config(format!("Lorentz exponent r = {r} must be >= 1")));
        }
        Ok(LorentzIndex { p, r })
    }

    /// Weak-`L^p`, i.e. `L^(p, inf)`.
    pub fn weak(p: f64) -> Result<Self> {
        Self::new(p, f64::INFINITY)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn is_weak(&self) -> bool {
        self.r.is_infinite()
    }
}

/// `lambda_f(s) = |{ |f| > s }|`.
pub fn distribution_function(f: &impl Measured, s: f64) -> f64 {
    f.values()
        .iter()
        .zip(f.measures())
        .filter(|(v, _)| v.abs() > s)
        .map(|(_, m)| m)
        .sum()
}

/// Decreasing rearrangement as a step function: `f*(t) = values[k]` on
/// `[breakpoints[k], breakpoints[k+1])`, with `breakpoints[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRearrangement {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepRearrangement {
    pub fn of(f: &impl Measured) -> Self {
        let mut pairs: Vec<(f64, f64)> = f
            .values()
            .iter()
            .zip(f.measures())
            .map(|(v, m)| (v.abs(), *m))
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut breakpoints = vec![0.0];
        let mut values: Vec<f64> = Vec::new();
        let mut acc = 0.0;
        for (v, m) in pairs {
            acc += m;
            if values.last() == Some(&v) {
                *breakpoints.last_mut().unwrap() = acc;
            } else {
                values.push(v);
                breakpoints.push(acc);
            }
        }
        StepRearrangement {
            breakpoints,
            values,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total_measure(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.values.first().is_none_or(|&v| v == 0.0)
    }

    /// `f*(t)` (right-continuous).
    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return f64::NAN;
        }
        let k = self.breakpoints[1..].partition_point(|&b| b <= t);
        self.values.get(k).copied().unwrap_or(0.0)
    }

    pub fn double_star(&self) -> DoubleStar {
        let mut cumulative = Vec::with_capacity(self.breakpoints.len());
        cumulative.push(0.0);
        let mut acc = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            acc += v * (self.breakpoints[k + 1] - self.breakpoints[k]);
            cumulative.push(acc);
        }
        DoubleStar {
            rearrangement: self.clone(),
            cumulative,
        }
    }
}

pub fn rearrangement(f: &impl Measured) -> StepRearrangement {
    StepRearrangement::of(f)
}

/// `f**(t) = (1/t) int_0^t f*`, stored through the cumulative integrals at the
/// breakpoints; on piece `k` it equals `offset_k / t + values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleStar {
    rearrangement: StepRearrangement,
    cumulative: Vec<f64>,
}

impl DoubleStar {
    pub fn rearrangement(&self) -> &StepRearrangement {
        &self.rearrangement
    }

    /// `int_0^{t_k} f*` at every breakpoint.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Coefficients `(A, v)` with `f**(t) = A/t + v` on piece `k`
    /// (`k == K` is the tail beyond the support).
    pub fn piece(&self, k: usize) -> (f64, f64) {
        let r = &self.rearrangement;
        if k >= r.values.len() {
            return (*self.cumulative.last().unwrap(), 0.0);
        }
        let v = r.values[k];
        (self.cumulative[k] - v * r.breakpoints[k], v)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.rearrangement.values.first().copied().unwrap_or(0.0);
        }
        let k = self.rearrangement.breakpoints[1..].partition_point(|&b| b <= t);
        let (a, v) = self.piece(k);
        a / t + v
    }
}

pub fn double_star(rearr: &StepRearrangement) -> DoubleStar {
    rearr.double_star()
}

/// `||f||*_{(p,r)}`, the rearrangement quasi-norm.
pub fn quasi_norm_star(f: &impl Measured, idx: LorentzIndex) -> f64 {
    quasi_norm_star_of(&StepRearrangement::of(f), idx)
}

pub fn quasi_norm_star_of(rearr: &StepRearrangement, idx: LorentzIndex) -> f64 {
    let (p, r) = (idx.p, idx.r);
    let t = &rearr.breakpoints;
    let v = &rearr.values;
    if r.is_infinite() {
        return v
            .iter()
            .enumerate()
            .map(|(k, vk)| t[k + 1].powf(1.0 / p) * vk)
            .fold(0.0, f64::max);
    }
    let e = r / p;
    let sum: f64 = v
        .iter()
        .enumerate()
        .filter(|(_, vk)| **vk > 0.0)
        .map(|(k, vk)| vk.powf(r) * (p / r) * (t[k + 1].powf(e) - t[k].powf(e)))
        .sum();
    sum.powf(1.0 / r)
}

/// `||f||_{(p,r)}`, the norm built on `f**`.
pub fn norm(f: &impl Measured, idx: LorentzIndex) -> f64 {
    norm_of(&StepRearrangement::of(f).double_star(), idx)
}

pub fn norm_of(ds: &DoubleStar, idx: LorentzIndex) -> f64 {
    let (p, r) = (idx.p, idx.r);
    let rearr = &ds.rearrangement;
    let t = &rearr.breakpoints;
    let kk = rearr.values.len();
    if kk == 0 || rearr.is_zero() {
        return 0.0;
    }
    if r.is_infinite() {
        // t^{1/p} f**(t) = A t^{1/p-1} + v t^{1/p} has no interior maximum on a
        // piece, so the supremum sits at a breakpoint.
        return (1..=kk)
            .map(|k| ds.cumulative[k] * t[k].powf(1.0 / p - 1.0))
            .fold(0.0, f64::max);
    }
    let e = r / p;
    // first piece: f** = v_1
    let mut sum = rearr.values[0].powf(r) * (p / r) * t[1].powf(e);
    for k in 1..kk {
        let (a, v) = ds.piece(k);
        sum += piece_integral(a, v, t[k], t[k + 1], p, r);
    }
    // tail: f** = F_K / t
    let fk = ds.cumulative[kk];
    sum += fk.powf(r) * t[kk].powf(e - r) / (r - e);
    sum.powf(1.0 / r)
}

/// `int_a^b t^{r/p - 1} (A/t + v)^r dt` for `A, v >= 0`, `0 < a < b`.
fn piece_integral(big_a: f64, v: f64, a: f64, b: f64, p: f64, r: f64) -> f64 {
    let e = r / p;
    if big_a == 0.0 {
        return v.powf(r) * (b.powf(e) - a.powf(e)) / e;
    }
    if v == 0.0 {
        return big_a.powf(r) * (a.powf(e - r) - b.powf(e - r)) / (r - e);
    }
    if r.fract() == 0.0 && r <= 64.0 {
        // binomial expansion: every term is nonnegative
        let ri = r as i32;
        let mut binom = 1.0;
        let mut acc = 0.0;
        for j in 0..=ri {
            if j > 0 {
                binom = binom * (ri - j + 1) as f64 / j as f64;
            }
            let ex = e - j as f64;
            let integral = if ex.abs() < 1e-14 {
                (b / a).ln()
            } else {
                (b.powf(ex) - a.powf(ex)) / ex
            };
            acc += binom * big_a.powi(j) * v.powi(ri - j) * integral;
        }
        return acc;
    }
    // Gauss-Legendre in u = ln t, chunks of width <= 0.5
    let (la, lb) = (a.ln(), b.ln());
    let chunks = ((lb - la) / 0.5).ceil().max(1.0) as usize;
    let h = (lb - la) / chunks as f64;
    let (nodes, weights) = gauss_legendre_16();
    let mut acc = 0.0;
    for c in 0..chunks {
        let lo = la + c as f64 * h;
        for (x, w) in nodes.iter().zip(weights) {
            let u = lo + 0.5 * h * (x + 1.0);
            let tt = u.exp();
            acc += w * 0.5 * h * tt.powf(e) * (big_a / tt + v).powf(r);
        }
    }
    acc
}

fn gauss_legendre_16() -> (&'static [f64], &'static [f64]) {
    use std::sync::OnceLock;
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let rule = RULE.get_or_init(|| crate::quadrature::gauss_legendre(16));
    (&rule.0, &rule.1)
}

/// `L^p` norm by cell quadrature.
pub fn lp_norm(f: &impl Measured, p: f64) -> f64 {
    f.values()
        .iter()
        .zip(f.measures())
        .map(|(v, m)| v.abs().powf(p) * m)
        .sum::<f64>()
        .powf(1.0 / p)
}

/// `||f||_{L^(p,inf)(R^n_+)} + ||f|_bdry||_{L^(q,inf)(bdry)}`, both in the
/// `f**` flavor.
pub fn xpq_norm(interior: &GridFunction, boundary: &BoundaryFunction, p: f64, q: f64) -> Result<f64> {
    Ok(norm(interior, LorentzIndex::weak(p)?) + norm(boundary, LorentzIndex::weak(q)?))
}
