//! Tensor-product discretization of the truncated half-space
//! `[-R, R]^{n-1} x [0, R]` and of its boundary `[-R, R]^{n-1}`.
//!
//! Axes `0..n-1` are the lateral (boundary) coordinates, axis `n-1` is the
//! normal coordinate `x_n`. Cells are indexed row-major with the normal axis
//! fastest, so an interior index is `boundary_index * N_n + k`.
//!
//! Refinement centers are boundary points. Their lateral coordinates become
//! cell faces on every lateral axis, so no centroid can land on one; when a
//! grading factor `g < 1` is set, cell widths grow by `1/g` per cell moving
//! away from each center (and away from `x_n = 0` on the normal axis).

use std::marker::PhantomData;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

pub const DEFAULT_CELL_BUDGET: usize = 1 << 25;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub radius: f64,
    pub cells_per_axis: usize,
    pub grading: Option<f64>,
    pub refinement_centers: Vec<Vec<f64>>,
    pub cell_budget: usize,
}

impl GridSpec {
    pub fn uniform(n: usize, radius: f64, cells_per_axis: usize) -> Self {
        GridSpec {
            n,
            radius,
            cells_per_axis,
            grading: None,
            refinement_centers: Vec::new(),
            cell_budget: DEFAULT_CELL_BUDGET,
        }
    }

    /// Grid graded toward the boundary origin.
    pub fn graded_at_origin(n: usize, radius: f64, cells_per_axis: usize, grading: f64) -> Self {
        GridSpec {
            n,
            radius,
            cells_per_axis,
            grading: Some(grading),
            refinement_centers: vec![vec![0.0; n - 1]],
            cell_budget: DEFAULT_CELL_BUDGET,
        }
    }

    pub fn interior_cell_count(&self) -> usize {
        self.cells_per_axis.saturating_pow(self.n as u32)
    }

    pub fn boundary_cell_count(&self) -> usize {
        self.cells_per_axis.saturating_pow(self.n as u32 - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Config(format!("dimension n = {} must be >= 3", self.n)));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::Config(format!("truncation radius {} must be > 0", self.radius)));
        }
        if self.cells_per_axis < 4 {
            return Err(Error::Config(format!(
                "cells_per_axis = {} must be >= 4",
                self.cells_per_axis
            )));
        }
        if let Some(g) = self.grading {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::Config(format!("grading {g} must lie in (0, 1]")));
            }
        }
        for c in &self.refinement_centers {
            if c.len() != self.n - 1 {
                return Err(Error::Config(format!(
                    "refinement center {c:?} must have {} coordinates",
                    self.n - 1
                )));
            }
            if c.iter().any(|x| !x.is_finite() || x.abs() >= self.radius) {
                return Err(Error::Config(format!(
                    "refinement center {c:?} must lie strictly inside the box of radius {}",
                    self.radius
                )));
            }
        }
        let total = self
            .interior_cell_count()
            .saturating_add(self.boundary_cell_count());
        if total > self.cell_budget {
            return Err(Error::Config(format!(
                "cell budget exceeded: {total} cells > budget {}",
                self.cell_budget
            )));
        }
        Ok(())
    }
}

/// One coordinate axis: cell edges, centroids and widths.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    edges: Vec<f64>,
    centroids: Vec<f64>,
    widths: Vec<f64>,
}

impl Axis {
    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::Config("an axis needs at least one cell".into()));
        }
        let mut centroids = Vec::with_capacity(edges.len() - 1);
        let mut widths = Vec::with_capacity(edges.len() - 1);
        for w in edges.windows(2) {
            let width = w[1] - w[0];
            if !(width > 0.0) {
                return Err(Error::Config(format!(
                    "non-positive cell width between {} and {}",
                    w[0], w[1]
                )));
            }
            centroids.push(0.5 * (w[0] + w[1]));
            widths.push(width);
        }
        Ok(Axis {
            edges,
            centroids,
            widths,
        })
    }

    pub fn len(&self) -> usize {
        self.widths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.widths.is_empty()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// True when the edges are exactly symmetric about zero.
    pub fn is_mirror_symmetric(&self) -> bool {
        let m = self.edges.len() - 1;
        (0..=m).all(|i| self.edges[m - i] == -self.edges[i])
    }

    /// Bracketing centroid pair and linear weight for `x`, or `None` when `x`
    /// falls outside the centroid hull.
    pub fn bracket(&self, x: f64) -> Option<(usize, f64)> {
        let c = &self.centroids;
        if c.len() == 1 {
            return (x == c[0]).then_some((0, 0.0));
        }
        if x < c[0] || x > c[c.len() - 1] {
            return None;
        }
        let hi = c.partition_point(|&v| v <= x).clamp(1, c.len() - 1);
        let lo = hi - 1;
        let w = (x - c[lo]) / (c[hi] - c[lo]);
        Some((lo, w))
    }
}

/// Offsets `0 = d_0 < ... < d_m = length` of a geometric cell sequence whose
/// first cell touches the refinement center.
fn graded_offsets(length: f64, m: usize, grading: f64) -> Vec<f64> {
    let mut d = Vec::with_capacity(m + 1);
    if grading >= 1.0 {
        for j in 0..=m {
            d.push(length * j as f64 / m as f64);
        }
    } else {
        let growth = 1.0 / grading;
        let denom = growth.powi(m as i32) - 1.0;
        for j in 0..=m {
            d.push(length * (growth.powi(j as i32) - 1.0) / denom);
        }
    }
    d[m] = length;
    d
}

fn allocate_cells(lengths: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = lengths.iter().sum();
    let mut counts: Vec<usize> = lengths
        .iter()
        .map(|l| ((total as f64 * l / sum).round() as usize).max(1))
        .collect();
    loop {
        let have: usize = counts.iter().sum();
        if have == total {
            break;
        }
        // adjust the segment with the largest length per cell (or smallest when removing)
        let pick = (0..counts.len())
            .filter(|&i| have < total || counts[i] > 1)
            .max_by(|&a, &b| {
                let ra = lengths[a] / counts[a] as f64;
                let rb = lengths[b] / counts[b] as f64;
                if have < total {
                    ra.total_cmp(&rb)
                } else {
                    rb.total_cmp(&ra)
                }
            })
            .expect("at least one adjustable segment");
        if have < total {
            counts[pick] += 1;
        } else {
            counts[pick] -= 1;
        }
    }
    counts
}

fn lateral_axis(radius: f64, cells: usize, grading: f64, centers: &[f64]) -> Result<Axis> {
    let mut cs: Vec<f64> = centers.to_vec();
    cs.sort_by(f64::total_cmp);
    cs.dedup();
    if cs.is_empty() {
        let edges = (0..=cells)
            .map(|j| radius * (2.0 * j as f64 - cells as f64) / cells as f64)
            .collect();
        return Axis::from_edges(edges);
    }
    let mut breaks = Vec::with_capacity(cs.len() + 2);
    breaks.push(-radius);
    breaks.extend_from_slice(&cs);
    breaks.push(radius);
    let lengths: Vec<f64> = breaks.windows(2).map(|w| w[1] - w[0]).collect();
    let segs = lengths.len();
    if cells < segs {
        return Err(Error::Config(format!(
            "{cells} cells cannot resolve {} refinement centers on one axis",
            cs.len()
        )));
    }
    let counts = allocate_cells(&lengths, cells);
    let mut edges = vec![-radius];
    for (s, &m) in counts.iter().enumerate() {
        let (a, b) = (breaks[s], breaks[s + 1]);
        let left_center = s > 0;
        let right_center = s + 1 < segs;
        let mut seg = Vec::with_capacity(m + 1);
        match (left_center, right_center) {
            (true, true) => {
                if m < 2 {
                    seg.push(a);
                    seg.push(b);
                } else {
                    let m1 = m.div_ceil(2);
                    let m2 = m - m1;
                    let half = 0.5 * (b - a);
                    let dl = graded_offsets(half, m1, grading);
                    let dr = graded_offsets(half, m2, grading);
                    seg.extend(dl.iter().map(|d| a + d));
                    let mid = seg[m1];
                    seg.extend(dr.iter().rev().skip(1).map(|d| b - d));
                    seg[m1] = mid;
                }
            }
            (true, false) => {
                let d = graded_offsets(b - a, m, grading);
                seg.extend(d.iter().map(|d| a + d));
                seg[m] = b;
            }
            (false, true) => {
                let d = graded_offsets(b - a, m, grading);
                seg.extend(d.iter().rev().map(|d| b - d));
                seg[0] = a;
            }
            (false, false) => unreachable!("segments without centers only occur when none exist"),
        }
        edges.extend_from_slice(&seg[1..]);
    }
    let last = edges.len() - 1;
    edges[last] = radius;
    Axis::from_edges(edges)
}

fn normal_axis(radius: f64, cells: usize, grading: f64) -> Result<Axis> {
    Axis::from_edges(graded_offsets(radius, cells, grading))
}

/// A built grid. Immutable once constructed; share it through `Arc`.
#[derive(Debug)]
pub struct Grid {
    spec: GridSpec,
    axes: Vec<Axis>,
    interior_measures: OnceLock<Vec<f64>>,
    boundary_measures: OnceLock<Vec<f64>>,
}

/// One measured cell: centroid and measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub centroid: Vec<f64>,
    pub measure: f64,
}

impl Grid {
    pub fn build(spec: GridSpec) -> Result<Arc<Grid>> {
        spec.validate()?;
        let grading = spec.grading.unwrap_or(1.0);
        let n = spec.n;
        let mut axes = Vec::with_capacity(n);
        for a in 0..n - 1 {
            let coords: Vec<f64> = spec.refinement_centers.iter().map(|c| c[a]).collect();
            axes.push(lateral_axis(spec.radius, spec.cells_per_axis, grading, &coords)?);
        }
        let normal_grading = if spec.refinement_centers.is_empty() {
            1.0
        } else {
            grading
        };
        axes.push(normal_axis(spec.radius, spec.cells_per_axis, normal_grading)?);
        Ok(Arc::new(Grid {
            spec,
            axes,
            interior_measures: OnceLock::new(),
            boundary_measures: OnceLock::new(),
        }))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn radius(&self) -> f64 {
        self.spec.radius
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn lateral_axes(&self) -> &[Axis] {
        &self.axes[..self.spec.n - 1]
    }

    pub fn normal_axis(&self) -> &Axis {
        &self.axes[self.spec.n - 1]
    }

    pub fn interior_shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::len).collect()
    }

    pub fn boundary_shape(&self) -> Vec<usize> {
        self.lateral_axes().iter().map(Axis::len).collect()
    }

    pub fn interior_len(&self) -> usize {
        self.axes.iter().map(Axis::len).product()
    }

    pub fn boundary_len(&self) -> usize {
        self.lateral_axes().iter().map(Axis::len).product()
    }

    /// Lateral multi-index of a boundary cell, written into `out`.
    pub fn boundary_multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for a in (0..self.spec.n - 1).rev() {
            let len = self.axes[a].len();
            out[a] = idx % len;
            idx /= len;
        }
    }

    pub fn boundary_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(self.lateral_axes())
            .fold(0, |acc, (&i, ax)| acc * ax.len() + i)
    }

    pub fn interior_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, ax)| acc * ax.len() + i)
    }

    pub fn interior_multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for a in (0..self.spec.n).rev() {
            let len = self.axes[a].len();
            out[a] = idx % len;
            idx /= len;
        }
    }

    pub fn interior_centroid(&self, idx: usize, out: &mut [f64]) {
        let mut multi = vec![0; self.spec.n];
        self.interior_multi_index(idx, &mut multi);
        for (a, &i) in multi.iter().enumerate() {
            out[a] = self.axes[a].centroids()[i];
        }
    }

    pub fn boundary_centroid(&self, idx: usize, out: &mut [f64]) {
        let mut multi = vec![0; self.spec.n - 1];
        self.boundary_multi_index(idx, &mut multi);
        for (a, &i) in multi.iter().enumerate() {
            out[a] = self.axes[a].centroids()[i];
        }
    }

    pub fn boundary_measures(&self) -> &[f64] {
        self.boundary_measures.get_or_init(|| {
            let mut m = vec![1.0];
            for ax in self.lateral_axes() {
                m = m
                    .iter()
                    .flat_map(|&outer| ax.widths().iter().map(move |&w| outer * w))
                    .collect();
            }
            m
        })
    }

    pub fn interior_measures(&self) -> &[f64] {
        self.interior_measures.get_or_init(|| {
            let heights = self.normal_axis().widths();
            self.boundary_measures()
                .iter()
                .flat_map(|&b| heights.iter().map(move |&h| b * h))
                .collect()
        })
    }

    /// Interior and boundary cell lists.
    pub fn cells(&self) -> (Vec<Cell>, Vec<Cell>) {
        let n = self.spec.n;
        let mut x = vec![0.0; n];
        let interior = (0..self.interior_len())
            .map(|i| {
                self.interior_centroid(i, &mut x);
                Cell {
                    centroid: x.clone(),
                    measure: self.interior_measures()[i],
                }
            })
            .collect();
        let mut xb = vec![0.0; n - 1];
        let boundary = (0..self.boundary_len())
            .map(|i| {
                self.boundary_centroid(i, &mut xb);
                Cell {
                    centroid: xb.clone(),
                    measure: self.boundary_measures()[i],
                }
            })
            .collect();
        (interior, boundary)
    }
}

/// Free-function form of [`Grid::build`].
pub fn build_grid(spec: GridSpec) -> Result<Arc<Grid>> {
    Grid::build(spec)
}

/// Where a sampled field lives.
pub trait Support: Send + Sync + 'static {
    const NAME: &'static str;
    fn len(grid: &Grid) -> usize;
    fn dim(grid: &Grid) -> usize;
    fn measures(grid: &Grid) -> &[f64];
    fn centroid(grid: &Grid, idx: usize, out: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct Interior;

#[derive(Debug, Clone, Copy)]
pub struct Boundary;

impl Support for Interior {
    const NAME: &'static str = "interior";
    fn len(grid: &Grid) -> usize {
        grid.interior_len()
    }
    fn dim(grid: &Grid) -> usize {
        grid.n()
    }
    fn measures(grid: &Grid) -> &[f64] {
        grid.interior_measures()
    }
    fn centroid(grid: &Grid, idx: usize, out: &mut [f64]) {
        grid.interior_centroid(idx, out)
    }
}

impl Support for Boundary {
    const NAME: &'static str = "boundary";
    fn len(grid: &Grid) -> usize {
        grid.boundary_len()
    }
    fn dim(grid: &Grid) -> usize {
        grid.n() - 1
    }
    fn measures(grid: &Grid) -> &[f64] {
        grid.boundary_measures()
    }
    fn centroid(grid: &Grid, idx: usize, out: &mut [f64]) {
        grid.boundary_centroid(idx, out)
    }
}

/// Cell-sampled real field on a grid.
#[derive(Debug)]
pub struct Field<S> {
    grid: Arc<Grid>,
    values: Vec<f64>,
    _support: PhantomData<S>,
}

pub type GridFunction = Field<Interior>;
pub type BoundaryFunction = Field<Boundary>;

impl<S> Clone for Field<S> {
    fn clone(&self) -> Self {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.clone(),
            _support: PhantomData,
        }
    }
}

impl<S: Support> Field<S> {
    /// Samples `f` at every cell centroid.
    pub fn sample(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let len = S::len(grid);
        let mut x = vec![0.0; S::dim(grid)];
        let mut values = Vec::with_capacity(len);
        for i in 0..len {
            S::centroid(grid, i, &mut x);
            let v = f(&x);
            if !v.is_finite() {
                return Err(Error::Sampling {
                    centroid: x,
                    value: v,
                });
            }
            values.push(v);
        }
        Ok(Field {
            grid: Arc::clone(grid),
            values,
            _support: PhantomData,
        })
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != S::len(grid) {
            return Err(Error::Config(format!(
                "{} field has {} values, grid has {} cells",
                S::NAME,
                values.len(),
                S::len(grid)
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            let mut x = vec![0.0; S::dim(grid)];
            S::centroid(grid, i, &mut x);
            return Err(Error::Sampling {
                centroid: x,
                value: values[i],
            });
        }
        Ok(Field {
            grid: Arc::clone(grid),
            values,
            _support: PhantomData,
        })
    }

    pub(crate) fn from_values_unchecked(grid: &Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), S::len(grid));
        Field {
            grid: Arc::clone(grid),
            values,
            _support: PhantomData,
        }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::from_values_unchecked(grid, vec![0.0; S::len(grid)])
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn measures(&self) -> &[f64] {
        S::measures(&self.grid)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::from_values_unchecked(&self.grid, self.values.iter().map(|v| a * v).collect())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        debug_assert!(Arc::ptr_eq(&self.grid, &other.grid) || self.len() == other.len());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::from_values_unchecked(&self.grid, values)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Quadrature pairing `sum_i f_i g(x_i) |cell_i|`.
    pub fn pair_with(&self, g: impl Fn(&[f64]) -> f64) -> f64 {
        let mut x = vec![0.0; S::dim(&self.grid)];
        let m = self.measures();
        let mut acc = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            S::centroid(&self.grid, i, &mut x);
            acc += v * g(&x) * m[i];
        }
        acc
    }
}

/// Samples an interior field at cell centroids.
pub fn sample_field(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Result<GridFunction> {
    GridFunction::sample(grid, f)
}

/// Samples a boundary field at boundary-cell centroids.
pub fn sample_boundary_field(
    grid: &Arc<Grid>,
    f: impl Fn(&[f64]) -> f64,
) -> Result<BoundaryFunction> {
    BoundaryFunction::sample(grid, f)
}
