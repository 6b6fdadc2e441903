use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::sweep::{apply_axes, apply_axis, outer_with, AxisMatrix};
use crate::error::{Error, Result};
use crate::grid::{Axis, BoundaryFunction, Grid, GridFunction};
use crate::kernel::{cell_integral, heat_1d, reflected_cell_integral};

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time t = {t} must be > 0")))
    }
}

fn lateral_matrix(ax: &Axis, t: f64) -> AxisMatrix {
    let c = ax.centroids();
    let e = ax.edges();
    AxisMatrix::from_fn(ax.len(), ax.len(), |i, j| cell_integral(c[i], e[j], e[j + 1], t))
}

fn normal_matrix(ax: &Axis, t: f64) -> AxisMatrix {
    let c = ax.centroids();
    let e = ax.edges();
    AxisMatrix::from_fn(ax.len(), ax.len(), |i, j| {
        reflected_cell_integral(c[i], e[j], e[j + 1], t)
    })
}

fn trace_row(ax: &Axis, t: f64) -> AxisMatrix {
    let e = ax.edges();
    AxisMatrix::row_vector(
        e.windows(2)
            .map(|w| 2.0 * cell_integral(0.0, w[0], w[1], t))
            .collect(),
    )
}

/// `2 g_1(x_n, t)` at normal-axis centroids.
pub(crate) fn normal_profile(ax: &Axis, t: f64) -> Vec<f64> {
    ax.centroids().iter().map(|&x| 2.0 * heat_1d(x, t)).collect()
}

type LateralSet = Arc<Vec<Arc<AxisMatrix>>>;

/// Kernel operators on one grid, with an optional cache of the lateral
/// convolution matrices keyed by time.
#[derive(Debug)]
pub struct Operators {
    grid: Arc<Grid>,
    cache: Option<Mutex<HashMap<u64, LateralSet>>>,
}

impl Operators {
    pub fn new(grid: &Arc<Grid>) -> Self {
        Operators {
            grid: Arc::clone(grid),
            cache: None,
        }
    }

    pub fn with_cache(grid: &Arc<Grid>) -> Self {
        Operators {
            grid: Arc::clone(grid),
            cache: Some(Mutex::new(HashMap::new())),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn build_lateral(&self, t: f64) -> LateralSet {
        let axes = self.grid.lateral_axes();
        let mut out: Vec<Arc<AxisMatrix>> = Vec::with_capacity(axes.len());
        for (a, ax) in axes.iter().enumerate() {
            // axes with identical edges share one matrix
            match (0..a).find(|&b| axes[b].edges() == ax.edges()) {
                Some(b) => {
                    let shared = Arc::clone(&out[b]);
                    out.push(shared);
                }
                None => out.push(Arc::new(lateral_matrix(ax, t))),
            }
        }
        Arc::new(out)
    }

    pub(crate) fn lateral(&self, t: f64) -> LateralSet {
        match &self.cache {
            None => self.build_lateral(t),
            Some(m) => {
                if let Some(hit) = m.lock().expect("cache lock").get(&t.to_bits()) {
                    return Arc::clone(hit);
                }
                let built = self.build_lateral(t);
                m.lock()
                    .expect("cache lock")
                    .entry(t.to_bits())
                    .or_insert_with(|| Arc::clone(&built));
                built
            }
        }
    }

    /// Lateral convolution of a tensor whose leading axes are the lateral
    /// axes (trailing axes of total size `inner` are carried along).
    pub(crate) fn apply_lateral(&self, data: &[f64], t: f64, inner: usize) -> Vec<f64> {
        let mats = self.lateral(t);
        let mut shape = self.grid.boundary_shape();
        if inner > 1 {
            shape.push(inner);
        }
        let ops: Vec<(usize, &AxisMatrix)> =
            mats.iter().enumerate().map(|(a, m)| (a, m.as_ref())).collect();
        apply_axes(data, &shape, &ops)
    }

    /// `E(t) u0` at interior centroids.
    pub fn semigroup(&self, u0: &GridFunction, t: f64) -> Result<GridFunction> {
        check_time(t)?;
        let shape = self.grid.interior_shape();
        let n = self.grid.n();
        let normal = normal_matrix(self.grid.normal_axis(), t);
        let data = apply_axis(u0.values(), &shape, n - 1, &normal);
        let out = self.apply_lateral(&data, t, self.grid.normal_axis().len());
        Ok(GridFunction::from_values_unchecked(&self.grid, out))
    }

    /// `[E(t) u0](x', 0)` at boundary centroids.
    pub fn trace(&self, u0: &GridFunction, t: f64) -> Result<BoundaryFunction> {
        check_time(t)?;
        let shape = self.grid.interior_shape();
        let n = self.grid.n();
        let row = trace_row(self.grid.normal_axis(), t);
        let data = apply_axis(u0.values(), &shape, n - 1, &row);
        let out = self.apply_lateral(&data, t, 1);
        Ok(BoundaryFunction::from_values_unchecked(&self.grid, out))
    }

    /// `G_2(phi)(y', t)`; the same computation as [`Operators::trace`].
    pub fn g2(&self, phi: &GridFunction, t: f64) -> Result<BoundaryFunction> {
        self.trace(phi, t)
    }

    /// `G_1(psi)` at boundary centroids.
    pub fn g1_boundary(&self, psi: &BoundaryFunction, t: f64) -> Result<BoundaryFunction> {
        check_time(t)?;
        let lat = self.apply_lateral(psi.values(), t, 1);
        let c = 2.0 * heat_1d(0.0, t);
        Ok(BoundaryFunction::from_values_unchecked(
            &self.grid,
            lat.into_iter().map(|v| c * v).collect(),
        ))
    }

    /// `G_1(psi)` at interior centroids.
    pub fn g1_interior(&self, psi: &BoundaryFunction, t: f64) -> Result<GridFunction> {
        check_time(t)?;
        let lat = self.apply_lateral(psi.values(), t, 1);
        let prof = normal_profile(self.grid.normal_axis(), t);
        Ok(GridFunction::from_values_unchecked(&self.grid, outer_with(&lat, &prof)))
    }
}

pub fn heat_semigroup(u0: &GridFunction, t: f64) -> Result<GridFunction> {
    Operators::new(u0.grid()).semigroup(u0, t)
}

pub fn heat_semigroup_trace(u0: &GridFunction, t: f64) -> Result<BoundaryFunction> {
    Operators::new(u0.grid()).trace(u0, t)
}

pub fn g1_boundary(psi: &BoundaryFunction, t: f64) -> Result<BoundaryFunction> {
    Operators::new(psi.grid()).g1_boundary(psi, t)
}

pub fn g1_interior(psi: &BoundaryFunction, t: f64) -> Result<GridFunction> {
    Operators::new(psi.grid()).g1_interior(psi, t)
}

pub fn g2(phi: &GridFunction, t: f64) -> Result<BoundaryFunction> {
    Operators::new(phi.grid()).g2(phi, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::kernel::{half_space_kernel, whole_space_kernel, KernelPoint};

    /// Direct quadrature: every target centroid against every source cell,
    /// with the pointwise kernel integrated by a `sub^n` midpoint rule.
    fn brute_semigroup(u0: &GridFunction, t: f64, sub: usize) -> Vec<f64> {
        let grid = u0.grid();
        let n = grid.n();
        let mut x = vec![0.0; n];
        let mut multi = vec![0; n];
        let mut out = vec![0.0; grid.interior_len()];
        for (i, o) in out.iter_mut().enumerate() {
            grid.interior_centroid(i, &mut x);
            for j in 0..grid.interior_len() {
                grid.interior_multi_index(j, &mut multi);
                let mut acc = 0.0;
                let total = sub.pow(n as u32);
                for s in 0..total {
                    let mut r = s;
                    let mut y = vec![0.0; n];
                    let mut vol = 1.0;
                    for a in (0..n).rev() {
                        let k = r % sub;
                        r /= sub;
                        let e = grid.axes()[a].edges();
                        let h = (e[multi[a] + 1] - e[multi[a]]) / sub as f64;
                        y[a] = e[multi[a]] + (k as f64 + 0.5) * h;
                        vol *= h;
                    }
                    let kp = KernelPoint::new(x.clone(), y, t).unwrap();
                    acc += half_space_kernel(&kp) * vol;
                }
                *o += acc * u0.values()[j];
            }
        }
        out
    }

    #[test]
    fn semigroup_matches_direct_quadrature() {
        let grid = Grid::build(GridSpec::uniform(3, 2.0, 4)).unwrap();
        let u0 = GridFunction::sample(&grid, |x| (-(x[0] - 0.3).powi(2) - x[1].powi(2) - x[2]).exp()).unwrap();
        let fast = heat_semigroup(&u0, 0.7).unwrap();
        // Richardson-extrapolated subcell midpoint rule
        let coarse = brute_semigroup(&u0, 0.7, 8);
        let fine = brute_semigroup(&u0, 0.7, 16);
        for ((a, c), f) in fast.values().iter().zip(&coarse).zip(&fine) {
            let b = (4.0 * f - c) / 3.0;
            assert!((a - b).abs() < 1e-6 * b.abs().max(1e-3), "{a} vs {b}");
        }
    }

    #[test]
    fn constant_data_is_preserved() {
        let grid = Grid::build(GridSpec::uniform(3, 12.0, 24)).unwrap();
        let one = GridFunction::sample(&grid, |_| 1.0).unwrap();
        let t = 0.5;
        let e = heat_semigroup(&one, t).unwrap();
        let tr = heat_semigroup_trace(&one, t).unwrap();
        let near = |x: &[f64]| x.iter().all(|c| c.abs() < 4.0);
        let mut x = vec![0.0; 3];
        for (i, v) in e.values().iter().enumerate() {
            grid.interior_centroid(i, &mut x);
            if near(&x) {
                assert!((v - 1.0).abs() < 1e-6);
            }
        }
        let mut xb = vec![0.0; 2];
        for (i, v) in tr.values().iter().enumerate() {
            grid.boundary_centroid(i, &mut xb);
            if near(&xb) {
                assert!((v - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn semigroup_maps_gaussians_to_gaussians() {
        // even extension makes E(t) the free heat flow: E(t) g(., s) = g(., t + s);
        // piecewise-constant data gives a second-order error
        let s = 0.5;
        let t = 0.3;
        let err = |cells: usize| {
            let grid = Grid::build(GridSpec::uniform(3, 8.0, cells)).unwrap();
            let u0 = GridFunction::sample(&grid, |x| whole_space_kernel(x, s).unwrap()).unwrap();
            let e = heat_semigroup(&u0, t).unwrap();
            let exact =
                GridFunction::sample(&grid, |x| whole_space_kernel(x, s + t).unwrap()).unwrap();
            let peak = exact.values().iter().cloned().fold(0.0, f64::max);
            e.max_abs_diff(&exact) / peak
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e2 < 5e-3, "{e2}");
        assert!(e1 / e2 > 3.5 && e1 / e2 < 4.5, "{e1} {e2}");
    }

    #[test]
    fn g2_is_the_trace() {
        let grid = Grid::build(GridSpec::uniform(3, 3.0, 8)).unwrap();
        let phi = GridFunction::sample(&grid, |x| x[0] + x[1] * x[2]).unwrap();
        assert_eq!(g2(&phi, 0.4).unwrap().values(), heat_semigroup_trace(&phi, 0.4).unwrap().values());
    }

    #[test]
    fn g1_matches_direct_boundary_quadrature() {
        let grid = Grid::build(GridSpec::uniform(3, 2.0, 6)).unwrap();
        let psi = BoundaryFunction::sample(&grid, |y| 1.0 + y[0] - 0.5 * y[1] * y[1]).unwrap();
        let t = 0.6;
        let fast_b = g1_boundary(&psi, t).unwrap();
        let fast_i = g1_interior(&psi, t).unwrap();
        let sub = 40;
        let (interior, boundary) = grid.cells();
        let src: Vec<(Vec<f64>, f64)> = {
            let mut pts = Vec::new();
            for (j, cell) in boundary.iter().enumerate() {
                let w: Vec<f64> = (0..2).map(|a| grid.axes()[a].widths()[{
                    let mut m = [0usize; 2];
                    grid.boundary_multi_index(j, &mut m);
                    m[a]
                }]).collect();
                for p in 0..sub {
                    for q in 0..sub {
                        let y0 = cell.centroid[0] - 0.5 * w[0] + (p as f64 + 0.5) * w[0] / sub as f64;
                        let y1 = cell.centroid[1] - 0.5 * w[1] + (q as f64 + 0.5) * w[1] / sub as f64;
                        pts.push((vec![y0, y1, 0.0], psi.values()[j] * w[0] * w[1] / (sub * sub) as f64));
                    }
                }
            }
            pts
        };
        let eval = |x: &[f64]| -> f64 {
            src.iter()
                .map(|(y, wv)| half_space_kernel(&KernelPoint::new(x.to_vec(), y.clone(), t).unwrap()) * wv)
                .sum()
        };
        // subcell midpoint error is ~1e-4 relative in the Gaussian tails
        let scale = fast_b.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (i, cell) in boundary.iter().enumerate() {
            let x = vec![cell.centroid[0], cell.centroid[1], 0.0];
            let r = eval(&x);
            assert!((fast_b.values()[i] - r).abs() < 1e-4 * scale, "{} vs {r}", fast_b.values()[i]);
        }
        for (i, cell) in interior.iter().enumerate().step_by(7) {
            let r = eval(&cell.centroid);
            assert!((fast_i.values()[i] - r).abs() < 1e-4 * scale);
        }
    }

    #[test]
    fn nonpositive_time_is_rejected() {
        let grid = Grid::build(GridSpec::uniform(3, 1.0, 4)).unwrap();
        let u = GridFunction::zeros(&grid);
        assert!(matches!(heat_semigroup(&u, 0.0), Err(Error::Domain(_))));
        assert!(matches!(g1_boundary(&BoundaryFunction::zeros(&grid), -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn cached_and_uncached_agree_bitwise() {
        let grid = Grid::build(GridSpec::graded_at_origin(3, 3.0, 10, 0.8)).unwrap();
        let psi = BoundaryFunction::sample(&grid, |y| (y[0] - y[1]).cos()).unwrap();
        let cached = Operators::with_cache(&grid);
        let a = cached.g1_boundary(&psi, 0.3).unwrap();
        let b = cached.g1_boundary(&psi, 0.3).unwrap();
        let c = g1_boundary(&psi, 0.3).unwrap();
        assert_eq!(a.values(), b.values());
        assert_eq!(a.values(), c.values());
    }
}
