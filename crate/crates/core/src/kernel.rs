//! Whole-space heat kernel and the half-space (Neumann) Green function
//!
//! `G(x, y, t) = (4 pi t)^{-n/2} [exp(-|x-y|^2/4t) + exp(-|x-y*|^2/4t)]`,
//! with `y* = (y', -y_n)`.
//!
//! The Green function is a product of one-dimensional Gaussians, which is
//! what the operators exploit: cell integrals of `G` factor into per-axis
//! integrals evaluated with `erf`/`erfc`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid;

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time t = {t} must be > 0")))
    }
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `g(x, t) = (4 pi t)^{-n/2} exp(-|x|^2 / 4t)` with `n = x.len()`.
pub fn whole_space_kernel(x: &[f64], t: f64) -> Result<f64> {
    check_time(t)?;
    let n = x.len() as f64;
    Ok((4.0 * PI * t).powf(-0.5 * n) * (-norm_sq(x) / (4.0 * t)).exp())
}

/// Arguments of the half-space Green function.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelPoint {
    x: Vec<f64>,
    y: Vec<f64>,
    t: f64,
}

impl KernelPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>, t: f64) -> Result<Self> {
        check_time(t)?;
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::Domain("x and y must share a dimension >= 2".into()));
        }
        let n = x.len();
        if x[n - 1] < 0.0 || y[n - 1] < 0.0 {
            return Err(Error::Domain(format!(
                "points must lie in the closed half-space (x_n = {}, y_n = {})",
                x[n - 1],
                y[n - 1]
            )));
        }
        Ok(KernelPoint { x, y, t })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

pub fn half_space_kernel(kp: &KernelPoint) -> f64 {
    let n = kp.x.len();
    let mut direct = 0.0;
    let mut reflected = 0.0;
    for a in 0..n {
        let d = kp.x[a] - kp.y[a];
        direct += d * d;
        let e = if a == n - 1 { kp.x[a] + kp.y[a] } else { d };
        reflected += e * e;
    }
    let four_t = 4.0 * kp.t;
    (4.0 * PI * kp.t).powf(-0.5 * n as f64) * ((-direct / four_t).exp() + (-reflected / four_t).exp())
}

/// One-dimensional heat kernel `(4 pi t)^{-1/2} exp(-x^2 / 4t)`.
#[inline]
pub fn heat_1d(x: f64, t: f64) -> f64 {
    (-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

/// `int_a^b heat_1d(x - y, t) dy`, exact via `erf`/`erfc`.
///
/// Far tails go through `erfc` so they keep relative precision, and the
/// branches are mirror-consistent: `cell_integral(-x, -b, -a, t)` returns the
/// bit-identical value.
#[inline]
pub fn cell_integral(x: f64, a: f64, b: f64, t: f64) -> f64 {
    let s = 2.0 * t.sqrt();
    let lo = (a - x) / s;
    let hi = (b - x) / s;
    if lo >= 0.0 {
        0.5 * (libm::erfc(lo) - libm::erfc(hi))
    } else if hi <= 0.0 {
        0.5 * (libm::erfc(-hi) - libm::erfc(-lo))
    } else {
        0.5 * (libm::erf(hi) - libm::erf(lo))
    }
}

/// Cell integral of the even (Neumann) extension in the normal direction:
/// `int_a^b [heat_1d(x - y) + heat_1d(x + y)] dy`.
#[inline]
pub fn reflected_cell_integral(x: f64, a: f64, b: f64, t: f64) -> f64 {
    cell_integral(x, a, b, t) + cell_integral(-x, a, b, t)
}

/// `g(x, t) * (t + |x|^2)^{n/2}`, the quantity bounded by the pointwise
/// estimate at `delta = 0`.
pub fn pointwise_ratio(x: &[f64], t: f64) -> Result<f64> {
    let g = whole_space_kernel(x, t)?;
    Ok(g * (t + norm_sq(x)).powf(0.5 * x.len() as f64))
}

/// Smallest `C_0` found by a coarse search over `|x|` in `[0, r_max]` and
/// `t` in `[t_min, t_max]` (geometric) such that `g <= C_0 (t+|x|^2)^{-n/2}`.
pub fn calibrate_pointwise_constant(n: usize, samples: usize) -> f64 {
    let mut best: f64 = 0.0;
    let mut x = vec![0.0; n];
    for i in 0..samples {
        let t = 10f64.powf(-3.0 + 6.0 * i as f64 / (samples - 1) as f64);
        for j in 0..samples {
            x[0] = 20.0 * t.sqrt() * j as f64 / (samples - 1) as f64;
            best = best.max(pointwise_ratio(&x, t).expect("t > 0"));
        }
    }
    best
}

pub fn check_pointwise_bound(x: &[f64], t: f64, c0: f64) -> Result<bool> {
    let g = whole_space_kernel(x, t)?;
    Ok(g <= c0 * (t + norm_sq(x)).powf(-0.5 * x.len() as f64))
}

/// `sum over cells of int_cell G(x, y, t) dy` for an arbitrary point `x` of
/// the closed half-space. Separability turns this into a product of per-axis
/// telescoping sums.
pub fn kernel_mass(grid: &Grid, x: &[f64], t: f64) -> Result<f64> {
    check_time(t)?;
    let n = grid.n();
    if x.len() != n {
        return Err(Error::Domain(format!("point has {} coordinates, expected {n}", x.len())));
    }
    let mut mass = 1.0;
    for (a, ax) in grid.axes().iter().enumerate() {
        let e = ax.edges();
        let s: f64 = if a + 1 < n {
            e.windows(2).map(|w| cell_integral(x[a], w[0], w[1], t)).sum()
        } else {
            e.windows(2)
                .map(|w| reflected_cell_integral(x[a], w[0], w[1], t))
                .sum()
        };
        mass *= s;
    }
    Ok(mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn kernel_at_origin() {
        let g = whole_space_kernel(&[0.0; 3], 1.0).unwrap();
        assert!((g - (4.0 * PI).powf(-1.5)).abs() < 1e-16);
        assert!((g - 0.0224484).abs() < 1e-7);
        let kp = KernelPoint::new(vec![0.0; 3], vec![0.0; 3], 1.0).unwrap();
        assert!((half_space_kernel(&kp) - 0.0448968).abs() < 1e-7);
    }

    #[test]
    fn kernel_is_even() {
        let a = whole_space_kernel(&[0.3, -1.2, 0.7], 0.4).unwrap();
        let b = whole_space_kernel(&[-0.3, 1.2, -0.7], 0.4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nonpositive_time_is_a_domain_error() {
        assert!(matches!(whole_space_kernel(&[0.0; 3], 0.0), Err(Error::Domain(_))));
        assert!(matches!(
            KernelPoint::new(vec![0.0; 3], vec![0.0; 3], -1.0),
            Err(Error::Domain(_))
        ));
        assert!(KernelPoint::new(vec![0.0, 0.0, -0.1], vec![0.0; 3], 1.0).is_err());
    }

    #[test]
    fn boundary_points_double_the_free_kernel() {
        let x = vec![0.4, -0.2, 0.0];
        let y = vec![-0.1, 0.5, 0.0];
        let kp = KernelPoint::new(x.clone(), y.clone(), 0.3).unwrap();
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let g = whole_space_kernel(&d, 0.3).unwrap();
        assert!((half_space_kernel(&kp) - 2.0 * g).abs() < 1e-16);
    }

    #[test]
    fn whole_space_mass_is_one() {
        // product of 1D telescoping erf sums over [-8, 8]^3; the box misses
        // mass 1 - erf(4)^3 ~ 4.6e-8
        let edges: Vec<f64> = (0..=64).map(|i| -8.0 + 0.25 * i as f64).collect();
        let one_d: f64 = edges.windows(2).map(|w| cell_integral(0.0, w[0], w[1], 1.0)).sum();
        assert!((one_d - libm::erf(4.0)).abs() < 1e-14);
        assert!((one_d.powi(3) - 1.0).abs() < 1e-7);
        // midpoint quadrature of the pointwise kernel agrees
        let mut acc = 0.0;
        let h = 0.25;
        for i in 0..64 {
            for j in 0..64 {
                for k in 0..64 {
                    let x = [-8.0 + h * (i as f64 + 0.5), -8.0 + h * (j as f64 + 0.5), -8.0 + h * (k as f64 + 0.5)];
                    acc += whole_space_kernel(&x, 1.0).unwrap() * h * h * h;
                }
            }
        }
        // Euler-Maclaurin endpoint terms at the box faces are ~2e-9
        assert!((acc - libm::erf(4.0).powi(3)).abs() < 5e-9, "{acc}");
    }

    #[test]
    fn cell_integral_matches_midpoint_refinement_and_mirrors_exactly() {
        let (x, a, b, t) = (0.3, -0.2, 0.9, 0.05);
        let n = 200_000;
        let h = (b - a) / n as f64;
        let mid: f64 = (0..n).map(|i| heat_1d(x - (a + (i as f64 + 0.5) * h), t) * h).sum();
        assert!((cell_integral(x, a, b, t) - mid).abs() < 1e-10);
        for &(x, a, b) in &[(0.3, 1.0, 2.0), (0.3, -2.0, -1.0), (0.0, -0.5, 0.5), (5.0, -1.0, 0.0)] {
            assert_eq!(cell_integral(x, a, b, 0.1), cell_integral(-x, -b, -a, 0.1));
        }
        // tails keep relative precision
        let tail = cell_integral(0.0, 10.0, 11.0, 0.5);
        assert!(tail > 0.0 && tail < 1e-20);
    }

    #[test]
    fn pointwise_constant_search() {
        // closed form: sup_z (1+z)^{n/2} e^{-z/4} at z = 2n - 1, times (4 pi)^{-n/2}
        let n = 3;
        let z = 2.0 * n as f64 - 1.0;
        let exact = (4.0 * PI).powf(-1.5) * (1.0 + z).powf(1.5) * (-z / 4.0).exp();
        let c0 = calibrate_pointwise_constant(n, 400);
        assert!(c0 <= exact * (1.0 + 1e-12));
        assert!(c0 > exact * 0.999);
        assert!(c0 >= (4.0 * PI).powf(-1.5));
        assert!(check_pointwise_bound(&[0.0; 3], 2.0, c0).unwrap());
        assert!(check_pointwise_bound(&[1.0, 2.0, 0.5], 0.3, c0).unwrap());
        // Gaussian beats the polynomial far out
        let far = pointwise_ratio(&[50.0, 0.0, 0.0], 1.0).unwrap();
        assert!(far < 1e-100);
    }

    #[test]
    fn conservation_on_truncated_half_space() {
        let grid = Grid::build(GridSpec::uniform(3, 12.0, 16)).unwrap();
        let m = kernel_mass(&grid, &[0.1, -0.3, 0.4], 0.5).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
    }
}
