use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{BoundaryFunction, Grid};

/// Angular part of one pole term `v((y' - x)/|y' - x|) / |y' - x|`.
#[derive(Debug, Clone, PartialEq)]
pub enum PoleKind {
    /// Constant coefficient `lambda`.
    Monopole(f64),
    /// `v(theta) = theta . d`.
    Dipole(Vec<f64>),
    /// Tabulated values on direction vectors, nearest-direction lookup.
    Profile {
        directions: Vec<Vec<f64>>,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pole {
    pub center: Vec<f64>,
    pub kind: PoleKind,
}

/// Multipolar boundary potential of critical order one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Potential {
    poles: Vec<Pole>,
}

impl Potential {
    pub fn zero() -> Self {
        Potential { poles: Vec::new() }
    }

    /// `kappa |y'|^{-1}` with the pole at the boundary origin.
    pub fn radial(kappa: f64, boundary_dim: usize) -> Self {
        Potential {
            poles: vec![Pole {
                center: vec![0.0; boundary_dim],
                kind: PoleKind::Monopole(kappa),
            }],
        }
    }

    pub fn new(poles: Vec<Pole>) -> Result<Self> {
        for p in &poles {
            let dim = p.center.len();
            if p.center.iter().any(|c| !c.is_finite()) {
                return Err(Error::Config(format!("pole {:?} is not finite", p.center)));
            }
            match &p.kind {
                PoleKind::Monopole(l) if !l.is_finite() => {
                    return Err(Error::Config(format!("monopole coefficient {l} is not finite")));
                }
                PoleKind::Dipole(d) if d.len() != dim || d.iter().any(|v| !v.is_finite()) => {
                    return Err(Error::Config(format!(
                        "dipole vector {d:?} must have {dim} finite components"
                    )));
                }
                PoleKind::Profile { directions, values } => {
                    if directions.is_empty() || directions.len() != values.len() {
                        return Err(Error::Config(
                            "angular profile needs one value per direction".into(),
                        ));
                    }
                    if values.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Config("angular profile must be bounded".into()));
                    }
                    for d in directions {
                        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if d.len() != dim || !(norm > 0.0) {
                            return Err(Error::Config(format!(
                                "profile direction {d:?} must be a nonzero {dim}-vector"
                            )));
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(Potential { poles })
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    pub fn is_zero(&self) -> bool {
        self.poles.iter().all(|p| match &p.kind {
            PoleKind::Monopole(l) => *l == 0.0,
            PoleKind::Dipole(d) => d.iter().all(|v| *v == 0.0),
            PoleKind::Profile { values, .. } => values.iter().all(|v| *v == 0.0),
        })
    }

    /// Value at a boundary point, `None` on a pole.
    pub fn eval(&self, y: &[f64]) -> Option<f64> {
        let mut total = 0.0;
        let mut r = vec![0.0; y.len()];
        for p in &self.poles {
            for (ri, (a, b)) in r.iter_mut().zip(y.iter().zip(&p.center)) {
                *ri = a - b;
            }
            let dist = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if dist == 0.0 {
                return None;
            }
            let angular = match &p.kind {
                PoleKind::Monopole(l) => *l,
                PoleKind::Dipole(d) => r.iter().zip(d).map(|(a, b)| a * b).sum::<f64>() / dist,
                PoleKind::Profile { directions, values } => {
                    let best = directions
                        .iter()
                        .map(|d| {
                            let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                            r.iter().zip(d).map(|(a, b)| a * b).sum::<f64>() / dn
                        })
                        .enumerate()
                        .max_by(|a, b| a.1.total_cmp(&b.1))
                        .map(|(i, _)| i)
                        .expect("profile is nonempty");
                    values[best]
                }
            };
            total += angular / dist;
        }
        Some(total)
    }
}

/// Samples the potential at boundary centroids.
pub fn evaluate_potential(v: &Potential, grid: &Arc<Grid>) -> Result<BoundaryFunction> {
    let dim = grid.n() - 1;
    for p in v.poles() {
        if p.center.len() != dim {
            return Err(Error::Config(format!(
                "pole {:?} must have {dim} coordinates",
                p.center
            )));
        }
    }
    let mut x = vec![0.0; dim];
    let mut values = Vec::with_capacity(grid.boundary_len());
    for i in 0..grid.boundary_len() {
        grid.boundary_centroid(i, &mut x);
        match v.eval(&x) {
            Some(val) => values.push(val),
            None => {
                return Err(Error::PoleOnCentroid { pole: x });
            }
        }
    }
    BoundaryFunction::from_values(grid, values)
}
