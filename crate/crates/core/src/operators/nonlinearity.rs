use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearityForm {
    /// `h(a) = sign * |a|^{rho-1} a` with `sign` in {-1, 0, 1}.
    PowerLaw { sign: f64 },
    /// Piecewise-linear table on increasing nodes, extended linearly past the
    /// ends. With `odd`, the table covers `a >= 0` and `h(-a) = -h(a)`.
    Tabulated {
        nodes: Vec<f64>,
        values: Vec<f64>,
        odd: bool,
    },
}

/// Boundary nonlinearity `h` with growth exponent `rho` and Lipschitz-type
/// constant `eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearitySpec {
    rho: f64,
    eta: f64,
    form: NonlinearityForm,
}

impl NonlinearitySpec {
    pub fn new(rho: f64, eta: f64, form: NonlinearityForm) -> Result<Self> {
        if !(rho > 1.0 && rho.is_finite()) {
            return Err(Error::Config(format!("rho = {rho} must be > 1")));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Config(format!("eta = {eta} must be > 0")));
        }
        match &form {
            NonlinearityForm::PowerLaw { sign } => {
                if ![-1.0, 0.0, 1.0].contains(sign) {
                    return Err(Error::Config(format!("sign {sign} must be -1, 0 or 1")));
                }
            }
            NonlinearityForm::Tabulated { nodes, values, odd } => {
                if nodes.len() < 2 || nodes.len() != values.len() {
                    return Err(Error::Config(
                        "tabulated nonlinearity needs >= 2 nodes with one value each".into(),
                    ));
                }
                if nodes.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::Config("table nodes must increase strictly".into()));
                }
                if values.iter().chain(nodes.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::Config("table entries must be finite".into()));
                }
                if *odd && nodes[0] != 0.0 {
                    return Err(Error::Config("odd tables must start at node 0".into()));
                }
            }
        }
        let spec = NonlinearitySpec { rho, eta, form };
        if spec.apply(0.0) != 0.0 {
            return Err(Error::Config("nonlinearity must satisfy h(0) = 0".into()));
        }
        Ok(spec)
    }

    /// `h(a) = sign |a|^{rho-1} a` with `eta = rho`.
    pub fn power_law(rho: f64, sign: f64) -> Result<Self> {
        Self::new(rho, rho, NonlinearityForm::PowerLaw { sign })
    }

    pub fn zero(rho: f64) -> Result<Self> {
        Self::power_law(rho, 0.0)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn form(&self) -> &NonlinearityForm {
        &self.form
    }

    pub fn is_zero(&self) -> bool {
        match &self.form {
            NonlinearityForm::PowerLaw { sign } => *sign == 0.0,
            NonlinearityForm::Tabulated { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// True when `h(-a) = -h(a)` by construction.
    pub fn is_odd(&self) -> bool {
        match &self.form {
            NonlinearityForm::PowerLaw { .. } => true,
            NonlinearityForm::Tabulated { odd, .. } => *odd,
        }
    }

    #[inline]
    pub fn apply(&self, a: f64) -> f64 {
        match &self.form {
            NonlinearityForm::PowerLaw { sign } => {
                if *sign == 0.0 {
                    0.0
                } else if self.rho == 3.0 {
                    sign * a * a * a
                } else {
                    sign * a.abs().powf(self.rho - 1.0) * a
                }
            }
            NonlinearityForm::Tabulated { nodes, values, odd } => {
                if *odd {
                    a.signum() * interpolate(nodes, values, a.abs())
                } else {
                    interpolate(nodes, values, a)
                }
            }
        }
    }

    /// Largest observed `|h(a) - h(b)| / (|a-b| (|a|^{rho-1} + |b|^{rho-1}))`
    /// over the given pairs.
    pub fn lipschitz_ratio(&self, pairs: &[(f64, f64)]) -> f64 {
        pairs
            .iter()
            .filter(|(a, b)| a != b)
            .map(|&(a, b)| {
                let denom =
                    (a - b).abs() * (a.abs().powf(self.rho - 1.0) + b.abs().powf(self.rho - 1.0));
                (self.apply(a) - self.apply(b)).abs() / denom
            })
            .fold(0.0, f64::max)
    }
}

fn interpolate(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let m = nodes.len();
    let hi = nodes.partition_point(|&v| v <= x).clamp(1, m - 1);
    let lo = hi - 1;
    let w = (x - nodes[lo]) / (nodes[hi] - nodes[lo]);
    values[lo] + w * (values[hi] - values[lo])
}
