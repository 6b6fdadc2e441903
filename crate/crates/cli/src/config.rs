//! Line-based experiment configuration.
//!
//! ```text
//! # comment
//! [grid]
//! n = 3
//! radius = 8
//! cells_per_axis = 32
//! grading = 0.8
//! refinement_center = 0, 0
//!
//! [potential]
//! pole = monopole center=0,0 kappa=0.05
//! ```
//!
//! Keys are unique within a section except `pole` and `refinement_center`.
//! Every error carries the 1-based line it refers to.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use halfspace_heat::grid::DEFAULT_CELL_BUDGET;
use halfspace_heat::operators::{NonlinearityForm, NonlinearitySpec, Pole, PoleKind, Potential};
use halfspace_heat::verify::{G1Target, Parity, SymmetryTransform, YamazakiEstimate};
use halfspace_heat::{BoundaryFunction, Grid, GridFunction, GridSpec};

use crate::error::CliError;

const SECTIONS: [&str; 7] = ["grid", "data", "potential", "nonlinearity", "solver", "verify", "output"];
const REPEATABLE: [&str; 2] = ["pole", "refinement_center"];

#[derive(Debug, Clone, PartialEq)]
pub enum DataPreset {
    Zero,
    /// `amplitude * exp(-|x - center|^2 / (2 width^2))`.
    Gaussian {
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
    /// `amplitude` on the ball `|x - center| <= radius`.
    Indicator {
        amplitude: f64,
        center: Vec<f64>,
        radius: f64,
    },
    /// `amplitude * theta(x_n / |x|) |x|^{-degree}`, `theta` a polynomial.
    Homogeneous {
        amplitude: f64,
        degree: Option<f64>,
        theta: Vec<f64>,
    },
    /// Boundary field `amplitude * |x'|^{-degree}`.
    BoundaryHomogeneous { amplitude: f64, degree: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub preset: DataPreset,
    /// Multiply the profile by this coordinate (0-based), producing odd data.
    pub odd_axis: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSection {
    pub first_time: f64,
    pub report_levels: usize,
    pub levels_per_octave: usize,
    pub lead_octaves: usize,
    pub time_nodes: usize,
    pub max_iterations: usize,
    pub residual_tolerance: f64,
    pub allow_inadmissible: bool,
    pub cache_matrices: bool,
    pub probe_widths: Vec<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            first_time: 0.125,
            report_levels: 4,
            levels_per_octave: 4,
            lead_octaves: 6,
            time_nodes: 64,
            max_iterations: 20,
            residual_tolerance: 1e-6,
            allow_inadmissible: false,
            cache_matrices: true,
            probe_widths: vec![0.0625, 0.125, 0.25],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySection {
    pub d1: f64,
    pub d2: f64,
    pub r: f64,
    pub times: Vec<f64>,
    pub target: G1Target,
    pub estimate: YamazakiEstimate,
    pub ladder_center: f64,
    pub ladder_start: usize,
    pub ladder_steps: usize,
    pub lambdas: Vec<f64>,
    pub transform: SymmetryTransform,
    pub parity: Parity,
    pub tolerance: Option<f64>,
    pub norm_p: f64,
    pub norm_r: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            d1: 2.0,
            d2: 4.0,
            r: f64::INFINITY,
            times: geometric(0.03, 0.3, 7),
            target: G1Target::Boundary,
            estimate: YamazakiEstimate::Key1Est1,
            ladder_center: 1.0,
            ladder_start: 4,
            ladder_steps: 20,
            lambdas: vec![0.5, 2.0],
            transform: SymmetryTransform::Rotation,
            parity: Parity::Symmetric,
            tolerance: None,
            norm_p: 2.0,
            norm_r: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub directory: String,
    pub seed: u64,
    pub write_fields: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: "hsheat-out".into(),
            seed: 0,
            write_fields: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub data: DataConfig,
    pub potential: Potential,
    pub nonlinearity: NonlinearitySpec,
    pub solver: SolverSection,
    pub verify: VerifySection,
    pub output: OutputSection,
}

fn geometric(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| a * (b / a).powf(k as f64 / (count - 1) as f64))
        .collect()
}

struct Entry {
    value: String,
    line: usize,
}

struct Section {
    line: usize,
    entries: BTreeMap<String, Vec<Entry>>,
}

/// Typed accessors over one section; remembers which keys were read so the
/// leftovers can be reported as unknown.
struct Reader<'a> {
    name: &'a str,
    section: Option<&'a Section>,
    used: Vec<&'a str>,
}

fn err(line: usize, message: impl Into<String>) -> CliError {
    CliError::Config {
        line,
        message: message.into(),
    }
}

fn parse_f64(s: &str, line: usize, key: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| err(line, format!("`{key}` expects a number, got `{}`", s.trim())))
}

fn parse_list(s: &str, line: usize, key: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').map(|p| parse_f64(p, line, key)).collect()
}

impl<'a> Reader<'a> {
    fn raw(&mut self, key: &'a str) -> Option<&'a Entry> {
        let e = self.section?.entries.get(key)?;
        self.used.push(key);
        e.first()
    }

    fn all(&mut self, key: &'a str) -> &'a [Entry] {
        match self.section.and_then(|s| s.entries.get(key)) {
            Some(v) => {
                self.used.push(key);
                v
            }
            None => &[],
        }
    }

    fn line(&self) -> usize {
        self.section.map(|s| s.line).unwrap_or(0)
    }

    fn required(&mut self, key: &'a str) -> Result<&'a Entry, CliError> {
        let line = self.line();
        let name = self.name;
        self.raw(key)
            .ok_or_else(|| err(line, format!("[{name}] is missing required key `{key}`")))
    }

    fn f64_or(&mut self, key: &'a str, default: f64) -> Result<f64, CliError> {
        match self.raw(key) {
            Some(e) => parse_f64(&e.value, e.line, key),
            None => Ok(default),
        }
    }

    fn opt_f64(&mut self, key: &'a str) -> Result<Option<f64>, CliError> {
        self.raw(key).map(|e| parse_f64(&e.value, e.line, key)).transpose()
    }

    fn usize_or(&mut self, key: &'a str, default: usize) -> Result<usize, CliError> {
        match self.raw(key) {
            Some(e) => e
                .value
                .parse()
                .map_err(|_| err(e.line, format!("`{key}` expects a non-negative integer"))),
            None => Ok(default),
        }
    }

    fn bool_or(&mut self, key: &'a str, default: bool) -> Result<bool, CliError> {
        match self.raw(key) {
            Some(e) => match e.value.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(err(e.line, format!("`{key}` expects true or false, got `{other}`"))),
            },
            None => Ok(default),
        }
    }

    fn list_or(&mut self, key: &'a str, default: Vec<f64>) -> Result<Vec<f64>, CliError> {
        match self.raw(key) {
            Some(e) => parse_list(&e.value, e.line, key),
            None => Ok(default),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        if let Some(s) = self.section {
            for (k, v) in &s.entries {
                if !self.used.contains(&k.as_str()) {
                    return Err(err(v[0].line, format!("unknown key `{k}` in [{}]", self.name)));
                }
            }
        }
        Ok(())
    }
}

fn tokenize(text: &str) -> Result<BTreeMap<String, Section>, CliError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line, "section header must end with `]`"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(err(line, format!("unknown section [{name}]")));
            }
            if sections.contains_key(name) {
                return Err(err(line, format!("section [{name}] appears twice")));
            }
            sections.insert(
                name.to_string(),
                Section {
                    line,
                    entries: BTreeMap::new(),
                },
            );
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(err(line, "empty key or value"));
        }
        let name = current
            .as_ref()
            .ok_or_else(|| err(line, format!("`{key}` appears before any section")))?;
        let section = sections.get_mut(name).expect("section inserted");
        let slot = section.entries.entry(key.to_string()).or_default();
        if !slot.is_empty() && !REPEATABLE.contains(&key) {
            return Err(err(line, format!("duplicate key `{key}` in [{name}]")));
        }
        slot.push(Entry {
            value: value.to_string(),
            line,
        });
    }
    Ok(sections)
}

fn parse_pole(e: &Entry, dim: usize) -> Result<Pole, CliError> {
    let mut words = e.value.split_whitespace();
    let kind = words.next().unwrap_or("");
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    for w in words {
        let (k, v) = w
            .split_once('=')
            .ok_or_else(|| err(e.line, format!("pole field `{w}` must be name=value")))?;
        fields.insert(k, v);
    }
    let mut take = |k: &str| {
        fields
            .remove(k)
            .ok_or_else(|| err(e.line, format!("{kind} pole needs `{k}=`")))
    };
    let center = match take("center") {
        Ok(c) => parse_list(c, e.line, "center")?,
        Err(_) => vec![0.0; dim],
    };
    if center.len() != dim {
        return Err(err(e.line, format!("pole center needs {dim} coordinates")));
    }
    let kind = match kind {
        "monopole" => PoleKind::Monopole(parse_f64(take("kappa")?, e.line, "kappa")?),
        "dipole" => PoleKind::Dipole(parse_list(take("d")?, e.line, "d")?),
        "profile" => {
            let directions = take("directions")?
                .split(';')
                .map(|d| parse_list(d, e.line, "directions"))
                .collect::<Result<Vec<_>, _>>()?;
            let values = parse_list(take("values")?, e.line, "values")?;
            PoleKind::Profile { directions, values }
        }
        other => {
            return Err(err(
                e.line,
                format!("unknown pole kind `{other}` (monopole, dipole, profile)"),
            ))
        }
    };
    if let Some(k) = fields.keys().next() {
        return Err(err(e.line, format!("unknown pole field `{k}`")));
    }
    Ok(Pole { center, kind })
}

fn core_err(line: usize) -> impl Fn(halfspace_heat::Error) -> CliError {
    move |e| err(line, e.to_string())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let sections = tokenize(text)?;
        let reader = |name: &'static str| Reader {
            name,
            section: sections.get(name),
            used: Vec::new(),
        };

        let mut g = reader("grid");
        if g.section.is_none() {
            return Err(err(0, "missing required section [grid]"));
        }
        let n_entry = g.required("n")?;
        let n: usize = n_entry
            .value
            .parse()
            .map_err(|_| err(n_entry.line, "`n` expects an integer"))?;
        let radius_entry = g.required("radius")?;
        let radius = parse_f64(&radius_entry.value, radius_entry.line, "radius")?;
        let cells_entry = g.required("cells_per_axis")?;
        let cells_per_axis: usize = cells_entry
            .value
            .parse()
            .map_err(|_| err(cells_entry.line, "`cells_per_axis` expects an integer"))?;
        let grading = g.opt_f64("grading")?;
        let cell_budget = g.usize_or("cell_budget", DEFAULT_CELL_BUDGET)?;
        let refinement_centers = g
            .all("refinement_center")
            .iter()
            .map(|e| parse_list(&e.value, e.line, "refinement_center"))
            .collect::<Result<Vec<_>, _>>()?;
        let grid_line = g.line();
        g.finish()?;
        let grid = GridSpec {
            n,
            radius,
            cells_per_axis,
            grading,
            refinement_centers,
            cell_budget,
        };
        grid.validate().map_err(core_err(grid_line))?;

        let mut nl = reader("nonlinearity");
        if nl.section.is_none() {
            return Err(err(0, "missing required section [nonlinearity]"));
        }
        let rho_entry = nl.required("rho")?;
        let rho = parse_f64(&rho_entry.value, rho_entry.line, "rho")?;
        let nl_line = nl.line();
        let form_name = nl.raw("form").map(|e| e.value.as_str()).unwrap_or("power");
        let sign = nl.f64_or("sign", 1.0)?;
        let eta = nl.f64_or("eta", rho)?;
        let form = match form_name {
            "power" => NonlinearityForm::PowerLaw { sign },
            "zero" => NonlinearityForm::PowerLaw { sign: 0.0 },
            "tabulated" => NonlinearityForm::Tabulated {
                nodes: nl.list_or("nodes", Vec::new())?,
                values: nl.list_or("values", Vec::new())?,
                odd: nl.bool_or("odd", false)?,
            },
            other => {
                return Err(err(
                    nl_line,
                    format!("unknown nonlinearity form `{other}` (power, zero, tabulated)"),
                ))
            }
        };
        nl.finish()?;
        let nonlinearity = NonlinearitySpec::new(rho, eta, form).map_err(core_err(nl_line))?;

        let mut d = reader("data");
        let data_line = d.line();
        let profile = d.raw("profile").map(|e| e.value.as_str()).unwrap_or("zero");
        let amplitude = d.f64_or("amplitude", 1.0)?;
        let preset = match profile {
            "zero" => DataPreset::Zero,
            "gaussian" => DataPreset::Gaussian {
                amplitude,
                center: d.list_or("center", vec![0.0; n])?,
                width: d.f64_or("width", 1.0)?,
            },
            "indicator" => DataPreset::Indicator {
                amplitude,
                center: d.list_or("center", vec![0.0; n])?,
                radius: d.f64_or("radius", 1.0)?,
            },
            "homogeneous" => DataPreset::Homogeneous {
                amplitude,
                degree: d.opt_f64("degree")?,
                theta: d.list_or("theta", vec![1.0])?,
            },
            "boundary_homogeneous" => DataPreset::BoundaryHomogeneous {
                amplitude,
                degree: d.f64_or("degree", 1.0)?,
            },
            other => {
                return Err(err(
                    data_line,
                    format!(
                        "unknown data profile `{other}` (zero, gaussian, indicator, homogeneous, boundary_homogeneous)"
                    ),
                ))
            }
        };
        let odd_axis = d.raw("odd_axis").map(|e| {
            e.value
                .parse::<usize>()
                .ok()
                .filter(|&a| a < n)
                .ok_or_else(|| err(e.line, format!("`odd_axis` must be an axis index below {n}")))
        });
        let odd_axis = odd_axis.transpose()?;
        d.finish()?;
        match &preset {
            DataPreset::Gaussian { center, width, .. } => {
                if center.len() != n || !(*width > 0.0) {
                    return Err(err(data_line, format!("gaussian needs an {n}-point center and width > 0")));
                }
            }
            DataPreset::Indicator { center, radius, .. } => {
                if center.len() != n || !(*radius > 0.0) {
                    return Err(err(data_line, format!("indicator needs an {n}-point center and radius > 0")));
                }
            }
            DataPreset::Homogeneous { theta, .. } if theta.is_empty() => {
                return Err(err(data_line, "theta needs at least one coefficient"));
            }
            _ => {}
        }

        let mut p = reader("potential");
        let pot_line = p.line();
        let poles = p
            .all("pole")
            .iter()
            .map(|e| parse_pole(e, n - 1))
            .collect::<Result<Vec<_>, _>>()?;
        p.finish()?;
        let potential = Potential::new(poles).map_err(core_err(pot_line))?;

        let mut s = reader("solver");
        let dflt = SolverSection::default();
        let solver = SolverSection {
            first_time: s.f64_or("first_time", dflt.first_time)?,
            report_levels: s.usize_or("report_levels", dflt.report_levels)?,
            levels_per_octave: s.usize_or("levels_per_octave", dflt.levels_per_octave)?,
            lead_octaves: s.usize_or("lead_octaves", dflt.lead_octaves)?,
            time_nodes: s.usize_or("time_nodes", dflt.time_nodes)?,
            max_iterations: s.usize_or("max_iterations", dflt.max_iterations)?,
            residual_tolerance: s.f64_or("residual_tolerance", dflt.residual_tolerance)?,
            allow_inadmissible: s.bool_or("allow_inadmissible", dflt.allow_inadmissible)?,
            cache_matrices: s.bool_or("cache_matrices", dflt.cache_matrices)?,
            probe_widths: s.list_or("probe_widths", dflt.probe_widths)?,
        };
        let solver_line = s.line();
        s.finish()?;
        ExperimentConfig::solver_config_of(&solver, rho).map_err(core_err(solver_line))?;

        let mut v = reader("verify");
        let dflt = VerifySection::default();
        let times = match v.raw("times") {
            Some(e) => match e.value.strip_prefix("geometric") {
                Some(rest) => {
                    let parts: Vec<&str> = rest.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(err(e.line, "use `times = geometric <first> <last> <count>`"));
                    }
                    let a = parse_f64(parts[0], e.line, "times")?;
                    let b = parse_f64(parts[1], e.line, "times")?;
                    let c: usize = parts[2]
                        .parse()
                        .map_err(|_| err(e.line, "geometric count must be an integer"))?;
                    if !(a > 0.0 && b > a && c >= 2) {
                        return Err(err(e.line, "geometric times need 0 < first < last and count >= 2"));
                    }
                    geometric(a, b, c)
                }
                None => parse_list(&e.value, e.line, "times")?,
            },
            None => dflt.times,
        };
        let target = match v.raw("target") {
            None => dflt.target,
            Some(e) => match e.value.as_str() {
                "boundary" => G1Target::Boundary,
                "interior" => G1Target::Interior,
                o => return Err(err(e.line, format!("unknown target `{o}` (boundary, interior)"))),
            },
        };
        let estimate = match v.raw("estimate") {
            None => dflt.estimate,
            Some(e) => match e.value.as_str() {
                "key1-est1" => YamazakiEstimate::Key1Est1,
                "key2-est1" => YamazakiEstimate::Key2Est1,
                "key2-est2" => YamazakiEstimate::Key2Est2,
                o => {
                    return Err(err(
                        e.line,
                        format!("unknown estimate `{o}` (key1-est1, key2-est1, key2-est2)"),
                    ))
                }
            },
        };
        let transform = match v.raw("transform") {
            None => dflt.transform,
            Some(e) => match e.value.as_str() {
                "rotation" => SymmetryTransform::Rotation,
                "reflection" => SymmetryTransform::Reflection,
                o => return Err(err(e.line, format!("unknown transform `{o}` (rotation, reflection)"))),
            },
        };
        let parity = match v.raw("parity") {
            None => dflt.parity,
            Some(e) => match e.value.as_str() {
                "symmetric" => Parity::Symmetric,
                "antisymmetric" => Parity::Antisymmetric,
                o => {
                    return Err(err(e.line, format!("unknown parity `{o}` (symmetric, antisymmetric)")))
                }
            },
        };
        let verify = VerifySection {
            d1: v.f64_or("d1", dflt.d1)?,
            d2: v.f64_or("d2", dflt.d2)?,
            r: v.f64_or("r", dflt.r)?,
            times,
            target,
            estimate,
            ladder_center: v.f64_or("ladder_center", dflt.ladder_center)?,
            ladder_start: v.usize_or("ladder_start", dflt.ladder_start)?,
            ladder_steps: v.usize_or("ladder_steps", dflt.ladder_steps)?,
            lambdas: v.list_or("lambdas", dflt.lambdas)?,
            transform,
            parity,
            tolerance: v.opt_f64("tolerance")?,
            norm_p: v.f64_or("norm_p", dflt.norm_p)?,
            norm_r: v.f64_or("norm_r", dflt.norm_r)?,
        };
        v.finish()?;

        let mut o = reader("output");
        let dflt = OutputSection::default();
        let output = OutputSection {
            directory: o
                .raw("directory")
                .map(|e| e.value.clone())
                .unwrap_or(dflt.directory),
            seed: o.usize_or("seed", dflt.seed as usize)? as u64,
            write_fields: o.bool_or("write_fields", dflt.write_fields)?,
        };
        o.finish()?;

        Ok(ExperimentConfig {
            grid,
            data: DataConfig { preset, odd_axis },
            potential,
            nonlinearity,
            solver,
            verify,
            output,
        })
    }

    pub fn rho(&self) -> f64 {
        self.nonlinearity.rho()
    }

    /// `p = n (rho - 1)`.
    pub fn p(&self) -> f64 {
        self.grid.n as f64 * (self.rho() - 1.0)
    }

    /// `q = (n - 1)(rho - 1)`.
    pub fn q(&self) -> f64 {
        (self.grid.n as f64 - 1.0) * (self.rho() - 1.0)
    }

    fn solver_config_of(
        s: &SolverSection,
        rho: f64,
    ) -> halfspace_heat::Result<halfspace_heat::solver::SolverConfig> {
        use halfspace_heat::operators::TimeQuadrature;
        use halfspace_heat::solver::{SolverConfig, TimeLevels};
        let levels = TimeLevels::with_storage(
            s.first_time,
            s.report_levels,
            s.levels_per_octave,
            s.lead_octaves,
        )?;
        let mut c = SolverConfig::new(rho, levels);
        c.time_quadrature = TimeQuadrature::new(s.time_nodes)?;
        c.max_iterations = s.max_iterations;
        c.residual_tolerance = s.residual_tolerance;
        c.allow_inadmissible = s.allow_inadmissible;
        c.cache_matrices = s.cache_matrices;
        c.probe_widths = s.probe_widths.clone();
        Ok(c)
    }

    pub fn solver_config(&self) -> halfspace_heat::Result<halfspace_heat::solver::SolverConfig> {
        Self::solver_config_of(&self.solver, self.rho())
    }

    pub fn build_grid(&self) -> halfspace_heat::Result<Arc<Grid>> {
        Grid::build(self.grid.clone())
    }

    fn odd_factor(&self, x: &[f64]) -> f64 {
        self.data.odd_axis.map_or(1.0, |a| x[a])
    }

    /// Interior initial data, or `None` for a boundary-only preset.
    pub fn initial_data(&self, grid: &Arc<Grid>) -> halfspace_heat::Result<Option<GridFunction>> {
        let r = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let f = match &self.data.preset {
            DataPreset::BoundaryHomogeneous { .. } => return Ok(None),
            DataPreset::Zero => GridFunction::zeros(grid),
            DataPreset::Gaussian {
                amplitude,
                center,
                width,
            } => GridFunction::sample(grid, |x| {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                amplitude * (-d2 / (2.0 * width * width)).exp() * self.odd_factor(x)
            })?,
            DataPreset::Indicator {
                amplitude,
                center,
                radius,
            } => GridFunction::sample(grid, |x| {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2 <= radius * radius {
                    amplitude * self.odd_factor(x)
                } else {
                    0.0
                }
            })?,
            DataPreset::Homogeneous {
                amplitude,
                degree,
                theta,
            } => {
                let deg = degree.unwrap_or(1.0 / (self.rho() - 1.0));
                let n = grid.n();
                GridFunction::sample(grid, |x| {
                    let rr = r(x);
                    let z = x[n - 1] / rr;
                    let th = theta.iter().rev().fold(0.0, |acc, c| acc * z + c);
                    amplitude * th * rr.powf(-deg) * self.odd_factor(x)
                })?
            }
        };
        Ok(Some(f))
    }

    /// Boundary field of a boundary-only preset.
    pub fn boundary_data(&self, grid: &Arc<Grid>) -> halfspace_heat::Result<Option<BoundaryFunction>> {
        match &self.data.preset {
            DataPreset::BoundaryHomogeneous { amplitude, degree } => Ok(Some(BoundaryFunction::sample(
                grid,
                |x| amplitude * x.iter().map(|v| v * v).sum::<f64>().sqrt().powf(-degree) * self.odd_factor(x),
            )?)),
            _ => Ok(None),
        }
    }

    /// Canonical text; `parse(render(c)) == c`.
    pub fn render(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let compact = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let g = &self.grid;
        let _ = writeln!(s, "[grid]\nn = {}\nradius = {:?}\ncells_per_axis = {}", g.n, g.radius, g.cells_per_axis);
        if let Some(gr) = g.grading {
            let _ = writeln!(s, "grading = {gr:?}");
        }
        let _ = writeln!(s, "cell_budget = {}", g.cell_budget);
        for c in &g.refinement_centers {
            let _ = writeln!(s, "refinement_center = {}", list(c));
        }

        let _ = writeln!(s, "\n[data]");
        let amp = |s: &mut String, a: f64| {
            let _ = writeln!(s, "amplitude = {a:?}");
        };
        match &self.data.preset {
            DataPreset::Zero => {
                let _ = writeln!(s, "profile = zero");
            }
            DataPreset::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let _ = writeln!(s, "profile = gaussian");
                amp(&mut s, *amplitude);
                let _ = writeln!(s, "center = {}\nwidth = {width:?}", list(center));
            }
            DataPreset::Indicator {
                amplitude,
                center,
                radius,
            } => {
                let _ = writeln!(s, "profile = indicator");
                amp(&mut s, *amplitude);
                let _ = writeln!(s, "center = {}\nradius = {radius:?}", list(center));
            }
            DataPreset::Homogeneous {
                amplitude,
                degree,
                theta,
            } => {
                let _ = writeln!(s, "profile = homogeneous");
                amp(&mut s, *amplitude);
                if let Some(d) = degree {
                    let _ = writeln!(s, "degree = {d:?}");
                }
                let _ = writeln!(s, "theta = {}", list(theta));
            }
            DataPreset::BoundaryHomogeneous { amplitude, degree } => {
                let _ = writeln!(s, "profile = boundary_homogeneous");
                amp(&mut s, *amplitude);
                let _ = writeln!(s, "degree = {degree:?}");
            }
        }
        if let Some(a) = self.data.odd_axis {
            let _ = writeln!(s, "odd_axis = {a}");
        }

        let _ = writeln!(s, "\n[potential]");
        for p in self.potential.poles() {
            let c = compact(&p.center);
            let _ = match &p.kind {
                PoleKind::Monopole(k) => writeln!(s, "pole = monopole center={c} kappa={k:?}"),
                PoleKind::Dipole(d) => writeln!(s, "pole = dipole center={c} d={}", compact(d)),
                PoleKind::Profile { directions, values } => writeln!(
                    s,
                    "pole = profile center={c} directions={} values={}",
                    directions.iter().map(|d| compact(d)).collect::<Vec<_>>().join(";"),
                    compact(values)
                ),
            };
        }

        let nl = &self.nonlinearity;
        let _ = writeln!(s, "\n[nonlinearity]\nrho = {:?}\neta = {:?}", nl.rho(), nl.eta());
        let _ = match nl.form() {
            NonlinearityForm::PowerLaw { sign } => writeln!(s, "form = power\nsign = {sign:?}"),
            NonlinearityForm::Tabulated { nodes, values, odd } => writeln!(
                s,
                "form = tabulated\nnodes = {}\nvalues = {}\nodd = {odd}",
                list(nodes),
                list(values)
            ),
        };

        let so = &self.solver;
        let _ = writeln!(
            s,
            "\n[solver]\nfirst_time = {:?}\nreport_levels = {}\nlevels_per_octave = {}\nlead_octaves = {}\ntime_nodes = {}\nmax_iterations = {}\nresidual_tolerance = {:?}\nallow_inadmissible = {}\ncache_matrices = {}\nprobe_widths = {}",
            so.first_time,
            so.report_levels,
            so.levels_per_octave,
            so.lead_octaves,
            so.time_nodes,
            so.max_iterations,
            so.residual_tolerance,
            so.allow_inadmissible,
            so.cache_matrices,
            list(&so.probe_widths)
        );

        let v = &self.verify;
        let _ = writeln!(
            s,
            "\n[verify]\nd1 = {:?}\nd2 = {:?}\nr = {:?}\ntimes = {}\ntarget = {}\nestimate = {}\nladder_center = {:?}\nladder_start = {}\nladder_steps = {}\nlambdas = {}\ntransform = {}\nparity = {}\nnorm_p = {:?}\nnorm_r = {:?}",
            v.d1,
            v.d2,
            v.r,
            list(&v.times),
            match v.target {
                G1Target::Boundary => "boundary",
                G1Target::Interior => "interior",
            },
            v.estimate.name(),
            v.ladder_center,
            v.ladder_start,
            v.ladder_steps,
            list(&v.lambdas),
            match v.transform {
                SymmetryTransform::Rotation => "rotation",
                SymmetryTransform::Reflection => "reflection",
            },
            match v.parity {
                Parity::Symmetric => "symmetric",
                Parity::Antisymmetric => "antisymmetric",
            },
            v.norm_p,
            v.norm_r
        );
        if let Some(t) = v.tolerance {
            let _ = writeln!(s, "tolerance = {t:?}");
        }

        let o = &self.output;
        let _ = writeln!(
            s,
            "\n[output]\ndirectory = {}\nseed = {}\nwrite_fields = {}",
            o.directory, o.seed, o.write_fields
        );
        s
    }
}
