//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::sync::Arc;
use std::time::Instant;

use halfspace_heat::kernel::{half_space_kernel, kernel_mass, KernelPoint};
use halfspace_heat::lorentz::{norm, quasi_norm_star, LorentzIndex, WeightedSamples};
use halfspace_heat::operators::{NonlinearitySpec, Potential};
use halfspace_heat::solver::{
    contraction_report, data_distance, fixed_point_residual, picard_solve,
    solution_distance, Solution, SolverConfig, TimeLevels,
};
use halfspace_heat::verify::{
    check_negativity, check_positivity, check_self_similarity, check_symmetry,
    check_yamazaki_integrals, fit_g1_decay, fit_trace_decay, weak_trace_pairings, G1Target,
    Ladder, LadderStatus, Parity, SelfSimilarityReport, SymmetryTransform, YamazakiEstimate, YamazakiInput,
};
use halfspace_heat::{BoundaryFunction, Grid, GridFunction, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn radius(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn bump(x: &[f64], c: &[f64], w: f64) -> f64 {
    let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / (2.0 * w * w)).exp()
}

fn lorentz_oracle() -> Outcome {
    let start = Instant::now();
    let grid = Grid::build(GridSpec::graded_at_origin(3, 16.0, 256, 0.95)).unwrap();
    let f = BoundaryFunction::sample(&grid, |x| 1.0 / radius(x)).unwrap();
    let value = quasi_norm_star(&f, LorentzIndex::weak(2.0).unwrap());
    let target = std::f64::consts::PI.sqrt();
    let rel = (value - target).abs() / target;
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        rel <= 0.02 && elapsed < 10.0,
        format!("quasi-norm-star {value:.6} vs sqrt(pi) {target:.6}; rel err {rel:.3e} (tol 2e-2); {elapsed:.2} s"),
    )
}

fn norm_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = f64::NEG_INFINITY;
    for &p in &[1.5, 2.0, 4.0, 6.0] {
        let idx = LorentzIndex::weak(p).unwrap();
        for _ in 0..100 {
            let len = rng.gen_range(1..200);
            let values: Vec<f64> = (0..len).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let measures: Vec<f64> = (0..len).map(|_| rng.gen_range(1e-3..2.0)).collect();
            let f = WeightedSamples::new(values, measures).unwrap();
            let star = quasi_norm_star(&f, idx);
            let full = norm(&f, idx);
            let slack = (star - full).max(full - p / (p - 1.0) * star);
            worst = worst.max(slack);
        }
    }
    outcome(
        worst <= 1e-12,
        format!("worst violation {worst:.3e} over 400 fields (slack 1e-12)"),
    )
}

fn truncated_mass(x: &[f64], r: f64, t: f64) -> f64 {
    let s = 2.0 * t.sqrt();
    let lateral: f64 = x[..x.len() - 1]
        .iter()
        .map(|&xi| 0.5 * (libm::erf((r - xi) / s) + libm::erf((r + xi) / s)))
        .product();
    let xn = x[x.len() - 1];
    // int_0^R g(xn - y) + g(xn + y) dy
    let normal = 0.5 * (libm::erf((r - xn) / s) + libm::erf((r + xn) / s));
    lateral * normal
}

fn kernel_conservation() -> Outcome {
    let t_max: f64 = 1.0;
    let r = 6.0 * t_max.sqrt();
    let grid = Grid::build(GridSpec::uniform(3, r, 48)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..20 {
        let x = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.0..1.0),
        ];
        let t = t_max * 10f64.powf(rng.gen_range(-2.0..0.0));
        let m = kernel_mass(&grid, &x, t).unwrap();
        worst = worst.max((m - 1.0).abs());
        worst_oracle = worst_oracle.max((m - truncated_mass(&x, r, t)).abs());
        if (m - 1.0).abs() > 1e-6 {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!(
            "max |mass - 1| {worst:.3e} (tol 1e-6), {failures}/20 over; quadrature vs exact truncated mass {worst_oracle:.3e}"
        ),
    )
}

fn scaling_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for &lambda in &[0.5, 2.0, 7.0] {
        for _ in 0..1000 {
            let x = vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.0..3.0)];
            let y = vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.0..3.0)];
            let t = rng.gen_range(0.2..4.0);
            let g = half_space_kernel(&KernelPoint::new(x.clone(), y.clone(), t).unwrap());
            let lx = x.iter().map(|v| lambda * v).collect();
            let ly = y.iter().map(|v| lambda * v).collect();
            let gl = half_space_kernel(&KernelPoint::new(lx, ly, lambda * lambda * t).unwrap());
            worst = worst.max((lambda.powi(3) * gl - g).abs() / g);
        }
    }
    outcome(worst <= 1e-12, format!("max relative error {worst:.3e} over 3000 tuples (tol 1e-12)"))
}

fn decade(base: f64) -> Vec<f64> {
    (0..7).map(|k| base * 10f64.powf(k as f64 / 6.0)).collect()
}

fn trace_decay() -> Outcome {
    let start = Instant::now();
    let grid = Grid::build(GridSpec::graded_at_origin(3, 8.0, 48, 0.8)).unwrap();
    let u0 = GridFunction::sample(&grid, |x| radius(x).powf(-1.5)).unwrap();
    let fit = fit_trace_decay(&u0, 2.0, 4.0, f64::INFINITY, &decade(0.03)).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        fit.passes(0.05) && elapsed < 120.0,
        format!(
            "slope {:.4} vs {:.4}; deviation {:.3e} (tol 5e-2); {elapsed:.2} s",
            fit.slope, fit.theory, fit.deviation
        ),
    )
}

fn g1_decay() -> Outcome {
    let grid = Grid::build(GridSpec::graded_at_origin(3, 8.0, 48, 0.8)).unwrap();
    let psi = BoundaryFunction::sample(&grid, |x| 1.0 / radius(x)).unwrap();
    let times = decade(0.03);
    let b = fit_g1_decay(&psi, 2.0, 4.0, f64::INFINITY, G1Target::Boundary, &times).unwrap();
    let i = fit_g1_decay(&psi, 2.0, 4.0, f64::INFINITY, G1Target::Interior, &times).unwrap();
    outcome(
        b.passes(0.05) && i.passes(0.05),
        format!(
            "boundary slope {:.4} vs {:.4} (dev {:.3e}); interior slope {:.4} vs {:.4} (dev {:.3e}); tol 5e-2",
            b.slope, b.theory, b.deviation, i.slope, i.theory, i.deviation
        ),
    )
}

fn yamazaki() -> Outcome {
    let grid = Grid::build(GridSpec::uniform(3, 4.0, 32)).unwrap();
    let phi = GridFunction::sample(&grid, |x| if radius(x) <= 1.0 { 1.0 } else { 0.0 }).unwrap();
    let ladder = Ladder::default();
    let rep = check_yamazaki_integrals(
        &YamazakiInput::Interior(phi.clone()),
        2.0,
        4.0,
        YamazakiEstimate::Key1Est1,
        ladder,
    )
    .unwrap();
    let doubled = check_yamazaki_integrals(
        &YamazakiInput::Interior(phi.scaled(2.0)),
        2.0,
        4.0,
        YamazakiEstimate::Key1Est1,
        ladder,
    )
    .unwrap();
    let lin = (doubled.integral - 2.0 * rep.integral).abs() / (2.0 * rep.integral);
    let last = rep.steps.last().unwrap();
    let change = last.relative_change.unwrap_or(f64::NAN);
    outcome(
        rep.status == LadderStatus::Converged && rep.constant.is_finite() && lin <= 1e-10,
        format!(
            "{} steps, final window [{:.2e}, {:.2e}], last change {change:.3e} (tol 1e-2); C = {:.6}; linearity {lin:.3e} (tol 1e-10)",
            rep.steps.len(),
            last.t_min,
            last.t_max,
            rep.constant
        ),
    )
}

fn solver_grid() -> Arc<Grid> {
    Grid::build(GridSpec::graded_at_origin(3, 8.0, 32, 0.8)).unwrap()
}

fn solver_config() -> SolverConfig {
    SolverConfig::new(3.0, TimeLevels::new(0.125, 4).unwrap())
}

fn positive_data(grid: &Arc<Grid>, amp: f64) -> GridFunction {
    GridFunction::sample(grid, |x| amp * bump(x, &[0.0, 0.0, 0.0], 1.0)).unwrap()
}

struct PositiveRun {
    u0: GridFunction,
    v: Potential,
    h: NonlinearitySpec,
    config: SolverConfig,
    solution: Solution,
}

fn positive_run() -> PositiveRun {
    let grid = solver_grid();
    let u0 = positive_data(&grid, 0.2);
    let v = Potential::radial(0.05, 2);
    let h = NonlinearitySpec::power_law(3.0, 1.0).unwrap();
    let config = solver_config();
    let solution = picard_solve(&u0, &v, &h, &config).unwrap();
    PositiveRun {
        u0,
        v,
        h,
        config,
        solution,
    }
}

fn contraction(run: &PositiveRun) -> Outcome {
    let report = contraction_report(&run.solution).unwrap();
    let residual = fixed_point_residual(&run.solution, &run.u0, &run.v, &run.h, &run.config).unwrap();
    let adm = run.solution.admissibility();
    let grid = run.u0.grid();
    let linear = picard_solve(
        &positive_data(grid, 0.2),
        &Potential::zero(),
        &NonlinearitySpec::zero(3.0).unwrap(),
        &run.config,
    )
    .unwrap();
    let linear_ok = linear.converged() && linear.iterations() == 1;
    outcome(
        adm.admissible
            && !report.flagged
            && run.solution.converged()
            && run.solution.iterations() <= 20
            && residual < 1e-6
            && linear_ok,
        format!(
            "admissible {} (gamma {:.3e}); {} iterations, max r_k {:.4}; residual {residual:.3e} (tol 1e-6); linear case {} correction step(s)",
            adm.admissible,
            adm.gamma,
            run.solution.iterations(),
            report.max_ratio,
            linear.iterations()
        ),
    )
}

fn self_similar_report(cells: usize, grading: f64) -> SelfSimilarityReport {
    let grid = Grid::build(GridSpec::graded_at_origin(3, 8.0, cells, grading)).unwrap();
    let u0 = GridFunction::sample(&grid, |x| 0.05 * radius(x).powf(-0.5)).unwrap();
    let v = Potential::radial(0.05, 2);
    let h = NonlinearitySpec::power_law(3.0, 1.0).unwrap();
    let solution = picard_solve(&u0, &v, &h, &solver_config()).unwrap();
    assert!(solution.converged(), "self-similar run did not converge");
    check_self_similarity(&solution, 3.0, &[0.5, 2.0]).unwrap()
}

fn self_similarity() -> Outcome {
    let coarse = self_similar_report(32, 0.8);
    // doubling the cell count with the square-rooted grading splits every cell in two
    let fine = self_similar_report(64, 0.8f64.sqrt());
    let site = |r: &SelfSimilarityReport| {
        r.worst
            .as_ref()
            .map(|w| format!("|x| = {:.3e} at t = {}, lambda = {}", radius(&w.point), w.t, w.lambda))
            .unwrap_or_default()
    };
    outcome(
        fine.max_defect <= 0.05 && fine.max_defect < coarse.max_defect,
        format!(
            "defect {:.5} (32 cells/axis, worst {}) -> {:.5} (64 cells/axis, worst {}); tol 5e-2, must decrease",
            coarse.max_defect,
            site(&coarse),
            fine.max_defect,
            site(&fine)
        ),
    )
}

fn positivity(run: &PositiveRun) -> Outcome {
    let pos = check_positivity(&run.solution);
    let neg_u0 = run.u0.scaled(-1.0);
    let neg = picard_solve(&neg_u0, &run.v, &run.h, &run.config).unwrap();
    let mirrored = check_negativity(&neg);
    outcome(
        pos.pass && mirrored.pass,
        format!("positive run min {:.3e}; negative run max {:.3e}", pos.min, mirrored.max),
    )
}

fn symmetry() -> Outcome {
    let grid = solver_grid();
    let v = Potential::radial(0.05, 2);
    let h = NonlinearitySpec::power_law(3.0, 1.0).unwrap();
    let config = solver_config();
    let radial = GridFunction::sample(&grid, |x| 0.2 * bump(x, &[0.0, 0.0, 0.5], 1.0)).unwrap();
    let rot = check_symmetry(
        &picard_solve(&radial, &v, &h, &config).unwrap(),
        SymmetryTransform::Rotation,
        Parity::Symmetric,
    )
    .unwrap();
    let odd = GridFunction::sample(&grid, |x| 0.2 * (x[0] + 0.5 * x[1]) * bump(x, &[0.0, 0.0, 0.5], 1.0)).unwrap();
    let anti = check_symmetry(
        &picard_solve(&odd, &v, &h, &config).unwrap(),
        SymmetryTransform::Reflection,
        Parity::Antisymmetric,
    )
    .unwrap();
    outcome(
        rot <= 1e-10 && anti <= 1e-10,
        format!("rotation defect {rot:.3e}; antisymmetry defect {anti:.3e} (tol 1e-10)"),
    )
}

fn continuous_dependence(run: &PositiveRun) -> Outcome {
    let grid = run.u0.grid();
    let w = GridFunction::sample(grid, |x| bump(x, &[0.5, -0.5, 0.5], 0.7)).unwrap();
    let mut ratios = Vec::new();
    for k in 0..3 {
        let delta = 0.02 / 2f64.powi(k);
        let w0 = run.u0.combine(1.0, &w, delta);
        let other = picard_solve(&w0, &run.v, &run.h, &run.config).unwrap();
        let ds = solution_distance(&run.solution, &other).unwrap();
        let dd = data_distance(&run.u0, &w0, &run.v, &run.v, run.config.rho).unwrap();
        ratios.push(ds / dd);
    }
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(
        hi / lo <= 2.0,
        format!("Lipschitz ratios {ratios:?}; spread {:.4} (tol 2)", hi / lo),
    )
}

fn weak_trace(run: &PositiveRun) -> Outcome {
    let phis: [&dyn Fn(&[f64]) -> f64; 3] = [
        &|x| bump(x, &[0.0, 0.0, 0.5], 1.0),
        &|x| bump(x, &[1.0, 0.0, 1.0], 0.7),
        &|x| (1.0 + 0.5 * x[0]) * bump(x, &[0.0, 0.5, 0.0], 1.5),
    ];
    let times = run.solution.times();
    let table = weak_trace_pairings(&run.solution, &run.u0, &phis);
    // report levels ascend, so |pairing| must ascend too
    let monotone = table
        .iter()
        .all(|row| row.windows(2).all(|w| w[0].abs() < w[1].abs()));
    let magnitudes: Vec<String> = table
        .iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|v| format!("{:.3e}", v.abs())).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    outcome(
        monotone,
        format!("t = {times:?}; |<u(t) - u0, phi>| = {}", magnitudes.join(" ")),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |id: usize, name: &'static str, o: Outcome| {
        println!("criterion {id:>2} {name}: {} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o));
    };
    record(1, "lorentz oracle", lorentz_oracle());
    record(2, "norm equivalence", norm_equivalence());
    record(3, "kernel conservation", kernel_conservation());
    record(4, "scaling identity", scaling_identity());
    record(5, "trace decay", trace_decay());
    record(6, "g1 decay", g1_decay());
    record(7, "time-integrated estimate", yamazaki());
    let run = positive_run();
    record(8, "contraction", contraction(&run));
    record(9, "self-similarity", self_similarity());
    record(10, "positivity", positivity(&run));
    record(11, "symmetry", symmetry());
    record(12, "continuous dependence", continuous_dependence(&run));
    record(13, "weak initial trace", weak_trace(&run));
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria pass",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
