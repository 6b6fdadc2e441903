use std::sync::Arc;

use halfspace_heat::operators::{NonlinearitySpec, Potential, TimeQuadrature};
use halfspace_heat::solver::{
    fixed_point_residual, picard_solve, Solution, SolverConfig, TimeLevels,
};
use halfspace_heat::verify::{
    check_self_similarity, fit_g1_decay, fit_trace_decay, interior_symmetry_defect, G1Target,
    Parity, SymmetryTransform,
};
use halfspace_heat::{BoundaryFunction, Grid, GridFunction, GridSpec};
use proptest::prelude::*;

fn grid() -> Arc<Grid> {
    Grid::build(GridSpec::graded_at_origin(3, 6.0, 12, 0.75)).unwrap()
}

fn config() -> SolverConfig {
    let mut c = SolverConfig::new(3.0, TimeLevels::with_storage(0.25, 3, 2, 4).unwrap());
    c.time_quadrature = TimeQuadrature::new(16).unwrap();
    c.probe_widths = vec![0.125, 0.25];
    c
}

fn radius(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn solve(amp: f64, kappa: f64) -> (GridFunction, Potential, NonlinearitySpec, Solution) {
    let g = grid();
    let u0 = GridFunction::sample(&g, |x| amp * (-radius(x).powi(2)).exp()).unwrap();
    let v = Potential::radial(kappa, 2);
    let h = NonlinearitySpec::power_law(3.0, 1.0).unwrap();
    let sol = picard_solve(&u0, &v, &h, &config()).unwrap();
    (u0, v, h, sol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn converged_runs_are_fixed_points_inside_the_ball(amp in 0.02f64..0.3, kappa in 0.0f64..0.1) {
        let (u0, v, h, sol) = solve(amp, kappa);
        prop_assert!(sol.converged());
        let residual = fixed_point_residual(&sol, &u0, &v, &h, &config()).unwrap();
        prop_assert!(residual <= 2.0 * config().residual_tolerance, "residual {residual}");
        let ball = sol.admissibility().ball_radius();
        for level in sol.level_norms().unwrap() {
            prop_assert!(level.xpq <= ball, "{} > {ball}", level.xpq);
        }
    }

    #[test]
    fn exponent_fits_ignore_amplitude(c in 1e-3f64..1e3) {
        let g = Grid::build(GridSpec::graded_at_origin(3, 8.0, 16, 0.75)).unwrap();
        let times: Vec<f64> = (0..6).map(|k| 0.03 * 10f64.powf(k as f64 / 5.0)).collect();
        let u0 = GridFunction::sample(&g, |x| radius(x).powf(-1.5)).unwrap();
        let a = fit_trace_decay(&u0, 2.0, 4.0, f64::INFINITY, &times).unwrap();
        let b = fit_trace_decay(&u0.scaled(c), 2.0, 4.0, f64::INFINITY, &times).unwrap();
        prop_assert!((a.slope - b.slope).abs() < 1e-10);
        let psi = BoundaryFunction::sample(&g, |x| 1.0 / radius(x)).unwrap();
        let a = fit_g1_decay(&psi, 2.0, 4.0, f64::INFINITY, G1Target::Interior, &times).unwrap();
        let b = fit_g1_decay(&psi.scaled(c), 2.0, 4.0, f64::INFINITY, G1Target::Interior, &times).unwrap();
        prop_assert!((a.slope - b.slope).abs() < 1e-10);
    }

    #[test]
    fn symmetry_defects_scale_with_amplitude(c in 1e-3f64..1e3, shift in -1.0f64..1.0) {
        let g = grid();
        let f = GridFunction::sample(&g, |x| (-(x[0] - shift).powi(2) - x[1].powi(2) - x[2]).exp()).unwrap();
        let d = interior_symmetry_defect(&f, SymmetryTransform::Rotation, Parity::Symmetric).unwrap();
        let dc = interior_symmetry_defect(&f.scaled(c), SymmetryTransform::Rotation, Parity::Symmetric).unwrap();
        prop_assert!((dc - c * d).abs() <= 1e-12 * c * d.max(1e-300));
    }
}

#[test]
fn self_similarity_of_the_linear_flow_ignores_amplitude() {
    let g = Grid::build(GridSpec::graded_at_origin(3, 8.0, 16, 0.75)).unwrap();
    let mut cfg = SolverConfig::new(3.0, TimeLevels::with_storage(0.125, 3, 2, 4).unwrap());
    cfg.time_quadrature = TimeQuadrature::new(16).unwrap();
    cfg.probe_widths = vec![0.25];
    let h = NonlinearitySpec::zero(3.0).unwrap();
    let mut defects = Vec::new();
    for amp in [1e-3, 1.0, 1e3] {
        let u0 = GridFunction::sample(&g, |x| amp * radius(x).powf(-0.5)).unwrap();
        cfg.allow_inadmissible = true;
        let sol = picard_solve(&u0, &Potential::zero(), &h, &cfg).unwrap();
        assert_eq!(sol.iterations(), 1);
        defects.push(check_self_similarity(&sol, 3.0, &[2.0]).unwrap().max_defect);
    }
    assert!(defects[0] < 0.05, "{defects:?}");
    for d in &defects[1..] {
        assert!((d - defects[0]).abs() < 1e-9, "{defects:?}");
    }
    let one = check_self_similarity(
        &picard_solve(
            &GridFunction::sample(&g, |x| radius(x).powf(-0.5)).unwrap(),
            &Potential::zero(),
            &h,
            &cfg,
        )
        .unwrap(),
        3.0,
        &[1.0],
    )
    .unwrap();
    assert_eq!(one.max_defect, 0.0);
}
