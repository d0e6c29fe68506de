use faer::Side;
use yb_ofr::angular::{enumerate_channels, Manifold, Parity};
use yb_ofr::boundstates::{
    assemble_hamiltonian, build_grid, momentum_envelope, single_channel_levels, solve_block, BoundStateError, GridSettings, RadialGrid, SolveSettings,
};
use yb_ofr::numerov::{integrate_outward, NumerovSettings, RadialProblem};
use yb_ofr::potentials::{ground_potential, ModelParams};
use yb_ofr::units;

fn lj_excited(p: &ModelParams, with_c3: bool) -> impl Fn(f64) -> f64 {
    let (c12, c6) = (p.c12_excited.value, p.c6_excited.value);
    let c3 = if with_c3 { 2.0 * p.c3_omega1.value } else { 0.0 };
    move |r: f64| c12 / r.powi(12) - c6 / r.powi(6) - c3 / r.powi(3)
}

fn lj_grid(p: &ModelParams, with_c3: bool, r_max: f64) -> RadialGrid {
    let mu = p.reduced_mass();
    let c6 = p.c6_excited.value;
    let c3 = if with_c3 { 2.0 * p.c3_omega1.value } else { 0.0 };
    let floor = 0.5 * std::f64::consts::PI / 25.0;
    let env = move |r: f64| (floor * floor + 2.0 * mu * (c6 / r.powi(6) + c3 / r.powi(3))).sqrt();
    RadialGrid::mapped(&env, 5.5, r_max, 0.5, None)
}

// Every 5th level of the LJ+C3 well must sit between the Numerov energies
// 0.1 MHz below (k nodes) and above (k+1 nodes).
#[test]
fn lennard_jones_levels_inside_numerov_brackets() {
    let p = ModelParams::default();
    let v = lj_excited(&p, true);
    let grid = lj_grid(&p, true, 3000.0);
    let bound: Vec<f64> = single_channel_levels(&grid, p.reduced_mass(), &v).unwrap().into_iter().filter(|&e| e < 0.0).collect();
    assert!(bound.len() > 100, "{}", bound.len());
    let prob = RadialProblem { potential: &v, mu: p.reduced_mass(), l: 0 };
    let s = NumerovSettings { phase_step: 0.01, max_relative_step: 0.01, wall_factor: 10.0 };
    let d = units::mhz_to_au(0.1);
    for (k, &e) in bound.iter().enumerate().step_by(5) {
        assert_eq!(integrate_outward(&prob, e - d, 5.5, 3000.0, &s).nodes, k, "level {k} below");
        assert_eq!(integrate_outward(&prob, e + d, 5.5, 3000.0, &s).nodes, k + 1, "level {k} above");
    }
}

// Pure C6 tail: E_v ∝ (v_D − v)³, so cube roots of binding energies are evenly spaced.
#[test]
fn near_threshold_levels_follow_leroy_bernstein() {
    let p = ModelParams::default();
    let v = lj_excited(&p, false);
    let grid = lj_grid(&p, false, 3000.0);
    let cbrt: Vec<f64> = single_channel_levels(&grid, p.reduced_mass(), &v)
        .unwrap()
        .into_iter()
        .filter(|&e| e < 0.0)
        .map(|e| units::au_to_mhz(-e))
        .filter(|b| (10.0..2.0e4).contains(b))
        .map(f64::cbrt)
        .collect();
    assert!(cbrt.len() >= 5);
    let steps: Vec<f64> = cbrt.windows(2).map(|w| w[0] - w[1]).collect();
    let mean = steps.iter().sum::<f64>() / steps.len() as f64;
    for s in &steps {
        assert!((s / mean - 1.0).abs() < 0.01, "{steps:?}");
    }
}

// The one-channel ground block built by the multichannel assembler must give
// the same spectrum as the bare single-channel DVR.
#[test]
fn ground_block_reduces_to_single_channel() {
    let p = ModelParams::default();
    let block = enumerate_channels(0, Parity::Even, Manifold::Ground).unwrap();
    assert_eq!(block.len(), 1);
    let settings = GridSettings { r_max: 300.0, f_half_cutoff: None, ..GridSettings::default() };
    let env = momentum_envelope(&block, &p, &settings);
    let grid = RadialGrid::mapped(&env, 6.0, 300.0, 0.5, None);
    let (h, layout) = assemble_hamiltonian(&block, &grid, &p, &settings).unwrap();
    assert_eq!(layout.dim(), grid.len());
    let multi = h.self_adjoint_eigenvalues(Side::Lower).unwrap();
    let single = single_channel_levels(&grid, p.reduced_mass(), &|r| ground_potential(r, &p).unwrap()).unwrap();
    for (a, b) in multi.iter().zip(&single).take(80) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-6), "{a} vs {b}");
    }
}

// Halving the grid spacing moves the s-wave levels bound by more than 20 MHz
// by < 0.1 MHz. The box is shortened to keep the fine solve cheap.
#[test]
fn levels_converge_under_grid_halving() {
    let p = ModelParams::default();
    let block = enumerate_channels(1, Parity::Odd, Manifold::Excited).unwrap();
    let solve = SolveSettings { window_mhz: (-1100.0, -20.0), ..SolveSettings::default() };
    let base = GridSettings { r_max: 2500.0, ..GridSettings::default() };
    let coarse = solve_block(&block, &p, &base, &solve).unwrap();
    let fine_grid = GridSettings { spacing_factor: 0.25, max_spacing: 15.0, ..base };
    let fine = solve_block(&block, &p, &fine_grid, &solve).unwrap();
    assert!(fine.grid.len() > coarse.grid.len() * 3 / 2);
    assert!(!coarse.states.is_empty());
    assert_eq!(coarse.states.len(), fine.states.len(), "{:?}", (coarse.states.iter().map(|s| s.binding_mhz).collect::<Vec<_>>(), fine.states.iter().map(|s| s.binding_mhz).collect::<Vec<_>>()));
    for (c, f) in coarse.states.iter().zip(&fine.states) {
        assert!((c.binding_mhz - f.binding_mhz).abs() < 0.1, "{} vs {}", c.binding_mhz, f.binding_mhz);
    }
}

#[test]
fn impossible_grids_are_rejected() {
    let p = ModelParams::default();
    let block = enumerate_channels(1, Parity::Odd, Manifold::Excited).unwrap();
    let solve = SolveSettings::default();
    let bad = |g: GridSettings| solve_block(&block, &p, &g, &solve).unwrap_err();
    assert!(matches!(bad(GridSettings { r_min: 50.0, r_max: 20.0, ..Default::default() }), BoundStateError::InfeasibleGrid(_)));
    assert!(matches!(bad(GridSettings { spacing_factor: 0.8, ..Default::default() }), BoundStateError::InfeasibleGrid(_)));
    assert!(matches!(bad(GridSettings { n_points: Some(50), ..Default::default() }), BoundStateError::InfeasibleGrid(_)));
    assert!(matches!(bad(GridSettings { memory_cap_mb: 1.0, ..Default::default() }), BoundStateError::MemoryCap { .. }));
    // a 5 MHz level turns around near 300 a0, far outside a 100 a0 box
    let small = GridSettings { r_max: 100.0, ..Default::default() };
    assert!(matches!(build_grid(&block, 5.0, &p, &small), Err(BoundStateError::InfeasibleGrid(_))));
}
