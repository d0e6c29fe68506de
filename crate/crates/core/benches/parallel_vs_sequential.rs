//! Sequential vs parallel execution of the independent work units: the four
//! p-wave blocks on a short grid, and a dense detuning scan.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use yb_ofr::angular::{allowed_excited_blocks, enumerate_channels, ChannelBlock, Manifold, PartialWave};
use yb_ofr::boundstates::{solve_blocks, GridSettings, SolveSettings};
use yb_ofr::exec::ExecMode;
use yb_ofr::ofr::{complex_scattering_length, gate_time_us};
use yb_ofr::potentials::ModelParams;

const MODES: [ExecMode; 2] = [ExecMode::Sequential, ExecMode::Parallel];

fn p_blocks() -> Vec<ChannelBlock> {
    allowed_excited_blocks(PartialWave::P).into_iter().map(|(t, p)| enumerate_channels(t, p, Manifold::Excited).unwrap()).collect()
}

fn blocks(c: &mut Criterion) {
    let params = ModelParams::default();
    let blocks = p_blocks();
    let grid = GridSettings { r_max: 600.0, ..GridSettings::default() };
    let solve = SolveSettings { window_mhz: (-1100.0, -100.0), ..SolveSettings::default() };
    let mut g = c.benchmark_group("p_wave_blocks");
    g.sample_size(10).measurement_time(Duration::from_secs(20));
    for mode in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &m| {
            b.iter(|| solve_blocks(black_box(&blocks), &params, &grid, &solve, m).unwrap())
        });
    }
    g.finish();
}

fn scan(c: &mut Criterion) {
    let params = ModelParams::default();
    let detunings: Vec<f64> = (0..200_000).map(|i| -20.0 + 2e-4 * i as f64 + 1e-5).collect();
    let mut g = c.benchmark_group("detuning_scan");
    for mode in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &m| {
            b.iter(|| {
                m.map(black_box(&detunings), |&d| {
                    let (a, _) = complex_scattering_length(842.5 * 12.7, d, 0.218, 6.53);
                    gate_time_us(a, 2.4e14, std::f64::consts::FRAC_PI_2, &params).unwrap_or(f64::NAN)
                })
            })
        });
    }
    g.finish();
}

criterion_group!(benches, blocks, scan);
criterion_main!(benches);
