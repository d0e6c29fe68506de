use std::sync::OnceLock;

use num_complex::Complex64;
use yb_ofr::angular::{enumerate_channels, ChannelBlock, Manifold, Parity};
use yb_ofr::boundstates::{cluster_linewidth, molecular_linewidth, solve_block, BlockSpectrum, GridSettings, SolveSettings};
use yb_ofr::ofr::{franck_condon, Polarization, ResonanceOptics};
use yb_ofr::potentials::ModelParams;
use yb_ofr::scattering::{scattering_wavefunction, wavenumber_for_temperature, ScatteringSettings, ScatteringState};

struct Fixture {
    params: ModelParams,
    block: ChannelBlock,
    spectrum: BlockSpectrum,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let params = ModelParams::default();
        let block = enumerate_channels(1, Parity::Odd, Manifold::Excited).unwrap();
        let spectrum = solve_block(&block, &params, &GridSettings::default(), &SolveSettings::default()).unwrap();
        Fixture { params, block, spectrum }
    })
}

fn scattering(p: &ModelParams, kelvin: f64) -> ScatteringState {
    let k = wavenumber_for_temperature(p, kelvin);
    scattering_wavefunction(p, k * k / (2.0 * p.reduced_mass()), 0, &ScatteringSettings::default()).unwrap()
}

fn dot(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>()).sum()
}

#[test]
fn eigenvectors_are_orthonormal() {
    let f = fixture();
    let vecs: Vec<&Vec<Vec<f64>>> = f.spectrum.states.iter().flat_map(|s| s.members()).collect();
    assert!(vecs.len() >= 17);
    for (i, a) in vecs.iter().enumerate() {
        for (j, b) in vecs.iter().enumerate().skip(i) {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot(a, b) - want).abs() < 1e-8, "<{i}|{j}> = {}", dot(a, b));
        }
    }
}

// Γ_M from the case-(c) populations: Γ_A Σ_k P_k (1 + x_k), with x_k the
// diagonal of the exchange operator in that basis.
#[test]
fn linewidth_matches_case_c_populations() {
    let f = fixture();
    let u = &f.block.case_c_vectors;
    let xc = u.transpose() * &f.block.dipole_exchange * u;
    let n = f.block.len();
    for a in 0..n {
        for b in 0..n {
            if a != b {
                assert!(xc[(a, b)].abs() < 1e-12, "exchange not diagonal in case (c)");
            }
        }
    }
    for s in &f.spectrum.states {
        let c = &s.coefficients;
        let len = c.iter().map(Vec::len).max().unwrap();
        let mut pop = vec![0.0; n];
        for i in 0..len {
            let amp: Vec<f64> = c.iter().map(|ch| ch.get(i).copied().unwrap_or(0.0)).collect();
            for k in 0..n {
                let proj: f64 = (0..n).map(|e| u[(e, k)] * amp[e]).sum();
                pop[k] += proj * proj;
            }
        }
        let norm: f64 = pop.iter().sum();
        let gamma = f.params.gamma_a_khz.value * (0..n).map(|k| pop[k] * (1.0 + xc[(k, k)])).sum::<f64>() / norm;
        assert!((gamma - molecular_linewidth(c, &f.block, &f.params)).abs() < 1e-9, "{gamma}");
        assert!((0.0..=2.0 * f.params.gamma_a_khz.value).contains(&s.gamma_m_khz));
    }
}

#[test]
fn cluster_linewidth_is_rotation_invariant() {
    let f = fixture();
    let (a, b) = (&f.spectrum.states[10].coefficients, &f.spectrum.states[11].coefficients);
    let before = cluster_linewidth(&[a, b], &f.block, &f.params);
    for theta in [0.3_f64, 1.1, 2.5] {
        let (c, s) = (theta.cos(), theta.sin());
        let mix = |x: f64, y: f64| -> Vec<Vec<f64>> { a.iter().zip(b).map(|(p, q)| p.iter().zip(q).map(|(u, v)| x * u + y * v).collect()).collect() };
        let (ra, rb) = (mix(c, s), mix(-s, c));
        let after = cluster_linewidth(&[&ra, &rb], &f.block, &f.params);
        assert!((after - before).abs() < 1e-9 * before, "{after} vs {before}");
    }
}

// Summing over the final M_T makes the singlet s-wave FCF independent of polarization.
#[test]
fn franck_condon_is_polarization_independent() {
    let f = fixture();
    let scat = scattering(&f.params, 2e-6);
    let c = |x: f64, y: f64| Complex64::new(x, y);
    let r3 = 1.0 / 3f64.sqrt();
    let pols = [
        Polarization::circular(true),
        Polarization::circular(false),
        Polarization::new([c(r3, 0.0), c(r3, 0.0), c(r3, 0.0)]).unwrap(),
        Polarization::new([c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)]).unwrap(),
    ];
    for s in f.spectrum.states.iter().step_by(3) {
        let z = franck_condon(s, &f.block, &f.spectrum.grid, &scat, &Polarization::linear_z()).unwrap();
        assert!(z > 0.0);
        for e in &pols {
            let v = franck_condon(s, &f.block, &f.spectrum.grid, &scat, e).unwrap();
            assert!((v / z - 1.0).abs() < 1e-10, "{} MHz: {v} vs {z}", s.binding_mhz);
        }
    }
}

// Energy normalization makes |ψ_g|² ∝ k at threshold, so FCF/k tends to a
// constant with a leading correction linear in E: measured from 100 nK, the
// drift at 400 nK is three times the drift at 200 nK.
#[test]
fn franck_condon_scales_with_k_at_threshold() {
    let f = fixture();
    let temps = [100e-9, 200e-9, 400e-9];
    let scats: Vec<ScatteringState> = temps.iter().map(|&t| scattering(&f.params, t)).collect();
    for s in f.spectrum.states.iter().filter(|s| s.binding_mhz > 20.0) {
        let r: Vec<f64> = scats
            .iter()
            .map(|sc| franck_condon(s, &f.block, &f.spectrum.grid, sc, &Polarization::linear_z()).unwrap() / sc.k)
            .collect();
        let (d2, d4) = (r[1] / r[0] - 1.0, r[2] / r[0] - 1.0);
        assert!(d4.abs() < 0.02, "{} MHz: {d4}", s.binding_mhz);
        if d2.abs() > 1e-5 {
            assert!((d4 / d2 - 3.0).abs() < 0.3, "{} MHz: {d2} {d4}", s.binding_mhz);
        }
    }
}

#[test]
fn optical_length_is_linear_in_intensity() {
    let f = fixture();
    let scat = scattering(&f.params, 2e-6);
    let s = f.spectrum.nearest(396.5).unwrap();
    let line = ResonanceOptics::new(s, &f.block, &f.spectrum.grid, &scat, &Polarization::linear_z(), &f.params).unwrap();
    assert!((line.l_opt(12.7) / line.l_opt(1.0) - 12.7).abs() < 1e-12);
    let i = line.intensity_for_width(7.83, &f.params);
    assert!((line.gamma_stim_mhz(i, &f.params) - 7.83).abs() < 1e-12);
    // Γ_stim = 2 k l_opt Γ_M
    let gm_mhz = line.gamma_m_khz * 1e-3;
    let gs = 2.0 * line.k_r * line.l_opt(1.0) * gm_mhz;
    assert!((gs / line.gamma_stim_mhz(1.0, &f.params) - 1.0).abs() < 1e-12);
}
