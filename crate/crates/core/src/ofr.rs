//! Resonance optics: Franck-Condon factors, stimulated widths and optical
//! lengths, the complex scattering length near a line, two-body loss and the
//! √SWAP gate built on the collisional phase.
//!
//! Frequencies in the public structs are ordinary frequencies (Γ/2π), lengths
//! are in a₀, intensities in W/cm².

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angular::{allowed_excited_blocks, CaseEChannel, ChannelBlock, HalfInt, Manifold, Parity, PartialWave, ProductSpace};
use crate::boundstates::{channel_overlaps, BoundState, RadialGrid};
use crate::potentials::ModelParams;
use crate::scattering::ScatteringState;
use crate::units;

#[derive(Debug, Error)]
pub enum OfrError {
    #[error("polarization vector must be unit-normalized, got |ε|² = {0}")]
    NotUnit(f64),
    #[error("block (T={t}, {parity}) cannot be reached from an s-wave collision")]
    NotSWaveBlock { t: i32, parity: Parity },
    #[error("block must belong to the excited manifold")]
    NotExcited,
    #[error("invalid ground channel I={i}, R={r}, T={t}")]
    BadGroundChannel { i: i32, r: i32, t: i32 },
    #[error("Δ = 0 gives a_opt = 0 and no finite gate time")]
    ZeroDetuning,
    #[error("{0} must be positive and finite")]
    NonPositive(&'static str),
}

/// Laser polarization as a Cartesian complex unit vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Polarization(pub [Complex64; 3]);

impl Polarization {
    pub fn new(v: [Complex64; 3]) -> Result<Self, OfrError> {
        let n: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        if !((n - 1.0).abs() < 1e-10) {
            return Err(OfrError::NotUnit(n));
        }
        Ok(Polarization(v))
    }

    pub fn linear_z() -> Self {
        Polarization([Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
    }

    /// Circular polarization in the xy plane; `plus` selects σ⁺.
    pub fn circular(plus: bool) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let y = if plus { Complex64::new(0.0, s) } else { Complex64::new(0.0, -s) };
        Polarization([Complex64::new(-s, 0.0), -y, Complex64::new(0.0, 0.0)])
    }

    /// Parses "x,y,z" with real entries, or the names z / sigma+ / sigma-.
    pub fn parse(s: &str) -> Result<Self, String> {
        match s.trim() {
            "z" | "linear" | "pi" => return Ok(Self::linear_z()),
            "sigma+" => return Ok(Self::circular(true)),
            "sigma-" => return Ok(Self::circular(false)),
            _ => {}
        }
        let parts: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| format!("bad polarization '{s}': {e}"))?;
        if parts.len() != 3 {
            return Err(format!("polarization needs three components, got '{s}'"));
        }
        Self::new([0, 1, 2].map(|k| Complex64::new(parts[k], 0.0))).map_err(|e| e.to_string())
    }
}

/// Initial ground channel |I, R; T_g⟩ of the colliding pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundChannel {
    pub i: i32,
    pub r: i32,
    pub t: i32,
}

impl GroundChannel {
    /// Nuclear-spin singlet s wave.
    pub const S_WAVE: GroundChannel = GroundChannel { i: 0, r: 0, t: 0 };

    fn case_e(&self) -> CaseEChannel {
        CaseEChannel {
            f1: HalfInt::HALF,
            f2: HalfInt::HALF,
            f: HalfInt::int(self.i),
            r: HalfInt::int(self.r),
            t: HalfInt::int(self.t),
            parity: Parity::from_sign(if self.r % 2 == 0 { 1 } else { -1 }),
        }
    }
}

/// ⟨c; T M_T| d·ε |g; T_g M_g⟩ / d_A between the antisymmetrized states, for every
/// (M_g, M_T) pair. Indexed `[pair][channel]`.
pub fn dipole_amplitudes(block: &ChannelBlock, ground: GroundChannel, eps: &Polarization) -> Result<Vec<Vec<Complex64>>, OfrError> {
    if block.manifold != Manifold::Excited {
        return Err(OfrError::NotExcited);
    }
    let g_ch = ground.case_e();
    if !g_ch.is_valid() || ground.i < 0 || ground.i > 1 {
        return Err(OfrError::BadGroundChannel { i: ground.i, r: ground.r, t: ground.t });
    }
    let r_max = block.channels.iter().map(|c| c.r.as_int()).max().unwrap_or(0).max(ground.r);
    let gs = ProductSpace::new(Manifold::Ground, r_max);
    let es = ProductSpace::new(Manifold::Excited, r_max);
    let d = ProductSpace::absorption_from_ground(&gs, &es, eps.0);
    let swap = gs.ground_exchange();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for m_g in -ground.t..=ground.t {
        let g = gs.case_e_vector(&g_ch, HalfInt::int(m_g));
        // (1/√2)(D_B|g⟩ − D_B P₁₂|g⟩) seen from the sector representative
        let g_anti: DVector<Complex64> = (&g - &swap * &g).map(|x| Complex64::new(s * x, 0.0));
        let dg = &d * g_anti;
        for m_t in -block.t..=block.t {
            let row = block
                .channels
                .iter()
                .map(|c| {
                    let e = es.case_e_vector(c, HalfInt::int(m_t));
                    e.iter().zip(dg.iter()).map(|(a, b)| b * *a).sum::<Complex64>()
                })
                .collect();
            out.push(row);
        }
    }
    Ok(out)
}

/// I_sat = 2π²ħΓ_A c / (3λ³), in mW/cm².
pub fn saturation_intensity(params: &ModelParams) -> f64 {
    let gamma = 2.0 * std::f64::consts::PI * params.gamma_a_khz.value * 1e3;
    let lambda = params.lambda_nm.value * 1e-9;
    let w_m2 = 2.0 * std::f64::consts::PI.powi(2) * units::HBAR_SI * gamma * units::C_SI / (3.0 * lambda.powi(3));
    w_m2 * 0.1
}

/// f_FC·f_rot = Σ |⟨ψ_e|d·ε|ψ_g⟩|² / 2d_A², summed over the degenerate M_T
/// components (and eigenvectors) of the level and averaged over M_g.
/// Units: 1/Hartree, because ψ_g is energy normalized.
pub fn franck_condon(
    state: &BoundState,
    block: &ChannelBlock,
    grid: &RadialGrid,
    scat: &ScatteringState,
    eps: &Polarization,
) -> Result<f64, OfrError> {
    if !allowed_excited_blocks(PartialWave::S).contains(&(block.t, block.parity)) {
        return Err(OfrError::NotSWaveBlock { t: block.t, parity: block.parity });
    }
    let amps = dipole_amplitudes(block, GroundChannel::S_WAVE, eps)?;
    let g = |r: f64| scat.value_at(r);
    let mut total = 0.0;
    for coeffs in state.members() {
        let ov = channel_overlaps(coeffs, grid, &g);
        for row in &amps {
            let m: Complex64 = row.iter().zip(&ov).map(|(a, o)| a * *o).sum();
            total += m.norm_sqr() / 2.0;
        }
    }
    Ok(total)
}

/// Γ_stim = (π/2)(I/I_sat) ħΓ_A² f_FC f_rot, as ħΓ_stim in Hartree.
pub fn stimulated_width(fcf: f64, intensity_w_cm2: f64, params: &ModelParams) -> f64 {
    let s = units::w_cm2_to_mw_cm2(intensity_w_cm2) / saturation_intensity(params);
    0.5 * std::f64::consts::PI * s * params.gamma_a().powi(2) * fcf
}

/// l_opt = Γ_stim / (2 k_r Γ_M); widths in any common unit, k in a₀⁻¹.
pub fn optical_length(gamma_stim: f64, k: f64, gamma_m: f64) -> f64 {
    gamma_stim / (2.0 * k * gamma_m)
}

/// (a_opt, b_opt) in the units of `l_opt`; Δ and the widths share one unit.
pub fn complex_scattering_length(l_opt: f64, delta: f64, gamma_m: f64, gamma_stim: f64) -> (f64, f64) {
    let den = delta * delta + 0.25 * (gamma_m + gamma_stim).powi(2);
    (l_opt * delta * gamma_m / den, 0.5 * l_opt * gamma_m * gamma_m / den)
}

/// Two-body loss coefficient in cm³/s. `formula` is 4πħb/μ from 2Kn = 8πħnb/μ;
/// `half` is half of it, the identical-particle convention that reproduces the
/// quoted design-point value.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LossCoefficient {
    pub formula_cm3_s: f64,
    pub half_cm3_s: f64,
}

pub fn loss_coefficient(b_opt_a0: f64, params: &ModelParams) -> LossCoefficient {
    let k = 4.0 * std::f64::consts::PI * b_opt_a0 / params.reduced_mass();
    let k = units::au_rate_coefficient_to_cm3_s(k);
    LossCoefficient { formula_cm3_s: k, half_cm3_s: 0.5 * k }
}

/// F = exp(−(π/2) Γ_M/|Δ|) for the π/2 phase gate.
pub fn gate_fidelity(gamma_m: f64, delta: f64) -> f64 {
    (-0.5 * std::f64::consts::PI * gamma_m / delta.abs()).exp()
}

/// τ = φ μ / (4πħ n |a_opt|), in μs.
pub fn gate_time_us(a_opt_a0: f64, density_cm3: f64, phase: f64, params: &ModelParams) -> Result<f64, OfrError> {
    if a_opt_a0 == 0.0 {
        return Err(OfrError::ZeroDetuning);
    }
    if !(density_cm3 > 0.0 && density_cm3.is_finite()) {
        return Err(OfrError::NonPositive("density"));
    }
    let n = units::per_cm3_to_au(density_cm3);
    let tau = phase * params.reduced_mass() / (4.0 * std::f64::consts::PI * n * a_opt_a0.abs());
    Ok(units::au_time_to_us(tau))
}

/// Γ_A√(1 + I/I_sat) as Γ/2π in MHz.
pub fn power_broadened_linewidth_mhz(intensity_w_cm2: f64, params: &ModelParams) -> f64 {
    let s = units::w_cm2_to_mw_cm2(intensity_w_cm2) / saturation_intensity(params);
    params.gamma_a_khz.value * 1e-3 * (1.0 + s).sqrt()
}

/// Collision wavenumber (a₀⁻¹) and energy (K) implied by an optical length per
/// unit intensity together with the design rule Γ_stim = m·Γ_M at intensity I.
pub fn implied_collision_energy(l_opt_per_intensity_a0: f64, intensity_w_cm2: f64, width_ratio: f64, params: &ModelParams) -> (f64, f64) {
    let k = width_ratio / (2.0 * l_opt_per_intensity_a0 * intensity_w_cm2);
    let e = k * k / (2.0 * params.reduced_mass());
    (k, units::au_to_kelvin(e))
}

/// Optical properties of one line at a fixed collision energy.
#[derive(Clone, Debug, Serialize)]
pub struct ResonanceOptics {
    pub t: i32,
    pub parity: Parity,
    pub binding_mhz: f64,
    pub gamma_m_khz: f64,
    /// f_FC·f_rot in 1/Hartree.
    pub fcf: f64,
    pub l_opt_per_intensity_a0: f64,
    pub e_col_kelvin: f64,
    pub k_r: f64,
    pub is_plr: bool,
}

impl ResonanceOptics {
    pub fn new(state: &BoundState, block: &ChannelBlock, grid: &RadialGrid, scat: &ScatteringState, eps: &Polarization, params: &ModelParams) -> Result<Self, OfrError> {
        let fcf = franck_condon(state, block, grid, scat, eps)?;
        let gamma_m = units::khz_to_au(state.gamma_m_khz);
        let l = optical_length(stimulated_width(fcf, 1.0, params), scat.k, gamma_m);
        Ok(ResonanceOptics {
            t: state.t,
            parity: state.parity,
            binding_mhz: state.binding_mhz,
            gamma_m_khz: state.gamma_m_khz,
            fcf,
            l_opt_per_intensity_a0: l,
            e_col_kelvin: units::au_to_kelvin(scat.e_col),
            k_r: scat.k,
            is_plr: state.is_plr,
        })
    }

    pub fn l_opt(&self, intensity_w_cm2: f64) -> f64 {
        self.l_opt_per_intensity_a0 * intensity_w_cm2
    }

    /// Γ_stim/2π in MHz.
    pub fn gamma_stim_mhz(&self, intensity_w_cm2: f64, params: &ModelParams) -> f64 {
        units::au_to_mhz(stimulated_width(self.fcf, intensity_w_cm2, params))
    }

    /// Intensity at which Γ_stim reaches the given width (MHz).
    pub fn intensity_for_width(&self, gamma_stim_mhz: f64, params: &ModelParams) -> f64 {
        gamma_stim_mhz / self.gamma_stim_mhz(1.0, params)
    }

    /// Evaluate the resonance at (I, Δ). Δ is measured from this line, MHz.
    pub fn point(&self, intensity_w_cm2: f64, delta_mhz: f64, params: &ModelParams) -> OfrPoint {
        let gm = self.gamma_m_khz * 1e-3;
        let gs = self.gamma_stim_mhz(intensity_w_cm2, params);
        let (a, b) = complex_scattering_length(self.l_opt(intensity_w_cm2), delta_mhz, gm, gs);
        let loss = loss_coefficient(b, params);
        OfrPoint {
            intensity_w_cm2,
            delta_mhz,
            a_opt_a0: a,
            b_opt_a0: b,
            gamma_stim_mhz: gs,
            k_cm3_s: loss.formula_cm3_s,
            k_half_cm3_s: loss.half_cm3_s,
            fidelity: gate_fidelity(gm, delta_mhz),
        }
    }
}

/// One (I, Δ) evaluation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OfrPoint {
    pub intensity_w_cm2: f64,
    pub delta_mhz: f64,
    pub a_opt_a0: f64,
    pub b_opt_a0: f64,
    pub gamma_stim_mhz: f64,
    pub k_cm3_s: f64,
    pub k_half_cm3_s: f64,
    pub fidelity: f64,
}

/// A √SWAP design at fixed intensity, detuning and density.
#[derive(Clone, Debug, Serialize)]
pub struct GatePlan {
    pub binding_mhz: f64,
    pub intensity_w_cm2: f64,
    pub delta_mhz: f64,
    pub density_cm3: f64,
    pub phase: f64,
    pub a_opt_a0: f64,
    pub b_opt_a0: f64,
    pub gamma_stim_mhz: f64,
    pub tau_gate_us: f64,
    pub fidelity: f64,
    pub loss: LossCoefficient,
    pub power_broadened_linewidth_mhz: f64,
    /// Power-broadened atomic width as a fraction of the line's distance from dissociation.
    pub broadening_to_binding: f64,
    pub broadening_warning: bool,
    /// Neighbouring line's l_opt/Δ relative to this line's, if one is supplied.
    pub neighbour_ratio: Option<f64>,
}

pub fn gate_plan(
    line: &ResonanceOptics,
    intensity_w_cm2: f64,
    delta_mhz: f64,
    density_cm3: f64,
    phase: f64,
    neighbour: Option<&ResonanceOptics>,
    params: &ModelParams,
) -> Result<GatePlan, OfrError> {
    if delta_mhz == 0.0 {
        return Err(OfrError::ZeroDetuning);
    }
    if !(intensity_w_cm2 >= 0.0 && intensity_w_cm2.is_finite()) {
        return Err(OfrError::NonPositive("intensity"));
    }
    let p = line.point(intensity_w_cm2, delta_mhz, params);
    let tau = gate_time_us(p.a_opt_a0, density_cm3, phase, params)?;
    let broadened = power_broadened_linewidth_mhz(intensity_w_cm2, params);
    let ratio = broadened / line.binding_mhz;
    let neighbour_ratio = neighbour.map(|n| {
        // detuning of the laser from the neighbouring line
        let dn = delta_mhz + (n.binding_mhz - line.binding_mhz);
        (n.l_opt(intensity_w_cm2) / dn).abs() / (line.l_opt(intensity_w_cm2) / delta_mhz).abs()
    });
    Ok(GatePlan {
        binding_mhz: line.binding_mhz,
        intensity_w_cm2,
        delta_mhz,
        density_cm3,
        phase,
        a_opt_a0: p.a_opt_a0,
        b_opt_a0: p.b_opt_a0,
        gamma_stim_mhz: p.gamma_stim_mhz,
        tau_gate_us: tau,
        fidelity: gate_fidelity(line.gamma_m_khz, delta_mhz * 1e3),
        loss: loss_coefficient(p.b_opt_a0, params),
        power_broadened_linewidth_mhz: broadened,
        broadening_to_binding: ratio,
        broadening_warning: ratio > 0.1,
        neighbour_ratio,
    })
}

/// The design rule of the worked example: Δ = −m·Γ_M and an intensity chosen
/// so that Γ_stim = |Δ|.
pub fn design_gate(
    line: &ResonanceOptics,
    detuning_in_gamma_m: f64,
    density_cm3: f64,
    phase: f64,
    neighbour: Option<&ResonanceOptics>,
    params: &ModelParams,
) -> Result<GatePlan, OfrError> {
    let delta = detuning_in_gamma_m * line.gamma_m_khz * 1e-3;
    let intensity = line.intensity_for_width(delta.abs(), params);
    gate_plan(line, intensity, delta, density_cm3, phase, neighbour, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::enumerate_channels;

    #[test]
    fn saturation_intensity_value() {
        let p = ModelParams::default();
        assert!((saturation_intensity(&p) - 0.1386).abs() < 0.0005, "{}", saturation_intensity(&p));
    }

    #[test]
    fn design_point_optics() {
        let gm = 0.261;
        let (a, b) = complex_scattering_length(10668.0, -30.0 * gm, gm, 30.0 * gm);
        assert!((a + 281.0).abs() < 0.01 * 281.0, "{a}");
        assert!((b - 4.678).abs() < 0.01, "{b}");
        assert!((gate_fidelity(gm, 30.0 * gm) - 0.9490).abs() < 5e-4);
    }

    #[test]
    fn loss_coefficient_at_design_point() {
        let k = loss_coefficient(4.68, &ModelParams::default());
        assert!((k.formula_cm3_s - 2.3e-12).abs() < 0.05e-12, "{:?}", k);
    }

    #[test]
    fn gate_time_at_corrected_density() {
        let t = gate_time_us(-281.0, 2.4e14, std::f64::consts::FRAC_PI_2, &ModelParams::default()).unwrap();
        assert!((t - 47.1).abs() < 0.3, "{t}");
    }

    #[test]
    fn polarization_must_be_unit() {
        assert!(Polarization::parse("1,1,0").is_err());
        assert!(Polarization::parse("0.6,0,0.8").is_ok());
    }

    #[test]
    fn singlet_couples_and_triplet_does_not() {
        let block = enumerate_channels(1, Parity::Odd, Manifold::Excited).unwrap();
        let eps = Polarization::linear_z();
        let singlet = dipole_amplitudes(&block, GroundChannel::S_WAVE, &eps).unwrap();
        assert!(singlet.iter().flatten().any(|a| a.norm() > 0.1));
        let triplet = dipole_amplitudes(&block, GroundChannel { i: 1, r: 0, t: 1 }, &eps).unwrap();
        assert!(triplet.iter().flatten().all(|a| a.norm() < 1e-14));
    }
}
