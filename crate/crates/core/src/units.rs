//! Atomic units and the handful of conversions the engine needs.
//!
//! Everything inside the engine is in Hartree atomic units (ħ = mₑ = e = a₀ = 1).
//! Frequencies quoted in MHz/kHz are ordinary (not angular) frequencies, E = h·ν.

/// Hartree energy expressed as a frequency, Hz (CODATA 2018).
pub const HARTREE_HZ: f64 = 6.579_683_920_502e15;
/// Bohr radius in metres (CODATA 2018).
pub const BOHR_M: f64 = 5.291_772_109_03e-11;
/// Atomic unit of time in seconds (CODATA 2018).
pub const AU_TIME_S: f64 = 2.418_884_326_585_7e-17;
/// Hartree energy in joules (CODATA 2018).
pub const HARTREE_J: f64 = 4.359_744_722_207_1e-18;
/// Unified atomic mass unit in electron masses (CODATA 2018).
pub const DALTON_ME: f64 = 1_822.888_486_209;
/// Boltzmann constant in Hartree per kelvin (CODATA 2018).
pub const KB_HARTREE_PER_K: f64 = 3.166_811_563_455_6e-6;
/// Reduced Planck constant, J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Speed of light, m/s.
pub const C_SI: f64 = 299_792_458.0;
/// Electron mass, kg.
pub const ME_KG: f64 = 9.109_383_701_5e-31;
/// Speed of light in atomic units.
pub const C_AU: f64 = 137.035_999_084;

pub fn mhz_to_au(mhz: f64) -> f64 {
    mhz * 1e6 / HARTREE_HZ
}

pub fn au_to_mhz(e: f64) -> f64 {
    e * HARTREE_HZ * 1e-6
}

pub fn khz_to_au(khz: f64) -> f64 {
    khz * 1e3 / HARTREE_HZ
}

pub fn au_to_khz(e: f64) -> f64 {
    e * HARTREE_HZ * 1e-3
}

pub fn kelvin_to_au(t: f64) -> f64 {
    t * KB_HARTREE_PER_K
}

pub fn au_to_kelvin(e: f64) -> f64 {
    e / KB_HARTREE_PER_K
}

pub fn bohr_to_m(r: f64) -> f64 {
    r * BOHR_M
}

pub fn m_to_bohr(r: f64) -> f64 {
    r / BOHR_M
}

pub fn bohr_to_cm(r: f64) -> f64 {
    r * BOHR_M * 100.0
}

/// Linewidth quoted as Γ/2π in kHz → decay rate Γ in atomic units of energy (ħΓ).
pub fn linewidth_khz_to_au(gamma_over_2pi_khz: f64) -> f64 {
    khz_to_au(gamma_over_2pi_khz)
}

/// W/cm² → atomic units of intensity is never needed directly; intensities are
/// only ever used as ratios I/I_sat, so both sides stay in mW/cm².
pub fn w_cm2_to_mw_cm2(i: f64) -> f64 {
    i * 1e3
}

/// Volume per time, atomic units (a₀³ / t_au) → cm³/s.
pub fn au_rate_coefficient_to_cm3_s(k: f64) -> f64 {
    k * (BOHR_M * 100.0).powi(3) / AU_TIME_S
}

/// cm⁻³ → a₀⁻³.
pub fn per_cm3_to_au(n: f64) -> f64 {
    n * (BOHR_M * 100.0).powi(3)
}

pub fn au_time_to_us(t: f64) -> f64 {
    t * AU_TIME_S * 1e6
}

/// Atomic mass (u) → atomic units (electron masses).
pub fn dalton_to_au(m: f64) -> f64 {
    m * DALTON_ME
}
