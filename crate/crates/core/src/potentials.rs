//! Model parameters and the r-dependent pieces of the radial Hamiltonian.
//!
//! All matrices are in the frozen case-(e) channel order of a [`ChannelBlock`].
//! The energy zero is the ¹S₀+³P₁(f=3/2) separated-atom limit for excited
//! blocks and the ¹S₀+¹S₀ limit for ground blocks.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angular::{ChannelBlock, HalfInt, Manifold};
use crate::units;

#[derive(Debug, Error, PartialEq)]
pub enum PotentialError {
    #[error("internuclear distance must be positive, got r={0}")]
    NonPositiveRadius(f64),
    #[error("Omega must be 0 or 1 for a J=1 atom, got {0}")]
    BadOmega(i32),
    #[error("sigma must be +1 or -1, got {0}")]
    BadSigma(i32),
    #[error("parameter {name} = {value} violates {rule}")]
    InvalidParameter { name: &'static str, value: f64, rule: &'static str },
}

/// A number together with where it came from: "paper", "literature:<source>",
/// "calibrated" or "config".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub provenance: String,
}

impl Quantity {
    pub fn new(value: f64, provenance: &str) -> Self {
        Quantity { value, provenance: provenance.to_string() }
    }
}

/// Physical constants of the model, in atomic units unless the name says otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub c6_excited: Quantity,
    pub c12_excited: Quantity,
    pub c3_omega1: Quantity,
    pub c3_omega0: Quantity,
    pub c6_ground: Quantity,
    pub c12_ground: Quantity,
    /// E(f=3/2) − E(f=1/2) of the ³P₁ atom, MHz. Negative inverts the ordering.
    pub hyperfine_splitting_mhz: Quantity,
    /// Γ_A/2π in kHz.
    pub gamma_a_khz: Quantity,
    pub lambda_nm: Quantity,
    /// Atomic mass in u.
    pub atomic_mass_u: Quantity,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            c6_excited: Quantity::new(2810.0, "paper"),
            c12_excited: Quantity::new(1.862e8, "paper"),
            c3_omega1: Quantity::new(0.09695, "paper"),
            c3_omega0: Quantity::new(-2.0 * 0.09695, "paper"),
            c6_ground: Quantity::new(1932.0, "literature:Kitagawa et al., Phys. Rev. A 77, 012719 (2008)"),
            c12_ground: Quantity::new(DEFAULT_C12_GROUND, "calibrated"),
            hyperfine_splitting_mhz: Quantity::new(
                1.5 * 3957.19,
                "literature:3/2·A(3P1) with A=3957.19 MHz, Pandey et al., Phys. Rev. A 80, 022518 (2009)",
            ),
            gamma_a_khz: Quantity::new(182.0, "paper"),
            lambda_nm: Quantity::new(555.80, "literature:NIST ASD, 1S0-3P1 intercombination line"),
            atomic_mass_u: Quantity::new(170.936_325_8, "literature:AME2020 atomic mass of 171Yb"),
        }
    }
}

/// C₁₂ of the ground model potential on the frozen calibration branch
/// (a_bg = −0.15 a₀ with C₆ = 1932 au). Regenerated by `scattering::calibrate_ground`.
pub const DEFAULT_C12_GROUND: f64 = 180_702_361.587_418_8;

impl ModelParams {
    /// Atomic mass in electron masses.
    pub fn atomic_mass(&self) -> f64 {
        units::dalton_to_au(self.atomic_mass_u.value)
    }

    /// Reduced mass of two identical atoms.
    pub fn reduced_mass(&self) -> f64 {
        self.atomic_mass() / 2.0
    }

    /// ħΓ_A in Hartree.
    pub fn gamma_a(&self) -> f64 {
        units::linewidth_khz_to_au(self.gamma_a_khz.value)
    }

    pub fn lambda_bohr(&self) -> f64 {
        units::m_to_bohr(self.lambda_nm.value * 1e-9)
    }

    /// Atomic transition dipole from Γ_A = 4ω³d²/(3c³).
    pub fn d_a(&self) -> f64 {
        let omega = 2.0 * std::f64::consts::PI * units::C_AU / self.lambda_bohr();
        (3.0 * units::C_AU.powi(3) * self.gamma_a() / (4.0 * omega.powi(3))).sqrt()
    }

    /// Hyperfine splitting of ³P₁ in Hartree, f=3/2 minus f=1/2.
    pub fn hyperfine_splitting(&self) -> f64 {
        units::mhz_to_au(self.hyperfine_splitting_mhz.value)
    }

    /// C₃^Ω for Ω ∈ {0, 1}.
    pub fn c3(&self, omega: i32) -> Result<f64, PotentialError> {
        match omega {
            0 => Ok(self.c3_omega0.value),
            1 => Ok(self.c3_omega1.value),
            o => Err(PotentialError::BadOmega(o)),
        }
    }

    pub fn validate(&self) -> Result<(), PotentialError> {
        let positive = [
            ("c6_excited", self.c6_excited.value),
            ("c12_excited", self.c12_excited.value),
            ("c3_omega1", self.c3_omega1.value),
            ("c6_ground", self.c6_ground.value),
            ("c12_ground", self.c12_ground.value),
            ("gamma_a_khz", self.gamma_a_khz.value),
            ("lambda_nm", self.lambda_nm.value),
            ("atomic_mass_u", self.atomic_mass_u.value),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(PotentialError::InvalidParameter { name, value, rule: "> 0" });
            }
        }
        let v = self.c3_omega0.value;
        if !(v.is_finite() && v < 0.0) {
            return Err(PotentialError::InvalidParameter { name: "c3_omega0", value: v, rule: "< 0" });
        }
        let v = self.hyperfine_splitting_mhz.value;
        if !v.is_finite() {
            return Err(PotentialError::InvalidParameter { name: "hyperfine_splitting_mhz", value: v, rule: "finite" });
        }
        Ok(())
    }
}

fn check_r(r: f64) -> Result<(), PotentialError> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(PotentialError::NonPositiveRadius(r))
    }
}

/// Lennard-Jones part shared by all case-(c) curves.
fn lennard_jones(c12: f64, c6: f64, r: f64) -> f64 {
    let r6 = r.powi(6);
    c12 / (r6 * r6) - c6 / r6
}

/// V_Ωσ(r) = C₁₂/r¹² − C₆/r⁶ − σC₃^Ω/r³.
pub fn excited_bo_potential(omega: i32, sigma: i32, r: f64, params: &ModelParams) -> Result<f64, PotentialError> {
    check_r(r)?;
    if sigma != 1 && sigma != -1 {
        return Err(PotentialError::BadSigma(sigma));
    }
    let c3 = params.c3(omega)?;
    Ok(lennard_jones(params.c12_excited.value, params.c6_excited.value, r) - sigma as f64 * c3 / r.powi(3))
}

/// Ground ¹S₀+¹S₀ model: C₁₂g/r¹² − C₆g/r⁶.
pub fn ground_potential(r: f64, params: &ModelParams) -> Result<f64, PotentialError> {
    check_r(r)?;
    Ok(lennard_jones(params.c12_ground.value, params.c6_ground.value, r))
}

/// ħ²R(R+1)/(2μr²).
pub fn rotational_term(r_quantum: HalfInt, r: f64, params: &ModelParams) -> Result<f64, PotentialError> {
    check_r(r)?;
    Ok(r_quantum.casimir() / (2.0 * params.reduced_mass() * r * r))
}

/// Asymptotic atomic energies: 0 for f₂=3/2, −Δ_hf for f₂=1/2, 0 in the ground manifold.
pub fn hyperfine_matrix(block: &ChannelBlock, params: &ModelParams) -> DMatrix<f64> {
    let n = block.len();
    let mut m = DMatrix::zeros(n, n);
    if block.manifold == Manifold::Excited {
        for (k, c) in block.channels.iter().enumerate() {
            if c.f2 == HalfInt::HALF {
                m[(k, k)] = -params.hyperfine_splitting();
            }
        }
    }
    m
}

/// Born-Oppenheimer curve for each case-(c) state of the block, in `block.case_c` order.
pub fn case_c_potentials(block: &ChannelBlock, r: f64, params: &ModelParams) -> Result<Vec<f64>, PotentialError> {
    match block.manifold {
        Manifold::Ground => {
            let v = ground_potential(r, params)?;
            Ok(vec![v; block.len()])
        }
        Manifold::Excited => block
            .case_c
            .iter()
            .map(|c| excited_bo_potential(c.omega.as_int(), c.sigma, r, params))
            .collect(),
    }
}

/// Full potential U·diag(V_Ωσ)·Uᵀ + H_HF + H_rot at radius r.
pub fn potential_matrix(block: &ChannelBlock, r: f64, params: &ModelParams) -> Result<DMatrix<f64>, PotentialError> {
    let n = block.len();
    let vc = case_c_potentials(block, r, params)?;
    let mut m = match block.manifold {
        Manifold::Ground => DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vc)),
        Manifold::Excited => {
            let u = &block.case_c_vectors;
            let mut scaled = u.clone();
            for (k, v) in vc.iter().enumerate() {
                scaled.column_mut(k).scale_mut(*v);
            }
            let m = scaled * u.transpose();
            (&m + m.transpose()) * 0.5
        }
    };
    for k in 0..n {
        m[(k, k)] += rotational_term(block.channels[k].r, r, params)?;
    }
    m += hyperfine_matrix(block, params);
    Ok(m)
}

/// Potential matrices on a list of radii, reusing the block transforms.
pub fn potential_matrices(block: &ChannelBlock, radii: &[f64], params: &ModelParams) -> Result<Vec<DMatrix<f64>>, PotentialError> {
    radii.iter().map(|&r| potential_matrix(block, r, params)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::{enumerate_channels, Parity};

    fn s_block() -> ChannelBlock {
        enumerate_channels(1, Parity::Odd, Manifold::Excited).unwrap()
    }

    #[test]
    fn lennard_jones_minimum_position() {
        let p = ModelParams::default();
        let r0 = (2.0 * p.c12_excited.value / p.c6_excited.value).powf(1.0 / 6.0);
        assert!((r0 - 7.14).abs() < 0.01, "{r0}");
        let h = 1e-4;
        let d = lennard_jones(p.c12_excited.value, p.c6_excited.value, r0 + h)
            - lennard_jones(p.c12_excited.value, p.c6_excited.value, r0 - h);
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn omega_one_value_at_100_bohr() {
        let p = ModelParams::default();
        // evaluated term by term in long hand
        let expected = 1.862e8 / 1e24 - 2810.0 / 1e12 - 0.09695 / 1e6;
        let v = excited_bo_potential(1, 1, 100.0, &p).unwrap();
        assert!((v - expected).abs() < 1e-20);
        assert!((v + 9.976e-8).abs() < 1e-11);
    }

    #[test]
    fn asymptotics_and_errors() {
        let p = ModelParams::default();
        let r = 1e4;
        let v = excited_bo_potential(0, 1, r, &p).unwrap();
        assert!((v * r.powi(3) - 2.0 * 0.09695).abs() < 1e-6);
        assert!(excited_bo_potential(1, 1, 1e4, &p).unwrap() < 0.0);
        assert_eq!(excited_bo_potential(1, 1, 0.0, &p), Err(PotentialError::NonPositiveRadius(0.0)));
        assert_eq!(excited_bo_potential(2, 1, 10.0, &p), Err(PotentialError::BadOmega(2)));
        assert_eq!(excited_bo_potential(1, 0, 10.0, &p), Err(PotentialError::BadSigma(0)));
        assert!(ground_potential(5.0, &p).unwrap() > 0.0);
        assert!(ground_potential(-1.0, &p).is_err());
    }

    #[test]
    fn rotational_term_values() {
        let p = ModelParams::default();
        assert_eq!(rotational_term(HalfInt::ZERO, 50.0, &p).unwrap(), 0.0);
        let v = rotational_term(HalfInt::ONE, 100.0, &p).unwrap();
        assert!((v - 6.42e-10).abs() < 0.01e-10, "{v}");
        let w = rotational_term(HalfInt::ONE, 101.0, &p).unwrap();
        assert!(w < v);
    }

    #[test]
    fn dipole_matches_c3() {
        let p = ModelParams::default();
        assert!((p.d_a().powi(2) - p.c3_omega1.value).abs() / p.c3_omega1.value < 0.01);
    }

    #[test]
    fn hyperfine_diagonal_multiplicities() {
        let p = ModelParams::default();
        let b = s_block();
        let h = hyperfine_matrix(&b, &p);
        let zeros = (0..5).filter(|&k| h[(k, k)] == 0.0).count();
        assert_eq!(zeros, 3);
        assert_eq!(5 - zeros, 2);
        let g = enumerate_channels(0, Parity::Even, Manifold::Ground).unwrap();
        assert_eq!(hyperfine_matrix(&g, &p).abs().max(), 0.0);
    }

    #[test]
    fn potential_matrix_symmetry_and_asymptotics() {
        let p = ModelParams::default();
        for (t, par) in [(1, Parity::Odd), (0, Parity::Even), (2, Parity::Even), (3, Parity::Even)] {
            let b = enumerate_channels(t, par, Manifold::Excited).unwrap();
            for r in [6.0, 8.0, 30.0, 200.0] {
                let m = potential_matrix(&b, r, &p).unwrap();
                assert!((&m - m.transpose()).abs().max() <= 1e-14 * m.abs().max());
            }
            let far = potential_matrix(&b, 1e4, &p).unwrap();
            let hf = hyperfine_matrix(&b, &p);
            for i in 0..b.len() {
                for j in 0..b.len() {
                    if i != j {
                        assert!(far[(i, j)].abs() < 1e-12);
                    }
                }
                assert!((far[(i, i)] - hf[(i, i)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn trace_is_basis_independent() {
        let p = ModelParams::default();
        let b = s_block();
        for r in [7.0, 40.0, 300.0] {
            let m = potential_matrix(&b, r, &p).unwrap();
            let bo: f64 = case_c_potentials(&b, r, &p).unwrap().iter().sum();
            let rot: f64 = b.channels.iter().map(|c| rotational_term(c.r, r, &p).unwrap()).sum();
            let hf = hyperfine_matrix(&b, &p).trace();
            let expected = bo + rot + hf;
            assert!((m.trace() - expected).abs() <= 1e-12 * expected.abs());
        }
    }

    #[test]
    fn continuity_in_r() {
        let p = ModelParams::default();
        let b = s_block();
        let mut prev = potential_matrix(&b, 20.0, &p).unwrap();
        let mut r = 20.0;
        while r < 60.0 {
            r += 1e-3;
            let m = potential_matrix(&b, r, &p).unwrap();
            assert!((&m - &prev).abs().max() < 1e-6);
            prev = m;
        }
    }
}
