//! Run configuration: a TOML file with one section per stage. Every key is
//! optional; missing keys fall back to the shipped defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boundstates::{GridSettings, SolveSettings};
use crate::exec::ExecMode;
use crate::ofr::Polarization;
use crate::potentials::{ModelParams, Quantity};
use crate::scattering::ScatteringSettings;

use super::CliError;

/// The defaults file shipped with the binary, with provenance comments.
pub const DEFAULTS_TOML: &str = include_str!("../../config/defaults.toml");

/// Overrides for [`ModelParams`]. A value equal to the built-in default keeps
/// the default's provenance; anything else is tagged "config".
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub c6_excited: Option<f64>,
    pub c12_excited: Option<f64>,
    pub c3_omega1: Option<f64>,
    /// Defaults to −2·c3_omega1.
    pub c3_omega0: Option<f64>,
    pub c6_ground: Option<f64>,
    pub c12_ground: Option<f64>,
    pub hyperfine_splitting_mhz: Option<f64>,
    pub gamma_a_khz: Option<f64>,
    pub lambda_nm: Option<f64>,
    pub atomic_mass_u: Option<f64>,
    /// Target of the ground calibration, a₀.
    pub a_bg_target: Option<f64>,
    /// Re-run the ground calibration instead of trusting c12_ground.
    pub recalibrate_ground: Option<bool>,
}

impl ModelConfig {
    pub fn a_bg_target(&self) -> f64 {
        self.a_bg_target.unwrap_or(-0.15)
    }

    pub fn resolve(&self) -> Result<ModelParams, CliError> {
        let mut p = ModelParams::default();
        let set = |q: &mut Quantity, v: Option<f64>| {
            if let Some(v) = v {
                if v != q.value {
                    *q = Quantity::new(v, "config");
                }
            }
        };
        set(&mut p.c6_excited, self.c6_excited);
        set(&mut p.c12_excited, self.c12_excited);
        set(&mut p.c3_omega1, self.c3_omega1);
        match self.c3_omega0 {
            Some(v) => set(&mut p.c3_omega0, Some(v)),
            None if p.c3_omega1.provenance == "config" => p.c3_omega0 = Quantity::new(-2.0 * p.c3_omega1.value, "config:-2*c3_omega1"),
            None => {}
        }
        set(&mut p.c6_ground, self.c6_ground);
        set(&mut p.c12_ground, self.c12_ground);
        set(&mut p.hyperfine_splitting_mhz, self.hyperfine_splitting_mhz);
        set(&mut p.gamma_a_khz, self.gamma_a_khz);
        set(&mut p.lambda_nm, self.lambda_nm);
        set(&mut p.atomic_mass_u, self.atomic_mass_u);
        p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticsConfig {
    /// E_col/k_B in μK.
    pub collision_temperature_uk: f64,
    /// "z", "sigma+", "sigma-" or three real components "x,y,z".
    pub polarization: String,
    /// Intensity for the l_opt column of bound-state tables, W/cm².
    pub intensity_w_cm2: f64,
    /// Atomic density for gate estimates, cm⁻³.
    pub density_cm3: f64,
    /// Singlet–triplet phase of the gate, rad.
    pub gate_phase: f64,
    /// Detuning of the design rule in units of Γ_M.
    pub detuning_in_gamma_m: f64,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        OpticsConfig {
            collision_temperature_uk: 2.0,
            polarization: "z".into(),
            intensity_w_cm2: 1.0,
            density_cm3: 2.4e14,
            gate_phase: std::f64::consts::FRAC_PI_2,
            detuning_in_gamma_m: -30.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecConfig {
    pub mode: ExecMode,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig { mode: ExecMode::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub grid: GridSettings,
    pub solve: SolveSettings,
    pub scattering: ScatteringSettings,
    pub optics: OpticsConfig,
    pub output: OutputConfig,
    pub exec: ExecConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Defaults file, then the user's file on top (if any).
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Self::parse(DEFAULTS_TOML),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                let mut base: toml::Table = toml::from_str(DEFAULTS_TOML).map_err(|e| CliError::Config(e.to_string()))?;
                // Every section defaults, so this reports bad keys against the user's own lines.
                toml::from_str::<RunConfig>(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                let user: toml::Table = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                merge(&mut base, user);
                Self::parse(&toml::to_string(&base).map_err(|e| CliError::Config(e.to_string()))?)
            }
        }
    }

    fn check(&self) -> Result<(), CliError> {
        self.model.resolve()?;
        self.polarization()?;
        let o = &self.optics;
        for (name, v) in [("collision_temperature_uk", o.collision_temperature_uk), ("density_cm3", o.density_cm3), ("gate_phase", o.gate_phase)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("optics.{name} must be positive, got {v}")));
            }
        }
        if !(o.intensity_w_cm2 >= 0.0 && o.intensity_w_cm2.is_finite()) {
            return Err(CliError::Config(format!("optics.intensity_w_cm2 must be non-negative, got {}", o.intensity_w_cm2)));
        }
        let (lo, hi) = self.solve.window_mhz;
        if !(lo < hi && hi <= 0.0) {
            return Err(CliError::Config(format!("solve.window_mhz must satisfy lo < hi <= 0, got [{lo}, {hi}]")));
        }
        Ok(())
    }

    pub fn polarization(&self) -> Result<Polarization, CliError> {
        Polarization::parse(&self.optics.polarization).map_err(CliError::Config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Recursive table merge, `over` wins.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_file_matches_built_in_defaults() {
        let cfg = RunConfig::parse(DEFAULTS_TOML).unwrap();
        assert_eq!(cfg.grid, GridSettings::default());
        assert_eq!(cfg.solve, SolveSettings::default());
        assert_eq!(cfg.scattering, ScatteringSettings::default());
        assert_eq!(cfg.optics, OpticsConfig::default());
        assert_eq!(cfg.model.resolve().unwrap(), ModelParams::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("[grid]\nr_maxx = 3.0\n").is_err());
        assert!(RunConfig::parse("[optics]\npolarization = \"1,1,1\"\n").is_err());
    }

    #[test]
    fn overrides_carry_config_provenance() {
        let cfg = RunConfig::parse("[model]\nc3_omega1 = 0.1\n").unwrap();
        let p = cfg.model.resolve().unwrap();
        assert_eq!(p.c3_omega1.provenance, "config");
        assert!((p.c3_omega0.value + 0.2).abs() < 1e-15);
        assert_eq!(p.c6_excited.provenance, "paper");
    }
}
