//! Ground-state ¹S₀+¹S₀ scattering: calibration of the model potential to the
//! background scattering length and energy-normalized s-wave solutions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerov::{integrate_outward, NumerovSettings, RadialProblem, RadialSolution};
use crate::potentials::{ground_potential, ModelParams, Quantity};
use crate::units;

#[derive(Debug, Error)]
pub enum ScatteringError {
    #[error("collision energy must be positive, got {0} Hartree")]
    NonPositiveEnergy(f64),
    #[error("matching needs r up to {required:.0} a0 but the integration limit is {limit:.0} a0; raise r_limit")]
    RangeTooShort { required: f64, limit: f64 },
    #[error("no calibration root with {nodes} nodes; scanned branches (C12, nodes): {landscape:?}")]
    NoRoot { nodes: usize, landscape: Vec<(f64, usize)> },
}

/// Where and how the ground-state solutions are matched to free waves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatteringSettings {
    /// Inner matching radius, a₀. The second radius sits a quarter wavelength further out.
    pub r_match: f64,
    /// Hard limit on the integration range, a₀.
    pub r_limit: f64,
    pub phase_step: f64,
    pub max_relative_step: f64,
    /// Number of nodes of the zero-energy solution on the calibration branch.
    pub branch_nodes: usize,
}

impl Default for ScatteringSettings {
    fn default() -> Self {
        ScatteringSettings { r_match: 20000.0, r_limit: 2.0e6, phase_step: 0.02, max_relative_step: 0.02, branch_nodes: 72 }
    }
}

impl ScatteringSettings {
    fn numerov(&self) -> NumerovSettings {
        NumerovSettings { phase_step: self.phase_step, max_relative_step: self.max_relative_step, ..Default::default() }
    }
}

/// Energy-normalized s-wave (or p-wave) ground-state solution.
#[derive(Clone, Debug)]
pub struct ScatteringState {
    pub e_col: f64,
    pub k: f64,
    pub l: u32,
    pub phase_shift: f64,
    /// −tan δ₀ / k, only meaningful for l = 0.
    pub a_extracted: f64,
    /// Asymptotically √(2μ/(πk)) sin(kr − lπ/2 + δ).
    pub wavefunction: RadialSolution,
}

impl ScatteringState {
    pub fn value_at(&self, r: f64) -> f64 {
        self.wavefunction.interpolate(r)
    }
}

fn riccati(l: u32, x: f64) -> (f64, f64) {
    // ĵ_l(x) = x j_l(x), n̂_l(x) = x n_l(x)
    match l {
        0 => (x.sin(), -x.cos()),
        1 => (x.sin() / x - x.cos(), -x.cos() / x - x.sin()),
        _ => unimplemented!("only s and p waves are needed"),
    }
}

fn ground_problem<'a>(v: &'a dyn Fn(f64) -> f64, params: &ModelParams, l: u32) -> RadialProblem<'a> {
    RadialProblem { potential: v, mu: params.reduced_mass(), l }
}

/// Zero-energy scattering length and node count for a given C₁₂g.
pub fn zero_energy_scattering_length(params: &ModelParams, settings: &ScatteringSettings) -> (f64, usize) {
    let v = |r: f64| ground_potential(r, params).unwrap();
    let prob = ground_problem(&v, params, 0);
    let ns = settings.numerov();
    let r0 = prob.start_radius(0.0, &ns);
    let sol = integrate_outward(&prob, 0.0, r0, settings.r_match, &ns);
    let n = sol.r.len() - 1;
    let (r1, r2, u1, u2) = (sol.r[n - 1], sol.r[n], sol.u[n - 1], sol.u[n]);
    // u ∝ r − a for V → 0; a node beyond the last point still counts as a bound level
    let a = (r1 * u2 - r2 * u1) / (u2 - u1);
    let nodes = if a > r2 { sol.nodes + 1 } else { sol.nodes };
    (a, nodes)
}

/// Phase shift and unnormalized solution at energy E for partial wave l.
fn solve_at(params: &ModelParams, e: f64, l: u32, settings: &ScatteringSettings) -> Result<(f64, f64, RadialSolution), ScatteringError> {
    if !(e > 0.0) {
        return Err(ScatteringError::NonPositiveEnergy(e));
    }
    let mu = params.reduced_mass();
    let k = (2.0 * mu * e).sqrt();
    let quarter = 0.5 * std::f64::consts::PI / k;
    let r1 = settings.r_match;
    let r2 = r1 + quarter;
    if r2 > settings.r_limit {
        return Err(ScatteringError::RangeTooShort { required: r2, limit: settings.r_limit });
    }
    let v = |r: f64| ground_potential(r, params).unwrap();
    let prob = ground_problem(&v, params, l);
    let ns = settings.numerov();
    let r0 = prob.start_radius(e, &ns);
    let sol = integrate_outward(&prob, e, r0, r2 * 1.0001, &ns);
    let u1 = sol.interpolate(r1);
    let u2 = sol.interpolate(r2);
    let (j1, n1) = riccati(l, k * r1);
    let (j2, n2) = riccati(l, k * r2);
    let delta = (u1 * j2 - u2 * j1).atan2(u1 * n2 - u2 * n1);
    // fold into (−π/2, π/2]
    let delta = if delta > std::f64::consts::FRAC_PI_2 {
        delta - std::f64::consts::PI
    } else if delta <= -std::f64::consts::FRAC_PI_2 {
        delta + std::f64::consts::PI
    } else {
        delta
    };
    let (c, s) = (delta.cos(), delta.sin());
    let d1 = j1 * c - n1 * s;
    let d2 = j2 * c - n2 * s;
    let amp = if d1.abs() > d2.abs() { u1 / d1 } else { u2 / d2 };
    Ok((delta, amp, sol))
}

/// Energy-normalized scattering solution at collision energy E (Hartree).
pub fn scattering_wavefunction(params: &ModelParams, e_col: f64, l: u32, settings: &ScatteringSettings) -> Result<ScatteringState, ScatteringError> {
    let (delta, amp, mut sol) = solve_at(params, e_col, l, settings)?;
    let mu = params.reduced_mass();
    let k = (2.0 * mu * e_col).sqrt();
    sol.scale((2.0 * mu / (std::f64::consts::PI * k)).sqrt() / amp);
    Ok(ScatteringState { e_col, k, l, phase_shift: delta, a_extracted: -delta.tan() / k, wavefunction: sol })
}

/// Phase shift only.
pub fn phase_shift(params: &ModelParams, e_col: f64, l: u32, settings: &ScatteringSettings) -> Result<f64, ScatteringError> {
    Ok(solve_at(params, e_col, l, settings)?.0)
}

/// Zero-energy limit of −tan δ₀/k by Richardson extrapolation in k² over a
/// halving ladder of wavenumbers.
pub fn background_scattering_length(params: &ModelParams, settings: &ScatteringSettings) -> Result<f64, ScatteringError> {
    let mu = params.reduced_mass();
    let k0 = 2.0e-4;
    let ks: Vec<f64> = (0..4).map(|i| k0 / 2f64.powi(i)).collect();
    let mut table: Vec<f64> = Vec::new();
    for &k in &ks {
        let e = k * k / (2.0 * mu);
        let d = phase_shift(params, e, 0, settings)?;
        table.push(-d.tan() / k);
    }
    // successive k² eliminations, ratio 4 per step
    let mut level = table;
    let mut factor = 4.0;
    while level.len() > 1 {
        level = level.windows(2).map(|w| (factor * w[1] - w[0]) / (factor - 1.0)).collect();
        factor *= 4.0;
    }
    Ok(level[0])
}

/// Outcome of the ground calibration.
#[derive(Clone, Debug, Serialize)]
pub struct Calibration {
    pub c12_ground: f64,
    pub a_bg: f64,
    pub nodes: usize,
}

/// Root-find C₁₂g on the branch whose zero-energy solution has `settings.branch_nodes`
/// nodes so that the scattering length equals `a_target`.
pub fn calibrate_ground(params: &ModelParams, a_target: f64, settings: &ScatteringSettings) -> Result<Calibration, ScatteringError> {
    let want = settings.branch_nodes;
    let eval = |c12: f64| {
        let mut p = params.clone();
        p.c12_ground = Quantity::new(c12, "calibrated");
        zero_energy_scattering_length(&p, settings)
    };
    // node count decreases with C12; bracket the branch in log C12
    let mut landscape = Vec::new();
    let (mut lo, mut hi) = (1e5_f64.ln(), 1e18_f64.ln());
    let find_edge = |n_at_least: usize, mut lo: f64, mut hi: f64, landscape: &mut Vec<(f64, usize)>| {
        // largest ln C12 with nodes ≥ n_at_least
        for _ in 0..80 {
            let m = 0.5 * (lo + hi);
            let (_, n) = eval(m.exp());
            if landscape.len() < 24 {
                landscape.push((m.exp(), n));
            }
            if n >= n_at_least {
                lo = m;
            } else {
                hi = m;
            }
        }
        0.5 * (lo + hi)
    };
    let (_, n_lo) = eval(lo.exp());
    let (_, n_hi) = eval(hi.exp());
    landscape.push((lo.exp(), n_lo));
    landscape.push((hi.exp(), n_hi));
    if !(n_lo > want && n_hi <= want) && !(n_lo >= want && n_hi < want) {
        return Err(ScatteringError::NoRoot { nodes: want, landscape });
    }
    let inner = find_edge(want + 1, lo, hi, &mut landscape);
    let outer = find_edge(want, lo, hi, &mut landscape);
    lo = inner;
    hi = outer;
    // shrink slightly off the poles
    let span = hi - lo;
    let (mut a, mut b) = (lo + 1e-9 * span, hi - 1e-9 * span);
    let (fa, na) = eval(a.exp());
    let (fb, nb) = eval(b.exp());
    if na != want || nb != want || (fa - a_target) * (fb - a_target) > 0.0 {
        return Err(ScatteringError::NoRoot { nodes: want, landscape });
    }
    // a increases with C12 inside a branch
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let (am, _) = eval(m.exp());
        if am < a_target {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    let c12 = (0.5 * (a + b)).exp();
    let (a_bg, nodes) = eval(c12);
    Ok(Calibration { c12_ground: c12, a_bg, nodes })
}

/// Collision wavenumber for E/k_B in kelvin.
pub fn wavenumber_for_temperature(params: &ModelParams, kelvin: f64) -> f64 {
    (2.0 * params.reduced_mass() * units::kelvin_to_au(kelvin)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn riccati_functions_have_unit_wronskian() {
        for l in [0, 1] {
            for x in [0.3, 1.0, 7.0] {
                let h = 1e-5;
                let (j, n) = riccati(l, x);
                let (jp, np) = riccati(l, x + h);
                let (jm, nm) = riccati(l, x - h);
                let w = j * (np - nm) / (2.0 * h) - n * (jp - jm) / (2.0 * h);
                assert!((w - 1.0).abs() < 1e-8, "l={l} x={x}: {w}");
            }
        }
    }

    #[test]
    fn wavenumber_at_two_microkelvin() {
        let k = wavenumber_for_temperature(&ModelParams::default(), 2e-6);
        assert!((k - 1.406e-3).abs() < 0.005e-3, "{k}");
    }
}
