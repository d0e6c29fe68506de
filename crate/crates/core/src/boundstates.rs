//! Multichannel bound states on a mapped sinc-DVR grid.
//!
//! The radial coordinate is mapped to a uniform variable x with unit spacing,
//! dx/dr = p_env(r)/(βπ), where p_env is an envelope of the local momentum.
//! With φ(x) = √J ψ(r) and J = dr/dx, the kinetic operator
//! −J^{-1/2} ∂ₓ J⁻¹ ∂ₓ J^{-1/2} / 2μ is rewritten as J⁻¹(−∂ₓ²)J⁻¹ / 2μ plus the
//! local term (3J′² − 2JJ″)/(8μJ⁴), so the only derivative matrix is the
//! Colbert–Miller one, whose truncation error decays exponentially.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angular::{ChannelBlock, HalfInt, Manifold, Parity};
use crate::exec::ExecMode;
use crate::potentials::{potential_matrix, ModelParams, PotentialError};
use crate::units;

#[derive(Debug, Error)]
pub enum BoundStateError {
    #[error("infeasible grid: {0}")]
    InfeasibleGrid(String),
    #[error("Hamiltonian of dimension {dim} needs about {needed_mb:.0} MB, above the {cap_mb:.0} MB cap; raise spacing_factor, lower r_max or cut the f=1/2 channels earlier")]
    MemoryCap { dim: usize, needed_mb: f64, cap_mb: f64 },
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Grid and solver settings for one block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    /// Innermost point, a₀.
    pub r_min: f64,
    /// Outermost point, a₀.
    pub r_max: f64,
    /// β in Δr = βπ/p_env. β = 0.5 samples the local wavelength with four points.
    pub spacing_factor: f64,
    /// Largest allowed spacing, a₀.
    pub max_spacing: f64,
    /// Reference energy of the momentum envelope, MHz (relative to the f=3/2 limit).
    pub envelope_energy_mhz: f64,
    /// f₂ = 1/2 channels end at this radius (a₀); `None` keeps them on the full grid.
    pub f_half_cutoff: Option<f64>,
    /// Fixed number of points; `None` lets the mapping decide.
    pub n_points: Option<usize>,
    pub memory_cap_mb: f64,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings {
            r_min: 6.0,
            r_max: 10000.0,
            spacing_factor: 0.5,
            max_spacing: 30.0,
            envelope_energy_mhz: 0.0,
            f_half_cutoff: Some(500.0),
            n_points: None,
            memory_cap_mb: 3000.0,
        }
    }
}

/// Uniform-in-x grid: points r_i and Jacobians J_i = dr/dx (also the quadrature weights).
#[derive(Clone, Debug, Serialize)]
pub struct RadialGrid {
    pub r: Vec<f64>,
    pub jacobian: Vec<f64>,
    /// (3J′² − 2JJ″)/(4J⁴) with primes in x; zero for a uniform grid.
    pub curvature: Vec<f64>,
}

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn uniform(r_min: f64, r_max: f64, n: usize) -> Self {
        let h = (r_max - r_min) / (n - 1) as f64;
        RadialGrid { r: (0..n).map(|i| r_min + h * i as f64).collect(), jacobian: vec![h; n], curvature: vec![0.0; n] }
    }

    /// Grid with dx/dr = p(r)/(βπ) between r_min and r_max.
    /// If `n_points` is given the mapping is rescaled to exactly that many points.
    pub fn mapped(p_env: &dyn Fn(f64) -> f64, r_min: f64, r_max: f64, beta: f64, n_points: Option<usize>) -> Self {
        // x(r) on a logarithmic mesh, 4-point Gauss-Legendre per interval
        let m = 20_000;
        let (la, lb) = (r_min.ln(), r_max.ln());
        let segment = |a: f64, b: f64| -> f64 {
            const X: [f64; 2] = [0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
            const W: [f64; 2] = [0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            h * (0..2).map(|k| W[k] * (p_env(c - h * X[k]) + p_env(c + h * X[k]))).sum::<f64>()
        };
        let rs: Vec<f64> = (0..=m).map(|k| (la + (lb - la) * k as f64 / m as f64).exp()).collect();
        let mut xs = Vec::with_capacity(m + 1);
        xs.push(0.0);
        for k in 1..=m {
            let x = xs[k - 1] + segment(rs[k - 1], rs[k]);
            xs.push(x);
        }
        let x_total = xs[m];
        let total = x_total / (beta * std::f64::consts::PI);
        let n = n_points.unwrap_or_else(|| total.ceil() as usize + 1).max(3);
        // x scaled so the points sit at 0, 1, …, n−1
        let scale = (n - 1) as f64 / x_total;
        let mut r = Vec::with_capacity(n);
        let mut jacobian = Vec::with_capacity(n);
        let mut k = 0;
        for i in 0..n {
            let target = i as f64 / scale;
            while k + 1 < m && xs[k + 1] < target {
                k += 1;
            }
            let ri = if i == 0 {
                r_min
            } else if i == n - 1 {
                r_max
            } else {
                let t = ((target - xs[k]) / (xs[k + 1] - xs[k])).clamp(0.0, 1.0);
                let mut ri = rs[k] + t * (rs[k + 1] - rs[k]);
                // Newton polish against the exact integral from the mesh node
                for _ in 0..4 {
                    let x = xs[k] + segment(rs[k], ri);
                    ri -= (x - target) / p_env(ri);
                }
                ri
            };
            r.push(ri);
            jacobian.push(1.0 / (scale * p_env(ri)));
        }
        // J′ = J J_r and J″ = J (J_r² + J J_rr), derivatives in r by fourth-order differences
        let jac = |r: f64| 1.0 / (scale * p_env(r));
        let curvature = r
            .iter()
            .map(|&ri| {
                let h = 2e-3 * ri;
                let f = |k: f64| jac(ri + k * h);
                let (j, d1, d2) = (f(0.0), f(1.0) - f(-1.0), f(2.0) - f(-2.0));
                let jr = (8.0 * d1 - d2) / (12.0 * h);
                let jrr = (16.0 * (f(1.0) + f(-1.0)) - (f(2.0) + f(-2.0)) - 30.0 * j) / (12.0 * h * h);
                let j1 = j * jr;
                let j2 = j * (jr * jr + j * jrr);
                (3.0 * j1 * j1 - 2.0 * j * j2) / (4.0 * j.powi(4))
            })
            .collect();
        RadialGrid { r, jacobian, curvature }
    }

    /// Effective β of the grid for a given momentum envelope (largest over points).
    pub fn effective_spacing_factor(&self, p_env: &dyn Fn(f64) -> f64) -> f64 {
        self.r
            .iter()
            .zip(&self.jacobian)
            .map(|(&r, &j)| j * p_env(r) / std::f64::consts::PI)
            .fold(0.0, f64::max)
    }
}

/// Dense kinetic matrix −(1/2μ) d²/dr² on the grid, in the φ = √J ψ representation.
pub fn kinetic_matrix(grid: &RadialGrid, mu: f64) -> Mat<f64> {
    let n = grid.len();
    let pi2 = std::f64::consts::PI.powi(2);
    let j = &grid.jacobian;
    Mat::<f64>::from_fn(n, n, |a, b| {
        let cm = if a == b {
            pi2 / 3.0
        } else {
            let d = a as f64 - b as f64;
            let s = if (a + b) % 2 == 0 { 2.0 } else { -2.0 };
            s / (d * d)
        };
        let local = if a == b { grid.curvature[a] } else { 0.0 };
        (cm / (j[a] * j[b]) + local) / (2.0 * mu)
    })
}

/// Number of grid points carried by each channel and their offsets in the Hamiltonian.
#[derive(Clone, Debug, Serialize)]
pub struct ChannelLayout {
    pub lengths: Vec<usize>,
    pub offsets: Vec<usize>,
}

impl ChannelLayout {
    pub fn dim(&self) -> usize {
        self.lengths.iter().sum()
    }
}

fn layout_for(block: &ChannelBlock, grid: &RadialGrid, settings: &GridSettings) -> ChannelLayout {
    let mut lengths = Vec::new();
    for c in &block.channels {
        let n = match (settings.f_half_cutoff, block.manifold, c.f2 == HalfInt::HALF) {
            (Some(cut), Manifold::Excited, true) => grid.r.iter().take_while(|&&r| r <= cut).count(),
            _ => grid.len(),
        };
        lengths.push(n);
    }
    let mut offsets = Vec::new();
    let mut acc = 0;
    for l in &lengths {
        offsets.push(acc);
        acc += l;
    }
    ChannelLayout { lengths, offsets }
}

/// Smooth upper envelope of the local momentum for a block. It uses only the
/// attractive long-range coefficients, so it stays analytic through turning
/// points and keeps growing under the repulsive wall; the f₂=1/2 kinetic energy
/// Δ_hf is faded out with a logistic step around the cutoff.
pub fn momentum_envelope(block: &ChannelBlock, params: &ModelParams, settings: &GridSettings) -> impl Fn(f64) -> f64 {
    let mu = params.reduced_mass();
    let p_floor = settings.spacing_factor * std::f64::consts::PI / settings.max_spacing;
    let offset = p_floor * p_floor / (2.0 * mu) + units::mhz_to_au(settings.envelope_energy_mhz.max(0.0));
    let (c6, c3) = match block.manifold {
        Manifold::Ground => (params.c6_ground.value, 0.0),
        Manifold::Excited => (params.c6_excited.value, params.c3_omega0.value.abs().max(params.c3_omega1.value.abs())),
    };
    let has_half = block.manifold == Manifold::Excited && block.channels.iter().any(|c| c.f2 == HalfInt::HALF);
    let dhf = if has_half { params.hyperfine_splitting() } else { 0.0 };
    let cutoff = settings.f_half_cutoff;
    move |r: f64| {
        let s = match cutoff {
            Some(cut) => 1.0 / (1.0 + ((r - cut) / (0.1 * cut)).exp()),
            None => 1.0,
        };
        (2.0 * mu * (offset + c6 / r.powi(6) + c3 / r.powi(3) + s * dhf)).sqrt()
    }
}

/// Grid for a block that resolves states down to `target_emin_mhz` of binding.
pub fn build_grid(block: &ChannelBlock, target_emin_mhz: f64, params: &ModelParams, settings: &GridSettings) -> Result<RadialGrid, BoundStateError> {
    if !(settings.r_min > 0.0 && settings.r_min < settings.r_max) {
        return Err(BoundStateError::InfeasibleGrid(format!("r_min={} must be positive and below r_max={}", settings.r_min, settings.r_max)));
    }
    if !(settings.spacing_factor > 0.0 && settings.spacing_factor <= 0.5) {
        return Err(BoundStateError::InfeasibleGrid(format!(
            "spacing_factor={} must lie in (0, 0.5] to give at least 4 points per local wavelength",
            settings.spacing_factor
        )));
    }
    if target_emin_mhz > 0.0 && block.manifold == Manifold::Excited {
        let e = units::mhz_to_au(target_emin_mhz);
        let r_turn = (params.c3_omega1.value / e).cbrt();
        if settings.r_max < 1.5 * r_turn {
            return Err(BoundStateError::InfeasibleGrid(format!(
                "r_max={} a0 is inside 1.5x the outer turning point ({:.0} a0) of a state bound by {} MHz",
                settings.r_max, r_turn, target_emin_mhz
            )));
        }
    }
    let env = momentum_envelope(block, params, settings);
    let grid = RadialGrid::mapped(&env, settings.r_min, settings.r_max, settings.spacing_factor, settings.n_points);
    if settings.n_points.is_some() {
        let beta = grid.effective_spacing_factor(&env);
        if beta > 0.5 + 1e-9 {
            return Err(BoundStateError::InfeasibleGrid(format!(
                "n_points={} gives spacing factor {:.3} > 0.5; need at least {} points",
                grid.len(),
                beta,
                (grid.len() as f64 * beta / 0.5).ceil()
            )));
        }
    }
    Ok(grid)
}

fn memory_estimate_mb(dim: usize) -> f64 {
    // Hamiltonian, eigenvectors and the solver's workspace
    3.0 * (dim * dim * 8) as f64 / 1.0e6
}

/// Full multichannel Hamiltonian in channel-major order.
pub fn assemble_hamiltonian(block: &ChannelBlock, grid: &RadialGrid, params: &ModelParams, settings: &GridSettings) -> Result<(Mat<f64>, ChannelLayout), BoundStateError> {
    let layout = layout_for(block, grid, settings);
    let dim = layout.dim();
    let needed = memory_estimate_mb(dim);
    if needed > settings.memory_cap_mb {
        return Err(BoundStateError::MemoryCap { dim, needed_mb: needed, cap_mb: settings.memory_cap_mb });
    }
    let t = kinetic_matrix(grid, params.reduced_mass());
    let mut h = Mat::<f64>::zeros(dim, dim);
    let nc = block.len();
    for c in 0..nc {
        let (o, n) = (layout.offsets[c], layout.lengths[c]);
        for j in 0..n {
            for i in 0..n {
                h[(o + i, o + j)] = t[(i, j)];
            }
        }
    }
    for (i, &r) in grid.r.iter().enumerate() {
        let v = potential_matrix(block, r, params)?;
        for a in 0..nc {
            if i >= layout.lengths[a] {
                continue;
            }
            for b in 0..nc {
                if i >= layout.lengths[b] {
                    continue;
                }
                h[(layout.offsets[a] + i, layout.offsets[b] + i)] += v[(a, b)];
            }
        }
    }
    Ok((h, layout))
}

/// One physical level of a block.
#[derive(Clone, Debug, Serialize)]
pub struct BoundState {
    pub t: i32,
    pub parity: Parity,
    /// Eigenvalue in Hartree relative to the f=3/2 limit.
    pub energy: f64,
    /// Positive binding energy in MHz.
    pub binding_mhz: f64,
    /// DVR coefficients per channel; u_c(r_i) = coefficients[c][i]/√J_i.
    #[serde(skip)]
    pub coefficients: Vec<Vec<f64>>,
    /// Coefficients of the other eigenvectors merged into this level.
    #[serde(skip)]
    pub partners: Vec<Vec<Vec<f64>>>,
    pub channel_weights: Vec<f64>,
    pub gamma_m_khz: f64,
    pub is_plr: bool,
    /// Population of the PLR adiabat beyond its inner avoided crossing.
    pub plr_population: f64,
    pub outer_turning_point: f64,
    /// f₂ = 1/2 probability beyond the continuum-probe radius.
    pub continuum_weight: f64,
    pub converged: bool,
    /// Number of eigenvectors merged into this level (within the degeneracy tolerance).
    pub degeneracy: usize,
}

impl BoundState {
    /// u_c(r_i) for every channel.
    pub fn radial_functions(&self, grid: &RadialGrid) -> Vec<Vec<f64>> {
        self.coefficients
            .iter()
            .map(|c| c.iter().zip(&grid.jacobian).map(|(x, j)| x / j.sqrt()).collect())
            .collect()
    }

    /// Coefficient sets of every eigenvector in the level.
    pub fn members(&self) -> impl Iterator<Item = &Vec<Vec<f64>>> {
        std::iter::once(&self.coefficients).chain(self.partners.iter())
    }

    /// ∫u_c(r) g(r) dr for each channel.
    pub fn overlaps(&self, grid: &RadialGrid, g: &dyn Fn(f64) -> f64) -> Vec<f64> {
        channel_overlaps(&self.coefficients, grid, g)
    }
}

/// ∫u_c(r) g(r) dr for one coefficient set.
pub fn channel_overlaps(coefficients: &[Vec<f64>], grid: &RadialGrid, g: &dyn Fn(f64) -> f64) -> Vec<f64> {
    let gs: Vec<f64> = grid.r.iter().zip(&grid.jacobian).map(|(&r, j)| j.sqrt() * g(r)).collect();
    coefficients.iter().map(|c| c.iter().zip(&gs).map(|(x, w)| x * w).sum()).collect()
}

/// Outer well of an adiabatic curve that ends at the f=3/2 limit.
#[derive(Clone, Debug, Serialize)]
pub struct PlrWell {
    /// Depth below the f=3/2 limit, MHz.
    pub depth_mhz: f64,
    pub r_min: f64,
    /// Top of the inner barrier created by the avoided crossing.
    pub r_barrier: f64,
    /// Barrier height above the f=3/2 limit, MHz.
    pub barrier_mhz: f64,
    /// Index of the curve in ascending order of the full potential matrix.
    pub adiabat: usize,
}

fn sorted_eigen(m: nalgebra::DMatrix<f64>) -> (Vec<f64>, nalgebra::DMatrix<f64>) {
    let e = nalgebra::SymmetricEigen::new(m);
    let mut idx: Vec<usize> = (0..e.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = idx.iter().map(|&k| e.eigenvalues[k]).collect();
    let vecs = nalgebra::DMatrix::from_fn(e.eigenvectors.nrows(), idx.len(), |i, j| e.eigenvectors[(i, idx[j])]);
    (vals, vecs)
}

/// Outer wells of the adiabatic curves asymptotic to the f=3/2 limit, found on a
/// logarithmic mesh over [r_lo, r_hi].
pub fn plr_wells(block: &ChannelBlock, params: &ModelParams, r_lo: f64, r_hi: f64) -> Result<Vec<PlrWell>, BoundStateError> {
    let n = 6000;
    let rs: Vec<f64> = (0..n).map(|k| (r_lo.ln() + (r_hi / r_lo).ln() * k as f64 / (n - 1) as f64).exp()).collect();
    let mut curves: Vec<Vec<f64>> = vec![Vec::with_capacity(n); block.len()];
    for &r in &rs {
        let (ev, _) = sorted_eigen(potential_matrix(block, r, params)?);
        for (k, e) in ev.into_iter().enumerate() {
            curves[k].push(e);
        }
    }
    let threshold = -units::mhz_to_au(1.0);
    let mut out = Vec::new();
    for (k, c) in curves.iter().enumerate() {
        if c[n - 1] < threshold {
            continue;
        }
        for i in 1..n - 1 {
            if c[i] < c[i - 1] && c[i] <= c[i + 1] && c[i] < 0.0 {
                // walk inward to the barrier top
                let mut j = i;
                while j > 0 && c[j - 1] >= c[j] {
                    j -= 1;
                }
                // a purely long-range well is walled off from the chemical region
                if j == 0 || c[j] <= 0.0 {
                    continue;
                }
                // a minimum pinched by a narrow avoided crossing is crossed diabatically
                let below = if k > 0 { c[i] - curves[k - 1][i] } else { f64::INFINITY };
                let above = if k + 1 < curves.len() { curves[k + 1][i] - c[i] } else { f64::INFINITY };
                if below.min(above) < 0.1 * c[i].abs() {
                    continue;
                }
                out.push(PlrWell { depth_mhz: -units::au_to_mhz(c[i]), r_min: rs[i], r_barrier: rs[j], barrier_mhz: units::au_to_mhz(c[j]), adiabat: k });
            }
        }
    }
    Ok(out)
}

/// Solver settings beyond the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSettings {
    /// Energy window in MHz relative to the f=3/2 limit, e.g. [−1100, 0].
    pub window_mhz: (f64, f64),
    /// Radius beyond which f₂=1/2 probability marks a discretized-continuum state.
    pub continuum_probe_radius: f64,
    /// Maximum f₂=1/2 probability beyond the probe radius for a bound level.
    pub continuum_threshold: f64,
    /// Eigenvalues closer than this (MHz) are examined together when separating
    /// bound levels from the discretized f₂=1/2 continuum they mix with.
    pub mixing_window_mhz: f64,
    /// Population of the PLR adiabat needed for the PLR label.
    pub plr_fraction: f64,
    /// Endpoint amplitude tolerance relative to the peak of |u|.
    pub endpoint_tolerance: f64,
    /// Levels closer than this (kHz) are reported as one degenerate level.
    pub degeneracy_khz: f64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            window_mhz: (-1100.0, 0.0),
            continuum_probe_radius: 150.0,
            continuum_threshold: 0.05,
            mixing_window_mhz: 10.0,
            plr_fraction: 0.9,
            endpoint_tolerance: 1e-6,
            degeneracy_khz: 1.0,
        }
    }
}

/// All levels of a block in the window, plus what is needed to post-process them.
#[derive(Clone, Debug, Serialize)]
pub struct BlockSpectrum {
    pub t: i32,
    pub parity: Parity,
    pub grid: RadialGrid,
    pub layout: ChannelLayout,
    pub wells: Vec<PlrWell>,
    /// Physical levels sorted by binding energy.
    pub states: Vec<BoundState>,
    /// Levels rejected as discretized f₂=1/2 continuum.
    pub continuum: Vec<BoundState>,
}

impl BlockSpectrum {
    pub fn plr_states(&self) -> impl Iterator<Item = &BoundState> {
        self.states.iter().filter(|s| s.is_plr)
    }

    /// Level closest to a binding energy.
    pub fn nearest(&self, binding_mhz: f64) -> Option<&BoundState> {
        self.states.iter().min_by(|a, b| (a.binding_mhz - binding_mhz).abs().total_cmp(&(b.binding_mhz - binding_mhz).abs()))
    }
}

/// Γ_M = Γ_A(1 + ⟨X⟩): the exchange operator X = d_A·d_B/d² is +1 on
/// superradiant and −1 on subradiant case-(c) components, so this equals
/// 2Γ_A times the superradiant probability.
pub fn molecular_linewidth(coefficients: &[Vec<f64>], block: &ChannelBlock, params: &ModelParams) -> f64 {
    let x = &block.dipole_exchange;
    let mut expect = 0.0;
    let mut norm = 0.0;
    for a in 0..block.len() {
        norm += coefficients[a].iter().map(|v| v * v).sum::<f64>();
        for b in 0..block.len() {
            if x[(a, b)] == 0.0 {
                continue;
            }
            let n = coefficients[a].len().min(coefficients[b].len());
            let s: f64 = (0..n).map(|i| coefficients[a][i] * coefficients[b][i]).sum();
            expect += x[(a, b)] * s;
        }
    }
    params.gamma_a_khz.value * (1.0 + expect / norm)
}

/// Γ_M of a set of degenerate states: trace of the decay operator over the cluster
/// divided by its size, so any orthogonal mixing inside the cluster leaves it unchanged.
pub fn cluster_linewidth(states: &[&[Vec<f64>]], block: &ChannelBlock, params: &ModelParams) -> f64 {
    states.iter().map(|c| molecular_linewidth(c, block, params)).sum::<f64>() / states.len() as f64
}

fn local_potential_and_density(coeffs: &[Vec<f64>], grid: &RadialGrid, pots: &[nalgebra::DMatrix<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = grid.len();
    let mut rho = vec![0.0; n];
    let mut vloc = vec![0.0; n];
    for i in 0..n {
        let v = &pots[i];
        let amp: Vec<f64> = coeffs.iter().map(|c| c.get(i).copied().unwrap_or(0.0)).collect();
        let d: f64 = amp.iter().map(|a| a * a).sum();
        let mut e = 0.0;
        for a in 0..amp.len() {
            for b in 0..amp.len() {
                e += amp[a] * v[(a, b)] * amp[b];
            }
        }
        rho[i] = d / grid.jacobian[i];
        vloc[i] = if d > 0.0 { e / d } else { 0.0 };
    }
    (rho, vloc)
}

/// Outermost radius where the probability-weighted local potential crosses the
/// eigenvalue, among points carrying non-negligible density.
fn outer_turning_point(energy: f64, rho: &[f64], vloc: &[f64], grid: &RadialGrid) -> f64 {
    let peak = rho.iter().cloned().fold(0.0, f64::max);
    let mut best = grid.r[0];
    for i in 0..grid.len() - 1 {
        if rho[i] < 1e-4 * peak || rho[i + 1] < 1e-4 * peak {
            continue;
        }
        if vloc[i] <= energy && vloc[i + 1] > energy {
            let t = (energy - vloc[i]) / (vloc[i + 1] - vloc[i]);
            best = grid.r[i] + t * (grid.r[i + 1] - grid.r[i]);
        }
    }
    best
}

/// Per-point adiabatic vectors of the PLR curves, indexed like `wells`.
fn plr_projectors(block: &ChannelBlock, layout: &ChannelLayout, pots: &[nalgebra::DMatrix<f64>], wells: &[PlrWell]) -> Vec<Vec<Vec<f64>>> {
    let nc = block.len();
    let n = pots.len();
    wells
        .iter()
        .map(|w| {
            (0..n)
                .map(|i| {
                    let present: Vec<usize> = (0..nc).filter(|&c| i < layout.lengths[c]).collect();
                    let missing = nc - present.len();
                    if w.adiabat < missing {
                        return vec![0.0; nc];
                    }
                    let sub = nalgebra::DMatrix::from_fn(present.len(), present.len(), |a, b| pots[i][(present[a], present[b])]);
                    let (_, vecs) = sorted_eigen(sub);
                    let mut full = vec![0.0; nc];
                    for (a, &c) in present.iter().enumerate() {
                        full[c] = vecs[(a, w.adiabat - missing)];
                    }
                    full
                })
                .collect()
        })
        .collect()
}

struct Candidate {
    energy: f64,
    coefficients: Vec<Vec<f64>>,
    continuum_weight: f64,
}

/// Separate bound levels from the discretized f₂=1/2 continuum. Eigenvectors
/// whose energies lie within the mixing window are grouped; inside a group the
/// outer f₂=1/2 probability is diagonalized, its small-eigenvalue subspace is
/// the bound part, and H is rediagonalized within each part.
fn unmix(energies: &[f64], vectors: &[Vec<Vec<f64>>], outer: &dyn Fn(&[Vec<f64>], &[Vec<f64>]) -> f64, window: f64, threshold: f64) -> Vec<Candidate> {
    let n = energies.len();
    let mut out = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && energies[end] - energies[end - 1] < window {
            end += 1;
        }
        let m = end - start;
        let p = nalgebra::DMatrix::from_fn(m, m, |a, b| outer(&vectors[start + a], &vectors[start + b]));
        let (w, a) = sorted_eigen(p);
        for part in [(0..m).filter(|&k| w[k] <= threshold).collect::<Vec<_>>(), (0..m).filter(|&k| w[k] > threshold).collect()] {
            if part.is_empty() {
                continue;
            }
            // H restricted to the part: Aᵀ diag(E) A
            let q = part.len();
            let h = nalgebra::DMatrix::from_fn(q, q, |x, y| (0..m).map(|k| a[(k, part[x])] * energies[start + k] * a[(k, part[y])]).sum());
            let (e_sub, b) = sorted_eigen(h);
            for (z, &e) in e_sub.iter().enumerate() {
                // coefficients of the final vector on the original eigenvectors
                let coef: Vec<f64> = (0..m).map(|k| (0..q).map(|x| a[(k, part[x])] * b[(x, z)]).sum()).collect();
                let coefficients: Vec<Vec<f64>> = (0..vectors[start].len())
                    .map(|c| {
                        let len = vectors[start][c].len();
                        (0..len).map(|i| (0..m).map(|k| coef[k] * vectors[start + k][c][i]).sum()).collect()
                    })
                    .collect();
                let cw = outer(&coefficients, &coefficients);
                out.push(Candidate { energy: e, coefficients, continuum_weight: cw });
            }
        }
        start = end;
    }
    out
}

/// Diagonalize a block and post-process the levels that fall in the window.
pub fn bound_states(block: &ChannelBlock, grid: &RadialGrid, params: &ModelParams, grid_settings: &GridSettings, settings: &SolveSettings) -> Result<BlockSpectrum, BoundStateError> {
    let (h, layout) = assemble_hamiltonian(block, grid, params, grid_settings)?;
    let eig = h.self_adjoint_eigen(Side::Lower).map_err(|e| BoundStateError::Eigen(format!("{e:?}")))?;
    drop(h);
    let s = eig.S().column_vector();
    let u = eig.U();
    let nc = block.len();
    let mix = units::mhz_to_au(settings.mixing_window_mhz);
    let (lo, hi) = (units::mhz_to_au(settings.window_mhz.0), units::mhz_to_au(settings.window_mhz.1));

    let mut energies = Vec::new();
    let mut vectors = Vec::new();
    for k in 0..s.nrows() {
        let e = s[k];
        if e < lo - mix || e > hi + mix {
            continue;
        }
        energies.push(e);
        vectors.push((0..nc).map(|c| (0..layout.lengths[c]).map(|i| u[(layout.offsets[c] + i, k)]).collect::<Vec<f64>>()).collect::<Vec<_>>());
    }
    drop(eig);

    let half: Vec<usize> = (0..nc).filter(|&c| block.manifold == Manifold::Excited && block.channels[c].f2 == HalfInt::HALF).collect();
    let probe = grid.r.iter().position(|&r| r > settings.continuum_probe_radius).unwrap_or(grid.len());
    let outer = |a: &[Vec<f64>], b: &[Vec<f64>]| -> f64 { half.iter().map(|&c| (probe..a[c].len()).map(|i| a[c][i] * b[c][i]).sum::<f64>()).sum() };
    let candidates = unmix(&energies, &vectors, &outer, mix, settings.continuum_threshold);

    let pots: Vec<_> = grid.r.iter().map(|&r| potential_matrix(block, r, params)).collect::<Result<_, _>>()?;
    let wells = plr_wells(block, params, 8.0, grid_settings.r_max.min(3000.0))?;
    let projectors = plr_projectors(block, &layout, &pots, &wells);

    let mut states = Vec::new();
    let mut continuum = Vec::new();
    for cand in candidates {
        let e = cand.energy;
        if e < lo || e > hi {
            continue;
        }
        let coefficients = cand.coefficients;
        let channel_weights: Vec<f64> = coefficients.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
        // |u| at the ends; f₂=1/2 channels cut short are open and skipped at their outer end
        let mut peak = 0.0_f64;
        let mut edge = 0.0_f64;
        for (c, co) in coefficients.iter().enumerate() {
            for (i, v) in co.iter().enumerate() {
                peak = peak.max(v.abs() / grid.jacobian[i].sqrt());
            }
            edge = edge.max(co[0].abs() / grid.jacobian[0].sqrt());
            if layout.lengths[c] == grid.len() {
                let l = grid.len() - 1;
                edge = edge.max(co[l].abs() / grid.jacobian[l].sqrt());
            }
        }
        let converged = edge < settings.endpoint_tolerance * peak;
        let (rho, vloc) = local_potential_and_density(&coefficients, grid, &pots);
        let plr_population = wells
            .iter()
            .zip(&projectors)
            .map(|(w, proj)| {
                (0..grid.len())
                    .filter(|&i| grid.r[i] > w.r_barrier)
                    .map(|i| {
                        let d: f64 = (0..nc).map(|c| proj[i][c] * coefficients[c].get(i).copied().unwrap_or(0.0)).sum();
                        d * d
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        let state = BoundState {
            t: block.t,
            parity: block.parity,
            energy: e,
            binding_mhz: -units::au_to_mhz(e),
            gamma_m_khz: molecular_linewidth(&coefficients, block, params),
            channel_weights,
            is_plr: plr_population >= settings.plr_fraction,
            plr_population,
            outer_turning_point: outer_turning_point(e, &rho, &vloc, grid),
            continuum_weight: cand.continuum_weight,
            converged,
            degeneracy: 1,
            coefficients,
            partners: Vec::new(),
        };
        if state.continuum_weight > settings.continuum_threshold {
            continuum.push(state);
        } else {
            states.push(state);
        }
    }
    states.sort_by(|a, b| a.binding_mhz.total_cmp(&b.binding_mhz));
    continuum.sort_by(|a, b| a.binding_mhz.total_cmp(&b.binding_mhz));
    let states = merge_degenerate(states, block, params, units::khz_to_au(settings.degeneracy_khz));
    Ok(BlockSpectrum { t: block.t, parity: block.parity, grid: grid.clone(), layout, wells, states, continuum })
}

/// Build the grid for a block and solve it.
pub fn solve_block(block: &ChannelBlock, params: &ModelParams, grid_settings: &GridSettings, settings: &SolveSettings) -> Result<BlockSpectrum, BoundStateError> {
    let grid = build_grid(block, 0.0, params, grid_settings)?;
    bound_states(block, &grid, params, grid_settings, settings)
}

/// Solve independent blocks, in parallel when `mode` allows it.
pub fn solve_blocks(
    blocks: &[ChannelBlock],
    params: &ModelParams,
    grid_settings: &GridSettings,
    settings: &SolveSettings,
    mode: ExecMode,
) -> Result<Vec<BlockSpectrum>, BoundStateError> {
    mode.install();
    mode.try_map(blocks, |b| solve_block(b, params, grid_settings, settings))
}

/// Collapse runs of levels closer than `tol` into one level carrying the mean
/// energy and the cluster-averaged Γ_M and channel weights.
fn merge_degenerate(states: Vec<BoundState>, block: &ChannelBlock, params: &ModelParams, tol: f64) -> Vec<BoundState> {
    let mut out: Vec<BoundState> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let mut j = i + 1;
        while j < states.len() && (states[j].energy - states[j - 1].energy).abs() < tol {
            j += 1;
        }
        let mut level = states[i].clone();
        if j - i > 1 {
            let group = &states[i..j];
            let k = group.len() as f64;
            let coeffs: Vec<&[Vec<f64>]> = group.iter().map(|s| s.coefficients.as_slice()).collect();
            level.gamma_m_khz = cluster_linewidth(&coeffs, block, params);
            level.energy = group.iter().map(|s| s.energy).sum::<f64>() / k;
            level.binding_mhz = -units::au_to_mhz(level.energy);
            for c in 0..level.channel_weights.len() {
                level.channel_weights[c] = group.iter().map(|s| s.channel_weights[c]).sum::<f64>() / k;
            }
            level.is_plr = group.iter().any(|s| s.is_plr);
            level.converged = group.iter().all(|s| s.converged);
            level.degeneracy = group.len();
            level.partners = group[1..].iter().map(|s| s.coefficients.clone()).collect();
        }
        out.push(level);
        i = j;
    }
    out
}

/// Eigenvalues of a single-channel problem on a grid (used by the oracle tests).
pub fn single_channel_levels(grid: &RadialGrid, mu: f64, v: &dyn Fn(f64) -> f64) -> Result<Vec<f64>, BoundStateError> {
    let mut h = kinetic_matrix(grid, mu);
    for (i, &r) in grid.r.iter().enumerate() {
        h[(i, i)] += v(r);
    }
    h.self_adjoint_eigenvalues(Side::Lower).map_err(|e| BoundStateError::Eigen(format!("{e:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_spectrum() {
        let mu = 1.0;
        let w = 1.0;
        let grid = RadialGrid::uniform(-10.0 + 20.0, 10.0 + 20.0, 161);
        let ev = single_channel_levels(&grid, mu, &|r: f64| 0.5 * mu * w * w * (r - 20.0).powi(2)).unwrap();
        for n in 0..10 {
            let exact = w * (n as f64 + 0.5);
            assert!((ev[n] - exact).abs() < 1e-8 * exact, "{n}: {}", ev[n]);
        }
    }

    #[test]
    fn mapped_harmonic_oscillator() {
        let mu = 1.0;
        let env = |r: f64| (25.0 + (r - 20.0).powi(2)).sqrt();
        let grid = RadialGrid::mapped(&env, 8.0, 32.0, 0.4, None);
        let ev = single_channel_levels(&grid, mu, &|r: f64| 0.5 * (r - 20.0).powi(2)).unwrap();
        for n in 0..10 {
            let exact = n as f64 + 0.5;
            assert!((ev[n] - exact).abs() < 1e-8 * exact, "{n}: {}", ev[n]);
        }
    }

    #[test]
    fn morse_levels_on_mapped_grid() {
        let (mu, d, a, re) = (1000.0, 0.1, 1.0, 5.0);
        let v = move |r: f64| d * (1.0 - (-a * (r - re)).exp()).powi(2);
        let env = move |r: f64| (2.0 * mu * (0.02 + 0.15 / (1.0 + (r - 5.0).powi(2) / 4.0))).sqrt();
        let grid = RadialGrid::mapped(&env, 3.0, 30.0, 0.2, None);
        let ev = single_channel_levels(&grid, mu, &v).unwrap();
        let w = a * (2.0 * d / mu).sqrt();
        for n in 0..8 {
            let x = w * (n as f64 + 0.5);
            let exact = x - x * x / (4.0 * d);
            assert!((ev[n] - exact).abs() < 1e-11, "{n}: {} vs {exact}", ev[n]);
        }
    }

    #[test]
    fn kinetic_matrix_is_symmetric_positive() {
        let env = |r: f64| 1.0 + 10.0 / r;
        let grid = RadialGrid::mapped(&env, 1.0, 50.0, 0.5, None);
        let t = kinetic_matrix(&grid, 2.0);
        let n = grid.len();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(t[(i, j)], t[(j, i)]);
            }
        }
        let ev = t.self_adjoint_eigenvalues(Side::Lower).unwrap();
        assert!(ev[0] > 0.0);
    }
}
