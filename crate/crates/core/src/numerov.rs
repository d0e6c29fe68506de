//! Single-channel Numerov integration on a step-doubling grid.
//!
//! Used for the ground-state scattering problem and as the independent
//! shooting oracle for single-channel bound levels.

/// Settings for the outward integrator.
#[derive(Clone, Copy, Debug)]
pub struct NumerovSettings {
    /// Target h·p (local phase advance per step).
    pub phase_step: f64,
    /// Upper bound on h/r, keeps power-law tails resolved where p is tiny.
    pub max_relative_step: f64,
    /// Start the integration where V − E exceeds this multiple of the well depth.
    pub wall_factor: f64,
}

impl Default for NumerovSettings {
    fn default() -> Self {
        NumerovSettings { phase_step: 0.02, max_relative_step: 0.02, wall_factor: 10.0 }
    }
}

impl NumerovSettings {
    pub fn refined(&self, factor: f64) -> Self {
        NumerovSettings { phase_step: self.phase_step / factor, max_relative_step: self.max_relative_step / factor, ..*self }
    }
}

/// A radial function sampled on the integrator's non-uniform grid.
#[derive(Clone, Debug)]
pub struct RadialSolution {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    /// Step that produced each point from its predecessor (0 for the first point).
    pub h: Vec<f64>,
    /// Sign changes of u, the endpoints excluded.
    pub nodes: usize,
}

/// One-dimensional potential together with the reduced mass and partial wave.
pub struct RadialProblem<'a> {
    pub potential: &'a dyn Fn(f64) -> f64,
    pub mu: f64,
    pub l: u32,
}

impl RadialProblem<'_> {
    pub fn effective(&self, r: f64) -> f64 {
        (self.potential)(r) + (self.l * (self.l + 1)) as f64 / (2.0 * self.mu * r * r)
    }

    /// Location and value of the potential minimum, searched on [2, 200] a₀.
    pub fn well(&self) -> (f64, f64) {
        let n = 4000;
        let (lo, hi) = (2.0_f64.ln(), 200.0_f64.ln());
        let mut best = (2.0, f64::INFINITY);
        for i in 0..=n {
            let r = (lo + (hi - lo) * i as f64 / n as f64).exp();
            let v = (self.potential)(r);
            if v < best.1 {
                best = (r, v);
            }
        }
        // golden-section refinement
        let (mut a, mut b) = (best.0 * 0.99, best.0 * 1.01);
        let g = 0.5 * (5.0_f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if (self.potential)(c) < (self.potential)(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let r = 0.5 * (a + b);
        (r, (self.potential)(r))
    }

    /// Innermost starting radius: V(r) − E ≥ wall_factor·|V_min| on the repulsive wall.
    pub fn start_radius(&self, energy: f64, settings: &NumerovSettings) -> f64 {
        let (r_min, v_min) = self.well();
        let target = energy + settings.wall_factor * v_min.abs().max(energy.abs());
        let (mut a, mut b) = (0.1 * r_min, r_min);
        if self.effective(a) - target < 0.0 {
            return a;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if self.effective(m) > target {
                a = m;
            } else {
                b = m;
            }
        }
        a
    }

    fn local_momentum(&self, r: f64, energy: f64) -> f64 {
        (2.0 * self.mu * (energy - self.effective(r)).abs()).sqrt()
    }
}

/// Integrate u'' = 2μ(V_eff − E)u outward from `r_start` (u = 0) to `r_end`.
pub fn integrate_outward(problem: &RadialProblem, energy: f64, r_start: f64, r_end: f64, settings: &NumerovSettings) -> RadialSolution {
    let mu = problem.mu;
    let f = |r: f64| 2.0 * mu * (problem.effective(r) - energy);
    let (r_well, v_well) = problem.well();
    let k_inf = (2.0 * mu * energy.max(0.0)).sqrt();
    let p_well = (2.0 * mu * (energy - v_well).max(0.0)).sqrt();
    let p_start = problem.local_momentum(r_start, energy);
    let mut h = settings.phase_step / p_well.max(p_start).max(1e-12);
    h = h.min(settings.max_relative_step * r_start);

    let cap = (r_end - r_start) / 4.0;
    h = h.min(cap);

    let mut r = vec![r_start, r_start + h];
    let mut u = vec![0.0, 1e-12];
    let mut hs = vec![0.0, h];
    let mut fs = vec![f(r_start), f(r_start + h)];
    let mut nodes = 0;
    let mut last_sign = 1.0;
    while *r.last().unwrap() < r_end {
        let n = r.len() - 1;
        let rn = r[n];
        let can_double = n >= 2
            && hs[n] == hs[n - 1]
            && rn > r_well
            && 2.0 * h <= settings.phase_step / problem.local_momentum(rn, energy).max(k_inf).max(1e-300)
            && 2.0 * h <= settings.max_relative_step * rn;
        let (u_prev, f_prev) = if can_double {
            h *= 2.0;
            (u[n - 2], fs[n - 2])
        } else {
            (u[n - 1], fs[n - 1])
        };
        let r_next = rn + h;
        let f_next = f(r_next);
        // ψ_n = (1 − h²f_n/12) u_n for the current step size
        let c = h * h / 12.0;
        let (tp, tn, tx) = (c * f_prev, c * fs[n], c * f_next);
        let u_next = ((2.0 + 10.0 * tn) * u[n] - (1.0 - tp) * u_prev) / (1.0 - tx);
        // nodes are counted as we go: rescaling can flush the oscillatory part to zero
        if u_next != 0.0 && r_next <= r_end {
            if last_sign != 0.0 && (u_next > 0.0) != (last_sign > 0.0) {
                nodes += 1;
            }
            last_sign = u_next.signum();
        }
        r.push(r_next);
        u.push(u_next);
        hs.push(h);
        fs.push(f_next);
        if u_next.abs() > 1e200 {
            for v in u.iter_mut() {
                *v *= 1e-200;
            }
        }
    }
    RadialSolution { r, u, h: hs, nodes }
}

impl RadialSolution {
    /// Cubic (Catmull-Rom style, non-uniform) interpolation of u at radius x.
    pub fn interpolate(&self, x: f64) -> f64 {
        let r = &self.r;
        if x <= r[0] {
            return self.u[0];
        }
        let n = r.len();
        if x >= r[n - 1] {
            return self.u[n - 1];
        }
        let i = match r.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.u[i],
            Err(i) => i - 1,
        };
        // Lagrange cubic through four neighbours
        let lo = i.saturating_sub(1).min(n - 4);
        let xs = &r[lo..lo + 4];
        let ys = &self.u[lo..lo + 4];
        let mut acc = 0.0;
        for j in 0..4 {
            let mut w = 1.0;
            for m in 0..4 {
                if m != j {
                    w *= (x - xs[m]) / (xs[j] - xs[m]);
                }
            }
            acc += w * ys[j];
        }
        acc
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.u.iter_mut() {
            *v *= s;
        }
    }
}

/// Dirichlet eigenvalues of a single channel on [r_start, r_end] below `e_max`
/// by Sturm node counting and bisection.
pub fn dirichlet_levels(problem: &RadialProblem, r_start: f64, r_end: f64, e_min: f64, e_max: f64, settings: &NumerovSettings) -> Vec<f64> {
    let count = |e: f64| integrate_outward(problem, e, r_start, r_end, settings).nodes;
    let n_lo = count(e_min);
    let n_hi = count(e_max);
    let mut levels = Vec::with_capacity(n_hi.saturating_sub(n_lo));
    for n in n_lo..n_hi {
        // smallest E with count(E) > n
        let (mut a, mut b) = (e_min, e_max);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if count(m) > n {
                b = m;
            } else {
                a = m;
            }
            if (b - a) <= 1e-15 * b.abs().max(1e-30) {
                break;
            }
        }
        levels.push(0.5 * (a + b));
    }
    levels
}

/// Casoratian of two solutions on the same grid, normalized by the local step;
/// approximates u·v' − u'·v.
pub fn wronskian(a: &RadialSolution, b: &RadialSolution, problem: &RadialProblem, energy: f64) -> Vec<(f64, f64)> {
    let f = |r: f64| 2.0 * problem.mu * (problem.effective(r) - energy);
    let mut out = Vec::new();
    for n in 1..a.r.len() - 1 {
        let h = a.h[n + 1];
        if a.h[n] != h {
            continue;
        }
        let t0 = 1.0 - h * h * f(a.r[n]) / 12.0;
        let t1 = 1.0 - h * h * f(a.r[n + 1]) / 12.0;
        let w = (a.u[n] * b.u[n + 1] - a.u[n + 1] * b.u[n]) * t0 * t1 / h;
        out.push((a.r[n], w));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_well_levels() {
        let mu = 1000.0;
        let w = 0.01;
        let v = move |r: f64| 0.5 * mu * w * w * (r - 10.0) * (r - 10.0);
        let p = RadialProblem { potential: &v, mu, l: 0 };
        let s = NumerovSettings::default();
        let lv = dirichlet_levels(&p, 8.0, 12.0, 0.0, 5.2 * w, &s);
        assert_eq!(lv.len(), 5);
        for (n, e) in lv.iter().enumerate() {
            let exact = w * (n as f64 + 0.5);
            assert!((e - exact).abs() < 1e-7 * exact, "{n}: {e} vs {exact}");
        }
    }

    #[test]
    fn free_particle_phase() {
        // V = 0 except a hard start at r0: u = sin(k(r − r0))
        let v = |r: f64| if r < 1.0 { 1e3 } else { 0.0 };
        let mu = 1.0;
        let p = RadialProblem { potential: &v, mu, l: 0 };
        let e = 0.5;
        let sol = integrate_outward(&p, e, 1.0, 30.0, &NumerovSettings::default());
        let k = (2.0 * mu * e).sqrt();
        let n = sol.r.len() - 1;
        let ratio = sol.u[n] / (k * (sol.r[n] - 1.0)).sin();
        let m = n / 2;
        let ratio2 = sol.u[m] / (k * (sol.r[m] - 1.0)).sin();
        assert!((ratio - ratio2).abs() < 1e-6 * ratio.abs());
    }

    #[test]
    fn interpolation_is_cubic_exact() {
        let r: Vec<f64> = (0..20).map(|i| 1.0 + (i as f64).powf(1.3)).collect();
        let u: Vec<f64> = r.iter().map(|x| 2.0 * x * x * x - x + 3.0).collect();
        let sol = RadialSolution { h: vec![0.0; r.len()], r, u, nodes: 0 };
        for x in [1.5, 7.3, 20.0, 40.0] {
            let exact = 2.0 * x * x * x - x + 3.0;
            assert!((sol.interpolate(x) - exact).abs() < 1e-9 * exact.abs());
        }
    }
}
