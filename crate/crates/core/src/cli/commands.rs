use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Format, RunConfig};
use super::output::{self, csv_err, fixed, sci, Echo};
use super::{BoundStatesArgs, ChannelsArgs, Cli, CliError, Command, GateArgs, ScanArgs};
use crate::angular::{allowed_excited_blocks, enumerate_channels, ChannelBlock, Manifold, Parity, PartialWave};
use crate::boundstates::{solve_blocks, BlockSpectrum, BoundState, PlrWell, SolveSettings};
use crate::exec::ExecMode;
use crate::ofr::{design_gate, gate_plan, gate_time_us, GatePlan, OfrPoint, ResonanceOptics};
use crate::potentials::{ModelParams, Quantity};
use crate::scattering::{calibrate_ground, scattering_wavefunction, wavenumber_for_temperature, ScatteringState};

/// Resolved state shared by the subcommands.
pub struct Context {
    pub cfg: RunConfig,
    pub params: ModelParams,
    pub output: Option<PathBuf>,
}

impl Context {
    pub fn new(cli: &Cli) -> Result<Self, CliError> {
        let mut cfg = RunConfig::load(cli.config.as_deref())?;
        if let Some(f) = cli.format {
            cfg.output.format = f;
        }
        if let Some(m) = cli.exec {
            cfg.exec.mode = m;
        }
        let mut params = cfg.model.resolve()?;
        if cfg.model.recalibrate_ground == Some(true) {
            let c = calibrate_ground(&params, cfg.model.a_bg_target(), &cfg.scattering)?;
            params.c12_ground = Quantity::new(c.c12_ground, "calibrated");
        }
        cfg.exec.mode.install();
        Ok(Context { cfg, params, output: cli.output.clone() })
    }

    pub fn mode(&self) -> ExecMode {
        self.cfg.exec.mode
    }

    fn echo(&self) -> Echo<'_> {
        Echo { config: &self.cfg, model: &self.params }
    }

    fn format(&self) -> Format {
        self.cfg.output.format
    }

    fn sink(&self) -> Result<Box<dyn Write>, CliError> {
        output::open(self.output.as_deref())
    }

    pub fn scattering_state(&self) -> Result<ScatteringState, CliError> {
        let k = wavenumber_for_temperature(&self.params, self.cfg.optics.collision_temperature_uk * 1e-6);
        let e = k * k / (2.0 * self.params.reduced_mass());
        Ok(scattering_wavefunction(&self.params, e, 0, &self.cfg.scattering)?)
    }

    fn solve(&self, blocks: &[ChannelBlock], settings: &SolveSettings) -> Result<Vec<BlockSpectrum>, CliError> {
        Ok(solve_blocks(blocks, &self.params, &self.cfg.grid, settings, self.mode())?)
    }

    /// The s-wave block, its spectrum and the optics of every level in it.
    pub fn s_wave_lines(&self) -> Result<(ChannelBlock, BlockSpectrum, Vec<ResonanceOptics>), CliError> {
        let block = parse_blocks("s")?.remove(0);
        let spectrum = self.solve(std::slice::from_ref(&block), &self.cfg.solve)?.remove(0);
        let scat = self.scattering_state()?;
        let eps = self.cfg.polarization()?;
        let lines = spectrum
            .states
            .iter()
            .map(|s| ResonanceOptics::new(s, &block, &spectrum.grid, &scat, &eps, &self.params))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((block, spectrum, lines))
    }
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let ctx = Context::new(cli)?;
    match &cli.command {
        Command::Channels(a) => channels(&ctx, a),
        Command::BoundStates(a) => bound_states(&ctx, a),
        Command::Scan(a) => scan(&ctx, a),
        Command::Gate(a) => gate(&ctx, a),
        Command::Validate(a) => super::validate::run(&ctx, a.suite),
        Command::Calibrate => calibrate(&ctx),
        Command::Config => {
            let mut w = ctx.sink()?;
            write!(w, "{}", ctx.cfg.to_toml())?;
            w.flush()?;
            Ok(())
        }
    }
}

fn parse_wave(s: &str) -> Result<PartialWave, CliError> {
    match s.trim() {
        "s" | "S" => Ok(PartialWave::S),
        "p" | "P" => Ok(PartialWave::P),
        other => Err(CliError::Config(format!("partial wave must be s or p, got '{other}'"))),
    }
}

/// "s", "p" or "T,parity".
pub fn parse_blocks(spec: &str) -> Result<Vec<ChannelBlock>, CliError> {
    let pairs: Vec<(i32, Parity)> = match spec.trim() {
        "s" | "S" | "p" | "P" => allowed_excited_blocks(parse_wave(spec)?),
        other => {
            let (t, p) = other.split_once(',').ok_or_else(|| CliError::Config(format!("block must be s, p or 'T,parity', got '{other}'")))?;
            let t: i32 = t.trim().parse().map_err(|_| CliError::Config(format!("bad T in block '{other}'")))?;
            vec![(t, p.parse()?)]
        }
    };
    pairs.into_iter().map(|(t, p)| Ok(enumerate_channels(t, p, Manifold::Excited)?)).collect()
}

fn parse_numbers(s: &str, n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let v: Vec<f64> = s
        .split(':')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("{what} must be {n} numbers separated by ':', got '{s}'")))?;
    if v.len() != n || v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Config(format!("{what} must be {n} numbers separated by ':', got '{s}'")));
    }
    Ok(v)
}

/// Inclusive "lo:hi:step" ladder.
pub fn parse_ladder(s: &str) -> Result<Vec<f64>, CliError> {
    let v = parse_numbers(s, 3, "detuning range")?;
    let (lo, hi, step) = (v[0], v[1], v[2]);
    if !(step > 0.0 && hi >= lo) {
        return Err(CliError::Config(format!("detuning range needs lo <= hi and step > 0, got '{s}'")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return Err(CliError::Config(format!("detuning range '{s}' has more than 10^6 points")));
    }
    Ok((0..=n).map(|i| lo + step * i as f64).collect())
}

fn channels(ctx: &Context, a: &ChannelsArgs) -> Result<(), CliError> {
    let manifold: Manifold = a.manifold.parse()?;
    let blocks: Vec<ChannelBlock> = match (&a.wave, a.t, &a.parity) {
        (Some(w), _, _) => {
            if manifold != Manifold::Excited {
                return Err(CliError::Config("--wave lists excited blocks; drop --manifold ground".into()));
            }
            allowed_excited_blocks(parse_wave(w)?).into_iter().map(|(t, p)| enumerate_channels(t, p, manifold)).collect::<Result<_, _>>()?
        }
        (None, Some(t), Some(p)) => vec![enumerate_channels(t, p.parse()?, manifold)?],
        (None, None, None) if manifold == Manifold::Excited => parse_blocks("s")?,
        (None, None, None) => vec![enumerate_channels(0, Parity::Even, manifold)?],
        _ => return Err(CliError::Config("give both --T and --parity, or --wave".into())),
    };
    let case_c = match a.basis.as_str() {
        "e" => false,
        "c" => true,
        other => return Err(CliError::Config(format!("basis must be e or c, got '{other}'"))),
    };
    let mut w = ctx.sink()?;
    match ctx.format() {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                #[serde(flatten)]
                echo: Echo<'a>,
                blocks: Vec<serde_json::Value>,
                total_channels: usize,
            }
            let blocks_json = blocks
                .iter()
                .map(|b| {
                    serde_json::json!({
                        "manifold": b.manifold.to_string(), "T": b.t, "parity": b.parity.to_string(),
                        "degeneracy": 2 * b.t + 1,
                        "case_e": b.channels.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                        "case_c": b.case_c.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let total = blocks.iter().map(|b| b.len()).sum();
            output::write_json(&mut *w, &Out { echo: ctx.echo(), blocks: blocks_json, total_channels: total })
        }
        Format::Csv => {
            let mut wr = output::csv_writer(&mut *w, &ctx.echo())?;
            if case_c {
                wr.write_record(["manifold", "T", "parity", "index", "J", "Omega", "sigma", "I", "iota", "Phi"]).map_err(csv_err)?;
            } else {
                wr.write_record(["manifold", "T", "parity", "index", "f1", "f2", "F", "R"]).map_err(csv_err)?;
            }
            for b in &blocks {
                if case_c {
                    for (i, c) in b.case_c.iter().enumerate() {
                        let rec = [b.manifold.to_string(), b.t.to_string(), b.parity.to_string(), (i + 1).to_string(), c.j.to_string(), c.omega.to_string(), format!("{:+}", c.sigma), c.i.to_string(), c.iota.to_string(), c.phi.to_string()];
                        wr.write_record(&rec).map_err(csv_err)?;
                    }
                } else {
                    for (i, c) in b.channels.iter().enumerate() {
                        let rec = [b.manifold.to_string(), b.t.to_string(), b.parity.to_string(), (i + 1).to_string(), c.f1.to_string(), c.f2.to_string(), c.f.to_string(), c.r.to_string()];
                        wr.write_record(&rec).map_err(csv_err)?;
                    }
                }
            }
            output::finish(wr)
        }
    }
}

#[derive(Serialize)]
struct StateRow<'a> {
    #[serde(flatten)]
    state: &'a BoundState,
    intensity_w_cm2: Option<f64>,
    l_opt_a0: Option<f64>,
}

#[derive(Serialize)]
struct BlockOut<'a> {
    t: i32,
    parity: Parity,
    channels: Vec<String>,
    grid_points: usize,
    dimension: usize,
    plr_wells: &'a [PlrWell],
    states: Vec<StateRow<'a>>,
}

fn bound_states(ctx: &Context, a: &BoundStatesArgs) -> Result<(), CliError> {
    let blocks = parse_blocks(&a.block)?;
    let mut settings = ctx.cfg.solve.clone();
    let mut range = (-settings.window_mhz.1, -settings.window_mhz.0);
    if let Some(wspec) = &a.window {
        let v = parse_numbers(wspec, 2, "window")?;
        if !(v[0] >= 0.0 && v[1] > v[0]) {
            return Err(CliError::Config(format!("window needs 0 <= lo < hi (binding energies, MHz), got '{wspec}'")));
        }
        range = (v[0], v[1]);
        settings.window_mhz = (-v[1], -v[0]);
    }
    let intensity = a.intensity.unwrap_or(ctx.cfg.optics.intensity_w_cm2);
    let spectra = ctx.solve(&blocks, &settings)?;
    let s_blocks = allowed_excited_blocks(PartialWave::S);
    let scat = if blocks.iter().any(|b| s_blocks.contains(&(b.t, b.parity))) { Some(ctx.scattering_state()?) } else { None };
    let eps = ctx.cfg.polarization()?;

    let mut out_blocks = Vec::new();
    for (b, sp) in blocks.iter().zip(&spectra) {
        let mut rows = Vec::new();
        for s in sp.states.iter().filter(|s| s.binding_mhz >= range.0 && s.binding_mhz <= range.1) {
            let l = match &scat {
                Some(sc) if s_blocks.contains(&(b.t, b.parity)) => Some(ResonanceOptics::new(s, b, &sp.grid, sc, &eps, &ctx.params)?.l_opt(intensity)),
                _ => None,
            };
            rows.push(StateRow { state: s, intensity_w_cm2: l.map(|_| intensity), l_opt_a0: l });
        }
        out_blocks.push(BlockOut {
            t: b.t,
            parity: b.parity,
            channels: b.channels.iter().map(|c| c.to_string()).collect(),
            grid_points: sp.grid.len(),
            dimension: sp.layout.dim(),
            plr_wells: &sp.wells,
            states: rows,
        });
    }
    if let Some(dir) = &a.wavefunctions {
        write_wavefunctions(dir, &blocks, &spectra, range)?;
    }

    let mut w = ctx.sink()?;
    match ctx.format() {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                #[serde(flatten)]
                echo: Echo<'a>,
                blocks: Vec<BlockOut<'a>>,
            }
            output::write_json(&mut *w, &Out { echo: ctx.echo(), blocks: out_blocks })
        }
        Format::Csv => {
            let n_w = blocks.iter().map(|b| b.len()).max().unwrap_or(0);
            let mut wr = output::csv_writer(&mut *w, &ctx.echo())?;
            let mut header: Vec<String> = [
                "T", "parity", "E_b_MHz", "Gamma_M_kHz", "is_PLR", "outer_turning_point_a0", "plr_population", "converged", "degeneracy", "intensity_W_cm2", "l_opt_a0",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            header.extend((1..=n_w).map(|i| format!("w_{i}")));
            wr.write_record(&header).map_err(csv_err)?;
            for ob in &out_blocks {
                for row in &ob.states {
                    let s = row.state;
                    let mut rec = vec![
                        ob.t.to_string(),
                        ob.parity.to_string(),
                        fixed(s.binding_mhz, 4),
                        fixed(s.gamma_m_khz, 2),
                        s.is_plr.to_string(),
                        fixed(s.outer_turning_point, 1),
                        fixed(s.plr_population, 4),
                        s.converged.to_string(),
                        s.degeneracy.to_string(),
                        row.intensity_w_cm2.map(|x| fixed(x, 3)).unwrap_or_default(),
                        row.l_opt_a0.map(|x| fixed(x, 1)).unwrap_or_default(),
                    ];
                    rec.extend((0..n_w).map(|c| s.channel_weights.get(c).map(|x| fixed(*x, 6)).unwrap_or_default()));
                    wr.write_record(&rec).map_err(csv_err)?;
                }
            }
            output::finish(wr)
        }
    }
}

/// One text file per state: r (a₀) and u_c(r) (a₀^-1/2) for every channel.
fn write_wavefunctions(dir: &Path, blocks: &[ChannelBlock], spectra: &[BlockSpectrum], range: (f64, f64)) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    for (b, sp) in blocks.iter().zip(spectra) {
        for s in sp.states.iter().filter(|s| s.binding_mhz >= range.0 && s.binding_mhz <= range.1) {
            let name = format!("T{}_{}_{}MHz.txt", b.t, b.parity, fixed(s.binding_mhz, 4));
            let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(name))?);
            let u = s.radial_functions(&sp.grid);
            write!(f, "# r_a0")?;
            for c in &b.channels {
                write!(f, " u[{}]", c.to_string().replace(' ', ","))?;
            }
            writeln!(f)?;
            for (i, r) in sp.grid.r.iter().enumerate() {
                write!(f, "{}", sci(*r, 10))?;
                for uc in &u {
                    write!(f, " {}", sci(uc.get(i).copied().unwrap_or(0.0), 10))?;
                }
                writeln!(f)?;
            }
            f.flush()?;
        }
    }
    Ok(())
}

/// Index of the level closest to `binding_mhz`.
fn pick_line(lines: &[ResonanceOptics], binding_mhz: f64) -> Result<usize, CliError> {
    let (i, l) = lines
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.binding_mhz - binding_mhz).abs().total_cmp(&(b.1.binding_mhz - binding_mhz).abs()))
        .ok_or_else(|| CliError::Failure("no s-wave levels in the window".into()))?;
    if (l.binding_mhz - binding_mhz).abs() > 0.05 * binding_mhz.max(20.0) {
        eprintln!("yb-ofr: note: nearest computed line to {binding_mhz} MHz is {:.3} MHz", l.binding_mhz);
    }
    Ok(i)
}

fn nearest_neighbour(lines: &[ResonanceOptics], i: usize) -> Option<&ResonanceOptics> {
    lines
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .min_by(|a, b| (a.1.binding_mhz - lines[i].binding_mhz).abs().total_cmp(&(b.1.binding_mhz - lines[i].binding_mhz).abs()))
        .map(|(_, l)| l)
}

fn scan(ctx: &Context, a: &ScanArgs) -> Result<(), CliError> {
    if !(a.intensity >= 0.0 && a.intensity.is_finite()) {
        return Err(CliError::Config(format!("intensity must be non-negative, got {}", a.intensity)));
    }
    let detunings = parse_ladder(&a.detuning)?;
    let density = a.density.unwrap_or(ctx.cfg.optics.density_cm3);
    let phase = ctx.cfg.optics.gate_phase;
    let (_, _, lines) = ctx.s_wave_lines()?;
    let line = &lines[pick_line(&lines, a.line)?];
    let params = &ctx.params;
    let points: Vec<(OfrPoint, Option<f64>)> = ctx.mode().map(&detunings, |&d| {
        let p = line.point(a.intensity, d, params);
        (p, gate_time_us(p.a_opt_a0, density, phase, params).ok())
    });
    let mut w = ctx.sink()?;
    match ctx.format() {
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                #[serde(flatten)]
                point: OfrPoint,
                tau_gate_us: Option<f64>,
            }
            #[derive(Serialize)]
            struct Out<'a> {
                #[serde(flatten)]
                echo: Echo<'a>,
                line: &'a ResonanceOptics,
                density_cm3: f64,
                points: Vec<Row>,
            }
            let rows = points.iter().map(|(p, t)| Row { point: *p, tau_gate_us: *t }).collect();
            output::write_json(&mut *w, &Out { echo: ctx.echo(), line, density_cm3: density, points: rows })
        }
        Format::Csv => {
            let mut wr = output::csv_writer(&mut *w, &ctx.echo())?;
            wr.write_record(["I_W_cm2", "Delta_MHz", "a_opt_a0", "b_opt_a0", "Gamma_stim_MHz", "K_cm3_s", "K_half_cm3_s", "F", "tau_gate_us"]).map_err(csv_err)?;
            for (p, tau) in &points {
                wr.write_record([
                    fixed(p.intensity_w_cm2, 4),
                    fixed(p.delta_mhz, 6),
                    fixed(p.a_opt_a0, 4),
                    fixed(p.b_opt_a0, 6),
                    fixed(p.gamma_stim_mhz, 6),
                    sci(p.k_cm3_s, 6),
                    sci(p.k_half_cm3_s, 6),
                    fixed(p.fidelity, 6),
                    tau.map(|t| fixed(t, 3)).unwrap_or_default(),
                ])
                .map_err(csv_err)?;
            }
            output::finish(wr)
        }
    }
}

/// The gate for one line, either at a given (I, Δ) or by the design rule.
pub fn plan_gate(ctx: &Context, lines: &[ResonanceOptics], a: &GateArgs) -> Result<(usize, GatePlan), CliError> {
    let i = pick_line(lines, a.line)?;
    let line = &lines[i];
    let neighbour = nearest_neighbour(lines, i);
    let density = a.density.unwrap_or(ctx.cfg.optics.density_cm3);
    let phase = a.phase.unwrap_or(ctx.cfg.optics.gate_phase);
    let delta = match (a.detuning, a.detuning_gamma) {
        (Some(d), _) => d,
        (None, g) => g.unwrap_or(ctx.cfg.optics.detuning_in_gamma_m) * line.gamma_m_khz * 1e-3,
    };
    let plan = match a.intensity {
        Some(intensity) => gate_plan(line, intensity, delta, density, phase, neighbour, &ctx.params)?,
        None => design_gate(line, delta / (line.gamma_m_khz * 1e-3), density, phase, neighbour, &ctx.params)?,
    };
    Ok((i, plan))
}

fn gate(ctx: &Context, a: &GateArgs) -> Result<(), CliError> {
    let (_, _, lines) = ctx.s_wave_lines()?;
    let (i, plan) = plan_gate(ctx, &lines, a)?;
    let mut w = ctx.sink()?;
    match ctx.format() {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                #[serde(flatten)]
                echo: Echo<'a>,
                line: &'a ResonanceOptics,
                neighbour: Option<&'a ResonanceOptics>,
                plan: &'a GatePlan,
            }
            output::write_json(&mut *w, &Out { echo: ctx.echo(), line: &lines[i], neighbour: nearest_neighbour(&lines, i), plan: &plan })
        }
        Format::Csv => {
            let mut wr = output::csv_writer(&mut *w, &ctx.echo())?;
            wr.write_record([
                "E_b_MHz", "Gamma_M_kHz", "I_W_cm2", "Delta_MHz", "density_cm3", "phase_rad", "a_opt_a0", "b_opt_a0", "Gamma_stim_MHz", "tau_gate_us", "F", "K_cm3_s", "K_half_cm3_s",
                "broadened_Gamma_A_MHz", "neighbour_ratio",
            ])
            .map_err(csv_err)?;
            wr.write_record([
                fixed(plan.binding_mhz, 4),
                fixed(lines[i].gamma_m_khz, 2),
                fixed(plan.intensity_w_cm2, 4),
                fixed(plan.delta_mhz, 6),
                sci(plan.density_cm3, 6),
                fixed(plan.phase, 6),
                fixed(plan.a_opt_a0, 4),
                fixed(plan.b_opt_a0, 6),
                fixed(plan.gamma_stim_mhz, 6),
                fixed(plan.tau_gate_us, 3),
                fixed(plan.fidelity, 6),
                sci(plan.loss.formula_cm3_s, 6),
                sci(plan.loss.half_cm3_s, 6),
                fixed(plan.power_broadened_linewidth_mhz, 4),
                plan.neighbour_ratio.map(|x| fixed(x, 6)).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
            output::finish(wr)
        }
    }
}

fn calibrate(ctx: &Context) -> Result<(), CliError> {
    let target = ctx.cfg.model.a_bg_target();
    let c = calibrate_ground(&ctx.params, target, &ctx.cfg.scattering)?;
    let mut w = ctx.sink()?;
    match ctx.format() {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                #[serde(flatten)]
                echo: Echo<'a>,
                a_bg_target_a0: f64,
                c12_ground: f64,
                a_bg_a0: f64,
                nodes: usize,
            }
            output::write_json(&mut *w, &Out { echo: ctx.echo(), a_bg_target_a0: target, c12_ground: c.c12_ground, a_bg_a0: c.a_bg, nodes: c.nodes })
        }
        Format::Csv => {
            let mut wr = output::csv_writer(&mut *w, &ctx.echo())?;
            wr.write_record(["a_bg_target_a0", "c12_ground_au", "a_bg_a0", "nodes"]).map_err(csv_err)?;
            wr.write_record([fixed(target, 4), format!("{:.10e}", c.c12_ground), fixed(c.a_bg, 6), c.nodes.to_string()]).map_err(csv_err)?;
            output::finish(wr)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladders_and_blocks() {
        assert_eq!(parse_ladder("-2:2:1").unwrap(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert!(parse_ladder("2:-2:1").is_err());
        assert!(parse_ladder("0:1").is_err());
        assert_eq!(parse_blocks("p").unwrap().len(), 4);
        assert_eq!(parse_blocks("1,odd").unwrap()[0].len(), 5);
        assert!(parse_blocks("x").is_err());
    }
}
