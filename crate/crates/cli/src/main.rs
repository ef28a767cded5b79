use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use cyclic_dde::genenet::{repressilator_preset, to_unidirectional, GeneNetwork};
use cyclic_dde::integrator::{integrate_gene, GeneHistory};
use cyclic_dde::lyapunov::{v_series, ZERO_TOL};
use cyclic_dde::orbit::{detect_from_eigenspace, seed_from_mode, OrbitConfig, OrbitReport, SeededRun};
use cyclic_dde::spectral::{find_roots, verify_a1, CharFunction, Leading, LeadingMode, Window};
use cyclic_dde::steady::{attractor_box, equilibrium_gene, IntervalBox};
use cyclic_dde::systems::{validate_feedback, SampleGrid, SystemSpec};
use cyclic_dde::{integrate, model_system, CyclicSystem, Error, SystemState, Trajectory, UnidirectionalSystem};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "cyclic-dde", version, about = "Cyclic negative-feedback delay systems: spectra, simulation, orbits")]
struct Cli {
    /// Seed for any random sampling.
    #[arg(long, global = true, default_value_t = 0)]
    rng_seed: u64,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sign validation, characteristic roots, borders and the (A1) check.
    Analyze {
        spec: PathBuf,
        /// Search window "re_min,re_max,im_min,im_max".
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
        /// Left margin for the (A1) search.
        #[arg(long, default_value_t = 0.5)]
        margin: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrates a system and writes the trajectory (and V) as CSV.
    Simulate {
        /// System spec; omit when using --model.
        spec: Option<PathBuf>,
        /// Linear model system with exact solution, "N,J".
        #[arg(long, conflicts_with = "spec")]
        model: Option<String>,
        #[arg(long, default_value_t = 20.0)]
        t_end: f64,
        #[arg(long, default_value_t = 128)]
        m: usize,
        /// Seed amplitude along the leading eigenspace.
        #[arg(long, group = "init")]
        seed_eps: Option<f64>,
        /// Initial state as JSON (`tau`, `history`, `history_deriv`, `tail`;
        /// for gene networks a constant point `[r1, p1, ...]`).
        #[arg(long, group = "init")]
        initial: Option<PathBuf>,
        /// Random initial state with values of this magnitude.
        #[arg(long, group = "init")]
        random_amplitude: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Writes the V series to this CSV file.
        #[arg(long)]
        v_series: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        sample_dt: f64,
    },
    /// Detects the periodic orbit reached from the leading eigenspace.
    Orbit {
        spec: PathBuf,
        #[command(flatten)]
        opts: OrbitOpts,
        /// Writes one period of orbit samples as CSV.
        #[arg(long)]
        samples: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Attractor-enclosing box of a unidirectional system.
    Box {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral and orbit summary over a parameter grid.
    Sweep {
        spec: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Either "start:end:count" or a comma separated list.
        #[arg(long)]
        grid: String,
        /// Skips orbit detection.
        #[arg(long)]
        no_orbit: bool,
        #[command(flatten)]
        opts: OrbitOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Symmetric three-gene repression loop: equilibrium, transform, borders, orbit.
    Repressilator {
        #[arg(long = "T")]
        t: f64,
        #[arg(long, default_value_t = 2.0)]
        nu: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[command(flatten)]
        opts: OrbitOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    /// Loop gain, applied to the last coupling.
    #[value(name = "K")]
    K,
    /// Delay (total loop delay for gene networks).
    #[value(name = "T")]
    T,
}

#[derive(clap::Args, Clone)]
struct OrbitOpts {
    #[arg(long, default_value_t = 128)]
    m: usize,
    /// Seed amplitude; defaults to 1e-3 of the box radius.
    #[arg(long)]
    eps: Option<f64>,
    /// Integration horizon in delays.
    #[arg(long, default_value_t = 4000.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1e-5)]
    tol_rel: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol_t: f64,
    #[arg(long, default_value_t = 0.5)]
    margin: f64,
}

impl OrbitOpts {
    fn config(&self) -> OrbitConfig {
        OrbitConfig { m: self.m, horizon: self.horizon, tol_rel: self.tol_rel, tol_t: self.tol_t, ..OrbitConfig::default() }
    }
}

/// Failure classes with stable exit codes.
enum Failure {
    Input(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSystem(_)
            | Error::Argument(_)
            | Error::Parse(_)
            | Error::Unsupported(_)
            | Error::InconsistentParity
            | Error::NotZeroCentered { .. } => Failure::Input(e.into()),
            _ => Failure::Numerical(e.into()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.into())
    }
}

fn input(msg: impl Into<String>) -> Failure {
    Failure::Input(anyhow::anyhow!(msg.into()))
}

type Res<T> = Result<T, Failure>;

fn read_text(path: &Path) -> Res<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::Input)
}

fn read_spec(path: &Path) -> Res<SystemSpec> {
    Ok(SystemSpec::from_json(&read_text(path)?)?)
}

fn sink(out: &Option<PathBuf>) -> Res<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json<T: Serialize>(value: &T, out: &Option<PathBuf>) -> Res<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Input(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// A spec reduced to something the spectral and orbit tools accept.
struct Loop {
    cyclic: CyclicSystem,
    uni: Option<UnidirectionalSystem>,
}

impl Loop {
    fn from_spec(spec: &SystemSpec) -> Res<Self> {
        Ok(match spec {
            SystemSpec::Unidirectional { .. } => {
                let uni = spec.unidirectional()?;
                Loop { cyclic: uni.to_cyclic(), uni: Some(uni) }
            }
            SystemSpec::Cyclic { .. } => Loop { cyclic: spec.cyclic()?, uni: None },
            SystemSpec::Gene { .. } => {
                let uni = to_unidirectional(&spec.gene()?)?.system;
                Loop { cyclic: uni.to_cyclic(), uni: Some(uni) }
            }
        })
    }

    fn roots_cf(&self) -> CharFunction {
        match &self.uni {
            Some(u) => CharFunction::from_unidirectional(u),
            None => CharFunction::from_cyclic(&self.cyclic),
        }
    }

    fn bbox(&self) -> Option<IntervalBox> {
        self.uni.as_ref().and_then(|u| attractor_box(u).ok())
    }

    fn orbit(&self, opts: &OrbitOpts) -> Res<SeededRun> {
        let bbox = self.bbox();
        Ok(detect_from_eigenspace(&self.cyclic, &self.roots_cf(), bbox.as_ref(), opts.eps, opts.margin, &opts.config())?)
    }
}

fn parse_floats(text: &str, what: &str) -> Res<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| input(format!("bad number {s:?} in {what}"))))
        .collect()
}

fn parse_grid(text: &str) -> Res<Vec<f64>> {
    if let [a, b, n] = text.split(':').collect::<Vec<_>>()[..] {
        let a: f64 = a.trim().parse().map_err(|_| input("bad grid start"))?;
        let b: f64 = b.trim().parse().map_err(|_| input("bad grid end"))?;
        let n: usize = n.trim().parse().map_err(|_| input("bad grid count"))?;
        if n == 0 {
            return Err(input("grid count must be positive"));
        }
        if n == 1 {
            return Ok(vec![a]);
        }
        return Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect());
    }
    let mut v = parse_floats(text, "grid")?;
    v.sort_by(f64::total_cmp);
    Ok(v)
}

fn analyze(spec: &Path, window: Option<&str>, margin: f64, out: &Option<PathBuf>) -> Res<()> {
    let spec = read_spec(spec)?;
    let lp = Loop::from_spec(&spec)?;
    let grid = SampleGrid::default();
    let validation = match &lp.uni {
        Some(u) => validate_feedback(u, &grid)?,
        None => validate_feedback(&lp.cyclic, &grid)?,
    };
    let cf = lp.roots_cf();
    let a1 = verify_a1(&cf, margin)?;
    let spectrum = match window {
        Some(w) => {
            let v = parse_floats(w, "window")?;
            let [a, b, c, d] = v[..] else {
                return Err(input("window needs four numbers"));
            };
            find_roots(&cf, Window::new(a, b, c, d)?, 1e-12)?
        }
        None => a1.spectrum.clone(),
    };
    let loop_gain = lp.uni.as_ref().map(UnidirectionalSystem::loop_gain);
    emit_json(
        &json!({
            "validation": validation,
            "loop_gain": loop_gain,
            "spectrum": spectrum,
            "a1": {
                "holds": a1.holds,
                "reason": a1.reason,
                "sigma0": finite_or_null(a1.sigma0),
                "omega": a1.omega,
                "sigma2": a1.sigma2,
            },
        }),
        out,
    )
}

fn finite_or_null(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn random_state(sys: &CyclicSystem, m: usize, amp: f64, rng: &mut ChaCha8Rng) -> Res<SystemState> {
    // a few random Fourier modes keep the history smooth
    let coef: Vec<(f64, f64)> = (0..4).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU))).collect();
    let tau = sys.tau;
    let f = |th: f64| coef.iter().enumerate().map(|(k, (a, p))| a * ((k as f64 + 1.0) * th / tau + p).sin()).sum::<f64>();
    let df = |th: f64| {
        coef.iter().enumerate().map(|(k, (a, p))| a * (k as f64 + 1.0) / tau * ((k as f64 + 1.0) * th / tau + p).cos()).sum::<f64>()
    };
    let tail = (0..sys.n()).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
    let base = SystemState::from_fn(tau, m, |t| amp * f(t), |t| amp * df(t), tail)?;
    Ok(base)
}

fn write_v_series(traj: &Trajectory, dt: f64, path: &Path) -> Res<()> {
    let vs = v_series(traj, dt, ZERO_TOL)?;
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    vs.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    spec: Option<&Path>,
    model: Option<&str>,
    t_end: f64,
    m: usize,
    seed_eps: Option<f64>,
    initial: Option<&Path>,
    random_amplitude: Option<f64>,
    out: &Option<PathBuf>,
    v_path: Option<&Path>,
    sample_dt: f64,
    rng_seed: u64,
) -> Res<()> {
    if let Some(eps) = seed_eps {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(input("--seed-eps must be positive"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let traj = if let Some(model) = model {
        let v = parse_floats(model, "model")?;
        let [n, j] = v[..] else {
            return Err(input("--model expects \"N,J\""));
        };
        if n < 0.0 || j < 1.0 || n.fract() != 0.0 || j.fract() != 0.0 {
            return Err(input("--model expects nonnegative integers N and positive odd J"));
        }
        let (sys, sol) = model_system(n as usize, j as usize)?;
        integrate(&sys, &sol.state(0.0, m), t_end, m)?
    } else {
        let spec = read_spec(spec.ok_or_else(|| input("a system spec or --model is required"))?)?;
        if let SystemSpec::Gene { .. } = spec {
            let net = spec.gene()?;
            return simulate_gene(&net, t_end, m, seed_eps, initial, out);
        }
        let lp = Loop::from_spec(&spec)?;
        let init = if let Some(path) = initial {
            let st: SystemState = serde_json::from_str(&read_text(path)?).map_err(|e| input(format!("initial state: {e}")))?;
            SystemState::new(st.tau, st.history, st.history_deriv, st.tail)?
        } else if let Some(amp) = random_amplitude {
            random_state(&lp.cyclic, m, amp, &mut rng)?
        } else {
            let eps = seed_eps.unwrap_or(1e-3);
            let a1 = verify_a1(&lp.roots_cf(), 0.5)?;
            let cf = CharFunction::from_cyclic(&lp.cyclic);
            let lambda = match a1.spectrum.leading {
                Leading::Pair { re, im } => Complex64::new(re, im),
                Leading::Real { re } => Complex64::new(re, 0.0),
                Leading::None => return Err(Failure::Numerical(anyhow::anyhow!("no characteristic root within the search margin"))),
            };
            seed_from_mode(&LeadingMode::new(&cf, lambda)?, eps, m)?
        };
        integrate(&lp.cyclic, &init, t_end, m)?
    };
    let mut w = sink(out)?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    if let Some(p) = v_path {
        write_v_series(&traj, sample_dt, p)?;
    }
    Ok(())
}

fn simulate_gene(
    net: &GeneNetwork,
    t_end: f64,
    m: usize,
    seed_eps: Option<f64>,
    initial: Option<&Path>,
    out: &Option<PathBuf>,
) -> Res<()> {
    let point = if let Some(path) = initial {
        serde_json::from_str::<Vec<f64>>(&read_text(path)?).map_err(|e| input(format!("initial point: {e}")))?
    } else {
        let eq = equilibrium_gene(net)?;
        let eps = seed_eps.unwrap_or(1e-3);
        (0..net.n()).flat_map(|i| [eq.r[i] * (1.0 + eps), eq.p[i]]).collect()
    };
    if point.len() != 2 * net.n() || point.iter().any(|v| !(*v >= 0.0)) {
        return Err(input(format!("initial point needs {} nonnegative values", 2 * net.n())));
    }
    let traj = integrate_gene(net, &GeneHistory::constant(&point), t_end, m)?;
    let mut w = sink(out)?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn orbit(spec: &Path, opts: &OrbitOpts, samples: Option<&Path>, out: &Option<PathBuf>) -> Res<()> {
    let lp = Loop::from_spec(&read_spec(spec)?)?;
    let run = lp.orbit(opts)?;
    if let Some(p) = samples {
        let mut w = io::BufWriter::new(fs::File::create(p)?);
        run.report.write_samples_csv(&mut w)?;
        w.flush()?;
    }
    emit_json(&run.report, out)
}

fn bbox(spec: &Path, out: &Option<PathBuf>) -> Res<()> {
    let spec = read_spec(spec)?;
    let uni = match &spec {
        SystemSpec::Gene { .. } => to_unidirectional(&spec.gene()?)?.system,
        _ => spec.unidirectional()?,
    };
    emit_json(&attractor_box(&uni)?, out)
}

#[derive(Serialize)]
struct SweepRow {
    value: f64,
    sigma0: Option<f64>,
    omega: f64,
    k: Option<f64>,
    k_u: Option<f64>,
    k_c: Option<f64>,
    a1_holds: bool,
    status: String,
    period: Option<f64>,
}

fn sweep_point(spec: &SystemSpec, param: SweepParam, value: f64, orbit: bool, opts: &OrbitOpts) -> Res<SweepRow> {
    let adjusted = match (param, spec) {
        (SweepParam::K, SystemSpec::Unidirectional { .. }) => {
            SystemSpec::from_unidirectional(&spec.unidirectional()?.with_loop_gain(value)?)
        }
        (SweepParam::T, SystemSpec::Unidirectional { .. }) => {
            let mut u = spec.unidirectional()?;
            u.tau = value;
            u.check()?;
            SystemSpec::from_unidirectional(&u)
        }
        (SweepParam::T, SystemSpec::Gene { .. }) => {
            let mut net = spec.gene()?;
            let scale = value / net.total_delay();
            net.tau_p.iter_mut().chain(net.tau_r.iter_mut()).for_each(|d| *d *= scale);
            SystemSpec::from_gene(&net)
        }
        _ => return Err(input("sweeps support K and T for unidirectional systems, T for gene networks")),
    };
    let lp = Loop::from_spec(&adjusted)?;
    let k = lp.uni.as_ref().map(UnidirectionalSystem::loop_gain);
    let (a1, status, period) = if orbit {
        let run = lp.orbit(opts)?;
        let st = serde_json::to_value(run.report.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let period = run.report.converged.then_some(run.report.period);
        (run.a1, st, period)
    } else {
        (verify_a1(&lp.roots_cf(), opts.margin)?, String::new(), None)
    };
    Ok(SweepRow {
        value,
        sigma0: finite_or_null(a1.sigma0),
        omega: a1.omega,
        k,
        k_u: a1.spectrum.k_u,
        k_c: a1.spectrum.k_c,
        a1_holds: a1.holds,
        status,
        period,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

fn sweep(spec: &Path, param: SweepParam, grid: &str, orbit: bool, opts: &OrbitOpts, out: &Option<PathBuf>) -> Res<()> {
    let spec = read_spec(spec)?;
    let values = parse_grid(grid)?;
    let rows: Vec<Res<SweepRow>> = values.par_iter().map(|&v| sweep_point(&spec, param, v, orbit, opts)).collect();
    let mut w = sink(out)?;
    writeln!(w, "value,sigma0,omega,K,K_u,K_c,a1_holds,status,period")?;
    for row in rows {
        let r = row?;
        writeln!(
            w,
            "{:.12e},{},{:.12e},{},{},{},{},{},{}",
            r.value,
            opt(r.sigma0),
            r.omega,
            opt(r.k),
            opt(r.k_u),
            opt(r.k_c),
            r.a1_holds,
            r.status,
            opt(r.period)
        )?;
    }
    w.flush()?;
    Ok(())
}

fn repressilator(t: f64, nu: f64, beta: f64, opts: &OrbitOpts, out: &Option<PathBuf>) -> Res<()> {
    let net = repressilator_preset(t, nu, beta)?;
    let tr = to_unidirectional(&net)?;
    let validation = validate_feedback(&tr.system, &SampleGrid::default())?;
    let lp = Loop { cyclic: tr.system.to_cyclic(), uni: Some(tr.system.clone()) };
    let run = lp.orbit(opts)?;
    let report: &OrbitReport = &run.report;
    let upper = net.invariant_box();
    let in_gene_box = report.converged.then(|| {
        report.samples.iter().all(|s| {
            tr.gene_values_of_point(&s.x).iter().zip(&upper).all(|(v, u)| *v > 0.0 && *v < *u)
        })
    });
    emit_json(
        &json!({
            "network": net,
            "equilibrium": tr.equilibrium,
            "mu": tr.system.mu,
            "K": tr.k,
            "K_u": run.a1.spectrum.k_u,
            "K_c": run.a1.spectrum.k_c,
            "validation_pass": validation.pass,
            "a1_holds": run.a1.holds,
            "sigma0": finite_or_null(run.a1.sigma0),
            "omega": run.a1.omega,
            "orbit": report,
            "orbit_in_gene_box": in_gene_box,
            "gene_box_upper": upper,
        }),
        out,
    )
}

fn run(cli: Cli) -> Res<()> {
    match cli.cmd {
        Command::Analyze { spec, window, margin, out } => analyze(&spec, window.as_deref(), margin, &out),
        Command::Simulate { spec, model, t_end, m, seed_eps, initial, random_amplitude, out, v_series, sample_dt } => simulate(
            spec.as_deref(),
            model.as_deref(),
            t_end,
            m,
            seed_eps,
            initial.as_deref(),
            random_amplitude,
            &out,
            v_series.as_deref(),
            sample_dt,
            cli.rng_seed,
        ),
        Command::Orbit { spec, opts, samples, out } => orbit(&spec, &opts, samples.as_deref(), &out),
        Command::Box { spec, out } => bbox(&spec, &out),
        Command::Sweep { spec, param, grid, no_orbit, opts, out } => sweep(&spec, param, &grid, !no_orbit, &opts, &out),
        Command::Repressilator { t, nu, beta, opts, out } => repressilator(t, nu, beta, &opts, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(3)
        }
    }
}
