//! Periodic orbit detection: seeding on the leading eigenspace, planar
//! projection and Poincaré return analysis.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{integrate, Trajectory};
use crate::lyapunov;
use crate::spectral::{verify_a1, A1Report, CharFunction, Leading, LeadingMode, Projector, SpectrumReport};
use crate::steady::IntervalBox;
use crate::systems::{CyclicSystem, SystemState};

/// Planar coordinates attached to trajectory states.
#[derive(Debug, Clone)]
pub enum Projection {
    /// Coordinates of the spectral projection onto the leading eigenspace.
    Spectral(Projector),
    /// `(x_0(t), x_0(t - tau/2))`, used when no simple leading pair is available.
    DelayEmbedding,
}

impl Projection {
    pub fn is_spectral(&self) -> bool {
        matches!(self, Projection::Spectral(_))
    }

    fn at_node(&self, traj: &Trajectory, k: usize) -> Result<(f64, f64)> {
        match self {
            Projection::Spectral(p) => p.coordinates_at_node(traj, k),
            Projection::DelayEmbedding => self.at_time(traj, traj.node_time(k)),
        }
    }

    pub fn at_time(&self, traj: &Trajectory, t: f64) -> Result<(f64, f64)> {
        match self {
            Projection::Spectral(p) => p.coordinates(&traj.state_at(t)?),
            Projection::DelayEmbedding => Ok((traj.value(t, 0)?, traj.value(t - 0.5 * traj.delay(), 0)?)),
        }
    }
}

/// `eps * Re phi / |Re phi|` for the leading eigenfunction `phi`.
pub fn seed_from_mode(mode: &LeadingMode, eps: f64, m: usize) -> Result<SystemState> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Argument(format!("seed amplitude must be positive, got {eps}")));
    }
    let base = mode.real_state(m);
    let norm = base.max_norm();
    if !(norm > 0.0) {
        return Err(Error::UndefinedAtZero);
    }
    Ok(base.scale(eps / norm))
}

/// A small state on the real leading eigenspace, approximating a point of the
/// strong unstable manifold of zero.
pub fn seed_on_eigenspace(system: &CyclicSystem, spectrum: &SpectrumReport, eps: f64, m: usize) -> Result<SystemState> {
    if !spectrum.a1_holds {
        return Err(Error::A1Violated(spectrum.a1_reason.clone().unwrap_or_else(|| "no unstable leading pair".into())));
    }
    let Leading::Pair { re, im } = spectrum.leading else {
        return Err(Error::A1Violated("no leading pair".into()));
    };
    let mode = LeadingMode::new(&CharFunction::from_cyclic(system), Complex64::new(re, im))?;
    seed_from_mode(&mode, eps, m)
}

/// Crossing of the Poincaré half-line: time and radial coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub t: f64,
    pub s: f64,
}

fn rotate((x, y): (f64, f64), theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (c * x + s * y, -s * x + c * y)
}

fn wrap(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut a = a % two_pi;
    if a > std::f64::consts::PI {
        a -= two_pi;
    } else if a < -std::f64::consts::PI {
        a += two_pi;
    }
    a
}

struct Scanner<'a> {
    projection: &'a Projection,
    theta0: f64,
    orientation: f64,
    next: usize,
    last: Option<(f64, f64)>,
}

impl Scanner<'_> {
    fn refine(&self, traj: &Trajectory, t0: f64, t1: f64) -> Result<Crossing> {
        let b = |t: f64| -> Result<f64> { Ok(self.orientation * rotate(self.projection.at_time(traj, t)?, self.theta0).1) };
        let (mut lo, mut hi) = (t0, t1);
        let mut blo = b(lo)?;
        for _ in 0..60 {
            if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let bm = b(mid)?;
            if bm < 0.0 || (bm == 0.0 && blo > 0.0) {
                lo = mid;
                blo = bm;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        let s = rotate(self.projection.at_time(traj, t)?, self.theta0).0;
        Ok(Crossing { t, s })
    }

    fn scan(&mut self, traj: &Trajectory, out: &mut Vec<Crossing>) -> Result<()> {
        while self.next < traj.len() {
            let k = self.next;
            let p = rotate(self.projection.at_node(traj, k)?, self.theta0);
            if let Some(q) = self.last {
                let (bq, bp) = (self.orientation * q.1, self.orientation * p.1);
                if bq < 0.0 && bp >= 0.0 {
                    let a = q.0 + (p.0 - q.0) * (-bq / (bp - bq));
                    if a > 0.0 {
                        out.push(self.refine(traj, traj.node_time(k - 1), traj.node_time(k))?);
                    }
                }
            }
            self.last = Some(p);
            self.next += 1;
        }
        Ok(())
    }
}

/// Orientation of rotation in the projected plane over nodes `from..to`.
fn orientation(traj: &Trajectory, projection: &Projection, from: usize, to: usize) -> Result<f64> {
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    for k in from..to {
        let (x, y) = projection.at_node(traj, k)?;
        let a = y.atan2(x);
        if let Some(p) = prev {
            total += wrap(a - p);
        }
        prev = Some(a);
    }
    Ok(if total < 0.0 { -1.0 } else { 1.0 })
}

/// Crossings of the half-line at angle `theta0` in the direction of rotation,
/// for `t >= 0`.
pub fn poincare_crossings(traj: &Trajectory, projection: &Projection, theta0: f64) -> Result<Vec<Crossing>> {
    let start = traj.origin();
    let orient = orientation(traj, projection, start, traj.len())?;
    let mut scanner = Scanner { projection, theta0, orientation: orient, next: start, last: None };
    let mut out = Vec::new();
    scanner.scan(traj, &mut out)?;
    if out.len() < 3 {
        return Err(Error::InsufficientData(format!("only {} crossings", out.len())));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct OrbitConfig {
    /// Integration steps per delay.
    pub m: usize,
    /// Transient before the section angle is fixed, in delays.
    pub transient: f64,
    /// Maximum integration time, in delays.
    pub horizon: f64,
    /// Integration chunk between convergence checks, in delays.
    pub chunk: f64,
    pub tol_rel: f64,
    /// Return-time tolerance relative to the period.
    pub tol_t: f64,
    /// Number of phases checked for `V = 1`.
    pub phases: usize,
    /// Number of stored orbit samples.
    pub samples: usize,
    /// Slack for the box containment check.
    pub box_slack: f64,
    pub zero_tol: f64,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        Self {
            m: 128,
            transient: 5.0,
            horizon: 4000.0,
            chunk: 25.0,
            tol_rel: 1e-5,
            tol_t: 1e-4,
            phases: 64,
            samples: 512,
            box_slack: 1e-6,
            zero_tol: lyapunov::ZERO_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitStatus {
    Converged,
    /// Solutions shrink toward zero; no orbit bounds the unstable manifold.
    Decaying,
    HorizonExhausted,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitSample {
    pub phase: f64,
    pub t: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verification {
    /// `V = 1` at all checked phases.
    pub v_equals_one: bool,
    pub v_max: usize,
    /// Orbit inside the attractor box (when one was supplied).
    pub in_box: Option<bool>,
    /// Max over phases of `|x_{t+T} - x_t|` relative to the orbit amplitude.
    pub periodicity_residual: f64,
    pub amplitude: f64,
    /// Crossing radii increase (up to a noise floor of `1e-6` of the largest radius).
    pub radii_increasing: bool,
    /// Smallest distance between non-adjacent segments of the projected
    /// polygon, relative to its diameter.
    pub min_segment_separation: f64,
    pub projected_simple: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitReport {
    pub converged: bool,
    pub status: OrbitStatus,
    pub period: f64,
    pub crossings: Vec<[f64; 2]>,
    pub verification: Option<Verification>,
    /// Either "spectral" or "delay_embedding".
    pub projection: &'static str,
    /// Final time reached by the integration.
    pub t_end: f64,
    /// Last few radius ratios `s_{k+1} / s_k`, for diagnosing non-convergence.
    pub trend: Vec<f64>,
    #[serde(skip)]
    pub samples: Vec<OrbitSample>,
    #[serde(skip)]
    pub projected: Vec<[f64; 2]>,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

impl OrbitReport {
    pub fn write_samples_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let dim = self.samples.first().map_or(0, |s| s.x.len());
        let cols: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        writeln!(w, "phase,t,{}", cols.join(","))?;
        for s in &self.samples {
            write!(w, "{:.16e},{:.16e}", s.phase, s.t)?;
            for v in &s.x {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Sampled orbit as points of `R^{N+1}`.
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.x.clone()).collect()
    }
}

fn radii_agree(c: &[Crossing], tol_rel: f64, tol_t: f64) -> bool {
    if c.len() < 4 {
        return false;
    }
    let w = &c[c.len() - 3..];
    let s_ok = w.windows(2).all(|p| (p[1].s - p[0].s).abs() <= tol_rel * p[1].s.abs());
    let t_hat = w[2].t - w[1].t;
    let periods: Vec<f64> = c[c.len() - 4..].windows(2).map(|p| p[1].t - p[0].t).collect();
    let t_ok = periods.windows(2).all(|p| (p[1] - p[0]).abs() <= tol_t * t_hat);
    s_ok && t_ok
}

/// Integrates from `seed`, watching Poincaré returns until three consecutive
/// radii and return times agree; then extracts one period and verifies it.
pub fn detect_cycle(
    system: &CyclicSystem,
    mode: Option<&LeadingMode>,
    seed: &SystemState,
    bbox: Option<&IntervalBox>,
    cfg: &OrbitConfig,
) -> Result<OrbitReport> {
    let tau = system.tau;
    let m = cfg.m;
    let projection = match mode {
        Some(md) => Projection::Spectral(md.projector(m)?),
        None => Projection::DelayEmbedding,
    };
    let seed_norm = seed.max_norm();
    if !seed_norm.is_normal() {
        return Err(Error::UndefinedAtZero);
    }
    let transient = cfg.transient * tau;
    let mut traj = integrate(system, seed, transient.max(cfg.chunk * tau), m)?;
    let k_transient = traj.origin() + (transient / traj.step()).round() as usize;
    let orient = orientation(&traj, &projection, traj.origin(), k_transient + 1)?;
    let (x, y) = projection.at_node(&traj, k_transient)?;
    let theta0 = y.atan2(x);
    let mut scanner = Scanner { projection: &projection, theta0, orientation: orient, next: k_transient, last: None };
    let mut crossings = Vec::new();
    let mut status = OrbitStatus::HorizonExhausted;
    let mut chunk_start = traj.origin();
    loop {
        scanner.scan(&traj, &mut crossings)?;
        let chunk_max =
            (chunk_start..traj.len()).map(|k| traj.node(k).iter().fold(0.0f64, |a, v| a.max(v.abs()))).fold(0.0, f64::max);
        chunk_start = traj.len();
        let grown = crossings.first().is_some_and(|f| crossings.last().unwrap().s >= 2.0 * f.s);
        if grown && radii_agree(&crossings, cfg.tol_rel, cfg.tol_t) {
            status = OrbitStatus::Converged;
            break;
        }
        if chunk_max < 1e-3 * seed_norm {
            status = OrbitStatus::Decaying;
            break;
        }
        if traj.t_end() >= cfg.horizon * tau {
            break;
        }
        let next = (traj.t_end() + cfg.chunk * tau).min(cfg.horizon * tau);
        traj.extend(system, next)?;
    }
    let trend: Vec<f64> = crossings.windows(2).rev().take(5).map(|p| p[1].s / p[0].s).collect();
    let mut report = OrbitReport {
        converged: status == OrbitStatus::Converged,
        status,
        period: f64::NAN,
        crossings: crossings.iter().map(|c| [c.t, c.s]).collect(),
        verification: None,
        projection: if projection.is_spectral() { "spectral" } else { "delay_embedding" },
        t_end: traj.t_end(),
        trend,
        samples: Vec::new(),
        projected: Vec::new(),
        trajectory: None,
    };
    if status != OrbitStatus::Converged {
        report.trajectory = Some(traj);
        return Ok(report);
    }
    let n = crossings.len();
    let period = crossings[n - 1].t - crossings[n - 2].t;
    let t_star = crossings[n - 1].t;
    traj.extend(system, t_star + period + 2.0 * traj.step())?;
    let t0 = t_star - period;

    let mut v_ok = true;
    let mut v_max = 0;
    let mut in_box = bbox.map(|_| true);
    let mut residual = 0.0f64;
    let mut amplitude = 0.0f64;
    let mut diffs = Vec::with_capacity(cfg.phases);
    for k in 0..cfg.phases {
        let t = t0 + period * k as f64 / cfg.phases as f64;
        let st = traj.state_at(t)?;
        amplitude = amplitude.max(st.max_norm());
        match lyapunov::v(&st, cfg.zero_tol) {
            Ok(val) => {
                v_max = v_max.max(val.v);
                v_ok &= val.v == 1;
            }
            Err(_) => v_ok = false,
        }
        if let (Some(b), Some(flag)) = (bbox, in_box.as_mut()) {
            *flag &= b.contains_state(&st, cfg.box_slack);
        }
        diffs.push(traj.state_at(t + period)?.sub(&st)?.max_norm());
    }
    for d in diffs {
        residual = residual.max(d / amplitude);
    }
    let samples: Vec<OrbitSample> = (0..cfg.samples)
        .map(|k| {
            let phase = k as f64 / cfg.samples as f64;
            let t = t0 + period * phase;
            Ok(OrbitSample { phase, t, x: traj.point(t)? })
        })
        .collect::<Result<_>>()?;
    let projected: Vec<[f64; 2]> = samples
        .iter()
        .map(|s| projection.at_time(&traj, s.t).map(|(a, b)| [a, b]))
        .collect::<Result<_>>()?;
    let s_max = crossings.iter().fold(0.0f64, |a, c| a.max(c.s));
    let radii_increasing = crossings.windows(2).all(|p| p[1].s > p[0].s || (p[1].s - p[0].s).abs() <= 1e-6 * s_max);
    let sep = min_nonadjacent_separation(&projected);
    report.period = period;
    report.verification = Some(Verification {
        v_equals_one: v_ok,
        v_max,
        in_box,
        periodicity_residual: residual,
        amplitude,
        radii_increasing,
        min_segment_separation: sep,
        projected_simple: sep > 0.0,
    });
    report.samples = samples;
    report.projected = projected;
    report.trajectory = Some(traj);
    Ok(report)
}

/// Outcome of [`detect_from_eigenspace`].
#[derive(Debug, Clone)]
pub struct SeededRun {
    pub a1: A1Report,
    pub eps: f64,
    pub report: OrbitReport,
}

/// Runs [`detect_cycle`] from an `eps`-seed on the leading eigenspace.
///
/// Roots are searched with `roots_cf` (typically the cheaper unidirectional
/// form of the same system) down to `Re lambda >= -margin`. A stable or real
/// leading root still seeds the run, which then reports decay. The default
/// amplitude is `1e-3` times the box radius, or `1e-3` without a box.
pub fn detect_from_eigenspace(
    system: &CyclicSystem,
    roots_cf: &CharFunction,
    bbox: Option<&IntervalBox>,
    eps: Option<f64>,
    margin: f64,
    cfg: &OrbitConfig,
) -> Result<SeededRun> {
    let a1 = verify_a1(roots_cf, margin)?;
    let eps = eps.unwrap_or_else(|| 1e-3 * bbox.map_or(1.0, IntervalBox::radius));
    let cf = CharFunction::from_cyclic(system);
    let (seed_mode, projection_mode) = match a1.spectrum.leading {
        Leading::Pair { re, im } => match LeadingMode::new(&cf, Complex64::new(re, im)) {
            Ok(md) => (Some(md.clone()), Some(md)),
            Err(Error::MultipleEigenvalue { .. }) => (None, None),
            Err(e) => return Err(e),
        },
        Leading::Real { re } => (LeadingMode::new(&cf, Complex64::new(re, 0.0)).ok(), None),
        Leading::None => (None, None),
    };
    let seed = match &seed_mode {
        Some(md) => seed_from_mode(md, eps, cfg.m)?,
        None => {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::Argument(format!("seed amplitude must be positive, got {eps}")));
            }
            SystemState::constant(system.tau, cfg.m, eps, vec![0.0; system.n()])
        }
    };
    let report = detect_cycle(system, projection_mode.as_ref(), &seed, bbox, cfg)?;
    Ok(SeededRun { a1, eps, report })
}

fn seg_point_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segment_distance(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    seg_point_dist(a, c, d).min(seg_point_dist(b, c, d)).min(seg_point_dist(c, a, b)).min(seg_point_dist(d, a, b))
}

/// Minimum distance between non-adjacent edges of a closed polygon, relative
/// to its diameter; zero when the polygon self-intersects.
pub fn min_nonadjacent_separation(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    if n < 4 {
        return 0.0;
    }
    let mut diam = 0.0f64;
    for p in poly {
        diam = diam.max((p[0] - poly[0][0]).hypot(p[1] - poly[0][1]));
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            best = best.min(segment_distance(a, b, c, d));
        }
    }
    if diam > 0.0 {
        best / diam
    } else {
        0.0
    }
}

fn point_polyline_distance(p: &[f64], line: &[Vec<f64>]) -> f64 {
    let n = line.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        let a = &line[i];
        let b = &line[(i + 1) % n];
        let mut dd = 0.0;
        let mut dp = 0.0;
        for k in 0..p.len() {
            dd += (b[k] - a[k]) * (b[k] - a[k]);
            dp += (p[k] - a[k]) * (b[k] - a[k]);
        }
        let t = if dd > 0.0 { (dp / dd).clamp(0.0, 1.0) } else { 0.0 };
        let dist2: f64 = (0..p.len()).map(|k| (p[k] - a[k] - t * (b[k] - a[k])).powi(2)).sum();
        best = best.min(dist2);
    }
    best.sqrt()
}

/// Symmetric Hausdorff distance between two closed sampled curves
/// (point-to-polyline), divided by the largest coordinate magnitude of `a`.
pub fn hausdorff_relative(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let ab = a.iter().map(|p| point_polyline_distance(p, b)).fold(0.0, f64::max);
    let ba = b.iter().map(|p| point_polyline_distance(p, a)).fold(0.0, f64::max);
    ab.max(ba) / scale
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub pairs: usize,
    pub skipped: usize,
    /// Minimum of `|projection difference| / |state difference|`.
    pub min_ratio: f64,
    /// Fraction of compared pairs whose difference has `V = 1`.
    pub sigma_fraction: f64,
}

/// Compares states of two trajectories of the same system at sampled time
/// pairs after a transient of two delays.
pub fn projected_injectivity_probe(
    a: &Trajectory,
    b: &Trajectory,
    mode: &LeadingMode,
    samples: usize,
    delta: f64,
) -> Result<ProbeReport> {
    let tau = a.delay();
    let proj = mode.projector(a.steps_per_delay())?;
    let times = |tr: &Trajectory| -> Vec<f64> {
        let t0 = 2.0 * tau;
        let t1 = tr.t_end();
        (0..samples).map(|k| t0 + (t1 - t0) * k as f64 / (samples.max(2) - 1) as f64).collect()
    };
    let sa: Vec<SystemState> = times(a).into_iter().map(|t| a.state_at(t)).collect::<Result<_>>()?;
    let sb: Vec<SystemState> = times(b).into_iter().map(|t| b.state_at(t)).collect::<Result<_>>()?;
    let ca: Vec<Complex64> = sa.iter().map(|s| proj.coefficient(s)).collect::<Result<_>>()?;
    let cb: Vec<Complex64> = sb.iter().map(|s| proj.coefficient(s)).collect::<Result<_>>()?;
    let (mut pairs, mut skipped, mut in_sigma) = (0usize, 0usize, 0usize);
    let mut min_ratio = f64::INFINITY;
    for (x, cx) in sa.iter().zip(&ca) {
        for (y, cy) in sb.iter().zip(&cb) {
            let diff = x.sub(y)?;
            let norm = diff.max_norm();
            if norm < delta {
                skipped += 1;
                continue;
            }
            pairs += 1;
            min_ratio = min_ratio.min(2.0 * (cx - cy).norm() / norm);
            if lyapunov::is_in_sigma(&diff, lyapunov::ZERO_TOL).unwrap_or(false) {
                in_sigma += 1;
            }
        }
    }
    Ok(ProbeReport {
        pairs,
        skipped,
        min_ratio: if pairs == 0 { f64::NAN } else { min_ratio },
        sigma_fraction: if pairs == 0 { f64::NAN } else { in_sigma as f64 / pairs as f64 },
    })
}
