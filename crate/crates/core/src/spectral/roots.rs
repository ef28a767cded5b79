use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{k_c, k_u, omega1, CharFunction};
use crate::error::{Error, Result};

/// Rectangle `[re_min, re_max] x [im_min, im_max]` in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max) || [re_min, re_max, im_min, im_max].iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("window needs re_min < re_max and im_min < im_max".into()));
        }
        Ok(Self { re_min, re_max, im_min, im_max })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    pub re: f64,
    pub im: f64,
    /// `|chi(lambda)|` relative to the size of its terms.
    pub residual: f64,
    pub multiplicity: usize,
    /// Set for merged or unresolved clusters of roots.
    pub flagged: bool,
}

impl Root {
    pub fn lambda(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn is_real(&self) -> bool {
        self.im == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Leading {
    Pair { re: f64, im: f64 },
    Real { re: f64 },
    None,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub window: Window,
    /// Roots with nonnegative imaginary part, by decreasing real part.
    pub roots: Vec<Root>,
    /// Real parts counted with conjugates, in decreasing order.
    pub sigma: Vec<f64>,
    pub leading: Leading,
    #[serde(rename = "K_u")]
    pub k_u: Option<f64>,
    #[serde(rename = "K_c")]
    pub k_c: Option<f64>,
    pub omega1: Option<f64>,
    pub a1_holds: bool,
    pub a1_reason: Option<String>,
}

#[derive(Clone, Copy)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    fn diam(&self) -> f64 {
        (self.x1 - self.x0).hypot(self.y1 - self.y0)
    }

    fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.x0 - slack && z.re <= self.x1 + slack && z.im >= self.y0 - slack && z.im <= self.y1 + slack
    }

    fn split(&self, frac: f64) -> (Rect, Rect) {
        if self.x1 - self.x0 >= self.y1 - self.y0 {
            let xm = self.x0 + frac * (self.x1 - self.x0);
            (Rect { x1: xm, ..*self }, Rect { x0: xm, ..*self })
        } else {
            let ym = self.y0 + frac * (self.y1 - self.y0);
            (Rect { y1: ym, ..*self }, Rect { y0: ym, ..*self })
        }
    }
}

struct Sample {
    z: Complex64,
    f: Complex64,
    g: Complex64,
}

fn sample(cf: &CharFunction, z: Complex64) -> Option<Sample> {
    let (f, df) = cf.eval(z);
    if !(f.norm().is_finite() && df.norm().is_finite()) {
        return None;
    }
    if f.norm() <= 1e-13 * cf.scale(z) {
        return None;
    }
    Some(Sample { z, f, g: df / f })
}

/// Change of `arg chi` along the segment, tracked adaptively so that no
/// winding is lost between samples.
fn edge_phase(cf: &CharFunction, a: Complex64, b: Complex64) -> Option<f64> {
    const PIECES: usize = 16;
    let mut total = 0.0;
    let mut left = sample(cf, a)?;
    for k in 1..=PIECES {
        let z = a + (b - a) * (k as f64 / PIECES as f64);
        let right = sample(cf, z)?;
        let mut stack = vec![(right, 0u32)];
        let mut cur = left;
        while let Some((r, depth)) = stack.pop() {
            let actual = (r.f / cur.f).arg();
            let predicted = (0.5 * (cur.g + r.g) * (r.z - cur.z)).im;
            if actual.abs() < 1.0 && (actual - predicted).abs() < 0.1 {
                total += actual;
                cur = r;
                continue;
            }
            if depth > 40 {
                return None;
            }
            let mid = sample(cf, 0.5 * (cur.z + r.z))?;
            stack.push((r, depth + 1));
            stack.push((mid, depth + 1));
        }
        left = cur;
    }
    Some(total)
}

/// Number of roots inside the rectangle, or `None` when the boundary passes
/// too close to a root.
fn winding(cf: &CharFunction, r: &Rect) -> Option<usize> {
    let c = [
        Complex64::new(r.x0, r.y0),
        Complex64::new(r.x1, r.y0),
        Complex64::new(r.x1, r.y1),
        Complex64::new(r.x0, r.y1),
    ];
    let mut total = 0.0;
    for k in 0..4 {
        total += edge_phase(cf, c[k], c[(k + 1) % 4])?;
    }
    let w = total / (2.0 * PI);
    let n = w.round();
    if (w - n).abs() > 1e-3 || n < 0.0 {
        return None;
    }
    Some(n as usize)
}

fn newton(cf: &CharFunction, z0: Complex64, tol: f64) -> (Complex64, f64, bool) {
    let mut z = z0;
    for _ in 0..80 {
        let (f, df) = cf.eval(z);
        let scale = cf.scale(z);
        let res = f.norm() / scale;
        if res <= tol {
            return (z, res, true);
        }
        if df.norm() == 0.0 || !df.norm().is_finite() {
            return (z, res, false);
        }
        let step = f / df;
        z -= step;
        if !(z.re.is_finite() && z.im.is_finite()) {
            return (z0, f64::INFINITY, false);
        }
        if step.norm() <= 4.0 * f64::EPSILON * (1.0 + z.norm()) {
            let (f, _) = cf.eval(z);
            let res = f.norm() / cf.scale(z);
            return (z, res, res <= tol.max(1e-10));
        }
    }
    let (f, _) = cf.eval(z);
    (z, f.norm() / cf.scale(z), false)
}

/// A cluster of `count` roots that subdivision cannot separate, located by
/// the multiplicity-corrected Newton iteration.
fn cluster(cf: &CharFunction, rect: Rect, count: usize) -> Root {
    let mut z = rect.center();
    for _ in 0..60 {
        let (f, df) = cf.eval(z);
        if f.norm() == 0.0 || df.norm() == 0.0 {
            break;
        }
        let step = f / df * count as f64;
        if !rect.contains(z - step, rect.diam()) {
            break;
        }
        z -= step;
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    let res = cf.value(z).norm() / cf.scale(z);
    Root { re: z.re, im: z.im, residual: res, multiplicity: count, flagged: true }
}

const FRACTIONS: [f64; 6] = [0.4987, 0.4713, 0.5261, 0.4399, 0.5573, 0.4127];

fn solve(cf: &CharFunction, rect: Rect, count: usize, tol: f64, scale_len: f64, out: &mut Vec<Root>) -> Result<()> {
    if count == 0 {
        return Ok(());
    }
    let tiny = rect.diam() <= 1e-9 * scale_len;
    if count == 1 {
        let (z, res, ok) = newton(cf, rect.center(), tol);
        if ok && rect.contains(z, 1e-9 * rect.diam()) {
            out.push(Root { re: z.re, im: z.im, residual: res, multiplicity: 1, flagged: false });
            return Ok(());
        }
        if tiny {
            let z = rect.center();
            let res = cf.value(z).norm() / cf.scale(z);
            out.push(Root { re: z.re, im: z.im, residual: res, multiplicity: 1, flagged: true });
            return Ok(());
        }
    } else if tiny {
        out.push(cluster(cf, rect, count));
        return Ok(());
    }
    for frac in FRACTIONS {
        let (a, b) = rect.split(frac);
        if let (Some(na), Some(nb)) = (winding(cf, &a), winding(cf, &b)) {
            if na + nb == count {
                solve(cf, a, na, tol, scale_len, out)?;
                return solve(cf, b, nb, tol, scale_len, out);
            }
        }
    }
    if count > 1 {
        out.push(cluster(cf, rect, count));
        return Ok(());
    }
    Err(Error::InsufficientData(format!(
        "argument principle failed near {:.6e}{:+.6e}i",
        rect.center().re,
        rect.center().im
    )))
}

fn merge(mut roots: Vec<Root>) -> Vec<Root> {
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    let mut out: Vec<Root> = Vec::new();
    for r in roots {
        if let Some(prev) = out.iter_mut().find(|p| (p.lambda() - r.lambda()).norm() < 1e-8 * (1.0 + r.lambda().norm())) {
            prev.multiplicity += r.multiplicity;
            prev.flagged = true;
            continue;
        }
        out.push(r);
    }
    out
}

/// All roots in the window (reported with `Im >= 0`), by recursive
/// argument-principle subdivision and Newton refinement to `tol` relative residual.
pub fn find_roots(cf: &CharFunction, window: Window, tol: f64) -> Result<SpectrumReport> {
    let tau = cf.tau();
    if window.re_min * tau < -600.0 {
        return Err(Error::Argument("window reaches too far into the left half plane".into()));
    }
    let im_hi = window.im_min.abs().max(window.im_max.abs());
    let scale_len = (window.re_max - window.re_min).max(2.0 * im_hi).max(1e-300);
    let mut found = None;
    for k in 0..12 {
        // the boundary is pushed outward slightly until it avoids all roots
        let pad = if k == 0 { 0.0 } else { 1e-3 * scale_len * (k as f64) * 0.731 };
        let rect = Rect { x0: window.re_min - pad, x1: window.re_max + pad, y0: -im_hi - pad, y1: im_hi + 1.37 * pad };
        if let Some(n) = winding(cf, &rect) {
            let mut roots = Vec::with_capacity(n);
            solve(cf, rect, n, tol, scale_len, &mut roots)?;
            found = Some(roots);
            break;
        }
    }
    let roots = found.ok_or_else(|| Error::InsufficientData("window boundary passes through roots".into()))?;
    let snapped: Vec<Root> = roots
        .into_iter()
        .map(|mut r| {
            if r.im.abs() <= 1e-10 * (1.0 + r.re.abs()) {
                r.im = 0.0;
            }
            r
        })
        .filter(|r| r.im >= 0.0)
        .filter(|r| r.re >= window.re_min && r.re <= window.re_max && r.im <= im_hi)
        .filter(|r| window.im_min < 0.0 || r.im >= window.im_min)
        .collect();
    let roots = merge(snapped);
    let mut sigma: Vec<f64> =
        roots.iter().flat_map(|r| std::iter::repeat_n(r.re, if r.is_real() { 1 } else { 2 } * r.multiplicity)).collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    let leading = match roots.first() {
        None => Leading::None,
        Some(r) => {
            // among roots sharing the maximal real part prefer a complex one
            let top = roots.iter().take_while(|q| (q.re - r.re).abs() <= 1e-9 * (1.0 + r.re.abs()));
            match top.clone().find(|q| !q.is_real()) {
                Some(q) => Leading::Pair { re: q.re, im: q.im },
                None => Leading::Real { re: r.re },
            }
        }
    };
    let (k_u_v, k_c_v, w1) = match cf {
        CharFunction::Unidirectional { mu, tau, .. } if mu.iter().all(|m| *m > 0.0) => {
            (k_u(mu, *tau).ok(), k_c(mu, *tau).ok(), omega1(mu, *tau).ok())
        }
        _ => (None, None, None),
    };
    let mut report = SpectrumReport {
        window,
        roots,
        sigma,
        leading,
        k_u: k_u_v,
        k_c: k_c_v,
        omega1: w1,
        a1_holds: false,
        a1_reason: None,
    };
    let (holds, reason) = a1_verdict(&report, 1e-8);
    report.a1_holds = holds;
    report.a1_reason = reason;
    Ok(report)
}

fn a1_verdict(report: &SpectrumReport, tol_gap: f64) -> (bool, Option<String>) {
    let Some(first) = report.roots.first() else {
        return (false, Some("no roots in window".into()));
    };
    if first.is_real() && !matches!(report.leading, Leading::Pair { .. }) {
        return (false, Some(format!("leading root {:.6e} is real", first.re)));
    }
    let Leading::Pair { re, .. } = report.leading else {
        return (false, Some("no leading pair".into()));
    };
    if first.flagged || first.multiplicity > 1 {
        return (false, Some("leading root is multiple or unresolved".into()));
    }
    if !(re > 0.0) {
        return (false, Some(format!("leading pair has real part {re:.6e} <= 0")));
    }
    let gap = report.roots.get(1).map(|r| re - r.re);
    if let Some(g) = gap {
        if g < tol_gap {
            return (false, Some(format!("next real part within {g:.3e} of the leading pair")));
        }
    }
    (true, None)
}

/// Result of checking for a unique unstable leading conjugate pair.
#[derive(Debug, Clone, Serialize)]
pub struct A1Report {
    pub holds: bool,
    pub reason: Option<String>,
    pub sigma0: f64,
    pub omega: f64,
    /// Real part of the next root (or pair) to the left, if found.
    pub sigma2: Option<f64>,
    pub spectrum: SpectrumReport,
}

/// Searches all roots with `Re lambda >= -margin` and checks for a unique
/// leading pair `sigma0 +- i omega` with `sigma0, omega > 0`.
pub fn verify_a1(cf: &CharFunction, margin: f64) -> Result<A1Report> {
    if !(margin > 0.0) {
        return Err(Error::Argument("margin must be positive".into()));
    }
    let tau = cf.tau();
    let radius = match cf {
        CharFunction::Unidirectional { mu, k, .. } => {
            let n = mu.len() as f64;
            (k.abs() * (margin * tau).exp()).powf(1.0 / n) + mu.iter().fold(0.0f64, |a, m| a.max(m.abs()))
        }
        CharFunction::General { a, b_n, .. } => {
            let norm = a.iter().map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0f64, f64::max);
            norm + b_n.abs() * (margin * tau).exp()
        }
    } + 1.0;
    let window = Window::new(-margin, radius, 0.0, radius)?;
    let spectrum = find_roots(cf, window, 1e-12)?;
    let (sigma0, omega) = match spectrum.leading {
        Leading::Pair { re, im } => (re, im),
        Leading::Real { re } => (re, 0.0),
        Leading::None => (f64::NEG_INFINITY, 0.0),
    };
    let sigma2 = spectrum.roots.get(1).map(|r| r.re);
    Ok(A1Report {
        holds: spectrum.a1_holds,
        reason: spectrum.a1_reason.clone(),
        sigma0,
        omega,
        sigma2,
        spectrum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gain_gives_decay_rates() {
        let cf = CharFunction::unidirectional(vec![0.5, 2.0, 3.5], 0.0, 1.0);
        let rep = find_roots(&cf, Window::new(-5.0, 1.0, 0.0, 5.0).unwrap(), 1e-12).unwrap();
        let re: Vec<f64> = rep.roots.iter().map(|r| r.re).collect();
        assert_eq!(rep.roots.len(), 3);
        for (a, b) in re.iter().zip([-0.5, -2.0, -3.5]) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(rep.roots.iter().all(Root::is_real));
        assert!(matches!(rep.leading, Leading::Real { .. }));
        assert!(!rep.a1_holds);
    }

    #[test]
    fn double_root_is_flagged() {
        let cf = CharFunction::unidirectional(vec![1.0, 1.0], 0.0, 1.0);
        let rep = find_roots(&cf, Window::new(-3.0, 1.0, 0.0, 2.0).unwrap(), 1e-12).unwrap();
        assert_eq!(rep.roots.len(), 1);
        assert_eq!(rep.roots[0].multiplicity, 2);
        assert!(rep.roots[0].flagged);
        assert_eq!(rep.sigma.len(), 2);
    }

    #[test]
    fn scalar_border_root_on_axis() {
        let ku = k_u(&[1.0], 1.0).unwrap();
        let cf = CharFunction::unidirectional(vec![1.0], ku, 1.0);
        let rep = find_roots(&cf, Window::new(-2.0, 1.0, 0.0, 10.0).unwrap(), 1e-13).unwrap();
        let Leading::Pair { re, im } = rep.leading else { panic!("expected pair") };
        assert!(re.abs() < 1e-9);
        assert!((im - 2.028757838110434).abs() < 1e-9);
    }

    #[test]
    fn counts_add_over_partitions() {
        let cf = CharFunction::unidirectional(vec![0.3, 1.0], 5.0, 2.0);
        let full = Rect { x0: -2.0, x1: 2.0, y0: -9.0, y1: 9.3 };
        let n = winding(&cf, &full).unwrap();
        for frac in [0.3, 0.47, 0.61] {
            let (a, b) = full.split(frac);
            assert_eq!(winding(&cf, &a).unwrap() + winding(&cf, &b).unwrap(), n);
        }
    }

    #[test]
    fn conjugates_are_roots() {
        let cf = CharFunction::unidirectional(vec![0.7, 1.1, 2.0], 9.0, 1.5);
        let rep = verify_a1(&cf, 2.0).unwrap();
        for r in &rep.spectrum.roots {
            let z = r.lambda().conj();
            assert!(cf.value(z).norm() <= 1e-10 * cf.scale(z));
        }
    }
}
