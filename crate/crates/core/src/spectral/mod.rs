//! Characteristic equations, stability and oscillation borders, and the
//! projection onto the leading eigenspace.

mod linalg;
mod projection;
mod roots;

pub use projection::{plane_coordinates, LeadingMode, Projector};
pub use roots::{find_roots, verify_a1, A1Report, Leading, Root, SpectrumReport, Window};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::bisect;
use crate::systems::{CyclicSystem, UnidirectionalSystem};

use linalg::{adjugate, det, CMatrix};

/// Characteristic function of a linearized cyclic system.
#[derive(Debug, Clone, PartialEq)]
pub enum CharFunction {
    /// `prod_j (lambda + mu_j) + K exp(-lambda tau)`.
    Unidirectional { mu: Vec<f64>, k: f64, tau: f64 },
    /// `det(lambda I - A - B exp(-lambda tau))` with `B` zero except
    /// `B[N][0] = b_n`.
    General { a: Vec<Vec<f64>>, b_n: f64, tau: f64 },
}

impl CharFunction {
    pub fn unidirectional(mu: Vec<f64>, k: f64, tau: f64) -> Self {
        CharFunction::Unidirectional { mu, k, tau }
    }

    /// Linearization at zero of a unidirectional loop, `K = -prod g_j'(0)`.
    pub fn from_unidirectional(sys: &UnidirectionalSystem) -> Self {
        let k = -sys.g.iter().map(|g| g.derivative(0.0)).product::<f64>();
        CharFunction::Unidirectional { mu: sys.mu.clone(), k, tau: sys.tau }
    }

    /// Linearization at zero in matrix form.
    pub fn from_cyclic(sys: &CyclicSystem) -> Self {
        let lin = sys.linearization();
        let d = lin.len();
        let mut a = vec![vec![0.0; d]; d];
        for (i, t) in lin.iter().enumerate() {
            a[i][i] = t.c;
            if i > 0 {
                a[i][i - 1] = t.a;
            }
            if i + 1 < d {
                a[i][i + 1] = t.b;
            }
        }
        CharFunction::General { a, b_n: lin[d - 1].b, tau: sys.tau }
    }

    pub fn tau(&self) -> f64 {
        match self {
            CharFunction::Unidirectional { tau, .. } | CharFunction::General { tau, .. } => *tau,
        }
    }

    /// `lambda I - A - B exp(-lambda tau)` (general variant only).
    pub fn delta(&self, lambda: Complex64) -> Option<CMatrix> {
        match self {
            CharFunction::General { a, b_n, tau } => {
                let d = a.len();
                let e = (-lambda * tau).exp();
                let mut m: CMatrix = a.iter().map(|row| row.iter().map(|&v| Complex64::new(-v, 0.0)).collect()).collect();
                for (i, row) in m.iter_mut().enumerate() {
                    row[i] += lambda;
                }
                m[d - 1][0] -= e * b_n;
                Some(m)
            }
            _ => None,
        }
    }

    /// `chi(lambda)` and `chi'(lambda)`.
    pub fn eval(&self, lambda: Complex64) -> (Complex64, Complex64) {
        match self {
            CharFunction::Unidirectional { mu, k, tau } => {
                let mut p = Complex64::new(1.0, 0.0);
                let mut dp = Complex64::new(0.0, 0.0);
                for &m in mu {
                    let f = lambda + m;
                    dp = p + f * dp;
                    p *= f;
                }
                let e = (-lambda * tau).exp() * k;
                (p + e, dp - e * tau)
            }
            CharFunction::General { b_n, tau, .. } => {
                let m = self.delta(lambda).unwrap();
                let d = m.len();
                let adj = adjugate(&m);
                let chi: Complex64 = (0..d).map(|k| m[0][k] * adj[k][0]).sum();
                let mut dchi: Complex64 = (0..d).map(|i| adj[i][i]).sum();
                dchi += adj[0][d - 1] * (-lambda * tau).exp() * (tau * b_n);
                (chi, dchi)
            }
        }
    }

    pub fn value(&self, lambda: Complex64) -> Complex64 {
        match self {
            CharFunction::General { .. } => det(self.delta(lambda).unwrap()),
            _ => self.eval(lambda).0,
        }
    }

    /// Magnitude of the terms making up `chi(lambda)`, used to judge residuals.
    pub fn scale(&self, lambda: Complex64) -> f64 {
        match self {
            CharFunction::Unidirectional { mu, k, tau } => {
                let p: f64 = mu.iter().map(|&m| lambda.norm() + m.abs()).product();
                p + k.abs() * (-lambda.re * tau).exp()
            }
            CharFunction::General { a, b_n, tau } => {
                let d = a.len();
                let delayed = b_n.abs() * (-lambda.re * tau).exp();
                (0..d)
                    .map(|i| {
                        let mut row = lambda.norm() + a[i].iter().map(|v| v.abs()).sum::<f64>();
                        if i == d - 1 {
                            row += delayed;
                        }
                        row
                    })
                    .product()
            }
        }
    }
}

/// Frequency at the stability border: the root of
/// `pi - omega tau = sum_j arctan(omega / mu_j)` in `(0, pi / tau)`.
pub fn omega1(mu: &[f64], tau: f64) -> Result<f64> {
    if !(tau > 0.0) || mu.is_empty() || mu.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(Error::Argument("omega1 needs positive decay rates and delay".into()));
    }
    let f = |w: f64| std::f64::consts::PI - w * tau - mu.iter().map(|&m| (w / m).atan()).sum::<f64>();
    bisect(f, 0.0, std::f64::consts::PI / tau, 1e-12).ok_or_else(|| Error::Argument("no crossing".into()))
}

/// Stability border `K_u = prod_j sqrt(omega1^2 + mu_j^2)`.
pub fn k_u(mu: &[f64], tau: f64) -> Result<f64> {
    let w = omega1(mu, tau)?;
    Ok(mu.iter().map(|&m| w.hypot(m)).product())
}

/// Oscillation border: the largest loop gain for which a real root exists,
/// `max_{x <= 0} -p(x) exp(x tau)` with `p(x) = prod (x + mu_j)`.
pub fn k_c(mu: &[f64], tau: f64) -> Result<f64> {
    if !(tau > 0.0) || mu.is_empty() || mu.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(Error::Argument("K_c needs positive decay rates and delay".into()));
    }
    Ok(k_c_with_argmax(mu, tau).0)
}

fn poly(mu: &[f64], x: f64) -> (f64, f64) {
    let mut p = 1.0;
    let mut dp = 0.0;
    for &m in mu {
        let f = x + m;
        dp = p + f * dp;
        p *= f;
    }
    (p, dp)
}

/// `(K_c, argmax)`; the argmax is `None` when `K_c = 0`.
pub fn k_c_with_argmax(mu: &[f64], tau: f64) -> (f64, Option<f64>) {
    let h = |x: f64| -poly(mu, x).0 * (x * tau).exp();
    let q = |x: f64| {
        let (p, dp) = poly(mu, x);
        dp + tau * p
    };
    let mut roots: Vec<f64> = mu.iter().map(|m| -m).collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    let mut intervals = Vec::new();
    for w in roots.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        if poly(mu, mid).0 < 0.0 {
            intervals.push((w[0], w[1]));
        }
    }
    let mut best = (0.0, None);
    let mut consider = |x: f64, best: &mut (f64, Option<f64>)| {
        let v = h(x);
        if v > best.0 {
            *best = (v, Some(x));
        }
    };
    let scan = |lo: f64, hi: f64, best: &mut (f64, Option<f64>), consider: &mut dyn FnMut(f64, &mut (f64, Option<f64>))| {
        const SAMPLES: usize = 2048;
        let step = (hi - lo) / SAMPLES as f64;
        let mut prev_x = lo + 0.5 * step;
        let mut prev_q = q(prev_x);
        consider(prev_x, best);
        for k in 1..SAMPLES {
            let x = lo + (k as f64 + 0.5) * step;
            let qx = q(x);
            consider(x, best);
            if qx == 0.0 || qx.signum() != prev_q.signum() {
                if let Some(z) = bisect(q, prev_x, x, 1e-12) {
                    consider(z, best);
                }
            }
            prev_x = x;
            prev_q = qx;
        }
    };
    for (lo, hi) in intervals {
        scan(lo, hi, &mut best, &mut consider);
    }
    let left = roots[0];
    if poly(mu, left - 1.0).0 < 0.0 {
        // unbounded tail: extend until h is negligible against the running maximum
        let mut width = 1.0 / tau;
        let mut running = best.0;
        loop {
            let x = left - width;
            let hx = h(x);
            let probe = (0..64).map(|k| h(left - width * (k as f64 + 0.5) / 64.0)).fold(0.0f64, f64::max);
            running = running.max(probe);
            if hx < 1e-30 * running || width > 1e6 {
                break;
            }
            width *= 2.0;
        }
        scan(left - width, left, &mut best, &mut consider);
    }
    best
}

/// Closed form of the oscillation border for two components with `mu_1 != mu_2`.
pub fn k_c_n2_closed_form(mu1: f64, mu2: f64, tau: f64) -> f64 {
    let root = (0.25 * (mu1 - mu2).powi(2) + 1.0 / (tau * tau)).sqrt();
    let lambda = -(0.5 * (mu1 + mu2) + 1.0 / tau) + root;
    2.0 * (lambda * tau).exp() / tau * (-1.0 / tau + root)
}
