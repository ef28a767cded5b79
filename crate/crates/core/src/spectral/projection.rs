use num_complex::Complex64;

use super::linalg::adjugate;
use super::CharFunction;
use crate::error::{Error, Result};
use crate::integrator::{Trajectory, TrajectoryKind};
use crate::numeric::simpson_weights;
use crate::systems::SystemState;

/// A simple eigenvalue with its right and left null vectors, normalized by
/// `v . Delta'(lambda) . u = 1`.
#[derive(Debug, Clone)]
pub struct LeadingMode {
    pub lambda: Complex64,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    b_n: f64,
    tau: f64,
}

impl LeadingMode {
    pub fn new(cf: &CharFunction, lambda: Complex64) -> Result<Self> {
        let CharFunction::General { b_n, tau, .. } = cf else {
            return Err(Error::Unsupported("projection needs the matrix form of the characteristic function".into()));
        };
        let delta = cf.delta(lambda).unwrap();
        let res = cf.value(lambda).norm() / cf.scale(lambda);
        if !(res <= 1e-8) {
            return Err(Error::Argument(format!("lambda is not a characteristic root (residual {res:.3e})")));
        }
        let d = delta.len();
        let adj = adjugate(&delta);
        let row_norms: Vec<f64> = delta.iter().map(|r| r.iter().map(|v| v.norm()).sum::<f64>()).collect();
        let reference = row_norms.iter().product::<f64>() / row_norms.iter().cloned().fold(f64::INFINITY, f64::min).max(1e-300);
        let biggest = adj.iter().flatten().map(|v| v.norm()).fold(0.0f64, f64::max);
        if !(biggest > 1e-8 * reference) {
            return Err(Error::MultipleEigenvalue { re: lambda.re, im: lambda.im, deficiency: 2 });
        }
        let col = (0..d)
            .max_by(|&a, &b| {
                let na: f64 = (0..d).map(|i| adj[i][a].norm_sqr()).sum();
                let nb: f64 = (0..d).map(|i| adj[i][b].norm_sqr()).sum();
                na.total_cmp(&nb)
            })
            .unwrap();
        let row = (0..d)
            .max_by(|&a, &b| {
                let na: f64 = adj[a].iter().map(|v| v.norm_sqr()).sum();
                let nb: f64 = adj[b].iter().map(|v| v.norm_sqr()).sum();
                na.total_cmp(&nb)
            })
            .unwrap();
        let unorm = (0..d).map(|i| adj[i][col].norm_sqr()).sum::<f64>().sqrt();
        let u: Vec<Complex64> = (0..d).map(|i| adj[i][col] / unorm).collect();
        let vnorm = adj[row].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let v: Vec<Complex64> = adj[row].iter().map(|x| x / vnorm).collect();
        let e = (-lambda * tau).exp();
        let pairing: Complex64 = (0..d).map(|i| v[i] * u[i]).sum::<Complex64>() + v[d - 1] * u[0] * e * (tau * b_n);
        if !(pairing.norm() > 1e-8) {
            return Err(Error::MultipleEigenvalue { re: lambda.re, im: lambda.im, deficiency: 1 });
        }
        let v = v.into_iter().map(|x| x / pairing).collect();
        Ok(Self { lambda, u, v, b_n: *b_n, tau: *tau })
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// Precomputes quadrature weights for states on a grid of `m + 1` nodes.
    pub fn projector(&self, m: usize) -> Result<Projector> {
        if m < 2 {
            return Err(Error::Argument("projection needs at least two history intervals".into()));
        }
        let h = self.tau / m as f64;
        let w = simpson_weights(m, h);
        let d = self.dim();
        let factor = self.v[d - 1] * self.b_n;
        let kernel = (0..=m)
            .map(|k| {
                let xi = if k == m { 0.0 } else { -self.tau + k as f64 * h };
                (-self.lambda * (xi + self.tau)).exp() * w[k] * factor
            })
            .collect();
        Ok(Projector { v: self.v.clone(), kernel, m })
    }

    /// `c(psi)` for a state on any grid.
    pub fn coefficient(&self, state: &SystemState) -> Result<Complex64> {
        self.projector(state.m())?.coefficient(state)
    }

    /// Coordinates of the projection in the basis `{Re phi, Im phi}` of the
    /// eigenfunction `phi(theta) = exp(lambda theta) u`.
    pub fn coordinates(&self, state: &SystemState) -> Result<(f64, f64)> {
        let c = self.coefficient(state)?;
        Ok((2.0 * c.re, -2.0 * c.im))
    }

    fn mode_state(&self, m: usize, part: impl Fn(Complex64) -> f64) -> SystemState {
        let u0 = self.u[0];
        let l = self.lambda;
        SystemState::from_fn(
            self.tau,
            m,
            |th| part((l * th).exp() * u0),
            |th| part(l * (l * th).exp() * u0),
            self.u[1..].iter().map(|&x| part(x)).collect(),
        )
        .expect("eigenfunction state is well formed")
    }

    /// `Re phi` sampled on a grid of `m + 1` nodes.
    pub fn real_state(&self, m: usize) -> SystemState {
        self.mode_state(m, |z| z.re)
    }

    /// `Im phi` sampled on a grid of `m + 1` nodes.
    pub fn imag_state(&self, m: usize) -> SystemState {
        self.mode_state(m, |z| z.im)
    }
}

/// Projection onto the leading eigenspace for states on a fixed grid.
#[derive(Debug, Clone)]
pub struct Projector {
    v: Vec<Complex64>,
    kernel: Vec<Complex64>,
    m: usize,
}

impl Projector {
    pub fn coefficient(&self, state: &SystemState) -> Result<Complex64> {
        if state.m() != self.m || state.n() + 1 != self.v.len() {
            return Err(Error::Argument("state grid does not match projector".into()));
        }
        let mut c = self.v[0] * state.head();
        for (vi, x) in self.v[1..].iter().zip(&state.tail) {
            c += vi * x;
        }
        for (k, x) in self.kernel.iter().zip(&state.history) {
            c += k * x;
        }
        Ok(c)
    }

    pub fn coordinates(&self, state: &SystemState) -> Result<(f64, f64)> {
        let c = self.coefficient(state)?;
        Ok((2.0 * c.re, -2.0 * c.im))
    }

    /// Coordinates of the state at trajectory node `k`, for a trajectory whose
    /// steps per delay equal the projector grid.
    pub fn coordinates_at_node(&self, traj: &Trajectory, k: usize) -> Result<(f64, f64)> {
        if *traj.kind() != TrajectoryKind::Cyclic || traj.steps_per_delay() != self.m || k < self.m || k >= traj.len() {
            return Err(Error::Argument("node not projectable with this projector".into()));
        }
        if k < traj.origin() {
            return Err(Error::Domain { t: traj.node_time(k), start: 0.0, end: traj.t_end() });
        }
        let x = traj.node(k);
        let mut c = Complex64::new(0.0, 0.0);
        for (vi, xi) in self.v.iter().zip(x) {
            c += vi * xi;
        }
        for (j, kern) in self.kernel.iter().enumerate() {
            c += kern * traj.node(k - self.m + j)[0];
        }
        Ok((2.0 * c.re, -2.0 * c.im))
    }
}

/// Coordinates of the spectral projection of `state` onto the real
/// eigenspace of the simple root `lambda`.
pub fn plane_coordinates(state: &SystemState, cf: &CharFunction, lambda: Complex64) -> Result<(f64, f64)> {
    LeadingMode::new(cf, lambda)?.coordinates(state)
}
