use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::systems::{Component, CyclicSystem, Nonlinearity, SystemState};

/// Exact solution `x_j(t) = cos(omega t + j phi)` of the linear model system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSolution {
    pub n: usize,
    pub omega: f64,
    pub phi: f64,
}

impl ModelSolution {
    pub fn value(&self, t: f64, j: usize) -> f64 {
        (self.omega * t + j as f64 * self.phi).cos()
    }

    pub fn derivative(&self, t: f64, j: usize) -> f64 {
        -self.omega * (self.omega * t + j as f64 * self.phi).sin()
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        (0..=self.n).map(|j| self.value(t, j)).collect()
    }

    /// The exact state at time `t0` on a history grid of `m + 1` nodes.
    pub fn state(&self, t0: f64, m: usize) -> SystemState {
        let w = self.omega;
        SystemState::from_fn(
            1.0,
            m,
            |th| (w * (t0 + th)).cos(),
            |th| -w * (w * (t0 + th)).sin(),
            (1..=self.n).map(|j| self.value(t0, j)).collect(),
        )
        .expect("model state is well formed")
    }
}

/// The linear system with unit delay whose solution is `cos(omega t + j phi)`,
/// `phi = pi / (2(N+1))`, `omega = pi (J - 1/2)`, for odd `J`.
pub fn model_system(n: usize, j: usize) -> Result<(CyclicSystem, ModelSolution)> {
    if j.is_multiple_of(2) {
        return Err(Error::Argument(format!("J must be odd, got {j}")));
    }
    let phi = PI / (2.0 * (n as f64 + 1.0));
    let omega = PI * (j as f64 - 0.5);
    let (s, c) = phi.sin_cos();
    let c = if n == 0 { 0.0 } else { c };
    let components = (0..=n)
        .map(|i| Component {
            decay: omega * c / s,
            prev: None,
            next: Nonlinearity::linear(if i == n { -omega / s } else { omega / s }),
        })
        .collect();
    Ok((CyclicSystem::new(components, 1.0)?, ModelSolution { n, omega, phi }))
}
