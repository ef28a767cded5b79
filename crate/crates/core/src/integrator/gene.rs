use crate::error::{Error, Result};
use crate::genenet::GeneNetwork;
use crate::numeric::{hermite, hermite_derivative};
use crate::systems::finite_difference_derivative;

use super::{Trajectory, TrajectoryKind};

/// Initial data for all `2n` gene variables on `[-span, 0]`, sampled on a
/// uniform grid. Variables are ordered `r_1, p_1, ..., r_n, p_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneHistory {
    pub span: f64,
    pub values: Vec<Vec<f64>>,
    pub derivs: Vec<Vec<f64>>,
}

impl GeneHistory {
    pub fn constant(point: &[f64]) -> Self {
        Self {
            span: 0.0,
            values: point.iter().map(|&v| vec![v, v]).collect(),
            derivs: point.iter().map(|_| vec![0.0, 0.0]).collect(),
        }
    }

    /// Samples on `m + 1` nodes; derivatives by finite differences.
    pub fn from_samples(span: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        let m = values.first().map_or(0, Vec::len);
        if m < 2 || values.iter().any(|v| v.len() != m) {
            return Err(Error::Argument("gene history needs equally long sample rows with >= 2 nodes".into()));
        }
        let h = if span > 0.0 { span / (m - 1) as f64 } else { 1.0 };
        let derivs =
            values.iter().map(|v| if span > 0.0 { finite_difference_derivative(v, h) } else { vec![0.0; m] }).collect();
        Ok(Self { span, values, derivs })
    }

    fn eval(&self, i: usize, t: f64) -> (f64, f64) {
        let v = &self.values[i];
        let d = &self.derivs[i];
        let m = v.len() - 1;
        if self.span <= 0.0 {
            return (v[m], 0.0);
        }
        let h = self.span / m as f64;
        let pos = ((t + self.span) / h).clamp(0.0, m as f64);
        let k = (pos.floor() as usize).min(m - 1);
        let s = pos - k as f64;
        (
            hermite(v[k], d[k], v[k + 1], d[k + 1], h, s),
            hermite_derivative(v[k], d[k], v[k + 1], d[k + 1], h, s),
        )
    }
}

/// Integrates the gene network with each coupling using its own delay.
///
/// The step is `T_max / m_eff` where `m_eff >= m` is large enough that every
/// positive delay spans at least one step; delayed values at non-node times
/// come from the Hermite dense output, and zero delays use the current stage.
pub fn integrate_gene(network: &GeneNetwork, initial: &GeneHistory, t_end: f64, m: usize) -> Result<Trajectory> {
    network.check()?;
    let n = network.n();
    let dim = 2 * n;
    if initial.values.len() != dim {
        return Err(Error::Argument(format!("history has {} variables, network needs {dim}", initial.values.len())));
    }
    if initial.values.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Argument("gene initial data must be nonnegative".into()));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Argument(format!("t_end must be positive, got {t_end}")));
    }
    if m < 8 {
        return Err(Error::Argument(format!("steps per delay must be at least 8, got {m}")));
    }
    let t_max = network.max_delay();
    let min_pos = network.tau_p.iter().chain(&network.tau_r).copied().filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min);
    let m_eff = m.max((t_max / min_pos - 1e-9).ceil() as usize);
    let h = t_max / m_eff as f64;
    if initial.span > 0.0 && initial.span < t_max * (1.0 - 1e-12) {
        return Err(Error::Argument(format!("history covers {} but the largest delay is {t_max}", initial.span)));
    }

    let mut values = Vec::with_capacity(dim * (m_eff + 1));
    let mut derivs = Vec::with_capacity(dim * (m_eff + 1));
    for k in 0..=m_eff {
        let t = -t_max + k as f64 * h;
        for i in 0..dim {
            let (v, d) = initial.eval(i, if k == m_eff { 0.0 } else { t });
            values.push(v);
            derivs.push(d);
        }
    }
    let left = derivs[m_eff * dim..].to_vec();
    let mut traj = Trajectory {
        kind: TrajectoryKind::Gene { n },
        dim,
        t_start: -t_max,
        h,
        origin: m_eff,
        delay: t_max,
        values,
        derivs,
        left_at_origin: left,
    };

    // delay and source slot for each delayed argument
    let delays: Vec<(f64, usize)> = (0..n)
        .flat_map(|i| {
            let prev = (i + n - 1) % n;
            [(network.tau_p[i], 2 * prev + 1), (network.tau_r[i], 2 * i)]
        })
        .collect();
    let delayed = |traj: &Trajectory, stage: &[f64], t: f64, out: &mut [f64]| -> Result<()> {
        for (slot, &(d, src)) in delays.iter().enumerate() {
            out[slot] = if d == 0.0 { stage[src] } else { traj.value(t - d, src)? };
        }
        Ok(())
    };

    let x0: Vec<f64> = traj.node(m_eff).to_vec();
    let mut dl = vec![0.0; dim];
    let mut d0 = vec![0.0; dim];
    delayed(&traj, &x0, 0.0, &mut dl)?;
    network.rhs(&x0, &dl, &mut d0);
    traj.derivs[m_eff * dim..].copy_from_slice(&d0);

    let steps = ((t_end / h) - 1e-9).ceil() as usize;
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    let mut next = vec![0.0; dim];
    let mut dnext = vec![0.0; dim];
    for step in 0..steps {
        let t = step as f64 * h;
        let x = traj.node(m_eff + step).to_vec();
        k1.copy_from_slice(traj.node_derivative(m_eff + step));
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        delayed(&traj, &tmp, t + 0.5 * h, &mut dl)?;
        network.rhs(&tmp, &dl, &mut k2);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        delayed(&traj, &tmp, t + 0.5 * h, &mut dl)?;
        network.rhs(&tmp, &dl, &mut k3);
        for i in 0..dim {
            tmp[i] = x[i] + h * k3[i];
        }
        delayed(&traj, &tmp, t + h, &mut dl)?;
        network.rhs(&tmp, &dl, &mut k4);
        for i in 0..dim {
            // the exact flow keeps the nonnegative orthant; drop roundoff below zero
            next[i] = (x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).max(0.0);
        }
        delayed(&traj, &next, t + h, &mut dl)?;
        network.rhs(&next, &dl, &mut dnext);
        traj.push(&next, &dnext)?;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genenet::repressilator_preset;

    #[test]
    fn zero_start_turns_positive() {
        let net = repressilator_preset(3.0, 2.0, 1.0).unwrap();
        let tr = integrate_gene(&net, &GeneHistory::constant(&[0.0; 6]), 6.0, 16).unwrap();
        for k in tr.origin() + 1..tr.len() {
            for i in 0..3 {
                assert!(tr.node(k)[2 * i] > 0.0);
            }
        }
        let last = tr.node(tr.len() - 1);
        assert!(last.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn negative_history_rejected() {
        let net = repressilator_preset(3.0, 2.0, 1.0).unwrap();
        let mut p = [0.5; 6];
        p[2] = -0.1;
        assert!(integrate_gene(&net, &GeneHistory::constant(&p), 1.0, 16).is_err());
    }

    #[test]
    fn zero_delays_are_handled() {
        let mut net = repressilator_preset(3.0, 2.0, 1.0).unwrap();
        net.tau_r = vec![0.0; 3];
        net.tau_p = vec![1.0, 0.0, 2.0];
        let tr = integrate_gene(&net, &GeneHistory::constant(&[0.2, 0.1, 0.4, 0.3, 0.9, 0.1]), 10.0, 16).unwrap();
        assert!((tr.step() - 2.0 / 16.0).abs() < 1e-15);
        assert!(tr.node(tr.len() - 1).iter().all(|v| v.is_finite() && *v > 0.0));
    }
}
