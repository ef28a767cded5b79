#![allow(dead_code)]

use cyclic_dde::systems::{validate_feedback, SampleGrid};
use cyclic_dde::{CyclicSystem, Nonlinearity, SystemState, UnidirectionalSystem};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Increasing coupling with `g(0) = 0`; the sign is applied by the caller.
fn coupling(rng: &mut ChaCha8Rng) -> Nonlinearity {
    let gain = rng.gen_range(0.3..3.0);
    match rng.gen_range(0..3) {
        0 => Nonlinearity::linear(gain),
        1 => Nonlinearity::tanh_with_slope(gain, rng.gen_range(0.5..2.0)),
        _ => Nonlinearity::hill_increasing(gain, rng.gen_range(0.5..2.0), 1.0),
    }
}

/// A random zero-centered negative-feedback loop with `1..=max_n` components
/// that passes the sign validation.
pub fn random_system(rng: &mut ChaCha8Rng, max_n: usize) -> UnidirectionalSystem {
    let n = rng.gen_range(1..=max_n);
    let mu = (0..n).map(|_| rng.gen_range(0.2..3.0)).collect();
    let mut g: Vec<Nonlinearity> = (0..n).map(|_| coupling(rng)).collect();
    g[n - 1].gain = -g[n - 1].gain;
    let tau = rng.gen_range(0.3..2.0);
    let sys = UnidirectionalSystem::new(mu, g, tau).unwrap();
    assert!(validate_feedback(&sys, &SampleGrid::default()).unwrap().pass);
    sys
}

/// Smooth random history built from a few Fourier modes plus random tail
/// values, for a loop of `dim` components.
pub fn random_state(rng: &mut ChaCha8Rng, tau: f64, m: usize, dim: usize, amp: f64) -> SystemState {
    let modes: Vec<(f64, f64, f64)> =
        (0..4).map(|k| (rng.gen_range(-1.0..1.0), k as f64 + 0.5 + rng.gen_range(0.0..1.0), rng.gen_range(0.0..6.3))).collect();
    let f = |t: f64| modes.iter().map(|(a, w, p)| a * (w * t / tau + p).sin()).sum::<f64>() * amp;
    let df = |t: f64| modes.iter().map(|(a, w, p)| a * w / tau * (w * t / tau + p).cos()).sum::<f64>() * amp;
    let tail = (1..dim).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
    SystemState::from_fn(tau, m, f, df, tail).unwrap()
}

/// The cyclic form of a random loop with increasing couplings to the previous
/// component added on the intermediate equations and an arbitrary one on the last.
pub fn random_bidirectional(rng: &mut ChaCha8Rng, max_n: usize) -> CyclicSystem {
    let uni = random_system(rng, max_n);
    let mut cyc = uni.to_cyclic();
    let n = cyc.n();
    for i in 1..=n {
        if rng.gen_bool(0.7) {
            let g = Nonlinearity::tanh_with_slope(rng.gen_range(0.1..1.0), rng.gen_range(0.5..2.0));
            // the last equation may couple back with either sign
            cyc.components[i].prev = Some(if i == n && rng.gen_bool(0.5) { Nonlinearity { gain: -g.gain, ..g } } else { g });
        }
    }
    cyc.check().unwrap();
    assert!(validate_feedback(&cyc, &SampleGrid::default()).unwrap().pass);
    cyc
}
