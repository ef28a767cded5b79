//! End-to-end acceptance criteria. Each prints one PASS/FAIL line; the test
//! fails if any criterion does.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use cyclic_dde::genenet::{repressilator_preset, to_unidirectional};
use cyclic_dde::lyapunov::{v, v_series, ZERO_TOL};
use cyclic_dde::orbit::{detect_cycle, detect_from_eigenspace, hausdorff_relative, seed_on_eigenspace, OrbitConfig};
use cyclic_dde::spectral::{k_c, k_c_n2_closed_form, k_u, verify_a1, CharFunction, Leading, LeadingMode};
use cyclic_dde::steady::{attractor_box, equilibrium_gene};
use cyclic_dde::systems::{difference_coefficients, validate_feedback, SampleGrid};
use cyclic_dde::{integrate, model_system, Nonlinearity, UnidirectionalSystem};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lyapunov_exactness() -> Outcome {
    for n in [0, 1, 2, 4] {
        for j in [1, 3, 5] {
            let (_, sol) = model_system(n, j).map_err(|e| e.to_string())?;
            let got = v(&sol.state(0.0, 512), ZERO_TOL).map_err(|e| e.to_string())?.v;
            ensure(got == j, || format!("N={n} J={j}: V = {got}"))?;
        }
    }
    Ok("12 model states".into())
}

fn v_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut samples = 0;
    for s in 0..50 {
        let sys = common::random_system(&mut rng, 4);
        let cyc = sys.to_cyclic();
        for r in 0..4 {
            let x0 = common::random_state(&mut rng, sys.tau, 128, sys.n(), 1.0);
            let traj = integrate(&cyc, &x0, 30.0 * sys.tau, 128).map_err(|e| e.to_string())?;
            let vs = v_series(&traj, 0.1, ZERO_TOL).map_err(|e| e.to_string())?;
            ensure(vs.violations == 0, || format!("system {s}, state {r}: {} violations", vs.violations))?;
            samples += vs.points.len();
        }
    }
    Ok(format!("200 runs, {samples} samples"))
}

fn integrator_order() -> Outcome {
    let (sys, sol) = model_system(2, 3).map_err(|e| e.to_string())?;
    let mut errs = Vec::new();
    for m in [64, 128, 256, 512] {
        let traj = integrate(&sys, &sol.state(0.0, m), 10.0, m).map_err(|e| e.to_string())?;
        let p = traj.point(10.0).map_err(|e| e.to_string())?;
        errs.push(p.iter().zip(sol.point(10.0)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    ensure(orders.iter().all(|&o| o >= 3.5), || format!("orders {orders:?}"))?;
    Ok(format!("orders {:.2?}", orders))
}

fn omega_by_bisection(mu: &[f64], tau: f64) -> f64 {
    let phase = |w: f64| mu.iter().map(|m| (w / m).atan()).sum::<f64>() + w * tau - std::f64::consts::PI;
    let (mut lo, mut hi) = (0.0, std::f64::consts::PI / tau);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phase(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn scalar_borders() -> Outcome {
    let kc = k_c(&[1.0], 1.0).map_err(|e| e.to_string())?;
    ensure((kc - (-2f64).exp()).abs() <= 1e-9, || format!("K_c = {kc}"))?;
    let ku = k_u(&[1.0], 1.0).map_err(|e| e.to_string())?;
    let w = omega_by_bisection(&[1.0], 1.0);
    let oracle = (w * w + 1.0).sqrt();
    ensure((ku - oracle).abs() <= 1e-9, || format!("K_u = {ku}, oracle {oracle}"))?;
    ensure((ku - 2.2617).abs() < 5e-4, || format!("K_u = {ku}"))?;
    ensure(kc < ku, || "K_c >= K_u".into())?;
    Ok(format!("K_c = {kc:.10}, K_u = {ku:.10}"))
}

fn two_component_borders() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..10 {
        for j in 0..10 {
            for tau in [0.5, 1.0, 2.0] {
                let m1 = 0.1 + 0.5 * i as f64;
                let m2 = 0.17 + 0.53 * j as f64;
                let scan = k_c(&[m1, m2], tau).map_err(|e| e.to_string())?;
                let closed = k_c_n2_closed_form(m1, m2, tau);
                let rel = (scan - closed).abs() / closed;
                worst = worst.max(rel);
                ensure(rel <= 1e-8, || format!("mu=({m1},{m2}) tau={tau}: {scan} vs {closed}"))?;
                let ku = k_u(&[m1, m2], tau).map_err(|e| e.to_string())?;
                ensure(scan < ku, || format!("mu=({m1},{m2}) tau={tau}: K_c {scan} >= K_u {ku}"))?;
            }
        }
    }
    for (m, tau) in [(0.5, 1.0), (2.0, 0.3), (3.0, 2.0)] {
        let kc = k_c(&[m, m], tau).map_err(|e| e.to_string())?;
        ensure(kc == 0.0, || format!("equal rates {m}: K_c = {kc}"))?;
    }
    Ok(format!("300 points, worst relative gap {worst:.1e}"))
}

fn three_component_orders() -> Outcome {
    let e = |r: cyclic_dde::Result<f64>| r.map_err(|e| e.to_string());
    let (kc, ku) = (e(k_c(&[5.0; 3], 1.0))?, e(k_u(&[5.0; 3], 1.0))?);
    ensure(kc < 1.0 && 1.0 < ku, || format!("strong decay: K_c {kc}, K_u {ku}"))?;
    let (kc2, ku2) = (e(k_c(&[0.01; 3], 1.0))?, e(k_u(&[0.01; 3], 1.0))?);
    ensure(ku2 < kc2, || format!("weak decay: K_u {ku2}, K_c {kc2}"))?;
    Ok(format!("K_c {kc:.3e} < 1 < K_u {ku:.1}; K_u {ku2:.3e} < K_c {kc2:.4}"))
}

fn hopf_crossing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..20 {
        let n = 1 + case % 3;
        let mu: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..5.0)).collect();
        let tau = rng.gen_range(0.2..3.0);
        let ku = k_u(&mu, tau).map_err(|e| e.to_string())?;
        let lo = verify_a1(&CharFunction::unidirectional(mu.clone(), 0.999 * ku, tau), 0.5).map_err(|e| e.to_string())?;
        let hi = verify_a1(&CharFunction::unidirectional(mu.clone(), 1.001 * ku, tau), 0.5).map_err(|e| e.to_string())?;
        ensure(lo.sigma0 < 0.0 && hi.sigma0 > 0.0, || {
            format!("mu={mu:?} tau={tau}: sigma0 {} -> {}", lo.sigma0, hi.sigma0)
        })?;
        ensure(matches!(hi.spectrum.leading, Leading::Pair { .. }), || format!("mu={mu:?} tau={tau}: leading root real"))?;
    }
    Ok("20 parameter sets".into())
}

fn orbit_suite() -> Outcome {
    let e = |err: cyclic_dde::Error| err.to_string();
    let gamma = (1.5 * k_u(&[1.0, 1.0], 1.0).map_err(e)?).sqrt();
    let uni = UnidirectionalSystem::new(vec![1.0, 1.0], vec![Nonlinearity::tanh(gamma), Nonlinearity::tanh(-gamma)], 1.0)
        .map_err(e)?;
    let sys = uni.to_cyclic();
    let a1 = verify_a1(&CharFunction::from_unidirectional(&uni), 0.5).map_err(e)?;
    ensure(a1.holds, || "leading pair condition fails".into())?;
    let mode = LeadingMode::new(&CharFunction::from_cyclic(&sys), Complex64::new(a1.sigma0, a1.omega)).map_err(e)?;
    let bx = attractor_box(&uni).map_err(e)?;
    let eps = 1e-3 * bx.radius();
    let cfg = OrbitConfig::default();
    let run = |eps: f64, cfg: &OrbitConfig| {
        let seed = seed_on_eigenspace(&sys, &a1.spectrum, eps, cfg.m)?;
        detect_cycle(&sys, Some(&mode), &seed, Some(&bx), cfg)
    };
    let base = run(eps, &cfg).map_err(e)?;
    ensure(base.converged, || format!("no convergence, status {:?}", base.status))?;
    let ver = base.verification.clone().unwrap();
    let fine = run(eps, &OrbitConfig { m: 2 * cfg.m, ..cfg.clone() }).map_err(e)?;
    let drift = ((fine.period - base.period) / base.period).abs();
    ensure(fine.converged && drift < 1e-4, || format!("period drift {drift:.2e} under m doubling"))?;
    ensure(ver.v_equals_one, || format!("V reaches {} on the orbit", ver.v_max))?;
    ensure(ver.in_box == Some(true), || "orbit leaves the attractor box".into())?;
    ensure(ver.periodicity_residual <= 1e-4, || format!("periodicity residual {:.2e}", ver.periodicity_residual))?;
    let double = run(2.0 * eps, &cfg).map_err(e)?;
    let hd = hausdorff_relative(&base.points(), &double.points());
    ensure(double.converged && hd <= 1e-3, || format!("seed dependence {hd:.2e}"))?;
    ensure(ver.projected_simple, || "projected orbit self-intersects".into())?;
    ensure(ver.radii_increasing, || "crossing radii not increasing".into())?;
    Ok(format!("period {:.6}, drift {drift:.1e}, Hausdorff {hd:.1e}", base.period))
}

fn repressilator_pipeline() -> Outcome {
    let e = |err: cyclic_dde::Error| err.to_string();
    let eq = equilibrium_gene(&repressilator_preset(6.0, 2.0, 1.0).map_err(e)?).map_err(e)?;
    let d = (0.25f64 + 1.0 / 27.0).sqrt();
    let cubic = (0.5 + d).cbrt() + (0.5 - d).cbrt();
    ensure(eq.p.iter().all(|p| (p - cubic).abs() <= 1e-8), || format!("p* = {:?}, cubic root {cubic}", eq.p))?;
    let mut summary = Vec::new();
    for t in [0.5, 1.0, 4.0, 8.0] {
        let net = repressilator_preset(t, 2.0, 3.0).map_err(e)?;
        let tr = to_unidirectional(&net).map_err(e)?;
        let uni = &tr.system;
        ensure(validate_feedback(uni, &SampleGrid::default()).map_err(e)?.pass, || format!("T={t}: sign check fails"))?;
        let ku = k_u(&uni.mu, 1.0).map_err(e)?;
        let bx = attractor_box(uni).map_err(e)?;
        let rep = detect_from_eigenspace(
            &uni.to_cyclic(),
            &CharFunction::from_unidirectional(uni),
            Some(&bx),
            None,
            0.5,
            &OrbitConfig::default(),
        )
        .map_err(e)?
        .report;
        ensure(rep.converged == (tr.k > ku), || format!("T={t}: K/K_u = {:.3} but status {:?}", tr.k / ku, rep.status))?;
        if rep.converged {
            let upper = net.invariant_box();
            let inside = rep
                .samples
                .iter()
                .all(|s| tr.gene_values_of_point(&s.x).iter().zip(&upper).all(|(v, u)| *v > 0.0 && v < u));
            ensure(inside, || format!("T={t}: orbit leaves the gene box"))?;
        }
        summary.push(format!("T={t}: K/K_u={:.3} {}", tr.k / ku, if rep.converged { "orbit" } else { "decay" }));
    }
    Ok(summary.join(", "))
}

fn difference_signs() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for pair in 0..20 {
        let sys = common::random_bidirectional(&mut rng, 4);
        let x0 = common::random_state(&mut rng, sys.tau, 64, sys.dim(), 1.0);
        let y0 = common::random_state(&mut rng, sys.tau, 64, sys.dim(), 1.0);
        let tx = integrate(&sys, &x0, 20.0 * sys.tau, 64).map_err(|e| e.to_string())?;
        let ty = integrate(&sys, &y0, 20.0 * sys.tau, 64).map_err(|e| e.to_string())?;
        let n = sys.n();
        for k in 0..=400 {
            let t = 20.0 * sys.tau * k as f64 / 400.0;
            let coef = difference_coefficients(&tx, &ty, &sys, t).map_err(|e| e.to_string())?;
            let ok = coef.iter().enumerate().all(|(i, c)| {
                if i == n {
                    c.b < 0.0
                } else if i == 0 {
                    c.b > 0.0
                } else {
                    c.a >= 0.0 && c.b > 0.0
                }
            });
            ensure(ok, || format!("pair {pair}, t = {t}: {coef:?}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} sampled times"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("lyapunov functional exactness on model states", lyapunov_exactness, 1),
        ("V nonincreasing along random solutions", v_monotonicity, 60),
        ("integrator convergence order", integrator_order, 10),
        ("scalar closed-form borders", scalar_borders, 1),
        ("two-component border agreement and ordering", two_component_borders, 5),
        ("three-component border orderings", three_component_orders, 2),
        ("leading pair crosses at the stability border", hopf_crossing, 60),
        ("periodic orbit suite", orbit_suite, 120),
        ("gene loop pipeline", repressilator_pipeline, 300),
        ("difference system sign pattern", difference_signs, 30),
    ];
    // straight to stdout so the report shows without --nocapture
    let mut out = std::io::stdout().lock();
    writeln!(out).unwrap();
    let mut failed = Vec::new();
    for (k, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > Duration::from_secs(*limit) => Err(format!("{msg}; took {took:.1?}, limit {limit} s")),
            o => o,
        };
        match outcome {
            Ok(msg) => writeln!(out, "PASS {:>2} {name} ({took:.2?}): {msg}", k + 1).unwrap(),
            Err(msg) => {
                writeln!(out, "FAIL {:>2} {name} ({took:.2?}): {msg}", k + 1).unwrap();
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
