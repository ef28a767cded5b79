use cyclic_dde::genenet::{repressilator_preset, to_unidirectional};
use cyclic_dde::orbit::{detect_from_eigenspace, OrbitConfig, OrbitStatus};
use cyclic_dde::spectral::{k_u, CharFunction};
use cyclic_dde::steady::{attractor_box, equilibrium_gene};
use cyclic_dde::systems::{validate_feedback, SampleGrid};

/// Real root of `p^3 + p - 1 = 0` by Cardano's formula.
fn cubic_root() -> f64 {
    let d = (1.0f64 / 4.0 + 1.0 / 27.0).sqrt();
    (0.5 + d).cbrt() + (0.5 - d).cbrt()
}

#[test]
fn equilibrium_matches_cubic() {
    let eq = equilibrium_gene(&repressilator_preset(6.0, 2.0, 1.0).unwrap()).unwrap();
    for i in 0..3 {
        assert!((eq.p[i] - cubic_root()).abs() < 1e-12);
        assert!((eq.r[i] - cubic_root()).abs() < 1e-12);
    }
    assert!((cubic_root() - 0.682328).abs() < 1e-6);
}

#[test]
fn transformed_loop_passes_validation() {
    for (t, beta) in [(0.5, 1.0), (6.0, 1.0), (4.0, 3.0)] {
        let tr = to_unidirectional(&repressilator_preset(t, 2.0, beta).unwrap()).unwrap();
        assert!(validate_feedback(&tr.system, &SampleGrid::default()).unwrap().pass);
    }
}

#[test]
fn orbit_detection_follows_border() {
    // beta = 1 keeps K below K_u for every delay, so the grid uses beta = 3;
    // T = 2 sits within a few percent of the border and is left out
    for t in [0.5, 1.0, 4.0, 8.0] {
        let net = repressilator_preset(t, 2.0, 3.0).unwrap();
        let tr = to_unidirectional(&net).unwrap();
        let uni = &tr.system;
        let ku = k_u(&uni.mu, 1.0).unwrap();
        let bx = attractor_box(uni).unwrap();
        let run = detect_from_eigenspace(
            &uni.to_cyclic(),
            &CharFunction::from_unidirectional(uni),
            Some(&bx),
            None,
            0.5,
            &OrbitConfig::default(),
        )
        .unwrap();
        let rep = run.report;
        assert_eq!(rep.converged, tr.k > ku, "T = {t}");
        if rep.converged {
            let ver = rep.verification.as_ref().unwrap();
            assert!(ver.v_equals_one && ver.in_box == Some(true));
            let upper = net.invariant_box();
            for s in &rep.samples {
                let g = tr.gene_values_of_point(&s.x);
                assert!(g.iter().zip(&upper).all(|(v, u)| *v > 0.0 && v < u));
            }
        } else {
            assert_eq!(rep.status, OrbitStatus::Decaying);
        }
    }
}
