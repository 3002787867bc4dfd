use std::f64::consts::TAU;

use emhydro::checks::good_fluid_points;
use emhydro::field::GridSpec;
use emhydro::presets::InitialField;
use emhydro::reconstruct::invert_labels;
use emhydro::so3::EulerAngles;
use emhydro::PhysicalConstants;
use nalgebra::Vector3;

fn consts() -> PhysicalConstants {
    PhysicalConstants {
        eps0: 2.0,
        ..Default::default()
    }
}

#[test]
fn plane_wave_labels_are_straight_line_preimages() {
    let k = consts();
    let field = InitialField::plane_wave(1.0, TAU)
        .build(GridSpec::line_z(64, 1.0), k)
        .unwrap();
    let t = 0.3;
    let queries: Vec<_> = [(0.2, 0.7, 0.4, 1.1), (0.6, 1.9, 2.5, 0.2), (0.9, 1.2, 5.0, 3.3)]
        .iter()
        .map(|&(z, a, b, g)| (Vector3::new(0.0, 0.0, z), EulerAngles::new(a, b, g)))
        .collect();
    for (s, (x, at)) in invert_labels(&field, &queries, t, 0.01).iter().zip(&queries) {
        let s = s.as_ref().unwrap();
        let cot = 1.0 / at.alpha.tan();
        let v = Vector3::new(-at.beta.sin() * cot, -at.beta.cos() * cot, 1.0) * k.c;
        assert!((s.label.q0 - (x - v * t)).amax() < 1e-12);
        assert!((s.label.theta0.to_vector() - at.to_vector()).amax() < 1e-12);
        assert!(s.residual < 1e-12);
    }
}

#[test]
fn labels_at_time_zero_are_the_queries() {
    let field = InitialField::standing_wave(1.0, TAU)
        .build(GridSpec::line_z(64, 1.0), consts())
        .unwrap();
    let queries = good_fluid_points(&field, 0.0, 8, 0.1);
    for (s, q) in invert_labels(&field, &queries, 0.0, 0.01).iter().zip(&queries) {
        let s = s.as_ref().unwrap();
        assert_eq!(s.label.q0, q.0);
        assert_eq!(s.label.theta0, q.1);
    }
}

#[test]
fn standing_wave_round_trip_is_below_1e8_of_the_domain() {
    let field = InitialField::standing_wave(1.0, TAU)
        .build(GridSpec::line_z(64, 1.0), consts())
        .unwrap();
    let t = 0.25;
    let queries = good_fluid_points(&field, t, 32, 0.1);
    let samples = invert_labels(&field, &queries, t, t / 200.0);
    let worst = samples.iter().map(|s| s.as_ref().unwrap().residual).fold(0.0, f64::max);
    assert!(samples.len() > 50);
    assert!(worst < 1e-8, "worst residual {worst:e}");
}
