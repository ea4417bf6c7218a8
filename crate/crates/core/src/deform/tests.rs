use super::*;
use crate::chern::{bloch_oracle, PeriodicModel};
use crate::model::HoppingSpec;
use crate::pointsets::{generate, Generator, Window};

fn radial_model() -> ModelSpec {
    let mut spec = ModelSpec::hofstadter(1.0 / 3.0);
    spec.hopping = HoppingSpec::Radial { t: -1.0, decay: 4.0, cut_in: 1.2, range: 1.35 };
    spec
}

#[test]
fn constant_path_is_constant() {
    let spec = radial_model();
    let set = spec.point_set(12.0, 0).unwrap();
    let path = DeformationPath::piecewise_constant(vec![(0.0, set.clone()), (0.5, set.clone()), (1.0, set)]).unwrap();
    let options = TrackingOptions { resolvent_z: Some([0.0, 0.5]), ..Default::default() };
    let report = run_lattice_deformation(&path, &spec, &options).unwrap();
    assert_eq!(report.verdict, Verdict::Constant);
    assert_eq!(report.max_drift, 0.0);
    assert!(report.resolvent_checks.iter().all(|c| c.bound.lhs == 0.0 && c.bound.holds));
}

#[test]
fn small_jitter_keeps_chern() {
    let spec = radial_model();
    let set = spec.point_set(12.0, 0).unwrap();
    let path = jitter_path(&set, 0.05, 5, 1).unwrap();
    // 12x12 is below the window size where the drift tolerance 0.05 applies.
    let options = TrackingOptions { resolvent_z: Some([0.0, 0.5]), fractions: vec![0.5], tolerance: 0.1, ..Default::default() };
    let report = run_lattice_deformation(&path, &spec, &options).unwrap();
    assert_eq!(report.verdict, Verdict::Constant, "{report:?}");
    assert_eq!(report.samples.len(), 5);
    assert!(report.resolvent_checks.len() == 4 && report.resolvent_checks.iter().all(|c| c.bound.holds));
}

#[test]
fn large_jitter_closes_the_gap() {
    let spec = radial_model();
    let set = spec.point_set(12.0, 0).unwrap();
    let path = jitter_path(&set, 0.24, 11, 1).unwrap();
    let options = TrackingOptions { min_gap: 0.6, fractions: vec![0.5], ..Default::default() };
    let report = run_lattice_deformation(&path, &spec, &options).unwrap();
    let Verdict::GapClosed { t } = report.verdict else { panic!("{report:?}") };
    assert!(t > 0.0);
    assert!(report.samples.last().unwrap().t < t);
    assert!(matches!(report.into_result(), Err(Error::GapClosed { .. })));
}

#[test]
fn constant_field_and_small_sweep() {
    let spec = ModelSpec::hofstadter(1.0 / 3.0);
    let set = spec.point_set(12.0, 0).unwrap();
    let options = TrackingOptions { fractions: vec![0.5], ..Default::default() };
    let fixed = flux_path(48, 0, 3, 144);
    let report = run_field_deformation(&set, &fixed, &spec, &options).unwrap();
    assert_eq!(report.max_drift, 0.0);
    let sweep = flux_path(48, 1, 4, 144);
    let report = run_field_deformation(&set, &sweep, &spec, &options).unwrap();
    assert_eq!(report.verdict, Verdict::Constant, "{report:?}");
    assert!(report.samples.windows(2).all(|w| w[1].rank == w[0].rank + 1));
}

#[test]
fn sweep_to_half_flux_closes_the_gap() {
    assert!(matches!(bloch_oracle(&PeriodicModel::new(1, 2), 1, 24), Err(Error::GaplessBand { .. })));
    let spec = ModelSpec::hofstadter(1.0 / 3.0);
    let set = spec.point_set(24.0, 0).unwrap();
    let options = TrackingOptions { min_gap: 0.6, fractions: vec![0.5], ..Default::default() };
    let report = run_field_deformation(&set, &flux_path(192, 24, 5, 576), &spec, &options).unwrap();
    assert_eq!(report.verdict, Verdict::GapClosed { t: 1.0 }, "{report:?}");
}

#[test]
fn jitter_stays_in_ball() {
    let set = generate(&Generator::PeriodicSquare { spacing: 1.0 }, &Window::cube(2, 0.0, 6.0), 0, true).unwrap();
    let moved = jittered(&set, 0.1, 4).unwrap();
    let period = set.period();
    for (p, q) in set.points.iter().zip(&moved.points) {
        assert!(crate::pointsets::distance(p, q, period.as_deref()) <= 0.1 + 1e-12);
        assert!(moved.window.contains(q));
    }
    assert!(jittered(&set, 0.6, 0).is_err());
}

#[test]
fn resolvent_sweep_scales_with_step() {
    let w = Window::cube(2, 0.0, 4.0);
    let a = DeloneSet { r: 0.9, ..generate(&Generator::PeriodicSquare { spacing: 2.0 }, &w, 0, false).unwrap() };
    let b = jittered(&a, 0.1, 3).unwrap();
    let spec = ContinuumSpec { potential: AtomicPotential::Bump { amplitude: 2.0, radius: 0.6 }, pitch: 0.2, flux: 0.05 };
    let constant = DeformationPath::piecewise_constant(vec![(0.0, a.clone()), (1.0, a.clone())]).unwrap();
    let flat = resolvent_continuity_sweep(&constant, c64::new(0.5, 0.5), &spec).unwrap();
    assert_eq!(flat.median_lhs, 0.0);
    let halving = step_halving(&a, &b, 5, c64::new(0.5, 0.5), &spec).unwrap();
    assert!(halving.coarse.all_hold && halving.fine.all_hold);
    assert!((0.3..=0.7).contains(&halving.ratio), "{}", halving.ratio);
    assert!(matches!(resolvent_continuity_sweep(&constant, c64::new(0.5, 0.0), &spec), Err(Error::RealShift)));
}
