//! Gapped deformations: a jittered lattice path, a small flux sweep, and a
//! continuum resolvent sweep with step halving.

use aperiodic_wannier::deform::{flux_path, jitter_path, jittered, run_field_deformation, run_lattice_deformation, step_halving, ContinuumSpec, TrackingOptions};
use aperiodic_wannier::linalg::c64;
use aperiodic_wannier::model::{HoppingSpec, ModelSpec};
use aperiodic_wannier::operators::AtomicPotential;
use aperiodic_wannier::pointsets::{generate, DeloneSet, Generator, Window};

fn main() -> aperiodic_wannier::Result<()> {
    let mut spec = ModelSpec::hofstadter(1.0 / 3.0);
    spec.hopping = HoppingSpec::Radial { t: -1.0, decay: 4.0, cut_in: 1.2, range: 1.35 };
    let set = spec.point_set(12.0, 0)?;
    let options = TrackingOptions { resolvent_z: Some([0.0, 0.5]), fractions: vec![0.5], tolerance: 0.1, ..Default::default() };
    let report = run_lattice_deformation(&jitter_path(&set, 0.05, 5, 1)?, &spec, &options)?;
    println!("jittered lattice: {:?}, max drift {:.4}", report.verdict, report.max_drift);
    for s in &report.samples {
        println!("  t {:.2}: gap ({:.3}, {:.3}), chern {:+.4}", s.t, s.gap.0, s.gap.1, s.chern);
    }

    let hofstadter = ModelSpec::hofstadter(1.0 / 3.0);
    let report = run_field_deformation(&set, &flux_path(48, 1, 4, 144), &hofstadter, &options)?;
    println!("flux sweep 48/144..51/144: {:?}, max drift {:.2e}", report.verdict, report.max_drift);

    let a = DeloneSet { r: 0.9, ..generate(&Generator::PeriodicSquare { spacing: 2.0 }, &Window::cube(2, 0.0, 4.0), 0, false)? };
    let b = jittered(&a, 0.1, 3)?;
    let continuum = ContinuumSpec { potential: AtomicPotential::Bump { amplitude: 2.0, radius: 0.6 }, pitch: 0.2, flux: 0.05 };
    let halving = step_halving(&a, &b, 5, c64::new(0.5, 0.5), &continuum)?;
    println!(
        "resolvent sweep: median lhs {:.3e} -> {:.3e} on halving the step, ratio {:.4}, bounds hold {}",
        halving.coarse.median_lhs,
        halving.fine.median_lhs,
        halving.ratio,
        halving.coarse.all_hold && halving.fine.all_hold
    );
    Ok(())
}
