//! Generate Delone sets with each generator, verify them and compare two by Hausdorff distance.

use aperiodic_wannier::deform::jittered;
use aperiodic_wannier::pointsets::{generate, hausdorff_window_distance, verify, Generator, Window};

fn main() -> aperiodic_wannier::Result<()> {
    let window = Window::cube(2, -8.0, 8.0);
    let generators = [
        Generator::PeriodicSquare { spacing: 1.0 },
        Generator::PeriodicTriangular { spacing: 1.0 },
        Generator::CutAndProject { edge: 1.0 },
        Generator::JitteredPeriodic { spacing: 1.0, jitter: 0.2 },
        Generator::RandomHardcore { r: 0.4, big_r: 1.2 },
    ];
    for g in &generators {
        let set = generate(g, &window, 7, false)?;
        let report = verify(&set)?;
        println!(
            "{g:?}: {} points, min distance {:.3} (2r = {:.3}), covering radius {:.3} (R = {:.3}), passed {}",
            set.len(),
            report.min_pair_dist,
            2.0 * set.r,
            report.covering_radius,
            set.big_r,
            report.passed()
        );
    }

    let lattice = generate(&Generator::PeriodicSquare { spacing: 1.0 }, &window, 0, false)?;
    // Radius 5.5 keeps lattice points at least 0.11 away from the sphere.
    for jitter in [0.02, 0.05, 0.1] {
        let moved = jittered(&lattice, jitter, 1)?;
        println!("jitter {jitter}: Hausdorff distance on B(0;5.5) = {:.4}", hausdorff_window_distance(&lattice, &moved, 5.5)?);
    }
    Ok(())
}
