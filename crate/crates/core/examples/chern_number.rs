//! Real-space Chern numbers against the Bloch oracle.

use aperiodic_wannier::chern::{bloch_oracle, chern_top, PeriodicModel};
use aperiodic_wannier::model::ModelSpec;
use aperiodic_wannier::spectral::projection_below_gap;

fn main() -> aperiodic_wannier::Result<()> {
    for (p, q) in [(1, 3), (1, 4)] {
        let flux = p as f64 / q as f64;
        let (_, h) = ModelSpec::hofstadter(flux).build(24.0, 0)?;
        let proj = projection_below_gap(&h, 0.5, 0)?;
        let c = chern_top(&proj, &[0.3, 0.4, 0.5], 0.05)?;
        let oracle = bloch_oracle(&PeriodicModel::new(p, q), 1, 24)?;
        println!(
            "flux {p}/{q}: real space {:.5} (imaginary {:.1e}, per fraction {:?}), Bloch {}",
            c.value, c.imaginary, c.per_fraction, oracle.chern
        );
    }
    let (_, h) = ModelSpec::two_orbital(0.5, 0.35, 3.0).build(12.0, 0)?;
    let c = chern_top(&projection_below_gap(&h, 0.5, 0)?, &[0.5], 0.05)?;
    println!("two-orbital insulator: {:.2e}", c.value);
    Ok(())
}
