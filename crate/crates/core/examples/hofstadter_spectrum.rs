//! Spectrum and gaps of the Hofstadter model on a torus, and a spectral projection.

use aperiodic_wannier::model::ModelSpec;
use aperiodic_wannier::spectral::{detect_gaps, eigenvalues, projection_below_gap};

fn main() -> aperiodic_wannier::Result<()> {
    for (flux, size) in [(1.0 / 3.0, 24.0), (0.25, 24.0), (0.2, 20.0)] {
        let (set, h) = ModelSpec::hofstadter(flux).build(size, 0)?;
        let values = eigenvalues(&h)?;
        println!("flux {flux:.4} on {size}x{size} ({} sites), spectrum [{:.4}, {:.4}]", set.len(), values[0], values[values.len() - 1]);
        for gap in detect_gaps(&values, 0.5) {
            println!("  gap ({:.4}, {:.4}) width {:.4}, {} states below", gap.lo, gap.hi, gap.width, gap.below);
        }
        let p = projection_below_gap(&h, 0.5, 0)?;
        println!("  lowest band: rank {}, idempotency residual {:.1e}", p.rank, p.idempotency_residual());
    }
    Ok(())
}
