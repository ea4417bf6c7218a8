//! Parseval frame of projected magnetic translates for the flux 1/3 lowest band.

use aperiodic_wannier::frames::{
    dual_reconstruction_residual, interior_probes, localization_report, parseval_normalize, parseval_residual, resolution_of_identity_residual,
    seeds_per_center, translate_family, Seed, SeedProfile,
};
use aperiodic_wannier::model::ModelSpec;
use aperiodic_wannier::spectral::projection_below_gap;

fn main() -> aperiodic_wannier::Result<()> {
    let spec = ModelSpec::hofstadter(1.0 / 3.0);
    let (set, h) = spec.build(12.0, 0)?;
    let p = projection_below_gap(&h, 0.5, 0)?;
    let m = seeds_per_center(p.rank, set.len());
    let seeds = vec![Seed { profile: SeedProfile::Gaussian { width: 0.3 }, orbital: 0 }; m];
    let family = translate_family(&seeds, &set.points, &spec.cocycle()?, &p)?;
    let frame = parseval_normalize(&family, &p)?;
    println!("rank {}, {} translates, frame bounds ({:.4}, {:.4})", p.rank, family.len(), frame.bounds.0, frame.bounds.1);
    println!("after normalization ({:.12}, {:.12})", frame.parseval_bounds.0, frame.parseval_bounds.1);

    let probes = interior_probes(&p, 100, 1, None);
    println!("Parseval residual {:.1e}", parseval_residual(&frame.vectors, &probes));
    println!("sum g g* - P {:.1e}", resolution_of_identity_residual(&frame.vectors, &p));
    println!("dual reconstruction {:.1e}", dual_reconstruction_residual(&family.vectors, &p, &probes)?);

    let loc = localization_report(&frame.vectors, &frame.centers, &p.basis, 1.0);
    println!("second moments: max {:.4}, mean {:.4}", loc.max_moment, loc.mean_moment);
    Ok(())
}
