//! Parseval frame against orthonormal Loewdin basis on growing windows, for a
//! Chern band and a trivial band.

use std::path::Path;

use aperiodic_wannier::cli::ExperimentConfig;
use aperiodic_wannier::frames::dichotomy_experiment;

fn main() -> aperiodic_wannier::Result<()> {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in ["flux-1-3.toml", "trivial.toml"] {
        let c = ExperimentConfig::load(&configs.join(name), &[])?;
        println!("{name}");
        for row in dichotomy_experiment(&c.model, &c.frames.dichotomy_options(&c.spectral, &c.chern), c.seed)? {
            let kappa = if row.gram_singular { "singular".to_string() } else { row.kappa.map_or("-".into(), |k| format!("{k:.2}")) };
            println!(
                "  window {:>4}: chern {:+.4}, Loewdin kappa {kappa}, Parseval max moment {:.4}",
                row.window, row.chern, row.parseval_max_moment
            );
        }
    }
    Ok(())
}
