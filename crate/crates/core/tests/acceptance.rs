//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use aperiodic_wannier::chern::{bloch_oracle, chern_of_matrix, chern_top};
use aperiodic_wannier::cli::{reference_model, ExperimentConfig};
use aperiodic_wannier::deform::{flux_path, jitter_path, run_field_deformation, run_lattice_deformation, step_halving, jittered, Verdict};
use aperiodic_wannier::frames::{
    dichotomy_experiment, dual_reconstruction_residual, interior_probes, make_bump_seed, parseval_normalize, parseval_residual,
    resolution_of_identity_residual, seeds_per_center, translate_family, Seed, SeedProfile,
};
use aperiodic_wannier::linalg::{self, c64, CMat, ZERO};
use aperiodic_wannier::magnetics::{cocycle_identity_residual, inverse_conjugation_residuals, sigma, MagneticCocycle};
use aperiodic_wannier::model::{ModelSpec, OnsiteSpec};
use aperiodic_wannier::operators::{frechet_seminorm, twisted_convolve, Basis, Boundary, GridBasis, KernelOperator, SiteBasis};
use aperiodic_wannier::pointsets::{generate, DeloneSet, Generator, Window};
use aperiodic_wannier::spectral::{eig, projection_from_eigen, Interval, ProjectionOptions, SpectralProjection};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn config(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
    ExperimentConfig::load(&path, &[]).unwrap()
}

/// Projection onto the lowest `rank` eigenvectors.
fn lowest(h: &KernelOperator, rank: usize) -> SpectralProjection {
    let (values, vectors) = eig(h).unwrap();
    let delta = Interval::new(values[0] - 1.0, 0.5 * (values[rank - 1] + values[rank]));
    projection_from_eigen(h, &values, &vectors, delta, &ProjectionOptions::default()).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| 10.0 * (rng.random::<f64>() - 0.5)).collect()
}

fn cocycle_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for d in [2usize, 3] {
        let upper: Vec<f64> = (0..d * (d - 1) / 2).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let c = MagneticCocycle::from_upper(d, &upper).unwrap();
        for _ in 0..1000 {
            let (x, y, z) = (random_point(&mut rng, d), random_point(&mut rng, d), random_point(&mut rng, d));
            let minus_x: Vec<f64> = x.iter().map(|v| -v).collect();
            let (a, b) = inverse_conjugation_residuals(&c, &x, &y);
            worst = worst.max(cocycle_identity_residual(&c, &x, &y, &z)).max((sigma(&c, &x, &minus_x) - c64::new(1.0, 0.0)).norm()).max(a).max(b);
        }
    }
    let elapsed = start.elapsed();
    check(worst < 1e-12 && elapsed < Duration::from_secs(1), format!("max residual {worst:.2e} over 2000 triples in {elapsed:.2?}"))
}

fn random_kernel(rng: &mut ChaCha8Rng, basis: &Basis, c: &MagneticCocycle) -> KernelOperator {
    let pts = basis.positions();
    let n = pts.len();
    let m = CMat::from_fn(n, n, |i, j| {
        let d: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * (-d).exp()
    });
    KernelOperator::new(m, basis.clone(), c.clone()).unwrap()
}

fn algebra_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let window = Window::new(vec![0.0, 0.0], vec![5.0, 6.0]).unwrap();
    let mut assoc = 0.0f64;
    let mut violations = 0;
    for _ in 0..100 {
        let points: Vec<Vec<f64>> =
            (0..30).map(|k| vec![0.5 + (k % 5) as f64 + 0.4 * (rng.random::<f64>() - 0.5), 0.5 + (k / 5) as f64 + 0.4 * (rng.random::<f64>() - 0.5)]).collect();
        let set = DeloneSet::new(points, 0.3, 1.2, window.clone()).unwrap();
        let basis = Basis::Sites(SiteBasis::new(set, 1));
        let c = MagneticCocycle::planar(2.0 * rng.random::<f64>() - 1.0);
        let (f, g, h) = (random_kernel(&mut rng, &basis, &c), random_kernel(&mut rng, &basis, &c), random_kernel(&mut rng, &basis, &c));
        let fg = twisted_convolve(&f, &g).unwrap();
        let left = twisted_convolve(&fg, &h).unwrap();
        let right = twisted_convolve(&f, &twisted_convolve(&g, &h).unwrap()).unwrap();
        assoc = assoc.max(linalg::max_abs(&(left.matrix - right.matrix)));
        for n in 0..=2 {
            if frechet_seminorm(&fg, n) > frechet_seminorm(&f, n) * frechet_seminorm(&g, n) * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        assoc < 1e-10 && violations == 0 && elapsed < Duration::from_secs(30),
        format!("associativity residual {assoc:.2e}, {violations} seminorm violations, {elapsed:.2?}"),
    )
}

fn frame_suite() -> Outcome {
    let start = Instant::now();
    let set = DeloneSet::new(
        (0..3).flat_map(|i| (0..3).map(move |j| vec![1.0 + 2.0 * i as f64, 1.0 + 2.0 * j as f64])).collect(),
        0.9,
        2.0,
        Window::cube(2, 0.0, 6.0),
    )
    .unwrap();
    let grid = Basis::Grid(GridBasis::new(Window::cube(2, 0.0, 6.0), 0.05, Boundary::Open).unwrap());
    let cols: Vec<Vec<c64>> = set.points.iter().map(|y| make_bump_seed(&set, y, 0.45, &grid).unwrap()).collect();
    let w = linalg::from_columns(grid.len(), &cols);
    let gram = linalg::max_abs(&(w.adjoint() * &w - linalg::identity(cols.len())));

    let spec = ModelSpec::hofstadter(1.0 / 3.0);
    let (set, h) = spec.build(24.0, 0).unwrap();
    let p = lowest(&h, 192);
    let m = seeds_per_center(p.rank, set.len());
    let family = translate_family(&vec![Seed { profile: SeedProfile::Gaussian { width: 0.3 }, orbital: 0 }; m], &set.points, &spec.cocycle().unwrap(), &p).unwrap();
    let frame = parseval_normalize(&family, &p).unwrap();
    let probes = interior_probes(&p, 100, 13, None);
    let residual = parseval_residual(&frame.vectors, &probes);
    let identity = resolution_of_identity_residual(&frame.vectors, &p);
    let dual = dual_reconstruction_residual(&family.vectors, &p, &probes).unwrap();
    let elapsed = start.elapsed();
    check(
        gram < 1e-12 && residual < 1e-6 && identity < 1e-6 && dual < 1e-8 && elapsed < Duration::from_secs(120),
        format!("bump Gram {gram:.1e}, Parseval {residual:.1e}, sum gg* - P {identity:.1e}, dual {dual:.1e}, {elapsed:.2?}"),
    )
}

fn chern_suite() -> Outcome {
    let start = Instant::now();
    let fractions = [0.3, 0.4, 0.5];
    let mut lines = Vec::new();
    let mut ok = true;
    let cases: Vec<(ModelSpec, f64, usize)> = vec![
        (ModelSpec::hofstadter(1.0 / 3.0), 24.0, 1),
        (ModelSpec::hofstadter(1.0 / 3.0), 24.0, 2),
        (ModelSpec::hofstadter(0.25), 24.0, 1),
        (ModelSpec::hofstadter(0.2), 30.0, 1),
        (ModelSpec::hofstadter(0.4), 40.0, 1),
        (ModelSpec { onsite: OnsiteSpec::Stripe { values: vec![3.0, 0.0, 0.0] }, ..ModelSpec::hofstadter(0.0) }, 24.0, 1),
    ];
    let mut projections = Vec::new();
    for (spec, size, bands) in &cases {
        let reference = reference_model(spec).unwrap();
        let oracle = bloch_oracle(&reference, *bands, 24).unwrap().chern;
        let (set, h) = spec.build(*size, 0).unwrap();
        let p = lowest(&h, bands * set.len() / reference.cell());
        let c = chern_top(&p, &fractions, 0.05).unwrap();
        let good = (c.value - oracle as f64).abs() < 0.05 && c.imaginary.abs() < 1e-6;
        ok &= good;
        lines.push(format!("flux {:.3} bands {bands}: {:.4} vs oracle {oracle}", spec.flux.unwrap(), c.value));
        projections.push((p, c.value));
    }

    let trivial = ModelSpec::two_orbital(0.5, 0.35, 3.0);
    let (set, h) = trivial.build(24.0, 0).unwrap();
    let c_trivial = chern_top(&lowest(&h, set.len()), &fractions, 0.05).unwrap().value;
    ok &= c_trivial.abs() < 0.02;
    lines.push(format!("two-orbital {c_trivial:.1e}"));

    // P1 (+) P2 on two orbitals per site, flux 1/3 and 1/4 lowest bands.
    let (p1, c1) = &projections[0];
    let (p2, c2) = &projections[2];
    let n = p1.matrix.nrows();
    let block = CMat::from_fn(2 * n, 2 * n, |i, j| match (i % 2, j % 2) {
        (0, 0) => p1.matrix[(i / 2, j / 2)],
        (1, 1) => p2.matrix[(i / 2, j / 2)],
        _ => ZERO,
    });
    let Basis::Sites(sites) = &p1.basis else { unreachable!() };
    let doubled = Basis::Sites(SiteBasis::new(sites.set.clone(), 2));
    let sum = chern_of_matrix(&block, &doubled, &[0, 1], &fractions, 0.05).unwrap().value;
    ok &= (sum - c1 - c2).abs() < 0.02;
    lines.push(format!("additivity {sum:.4} vs {:.4}", c1 + c2));

    let lattice = generate(&Generator::PeriodicSquare { spacing: 2.0 }, &Window::cube(2, 0.0, 6.0), 0, true).unwrap();
    let grid = Basis::Grid(GridBasis::new(Window::cube(2, 0.0, 6.0), 0.125, Boundary::Periodic).unwrap());
    let cols: Vec<Vec<c64>> = lattice.points.iter().map(|y| make_bump_seed(&lattice, y, 0.49, &grid).unwrap()).collect();
    let w = linalg::from_columns(grid.len(), &cols);
    let free = chern_of_matrix(&(&w * w.adjoint()), &grid, &[0, 1], &fractions, 0.05).unwrap().value;
    ok &= free.abs() < 0.02;
    lines.push(format!("free module {free:.1e}"));

    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(300);
    check(ok, format!("{}; {elapsed:.2?}", lines.join(", ")))
}

fn dichotomy_suite() -> Outcome {
    let start = Instant::now();
    let run = |name: &str| {
        let c = config(name);
        dichotomy_experiment(&c.model, &c.frames.dichotomy_options(&c.spectral, &c.chern), c.seed).unwrap()
    };
    let hof = run("flux-1-3.toml");
    let triv = run("trivial.toml");
    let (h0, h1) = (&hof[0], &hof[hof.len() - 1]);
    let (t0, t1) = (&triv[0], &triv[triv.len() - 1]);
    let moment_change = |a: f64, b: f64| (b / a - 1.0).abs();
    let hof_frame = moment_change(h0.parseval_max_moment, h1.parseval_max_moment);
    let growth = match (h0.kappa, h1.kappa) {
        (Some(a), Some(b)) => b / a,
        _ => f64::INFINITY,
    };
    let hof_ok = hof_frame < 0.2 && (h1.gram_singular || growth >= 10.0);
    let triv_kappa = t1.kappa.unwrap_or(f64::INFINITY) / t0.kappa.unwrap_or(f64::NAN);
    let triv_moment = match (t0.loewdin_max_moment, t1.loewdin_max_moment) {
        (Some(a), Some(b)) => moment_change(a, b),
        _ => f64::INFINITY,
    };
    let triv_frame = moment_change(t0.parseval_max_moment, t1.parseval_max_moment);
    let triv_ok = (0.5..=2.0).contains(&triv_kappa) && triv_moment < 0.2 && triv_frame < 0.2;
    let elapsed = start.elapsed();
    check(
        hof_ok && triv_ok && elapsed < Duration::from_secs(600),
        format!(
            "flux 1/3: Parseval moment change {:.1}%, Gram singular at {} = {}, kappa growth {growth:.2e}; trivial: kappa ratio {triv_kappa:.3}, Loewdin moment change {:.2}%, Parseval moment change {:.2}%; {elapsed:.2?}",
            100.0 * hof_frame,
            h1.window,
            h1.gram_singular,
            100.0 * triv_moment,
            100.0 * triv_frame
        ),
    )
}

fn deformation_suite() -> Outcome {
    let start = Instant::now();
    let lattice = config("deform-lattice.toml");
    let set = lattice.model.point_set(lattice.window.size, lattice.seed).unwrap();
    let path = jitter_path(&set, lattice.deform.jitter, lattice.deform.samples, lattice.seed + 1).unwrap();
    let a = run_lattice_deformation(&path, &lattice.model, &lattice.deform.tracking).unwrap();

    let field = config("deform-field.toml");
    let set = field.model.point_set(field.window.size, field.seed).unwrap();
    let fp = field.deform.flux_path.unwrap();
    let b = run_field_deformation(&set, &flux_path(fp.start, fp.step, field.deform.samples, fp.denominator), &field.model, &field.deform.tracking).unwrap();

    let sweep = config("resolvent.toml");
    let start_set = sweep.model.point_set(sweep.window.size, sweep.seed).unwrap();
    let end_set = jittered(&start_set, sweep.deform.jitter, sweep.seed + 1).unwrap();
    let z = c64::new(sweep.deform.sweep_z[0], sweep.deform.sweep_z[1]);
    let halving = step_halving(&start_set, &end_set, sweep.deform.samples, z, &sweep.deform.continuum).unwrap();

    let gapped = |r: &aperiodic_wannier::deform::GappedPathReport| {
        r.verdict == Verdict::Constant && r.max_drift < 0.05 && r.samples.iter().all(|s| s.margin > 0.0) && r.resolvent_checks.iter().all(|c| c.bound.holds)
    };
    let bounds = halving.coarse.all_hold && halving.fine.all_hold;
    let elapsed = start.elapsed();
    check(
        gapped(&a) && gapped(&b) && bounds && (0.3..=0.7).contains(&halving.ratio) && elapsed < Duration::from_secs(600),
        format!(
            "lattice drift {:.3} ({} samples), field drift {:.1e} ({} samples), resolvent bounds hold {}, halving ratio {:.4}; {elapsed:.2?}",
            a.max_drift,
            a.samples.len(),
            b.max_drift,
            b.samples.len(),
            bounds && a.resolvent_checks.iter().chain(&b.resolvent_checks).all(|c| c.bound.holds),
            halving.ratio
        ),
    )
}

fn run_cli(dir: &Path, threads: usize, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_aperiodic-wannier"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("APERIODIC_WANNIER_THREADS", threads.to_string())
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} exited with {status}"))
    }
}

fn outputs(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<(PathBuf, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().is_some_and(|n| n != "manifest.json"))
        .map(|p| (PathBuf::from(p.file_name().unwrap()), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let runs: [(&str, &str); 4] =
        [("flux-1-3.toml", "chern"), ("flux-1-3.toml", "dichotomy"), ("trivial.toml", "frame"), ("deform-field.toml", "deform")];
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (k, (file, command)) in runs.iter().enumerate() {
        let cfg = configs.join(file);
        let mut seen = Vec::new();
        for threads in [1usize, 4] {
            let dir = tmp.path().join(format!("{k}-{threads}"));
            run_cli(&dir, threads, &["--config", cfg.to_str().unwrap(), "--seed", "7", command])?;
            seen.push(outputs(&dir));
        }
        if seen[0] != seen[1] {
            return Err(format!("{command} on {file} differs between 1 and 4 threads"));
        }
        compared += seen[0].len();
    }
    Ok(format!("{compared} output files byte-identical across thread caps 1 and 4"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("cocycle suite", cocycle_suite),
        ("algebra suite", algebra_suite),
        ("frame suite", frame_suite),
        ("chern suite", chern_suite),
        ("dichotomy", dichotomy_suite),
        ("deformation", deformation_suite),
        ("determinism", determinism),
    ];
    // ACCEPTANCE_ONLY=2,4 restricts the run to the listed criteria.
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY").ok().map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(k + 1))) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL: {detail}", k + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
