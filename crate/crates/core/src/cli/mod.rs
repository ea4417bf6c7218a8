//! Command-line experiment runner.

mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

pub use config::{apply_override, ChernSpec, DeformMode, DeformSpec, ExperimentConfig, FluxPath, FramesSpec, SpectralSpec, WindowSpec};

use crate::chern::{bloch_oracle, chern_top, PeriodicModel};
use crate::deform::{flux_path, jitter_path, run_field_deformation, run_lattice_deformation, step_halving, jittered};
use crate::error::{Error, Result};
use crate::frames::{
    dichotomy_experiment, dual_reconstruction_residual, interior_probes, localization_report, parseval_normalize, parseval_residual,
    probe_region, resolution_of_identity_residual, seeds_per_center, translate_family, Seed,
};
use crate::linalg::c64;
use crate::model::{HoppingSpec, ModelSpec, OnsiteSpec};
use crate::operators::KernelOperator;
use crate::pointsets::{self, make_path, DeformationPath, DeloneSet, Generator};
use crate::spectral::{detect_gaps, eig, projection_from_eigen, Interval, ProjectionOptions, SpectralProjection};

pub const THREADS_ENV: &str = "APERIODIC_WANNIER_THREADS";

#[derive(Parser, Debug)]
#[command(name = "aperiodic-wannier", version, about = "Magnetic operators on Delone sets")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Random seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Dotted-path override, e.g. `--set model.flux=0.25`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate the point set of the model and write it as text.
    Gen,
    /// Check the Delone conditions of a point-set file.
    Verify {
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Eigenvalues and gaps of the Hamiltonian.
    Spectrum,
    /// Parseval frame of projected magnetic translates.
    Frame {
        /// TOML file holding a replacement `model` table.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Comma-separated window sizes.
        #[arg(long, value_delimiter = ',')]
        windows: Option<Vec<f64>>,
        #[arg(long)]
        seeds_per_cell: Option<usize>,
        /// Report path; defaults to `frame.json` in the output directory.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also write the frame vectors as CSV.
        #[arg(long)]
        dump_vectors: bool,
    },
    /// Real-space Chern number, with the Bloch oracle for periodic reference models.
    Chern,
    /// Parseval frame against Loewdin basis on growing windows.
    Dichotomy,
    /// Gapped deformation of the point set or the field.
    Deform {
        /// Point-set files; two files are joined by a matched straight path.
        #[arg(long, value_delimiter = ',')]
        path: Option<Vec<PathBuf>>,
        /// Comma-separated flux values.
        #[arg(long, value_delimiter = ',')]
        theta_path: Option<Vec<f64>>,
        #[arg(long)]
        mode: Option<DeformModeArg>,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum DeformModeArg {
    Lattice,
    Field,
    Resolvent,
}

/// Runs the CLI and returns the process exit code: 0 on success, 2 for
/// configuration or precondition errors, 3 for numerical failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match thread_cap() {
        Ok(Some(n)) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(Error::InvalidParameter(e.to_string())),
        },
        Ok(None) => execute(&cli),
        Err(e) => Err(e),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let mut body = json!({ "error": e.kind(), "message": e.to_string() });
            match &e {
                Error::Config { key, .. } => body["key"] = json!(key),
                Error::GapClosed { t } => body["t"] = json!(t),
                _ => {}
            }
            eprintln!("{body}");
            if e.is_numerical() {
                3
            } else {
                2
            }
        }
    }
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config { key: THREADS_ENV.into(), message: format!("expected a positive integer, got `{v}`") }),
        Err(_) => Ok(None),
    }
}

const DEFAULT_CONFIG: &str = "[model]\nflux = 0.3333333333333333\n\n[model.hopping]\nkind = \"nearest-neighbour\"\n";

struct Context {
    config: ExperimentConfig,
    config_text: String,
    out: PathBuf,
    outputs: Vec<String>,
}

impl Context {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.out.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, contents)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    fn write_at<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        text.push('\n');
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, text)?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let start = Instant::now();
    let mut overrides = cli.common.overrides.clone();
    if let Some(seed) = cli.common.seed {
        overrides.push(format!("seed={seed}"));
    }
    let text = match &cli.common.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::Config { key: "--config".into(), message: format!("{}: {e}", path.display()) })?,
        None => DEFAULT_CONFIG.to_string(),
    };
    let mut config = ExperimentConfig::from_toml(&text, &overrides)?;
    if let Command::Frame { model: Some(path), .. } = &cli.command {
        let model_text = std::fs::read_to_string(path)?;
        config.model = toml::from_str(&model_text).map_err(|e| Error::Config { key: "model".into(), message: e.to_string() })?;
        config.validate()?;
    }
    let out = cli.common.out.clone().or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)?;
    let config_text = config.to_toml()?;
    let mut ctx = Context { config, config_text, out, outputs: Vec::new() };
    let name = match &cli.command {
        Command::Gen => {
            gen(&mut ctx)?;
            "gen"
        }
        Command::Verify { points } => {
            verify(&mut ctx, points.as_deref())?;
            "verify"
        }
        Command::Spectrum => {
            spectrum(&mut ctx)?;
            "spectrum"
        }
        Command::Frame { windows, seeds_per_cell, report, dump_vectors, .. } => {
            if let Some(w) = windows {
                ctx.config.frames.windows = w.clone();
            }
            if seeds_per_cell.is_some() {
                ctx.config.frames.seeds_per_cell = *seeds_per_cell;
            }
            ctx.config.validate()?;
            frame(&mut ctx, report.as_deref(), *dump_vectors)?;
            "frame"
        }
        Command::Chern => {
            chern(&mut ctx)?;
            "chern"
        }
        Command::Dichotomy => {
            dichotomy(&mut ctx)?;
            "dichotomy"
        }
        Command::Deform { path, theta_path, mode } => {
            if let Some(m) = mode {
                ctx.config.deform.mode = match m {
                    DeformModeArg::Lattice => DeformMode::Lattice,
                    DeformModeArg::Field => DeformMode::Field,
                    DeformModeArg::Resolvent => DeformMode::Resolvent,
                };
            }
            deform(&mut ctx, path.as_deref(), theta_path.as_deref())?;
            "deform"
        }
    };
    write_manifest(&mut ctx, name, start)
}

fn write_manifest(ctx: &mut Context, command: &str, start: Instant) -> Result<()> {
    let hash = Sha256::digest(ctx.config_text.as_bytes());
    let hash: String = hash.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    });
    let manifest = json!({
        "command": command,
        "config_sha256": hash,
        "seed": ctx.config.seed,
        "versions": { "aperiodic-wannier": env!("CARGO_PKG_VERSION"), "format": 1 },
        "threads": rayon::current_num_threads(),
        "outputs": ctx.outputs,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    std::fs::write(ctx.out.join("manifest.json"), text + "\n")?;
    std::fs::write(ctx.out.join("config.toml"), &ctx.config_text)?;
    Ok(())
}

fn build(config: &ExperimentConfig, size: f64) -> Result<(DeloneSet, KernelOperator)> {
    config.model.build(size, config.seed)
}

/// `P` for the configured `Delta`, from one eigendecomposition.
pub fn project(h: &KernelOperator, spec: &SpectralSpec) -> Result<SpectralProjection> {
    let (values, vectors) = eig(h)?;
    let delta = match spec.interval {
        Some([lo, hi]) => Interval::new(lo, hi),
        None => {
            let gaps = detect_gaps(&values, spec.min_gap);
            let g = gaps.get(spec.gap_index).ok_or(Error::GapClosed { t: 0.0 })?;
            Interval::new(values[0] - 1.0, g.midpoint)
        }
    };
    let options = ProjectionOptions { backend: spec.backend, ..ProjectionOptions::default() };
    projection_from_eigen(h, &values, &vectors, delta, &options)
}

fn gen(ctx: &mut Context) -> Result<()> {
    let set = ctx.config.model.point_set(ctx.config.window.size, ctx.config.seed)?;
    let report = pointsets::verify(&set)?;
    ctx.write("points.txt", &pointsets::io::to_text(&set))?;
    ctx.write_json("verify.json", &json!({ "points": set.len(), "r": set.r, "R": set.big_r, "passed": report.passed(), "report": report }))
}

fn verify(ctx: &mut Context, points: Option<&Path>) -> Result<()> {
    let path = points.map(Path::to_path_buf).unwrap_or_else(|| ctx.out.join("points.txt"));
    let set = pointsets::io::read(&path)?;
    let report = pointsets::verify(&set)?;
    ctx.write_json("verify.json", &json!({ "points": set.len(), "r": set.r, "R": set.big_r, "passed": report.passed(), "report": report }))
}

fn spectrum(ctx: &mut Context) -> Result<()> {
    let (_, h) = build(&ctx.config, ctx.config.window.size)?;
    let (values, _) = eig(&h)?;
    let mut csv = String::from("index,eigenvalue\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(csv, "{i},{v:.12e}");
    }
    ctx.write("spectrum.csv", &csv)?;
    let gaps = detect_gaps(&values, ctx.config.spectral.min_gap);
    ctx.write_json("gaps.json", &json!({ "states": values.len(), "min_gap": ctx.config.spectral.min_gap, "gaps": gaps }))
}

#[derive(Serialize)]
struct FrameRow {
    window: f64,
    rank: usize,
    centers: usize,
    seeds_per_center: usize,
    family_size: usize,
    bounds: (f64, f64),
    parseval_bounds: (f64, f64),
    parseval_residual: f64,
    resolution_residual: f64,
    dual_residual: f64,
    max_moment: f64,
    mean_moment: f64,
    median_decay_exponent: f64,
}

fn frame(ctx: &mut Context, report: Option<&Path>, dump: bool) -> Result<()> {
    let config = ctx.config.clone();
    let c = config.model.cocycle()?;
    let mut rows = Vec::new();
    for &size in &config.frames.windows {
        let (set, h) = build(&config, size)?;
        let p = project(&h, &config.spectral)?;
        let m = config.frames.seeds_per_cell.unwrap_or_else(|| seeds_per_center(p.rank, set.len()));
        let seeds = vec![Seed { profile: config.frames.seed, orbital: config.frames.orbital }; m];
        let family = translate_family(&seeds, &set.points, &c, &p)?;
        let frame = parseval_normalize(&family, &p)?;
        let reach = config.model.hopping.profile().range;
        let region = probe_region(&p.basis, 2.0 * (config.frames.seed.width() + reach))?;
        let probes = interior_probes(&p, config.frames.probes, config.seed, region.as_ref());
        let loc = localization_report(&frame.vectors, &frame.centers, &p.basis, set.r.max(0.5));
        let mut exponents: Vec<f64> = loc.decay_exponents.iter().cloned().filter(|x| x.is_finite()).collect();
        exponents.sort_by(f64::total_cmp);
        rows.push(FrameRow {
            window: size,
            rank: p.rank,
            centers: set.len(),
            seeds_per_center: m,
            family_size: family.len(),
            bounds: frame.bounds,
            parseval_bounds: frame.parseval_bounds,
            parseval_residual: parseval_residual(&frame.vectors, &probes),
            resolution_residual: resolution_of_identity_residual(&frame.vectors, &p),
            dual_residual: dual_reconstruction_residual(&family.vectors, &p, &probes)?,
            max_moment: loc.max_moment,
            mean_moment: loc.mean_moment,
            median_decay_exponent: exponents.get(exponents.len() / 2).copied().unwrap_or(f64::NAN),
        });
        if dump {
            let mut csv = String::from("member,site,re,im\n");
            for j in 0..frame.vectors.ncols() {
                for i in 0..frame.vectors.nrows() {
                    let v = frame.vectors[(i, j)];
                    let _ = writeln!(csv, "{j},{i},{:.12e},{:.12e}", v.re, v.im);
                }
            }
            ctx.write(&format!("frame_vectors_{size}.csv"), &csv)?;
        }
    }
    let body = json!({ "rows": rows });
    match report {
        Some(path) => ctx.write_at(path, &body),
        None => ctx.write_json("frame.json", &body),
    }
}

/// Bloch-oracle counterpart of a configured model, when it is a
/// nearest-neighbour square lattice with rational flux `p/q`, `q <= 12`.
pub fn reference_model(model: &ModelSpec) -> Option<PeriodicModel> {
    let unit = matches!(model.lattice, Generator::PeriodicSquare { spacing } if spacing == 1.0);
    let hop = matches!(model.hopping, HoppingSpec::NearestNeighbour { t, spacing } if t == -1.0 && spacing == 1.0);
    if !(unit && hop && model.periodic && model.dim == 2 && model.theta.is_none()) {
        return None;
    }
    let flux = model.flux.unwrap_or(0.0);
    let (p, q) = (1..=12i64).find_map(|q| {
        let p = (flux * q as f64).round();
        ((flux * q as f64 - p).abs() < 1e-9).then_some((p as i64, q))
    })?;
    let stripe = match &model.onsite {
        OnsiteSpec::Constant { values } if values.iter().all(|v| *v == 0.0) => Vec::new(),
        OnsiteSpec::Stripe { values } => values.clone(),
        _ => return None,
    };
    Some(PeriodicModel::new(p, q).with_stripe(stripe))
}

fn chern(ctx: &mut Context) -> Result<()> {
    let config = &ctx.config;
    let (set, h) = build(config, config.window.size)?;
    let p = project(&h, &config.spectral)?;
    let result = chern_top(&p, &config.chern.fractions, config.chern.tolerance)?;
    let oracle = match reference_model(&config.model) {
        Some(m) => {
            let bands = p.rank * m.cell() / set.len();
            let o = bloch_oracle(&m, bands, config.chern.oracle_grid)?;
            Some(json!({ "bands": bands, "chern": o.chern, "raw": o.raw, "gap": o.gap }))
        }
        None => None,
    };
    let body = json!({
        "value": result.value,
        "imaginary": result.imaginary,
        "per_fraction": result.per_fraction,
        "window_fractions": result.window_fractions,
        "extrapolated": result.extrapolated,
        "spread": result.spread,
        "nearest_integer": result.nearest_integer,
        "integrality": result.integral,
        "tolerance": result.tolerance,
        "rank": p.rank,
        "gap_margin": p.gap_margin,
        "oracle": oracle,
    });
    ctx.write_json("chern.json", &body)
}

fn dichotomy(ctx: &mut Context) -> Result<()> {
    let config = &ctx.config;
    let options = config.frames.dichotomy_options(&config.spectral, &config.chern);
    let rows = dichotomy_experiment(&config.model, &options, config.seed)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
    let mut csv = String::from("window,rank,chern,basis_size,kappa,gram_singular,loewdin_max_moment,frame_size,parseval_max_moment\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{:.12e},{},{},{},{},{},{:.12e}",
            r.window,
            r.rank,
            r.chern,
            r.basis_size,
            opt(r.kappa),
            r.gram_singular,
            opt(r.loewdin_max_moment),
            r.frame_size,
            r.parseval_max_moment
        );
    }
    ctx.write("dichotomy.csv", &csv)?;
    ctx.write_json("dichotomy.json", &json!({ "rows": rows }))
}

fn deform(ctx: &mut Context, files: Option<&[PathBuf]>, fluxes: Option<&[f64]>) -> Result<()> {
    let config = ctx.config.clone();
    let spec = &config.deform;
    let size = config.window.size;
    match spec.mode {
        DeformMode::Lattice => {
            let path = match files {
                Some(files) => path_from_files(files, spec.samples)?,
                None => jitter_path(&config.model.point_set(size, config.seed)?, spec.jitter, spec.samples, config.seed.wrapping_add(1))?,
            };
            let report = run_lattice_deformation(&path, &config.model, &spec.tracking)?;
            ctx.write_json("deform.json", &report)?;
            report.into_result().map(|_| ())
        }
        DeformMode::Field => {
            let set = config.model.point_set(size, config.seed)?;
            let thetas = match (fluxes, spec.flux_path) {
                (Some(f), _) => {
                    let n = f.len();
                    f.iter()
                        .enumerate()
                        .map(|(k, a)| (if n > 1 { k as f64 / (n - 1) as f64 } else { 0.0 }, crate::magnetics::MagneticCocycle::flux(*a)))
                        .collect()
                }
                (None, Some(fp)) => flux_path(fp.start, fp.step, spec.samples, fp.denominator),
                (None, None) => {
                    return Err(Error::Config { key: "deform.flux_path".into(), message: "field mode needs a flux path or --theta-path".into() })
                }
            };
            let report = run_field_deformation(&set, &thetas, &config.model, &spec.tracking)?;
            ctx.write_json("deform.json", &report)?;
            report.into_result().map(|_| ())
        }
        DeformMode::Resolvent => {
            let start = config.model.point_set(size, config.seed)?;
            let end = jittered(&start, spec.jitter, config.seed.wrapping_add(1))?;
            let z = c64::new(spec.sweep_z[0], spec.sweep_z[1]);
            let report = step_halving(&start, &end, spec.samples, z, &spec.continuum)?;
            ctx.write_json("deform.json", &report)
        }
    }
}

fn path_from_files(files: &[PathBuf], samples: usize) -> Result<DeformationPath> {
    let sets = files.iter().map(|f| pointsets::io::read(f)).collect::<Result<Vec<_>>>()?;
    match sets.len() {
        0 | 1 => Err(Error::Config { key: "--path".into(), message: "need at least two point-set files".into() }),
        2 => make_path(&sets[0], &sets[1], samples),
        n => DeformationPath::piecewise_constant(sets.into_iter().enumerate().map(|(k, s)| (k as f64 / (n - 1) as f64, s)).collect()),
    }
}
