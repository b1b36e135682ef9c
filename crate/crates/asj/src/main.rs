use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use asj::config::RunConfig;
use asj::eval::{self, EvalOptions, Protocol, UnknownProtocol};
use asj::io::{load_grayscale, LoadError};
use asj::schema::{to_json, DetectDoc, ImageSize, MatchDoc};
use asj::{scene_file, svg};
use asj_core::matching::{decompose_all, match_junctions};
use asj_core::scale::detect_asj;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "asj", version, about = "Anisotropic-scale junction detection and matching")]
struct Cli {
    #[command(flatten)]
    settings: Settings,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Settings {
    /// Expected number of false detections tolerated.
    #[arg(long, global = true, default_value_t = RunConfig::default().epsilon)]
    epsilon: f64,
    /// Angular precision of branch sectors, in pixels of arc.
    #[arg(long, global = true, default_value_t = RunConfig::default().tau)]
    tau: f64,
    /// Radius of the local junction field: 3, 5 or 7.
    #[arg(long, global = true, default_value_t = RunConfig::default().local_radius)]
    local_radius: usize,
    /// Largest seed radius of the isotropic detector.
    #[arg(long, global = true, default_value_t = RunConfig::default().seed_radius_max)]
    seed_radius_max: usize,
    /// Side of the normalized matching patch (odd).
    #[arg(long, global = true, default_value_t = RunConfig::default().patch_size)]
    patch_size: usize,
    /// Ratio test threshold.
    #[arg(long, global = true, default_value_t = RunConfig::default().ratio)]
    ratio: f64,
    /// Longest branch scanned, in pixels [default: image diagonal].
    #[arg(long, global = true)]
    max_scale: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write an SVG overlay here.
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, env = "ASJ_THREADS", global = true, default_value_t = 0, hide_env_values = true)]
    threads: usize,
}

impl Settings {
    fn config(&self) -> RunConfig {
        RunConfig {
            epsilon: self.epsilon,
            tau: self.tau,
            local_radius: self.local_radius,
            seed_radius_max: self.seed_radius_max,
            patch_size: self.patch_size,
            ratio: self.ratio,
            max_scale: self.max_scale,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Detect junctions and print them as JSON.
    Detect { image: PathBuf },
    /// Detect and match junctions between two images.
    Match { image_a: PathBuf, image_b: PathBuf },
    /// Run an evaluation protocol and print CSV: noise, repeatability or matching.
    Eval {
        protocol: String,
        /// Scene description file; seeded random scenes when absent.
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long, default_value_t = EvalOptions::default().trials)]
        trials: usize,
        /// Side of the noise images.
        #[arg(long, default_value_t = EvalOptions::default().size)]
        size: usize,
        /// Comma-separated thresholds for the noise protocol [default: --epsilon].
        #[arg(long, value_delimiter = ',')]
        epsilons: Vec<f64>,
        /// Comma-separated rescale factors for the repeatability protocol.
        #[arg(long, value_delimiter = ',', default_values_t = eval::SCALE_FACTORS)]
        factors: Vec<f64>,
        /// Pixel noise of generated scenes.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, path: Option<&Path>) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let s = &cli.settings;
    if s.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(s.threads).build_global()?;
    }
    let config = s.config();
    config.validate()?;
    match cli.command {
        Command::Detect { image } => {
            let img = load_grayscale(&image)?;
            let junctions = detect_asj(&img, &config.detect_params())?;
            let size = ImageSize { width: img.width(), height: img.height() };
            if let Some(p) = &s.svg {
                std::fs::write(p, svg::detection_overlay(&img, &junctions)?)?;
            }
            emit(&to_json(&DetectDoc::new(size, config, &junctions)), s.json.as_deref())
        }
        Command::Match { image_a, image_b } => {
            let (ia, ib) = (load_grayscale(&image_a)?, load_grayscale(&image_b)?);
            let dp = config.detect_params();
            let (ja, jb) = (detect_asj(&ia, &dp)?, detect_asj(&ib, &dp)?);
            let pairs = match_junctions(&ja, &jb, &ia, &ib, &config.match_params());
            let (la, lb) = (decompose_all(&ja), decompose_all(&jb));
            if let Some(p) = &s.svg {
                std::fs::write(p, svg::match_overlay(&ia, &ib, &la, &lb, &pairs)?)?;
            }
            emit(&to_json(&MatchDoc::new(&pairs, &la, &lb)), s.json.as_deref())
        }
        Command::Eval { protocol, scene, trials, size, epsilons, factors, noise, out } => {
            let protocol: Protocol = protocol.parse()?;
            let scene = match scene {
                Some(path) => {
                    if !path.exists() {
                        return Err(LoadError::NotFound(path.display().to_string()).into());
                    }
                    let text = std::fs::read_to_string(&path)?;
                    let f = scene_file::parse_scene(&text).with_context(|| path.display().to_string())?;
                    Some((f.spec, f.seed))
                }
                None => None,
            };
            let opts = EvalOptions { trials, size, epsilons, factors, noise_sigma: noise, scene };
            let rows = eval::run(protocol, &config, &opts)?;
            let mut buf = Vec::new();
            eval::write_csv(&mut buf, protocol, &rows)?;
            emit(std::str::from_utf8(&buf)?, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("asj: {e:#}");
            let usage = matches!(e.downcast_ref::<LoadError>(), Some(LoadError::NotFound(_)))
                || e.downcast_ref::<UnknownProtocol>().is_some();
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
