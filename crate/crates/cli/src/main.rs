//! `fusedrive`: dataset generation, staged training, evaluation, and
//! closed-loop episodes from one binary.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 missing
//! input file. Every failure prints a single `error: ...` line to stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fusedrive_core::eval::{
    evaluate_offline, run_closed_loop, run_expert_episode, trace_statistics, SensorConfig,
    EPISODE_FRAMES,
};
use fusedrive_core::models::checkpoint::{
    load_autoencoder, load_depth_net, load_stack, save_autoencoder, save_depth_net, save_stack,
};
use fusedrive_core::models::harness::{DepthHarness, FusionHarness, GatedHarness, SegHarness};
use fusedrive_core::numerics::gradcheck::grad_check;
use fusedrive_core::rng::Rng;
use fusedrive_core::synthworld::{build_track, generate_dataset, read_dataset, write_dataset, Weather, WeatherTag};
use fusedrive_core::training::{
    train_depth, train_fusion, train_fusion_variant, train_segmentation, FusionVariant, TrainConfig,
};

const VERSION_LINE: &str =
    concat!(env!("CARGO_PKG_VERSION"), " (dataset SFDS v1, checkpoint SFMD v1)");

#[derive(Parser)]
#[command(
    name = "fusedrive",
    version = VERSION_LINE,
    about = "Fault-tolerant steering from fused depth and semantic embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Marker error for exit code 3.
#[derive(Debug)]
struct MissingInput(PathBuf);

impl std::fmt::Display for MissingInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "missing input file: {}", self.0.display())
    }
}

impl std::error::Error for MissingInput {}

#[derive(Clone, Copy, ValueEnum)]
enum WeatherArg {
    Clear,
    Shifted,
}

impl WeatherArg {
    fn to_weather(self) -> Weather {
        match self {
            WeatherArg::Clear => Weather::train_clear(),
            WeatherArg::Shifted => Weather::shifted_rain(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SensorArg {
    Both,
    Depth,
    Rgb,
}

impl SensorArg {
    fn to_config(self) -> SensorConfig {
        match self {
            SensorArg::Both => SensorConfig::BothSensors,
            SensorArg::Depth => SensorConfig::DepthOnly,
            SensorArg::Rgb => SensorConfig::RgbOnly,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GradModelArg {
    Depth,
    Seg,
    Fusion,
    Gated,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    NoInjection,
    NoConditional,
}

/// Flags shared by every command. Numeric defaults live in the JSON config;
/// flags override file values.
#[derive(Args)]
struct Common {
    /// Run seed; overrides the config file value.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

impl Common {
    fn load_config(&self) -> Result<TrainConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                require_input(path)?;
                TrainConfig::from_file(path).map_err(|e| anyhow!(e))?
            }
            None => TrainConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    fn prepare_out(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out)
            .with_context(|| format!("cannot create output directory {}", self.out.display()))
    }

    fn guard_overwrite(&self, path: &Path) -> Result<()> {
        if path.exists() && !self.force {
            bail!("output file exists: {} (use --force to overwrite)", path.display());
        }
        Ok(())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset with expert labels under one weather regime.
    GenData {
        #[command(flatten)]
        common: Common,
        /// Number of samples; defaults to n_train from the config.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum)]
        weather: WeatherArg,
    },
    /// Stage 1: train the depth-only steering model.
    TrainDepth {
        #[command(flatten)]
        common: Common,
        /// Training dataset (SFDS).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Stage 2: train the segmentation autoencoder.
    TrainSeg {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Stage 3: train the conditional fusion head over frozen extractors.
    TrainFusion {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        depth_model: Option<PathBuf>,
        #[arg(long)]
        seg_model: Option<PathBuf>,
    },
    /// Stage 3 variant: weighted-gate fusion head.
    TrainGated {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        depth_model: Option<PathBuf>,
        #[arg(long)]
        seg_model: Option<PathBuf>,
    },
    /// Ablation baselines with a plain concatenation head.
    TrainBaseline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        depth_model: Option<PathBuf>,
        #[arg(long)]
        seg_model: Option<PathBuf>,
        #[arg(long, value_enum)]
        variant: BaselineArg,
    },
    /// Mean Huber loss of a trained stack on a test set.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Stack checkpoint (fusion, gated, or baseline).
        #[arg(long)]
        model: PathBuf,
        /// Test dataset (SFDS).
        #[arg(long)]
        data: PathBuf,
        /// Sensor configuration; omitted = all three.
        #[arg(long, value_enum)]
        sensor: Option<SensorArg>,
        /// Weather label for the output rows; defaults to the dataset tag.
        #[arg(long, value_enum)]
        weather: Option<WeatherArg>,
    },
    /// One closed-loop episode on a seeded track.
    RunEpisode {
        #[command(flatten)]
        common: Common,
        /// Stack checkpoint; omit with --expert.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        sensor: SensorArg,
        #[arg(long, value_enum, default_value = "clear")]
        weather: WeatherArg,
        /// Episode length in frames.
        #[arg(long, default_value_t = EPISODE_FRAMES)]
        frames: usize,
        /// Drive with the expert controller instead of a model.
        #[arg(long)]
        expert: bool,
    },
    /// Finite-difference verification of a randomly initialized network.
    GradCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        model: GradModelArg,
        /// Perturbation size.
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f32,
        /// Minimum coordinates to check.
        #[arg(long, default_value_t = 150)]
        coords: usize,
    },
}

fn require_input(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(MissingInput(path.to_path_buf()).into())
    }
}

fn resolve(flag: Option<PathBuf>, config_value: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.or_else(|| config_value.clone())
        .ok_or_else(|| anyhow!("no {} given (flag or config)", what))
}

fn load_samples(path: &Path) -> Result<Vec<fusedrive_core::synthworld::Sample>> {
    require_input(path)?;
    read_dataset(path).map_err(|e| anyhow!(e))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData { common, n, weather } => {
            let cfg = common.load_config()?;
            common.prepare_out()?;
            let weather = weather.to_weather();
            let n = n.unwrap_or(cfg.n_train);
            let path = common.out.join(format!("{}.sfds", weather.tag.as_str()));
            common.guard_overwrite(&path)?;
            let (samples, manifest) = generate_dataset(cfg.seed, n, &weather);
            write_dataset(&path, &samples, &manifest).map_err(|e| anyhow!(e))?;
            println!(
                "wrote {} samples ({} weather) to {}",
                samples.len(),
                weather.tag.as_str(),
                path.display()
            );
            Ok(())
        }
        Command::TrainDepth { common, data } => {
            let cfg = common.load_config()?;
            common.prepare_out()?;
            let data_path = resolve(data, &cfg.train_data, "training dataset")?;
            let samples = load_samples(&data_path)?;
            let ckpt = common.out.join("depth.sfmd");
            let metrics_path = common.out.join("metrics_depth.csv");
            common.guard_overwrite(&ckpt)?;
            common.guard_overwrite(&metrics_path)?;
            let out = train_depth(&samples, &cfg).map_err(|e| anyhow!(e))?;
            save_depth_net(&ckpt, &out.net).map_err(|e| anyhow!(e))?;
            out.metrics.write_csv(&metrics_path).map_err(|e| anyhow!(e))?;
            println!(
                "depth model: final loss {:.6e}, constant-predictor baseline {:.6e} ({}x better), checkpoint {}",
                out.final_loss,
                out.baseline_loss,
                out.baseline_loss / out.final_loss.max(1e-12),
                ckpt.display()
            );
            Ok(())
        }
        Command::TrainSeg { common, data } => {
            let cfg = common.load_config()?;
            common.prepare_out()?;
            let data_path = resolve(data, &cfg.train_data, "training dataset")?;
            let samples = load_samples(&data_path)?;
            let ckpt = common.out.join("seg.sfmd");
            let metrics_path = common.out.join("metrics_segmentation.csv");
            common.guard_overwrite(&ckpt)?;
            common.guard_overwrite(&metrics_path)?;
            let out = train_segmentation(&samples, &cfg).map_err(|e| anyhow!(e))?;
            save_autoencoder(&ckpt, &out.net).map_err(|e| anyhow!(e))?;
            out.metrics.write_csv(&metrics_path).map_err(|e| anyhow!(e))?;
            println!(
                "segmentation model: final loss {:.6e}, holdout accuracy {:.4} over {} samples, checkpoint {}",
                out.final_loss,
                out.holdout_accuracy,
                out.holdout_size,
                ckpt.display()
            );
            Ok(())
        }
        Command::TrainFusion { common, data, depth_model, seg_model } => train_stage3(
            common,
            data,
            depth_model,
            seg_model,
            None,
            "fusion",
        ),
        Command::TrainGated { common, data, depth_model, seg_model } => train_stage3(
            common,
            data,
            depth_model,
            seg_model,
            Some(FusionVariant::Gated),
            "gated",
        ),
        Command::TrainBaseline { common, data, depth_model, seg_model, variant } => {
            let (fv, name) = match variant {
                BaselineArg::NoInjection => (FusionVariant::NaiveNoInjection, "baseline_no_injection"),
                BaselineArg::NoConditional => {
                    (FusionVariant::NaiveWithInjection, "baseline_no_conditional")
                }
            };
            train_stage3(common, data, depth_model, seg_model, Some(fv), name)
        }
        Command::Evaluate { common, model, data, sensor, weather } => {
            let cfg = common.load_config()?;
            common.prepare_out()?;
            require_input(&model)?;
            let samples = load_samples(&data)?;
            let mut stack = load_stack(&model).map_err(|e| anyhow!(e))?;
            let weather_label = weather
                .map(|w| w.to_weather().tag)
                .or_else(|| samples.first().map(|s| s.weather))
                .unwrap_or(WeatherTag::TrainClear);
            let sensors: Vec<SensorConfig> = match sensor {
                Some(s) => vec![s.to_config()],
                None => SensorConfig::ALL.to_vec(),
            };
            let losses_path = common.out.join("losses.csv");
            common.guard_overwrite(&losses_path)?;
            let mut csv = String::from("sensor_config,weather,mean_huber,n\n");
            for s in sensors {
                let loss = evaluate_offline(&mut stack, &samples, s, cfg.huber_delta);
                println!(
                    "{} / {}: mean huber {:.6e} ({:.2} x 10^-3) over {} samples",
                    s.as_str(),
                    weather_label.as_str(),
                    loss,
                    loss * 1e3,
                    samples.len()
                );
                csv.push_str(&format!(
                    "{},{},{:.6e},{}\n",
                    s.as_str(),
                    weather_label.as_str(),
                    loss,
                    samples.len()
                ));
            }
            std::fs::write(&losses_path, csv)
                .with_context(|| format!("writing {}", losses_path.display()))?;
            println!("wrote {}", losses_path.display());
            Ok(())
        }
        Command::RunEpisode { common, model, sensor, weather, frames, expert } => {
            let cfg = common.load_config()?;
            common.prepare_out()?;
            let track = build_track(cfg.seed);
            let weather = weather.to_weather();
            let sensor_cfg = sensor.to_config();
            let label = format!(
                "{}_{}_{}",
                if expert { "expert" } else { "model" },
                weather.tag.as_str(),
                sensor_cfg.as_str()
            );
            let result = if expert {
                run_expert_episode(&track, frames)
            } else {
                let model_path = model.ok_or_else(|| anyhow!("run-episode needs --model or --expert"))?;
                require_input(&model_path)?;
                let mut stack = load_stack(&model_path).map_err(|e| anyhow!(e))?;
                run_closed_loop(&mut stack, &track, &weather, sensor_cfg, frames, cfg.seed)
            };
            let trace_path = common.out.join(format!("trace_{}.csv", label));
            common.guard_overwrite(&trace_path)?;
            std::fs::write(&trace_path, result.trace.to_csv_string())
                .with_context(|| format!("writing {}", trace_path.display()))?;
            println!(
                "episode {}: success={} over {} frames, trace {}",
                label,
                result.success,
                frames,
                trace_path.display()
            );
            if frames > 100 {
                if let Ok(stats) = trace_statistics(&result.trace, (50, 100)) {
                    if let Some(g) = stats.m_d {
                        println!(
                            "  depth gate: window stddev {:.4e}, full range {:.4e}",
                            g.stddev_window, g.range_full
                        );
                    }
                    if let Some(g) = stats.m_e_or_c {
                        println!(
                            "  embedding gate / conditional: window stddev {:.4e}, full range {:.4e}",
                            g.stddev_window, g.range_full
                        );
                    }
                }
            }
            Ok(())
        }
        Command::GradCheck { common, model, epsilon, coords } => {
            let cfg = common.load_config()?;
            let mut rng = Rng::new(cfg.seed).fork(0x6c);
            let report = match model {
                GradModelArg::Depth => {
                    grad_check(&mut DepthHarness::random(cfg.seed), epsilon, coords, &mut rng)
                }
                GradModelArg::Seg => {
                    grad_check(&mut SegHarness::random(cfg.seed), epsilon, coords, &mut rng)
                }
                GradModelArg::Fusion => {
                    grad_check(&mut FusionHarness::random(cfg.seed), epsilon, coords, &mut rng)
                }
                GradModelArg::Gated => {
                    grad_check(&mut GatedHarness::random(cfg.seed), epsilon, coords, &mut rng)
                }
            };
            println!(
                "max relative error {:.3e} over {} coordinates ({} kink-adjacent skipped)",
                report.max_rel_error, report.coords_checked, report.coords_skipped
            );
            if report.max_rel_error >= 1e-3 {
                bail!("gradient check failed: {:.3e} >= 1e-3", report.max_rel_error);
            }
            Ok(())
        }
    }
}

fn train_stage3(
    common: Common,
    data: Option<PathBuf>,
    depth_model: Option<PathBuf>,
    seg_model: Option<PathBuf>,
    variant: Option<FusionVariant>,
    name: &str,
) -> Result<()> {
    let cfg = common.load_config()?;
    common.prepare_out()?;
    let data_path = resolve(data, &cfg.train_data, "training dataset")?;
    let depth_path = resolve(depth_model, &cfg.depth_checkpoint, "depth checkpoint")?;
    let seg_path = resolve(seg_model, &cfg.seg_checkpoint, "segmentation checkpoint")?;
    require_input(&depth_path)?;
    require_input(&seg_path)?;
    let samples = load_samples(&data_path)?;
    let depth_net = load_depth_net(&depth_path).map_err(|e| anyhow!(e))?;
    let autoencoder = load_autoencoder(&seg_path).map_err(|e| anyhow!(e))?;

    let ckpt = common.out.join(format!("{}.sfmd", name));
    let metrics_path = common.out.join(format!("metrics_{}.csv", name));
    common.guard_overwrite(&ckpt)?;
    common.guard_overwrite(&metrics_path)?;

    let out = match variant {
        Some(v) => train_fusion_variant(depth_net, autoencoder, &samples, &cfg, v),
        // The plain fusion command honors the config ablation flags.
        None => train_fusion(depth_net, autoencoder, &samples, &cfg),
    }
    .map_err(|e| anyhow!(e))?;
    let mut stack = out.stack;
    save_stack(&ckpt, &mut stack).map_err(|e| anyhow!(e))?;
    out.metrics.write_csv(&metrics_path).map_err(|e| anyhow!(e))?;
    println!(
        "{} model: final loss {:.6e}, checkpoint {}",
        name,
        out.final_loss,
        ckpt.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e);
            if e.chain().any(|c| c.downcast_ref::<MissingInput>().is_some()) {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
