use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use puckergrade::image::{self, load_image};
use puckergrade::metrics::{sp_length, sp_thickness};
use puckergrade::otsu::{self, OtsuError};
use puckergrade::pipeline::{self, dataset, PipelineConfig, PipelineError, TrainedModel};
use puckergrade::som::ClassifyMode;
use puckergrade::spectral;
use puckergrade::synth::{self, DatasetSpec};

#[derive(Parser)]
#[command(
    name = "puckergrade",
    version,
    about = "Seam-pucker grading from Fourier spectra and a Kohonen map"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// `key = value` config file; PUCKERGRADE_SEED overrides its seed.
    /// Models that embed their training config ignore this.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled dataset.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        train: usize,
        #[arg(long, default_value_t = 21)]
        test: usize,
        /// Defaults to PUCKERGRADE_SEED, then 42.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 256)]
        size: usize,
    },
    /// Print the Otsu threshold of an image and optionally write the binary image.
    Otsu {
        image: PathBuf,
        /// Binary image output (P5 PGM, 0/255).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write amplitude/phase displays and the feature vector of an image.
    Spectrum {
        image: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        phase: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Seam-pucker indicator from thickness or length measurements (mm).
    Sp {
        #[arg(long, requires = "t")]
        ts: Option<f64>,
        #[arg(long, requires = "ts")]
        t: Option<f64>,
        #[arg(long, requires = "ls")]
        l: Option<f64>,
        #[arg(long, requires = "l")]
        ls: Option<f64>,
    },
    /// Train and label a map from a directory with labels.tsv.
    Train {
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Only use files whose name contains `_<role>_`.
        #[arg(long)]
        role: Option<String>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Grade one image.
    Classify {
        #[arg(long)]
        model: PathBuf,
        image: PathBuf,
        #[arg(long)]
        mode: Option<String>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Grade a labeled directory and report accuracy.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        dir: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        role: Option<String>,
        /// Machine-readable per-image report.
        #[arg(long)]
        tsv: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
}

fn load_config(arg: &ConfigArg) -> Result<PipelineConfig, PipelineError> {
    let cfg = match &arg.config {
        Some(path) => PipelineConfig::parse(&std::fs::read_to_string(path)?)?,
        None => PipelineConfig::default(),
    };
    Ok(cfg.with_env_overrides()?)
}

fn load_gray(path: &Path) -> Result<image::GrayImage, PipelineError> {
    Ok(load_image(path)?.into_gray())
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Synth {
            out,
            train,
            test,
            seed,
            size,
        } => {
            let seed = match seed {
                Some(s) => s,
                None => PipelineConfig::default().with_env_overrides()?.seed,
            };
            if size == 0 {
                return Err(PipelineError::Usage("--size must be >= 1".into()));
            }
            let spec = DatasetSpec::from_totals(train, test, seed, size);
            let ds = synth::generate_dataset(&spec);
            ds.write_to(&out)?;
            println!(
                "wrote {} train + {} test images to {}",
                ds.train.len(),
                ds.test.len(),
                out.display()
            );
        }
        Command::Otsu { image, out } => {
            let img = load_gray(&image)?;
            let hist = otsu::histogram(&img);
            let t = match otsu::otsu_threshold(&hist) {
                Ok(t) => t,
                Err(OtsuError::DegenerateHistogram(v)) => {
                    println!("image is uniform (all pixels = {v}); no threshold");
                    return Ok(());
                }
                Err(e) => unreachable!("{e}"),
            };
            let stats = otsu::class_stats(&hist, t as usize).expect("threshold in range");
            println!("threshold: {t}");
            println!(
                "within-class variance: {:.6}  (w1 {:.4}, w2 {:.4})",
                stats.within_class_variance(),
                stats.w1,
                stats.w2
            );
            if let Some(out) = out {
                image::save_pgm(&otsu::binarize(&img, t).to_gray(), &out)?;
                println!("binary image: {}", out.display());
            }
        }
        Command::Spectrum {
            image,
            out,
            phase,
            features,
            config,
        } => {
            let cfg = load_config(&config)?;
            let img = load_gray(&image)?;
            let square = spectral::prepare_square(&img, cfg.transform_size)?;
            let spec = spectral::dft2(&square)?;
            let amps = spectral::amplitude(&spec);
            println!("transform size: {}", spec.n());
            println!("mean gray level (DC): {:.6}", spec.get(0, 0).re);
            if let Some(path) = out {
                image::save_png(&spectral::spectrum_image(&amps), &path)?;
                println!("amplitude display: {}", path.display());
            }
            if let Some(path) = phase {
                image::save_png(&spectral::phase_image(&spectral::phase(&spec)), &path)?;
                println!("phase display: {}", path.display());
            }
            if let Some(path) = features {
                let fv = pipeline::feature_vector(&img, &cfg)?;
                std::fs::write(&path, fv.to_bytes())?;
                println!("features ({}x{}): {}", fv.side(), fv.side(), path.display());
            }
        }
        Command::Sp { ts, t, l, ls } => {
            let mut printed = false;
            if let (Some(ts), Some(t)) = (ts, t) {
                let v = sp_thickness(ts, t)?;
                println!("SP (thickness): {v:.2}%");
                printed = true;
            }
            if let (Some(l), Some(ls)) = (l, ls) {
                let v = sp_length(l, ls)?;
                println!("SP (length): {v:.2}%");
                printed = true;
            }
            if !printed {
                return Err(PipelineError::Usage(
                    "give --ts and --t, or --l and --ls".into(),
                ));
            }
        }
        Command::Train {
            dir,
            out,
            labels,
            role,
            config,
        } => {
            let cfg = load_config(&config)?;
            let images = dataset::load_labeled_dir(&dir, labels.as_deref(), role.as_deref())?;
            let trained = pipeline::run_train(&cfg, &images)?;
            trained.write(&out)?;
            let samples: Vec<Vec<f64>> = images
                .iter()
                .map(|li| {
                    pipeline::feature_vector(&li.image, &trained.config).map(|f| f.into_data())
                })
                .collect::<Result<_, _>>()?;
            println!("trained on {} images", images.len());
            println!(
                "quantization error: {:.6}",
                trained.model.quantization_error(&samples)?
            );
            println!("model: {}", out.display());
        }
        Command::Classify {
            model,
            image,
            mode,
            config,
        } => {
            let fallback = load_config(&config)?;
            let trained = TrainedModel::read(&model, &fallback)?;
            let img = load_gray(&image)?;
            let mode = match mode {
                Some(m) => m.parse::<ClassifyMode>()?,
                None => trained.model.classify_mode(),
            };
            let c = pipeline::run_classify_with(&trained, &img, mode)?;
            println!("grade: {}", c.grade);
            println!("mode: {}", c.mode);
            println!("node: ({}, {})", c.row, c.col);
            println!("distance: {:.6}", c.distance);
            println!("score: {:.6}", c.score);
        }
        Command::Evaluate {
            model,
            dir,
            labels,
            role,
            tsv,
            config,
        } => {
            let fallback = load_config(&config)?;
            let trained = TrainedModel::read(&model, &fallback)?;
            let images = dataset::load_labeled_dir(&dir, labels.as_deref(), role.as_deref())?;
            let report = pipeline::run_evaluate(&trained, &images)?;
            print!("{}", report.to_table());
            if let Some(path) = tsv {
                std::fs::write(&path, report.to_tsv())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
