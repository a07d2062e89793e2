use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use speechcmd::commands::{self, PredictInputs};
use speechcmd::{Error, Result, ToolkitConfig};

#[derive(Debug, Parser)]
#[command(name = "speechcmd", version, about = "Keyword-spotting toolkit for one-second speech command clips")]
struct Cli {
    /// Config file (`key = value` lines under `[section]` headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master random seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages (0 = one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override any config key, e.g. `--set train.epochs=5`. Repeatable.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print clip statistics, optionally plotting its features as PPM.
    Inspect {
        wav: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Rank clips by peak volume and propose silence relabels.
    Clean {
        #[arg(long)]
        manifest: PathBuf,
        /// Ranked report CSV.
        #[arg(long)]
        report: PathBuf,
        /// Write the relabeled manifest here.
        #[arg(long)]
        apply: Option<PathBuf>,
    },
    /// Scan a corpus and write a speaker-disjoint fold manifest.
    Split {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one SCFT tensor per manifest entry.
    Featurize {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `features.representation`.
        #[arg(long)]
        repr: Option<String>,
        /// Also write a PPM image per entry.
        #[arg(long)]
        plot: bool,
    },
    /// Write augmented variants of one clip.
    AugmentPreview {
        wav: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        count: usize,
        /// Directory of background-noise wavs.
        #[arg(long)]
        noise: Option<PathBuf>,
    },
    /// Generate a synthetic tone corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 40)]
        n_per_class: usize,
    },
    /// Train a model; writes model.scnn, metrics.csv and effective_config.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a checkpoint over manifest entries or a directory of wavs.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, conflicts_with = "dir", required_unless_present = "dir")]
        manifest: Option<PathBuf>,
        /// Only this fold of the manifest.
        #[arg(long, requires = "manifest")]
        fold: Option<i32>,
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Average the probabilities of several prediction files.
    Ensemble {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against a manifest.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<ToolkitConfig> {
    let mut config = match &cli.config {
        Some(p) => ToolkitConfig::from_file(p)?,
        None => ToolkitConfig::default(),
    };
    for o in &cli.overrides {
        config.set_dotted(o)?;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(j) = cli.jobs {
        config.jobs = j;
    }
    if let Command::Featurize { repr: Some(r), .. } = &cli.command {
        config.features.representation = r.parse()?;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli)?;
    if config.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    match cli.command {
        Command::Inspect { wav, plot } => print!("{}", commands::cmd_inspect(&wav, &config, plot.as_deref())?),
        Command::Clean { manifest, report, apply } => {
            let r = commands::cmd_clean(&manifest, &config, &report, apply.as_deref())?;
            println!("proposed: {} of {}", r.proposed.len(), r.ranked.len());
        }
        Command::Split { corpus, out } => print!("{}", commands::split_report(&commands::cmd_split(&corpus, &out, &config)?)),
        Command::Featurize { manifest, out, plot, .. } => {
            let n = commands::cmd_featurize(&manifest, &config, &out, plot)?;
            println!("wrote {n} tensors ({})", config.features.representation);
        }
        Command::AugmentPreview { wav, out, count, noise } => {
            for p in commands::cmd_augment_preview(&wav, noise.as_deref(), count, &out, &config)? {
                println!("{}", p.display());
            }
        }
        Command::Synth { out, n_per_class } => {
            let s = commands::cmd_synth(&out, n_per_class, &config)?;
            println!(
                "keyword files: {}\nunknown files: {}\nnoise files: {}\nspeakers: {}",
                s.keyword_files,
                s.unknown_files,
                s.noise_files,
                s.speakers.len()
            );
        }
        Command::Train { manifest, out } => {
            let o = commands::cmd_train(&manifest, &config, &out)?;
            for e in &o.report.epochs {
                let fmt = |v: Option<f32>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
                println!(
                    "epoch {:>3}  loss {:.4}  train_acc {}  heldout_acc {}",
                    e.epoch,
                    e.train_loss,
                    fmt(e.train_accuracy),
                    fmt(e.heldout_accuracy)
                );
            }
            if let Some(b) = o.report.best_epoch {
                println!("kept epoch {b}");
            }
            println!("checkpoint: {}", o.checkpoint.display());
        }
        Command::Predict { checkpoint, manifest, fold, dir, out } => {
            let inputs = match (manifest, dir) {
                (Some(path), _) => PredictInputs::Manifest { path, fold },
                (None, Some(d)) => PredictInputs::Directory(d),
                (None, None) => unreachable!("clap requires one input"),
            };
            let rows = commands::cmd_predict(&checkpoint, &inputs, &config, &out)?;
            println!("wrote {} predictions", rows.len());
        }
        Command::Ensemble { inputs, out } => {
            let rows = commands::cmd_ensemble(&inputs, &config, &out)?;
            println!("wrote {} predictions", rows.len());
        }
        Command::Eval { predictions, manifest, out } => {
            print!("{}", commands::cmd_eval(&predictions, &manifest, &config, &out)?.table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // One line: `error kind=<kind> message="<escaped text>"`.
            eprintln!("error kind={} message={:?}", e.kind(), e.to_string());
            ExitCode::FAILURE
        }
    }
}
