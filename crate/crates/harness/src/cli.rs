//! Command-line front end. Exit status: 0 on success, 2 on configuration
//! errors (including bad arguments), 3 on file errors, 1 otherwise.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use risae_core::autoencoder::{AttackChannel, Autoencoder, Preset};

use crate::checkpoint;
use crate::config::{channel_name, AttackKind, ExperimentConfig};
use crate::dump::{self, DumpFormat};
use crate::error::{self, HarnessError, Result};
use crate::experiment::{self, Cell};
use crate::manifest::{FileDigest, Manifest};
use crate::perturbation::{self, PerturbationFile};
use crate::results;

#[derive(Debug, Parser)]
#[command(
    name = "risae",
    version,
    about = "Double-RIS MIMO autoencoder attack simulator"
)]
pub struct Cli {
    /// JSON experiment config; fields it leaves out take the preset values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the config
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Scale preset the config is laid over
    #[arg(long, global = true, value_enum)]
    pub preset: Option<PresetArg>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetArg {
    Desk,
    Paper,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Desk => Preset::Desk,
            PresetArg::Paper => Preset::Paper,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Secured,
    Jamming,
    Rmaef,
    Rmaep,
}

impl From<KindArg> for AttackKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Secured => AttackKind::Secured,
            KindArg::Jamming => AttackKind::Jamming,
            KindArg::Rmaef => AttackKind::Rmaef,
            KindArg::Rmaep => AttackKind::Rmaep,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ChannelArg {
    Ideal,
    DoubleScattering,
}

impl From<ChannelArg> for AttackChannel {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::Ideal => AttackChannel::Ideal,
            ChannelArg::DoubleScattering => AttackChannel::DoubleScattering,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DumpArg {
    Bin,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the autoencoder; writes checkpoint.bin, train_log.csv and
    /// train_manifest.json
    Train,
    /// Craft one perturbation and write it as CSV
    Attack {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[command(flatten)]
        cell: CellArgs,
        /// Destination (default: <out>/perturbation_<kind>.csv)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// SER of one benchmark at one operating point; writes eval.csv
    Eval {
        #[arg(long, value_enum)]
        attack: KindArg,
        #[command(flatten)]
        cell: CellArgs,
        /// Replay a perturbation file instead of crafting one
        #[arg(long)]
        perturbation: Option<PathBuf>,
        /// Also write one channel realization of this operating point
        #[arg(long)]
        dump_channel: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "bin")]
        dump_format: DumpArg,
    },
    /// Full SNR × benchmark grid; writes results.csv, plot_results.py and
    /// manifest.json
    Sweep {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Train first instead of loading a checkpoint
        #[arg(long, conflicts_with = "manifest")]
        train: bool,
        /// Rerun the sweep recorded in a manifest
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct CellArgs {
    /// Evaluation SNR in dB (default: highest point of the sweep grid)
    #[arg(long, allow_negative_numbers = true)]
    pub snr: Option<f64>,
    /// Scatterer count (default: the system config's)
    #[arg(long)]
    pub scatterers: Option<usize>,
    /// Adversary channel model (default: first of the sweep's)
    #[arg(long, value_enum)]
    pub attack_channel: Option<ChannelArg>,
    /// Checkpoint to load (default: <out>/checkpoint.bin)
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

impl CellArgs {
    fn cell(&self, cfg: &ExperimentConfig) -> Result<Cell> {
        let snr_db = self
            .snr
            .unwrap_or(*cfg.sweep.snr_db.last().expect("validated nonempty"));
        if !snr_db.is_finite() {
            return Err(HarnessError::config("--snr", "must be finite"));
        }
        let scatterers = self
            .scatterers
            .unwrap_or(cfg.system.channel.scattering.num_scatterers);
        if scatterers == 0 {
            return Err(HarnessError::config("--scatterers", "must be at least 1"));
        }
        Ok(Cell {
            snr_db,
            scatterers,
            channel: self
                .attack_channel
                .map(Into::into)
                .unwrap_or(cfg.sweep.attack_channels[0]),
        })
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let preset = cli.preset.map(Preset::from);
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path, preset)?,
        None => ExperimentConfig::preset(preset.unwrap_or(Preset::Desk)),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn checkpoint_path(cli: &Cli, given: &Option<PathBuf>) -> PathBuf {
    given
        .clone()
        .unwrap_or_else(|| cli.out.join("checkpoint.bin"))
}

/// Loads the checkpoint and checks it was built for the configured system.
fn load_model(path: &Path, cfg: &ExperimentConfig) -> Result<(Autoencoder, String)> {
    let (ae, sha) = checkpoint::load(path)?;
    if ae.config != cfg.system {
        return Err(HarnessError::config(
            "system",
            format!("does not match the system stored in {}", path.display()),
        ));
    }
    Ok((ae, sha))
}

fn train_and_save(cfg: &ExperimentConfig, out: &Path) -> Result<(Autoencoder, FileDigest)> {
    let every = (cfg.training.epochs / 20).max(1);
    let (ae, _, log) = experiment::train_model(cfg, |e| {
        if e.epoch % every == 0 || e.epoch + 1 == cfg.training.epochs {
            eprintln!("epoch {:>5}  loss {:.6}  {:.1}s", e.epoch, e.loss, e.wall_s);
        }
    })?;
    let ckpt = out.join("checkpoint.bin");
    let sha = checkpoint::save(&ae, &ckpt)?;
    error::write(&out.join("train_log.csv"), experiment::train_log_csv(&log))?;
    let digest = FileDigest {
        path: ckpt,
        sha256: sha,
    };
    let mut m = Manifest::new("train", cfg, digest.clone());
    m.outputs.push(FileDigest::of(&out.join("train_log.csv"))?);
    m.write(&out.join("train_manifest.json"))?;
    Ok((ae, digest))
}

fn print_row(r: &results::ResultRow) {
    eprintln!(
        "snr {:>6.2} dB  sc {:>2}  {:<8} {:<17}  ser {:.6} ± {:.6}  ({} trials)",
        r.snr_db,
        r.scatterers,
        r.attack.name(),
        r.attack_channel,
        r.ser,
        r.ci_halfwidth,
        r.trials
    );
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train => {
            let cfg = load_config(cli)?;
            let (_, digest) = train_and_save(&cfg, &cli.out)?;
            eprintln!(
                "checkpoint {} sha256 {}",
                digest.path.display(),
                digest.sha256
            );
            Ok(())
        }
        Command::Attack { kind, cell, output } => {
            let cfg = load_config(cli)?;
            let kind = AttackKind::from(*kind);
            let c = cell.cell(&cfg)?;
            let (ae, _) = load_model(&checkpoint_path(cli, &cell.checkpoint), &cfg)?;
            let (p, progressed) = experiment::generate_perturbation(&ae, &cfg, kind, &c)?;
            if !progressed {
                eprintln!("warning: {kind} made no progress; writing the zero perturbation");
            }
            let path = output
                .clone()
                .unwrap_or_else(|| cli.out.join(format!("perturbation_{kind}.csv")));
            eprintln!(
                "{kind}: ‖p‖² = {:.6e} of budget {:.6e}",
                p.energy(),
                p.budget
            );
            perturbation::write(
                &PerturbationFile {
                    attack: kind,
                    psr_db: cfg.attack.psr_db,
                    snr_db: c.snr_db,
                    attack_channel: channel_name(c.channel).to_string(),
                    perturbation: p,
                },
                &path,
            )
        }
        Command::Eval {
            attack,
            cell,
            perturbation: replay,
            dump_channel,
            dump_format,
        } => {
            let cfg = load_config(cli)?;
            let kind = AttackKind::from(*attack);
            let c = cell.cell(&cfg)?;
            let (ae, _) = load_model(&checkpoint_path(cli, &cell.checkpoint), &cfg)?;
            let replayed = match replay {
                Some(path) => Some(perturbation::read(path)?.perturbation),
                None => None,
            };
            let row = experiment::evaluate_cell(&ae, &cfg, kind, &c, replayed.as_ref())?;
            print_row(&row);
            results::write_results(std::slice::from_ref(&row), &cli.out.join("eval.csv"))?;
            if let Some(path) = dump_channel {
                let real = experiment::sample_realization(&ae, &cfg, &c)?;
                let format = match dump_format {
                    DumpArg::Bin => DumpFormat::Binary,
                    DumpArg::Csv => DumpFormat::Csv,
                };
                dump::write(&real, format, path)?;
            }
            Ok(())
        }
        Command::Sweep {
            checkpoint: ckpt,
            train,
            manifest,
        } => {
            let (cfg, ae, digest) = match manifest {
                Some(mpath) => {
                    if cli.config.is_some() || cli.seed.is_some() || cli.preset.is_some() {
                        return Err(HarnessError::config(
                            "--manifest",
                            "a manifest carries its own config; drop --config, --seed and --preset",
                        ));
                    }
                    let m = Manifest::read(mpath)?;
                    let path = ckpt.clone().unwrap_or_else(|| m.checkpoint.path.clone());
                    let (ae, sha) = load_model(&path, &m.config)?;
                    m.verify_checkpoint(&sha, &path)?;
                    (m.config, ae, FileDigest { path, sha256: sha })
                }
                None => {
                    let cfg = load_config(cli)?;
                    if *train {
                        let (ae, digest) = train_and_save(&cfg, &cli.out)?;
                        (cfg, ae, digest)
                    } else {
                        let path = checkpoint_path(cli, ckpt);
                        let (ae, sha) = load_model(&path, &cfg)?;
                        (cfg, ae, FileDigest { path, sha256: sha })
                    }
                }
            };
            let rows = experiment::run_sweep(&ae, &cfg, print_row)?;
            let csv_path = cli.out.join("results.csv");
            results::write_results(&rows, &csv_path)?;
            let plot = cli.out.join("plot_results.py");
            results::write_plot_script("results.csv", &rows, &plot)?;
            let mut m = Manifest::new("sweep", &cfg, digest);
            m.outputs.push(FileDigest::of(&csv_path)?);
            m.outputs.push(FileDigest::of(&plot)?);
            m.write(&cli.out.join("manifest.json"))?;
            eprintln!("{} rows -> {}", rows.len(), csv_path.display());
            Ok(())
        }
    }
}
