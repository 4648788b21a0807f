use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use smlp_core::config::KvConfig;
use smlp_core::features::{apply_normalizer, extract_features_with, ExtractConfig, Gazetteer};
use smlp_core::harness::{
    compare_models, compare_optimizers, evaluate, prepare, split, train, write_confusion_csv,
    write_curve_csv, write_metrics_csv, ExperimentConfig, ModelReport, SplitManifest,
};
use smlp_core::ingest::{
    assemble_instances, load_instances, parse_query_log, read_document_index, read_event_mappings, save_instances,
    AllTokensMatcher,
};
use smlp_core::network::init_model;
use smlp_core::optim::Method;
use smlp_core::{Checkpoint, Error, LabeledDataset, Result, SyntheticSpec};

#[derive(Parser)]
#[command(name = "smlp", version, about = "Classify search queries into dynamic event classes")]
struct Cli {
    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the `seed` key
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate labeled synthetic instances
    Generate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Build instances from a query log, a document index and an event mapping
    Ingest {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        mapping: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract feature vectors from labeled instances
    Extract {
        #[arg(long)]
        instances: PathBuf,
        /// Directory with person/location/organization/temporal lists
        #[arg(long)]
        gazetteer: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a fit/validation/test split manifest
    Split {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model and save its best-validation checkpoint
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// Split to use; drawn from the seed when absent
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Per-iteration training loss
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Score a checkpoint on a dataset's test part (or all of it without a manifest)
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long)]
        confusion: Option<PathBuf>,
    },
    /// Loss curves of the learning methods over several training-set sizes
    CompareOptimizers {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Comma-separated method names; all seven when absent
        #[arg(long, value_delimiter = ',')]
        methods: Vec<Method>,
    },
    /// Naive Bayes, single MLP and stacked MLP on one split
    CompareModels {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<KvConfig> {
    let mut cfg = match &cli.config {
        Some(path) => KvConfig::load(path)?,
        None => KvConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set("seed", seed);
    }
    let mut probe = cfg.clone();
    SyntheticSpec::from_config(&mut probe)?;
    ExtractConfig::from_config(&mut probe)?;
    ExperimentConfig::from_config(&mut probe)?;
    probe.finish()?;
    Ok(cfg)
}

fn experiment_config(cfg: &KvConfig) -> Result<ExperimentConfig> {
    ExperimentConfig::from_config(&mut cfg.clone())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| io_error(path, e))
}

fn manifest_for(ds: &LabeledDataset, manifest: Option<&Path>, exp: &ExperimentConfig) -> Result<SplitManifest> {
    match manifest {
        Some(path) => SplitManifest::load(path),
        None => split(ds, exp.seed, exp.stratified),
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Generate { out } => {
            let spec = SyntheticSpec::from_config(&mut cfg.clone())?;
            let instances: Vec<_> = smlp_core::generate_synthetic(&spec)?
                .into_iter()
                .map(|(i, c)| (i, Some(c)))
                .collect();
            save_instances(&out, &instances)?;
            println!("wrote {} instances to {}", instances.len(), out.display());
        }
        Command::Ingest { log, docs, mapping, out } => {
            let (records, skipped) = parse_query_log(&log)?;
            let docs = read_document_index(&docs)?;
            let first = records.iter().map(|r| r.date()).min();
            let last = records.iter().map(|r| r.date()).max();
            let span = first
                .zip(last)
                .ok_or_else(|| Error::Data(format!("{}: no usable records", log.display())))?;
            let mappings = read_event_mappings(&mapping, span)?;
            let instances = assemble_instances(&records, &docs, &mappings, &AllTokensMatcher)?;
            save_instances(&out, &instances)?;
            println!(
                "wrote {} instances to {} ({} log records, {skipped} malformed lines skipped)",
                instances.len(),
                out.display(),
                records.len()
            );
        }
        Command::Extract { instances, gazetteer, out } => {
            let extract_cfg = ExtractConfig::from_config(&mut cfg.clone())?;
            let gz = match gazetteer {
                Some(dir) => Gazetteer::load_dir(dir)?,
                None => Gazetteer::builtin(),
            };
            let rows = load_instances(&instances)?
                .iter()
                .enumerate()
                .map(|(i, (inst, label))| {
                    let label = label.ok_or_else(|| Error::Data(format!("instance {} has no label", i + 1)))?;
                    Ok((extract_features_with(inst, &gz, &extract_cfg)?, label))
                })
                .collect::<Result<Vec<_>>>()?;
            let ds = LabeledDataset::new(rows, instances.display().to_string());
            ds.save(&out)?;
            println!("wrote {} feature vectors to {}", ds.len(), out.display());
        }
        Command::Split { dataset, out } => {
            let exp = experiment_config(&cfg)?;
            let ds = LabeledDataset::load(&dataset)?;
            let m = split(&ds, exp.seed, exp.stratified)?;
            m.save(&out)?;
            println!(
                "fit {} / validation {} / test {} written to {}",
                m.fit.len(),
                m.validation.len(),
                m.test.len(),
                out.display()
            );
        }
        Command::Train {
            dataset,
            manifest,
            out,
            curve,
        } => {
            let exp = experiment_config(&cfg)?;
            let ds = LabeledDataset::load(&dataset)?;
            let m = manifest_for(&ds, manifest.as_deref(), &exp)?;
            let parts = prepare(&ds, &m)?;
            let model = init_model(&exp.train.architecture, exp.seed)?;
            let outcome = train(&model, &exp.optim, &parts.fit, Some(&parts.validation), &exp.train_config())?;
            Checkpoint {
                model: outcome.best,
                stats: Some(parts.stats),
            }
            .save(&out)?;
            if let Some(path) = curve {
                let mut w = create(&path)?;
                write_curve_csv(&mut w, &outcome.curve)?;
                finish(w, &path)?;
            }
            match outcome.best_epoch {
                Some(e) => println!(
                    "saved checkpoint from iteration {} (validation loss {:.6}) to {}",
                    e + 1,
                    outcome.validation_curve[e],
                    out.display()
                ),
                None => println!("saved final checkpoint to {}", out.display()),
            }
        }
        Command::Evaluate {
            checkpoint,
            dataset,
            manifest,
            metrics,
            confusion,
        } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let ds = LabeledDataset::load(&dataset)?;
            let mut test = match manifest {
                Some(path) => {
                    let m = SplitManifest::load(path)?;
                    m.check(ds.len())?;
                    ds.subset(&m.test)
                }
                None => ds,
            };
            if let Some(stats) = &ck.stats {
                for (x, _) in &mut test.instances {
                    *x = apply_normalizer(x, stats);
                }
            }
            let report = evaluate(&ck.model, &test)?;
            let mut w = create(&metrics)?;
            write_metrics_csv(
                &mut w,
                &[ModelReport {
                    name: checkpoint.display().to_string(),
                    report: report.clone(),
                }],
            )?;
            finish(w, &metrics)?;
            if let Some(path) = confusion {
                let mut w = create(&path)?;
                write_confusion_csv(&mut w, &report)?;
                finish(w, &path)?;
            }
            println!("MAP {:.4}  accuracy {:.4}", report.map, report.accuracy);
        }
        Command::CompareOptimizers {
            dataset,
            out_dir,
            methods,
        } => {
            let exp = experiment_config(&cfg)?;
            let ds = LabeledDataset::load(&dataset)?;
            let methods = if methods.is_empty() { Method::ALL.to_vec() } else { methods };
            let curves = compare_optimizers(&ds, &exp, &methods)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| io_error(&out_dir, e))?;
            for c in &curves {
                let path = out_dir.join(format!("{}.csv", c.file_stem()));
                let mut w = create(&path)?;
                write_curve_csv(&mut w, &c.losses)?;
                finish(w, &path)?;
                println!(
                    "{:>4.0}% {:<18} final loss {:.6}",
                    c.fraction * 100.0,
                    c.method.name(),
                    c.final_loss().unwrap_or(f64::NAN)
                );
            }
        }
        Command::CompareModels { dataset, out } => {
            let exp = experiment_config(&cfg)?;
            let ds = LabeledDataset::load(&dataset)?;
            let reports = compare_models(&ds, &exp)?;
            let mut w = create(&out)?;
            write_metrics_csv(&mut w, &reports)?;
            finish(w, &out)?;
            for r in &reports {
                println!(
                    "{:<12} MAP {:.4}  macro precision {:.4}",
                    r.name, r.report.map, r.report.macro_precision
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
