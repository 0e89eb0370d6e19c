use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use eeg_inception::data::{filter_rejected, load_trialset, save_trialset, synth_generate, train_test_split, TrialSet};
use eeg_inception::dsp::{augment, design_butterworth_highpass};
use eeg_inception::model::{block_param_counts, count_params, load_model, save_model};
use eeg_inception::nn::Parameterized;
use eeg_inception::train::{
    ablate, cross_subject_stats, evaluate, fit, loso_evaluate, time_inference, write_ablation_csv,
    write_confusion_csv, write_history_csv, write_roc_csv, LosoFold, MetricsReport, TimingReport,
};
use eeg_inception::{Model32, ModelConfig, Shape, Tensor32};
use log::{info, warn};
use serde::Serialize;

use crate::args::*;
use crate::config::RunConfig;
use crate::exit::usage;

pub const TRIALS_MANIFEST: &str = "trials.json";
pub const AUGMENTED_MANIFEST: &str = "augmented.json";
pub const PROVENANCE: &str = "provenance.csv";
pub const MODEL_FILE: &str = "model.bin";
pub const HISTORY: &str = "history.csv";
pub const METRICS: &str = "metrics.json";
pub const CONFUSION: &str = "confusion.csv";
pub const ROC: &str = "roc.csv";
pub const ABLATION: &str = "ablation.csv";
pub const LOSO: &str = "loso.csv";
pub const TIMING: &str = "timing.json";

/// Single-sample time of the original GPU implementation, seconds.
const GPU_REFERENCE_SECONDS: f64 = 0.0187;

pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.apply_seed(seed);
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    let name = match &cli.command {
        Command::Synth(a) => {
            set_path(&mut cfg.paths.out, &a.out);
            set(&mut cfg.synth.n_per_class, &a.n_per_class);
            set(&mut cfg.synth.n_subjects, &a.n_subjects);
            set(&mut cfg.synth.time_len, &a.time_len);
            set(&mut cfg.synth.rhythm_amplitude, &a.rhythm_amplitude);
            set(&mut cfg.synth.noise_std, &a.noise_std);
            set(&mut cfg.synth.high_noise_std, &a.high_noise_std);
            "synth"
        }
        Command::Augment(a) => {
            set_path(&mut cfg.paths.data, &a.data);
            set_path(&mut cfg.paths.out, &a.out);
            set(&mut cfg.augment.factor, &a.factor);
            "augment"
        }
        Command::Train(a) => {
            data_flags(&mut cfg, &a.data);
            model_flags(&mut cfg, &a.model);
            train_flags(&mut cfg, &a.train);
            set_path(&mut cfg.paths.out, &a.out);
            "train"
        }
        Command::Eval(a) => {
            data_flags(&mut cfg, &a.data);
            set_path(&mut cfg.paths.model, &a.model);
            set(&mut cfg.eval.positive_class, &a.positive_class);
            set_path(&mut cfg.paths.out, &a.out);
            "eval"
        }
        Command::Ablate(a) => {
            data_flags(&mut cfg, &a.data);
            model_flags(&mut cfg, &a.model);
            train_flags(&mut cfg, &a.train);
            set(&mut cfg.ablate.depths, &a.depths);
            if a.no_train {
                cfg.ablate.train = false;
            }
            set_path(&mut cfg.paths.out, &a.out);
            "ablate"
        }
        Command::Loso(a) => {
            set_path(&mut cfg.paths.data, &a.data);
            model_flags(&mut cfg, &a.model);
            train_flags(&mut cfg, &a.train);
            set(&mut cfg.eval.positive_class, &a.positive_class);
            set_path(&mut cfg.paths.out, &a.out);
            "loso"
        }
        Command::Params(a) => {
            model_flags(&mut cfg, &a.model);
            "params"
        }
        Command::FilterExport(a) => {
            set(&mut cfg.filter.order, &a.order);
            set(&mut cfg.filter.cutoff_hz, &a.cutoff);
            set(&mut cfg.filter.sample_rate_hz, &a.sample_rate);
            "filter-export"
        }
        Command::Bench(a) => {
            set_path(&mut cfg.paths.model, &a.model);
            model_flags(&mut cfg, &a.model_flags);
            set(&mut cfg.bench.depths, &a.depths);
            set(&mut cfg.bench.samples, &a.samples);
            set_path(&mut cfg.paths.out, &a.out);
            "bench"
        }
    };
    cfg.command = Some(name.to_string());
    Ok(cfg)
}

fn set<T: Clone>(slot: &mut T, flag: &Option<T>) {
    if let Some(v) = flag {
        *slot = v.clone();
    }
}

fn set_path(slot: &mut Option<PathBuf>, flag: &Option<PathBuf>) {
    if flag.is_some() {
        slot.clone_from(flag);
    }
}

fn data_flags(cfg: &mut RunConfig, flags: &DataFlags) {
    set_path(&mut cfg.paths.data, &flags.data);
    set_path(&mut cfg.paths.test, &flags.test);
}

fn model_flags(cfg: &mut RunConfig, flags: &ModelFlags) {
    if let Some(preset) = flags.preset {
        let seed = cfg.model.seed;
        cfg.model = match preset {
            Preset::Binary => ModelConfig::binary(),
            Preset::FourClass => ModelConfig::four_class(),
        }
        .with_seed(seed);
    }
    set(&mut cfg.model.depth, &flags.depth);
    set(&mut cfg.model.time_len, &flags.time_len);
}

fn train_flags(cfg: &mut RunConfig, flags: &TrainFlags) {
    set(&mut cfg.train.epochs, &flags.epochs);
    set(&mut cfg.train.batch_size, &flags.batch_size);
    set(&mut cfg.train.adam.learning_rate, &flags.learning_rate);
    set(&mut cfg.train.augment.factor, &flags.augment_factor);
}

pub fn run(cli: &Cli, cfg: &mut RunConfig) -> Result<()> {
    match &cli.command {
        Command::Synth(_) => synth(cfg),
        Command::Augment(_) => augment_cmd(cfg),
        Command::Train(_) => train_cmd(cfg),
        Command::Eval(a) => eval_cmd(cfg, a.all),
        Command::Ablate(_) => ablate_cmd(cfg),
        Command::Loso(_) => loso_cmd(cfg),
        Command::Params(a) => params_cmd(cfg, a.blocks),
        Command::FilterExport(a) => filter_cmd(cfg, a.output.as_deref()),
        Command::Bench(_) => bench_cmd(cfg),
    }
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.paths.out.clone().ok_or_else(|| usage("missing --out (or paths.out in the config)"))?;
    fs::create_dir_all(&dir).with_context(|| format!("creating run directory {}", dir.display()))?;
    Ok(dir)
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str, key: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| usage(format!("missing {flag} (or {key} in the config)")))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush().with_context(|| format!("writing {}", path.display()))
}

fn finish_csv(path: &Path, result: eeg_inception::Result<()>) -> Result<()> {
    result.with_context(|| format!("writing {}", path.display()))
}

/// Loads a manifest and drops rejected trials.
fn load_data(path: &Path) -> Result<TrialSet> {
    let set = load_trialset(path).with_context(|| format!("loading trial manifest {}", path.display()))?;
    let (kept, reports) = filter_rejected(&set);
    for r in reports.iter().filter(|r| r.rejected > 0) {
        info!("{}: kept {} of {} trials", r.subject, r.accepted, r.total);
    }
    Ok(kept)
}

/// Training and test sets: the two manifests when a test manifest is
/// given, otherwise a stratified split of the data manifest.
fn partitions(cfg: &RunConfig) -> Result<(TrialSet, TrialSet)> {
    let data = load_data(required(&cfg.paths.data, "--data", "paths.data")?)?;
    match &cfg.paths.test {
        Some(test) => Ok((data, load_data(test)?)),
        None => train_test_split(&data, cfg.split.ratio, cfg.split.seed).context("splitting --data into train and test"),
    }
}

/// Takes channel and class counts from the data and checks trial length.
fn adapt_model(model: &mut ModelConfig, set: &TrialSet) -> Result<()> {
    if model.in_channels != set.n_channels() || model.n_classes != set.n_classes {
        info!(
            "model input set to {} channels, {} classes from the data",
            set.n_channels(),
            set.n_classes
        );
        model.in_channels = set.n_channels();
        model.n_classes = set.n_classes;
    }
    let shortest = set.min_len();
    if shortest < model.time_len {
        return Err(eeg_inception::Error::InvalidData(format!(
            "trials have as few as {shortest} samples but the model reads {} (set --time-len)",
            model.time_len
        ))
        .into());
    }
    Ok(())
}

fn class_names(n: usize) -> Vec<String> {
    (0..n).map(|c| format!("class_{c}")).collect()
}

fn synth(cfg: &mut RunConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let set = synth_generate(&cfg.synth).context("generating synthetic trials")?;
    let manifest = dir.join(TRIALS_MANIFEST);
    save_trialset(&set, &manifest).with_context(|| format!("writing {}", manifest.display()))?;
    cfg.write_resolved(&dir)?;
    println!("wrote {} trials to {}", set.len(), manifest.display());
    Ok(())
}

fn augment_cmd(cfg: &mut RunConfig) -> Result<()> {
    let set = load_data(required(&cfg.paths.data, "--data", "paths.data")?)?;
    let dir = out_dir(cfg)?;
    let (augmented, provenance) = augment(&set, &cfg.augment).context("augmenting --data")?;
    let manifest = dir.join(AUGMENTED_MANIFEST);
    save_trialset(&augmented, &manifest).with_context(|| format!("writing {}", manifest.display()))?;
    let path = dir.join(PROVENANCE);
    let mut w = csv::Writer::from_writer(create(&path)?);
    for p in &provenance {
        w.serialize(p)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    cfg.write_resolved(&dir)?;
    println!("{} → {} trials in {}", set.len(), augmented.len(), manifest.display());
    Ok(())
}

#[derive(Serialize)]
struct TrainTiming {
    train_seconds: f64,
    epochs: usize,
    train_trials: usize,
}

fn train_cmd(cfg: &mut RunConfig) -> Result<()> {
    let (train_set, _) = partitions(cfg)?;
    adapt_model(&mut cfg.model, &train_set)?;
    let dir = out_dir(cfg)?;
    let model_path = dir.join(MODEL_FILE);
    cfg.paths.model = Some(model_path.clone());
    cfg.write_resolved(&dir)?;

    let mut model = Model32::new(cfg.model.clone())?;
    info!("{} parameters, {} training trials", model.num_params(), train_set.len());
    let start = Instant::now();
    let history = fit(&mut model, &train_set, &cfg.train).context("training")?;
    let seconds = start.elapsed().as_secs_f64();

    save_model(&model, &model_path).with_context(|| format!("writing {}", model_path.display()))?;
    let path = dir.join(HISTORY);
    finish_csv(&path, write_history_csv(&history, create(&path)?))?;
    write_json(
        &dir.join(TIMING),
        &TrainTiming {
            train_seconds: seconds,
            epochs: history.len(),
            train_trials: train_set.len(),
        },
    )?;
    if let Some(last) = history.last() {
        println!(
            "epoch {}: loss {:.4}, train accuracy {:.4} ({seconds:.1} s)",
            last.epoch, last.loss, last.accuracy
        );
    }
    println!("model saved to {}", model_path.display());
    Ok(())
}

fn eval_cmd(cfg: &mut RunConfig, all: bool) -> Result<()> {
    let model_path = required(&cfg.paths.model, "--model", "paths.model")?.to_path_buf();
    let model: Model32 = load_model(&model_path).with_context(|| format!("loading model {}", model_path.display()))?;
    let test_set = if all {
        load_data(required(&cfg.paths.data, "--data", "paths.data")?)?
    } else {
        partitions(cfg)?.1
    };
    let dir = out_dir(cfg)?;
    cfg.model = model.config().clone();
    cfg.write_resolved(&dir)?;
    let eval = evaluate(&model, &test_set, cfg.eval.positive_class).context("evaluating the test trials")?;
    write_json(&dir.join(METRICS), &eval.report)?;
    let path = dir.join(CONFUSION);
    finish_csv(&path, write_confusion_csv(&eval.confusion, &class_names(test_set.n_classes), create(&path)?))?;
    if let Some(roc) = &eval.roc {
        let path = dir.join(ROC);
        finish_csv(&path, write_roc_csv(roc, create(&path)?))?;
    }
    print_report(&eval.report);
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"))
}

fn print_report(r: &MetricsReport) {
    println!("samples   {}", r.n_samples);
    println!("accuracy  {}", fmt_opt(r.accuracy));
    println!("kappa     {}", fmt_opt(r.kappa));
    println!("macro F1  {}", fmt_opt(r.macro_f1));
    if r.n_classes == 2 {
        println!("F1 (class {})  {}", r.positive_class, fmt_opt(r.f1));
        println!("AUC       {}", fmt_opt(r.auc));
    }
}

fn ablate_cmd(cfg: &mut RunConfig) -> Result<()> {
    let data = if cfg.ablate.train {
        let (train_set, test_set) = partitions(cfg)?;
        adapt_model(&mut cfg.model, &train_set)?;
        Some((train_set, test_set))
    } else {
        None
    };
    let dir = out_dir(cfg)?;
    cfg.write_resolved(&dir)?;
    let rows = ablate::<f32>(
        &cfg.ablate.depths,
        &cfg.model,
        data.as_ref().map(|(a, b)| (a, b)),
        &cfg.train,
    );
    let path = dir.join(ABLATION);
    finish_csv(&path, write_ablation_csv(&rows, create(&path)?))?;
    for r in &rows {
        match &r.error {
            Some(e) => println!("M={:<3} failed: {e}", r.depth),
            None => println!(
                "M={:<3} params {:>9}  bytes {:>9}  accuracy {}",
                r.depth,
                r.closed_form_params,
                r.weight_bytes.unwrap_or(0),
                fmt_opt(r.test_accuracy)
            ),
        }
    }
    if rows.iter().any(|r| r.error.is_some()) {
        warn!("some depths failed; see {}", path.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct LosoSummary<'a> {
    pooled: &'a MetricsReport,
    folds: &'a [LosoFold],
    subject_accuracy_mean: Option<f64>,
    subject_accuracy_std: Option<f64>,
}

fn loso_cmd(cfg: &mut RunConfig) -> Result<()> {
    let set = load_data(required(&cfg.paths.data, "--data", "paths.data")?)?;
    adapt_model(&mut cfg.model, &set)?;
    let dir = out_dir(cfg)?;
    cfg.write_resolved(&dir)?;
    let report = loso_evaluate::<f32>(&set, &cfg.model, &cfg.train, cfg.eval.positive_class)
        .context("leave-one-subject-out evaluation")?;
    let accuracies: Vec<f64> = report.folds.iter().filter_map(|f| f.report.accuracy).collect();
    let stats = cross_subject_stats(&accuracies);
    write_json(
        &dir.join(METRICS),
        &LosoSummary {
            pooled: &report.pooled,
            folds: &report.folds,
            subject_accuracy_mean: stats.map(|s| s.0),
            subject_accuracy_std: stats.and_then(|s| s.1),
        },
    )?;
    let path = dir.join(CONFUSION);
    let pooled = eeg_inception::train::ConfusionMatrix::from_rows(&report.pooled.confusion)?;
    finish_csv(&path, write_confusion_csv(&pooled, &class_names(set.n_classes), create(&path)?))?;
    let path = dir.join(LOSO);
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(["subject", "seed", "n_train", "n_test", "accuracy", "kappa"])?;
    for f in &report.folds {
        w.write_record([
            f.subject.clone(),
            f.seed.to_string(),
            f.n_train.to_string(),
            f.n_test.to_string(),
            f.report.accuracy.map(|v| v.to_string()).unwrap_or_default(),
            f.report.kappa.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    for f in &report.folds {
        println!("{:<8} accuracy {}", f.subject, fmt_opt(f.report.accuracy));
    }
    println!("pooled");
    print_report(&report.pooled);
    Ok(())
}

fn params_cmd(cfg: &RunConfig, blocks: bool) -> Result<()> {
    cfg.model.validate()?;
    if blocks {
        for b in block_param_counts(&cfg.model) {
            println!("{:<16} {}", b.name, b.params);
        }
    }
    println!("{}", count_params(&cfg.model));
    Ok(())
}

fn filter_cmd(cfg: &RunConfig, output: Option<&Path>) -> Result<()> {
    let f = &cfg.filter;
    let filter = design_butterworth_highpass(f.order, f.cutoff_hz, f.sample_rate_hz)?;
    let table = filter.to_table();
    match output {
        Some(path) => fs::write(path, table).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{table}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchRow {
    depth: usize,
    params: usize,
    timing: TimingReport,
}

fn bench_cmd(cfg: &mut RunConfig) -> Result<()> {
    let models: Vec<Model32> = match &cfg.paths.model {
        Some(path) => vec![load_model(path).with_context(|| format!("loading model {}", path.display()))?],
        None => {
            let depths = if cfg.bench.depths.is_empty() {
                vec![cfg.model.depth]
            } else {
                cfg.bench.depths.clone()
            };
            depths
                .iter()
                .map(|&m| Model32::new(cfg.model.clone().with_depth(m)).with_context(|| format!("building model with depth {m}")))
                .collect::<Result<_>>()?
        }
    };
    let mut rows = Vec::new();
    for model in &models {
        let c = model.config();
        let sample = Tensor32::from_fn(Shape::new(1, c.in_channels, c.time_len), |_, ch, t| {
            ((t as f32) * 0.25 + ch as f32).sin()
        });
        let timing = time_inference(model, &sample, cfg.bench.samples)?;
        println!(
            "M={:<3} params {:>9}  median {:.6} s/sample  (min {:.6}, max {:.6})",
            c.depth,
            model.num_params(),
            timing.median_seconds,
            timing.min_seconds,
            timing.max_seconds
        );
        rows.push(BenchRow {
            depth: c.depth,
            params: model.num_params(),
            timing,
        });
    }
    println!("reference: {GPU_REFERENCE_SECONDS} s/sample on a GPU");
    if cfg.paths.out.is_some() {
        let dir = out_dir(cfg)?;
        cfg.write_resolved(&dir)?;
        write_json(&dir.join(TIMING), &rows)?;
    }
    Ok(())
}
