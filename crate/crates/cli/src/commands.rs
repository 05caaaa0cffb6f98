//! The five pipeline commands.
//!
//! Seed discipline: the master `--seed` never feeds two purposes directly.
//! Synthesis hands it to the generator (which streams per clip); training
//! derives substreams for the split (stream 1), the weight initialization
//! (stream 2), and the epoch shuffles (stream 3).

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use ictal_core::dataset::{split_dataset, Label, Manifest, ManifestEntry};
use ictal_core::eval::{auc, confusion_at_threshold, roc_curve, write_roc_csv, write_roc_svg};
use ictal_core::features::{
    apply_stats, extract_clip_features, feature_stats, read_feature_csv, write_feature_csv,
    FeatureSequence, FeatureStats,
};
use ictal_core::neural::{
    load_checkpoint, predict, save_checkpoint, train, Model, ModelConfig, TrainConfig,
};
use ictal_core::rng::stream_seed;
use ictal_core::synth::{generate, SynthConfig};

use crate::config::RunConfig;
use crate::{EvaluateArgs, ExtractArgs, RocArgs, SynthArgs, TrainArgs};

const SPLIT_STREAM: u64 = 1;
const INIT_STREAM: u64 = 2;
const EPOCH_STREAM: u64 = 3;

fn prepare_out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating output dir {}", out.display()))
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.common.config {
        cfg.apply_file(path)?;
    }
    if let Some(seed) = args.common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.preictal {
        cfg.preictal = n;
    }
    if let Some(n) = args.interictal {
        cfg.interictal = n;
    }
    if let Some(n) = args.channels {
        cfg.channels = n;
    }
    if let Some(x) = args.duration_s {
        cfg.duration_s = x;
    }
    if let Some(x) = args.sampling_rate_hz {
        cfg.sampling_rate_hz = x;
    }
    if let Some(x) = args.noise_sigma {
        cfg.noise_sigma = x;
    }
    if let Some(x) = args.amplitude {
        cfg.signature_amplitude = x;
    }
    if let Some(band) = &args.band {
        cfg.signature_band = crate::config::parse_bins(band)?
            .bins()
            .first()
            .copied()
            .context("empty band")?;
    }

    let out = &args.common.out;
    prepare_out_dir(out)?;
    let synth_cfg = SynthConfig {
        n_preictal: cfg.preictal,
        n_interictal: cfg.interictal,
        channels: cfg.channels,
        duration_s: cfg.duration_s,
        sampling_rate_hz: cfg.sampling_rate_hz,
        noise_sigma: cfg.noise_sigma,
        signature_band: cfg.signature_band,
        signature_amplitude: cfg.signature_amplitude,
        seed: cfg.seed,
    };
    let manifest = generate(&synth_cfg, out)?;
    cfg.write_resolved(&out.join("resolved_config.txt"))?;
    println!(
        "wrote {} clips ({} preictal, {} interictal) and manifest.tsv to {}",
        manifest.len(),
        cfg.preictal,
        cfg.interictal,
        out.display()
    );
    Ok(())
}

/// Reads every manifest entry and extracts its feature sequence.
fn extract_manifest(
    manifest: &Manifest,
    window_seconds: f64,
    cfg: &RunConfig,
) -> Result<Vec<FeatureSequence>> {
    let mut seqs = Vec::with_capacity(manifest.len());
    for index in 0..manifest.len() {
        let clip = manifest.read_entry(index)?;
        let seq = extract_clip_features(&clip, window_seconds, &cfg.bins)
            .with_context(|| format!("extracting {}", manifest.resolve(index).display()))?;
        seqs.push(seq);
    }
    Ok(seqs)
}

pub fn cmd_extract(args: &ExtractArgs) -> Result<()> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.common.config {
        cfg.apply_file(path)?;
    }
    if let Some(x) = args.window_seconds {
        cfg.window_seconds = x;
    }

    let manifest = Manifest::load(&args.manifest)?;
    if manifest.is_empty() {
        bail!("manifest {} lists no clips", args.manifest.display());
    }
    let out = &args.common.out;
    prepare_out_dir(out)?;
    let seqs = extract_manifest(&manifest, cfg.window_seconds, &cfg)?;
    let channels = seqs[0].feature_dim() / (cfg.bins.len() + 1);
    let csv = out.join("features.csv");
    write_feature_csv(&csv, &seqs, channels, cfg.bins.len())?;
    cfg.write_resolved(&out.join("resolved_config.txt"))?;
    let rows: usize = seqs.iter().map(FeatureSequence::seq_len).sum();
    println!(
        "extracted {} rows ({} clips x windows) to {}",
        rows,
        seqs.len(),
        csv.display()
    );
    Ok(())
}

/// Splits sequences at clip granularity with the manifest shuffle, so
/// feature-cache input splits exactly like raw-clip input.
fn split_sequences(
    seqs: Vec<FeatureSequence>,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<FeatureSequence>, Vec<FeatureSequence>)> {
    let entries = seqs
        .iter()
        .map(|s| ManifestEntry {
            path: PathBuf::from(format!("{}.eegc", s.clip_id)),
            label: s.label,
        })
        .collect();
    let view = Manifest::new("", entries)?;
    let split = split_dataset(&view, fraction, seed)?;
    let mut slots: Vec<Option<FeatureSequence>> = seqs.into_iter().map(Some).collect();
    let take = |slots: &mut Vec<Option<FeatureSequence>>, indices: &[usize]| {
        indices
            .iter()
            .map(|&i| slots[i].take().expect("split indices are disjoint"))
            .collect::<Vec<_>>()
    };
    let train = take(&mut slots, &split.train);
    let test = take(&mut slots, &split.test);
    Ok((train, test))
}

fn write_train_log(path: &Path, history: &[ictal_core::neural::EpochStats]) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "epoch,mean_loss,train_auc")?;
    for e in history {
        writeln!(w, "{},{},{}", e.epoch, e.mean_loss, e.train_auc)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.common.config {
        cfg.apply_file(path)?;
    }
    if let Some(seed) = args.common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.epochs {
        cfg.epochs = n;
    }
    if let Some(x) = args.learning_rate {
        cfg.learning_rate = x;
    }
    if let Some(n) = args.batch_size {
        cfg.batch_size = n;
    }
    if let Some(n) = args.hidden_size {
        cfg.hidden_size = n;
    }
    if let Some(x) = args.window_seconds {
        cfg.window_seconds = x;
    }
    if let Some(x) = args.train_fraction {
        cfg.train_fraction = x;
    }
    if args.no_normalize {
        cfg.normalize = false;
    }
    if args.class_weighting {
        cfg.class_weighting = true;
    }

    let out = &args.common.out;
    prepare_out_dir(out)?;

    let split_seed = stream_seed(cfg.seed, SPLIT_STREAM);
    let (train_seqs, test_seqs) = match (&args.manifest, &args.features) {
        (Some(manifest_path), None) => {
            let manifest = Manifest::load(manifest_path)?;
            if manifest.is_empty() {
                bail!("manifest {} lists no clips", manifest_path.display());
            }
            let split = split_dataset(&manifest, cfg.train_fraction, split_seed)?;
            let train_manifest = manifest.subset(&split.train);
            let test_manifest = manifest.subset(&split.test);
            train_manifest.save(&out.join("train_manifest.tsv"))?;
            test_manifest.save(&out.join("test_manifest.tsv"))?;
            (
                extract_manifest(&train_manifest, cfg.window_seconds, &cfg)?,
                extract_manifest(&test_manifest, cfg.window_seconds, &cfg)?,
            )
        }
        (None, Some(features_path)) => {
            let seqs = read_feature_csv(features_path)?;
            if seqs.is_empty() {
                bail!("feature cache {} is empty", features_path.display());
            }
            let channels = seqs[0].feature_dim() / (cfg.bins.len() + 1);
            let (train_seqs, test_seqs) =
                split_sequences(seqs, cfg.train_fraction, split_seed)?;
            write_feature_csv(
                &out.join("train_features.csv"),
                &train_seqs,
                channels,
                cfg.bins.len(),
            )?;
            if !test_seqs.is_empty() {
                write_feature_csv(
                    &out.join("test_features.csv"),
                    &test_seqs,
                    channels,
                    cfg.bins.len(),
                )?;
            }
            (train_seqs, test_seqs)
        }
        _ => bail!("exactly one of --manifest or --features is required"),
    };

    let dim = train_seqs[0].feature_dim();
    let seq_len = train_seqs[0].seq_len();
    let stats = if cfg.normalize {
        feature_stats(&train_seqs)?
    } else {
        FeatureStats::identity(dim)
    };
    let train_normed = apply_stats(&stats, &train_seqs)?;

    let model_config = ModelConfig {
        input_dim: dim,
        hidden_size: cfg.hidden_size,
        seq_len,
        ..ModelConfig::default()
    };
    let mut model = Model::init(model_config, stream_seed(cfg.seed, INIT_STREAM))?;
    let train_config = TrainConfig {
        learning_rate: cfg.learning_rate,
        batch_size: cfg.batch_size,
        epochs: cfg.epochs,
        seed: stream_seed(cfg.seed, EPOCH_STREAM),
        class_weighting: cfg.class_weighting,
        ..TrainConfig::default()
    };
    let history = train(&mut model, &train_normed, &train_config)?;

    let checkpoint_path = out.join("checkpoint.blsm");
    save_checkpoint(&checkpoint_path, &model, &stats)?;
    write_train_log(&out.join("train_log.csv"), &history)?;
    cfg.write_resolved(&out.join("resolved_config.txt"))?;

    match history.last() {
        Some(last) => println!(
            "trained {} epochs on {} clips ({} held out): final mean loss {:.6}, train AUC {:.6}; checkpoint at {}",
            history.len(),
            train_seqs.len(),
            test_seqs.len(),
            last.mean_loss,
            last.train_auc,
            checkpoint_path.display()
        ),
        None => println!(
            "no training epochs requested; wrote the initialized checkpoint to {}",
            checkpoint_path.display()
        ),
    }
    Ok(())
}

fn write_scores_csv(path: &Path, seqs: &[FeatureSequence], scores: &[f64]) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "clip_id,label,score")?;
    for (seq, score) in seqs.iter().zip(scores) {
        writeln!(w, "{},{},{}", seq.clip_id, seq.label, score)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.common.config {
        cfg.apply_file(path)?;
    }
    if let Some(x) = args.window_seconds {
        cfg.window_seconds = x;
    }

    let checkpoint = load_checkpoint(&args.checkpoint)?;
    let seqs = match (&args.manifest, &args.features) {
        (Some(manifest_path), None) => {
            let manifest = Manifest::load(manifest_path)?;
            if manifest.is_empty() {
                bail!("manifest {} lists no clips", manifest_path.display());
            }
            extract_manifest(&manifest, cfg.window_seconds, &cfg)?
        }
        (None, Some(features_path)) => read_feature_csv(features_path)?,
        _ => bail!("exactly one of --manifest or --features is required"),
    };
    if seqs.is_empty() {
        bail!("no sequences to evaluate");
    }

    let normed = apply_stats(&checkpoint.stats, &seqs)?;
    let scores = predict(&checkpoint.model, &normed)?;
    let labels = seqs
        .iter()
        .map(|s| Ok(s.label.class_index()? == 1))
        .collect::<Result<Vec<bool>, ictal_core::Error>>()?;

    let curve = roc_curve(&scores, &labels)?;
    let auc_value = auc(&curve);
    let counts = confusion_at_threshold(&scores, &labels, 0.5)?;

    let out = &args.common.out;
    prepare_out_dir(out)?;
    write_scores_csv(&out.join("scores.csv"), &seqs, &scores)?;
    write_roc_csv(&out.join("roc.csv"), &curve)?;
    write_roc_svg(&out.join("roc.svg"), &curve)?;
    cfg.write_resolved(&out.join("resolved_config.txt"))?;

    println!("test_auc = {auc_value}");
    println!(
        "confusion at 0.5: tp={} fp={} fn={} tn={} (tpr={:.4}, fpr={:.4})",
        counts.true_pos,
        counts.false_pos,
        counts.false_neg,
        counts.true_neg,
        counts.tpr(),
        counts.fpr()
    );
    println!("roc outputs in {}", out.display());
    Ok(())
}

/// Parses a `clip_id,label,score` CSV written by `evaluate`.
fn read_scores_csv(path: &Path) -> Result<(Vec<f64>, Vec<bool>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "clip_id,label,score" => {}
        _ => bail!("{}: expected header `clip_id,label,score`", path.display()),
    }
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            bail!("{}:{}: expected 3 fields", path.display(), lineno + 1);
        }
        let label = Label::parse(fields[1].trim())
            .with_context(|| format!("{}:{}: bad label", path.display(), lineno + 1))?;
        let score: f64 = fields[2]
            .trim()
            .parse()
            .with_context(|| format!("{}:{}: bad score", path.display(), lineno + 1))?;
        labels.push(label.class_index()? == 1);
        scores.push(score);
    }
    Ok((scores, labels))
}

pub fn cmd_roc(args: &RocArgs) -> Result<()> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.common.config {
        cfg.apply_file(path)?;
    }
    let (scores, labels) = read_scores_csv(&args.scores)?;
    if scores.is_empty() {
        bail!("{} holds no scores", args.scores.display());
    }
    let curve = roc_curve(&scores, &labels)?;
    let out = &args.common.out;
    prepare_out_dir(out)?;
    write_roc_csv(&out.join("roc.csv"), &curve)?;
    write_roc_svg(&out.join("roc.svg"), &curve)?;
    cfg.write_resolved(&out.join("resolved_config.txt"))?;
    println!("auc = {}", auc(&curve));
    println!("roc outputs in {}", out.display());
    Ok(())
}
