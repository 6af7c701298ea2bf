//! The five subcommands: synth, extract, train, predict, evaluate.

use std::path::{Path, PathBuf};

use preasp_core::acoustics::{extract_features, FeatureConfig, FeatureSequence, NormStats};
use preasp_core::data::{Example, SearchWindow};
use preasp_core::evaluation::{
    evaluate, holdout_split, EvalReport, Fold, ToleranceMode, DEFAULT_THRESHOLDS_MS,
};
use preasp_core::frame_model::{decode_range, train_frame_model, FrameNet};
use preasp_core::structured::{infer, train_structured, StructuredModel};
use preasp_core::synthdata::{generate_corpus, GenParams};

use crate::annotations::{
    read_annotations, resolve_audio_path, write_annotations, AnnotationRecord,
};
use crate::config::{ModelKind, RunConfig};
use crate::jobs::parallel_map;
use crate::model_io::{load_model, save_frame_model, save_structured_model, Model};
use crate::predictions::{read_predictions, write_predictions, PredictionRecord};
use crate::report::{render_table, write_report_csv};
use crate::wav::{read_wav, write_wav_pcm16};
use crate::{CliError, Result};

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

pub struct SynthArgs {
    pub out_dir: PathBuf,
    pub n: usize,
    pub speakers: usize,
    pub seed: u64,
    pub sample_rate: u32,
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    if args.n == 0 || args.speakers == 0 {
        return Err(CliError::usage("--n and --speakers must be positive"));
    }
    let params = GenParams {
        seed: args.seed,
        speakers: args.speakers,
        sample_rate: args.sample_rate,
        ..Default::default()
    };
    let corpus = generate_corpus(&params, args.n);
    std::fs::create_dir_all(&args.out_dir).map_err(|e| {
        CliError::data(format!("cannot create {}: {e}", args.out_dir.display()))
    })?;
    let mut records = Vec::with_capacity(corpus.len());
    for (i, tok) in corpus.iter().enumerate() {
        let name = format!("tok_{i:05}.wav");
        write_wav_pcm16(&args.out_dir.join(&name), &tok.waveform)?;
        records.push(AnnotationRecord {
            audio_path: name,
            speaker: tok.speaker.clone(),
            word: tok.word.clone(),
            onset_ms: Some(tok.onset_ms),
            offset_ms: Some(tok.offset_ms),
            window_start_ms: tok.window_start_ms,
            window_end_ms: tok.window_end_ms,
        });
    }
    write_annotations(&args.out_dir.join("annotations.csv"), &records)?;
    println!(
        "wrote {} tokens ({} speakers, seed {}) to {}",
        args.n,
        args.speakers,
        args.seed,
        args.out_dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

pub fn cmd_extract(audio: &Path, out: &Path, cfg: &RunConfig) -> Result<()> {
    let wav = read_wav(audio)?;
    let features = extract_features(&wav, &cfg.feature_config())
        .map_err(|e| CliError::data(format!("{}: {e}", audio.display())))?;
    crate::features_csv::write_features(out, &features)?;
    println!("wrote {} frames to {}", features.len(), out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// shared loading
// ---------------------------------------------------------------------------

/// One annotation record with its extracted features and frame-grid
/// window/gold mapping.
pub struct LoadedExample {
    pub record: AnnotationRecord,
    pub features: FeatureSequence,
    pub window: SearchWindow,
    pub gold_frames: Option<(usize, usize)>,
}

fn load_one(
    annotations_path: &Path,
    record: AnnotationRecord,
    fc: &FeatureConfig,
) -> Result<LoadedExample> {
    let audio = resolve_audio_path(annotations_path, &record);
    let wav = read_wav(&audio)?;
    let features = extract_features(&wav, fc)
        .map_err(|e| CliError::data(format!("{}: {e}", audio.display())))?;
    let t_len = features.len();
    if t_len < 2 {
        return Err(CliError::data(format!(
            "{}: too short for any candidate",
            audio.display()
        )));
    }
    let start = (record.window_start_ms.max(0.0) as usize).min(t_len - 2);
    let end = (record.window_end_ms as usize).clamp(start + 1, t_len - 1);
    let window = SearchWindow::new(start, end)
        .map_err(|e| CliError::data(format!("{}: {e}", audio.display())))?;
    let gold_frames = match (record.onset_ms, record.offset_ms) {
        (Some(ts), Some(te)) => {
            let onset = (ts.round() as usize).clamp(window.start, window.end);
            let offset = (te.round() as usize).clamp(window.start, window.end);
            if onset >= offset {
                return Err(CliError::data(format!(
                    "{}: gold interval collapses on the frame grid",
                    audio.display()
                )));
            }
            Some((onset, offset))
        }
        _ => None,
    };
    Ok(LoadedExample {
        record,
        features,
        window,
        gold_frames,
    })
}

fn load_all(
    annotations_path: &Path,
    records: Vec<AnnotationRecord>,
    cfg: &RunConfig,
) -> Vec<Result<LoadedExample>> {
    let fc = cfg.feature_config();
    parallel_map(records, cfg.jobs, |r| load_one(annotations_path, r, &fc))
}

fn to_core_example(l: &LoadedExample) -> Result<Example> {
    let (onset, offset) = l.gold_frames.ok_or_else(|| {
        CliError::data(format!("{}: missing gold labels", l.record.audio_path))
    })?;
    Example::new(
        l.features.clone(),
        onset,
        offset,
        l.window,
        l.record.speaker.clone(),
        l.record.word.clone(),
    )
    .map_err(|e| CliError::data(format!("{}: {e}", l.record.audio_path)))
}

/// Seeded train/validation index split (validation gets at least one item).
/// The seed is offset so the split stream differs from the training RNG.
fn split_validation(n: usize, val_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    holdout_split(n, val_fraction, seed ^ 0x5eed_5a17).map_err(|e| {
        CliError::data(format!(
            "cannot carve a validation set from {n} examples: {e}"
        ))
    })
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

enum TrainedModel {
    Structured(StructuredModel),
    Frame { net: FrameNet, norm: NormStats },
}

fn train_on(
    examples: &[Example],
    train_idx: &[usize],
    val_idx: &[usize],
    cfg: &RunConfig,
    verbose: bool,
) -> Result<TrainedModel> {
    let train: Vec<Example> = train_idx.iter().map(|&i| examples[i].clone()).collect();
    let val: Vec<Example> = val_idx.iter().map(|&i| examples[i].clone()).collect();
    match cfg.model {
        ModelKind::Structured => {
            let (model, log) = train_structured(&train, &val, &cfg.structured_train_config())
                .map_err(|e| CliError::data(e.to_string()))?;
            if verbose {
                for e in &log {
                    println!(
                        "epoch {:>3}  val_task_loss {:.4}  best {:.4}",
                        e.epoch, e.val_task_loss, e.best_so_far
                    );
                }
            }
            Ok(TrainedModel::Structured(model))
        }
        ModelKind::Frame => {
            let feats: Vec<FeatureSequence> =
                train.iter().map(|e| e.features.clone()).collect();
            let norm = NormStats::fit(&feats).map_err(|e| CliError::data(e.to_string()))?;
            let (net, log) = train_frame_model(&train, &val, &norm, &cfg.frame_train_config())
                .map_err(|e| CliError::data(e.to_string()))?;
            if verbose {
                for e in &log {
                    println!(
                        "epoch {:>3}  val_bce {:.6}  best {:.6}",
                        e.epoch, e.val_bce, e.best_so_far
                    );
                }
            }
            Ok(TrainedModel::Frame { net, norm })
        }
    }
}

pub fn cmd_train(annotations: &Path, out: &Path, cfg: &RunConfig) -> Result<()> {
    let records = read_annotations(annotations)?;
    for r in &records {
        if !r.has_gold() {
            return Err(CliError::data(format!(
                "{}: missing gold labels (train needs ts_ms and te_ms)",
                r.audio_path
            )));
        }
    }
    let loaded: Vec<LoadedExample> = load_all(annotations, records, cfg)
        .into_iter()
        .collect::<Result<_>>()?;
    let examples: Vec<Example> = loaded
        .iter()
        .map(to_core_example)
        .collect::<Result<_>>()?;
    let (train_idx, val_idx) = split_validation(examples.len(), cfg.val_fraction, cfg.seed)?;
    println!(
        "training {} model on {} examples ({} validation)",
        match cfg.model {
            ModelKind::Structured => "structured",
            ModelKind::Frame => "frame",
        },
        train_idx.len(),
        val_idx.len()
    );
    match train_on(&examples, &train_idx, &val_idx, cfg, true)? {
        TrainedModel::Structured(model) => save_structured_model(out, &model)?,
        TrainedModel::Frame { net, norm } => save_frame_model(out, &net, &norm)?,
    }
    println!("wrote model to {}", out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

fn predict_one(model: &Model, l: &LoadedExample) -> Result<(f64, f64)> {
    match model {
        Model::Structured(m) => {
            let c = infer(m, &l.features, l.window)
                .map_err(|e| CliError::data(format!("{}: {e}", l.record.audio_path)))?;
            Ok((c.onset as f64, c.offset as f64))
        }
        Model::Frame { net, norm } => {
            let normed = norm.apply(&l.features);
            let d = decode_range(net, &normed, l.window.start, l.window.end)
                .map_err(|e| CliError::data(format!("{}: {e}", l.record.audio_path)))?;
            Ok((d.onset as f64, d.offset as f64))
        }
    }
}

pub fn cmd_predict(model_file: &Path, annotations: &Path, out: &Path, cfg: &RunConfig) -> Result<()> {
    let model = load_model(model_file)?;
    let records = read_annotations(annotations)?;
    let total = records.len();
    let loaded = load_all(annotations, records.clone(), cfg);

    let mut rows = Vec::with_capacity(total);
    let mut failures = 0usize;
    for (record, result) in records.iter().zip(loaded.into_iter()) {
        let gold = match (record.onset_ms, record.offset_ms) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        };
        let pred = result.and_then(|l| predict_one(&model, &l));
        let pred = match pred {
            Ok(p) => Some(p),
            Err(e) => {
                eprintln!("error: {e}");
                failures += 1;
                None
            }
        };
        rows.push(PredictionRecord {
            example_id: record.audio_path.clone(),
            pred,
            gold,
        });
    }
    write_predictions(out, &rows)?;
    println!(
        "wrote {} predictions ({} failed) to {}",
        total - failures,
        failures,
        out.display()
    );
    if failures > 0 {
        return Err(CliError::data(format!(
            "{failures} of {total} records failed; see stderr"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitSpec {
    KFold(usize),
    Loso,
}

impl std::str::FromStr for SplitSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "loso" {
            return Ok(SplitSpec::Loso);
        }
        if let Some(k) = s.strip_prefix("kfold:") {
            let k: usize = k
                .parse()
                .map_err(|_| format!("bad fold count in `{s}`"))?;
            if k < 2 {
                return Err("kfold needs k >= 2".into());
            }
            return Ok(SplitSpec::KFold(k));
        }
        Err(format!("unknown split `{s}` (kfold:<k> | loso)"))
    }
}

pub enum EvalInput {
    Predictions(PathBuf),
    Split(SplitSpec),
}

pub struct EvaluateArgs {
    pub annotations: PathBuf,
    pub input: EvalInput,
    pub tolerance_mode: ToleranceMode,
    pub report_csv: Option<PathBuf>,
    pub predictions_out: Option<PathBuf>,
}

pub fn cmd_evaluate(args: &EvaluateArgs, cfg: &RunConfig) -> Result<()> {
    match &args.input {
        EvalInput::Predictions(path) => evaluate_predictions(args, path, cfg),
        EvalInput::Split(spec) => evaluate_split(args, *spec, cfg),
    }
}

fn report_of(
    preds: &[(f64, f64)],
    golds: &[(f64, f64)],
    mode: ToleranceMode,
) -> Result<EvalReport> {
    evaluate(preds, golds, &DEFAULT_THRESHOLDS_MS, mode)
        .map_err(|e| CliError::data(e.to_string()))
}

fn evaluate_predictions(args: &EvaluateArgs, pred_path: &Path, _cfg: &RunConfig) -> Result<()> {
    let records = read_annotations(&args.annotations)?;
    let predictions = read_predictions(pred_path)?;
    let mut gold_by_id = std::collections::HashMap::new();
    for r in &records {
        if let (Some(a), Some(b)) = (r.onset_ms, r.offset_ms) {
            gold_by_id.insert(r.audio_path.clone(), (a, b));
        }
    }
    let mut preds = Vec::with_capacity(predictions.len());
    let mut golds = Vec::with_capacity(predictions.len());
    for p in &predictions {
        let pred = p.pred.ok_or_else(|| {
            CliError::data(format!("{}: prediction row is an error entry", p.example_id))
        })?;
        let gold = p
            .gold
            .or_else(|| gold_by_id.get(&p.example_id).copied())
            .ok_or_else(|| {
                CliError::data(format!(
                    "{}: no gold annotation for this id",
                    p.example_id
                ))
            })?;
        preds.push(pred);
        golds.push(gold);
    }
    let report = report_of(&preds, &golds, args.tolerance_mode)?;
    print!("{}", render_table("all", &report));
    if let Some(path) = &args.report_csv {
        write_report_csv(path, &[("all".into(), report)])?;
    }
    Ok(())
}

fn evaluate_split(args: &EvaluateArgs, spec: SplitSpec, cfg: &RunConfig) -> Result<()> {
    let records = read_annotations(&args.annotations)?;
    for r in &records {
        if !r.has_gold() {
            return Err(CliError::data(format!(
                "{}: split evaluation needs gold labels everywhere",
                r.audio_path
            )));
        }
    }
    let loaded: Vec<LoadedExample> = load_all(&args.annotations, records, cfg)
        .into_iter()
        .collect::<Result<_>>()?;
    let examples: Vec<Example> = loaded
        .iter()
        .map(to_core_example)
        .collect::<Result<_>>()?;

    let folds: Vec<Fold> = match spec {
        SplitSpec::KFold(k) => {
            preasp_core::evaluation::kfold_split(examples.len(), k, cfg.val_fraction, cfg.seed)
                .map_err(|e| CliError::data(e.to_string()))?
        }
        SplitSpec::Loso => {
            let speakers: Vec<String> =
                examples.iter().map(|e| e.speaker.clone()).collect();
            preasp_core::evaluation::loso_split(&speakers, cfg.val_fraction, cfg.seed)
                .map_err(|e| CliError::data(e.to_string()))?
        }
    };

    // train/test each fold; folds are independent, so they parallelize
    let fold_runs: Vec<Result<(Fold, Vec<(usize, (f64, f64))>)>> =
        parallel_map(folds, cfg.jobs, |fold| {
            let model = train_on(&examples, &fold.train, &fold.validation, cfg, false)?;
            let model = match model {
                TrainedModel::Structured(m) => Model::Structured(m),
                TrainedModel::Frame { net, norm } => Model::Frame { net, norm },
            };
            let mut preds = Vec::with_capacity(fold.test.len());
            for &i in &fold.test {
                let p = predict_one(&model, &loaded[i])?;
                preds.push((i, p));
            }
            Ok((fold, preds))
        });

    let mut all: Vec<(usize, (f64, f64))> = Vec::new();
    let mut rows = Vec::new();
    for run in fold_runs {
        let (fold, preds) = run?;
        let fold_preds: Vec<(f64, f64)> = preds.iter().map(|&(_, p)| p).collect();
        let fold_golds: Vec<(f64, f64)> = preds
            .iter()
            .map(|&(i, _)| {
                let r = &loaded[i].record;
                (r.onset_ms.unwrap(), r.offset_ms.unwrap())
            })
            .collect();
        let report = report_of(&fold_preds, &fold_golds, args.tolerance_mode)?;
        println!(
            "fold {:12} n={:<4} <=10ms {:.1}%  dTs {:.2}  dTe {:.2}",
            fold.label, report.examples, report.tolerance_pct[1], report.onset_mae_ms,
            report.offset_mae_ms
        );
        rows.push((fold.label.clone(), report));
        all.extend(preds);
    }

    all.sort_by_key(|&(i, _)| i);
    let preds: Vec<(f64, f64)> = all.iter().map(|&(_, p)| p).collect();
    let golds: Vec<(f64, f64)> = all
        .iter()
        .map(|&(i, _)| {
            let r = &loaded[i].record;
            (r.onset_ms.unwrap(), r.offset_ms.unwrap())
        })
        .collect();
    let pooled = report_of(&preds, &golds, args.tolerance_mode)?;
    println!();
    print!("{}", render_table("pooled", &pooled));

    if let Some(path) = &args.predictions_out {
        let rows: Vec<PredictionRecord> = all
            .iter()
            .map(|&(i, p)| {
                let r = &loaded[i].record;
                PredictionRecord {
                    example_id: r.audio_path.clone(),
                    pred: Some(p),
                    gold: Some((r.onset_ms.unwrap(), r.offset_ms.unwrap())),
                }
            })
            .collect();
        write_predictions(path, &rows)?;
    }
    if let Some(path) = &args.report_csv {
        let mut csv_rows = vec![("pooled".to_string(), pooled)];
        csv_rows.extend(rows);
        write_report_csv(path, &csv_rows)?;
    }
    Ok(())
}
