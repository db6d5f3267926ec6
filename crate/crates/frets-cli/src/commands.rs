//! Implementations behind the CLI subcommands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use frets_core::data::{chronological_split, ingest_csv, make_windows, write_csv, SeriesMatrix};
use frets_core::metrics::Metrics;
use frets_core::model::{frets_forward_single, LearnerParams};
use frets_core::tensor::RealTensor;
use frets_core::train::{evaluate, train, MinMaxScaler};
use frets_core::verify;
use frets_core::{Error, Result};

use crate::checkpoint::{self, Checkpoint, TrainingSummary};
use crate::config::{RunConfig, SynthSpec};

type T = RealTensor<f64>;

/// Which dataset split a command works on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitChoice {
    Train,
    Val,
    Test,
}

impl SplitChoice {
    fn name(self) -> &'static str {
        match self {
            SplitChoice::Train => "train",
            SplitChoice::Val => "val",
            SplitChoice::Test => "test",
        }
    }

    fn index(self) -> usize {
        match self {
            SplitChoice::Train => 0,
            SplitChoice::Val => 1,
            SplitChoice::Test => 2,
        }
    }
}

/// Which learner's weights to export.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum WhichLearner {
    Channel,
    Temporal,
}

impl WhichLearner {
    fn name(self) -> &'static str {
        match self {
            WhichLearner::Channel => "channel",
            WhichLearner::Temporal => "temporal",
        }
    }
}

fn load_series(cfg: &RunConfig, path: &Path) -> Result<SeriesMatrix> {
    ingest_csv(path, cfg.missing_policy, cfg.skip_timestamp_column)
}

/// Train per the run config and write `checkpoint.frets` plus the epoch log
/// into the output directory. Returns the checkpoint path.
pub fn cmd_train(config_path: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<PathBuf> {
    let mut cfg = RunConfig::load(config_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out_dir = cfg.resolve_out_dir(out)?;
    std::fs::create_dir_all(&out_dir)?;

    let series = load_series(&cfg, Path::new(&cfg.dataset))?;
    let [train_raw, val_raw, test_raw] = chronological_split(&series, &cfg.split_spec()?)?;
    let scaler = MinMaxScaler::fit(&train_raw);
    let train_seg = scaler.apply_series(&train_raw)?;
    let val_seg = scaler.apply_series(&val_raw)?;
    let test_seg = scaler.apply_series(&test_raw)?;

    let train_set = make_windows(&train_seg, cfg.lookback, cfg.horizon)?;
    let val_set = make_windows(&val_seg, cfg.lookback, cfg.horizon)?;
    // The test split is cut now so an undersized segment fails before
    // training rather than at evaluation time.
    let _ = make_windows(&test_seg, cfg.lookback, cfg.horizon)?;

    let model_cfg = cfg.model_config(series.channels());
    let train_cfg = cfg.train_config();
    println!(
        "training: {} channels, {} train / {} val windows, d={}, d_h={}",
        series.channels(),
        train_set.len(),
        val_set.len(),
        cfg.embed_dim,
        cfg.hidden_dim
    );

    let mut log_lines = String::from("epoch,train_loss,val_mae,val_rmse,wall_secs\n");
    let outcome = train(&model_cfg, &train_set, &val_set, &train_cfg, |r| {
        println!(
            "epoch={} train_loss={:.6e} val_mae={:.6e} val_rmse={:.6e} wall_secs={:.2}",
            r.epoch, r.train_loss, r.val_mae, r.val_rmse, r.wall_secs
        );
        let _ = writeln!(
            log_lines,
            "{},{:e},{:e},{:e},{:.3}",
            r.epoch, r.train_loss, r.val_mae, r.val_rmse, r.wall_secs
        );
    })?;
    std::fs::write(out_dir.join("train_log.csv"), &log_lines)?;

    let training = TrainingSummary {
        epochs_run: outcome.log.len(),
        best_epoch: outcome.best_epoch,
        best_val_mae: outcome.best_val.map(|m| m.mae),
        best_val_rmse: outcome.best_val.map(|m| m.rmse),
        final_train_loss: outcome.log.last().map(|r| r.train_loss),
    };
    let ckpt = Checkpoint {
        run_config: cfg,
        model_config: model_cfg,
        channel_names: series.names().to_vec(),
        scaler,
        training,
        params: outcome.params,
    };
    let path = out_dir.join("checkpoint.frets");
    checkpoint::save(&path, &ckpt)?;
    if let (Some(e), Some(m)) = (ckpt.training.best_epoch, ckpt.training.best_val_mae) {
        println!("best epoch {e}: val_mae={m:.6e}");
    }
    println!("checkpoint written to {}", path.display());
    Ok(path)
}

/// Score a split with a trained checkpoint; prints and writes MAE/RMSE on
/// the normalized scale.
pub fn cmd_evaluate(
    checkpoint_path: &Path,
    split: SplitChoice,
    data: Option<&Path>,
    out: Option<&Path>,
) -> Result<Metrics<f64>> {
    let ckpt = checkpoint::load(checkpoint_path)?;
    let data_path = data
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&ckpt.run_config.dataset));
    let series = load_series(&ckpt.run_config, &data_path)?;
    if series.channels() != ckpt.model_config.channels {
        return Err(Error::dimension(format!(
            "checkpoint expects {} channels, dataset {} has {}",
            ckpt.model_config.channels,
            data_path.display(),
            series.channels()
        )));
    }

    let segments = chronological_split(&series, &ckpt.run_config.split_spec()?)?;
    let segment = ckpt.scaler.apply_series(&segments[split.index()])?;
    let windows = make_windows(&segment, ckpt.run_config.lookback, ckpt.run_config.horizon)?;
    let metrics = evaluate(
        &ckpt.params,
        &windows,
        &ckpt.model_config,
        ckpt.run_config.batch_size,
    )?;
    println!(
        "split={} windows={} mae={:.6e} rmse={:.6e}",
        split.name(),
        windows.len(),
        metrics.mae,
        metrics.rmse
    );

    let out_dir = match out {
        Some(p) => p.to_path_buf(),
        None => checkpoint_path.parent().unwrap_or(Path::new(".")).to_path_buf(),
    };
    std::fs::create_dir_all(&out_dir)?;
    let report = serde_json::json!({
        "split": split.name(),
        "windows": windows.len(),
        "mae": metrics.mae,
        "rmse": metrics.rmse,
    });
    std::fs::write(
        out_dir.join(format!("metrics_{}.json", split.name())),
        format!("{report}\n"),
    )?;
    Ok(metrics)
}

/// Forecast from a CSV holding exactly the last `lookback` rows. Applies the
/// stored scaler, runs the model, inverts the scaling and writes `tau` rows.
pub fn cmd_predict(checkpoint_path: &Path, input: &Path, out: Option<&Path>) -> Result<PathBuf> {
    let ckpt = checkpoint::load(checkpoint_path)?;
    let window = load_series(&ckpt.run_config, input)?;
    if window.channels() != ckpt.model_config.channels {
        return Err(Error::dimension(format!(
            "checkpoint expects {} channels, input has {}",
            ckpt.model_config.channels,
            window.channels()
        )));
    }
    if window.timestamps() != ckpt.run_config.lookback {
        return Err(Error::dimension(format!(
            "input must hold exactly lookback={} rows, found {}",
            ckpt.run_config.lookback,
            window.timestamps()
        )));
    }

    let forecast = predict_window(&ckpt, window.values())?;
    let out_dir = match out {
        Some(p) => p.to_path_buf(),
        None => checkpoint_path.parent().unwrap_or(Path::new(".")).to_path_buf(),
    };
    std::fs::create_dir_all(&out_dir)?;
    let path = out_dir.join("predictions.csv");
    let as_series = SeriesMatrix::new(forecast, ckpt.channel_names.clone())?;
    write_csv(&path, &as_series)?;
    println!(
        "{} forecast rows written to {}",
        ckpt.run_config.horizon,
        path.display()
    );
    Ok(path)
}

/// The in-process predict pipeline: scale, forward, unscale. Shared with the
/// integration tests as the oracle for the CSV output.
pub fn predict_window(ckpt: &Checkpoint, window: &T) -> Result<T> {
    let normalized = ckpt.scaler.apply(window)?;
    let pred = frets_forward_single(&normalized, &ckpt.params, &ckpt.model_config)?;
    ckpt.scaler.invert(&pred)
}

/// Run every verification suite, print one line per suite, fail on any
/// violation.
pub fn cmd_check(seed: u64) -> Result<()> {
    let reports = verify::run_all(seed);
    let mut failed = None;
    for r in &reports {
        println!("{}", r.line());
        if !r.pass() && failed.is_none() {
            failed = Some(r.clone());
        }
    }
    match failed {
        None => {
            println!("all {} suites passed", reports.len());
            Ok(())
        }
        Some(r) => Err(Error::Property(format!(
            "suite {} exceeded threshold {:.0e} (max error {:.3e}{})",
            r.name,
            r.threshold,
            r.max_error,
            match r.failing_seed {
                Some(s) => format!(", failing seed {s}"),
                None => String::new(),
            }
        ))),
    }
}

/// Squared-mass fraction inside the diagonal band `|i - j| <= band`.
/// Returns `None` for an all-zero matrix (degenerate, nothing to normalize).
pub fn band_fraction(w: &T, band: usize) -> Option<f64> {
    let d = w.dim(0);
    let total: f64 = w.data().iter().map(|v| v * v).sum();
    if total == 0.0 {
        return None;
    }
    let mut in_band = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i.abs_diff(j) <= band {
                let v = w.at2(i, j);
                in_band += v * v;
            }
        }
    }
    Some(in_band / total)
}

/// Export a learner's complex weights as four CSV matrices per layer plus
/// an energy-concentration summary over diagonal bands.
pub fn cmd_inspect_weights(checkpoint_path: &Path, which: WhichLearner, out: Option<&Path>) -> Result<()> {
    let ckpt = checkpoint::load(checkpoint_path)?;
    let learner = match which {
        WhichLearner::Channel => &ckpt.params.channel,
        WhichLearner::Temporal => &ckpt.params.temporal,
    };
    let stack = match learner {
        Some(LearnerParams::Frequency(stack)) => stack,
        Some(LearnerParams::Time(_)) => {
            return Err(Error::config(format!(
                "{} learner is a time-domain baseline and has no complex weights",
                which.name()
            )))
        }
        None => {
            return Err(Error::config(format!(
                "checkpoint has no {} learner (ablation variant)",
                which.name()
            )))
        }
    };

    let out_dir = match out {
        Some(p) => p.to_path_buf(),
        None => checkpoint_path.parent().unwrap_or(Path::new(".")).to_path_buf(),
    };
    std::fs::create_dir_all(&out_dir)?;

    let mut layer_summaries = Vec::new();
    for (li, layer) in stack.iter().enumerate() {
        let suffix = if stack.len() == 1 {
            String::new()
        } else {
            format!("_layer{li}")
        };
        let files: [(&str, &T); 4] = [
            ("w_r", &layer.w_r),
            ("w_i", &layer.w_i),
            ("b_r", &layer.b_r),
            ("b_i", &layer.b_i),
        ];
        for (tag, tensor) in files {
            let path = out_dir.join(format!("{}{suffix}_{tag}.csv", which.name()));
            write_matrix_csv(&path, tensor)?;
        }

        let mut matrices = serde_json::Map::new();
        for (tag, tensor) in [("w_r", &layer.w_r), ("w_i", &layer.w_i)] {
            let total: f64 = tensor.data().iter().map(|v| v * v).sum();
            let entry = match band_fraction(tensor, 1) {
                None => serde_json::json!({"total_sq_mass": 0.0, "degenerate": true}),
                Some(b1) => serde_json::json!({
                    "total_sq_mass": total,
                    "degenerate": false,
                    "band1": b1,
                    "band3": band_fraction(tensor, 3).unwrap(),
                    "band5": band_fraction(tensor, 5).unwrap(),
                }),
            };
            println!(
                "{} layer {li} {tag}: {}",
                which.name(),
                serde_json::to_string(&entry).expect("json")
            );
            matrices.insert(tag.to_string(), entry);
        }
        layer_summaries.push(serde_json::json!({"layer": li, "matrices": matrices}));
    }

    let summary = serde_json::json!({
        "learner": which.name(),
        "layers": layer_summaries,
    });
    std::fs::write(
        out_dir.join(format!("{}_band_summary.json", which.name())),
        format!("{summary}\n"),
    )?;
    Ok(())
}

fn write_matrix_csv(path: &Path, t: &T) -> Result<()> {
    let (rows, cols) = match t.shape() {
        [r, c] => (*r, *c),
        [n] => (1usize, *n),
        other => {
            return Err(Error::dimension(format!(
                "matrix export expects rank <= 2, got {other:?}"
            )))
        }
    };
    let mut out = String::new();
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", t.data()[r * cols + c]);
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Generate a synthetic dataset CSV from a generator spec.
pub fn cmd_synth(spec_path: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<PathBuf> {
    let mut spec = SynthSpec::load(spec_path)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let out_dir = out.ok_or_else(|| Error::config("synth requires --out DIR"))?;
    std::fs::create_dir_all(out_dir)?;
    let series = frets_core::data::synth_sinusoids(
        spec.channels,
        spec.timestamps,
        &spec.components,
        spec.noise_std,
        spec.seed,
    )?;
    let path = out_dir.join("synth.csv");
    write_csv(&path, &series)?;
    println!(
        "{} channels x {} timestamps written to {}",
        series.channels(),
        series.timestamps(),
        path.display()
    );
    Ok(path)
}
