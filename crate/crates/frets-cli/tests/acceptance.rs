//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with:
//!
//! ```text
//! cargo test -p frets-cli --test acceptance -- --nocapture
//! ```
//!
//! Training-based criteria share a lock so each gets the whole machine and
//! its runtime budget is measured honestly.
//!
//! Criterion 7 exercises the Exchange benchmark and needs the dataset on
//! disk (see `exchange_csv_path`); without it the test reports SKIP and does
//! not fail. With the dataset present it trains the full tuning grid, which
//! takes hours on a small machine.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;
use std::time::Instant;

use frets_cli::checkpoint;
use frets_core::data::{chronological_split, make_windows, SplitSpec, WindowedDataset};
use frets_core::fremlp::Activation;
use frets_core::model::{
    channel_learner, dimension_extension, frets_forward, init_params, projection, temporal_learner,
    LearnerDomain, ModelConfig,
};
use frets_core::tensor::RealTensor;
use frets_core::train::{evaluate, train, MinMaxScaler, TrainConfig};
use frets_core::verify;

type T = RealTensor<f64>;

static HEAVY: Mutex<()> = Mutex::new(());

fn announce(criterion: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion} ({name}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

const LOOKBACK: usize = 96;
const HORIZON: usize = 96;

/// Normalized splits of the 4-channel two-sinusoid benchmark series.
fn benchmark_splits(noise: f64) -> (WindowedDataset, WindowedDataset, WindowedDataset) {
    let series = verify::benchmark_series(2000, noise, 0).unwrap();
    let segs = chronological_split(&series, &SplitSpec::seventy_twenty_ten()).unwrap();
    let scaler = MinMaxScaler::fit(&segs[0]);
    let tr = scaler.apply_series(&segs[0]).unwrap();
    let va = scaler.apply_series(&segs[1]).unwrap();
    let te = scaler.apply_series(&segs[2]).unwrap();
    (
        make_windows(&tr, LOOKBACK, HORIZON).unwrap(),
        make_windows(&va, LOOKBACK, HORIZON).unwrap(),
        make_windows(&te, LOOKBACK, HORIZON).unwrap(),
    )
}

fn benchmark_model(seed: u64) -> ModelConfig {
    let mut cfg = ModelConfig::new(4, LOOKBACK, HORIZON);
    cfg.embed_dim = 16;
    cfg.seed = seed;
    cfg
}

#[test]
fn criterion_1_parseval() {
    let t0 = Instant::now();
    let report = verify::parseval_suite(2024);
    let secs = t0.elapsed().as_secs_f64();
    let pass = report.pass() && secs < 5.0;
    announce(
        1,
        "parseval",
        pass,
        &format!(
            "{} vectors, max rel err {:.3e} (< 1e-9), {:.2}s (< 5s)",
            report.cases, report.max_error, secs
        ),
    );
    assert!(report.pass(), "{}", report.line());
    assert!(secs < 5.0, "parseval suite took {secs:.2}s");
}

#[test]
fn criterion_2_fft_oracle() {
    let t0 = Instant::now();
    let report = verify::fft_oracle_suite(2024);
    let secs = t0.elapsed().as_secs_f64();
    let pass = report.pass() && secs < 30.0;
    announce(
        2,
        "fft-oracle",
        pass,
        &format!(
            "{} vectors, max abs err {:.3e} (< 1e-9), {:.2}s (< 30s)",
            report.cases, report.max_error, secs
        ),
    );
    assert!(report.pass(), "{}", report.line());
    assert!(secs < 30.0, "fft oracle suite took {secs:.2}s");
}

#[test]
fn criterion_3_convolution_theorem() {
    let report = verify::conv_theorem_suite(2024);
    announce(
        3,
        "conv-theorem",
        report.pass(),
        &format!(
            "{} cases incl. width-1 FreMLP form, max abs err {:.3e} (< 1e-9)",
            report.cases, report.max_error
        ),
    );
    assert!(report.pass(), "{}", report.line());
}

#[test]
fn criterion_4_gradient_suite() {
    let t0 = Instant::now();
    let report = verify::gradient_suite(2024);
    let secs = t0.elapsed().as_secs_f64();
    let pass = report.pass() && secs < 60.0;
    announce(
        4,
        "grad-check",
        pass,
        &format!(
            "20 seeds, max rel err {:.3e} (< 1e-4), {:.2}s (< 60s)",
            report.max_error, secs
        ),
    );
    assert!(report.pass(), "{}", report.line());
    assert!(secs < 60.0, "gradient suite took {secs:.2}s");
}

#[test]
fn criterion_5_synthetic_convergence() {
    let _guard = HEAVY.lock().unwrap();
    let t0 = Instant::now();

    // Noiseless: reach test MAE < 0.01 within 200 epochs.
    let (tr, va, te) = benchmark_splits(0.0);
    let cfg = benchmark_model(0);
    let tc = TrainConfig {
        epochs: 15,
        patience: 10,
        ..TrainConfig::default()
    };
    assert!(tc.epochs <= 200);
    let out = train(&cfg, &tr, &va, &tc, |_| {}).unwrap();
    let clean = evaluate(&out.params, &te, &cfg, 32).unwrap();

    // Noisy (noise_std = 0.05): reach test MAE < 0.075.
    let (tr, va, te) = benchmark_splits(0.05);
    let tc = TrainConfig {
        epochs: 8,
        patience: 10,
        ..TrainConfig::default()
    };
    let out = train(&cfg, &tr, &va, &tc, |_| {}).unwrap();
    let noisy = evaluate(&out.params, &te, &cfg, 32).unwrap();

    let secs = t0.elapsed().as_secs_f64();
    let pass = clean.mae < 0.01 && noisy.mae < 0.075 && secs < 300.0;
    announce(
        5,
        "synthetic-convergence",
        pass,
        &format!(
            "clean test MAE {:.3e} (< 0.01), noisy test MAE {:.3e} (< 0.075), {:.0}s (< 300s)",
            clean.mae, noisy.mae, secs
        ),
    );
    assert!(clean.mae < 0.01, "clean test MAE {} >= 0.01", clean.mae);
    assert!(noisy.mae < 0.075, "noisy test MAE {} >= 0.075", noisy.mae);
    assert!(secs < 300.0, "criterion 5 took {secs:.0}s");
}

#[test]
fn criterion_6_baseline_dominance() {
    let _guard = HEAVY.lock().unwrap();
    let (tr, va, te) = benchmark_splits(0.05);
    let epochs = 8;

    let mut averages = Vec::new();
    for domain in [LearnerDomain::Frequency, LearnerDomain::Time] {
        let mut maes = Vec::new();
        for seed in 0..5u64 {
            let mut cfg = benchmark_model(seed);
            cfg.learner_domain = domain;
            let tc = TrainConfig {
                epochs,
                patience: 0,
                seed,
                ..TrainConfig::default()
            };
            let out = train(&cfg, &tr, &va, &tc, |_| {}).unwrap();
            let m = evaluate(&out.params, &te, &cfg, 32).unwrap();
            println!("  criterion 6: {domain:?} seed {seed} test MAE {:.4e}", m.mae);
            maes.push(m.mae);
        }
        averages.push(maes.iter().sum::<f64>() / maes.len() as f64);
    }
    let (freq, time) = (averages[0], averages[1]);
    let pass = freq <= time;
    announce(
        6,
        "baseline-dominance",
        pass,
        &format!(
            "frequency avg MAE {freq:.4e} vs time-domain avg MAE {time:.4e} over 5 seeds, {epochs}-epoch budget each"
        ),
    );
    assert!(
        freq <= time,
        "frequency-domain model ({freq}) lost to the time-domain baseline ({time})"
    );
}

/// Where criterion 7 looks for the Exchange benchmark: the
/// `FRETS_EXCHANGE_CSV` environment variable, then `data/exchange_rate.csv`
/// at the workspace root. The file must be in this crate's CSV layout
/// (header row of channel names, one timestamp per row).
fn exchange_csv_path() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("FRETS_EXCHANGE_CSV") {
        let p = PathBuf::from(p);
        if p.exists() {
            return Some(p);
        }
    }
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/exchange_rate.csv");
    p.exists().then_some(p)
}

#[test]
fn criterion_7_exchange_stretch() {
    let Some(path) = exchange_csv_path() else {
        println!(
            "criterion 7 (exchange-stretch): SKIP — Exchange dataset not found; \
             place it at data/exchange_rate.csv or set FRETS_EXCHANGE_CSV to run \
             the full tuning grid (takes hours on a small machine)"
        );
        return;
    };
    let _guard = HEAVY.lock().unwrap();

    let series = frets_core::data::ingest_csv(&path, frets_core::data::MissingPolicy::Error, false).unwrap();
    let segs = chronological_split(&series, &SplitSpec::seventy_twenty_ten()).unwrap();
    let scaler = MinMaxScaler::fit(&segs[0]);
    let tr = make_windows(&scaler.apply_series(&segs[0]).unwrap(), LOOKBACK, HORIZON).unwrap();
    let va = make_windows(&scaler.apply_series(&segs[1]).unwrap(), LOOKBACK, HORIZON).unwrap();
    let te = make_windows(&scaler.apply_series(&segs[2]).unwrap(), LOOKBACK, HORIZON).unwrap();

    // Channel-independent long-horizon mode, default widths; tune learning
    // rate and batch size on validation MAE.
    let mut best: Option<(f64, f64, usize, frets_core::model::FreTsParams)> = None;
    for lr in [1e-3, 5e-4] {
        for batch in [8usize, 16, 32] {
            let mut cfg = ModelConfig::new(series.channels(), LOOKBACK, HORIZON);
            cfg.channel_independent = true;
            let tc = TrainConfig {
                lr,
                batch_size: batch,
                epochs: 20,
                patience: 5,
                ..TrainConfig::default()
            };
            let out = train(&cfg, &tr, &va, &tc, |_| {}).unwrap();
            let val = out.best_val.unwrap();
            println!("  criterion 7: lr={lr} batch={batch} val MAE {:.4e}", val.mae);
            if best.as_ref().map_or(true, |(m, ..)| val.mae < *m) {
                best = Some((val.mae, lr, batch, out.params));
            }
        }
    }
    let (_, lr, batch, params) = best.unwrap();
    let mut cfg = ModelConfig::new(series.channels(), LOOKBACK, HORIZON);
    cfg.channel_independent = true;
    let test = evaluate(&params, &te, &cfg, batch).unwrap();
    let (lo, hi) = (0.037 * 0.75, 0.037 * 1.25);
    let pass = test.mae >= lo && test.mae <= hi;
    announce(
        7,
        "exchange-stretch",
        pass,
        &format!(
            "best lr={lr} batch={batch}: test MAE {:.4e}, RMSE {:.4e} (target 0.037 +/- 25% -> [{lo:.4}, {hi:.4}])",
            test.mae, test.rmse
        ),
    );
    assert!(pass, "test MAE {:.4e} outside [{lo:.4}, {hi:.4}]", test.mae);
}

#[test]
fn criterion_8_ablation_variants() {
    let _guard = HEAVY.lock().unwrap();

    // Structural equivalence (hard assertion): dropping a learner from a
    // full parameter set and running the reduced config equals composing the
    // remaining stages by hand, bitwise.
    {
        let cfg_full = benchmark_model(3);
        let params_full = init_params(&cfg_full).unwrap();
        let mut stream = frets_core::rng::seeded(99);
        let x = T::from_vec(
            &[4, LOOKBACK],
            (0..4 * LOOKBACK)
                .map(|_| frets_core::rng::uniform(&mut stream, -1.0, 1.0))
                .collect(),
        )
        .unwrap();

        // FreCL: temporal learner removed.
        let mut cfg_frecl = cfg_full.clone();
        cfg_frecl.use_temporal_learner = false;
        let mut params_frecl = params_full.clone();
        params_frecl.temporal = None;
        let batched = x.clone().reshape(&[1, 4, LOOKBACK]).unwrap();
        let via_model = frets_forward(&batched, &params_frecl, &cfg_frecl).unwrap();
        let h = dimension_extension(&x, &params_frecl.embed).unwrap();
        let z = channel_learner(&h, params_frecl.channel.as_ref().unwrap(), cfg_frecl.activation).unwrap();
        let manual = projection(
            &z,
            &params_frecl.proj_w1,
            &params_frecl.proj_b1,
            &params_frecl.proj_w2,
            &params_frecl.proj_b2,
            cfg_frecl.activation,
        )
        .unwrap();
        assert_eq!(via_model.data(), manual.data(), "FreCL is not the channel-only pipeline");

        // FreTL: channel learner removed.
        let mut cfg_fretl = cfg_full.clone();
        cfg_fretl.use_channel_learner = false;
        let mut params_fretl = params_full.clone();
        params_fretl.channel = None;
        let via_model = frets_forward(&batched, &params_fretl, &cfg_fretl).unwrap();
        let h = dimension_extension(&x, &params_fretl.embed).unwrap();
        let s = temporal_learner(&h, params_fretl.temporal.as_ref().unwrap(), cfg_fretl.activation).unwrap();
        let manual = projection(
            &s,
            &params_fretl.proj_w1,
            &params_fretl.proj_b1,
            &params_fretl.proj_w2,
            &params_fretl.proj_b2,
            cfg_fretl.activation,
        )
        .unwrap();
        assert_eq!(via_model.data(), manual.data(), "FreTL is not the temporal-only pipeline");
    }

    // All three variants train end to end; relative ordering is reported,
    // not asserted.
    let (tr, va, te) = benchmark_splits(0.0);
    let mut lines = Vec::new();
    for (name, use_channel, use_temporal) in
        [("FreTS", true, true), ("FreCL", true, false), ("FreTL", false, true)]
    {
        let mut cfg = benchmark_model(0);
        cfg.use_channel_learner = use_channel;
        cfg.use_temporal_learner = use_temporal;
        let tc = TrainConfig {
            epochs: 8,
            patience: 0,
            ..TrainConfig::default()
        };
        let out = train(&cfg, &tr, &va, &tc, |_| {}).unwrap();
        let m = evaluate(&out.params, &te, &cfg, 32).unwrap();
        println!("  criterion 8: {name} test MAE {:.4e} RMSE {:.4e}", m.mae, m.rmse);
        lines.push(format!("{name} {:.3e}", m.mae));
    }
    announce(
        8,
        "ablation-variants",
        true,
        &format!("structural equivalence holds bitwise; test MAE: {}", lines.join(", ")),
    );
}

#[test]
fn criterion_9_determinism() {
    let _guard = HEAVY.lock().unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_frets");

    // Small but real dataset + config.
    let spec = tmp.path().join("synth.json");
    std::fs::write(
        &spec,
        r#"{"channels": 3, "timestamps": 220, "components": [
            {"channel": 0, "cycles": 22.0, "amplitude": 1.0, "phase": 0.0},
            {"channel": 1, "cycles": 11.0, "amplitude": 0.6, "phase": 0.4},
            {"channel": 2, "cycles": 5.5, "amplitude": 0.8, "phase": 1.1}
        ], "noise_std": 0.02, "seed": 5}"#,
    )
    .unwrap();
    let ok = Command::new(bin)
        .args(["synth", "--config"])
        .arg(&spec)
        .arg("--out")
        .arg(tmp.path())
        .status()
        .unwrap();
    assert!(ok.success());

    let config = tmp.path().join("run.json");
    std::fs::write(
        &config,
        format!(
            r#"{{"dataset": "{}", "lookback": 12, "horizon": 6, "embed_dim": 8,
               "hidden_dim": 16, "epochs": 3, "patience": 0, "batch_size": 16, "seed": 1}}"#,
            tmp.path().join("synth.csv").display()
        ),
    )
    .unwrap();

    let (out1, out2) = (tmp.path().join("r1"), tmp.path().join("r2"));
    for out in [&out1, &out2] {
        let st = Command::new(bin)
            .args(["train", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(st.success());
    }
    let a = std::fs::read(out1.join("checkpoint.frets")).unwrap();
    let b = std::fs::read(out2.join("checkpoint.frets")).unwrap();
    let identical = a == b;

    // Reload must reproduce predictions bit for bit.
    let ckpt = checkpoint::load(&out1.join("checkpoint.frets")).unwrap();
    let series = frets_core::data::ingest_csv(
        &tmp.path().join("synth.csv"),
        frets_core::data::MissingPolicy::Error,
        false,
    )
    .unwrap();
    let tail = series.slice_time(series.timestamps() - 12, series.timestamps()).unwrap();
    let p1 = frets_cli::commands::predict_window(&ckpt, tail.values()).unwrap();
    let ckpt2 = checkpoint::load(&out2.join("checkpoint.frets")).unwrap();
    let p2 = frets_cli::commands::predict_window(&ckpt2, tail.values()).unwrap();
    assert_eq!(p1, p2);

    // The property suite passes through the CLI entry point.
    let check = Command::new(bin).arg("check").status().unwrap();
    let pass = identical && check.success();
    announce(
        9,
        "determinism",
        pass,
        &format!(
            "checkpoints byte-identical across runs ({} bytes); `frets check` exit {}",
            a.len(),
            check.code().unwrap_or(-1)
        ),
    );
    assert!(identical, "checkpoints differ between identical runs");
    assert!(check.success(), "frets check failed");
}
