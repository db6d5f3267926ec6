//! Temporary calibration harness (not part of the suite).

use frets_core::data::{chronological_split, make_windows, SplitSpec, WindowedDataset};
use frets_core::model::{LearnerDomain, ModelConfig};
use frets_core::train::{evaluate, train, MinMaxScaler, TrainConfig};
use frets_core::verify::benchmark_series;

fn splits(noise: f64) -> (WindowedDataset, WindowedDataset, WindowedDataset) {
    let series = benchmark_series(2000, noise, 0).unwrap();
    let segs = chronological_split(&series, &SplitSpec::seventy_twenty_ten()).unwrap();
    let scaler = MinMaxScaler::fit(&segs[0]);
    let tr = scaler.apply_series(&segs[0]).unwrap();
    let va = scaler.apply_series(&segs[1]).unwrap();
    let te = scaler.apply_series(&segs[2]).unwrap();
    (
        make_windows(&tr, 96, 96).unwrap(),
        make_windows(&va, 96, 96).unwrap(),
        make_windows(&te, 96, 96).unwrap(),
    )
}

#[test]
#[ignore]
fn scout_criterion6() {
    let (tr, va, te) = splits(0.05);
    for (d, dh, epochs) in [(16usize, 8usize, 8usize), (16, 8, 16), (16, 4, 16), (8, 8, 16)] {
        for domain in [LearnerDomain::Frequency, LearnerDomain::Time] {
            let mut maes = Vec::new();
            for seed in 0..2u64 {
                let mut cfg = ModelConfig::new(4, 96, 96);
                cfg.embed_dim = d;
                cfg.hidden_dim = dh;
                cfg.learner_domain = domain;
                cfg.seed = seed;
                let tc = TrainConfig {
                    epochs,
                    patience: 0,
                    seed,
                    ..TrainConfig::default()
                };
                let out = train(&cfg, &tr, &va, &tc, |_| {}).unwrap();
                let m = evaluate(&out.params, &te, &cfg, 32).unwrap();
                maes.push(m.mae);
            }
            let avg: f64 = maes.iter().sum::<f64>() / maes.len() as f64;
            eprintln!("d={d} dh={dh} ep={epochs} {domain:?}: avg {avg:.4e} ({maes:?})");
        }
    }
}
