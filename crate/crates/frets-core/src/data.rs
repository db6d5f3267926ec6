//! Dataset handling: CSV ingestion, chronological splits, sliding windows
//! and synthetic sinusoid generation.
//!
//! A series is stored channels-first (`N x T`) while the CSV layout is one
//! timestamp per row with one column per channel; ingestion transposes.
//! Splits are cut on raw timestamps before any windowing so no window can
//! straddle a split boundary.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::RealTensor;

type T = RealTensor<f64>;

/// Multivariate series: `N x T` values plus channel names.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesMatrix {
    values: T,
    names: Vec<String>,
}

impl SeriesMatrix {
    pub fn new(values: T, names: Vec<String>) -> Result<Self> {
        if values.rank() != 2 {
            return Err(Error::dimension(format!(
                "series matrix expects N x T values, got {:?}",
                values.shape()
            )));
        }
        if names.len() != values.dim(0) {
            return Err(Error::dimension(format!(
                "{} channel names for {} channels",
                names.len(),
                values.dim(0)
            )));
        }
        Ok(SeriesMatrix { values, names })
    }

    pub fn channels(&self) -> usize {
        self.values.dim(0)
    }

    pub fn timestamps(&self) -> usize {
        self.values.dim(1)
    }

    pub fn values(&self) -> &T {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn value(&self, channel: usize, t: usize) -> f64 {
        self.values.at2(channel, t)
    }

    /// Contiguous time slice `[start, end)` keeping all channels.
    pub fn slice_time(&self, start: usize, end: usize) -> Result<SeriesMatrix> {
        if start >= end || end > self.timestamps() {
            return Err(Error::config(format!(
                "time slice [{start}, {end}) invalid for length {}",
                self.timestamps()
            )));
        }
        let n = self.channels();
        let t = end - start;
        let mut data = Vec::with_capacity(n * t);
        for ch in 0..n {
            for i in start..end {
                data.push(self.values.at2(ch, i));
            }
        }
        SeriesMatrix::new(T::from_vec(&[n, t], data)?, self.names.clone())
    }
}

/// Train/validation/test ratios; strictly positive, summing to 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitSpec {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        if train <= 0.0 || val <= 0.0 || test <= 0.0 {
            return Err(Error::config("split ratios must all be positive"));
        }
        if (train + val + test - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "split ratios sum to {}, expected 1",
                train + val + test
            )));
        }
        Ok(SplitSpec { train, val, test })
    }

    /// The usual 7:2:1 protocol.
    pub fn seventy_twenty_ten() -> Self {
        SplitSpec {
            train: 0.7,
            val: 0.2,
            test: 0.1,
        }
    }
}

/// Contiguous order-preserving split at `floor(ratio * T)` boundaries.
/// Returns `[train, val, test]`.
pub fn chronological_split(series: &SeriesMatrix, spec: &SplitSpec) -> Result<[SeriesMatrix; 3]> {
    let t = series.timestamps();
    // Cumulative-ratio flooring; the epsilon absorbs representation error in
    // ratio sums (0.7 + 0.2 lands just under 0.9).
    let b1 = (spec.train * t as f64 + 1e-9).floor() as usize;
    let b2 = ((spec.train + spec.val) * t as f64 + 1e-9).floor() as usize;
    if b1 == 0 || b2 <= b1 || b2 >= t {
        return Err(Error::config(format!(
            "split of {t} timestamps at {b1}/{b2} leaves an empty segment"
        )));
    }
    Ok([
        series.slice_time(0, b1)?,
        series.slice_time(b1, b2)?,
        series.slice_time(b2, t)?,
    ])
}

/// Stride-1 sliding (lookback, horizon) samples over one contiguous segment.
#[derive(Clone, Debug)]
pub struct WindowedDataset {
    segment: SeriesMatrix,
    lookback: usize,
    horizon: usize,
    count: usize,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn channels(&self) -> usize {
        self.segment.channels()
    }

    /// Input window `i`: columns `[i, i + L)`, shape `N x L`.
    pub fn input(&self, i: usize) -> T {
        self.window(i, self.lookback)
    }

    /// Target window `i`: columns `[i + L, i + L + tau)`, shape `N x tau`.
    pub fn target(&self, i: usize) -> T {
        self.window(i + self.lookback, self.horizon)
    }

    fn window(&self, start: usize, len: usize) -> T {
        let n = self.segment.channels();
        let mut data = Vec::with_capacity(n * len);
        for ch in 0..n {
            for t in start..start + len {
                data.push(self.segment.value(ch, t));
            }
        }
        T::from_vec(&[n, len], data).expect("window within segment")
    }

    /// Stack the samples at `indices` into batched `(inputs, targets)` of
    /// shapes `B x N x L` and `B x N x tau`.
    pub fn gather(&self, indices: &[usize]) -> Result<(T, T)> {
        if indices.iter().any(|&i| i >= self.count) {
            return Err(Error::config("window index out of range"));
        }
        let n = self.segment.channels();
        let b = indices.len();
        let mut inputs = Vec::with_capacity(b * n * self.lookback);
        let mut targets = Vec::with_capacity(b * n * self.horizon);
        for &i in indices {
            for ch in 0..n {
                for t in i..i + self.lookback {
                    inputs.push(self.segment.value(ch, t));
                }
            }
            for ch in 0..n {
                for t in i + self.lookback..i + self.lookback + self.horizon {
                    targets.push(self.segment.value(ch, t));
                }
            }
        }
        Ok((
            T::from_vec(&[b, n, self.lookback], inputs)?,
            T::from_vec(&[b, n, self.horizon], targets)?,
        ))
    }
}

/// Cut stride-1 windows; the segment must hold at least one full sample.
pub fn make_windows(segment: &SeriesMatrix, lookback: usize, horizon: usize) -> Result<WindowedDataset> {
    if lookback == 0 || horizon == 0 {
        return Err(Error::config("lookback and horizon must be at least 1"));
    }
    let t = segment.timestamps();
    if t < lookback + horizon {
        return Err(Error::config(format!(
            "segment of {t} timestamps too short for lookback {lookback} + horizon {horizon}"
        )));
    }
    Ok(WindowedDataset {
        segment: segment.clone(),
        lookback,
        horizon,
        count: t - lookback - horizon + 1,
    })
}

/// One sinusoid component of a synthetic channel.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SynthComponent {
    pub channel: usize,
    /// Cycles over the full generated length.
    pub cycles: f64,
    pub amplitude: f64,
    pub phase: f64,
}

/// Sum-of-sinusoids generator with optional i.i.d. Gaussian noise;
/// deterministic per seed.
pub fn synth_sinusoids(
    channels: usize,
    timestamps: usize,
    components: &[SynthComponent],
    noise_std: f64,
    seed: u64,
) -> Result<SeriesMatrix> {
    if channels == 0 || timestamps == 0 {
        return Err(Error::config("synthetic series needs channels and timestamps"));
    }
    if !noise_std.is_finite() || noise_std < 0.0 {
        return Err(Error::config("noise_std must be finite and non-negative"));
    }
    for c in components {
        if c.channel >= channels {
            return Err(Error::config(format!(
                "component references channel {} of {}",
                c.channel, channels
            )));
        }
        if !(c.cycles.is_finite() && c.amplitude.is_finite() && c.phase.is_finite()) {
            return Err(Error::config("component parameters must be finite"));
        }
    }

    let mut data = vec![0.0f64; channels * timestamps];
    for c in components {
        let base = c.channel * timestamps;
        for t in 0..timestamps {
            let angle = 2.0 * std::f64::consts::PI * c.cycles * t as f64 / timestamps as f64 + c.phase;
            data[base + t] += c.amplitude * angle.sin();
        }
    }
    if noise_std > 0.0 {
        let mut stream = rng::derived(seed, "synth-noise");
        for v in data.iter_mut() {
            *v += noise_std * rng::standard_normal(&mut stream);
        }
    }

    let names = (0..channels).map(|i| format!("ch{i}")).collect();
    SeriesMatrix::new(T::from_vec(&[channels, timestamps], data)?, names)
}

/// How to treat empty cells during ingestion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    Error,
    ForwardFill,
}

/// Read a CSV series: UTF-8, header row of channel names, one timestamp per
/// row, comma separation. With `skip_first_column` the leading column (a
/// timestamp index) is dropped.
pub fn ingest_csv(path: &Path, missing: MissingPolicy, skip_first_column: bool) -> Result<SeriesMatrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ingestion(format!("cannot read {}: {e}", path.display())))?;
    parse_csv(&text, missing, skip_first_column)
        .map_err(|e| Error::ingestion(format!("{}: {e}", path.display())))
}

fn parse_csv(text: &str, missing: MissingPolicy, skip_first_column: bool) -> std::result::Result<SeriesMatrix, String> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or("file is empty")?;
    let skip = usize::from(skip_first_column);
    let names: Vec<String> = header
        .split(',')
        .skip(skip)
        .map(|s| s.trim().to_string())
        .collect();
    if names.is_empty() || names.iter().any(|n| n.is_empty()) {
        return Err("header row must name every channel".into());
    }
    let n = names.len();

    // Row-major per timestamp first; transposed at the end.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split(',').skip(skip).map(str::trim).collect();
        if fields.len() != n {
            return Err(format!(
                "row {} has {} fields, expected {}",
                line_no + 1,
                fields.len(),
                n
            ));
        }
        let mut row = Vec::with_capacity(n);
        for (col, field) in fields.iter().enumerate() {
            if field.is_empty() {
                match missing {
                    MissingPolicy::Error => {
                        return Err(format!("missing value at row {}, column {}", line_no + 1, col + 1))
                    }
                    MissingPolicy::ForwardFill => match rows.last() {
                        Some(prev) => row.push(prev[col]),
                        None => {
                            return Err(format!(
                                "missing value at row {}, column {} with nothing to fill from",
                                line_no + 1,
                                col + 1
                            ))
                        }
                    },
                }
            } else {
                let v: f64 = field.parse().map_err(|_| {
                    format!("unparsable value {:?} at row {}, column {}", field, line_no + 1, col + 1)
                })?;
                row.push(v);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err("no data rows after the header".into());
    }

    let t = rows.len();
    let mut data = vec![0.0f64; n * t];
    for (ti, row) in rows.iter().enumerate() {
        for (ch, &v) in row.iter().enumerate() {
            data[ch * t + ti] = v;
        }
    }
    let values = T::from_vec(&[n, t], data).map_err(|e| e.to_string())?;
    SeriesMatrix::new(values, names).map_err(|e| e.to_string())
}

/// Write a series in the same CSV layout [`ingest_csv`] reads. Values print
/// in shortest round-trip form, so write-then-ingest reproduces them exactly.
pub fn write_csv(path: &Path, series: &SeriesMatrix) -> Result<()> {
    let mut out = String::new();
    out.push_str(&series.names().join(","));
    out.push('\n');
    for t in 0..series.timestamps() {
        for ch in 0..series.channels() {
            if ch > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", series.value(ch, t));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::{rfft, rfft_bins};

    fn series_1xn(vals: &[f64]) -> SeriesMatrix {
        SeriesMatrix::new(
            T::from_vec(&[1, vals.len()], vals.to_vec()).unwrap(),
            vec!["a".into()],
        )
        .unwrap()
    }

    #[test]
    fn parse_two_channel_three_rows() {
        let s = parse_csv("a,b\n1,2\n3,4\n5,6\n", MissingPolicy::Error, false).unwrap();
        assert_eq!(s.channels(), 2);
        assert_eq!(s.timestamps(), 3);
        assert_eq!(s.value(0, 0), 1.0);
        assert_eq!(s.value(0, 2), 5.0);
        assert_eq!(s.value(1, 1), 4.0);
    }

    #[test]
    fn empty_data_section_is_ingestion_error() {
        assert!(parse_csv("a,b\n", MissingPolicy::Error, false).is_err());
        assert!(parse_csv("", MissingPolicy::Error, false).is_err());
    }

    #[test]
    fn forward_fill_copies_previous_value() {
        let s = parse_csv("a,b\n1,2\n,4\n", MissingPolicy::ForwardFill, false).unwrap();
        assert_eq!(s.value(0, 1), 1.0);
        assert_eq!(s.value(1, 1), 4.0);

        // Rows number by file line, header included: the hole is on line 3.
        let err = parse_csv("a,b\n1,2\n,4\n", MissingPolicy::Error, false).unwrap_err();
        assert!(err.contains("row 3"), "{err}");

        // Nothing to fill from on the first data row.
        assert!(parse_csv("a\n\n,\n", MissingPolicy::ForwardFill, false).is_err());
    }

    #[test]
    fn unparsable_field_names_row_and_column() {
        let err = parse_csv("a,b\n1,x\n", MissingPolicy::Error, false).unwrap_err();
        assert!(err.contains("row 2") && err.contains("column 2"), "{err}");
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = parse_csv("a,b\n1,2,3\n", MissingPolicy::Error, false).unwrap_err();
        assert!(err.contains("row 2"), "{err}");
    }

    #[test]
    fn leading_timestamp_column_can_be_skipped() {
        let s = parse_csv(
            "date,a,b\n2020-01-01,1,2\n2020-01-02,3,4\n",
            MissingPolicy::Error,
            true,
        )
        .unwrap();
        assert_eq!(s.names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(s.value(1, 1), 4.0);
    }

    #[test]
    fn split_ratios_follow_floor_boundaries() {
        let vals: Vec<f64> = (0..100).map(|v| v as f64).collect();
        let s = series_1xn(&vals);
        let [train, val, test] = chronological_split(&s, &SplitSpec::seventy_twenty_ten()).unwrap();
        assert_eq!(train.timestamps(), 70);
        assert_eq!(val.timestamps(), 20);
        assert_eq!(test.timestamps(), 10);

        let vals: Vec<f64> = (0..10).map(|v| v as f64).collect();
        let s = series_1xn(&vals);
        let spec = SplitSpec::new(0.6, 0.2, 0.2).unwrap();
        let [train, val, test] = chronological_split(&s, &spec).unwrap();
        assert_eq!(
            (train.timestamps(), val.timestamps(), test.timestamps()),
            (6, 2, 2)
        );

        // Concatenation reproduces the original series.
        let mut rebuilt = Vec::new();
        for seg in [&train, &val, &test] {
            for t in 0..seg.timestamps() {
                rebuilt.push(seg.value(0, t));
            }
        }
        assert_eq!(rebuilt, vals);
    }

    #[test]
    fn degenerate_splits_are_config_errors() {
        let s = series_1xn(&[1.0, 2.0, 3.0]);
        let spec = SplitSpec::new(0.05, 0.05, 0.9).unwrap();
        assert!(chronological_split(&s, &spec).is_err());
        assert!(SplitSpec::new(0.5, 0.5, 0.0).is_err());
        assert!(SplitSpec::new(0.5, 0.4, 0.2).is_err());
    }

    #[test]
    fn window_counts_and_contents() {
        let s = series_1xn(&[10.0, 11.0, 12.0, 13.0, 14.0]);
        let w = make_windows(&s, 2, 1).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w.input(0).data(), &[10.0, 11.0]);
        assert_eq!(w.target(0).data(), &[12.0]);
        assert_eq!(w.input(2).data(), &[12.0, 13.0]);
        assert_eq!(w.target(2).data(), &[14.0]);

        let s = series_1xn(&[1.0, 2.0, 3.0]);
        let w = make_windows(&s, 2, 1).unwrap();
        assert_eq!(w.len(), 1);

        assert!(make_windows(&series_1xn(&[1.0, 2.0]), 2, 1).is_err());
    }

    #[test]
    fn gather_stacks_requested_samples() {
        let s = SeriesMatrix::new(
            T::from_vec(&[2, 6], vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0]).unwrap(),
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let w = make_windows(&s, 3, 2).unwrap();
        assert_eq!(w.len(), 2);
        let (inputs, targets) = w.gather(&[1, 0]).unwrap();
        assert_eq!(inputs.shape(), &[2, 2, 3]);
        assert_eq!(targets.shape(), &[2, 2, 2]);
        assert_eq!(inputs.at3(0, 0, 0), 1.0); // sample 1, channel a
        assert_eq!(inputs.at3(1, 1, 2), 12.0); // sample 0, channel b
        assert_eq!(targets.at3(0, 0, 0), 4.0);
        assert!(w.gather(&[5]).is_err());
    }

    #[test]
    fn pure_tone_concentrates_in_one_bin() {
        let t = 64;
        let k = 5;
        let comp = SynthComponent {
            channel: 0,
            cycles: k as f64,
            amplitude: 1.0,
            phase: 0.0,
        };
        let s = synth_sinusoids(1, t, &[comp], 0.0, 0).unwrap();
        let row = T::from_vec(&[t], (0..t).map(|i| s.value(0, i)).collect()).unwrap();
        let spec = rfft(&row, 0).unwrap();
        let mags = spec.abs_sq();
        for bin in 0..rfft_bins(t) {
            if bin == k {
                assert!(mags.data()[bin] > 1.0);
            } else {
                assert!(mags.data()[bin] < 1e-18, "bin {bin} leaked {}", mags.data()[bin]);
            }
        }
    }

    #[test]
    fn zero_components_zero_noise_gives_zero_matrix() {
        let s = synth_sinusoids(3, 10, &[], 0.0, 0).unwrap();
        assert!(s.values().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_variance_matches_within_five_percent() {
        let t = 10_000;
        let std = 0.7;
        let s = synth_sinusoids(1, t, &[], std, 42).unwrap();
        let mean: f64 = s.values().data().iter().sum::<f64>() / t as f64;
        let var: f64 = s.values().data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (t - 1) as f64;
        let rel = (var - std * std).abs() / (std * std);
        assert!(rel < 0.05, "variance off by {rel}");
    }

    #[test]
    fn synth_is_deterministic_and_validates() {
        let c = [SynthComponent {
            channel: 0,
            cycles: 2.0,
            amplitude: 1.0,
            phase: 0.5,
        }];
        let a = synth_sinusoids(2, 50, &c, 0.1, 9).unwrap();
        let b = synth_sinusoids(2, 50, &c, 0.1, 9).unwrap();
        assert_eq!(a, b);

        let bad = [SynthComponent {
            channel: 5,
            cycles: 1.0,
            amplitude: 1.0,
            phase: 0.0,
        }];
        assert!(synth_sinusoids(2, 50, &bad, 0.0, 0).is_err());
        assert!(synth_sinusoids(2, 50, &[], -1.0, 0).is_err());
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let mut stream = rng::seeded(31);
        let vals: Vec<f64> = (0..40).map(|_| rng::uniform(&mut stream, -5.0, 5.0)).collect();
        let s = SeriesMatrix::new(T::from_vec(&[4, 10], vals).unwrap(), vec!["w".into(), "x".into(), "y".into(), "z".into()]).unwrap();
        let dir = std::env::temp_dir().join(format!("frets-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.csv");
        write_csv(&path, &s).unwrap();
        let back = ingest_csv(&path, MissingPolicy::Error, false).unwrap();
        assert_eq!(back, s);
        std::fs::remove_dir_all(&dir).ok();
    }
}
