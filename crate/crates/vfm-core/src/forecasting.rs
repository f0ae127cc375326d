//! Multi-sequence forecasting: overlapping-sequence stitching with warm-up
//! suppression, the relative forecasting interval, error metrics, and the
//! gauge-count convergence study.

use std::ops::Range;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::frame::TimeSeriesFrame;
use crate::linalg::Matrix2D;
use crate::model::{DeepLSTMModel, FeedforwardModel};
use crate::training::{train_on_frame, TrainingProtocol};
use crate::windowing::{FeatureSelection, WindowSpec};

/// One forecast sequence in physical (denormalized) units. The outputs
/// cover sample indices [start_index + input_len, start_index + input_len + l_out).
#[derive(Debug, Clone)]
pub struct SequenceForecast {
    pub start_index: usize,
    pub input_len: usize,
    pub outputs: Matrix2D,
}

impl SequenceForecast {
    pub fn first_output_index(&self) -> usize {
        self.start_index + self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.outputs.rows()
    }
}

/// Stitched forecast: one value per covered sample per output channel, with
/// the id of the sequence that supplied each sample.
#[derive(Debug, Clone)]
pub struct CompositeForecast {
    pub first_index: usize,
    pub channel_names: Vec<String>,
    /// len x n.
    pub values: Matrix2D,
    /// Index into the stitched forecast list, one entry per sample.
    pub source_sequence: Vec<usize>,
}

impl CompositeForecast {
    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    /// Covered sample index range (half-open).
    pub fn coverage(&self) -> Range<usize> {
        self.first_index..self.first_index + self.len()
    }

    pub fn channel_index(&self, name: &str) -> Result<usize> {
        self.channel_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Data(format!("composite has no channel '{name}'")))
    }
}

/// Starts for a run of forecast sequences: first, first+shift, ... as long
/// as the full window (inputs plus outputs) stays inside `limit` samples.
pub fn sequence_starts(first: usize, limit: usize, spec: &WindowSpec, shift: usize) -> Vec<usize> {
    if shift == 0 {
        return Vec::new();
    }
    (0..)
        .map(|k| first + k * shift)
        .take_while(|start| start + spec.total_len() <= limit)
        .collect()
}

/// Runs the model over the given sequence starts. Inputs are read from the
/// frame on [start, start + l_in), normalized with the model's fitted
/// statistics; outputs are denormalized back to physical units.
pub fn forecast_sequences(
    model: &DeepLSTMModel,
    frame: &TimeSeriesFrame,
    spec: &WindowSpec,
    starts: &[usize],
) -> Result<Vec<SequenceForecast>> {
    let stats = model.normalizer.as_ref().ok_or_else(|| {
        Error::InvalidConfig("model has no fitted normalizer; train it first".into())
    })?;
    if model.input_names.is_empty() || model.output_names.is_empty() {
        return Err(Error::InvalidConfig(
            "model has no attached feature names".into(),
        ));
    }
    if spec.l_in != model.config.l_in || spec.l_out != model.config.l_out {
        return Err(Error::Dimension(format!(
            "window spec ({}, {}) does not match the model ({}, {})",
            spec.l_in, spec.l_out, model.config.l_in, model.config.l_out
        )));
    }
    let input_cols: Vec<&[f64]> = model
        .input_names
        .iter()
        .map(|n| frame.values(n))
        .collect::<Result<_>>()?;

    let mut forecasts = Vec::with_capacity(starts.len());
    for &start in starts {
        if start + spec.l_in > frame.len() {
            return Err(Error::Data(format!(
                "sequence start {start} needs inputs through sample {}, frame has {}",
                start + spec.l_in,
                frame.len()
            )));
        }
        let mut x = Matrix2D::zeros(spec.l_in, input_cols.len());
        for (c, col) in input_cols.iter().enumerate() {
            let name = &model.input_names[c];
            for r in 0..spec.l_in {
                x.set(r, c, stats.normalize_value(name, col[start + r])?);
            }
        }
        let mut y = model.forward_sequence(&x)?;
        for (c, name) in model.output_names.iter().enumerate() {
            for r in 0..y.rows() {
                let denorm = stats.denormalize_value(name, y.get(r, c))?;
                y.set(r, c, denorm);
            }
        }
        forecasts.push(SequenceForecast {
            start_index: start,
            input_len: spec.l_in,
            outputs: y,
        });
    }
    Ok(forecasts)
}

/// Stitches overlapping forecast sequences, discarding each sequence's first
/// `warmup` outputs: every covered sample takes its value from the most
/// recent sequence in which its within-sequence offset is >= warmup, falling
/// back to the earliest covering sequence for the first samples of the
/// horizon.
pub fn stitch_overlapping(
    forecasts: &[SequenceForecast],
    warmup: usize,
) -> Result<CompositeForecast> {
    let first = forecasts
        .first()
        .ok_or_else(|| Error::Data("no forecast sequences to stitch".into()))?;
    let l_out = first.output_len();
    let n = first.outputs.cols();
    if forecasts
        .iter()
        .any(|f| f.output_len() != l_out || f.outputs.cols() != n || f.input_len != first.input_len)
    {
        return Err(Error::Dimension(
            "forecast sequences disagree in shape".into(),
        ));
    }
    if forecasts
        .windows(2)
        .any(|w| w[1].start_index <= w[0].start_index)
    {
        return Err(Error::Data(
            "forecast sequences must be sorted by strictly increasing start".into(),
        ));
    }
    if forecasts.len() > 1 {
        let shift = forecasts[1].start_index - forecasts[0].start_index;
        if forecasts
            .windows(2)
            .any(|w| w[1].start_index - w[0].start_index != shift)
        {
            return Err(Error::Data(
                "consecutive forecast starts must differ by a constant shift".into(),
            ));
        }
        if shift > l_out {
            // Coverage holes between consecutive output windows.
            let ranges = forecasts
                .windows(2)
                .map(|w| {
                    (
                        w[0].first_output_index() + l_out,
                        w[1].first_output_index() - 1,
                    )
                })
                .collect();
            return Err(Error::CoverageGap { ranges });
        }
        if shift + warmup > l_out {
            return Err(Error::InvalidConfig(format!(
                "shift {shift} must satisfy shift <= l_out - warmup = {} - {warmup}",
                l_out
            )));
        }
    }

    let first_index = first.first_output_index();
    let end_index = forecasts.last().unwrap().first_output_index() + l_out;
    let len = end_index - first_index;

    let mut values = Matrix2D::zeros(len, n);
    let mut source = vec![0usize; len];
    for g in first_index..end_index {
        // Most recent sequence whose offset for g clears the warm-up.
        let chosen = forecasts
            .iter()
            .enumerate()
            .rev()
            .find(|(_, f)| {
                let fo = f.first_output_index();
                fo <= g && g < fo + l_out && g - fo >= warmup
            })
            .map(|(k, _)| k)
            .or_else(|| {
                forecasts.iter().position(|f| {
                    let fo = f.first_output_index();
                    fo <= g && g < fo + l_out
                })
            })
            .ok_or_else(|| Error::CoverageGap {
                ranges: vec![(g, g)],
            })?;
        let f = &forecasts[chosen];
        let row = g - f.first_output_index();
        for c in 0..n {
            values.set(g - first_index, c, f.outputs.get(row, c));
        }
        source[g - first_index] = chosen;
    }

    Ok(CompositeForecast {
        first_index,
        channel_names: Vec::new(),
        values,
        source_sequence: source,
    })
}

/// Stitches and labels the channels from the model's output names.
pub fn stitch_with_names(
    forecasts: &[SequenceForecast],
    warmup: usize,
    names: &[String],
) -> Result<CompositeForecast> {
    let mut composite = stitch_overlapping(forecasts, warmup)?;
    if names.len() != composite.values.cols() {
        return Err(Error::Dimension(format!(
            "{} channel names for {} forecast channels",
            names.len(),
            composite.values.cols()
        )));
    }
    composite.channel_names = names.to_vec();
    Ok(composite)
}

/// f = l_out * dt / (t_l - t_0) * 100%.
pub fn relative_forecasting_interval(l_out: usize, dt: f64, t0: f64, t_l: f64) -> Result<f64> {
    if !(t_l > t0) {
        return Err(Error::InvalidConfig(format!(
            "training interval [{t0}, {t_l}] must have positive length"
        )));
    }
    if l_out == 0 || !(dt > 0.0) {
        return Err(Error::InvalidConfig("l_out and dt must be positive".into()));
    }
    Ok(l_out as f64 * dt / (t_l - t0) * 100.0)
}

/// Per-channel error metrics over a sample window.
#[derive(Debug, Clone)]
pub struct ChannelMetrics {
    pub name: String,
    pub mse: f64,
    pub rmse: f64,
    pub forecast_peak_hz: f64,
    pub truth_peak_hz: f64,
}

#[derive(Debug, Clone)]
pub struct ForecastMetrics {
    pub channels: Vec<ChannelMetrics>,
    /// Half-open sample range the metrics were computed on.
    pub evaluated_range: (usize, usize),
}

/// Magnitude-spectrum argmax over bins 1..=len/2, as a frequency in Hz.
/// Exact table-based phases, no recurrence drift.
fn dominant_frequency(values: &[f64], dt: f64) -> f64 {
    let n = values.len();
    if n < 4 {
        return 0.0;
    }
    let mut cos_tab = Vec::with_capacity(n);
    let mut sin_tab = Vec::with_capacity(n);
    for j in 0..n {
        let a = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        cos_tab.push(a.cos());
        sin_tab.push(a.sin());
    }
    let mut best_bin = 1;
    let mut best_mag = f64::NEG_INFINITY;
    for k in 1..=n / 2 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, &v) in values.iter().enumerate() {
            let phase = (k * j) % n;
            re += v * cos_tab[phase];
            im -= v * sin_tab[phase];
        }
        let mag = re * re + im * im;
        if mag > best_mag {
            best_mag = mag;
            best_bin = k;
        }
    }
    best_bin as f64 / (n as f64 * dt)
}

/// MSE/RMSE in physical units plus dominant-frequency estimates, over the
/// intersection of `window`, the composite coverage, and the truth frame.
pub fn evaluate(
    composite: &CompositeForecast,
    truth: &TimeSeriesFrame,
    window: Range<usize>,
) -> Result<ForecastMetrics> {
    if composite.channel_names.is_empty() {
        return Err(Error::InvalidConfig(
            "composite has no channel names to evaluate".into(),
        ));
    }
    let lo = window.start.max(composite.first_index);
    let hi = window.end.min(composite.coverage().end).min(truth.len());
    if lo >= hi {
        return Err(Error::Data(format!(
            "no overlap between window [{}, {}), composite coverage {:?} and truth length {}",
            window.start,
            window.end,
            composite.coverage(),
            truth.len()
        )));
    }

    let mut channels = Vec::with_capacity(composite.channel_names.len());
    for (c, name) in composite.channel_names.iter().enumerate() {
        let truth_vals = truth.values(name)?;
        let mut sq_sum = 0.0;
        let mut forecast_series = Vec::with_capacity(hi - lo);
        let mut truth_series = Vec::with_capacity(hi - lo);
        // g ranges over global sample indices, used against both series.
        #[allow(clippy::needless_range_loop)]
        for g in lo..hi {
            let fv = composite.values.get(g - composite.first_index, c);
            let tv = truth_vals[g];
            sq_sum += (fv - tv) * (fv - tv);
            forecast_series.push(fv);
            truth_series.push(tv);
        }
        let mse = sq_sum / (hi - lo) as f64;
        channels.push(ChannelMetrics {
            name: name.clone(),
            mse,
            rmse: mse.sqrt(),
            forecast_peak_hz: dominant_frequency(&forecast_series, truth.dt()),
            truth_peak_hz: dominant_frequency(&truth_series, truth.dt()),
        });
    }
    Ok(ForecastMetrics {
        channels,
        evaluated_range: (lo, hi),
    })
}

/// Baseline predictions over a sample range: each sample t is predicted from
/// the window [t - window_length, t). Within the frame the measured inputs
/// are used; beyond its end the baseline can continue autoregressively only
/// if every input feature is also an output feature.
pub fn feedforward_predictions(
    model: &FeedforwardModel,
    frame: &TimeSeriesFrame,
    range: Range<usize>,
) -> Result<CompositeForecast> {
    let stats = model.normalizer.as_ref().ok_or_else(|| {
        Error::InvalidConfig("model has no fitted normalizer; train it first".into())
    })?;
    let w = model.config.window_length;
    if range.start < w {
        return Err(Error::Data(format!(
            "prediction range starts at {} but the window needs {w} prior samples",
            range.start
        )));
    }
    if range.is_empty() {
        return Err(Error::Data("empty prediction range".into()));
    }
    let autoregressive_ok = model
        .input_names
        .iter()
        .all(|n| model.output_names.contains(n));
    if range.end > frame.len() && !autoregressive_ok {
        return Err(Error::InvalidConfig(
            "baseline predicts only where inputs exist; outputs do not feed back as inputs".into(),
        ));
    }

    let input_cols: Vec<&[f64]> = model
        .input_names
        .iter()
        .map(|n| frame.values(n))
        .collect::<Result<_>>()?;

    // Normalized input value for channel c at sample j, drawing on predicted
    // values beyond the frame end.
    let mut predicted: Vec<Vec<f64>> = vec![Vec::new(); model.input_names.len()]; // beyond-frame values, normalized
    let t_frame = frame.len();

    let mut values = Matrix2D::zeros(range.len(), model.output_names.len());
    let mut source = vec![0usize; range.len()];
    for (row, t) in range.clone().enumerate() {
        let mut window = Matrix2D::zeros(w, model.input_names.len());
        for (c, name) in model.input_names.iter().enumerate() {
            for r in 0..w {
                let j = t - w + r;
                let v = if j < t_frame {
                    stats.normalize_value(name, input_cols[c][j])?
                } else {
                    *predicted[c].get(j - t_frame).ok_or_else(|| {
                        Error::Data(format!("no predicted input available for sample {j}"))
                    })?
                };
                window.set(r, c, v);
            }
        }
        let out = model.predict_window(&window)?;
        for (c, name) in model.output_names.iter().enumerate() {
            values.set(row, c, stats.denormalize_value(name, out[c])?);
        }
        if t >= t_frame {
            for (c, name) in model.input_names.iter().enumerate() {
                let oc = model.output_names.iter().position(|n| n == name).unwrap();
                while predicted[c].len() < t - t_frame {
                    predicted[c].push(f64::NAN);
                }
                predicted[c].push(out[oc]);
            }
        }
        source[row] = t - w;
    }

    Ok(CompositeForecast {
        first_index: range.start,
        channel_names: model.output_names.clone(),
        values,
        source_sequence: source,
    })
}

/// One train+forecast+evaluate run per gauge set, identical protocol and
/// seed across rows.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub output_names: Vec<String>,
    pub window: WindowSpec,
    pub hidden_sizes: Vec<usize>,
    pub protocol: TrainingProtocol,
    /// Samples [0, train_len) form the training interval; the rest is test.
    pub train_len: usize,
    /// Shift between forecast sequence starts on the test interval.
    pub forecast_shift: usize,
    pub warmup: usize,
    pub parallel: bool,
}

#[derive(Debug, Clone)]
pub struct StudyRow {
    pub input_count: usize,
    pub channels: Vec<String>,
    pub train_mse: f64,
    pub test_mse: f64,
    pub seconds: f64,
    pub error: Option<String>,
}

fn run_study_row(
    frame: &TimeSeriesFrame,
    gauges: &[String],
    cfg: &StudyConfig,
) -> Result<(f64, f64)> {
    let selection = FeatureSelection::new(gauges.to_vec(), cfg.output_names.clone());
    let (model, history) = train_on_frame(
        frame,
        &selection,
        &cfg.window,
        &cfg.hidden_sizes,
        &cfg.protocol,
        cfg.train_len,
    )?;
    let composite = forecast_test_interval(
        &model,
        frame,
        &cfg.window,
        cfg.train_len,
        cfg.forecast_shift,
        cfg.warmup,
    )?;
    let metrics = evaluate(&composite, frame, cfg.train_len..frame.len())?;
    let test_mse =
        metrics.channels.iter().map(|c| c.mse).sum::<f64>() / metrics.channels.len() as f64;
    Ok((history.final_train_loss().unwrap_or(f64::NAN), test_mse))
}

/// Overlapping forecast of the test interval [train_len, T), stitched with
/// the given warm-up.
pub fn forecast_test_interval(
    model: &DeepLSTMModel,
    frame: &TimeSeriesFrame,
    window: &WindowSpec,
    train_len: usize,
    shift: usize,
    warmup: usize,
) -> Result<CompositeForecast> {
    if shift == 0 {
        return Err(Error::InvalidConfig("forecast shift must be >= 1".into()));
    }
    if train_len < window.l_in {
        return Err(Error::InvalidConfig(format!(
            "training interval of {train_len} samples is shorter than l_in {}",
            window.l_in
        )));
    }
    let first = train_len - window.l_in;
    let starts = sequence_starts(first, frame.len(), window, shift);
    if starts.is_empty() {
        return Err(Error::Data(
            "test interval too short for a single forecast sequence".into(),
        ));
    }
    let forecasts = forecast_sequences(model, frame, window, &starts)?;
    stitch_with_names(&forecasts, warmup, &model.output_names)
}

pub fn convergence_study(
    frame: &TimeSeriesFrame,
    gauge_sets: &[Vec<String>],
    cfg: &StudyConfig,
) -> Vec<StudyRow> {
    let run = |gauges: &Vec<String>| -> StudyRow {
        let started = Instant::now();
        match run_study_row(frame, gauges, cfg) {
            Ok((train_mse, test_mse)) => StudyRow {
                input_count: gauges.len(),
                channels: gauges.clone(),
                train_mse,
                test_mse,
                seconds: started.elapsed().as_secs_f64(),
                error: None,
            },
            Err(e) => StudyRow {
                input_count: gauges.len(),
                channels: gauges.clone(),
                train_mse: f64::NAN,
                test_mse: f64::NAN,
                seconds: started.elapsed().as_secs_f64(),
                error: Some(e.to_string()),
            },
        }
    };

    if cfg.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = gauge_sets.iter().map(|g| scope.spawn(|| run(g))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("study row panicked"))
                .collect()
        })
    } else {
        gauge_sets.iter().map(run).collect()
    }
}

/// Study table as delimited text: `m, channels, train_mse, test_mse, seconds`.
/// Failed rows become `#`-prefixed records so the table stays machine-readable.
pub fn study_table(rows: &[StudyRow], no_timestamps: bool) -> String {
    let mut out = String::from("m, channels, train_mse, test_mse, seconds\n");
    for row in rows {
        let channels = row.channels.join("+");
        let secs = if no_timestamps { 0.0 } else { row.seconds };
        match &row.error {
            None => out.push_str(&format!(
                "{}, {}, {:.16e}, {:.16e}, {:.3}\n",
                row.input_count, channels, row.train_mse, row.test_mse, secs
            )),
            Some(e) => out.push_str(&format!(
                "# failed: m={}, channels={}, error={}\n",
                row.input_count, channels, e
            )),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_forecast(
        start: usize,
        input_len: usize,
        l_out: usize,
        value: f64,
    ) -> SequenceForecast {
        let outputs = Matrix2D::from_values(l_out, 1, vec![value; l_out]).unwrap();
        SequenceForecast {
            start_index: start,
            input_len,
            outputs,
        }
    }

    #[test]
    fn fifteen_nonoverlapping_sequences() {
        // 3000-sample horizon, l = 374, shift = l_out = 187.
        let spec = WindowSpec::new(187, 187, 1).unwrap();
        let starts = sequence_starts(0, 3000, &spec, 187);
        assert_eq!(starts.len(), 15);
        assert_eq!(starts[0], 0);
        assert_eq!(*starts.last().unwrap(), 14 * 187);
    }

    #[test]
    fn overlapping_halfshift_layout() {
        // Shift 93 with l_in = l_out = 187: consecutive output windows
        // overlap by 187 - 93 = 94 samples.
        let spec = WindowSpec::new(187, 187, 1).unwrap();
        let starts = sequence_starts(0, 3000, &spec, 93);
        assert!(starts.len() > 15);
        let f0_end = starts[0] + 187 + 187;
        let f1_begin = starts[1] + 187;
        assert_eq!(f0_end - f1_begin, 94);
    }

    #[test]
    fn empty_starts_empty_result() {
        let spec = WindowSpec::new(5, 5, 1).unwrap();
        assert!(sequence_starts(0, 9, &spec, 1).is_empty());
    }

    #[test]
    fn single_sequence_stitch_is_identity() {
        let f = constant_forecast(0, 4, 6, 2.5);
        let composite = stitch_overlapping(std::slice::from_ref(&f), 0).unwrap();
        assert_eq!(composite.first_index, 4);
        assert_eq!(composite.len(), 6);
        assert_eq!(composite.values.values(), &[2.5; 6]);
        assert!(composite.source_sequence.iter().all(|&s| s == 0));
    }

    #[test]
    fn two_sequence_stitch_hand_simulation() {
        // Constant outputs A then B, shift s, warm-up w: composite equals A
        // on [l_in, l_in + s + w), then B.
        let l_in = 10;
        let l_out = 8;
        let s = 3;
        let w = 2;
        let a = constant_forecast(0, l_in, l_out, 1.0);
        let b = constant_forecast(s, l_in, l_out, 2.0);
        let composite = stitch_overlapping(&[a, b], w).unwrap();
        assert_eq!(composite.first_index, l_in);
        assert_eq!(composite.len(), s + l_out);
        for (i, g) in composite.coverage().enumerate() {
            let expected = if g < l_in + s + w { 1.0 } else { 2.0 };
            assert_eq!(composite.values.get(i, 0), expected, "sample {g}");
        }
    }

    #[test]
    fn warmup_equal_shift_offsets() {
        // The half-overlap geometry: l_out = 2s, warm-up = s. Beyond the
        // global first s samples, every retained sample must have
        // within-sequence offset >= s.
        let s = 5;
        let l_in = 10;
        let l_out = 2 * s;
        let forecasts: Vec<SequenceForecast> = (0..6)
            .map(|k| constant_forecast(k * s, l_in, l_out, k as f64))
            .collect();
        let composite = stitch_overlapping(&forecasts, s).unwrap();
        for (i, g) in composite.coverage().enumerate() {
            let src = composite.source_sequence[i];
            let offset = g - forecasts[src].first_output_index();
            if g >= composite.first_index + s {
                assert!(offset >= s, "sample {g} retained with offset {offset}");
            }
        }
    }

    #[test]
    fn gap_is_reported_with_ranges() {
        let a = constant_forecast(0, 4, 3, 1.0);
        let b = constant_forecast(5, 4, 3, 2.0); // shift 5 > l_out 3
        match stitch_overlapping(&[a, b], 0) {
            Err(Error::CoverageGap { ranges }) => assert_eq!(ranges, vec![(7, 8)]),
            other => panic!("expected a coverage gap, got {other:?}"),
        }
    }

    #[test]
    fn shift_beyond_warmup_budget_rejected() {
        let a = constant_forecast(0, 4, 6, 1.0);
        let b = constant_forecast(5, 4, 6, 2.0); // shift 5 > l_out - warmup = 4
        assert!(matches!(
            stitch_overlapping(&[a, b], 2),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn relative_interval_examples() {
        let f = relative_forecasting_interval(187, 1.0, 0.0, 1500.0).unwrap();
        assert!((f - 12.466666666666667).abs() < 1e-12);
        assert!((f - 12.4).abs() < 0.1);

        let full = relative_forecasting_interval(1500, 1.0, 0.0, 1500.0).unwrap();
        assert_eq!(full, 100.0);

        assert!(relative_forecasting_interval(10, 1.0, 5.0, 5.0).is_err());
    }

    #[test]
    fn interval_invariant_under_rescaling() {
        let a = relative_forecasting_interval(122, 60.0, 0.0, 2948.0 * 60.0).unwrap();
        let b = relative_forecasting_interval(122, 1.0, 0.0, 2948.0).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn evaluate_exact_and_offset() {
        use crate::frame::{Channel, TimeSeriesFrame};
        let truth_vals: Vec<f64> = (0..40).map(|i| (i as f64 * 0.3).sin()).collect();
        let truth =
            TimeSeriesFrame::new(0.0, 1.0, vec![Channel::new("q", truth_vals.clone())]).unwrap();

        let exact = CompositeForecast {
            first_index: 10,
            channel_names: vec!["q".into()],
            values: Matrix2D::from_values(20, 1, truth_vals[10..30].to_vec()).unwrap(),
            source_sequence: vec![0; 20],
        };
        let m = evaluate(&exact, &truth, 0..40).unwrap();
        assert_eq!(m.channels[0].mse, 0.0);
        assert_eq!(m.evaluated_range, (10, 30));

        let offset = CompositeForecast {
            first_index: 10,
            channel_names: vec!["q".into()],
            values: Matrix2D::from_values(
                20,
                1,
                truth_vals[10..30].iter().map(|v| v + 3.0).collect(),
            )
            .unwrap(),
            source_sequence: vec![0; 20],
        };
        let m = evaluate(&offset, &truth, 0..40).unwrap();
        assert!((m.channels[0].mse - 9.0).abs() < 1e-12);
        assert!((m.channels[0].rmse - 3.0).abs() < 1e-12);
    }

    #[test]
    fn evaluate_rejects_empty_overlap() {
        use crate::frame::{Channel, TimeSeriesFrame};
        let truth = TimeSeriesFrame::new(0.0, 1.0, vec![Channel::new("q", vec![0.0; 5])]).unwrap();
        let c = CompositeForecast {
            first_index: 10,
            channel_names: vec!["q".into()],
            values: Matrix2D::zeros(4, 1),
            source_sequence: vec![0; 4],
        };
        assert!(evaluate(&c, &truth, 0..20).is_err());
    }

    #[test]
    fn phase_shifted_sinusoid_peaks_match() {
        use crate::frame::{Channel, TimeSeriesFrame};
        let n = 256;
        let cycles = 8.0;
        let truth_vals: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * cycles * i as f64 / n as f64).sin())
            .collect();
        let shifted: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * cycles * i as f64 / n as f64 + 1.1).sin())
            .collect();
        let truth = TimeSeriesFrame::new(0.0, 1.0, vec![Channel::new("q", truth_vals)]).unwrap();
        let c = CompositeForecast {
            first_index: 0,
            channel_names: vec!["q".into()],
            values: Matrix2D::from_values(n, 1, shifted).unwrap(),
            source_sequence: vec![0; n],
        };
        let m = evaluate(&c, &truth, 0..n).unwrap();
        assert_eq!(m.channels[0].forecast_peak_hz, m.channels[0].truth_peak_hz);
        assert!((m.channels[0].truth_peak_hz - cycles / n as f64).abs() < 1e-15);
    }

    #[test]
    fn feedforward_autoregression_needs_outputs_as_inputs() {
        use crate::frame::{Channel, TimeSeriesFrame};
        use crate::training::{train_feedforward_on_frame, TrainingProtocol};

        let x: Vec<f64> = (0..120).map(|i| (i as f64 * 0.3).sin()).collect();
        let y: Vec<f64> = (0..120).map(|i| (i as f64 * 0.3 + 0.4).sin()).collect();
        let frame =
            TimeSeriesFrame::new(0.0, 1.0, vec![Channel::new("x", x), Channel::new("y", y)])
                .unwrap();
        let protocol = TrainingProtocol::new(5).with_epochs(2);

        // Output is not an input: predicting past the frame end is refused.
        let sel = FeatureSelection::new(["x"], ["y"]);
        let (model, _) = train_feedforward_on_frame(&frame, &sel, 8, &[5], &protocol, 120).unwrap();
        assert!(feedforward_predictions(&model, &frame, 100..140).is_err());
        // Within the measured inputs it works.
        let ok = feedforward_predictions(&model, &frame, 100..120).unwrap();
        assert_eq!(ok.coverage(), 100..120);

        // Self-forecasting (output feeds back as input) rolls past the end.
        let sel = FeatureSelection::new(["x"], ["x"]);
        let (model, _) = train_feedforward_on_frame(&frame, &sel, 8, &[5], &protocol, 120).unwrap();
        let auto = feedforward_predictions(&model, &frame, 100..140).unwrap();
        assert_eq!(auto.coverage(), 100..140);
        assert!(auto.values.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn metric_locality() {
        use crate::frame::{Channel, TimeSeriesFrame};
        let truth_vals: Vec<f64> = (0..60).map(|i| (i as f64 * 0.21).cos()).collect();
        let truth =
            TimeSeriesFrame::new(0.0, 1.0, vec![Channel::new("q", truth_vals.clone())]).unwrap();
        let forecast_vals: Vec<f64> = truth_vals.iter().map(|v| v * 1.1 + 0.05).collect();
        let c = CompositeForecast {
            first_index: 0,
            channel_names: vec!["q".into()],
            values: Matrix2D::from_values(60, 1, forecast_vals).unwrap(),
            source_sequence: vec![0; 60],
        };
        // Restricting by window equals evaluating a composite cut to the window.
        let windowed = evaluate(&c, &truth, 20..50).unwrap();
        let cut = CompositeForecast {
            first_index: 20,
            channel_names: vec!["q".into()],
            values: Matrix2D::from_values(30, 1, (20..50).map(|g| c.values.get(g, 0)).collect())
                .unwrap(),
            source_sequence: vec![0; 30],
        };
        let full = evaluate(&cut, &truth, 0..60).unwrap();
        assert_eq!(windowed.channels[0].mse, full.channels[0].mse);
        assert_eq!(windowed.evaluated_range, full.evaluated_range);
    }
}
