//! Overlapping input/target sequence construction, resampling,
//! normalization and train/validation splitting.
//!
//! A frame with T samples and a window of total length l = l_in + l_out
//! shifted by step s yields N = floor((T - l)/s) + 1 sequences. Sequence k
//! reads inputs from samples [k*s, k*s + l_in) and targets from
//! [k*s + l_in, k*s + l).

use crate::error::{Error, Result};
use crate::frame::{Channel, RawSeries, TimeSeriesFrame};
use crate::linalg::Matrix2D;

/// Which channels feed the model (m inputs) and which it predicts (n outputs).
/// The two sets may overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSelection {
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
}

impl FeatureSelection {
    pub fn new(
        input_names: impl IntoIterator<Item = impl Into<String>>,
        output_names: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        FeatureSelection {
            input_names: input_names.into_iter().map(Into::into).collect(),
            output_names: output_names.into_iter().map(Into::into).collect(),
        }
    }

    pub fn validate(&self, frame: &TimeSeriesFrame) -> Result<()> {
        if self.input_names.is_empty() || self.output_names.is_empty() {
            return Err(Error::InvalidConfig(
                "feature selection needs at least one input and one output".into(),
            ));
        }
        for name in self.input_names.iter().chain(&self.output_names) {
            if frame.channel(name).is_none() {
                return Err(Error::Data(format!("unknown channel '{name}'")));
            }
        }
        Ok(())
    }
}

/// Sequence lengths and the indentation step, in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub l_in: usize,
    pub l_out: usize,
    pub step: usize,
}

impl WindowSpec {
    pub fn new(l_in: usize, l_out: usize, step: usize) -> Result<Self> {
        let spec = WindowSpec { l_in, l_out, step };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_in == 0 || self.l_out == 0 || self.step == 0 {
            return Err(Error::InvalidConfig(format!(
                "window lengths and step must be >= 1 (got l_in={}, l_out={}, step={})",
                self.l_in, self.l_out, self.step
            )));
        }
        Ok(())
    }

    /// l = l_in + l_out
    pub fn total_len(&self) -> usize {
        self.l_in + self.l_out
    }
}

/// Number of windows of total length `l` with step `s` in `t` samples.
pub fn window_count(t: usize, l: usize, s: usize) -> Result<usize> {
    if s == 0 || l == 0 {
        return Err(Error::InvalidConfig(
            "window length and step must be >= 1".into(),
        ));
    }
    if t < l {
        return Err(Error::Data(format!(
            "training interval shorter than one sequence: {t} samples < l = {l}"
        )));
    }
    Ok((t - l) / s + 1)
}

/// The training array X (N sequences of l_in x m) and target array Y
/// (N sequences of l_out x n) carved out of a frame.
#[derive(Debug, Clone)]
pub struct SlidingDataset {
    pub inputs: Vec<Matrix2D>,
    pub targets: Vec<Matrix2D>,
    pub sequence_starts: Vec<usize>,
    pub spec: WindowSpec,
}

impl SlidingDataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Builds the overlapping sequence arrays.
pub fn build_windows(
    frame: &TimeSeriesFrame,
    selection: &FeatureSelection,
    spec: &WindowSpec,
) -> Result<SlidingDataset> {
    spec.validate()?;
    selection.validate(frame)?;
    let t = frame.len();
    let l = spec.total_len();
    let n_seq = window_count(t, l, spec.step)?;

    let input_cols: Vec<&[f64]> = selection
        .input_names
        .iter()
        .map(|n| frame.values(n))
        .collect::<Result<_>>()?;
    let output_cols: Vec<&[f64]> = selection
        .output_names
        .iter()
        .map(|n| frame.values(n))
        .collect::<Result<_>>()?;

    let mut inputs = Vec::with_capacity(n_seq);
    let mut targets = Vec::with_capacity(n_seq);
    let mut sequence_starts = Vec::with_capacity(n_seq);

    for k in 0..n_seq {
        let start = k * spec.step;
        let mut x = Matrix2D::zeros(spec.l_in, input_cols.len());
        for (c, col) in input_cols.iter().enumerate() {
            for r in 0..spec.l_in {
                x.set(r, c, col[start + r]);
            }
        }
        let mut y = Matrix2D::zeros(spec.l_out, output_cols.len());
        for (c, col) in output_cols.iter().enumerate() {
            for r in 0..spec.l_out {
                y.set(r, c, col[start + spec.l_in + r]);
            }
        }
        inputs.push(x);
        targets.push(y);
        sequence_starts.push(start);
    }

    Ok(SlidingDataset {
        inputs,
        targets,
        sequence_starts,
        spec: *spec,
    })
}

/// Tail split: the last ceil(fraction * N) sequences become validation.
pub fn train_val_split(
    dataset: &SlidingDataset,
    fraction: f64,
) -> Result<(SlidingDataset, SlidingDataset)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidConfig(format!(
            "validation fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let n = dataset.len();
    let n_val = (fraction * n as f64).ceil() as usize;
    let n_train = n - n_val;
    if n_train == 0 {
        return Err(Error::InvalidConfig(format!(
            "validation fraction {fraction} leaves an empty training set (N = {n})"
        )));
    }
    let take = |range: std::ops::Range<usize>| SlidingDataset {
        inputs: dataset.inputs[range.clone()].to_vec(),
        targets: dataset.targets[range.clone()].to_vec(),
        sequence_starts: dataset.sequence_starts[range].to_vec(),
        spec: dataset.spec,
    };
    Ok((take(0..n_train), take(n_train..n)))
}

/// Per-channel min/max fitted on the training interval only.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizerStats {
    entries: Vec<ChannelStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

impl ChannelStats {
    pub fn is_constant(&self) -> bool {
        self.max == self.min
    }
}

impl NormalizerStats {
    pub fn from_entries(entries: Vec<ChannelStats>) -> Self {
        NormalizerStats { entries }
    }

    pub fn entries(&self) -> &[ChannelStats] {
        &self.entries
    }

    pub fn channel(&self, name: &str) -> Result<&ChannelStats> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::Data(format!("no normalizer statistics for channel '{name}'")))
    }

    /// Channels that were constant on the fit interval; these map to 0.5.
    pub fn constant_channels(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.is_constant())
            .map(|e| e.name.as_str())
            .collect()
    }

    pub fn normalize_value(&self, name: &str, v: f64) -> Result<f64> {
        let st = self.channel(name)?;
        Ok(if st.is_constant() {
            0.5
        } else {
            (v - st.min) / (st.max - st.min)
        })
    }

    pub fn denormalize_value(&self, name: &str, v: f64) -> Result<f64> {
        let st = self.channel(name)?;
        Ok(if st.is_constant() {
            st.min
        } else {
            v * (st.max - st.min) + st.min
        })
    }
}

/// Fits per-channel min/max over `fit_range` sample indices.
pub fn fit_normalizer(
    frame: &TimeSeriesFrame,
    fit_range: std::ops::Range<usize>,
) -> Result<NormalizerStats> {
    if fit_range.is_empty() || fit_range.end > frame.len() {
        return Err(Error::Data(format!(
            "normalizer fit range [{}, {}) invalid for {} samples",
            fit_range.start,
            fit_range.end,
            frame.len()
        )));
    }
    let entries = frame
        .channels()
        .iter()
        .map(|ch| {
            let window = &ch.values[fit_range.clone()];
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for &v in window {
                min = min.min(v);
                max = max.max(v);
            }
            ChannelStats {
                name: ch.name.clone(),
                min,
                max,
            }
        })
        .collect();
    Ok(NormalizerStats { entries })
}

/// Maps every channel of the frame to [0, 1] using the fitted stats.
/// Values outside the fit interval may leave [0, 1].
pub fn normalize_frame(
    frame: &TimeSeriesFrame,
    stats: &NormalizerStats,
) -> Result<TimeSeriesFrame> {
    transform_frame(frame, stats, NormalizerStats::normalize_value)
}

/// Inverse of [`normalize_frame`].
pub fn denormalize_frame(
    frame: &TimeSeriesFrame,
    stats: &NormalizerStats,
) -> Result<TimeSeriesFrame> {
    transform_frame(frame, stats, NormalizerStats::denormalize_value)
}

fn transform_frame(
    frame: &TimeSeriesFrame,
    stats: &NormalizerStats,
    f: impl Fn(&NormalizerStats, &str, f64) -> Result<f64>,
) -> Result<TimeSeriesFrame> {
    let channels = frame
        .channels()
        .iter()
        .map(|ch| {
            let values = ch
                .values
                .iter()
                .map(|&v| f(stats, &ch.name, v))
                .collect::<Result<Vec<_>>>()?;
            Ok(Channel::new(ch.name.clone(), values))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = TimeSeriesFrame::new(frame.t0(), frame.dt(), channels)?;
    if let Some(fp) = frame.flow_periods() {
        out = out.with_flow_periods(fp.to_vec())?;
    }
    Ok(out)
}

/// Linear interpolation of an arbitrarily timestamped series onto the
/// uniform grid t0, t0+dt, ... No extrapolation beyond the last timestamp.
pub fn resample_uniform(raw: &RawSeries, dt: f64) -> Result<TimeSeriesFrame> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Data(format!(
            "resample timestep must be positive, got {dt}"
        )));
    }
    let ts = &raw.timestamps;
    if ts.len() < 2 {
        return Err(Error::Data(format!(
            "resampling needs at least 2 samples, got {}",
            ts.len()
        )));
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Data("timestamps must be strictly increasing".into()));
    }
    for ch in &raw.channels {
        if ch.values.len() != ts.len() {
            return Err(Error::Data(format!(
                "channel '{}' has {} samples for {} timestamps",
                ch.name,
                ch.values.len(),
                ts.len()
            )));
        }
    }

    let t0 = ts[0];
    let t_last = *ts.last().unwrap();
    let n_out = ((t_last - t0) / dt).floor() as usize + 1;

    let mut grid_vals: Vec<Vec<f64>> = vec![Vec::with_capacity(n_out); raw.channels.len()];
    let mut grid_periods: Vec<u32> = Vec::new();
    let mut seg = 0usize; // index of the segment [ts[seg], ts[seg+1]] containing t
    for k in 0..n_out {
        let t = t0 + k as f64 * dt;
        while seg + 2 < ts.len() && ts[seg + 1] < t {
            seg += 1;
        }
        let (ta, tb) = (ts[seg], ts[seg + 1]);
        let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        for (c, ch) in raw.channels.iter().enumerate() {
            let va = ch.values[seg];
            let vb = ch.values[seg + 1];
            grid_vals[c].push(va + w * (vb - va));
        }
        if let Some(fp) = &raw.flow_periods {
            // Label from the sample at or before t.
            let idx = if t >= tb { seg + 1 } else { seg };
            grid_periods.push(fp[idx]);
        }
    }

    let channels = raw
        .channels
        .iter()
        .zip(grid_vals)
        .map(|(ch, values)| Channel::new(ch.name.clone(), values))
        .collect();
    let mut frame = TimeSeriesFrame::new(t0, dt, channels)?;
    if raw.flow_periods.is_some() {
        frame = frame.with_flow_periods(grid_periods)?;
    }
    Ok(frame)
}
