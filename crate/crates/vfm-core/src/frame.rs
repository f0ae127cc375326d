//! Uniformly sampled, named multichannel time series.

use crate::error::{Error, Result};

/// One named real-valued series.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub values: Vec<f64>,
}

impl Channel {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Channel {
            name: name.into(),
            values,
        }
    }
}

/// Equally spaced multichannel frame. All channels share the same length and
/// time grid t0, t0+dt, t0+2dt, ...
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesFrame {
    t0: f64,
    dt: f64,
    channels: Vec<Channel>,
    flow_periods: Option<Vec<u32>>,
}

impl TimeSeriesFrame {
    pub fn new(t0: f64, dt: f64, channels: Vec<Channel>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Data(format!("timestep must be positive, got {dt}")));
        }
        if channels.is_empty() {
            return Err(Error::Data("frame needs at least one channel".into()));
        }
        let len = channels[0].values.len();
        if len == 0 {
            return Err(Error::Data("channels must hold at least one sample".into()));
        }
        for ch in &channels {
            if ch.values.len() != len {
                return Err(Error::Data(format!(
                    "channel '{}' has {} samples, expected {len}",
                    ch.name,
                    ch.values.len()
                )));
            }
        }
        for (i, a) in channels.iter().enumerate() {
            if channels[i + 1..].iter().any(|b| b.name == a.name) {
                return Err(Error::Data(format!("duplicate channel name '{}'", a.name)));
            }
        }
        Ok(TimeSeriesFrame {
            t0,
            dt,
            channels,
            flow_periods: None,
        })
    }

    pub fn with_flow_periods(mut self, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::Data(format!(
                "{} flow-period labels for {} samples",
                labels.len(),
                self.len()
            )));
        }
        if labels.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Data(
                "flow-period labels must be non-decreasing".into(),
            ));
        }
        self.flow_periods = Some(labels);
        Ok(self)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Degenerate zero-sample frame; valid only as an I/O artifact, every
    /// modeling operation rejects it via its own length checks.
    pub fn empty(t0: f64, dt: f64, names: &[String]) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Data(format!("timestep must be positive, got {dt}")));
        }
        if names.is_empty() {
            return Err(Error::Data("frame needs at least one channel".into()));
        }
        let channels = names
            .iter()
            .map(|n| Channel::new(n.clone(), Vec::new()))
            .collect();
        Ok(TimeSeriesFrame {
            t0,
            dt,
            channels,
            flow_periods: None,
        })
    }

    /// Number of samples T.
    pub fn len(&self) -> usize {
        self.channels[0].values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.dt
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel_names(&self) -> Vec<&str> {
        self.channels.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.name == name)
    }

    pub fn values(&self, name: &str) -> Result<&[f64]> {
        self.channel(name)
            .map(|c| c.values.as_slice())
            .ok_or_else(|| Error::Data(format!("unknown channel '{name}'")))
    }

    pub fn flow_periods(&self) -> Option<&[u32]> {
        self.flow_periods.as_deref()
    }

    /// Sub-frame over a sample index range; t0 shifts accordingly.
    pub fn slice(&self, start: usize, end: usize) -> Result<TimeSeriesFrame> {
        if start >= end || end > self.len() {
            return Err(Error::Data(format!(
                "slice [{start}, {end}) out of range for {} samples",
                self.len()
            )));
        }
        let channels = self
            .channels
            .iter()
            .map(|c| Channel::new(c.name.clone(), c.values[start..end].to_vec()))
            .collect();
        let mut frame = TimeSeriesFrame::new(self.time_at(start), self.dt, channels)?;
        if let Some(fp) = &self.flow_periods {
            frame.flow_periods = Some(fp[start..end].to_vec());
        }
        Ok(frame)
    }

    /// New frame holding only the named channels, in the given order.
    pub fn select(&self, names: &[String]) -> Result<TimeSeriesFrame> {
        let channels = names
            .iter()
            .map(|n| {
                self.channel(n)
                    .cloned()
                    .ok_or_else(|| Error::Data(format!("unknown channel '{n}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut frame = TimeSeriesFrame::new(self.t0, self.dt, channels)?;
        frame.flow_periods = self.flow_periods.clone();
        Ok(frame)
    }
}

/// Arbitrarily timestamped series, the input to uniform resampling.
#[derive(Debug, Clone)]
pub struct RawSeries {
    pub timestamps: Vec<f64>,
    pub channels: Vec<Channel>,
    pub flow_periods: Option<Vec<u32>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_channels() {
        let r = TimeSeriesFrame::new(
            0.0,
            1.0,
            vec![
                Channel::new("a", vec![1.0, 2.0]),
                Channel::new("b", vec![1.0]),
            ],
        );
        assert!(r.is_err());
    }

    #[test]
    fn rejects_duplicate_names() {
        let r = TimeSeriesFrame::new(
            0.0,
            1.0,
            vec![Channel::new("a", vec![1.0]), Channel::new("a", vec![2.0])],
        );
        assert!(r.is_err());
    }

    #[test]
    fn slice_shifts_origin() {
        let f = TimeSeriesFrame::new(10.0, 2.0, vec![Channel::new("a", vec![0.0, 1.0, 2.0, 3.0])])
            .unwrap();
        let s = f.slice(1, 3).unwrap();
        assert_eq!(s.t0(), 12.0);
        assert_eq!(s.values("a").unwrap(), &[1.0, 2.0]);
    }

    #[test]
    fn select_preserves_order() {
        let f = TimeSeriesFrame::new(
            0.0,
            1.0,
            vec![
                Channel::new("a", vec![1.0]),
                Channel::new("b", vec![2.0]),
                Channel::new("c", vec![3.0]),
            ],
        )
        .unwrap();
        let s = f.select(&["c".into(), "a".into()]).unwrap();
        assert_eq!(s.channel_names(), vec!["c", "a"]);
    }
}
