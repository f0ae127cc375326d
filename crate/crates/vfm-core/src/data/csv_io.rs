//! Frame and plot-data persistence.
//!
//! Frame CSVs: comma delimiter, `.` decimal, a `time` column in seconds
//! (integer-seconds emitted, floats accepted), one column per channel, and
//! an optional trailing `flow_period` column. Channel values are printed in
//! Rust's shortest round-trip form, so save -> load -> save is byte-stable
//! in double precision.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::forecasting::CompositeForecast;
use crate::frame::{Channel, TimeSeriesFrame};

/// Integer seconds when exact, shortest round-trip float otherwise.
pub(crate) fn fmt_time(t: f64) -> String {
    if t.fract() == 0.0 && t.abs() < 9.0e15 {
        format!("{}", t as i64)
    } else {
        format!("{t}")
    }
}

pub fn write_frame_csv(frame: &TimeSeriesFrame, path: &Path) -> Result<()> {
    let mut out = String::from("time");
    for ch in frame.channels() {
        if ch.name.contains(',') {
            return Err(Error::Data(format!(
                "channel name '{}' contains a comma",
                ch.name
            )));
        }
        let _ = write!(out, ",{}", ch.name);
    }
    if frame.flow_periods().is_some() {
        out.push_str(",flow_period");
    }
    out.push('\n');

    for k in 0..frame.len() {
        let _ = write!(out, "{}", fmt_time(frame.time_at(k)));
        for ch in frame.channels() {
            let _ = write!(out, ",{}", ch.values[k]);
        }
        if let Some(fp) = frame.flow_periods() {
            let _ = write!(out, ",{}", fp[k]);
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses a time cell: integer/float seconds, or a minimal ISO-8601
/// timestamp `YYYY-MM-DDTHH:MM:SS[.fff][Z]` converted to Unix seconds.
pub(crate) fn parse_time(tok: &str) -> Option<f64> {
    if let Ok(v) = tok.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let tok = tok.strip_suffix('Z').unwrap_or(tok);
    let (date, clock) = tok.split_once(['T', ' '])?;
    let mut dp = date.split('-');
    let year: i64 = dp.next()?.parse().ok()?;
    let month: i64 = dp.next()?.parse().ok()?;
    let day: i64 = dp.next()?.parse().ok()?;
    if dp.next().is_some() || !(1..=12).contains(&month) || !(1..=31).contains(&day) {
        return None;
    }
    let mut cp = clock.split(':');
    let hour: f64 = cp.next()?.parse().ok()?;
    let minute: f64 = cp.next()?.parse().ok()?;
    let second: f64 = cp.next()?.parse().ok()?;
    if cp.next().is_some() {
        return None;
    }
    // Days from civil 1970-01-01 (Gregorian).
    let y = if month <= 2 { year - 1 } else { year };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let mp = if month > 2 { month - 3 } else { month + 9 };
    let doy = (153 * mp + 2) / 5 + day - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    let days = era * 146097 + doe - 719468;
    Some(days as f64 * 86400.0 + hour * 3600.0 + minute * 60.0 + second)
}

/// Loads a frame CSV written by [`write_frame_csv`] (or any file with the
/// same schema and a uniform time grid).
pub fn load_frame_csv(path: &Path) -> Result<TimeSeriesFrame> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Csv {
        line: 1,
        message: "empty file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"time") {
        return Err(Error::Csv {
            line: 1,
            message: "first column must be 'time'".into(),
        });
    }
    let flow_col = cols.iter().position(|c| *c == "flow_period");
    let channel_cols: Vec<(usize, String)> = cols
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(i, _)| Some(*i) != flow_col)
        .map(|(i, name)| (i, name.to_string()))
        .collect();
    if channel_cols.is_empty() {
        return Err(Error::Csv {
            line: 1,
            message: "no channel columns".into(),
        });
    }

    let mut times: Vec<f64> = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); channel_cols.len()];
    let mut periods: Vec<u32> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(Error::Csv {
                line: line_no,
                message: format!("expected {} fields, found {}", cols.len(), fields.len()),
            });
        }
        let t = parse_time(fields[0]).ok_or_else(|| Error::Csv {
            line: line_no,
            message: format!("unparseable time '{}'", fields[0]),
        })?;
        times.push(t);
        for (slot, (col, name)) in channel_cols.iter().enumerate() {
            let v: f64 = fields[*col].parse().map_err(|_| Error::Csv {
                line: line_no,
                message: format!("unparseable value '{}' in column '{name}'", fields[*col]),
            })?;
            values[slot].push(v);
        }
        if let Some(fc) = flow_col {
            let p: u32 = fields[fc].parse().map_err(|_| Error::Csv {
                line: line_no,
                message: format!("unparseable flow_period '{}'", fields[fc]),
            })?;
            periods.push(p);
        }
    }

    let names: Vec<String> = channel_cols.iter().map(|(_, n)| n.clone()).collect();
    if times.is_empty() {
        return TimeSeriesFrame::empty(0.0, 1.0, &names);
    }
    let t0 = times[0];
    let dt = if times.len() >= 2 {
        times[1] - times[0]
    } else {
        1.0
    };
    if !(dt > 0.0) {
        return Err(Error::Data(
            "time column must be strictly increasing".into(),
        ));
    }
    for (k, &t) in times.iter().enumerate() {
        if (t - (t0 + k as f64 * dt)).abs() > 1e-6 * dt {
            return Err(Error::Data(format!(
                "non-uniform time grid at sample {k}: expected {}, found {t}; resample first",
                t0 + k as f64 * dt
            )));
        }
    }

    let channels = names
        .into_iter()
        .zip(values)
        .map(|(name, vals)| Channel::new(name, vals))
        .collect();
    let mut frame = TimeSeriesFrame::new(t0, dt, channels)?;
    if flow_col.is_some() {
        frame = frame.with_flow_periods(periods)?;
    }
    Ok(frame)
}

/// Writes one columnar file per forecast channel: `time, truth, forecast,
/// sequence_id`, one row per covered sample, floats to 17 significant
/// digits. Missing truth becomes `nan`.
pub fn write_plot_data(
    composite: &CompositeForecast,
    truth: Option<&TimeSeriesFrame>,
    t0: f64,
    dt: f64,
    dir: &Path,
    prefix: &str,
) -> Result<Vec<PathBuf>> {
    if composite.channel_names.is_empty() {
        return Err(Error::InvalidConfig(
            "composite has no channel names".into(),
        ));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (c, name) in composite.channel_names.iter().enumerate() {
        let truth_vals = match truth {
            Some(frame) => Some(frame.values(name)?),
            None => None,
        };
        let mut out = String::from("time, truth, forecast, sequence_id\n");
        for (row, g) in composite.coverage().enumerate() {
            let t = t0 + g as f64 * dt;
            let tv = truth_vals
                .and_then(|vals| vals.get(g).copied())
                .map_or_else(|| "nan".to_string(), |v| format!("{v:.16e}"));
            let _ = writeln!(
                out,
                "{}, {tv}, {:.16e}, {}",
                fmt_time(t),
                composite.values.get(row, c),
                composite.source_sequence[row]
            );
        }
        let path = dir.join(format!("{prefix}{name}.csv"));
        std::fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
