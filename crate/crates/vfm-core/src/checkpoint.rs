//! Versioned text checkpoints.
//!
//! Format: header line `VFMNN v1`, then a config block (kind, seed, layer
//! sizes, feature names, normalizer statistics), then one line per parameter
//! tensor: `tensor <name> <rank> <dims...> <values...>` with values printed
//! to 17 significant digits so double-precision weights round-trip bitwise.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix2D;
use crate::model::{DeepLSTMConfig, DeepLSTMModel, FeedforwardConfig, FeedforwardModel};
use crate::nn::dense::DenseParams;
use crate::nn::lstm::LSTMLayerParams;
use crate::windowing::{ChannelStats, NormalizerStats};

const HEADER: &str = "VFMNN v1";

/// Either model family, as found in a checkpoint file.
pub enum CheckpointedModel {
    Lstm(DeepLSTMModel),
    Feedforward(FeedforwardModel),
}

impl CheckpointedModel {
    pub fn into_lstm(self) -> Result<DeepLSTMModel> {
        match self {
            CheckpointedModel::Lstm(m) => Ok(m),
            CheckpointedModel::Feedforward(_) => Err(Error::CheckpointShape(
                "checkpoint holds a feedforward model, expected lstm".into(),
            )),
        }
    }

    pub fn into_feedforward(self) -> Result<FeedforwardModel> {
        match self {
            CheckpointedModel::Feedforward(m) => Ok(m),
            CheckpointedModel::Lstm(_) => Err(Error::CheckpointShape(
                "checkpoint holds an lstm model, expected feedforward".into(),
            )),
        }
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_tensor_2d(out: &mut String, name: &str, m: &Matrix2D) {
    let _ = write!(out, "tensor {name} 2 {} {}", m.rows(), m.cols());
    for v in m.values() {
        let _ = write!(out, " {}", fmt_f64(*v));
    }
    out.push('\n');
}

fn push_tensor_1d(out: &mut String, name: &str, v: &[f64]) {
    let _ = write!(out, "tensor {name} 1 {}", v.len());
    for x in v {
        let _ = write!(out, " {}", fmt_f64(*x));
    }
    out.push('\n');
}

fn push_common(
    out: &mut String,
    seed: u64,
    hidden: &[usize],
    inputs: &[String],
    outputs: &[String],
    normalizer: Option<&NormalizerStats>,
) {
    let _ = writeln!(out, "seed {seed}");
    let _ = write!(out, "hidden");
    for h in hidden {
        let _ = write!(out, " {h}");
    }
    out.push('\n');
    let _ = write!(out, "inputs");
    for n in inputs {
        let _ = write!(out, " {n}");
    }
    out.push('\n');
    let _ = write!(out, "outputs");
    for n in outputs {
        let _ = write!(out, " {n}");
    }
    out.push('\n');
    if let Some(stats) = normalizer {
        for e in stats.entries() {
            let _ = writeln!(
                out,
                "normalizer {} {} {}",
                e.name,
                fmt_f64(e.min),
                fmt_f64(e.max)
            );
        }
    }
}

fn check_names(names: &[String]) -> Result<()> {
    for n in names {
        if n.is_empty() || n.chars().any(char::is_whitespace) {
            return Err(Error::InvalidConfig(format!(
                "channel name '{n}' cannot be stored in a checkpoint (empty or contains whitespace)"
            )));
        }
    }
    Ok(())
}

pub fn save_lstm_checkpoint(model: &DeepLSTMModel, path: &Path) -> Result<()> {
    check_names(&model.input_names)?;
    check_names(&model.output_names)?;
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "kind lstm");
    let _ = writeln!(
        out,
        "features {} {}",
        model.config.input_features, model.config.output_features
    );
    let _ = writeln!(out, "l_in {}", model.config.l_in);
    let _ = writeln!(out, "l_out {}", model.config.l_out);
    push_common(
        &mut out,
        model.seed,
        &model.config.hidden_sizes,
        &model.input_names,
        &model.output_names,
        model.normalizer.as_ref(),
    );
    for (i, layer) in model.layers.iter().enumerate() {
        push_tensor_2d(&mut out, &format!("lstm{i}.w_x"), &layer.w_x);
        push_tensor_2d(&mut out, &format!("lstm{i}.w_h"), &layer.w_h);
        push_tensor_1d(&mut out, &format!("lstm{i}.b"), &layer.b);
    }
    push_tensor_2d(&mut out, "head.w", &model.head.w);
    push_tensor_1d(&mut out, "head.b", &model.head.b);
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn save_ff_checkpoint(model: &FeedforwardModel, path: &Path) -> Result<()> {
    check_names(&model.input_names)?;
    check_names(&model.output_names)?;
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "kind ff");
    let _ = writeln!(
        out,
        "features {} {}",
        model.config.input_features, model.config.output_features
    );
    let _ = writeln!(out, "window {}", model.config.window_length);
    push_common(
        &mut out,
        model.seed,
        &model.config.hidden_sizes,
        &model.input_names,
        &model.output_names,
        model.normalizer.as_ref(),
    );
    for (i, layer) in model.layers.iter().enumerate() {
        push_tensor_2d(&mut out, &format!("ff{i}.w"), &layer.w);
        push_tensor_1d(&mut out, &format!("ff{i}.b"), &layer.b);
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

struct RawCheckpoint {
    kind: String,
    features: (usize, usize),
    l_in: Option<usize>,
    l_out: Option<usize>,
    window: Option<usize>,
    seed: u64,
    hidden: Vec<usize>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    normalizer: Vec<ChannelStats>,
    tensors: Vec<(String, Vec<usize>, Vec<f64>)>,
}

fn malformed(line: usize, message: impl Into<String>) -> Error {
    Error::CheckpointMalformed {
        line,
        message: message.into(),
    }
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| malformed(line, format!("expected an integer, found '{tok}'")))
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| malformed(line, format!("expected a number, found '{tok}'")))?;
    if !v.is_finite() {
        return Err(malformed(line, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

fn parse_raw(text: &str) -> Result<RawCheckpoint> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::CheckpointVersion("<empty file>".into()))?;
    if header.trim() != HEADER {
        return Err(Error::CheckpointVersion(header.trim().to_string()));
    }

    let mut raw = RawCheckpoint {
        kind: String::new(),
        features: (0, 0),
        l_in: None,
        l_out: None,
        window: None,
        seed: 0,
        hidden: Vec::new(),
        inputs: Vec::new(),
        outputs: Vec::new(),
        normalizer: Vec::new(),
        tensors: Vec::new(),
    };

    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let key = toks.next().unwrap();
        let rest: Vec<&str> = toks.collect();
        match key {
            "kind" => {
                raw.kind = rest
                    .first()
                    .ok_or_else(|| malformed(line_no, "missing model kind"))?
                    .to_string();
            }
            "features" => {
                if rest.len() != 2 {
                    return Err(malformed(line_no, "features expects two counts"));
                }
                raw.features = (
                    parse_usize(rest[0], line_no)?,
                    parse_usize(rest[1], line_no)?,
                );
            }
            "l_in" => raw.l_in = Some(parse_usize(rest.first().copied().unwrap_or(""), line_no)?),
            "l_out" => raw.l_out = Some(parse_usize(rest.first().copied().unwrap_or(""), line_no)?),
            "window" => {
                raw.window = Some(parse_usize(rest.first().copied().unwrap_or(""), line_no)?)
            }
            "seed" => {
                raw.seed = rest
                    .first()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| malformed(line_no, "seed expects an unsigned integer"))?;
            }
            "hidden" => {
                raw.hidden = rest
                    .iter()
                    .map(|t| parse_usize(t, line_no))
                    .collect::<Result<_>>()?;
            }
            "inputs" => raw.inputs = rest.iter().map(|s| s.to_string()).collect(),
            "outputs" => raw.outputs = rest.iter().map(|s| s.to_string()).collect(),
            "normalizer" => {
                if rest.len() != 3 {
                    return Err(malformed(line_no, "normalizer expects: name min max"));
                }
                raw.normalizer.push(ChannelStats {
                    name: rest[0].to_string(),
                    min: parse_f64(rest[1], line_no)?,
                    max: parse_f64(rest[2], line_no)?,
                });
            }
            "tensor" => {
                if rest.len() < 2 {
                    return Err(malformed(
                        line_no,
                        "tensor expects: name rank dims... values...",
                    ));
                }
                let name = rest[0].to_string();
                let rank = parse_usize(rest[1], line_no)?;
                if rest.len() < 2 + rank {
                    return Err(malformed(line_no, "tensor dims truncated"));
                }
                let dims: Vec<usize> = rest[2..2 + rank]
                    .iter()
                    .map(|t| parse_usize(t, line_no))
                    .collect::<Result<_>>()?;
                let values: Vec<f64> = rest[2 + rank..]
                    .iter()
                    .map(|t| parse_f64(t, line_no))
                    .collect::<Result<_>>()?;
                let expected: usize = dims.iter().product();
                if values.len() != expected {
                    return Err(Error::CheckpointShape(format!(
                        "tensor '{name}' declares {expected} values, found {}",
                        values.len()
                    )));
                }
                raw.tensors.push((name, dims, values));
            }
            other => return Err(malformed(line_no, format!("unknown key '{other}'"))),
        }
    }
    Ok(raw)
}

impl RawCheckpoint {
    fn take_2d(&mut self, name: &str, rows: usize, cols: usize) -> Result<Matrix2D> {
        let pos = self
            .tensors
            .iter()
            .position(|(n, _, _)| n == name)
            .ok_or_else(|| Error::CheckpointShape(format!("missing tensor '{name}'")))?;
        let (_, dims, values) = self.tensors.remove(pos);
        if dims != [rows, cols] {
            return Err(Error::CheckpointShape(format!(
                "tensor '{name}' has shape {dims:?}, expected [{rows}, {cols}]"
            )));
        }
        Matrix2D::from_values(rows, cols, values)
            .map_err(|e| Error::CheckpointShape(format!("tensor '{name}': {e}")))
    }

    fn take_1d(&mut self, name: &str, len: usize) -> Result<Vec<f64>> {
        let pos = self
            .tensors
            .iter()
            .position(|(n, _, _)| n == name)
            .ok_or_else(|| Error::CheckpointShape(format!("missing tensor '{name}'")))?;
        let (_, dims, values) = self.tensors.remove(pos);
        if dims != [len] {
            return Err(Error::CheckpointShape(format!(
                "tensor '{name}' has shape {dims:?}, expected [{len}]"
            )));
        }
        Ok(values)
    }
}

pub fn load_checkpoint(path: &Path) -> Result<CheckpointedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut raw = parse_raw(&text)?;
    let normalizer = if raw.normalizer.is_empty() {
        None
    } else {
        Some(NormalizerStats::from_entries(raw.normalizer.clone()))
    };
    match raw.kind.as_str() {
        "lstm" => {
            let (m, n) = raw.features;
            let config = DeepLSTMConfig {
                input_features: m,
                hidden_sizes: raw.hidden.clone(),
                output_features: n,
                l_in: raw
                    .l_in
                    .ok_or_else(|| Error::CheckpointShape("missing l_in".into()))?,
                l_out: raw
                    .l_out
                    .ok_or_else(|| Error::CheckpointShape("missing l_out".into()))?,
            };
            config
                .validate()
                .map_err(|e| Error::CheckpointShape(e.to_string()))?;
            let mut layers = Vec::new();
            let mut input = m;
            for (i, &h) in raw.hidden.clone().iter().enumerate() {
                layers.push(LSTMLayerParams {
                    input_size: input,
                    hidden_size: h,
                    w_x: raw.take_2d(&format!("lstm{i}.w_x"), 4 * h, input)?,
                    w_h: raw.take_2d(&format!("lstm{i}.w_h"), 4 * h, h)?,
                    b: raw.take_1d(&format!("lstm{i}.b"), 4 * h)?,
                });
                input = h;
            }
            let head = DenseParams {
                input_size: input,
                output_size: n,
                w: raw.take_2d("head.w", n, input)?,
                b: raw.take_1d("head.b", n)?,
            };
            if !raw.tensors.is_empty() {
                return Err(Error::CheckpointShape(format!(
                    "unexpected extra tensors: {:?}",
                    raw.tensors
                        .iter()
                        .map(|(n, _, _)| n.clone())
                        .collect::<Vec<_>>()
                )));
            }
            Ok(CheckpointedModel::Lstm(DeepLSTMModel {
                config,
                layers,
                head,
                seed: raw.seed,
                input_names: raw.inputs,
                output_names: raw.outputs,
                normalizer,
            }))
        }
        "ff" => {
            let (m, n) = raw.features;
            let config = FeedforwardConfig {
                window_length: raw
                    .window
                    .ok_or_else(|| Error::CheckpointShape("missing window".into()))?,
                hidden_sizes: raw.hidden.clone(),
                input_features: m,
                output_features: n,
            };
            config
                .validate()
                .map_err(|e| Error::CheckpointShape(e.to_string()))?;
            let mut sizes = vec![config.window_length * m];
            sizes.extend(&config.hidden_sizes);
            sizes.push(n);
            let mut layers = Vec::new();
            for (i, pair) in sizes.windows(2).enumerate() {
                layers.push(DenseParams {
                    input_size: pair[0],
                    output_size: pair[1],
                    w: raw.take_2d(&format!("ff{i}.w"), pair[1], pair[0])?,
                    b: raw.take_1d(&format!("ff{i}.b"), pair[1])?,
                });
            }
            if !raw.tensors.is_empty() {
                return Err(Error::CheckpointShape(format!(
                    "unexpected extra tensors: {:?}",
                    raw.tensors
                        .iter()
                        .map(|(n, _, _)| n.clone())
                        .collect::<Vec<_>>()
                )));
            }
            Ok(CheckpointedModel::Feedforward(FeedforwardModel {
                config,
                layers,
                seed: raw.seed,
                input_names: raw.inputs,
                output_names: raw.outputs,
                normalizer,
            }))
        }
        other => Err(Error::CheckpointShape(format!(
            "unknown model kind '{other}'"
        ))),
    }
}
