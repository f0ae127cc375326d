use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};

use vfm_core::data::{
    generate_slugging as gen_slugging, generate_well_test, load_frame_csv, load_well_test_csv,
    write_frame_csv, write_plot_data, SlugGenParams, WellTestFixtureParams,
};
use vfm_core::nn::AdamHyperParams;
use vfm_core::{
    evaluate, forecast_sequences, load_checkpoint, relative_forecasting_interval,
    save_ff_checkpoint, save_lstm_checkpoint, sequence_starts, stitch_with_names, study_table,
    train_feedforward_on_frame, train_on_frame, CheckpointedModel, CompositeForecast,
    FeatureSelection, StudyConfig, TimeSeriesFrame, TrainingProtocol, WindowSpec,
};

use crate::config::{parse_name_list, parse_usize_list, Resolver};
use crate::{AppError, ConvergenceArgs, ForecastArgs, GenSluggingArgs, GenWelltestArgs, TrainArgs};

fn ensure_dir(path: &Path) -> Result<(), AppError> {
    std::fs::create_dir_all(path)
        .with_context(|| format!("cannot create output directory {}", path.display()))?;
    Ok(())
}

pub fn generate_slugging(args: GenSluggingArgs) -> Result<(), AppError> {
    let cfg = Resolver::load(args.common.config.as_deref())?;
    let duration: f64 = cfg.require("duration", args.duration, None)?;
    let dt: f64 = cfg.require("dt", args.dt, Some(1.0))?;
    let out = cfg.require_path("out", args.common.out)?;
    let defaults = SlugGenParams::default();
    let params = SlugGenParams {
        gauge_count: cfg.require("gauges", args.gauges, Some(defaults.gauge_count))?,
        period: cfg.require("period", args.period, Some(defaults.period))?,
        duty: cfg.require("duty", args.duty, Some(defaults.duty))?,
        noise_std: cfg.require("noise", args.noise, Some(defaults.noise_std))?,
        seed: cfg.require("seed", args.common.seed, Some(defaults.seed))?,
        ..defaults
    };

    let frame = gen_slugging(&params, duration, dt)?;
    ensure_dir(&out)?;
    let path = out.join("slugging.csv");
    write_frame_csv(&frame, &path)?;
    println!(
        "wrote {} samples x {} channels to {}",
        frame.len(),
        frame.channels().len(),
        path.display()
    );
    Ok(())
}

pub fn generate_welltest(args: GenWelltestArgs) -> Result<(), AppError> {
    let cfg = Resolver::load(args.common.config.as_deref())?;
    let out = cfg.require_path("out", args.common.out)?;
    let defaults = WellTestFixtureParams::default();
    let mut params = WellTestFixtureParams {
        seed: cfg.require("seed", args.common.seed, Some(defaults.seed))?,
        noise_std: cfg.require("noise", args.noise, Some(defaults.noise_std))?,
        ..defaults
    };
    if let Some(raw) = cfg.optional("periods", args.periods)? {
        let lengths = parse_usize_list(&raw, "periods")?;
        if lengths.len() != 5 {
            return Err(AppError::Usage(format!(
                "--periods needs exactly 5 lengths, got {}",
                lengths.len()
            )));
        }
        params.period_lengths.copy_from_slice(&lengths);
    }

    let frame = generate_well_test(&params)?;
    ensure_dir(&out)?;
    let path = out.join("well_test.csv");
    write_frame_csv(&frame, &path)?;
    println!(
        "wrote {} samples x {} channels (5 flow periods) to {}",
        frame.len(),
        frame.channels().len(),
        path.display()
    );
    Ok(())
}

struct TrainSetup {
    frame: TimeSeriesFrame,
    selection: FeatureSelection,
    protocol: TrainingProtocol,
    train_len: usize,
    hidden: Vec<usize>,
    out: PathBuf,
}

fn load_input_frame(
    path: &Path,
    well_test: bool,
    resample_dt: f64,
) -> Result<TimeSeriesFrame, AppError> {
    let frame = if well_test {
        load_well_test_csv(path, resample_dt)?
    } else {
        load_frame_csv(path)?
    };
    Ok(frame)
}

pub fn train(args: TrainArgs) -> Result<(), AppError> {
    let cfg = Resolver::load(args.common.config.as_deref())?;
    let data = cfg.require_path("data", args.data)?;
    let out = cfg.require_path("out", args.common.out)?;
    let inputs = parse_name_list(&cfg.require::<String>("inputs", args.inputs, None)?);
    let outputs = parse_name_list(&cfg.require::<String>("outputs", args.outputs, None)?);
    if inputs.is_empty() || outputs.is_empty() {
        return Err(AppError::Usage(
            "--inputs and --outputs need at least one channel".into(),
        ));
    }
    let l_in: usize = cfg.require("l_in", args.l_in, None)?;
    let l_out: usize = cfg.require("l_out", args.l_out, Some(l_in))?;
    let step: usize = cfg.require("step", args.step, Some(1))?;
    let model_kind: String = cfg.require("model", args.model, Some("lstm".into()))?;
    let hidden = parse_usize_list(
        &cfg.require::<String>("hidden", args.hidden, Some("10,10,10".into()))?,
        "hidden",
    )?;
    let resample_dt: f64 = cfg.require("resample_dt", args.resample_dt, Some(60.0))?;

    let frame = load_input_frame(&data, args.well_test, resample_dt)?;
    let train_len: usize = cfg.require("train_len", args.train_len, Some(frame.len()))?;

    let mut protocol = TrainingProtocol::new(cfg.require("seed", args.common.seed, Some(42))?);
    protocol.epochs = cfg.require("epochs", args.epochs, Some(10))?;
    protocol.validation_fraction = cfg.require("val_split", args.val_split, Some(0.05))?;
    protocol.adam = AdamHyperParams {
        learning_rate: cfg.require("lr", args.lr, Some(0.001))?,
        ..AdamHyperParams::default()
    };

    let setup = TrainSetup {
        frame,
        selection: FeatureSelection::new(inputs, outputs),
        protocol,
        train_len,
        hidden,
        out,
    };
    ensure_dir(&setup.out)?;

    let started = Instant::now();
    let (history, param_count, f_percent) = match model_kind.as_str() {
        "lstm" => {
            let window = WindowSpec::new(l_in, l_out, step)?;
            let (model, history) = train_on_frame(
                &setup.frame,
                &setup.selection,
                &window,
                &setup.hidden,
                &setup.protocol,
                setup.train_len,
            )?;
            save_lstm_checkpoint(&model, &setup.out.join("model.ckpt"))?;
            let f = relative_forecasting_interval(
                l_out,
                setup.frame.dt(),
                0.0,
                setup.train_len as f64 * setup.frame.dt(),
            )?;
            (history, model.param_count(), Some(f))
        }
        "ff" => {
            let (model, history) = train_feedforward_on_frame(
                &setup.frame,
                &setup.selection,
                l_in,
                &setup.hidden,
                &setup.protocol,
                setup.train_len,
            )?;
            save_ff_checkpoint(&model, &setup.out.join("model.ckpt"))?;
            (history, model.param_count(), None)
        }
        other => return Err(AppError::Usage(format!("unknown model kind '{other}'"))),
    };

    std::fs::write(
        setup.out.join("history.csv"),
        history.log_lines(args.common.no_timestamps),
    )
    .with_context(|| "cannot write history.csv")?;

    println!("trainable parameters: {param_count}");
    if let Some(f) = f_percent {
        println!("relative forecasting interval: {f:.2}%");
    }
    if let Some(loss) = history.final_train_loss() {
        println!("final training loss: {loss:.6e}");
    }
    println!("checkpoint: {}", setup.out.join("model.ckpt").display());
    if !args.common.no_timestamps {
        println!("trained in {:.1} s", started.elapsed().as_secs_f64());
    }
    Ok(())
}

fn truth_frame_for(
    data_frame: &TimeSeriesFrame,
    truth_path: Option<&Path>,
    output_names: &[String],
) -> Result<Option<TimeSeriesFrame>, AppError> {
    if let Some(path) = truth_path {
        return Ok(Some(load_frame_csv(path)?));
    }
    if output_names.iter().all(|n| data_frame.channel(n).is_some()) {
        return Ok(Some(data_frame.clone()));
    }
    Ok(None)
}

fn write_metrics(
    composite: &CompositeForecast,
    truth: Option<&TimeSeriesFrame>,
    window: std::ops::Range<usize>,
    out: &Path,
) -> Result<(), AppError> {
    let Some(truth) = truth else {
        eprintln!("warning: no truth channels available; metrics skipped");
        return Ok(());
    };
    let metrics = evaluate(composite, truth, window)?;
    let mut text = String::from("channel, mse, rmse, forecast_peak_hz, truth_peak_hz\n");
    for ch in &metrics.channels {
        text.push_str(&format!(
            "{}, {:.16e}, {:.16e}, {:.16e}, {:.16e}\n",
            ch.name, ch.mse, ch.rmse, ch.forecast_peak_hz, ch.truth_peak_hz
        ));
    }
    std::fs::write(out.join("metrics.csv"), text).with_context(|| "cannot write metrics.csv")?;
    for ch in &metrics.channels {
        println!(
            "{}: mse {:.6e}, rmse {:.6e}, peak {:.6e} Hz (truth {:.6e} Hz)",
            ch.name, ch.mse, ch.rmse, ch.forecast_peak_hz, ch.truth_peak_hz
        );
    }
    Ok(())
}

pub fn forecast(args: ForecastArgs) -> Result<(), AppError> {
    let cfg = Resolver::load(args.common.config.as_deref())?;
    let checkpoint = cfg.require_path("checkpoint", args.checkpoint)?;
    let data = cfg.require_path("data", args.data)?;
    let out = cfg.require_path("out", args.common.out)?;
    let mode: String = cfg.require("mode", args.mode, Some("overlapping".into()))?;
    let frame = load_frame_csv(&data)?;
    let end: usize = cfg.require("end", args.end, Some(frame.len()))?;
    let first_start: usize = cfg.require("first_start", args.first_start, Some(0))?;
    ensure_dir(&out)?;

    match load_checkpoint(&checkpoint)? {
        CheckpointedModel::Lstm(model) => {
            let l_in = model.config.l_in;
            let l_out = model.config.l_out;
            let (default_shift, default_warmup) = match mode.as_str() {
                "overlapping" => ((l_in / 2).max(1), (l_in / 2).max(1)),
                "nonoverlapping" => (l_out, 0),
                other => return Err(AppError::Usage(format!("unknown mode '{other}'"))),
            };
            let shift: usize = cfg.require("shift", args.shift, Some(default_shift))?;
            let warmup: usize = cfg.require("warmup", args.warmup, Some(default_warmup))?;
            if shift == 0 {
                return Err(AppError::Usage("--shift must be >= 1".into()));
            }

            let spec = WindowSpec::new(l_in, l_out, 1)?;
            let starts = sequence_starts(first_start, end, &spec, shift);
            if starts.is_empty() {
                return Err(anyhow!(
                    "horizon [{first_start}, {end}) is too short for one sequence of length {}",
                    spec.total_len()
                )
                .into());
            }
            let forecasts = forecast_sequences(&model, &frame, &spec, &starts)?;

            for (k, f) in forecasts.iter().enumerate() {
                let mut text = String::from("time");
                for name in &model.output_names {
                    text.push_str(&format!(",{name}"));
                }
                text.push('\n');
                for r in 0..f.output_len() {
                    let g = f.first_output_index() + r;
                    text.push_str(&format!("{}", frame.t0() + g as f64 * frame.dt()));
                    for c in 0..f.outputs.cols() {
                        text.push_str(&format!(",{:.16e}", f.outputs.get(r, c)));
                    }
                    text.push('\n');
                }
                let path = out.join(format!("sequence_{k:03}.csv"));
                std::fs::write(&path, text)
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }

            let composite = stitch_with_names(&forecasts, warmup, &model.output_names)?;
            let truth = truth_frame_for(&frame, args.truth.as_deref(), &model.output_names)?;
            write_plot_data(
                &composite,
                truth.as_ref(),
                frame.t0(),
                frame.dt(),
                &out,
                "plot_",
            )?;
            println!(
                "{} sequences, composite covers samples [{}, {})",
                forecasts.len(),
                composite.first_index,
                composite.coverage().end
            );
            write_metrics(&composite, truth.as_ref(), composite.coverage(), &out)?;
        }
        CheckpointedModel::Feedforward(model) => {
            let start = first_start.max(model.config.window_length);
            let composite =
                vfm_core::feedforward_predictions(&model, &frame, start..end.min(frame.len()))?;
            let truth = truth_frame_for(&frame, args.truth.as_deref(), &model.output_names)?;
            write_plot_data(
                &composite,
                truth.as_ref(),
                frame.t0(),
                frame.dt(),
                &out,
                "plot_",
            )?;
            println!(
                "feedforward predictions cover samples [{}, {})",
                composite.first_index,
                composite.coverage().end
            );
            write_metrics(&composite, truth.as_ref(), composite.coverage(), &out)?;
        }
    }
    Ok(())
}

pub fn convergence(args: ConvergenceArgs) -> Result<(), AppError> {
    let cfg = Resolver::load(args.common.config.as_deref())?;
    let data = cfg.require_path("data", args.data)?;
    let out = cfg.require_path("out", args.common.out)?;
    let explicit_sets: Option<String> = cfg.optional("gauge_sets", args.gauge_sets)?;
    let gauge_sets: Vec<Vec<String>> = match explicit_sets {
        Some(raw) => raw
            .split(';')
            .map(parse_name_list)
            .filter(|set| !set.is_empty())
            .collect(),
        None => {
            let gauges = parse_name_list(&cfg.require::<String>("gauges", args.gauges, None)?);
            (1..=gauges.len()).map(|k| gauges[..k].to_vec()).collect()
        }
    };
    if gauge_sets.is_empty() {
        return Err(AppError::Usage(
            "no gauge sets given (--gauges or --gauge-sets)".into(),
        ));
    }
    let outputs = parse_name_list(&cfg.require::<String>(
        "outputs",
        args.outputs,
        Some("liquid_rate".into()),
    )?);
    let l_in: usize = cfg.require("l_in", args.l_in, None)?;
    let l_out: usize = cfg.require("l_out", args.l_out, Some(l_in))?;
    let step: usize = cfg.require("step", args.step, Some(1))?;
    let train_len: usize = cfg.require("train_len", args.train_len, None)?;
    let hidden = parse_usize_list(
        &cfg.require::<String>("hidden", args.hidden, Some("10,10,10".into()))?,
        "hidden",
    )?;
    let shift: usize = cfg.require("shift", args.shift, Some((l_in / 2).max(1)))?;
    let warmup: usize = cfg.require("warmup", args.warmup, Some(shift))?;

    let mut protocol = TrainingProtocol::new(cfg.require("seed", args.common.seed, Some(42))?);
    protocol.epochs = cfg.require("epochs", args.epochs, Some(10))?;
    protocol.validation_fraction = cfg.require("val_split", args.val_split, Some(0.05))?;
    protocol.adam = AdamHyperParams {
        learning_rate: cfg.require("lr", args.lr, Some(0.001))?,
        ..AdamHyperParams::default()
    };

    let frame = load_frame_csv(&data)?;
    let study = StudyConfig {
        output_names: outputs,
        window: WindowSpec::new(l_in, l_out, step)?,
        hidden_sizes: hidden,
        protocol,
        train_len,
        forecast_shift: shift,
        warmup,
        parallel: args.parallel,
    };

    let rows = vfm_core::convergence_study(&frame, &gauge_sets, &study);
    ensure_dir(&out)?;
    let table = study_table(&rows, args.common.no_timestamps);
    std::fs::write(out.join("convergence.csv"), &table)
        .with_context(|| "cannot write convergence.csv")?;
    print!("{table}");

    for row in &rows {
        if let Some(e) = &row.error {
            eprintln!("warning: study row m={} failed: {e}", row.input_count);
        }
    }
    if rows.iter().all(|r| r.error.is_some()) {
        return Err(anyhow!("every study row failed").into());
    }
    Ok(())
}
