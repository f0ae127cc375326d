//! Virtual flow metering and forecasting with a from-scratch deep LSTM.
//!
//! The toolkit turns multichannel production time series (pressures,
//! temperature, phase rates) into overlapping input/output sequence arrays,
//! trains a stacked LSTM with hand-derived backpropagation through time and
//! Adam, and forecasts future multiphase rates from cheap measurements —
//! including stitching of overlapping forecast sequences with warm-up
//! suppression and a gauge-count convergence study.
//!
//! Everything is double precision and deterministic: a fixed seed
//! reproduces initialization, shuffling, noise, training history and
//! checkpoints bit for bit.

// Guards written as `!(x > 0.0)` deliberately reject NaN; `x <= 0.0` would
// let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod data;
pub mod error;
pub mod forecasting;
pub mod frame;
pub mod linalg;
pub mod model;
pub mod nn;
pub mod rng;
pub mod training;
pub mod windowing;

pub use error::{Error, Result};
pub use frame::{Channel, RawSeries, TimeSeriesFrame};
pub use linalg::Matrix2D;
pub use rng::SeededRng;

pub use checkpoint::{
    load_checkpoint, save_ff_checkpoint, save_lstm_checkpoint, CheckpointedModel,
};
pub use forecasting::{
    convergence_study, evaluate, feedforward_predictions, forecast_sequences,
    forecast_test_interval, relative_forecasting_interval, sequence_starts, stitch_overlapping,
    stitch_with_names, study_table, ChannelMetrics, CompositeForecast, ForecastMetrics,
    SequenceForecast, StudyConfig, StudyRow,
};
pub use model::{
    build_ff, build_lstm, count_params, DeepLSTMConfig, DeepLSTMModel, FeedforwardConfig,
    FeedforwardModel,
};
pub use training::{
    build_feedforward_pairs, train, train_feedforward, train_feedforward_on_frame, train_on_frame,
    TrainingHistory, TrainingProtocol,
};
pub use windowing::{
    build_windows, denormalize_frame, fit_normalizer, normalize_frame, resample_uniform,
    train_val_split, window_count, FeatureSelection, NormalizerStats, SlidingDataset, WindowSpec,
};
