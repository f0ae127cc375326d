//! Synthetic severe-slugging signal generator.
//!
//! Each cycle is a piecewise relaxation: riser-base pressure ramps up while
//! liquid accumulates (the buildup phase, `duty` of the period), then blows
//! out with an exponential decay. The liquid rate spikes at blowout onset
//! and the gas rate follows shortly after; successive pressure gauges see
//! the same cycle phase-lagged, mimicking gauges distributed along the
//! flowline. Channel magnitudes are order-of-magnitude placeholders for a
//! pipeline-riser system, not calibrated values.

use crate::error::{Error, Result};
use crate::frame::{Channel, TimeSeriesFrame};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct SlugGenParams {
    /// Slug cycle period, seconds.
    pub period: f64,
    /// Fraction of the period spent in buildup, in (0, 1).
    pub duty: f64,
    pub gauge_count: usize,
    /// Phase lag per successive gauge, seconds.
    pub gauge_phase_lag: f64,
    /// Pressure baseline and cycle amplitude, bar.
    pub pressure_base: f64,
    pub pressure_amplitude: f64,
    /// Liquid rate baseline and blowout spike amplitude, kg/s.
    pub liquid_base: f64,
    pub liquid_amplitude: f64,
    /// Gas rate baseline and blowdown spike amplitude, kg/s.
    pub gas_base: f64,
    pub gas_amplitude: f64,
    /// Gaussian noise, standard deviation relative to each channel's amplitude.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SlugGenParams {
    fn default() -> Self {
        SlugGenParams {
            period: 150.0,
            duty: 0.7,
            gauge_count: 7,
            gauge_phase_lag: 4.0,
            pressure_base: 2.0,
            pressure_amplitude: 1.2,
            liquid_base: 0.5,
            liquid_amplitude: 8.0,
            gas_base: 0.2,
            gas_amplitude: 5.0,
            noise_std: 0.01,
            seed: 42,
        }
    }
}

impl SlugGenParams {
    fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "period must be positive, got {}",
                self.period
            )));
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "duty must lie in (0, 1), got {}",
                self.duty
            )));
        }
        if self.gauge_count == 0 {
            return Err(Error::InvalidConfig("gauge_count must be >= 1".into()));
        }
        for (name, v) in [
            ("gauge_phase_lag", self.gauge_phase_lag),
            ("pressure_amplitude", self.pressure_amplitude),
            ("liquid_amplitude", self.liquid_amplitude),
            ("gas_amplitude", self.gas_amplitude),
            ("noise_std", self.noise_std),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Normalized buildup-blowout cycle shape, 0..1 over one period.
fn pressure_shape(tau: f64, period: f64, duty: f64) -> f64 {
    let t_on = duty * period;
    if tau < t_on {
        tau / t_on
    } else {
        // Blowout decays to exp(-4) by the end of the cycle.
        (-4.0 * (tau - t_on) / ((1.0 - duty) * period)).exp()
    }
}

/// Circular Gaussian bump centered at `center` within the period.
fn bump(tau: f64, center: f64, sigma: f64, period: f64) -> f64 {
    let mut d = (tau - center).abs();
    d = d.min(period - d);
    (-0.5 * (d / sigma) * (d / sigma)).exp()
}

/// Deterministic multichannel slugging frame: `gauge_count` pressure
/// channels p1..pG (p1 at the riser bottom, later gauges phase-lagged),
/// plus liquid_rate and gas_rate.
pub fn generate_slugging(
    params: &SlugGenParams,
    duration: f64,
    dt: f64,
) -> Result<TimeSeriesFrame> {
    params.validate()?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if duration < 2.0 * params.period {
        return Err(Error::InvalidConfig(format!(
            "duration {duration} must span at least two slug periods of {}",
            params.period
        )));
    }

    let n = (duration / dt).round() as usize;
    if n == 0 {
        return Err(Error::InvalidConfig(
            "duration shorter than one timestep".into(),
        ));
    }
    let p = params.period;
    let liquid_center = params.duty * p;
    let liquid_sigma = 0.02 * p;
    let gas_center = params.duty * p + 0.25 * (1.0 - params.duty) * p;
    let gas_sigma = 0.03 * p;

    let base_rng = SeededRng::new(params.seed);
    let mut channels = Vec::with_capacity(params.gauge_count + 2);

    for g in 0..params.gauge_count {
        let mut rng = base_rng.derive(g as u64 + 1);
        let lag = g as f64 * params.gauge_phase_lag;
        let values: Vec<f64> = (0..n)
            .map(|k| {
                let tau = (k as f64 * dt - lag).rem_euclid(p);
                params.pressure_base
                    + params.pressure_amplitude * pressure_shape(tau, p, params.duty)
                    + params.noise_std * params.pressure_amplitude * rng.normal()
            })
            .collect();
        channels.push(Channel::new(format!("p{}", g + 1), values));
    }

    let mut rng_l = base_rng.derive(1001);
    let liquid: Vec<f64> = (0..n)
        .map(|k| {
            let tau = (k as f64 * dt).rem_euclid(p);
            params.liquid_base
                + params.liquid_amplitude * bump(tau, liquid_center, liquid_sigma, p)
                + params.noise_std * params.liquid_amplitude * rng_l.normal()
        })
        .collect();
    channels.push(Channel::new("liquid_rate", liquid));

    let mut rng_g = base_rng.derive(1002);
    let gas: Vec<f64> = (0..n)
        .map(|k| {
            let tau = (k as f64 * dt).rem_euclid(p);
            params.gas_base
                + params.gas_amplitude * bump(tau, gas_center, gas_sigma, p)
                + params.noise_std * params.gas_amplitude * rng_g.normal()
        })
        .collect();
    channels.push(Channel::new("gas_rate", gas));

    TimeSeriesFrame::new(0.0, dt, channels)
}
