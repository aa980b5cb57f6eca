//! Pulsed single-photon source model.
//!
//! A pulsed pump excites the emitter at a fixed repetition rate; each pulse
//! yields at most one collected photon. The emission delay after the pulse is
//! a two-component exponential mixture: a fast decay (the excited-state
//! lifetime) and a rare slow component from carrier refilling. Uncorrelated
//! background light is a homogeneous Poisson process.

use crate::error::{Error, Result};
use crate::rng::{exp_sample, substream};
use rand::Rng;

pub const PICOS_PER_SECOND: f64 = 1e12;

/// Where a simulated photon came from. Carried through every stage so that
/// stream-level signal-to-noise ratios can be computed by counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Origin {
    Signal,
    Background,
    ConverterNoise,
    Dark,
}

impl Origin {
    pub fn is_noise(self) -> bool {
        !matches!(self, Origin::Signal)
    }
}

/// A single photon: integer-picosecond timestamp, wavelength and origin tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonEvent {
    pub timestamp_ps: i64,
    pub wavelength_nm: f64,
    pub origin: Origin,
}

/// One emission line with a relative intensity weight.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpectralLine {
    pub center_nm: f64,
    pub weight: f64,
    pub label: String,
}

impl SpectralLine {
    pub fn new(center_nm: f64, weight: f64, label: impl Into<String>) -> Self {
        SpectralLine { center_nm, weight, label: label.into() }
    }
}

/// Pulsed-source parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EmitterConfig {
    /// Excitation repetition rate in Hz.
    pub rep_rate_hz: f64,
    /// Probability that a pulse produces one collected photon.
    pub emission_prob: f64,
    /// Fast decay constant in ps (excited-state lifetime).
    pub lifetime_fast_ps: f64,
    /// Slow decay constant in ps (refilling).
    pub refill_tau_ps: f64,
    /// Mixture weight of the slow component, in [0, 1].
    pub refill_weight: f64,
    /// First-order coherence time in ps.
    pub coherence_time_t2_ps: f64,
    /// Emission lines; photon wavelengths are drawn by weight.
    pub lines: Vec<SpectralLine>,
    /// Uncorrelated background rate in s^-1 at the conversion-stage input.
    pub background_rate_hz: f64,
    /// Target fiber-coupled signal rate in s^-1; emission_prob is normally
    /// calibrated as collected_rate_target / rep_rate.
    pub collected_rate_hz: f64,
}

impl EmitterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.emission_prob) {
            return Err(Error::config("emission_prob must be in [0,1]"));
        }
        if !(0.0..=1.0).contains(&self.refill_weight) {
            return Err(Error::config("refill_weight must be in [0,1]"));
        }
        if self.lifetime_fast_ps <= 0.0 || self.refill_tau_ps <= 0.0 {
            return Err(Error::config("lifetimes must be positive"));
        }
        if self.lifetime_fast_ps >= self.refill_tau_ps {
            return Err(Error::config("lifetime_fast must be below refill_tau"));
        }
        if self.rep_rate_hz <= 0.0 || self.coherence_time_t2_ps <= 0.0 {
            return Err(Error::config("rates and times must be positive"));
        }
        if self.background_rate_hz < 0.0 || self.collected_rate_hz <= 0.0 {
            return Err(Error::config("rates must be non-negative"));
        }
        if self.lines.is_empty() {
            return Err(Error::config("at least one spectral line required"));
        }
        if self.lines.iter().any(|l| l.weight <= 0.0 || l.center_nm <= 0.0) {
            return Err(Error::config("line weights and wavelengths must be positive"));
        }
        Ok(())
    }

    /// Excitation period in ps.
    pub fn period_ps(&self) -> f64 {
        PICOS_PER_SECOND / self.rep_rate_hz
    }

    /// Mean emission delay of the mixture, in ps.
    pub fn mean_delay_ps(&self) -> f64 {
        (1.0 - self.refill_weight) * self.lifetime_fast_ps + self.refill_weight * self.refill_tau_ps
    }
}

/// Weighted wavelength pick from a line list.
fn draw_wavelength(lines: &[SpectralLine], rng: &mut impl Rng) -> f64 {
    if lines.len() == 1 {
        return lines[0].center_nm;
    }
    let total: f64 = lines.iter().map(|l| l.weight).sum();
    let mut x: f64 = rng.random::<f64>() * total;
    for l in lines {
        x -= l.weight;
        if x <= 0.0 {
            return l.center_nm;
        }
    }
    lines.last().unwrap().center_nm
}

/// One delay draw from the fast/slow mixture.
pub fn sample_emission_delay(config: &EmitterConfig, rng: &mut impl Rng) -> f64 {
    let tau = if config.refill_weight > 0.0 && rng.random::<f64>() < config.refill_weight {
        config.refill_tau_ps
    } else {
        config.lifetime_fast_ps
    };
    exp_sample(rng, tau)
}

/// Default cap on materialized events per generated stream.
pub const DEFAULT_EVENT_CAP: u64 = 1 << 28;

/// Signal photons for pulses with index in `[pulse_start, pulse_end)`.
///
/// Pulses are skipped geometrically so cost scales with emitted photons, not
/// pulses. Emitted events are sorted; a slow delay can carry an event past
/// the last pulse time, so callers slicing a long run must merge overhang
/// themselves (see the harness pipeline). Events are capped at `cap`.
pub fn generate_signal_pulses(
    config: &EmitterConfig,
    pulse_start: u64,
    pulse_end: u64,
    seed: u64,
    slice_index: u64,
    cap: u64,
) -> Result<Vec<PhotonEvent>> {
    config.validate()?;
    let mut rng = substream(seed, "emitter", slice_index);
    let period = config.period_ps();
    let p = config.emission_prob;
    let mut events = Vec::new();
    if p <= 0.0 || pulse_start >= pulse_end {
        return Ok(events);
    }
    let ln_q = if p < 1.0 { (1.0 - p).ln() } else { 0.0 };
    let mut k = pulse_start;
    loop {
        if p < 1.0 {
            // geometric number of non-emitting pulses before the next photon
            let u: f64 = rng.random();
            let skip = ((1.0 - u).ln() / ln_q).floor();
            if skip >= (pulse_end - k) as f64 {
                break;
            }
            k += skip as u64;
        }
        if k >= pulse_end {
            break;
        }
        let delay = sample_emission_delay(config, &mut rng);
        let t = (k as f64 * period + delay).round_ties_even();
        let wavelength = draw_wavelength(&config.lines, &mut rng);
        events.push(PhotonEvent {
            timestamp_ps: t as i64,
            wavelength_nm: wavelength,
            origin: Origin::Signal,
        });
        if events.len() as u64 > cap {
            return Err(Error::Capacity { got: events.len() as u64, cap });
        }
        k += 1;
        if k >= pulse_end {
            break;
        }
    }
    events.sort_unstable_by_key(|e| e.timestamp_ps);
    Ok(events)
}

/// Full signal stream over `[0, duration)`. Events whose delay carries them
/// past the duration are dropped so that timestamps stay inside the run.
pub fn generate_signal_stream(
    config: &EmitterConfig,
    duration_s: f64,
    seed: u64,
) -> Result<Vec<PhotonEvent>> {
    if duration_s <= 0.0 {
        return Err(Error::contract("duration must be positive"));
    }
    let duration_ps = (duration_s * PICOS_PER_SECOND).round() as i64;
    let n_pulses = (duration_s * config.rep_rate_hz).floor() as u64;
    let expected = n_pulses as f64 * config.emission_prob;
    if expected > DEFAULT_EVENT_CAP as f64 {
        return Err(Error::Capacity { got: expected as u64, cap: DEFAULT_EVENT_CAP });
    }
    let mut events = generate_signal_pulses(config, 0, n_pulses, seed, 0, DEFAULT_EVENT_CAP)?;
    events.retain(|e| e.timestamp_ps < duration_ps);
    Ok(events)
}

/// Homogeneous Poisson background over `[t_start, t_end)` ps.
pub fn generate_background_slice(
    rate_hz: f64,
    lines: &[SpectralLine],
    t_start_ps: i64,
    t_end_ps: i64,
    seed: u64,
    slice_index: u64,
) -> Result<Vec<PhotonEvent>> {
    if rate_hz < 0.0 {
        return Err(Error::config("background rate must be non-negative"));
    }
    let mut events = Vec::new();
    if rate_hz == 0.0 || t_end_ps <= t_start_ps {
        return Ok(events);
    }
    if lines.is_empty() {
        return Err(Error::config("background needs a wavelength band"));
    }
    let mut rng = substream(seed, "background", slice_index);
    let mean_gap_ps = PICOS_PER_SECOND / rate_hz;
    let mut t = t_start_ps as f64;
    loop {
        t += exp_sample(&mut rng, mean_gap_ps);
        if t >= t_end_ps as f64 {
            break;
        }
        events.push(PhotonEvent {
            timestamp_ps: t.round_ties_even() as i64,
            wavelength_nm: draw_wavelength(lines, &mut rng),
            origin: Origin::Background,
        });
    }
    Ok(events)
}

/// Poisson background over a full run.
pub fn generate_background_stream(
    rate_hz: f64,
    lines: &[SpectralLine],
    duration_s: f64,
    seed: u64,
) -> Result<Vec<PhotonEvent>> {
    let duration_ps = (duration_s * PICOS_PER_SECOND).round() as i64;
    generate_background_slice(rate_hz, lines, 0, duration_ps, seed, 0)
}

fn check_sorted(stream: &[PhotonEvent], what: &str) -> Result<()> {
    if stream.windows(2).any(|w| w[0].timestamp_ps > w[1].timestamp_ps) {
        return Err(Error::contract(format!("{what} stream is not time-ordered")));
    }
    Ok(())
}

/// Stable k-way merge of sorted streams. Ties keep input order, then element
/// order within an input.
pub fn merge_streams(inputs: &[&[PhotonEvent]]) -> Result<Vec<PhotonEvent>> {
    for (i, s) in inputs.iter().enumerate() {
        check_sorted(s, &format!("input {i}"))?;
    }
    let total: usize = inputs.iter().map(|s| s.len()).sum();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; inputs.len()];
    loop {
        let mut best: Option<(i64, usize)> = None;
        for (i, s) in inputs.iter().enumerate() {
            if idx[i] < s.len() {
                let t = s[idx[i]].timestamp_ps;
                if best.map_or(true, |(bt, _)| t < bt) {
                    best = Some((t, i));
                }
            }
        }
        match best {
            Some((_, i)) => {
                out.push(inputs[i][idx[i]]);
                idx[i] += 1;
            }
            None => break,
        }
    }
    Ok(out)
}

/// Signal count over noise count (background, converter noise, darks).
/// Returns +inf for a noise-free stream; empty streams are an error.
pub fn stream_snr(stream: &[PhotonEvent]) -> Result<f64> {
    if stream.is_empty() {
        return Err(Error::Undefined("SNR of an empty stream".into()));
    }
    let signal = stream.iter().filter(|e| e.origin == Origin::Signal).count() as f64;
    let noise = stream.len() as f64 - signal;
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(signal / noise)
}
