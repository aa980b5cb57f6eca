//! Single-photon detectors and the passive optics in front of them.
//!
//! A detector thins the incoming stream by its efficiency, adds Gaussian
//! timing jitter, merges in Poisson dark counts and optionally applies a
//! dead-time filter. Output is a sorted list of integer-picosecond tag times.

use crate::emitter::{PhotonEvent, PICOS_PER_SECOND};
use crate::error::{Error, Result};
use crate::rng::{exp_sample, substream};
use rand::Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectorSpec {
    /// Detection efficiency in [0, 1].
    pub efficiency: f64,
    /// Dark count rate in s^-1.
    pub dark_rate_hz: f64,
    /// Gaussian timing jitter, standard deviation in ps.
    pub jitter_sigma_ps: f64,
    /// Dead time in ps; 0 disables the filter.
    pub dead_time_ps: f64,
    pub label: String,
}

impl DetectorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::config("efficiency must be in [0,1]"));
        }
        if self.dark_rate_hz < 0.0 || self.jitter_sigma_ps < 0.0 || self.dead_time_ps < 0.0 {
            return Err(Error::config("detector rates and times must be non-negative"));
        }
        Ok(())
    }
}

fn check_sorted_events(stream: &[PhotonEvent]) -> Result<()> {
    if stream.windows(2).any(|w| w[0].timestamp_ps > w[1].timestamp_ps) {
        return Err(Error::contract("detector input is not time-ordered"));
    }
    Ok(())
}

/// Route each event to output A with probability `ratio`, else B.
/// The two outputs are disjoint and their union is the input.
pub fn beamsplitter(
    stream: &[PhotonEvent],
    ratio: f64,
    seed: u64,
    substream_index: u64,
) -> Result<(Vec<PhotonEvent>, Vec<PhotonEvent>)> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::contract("splitting ratio must be in [0,1]"));
    }
    check_sorted_events(stream)?;
    let mut rng = substream(seed, "beamsplitter", substream_index);
    let mut a = Vec::with_capacity(stream.len() / 2 + 1);
    let mut b = Vec::with_capacity(stream.len() / 2 + 1);
    for ev in stream {
        if rng.random::<f64>() < ratio {
            a.push(*ev);
        } else {
            b.push(*ev);
        }
    }
    Ok((a, b))
}

/// Shift every timestamp by `delay_ps` (an optical path difference).
pub fn delay_line(stream: &[PhotonEvent], delay_ps: i64) -> Vec<PhotonEvent> {
    stream
        .iter()
        .map(|ev| PhotonEvent { timestamp_ps: ev.timestamp_ps + delay_ps, ..*ev })
        .collect()
}

/// Detect a photon slice, producing sorted tag times.
///
/// Steps: thin by efficiency, jitter kept timestamps (continuous Gaussian,
/// rounded half-to-even), merge darks over `[dark_start, dark_end)`, sort,
/// then drop tags closer than the dead time to the previous kept tag
/// (`dead_carry` holds the last kept tag of the preceding slice).
///
/// Jitter may move a tag slightly before 0 or past the dark window; such
/// tags are kept, the correlator accepts any integers.
pub fn detect_slice(
    stream: &[PhotonEvent],
    spec: &DetectorSpec,
    dark_start_ps: i64,
    dark_end_ps: i64,
    seed: u64,
    slice_index: u64,
    dead_carry: Option<i64>,
) -> Result<Vec<i64>> {
    spec.validate()?;
    check_sorted_events(stream)?;
    let key = format!("detect/{}", spec.label);
    let mut rng = substream(seed, &key, slice_index);
    let mut tags: Vec<i64> = Vec::with_capacity(stream.len() / 2 + 1);
    if spec.jitter_sigma_ps > 0.0 {
        let normal = Normal::new(0.0, spec.jitter_sigma_ps).expect("validated sigma");
        for ev in stream {
            if rng.random::<f64>() < spec.efficiency {
                let t = ev.timestamp_ps as f64 + normal.sample(&mut rng);
                tags.push(t.round_ties_even() as i64);
            }
        }
    } else {
        for ev in stream {
            if rng.random::<f64>() < spec.efficiency {
                tags.push(ev.timestamp_ps);
            }
        }
    }

    if spec.dark_rate_hz > 0.0 && dark_end_ps > dark_start_ps {
        let mut drng = substream(seed, &format!("dark/{}", spec.label), slice_index);
        let mean_gap = PICOS_PER_SECOND / spec.dark_rate_hz;
        let mut t = dark_start_ps as f64;
        loop {
            t += exp_sample(&mut drng, mean_gap);
            if t >= dark_end_ps as f64 {
                break;
            }
            tags.push(t.round_ties_even() as i64);
        }
    }

    tags.sort_unstable();

    if spec.dead_time_ps > 0.0 {
        let dead = spec.dead_time_ps as i64;
        let mut kept = Vec::with_capacity(tags.len());
        let mut last = dead_carry;
        for t in tags {
            match last {
                Some(prev) if t - prev < dead => {}
                _ => {
                    kept.push(t);
                    last = Some(t);
                }
            }
        }
        return Ok(kept);
    }
    Ok(tags)
}

/// Detect a full stream over `[0, duration)` seconds.
pub fn detect(
    stream: &[PhotonEvent],
    spec: &DetectorSpec,
    duration_s: f64,
    seed: u64,
) -> Result<Vec<i64>> {
    let dur_ps = (duration_s * PICOS_PER_SECOND).round() as i64;
    detect_slice(stream, spec, 0, dur_ps, seed, 0, None)
}

/// Remove tag pairs coincident within `epsilon_ps` on both channels.
///
/// Electronics bursts show up as simultaneous tags on both inputs; matched
/// pairs are dropped from both lists (greedy nearest matching, one-to-one).
pub fn discard_crosstalk_bursts(
    tags_a: &[i64],
    tags_b: &[i64],
    epsilon_ps: i64,
) -> (Vec<i64>, Vec<i64>) {
    let mut keep_a = Vec::with_capacity(tags_a.len());
    let mut keep_b = Vec::with_capacity(tags_b.len());
    let (mut i, mut j) = (0usize, 0usize);
    while i < tags_a.len() && j < tags_b.len() {
        let d = tags_a[i] - tags_b[j];
        if d.abs() <= epsilon_ps {
            i += 1;
            j += 1;
        } else if d < 0 {
            keep_a.push(tags_a[i]);
            i += 1;
        } else {
            keep_b.push(tags_b[j]);
            j += 1;
        }
    }
    keep_a.extend_from_slice(&tags_a[i..]);
    keep_b.extend_from_slice(&tags_b[j..]);
    (keep_a, keep_b)
}
