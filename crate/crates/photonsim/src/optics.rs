//! Frequency conversion stage and spectral filters.
//!
//! Filters and the converter act on photon streams as Bernoulli thinning with
//! a per-event transmission probability; the converter additionally remaps
//! kept wavelengths by energy conservation and injects a Poisson noise
//! stream proportional to pump power.

use crate::emitter::{merge_streams, Origin, PhotonEvent, SpectralLine, PICOS_PER_SECOND};
use crate::error::{Error, Result};
use crate::rng::{exp_sample, substream};
use rand::Rng;

/// Speed of light in nm/s.
pub const C_NM_PER_S: f64 = 2.997_924_58e17;

/// Half-width-at-half-max argument of sinc^2: sin(x)^2/x^2 = 1/2.
/// Verified against a bisection oracle in the tests below.
pub const SINC2_HALF_MAX_X: f64 = 1.391_557_377_810_374;

/// Waveguide difference-frequency conversion parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConversionSpec {
    /// Interaction length in cm.
    pub length_cm: f64,
    /// Normalized efficiency in 1/(W cm^2).
    pub normalized_efficiency: f64,
    /// Total device efficiency at the conversion maximum, in [0, 1]. Lumps
    /// coupling and downstream filter losses on top of the bare sin^2 law.
    pub max_total_efficiency: f64,
    /// Spectral acceptance FWHM in GHz.
    pub acceptance_fwhm_ghz: f64,
    /// Input wavelength the process is phase-matched for, in nm.
    pub input_center_nm: f64,
    /// In-band converter noise rate per watt of pump, in s^-1 W^-1.
    pub noise_rate_per_watt: f64,
}

impl ConversionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length_cm <= 0.0
            || self.normalized_efficiency <= 0.0
            || self.acceptance_fwhm_ghz <= 0.0
            || self.input_center_nm <= 0.0
            || self.noise_rate_per_watt < 0.0
        {
            return Err(Error::config("conversion parameters must be positive"));
        }
        if !(0.0..=1.0).contains(&self.max_total_efficiency) {
            return Err(Error::config("max_total_efficiency must be in [0,1]"));
        }
        Ok(())
    }

    /// Pump power of the first conversion maximum, (pi/2)^2 / (eta L^2).
    pub fn optimal_pump_w(&self) -> f64 {
        let half_pi = std::f64::consts::FRAC_PI_2;
        half_pi * half_pi / (self.normalized_efficiency * self.length_cm * self.length_cm)
    }
}

/// Classical pump field.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PumpConfig {
    pub wavelength_nm: f64,
    pub power_w: f64,
    /// Pump coherence time in ps.
    pub coherence_time_t2_ps: f64,
}

impl PumpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.power_w < 0.0 {
            return Err(Error::config("pump power must be non-negative"));
        }
        if self.wavelength_nm <= 0.0 || self.coherence_time_t2_ps <= 0.0 {
            return Err(Error::config("pump wavelength and coherence must be positive"));
        }
        Ok(())
    }
}

/// Plane Fabry-Perot etalon.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EtalonSpec {
    pub free_spectral_range_ghz: f64,
    pub finesse: f64,
    pub center_nm: f64,
}

impl EtalonSpec {
    pub fn validate(&self) -> Result<()> {
        if self.finesse <= 1.0 {
            return Err(Error::config("finesse must exceed 1"));
        }
        if self.free_spectral_range_ghz <= 0.0 || self.center_nm <= 0.0 {
            return Err(Error::config("FSR and center must be positive"));
        }
        Ok(())
    }
}

/// Fiber Bragg grating, modeled as a flat-top reflection band.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FbgSpec {
    pub center_nm: f64,
    pub bandwidth_nm: f64,
    pub in_band_transmission: f64,
    pub out_of_band_suppression: f64,
}

impl FbgSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.in_band_transmission)
            || !(0.0..=1.0).contains(&self.out_of_band_suppression)
        {
            return Err(Error::config("FBG transmissions must be in [0,1]"));
        }
        if self.out_of_band_suppression >= self.in_band_transmission {
            return Err(Error::config("out-of-band suppression must be below in-band"));
        }
        if self.bandwidth_nm <= 0.0 || self.center_nm <= 0.0 {
            return Err(Error::config("FBG geometry must be positive"));
        }
        Ok(())
    }
}

/// Down-converted wavelength from energy conservation,
/// 1/out = 1/in - 1/pump.
pub fn dfg_output_wavelength(lambda_in_nm: f64, lambda_p_nm: f64) -> Result<f64> {
    if lambda_in_nm <= 0.0 || lambda_p_nm <= 0.0 {
        return Err(Error::contract("wavelengths must be positive"));
    }
    if lambda_in_nm >= lambda_p_nm {
        return Err(Error::contract("input must be shorter-wavelength than the pump"));
    }
    Ok(1.0 / (1.0 / lambda_in_nm - 1.0 / lambda_p_nm))
}

/// Conversion probability at a given pump power:
/// max_total_efficiency * sin^2(sqrt(eta P) L).
pub fn conversion_probability(pump: &PumpConfig, spec: &ConversionSpec) -> f64 {
    let arg = (spec.normalized_efficiency * pump.power_w).sqrt() * spec.length_cm;
    spec.max_total_efficiency * arg.sin().powi(2)
}

#[inline]
fn sinc2(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let s = x.sin() / x;
        s * s
    }
}

/// Spectral acceptance of the conversion process: sinc^2 in detuning,
/// unity at zero and with the configured FWHM.
pub fn acceptance_transmission(detuning_ghz: f64, spec: &ConversionSpec) -> f64 {
    let x = 2.0 * SINC2_HALF_MAX_X * detuning_ghz / spec.acceptance_fwhm_ghz;
    sinc2(x)
}

/// Airy transmission of the etalon at a detuning from resonance.
pub fn etalon_transmission(detuning_ghz: f64, spec: &EtalonSpec) -> f64 {
    let coeff = 2.0 * spec.finesse / std::f64::consts::PI;
    let phase = std::f64::consts::PI * detuning_ghz / spec.free_spectral_range_ghz;
    1.0 / (1.0 + coeff * coeff * phase.sin().powi(2))
}

/// Flat-top FBG band; the band edges are inclusive.
pub fn fbg_band_transmission(wavelength_nm: f64, spec: &FbgSpec) -> f64 {
    if (wavelength_nm - spec.center_nm).abs() <= spec.bandwidth_nm / 2.0 {
        spec.in_band_transmission
    } else {
        spec.out_of_band_suppression
    }
}

/// Detuning of a wavelength from a reference, in GHz.
pub fn detuning_ghz(wavelength_nm: f64, reference_nm: f64) -> f64 {
    (C_NM_PER_S / wavelength_nm - C_NM_PER_S / reference_nm) / 1e9
}

/// Bernoulli thinning with a per-event transmission. Order is preserved;
/// transmissions outside [0,1] are a contract error.
pub fn apply_filter<F>(
    stream: &[PhotonEvent],
    transmission: F,
    seed: u64,
    substream_index: u64,
) -> Result<Vec<PhotonEvent>>
where
    F: Fn(&PhotonEvent) -> f64,
{
    let mut rng = substream(seed, "filter", substream_index);
    let mut out = Vec::with_capacity(stream.len() / 2);
    for ev in stream {
        let t = transmission(ev);
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::contract(format!("transmission {t} outside [0,1]")));
        }
        if rng.random::<f64>() < t {
            out.push(*ev);
        }
    }
    Ok(out)
}

/// Frequency-convert a visible stream: thin by conversion probability and
/// spectral acceptance, remap kept wavelengths, then merge in converter
/// noise over `[t_start, t_end)` ps.
pub fn convert_slice(
    stream: &[PhotonEvent],
    pump: &PumpConfig,
    spec: &ConversionSpec,
    t_start_ps: i64,
    t_end_ps: i64,
    seed: u64,
    slice_index: u64,
) -> Result<Vec<PhotonEvent>> {
    pump.validate()?;
    spec.validate()?;
    if stream.windows(2).any(|w| w[0].timestamp_ps > w[1].timestamp_ps) {
        return Err(Error::contract("convert_stream input is not time-ordered"));
    }
    let p_conv = conversion_probability(pump, spec);
    let mut rng = substream(seed, "convert", slice_index);
    let mut converted = Vec::with_capacity((stream.len() as f64 * p_conv) as usize + 8);
    for ev in stream {
        let acc = acceptance_transmission(detuning_ghz(ev.wavelength_nm, spec.input_center_nm), spec);
        if rng.random::<f64>() < p_conv * acc {
            converted.push(PhotonEvent {
                timestamp_ps: ev.timestamp_ps,
                wavelength_nm: dfg_output_wavelength(ev.wavelength_nm, pump.wavelength_nm)?,
                origin: ev.origin,
            });
        }
    }

    // flat-rate in-band noise, linear in pump power
    let noise_rate = spec.noise_rate_per_watt * pump.power_w;
    let mut noise = Vec::new();
    if noise_rate > 0.0 && t_end_ps > t_start_ps {
        let out_nm = dfg_output_wavelength(spec.input_center_nm, pump.wavelength_nm)?;
        let mut nrng = substream(seed, "convert-noise", slice_index);
        let mean_gap = PICOS_PER_SECOND / noise_rate;
        let mut t = t_start_ps as f64;
        loop {
            t += exp_sample(&mut nrng, mean_gap);
            if t >= t_end_ps as f64 {
                break;
            }
            noise.push(PhotonEvent {
                timestamp_ps: t.round_ties_even() as i64,
                wavelength_nm: out_nm,
                origin: Origin::ConverterNoise,
            });
        }
    }
    merge_streams(&[&converted, &noise])
}

/// Convert a full stream spanning `[0, duration)` seconds.
pub fn convert_stream(
    stream: &[PhotonEvent],
    pump: &PumpConfig,
    spec: &ConversionSpec,
    duration_s: f64,
    seed: u64,
) -> Result<Vec<PhotonEvent>> {
    let duration_ps = (duration_s * PICOS_PER_SECOND).round() as i64;
    convert_slice(stream, pump, spec, 0, duration_ps, seed, 0)
}

/// Coherence time after conversion: Lorentzian linewidths add, so the
/// inverse coherence times do too.
pub fn converted_coherence_time(t2_in_ps: f64, t2_pump_ps: f64) -> Result<f64> {
    if t2_in_ps <= 0.0 || t2_pump_ps <= 0.0 {
        return Err(Error::contract("coherence times must be positive"));
    }
    Ok(1.0 / (1.0 / t2_in_ps + 1.0 / t2_pump_ps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults;
    use crate::emitter::generate_background_stream;
    use approx::assert_relative_eq;

    #[test]
    fn dfg_matches_published_triplet() {
        let out = dfg_output_wavelength(710.74, 1549.90).unwrap();
        assert!((out - 1312.71).abs() < 0.02, "{out}");
    }

    #[test]
    fn dfg_equal_split() {
        let out = dfg_output_wavelength(700.0, 1400.0).unwrap();
        assert_relative_eq!(out, 1400.0, max_relative = 1e-12);
    }

    #[test]
    fn dfg_energy_conservation_roundtrip() {
        let mut rng = crate::rng::substream(5, "dfg", 0);
        use rand::Rng;
        for _ in 0..1000 {
            let lin = 600.0 + rng.random::<f64>() * 300.0;
            let lp = lin + 100.0 + rng.random::<f64>() * 1000.0;
            let out = dfg_output_wavelength(lin, lp).unwrap();
            let residual = (1.0 / out + 1.0 / lp - 1.0 / lin).abs() * lin;
            assert!(residual < 1e-12, "residual {residual}");
        }
    }

    #[test]
    fn dfg_rejects_upconversion() {
        assert!(dfg_output_wavelength(1550.0, 711.0).is_err());
        assert!(dfg_output_wavelength(711.0, 711.0).is_err());
    }

    #[test]
    fn conversion_probability_zero_and_peak() {
        let spec = defaults::conversion();
        let mut pump = defaults::pump();
        pump.power_w = 0.0;
        assert_eq!(conversion_probability(&pump, &spec), 0.0);

        // analytic argmax, cross-checked by scanning the formula
        let p_star = spec.optimal_pump_w();
        assert!((p_star - 0.1341).abs() < 1e-3, "{p_star}");
        pump.power_w = p_star;
        let at_peak = conversion_probability(&pump, &spec);
        assert_relative_eq!(at_peak, spec.max_total_efficiency, max_relative = 1e-9);

        let best_scanned = (0..=3000)
            .map(|i| {
                let p = PumpConfig { power_w: i as f64 * 1e-4, ..defaults::pump() };
                conversion_probability(&p, &spec)
            })
            .fold(f64::MIN, f64::max);
        assert!(at_peak >= best_scanned - 1e-9);
    }

    #[test]
    fn conversion_probability_at_150mw() {
        let spec = defaults::conversion();
        let pump = PumpConfig { power_w: 0.150, ..defaults::pump() };
        let eta = conversion_probability(&pump, &spec);
        assert!((eta - 0.317).abs() < 5e-4, "{eta}");
    }

    #[test]
    fn conversion_nonmonotone_past_peak() {
        let spec = defaults::conversion();
        let at = |w| conversion_probability(&PumpConfig { power_w: w, ..defaults::pump() }, &spec);
        assert!(at(0.30) < at(0.15));
    }

    #[test]
    fn sinc2_half_max_constant() {
        // bisection oracle for sin^2(x)/x^2 = 1/2
        let f = |x: f64| (x.sin() / x).powi(2) - 0.5;
        let (mut lo, mut hi) = (1.0f64, 2.0f64);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((SINC2_HALF_MAX_X - lo).abs() < 1e-12, "oracle {lo}");
    }

    #[test]
    fn acceptance_peak_and_half_width() {
        let spec = defaults::conversion();
        assert_eq!(acceptance_transmission(0.0, &spec), 1.0);
        for d in [27.3, -27.3] {
            let t = acceptance_transmission(d, &spec);
            assert!((t - 0.5).abs() < 1e-6, "T({d}) = {t}");
        }
    }

    #[test]
    fn acceptance_symmetric() {
        let spec = defaults::conversion();
        let mut rng = crate::rng::substream(6, "acc", 0);
        use rand::Rng;
        for _ in 0..1000 {
            let d = (rng.random::<f64>() - 0.5) * 400.0;
            assert_eq!(acceptance_transmission(d, &spec), acceptance_transmission(-d, &spec));
        }
    }

    #[test]
    fn etalon_resonance_midpoint_periodicity() {
        let spec = defaults::etalon();
        assert_eq!(etalon_transmission(0.0, &spec), 1.0);
        let fsr = spec.free_spectral_range_ghz;
        let mid = etalon_transmission(fsr / 2.0, &spec);
        assert!((mid - 1.398e-3).abs() < 5e-6, "{mid}");
        assert_relative_eq!(etalon_transmission(fsr, &spec), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn fbg_band_edges() {
        let spec = defaults::fbg();
        assert_eq!(fbg_band_transmission(1312.714, &spec), spec.in_band_transmission);
        assert_eq!(fbg_band_transmission(1313.5, &spec), spec.out_of_band_suppression);
        // closed interval at the band edge
        let edge = spec.center_nm + spec.bandwidth_nm / 2.0;
        assert_eq!(fbg_band_transmission(edge, &spec), spec.in_band_transmission);
    }

    #[test]
    fn filter_identity_empty_and_binomial() {
        let lines = vec![SpectralLine::new(710.0, 1.0, "bg")];
        let stream = generate_background_stream(1e6, &lines, 1.0, 42).unwrap();
        let all = apply_filter(&stream, |_| 1.0, 1, 0).unwrap();
        assert_eq!(all, stream);
        let none = apply_filter(&stream, |_| 0.0, 1, 0).unwrap();
        assert!(none.is_empty());

        let half = apply_filter(&stream, |_| 0.5, 1, 0).unwrap();
        let n = stream.len() as f64;
        let sigma = (n * 0.25).sqrt();
        assert!((half.len() as f64 - n / 2.0).abs() < 4.0 * sigma);
        assert!(half.windows(2).all(|w| w[0].timestamp_ps <= w[1].timestamp_ps));
    }

    #[test]
    fn filter_rejects_bad_transmission() {
        let lines = vec![SpectralLine::new(710.0, 1.0, "bg")];
        let stream = generate_background_stream(1e4, &lines, 0.01, 2).unwrap();
        assert!(apply_filter(&stream, |_| 1.2, 1, 0).is_err());
    }

    #[test]
    fn convert_powerless_pump_yields_nothing() {
        let spec = defaults::conversion();
        let mut pump = defaults::pump();
        pump.power_w = 0.0;
        let lines = vec![SpectralLine::new(710.74, 1.0, "x")];
        let stream = generate_background_stream(1e5, &lines, 0.1, 9).unwrap();
        let out = convert_stream(&stream, &pump, &spec, 0.1, 10).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn convert_rate_and_noise_ratio() {
        // on-peak conversion of a pure on-center stream recovers the total
        // efficiency, and converted signal over converter noise stays >= 20
        let spec = defaults::conversion();
        let pump = defaults::pump();
        let lines = vec![SpectralLine::new(spec.input_center_nm, 1.0, "x")];
        let dur = 10.0;
        let stream = generate_background_stream(188_400.0, &lines, dur, 33).unwrap();
        let n_in = stream.len() as f64;
        let mut out = convert_stream(&stream, &pump, &spec, dur, 34).unwrap();
        // input was labeled Background by the generator; relabel for ratio math
        let n_noise = out.iter().filter(|e| e.origin == Origin::ConverterNoise).count() as f64;
        out.retain(|e| e.origin == Origin::Background);
        let eta = out.len() as f64 / n_in;
        assert!((eta - 0.3174).abs() < 0.01, "eta {eta}");
        let snr = out.len() as f64 / n_noise;
        assert!(snr >= 20.0, "converted-to-noise ratio {snr}");
        let expect_wl = dfg_output_wavelength(spec.input_center_nm, pump.wavelength_nm).unwrap();
        assert!(out.iter().all(|e| (e.wavelength_nm - expect_wl).abs() < 1e-9));
    }

    #[test]
    fn coherence_addition() {
        assert_relative_eq!(converted_coherence_time(100.0, 100.0).unwrap(), 50.0);
        let near_in = converted_coherence_time(42.0, 1e12).unwrap();
        assert!((near_in - 42.0).abs() < 1e-9);
        let as_published = converted_coherence_time(42.0, 1.6e8).unwrap();
        assert!((as_published - 41.99999).abs() < 1e-5, "{as_published}");
    }
}
