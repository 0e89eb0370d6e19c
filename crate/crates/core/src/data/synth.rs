use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trial::{Trial, TrialSet};
use crate::dsp::{design_butterworth_highpass, SosFilter};
use crate::error::{Error, Result};

/// Desk-scale stand-in for motor-imagery data: each class adds a sinusoidal
/// rhythm to its own channel on top of broadband and above-100 Hz noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_per_class: usize,
    pub n_subjects: usize,
    pub n_channels: usize,
    pub time_len: usize,
    pub sample_rate_hz: f64,
    pub rhythm_hz: f64,
    /// `class_channels[c]` is the channel carrying class `c`'s rhythm.
    pub class_channels: Vec<usize>,
    pub rhythm_amplitude: f64,
    pub noise_std: f64,
    pub high_noise_std: f64,
    pub high_cutoff_hz: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_per_class: 20,
            n_subjects: 1,
            n_channels: 3,
            time_len: 750,
            sample_rate_hz: 250.0,
            rhythm_hz: 10.0,
            class_channels: vec![0, 2],
            rhythm_amplitude: 1.0,
            noise_std: 1.0,
            high_noise_std: 0.0,
            high_cutoff_hz: 100.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn n_classes(&self) -> usize {
        self.class_channels.len()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.n_per_class == 0 || self.n_subjects == 0 || self.n_channels == 0 || self.time_len == 0 {
            return fail("n_per_class, n_subjects, n_channels and time_len must be positive".into());
        }
        if self.class_channels.len() < 2 {
            return fail("class_channels must name at least two classes".into());
        }
        for (c, &ch) in self.class_channels.iter().enumerate() {
            if ch >= self.n_channels {
                return fail(format!("class {c} maps to channel {ch} of {}", self.n_channels));
            }
            if self.class_channels[..c].contains(&ch) {
                return fail(format!("channel {ch} is shared by two classes"));
            }
        }
        for (name, v) in [
            ("rhythm_amplitude", self.rhythm_amplitude),
            ("noise_std", self.noise_std),
            ("high_noise_std", self.high_noise_std),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !(self.sample_rate_hz > 0.0) || !(self.rhythm_hz >= 0.0) {
            return fail("sample_rate_hz must be positive and rhythm_hz non-negative".into());
        }
        Ok(())
    }
}

pub fn default_channel_names(n: usize) -> Vec<String> {
    if n == 3 {
        ["C3", "Cz", "C4"].iter().map(|s| s.to_string()).collect()
    } else {
        (0..n).map(|i| format!("ch{i}")).collect()
    }
}

/// Root-sum-square of the impulse response: the std of filtered unit white noise.
fn white_noise_gain(filter: &SosFilter) -> Result<f64> {
    let mut h = vec![0.0; 8192];
    h[0] = 1.0;
    filter.apply_in_place(&mut h)?;
    Ok(h.iter().map(|v| v * v).sum::<f64>().sqrt())
}

const HIGH_BAND_WARMUP: usize = 500;

fn trial_samples(cfg: &SynthConfig, label: usize, stream: u64, high: Option<(&SosFilter, f64)>) -> Result<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let len = cfg.time_len;
    let mut out = Vec::with_capacity(cfg.n_channels * len);
    let phase = rng.gen_range(0.0..2.0 * PI);
    for ch in 0..cfg.n_channels {
        let mut x: Vec<f64> = (0..len)
            .map(|_| cfg.noise_std * rng.sample::<f64, _>(StandardNormal))
            .collect();
        if let Some((filter, gain)) = high {
            let mut w: Vec<f64> = (0..len + HIGH_BAND_WARMUP).map(|_| rng.sample(StandardNormal)).collect();
            filter.apply_in_place(&mut w)?;
            let scale = cfg.high_noise_std / gain;
            for (v, n) in x.iter_mut().zip(&w[HIGH_BAND_WARMUP..]) {
                *v += scale * n;
            }
        }
        if cfg.class_channels[label] == ch {
            let omega = 2.0 * PI * cfg.rhythm_hz / cfg.sample_rate_hz;
            for (t, v) in x.iter_mut().enumerate() {
                *v += cfg.rhythm_amplitude * (omega * t as f64 + phase).sin();
            }
        }
        out.extend(x.into_iter().map(|v| v as f32));
    }
    Ok(out)
}

/// Balanced synthetic trial set; identical for identical configs.
pub fn synth_generate(cfg: &SynthConfig) -> Result<TrialSet> {
    cfg.validate()?;
    let filter = if cfg.high_noise_std > 0.0 {
        let f = design_butterworth_highpass(8, cfg.high_cutoff_hz, cfg.sample_rate_hz)?;
        let g = white_noise_gain(&f)?;
        Some((f, g))
    } else {
        None
    };
    let n_classes = cfg.n_classes();
    let per_subject = cfg.n_per_class * n_classes;
    let trials = (0..cfg.n_subjects * per_subject)
        .into_par_iter()
        .map(|j| {
            let (s, idx) = (j / per_subject, j % per_subject);
            let label = idx % n_classes;
            let samples = trial_samples(cfg, label, j as u64, filter.as_ref().map(|(f, g)| (f, *g)))?;
            Trial::new(
                format!("S{}-{idx:04}", s + 1),
                format!("S{}", s + 1),
                label,
                cfg.sample_rate_hz,
                cfg.n_channels,
                samples,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    TrialSet::new(default_channel_names(cfg.n_channels), n_classes, trials)
}
