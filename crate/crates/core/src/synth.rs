//! Deterministic synthetic EEG generation.
//!
//! Interictal clips are white Gaussian noise; preictal clips add one
//! sinusoid per channel with a frequency drawn inside the signature band and
//! a random phase. Band-limited power elevation is exactly what the PSI
//! features measure, so the generator certifies the pipeline end to end
//! without any claim of physiological realism.
//!
//! Every clip draws from its own generator seeded by (seed, clip_index), so
//! generation order or parallelism can never change the output bytes.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dataset::{write_clip, EegClip, Label, Manifest, ManifestEntry};
use crate::error::{Error, Result};
use crate::features::FrequencyBin;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_preictal: usize,
    pub n_interictal: usize,
    pub channels: usize,
    pub duration_s: f64,
    pub sampling_rate_hz: f64,
    /// Standard deviation of the white noise floor.
    pub noise_sigma: f64,
    /// Band the preictal sinusoids are drawn from.
    pub signature_band: FrequencyBin,
    /// Sinusoid amplitude; 0 makes the classes identically distributed.
    pub signature_amplitude: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> SynthConfig {
        SynthConfig {
            n_preictal: 100,
            n_interictal: 100,
            channels: 16,
            duration_s: 600.0,
            sampling_rate_hz: 400.0,
            noise_sigma: 1.0,
            signature_band: FrequencyBin::new(4.0, 8.0).unwrap(),
            signature_amplitude: 5.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 {
            return Err(Error::InvalidArgument("channels must be >= 1".into()));
        }
        if !(self.sampling_rate_hz.is_finite() && self.sampling_rate_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sampling rate must be positive, got {}",
                self.sampling_rate_hz
            )));
        }
        if (self.duration_s * self.sampling_rate_hz).round() < 1.0 {
            return Err(Error::InvalidArgument(
                "duration is shorter than one sample".into(),
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise sigma must be positive, got {}",
                self.noise_sigma
            )));
        }
        if !(self.signature_amplitude.is_finite() && self.signature_amplitude >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "signature amplitude must be >= 0, got {}",
                self.signature_amplitude
            )));
        }
        if self.signature_band.hi_hz() > self.sampling_rate_hz / 2.0 {
            return Err(Error::OutsideNyquist {
                lo: self.signature_band.lo_hz(),
                hi: self.signature_band.hi_hz(),
                nyquist: self.sampling_rate_hz / 2.0,
            });
        }
        Ok(())
    }

    pub fn n_clips(&self) -> usize {
        self.n_preictal + self.n_interictal
    }

    /// Label of clip `index`: the first `n_preictal` clips are preictal.
    pub fn label_of(&self, index: usize) -> Label {
        if index < self.n_preictal {
            Label::Preictal
        } else {
            Label::Interictal
        }
    }
}

/// Builds clip `index` in memory.
///
/// Per channel, a preictal clip draws a frequency (uniform in the signature
/// band) and a phase (uniform in [0, 2pi)), then every sample is
/// `noise_sigma * N(0,1) + amplitude * sin(2pi f t + phase)`; interictal
/// channels are noise only. Samples are stored as f32.
pub fn make_clip(cfg: &SynthConfig, index: usize) -> Result<EegClip> {
    cfg.validate()?;
    if index >= cfg.n_clips() {
        return Err(Error::InvalidArgument(format!(
            "clip index {index} out of range, config has {} clips",
            cfg.n_clips()
        )));
    }
    let label = cfg.label_of(index);
    let n_samples = (cfg.duration_s * cfg.sampling_rate_hz).round() as usize;
    let mut rng = Rng::from_stream(cfg.seed, index as u64);

    let mut samples = Vec::with_capacity(cfg.channels * n_samples);
    for _ in 0..cfg.channels {
        let signature = if label == Label::Preictal {
            let freq = rng.next_uniform(cfg.signature_band.lo_hz(), cfg.signature_band.hi_hz());
            let phase = rng.next_uniform(0.0, TAU);
            Some((freq, phase))
        } else {
            None
        };
        for i in 0..n_samples {
            let mut v = cfg.noise_sigma * rng.next_normal();
            if let Some((freq, phase)) = signature {
                let t = i as f64 / cfg.sampling_rate_hz;
                v += cfg.signature_amplitude * (TAU * freq * t + phase).sin();
            }
            samples.push(v as f32);
        }
    }
    EegClip::from_flat(
        "synth",
        clip_file_stem(index),
        label,
        cfg.sampling_rate_hz as f32,
        cfg.channels,
        n_samples,
        samples,
    )
}

fn clip_file_stem(index: usize) -> String {
    format!("clip_{index:05}")
}

/// Generates all clips under `out_dir` plus a `manifest.tsv`, and returns
/// the manifest. Byte-identical for identical configs.
pub fn generate(cfg: &SynthConfig, out_dir: &Path) -> Result<Manifest> {
    cfg.validate()?;
    if cfg.n_clips() == 0 {
        return Err(Error::EmptyInput("config requests zero clips"));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut entries = Vec::with_capacity(cfg.n_clips());
    for index in 0..cfg.n_clips() {
        let clip = make_clip(cfg, index)?;
        let file = PathBuf::from(format!("{}.eegc", clip_file_stem(index)));
        write_clip(&clip, &out_dir.join(&file))?;
        entries.push(ManifestEntry {
            path: file,
            label: clip.label,
        });
    }
    let manifest = Manifest::new(out_dir, entries)?;
    manifest.save(&out_dir.join("manifest.tsv"))?;
    Ok(manifest)
}
