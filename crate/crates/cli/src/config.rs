//! Run configuration: defaults, an optional `key = value` config file, and
//! flag overrides, resolved in that order. Every run writes its resolved
//! configuration next to its outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ictal_core::features::{BinSet, FrequencyBin};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub hidden_size: usize,
    pub window_seconds: f64,
    pub train_fraction: f64,
    pub normalize: bool,
    pub class_weighting: bool,
    pub bins: BinSet,
    // synthetic data
    pub preictal: usize,
    pub interictal: usize,
    pub channels: usize,
    pub duration_s: f64,
    pub sampling_rate_hz: f64,
    pub noise_sigma: f64,
    pub signature_amplitude: f64,
    pub signature_band: FrequencyBin,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            seed: 0,
            epochs: 50,
            learning_rate: 1e-3,
            batch_size: 290,
            hidden_size: 32,
            window_seconds: 30.0,
            // approximates the 2900/3459 protocol split
            train_fraction: 0.8384,
            normalize: true,
            class_weighting: false,
            bins: BinSet::default(),
            preictal: 100,
            interictal: 100,
            channels: 16,
            duration_s: 600.0,
            sampling_rate_hz: 400.0,
            noise_sigma: 1.0,
            signature_amplitude: 5.0,
            signature_band: FrequencyBin::new(4.0, 8.0).unwrap(),
        }
    }
}

fn parse_band(s: &str) -> Result<FrequencyBin> {
    let (lo, hi) = s
        .split_once('-')
        .with_context(|| format!("band `{s}` is not of the form LO-HI"))?;
    let lo: f64 = lo.trim().parse().with_context(|| format!("bad band edge `{lo}`"))?;
    let hi: f64 = hi.trim().parse().with_context(|| format!("bad band edge `{hi}`"))?;
    Ok(FrequencyBin::new(lo, hi)?)
}

pub fn parse_bins(s: &str) -> Result<BinSet> {
    let bins = s
        .split(',')
        .map(parse_band)
        .collect::<Result<Vec<_>>>()?;
    Ok(BinSet::new(bins)?)
}

fn band_to_string(b: &FrequencyBin) -> String {
    format!("{}-{}", b.lo_hz(), b.hi_hz())
}

fn bins_to_string(bins: &BinSet) -> String {
    bins.bins()
        .iter()
        .map(band_to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    /// Applies `key = value` lines from a config file over the current
    /// values. Lines starting with `#` and blank lines are ignored;
    /// unknown keys are errors.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("{}:{}: expected `key = value`", path.display(), lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            let ctx = || format!("{}:{}: bad value for {key}", path.display(), lineno + 1);
            match key {
                "seed" => self.seed = value.parse().with_context(ctx)?,
                "epochs" => self.epochs = value.parse().with_context(ctx)?,
                "learning_rate" => self.learning_rate = value.parse().with_context(ctx)?,
                "batch_size" => self.batch_size = value.parse().with_context(ctx)?,
                "hidden_size" => self.hidden_size = value.parse().with_context(ctx)?,
                "window_seconds" => self.window_seconds = value.parse().with_context(ctx)?,
                "train_fraction" => self.train_fraction = value.parse().with_context(ctx)?,
                "normalize" => self.normalize = value.parse().with_context(ctx)?,
                "class_weighting" => self.class_weighting = value.parse().with_context(ctx)?,
                "bins" => self.bins = parse_bins(value).with_context(ctx)?,
                "preictal" => self.preictal = value.parse().with_context(ctx)?,
                "interictal" => self.interictal = value.parse().with_context(ctx)?,
                "channels" => self.channels = value.parse().with_context(ctx)?,
                "duration_s" => self.duration_s = value.parse().with_context(ctx)?,
                "sampling_rate_hz" => self.sampling_rate_hz = value.parse().with_context(ctx)?,
                "noise_sigma" => self.noise_sigma = value.parse().with_context(ctx)?,
                "signature_amplitude" => {
                    self.signature_amplitude = value.parse().with_context(ctx)?
                }
                "signature_band" => self.signature_band = parse_band(value).with_context(ctx)?,
                _ => bail!("{}:{}: unknown config key `{key}`", path.display(), lineno + 1),
            }
        }
        Ok(())
    }

    /// Writes the fully resolved configuration.
    pub fn write_resolved(&self, path: &Path) -> Result<()> {
        let mut out = String::from("# resolved run configuration\n");
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
        kv("seed", self.seed.to_string());
        kv("epochs", self.epochs.to_string());
        kv("learning_rate", self.learning_rate.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("hidden_size", self.hidden_size.to_string());
        kv("window_seconds", self.window_seconds.to_string());
        kv("train_fraction", self.train_fraction.to_string());
        kv("normalize", self.normalize.to_string());
        kv("class_weighting", self.class_weighting.to_string());
        kv("bins", bins_to_string(&self.bins));
        kv("preictal", self.preictal.to_string());
        kv("interictal", self.interictal.to_string());
        kv("channels", self.channels.to_string());
        kv("duration_s", self.duration_s.to_string());
        kv("sampling_rate_hz", self.sampling_rate_hz.to_string());
        kv("noise_sigma", self.noise_sigma.to_string());
        kv("signature_amplitude", self.signature_amplitude.to_string());
        kv("signature_band", band_to_string(&self.signature_band));
        fs::write(path, out).with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn file_overrides_defaults_and_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(
            &path,
            "# comment\nseed = 9\nepochs = 3\nbins = 1-4,4-8\nnormalize = false\n",
        )
        .unwrap();
        let mut cfg = RunConfig::default();
        cfg.apply_file(&path).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.bins.len(), 2);
        assert!(!cfg.normalize);

        let resolved = dir.path().join("resolved.conf");
        cfg.write_resolved(&resolved).unwrap();
        let mut back = RunConfig::default();
        back.apply_file(&resolved).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "lerning_rate = 0.1\n").unwrap();
        let mut cfg = RunConfig::default();
        assert!(cfg.apply_file(&path).is_err());
    }
}
