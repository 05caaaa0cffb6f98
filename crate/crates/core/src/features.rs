//! Spectral and statistical features.
//!
//! Each window of each channel contributes nine features: the power spectral
//! intensity (PSI) over eight frequency bins plus the population standard
//! deviation. PSI over a bin [f1, f2) is the sum of unnormalized DFT
//! magnitudes |X_i| at the indices i whose frequency i*fs/N falls in the bin.
//! Bins are half-open and upper-exclusive so that adjacent bins sharing an
//! edge (e.g. [4,8] and [8,12]) never double count an index, which makes PSI
//! exactly additive over a partition of the axis. The DC index (0 Hz) falls
//! below the 0.1 Hz floor of the default bins. No window function is applied.
//!
//! The default bins are {[0.1,4], [4,8], [8,12], [12,30], [30,50], [50,70],
//! [70,100], [100,180]} Hz; the first four approximate the delta, theta,
//! alpha, and beta bands.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dataset::{segment_clip, EegClip, Label, Segment};
use crate::error::{Error, Result};
use crate::fft::{real_magnitudes, real_magnitudes_pair, FftPlan};

/// Half-open frequency interval [lo_hz, hi_hz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBin {
    lo_hz: f64,
    hi_hz: f64,
}

impl FrequencyBin {
    pub fn new(lo_hz: f64, hi_hz: f64) -> Result<FrequencyBin> {
        if !(lo_hz.is_finite() && hi_hz.is_finite() && 0.0 <= lo_hz && lo_hz < hi_hz) {
            return Err(Error::InvalidArgument(format!(
                "frequency bin requires 0 <= lo < hi, got [{lo_hz}, {hi_hz})"
            )));
        }
        Ok(FrequencyBin { lo_hz, hi_hz })
    }

    pub fn lo_hz(&self) -> f64 {
        self.lo_hz
    }

    pub fn hi_hz(&self) -> f64 {
        self.hi_hz
    }

    pub fn contains(&self, freq_hz: f64) -> bool {
        self.lo_hz <= freq_hz && freq_hz < self.hi_hz
    }
}

/// Ordered set of frequency bins.
#[derive(Debug, Clone, PartialEq)]
pub struct BinSet {
    bins: Vec<FrequencyBin>,
}

impl BinSet {
    pub fn new(bins: Vec<FrequencyBin>) -> Result<BinSet> {
        if bins.is_empty() {
            return Err(Error::EmptyInput("bin set"));
        }
        for pair in bins.windows(2) {
            if pair[0].lo_hz > pair[1].lo_hz {
                return Err(Error::InvalidArgument(
                    "bins must be ordered by lower edge".into(),
                ));
            }
        }
        Ok(BinSet { bins })
    }

    pub fn bins(&self) -> &[FrequencyBin] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

impl Default for BinSet {
    fn default() -> BinSet {
        let edges = [0.1, 4.0, 8.0, 12.0, 30.0, 50.0, 70.0, 100.0, 180.0];
        let bins = edges
            .windows(2)
            .map(|e| FrequencyBin::new(e[0], e[1]).unwrap())
            .collect();
        BinSet { bins }
    }
}

/// One-sided DFT magnitudes |X_k| for k = 0..=N/2 of an N-sample signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    magnitudes: Vec<f64>,
    signal_len: usize,
}

impl Spectrum {
    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    /// Frequency spacing between adjacent DFT indices.
    pub fn bin_width_hz(&self, sampling_rate_hz: f64) -> f64 {
        sampling_rate_hz / self.signal_len as f64
    }
}

/// Unnormalized one-sided DFT magnitude spectrum.
pub fn magnitude_spectrum(signal: &[f64]) -> Result<Spectrum> {
    let n = signal.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "spectrum requires at least 2 samples, got {n}"
        )));
    }
    let plan = FftPlan::new(n);
    Ok(spectrum_with_plan(&plan, signal))
}

fn spectrum_with_plan(plan: &FftPlan, signal: &[f64]) -> Spectrum {
    Spectrum {
        magnitudes: real_magnitudes(plan, signal),
        signal_len: signal.len(),
    }
}

/// Power spectral intensity: the sum of |X_i| over the DFT indices whose
/// frequency i*fs/N lies in `bin`.
pub fn psi(spectrum: &Spectrum, bin: &FrequencyBin, sampling_rate_hz: f64) -> Result<f64> {
    if !(sampling_rate_hz.is_finite() && sampling_rate_hz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sampling rate must be positive, got {sampling_rate_hz}"
        )));
    }
    let nyquist = sampling_rate_hz / 2.0;
    if bin.hi_hz > nyquist {
        return Err(Error::OutsideNyquist {
            lo: bin.lo_hz,
            hi: bin.hi_hz,
            nyquist,
        });
    }
    let n = spectrum.signal_len as f64;
    let mut sum = 0.0;
    for (i, &m) in spectrum.magnitudes.iter().enumerate() {
        let freq = i as f64 * sampling_rate_hz / n;
        if bin.contains(freq) {
            sum += m;
        }
    }
    Ok(sum)
}

/// Population standard deviation (divide by N).
pub fn stddev(signal: &[f64]) -> Result<f64> {
    if signal.is_empty() {
        return Err(Error::EmptyInput("stddev of an empty signal"));
    }
    let n = signal.len() as f64;
    let mean = signal.iter().sum::<f64>() / n;
    let var = signal
        .iter()
        .map(|&x| {
            let d = x - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    Ok(var.sqrt())
}

/// Features of one window: channel-major concatenation of
/// `[PSI bin 0, ..., PSI bin B-1, stddev]` per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-window feature vectors of one clip, in temporal order, with the
/// clip's label carried along.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub clip_id: String,
    pub label: Label,
    pub vectors: Vec<FeatureVector>,
}

impl FeatureSequence {
    pub fn new(
        clip_id: impl Into<String>,
        label: Label,
        vectors: Vec<FeatureVector>,
    ) -> Result<FeatureSequence> {
        if vectors.is_empty() {
            return Err(Error::EmptyInput("feature sequence has no windows"));
        }
        let dim = vectors[0].len();
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::ShapeMismatch(
                "feature vectors differ in length across windows".into(),
            ));
        }
        Ok(FeatureSequence {
            clip_id: clip_id.into(),
            label,
            vectors,
        })
    }

    pub fn seq_len(&self) -> usize {
        self.vectors.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.vectors.first().map_or(0, FeatureVector::len)
    }
}

/// Extracts `[PSI x B, stddev]` per channel from one segment.
pub fn extract_segment_features(segment: &Segment, bins: &BinSet) -> Result<FeatureVector> {
    let plan = FftPlan::new(segment.window_len());
    segment_features_with_plan(&plan, segment, bins)
}

fn segment_features_with_plan(
    plan: &FftPlan,
    segment: &Segment,
    bins: &BinSet,
) -> Result<FeatureVector> {
    let rate = segment.sampling_rate_hz() as f64;
    let n = segment.window_len();
    let signals: Vec<Vec<f64>> = (0..segment.channels())
        .map(|c| segment.channel(c).iter().map(|&s| s as f64).collect())
        .collect();

    // two real channels ride one complex transform
    let mut spectra = Vec::with_capacity(signals.len());
    for pair in signals.chunks(2) {
        if let [a, b] = pair {
            let (mag_a, mag_b) = real_magnitudes_pair(plan, a, b);
            spectra.push(Spectrum {
                magnitudes: mag_a,
                signal_len: n,
            });
            spectra.push(Spectrum {
                magnitudes: mag_b,
                signal_len: n,
            });
        } else {
            spectra.push(spectrum_with_plan(plan, &pair[0]));
        }
    }

    let mut values = Vec::with_capacity(segment.channels() * (bins.len() + 1));
    for (signal, spectrum) in signals.iter().zip(&spectra) {
        for bin in bins.bins() {
            values.push(psi(spectrum, bin, rate)?);
        }
        values.push(stddev(signal)?);
    }
    Ok(FeatureVector { values })
}

/// Segments a clip and extracts one feature vector per window.
pub fn extract_clip_features(
    clip: &EegClip,
    window_seconds: f64,
    bins: &BinSet,
) -> Result<FeatureSequence> {
    let segments = segment_clip(clip, window_seconds)?;
    if segments[0].window_len() < 2 {
        return Err(Error::InvalidArgument(
            "windows must hold at least 2 samples for a spectrum".into(),
        ));
    }
    let plan = FftPlan::new(segments[0].window_len());
    let vectors = segments
        .iter()
        .map(|s| segment_features_with_plan(&plan, s, bins))
        .collect::<Result<Vec<_>>>()?;
    FeatureSequence::new(clip.clip_id.clone(), clip.label, vectors)
}

/// Per-feature z-score statistics, computed on the training set only.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl FeatureStats {
    /// Statistics that leave features unchanged.
    pub fn identity(dim: usize) -> FeatureStats {
        FeatureStats {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Computes per-feature mean and standard deviation over every window of
/// every training sequence. Zero-variance features get their scale clamped
/// to 1 so normalization maps them to exactly 0.
pub fn feature_stats(train: &[FeatureSequence]) -> Result<FeatureStats> {
    if train.is_empty() {
        return Err(Error::EmptyInput("feature statistics need training data"));
    }
    let dim = train[0].feature_dim();
    for seq in train {
        if seq.feature_dim() != dim {
            return Err(Error::ShapeMismatch(format!(
                "sequence {} has dim {}, expected {dim}",
                seq.clip_id,
                seq.feature_dim()
            )));
        }
    }
    let mut count = 0usize;
    let mut mean = vec![0.0f64; dim];
    for seq in train {
        for v in &seq.vectors {
            count += 1;
            for (m, &x) in mean.iter_mut().zip(&v.values) {
                *m += x;
            }
        }
    }
    for m in &mut mean {
        *m /= count as f64;
    }
    let mut var = vec![0.0f64; dim];
    for seq in train {
        for v in &seq.vectors {
            for ((s, &m), &x) in var.iter_mut().zip(&mean).zip(&v.values) {
                let d = x - m;
                *s += d * d;
            }
        }
    }
    let scale = var
        .iter()
        .map(|&s| {
            let sd = (s / count as f64).sqrt();
            if sd == 0.0 {
                1.0
            } else {
                sd
            }
        })
        .collect();
    Ok(FeatureStats { mean, scale })
}

/// Applies z-score statistics to a set of sequences.
pub fn apply_stats(stats: &FeatureStats, seqs: &[FeatureSequence]) -> Result<Vec<FeatureSequence>> {
    let mut out = Vec::with_capacity(seqs.len());
    for seq in seqs {
        if seq.feature_dim() != stats.dim() {
            return Err(Error::ShapeMismatch(format!(
                "sequence {} has dim {}, statistics have dim {}",
                seq.clip_id,
                seq.feature_dim(),
                stats.dim()
            )));
        }
        let vectors = seq
            .vectors
            .iter()
            .map(|v| FeatureVector {
                values: v
                    .values
                    .iter()
                    .zip(stats.mean.iter().zip(&stats.scale))
                    .map(|(&x, (&m, &s))| (x - m) / s)
                    .collect(),
            })
            .collect();
        out.push(FeatureSequence {
            clip_id: seq.clip_id.clone(),
            label: seq.label,
            vectors,
        });
    }
    Ok(out)
}

/// Z-scores `apply_to` using statistics computed on `train` only, returning
/// the normalized sequences together with the statistics for persistence.
pub fn normalize_features(
    train: &[FeatureSequence],
    apply_to: &[FeatureSequence],
) -> Result<(Vec<FeatureSequence>, FeatureStats)> {
    let stats = feature_stats(train)?;
    let normalized = apply_stats(&stats, apply_to)?;
    Ok((normalized, stats))
}

/// Writes the feature cache CSV: one row per (clip, window) with columns
/// `clip_id,window_index,label,ch{c}_psi{b}...,ch{c}_std,...`.
pub fn write_feature_csv(
    path: &Path,
    seqs: &[FeatureSequence],
    channels: usize,
    bins_per_channel: usize,
) -> Result<()> {
    if seqs.is_empty() {
        return Err(Error::EmptyInput("no feature sequences to write"));
    }
    let dim = channels * (bins_per_channel + 1);
    for seq in seqs {
        if seq.feature_dim() != dim {
            return Err(Error::ShapeMismatch(format!(
                "sequence {} has dim {}, expected {channels} x ({bins_per_channel} + 1)",
                seq.clip_id,
                seq.feature_dim()
            )));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);

    let mut header = String::from("clip_id,window_index,label");
    for c in 0..channels {
        for b in 0..bins_per_channel {
            header.push_str(&format!(",ch{c}_psi{b}"));
        }
        header.push_str(&format!(",ch{c}_std"));
    }
    writeln!(w, "{header}").map_err(io_err)?;

    for seq in seqs {
        for (i, v) in seq.vectors.iter().enumerate() {
            let mut row = format!("{},{},{}", seq.clip_id, i, seq.label);
            for x in &v.values {
                row.push(',');
                row.push_str(&format!("{x}"));
            }
            writeln!(w, "{row}").map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Reads a feature cache CSV back into sequences. Rows of one clip must be
/// consecutive with window indices counting up from 0.
pub fn read_feature_csv(path: &Path) -> Result<Vec<FeatureSequence>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let malformed = |lineno: usize, msg: &str| Error::InvalidArgument(format!(
        "{}: line {}: {msg}",
        path.display(),
        lineno + 1
    ));

    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(Error::EmptyInput("feature csv is empty"))?;
    if !header.starts_with("clip_id,window_index,label") {
        return Err(Error::InvalidArgument(format!(
            "{}: unexpected feature csv header",
            path.display()
        )));
    }

    let mut seqs: Vec<FeatureSequence> = Vec::new();
    let mut current: Option<(String, Label, Vec<FeatureVector>)> = None;
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let clip_id = fields
            .next()
            .ok_or_else(|| malformed(lineno, "missing clip_id"))?;
        let window_index: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| malformed(lineno, "bad window_index"))?;
        let label = fields
            .next()
            .and_then(Label::parse)
            .ok_or_else(|| malformed(lineno, "bad label"))?;
        let values = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| malformed(lineno, "bad feature value"))
            })
            .collect::<Result<Vec<f64>>>()?;
        let vector = FeatureVector { values };

        let start_new = match &current {
            Some((id, _, _)) => id != clip_id,
            None => true,
        };
        if start_new {
            if let Some((id, label, vectors)) = current.take() {
                seqs.push(FeatureSequence::new(id, label, vectors)?);
            }
            if window_index != 0 {
                return Err(malformed(lineno, "clip does not start at window 0"));
            }
            current = Some((clip_id.to_string(), label, vec![vector]));
        } else {
            let (_, _, vectors) = current.as_mut().unwrap();
            if window_index != vectors.len() {
                return Err(malformed(lineno, "window indices are not consecutive"));
            }
            vectors.push(vector);
        }
    }
    if let Some((id, label, vectors)) = current {
        seqs.push(FeatureSequence::new(id, label, vectors)?);
    }
    Ok(seqs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;
    use std::f64::consts::TAU;
    use tempfile::tempdir;

    /// O(N^2) DFT magnitudes straight from the definition.
    fn naive_magnitudes(signal: &[f64]) -> Vec<f64> {
        let n = signal.len();
        (0..=n / 2)
            .map(|k| {
                let mut re = 0.0;
                let mut im = 0.0;
                for (j, &s) in signal.iter().enumerate() {
                    let angle = -TAU * (k as f64) * (j as f64) / n as f64;
                    re += s * angle.cos();
                    im += s * angle.sin();
                }
                re.hypot(im)
            })
            .collect()
    }

    fn cosine(freq_hz: f64, rate: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (TAU * freq_hz * i as f64 / rate).cos())
            .collect()
    }

    fn segment_from(channels: Vec<Vec<f32>>, rate: f32) -> Segment {
        let n = channels[0].len();
        let clip = EegClip::new("s", "c", Label::Preictal, rate, channels).unwrap();
        let mut segs = segment_clip(&clip, n as f64 / rate as f64).unwrap();
        segs.remove(0)
    }

    #[test]
    fn constant_signal_is_dc_only() {
        let spectrum = magnitude_spectrum(&[0.75; 8]).unwrap();
        assert_eq!(spectrum.magnitudes().len(), 5);
        assert!((spectrum.magnitudes()[0] - 8.0 * 0.75).abs() < 1e-12);
        for &m in &spectrum.magnitudes()[1..] {
            assert!(m < 1e-12);
        }
    }

    #[test]
    fn bin_aligned_cosine_peaks_at_half_n() {
        let n = 12_000;
        let signal: Vec<f64> = (0..n).map(|i| (TAU * 3.0 * i as f64 / n as f64).cos()).collect();
        let spectrum = magnitude_spectrum(&signal).unwrap();
        assert!((spectrum.magnitudes()[3] - n as f64 / 2.0).abs() < 1e-9 * n as f64 / 2.0);
        for (k, &m) in spectrum.magnitudes().iter().enumerate() {
            if k != 3 {
                assert!(m < 1e-6 * n as f64 / 2.0, "index {k}: {m}");
            }
        }
    }

    #[test]
    fn spectrum_matches_naive_dft() {
        let mut rng = Rng::new(42);
        for n in [16usize, 17, 63, 100] {
            let signal: Vec<f64> = (0..n).map(|_| rng.next_uniform(-1.0, 1.0)).collect();
            let spectrum = magnitude_spectrum(&signal).unwrap();
            let oracle = naive_magnitudes(&signal);
            for (a, b) in spectrum.magnitudes().iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-9 * b.max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn spectrum_rejects_tiny_signals() {
        assert!(magnitude_spectrum(&[]).is_err());
        assert!(magnitude_spectrum(&[1.0]).is_err());
    }

    #[test]
    fn psi_of_zero_signal_is_zero() {
        let spectrum = magnitude_spectrum(&vec![0.0; 64]).unwrap();
        for bin in BinSet::default().bins() {
            assert_eq!(psi(&spectrum, bin, 400.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn psi_of_ten_hz_cosine_lands_in_alpha_bin() {
        // 10 Hz at 400 Hz over 12000 samples puts magnitude N/2 = 6000 at
        // index 300, which maps to exactly 10 Hz in [8, 12)
        let signal = cosine(10.0, 400.0, 12_000);
        let spectrum = magnitude_spectrum(&signal).unwrap();
        let bins = BinSet::default();
        for (b, bin) in bins.bins().iter().enumerate() {
            let value = psi(&spectrum, bin, 400.0).unwrap();
            if b == 2 {
                assert!((value - 6000.0).abs() < 1e-6 * 6000.0, "alpha psi {value}");
            } else {
                assert!(value < 1e-6 * 6000.0, "bin {b} psi {value}");
            }
        }
    }

    #[test]
    fn psi_is_additive_over_the_default_bins() {
        let mut rng = Rng::new(9);
        let signal: Vec<f64> = (0..12_000).map(|_| rng.next_uniform(-1.0, 1.0)).collect();
        let spectrum = magnitude_spectrum(&signal).unwrap();
        let total: f64 = BinSet::default()
            .bins()
            .iter()
            .map(|b| psi(&spectrum, b, 400.0).unwrap())
            .sum();
        let union = psi(&spectrum, &FrequencyBin::new(0.1, 180.0).unwrap(), 400.0).unwrap();
        assert!((total - union).abs() <= 1e-12 * union, "{total} vs {union}");
    }

    #[test]
    fn psi_rejects_bins_beyond_nyquist() {
        let spectrum = magnitude_spectrum(&[1.0; 16]).unwrap();
        let bin = FrequencyBin::new(100.0, 250.0).unwrap();
        assert!(matches!(
            psi(&spectrum, &bin, 400.0),
            Err(Error::OutsideNyquist { .. })
        ));
    }

    #[test]
    fn stddev_known_values() {
        assert_eq!(stddev(&[3.0; 17]).unwrap(), 0.0);
        // mean 0, mean square 1
        assert!((stddev(&[1.0, -1.0, 1.0, -1.0]).unwrap() - 1.0).abs() < 1e-15);
        // mean 1, deviations +-1, population formula
        assert!((stddev(&[0.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(stddev(&[]).is_err());
    }

    #[test]
    fn zero_segment_yields_zero_features() {
        let seg = segment_from(vec![vec![0.0f32; 400]; 16], 400.0);
        let fv = extract_segment_features(&seg, &BinSet::default()).unwrap();
        assert_eq!(fv.len(), 144);
        assert!(fv.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_active_channel_fills_one_block() {
        let n = 12_000;
        let tone: Vec<f32> = cosine(10.0, 400.0, n).iter().map(|&x| x as f32).collect();
        let mut channels = vec![vec![0.0f32; n]; 16];
        channels[0] = tone;
        let seg = segment_from(channels, 400.0);
        let fv = extract_segment_features(&seg, &BinSet::default()).unwrap();
        assert_eq!(fv.len(), 144);
        // channel 0: PSI bin [8,12) = 6000, stddev = sqrt(1/2)
        // (tolerances allow for the f32 quantization of stored samples)
        assert!((fv.values[2] - 6000.0).abs() < 1e-6 * 6000.0);
        assert!((fv.values[8] - 0.5f64.sqrt()).abs() < 1e-6);
        // all other channels are silent
        for (i, &x) in fv.values.iter().enumerate().skip(9) {
            assert!(x.abs() < 1e-6, "feature {i} = {x}");
        }
    }

    #[test]
    fn extraction_matches_per_channel_spectra() {
        // odd channel count exercises both the paired and the solo path
        let mut rng = Rng::new(44);
        let n = 240;
        let channels: Vec<Vec<f32>> = (0..3)
            .map(|_| (0..n).map(|_| rng.next_uniform(-3.0, 3.0) as f32).collect())
            .collect();
        let seg = segment_from(channels, 400.0);
        let bins = BinSet::default();
        let fv = extract_segment_features(&seg, &bins).unwrap();
        for c in 0..3 {
            let signal: Vec<f64> = seg.channel(c).iter().map(|&s| s as f64).collect();
            let spectrum = magnitude_spectrum(&signal).unwrap();
            for (b, bin) in bins.bins().iter().enumerate() {
                let expected = psi(&spectrum, bin, 400.0).unwrap();
                let got = fv.values[c * 9 + b];
                assert!(
                    (got - expected).abs() <= 1e-9 * expected.max(1.0),
                    "ch {c} bin {b}: {got} vs {expected}"
                );
            }
            let expected_std = stddev(&signal).unwrap();
            assert!((fv.values[c * 9 + 8] - expected_std).abs() <= 1e-12);
        }
    }

    #[test]
    fn channel_permutation_permutes_blocks() {
        let mut rng = Rng::new(12);
        let n = 200;
        let a: Vec<f32> = (0..n).map(|_| rng.next_uniform(-1.0, 1.0) as f32).collect();
        let b: Vec<f32> = (0..n).map(|_| rng.next_uniform(-1.0, 1.0) as f32).collect();
        let bins = BinSet::new(vec![FrequencyBin::new(1.0, 50.0).unwrap()]).unwrap();
        let fv_ab =
            extract_segment_features(&segment_from(vec![a.clone(), b.clone()], 400.0), &bins)
                .unwrap();
        let fv_ba = extract_segment_features(&segment_from(vec![b, a], 400.0), &bins).unwrap();
        // swapping the real/imaginary slots of the shared transform moves
        // the rounding by an ulp or so, hence the tolerance
        let close = |x: &[f64], y: &[f64]| {
            x.iter()
                .zip(y)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * b.abs().max(1.0))
        };
        assert!(close(&fv_ab.values[0..2], &fv_ba.values[2..4]));
        assert!(close(&fv_ab.values[2..4], &fv_ba.values[0..2]));
    }

    #[test]
    fn paper_shaped_clip_yields_twenty_by_144() {
        let clip = EegClip::from_flat(
            "s",
            "p",
            Label::Preictal,
            400.0,
            16,
            240_000,
            vec![0.5f32; 16 * 240_000],
        )
        .unwrap();
        let seq = extract_clip_features(&clip, 30.0, &BinSet::default()).unwrap();
        assert_eq!(seq.seq_len(), 20);
        assert_eq!(seq.feature_dim(), 144);
        assert_eq!(seq.label, Label::Preictal);
    }

    #[test]
    fn clip_exactly_one_window_long_yields_one_vector() {
        let clip = EegClip::from_flat(
            "s",
            "tiny",
            Label::Interictal,
            400.0,
            2,
            400,
            vec![1.0f32; 800],
        )
        .unwrap();
        let seq = extract_clip_features(&clip, 1.0, &BinSet::default()).unwrap();
        assert_eq!(seq.seq_len(), 1);
        assert_eq!(seq.feature_dim(), 18);
    }

    #[test]
    fn clip_extraction_composes_segmentwise() {
        let mut rng = Rng::new(33);
        let channels: Vec<Vec<f32>> = (0..3)
            .map(|_| (0..600).map(|_| rng.next_uniform(-2.0, 2.0) as f32).collect())
            .collect();
        let clip = EegClip::new("s", "c", Label::Interictal, 400.0, channels).unwrap();
        let bins = BinSet::default();
        let seq = extract_clip_features(&clip, 0.5, &bins).unwrap();
        let segs = segment_clip(&clip, 0.5).unwrap();
        assert_eq!(seq.seq_len(), segs.len());
        for (v, s) in seq.vectors.iter().zip(&segs) {
            let direct = extract_segment_features(s, &bins).unwrap();
            assert_eq!(v, &direct);
        }
    }

    fn toy_sequences(rng: &mut Rng, n: usize, dim: usize, t: usize) -> Vec<FeatureSequence> {
        (0..n)
            .map(|i| {
                let vectors = (0..t)
                    .map(|_| FeatureVector {
                        values: (0..dim).map(|_| rng.next_uniform(-5.0, 5.0)).collect(),
                    })
                    .collect();
                FeatureSequence::new(format!("clip{i}"), Label::Interictal, vectors).unwrap()
            })
            .collect()
    }

    #[test]
    fn self_normalization_has_zero_mean_unit_variance() {
        let mut rng = Rng::new(8);
        let train = toy_sequences(&mut rng, 10, 6, 4);
        let (normed, stats) = normalize_features(&train, &train).unwrap();
        assert_eq!(stats.dim(), 6);
        let count = (10 * 4) as f64;
        for d in 0..6 {
            let values: Vec<f64> = normed
                .iter()
                .flat_map(|s| s.vectors.iter().map(move |v| v.values[d]))
                .collect();
            let mean = values.iter().sum::<f64>() / count;
            let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / count;
            assert!(mean.abs() < 1e-9, "mean {mean}");
            assert!((var - 1.0).abs() < 1e-9, "var {var}");
        }
    }

    #[test]
    fn constant_feature_maps_to_zero() {
        let vectors = |x: f64| FeatureVector {
            values: vec![x, 7.5],
        };
        let train = vec![
            FeatureSequence::new("a", Label::Preictal, vec![vectors(1.0), vectors(2.0)]).unwrap(),
            FeatureSequence::new("b", Label::Interictal, vec![vectors(3.0), vectors(4.0)]).unwrap(),
        ];
        let (normed, stats) = normalize_features(&train, &train).unwrap();
        assert_eq!(stats.scale[1], 1.0);
        for seq in &normed {
            for v in &seq.vectors {
                assert_eq!(v.values[1], 0.0);
            }
        }
    }

    #[test]
    fn test_set_never_enters_statistics() {
        let mut rng = Rng::new(21);
        let train = toy_sequences(&mut rng, 5, 3, 2);
        let mut test = toy_sequences(&mut rng, 5, 3, 2);
        // give the test set a wildly different scale
        for seq in &mut test {
            for v in &mut seq.vectors {
                for x in &mut v.values {
                    *x *= 1000.0;
                }
            }
        }
        let (_, stats_with_test) = normalize_features(&train, &test).unwrap();
        let stats_alone = feature_stats(&train).unwrap();
        assert_eq!(stats_with_test, stats_alone);
    }

    #[test]
    fn feature_csv_round_trips() {
        let mut rng = Rng::new(55);
        let seqs: Vec<FeatureSequence> = (0..3)
            .map(|i| {
                let vectors = (0..4)
                    .map(|_| FeatureVector {
                        values: (0..6).map(|_| rng.next_uniform(-1e4, 1e4)).collect(),
                    })
                    .collect();
                let label = if i == 0 { Label::Preictal } else { Label::Interictal };
                FeatureSequence::new(format!("clip{i}"), label, vectors).unwrap()
            })
            .collect();
        let dir = tempdir().unwrap();
        let path = dir.path().join("features.csv");
        write_feature_csv(&path, &seqs, 2, 2).unwrap();

        let text = fs::read_to_string(&path).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(
            header,
            "clip_id,window_index,label,ch0_psi0,ch0_psi1,ch0_std,ch1_psi0,ch1_psi1,ch1_std"
        );
        assert_eq!(text.lines().count(), 1 + 3 * 4);

        let back = read_feature_csv(&path).unwrap();
        assert_eq!(back, seqs);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn scaling_scales_psi_and_stddev(
            seed in 0u64..500,
            alpha in 0.1f64..10.0,
        ) {
            let mut rng = Rng::new(seed);
            let n = 128;
            let signal: Vec<f64> = (0..n).map(|_| rng.next_uniform(-1.0, 1.0)).collect();
            let scaled: Vec<f64> = signal.iter().map(|&x| alpha * x).collect();
            let bin = FrequencyBin::new(1.0, 40.0).unwrap();
            let p1 = psi(&magnitude_spectrum(&signal).unwrap(), &bin, 100.0).unwrap();
            let p2 = psi(&magnitude_spectrum(&scaled).unwrap(), &bin, 100.0).unwrap();
            prop_assert!((p2 - alpha * p1).abs() <= 1e-9 * (alpha * p1).abs().max(1e-12));
            let s1 = stddev(&signal).unwrap();
            let s2 = stddev(&scaled).unwrap();
            prop_assert!((s2 - alpha * s1).abs() <= 1e-9 * (alpha * s1).abs().max(1e-12));
        }

        #[test]
        fn stddev_is_shift_invariant(seed in 0u64..500, shift in -100.0f64..100.0) {
            let mut rng = Rng::new(seed);
            let signal: Vec<f64> = (0..64).map(|_| rng.next_uniform(-1.0, 1.0)).collect();
            let shifted: Vec<f64> = signal.iter().map(|&x| x + shift).collect();
            let a = stddev(&signal).unwrap();
            let b = stddev(&shifted).unwrap();
            prop_assert!((a - b).abs() <= 1e-9);
        }

        #[test]
        fn feature_vector_length_follows_shape_law(
            channels in 1usize..6,
            n_bins in 1usize..9,
        ) {
            let edges: Vec<f64> = (0..=n_bins).map(|i| 1.0 + 4.0 * i as f64).collect();
            let bins = BinSet::new(
                edges.windows(2).map(|e| FrequencyBin::new(e[0], e[1]).unwrap()).collect(),
            ).unwrap();
            let seg = segment_from(vec![vec![1.0f32; 100]; channels], 100.0);
            let fv = extract_segment_features(&seg, &bins).unwrap();
            prop_assert_eq!(fv.len(), channels * (n_bins + 1));
        }
    }
}
