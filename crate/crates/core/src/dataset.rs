//! Clip data model, the on-disk clip format, manifests, windowing, and the
//! shuffled train/test split.
//!
//! Clip files are binary, little-endian:
//!
//! ```text
//! magic "EEGC" (4) | version u16 = 1 | channel_count u16 |
//! samples_per_channel u64 | sampling_rate_hz f32 | reserved [0u8; 4] |
//! payload: channel-major f32 samples (channel 0 complete, then channel 1, ...)
//! ```
//!
//! The header is exactly 24 bytes. Labels are not stored in clip files; they
//! live in the manifest, a UTF-8 text file with one `relative/path<TAB>label`
//! line per clip (`label` is `preictal` or `interictal`, lines starting with
//! `#` are ignored).

use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::rng::Rng;

pub const CLIP_MAGIC: [u8; 4] = *b"EEGC";
pub const CLIP_FORMAT_VERSION: u16 = 1;
pub const CLIP_HEADER_LEN: usize = 24;

/// Class of a recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Preictal,
    Interictal,
    Unknown,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Preictal => "preictal",
            Label::Interictal => "interictal",
            Label::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "preictal" => Some(Label::Preictal),
            "interictal" => Some(Label::Interictal),
            "unknown" => Some(Label::Unknown),
            _ => None,
        }
    }

    /// Class index used by the classifier: interictal = 0, preictal = 1
    /// (preictal is the positive class).
    pub fn class_index(self) -> Result<usize> {
        match self {
            Label::Interictal => Ok(0),
            Label::Preictal => Ok(1),
            Label::Unknown => Err(Error::InvalidArgument(
                "unknown label has no class index".into(),
            )),
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Preictal
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One labeled multi-channel recording, the unit of classification.
///
/// Samples are stored channel-major in a single contiguous buffer, matching
/// the file payload, so writes and reads round-trip bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct EegClip {
    pub subject_id: String,
    pub clip_id: String,
    pub label: Label,
    sampling_rate_hz: f32,
    channels: usize,
    samples_per_channel: usize,
    samples: Vec<f32>,
}

impl EegClip {
    pub fn new(
        subject_id: impl Into<String>,
        clip_id: impl Into<String>,
        label: Label,
        sampling_rate_hz: f32,
        channels: Vec<Vec<f32>>,
    ) -> Result<EegClip> {
        let channel_count = channels.len();
        let samples_per_channel = channels.first().map_or(0, Vec::len);
        for (c, ch) in channels.iter().enumerate() {
            if ch.len() != samples_per_channel {
                return Err(Error::InvalidClip(format!(
                    "channel {c} has {} samples, expected {samples_per_channel}",
                    ch.len()
                )));
            }
        }
        let mut samples = Vec::with_capacity(channel_count * samples_per_channel);
        for ch in &channels {
            samples.extend_from_slice(ch);
        }
        EegClip::from_flat(
            subject_id,
            clip_id,
            label,
            sampling_rate_hz,
            channel_count,
            samples_per_channel,
            samples,
        )
    }

    /// Builds a clip from an already channel-major flat buffer.
    pub fn from_flat(
        subject_id: impl Into<String>,
        clip_id: impl Into<String>,
        label: Label,
        sampling_rate_hz: f32,
        channels: usize,
        samples_per_channel: usize,
        samples: Vec<f32>,
    ) -> Result<EegClip> {
        if channels == 0 {
            return Err(Error::InvalidClip("clip has zero channels".into()));
        }
        if channels > u16::MAX as usize {
            return Err(Error::InvalidClip(format!(
                "{channels} channels exceeds the format limit of {}",
                u16::MAX
            )));
        }
        if samples_per_channel == 0 {
            return Err(Error::InvalidClip("clip has zero samples".into()));
        }
        if samples.len() != channels * samples_per_channel {
            return Err(Error::InvalidClip(format!(
                "flat buffer holds {} samples, expected {channels} x {samples_per_channel}",
                samples.len()
            )));
        }
        if !(sampling_rate_hz.is_finite() && sampling_rate_hz > 0.0) {
            return Err(Error::InvalidClip(format!(
                "sampling rate must be positive, got {sampling_rate_hz}"
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("clip sample at flat index {i}")));
        }
        Ok(EegClip {
            subject_id: subject_id.into(),
            clip_id: clip_id.into(),
            label,
            sampling_rate_hz,
            channels,
            samples_per_channel,
            samples,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples_per_channel(&self) -> usize {
        self.samples_per_channel
    }

    pub fn sampling_rate_hz(&self) -> f32 {
        self.sampling_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.samples_per_channel as f64 / self.sampling_rate_hz as f64
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let start = c * self.samples_per_channel;
        &self.samples[start..start + self.samples_per_channel]
    }

    /// Flat channel-major sample buffer, exactly the file payload.
    pub fn flat_samples(&self) -> &[f32] {
        &self.samples
    }
}

/// One 30-second (by default) window cut from a clip.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub clip_id: String,
    pub window_index: usize,
    sampling_rate_hz: f32,
    channels: usize,
    window_len: usize,
    samples: Vec<f32>,
}

impl Segment {
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn sampling_rate_hz(&self) -> f32 {
        self.sampling_rate_hz
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let start = c * self.window_len;
        &self.samples[start..start + self.window_len]
    }
}

/// Cuts a clip into contiguous, non-overlapping windows in temporal order.
///
/// The window length is `round(window_seconds * sampling_rate_hz)` samples.
/// Trailing samples shorter than one window are discarded so every window
/// feeds the feature extractor the same amount of signal.
pub fn segment_clip(clip: &EegClip, window_seconds: f64) -> Result<Vec<Segment>> {
    if !(window_seconds.is_finite() && window_seconds > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "window_seconds must be positive, got {window_seconds}"
        )));
    }
    let window_len = (window_seconds * clip.sampling_rate_hz as f64).round() as usize;
    if window_len == 0 {
        return Err(Error::InvalidArgument(
            "window is shorter than one sample".into(),
        ));
    }
    if window_len > clip.samples_per_channel {
        return Err(Error::WindowTooLong {
            window_len,
            samples_per_channel: clip.samples_per_channel,
        });
    }
    let n_windows = clip.samples_per_channel / window_len;
    let mut segments = Vec::with_capacity(n_windows);
    for w in 0..n_windows {
        let mut samples = Vec::with_capacity(clip.channels * window_len);
        for c in 0..clip.channels {
            let ch = clip.channel(c);
            samples.extend_from_slice(&ch[w * window_len..(w + 1) * window_len]);
        }
        segments.push(Segment {
            clip_id: clip.clip_id.clone(),
            window_index: w,
            sampling_rate_hz: clip.sampling_rate_hz,
            channels: clip.channels,
            window_len,
            samples,
        });
    }
    Ok(segments)
}

/// Writes a clip in the binary format described at module level.
pub fn write_clip(clip: &EegClip, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(&CLIP_MAGIC).map_err(io_err)?;
    w.write_all(&CLIP_FORMAT_VERSION.to_le_bytes())
        .map_err(io_err)?;
    w.write_all(&(clip.channels as u16).to_le_bytes())
        .map_err(io_err)?;
    w.write_all(&(clip.samples_per_channel as u64).to_le_bytes())
        .map_err(io_err)?;
    w.write_all(&clip.sampling_rate_hz.to_le_bytes())
        .map_err(io_err)?;
    w.write_all(&[0u8; 4]).map_err(io_err)?;
    let mut payload = Vec::with_capacity(clip.samples.len() * 4);
    for &s in &clip.samples {
        payload.extend_from_slice(&s.to_le_bytes());
    }
    w.write_all(&payload).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Reads a clip written by [`write_clip`].
///
/// The clip id is taken from the file stem; the label is `Unknown` because
/// labels live in the manifest, not in clip files.
pub fn read_clip(path: &Path) -> Result<EegClip> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let file_len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let mut r = BufReader::new(file);

    let mut header = [0u8; CLIP_HEADER_LEN];
    if file_len < CLIP_HEADER_LEN as u64 {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: CLIP_HEADER_LEN as u64,
            found: file_len,
        });
    }
    r.read_exact(&mut header).map_err(|e| Error::io(path, e))?;

    let magic: [u8; 4] = header[0..4].try_into().unwrap();
    if magic != CLIP_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: CLIP_MAGIC,
            found: magic,
        });
    }
    let version = u16::from_le_bytes(header[4..6].try_into().unwrap());
    if version != CLIP_FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            path: path.to_path_buf(),
            found: version,
            supported: CLIP_FORMAT_VERSION,
        });
    }
    let channels = u16::from_le_bytes(header[6..8].try_into().unwrap()) as usize;
    let samples_per_channel = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let sampling_rate_hz = f32::from_le_bytes(header[16..20].try_into().unwrap());
    // header[20..24] is reserved

    if channels == 0 {
        return Err(Error::InvalidClip(format!(
            "{}: header declares zero channels",
            path.display()
        )));
    }
    if samples_per_channel == 0 {
        return Err(Error::InvalidClip(format!(
            "{}: header declares zero samples",
            path.display()
        )));
    }

    let payload_len = channels as u128 * samples_per_channel as u128 * 4;
    let available = file_len as u128 - CLIP_HEADER_LEN as u128;
    if available < payload_len {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: payload_len as u64,
            found: available as u64,
        });
    }

    let total = channels * samples_per_channel as usize;
    let mut payload = vec![0u8; total * 4];
    r.read_exact(&mut payload).map_err(|e| Error::io(path, e))?;
    let samples: Vec<f32> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();

    let clip_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    EegClip::from_flat(
        "",
        clip_id,
        Label::Unknown,
        sampling_rate_hz,
        channels,
        samples_per_channel as usize,
        samples,
    )
}

/// One manifest line: a clip path (relative to the manifest's directory) and
/// its label.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Label,
}

/// Ordered list of labeled clips.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Builds a manifest in memory. Paths are validated lazily, when clips
    /// are resolved and read; labels must not be `Unknown`.
    pub fn new(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Result<Manifest> {
        for e in &entries {
            if e.label == Label::Unknown {
                return Err(Error::InvalidArgument(format!(
                    "manifest entry {} has an unknown label",
                    e.path.display()
                )));
            }
        }
        Ok(Manifest {
            root: root.into(),
            entries,
        })
    }

    /// Loads and validates a manifest file; every listed clip must exist.
    pub fn load(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().unwrap_or_else(|| Path::new("")).to_path_buf();
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (rel, label_str) = match (fields.next(), fields.next(), fields.next()) {
                (Some(p), Some(l), None) => (p, l),
                _ => {
                    return Err(Error::Manifest {
                        path: path.to_path_buf(),
                        msg: format!("line {}: expected `path<TAB>label`", lineno + 1),
                    })
                }
            };
            let label = match Label::parse(label_str.trim()) {
                Some(Label::Unknown) | None => {
                    return Err(Error::Manifest {
                        path: path.to_path_buf(),
                        msg: format!(
                            "line {}: label must be `preictal` or `interictal`, got `{label_str}`",
                            lineno + 1
                        ),
                    })
                }
                Some(l) => l,
            };
            let clip_path = root.join(rel);
            if !clip_path.is_file() {
                return Err(Error::Manifest {
                    path: path.to_path_buf(),
                    msg: format!("line {}: clip {} not found", lineno + 1, clip_path.display()),
                });
            }
            entries.push(ManifestEntry {
                path: PathBuf::from(rel),
                label,
            });
        }
        Ok(Manifest { root, entries })
    }

    /// Saves the manifest, rewriting entry paths so they resolve from the
    /// file's own directory (clips are not copied).
    pub fn save(&self, path: &Path) -> Result<()> {
        let target_root = path.parent().unwrap_or_else(|| Path::new(""));
        let prefix = relative_dir_path(target_root, &self.root);
        let mut out = String::new();
        for e in &self.entries {
            let rebased = match &prefix {
                Some(p) => p.join(&e.path),
                None => e.path.clone(),
            };
            out.push_str(&format!("{}\t{}\n", rebased.display(), e.label));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Absolute path of the clip at `index`.
    pub fn resolve(&self, index: usize) -> PathBuf {
        self.root.join(&self.entries[index].path)
    }

    /// Reads the clip at `index` and stamps it with the manifest's label.
    pub fn read_entry(&self, index: usize) -> Result<EegClip> {
        let mut clip = read_clip(&self.resolve(index))?;
        clip.label = self.entries[index].label;
        Ok(clip)
    }

    /// Manifest restricted to the given entry indices, rooted at the same
    /// directory.
    pub fn subset(&self, indices: &[usize]) -> Manifest {
        Manifest {
            root: self.root.clone(),
            entries: indices.iter().map(|&i| self.entries[i].clone()).collect(),
        }
    }
}

/// Relative path leading from `from` to `to`, e.g. `../data`. None when
/// either directory cannot be canonicalized (then callers keep paths as
/// they are) or when the directories are the same.
fn relative_dir_path(from: &Path, to: &Path) -> Option<PathBuf> {
    let from = from.canonicalize().ok()?;
    let to = to.canonicalize().ok()?;
    if from == to {
        return None;
    }
    let from_parts: Vec<_> = from.components().collect();
    let to_parts: Vec<_> = to.components().collect();
    let common = from_parts
        .iter()
        .zip(&to_parts)
        .take_while(|(a, b)| a == b)
        .count();
    let mut rel = PathBuf::new();
    for _ in common..from_parts.len() {
        rel.push("..");
    }
    for part in &to_parts[common..] {
        rel.push(part);
    }
    Some(rel)
}

/// A clip-level train/test partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Shuffles manifest indices and takes the first `round(train_fraction * N)`
/// as the training set.
///
/// The shuffle is a Fisher-Yates pass driven by xoshiro256++ seeded with
/// `seed` (see [`crate::rng`]), so identical inputs reproduce identical
/// splits anywhere. The split is at clip granularity: all windows of a clip
/// end up on the same side.
pub fn split_dataset(
    manifest: &Manifest,
    train_fraction: f64,
    seed: u64,
) -> Result<SplitIndices> {
    if manifest.is_empty() {
        return Err(Error::EmptyInput("manifest has no entries"));
    }
    if !(train_fraction.is_finite() && 0.0 < train_fraction && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = manifest.len();
    let n_train = (train_fraction * n as f64).round() as usize;
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = Rng::new(seed);
    rng.shuffle(&mut indices);
    let test = indices.split_off(n_train);
    Ok(SplitIndices {
        train: indices,
        test,
        seed,
    })
}
