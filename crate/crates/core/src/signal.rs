//! Gaze signals, resampling, windowing and the sine scaling that maps
//! degrees of visual angle onto `[-1, 1]`.
//!
//! Gaze positions are kept in degrees everywhere. The only place radians
//! appear is inside [`sin_scale_deg`] and [`arcsin_unscale`]. Invalid samples
//! (blinks, track loss) are carried by an explicit validity mask; their stored
//! coordinate is `NaN` so that accidental use is loud rather than silent.

use crate::error::{Error, Result};

/// Physiological bound on gaze angle relative to the primary position.
pub const MAX_ANGLE_DEG: f64 = 90.0;

/// Default window length in samples consumed by the autoencoder.
pub const DEFAULT_WINDOW_LEN: usize = 64;

/// Values this far outside `[-1, 1]` are clamped by [`arcsin_unscale`]
/// instead of being rejected.
pub const UNSCALE_CLAMP_SLACK: f64 = 1e-9;

const SPACING_REL_TOL: f64 = 1e-6;

/// A recording of horizontal/vertical gaze positions.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeSignal {
    timestamps: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    valid: Vec<bool>,
    sample_rate: f64,
}

impl GazeSignal {
    /// Builds a signal from parallel columns.
    ///
    /// A sample is valid when its mask entry is set and both coordinates are
    /// finite. Timestamps are in milliseconds and must be strictly
    /// increasing with spacing `1000 / sample_rate`.
    pub fn new(
        timestamps: Vec<f64>,
        x: Vec<f64>,
        y: Vec<f64>,
        valid: Vec<bool>,
        sample_rate: f64,
    ) -> Result<Self> {
        let n = timestamps.len();
        if x.len() != n || y.len() != n || valid.len() != n {
            return Err(Error::shape(
                "gaze signal columns",
                &[n, n, n],
                &[x.len(), y.len(), valid.len()],
            ));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::domain(format!("sample rate must be positive, got {sample_rate}")));
        }
        let period = 1000.0 / sample_rate;
        for (i, w) in timestamps.windows(2).enumerate() {
            let dt = w[1] - w[0];
            if !(dt > 0.0) {
                return Err(Error::domain(format!(
                    "timestamps not strictly increasing at index {}",
                    i + 1
                )));
            }
            if ((dt - period) / period).abs() > SPACING_REL_TOL {
                return Err(Error::domain(format!(
                    "timestamp spacing {dt} ms at index {} inconsistent with {sample_rate} Hz",
                    i + 1
                )));
            }
        }
        let mut x = x;
        let mut y = y;
        let mut valid = valid;
        for i in 0..n {
            let ok = valid[i] && x[i].is_finite() && y[i].is_finite();
            if ok {
                for (v, what) in [(x[i], "x"), (y[i], "y")] {
                    if v.abs() > MAX_ANGLE_DEG {
                        return Err(Error::Range {
                            what: if what == "x" { "gaze x (deg)" } else { "gaze y (deg)" },
                            value: v,
                            min: -MAX_ANGLE_DEG,
                            max: MAX_ANGLE_DEG,
                        });
                    }
                }
            } else {
                x[i] = f64::NAN;
                y[i] = f64::NAN;
            }
            valid[i] = ok;
        }
        Ok(Self {
            timestamps,
            x,
            y,
            valid,
            sample_rate,
        })
    }

    /// Builds a signal whose validity is inferred from finiteness.
    pub fn from_positions(timestamps: Vec<f64>, x: Vec<f64>, y: Vec<f64>, sample_rate: f64) -> Result<Self> {
        let valid = x.iter().zip(&y).map(|(a, b)| a.is_finite() && b.is_finite()).collect();
        Self::new(timestamps, x, y, valid, sample_rate)
    }

    /// Builds a signal with timestamps `start_ms + i * 1000 / sample_rate`.
    pub fn uniform(start_ms: f64, x: Vec<f64>, y: Vec<f64>, sample_rate: f64) -> Result<Self> {
        let period = 1000.0 / sample_rate;
        let timestamps = (0..x.len()).map(|i| start_ms + i as f64 * period).collect();
        Self::from_positions(timestamps, x, y, sample_rate)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    /// Horizontal positions in degrees; `NaN` where invalid.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Vertical positions in degrees; `NaN` where invalid.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.valid[i]
    }

    /// The `i`-th sample as `(x, y)` if it is valid.
    pub fn position(&self, i: usize) -> Option<(f64, f64)> {
        self.valid[i].then(|| (self.x[i], self.y[i]))
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }

    /// Same samples with every timestamp shifted by `offset_ms`.
    pub fn translated(&self, offset_ms: f64) -> Self {
        let mut out = self.clone();
        out.timestamps.iter_mut().for_each(|t| *t += offset_ms);
        out
    }

    /// Contiguous sub-range of samples.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            timestamps: self.timestamps[range.clone()].to_vec(),
            x: self.x[range.clone()].to_vec(),
            y: self.y[range.clone()].to_vec(),
            valid: self.valid[range].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Boxcar-averages groups of `factor` consecutive samples.
///
/// Output sample `k` is the mean of input samples `k*factor .. (k+1)*factor`
/// and carries the first timestamp of its group. A group with any invalid
/// member yields an invalid sample. Trailing samples that do not fill a group
/// are dropped.
pub fn downsample(signal: &GazeSignal, factor: usize) -> Result<GazeSignal> {
    if factor == 0 {
        return Err(Error::domain("downsample factor must be at least 1"));
    }
    if signal.is_empty() {
        return Err(Error::domain("cannot downsample an empty signal"));
    }
    if signal.len() < factor {
        return Err(Error::domain(format!(
            "signal of {} samples shorter than downsample factor {factor}",
            signal.len()
        )));
    }
    let out_len = signal.len() / factor;
    let mut timestamps = Vec::with_capacity(out_len);
    let mut x = Vec::with_capacity(out_len);
    let mut y = Vec::with_capacity(out_len);
    let mut valid = Vec::with_capacity(out_len);
    for k in 0..out_len {
        let group = k * factor..(k + 1) * factor;
        timestamps.push(signal.timestamps[group.start]);
        if signal.valid[group.clone()].iter().all(|v| *v) {
            let inv = 1.0 / factor as f64;
            x.push(signal.x[group.clone()].iter().sum::<f64>() * inv);
            y.push(signal.y[group].iter().sum::<f64>() * inv);
            valid.push(true);
        } else {
            x.push(f64::NAN);
            y.push(f64::NAN);
            valid.push(false);
        }
    }
    GazeSignal::new(timestamps, x, y, valid, signal.sample_rate / factor as f64)
}

/// Maps an angle in degrees within ±90° to its sine.
pub fn sin_scale_deg(angle_deg: f64) -> Result<f64> {
    if !(angle_deg.abs() <= MAX_ANGLE_DEG) {
        return Err(Error::Range {
            what: "gaze angle (deg)",
            value: angle_deg,
            min: -MAX_ANGLE_DEG,
            max: MAX_ANGLE_DEG,
        });
    }
    Ok(angle_deg.to_radians().sin())
}

/// Inverse of [`sin_scale_deg`]: a sine value back to degrees.
///
/// Values within [`UNSCALE_CLAMP_SLACK`] of the interval are clamped.
pub fn arcsin_unscale(value: f64) -> Result<f64> {
    if !(value.abs() <= 1.0 + UNSCALE_CLAMP_SLACK) {
        return Err(Error::Range {
            what: "sine-scaled value",
            value,
            min: -1.0,
            max: 1.0,
        });
    }
    Ok(value.clamp(-1.0, 1.0).asin().to_degrees())
}

/// A signal in sine-scaled space, one `[sx, sy]` pair per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSignal {
    pub values: Vec<[f64; 2]>,
    pub valid: Vec<bool>,
}

/// Applies [`sin_scale_deg`] to every valid sample; invalid samples stay
/// invalid with a `0.0` placeholder.
pub fn sin_scale(signal: &GazeSignal) -> Result<ScaledSignal> {
    let mut values = Vec::with_capacity(signal.len());
    for i in 0..signal.len() {
        values.push(match signal.position(i) {
            Some((x, y)) => [sin_scale_deg(x)?, sin_scale_deg(y)?],
            None => [0.0, 0.0],
        });
    }
    Ok(ScaledSignal {
        values,
        valid: signal.valid.clone(),
    })
}

/// Where a window was cut from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WindowOrigin {
    pub recording: String,
    pub start: usize,
}

/// A fixed-length segment of a sine-scaled signal.
///
/// `values` is interleaved per sample: `[x0, y0, x1, y1, ...]`, which is the
/// flattened layout the autoencoder consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    values: Vec<f64>,
    valid: Vec<bool>,
    origin: WindowOrigin,
}

impl Window {
    /// Builds a window from interleaved values. Fails when any value lies
    /// outside `[-1, 1]` or the mask length does not match.
    pub fn new(values: Vec<f64>, valid: Vec<bool>, origin: WindowOrigin) -> Result<Self> {
        if values.len() != 2 * valid.len() {
            return Err(Error::shape("window", &[2 * valid.len()], &[values.len()]));
        }
        if let Some(v) = values.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(Error::Range {
                what: "window value",
                value: *v,
                min: -1.0,
                max: 1.0,
            });
        }
        Ok(Self { values, valid, origin })
    }

    pub fn len(&self) -> usize {
        self.valid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valid.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn origin(&self) -> &WindowOrigin {
        &self.origin
    }

    pub fn is_fully_valid(&self) -> bool {
        self.valid.iter().all(|v| *v)
    }

    /// Replaces the values of valid samples; invalid samples keep their
    /// placeholder.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        let mut w = Window::new(values, self.valid.clone(), self.origin.clone())?;
        for (i, ok) in self.valid.iter().enumerate() {
            if !ok {
                w.values[2 * i] = self.values[2 * i];
                w.values[2 * i + 1] = self.values[2 * i + 1];
            }
        }
        Ok(w)
    }
}

/// Everything needed to turn windows back into a full-length signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceLayout {
    pub recording: String,
    pub timestamps: Vec<f64>,
    pub sample_rate: f64,
    pub window_len: usize,
    /// Sine-scaled samples after the last full window.
    pub tail: ScaledSignal,
}

/// An ordered collection of equally shaped windows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowBatch {
    pub windows: Vec<Window>,
    /// Optional per-window subject label.
    pub subjects: Option<Vec<u32>>,
    /// Present when the batch was cut from a single recording.
    pub layout: Option<SourceLayout>,
}

impl WindowBatch {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Concatenates batches, labelling every window with its batch's subject.
    pub fn concat_labeled(parts: impl IntoIterator<Item = (u32, WindowBatch)>) -> Result<Self> {
        let mut windows = Vec::new();
        let mut subjects = Vec::new();
        for (subject, part) in parts {
            subjects.extend(std::iter::repeat(subject).take(part.windows.len()));
            windows.extend(part.windows);
        }
        if let Some(first) = windows.first() {
            let len = first.len();
            if let Some(w) = windows.iter().find(|w| w.len() != len) {
                return Err(Error::shape("window batch", &[len], &[w.len()]));
            }
        }
        Ok(Self {
            windows,
            subjects: Some(subjects),
            layout: None,
        })
    }
}

/// Sine-scales `signal` and cuts it into consecutive non-overlapping windows.
///
/// With `drop_invalid` set, windows containing any invalid sample are left
/// out (training); otherwise they are kept with their mask (evaluation).
/// Signals shorter than one window produce an empty batch.
pub fn window_split(signal: &GazeSignal, recording: &str, window_len: usize, drop_invalid: bool) -> Result<WindowBatch> {
    if window_len == 0 {
        return Err(Error::domain("window length must be positive"));
    }
    let scaled = sin_scale(signal)?;
    let count = signal.len() / window_len;
    let mut windows = Vec::with_capacity(count);
    for k in 0..count {
        let range = k * window_len..(k + 1) * window_len;
        let valid = scaled.valid[range.clone()].to_vec();
        if drop_invalid && valid.iter().any(|v| !v) {
            continue;
        }
        let values = scaled.values[range.clone()].iter().flatten().copied().collect();
        windows.push(Window {
            values,
            valid,
            origin: WindowOrigin {
                recording: recording.to_string(),
                start: range.start,
            },
        });
    }
    let covered = count * window_len;
    let tail = ScaledSignal {
        values: scaled.values[covered..].to_vec(),
        valid: scaled.valid[covered..].to_vec(),
    };
    Ok(WindowBatch {
        windows,
        subjects: None,
        layout: Some(SourceLayout {
            recording: recording.to_string(),
            timestamps: signal.timestamps.clone(),
            sample_rate: signal.sample_rate,
            window_len,
            tail,
        }),
    })
}

/// Result of [`reassemble`].
#[derive(Debug, Clone, PartialEq)]
pub struct Reassembled {
    pub signal: GazeSignal,
    /// Samples copied from the source tail without passing through a window.
    pub passthrough_tail: std::ops::Range<usize>,
}

/// Concatenates windows in origin order and unscales them back to degrees.
///
/// The batch must carry its [`SourceLayout`] and windows covering
/// `0, L, 2L, ...` of a single recording without gaps.
pub fn reassemble(batch: &WindowBatch) -> Result<Reassembled> {
    let layout = batch
        .layout
        .as_ref()
        .ok_or_else(|| Error::domain("window batch has no source layout to reassemble into"))?;
    let mut ordered: Vec<&Window> = batch.windows.iter().collect();
    if let Some(w) = ordered.iter().find(|w| w.origin.recording != layout.recording) {
        return Err(Error::domain(format!(
            "mixed recordings in batch: {} and {}",
            layout.recording, w.origin.recording
        )));
    }
    ordered.sort_by_key(|w| w.origin.start);
    let len = layout.window_len;
    for (k, w) in ordered.iter().enumerate() {
        if w.len() != len {
            return Err(Error::shape("reassembled window", &[len], &[w.len()]));
        }
        if w.origin.start != k * len {
            return Err(Error::domain(format!(
                "gap in window origins: expected start {}, found {}",
                k * len,
                w.origin.start
            )));
        }
    }
    let covered = ordered.len() * len;
    let total = covered + layout.tail.valid.len();
    if total != layout.timestamps.len() {
        return Err(Error::domain(format!(
            "windows cover {covered} samples plus {} tail samples but recording has {}",
            layout.tail.valid.len(),
            layout.timestamps.len()
        )));
    }
    let mut x = Vec::with_capacity(total);
    let mut y = Vec::with_capacity(total);
    let mut valid = Vec::with_capacity(total);
    let samples = ordered
        .iter()
        .flat_map(|w| w.values.chunks_exact(2).zip(w.valid.iter()))
        .map(|(v, ok)| ([v[0], v[1]], *ok))
        .chain(layout.tail.values.iter().copied().zip(layout.tail.valid.iter().copied()));
    for (v, ok) in samples {
        if ok {
            x.push(arcsin_unscale(v[0])?);
            y.push(arcsin_unscale(v[1])?);
        } else {
            x.push(f64::NAN);
            y.push(f64::NAN);
        }
        valid.push(ok);
    }
    let signal = GazeSignal::new(layout.timestamps.clone(), x, y, valid, layout.sample_rate)?;
    Ok(Reassembled {
        signal,
        passthrough_tail: covered..total,
    })
}
