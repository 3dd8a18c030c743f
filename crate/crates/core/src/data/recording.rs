use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{GazeSignal, MAX_ANGLE_DEG};

/// Identity of one recording.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub subject: u32,
    pub session: u32,
    pub task: String,
    /// Trailing filename component after the task, e.g. a privacy level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suffix: Option<String>,
}

impl RecordingMeta {
    pub fn new(subject: u32, session: u32, task: impl Into<String>) -> Self {
        Self {
            subject,
            session,
            task: task.into(),
            suffix: None,
        }
    }

    pub fn with_suffix(&self, suffix: impl Into<String>) -> Self {
        Self {
            suffix: Some(suffix.into()),
            ..self.clone()
        }
    }

    /// Recording round, read from the leading digit of four-digit subject
    /// ids as in GazeBase (`1001` is subject 1 of round 1).
    pub fn round(&self) -> Option<u32> {
        (1000..10000).contains(&self.subject).then_some(self.subject / 1000)
    }

    /// `S_<subject>_S<session>_<task>[_<suffix>].csv`
    pub fn file_name(&self) -> String {
        match &self.suffix {
            Some(s) => format!("S_{}_S{}_{}_{}.csv", self.subject, self.session, self.task, s),
            None => format!("S_{}_S{}_{}.csv", self.subject, self.session, self.task),
        }
    }

    /// Stable identifier without suffix or extension.
    pub fn id(&self) -> String {
        format!("S_{}_S{}_{}", self.subject, self.session, self.task)
    }

    /// Parses a file name of the form produced by [`RecordingMeta::file_name`].
    pub fn parse_file_name(name: &str) -> Option<Self> {
        let stem = name.strip_suffix(".csv").or_else(|| name.strip_suffix(".CSV"))?;
        let mut parts = stem.split('_');
        if parts.next()? != "S" {
            return None;
        }
        let subject = parts.next()?.parse().ok()?;
        let session = parts.next()?.strip_prefix('S')?.parse().ok()?;
        let task = parts.next().filter(|t| !t.is_empty())?.to_string();
        let rest: Vec<&str> = parts.collect();
        let suffix = (!rest.is_empty()).then(|| rest.join("_"));
        Some(Self {
            subject,
            session,
            task,
            suffix,
        })
    }
}

/// A loaded recording and its identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub meta: RecordingMeta,
    pub signal: GazeSignal,
}

/// Result of reading a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCsv {
    pub signal: GazeSignal,
    /// Parsed from the file name when it follows the naming pattern.
    pub meta: Option<RecordingMeta>,
    /// Samples beyond ±90° that were marked invalid.
    pub out_of_range: usize,
}

fn parse_field(s: &str) -> Option<f64> {
    let t = s.trim();
    if t.is_empty() {
        return None;
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a CSV with columns `n` (ms), `x` and `y` (degrees); other columns
/// are ignored.
///
/// Empty or non-numeric positions and positions beyond ±90° become invalid
/// samples. Timestamps must be present and strictly increasing with uniform
/// spacing; the sample rate is derived from the median spacing.
pub fn load_csv(path: &Path) -> Result<LoadedCsv> {
    let bad = |msg: String| Error::format(Some(path), msg);
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => bad(format!("{other:?}")),
        })?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(cn), Some(cx), Some(cy)) = (col("n"), col("x"), col("y")) else {
        let missing: Vec<&str> = ["n", "x", "y"].into_iter().filter(|c| col(c).is_none()).collect();
        return Err(bad(format!(
            "missing required column(s) {missing:?}; found columns {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    };

    let mut ts = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut out_of_range = 0usize;
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(format!("row {}: {e}", row + 2)))?;
        let t = rec
            .get(cn)
            .and_then(parse_field)
            .ok_or_else(|| bad(format!("row {}: missing or non-numeric timestamp", row + 2)))?;
        let x = rec.get(cx).and_then(parse_field);
        let y = rec.get(cy).and_then(parse_field);
        let (x, y) = match (x, y) {
            (Some(x), Some(y)) if x.abs() > MAX_ANGLE_DEG || y.abs() > MAX_ANGLE_DEG => {
                out_of_range += 1;
                (f64::NAN, f64::NAN)
            }
            (Some(x), Some(y)) => (x, y),
            _ => (f64::NAN, f64::NAN),
        };
        ts.push(t);
        xs.push(x);
        ys.push(y);
    }
    if ts.len() < 2 {
        return Err(bad(format!("need at least 2 samples, found {}", ts.len())));
    }
    if let Some(k) = ts.windows(2).position(|w| w[1] <= w[0]) {
        return Err(bad(format!(
            "timestamps not strictly increasing at row {} ({} after {})",
            k + 3,
            ts[k + 1],
            ts[k]
        )));
    }
    if out_of_range > 0 {
        log::warn!("{}: {out_of_range} samples beyond ±{MAX_ANGLE_DEG}° marked invalid", path.display());
    }
    let rate = infer_sample_rate(&ts);
    let signal = GazeSignal::from_positions(ts, xs, ys, rate).map_err(|e| bad(e.to_string()))?;
    let meta = path
        .file_name()
        .and_then(|n| n.to_str())
        .and_then(RecordingMeta::parse_file_name);
    Ok(LoadedCsv {
        signal,
        meta,
        out_of_range,
    })
}

/// Sample rate from the median timestamp spacing; spacing within 0.1 % of
/// 1 ms is taken as exactly 1000 Hz.
fn infer_sample_rate(ts: &[f64]) -> f64 {
    let mut d: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
    d.sort_by(f64::total_cmp);
    let dt = d[d.len() / 2];
    if (dt - 1.0).abs() < 1e-3 {
        1000.0
    } else {
        1000.0 / dt
    }
}

/// Writes `n,x,y` rows; invalid samples leave both positions empty.
pub fn write_csv(path: &Path, signal: &GazeSignal) -> Result<()> {
    use std::io::Write;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "n,x,y").map_err(io)?;
    for k in 0..signal.len() {
        let t = signal.timestamps()[k];
        match signal.position(k) {
            Some((x, y)) => writeln!(w, "{t},{x},{y}"),
            None => writeln!(w, "{t},,"),
        }
        .map_err(io)?;
    }
    w.flush().map_err(io)
}
