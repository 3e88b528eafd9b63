//! Radiometric frame data model and sequence file formats.
//!
//! Two on-disk representations are supported:
//!
//! * NHTF, a little-endian binary container for raw degC values:
//!   magic `"NHTF"`, version `u16 = 1`, width `u16`, height `u16`,
//!   frame_count `u32`, nominal_rate `f32`, then `frame_count` records of
//!   `[timestamp f64 (seconds), width*height f32 temperatures row-major,
//!   top-left origin]`.
//! * A CSV bundle: a directory holding `index.csv` (columns
//!   `frame,timestamp`) plus one `frame_%06d.csv` per frame, each file
//!   `height` rows of `width` comma-separated decimal degC values.
//!
//! Readers reject rather than repair: every byte stream either parses to a
//! valid sequence or yields exactly one classified error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Sensor plausibility bounds in degC. A value outside means a corrupt frame,
/// not unusual physiology.
pub const TEMP_MIN: f32 = -40.0;
pub const TEMP_MAX: f32 = 150.0;

const MAGIC: &[u8; 4] = b"NHTF";
const VERSION: u16 = 1;

/// One radiometric image: a row-major grid of temperatures in degC with a
/// timestamp in seconds since sequence start.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalFrame {
    width: usize,
    height: usize,
    timestamp: f64,
    temps: Vec<f32>,
}

impl ThermalFrame {
    pub fn new(width: usize, height: usize, timestamp: f64, temps: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || width > u16::MAX as usize || height > u16::MAX as usize {
            return Err(Error::DimensionMismatch(format!(
                "frame dimensions {width}x{height} out of supported range"
            )));
        }
        if temps.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "expected {} temperatures for {width}x{height}, got {}",
                width * height,
                temps.len()
            )));
        }
        if !timestamp.is_finite() {
            return Err(Error::InvalidSequence(format!(
                "non-finite timestamp {timestamp}"
            )));
        }
        for &t in &temps {
            if !t.is_finite() || t < TEMP_MIN || t > TEMP_MAX {
                return Err(Error::OutOfRangeTemp {
                    frame: 0,
                    value: t as f64,
                    lo: TEMP_MIN as f64,
                    hi: TEMP_MAX as f64,
                });
            }
        }
        Ok(Self {
            width,
            height,
            timestamp,
            temps,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn temps(&self) -> &[f32] {
        &self.temps
    }

    /// Temperature at column `x`, row `y`.
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        debug_assert!(x < self.width && y < self.height);
        self.temps[y * self.width + x]
    }
}

/// An ordered run of frames sharing one geometry, with the camera's nominal
/// frame rate. Immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<ThermalFrame>,
    nominal_rate: f32,
}

impl FrameSequence {
    pub fn new(frames: Vec<ThermalFrame>, nominal_rate: f32) -> Result<Self> {
        if !(nominal_rate.is_finite() && nominal_rate > 0.0) {
            return Err(Error::InvalidSequence(format!(
                "nominal_rate must be positive and finite, got {nominal_rate}"
            )));
        }
        if let Some(first) = frames.first() {
            let (w, h) = (first.width, first.height);
            for (i, f) in frames.iter().enumerate() {
                if f.width != w || f.height != h {
                    return Err(Error::DimensionMismatch(format!(
                        "frame {i} is {}x{}, expected {w}x{h}",
                        f.width, f.height
                    )));
                }
                if i > 0 && f.timestamp <= frames[i - 1].timestamp {
                    return Err(Error::NonMonotonicTime {
                        frame: i,
                        prev: frames[i - 1].timestamp,
                        next: f.timestamp,
                    });
                }
            }
        }
        Ok(Self {
            frames,
            nominal_rate,
        })
    }

    pub fn frames(&self) -> &[ThermalFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn nominal_rate(&self) -> f32 {
        self.nominal_rate
    }

    pub fn width(&self) -> usize {
        self.frames.first().map_or(0, |f| f.width)
    }

    pub fn height(&self) -> usize {
        self.frames.first().map_or(0, |f| f.height)
    }
}

/// Reads a frame sequence from an NHTF file, a CSV bundle directory, or the
/// `index.csv` of a bundle.
pub fn read_sequence(path: &Path) -> Result<FrameSequence> {
    if path.is_dir() {
        return read_csv_bundle(path);
    }
    if path.file_name().map_or(false, |n| n == "index.csv") {
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        return read_csv_bundle(dir);
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut magic = [0u8; 4];
    reader
        .read_exact(&mut magic)
        .map_err(|_| Error::BadMagic(path.to_path_buf()))?;
    if &magic != MAGIC {
        return Err(Error::BadMagic(path.to_path_buf()));
    }
    read_nhtf_body(&mut reader, path)
}

fn read_nhtf_body(reader: &mut impl Read, path: &Path) -> Result<FrameSequence> {
    let version = read_u16(reader, path)?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let width = read_u16(reader, path)? as usize;
    let height = read_u16(reader, path)? as usize;
    let frame_count = read_u32(reader, path)? as usize;
    let nominal_rate = f32::from_bits(read_u32(reader, path)?);
    if width == 0 || height == 0 {
        return Err(Error::DimensionMismatch(format!(
            "header declares {width}x{height} frames"
        )));
    }

    let pixels = width * height;
    let mut frames = Vec::with_capacity(frame_count);
    let mut payload = vec![0u8; pixels * 4];
    for i in 0..frame_count {
        let mut ts_bytes = [0u8; 8];
        if reader.read_exact(&mut ts_bytes).is_err() {
            return Err(Error::DimensionMismatch(format!(
                "header promises {frame_count} frames but payload ends at frame {i}"
            )));
        }
        let timestamp = f64::from_le_bytes(ts_bytes);
        if reader.read_exact(&mut payload).is_err() {
            return Err(Error::DimensionMismatch(format!(
                "frame {i} payload shorter than {pixels} temperatures"
            )));
        }
        let mut temps = Vec::with_capacity(pixels);
        for chunk in payload.chunks_exact(4) {
            temps.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]));
        }
        for &t in &temps {
            if !t.is_finite() || t < TEMP_MIN || t > TEMP_MAX {
                return Err(Error::OutOfRangeTemp {
                    frame: i,
                    value: t as f64,
                    lo: TEMP_MIN as f64,
                    hi: TEMP_MAX as f64,
                });
            }
        }
        if let Some(prev) = frames.last() {
            let prev: &ThermalFrame = prev;
            if timestamp <= prev.timestamp {
                return Err(Error::NonMonotonicTime {
                    frame: i,
                    prev: prev.timestamp,
                    next: timestamp,
                });
            }
        }
        frames.push(ThermalFrame {
            width,
            height,
            timestamp,
            temps,
        });
    }
    let mut trailing = [0u8; 1];
    if reader.read_exact(&mut trailing).is_ok() {
        return Err(Error::DimensionMismatch(format!(
            "trailing bytes after the {frame_count} frames promised by the header"
        )));
    }
    if frames.is_empty() {
        return Err(Error::InvalidSequence("file contains zero frames".into()));
    }
    FrameSequence::new(frames, nominal_rate)
}

/// Writes a sequence in the NHTF binary format. Output is byte-identical
/// across repeated writes of the same sequence.
pub fn write_sequence(seq: &FrameSequence, path: &Path) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::InvalidSequence(
            "zero frames is not writable".into(),
        ));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let wr = |w: &mut BufWriter<File>, bytes: &[u8]| -> Result<()> {
        w.write_all(bytes).map_err(|e| Error::io(path, e))
    };
    wr(&mut w, MAGIC)?;
    wr(&mut w, &VERSION.to_le_bytes())?;
    wr(&mut w, &(seq.width() as u16).to_le_bytes())?;
    wr(&mut w, &(seq.height() as u16).to_le_bytes())?;
    wr(&mut w, &(seq.len() as u32).to_le_bytes())?;
    wr(&mut w, &seq.nominal_rate.to_bits().to_le_bytes())?;
    for frame in &seq.frames {
        wr(&mut w, &frame.timestamp.to_le_bytes())?;
        for &t in &frame.temps {
            wr(&mut w, &t.to_bits().to_le_bytes())?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes a sequence as a CSV bundle into `dir` (created if missing).
///
/// The bundle does not carry the nominal rate; readers recover it from the
/// mean timestamp spacing, so `read_csv_bundle(write_csv_bundle(s))` equals
/// `s` only up to that derived rate.
pub fn write_csv_bundle(seq: &FrameSequence, dir: &Path) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::InvalidSequence(
            "zero frames is not writable".into(),
        ));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let index_path = dir.join("index.csv");
    let mut index = String::from("frame,timestamp\n");
    for (i, frame) in seq.frames.iter().enumerate() {
        index.push_str(&format!("{i},{}\n", frame.timestamp));
        let frame_path = dir.join(format!("frame_{i:06}.csv"));
        let mut body = String::with_capacity(frame.temps.len() * 8);
        for row in frame.temps.chunks_exact(frame.width) {
            let mut first = true;
            for &t in row {
                if !first {
                    body.push(',');
                }
                body.push_str(&format!("{t}"));
                first = false;
            }
            body.push('\n');
        }
        std::fs::write(&frame_path, body).map_err(|e| Error::io(&frame_path, e))?;
    }
    std::fs::write(&index_path, index).map_err(|e| Error::io(&index_path, e))
}

fn read_csv_bundle(dir: &Path) -> Result<FrameSequence> {
    let index_path = dir.join("index.csv");
    let text = std::fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "frame,timestamp" => {}
        _ => {
            return Err(Error::BadCsv {
                path: index_path,
                reason: "expected header `frame,timestamp`".into(),
            })
        }
    }
    let mut entries = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(2, ',');
        let bad = |reason: &str| Error::BadCsv {
            path: index_path.clone(),
            reason: format!("line {}: {reason}", lineno + 2),
        };
        let frame: usize = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("bad frame number"))?;
        let timestamp: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("bad timestamp"))?;
        entries.push((frame, timestamp));
    }
    if entries.is_empty() {
        return Err(Error::InvalidSequence("index.csv lists zero frames".into()));
    }

    let mut frames = Vec::with_capacity(entries.len());
    let mut dims: Option<(usize, usize)> = None;
    for (frame_no, timestamp) in &entries {
        let frame_path = dir.join(format!("frame_{frame_no:06}.csv"));
        let body = std::fs::read_to_string(&frame_path).map_err(|e| Error::io(&frame_path, e))?;
        let mut temps = Vec::new();
        let mut width = 0usize;
        let mut height = 0usize;
        for line in body.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let mut row_len = 0usize;
            for cell in line.split(',') {
                let v: f32 = cell.trim().parse().map_err(|_| Error::BadCsv {
                    path: frame_path.clone(),
                    reason: format!("bad temperature value `{}`", cell.trim()),
                })?;
                temps.push(v);
                row_len += 1;
            }
            if height == 0 {
                width = row_len;
            } else if row_len != width {
                return Err(Error::DimensionMismatch(format!(
                    "frame {frame_no}: row {height} has {row_len} values, expected {width}"
                )));
            }
            height += 1;
        }
        match dims {
            None => dims = Some((width, height)),
            Some((w, h)) if (w, h) != (width, height) => {
                return Err(Error::DimensionMismatch(format!(
                    "frame {frame_no} is {width}x{height}, expected {w}x{h}"
                )))
            }
            _ => {}
        }
        let frame = ThermalFrame::new(width, height, *timestamp, temps).map_err(|e| match e {
            Error::OutOfRangeTemp { value, lo, hi, .. } => Error::OutOfRangeTemp {
                frame: *frame_no,
                value,
                lo,
                hi,
            },
            other => other,
        })?;
        frames.push(frame);
    }

    let rate = if frames.len() >= 2 {
        let span = frames.last().unwrap().timestamp - frames[0].timestamp;
        if span <= 0.0 {
            return Err(Error::NonMonotonicTime {
                frame: frames.len() - 1,
                prev: frames[0].timestamp,
                next: frames.last().unwrap().timestamp,
            });
        }
        ((frames.len() - 1) as f64 / span) as f32
    } else {
        1.0
    };
    FrameSequence::new(frames, rate)
}

fn read_u16(reader: &mut impl Read, path: &Path) -> Result<u16> {
    let mut b = [0u8; 2];
    reader.read_exact(&mut b).map_err(|_| {
        Error::DimensionMismatch(format!("truncated header in {}", path.display()))
    })?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32(reader: &mut impl Read, path: &Path) -> Result<u32> {
    let mut b = [0u8; 4];
    reader.read_exact(&mut b).map_err(|_| {
        Error::DimensionMismatch(format!("truncated header in {}", path.display()))
    })?;
    Ok(u32::from_le_bytes(b))
}
