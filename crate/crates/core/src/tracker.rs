//! ROI selection and tracking on thermal-gradient maps.
//!
//! Raw thermal images of skin carry few point features; their gradient maps
//! expose the shape of the nose region much better, so the tracker matches a
//! gradient-map template by normalized cross-correlation inside a small
//! search window around the previous position, with parabolic subpixel
//! refinement of the peak.

use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::{FrameSequence, ThermalFrame};
use crate::par;

/// Default small ROI edge, in pixels (nose tip only).
pub const SMALL_ROI_SIZE: usize = 9;
/// Default width expansion of the large ROI relative to the small one.
pub const LARGE_ROI_SCALE_X: f64 = 2.75;
/// Default height expansion of the large ROI relative to the small one.
pub const LARGE_ROI_SCALE_Y: f64 = 1.9;

/// Axis-aligned rectangular region with a subpixel center.
///
/// A pixel at integer coordinates `(px, py)` belongs to the ROI when its
/// center falls inside the half-open rectangle
/// `[cx - w/2, cx + w/2) x [cy - h/2, cy + h/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Roi {
    pub center_x: f64,
    pub center_y: f64,
    pub width: usize,
    pub height: usize,
}

/// Integer pixel rectangle, in frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl Roi {
    pub fn new(center_x: f64, center_y: f64, width: usize, height: usize) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::InvalidRoi(format!(
                "{width}x{height} is too small, a template needs interior gradient (min 3x3)"
            )));
        }
        if !(center_x.is_finite() && center_y.is_finite()) {
            return Err(Error::InvalidRoi("non-finite center".into()));
        }
        Ok(Self {
            center_x,
            center_y,
            width,
            height,
        })
    }

    /// Pixels whose centers fall inside the rectangle, without clamping.
    /// Returns signed bounds since the rect may extend past the frame.
    fn raw_bounds(&self) -> (i64, i64, i64, i64) {
        let x0 = (self.center_x - self.width as f64 / 2.0).ceil() as i64;
        let y0 = (self.center_y - self.height as f64 / 2.0).ceil() as i64;
        (x0, y0, self.width as i64, self.height as i64)
    }

    /// Integer pixel rectangle clamped to a `frame_w x frame_h` frame.
    pub fn pixel_rect(&self, frame_w: usize, frame_h: usize) -> Result<PixelRect> {
        let (x0, y0, w, h) = self.raw_bounds();
        let cx0 = x0.max(0);
        let cy0 = y0.max(0);
        let cx1 = (x0 + w).min(frame_w as i64);
        let cy1 = (y0 + h).min(frame_h as i64);
        if cx1 <= cx0 || cy1 <= cy0 {
            return Err(Error::EmptyRoi);
        }
        Ok(PixelRect {
            x0: cx0 as usize,
            y0: cy0 as usize,
            width: (cx1 - cx0) as usize,
            height: (cy1 - cy0) as usize,
        })
    }

    /// True when the full rectangle lies inside the frame.
    pub fn is_inside(&self, frame_w: usize, frame_h: usize) -> bool {
        let (x0, y0, w, h) = self.raw_bounds();
        x0 >= 0 && y0 >= 0 && x0 + w <= frame_w as i64 && y0 + h <= frame_h as i64
    }

    /// Smallest center shift that brings the rectangle fully inside the frame.
    fn clamped_into(mut self, frame_w: usize, frame_h: usize) -> Result<Self> {
        if self.width > frame_w || self.height > frame_h {
            return Err(Error::InvalidRoi(format!(
                "{}x{} ROI cannot fit a {frame_w}x{frame_h} frame",
                self.width, self.height
            )));
        }
        let lo_x = self.width as f64 / 2.0 - 0.5;
        let hi_x = frame_w as f64 - 0.5 - self.width as f64 / 2.0;
        let lo_y = self.height as f64 / 2.0 - 0.5;
        let hi_y = frame_h as f64 - 0.5 - self.height as f64 / 2.0;
        self.center_x = self.center_x.clamp(lo_x, hi_x);
        self.center_y = self.center_y.clamp(lo_y, hi_y);
        debug_assert!(self.is_inside(frame_w, frame_h));
        Ok(self)
    }
}

/// Per-pixel gradient magnitude of the temperature field, in degC per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMap {
    width: usize,
    height: usize,
    magnitudes: Vec<f32>,
}

impl GradientMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn magnitudes(&self) -> &[f32] {
        &self.magnitudes
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.magnitudes[y * self.width + x]
    }
}

/// Sobel gradient magnitude `sqrt(Gx^2 + Gy^2)` of the temperature grid,
/// scaled to degC per pixel. Border pixels use edge replication.
pub fn gradient_map(frame: &ThermalFrame) -> GradientMap {
    let w = frame.width();
    let h = frame.height();
    let sample = |x: i64, y: i64| -> f64 {
        let xc = x.clamp(0, w as i64 - 1) as usize;
        let yc = y.clamp(0, h as i64 - 1) as usize;
        frame.at(xc, yc) as f64
    };
    let mut magnitudes = Vec::with_capacity(w * h);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let tl = sample(x - 1, y - 1);
            let tc = sample(x, y - 1);
            let tr = sample(x + 1, y - 1);
            let ml = sample(x - 1, y);
            let mr = sample(x + 1, y);
            let bl = sample(x - 1, y + 1);
            let bc = sample(x, y + 1);
            let br = sample(x + 1, y + 1);
            let gx = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
            let gy = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
            // the 3x3 Sobel kernel responds with 8x the per-pixel slope
            magnitudes.push(((gx * gx + gy * gy).sqrt() / 8.0) as f32);
        }
    }
    GradientMap {
        width: w,
        height: h,
        magnitudes,
    }
}

/// Gradient maps for every frame of a sequence; data-parallel per frame.
pub fn gradient_stack(seq: &FrameSequence) -> Vec<GradientMap> {
    let frames = seq.frames();
    par::map_indexed(frames.len(), |i| gradient_map(&frames[i]))
}

/// Expands a seed point into a tracking ROI.
///
/// `scale` multiplies the default 9x9 small ROI per axis; the defaults
/// (`LARGE_ROI_SCALE_X`, `LARGE_ROI_SCALE_Y`) give the 25x17 large ROI.
/// Dimensions round to the nearest odd integer so the ROI centers cleanly on
/// the seed; the rectangle is shifted to fit inside the frame if necessary.
pub fn select_large_roi(frame: &ThermalFrame, seed: (f64, f64), scale: (f64, f64)) -> Result<Roi> {
    let (sx, sy) = seed;
    let (fw, fh) = (frame.width(), frame.height());
    let inside = sx.is_finite()
        && sy.is_finite()
        && sx >= 0.0
        && sy >= 0.0
        && sx <= (fw - 1) as f64
        && sy <= (fh - 1) as f64;
    if !inside {
        return Err(Error::SeedOutOfBounds {
            x: sx,
            y: sy,
            width: fw,
            height: fh,
        });
    }
    if !(scale.0 > 0.0 && scale.1 > 0.0) {
        return Err(Error::InvalidRoi(format!(
            "scale factors must be positive, got {scale:?}"
        )));
    }
    let width = round_to_odd(SMALL_ROI_SIZE as f64 * scale.0);
    let height = round_to_odd(SMALL_ROI_SIZE as f64 * scale.1);
    Roi::new(sx, sy, width, height)?.clamped_into(fw, fh)
}

fn round_to_odd(v: f64) -> usize {
    let odd = 2.0 * ((v - 1.0) / 2.0).round() + 1.0;
    (odd.max(3.0)) as usize
}

/// How the matching template evolves over the sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemplateUpdate {
    /// Template fixed from frame 0. Default; immune to drift.
    Anchor,
    /// Exponential blend toward the matched patch on confident frames.
    Blend { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    /// Search radius per axis, in pixels (Chebyshev metric).
    pub max_step: usize,
    /// Matches scoring below this keep the previous center and are flagged.
    pub min_confidence: f64,
    pub template: TemplateUpdate,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            max_step: 5,
            min_confidence: 0.4,
            template: TemplateUpdate::Anchor,
        }
    }
}

/// Per-frame track of one ROI with NCC confidence in `[-1, 1]`.
///
/// Inter-frame center displacement is bounded by `max_step` per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiTrajectory {
    pub rois: Vec<Roi>,
    pub confidence: Vec<f64>,
    pub low_confidence: Vec<bool>,
}

impl RoiTrajectory {
    pub fn len(&self) -> usize {
        self.rois.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rois.is_empty()
    }
}

/// Tracks `initial` across the sequence by NCC template matching on the
/// gradient maps.
///
/// Sequential in frame order (each step depends on the previous center); the
/// per-frame gradient maps are computed in parallel up front.
pub fn track(seq: &FrameSequence, initial: &Roi, cfg: &TrackerConfig) -> Result<RoiTrajectory> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    if cfg.max_step < 1 {
        return Err(Error::InvalidSpec("max_step must be >= 1".into()));
    }
    let (fw, fh) = (seq.width(), seq.height());
    if !initial.is_inside(fw, fh) {
        return Err(Error::InvalidRoi(format!(
            "initial ROI {initial:?} extends past the {fw}x{fh} frame"
        )));
    }

    let maps = gradient_stack(seq);
    let rect0 = initial.pixel_rect(fw, fh)?;
    // Rigid offset between a candidate integer center and its patch origin;
    // keeps the center -> patch mapping identical for template and candidates.
    let anchor_dx = rect0.x0 as i64 - initial.center_x.round() as i64;
    let anchor_dy = rect0.y0 as i64 - initial.center_y.round() as i64;
    let (tw, th) = (rect0.width, rect0.height);

    let mut template = extract_patch(&maps[0], rect0);
    let mut rois = Vec::with_capacity(seq.len());
    let mut confidence = Vec::with_capacity(seq.len());
    let mut low_confidence = Vec::with_capacity(seq.len());
    rois.push(*initial);
    confidence.push(1.0);
    low_confidence.push(false);

    let radius = cfg.max_step as i64;
    let side = (2 * radius + 1) as usize;

    for map in maps.iter().skip(1) {
        let prev = *rois.last().unwrap();
        let pcx = prev.center_x.round() as i64;
        let pcy = prev.center_y.round() as i64;

        // score every candidate center in the window; NaN marks candidates
        // whose patch would leave the frame
        let mut scores = vec![f64::NAN; side * side];
        let mut best: Option<(i64, i64, f64)> = None;
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                let (mx, my) = (pcx + dx, pcy + dy);
                let x0 = mx + anchor_dx;
                let y0 = my + anchor_dy;
                if x0 < 0 || y0 < 0 || x0 + tw as i64 > fw as i64 || y0 + th as i64 > fh as i64 {
                    continue;
                }
                let rect = PixelRect {
                    x0: x0 as usize,
                    y0: y0 as usize,
                    width: tw,
                    height: th,
                };
                let score = ncc(&template, map, rect);
                scores[((dy + radius) * side as i64 + dx + radius) as usize] = score;
                if best.map_or(true, |(_, _, s)| score > s) {
                    best = Some((dx, dy, score));
                }
            }
        }

        let (mut cx, mut cy, peak) = match best {
            Some((dx, dy, score)) => {
                let grid = |ddx: i64, ddy: i64| -> Option<f64> {
                    if ddx.abs() > radius || ddy.abs() > radius {
                        return None;
                    }
                    let s = scores[((ddy + radius) * side as i64 + ddx + radius) as usize];
                    s.is_finite().then_some(s)
                };
                let ox = parabolic_offset(grid(dx - 1, dy), score, grid(dx + 1, dy));
                let oy = parabolic_offset(grid(dx, dy - 1), score, grid(dx, dy + 1));
                (
                    (pcx + dx) as f64 + ox,
                    (pcy + dy) as f64 + oy,
                    score,
                )
            }
            None => (prev.center_x, prev.center_y, -1.0),
        };

        let low = peak < cfg.min_confidence;
        if low {
            cx = prev.center_x;
            cy = prev.center_y;
        } else {
            // honor the displacement bound even after subpixel refinement
            cx = prev.center_x + (cx - prev.center_x).clamp(-(radius as f64), radius as f64);
            cy = prev.center_y + (cy - prev.center_y).clamp(-(radius as f64), radius as f64);
        }
        let roi = Roi {
            center_x: cx,
            center_y: cy,
            width: prev.width,
            height: prev.height,
        }
        .clamped_into(fw, fh)?;

        if !low {
            if let TemplateUpdate::Blend { alpha } = cfg.template {
                let mx = roi.center_x.round() as i64 + anchor_dx;
                let my = roi.center_y.round() as i64 + anchor_dy;
                if mx >= 0 && my >= 0 && mx + tw as i64 <= fw as i64 && my + th as i64 <= fh as i64
                {
                    let patch = extract_patch(
                        map,
                        PixelRect {
                            x0: mx as usize,
                            y0: my as usize,
                            width: tw,
                            height: th,
                        },
                    );
                    for (t, p) in template.iter_mut().zip(&patch) {
                        *t = (1.0 - alpha) * *t + alpha * p;
                    }
                }
            }
        }

        rois.push(roi);
        confidence.push(peak.clamp(-1.0, 1.0));
        low_confidence.push(low);
    }

    Ok(RoiTrajectory {
        rois,
        confidence,
        low_confidence,
    })
}

fn extract_patch(map: &GradientMap, rect: PixelRect) -> Vec<f64> {
    let mut out = Vec::with_capacity(rect.width * rect.height);
    for y in rect.y0..rect.y0 + rect.height {
        for x in rect.x0..rect.x0 + rect.width {
            out.push(map.at(x, y) as f64);
        }
    }
    out
}

/// Zero-normalized cross-correlation between a template and a same-sized
/// patch of the map. Flat inputs (zero variance on either side) score 0.
fn ncc(template: &[f64], map: &GradientMap, rect: PixelRect) -> f64 {
    let n = template.len() as f64;
    let mut sum_b = 0.0;
    for y in rect.y0..rect.y0 + rect.height {
        for x in rect.x0..rect.x0 + rect.width {
            sum_b += map.at(x, y) as f64;
        }
    }
    let mean_b = sum_b / n;
    let mean_a = template.iter().sum::<f64>() / n;

    let mut num = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    let mut i = 0;
    for y in rect.y0..rect.y0 + rect.height {
        for x in rect.x0..rect.x0 + rect.width {
            let a = template[i] - mean_a;
            let b = map.at(x, y) as f64 - mean_b;
            num += a * b;
            var_a += a * a;
            var_b += b * b;
            i += 1;
        }
    }
    let den = (var_a * var_b).sqrt();
    if den <= 0.0 {
        0.0
    } else {
        (num / den).clamp(-1.0, 1.0)
    }
}

/// 1-D parabolic peak interpolation through three samples; 0 when a neighbor
/// is missing or the fit degenerates. Clamped to half a pixel.
fn parabolic_offset(left: Option<f64>, center: f64, right: Option<f64>) -> f64 {
    match (left, right) {
        (Some(l), Some(r)) => {
            let denom = l - 2.0 * center + r;
            if denom.abs() < 1e-12 {
                0.0
            } else {
                (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
            }
        }
        _ => 0.0,
    }
}

/// Writes a trajectory as CSV with columns
/// `frame,timestamp,cx,cy,w,h,confidence,low_conf_flag`.
pub fn write_trajectory_csv(
    traj: &RoiTrajectory,
    seq: &FrameSequence,
    path: &Path,
) -> Result<()> {
    if traj.len() != seq.len() {
        return Err(Error::LengthMismatch {
            left: traj.len(),
            right: seq.len(),
        });
    }
    let mut out = String::from("frame,timestamp,cx,cy,w,h,confidence,low_conf_flag\n");
    for (i, (roi, frame)) in traj.rois.iter().zip(seq.frames()).enumerate() {
        out.push_str(&format!(
            "{i},{},{},{},{},{},{},{}\n",
            frame.timestamp(),
            roi.center_x,
            roi.center_y,
            roi.width,
            roi.height,
            traj.confidence[i],
            u8::from(traj.low_confidence[i]),
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
