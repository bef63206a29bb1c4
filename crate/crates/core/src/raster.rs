//! Coverage rendering onto a fixed-size bitmap, PNG export with overlays,
//! and colour-based region extraction from externally produced masks.

use std::collections::VecDeque;
use std::path::Path;
use std::str::FromStr;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{bounding_box, Point};

pub const DEFAULT_CANVAS: u32 = 1024;
pub const DEFAULT_MARGIN: u32 = 32;

pub const COVERED: [u8; 3] = [255, 192, 203];
pub const UNCOVERED: [u8; 3] = [255, 255, 255];
pub const NODE_DOT: [u8; 3] = [180, 0, 60];
pub const TRUTH_OVERLAY: [u8; 3] = [255, 0, 0];
pub const DETECTION_OVERLAY: [u8; 3] = [0, 0, 255];

/// Largest per-channel tolerance accepted by [`extract_regions_by_color`].
pub const MAX_COLOR_TOLERANCE: u8 = 8;

const NODE_DOT_RADIUS: f64 = 2.0;

/// Pixel coordinate `(x, y)`; `y` grows downwards.
pub type Pixel = (u32, u32);

/// Isotropic world → pixel mapping. Pixel `(i, j)` has its centre at the
/// continuous coordinate `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanvasTransform {
    pub scale: f64,
    pub offset: Point,
    pub width: u32,
    pub height: u32,
    pub margin: u32,
}

impl CanvasTransform {
    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        Point::new(p.x * self.scale + self.offset.x, p.y * self.scale + self.offset.y)
    }

    pub fn apply_all(&self, positions: &[Point]) -> Vec<Point> {
        positions.iter().map(|&p| self.apply(p)).collect()
    }
}

/// Fits the bounding box of `positions` into the margin-inset canvas,
/// centred, with one scale for both axes. A zero-extent box maps to the
/// canvas centre at scale 1.
pub fn fit_transform(
    positions: &[Point],
    width: u32,
    height: u32,
    margin: u32,
) -> Result<CanvasTransform> {
    let (lo, hi) = bounding_box(positions)
        .ok_or_else(|| Error::invalid("cannot fit a transform to zero positions"))?;
    if width as u64 <= 2 * margin as u64 || height as u64 <= 2 * margin as u64 {
        return Err(Error::invalid(format!(
            "canvas {width}x{height} too small for margin {margin}"
        )));
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid("non-finite position"));
    }
    let (avail_x, avail_y) = ((width - 2 * margin) as f64, (height - 2 * margin) as f64);
    let extent = hi - lo;
    let centre = Point::new(width as f64 / 2.0, height as f64 / 2.0);
    let scale = if extent.x > 0.0 || extent.y > 0.0 {
        let sx = if extent.x > 0.0 { avail_x / extent.x } else { f64::INFINITY };
        let sy = if extent.y > 0.0 { avail_y / extent.y } else { f64::INFINITY };
        sx.min(sy)
    } else {
        1.0
    };
    let mid = (lo + hi) * 0.5;
    Ok(CanvasTransform {
        scale,
        offset: centre - mid * scale,
        width,
        height,
        margin,
    })
}

/// Per-pixel coverage of a rendered layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageImage {
    pub width: u32,
    pub height: u32,
    /// Row-major, `true` = covered.
    pub coverage: Vec<bool>,
    pub transform: CanvasTransform,
    pub rs_pixels: f64,
    /// Node positions in pixel space.
    pub node_pixels: Vec<Point>,
}

impl CoverageImage {
    #[inline]
    pub fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    #[inline]
    pub fn is_covered(&self, x: u32, y: u32) -> bool {
        self.coverage[self.index(x, y)]
    }

    pub fn covered_count(&self) -> usize {
        self.coverage.iter().filter(|&&c| c).count()
    }
}

/// Marks every pixel whose centre lies within `R_S` (in pixels) of a node.
pub fn render_coverage(
    positions: &[Point],
    transform: &CanvasTransform,
    sensing_range: f64,
) -> Result<CoverageImage> {
    if positions.is_empty() {
        return Err(Error::invalid("cannot render zero nodes"));
    }
    let rs = sensing_range * transform.scale;
    if !(rs >= 1.0) {
        return Err(Error::SensingBelowResolution { rs_pixels: rs });
    }
    let (w, h) = (transform.width, transform.height);
    let mut coverage = vec![false; w as usize * h as usize];
    let node_pixels = transform.apply_all(positions);
    let rs2 = rs * rs;
    for p in &node_pixels {
        let Some((x0, x1)) = span(p.x, rs, w) else { continue };
        let Some((y0, y1)) = span(p.y, rs, h) else { continue };
        for y in y0..=y1 {
            let dy = y as f64 - p.y;
            let row = y as usize * w as usize;
            for x in x0..=x1 {
                let dx = x as f64 - p.x;
                if dx * dx + dy * dy <= rs2 {
                    coverage[row + x as usize] = true;
                }
            }
        }
    }
    Ok(CoverageImage {
        width: w,
        height: h,
        coverage,
        transform: *transform,
        rs_pixels: rs,
        node_pixels,
    })
}

/// Pixel index range `[c - r, c + r]` clipped to `0..len`.
fn span(c: f64, r: f64, len: u32) -> Option<(u32, u32)> {
    let lo = (c - r).ceil().max(0.0);
    let hi = (c + r).floor().min(len as f64 - 1.0);
    (lo <= hi).then_some((lo as u32, hi as u32))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlayKind {
    /// Ground-truth holes, painted red.
    Truth,
    /// Detector output, painted blue.
    Detection,
}

impl OverlayKind {
    pub fn color(self) -> [u8; 3] {
        match self {
            OverlayKind::Truth => TRUTH_OVERLAY,
            OverlayKind::Detection => DETECTION_OVERLAY,
        }
    }
}

impl FromStr for OverlayKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "truth" | "ground-truth" | "red" => Ok(OverlayKind::Truth),
            "detection" | "detected" | "blue" => Ok(OverlayKind::Detection),
            _ => Err(Error::UnknownOverlay(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Overlay<'a> {
    pub kind: OverlayKind,
    pub regions: &'a [Vec<Pixel>],
}

/// Paints coverage, node dots and then overlays (last, so overlay pixels
/// keep their exact colour).
pub fn export_image(img: &CoverageImage, overlays: &[Overlay<'_>]) -> RgbImage {
    let mut out = RgbImage::from_fn(img.width, img.height, |x, y| {
        Rgb(if img.is_covered(x, y) { COVERED } else { UNCOVERED })
    });
    let r2 = NODE_DOT_RADIUS * NODE_DOT_RADIUS;
    for p in &img.node_pixels {
        let (Some((x0, x1)), Some((y0, y1))) = (
            span(p.x, NODE_DOT_RADIUS, img.width),
            span(p.y, NODE_DOT_RADIUS, img.height),
        ) else {
            continue;
        };
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (dx, dy) = (x as f64 - p.x, y as f64 - p.y);
                if dx * dx + dy * dy <= r2 {
                    out.put_pixel(x, y, Rgb(NODE_DOT));
                }
            }
        }
    }
    for overlay in overlays {
        let color = Rgb(overlay.kind.color());
        for region in overlay.regions {
            for &(x, y) in region {
                if x < img.width && y < img.height {
                    out.put_pixel(x, y, color);
                }
            }
        }
    }
    out
}

pub fn write_png(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

pub fn read_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    Ok(image::open(path)?.to_rgb8())
}

/// 4-connected components of pixels within `tolerance` (per channel) of
/// `color`. Components are ordered by their first pixel in raster order;
/// pixels within a component are in raster order too.
pub fn extract_regions_by_color(
    img: &RgbImage,
    color: [u8; 3],
    tolerance: u8,
) -> Result<Vec<Vec<Pixel>>> {
    if tolerance > MAX_COLOR_TOLERANCE {
        return Err(Error::invalid(format!(
            "colour tolerance {tolerance} exceeds {MAX_COLOR_TOLERANCE}"
        )));
    }
    let (w, h) = img.dimensions();
    let mask: Vec<bool> = img
        .pixels()
        .map(|p| {
            p.0.iter()
                .zip(color)
                .all(|(&a, b)| a.abs_diff(b) <= tolerance)
        })
        .collect();
    Ok(components_4(w, h, &mask)
        .into_iter()
        .map(|c| c.into_iter().map(|i| to_pixel(i, w)).collect())
        .collect())
}

#[inline]
pub fn to_pixel(index: usize, width: u32) -> Pixel {
    ((index % width as usize) as u32, (index / width as usize) as u32)
}

/// Labels the 4-connected components of `mask` (row-major). Each component
/// is a sorted list of pixel indices; components are ordered by their
/// smallest index.
pub fn components_4(width: u32, height: u32, mask: &[bool]) -> Vec<Vec<usize>> {
    let (w, h) = (width as usize, height as usize);
    assert_eq!(mask.len(), w * h, "mask size does not match dimensions");
    let mut seen = vec![false; mask.len()];
    let mut queue = VecDeque::new();
    let mut out = Vec::new();
    for seed in 0..mask.len() {
        if !mask[seed] || seen[seed] {
            continue;
        }
        seen[seed] = true;
        queue.push_back(seed);
        let mut component = Vec::new();
        while let Some(i) = queue.pop_front() {
            component.push(i);
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        component.sort_unstable();
        out.push(component);
    }
    out
}
