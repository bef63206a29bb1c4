//! Geometric hole detection on a coverage bitmap: interior uncovered
//! components plus Moore-neighbour contours, and the annotation format
//! shared with external detectors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::raster::{components_4, to_pixel, CoverageImage, Pixel};

/// Default minimum hole area in pixels on a 1024² canvas.
pub const DEFAULT_MIN_AREA: usize = 25;

/// Neighbour offsets, clockwise on screen (y down) starting east.
const DIRECTIONS: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];
const WEST: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoleRegion {
    /// Region pixels in raster order.
    pub pixels: Vec<Pixel>,
    /// Outer boundary, closed implicitly (last connects back to first).
    /// Empty until traced.
    pub contour: Vec<Pixel>,
}

impl HoleRegion {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }
}

/// Interior holes: 4-connected uncovered components that touch no border
/// pixel and have at least `min_area` pixels, largest first.
pub fn find_hole_regions(img: &CoverageImage, min_area: usize) -> Vec<HoleRegion> {
    let uncovered: Vec<bool> = img.coverage.iter().map(|&c| !c).collect();
    interior_regions(img.width, img.height, &uncovered, min_area)
}

/// [`find_hole_regions`] on a raw mask (`true` = candidate pixel).
pub fn interior_regions(width: u32, height: u32, mask: &[bool], min_area: usize) -> Vec<HoleRegion> {
    let touches_border = |&(x, y): &Pixel| x == 0 || y == 0 || x + 1 == width || y + 1 == height;
    let mut regions: Vec<HoleRegion> = components_4(width, height, mask)
        .into_iter()
        .filter(|c| c.len() >= min_area.max(1))
        .map(|c| c.into_iter().map(|i| to_pixel(i, width)).collect::<Vec<_>>())
        .filter(|pixels| !pixels.iter().any(touches_border))
        .map(|pixels| HoleRegion {
            pixels,
            contour: Vec::new(),
        })
        .collect();
    // Stable: equal areas keep raster order of their first pixel.
    regions.sort_by(|a, b| b.area().cmp(&a.area()));
    regions
}

/// Moore-neighbour trace of the outer boundary of a 4-connected region.
///
/// Starts at the region's first pixel in raster order (smallest `y`, then
/// smallest `x`) and walks so that the region stays on the right on
/// screen, which is counterclockwise in `(x, y)` coordinates — the
/// shoelace area of the result is positive. Stops when the walk is about
/// to repeat its first move from the start pixel.
pub fn trace_contour(pixels: &[Pixel]) -> Vec<Pixel> {
    let Some(&start) = pixels.iter().min_by_key(|&&(x, y)| (y, x)) else {
        return Vec::new();
    };
    let (min_x, max_x) = minmax(pixels.iter().map(|p| p.0));
    let (min_y, max_y) = minmax(pixels.iter().map(|p| p.1));
    let (w, h) = ((max_x - min_x + 1) as i64, (max_y - min_y + 1) as i64);
    let mut inside = vec![false; (w * h) as usize];
    for &(x, y) in pixels {
        inside[((y - min_y) as i64 * w + (x - min_x) as i64) as usize] = true;
    }
    let member = |x: i64, y: i64| {
        let (lx, ly) = (x - min_x as i64, y - min_y as i64);
        lx >= 0 && ly >= 0 && lx < w && ly < h && inside[(ly * w + lx) as usize]
    };

    let start = (start.0 as i64, start.1 as i64);
    let mut contour = vec![start];
    let mut current = start;
    let mut backtrack = WEST;
    let mut first_move: Option<usize> = None;
    loop {
        let next = (1..=8).map(|k| (backtrack + k) % 8).find(|&d| {
            let (dx, dy) = DIRECTIONS[d];
            member(current.0 + dx, current.1 + dy)
        });
        let Some(d) = next else { break };
        if current == start {
            match first_move {
                Some(f) if f == d => break,
                None => first_move = Some(d),
                _ => {}
            }
        }
        // The last non-member checked becomes the backtrack of the pixel
        // we step onto.
        let prev = (d + 7) % 8;
        let b = (
            current.0 + DIRECTIONS[prev].0,
            current.1 + DIRECTIONS[prev].1,
        );
        current = (current.0 + DIRECTIONS[d].0, current.1 + DIRECTIONS[d].1);
        backtrack = direction_to(current, b);
        if current == start {
            continue;
        }
        contour.push(current);
    }
    contour
        .into_iter()
        .map(|(x, y)| (x as u32, y as u32))
        .collect()
}

fn minmax(values: impl Iterator<Item = u32>) -> (u32, u32) {
    values.fold((u32::MAX, 0), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn direction_to(from: (i64, i64), to: (i64, i64)) -> usize {
    let delta = (to.0 - from.0, to.1 - from.1);
    DIRECTIONS
        .iter()
        .position(|&d| d == delta)
        .expect("backtrack is 8-adjacent")
}

/// Regions plus contours, largest first.
pub fn detect_holes(img: &CoverageImage, min_area: usize) -> Vec<HoleRegion> {
    let mut regions = find_hole_regions(img, min_area);
    for r in &mut regions {
        r.contour = trace_contour(&r.pixels);
    }
    regions
}

/// Polygon annotation in the LabelMe layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Annotation {
    pub image_width: u32,
    pub image_height: u32,
    pub image_path: String,
    pub shapes: Vec<Shape>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub label: String,
    pub shape_type: String,
    pub points: Vec<[f64; 2]>,
    #[serde(default)]
    pub boundary_node_ids: Vec<usize>,
}

impl Shape {
    pub fn hole(contour: &[Pixel]) -> Self {
        Shape {
            label: "hole".into(),
            shape_type: "polygon".into(),
            points: contour.iter().map(|&(x, y)| [x as f64, y as f64]).collect(),
            boundary_node_ids: Vec::new(),
        }
    }
}

impl Annotation {
    pub fn from_holes(holes: &[HoleRegion], width: u32, height: u32, image_path: &str) -> Self {
        Annotation {
            image_width: width,
            image_height: height,
            image_path: image_path.to_string(),
            shapes: holes.iter().map(|h| Shape::hole(&h.contour)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("annotation serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
