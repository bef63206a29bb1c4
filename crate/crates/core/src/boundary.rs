//! Resolves which nodes lie along each annotated hole contour.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::detect::Annotation;
use crate::error::{Error, Result};
use crate::geom::{polygon_contains, polyline_distance, Point};
use crate::raster::CanvasTransform;
use crate::topology::NodeId;

/// Extra pixels added to the sensing radius for the default tolerance.
///
/// Contour pixels are uncovered, so every node is strictly more than
/// `rs_pixels` away from them; a node whose disk actually borders the hole
/// sits between `rs_pixels` and roughly `rs_pixels + √2` from the nearest
/// contour pixel.
pub const DEFAULT_TOLERANCE_MARGIN: f64 = 2.0;

pub fn default_tolerance(rs_pixels: f64) -> f64 {
    rs_pixels + DEFAULT_TOLERANCE_MARGIN
}

/// `true` iff `p` is within `tol` of the closed contour polyline.
pub fn point_test(p: Point, contour: &[Point], tol: f64) -> bool {
    !contour.is_empty() && polyline_distance(p, contour) <= tol
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryResult {
    /// Sorted IDs per annotated hole, in annotation order.
    pub per_hole: Vec<Vec<NodeId>>,
    /// Sorted union of `per_hole`.
    pub union: Vec<NodeId>,
    /// Nodes lying inside a hole polygon deeper than `tol`. A hole holds
    /// no working sensor, so these point at a mismatched annotation.
    pub inside: Vec<NodeId>,
}

/// Applies [`point_test`] to every node against every contour.
pub fn boundary_node_ids(
    annotation: &Annotation,
    positions: &[Point],
    transform: &CanvasTransform,
    tol: f64,
) -> Result<BoundaryResult> {
    if annotation.image_width != transform.width || annotation.image_height != transform.height {
        return Err(Error::AnnotationMismatch(format!(
            "annotation is {}x{} but the canvas is {}x{}",
            annotation.image_width, annotation.image_height, transform.width, transform.height
        )));
    }
    if !(tol >= 0.0) {
        return Err(Error::invalid(format!("tolerance must be non-negative, got {tol}")));
    }
    let pixels = transform.apply_all(positions);
    let mut per_hole = Vec::with_capacity(annotation.shapes.len());
    let mut union = BTreeSet::new();
    let mut inside = BTreeSet::new();
    for shape in &annotation.shapes {
        let ring: Vec<Point> = shape.points.iter().map(|&[x, y]| Point::new(x, y)).collect();
        let mut ids = Vec::new();
        let Some((lo, hi)) = crate::geom::bounding_box(&ring) else {
            per_hole.push(ids);
            continue;
        };
        for (v, &p) in pixels.iter().enumerate() {
            // Outside the tolerance-inflated box nothing can match.
            if p.x < lo.x - tol || p.x > hi.x + tol || p.y < lo.y - tol || p.y > hi.y + tol {
                continue;
            }
            if point_test(p, &ring, tol) {
                ids.push(v);
                union.insert(v);
            } else if polygon_contains(p, &ring) {
                inside.insert(v);
            }
        }
        per_hole.push(ids);
    }
    Ok(BoundaryResult {
        per_hole,
        union: union.into_iter().collect(),
        inside: inside.into_iter().collect(),
    })
}

/// One ID per line, sorted.
pub fn format_id_list(ids: &[NodeId]) -> String {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    sorted.iter().map(|v| format!("{v}\n")).collect()
}

pub fn parse_id_list(text: &str) -> Result<Vec<NodeId>> {
    let mut ids = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        ids.push(
            line.parse()
                .map_err(|_| Error::parse(i + 1, format!("malformed node ID `{line}`")))?,
        );
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}
