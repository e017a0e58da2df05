use serde::{Deserialize, Serialize};

use super::template::{RegionKind, TestTemplate};
use super::{group_points, groups_in};
use crate::error::{InkError, Result};
use crate::geom::{convex_intersection, signed_area, simplify_polygon, BBox, Point};
use crate::ink::InkSession;
use crate::recognize::{detect_corners_path, Label, RecognizedGroup};

/// Intersection vertices closer than this are merged.
const VERTEX_MERGE_MM: f64 = 0.5;
/// Intersection vertices turning less than this are dropped.
const VERTEX_MIN_TURN_DEG: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PentagonResult {
    pub pentagon_count: usize,
    pub two_pentagons: bool,
    pub intersect: bool,
    pub intersection_is_quadrilateral: bool,
    pub intersection_vertices: Vec<Point>,
    pub intersection_area_mm2: f64,
}

/// Overlap of two convex polygons, cleaned of near-duplicate and flat vertices.
pub fn polygon_overlap(a: &[Point], b: &[Point]) -> Vec<Point> {
    let raw = convex_intersection(a, b);
    simplify_polygon(&raw, VERTEX_MERGE_MM, VERTEX_MIN_TURN_DEG.to_radians())
}

pub fn check_pentagon_copy(
    session: &InkSession,
    groups: &[RecognizedGroup],
    template: &TestTemplate,
) -> Result<PentagonResult> {
    if session.strokes.is_empty() {
        return Err(InkError::NoInk);
    }
    let canvas = template.regions_of(RegionKind::Canvas).next().map(|r| r.rect()).unwrap_or(BBox {
        min_x: 0.0,
        min_y: 0.0,
        max_x: template.page.w_mm,
        max_y: template.page.h_mm,
    });
    let pentagons: Vec<Vec<Point>> = groups_in(groups, &canvas)
        .filter(|g| g.label.label == Label::Pentagon)
        .map(|g| detect_corners_path(&group_points(&g.group, session)).points())
        .collect();
    let mut result = PentagonResult {
        pentagon_count: pentagons.len(),
        two_pentagons: pentagons.len() == 2,
        intersect: false,
        intersection_is_quadrilateral: false,
        intersection_vertices: Vec::new(),
        intersection_area_mm2: 0.0,
    };
    if result.two_pentagons {
        let overlap = polygon_overlap(&pentagons[0], &pentagons[1]);
        result.intersection_area_mm2 = signed_area(&overlap).abs();
        result.intersect = overlap.len() >= 3 && result.intersection_area_mm2 > 0.0;
        result.intersection_is_quadrilateral = result.intersect && overlap.len() == 4;
        result.intersection_vertices = overlap;
    }
    Ok(result)
}
