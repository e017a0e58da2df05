use serde::{Deserialize, Serialize};

use super::completion_time_s;
use super::template::TestTemplate;
use crate::error::{InkError, Result};
use crate::geom::Point;
use crate::ink::InkSession;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TmtResult {
    pub completion_time_s: f64,
    pub sequencing_errors: usize,
    pub nodes_visited: usize,
    pub node_count: usize,
    pub completed: bool,
    /// Node ordinals in order of first entry.
    pub visit_order: Vec<u32>,
}

/// Smallest `u` in [0, 1] at which segment `p -> q` is within `r` of `c`.
fn entry_parameter(p: Point, q: Point, c: Point, r: f64) -> Option<f64> {
    let d = q - p;
    let f = p - c;
    let c0 = f.dot(f) - r * r;
    if c0 <= 0.0 {
        return Some(0.0);
    }
    let a = d.dot(d);
    if a == 0.0 {
        return None;
    }
    let b = 2.0 * f.dot(d);
    let disc = b * b - 4.0 * a * c0;
    if disc < 0.0 {
        return None;
    }
    let u = (-b - disc.sqrt()) / (2.0 * a);
    (0.0..=1.0).contains(&u).then_some(u)
}

/// Ordinals of the nodes in the order the ink first enters their circles.
pub fn visit_order(session: &InkSession, template: &TestTemplate) -> Vec<u32> {
    let nodes: Vec<(u32, Point, f64)> = template
        .nodes()
        .into_iter()
        .map(|r| {
            let (c, rad) = r.circle();
            (r.seq.unwrap_or_default(), c, rad)
        })
        .collect();
    let mut visited = vec![false; nodes.len()];
    let mut order = Vec::new();
    for stroke in &session.strokes {
        let pts = stroke.points();
        let segments: Vec<(Point, Point)> =
            if pts.len() == 1 { vec![(pts[0], pts[0])] } else { pts.windows(2).map(|w| (w[0], w[1])).collect() };
        for (p, q) in segments {
            let mut entries: Vec<(f64, usize)> = nodes
                .iter()
                .enumerate()
                .filter(|(i, _)| !visited[*i])
                .filter_map(|(i, &(_, c, r))| entry_parameter(p, q, c, r).map(|u| (u, i)))
                .collect();
            entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for (_, i) in entries {
                visited[i] = true;
                order.push(nodes[i].0);
            }
        }
    }
    order
}

pub fn score_tmt(session: &InkSession, template: &TestTemplate) -> Result<TmtResult> {
    if session.strokes.is_empty() {
        return Err(InkError::NoInk);
    }
    let order = visit_order(session, template);
    let node_count = template.nodes().len();
    let sequencing_errors = order.windows(2).filter(|w| w[1] != w[0] + 1).count();
    Ok(TmtResult {
        completion_time_s: completion_time_s(session),
        sequencing_errors,
        nodes_visited: order.len(),
        node_count,
        completed: order.len() == node_count,
        visit_order: order,
    })
}
