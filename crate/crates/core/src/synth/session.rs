use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::builder::{SessionBuilder, BETWEEN_SYMBOL_PAUSE_US, WITHIN_SYMBOL_PAUSE_US};
use super::shapes::{draw_shape, regular_polygon, ShapePlacement};
use super::stroke::{StrokeTruth, Style};
use crate::battery::{
    builtin_template, registry_lookup, scoring_kind, ClockTime, Region, RegionKind, ScoreKind, TestTemplate,
};
use crate::error::{InkError, Result};
use crate::geom::Point;
use crate::ink::{InkSession, Page, SessionMeta, Source};
use crate::recognize::Label;

/// Knobs of a generated test session. Unset choices are drawn from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionParams {
    pub style: Style,
    pub clock_time: Option<String>,
    pub clock_radius_mm: f64,
    /// Wrong transitions injected into the trail.
    pub trail_errors: usize,
    /// Number of trail nodes; `None` uses the shipped layout.
    pub trail_nodes: Option<usize>,
    pub crossed_targets: Option<Vec<String>>,
    pub crossed_distractors: Option<Vec<String>>,
    pub filled_fields: Option<Vec<String>>,
    /// Extra pen-up pause inserted halfway through the session.
    pub long_pause_us: Option<u64>,
    /// Redraw one clock digit 3 s after it was first drawn.
    pub correction: bool,
}

impl Default for SessionParams {
    fn default() -> Self {
        SessionParams {
            style: Style::default(),
            clock_time: None,
            clock_radius_mm: 40.0,
            trail_errors: 0,
            trail_nodes: None,
            crossed_targets: None,
            crossed_distractors: None,
            filled_fields: None,
            long_pause_us: None,
            correction: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedGroup {
    pub role: String,
    /// Expected recognizer label, when the shape is fully determined.
    pub label: Option<Label>,
    pub stroke_indices: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start_t: u64,
    pub end_t: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionTruth {
    pub stroke: usize,
    pub overdrawn_stroke: usize,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub test_id: String,
    pub seed: u64,
    pub session_id: String,
    pub groups: Vec<ExpectedGroup>,
    pub group_count: usize,
    pub stroke_count: usize,
    pub pauses: Vec<Interval>,
    pub corrections: Vec<CorrectionTruth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock_time: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trail_visit_order: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trail_errors: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossed_targets: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossed_distractors: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filled_fields: Option<Vec<String>>,
    pub strokes: Vec<StrokeTruth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSession {
    pub session: InkSession,
    pub template: TestTemplate,
    pub manifest: SynthManifest,
}

pub fn synth_session_id(test_id: &str, seed: u64) -> String {
    format!("synth-{}-{seed}", test_id.to_ascii_lowercase())
}

struct Draft {
    b: SessionBuilder,
    groups: Vec<ExpectedGroup>,
    pauses: Vec<Interval>,
    corrections: Vec<CorrectionTruth>,
    started: bool,
}

impl Draft {
    /// Moves to the next symbol with the between-symbol pause.
    fn next_symbol(&mut self, to: Point) {
        if self.started {
            self.b.hover(BETWEEN_SYMBOL_PAUSE_US, to);
        }
        self.started = true;
    }

    fn group(&mut self, role: &str, label: Option<Label>, strokes: Vec<usize>) {
        self.groups.push(ExpectedGroup { role: role.to_string(), label, stroke_indices: strokes });
    }

    /// Pen-up pause that replaces the next between-symbol pause; records the
    /// whole in-air gap it creates.
    fn pause(&mut self, duration_us: u64, to: Point) {
        let start = self.b.strokes().last().map_or(self.b.now(), |s| s.end_t);
        self.b.hover(duration_us, to);
        self.pauses.push(Interval { start_t: start, end_t: self.b.now() });
        self.started = false;
    }

    fn shape(&mut self, role: &str, label: Label, at: &ShapePlacement) -> Result<()> {
        let first = super::shapes::shape_paths(label, at)?[0].at(0.0).0;
        self.next_symbol(first);
        let strokes = draw_shape(&mut self.b, label, at)?;
        self.group(role, Some(label), strokes);
        Ok(())
    }
}

/// Seven-segment style glyph strokes in a 3 x 5 mm box anchored at the top-left.
fn digit_glyph(d: u8) -> &'static [(f64, f64)] {
    match d {
        0 => &[(0.0, 0.0), (3.0, 0.0), (3.0, 5.0), (0.0, 5.0), (0.0, 0.0)],
        1 => &[(1.5, 0.0), (1.5, 5.0)],
        2 => &[(0.0, 0.0), (3.0, 0.0), (3.0, 2.5), (0.0, 2.5), (0.0, 5.0), (3.0, 5.0)],
        3 => &[(0.0, 0.0), (3.0, 0.0), (3.0, 2.5), (0.5, 2.5), (3.0, 2.5), (3.0, 5.0), (0.0, 5.0)],
        4 => &[(0.0, 0.0), (0.0, 2.5), (3.0, 2.5), (3.0, 0.0), (3.0, 5.0)],
        5 => &[(3.0, 0.0), (0.0, 0.0), (0.0, 2.5), (3.0, 2.5), (3.0, 5.0), (0.0, 5.0)],
        6 => &[(3.0, 0.0), (0.0, 0.0), (0.0, 5.0), (3.0, 5.0), (3.0, 2.5), (0.0, 2.5)],
        7 => &[(0.0, 0.0), (3.0, 0.0), (3.0, 5.0)],
        8 => &[(0.0, 0.0), (3.0, 0.0), (3.0, 5.0), (0.0, 5.0), (0.0, 0.0), (0.0, 2.5), (3.0, 2.5)],
        _ => &[(3.0, 2.5), (0.0, 2.5), (0.0, 0.0), (3.0, 0.0), (3.0, 5.0), (0.0, 5.0)],
    }
}

/// Strokes of a number written centered on `center`.
fn number_strokes(n: u32, center: Point) -> Vec<Vec<Point>> {
    let digits: Vec<u8> = n.to_string().bytes().map(|b| b - b'0').collect();
    let width = digits.len() as f64 * 3.0 + (digits.len() as f64 - 1.0);
    let x0 = center.x - width / 2.0;
    digits
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let ox = x0 + i as f64 * 4.0;
            digit_glyph(d).iter().map(|&(x, y)| Point::new(ox + x, center.y - 2.5 + y)).collect()
        })
        .collect()
}

fn on_clock(center: Point, radius: f64, angle_deg: f64) -> Point {
    let a = angle_deg.to_radians();
    Point::new(center.x + radius * a.sin(), center.y - radius * a.cos())
}

fn write_strokes(d: &mut Draft, strokes: &[Vec<Point>]) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, s) in strokes.iter().enumerate() {
        if i > 0 {
            d.b.hover(WITHIN_SYMBOL_PAUSE_US, s[0]);
        }
        out.push(d.b.polyline(s)?);
    }
    Ok(out)
}

fn clock_canvas(template: &TestTemplate) -> Result<&Region> {
    template
        .regions_of(RegionKind::Canvas)
        .next()
        .ok_or_else(|| InkError::InvalidTemplate("clock template has no canvas".into()))
}

fn gen_clock(d: &mut Draft, template: &TestTemplate, params: &SessionParams, time: ClockTime) -> Result<()> {
    let center = clock_canvas(template)?.rect().center();
    let r = params.clock_radius_mm;
    d.shape("contour", Label::Circle, &ShapePlacement::new(center, r))?;
    let mut pending_pause = params.long_pause_us;
    for hour in [12u32, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11] {
        if hour == 6 {
            if let Some(p) = pending_pause.take() {
                d.pause(p, on_clock(center, 0.8 * r, 180.0));
            }
        }
        let strokes = number_strokes(hour, on_clock(center, 0.8 * r, hour as f64 * 30.0));
        d.next_symbol(strokes[0][0]);
        let idx = write_strokes(d, &strokes)?;
        d.group("mark", None, idx.clone());
        if params.correction && hour == 3 {
            let original = d.b.strokes()[idx[0]].clone();
            let wait = (original.start_t + 3_000_000).saturating_sub(d.b.now());
            d.b.hover(wait, strokes[0][0]);
            let redo = d.b.polyline(&strokes[0])?;
            let truth = d.b.strokes()[redo].clone();
            d.corrections.push(CorrectionTruth {
                stroke: redo,
                overdrawn_stroke: idx[0],
                interval: Interval { start_t: truth.start_t, end_t: truth.end_t },
            });
            d.group("correction", None, vec![redo]);
        }
    }
    let (hour_deg, minute_deg) = time.hand_angles();
    for (role, angle, len) in [("hour_hand", hour_deg, 0.5 * r), ("minute_hand", minute_deg, 0.75 * r)] {
        d.next_symbol(center);
        let s = d.b.polyline(&[center, on_clock(center, len, angle)])?;
        d.group(role, Some(Label::Line), vec![s]);
    }
    Ok(())
}

/// Trail template with `n` nodes on a ring.
pub fn trail_template(n: usize) -> Result<TestTemplate> {
    if !(2..=60).contains(&n) {
        return Err(InkError::InvalidSpec(format!("trail needs 2..=60 nodes, got {n}")));
    }
    let regions = (0..n)
        .map(|i| {
            let c = on_clock(Point::new(105.0, 148.0), 70.0, 360.0 * i as f64 / n as f64);
            Region {
                id: format!("n{}", i + 1),
                kind: RegionKind::Node,
                bbox: [c.x - 6.0, c.y - 6.0, c.x + 6.0, c.y + 6.0],
                seq: Some(i as u32 + 1),
                expect: None,
            }
        })
        .collect();
    let t = TestTemplate::new("TMT", Page::A4, regions);
    t.validate()?;
    Ok(t)
}

/// Visit order of `1..=n` with exactly `k` transitions that are not `j -> j+1`.
pub fn trail_order(n: usize, k: usize, rng: &mut impl Rng) -> Result<Vec<u32>> {
    if k >= n.max(1) {
        return Err(InkError::InvalidSpec(format!("{k} wrong transitions need more than {n} nodes")));
    }
    let mut cuts: Vec<usize> = (1..n).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(k).collect();
    cuts.sort_unstable();
    let mut blocks: Vec<Vec<u32>> = Vec::new();
    let mut start = 0;
    for c in cuts.into_iter().chain([n]) {
        blocks.push((start as u32 + 1..=c as u32).collect());
        start = c;
    }
    let m = blocks.len();
    let mut order: Vec<usize> = (0..m).collect();
    let valid = |o: &[usize]| o.windows(2).all(|w| w[1] != w[0] + 1);
    for _ in 0..64 {
        order.shuffle(rng);
        if valid(&order) {
            break;
        }
    }
    if !valid(&order) {
        order = (0..m).rev().collect();
    }
    Ok(order.into_iter().flat_map(|i| blocks[i].clone()).collect())
}

fn gen_trail(d: &mut Draft, template: &TestTemplate, order: &[u32]) -> Result<()> {
    let nodes = template.nodes();
    let center = Point::new(105.0, 148.0);
    let ring_r = nodes.first().map(|n| n.circle().0.distance(center)).unwrap_or(70.0);
    let route_r = ring_r + 15.0;
    let angle_of = |seq: u32| {
        let c = nodes.iter().find(|n| n.seq == Some(seq)).expect("node").circle().0;
        let dd = c - center;
        dd.x.atan2(-dd.y).to_degrees().rem_euclid(360.0)
    };
    let mut path = Vec::new();
    for (i, &seq) in order.iter().enumerate() {
        let a = angle_of(seq);
        if i > 0 {
            let prev = angle_of(order[i - 1]);
            let mut sweep = (a - prev).rem_euclid(360.0);
            if sweep > 180.0 {
                sweep -= 360.0;
            }
            let steps = (sweep.abs() / 2.0).ceil().max(1.0) as usize;
            for s in 0..=steps {
                path.push(on_clock(center, route_r, prev + sweep * s as f64 / steps as f64));
            }
        }
        path.push(on_clock(center, ring_r, a));
    }
    d.next_symbol(path[0]);
    let s = d.b.polyline(&path)?;
    d.group("trail", None, vec![s]);
    Ok(())
}

fn pick(ids: Vec<String>, p: f64, rng: &mut impl Rng) -> Vec<String> {
    ids.into_iter().filter(|_| rng.random_bool(p)).collect()
}

fn gen_crossings(d: &mut Draft, template: &TestTemplate, ids: &[String]) -> Result<()> {
    for r in template.regions.iter().filter(|r| ids.contains(&r.id)) {
        let b = r.rect();
        let from = Point::new(b.min_x - 1.0, b.min_y - 1.0);
        d.next_symbol(from);
        let s = d.b.polyline(&[from, Point::new(b.max_x + 1.0, b.max_y + 1.0)])?;
        d.group(&format!("cross:{}", r.id), Some(Label::Line), vec![s]);
    }
    Ok(())
}

fn gen_fields(d: &mut Draft, template: &TestTemplate, ids: &[String]) -> Result<()> {
    for r in template.regions.iter().filter(|r| ids.contains(&r.id)) {
        let b = r.rect();
        let (x0, x1) = (b.min_x + 4.0, (b.min_x + 60.0).min(b.max_x - 4.0));
        let (y0, y1) = (b.min_y + 4.0, b.max_y - 4.0);
        let zig: Vec<Point> = (0..=12)
            .map(|i| {
                let x = x0 + (x1 - x0) * i as f64 / 12.0;
                Point::new(x, if i % 2 == 0 { y1 } else { y0 })
            })
            .collect();
        d.next_symbol(zig[0]);
        let s = d.b.polyline(&zig)?;
        d.group(&format!("field:{}", r.id), None, vec![s]);
    }
    Ok(())
}

/// Two regular pentagons around `center` whose overlap is a rhombus.
pub fn interlocking_pentagons(center: Point, radius: f64) -> [Vec<Point>; 2] {
    let offset = 0.75 * radius;
    [
        regular_polygon(Point::new(center.x - offset, center.y), radius, 5, 0.0),
        regular_polygon(Point::new(center.x + offset, center.y), radius, 5, 180.0),
    ]
}

fn gen_pentagons(d: &mut Draft, canvas: &Region) -> Result<()> {
    let b = canvas.rect();
    let radius = (0.22 * b.width()).min(0.4 * b.height());
    for pent in interlocking_pentagons(b.center(), radius) {
        let mut path = pent.clone();
        path.push(pent[0]);
        d.next_symbol(path[0]);
        let s = d.b.polyline(&path)?;
        d.group("pentagon", Some(Label::Pentagon), vec![s]);
    }
    Ok(())
}

fn gen_cube(d: &mut Draft, center: Point, side: f64) -> Result<()> {
    let h = side / 2.0;
    let o = side * 0.35;
    let front = [(-h, -h + o), (h - o, -h + o), (h - o, h), (-h, h)];
    let back: Vec<(f64, f64)> = front.iter().map(|&(x, y)| (x + o, y - o)).collect();
    let p = |(x, y): (f64, f64)| Point::new(center.x + x, center.y + y);
    // start bottom-left of the front face, end top-right of the back face
    let strokes = vec![
        vec![p(front[3]), p(front[0]), p(front[1]), p(front[2]), p(front[3])],
        vec![p(back[0]), p(back[1]), p(back[2]), p(back[3]), p(back[0])],
        vec![p(front[3]), p(back[3])],
        vec![p(front[0]), p(back[0])],
        vec![p(front[2]), p(back[2])],
        vec![p(front[1]), p(back[1])],
    ];
    d.next_symbol(strokes[0][0]);
    let idx = write_strokes(d, &strokes)?;
    d.group("cube", Some(Label::ComplexFigure), idx);
    Ok(())
}

fn gen_elements(d: &mut Draft, template: &TestTemplate) -> Result<()> {
    for canvas in template.regions_of(RegionKind::Canvas) {
        let expected: Vec<Label> =
            canvas.expect.as_deref().unwrap_or("").split(',').filter_map(|s| Label::parse(s.trim())).collect();
        if expected.iter().filter(|l| **l == Label::Pentagon).count() == 2 && expected.len() == 2 {
            gen_pentagons(d, canvas)?;
            continue;
        }
        let b = canvas.rect();
        let cols = (expected.len() as f64).sqrt().ceil().max(1.0) as usize;
        let rows = expected.len().div_ceil(cols).max(1);
        let (cw, ch) = (b.width() / cols as f64, b.height() / rows as f64);
        for (i, &label) in expected.iter().enumerate() {
            let c = Point::new(b.min_x + cw * ((i % cols) as f64 + 0.5), b.min_y + ch * ((i / cols) as f64 + 0.5));
            let size = 0.35 * cw.min(ch);
            if label == Label::ComplexFigure {
                gen_cube(d, c, 1.2 * size)?;
                continue;
            }
            let mut at = ShapePlacement::new(c, size);
            if label == Label::Rectangle {
                at.aspect = 1.5;
            }
            d.shape(&format!("element:{}", canvas.id), label, &at)?;
        }
    }
    Ok(())
}

/// Generates a complete session for a registry test with its template and
/// ground-truth manifest.
pub fn gen_test_session(test_id: &str, params: &SessionParams, seed: u64) -> Result<SynthSession> {
    let def = registry_lookup(test_id)?;
    params.style.validate()?;
    let test_id = def.test_id;
    let session_id = synth_session_id(test_id, seed);
    let mut d = Draft {
        b: SessionBuilder::new(params.style, seed),
        groups: Vec::new(),
        pauses: Vec::new(),
        corrections: Vec::new(),
        started: false,
    };
    let mut manifest = SynthManifest {
        test_id: test_id.to_string(),
        seed,
        session_id: session_id.clone(),
        groups: Vec::new(),
        group_count: 0,
        stroke_count: 0,
        pauses: Vec::new(),
        corrections: Vec::new(),
        clock_time: None,
        trail_visit_order: None,
        trail_errors: None,
        crossed_targets: None,
        crossed_distractors: None,
        filled_fields: None,
        strokes: Vec::new(),
    };
    let template = match scoring_kind(test_id)? {
        ScoreKind::Cdt => {
            let template = builtin_template(test_id)?;
            let time_text = params.clock_time.clone().unwrap_or_else(|| {
                clock_canvas(&template).ok().and_then(|r| r.expect.clone()).unwrap_or_else(|| "11:10".into())
            });
            let time = ClockTime::parse(&time_text)
                .ok_or_else(|| InkError::InvalidSpec(format!("bad clock time {time_text}")))?;
            let mut template = template;
            for r in template.regions.iter_mut().filter(|r| r.kind == RegionKind::Canvas) {
                r.expect = Some(time_text.clone());
            }
            gen_clock(&mut d, &template, params, time)?;
            manifest.clock_time = Some(time_text);
            template
        }
        ScoreKind::Tmt => {
            let template = match params.trail_nodes {
                Some(n) => trail_template(n)?,
                None => builtin_template(test_id)?,
            };
            let order = trail_order(template.nodes().len(), params.trail_errors, d.b.rng())?;
            gen_trail(&mut d, &template, &order)?;
            manifest.trail_visit_order = Some(order);
            manifest.trail_errors = Some(params.trail_errors);
            template
        }
        ScoreKind::Akt => {
            let template = builtin_template(test_id)?;
            let ids = |kind| template.regions_of(kind).map(|r| r.id.clone()).collect::<Vec<_>>();
            let targets = match &params.crossed_targets {
                Some(t) => t.clone(),
                None => pick(ids(RegionKind::Target), 0.8, d.b.rng()),
            };
            let distractors = match &params.crossed_distractors {
                Some(t) => t.clone(),
                None => pick(ids(RegionKind::Distractor), 0.05, d.b.rng()),
            };
            for id in targets.iter().chain(&distractors) {
                if !template.regions.iter().any(|r| &r.id == id) {
                    return Err(InkError::InvalidSpec(format!("unknown region {id}")));
                }
            }
            let all: Vec<String> = template
                .regions
                .iter()
                .filter(|r| targets.contains(&r.id) || distractors.contains(&r.id))
                .map(|r| r.id.clone())
                .collect();
            gen_crossings(&mut d, &template, &all)?;
            manifest.crossed_targets =
                Some(ids(RegionKind::Target).into_iter().filter(|i| targets.contains(i)).collect());
            manifest.crossed_distractors =
                Some(ids(RegionKind::Distractor).into_iter().filter(|i| distractors.contains(i)).collect());
            template
        }
        ScoreKind::Pentagon => {
            let template = builtin_template(test_id)?;
            let canvas = template
                .regions_of(RegionKind::Canvas)
                .next()
                .ok_or_else(|| InkError::InvalidTemplate("no canvas".into()))?
                .clone();
            gen_pentagons(&mut d, &canvas)?;
            template
        }
        ScoreKind::Fields => {
            let template = builtin_template(test_id)?;
            let ids: Vec<String> = template.regions_of(RegionKind::InputField).map(|r| r.id.clone()).collect();
            let filled = match &params.filled_fields {
                Some(f) => f.clone(),
                None => pick(ids.clone(), 0.6, d.b.rng()),
            };
            gen_fields(&mut d, &template, &filled)?;
            manifest.filled_fields = Some(ids.into_iter().filter(|i| filled.contains(i)).collect());
            template
        }
        ScoreKind::Elements => {
            let template = builtin_template(test_id)?;
            gen_elements(&mut d, &template)?;
            template
        }
    };
    if let Some(p) = params.long_pause_us.filter(|_| d.pauses.is_empty()) {
        // tests without a natural midpoint get the pause before a final dot
        let last = d.b.strokes().last().map(|s| s.end_t);
        if last.is_some() {
            let at = Point::new(200.0, 287.0);
            d.pause(p, at);
            let s = d.b.polyline(&[at])?;
            d.group("dot", Some(Label::Dot), vec![s]);
        }
    }

    let Draft { b, groups, pauses, corrections, .. } = d;
    let (samples, strokes) = b.finish();
    let meta = SessionMeta {
        session_id,
        test_id: test_id.to_string(),
        subject_pseudonym: format!("synthetic-{seed}"),
        page: template.page,
        source: Source::DigitalPaper,
    };
    let session = InkSession::from_samples(meta, &samples)?;
    manifest.group_count = groups.len();
    manifest.stroke_count = strokes.len();
    manifest.groups = groups;
    manifest.pauses = pauses;
    manifest.corrections = corrections;
    manifest.strokes = strokes;
    Ok(SynthSession { session, template, manifest })
}
