use serde::{Deserialize, Serialize};

/// Every analysis threshold in one place. Defaults are the documented values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// In-air gaps longer than this count as pauses.
    pub pause_threshold_s: f64,
    /// Stroke grouping: maximum bbox gap.
    pub group_gap_mm: f64,
    /// Stroke grouping: maximum pen-up time between consecutive strokes.
    pub group_gap_s: f64,
    /// Angular tolerance for clock marks and hands.
    pub angle_tolerance_deg: f64,
    /// Ink inside a region needed to count it as crossed.
    pub crossing_ink_mm: f64,
    /// Interior gaps longer than this raise the `long-pause` flag.
    pub long_pause_s: f64,
    pub contour_min_radius_mm: f64,
    /// Contour is closed when its endpoint gap is below this share of the radius.
    pub contour_closure_ratio: f64,
    /// Hands must start within this share of the radius from the center.
    pub hand_start_ratio: f64,
    /// Minimum age of an overdrawn stroke for a correction.
    pub correction_min_age_s: f64,
    /// Minimum share of a stroke lying on an older one for a correction.
    pub correction_overlap_ratio: f64,
    /// Distance under which ink counts as lying on an older stroke.
    pub correction_overlap_mm: f64,
    /// High-tremor suggestions need at least this tremor index.
    pub high_tremor_min_mm: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            pause_threshold_s: 0.2,
            group_gap_mm: 5.0,
            group_gap_s: 1.0,
            angle_tolerance_deg: 15.0,
            crossing_ink_mm: 2.0,
            long_pause_s: 3.0,
            contour_min_radius_mm: 15.0,
            contour_closure_ratio: 0.10,
            hand_start_ratio: 0.20,
            correction_min_age_s: 2.0,
            correction_overlap_ratio: 0.30,
            correction_overlap_mm: 1.0,
            high_tremor_min_mm: 0.05,
        }
    }
}

pub(crate) fn secs_to_us(s: f64) -> u64 {
    (s * 1e6).round().max(0.0) as u64
}

impl Thresholds {
    pub fn pause_threshold_us(&self) -> u64 {
        secs_to_us(self.pause_threshold_s)
    }

    pub fn group_gap_us(&self) -> u64 {
        secs_to_us(self.group_gap_s)
    }

    pub fn long_pause_us(&self) -> u64 {
        secs_to_us(self.long_pause_s)
    }
}
