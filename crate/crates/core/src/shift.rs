//! Directional marker shift.
//!
//! For each marker, `(output - ai) / (human - ai)` measures how far a model's
//! outputs moved from the AI input toward the human reference: 0 is no
//! movement, 1 lands on the human mean, above 1 overshoots, below 0 moves
//! away. Scores are clipped to [-1, 2]. Markers where the AI and human means
//! (nearly) coincide are degenerate and excluded from the mean.
//!
//! Absolute deviation `|output - human|` complements the shift: a large
//! shift can still land far from the target.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markers::{Marker, MarkerProfile, MarkerVector};

pub const SHIFT_MIN: f64 = -1.0;
pub const SHIFT_MAX: f64 = 2.0;
pub const DEFAULT_EPSILON: f64 = 1e-9;
pub const DEFAULT_TAU: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftParams {
    /// Smallest |human - ai| treated as a usable denominator.
    pub epsilon: f64,
    /// Half-width of the on-target band around 1.
    pub tau: f64,
}

impl Default for ShiftParams {
    fn default() -> Self {
        ShiftParams {
            epsilon: DEFAULT_EPSILON,
            tau: DEFAULT_TAU,
        }
    }
}

impl ShiftParams {
    pub fn new(epsilon: f64, tau: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::argument(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::argument(format!(
                "tau must be non-negative, got {tau}"
            )));
        }
        Ok(ShiftParams { epsilon, tau })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    WrongDirection,
    Undershoot,
    OnTarget,
    Overshoot,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::WrongDirection => "wrong_direction",
            Direction::Undershoot => "undershoot",
            Direction::OnTarget => "on_target",
            Direction::Overshoot => "overshoot",
        }
    }
}

/// Label for a non-degenerate shift. `capped` means clipping changed the
/// value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub direction: Direction,
    pub capped: bool,
}

impl Classification {
    /// Classifies a clipped shift. The on-target band takes precedence over
    /// undershoot and overshoot.
    pub fn of(raw: f64, shift: f64, tau: f64) -> Self {
        let direction = if (shift - 1.0).abs() <= tau {
            Direction::OnTarget
        } else if shift < 0.0 {
            Direction::WrongDirection
        } else if shift < 1.0 {
            Direction::Undershoot
        } else {
            Direction::Overshoot
        };
        Classification {
            direction,
            capped: !(SHIFT_MIN..=SHIFT_MAX).contains(&raw),
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.direction.as_str())?;
        if self.capped {
            f.write_str("+capped")?;
        }
        Ok(())
    }
}

/// Shift of one marker. `raw_shift`, `shift` and `classification` are
/// `None` exactly when the marker is degenerate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftScore {
    pub marker: Option<Marker>,
    pub output: f64,
    pub ai: f64,
    pub human: f64,
    pub raw_shift: Option<f64>,
    pub shift: Option<f64>,
    pub classification: Option<Classification>,
    pub degenerate: bool,
}

impl ShiftScore {
    fn for_marker(mut self, marker: Marker) -> Self {
        self.marker = Some(marker);
        self
    }
}

/// Directional shift of a single value.
pub fn directional_shift(output: f64, ai: f64, human: f64, params: ShiftParams) -> ShiftScore {
    let gap = human - ai;
    let (raw_shift, shift, classification) = if gap.abs() < params.epsilon {
        (None, None, None)
    } else {
        let raw = (output - ai) / gap;
        let clipped = raw.clamp(SHIFT_MIN, SHIFT_MAX);
        (
            Some(raw),
            Some(clipped),
            Some(Classification::of(raw, clipped, params.tau)),
        )
    };
    ShiftScore {
        marker: None,
        output,
        ai,
        human,
        degenerate: raw_shift.is_none(),
        raw_shift,
        shift,
        classification,
    }
}

/// Mean of the clipped shifts over non-degenerate scores.
pub fn mean_shift(scores: &[ShiftScore]) -> Result<f64> {
    let usable: Vec<f64> = scores.iter().filter_map(|s| s.shift).collect();
    if usable.is_empty() {
        return Err(Error::argument(
            "mean shift needs at least one non-degenerate score",
        ));
    }
    Ok(usable.iter().sum::<f64>() / usable.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerDeviation {
    pub marker: Marker,
    /// |output - human|
    pub absolute: f64,
    /// |output - human| / |human - ai|; `None` for degenerate markers.
    pub normalized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub markers: Vec<MarkerDeviation>,
    /// Mean of the normalized deviations; `None` when every marker is
    /// degenerate.
    pub mean_normalized: Option<f64>,
}

/// Distance of the output profile from the human profile, per marker.
pub fn abs_deviation_report(
    output: &MarkerProfile,
    human: &MarkerProfile,
    ai: &MarkerProfile,
    epsilon: f64,
) -> DeviationReport {
    let markers: Vec<MarkerDeviation> = Marker::ALL
        .iter()
        .map(|&marker| {
            let (o, h, a) = (output.get(marker), human.get(marker), ai.get(marker));
            let absolute = (o - h).abs();
            let gap = (h - a).abs();
            MarkerDeviation {
                marker,
                absolute,
                normalized: (gap >= epsilon).then(|| absolute / gap),
            }
        })
        .collect();
    let normalized: Vec<f64> = markers.iter().filter_map(|m| m.normalized).collect();
    let mean_normalized =
        (!normalized.is_empty()).then(|| normalized.iter().sum::<f64>() / normalized.len() as f64);
    DeviationReport {
        markers,
        mean_normalized,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    /// Shift of the profile means.
    #[default]
    ProfileMeans,
    /// Mean over examples of each example's clipped shift.
    PerExample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub mode: ShiftMode,
    pub params: ShiftParams,
    pub scores: Vec<ShiftScore>,
    pub mean_shift: Option<f64>,
    pub degenerate: Vec<Marker>,
    pub deviation: DeviationReport,
}

impl ShiftReport {
    pub fn score(&self, marker: Marker) -> &ShiftScore {
        let idx = Marker::ALL.iter().position(|&m| m == marker).unwrap_or(0);
        &self.scores[idx]
    }
}

fn check_profiles(profiles: [(&str, &MarkerProfile); 3]) -> Result<()> {
    for (role, profile) in profiles {
        for marker in Marker::ALL {
            if !profile.get(marker).is_finite() {
                return Err(Error::argument(format!(
                    "{role} profile has no finite value for marker {marker}"
                )));
            }
        }
    }
    Ok(())
}

fn finish(
    mode: ShiftMode,
    params: ShiftParams,
    scores: Vec<ShiftScore>,
    deviation: DeviationReport,
) -> ShiftReport {
    let degenerate = scores
        .iter()
        .filter(|s| s.degenerate)
        .filter_map(|s| s.marker)
        .collect();
    ShiftReport {
        mode,
        params,
        mean_shift: mean_shift(&scores).ok(),
        scores,
        degenerate,
        deviation,
    }
}

/// Shifts of an output profile relative to the AI input and human
/// reference profiles, with the matching deviation report.
pub fn shift_report(
    output: &MarkerProfile,
    ai: &MarkerProfile,
    human: &MarkerProfile,
    params: ShiftParams,
) -> Result<ShiftReport> {
    check_profiles([("output", output), ("ai", ai), ("human", human)])?;
    let scores = Marker::ALL
        .iter()
        .map(|&m| directional_shift(output.get(m), ai.get(m), human.get(m), params).for_marker(m))
        .collect();
    let deviation = abs_deviation_report(output, human, ai, params.epsilon);
    Ok(finish(ShiftMode::ProfileMeans, params, scores, deviation))
}

/// One evaluated example: marker vectors of the output, AI input and human
/// reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleMarkers {
    pub output: MarkerVector,
    pub ai: MarkerVector,
    pub human: MarkerVector,
}

/// Shift computed per example and then averaged per marker, skipping
/// examples that are degenerate for that marker. A marker degenerate in
/// every example is degenerate in the report. Deviations still use the
/// profiles.
pub fn per_example_shift_report(
    examples: &[ExampleMarkers],
    output: &MarkerProfile,
    ai: &MarkerProfile,
    human: &MarkerProfile,
    params: ShiftParams,
) -> Result<ShiftReport> {
    if examples.is_empty() {
        return Err(Error::argument(
            "per-example shift needs at least one example",
        ));
    }
    check_profiles([("output", output), ("ai", ai), ("human", human)])?;
    let scores = Marker::ALL
        .iter()
        .map(|&m| {
            let (mut raw_sum, mut shift_sum, mut used) = (0.0, 0.0, 0usize);
            for ex in examples {
                let s = directional_shift(ex.output.get(m), ex.ai.get(m), ex.human.get(m), params);
                if let (Some(raw), Some(shift)) = (s.raw_shift, s.shift) {
                    raw_sum += raw;
                    shift_sum += shift;
                    used += 1;
                }
            }
            let mut score = ShiftScore {
                marker: Some(m),
                output: output.get(m),
                ai: ai.get(m),
                human: human.get(m),
                raw_shift: None,
                shift: None,
                classification: None,
                degenerate: used == 0,
            };
            if used > 0 {
                let raw = raw_sum / used as f64;
                let shift = shift_sum / used as f64;
                score.raw_shift = Some(raw);
                score.shift = Some(shift);
                // The averaged value is inside the clip range by construction.
                score.classification = Some(Classification::of(shift, shift, params.tau));
            }
            score
        })
        .collect();
    let deviation = abs_deviation_report(output, human, ai, params.epsilon);
    Ok(finish(ShiftMode::PerExample, params, scores, deviation))
}
