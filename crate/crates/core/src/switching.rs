//! Free-boundary switching schedules.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::cost::{OriginMonotone, RadialCost};
use crate::error::{Error, Result};
use crate::quadrature::{bisect, first_true_bracket};

const SCAN_CELLS: usize = 10_000;
const ROUNDOFF: f64 = 1e-11;

/// Which control is optimal next to the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// Cost increasing near 0; radial motion first.
    #[serde(rename = "I")]
    I,
    /// Cost decreasing near 0; tangential motion first.
    #[serde(rename = "II")]
    II,
}

impl Case {
    pub fn from_monotone(m: OriginMonotone) -> Self {
        match m {
            OriginMonotone::IncreasingNearZero => Case::I,
            OriginMonotone::DecreasingNearZero => Case::II,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointLabel {
    /// Radial to tangential.
    R,
    /// Tangential to radial.
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchPoint {
    pub label: PointLabel,
    pub value: f64,
}

/// Ordered switching points on `(0, R)` together with the case tag.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingSchedule {
    pub case: Case,
    pub points: Vec<SwitchPoint>,
    pub radius: f64,
}

#[derive(Serialize, Deserialize)]
struct ScheduleJson {
    case: Case,
    points: Vec<SwitchPoint>,
}

impl SwitchingSchedule {
    /// Build from raw values, assigning labels by alternation from the case.
    pub fn from_values(case: Case, values: &[f64], radius: f64) -> Result<Self> {
        let first = match case {
            Case::I => PointLabel::R,
            Case::II => PointLabel::S,
        };
        let points = values
            .iter()
            .enumerate()
            .map(|(i, &value)| SwitchPoint {
                label: if i % 2 == 0 { first } else { other(first) },
                value,
            })
            .collect();
        let s = SwitchingSchedule {
            case,
            points,
            radius,
        };
        s.validate()?;
        Ok(s)
    }

    /// Check alternation, strict ordering and that every point lies in `(0, R)`.
    pub fn validate(&self) -> Result<()> {
        let mut expect = match self.case {
            Case::I => PointLabel::R,
            Case::II => PointLabel::S,
        };
        let mut prev = 0.0;
        for p in &self.points {
            if p.label != expect {
                return Err(Error::InvalidConfig(format!(
                    "schedule labels must alternate starting from {:?}",
                    self.first_label()
                )));
            }
            if !(p.value > prev && p.value < self.radius) {
                return Err(Error::InvalidConfig(format!(
                    "schedule points must increase strictly inside (0, R); got {}",
                    p.value
                )));
            }
            prev = p.value;
            expect = other(expect);
        }
        Ok(())
    }

    fn first_label(&self) -> PointLabel {
        match self.case {
            Case::I => PointLabel::R,
            Case::II => PointLabel::S,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Intervals `[lo, hi)` in radius where tangential motion is optimal.
    pub fn tangential_bands(&self) -> Vec<(f64, f64)> {
        let mut bands = Vec::new();
        let mut start = match self.case {
            Case::I => None,
            Case::II => Some(0.0),
        };
        for p in &self.points {
            match p.label {
                PointLabel::R => start = Some(p.value),
                PointLabel::S => {
                    if let Some(lo) = start.take() {
                        bands.push((lo, p.value));
                    }
                }
            }
        }
        if let Some(lo) = start {
            bands.push((lo, self.radius));
        }
        bands
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ScheduleJson {
            case: self.case,
            points: self.points.clone(),
        })?)
    }

    pub fn from_json(text: &str, radius: f64) -> Result<Self> {
        let raw: ScheduleJson = serde_json::from_str(text)?;
        let s = SwitchingSchedule {
            case: raw.case,
            points: raw.points,
            radius,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>, radius: f64) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?, radius)
    }
}

fn other(l: PointLabel) -> PointLabel {
    match l {
        PointLabel::R => PointLabel::S,
        PointLabel::S => PointLabel::R,
    }
}

/// The average-comparison function whose first upward crossing is the next
/// radial-to-tangential switch, split into its three terms.
fn crossing_terms(cost: &RadialCost, s_prev: f64, r: f64) -> Result<(f64, f64, f64)> {
    let seed = if s_prev == 0.0 {
        0.0
    } else {
        s_prev * cost.value(s_prev)
    };
    let integral = cost.integral_f(s_prev, r)?;
    Ok((seed, integral, r * cost.value(r)))
}

/// First `r > s_prev` where `s_prev f(s_prev) + ∫_{s_prev}^r f - r f(r)` turns
/// positive, or `None` if that never happens before `R`.
pub fn next_r(cost: &RadialCost, s_prev: f64) -> Result<Option<f64>> {
    let radius = cost.radius();
    if !(0.0..radius).contains(&s_prev) {
        return Err(Error::OutOfDomain {
            r: s_prev,
            radius,
        });
    }
    // Surface divergence before scanning.
    cost.integral_f(s_prev, radius)?;
    let positive = |r: f64| {
        crossing_terms(cost, s_prev, r)
            .map(|(a, b, c)| a + b - c > ROUNDOFF * (a.abs() + b.abs() + c.abs()))
            .unwrap_or(false)
    };
    let Some((lo, hi)) = first_true_bracket(&positive, s_prev, radius, SCAN_CELLS) else {
        report_tangency(cost, s_prev);
        return Ok(None);
    };
    let r = bisect(positive, lo, hi, 1e-12 * radius);
    Ok((r < radius).then_some(r))
}

fn report_tangency(cost: &RadialCost, s_prev: f64) {
    let radius = cost.radius();
    let step = (radius - s_prev) / SCAN_CELLS as f64;
    let closest = (1..SCAN_CELLS)
        .filter_map(|j| {
            let r = s_prev + step * j as f64;
            let (a, b, c) = crossing_terms(cost, s_prev, r).ok()?;
            Some((r, (a + b - c) / (1.0 + a.abs() + b.abs() + c.abs())))
        })
        .max_by(|x, y| x.1.total_cmp(&y.1));
    if let Some((r, g)) = closest {
        if g > -1e-9 {
            log::debug!("crossing function touches zero near r = {r} without turning positive");
        }
    }
}

/// First `s > r_prev` where the right derivative of the cost turns strictly
/// positive.
pub fn next_s(cost: &RadialCost, r_prev: f64) -> Result<Option<f64>> {
    let radius = cost.radius();
    if !(0.0..radius).contains(&r_prev) {
        return Err(Error::OutOfDomain {
            r: r_prev,
            radius,
        });
    }
    let positive = |r: f64| cost.right_derivative(r) > 0.0;
    let Some((lo, hi)) = first_true_bracket(&positive, r_prev, radius, SCAN_CELLS) else {
        return Ok(None);
    };
    let s = bisect(positive, lo, hi, 1e-12 * radius);
    Ok((s < radius).then_some(s))
}

/// Check the declared monotonicity against sampled right derivatives on
/// `(0, eta)`.
pub fn check_origin_monotone(cost: &RadialCost) -> Result<()> {
    let eta = cost.eta();
    let n = 1000;
    let increasing = cost.origin_monotone() == OriginMonotone::IncreasingNearZero;
    for j in 1..n {
        let r = eta * j as f64 / n as f64;
        let d = cost.right_derivative(r);
        let bad = if increasing { d < 0.0 } else { d > 0.0 };
        if bad {
            return Err(Error::NotMonotoneAtOrigin { eta });
        }
    }
    Ok(())
}

/// Alternate `next_r` and `next_s` from the case-appropriate seed.
pub fn build_schedule(cost: &RadialCost) -> Result<SwitchingSchedule> {
    let case = Case::from_monotone(cost.origin_monotone());
    let radius = cost.radius();
    if cost.is_step() {
        return Ok(SwitchingSchedule {
            case,
            points: Vec::new(),
            radius,
        });
    }
    check_origin_monotone(cost)?;

    let mut points = Vec::new();
    let mut label = match case {
        Case::I => PointLabel::R,
        Case::II => PointLabel::S,
    };
    let mut prev = 0.0;
    loop {
        let next = match label {
            PointLabel::R => next_r(cost, prev)?,
            PointLabel::S => next_s(cost, prev)?,
        };
        match next {
            Some(v) if v < radius => {
                points.push(SwitchPoint { label, value: v });
                prev = v;
                label = other(label);
            }
            _ => break,
        }
    }
    Ok(SwitchingSchedule {
        case,
        points,
        radius,
    })
}
