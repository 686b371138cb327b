//! Piecewise value functions built from a switching schedule.

use serde::Serialize;
use std::io::Write;

use crate::cost::{CostKind, RadialCost};
use crate::error::{Error, Result};
use crate::switching::{Case, PointLabel, SwitchingSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Radial,
    Tangential,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Radial => "radial",
            Branch::Tangential => "tangential",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// One interval `(start, end]` of the value function.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub branch: Branch,
    /// Derivative at `start+` on radial segments.
    pub seed_slope: Option<f64>,
    pub value_at_start: f64,
    pub value_at_end: f64,
}

/// The candidate value function on `[0, R]`.
#[derive(Debug, Clone)]
pub struct PiecewiseValue {
    cost: RadialCost,
    schedule: SwitchingSchedule,
    segments: Vec<Segment>,
    alpha_const: f64,
    frak_f: Vec<f64>,
}

/// Continuity and smooth-fit gaps at one point.
#[derive(Debug, Clone, Serialize)]
pub struct FitEntry {
    pub point: f64,
    pub kind: &'static str,
    pub value_gap: f64,
    pub derivative_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub entries: Vec<FitEntry>,
    pub pass: bool,
}

impl FitReport {
    pub fn at(&self, point: f64) -> Option<&FitEntry> {
        self.entries
            .iter()
            .min_by(|a, b| (a.point - point).abs().total_cmp(&(b.point - point).abs()))
    }
}

pub const FIT_VALUE_TOL: f64 = 1e-8;
pub const FIT_DERIVATIVE_TOL: f64 = 1e-6;

/// `r f(r)` with the limit at the origin for singular costs.
fn r_times_f(cost: &RadialCost, r: f64, side: Side) -> f64 {
    if r == 0.0 {
        return match cost.kind() {
            CostKind::PowerLaw { alpha, sign } => sign * 0f64.powf(1.0 - alpha),
            _ => 0.0,
        };
    }
    r * match side {
        Side::Left => cost.eval_left(r),
        Side::Right => cost.eval_right(r),
    }
}

/// Build the value function for `cost` from `schedule`, fixing the additive
/// constant by `V(R) = 0`.
pub fn build_value(cost: &RadialCost, schedule: &SwitchingSchedule) -> Result<PiecewiseValue> {
    let radius = cost.radius();
    if (schedule.radius - radius).abs() > 1e-12 * radius {
        return Err(Error::InvalidConfig(format!(
            "schedule radius {} does not match cost radius {radius}",
            schedule.radius
        )));
    }
    if schedule.case != Case::from_monotone(cost.origin_monotone()) {
        return Err(Error::InvalidConfig(format!(
            "schedule case {:?} does not match the cost's monotonicity at the origin",
            schedule.case
        )));
    }
    schedule.validate()?;

    let mut bounds = vec![0.0];
    bounds.extend(schedule.values());
    bounds.push(radius);
    let mut branch = match schedule.case {
        Case::I => Branch::Radial,
        Case::II => Branch::Tangential,
    };
    let mut segments = Vec::with_capacity(bounds.len() - 1);
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        let seed_slope = match branch {
            Branch::Radial => Some(-2.0 * r_times_f(cost, a, Side::Right)),
            Branch::Tangential => None,
        };
        segments.push(Segment {
            start: a,
            end: b,
            branch,
            seed_slope,
            value_at_start: f64::NAN,
            value_at_end: f64::NAN,
        });
        branch = match branch {
            Branch::Radial => Branch::Tangential,
            Branch::Tangential => Branch::Radial,
        };
    }

    let mut v_end = 0.0;
    for seg in segments.iter_mut().rev() {
        seg.value_at_end = v_end;
        seg.value_at_start = match segment_value(cost, seg, seg.start) {
            Ok(v) => v,
            Err(Error::DivergentIntegral) if seg.branch == Branch::Tangential => {
                // Only a cost with non-integrable s f(s) at 0 gets here;
                // it is positive near the origin.
                f64::INFINITY
            }
            Err(e) => return Err(e),
        };
        v_end = seg.value_at_start;
    }
    let alpha_const = segments[0].value_at_start;

    let mut value = PiecewiseValue {
        cost: cost.clone(),
        schedule: schedule.clone(),
        segments,
        alpha_const,
        frak_f: Vec::new(),
    };
    value.frak_f = value.frak_table().unwrap_or_default();
    Ok(value)
}

/// Solve for the schedule and build the value function in one go.
pub fn solve(cost: &RadialCost) -> Result<PiecewiseValue> {
    let schedule = crate::switching::build_schedule(cost)?;
    build_value(cost, &schedule)
}

/// Value at `r` inside `seg`, integrating back from the segment's end value.
fn segment_value(cost: &RadialCost, seg: &Segment, r: f64) -> Result<f64> {
    let b = seg.end;
    match seg.branch {
        Branch::Tangential => Ok(seg.value_at_end + 2.0 * cost.integral_sf(r, b)?),
        Branch::Radial => {
            let a = seg.start;
            let seed = seg.seed_slope.unwrap_or(0.0);
            // ∫_r^b ∫_a^s f = (b - r) ∫_a^r f + b ∫_r^b f - ∫_r^b s f
            let inner =
                (b - r) * cost.integral_f(a, r)? + b * cost.integral_f(r, b)? - cost.integral_sf(r, b)?;
            Ok(seg.value_at_end - (seed * (b - r) - 2.0 * inner))
        }
    }
}

fn segment_derivative(cost: &RadialCost, seg: &Segment, r: f64, side: Side) -> Result<f64> {
    match seg.branch {
        Branch::Tangential => Ok(-2.0 * r_times_f(cost, r, side)),
        Branch::Radial => Ok(seg.seed_slope.unwrap_or(0.0) - 2.0 * cost.integral_f(seg.start, r)?),
    }
}

impl PiecewiseValue {
    pub fn cost(&self) -> &RadialCost {
        &self.cost
    }

    pub fn schedule(&self) -> &SwitchingSchedule {
        &self.schedule
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// `V(0)`, possibly infinite.
    pub fn alpha_const(&self) -> f64 {
        self.alpha_const
    }

    /// The constants `F_i` for `i = 0..=K`, each the value contributed by all
    /// complete radial/tangential pairs after index `i`.
    pub fn frak_f(&self) -> &[f64] {
        &self.frak_f
    }

    pub fn radius(&self) -> f64 {
        self.cost.radius()
    }

    fn check_domain(&self, r: f64) -> Result<()> {
        if !(0.0..=self.radius()).contains(&r) || r.is_nan() {
            return Err(Error::OutOfDomain {
                r,
                radius: self.radius(),
            });
        }
        Ok(())
    }

    /// Segment containing `r` under the `(a, b]` convention.
    fn segment_left(&self, r: f64) -> &Segment {
        let i = self.segments.partition_point(|s| s.end < r);
        &self.segments[i.min(self.segments.len() - 1)]
    }

    /// Segment containing `r` under the `[a, b)` convention.
    fn segment_right(&self, r: f64) -> &Segment {
        let i = self.segments.partition_point(|s| s.end <= r);
        &self.segments[i.min(self.segments.len() - 1)]
    }

    pub fn branch_at(&self, r: f64) -> Branch {
        self.segment_left(r).branch
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        self.check_domain(r)?;
        if r == 0.0 {
            return if self.alpha_const.is_finite() {
                Ok(self.alpha_const)
            } else {
                Err(Error::OriginValueInfinite)
            };
        }
        segment_value(&self.cost, self.segment_left(r), r)
    }

    pub fn derivative(&self, r: f64, side: Side) -> Result<f64> {
        self.check_domain(r)?;
        let seg = match side {
            Side::Left if r > 0.0 => self.segment_left(r),
            _ => self.segment_right(r),
        };
        segment_derivative(&self.cost, seg, r, side)
    }

    /// One-sided second derivative from the branch ODEs.
    pub fn second_derivative(&self, r: f64, side: Side) -> Result<f64> {
        self.check_domain(r)?;
        let seg = match side {
            Side::Left if r > 0.0 => self.segment_left(r),
            _ => self.segment_right(r),
        };
        let f = match side {
            Side::Left => self.cost.eval_left(r),
            Side::Right => self.cost.eval_right(r),
        };
        Ok(match seg.branch {
            Branch::Radial => -2.0 * f,
            Branch::Tangential => -2.0 * f - 2.0 * r * self.cost.right_derivative(r),
        })
    }

    /// Continuity and derivative gaps at every switching point and cost jump.
    pub fn check_fit(&self) -> FitReport {
        let mut entries = Vec::new();
        for (k, p) in self.schedule.points.iter().enumerate() {
            let left = &self.segments[k];
            let right = &self.segments[k + 1];
            let forward = if left.value_at_start.is_finite() {
                forward_value(&self.cost, left, p.value).unwrap_or(f64::NAN)
            } else {
                right.value_at_start
            };
            let dl = segment_derivative(&self.cost, left, p.value, Side::Left).unwrap_or(f64::NAN);
            let dr = segment_derivative(&self.cost, right, p.value, Side::Right).unwrap_or(f64::NAN);
            entries.push(FitEntry {
                point: p.value,
                kind: match p.label {
                    PointLabel::R => "r",
                    PointLabel::S => "s",
                },
                value_gap: (forward - right.value_at_start).abs(),
                derivative_gap: (dl - dr).abs(),
            });
        }
        for rho in self.cost.discontinuities() {
            let dl = self.derivative(rho, Side::Left).unwrap_or(f64::NAN);
            let dr = self.derivative(rho, Side::Right).unwrap_or(f64::NAN);
            let vl = self.eval(rho).unwrap_or(f64::NAN);
            let vr = segment_value(&self.cost, self.segment_right(rho), rho).unwrap_or(f64::NAN);
            entries.push(FitEntry {
                point: rho,
                kind: "discontinuity",
                value_gap: (vl - vr).abs(),
                derivative_gap: (dl - dr).abs(),
            });
        }
        entries.sort_by(|a, b| a.point.total_cmp(&b.point));
        let pass = entries
            .iter()
            .all(|e| e.value_gap < FIT_VALUE_TOL && e.derivative_gap < FIT_DERIVATIVE_TOL);
        FitReport { entries, pass }
    }

    /// Rows `(r, V, V'_-, V'_+, branch)` at `r_k = k R / n`, `k = 1..=n`.
    pub fn tabulate(&self, n: usize) -> Result<Vec<ValueRow>> {
        let radius = self.radius();
        (1..=n)
            .map(|k| {
                let r = if k == n { radius } else { radius * k as f64 / n as f64 };
                Ok(ValueRow {
                    r,
                    v: self.eval(r)?,
                    dv_left: self.derivative(r, Side::Left)?,
                    dv_right: self.derivative(r, Side::Right)?,
                    branch: self.branch_at(r).as_str(),
                })
            })
            .collect()
    }

    pub fn write_table<W: Write>(&self, n: usize, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.tabulate(n)? {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    fn virtual_points(&self) -> (Vec<f64>, Vec<f64>) {
        // Index-aligned r_j and s_j with missing trailing points clamped to R.
        let radius = self.radius();
        let values = self.schedule.values();
        let mut r = Vec::new();
        let mut s = Vec::new();
        match self.schedule.case {
            Case::I => {
                r.push(0.0);
                s.push(0.0);
                for pair in values.chunks(2) {
                    r.push(pair[0]);
                    s.push(pair.get(1).copied().unwrap_or(radius));
                }
                if values.len().is_multiple_of(2) {
                    r.push(radius);
                    s.push(radius);
                }
            }
            Case::II => {
                r.push(0.0);
                s.push(values.first().copied().unwrap_or(radius));
                for pair in values.iter().skip(1).collect::<Vec<_>>().chunks(2) {
                    r.push(*pair[0]);
                    s.push(pair.get(1).map(|v| **v).unwrap_or(radius));
                }
            }
        }
        (r, s)
    }

    fn frak_table(&self) -> Result<Vec<f64>> {
        let (r, s) = self.virtual_points();
        let k = r.len() - 1;
        let cost = &self.cost;
        let mut terms = vec![0.0; k + 1];
        for j in 1..=k {
            terms[j] = 2.0
                * ((r[j] - s[j - 1]) * r_times_f(cost, s[j - 1], Side::Right)
                    + cost.double_integral(s[j - 1], s[j - 1], r[j])?
                    + cost.integral_sf(r[j], s[j])?);
        }
        let mut table = vec![0.0; k + 1];
        for i in (0..k).rev() {
            table[i] = table[i + 1] + terms[i + 1];
        }
        Ok(table)
    }

    /// Evaluate through the explicit summation formula rather than the
    /// segment recursion. Used to cross-check the construction.
    pub fn closed_form_value(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        let cost = &self.cost;
        let radius = self.radius();
        let (r, s) = self.virtual_points();
        let frak = self.frak_table()?;
        let sf = |a: f64| r_times_f(cost, a, Side::Right);
        match self.schedule.case {
            Case::I => {
                let k = r.len() - 1;
                let boundary = -2.0 * cost.integral_sf(radius.max(r[k]).min(s[k]), s[k])?
                    - 2.0 * (r[k] - radius.min(r[k])) * sf(s[k - 1])
                    - 2.0 * cost.double_integral(s[k - 1], radius.min(r[k]), r[k])?;
                let i = (1..=k).find(|&i| x <= s[i]).unwrap_or(k);
                let (lo, hi) = (x.min(r[i]), x.max(r[i]));
                let bracket = (r[i] - lo) * sf(s[i - 1])
                    + cost.double_integral(s[i - 1], lo, r[i])?
                    + cost.integral_sf(hi.min(s[i]), s[i])?;
                Ok(boundary + 2.0 * bracket + frak[i])
            }
            Case::II => {
                let l = s.len() - 1;
                let r_next = |i: usize| r.get(i + 1).copied().unwrap_or(radius);
                let boundary = -2.0 * cost.integral_sf(radius.min(s[l]), s[l])?
                    + 2.0 * (radius.max(s[l]) - s[l]) * sf(s[l])
                    + 2.0 * cost.double_integral(s[l], s[l], radius.max(s[l]))?;
                let i = (0..=l).find(|&i| x <= r_next(i)).unwrap_or(l);
                let (lo, hi) = (x.min(s[i]), x.max(s[i]));
                let bracket = cost.integral_sf(lo, s[i])?
                    - (hi - s[i]) * sf(s[i])
                    - cost.double_integral(s[i], s[i], hi)?;
                Ok(boundary + 2.0 * bracket + frak[i])
            }
        }
    }
}

fn forward_value(cost: &RadialCost, seg: &Segment, p: f64) -> Result<f64> {
    let a = seg.start;
    match seg.branch {
        Branch::Tangential => Ok(seg.value_at_start - 2.0 * cost.integral_sf(a, p)?),
        Branch::Radial => {
            let seed = seg.seed_slope.unwrap_or(0.0);
            Ok(seg.value_at_start + seed * (p - a)
                - 2.0 * (p * cost.integral_f(a, p)? - cost.integral_sf(a, p)?))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValueRow {
    pub r: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "dV_left")]
    pub dv_left: f64,
    #[serde(rename = "dV_right")]
    pub dv_right: f64,
    pub branch: &'static str,
}
