//! Finite-difference check of the radial HJB equation.
//!
//! For a cost to be minimised, the value satisfies `max(L1 V, L0 V) = f`
//! with `L1 u = -u''/2` (radial) and `L0 u = -u'/(2r)` (tangential), so both
//! residuals `L V - f` are non-positive and the active one vanishes.

use serde::Serialize;
use std::io::Write;

use crate::cost::RadialCost;
use crate::error::Result;
use crate::value::{Branch, PiecewiseValue, Side};

pub const DEFAULT_TOL: f64 = 1e-3;
const GRID_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualPoint {
    pub r: f64,
    pub res_radial: f64,
    pub res_tangential: f64,
    pub active_branch: Branch,
}

impl ResidualPoint {
    /// Residual of the HJB equation itself.
    pub fn hjb(&self) -> f64 {
        self.res_radial.max(self.res_tangential)
    }

    /// Distance from satisfying the equation at this point.
    pub fn violation(&self) -> f64 {
        self.hjb().abs().max(self.res_radial).max(self.res_tangential)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HjbStatus {
    Pass,
    Fail,
    Skip,
}

impl HjbStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            HjbStatus::Pass => "PASS",
            HjbStatus::Fail => "FAIL",
            HjbStatus::Skip => "SKIP",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HjbReport {
    pub status: HjbStatus,
    pub tol: f64,
    pub max_violation: f64,
    pub worst: Vec<ResidualPoint>,
    #[serde(skip)]
    pub points: Vec<ResidualPoint>,
}

impl HjbReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "res_radial", "res_tangential", "active_branch"])?;
        for p in &self.points {
            w.write_record([
                p.r.to_string(),
                p.res_radial.to_string(),
                p.res_tangential.to_string(),
                p.active_branch.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Generator of the constant-`lambda` radius diffusion applied to `u`.
pub fn generator(lambda: f64, r: f64, du: f64, d2u: f64) -> f64 {
    -0.5 * lambda * lambda * d2u - (1.0 - lambda * lambda) / (2.0 * r) * du
}

/// Finite-difference step used by [`residuals`].
pub fn step_for(radius: f64) -> f64 {
    1e-4 * radius
}

/// Grid in `(10h, R - 10h)` avoiding a `10h` neighbourhood of each point in
/// `exclude`.
pub fn default_grid(radius: f64, exclude: &[f64], n: usize) -> Vec<f64> {
    let h = step_for(radius);
    let (lo, hi) = (10.0 * h, radius - 10.0 * h);
    (0..n)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
        .filter(|r| exclude.iter().all(|p| (r - p).abs() > 10.0 * h))
        .collect()
}

/// Residuals of an arbitrary radial function `v` by central differences.
pub fn residuals_of<F: Fn(f64) -> Result<f64>>(
    v: F,
    cost: &RadialCost,
    grid: &[f64],
) -> Result<Vec<ResidualPoint>> {
    let h = step_for(cost.radius());
    grid.iter()
        .map(|&r| {
            let (a, b, c) = (v(r - h)?, v(r)?, v(r + h)?);
            let d1 = (c - a) / (2.0 * h);
            let d2 = (c - 2.0 * b + a) / (h * h);
            let f = cost.value(r);
            let res_radial = generator(1.0, r, d1, d2) - f;
            let res_tangential = generator(0.0, r, d1, d2) - f;
            Ok(ResidualPoint {
                r,
                res_radial,
                res_tangential,
                active_branch: if res_radial >= res_tangential {
                    Branch::Radial
                } else {
                    Branch::Tangential
                },
            })
        })
        .collect()
}

/// Residuals of the constructed value on `grid`.
pub fn residuals(v: &PiecewiseValue, cost: &RadialCost, grid: &[f64]) -> Result<Vec<ResidualPoint>> {
    residuals_of(|r| v.eval(r), cost, grid)
}

fn exclusions(v: &PiecewiseValue, cost: &RadialCost) -> Vec<f64> {
    let mut ex = v.schedule().values();
    ex.extend(cost.kinks());
    ex
}

/// Check the HJB equation for `v` on the default grid.
pub fn verify(v: &PiecewiseValue, cost: &RadialCost) -> Result<HjbReport> {
    verify_fn(|r| v.eval(r), cost, &exclusions(v, cost), DEFAULT_TOL)
}

/// Check the HJB equation for an arbitrary function, with absolute tolerance
/// `tol` scaled by the largest `|f|` on the grid.
pub fn verify_fn<F: Fn(f64) -> Result<f64>>(
    v: F,
    cost: &RadialCost,
    exclude: &[f64],
    tol: f64,
) -> Result<HjbReport> {
    if !cost.is_continuous() {
        return Ok(HjbReport {
            status: HjbStatus::Skip,
            tol,
            max_violation: f64::NAN,
            worst: Vec::new(),
            points: Vec::new(),
        });
    }
    let grid = default_grid(cost.radius(), exclude, GRID_POINTS);
    let points = residuals_of(v, cost, &grid)?;
    let scale = grid
        .iter()
        .map(|&r| cost.value(r).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = tol * scale;
    let max_violation = points.iter().map(ResidualPoint::violation).fold(0.0, f64::max);
    let mut worst = points.clone();
    worst.sort_by(|a, b| b.violation().total_cmp(&a.violation()));
    worst.truncate(5);
    Ok(HjbReport {
        status: if max_violation <= tol {
            HjbStatus::Pass
        } else {
            HjbStatus::Fail
        },
        tol,
        max_violation,
        worst,
        points,
    })
}

/// `tr(D^2 V(x) S)` for `S = sigma sigma^T` with `sigma` a `d x d` matrix
/// given row-major and normalised to unit Frobenius norm.
pub fn hessian_trace(v: &PiecewiseValue, x: &[f64], sigma: &[f64]) -> Result<f64> {
    let d = x.len();
    let r = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let du = v.derivative(r, Side::Right)?;
    let d2u = v.second_derivative(r, Side::Right)?;
    let norm2: f64 = sigma.iter().map(|a| a * a).sum();
    // |sigma^T x_hat|^2 / |sigma|_F^2
    let proj: f64 = (0..d)
        .map(|j| {
            let s: f64 = (0..d).map(|i| sigma[i * d + j] * x[i] / r).sum();
            s * s
        })
        .sum::<f64>()
        / norm2;
    Ok(d2u * proj + du / r * (1.0 - proj))
}
