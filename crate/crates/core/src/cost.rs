//! Radially symmetric running costs with exact calculus.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

const QUAD_TOL: f64 = 1e-10;

/// Finiteness class of the cost near the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OriginGrowth {
    #[serde(alias = "bounded")]
    Bounded,
    #[serde(alias = "integrable_f")]
    IntegrableF,
    #[serde(alias = "integrable_sf_only")]
    IntegrableSFOnly,
    #[serde(alias = "non_integrable_sf")]
    NonIntegrableSF,
    #[serde(alias = "negative_non_integrable")]
    NegativeNonIntegrable,
}

impl OriginGrowth {
    pub const ALL: [OriginGrowth; 5] = [
        OriginGrowth::Bounded,
        OriginGrowth::IntegrableF,
        OriginGrowth::IntegrableSFOnly,
        OriginGrowth::NonIntegrableSF,
        OriginGrowth::NegativeNonIntegrable,
    ];

    fn f_integrable(self) -> bool {
        matches!(self, OriginGrowth::Bounded | OriginGrowth::IntegrableF)
    }

    fn sf_integrable(self) -> bool {
        !matches!(self, OriginGrowth::NonIntegrableSF)
    }
}

/// Direction of monotonicity on `(0, eta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OriginMonotone {
    #[serde(alias = "increasing")]
    IncreasingNearZero,
    #[serde(alias = "decreasing")]
    DecreasingNearZero,
}

/// The closed family of supported costs.
#[derive(Debug, Clone, PartialEq)]
pub enum CostKind {
    /// `0` on `[0, rho]`, `-1` on `(rho, R]`.
    StepDecreasing { rho: f64 },
    /// `-1` on `[0, rho)`, `0` on `[rho, R]`.
    StepIncreasing { rho: f64 },
    /// `sin(r)`.
    Sinusoid,
    /// `sign * r^(-alpha)`.
    PowerLaw { alpha: f64, sign: f64 },
    /// Continuous piecewise polynomial. `breakpoints` are the interior knots
    /// and piece `k` is `sum_j coeffs[k][j] * r^j` in the global variable.
    PiecewisePolynomial {
        breakpoints: Vec<f64>,
        coeffs: Vec<Vec<f64>>,
    },
}

/// A radial running cost on the ball of radius `radius` in dimension `dimension`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialCost {
    kind: CostKind,
    radius: f64,
    dimension: usize,
    origin_growth: OriginGrowth,
    origin_monotone: OriginMonotone,
    eta: f64,
}

/// JSON form of a cost.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CostSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<Vec<f64>>>,
    #[serde(rename = "R")]
    pub radius: f64,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_growth: Option<OriginGrowth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_monotone: Option<OriginMonotone>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn poly_derivative_eval(c: &[f64], x: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (j, &a)| acc * x + j as f64 * a)
}

/// Antiderivative of `x^shift * p(x)` vanishing at 0.
fn poly_antiderivative(c: &[f64], shift: i32, x: f64) -> f64 {
    c.iter()
        .enumerate()
        .map(|(j, &a)| {
            let p = j as i32 + shift + 1;
            a * x.powi(p) / p as f64
        })
        .sum()
}

impl RadialCost {
    /// Build a cost with origin metadata inferred from the kind.
    pub fn new(kind: CostKind, radius: f64, dimension: usize) -> Result<Self> {
        Self::with_declared(kind, radius, dimension, None, None, None)
    }

    /// Build a cost, checking any declared origin metadata against the kind.
    pub fn with_declared(
        kind: CostKind,
        radius: f64,
        dimension: usize,
        growth: Option<OriginGrowth>,
        monotone: Option<OriginMonotone>,
        eta: Option<f64>,
    ) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidCost(format!("R must be positive, got {radius}")));
        }
        if dimension < 2 {
            return Err(Error::InvalidCost(format!(
                "dimension must be at least 2, got {dimension}"
            )));
        }
        validate_kind(&kind, radius)?;

        let admissible = admissible_growth(&kind);
        let origin_growth = match growth {
            Some(g) if admissible.contains(&g) => g,
            Some(g) => {
                return Err(Error::InconsistentDeclaration(format!(
                    "origin_growth {g:?} does not match the cost kind (expected one of {admissible:?})"
                )))
            }
            None => admissible[0],
        };
        let inferred_monotone = infer_monotone(&kind);
        let origin_monotone = match (monotone, inferred_monotone) {
            (Some(m), Some(i)) if m != i && kind_is_analytic(&kind) => {
                return Err(Error::InconsistentDeclaration(format!(
                    "origin_monotone {m:?} contradicts the cost kind ({i:?})"
                )))
            }
            (Some(m), _) => m,
            (None, Some(i)) => i,
            (None, None) => {
                return Err(Error::InvalidCost(
                    "cannot infer origin_monotone for this cost".into(),
                ))
            }
        };
        let eta = match eta {
            Some(e) if e > 0.0 && e <= radius => e,
            Some(e) => return Err(Error::InvalidCost(format!("eta must lie in (0, R], got {e}"))),
            None => infer_eta(&kind, radius),
        };
        Ok(RadialCost {
            kind,
            radius,
            dimension,
            origin_growth,
            origin_monotone,
            eta,
        })
    }

    pub fn step_decreasing(rho: f64, radius: f64) -> Result<Self> {
        Self::new(CostKind::StepDecreasing { rho }, radius, 2)
    }

    pub fn step_increasing(rho: f64, radius: f64) -> Result<Self> {
        Self::new(CostKind::StepIncreasing { rho }, radius, 2)
    }

    pub fn sinusoid(radius: f64) -> Result<Self> {
        Self::new(CostKind::Sinusoid, radius, 2)
    }

    pub fn power_law(alpha: f64, sign: f64, radius: f64) -> Result<Self> {
        Self::new(CostKind::PowerLaw { alpha, sign }, radius, 2)
    }

    pub fn polynomial(breakpoints: Vec<f64>, coeffs: Vec<Vec<f64>>, radius: f64) -> Result<Self> {
        Self::new(
            CostKind::PiecewisePolynomial {
                breakpoints,
                coeffs,
            },
            radius,
            2,
        )
    }

    /// Same cost in another dimension.
    pub fn with_dimension(mut self, dimension: usize) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::InvalidCost(format!(
                "dimension must be at least 2, got {dimension}"
            )));
        }
        self.dimension = dimension;
        Ok(self)
    }

    pub fn from_spec(spec: &CostSpec) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::InvalidCost(format!("kind {} requires {name}", spec.kind)))
        };
        let kind = match spec.kind.as_str() {
            "step_decreasing" => CostKind::StepDecreasing {
                rho: need(spec.rho, "rho")?,
            },
            "step_increasing" => CostKind::StepIncreasing {
                rho: need(spec.rho, "rho")?,
            },
            "sin" => CostKind::Sinusoid,
            "power" => CostKind::PowerLaw {
                alpha: need(spec.alpha, "alpha")?,
                sign: spec.sign.unwrap_or(1) as f64,
            },
            "piecewise_poly" => CostKind::PiecewisePolynomial {
                breakpoints: spec.breakpoints.clone().unwrap_or_default(),
                coeffs: spec
                    .coeffs
                    .clone()
                    .ok_or_else(|| Error::InvalidCost("piecewise_poly requires coeffs".into()))?,
            },
            other => return Err(Error::InvalidCost(format!("unknown cost kind '{other}'"))),
        };
        Self::with_declared(
            kind,
            spec.radius,
            spec.dimension,
            spec.origin_growth,
            spec.origin_monotone,
            spec.eta,
        )
    }

    pub fn to_spec(&self) -> CostSpec {
        let mut spec = CostSpec {
            radius: self.radius,
            dimension: self.dimension,
            origin_growth: Some(self.origin_growth),
            origin_monotone: Some(self.origin_monotone),
            eta: Some(self.eta),
            ..CostSpec::default()
        };
        match &self.kind {
            CostKind::StepDecreasing { rho } => {
                spec.kind = "step_decreasing".into();
                spec.rho = Some(*rho);
            }
            CostKind::StepIncreasing { rho } => {
                spec.kind = "step_increasing".into();
                spec.rho = Some(*rho);
            }
            CostKind::Sinusoid => spec.kind = "sin".into(),
            CostKind::PowerLaw { alpha, sign } => {
                spec.kind = "power".into();
                spec.alpha = Some(*alpha);
                spec.sign = Some(*sign as i32);
            }
            CostKind::PiecewisePolynomial {
                breakpoints,
                coeffs,
            } => {
                spec.kind = "piecewise_poly".into();
                spec.breakpoints = Some(breakpoints.clone());
                spec.coeffs = Some(coeffs.clone());
            }
        }
        spec
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: CostSpec = serde_json::from_str(text)?;
        Self::from_spec(&spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn kind(&self) -> &CostKind {
        &self.kind
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn origin_growth(&self) -> OriginGrowth {
        self.origin_growth
    }

    pub fn origin_monotone(&self) -> OriginMonotone {
        self.origin_monotone
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn is_step(&self) -> bool {
        matches!(
            self.kind,
            CostKind::StepDecreasing { .. } | CostKind::StepIncreasing { .. }
        )
    }

    pub fn is_continuous(&self) -> bool {
        !self.is_step()
    }

    /// Whether the cost blows up at `r = 0`.
    pub fn singular_at_origin(&self) -> bool {
        matches!(self.kind, CostKind::PowerLaw { .. })
    }

    /// Radii in `(0, R)` where the cost jumps.
    pub fn discontinuities(&self) -> Vec<f64> {
        match self.kind {
            CostKind::StepDecreasing { rho } | CostKind::StepIncreasing { rho } => vec![rho],
            _ => Vec::new(),
        }
    }

    /// Radii where the cost or its derivative may fail to be smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.kind {
            CostKind::PiecewisePolynomial { breakpoints, .. } => breakpoints.clone(),
            _ => self.discontinuities(),
        }
    }

    fn check_domain(&self, r: f64) -> Result<()> {
        if !(0.0..=self.radius).contains(&r) || r.is_nan() {
            return Err(Error::OutOfDomain {
                r,
                radius: self.radius,
            });
        }
        Ok(())
    }

    /// `f(r)` with domain checks.
    pub fn eval(&self, r: f64) -> Result<f64> {
        self.check_domain(r)?;
        if r == 0.0 && self.singular_at_origin() {
            return Err(Error::EvalAtSingularOrigin);
        }
        Ok(self.value(r))
    }

    /// `f(r)` without checks; singular kinds return an infinity at 0.
    pub fn value(&self, r: f64) -> f64 {
        match &self.kind {
            CostKind::StepDecreasing { rho } => {
                if r <= *rho {
                    0.0
                } else {
                    -1.0
                }
            }
            CostKind::StepIncreasing { rho } => {
                if r < *rho {
                    -1.0
                } else {
                    0.0
                }
            }
            CostKind::Sinusoid => r.sin(),
            CostKind::PowerLaw { alpha, sign } => sign * r.powf(-alpha),
            CostKind::PiecewisePolynomial {
                breakpoints,
                coeffs,
            } => {
                let k = breakpoints.partition_point(|&b| b <= r);
                poly_eval(&coeffs[k], r)
            }
        }
    }

    /// Left limit `f(r-)`.
    pub fn eval_left(&self, r: f64) -> f64 {
        match self.kind {
            CostKind::StepDecreasing { rho } if r == rho => 0.0,
            CostKind::StepIncreasing { rho } if r == rho => -1.0,
            _ => self.value(r),
        }
    }

    /// Right limit `f(r+)`.
    pub fn eval_right(&self, r: f64) -> f64 {
        match self.kind {
            CostKind::StepDecreasing { rho } if r == rho => -1.0,
            CostKind::StepIncreasing { rho } if r == rho => 0.0,
            _ => self.value(r),
        }
    }

    /// Exact right derivative `f'_+(r)`. At polynomial knots this is the
    /// derivative of the piece to the right.
    pub fn right_derivative(&self, r: f64) -> f64 {
        match &self.kind {
            CostKind::StepDecreasing { .. } | CostKind::StepIncreasing { .. } => 0.0,
            CostKind::Sinusoid => r.cos(),
            CostKind::PowerLaw { alpha, sign } => -sign * alpha * r.powf(-alpha - 1.0),
            CostKind::PiecewisePolynomial {
                breakpoints,
                coeffs,
            } => {
                let k = breakpoints.partition_point(|&b| b <= r);
                poly_derivative_eval(&coeffs[k], r)
            }
        }
    }

    /// Number of sign changes of `f'_+` on `(0, R)` implied by the kind, when
    /// it is known in closed form.
    pub fn derivative_sign_changes(&self) -> Option<usize> {
        match self.kind {
            CostKind::StepDecreasing { .. }
            | CostKind::StepIncreasing { .. }
            | CostKind::PowerLaw { .. } => Some(0),
            CostKind::Sinusoid => {
                let mut n = 0;
                let mut z = FRAC_PI_2;
                while z < self.radius {
                    n += 1;
                    z += std::f64::consts::PI;
                }
                Some(n)
            }
            CostKind::PiecewisePolynomial { .. } => None,
        }
    }

    fn check_interval(&self, a: f64, b: f64) -> Result<()> {
        self.check_domain(a)?;
        self.check_domain(b)?;
        if a > b {
            return Err(Error::InvalidConfig(format!(
                "integration limits out of order: {a} > {b}"
            )));
        }
        Ok(())
    }

    /// `∫_a^b f(s) ds` from the analytic antiderivative.
    pub fn integral_f(&self, a: f64, b: f64) -> Result<f64> {
        self.check_interval(a, b)?;
        if a == b {
            return Ok(0.0);
        }
        if a == 0.0 && !self.origin_growth.f_integrable() {
            return Err(Error::DivergentIntegral);
        }
        Ok(self.primitive_f(b) - self.primitive_f(a))
    }

    /// `∫_a^b s f(s) ds` from the analytic antiderivative.
    pub fn integral_sf(&self, a: f64, b: f64) -> Result<f64> {
        self.check_interval(a, b)?;
        if a == b {
            return Ok(0.0);
        }
        if a == 0.0 && !self.origin_growth.sf_integrable() {
            return Err(Error::DivergentIntegral);
        }
        Ok(self.primitive_sf(b) - self.primitive_sf(a))
    }

    fn primitive_f(&self, r: f64) -> f64 {
        match &self.kind {
            CostKind::StepDecreasing { rho } => -(r - rho).max(0.0),
            CostKind::StepIncreasing { rho } => -r.min(*rho),
            CostKind::Sinusoid => -r.cos(),
            CostKind::PowerLaw { alpha, sign } => {
                if *alpha == 1.0 {
                    sign * r.ln()
                } else {
                    sign * r.powf(1.0 - alpha) / (1.0 - alpha)
                }
            }
            CostKind::PiecewisePolynomial {
                breakpoints,
                coeffs,
            } => piecewise_primitive(breakpoints, coeffs, 0, r),
        }
    }

    fn primitive_sf(&self, r: f64) -> f64 {
        match &self.kind {
            CostKind::StepDecreasing { rho } => -0.5 * (r * r - rho * rho).max(0.0),
            CostKind::StepIncreasing { rho } => -0.5 * r.min(*rho).powi(2),
            CostKind::Sinusoid => r.sin() - r * r.cos(),
            CostKind::PowerLaw { alpha, sign } => {
                if *alpha == 2.0 {
                    sign * r.ln()
                } else {
                    sign * r.powf(2.0 - alpha) / (2.0 - alpha)
                }
            }
            CostKind::PiecewisePolynomial {
                breakpoints,
                coeffs,
            } => piecewise_primitive(breakpoints, coeffs, 1, r),
        }
    }

    /// `∫_a^b f(s) ds` by adaptive quadrature.
    pub fn integral_f_quadrature(&self, a: f64, b: f64) -> Result<f64> {
        self.check_interval(a, b)?;
        if a == 0.0 && !self.origin_growth.f_integrable() {
            return Err(Error::DivergentIntegral);
        }
        Ok(self.quadrature(|s| self.value(s), a, b))
    }

    /// `∫_a^b s f(s) ds` by adaptive quadrature.
    pub fn integral_sf_quadrature(&self, a: f64, b: f64) -> Result<f64> {
        self.check_interval(a, b)?;
        if a == 0.0 && !self.origin_growth.sf_integrable() {
            return Err(Error::DivergentIntegral);
        }
        Ok(self.quadrature(|s| s * self.value(s), a, b))
    }

    fn quadrature<F: Fn(f64) -> f64>(&self, g: F, a: f64, b: f64) -> f64 {
        let mut cuts = vec![a];
        cuts.extend(self.kinks().into_iter().filter(|&k| k > a && k < b));
        cuts.push(b);
        cuts.windows(2)
            .map(|w| {
                let (lo, hi) = (w[0], w[1]);
                if lo == 0.0 && self.singular_at_origin() {
                    // s = hi * u^8 removes the integrable singularity at 0.
                    let m = 8.0;
                    adaptive_simpson(
                        |u: f64| {
                            if u == 0.0 {
                                0.0
                            } else {
                                g(hi * u.powf(m)) * hi * m * u.powf(m - 1.0)
                            }
                        },
                        0.0,
                        1.0,
                        QUAD_TOL,
                    )
                } else {
                    adaptive_simpson(&g, lo, hi, QUAD_TOL)
                }
            })
            .sum()
    }

    /// `∫_a^b ∫_c^s f(t) dt ds`, integrating the inner primitive numerically.
    pub fn double_integral(&self, c: f64, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        self.integral_f(c, b.max(c))?;
        let base = if c == 0.0 && self.singular_at_origin() {
            0.0
        } else {
            self.primitive_f(c)
        };
        let inner = |s: f64| {
            if s == 0.0 && c == 0.0 {
                0.0
            } else {
                self.primitive_f(s) - base
            }
        };
        let mut cuts = vec![a];
        cuts.extend(self.kinks().into_iter().filter(|&k| k > a && k < b));
        cuts.push(b);
        Ok(cuts
            .windows(2)
            .map(|w| adaptive_simpson(inner, w[0], w[1], 1e-12))
            .sum())
    }
}

fn piecewise_primitive(breakpoints: &[f64], coeffs: &[Vec<f64>], shift: i32, r: f64) -> f64 {
    let mut acc = 0.0;
    let mut lo = 0.0;
    for (k, c) in coeffs.iter().enumerate() {
        let hi = breakpoints.get(k).copied().unwrap_or(f64::INFINITY);
        if r <= lo {
            break;
        }
        let top = r.min(hi);
        acc += poly_antiderivative(c, shift, top) - poly_antiderivative(c, shift, lo);
        lo = hi;
    }
    acc
}

fn kind_is_analytic(kind: &CostKind) -> bool {
    !matches!(kind, CostKind::PiecewisePolynomial { .. })
}

fn validate_kind(kind: &CostKind, radius: f64) -> Result<()> {
    match kind {
        CostKind::StepDecreasing { rho } | CostKind::StepIncreasing { rho } => {
            if !(*rho > 0.0 && *rho < radius) {
                return Err(Error::InvalidCost(format!("rho must lie in (0, R), got {rho}")));
            }
        }
        CostKind::Sinusoid => {}
        CostKind::PowerLaw { alpha, sign } => {
            if !(alpha.is_finite() && *alpha > 0.0) {
                return Err(Error::InvalidCost(format!("alpha must be positive, got {alpha}")));
            }
            if *sign != 1.0 && *sign != -1.0 {
                return Err(Error::InvalidCost(format!("sign must be +1 or -1, got {sign}")));
            }
        }
        CostKind::PiecewisePolynomial {
            breakpoints,
            coeffs,
        } => {
            if coeffs.len() != breakpoints.len() + 1 {
                return Err(Error::InvalidCost(format!(
                    "{} breakpoints need {} coefficient lists, got {}",
                    breakpoints.len(),
                    breakpoints.len() + 1,
                    coeffs.len()
                )));
            }
            if coeffs.iter().any(|c| c.is_empty() || c.iter().any(|x| !x.is_finite())) {
                return Err(Error::InvalidCost("coefficient lists must be non-empty and finite".into()));
            }
            let mut prev = 0.0;
            for &b in breakpoints {
                if !(b > prev && b < radius) {
                    return Err(Error::InvalidCost(
                        "breakpoints must be strictly increasing inside (0, R)".into(),
                    ));
                }
                prev = b;
            }
            for (k, &b) in breakpoints.iter().enumerate() {
                let left = poly_eval(&coeffs[k], b);
                let right = poly_eval(&coeffs[k + 1], b);
                if (left - right).abs() > 1e-9 * (1.0 + left.abs().max(right.abs())) {
                    return Err(Error::InvalidCost(format!(
                        "polynomial pieces disagree at breakpoint {b}: {left} vs {right}"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Admissible declarations, most specific first.
fn admissible_growth(kind: &CostKind) -> Vec<OriginGrowth> {
    use OriginGrowth::*;
    match kind {
        CostKind::PowerLaw { alpha, sign } => {
            let g = if *alpha < 1.0 {
                IntegrableF
            } else if *sign < 0.0 {
                NegativeNonIntegrable
            } else if *alpha < 2.0 {
                IntegrableSFOnly
            } else {
                NonIntegrableSF
            };
            vec![g]
        }
        _ => vec![Bounded, IntegrableF],
    }
}

fn infer_monotone(kind: &CostKind) -> Option<OriginMonotone> {
    use OriginMonotone::*;
    match kind {
        CostKind::StepDecreasing { .. } => Some(DecreasingNearZero),
        CostKind::StepIncreasing { .. } | CostKind::Sinusoid => Some(IncreasingNearZero),
        CostKind::PowerLaw { sign, .. } => Some(if *sign > 0.0 {
            DecreasingNearZero
        } else {
            IncreasingNearZero
        }),
        CostKind::PiecewisePolynomial { coeffs, .. } => {
            let first = coeffs[0].iter().skip(1).find(|c| **c != 0.0);
            Some(match first {
                Some(c) if *c < 0.0 => DecreasingNearZero,
                _ => IncreasingNearZero,
            })
        }
    }
}

fn infer_eta(kind: &CostKind, radius: f64) -> f64 {
    match kind {
        CostKind::StepDecreasing { rho } | CostKind::StepIncreasing { rho } => *rho,
        CostKind::Sinusoid => FRAC_PI_2.min(radius),
        CostKind::PowerLaw { .. } => radius,
        CostKind::PiecewisePolynomial {
            breakpoints,
            coeffs,
        } => {
            // First sign change of the derivative away from the origin.
            let n = 10_000;
            let dr = radius / n as f64;
            let deriv = |r: f64| {
                let k = breakpoints.partition_point(|&b| b <= r);
                poly_derivative_eval(&coeffs[k], r)
            };
            let s0 = (1..=n)
                .map(|j| deriv(j as f64 * dr))
                .find(|d| *d != 0.0)
                .map(f64::signum);
            match s0 {
                None => radius,
                Some(s0) => (1..=n)
                    .map(|j| j as f64 * dr)
                    .find(|&r| deriv(r) * s0 < 0.0)
                    .map(|r| r - dr)
                    .filter(|&r| r > 0.0)
                    .unwrap_or(radius),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn eval_examples() {
        let step = RadialCost::step_decreasing(0.5, 1.0).unwrap();
        assert_eq!(step.eval(0.3).unwrap(), 0.0);
        assert_eq!(step.eval(0.8).unwrap(), -1.0);
        let sin = RadialCost::sinusoid(6.0).unwrap();
        assert!((sin.eval(FRAC_PI_2).unwrap() - 1.0).abs() < 1e-15);
        let pow = RadialCost::power_law(1.5, 1.0, 1.0).unwrap();
        assert!((pow.eval(0.25).unwrap() - 8.0).abs() < 1e-12);
        assert!(matches!(pow.eval(0.0), Err(Error::EvalAtSingularOrigin)));
        assert!(matches!(pow.eval(1.5), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn right_derivative_examples() {
        let sin = RadialCost::sinusoid(6.0).unwrap();
        assert_eq!(sin.right_derivative(1.0), 1f64.cos());
        let step = RadialCost::step_increasing(0.5, 1.0).unwrap();
        assert_eq!(step.right_derivative(0.5), 0.0);
        let pow = RadialCost::power_law(1.0, 1.0, 1.0).unwrap();
        assert!((pow.right_derivative(0.5) + 4.0).abs() < 1e-12);
    }

    #[test]
    fn poly_right_derivative_at_knot_uses_right_piece() {
        // r on [0, 0.5], then 1 - r on [0.5, 1].
        let c = RadialCost::polynomial(vec![0.5], vec![vec![0.0, 1.0], vec![1.0, -1.0]], 1.0).unwrap();
        assert_eq!(c.right_derivative(0.5), -1.0);
        assert_eq!(c.right_derivative(0.4999), 1.0);
    }

    #[test]
    fn integral_examples() {
        let pow = RadialCost::power_law(1.5, 1.0, 1.0).unwrap();
        assert!((pow.integral_sf(0.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(pow.integral_f(0.0, 1.0), Err(Error::DivergentIntegral)));
        let step = RadialCost::step_decreasing(0.5, 1.0).unwrap();
        assert!((step.integral_f(0.0, 1.0).unwrap() + 0.5).abs() < 1e-15);
        let sin = RadialCost::sinusoid(6.0).unwrap();
        assert!((sin.integral_f(0.0, PI).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_quadrature_at_origin() {
        let pow = RadialCost::power_law(0.5, 1.0, 1.0).unwrap();
        let exact = pow.integral_f(0.0, 0.7).unwrap();
        let quad = pow.integral_f_quadrature(0.0, 0.7).unwrap();
        assert!((exact - quad).abs() < 1e-9, "{exact} vs {quad}");
        let pow = RadialCost::power_law(1.5, 1.0, 1.0).unwrap();
        let quad = pow.integral_sf_quadrature(0.0, 1.0).unwrap();
        assert!((quad - 2.0).abs() < 1e-9);
    }

    #[test]
    fn growth_table_for_power_law() {
        use OriginGrowth::*;
        let cases = [
            (0.5, 1.0, IntegrableF),
            (1.0, 1.0, IntegrableSFOnly),
            (1.5, 1.0, IntegrableSFOnly),
            (2.0, 1.0, NonIntegrableSF),
            (2.5, 1.0, NonIntegrableSF),
            (0.5, -1.0, IntegrableF),
            (1.0, -1.0, NegativeNonIntegrable),
            (1.2, -1.0, NegativeNonIntegrable),
        ];
        for (alpha, sign, want) in cases {
            let c = RadialCost::power_law(alpha, sign, 1.0).unwrap();
            assert_eq!(c.origin_growth(), want, "alpha={alpha} sign={sign}");
            for g in OriginGrowth::ALL {
                let r = RadialCost::with_declared(
                    CostKind::PowerLaw { alpha, sign },
                    1.0,
                    2,
                    Some(g),
                    None,
                    None,
                );
                assert_eq!(r.is_ok(), g == want);
            }
        }
    }

    #[test]
    fn monotonicity_inference() {
        use OriginMonotone::*;
        assert_eq!(RadialCost::sinusoid(6.0).unwrap().origin_monotone(), IncreasingNearZero);
        assert_eq!(
            RadialCost::power_law(0.5, 1.0, 1.0).unwrap().origin_monotone(),
            DecreasingNearZero
        );
        assert_eq!(
            RadialCost::power_law(0.5, -1.0, 1.0).unwrap().origin_monotone(),
            IncreasingNearZero
        );
        let c = RadialCost::polynomial(vec![], vec![vec![1.0, 0.0, -2.0]], 1.0).unwrap();
        assert_eq!(c.origin_monotone(), DecreasingNearZero);
        let err = RadialCost::with_declared(
            CostKind::Sinusoid,
            6.0,
            2,
            None,
            Some(DecreasingNearZero),
            None,
        );
        assert!(matches!(err, Err(Error::InconsistentDeclaration(_))));
    }

    #[test]
    fn sinusoid_sign_change_count_matches_grid() {
        let sin = RadialCost::sinusoid(6.0).unwrap();
        assert_eq!(sin.derivative_sign_changes(), Some(2));
        let n = 10_000;
        let signs: Vec<f64> = (1..n)
            .map(|j| sin.right_derivative(6.0 * j as f64 / n as f64).signum())
            .collect();
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(changes, 2);
    }

    #[test]
    fn discontinuous_polynomial_is_rejected() {
        let r = RadialCost::polynomial(vec![0.5], vec![vec![0.0], vec![1.0]], 1.0);
        assert!(matches!(r, Err(Error::InvalidCost(_))));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"kind":"power","alpha":1.5,"sign":1,"R":1.0,"dimension":2,"origin_growth":"IntegrableSFOnly"}"#;
        let c = RadialCost::from_json(text).unwrap();
        assert_eq!(c.origin_growth(), OriginGrowth::IntegrableSFOnly);
        let again = RadialCost::from_spec(&c.to_spec()).unwrap();
        assert_eq!(c, again);
        let bad = r#"{"kind":"power","alpha":1.5,"R":1.0,"dimension":2,"origin_growth":"Bounded"}"#;
        assert!(matches!(RadialCost::from_json(bad), Err(Error::InconsistentDeclaration(_))));
        let missing = r#"{"kind":"step_decreasing","R":1.0,"dimension":2}"#;
        assert!(matches!(RadialCost::from_json(missing), Err(Error::InvalidCost(_))));
    }

    #[test]
    fn double_integral_matches_identity() {
        let sin = RadialCost::sinusoid(6.0).unwrap();
        // ∫_a^b ∫_c^s sin = ∫_a^b (cos c - cos s) ds
        let (c, a, b): (f64, f64, f64) = (0.5, 1.0, 2.5);
        let exact = (b - a) * c.cos() - (b.sin() - a.sin());
        assert!((sin.double_integral(c, a, b).unwrap() - exact).abs() < 1e-11);
    }
}
