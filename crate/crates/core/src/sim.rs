//! Path simulation of the squared radius `Z = |X|^2` under a control policy.
//!
//! Radial and constant-lambda stretches are stepped on a time grid. Tangential
//! stretches are deterministic (`dZ = dt`) and are advanced in closed form to
//! the next regime change, so they consume no random numbers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::f64::consts::PI;

use crate::cost::RadialCost;
use crate::error::{Error, Result};
use crate::switching::{build_schedule, Case, SwitchingSchedule};

/// Instantaneous control regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    Radial,
    Tangential,
    /// Mixture with radial weight `lambda` in `(0, 1)`.
    Lambda(f64),
}

impl Regime {
    pub fn from_lambda(lambda: f64) -> Self {
        if lambda >= 1.0 {
            Regime::Radial
        } else if lambda <= 0.0 {
            Regime::Tangential
        } else {
            Regime::Lambda(lambda)
        }
    }

    pub fn lambda(self) -> f64 {
        match self {
            Regime::Radial => 1.0,
            Regime::Tangential => 0.0,
            Regime::Lambda(l) => l,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Radial => "radial",
            Regime::Tangential => "tangential",
            Regime::Lambda(_) => "lambda",
        }
    }
}

/// A simulatable control.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlPolicy {
    PureRadial,
    PureTangential,
    OptimalSwitch { schedule: SwitchingSchedule },
    ConstantLambda { lambda: f64 },
    /// Radial inside `B_delta`, `inner` outside.
    OriginDelta { delta: f64, inner: Box<ControlPolicy> },
}

impl ControlPolicy {
    /// The switching policy for `cost`.
    pub fn optimal(cost: &RadialCost) -> Result<Self> {
        Ok(ControlPolicy::OptimalSwitch {
            schedule: build_schedule(cost)?,
        })
    }

    /// Parse `optimal`, `radial`, `tangential` or `lambda=<v>`.
    pub fn parse(text: &str, cost: &RadialCost) -> Result<Self> {
        match text {
            "optimal" => Self::optimal(cost),
            "radial" => Ok(ControlPolicy::PureRadial),
            "tangential" => Ok(ControlPolicy::PureTangential),
            other => {
                let v = other
                    .strip_prefix("lambda=")
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown policy '{other}'")))?;
                Ok(ControlPolicy::ConstantLambda { lambda: v })
            }
        }
    }

    pub fn with_origin_delta(self, delta: f64) -> Self {
        ControlPolicy::OriginDelta {
            delta,
            inner: Box::new(self),
        }
    }

    pub fn name(&self) -> String {
        match self {
            ControlPolicy::PureRadial => "radial".into(),
            ControlPolicy::PureTangential => "tangential".into(),
            ControlPolicy::OptimalSwitch { .. } => "optimal".into(),
            ControlPolicy::ConstantLambda { lambda } => format!("lambda={lambda}"),
            ControlPolicy::OriginDelta { delta, inner } => format!("{}+delta={delta}", inner.name()),
        }
    }

    /// Whether the policy needs a radial patch to start from the origin.
    pub fn undefined_at_origin(&self) -> bool {
        self.compile().regime(0.0) == Regime::Tangential
    }

    /// Check parameters against `cost`.
    pub fn validate(&self, cost: &RadialCost) -> Result<()> {
        match self {
            ControlPolicy::PureRadial | ControlPolicy::PureTangential => Ok(()),
            ControlPolicy::ConstantLambda { lambda } => {
                if (0.0..=1.0).contains(lambda) {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig(format!("lambda must lie in [0, 1], got {lambda}")))
                }
            }
            ControlPolicy::OptimalSwitch { schedule } => {
                if schedule.case != Case::from_monotone(cost.origin_monotone()) {
                    return Err(Error::InvalidConfig(
                        "schedule case does not match the cost".into(),
                    ));
                }
                if (schedule.radius - cost.radius()).abs() > 1e-12 * cost.radius() {
                    return Err(Error::InvalidConfig(
                        "schedule radius does not match the cost".into(),
                    ));
                }
                schedule.validate()
            }
            ControlPolicy::OriginDelta { delta, inner } => {
                if !(*delta > 0.0 && *delta < cost.eta()) {
                    return Err(Error::InvalidConfig(format!(
                        "delta must lie in (0, {}), got {delta}",
                        cost.eta()
                    )));
                }
                inner.validate(cost)
            }
        }
    }

    fn compile(&self) -> Compiled {
        match self {
            ControlPolicy::PureRadial => Compiled::lambda(1.0),
            ControlPolicy::PureTangential => Compiled::lambda(0.0),
            ControlPolicy::ConstantLambda { lambda } => Compiled::lambda(*lambda),
            ControlPolicy::OptimalSwitch { schedule } => Compiled {
                delta2: 0.0,
                base: Base::Bands(
                    schedule
                        .tangential_bands()
                        .into_iter()
                        .map(|(lo, hi)| (lo * lo, hi * hi))
                        .collect(),
                ),
            },
            ControlPolicy::OriginDelta { delta, inner } => {
                let mut c = inner.compile();
                c.delta2 = c.delta2.max(delta * delta);
                c
            }
        }
    }

    /// Regime used at squared radius `z`.
    pub fn regime(&self, z: f64) -> Regime {
        self.compile().regime(z)
    }
}

#[derive(Debug, Clone)]
enum Base {
    Lambda(f64),
    /// Tangential on `[lo, hi)` in squared radius, radial elsewhere.
    Bands(Vec<(f64, f64)>),
}

#[derive(Debug, Clone)]
struct Compiled {
    delta2: f64,
    base: Base,
}

impl Compiled {
    fn lambda(l: f64) -> Self {
        Compiled {
            delta2: 0.0,
            base: Base::Lambda(l),
        }
    }

    fn regime(&self, z: f64) -> Regime {
        if z < self.delta2 {
            return Regime::Radial;
        }
        match &self.base {
            Base::Lambda(l) => Regime::from_lambda(*l),
            Base::Bands(bands) => {
                if bands.iter().any(|&(lo, hi)| z >= lo && z < hi) {
                    Regime::Tangential
                } else {
                    Regime::Radial
                }
            }
        }
    }

    /// Squared radius where a tangential stretch starting at `z` ends.
    fn tangential_until(&self, z: f64) -> f64 {
        match &self.base {
            Base::Lambda(_) => f64::INFINITY,
            Base::Bands(bands) => bands
                .iter()
                .find(|&&(lo, hi)| z >= lo && z < hi)
                .map_or(z, |&(_, hi)| hi),
        }
    }
}

/// Discretisation of radial and constant-lambda steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// `z + dt + 2 lambda sqrt(z) dW`, clamped at 0.
    EulerClamp,
    /// `(sqrt(z) + lambda dW)^2 + (1 - lambda^2) dt`; exact for radial motion.
    #[default]
    CompletedSquare,
}

impl Scheme {
    pub fn step(self, z: f64, lambda: f64, dw: f64, dt: f64) -> f64 {
        match self {
            Scheme::EulerClamp => (z + dt + 2.0 * lambda * z.sqrt() * dw).max(0.0),
            Scheme::CompletedSquare => {
                let y = z.sqrt() + lambda * dw;
                y * y + (1.0 - lambda * lambda) * dt
            }
        }
    }
}

/// One Euler step of the squared radius with clamping at zero.
pub fn step_z(z: f64, regime: Regime, dw: f64, dt: f64) -> f64 {
    match regime {
        Regime::Tangential => z + dt,
        r => Scheme::EulerClamp.step(z, r.lambda(), dw, dt),
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub dt: f64,
    pub seed: u64,
    pub n_paths: usize,
    /// Defaults to `10 R^2`.
    pub max_time: Option<f64>,
    pub scheme: Scheme,
    /// Record `(t, Z, regime)` samples.
    pub trace: bool,
    /// Record planar positions (meaningful in `d = 2`).
    pub positions: bool,
    /// Times at which to record the stopped state and running cost.
    pub observe: Vec<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-4,
            seed: 0,
            n_paths: 100_000,
            max_time: None,
            scheme: Scheme::default(),
            trace: false,
            positions: false,
            observe: Vec::new(),
        }
    }
}

impl SimConfig {
    pub fn max_time_for(&self, radius: f64) -> f64 {
        self.max_time.unwrap_or(10.0 * radius * radius)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidConfig("need at least one path".into()));
        }
        if let Some(m) = self.max_time {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidConfig(format!("max_time must be positive, got {m}")));
            }
        }
        if self.observe.windows(2).any(|w| w[0] > w[1]) || self.observe.iter().any(|t| *t < 0.0) {
            return Err(Error::InvalidConfig("observation times must be sorted and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TracePoint {
    pub t: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    pub regime: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct PositionPoint {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
}

/// State stopped at `min(t, exit time)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Observation {
    pub t: f64,
    pub z: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathResult {
    pub exit_time: f64,
    pub accumulated_cost: f64,
    pub hit_cap: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TracePoint>>,
    #[serde(skip)]
    pub positions: Option<Vec<PositionPoint>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub observations: Vec<Observation>,
}

/// Generator for path `index`: one ChaCha stream per path under a shared key.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn angle_rng(seed: u64, index: u64) -> ChaCha8Rng {
    path_rng(seed ^ 0x9E37_79B9_7F4A_7C15, index)
}

struct Recorder {
    trace: Option<Vec<TracePoint>>,
    positions: Option<Vec<PositionPoint>>,
    theta: f64,
    angle_rng: Option<ChaCha8Rng>,
}

impl Recorder {
    fn push(&mut self, t: f64, z: f64, regime: Regime) {
        if let Some(tr) = self.trace.as_mut() {
            tr.push(TracePoint {
                t,
                z,
                regime: regime.name(),
            });
        }
        if let Some(ps) = self.positions.as_mut() {
            let r = z.sqrt();
            ps.push(PositionPoint {
                t,
                x1: r * self.theta.cos(),
                x2: r * self.theta.sin(),
            });
        }
    }

    fn rotate(&mut self, lambda: f64, h: f64, r: f64) {
        if let Some(rng) = self.angle_rng.as_mut() {
            if lambda < 1.0 && r > 0.0 {
                let dw: f64 = h.sqrt() * rng.sample::<f64, _>(StandardNormal);
                self.theta += (1.0 - lambda * lambda).sqrt() * dw / r;
            }
        }
    }

    fn active(&self) -> bool {
        self.trace.is_some() || self.positions.is_some()
    }
}

/// Simulate one path from radius `x0` until exit from the ball or the time cap.
pub fn simulate_path(
    cost: &RadialCost,
    policy: &ControlPolicy,
    x0: f64,
    cfg: &SimConfig,
    path_index: u64,
) -> Result<PathResult> {
    cfg.validate()?;
    policy.validate(cost)?;
    let radius = cost.radius();
    if !(0.0..radius).contains(&x0) {
        return Err(Error::InvalidConfig(format!("x0 must lie in [0, {radius}), got {x0}")));
    }
    let compiled = policy.compile();
    let r2 = radius * radius;
    let mut z = x0 * x0;
    if z == 0.0 && compiled.regime(0.0) == Regime::Tangential {
        return Err(Error::PolicyUndefinedAtOrigin);
    }
    let max_time = cfg.max_time_for(radius);
    let dt = cfg.dt;
    let mut rng = path_rng(cfg.seed, path_index);
    let mut rec = Recorder {
        trace: cfg.trace.then(Vec::new),
        positions: cfg.positions.then(Vec::new),
        theta: 0.0,
        angle_rng: cfg.positions.then(|| angle_rng(cfg.seed, path_index)),
    };
    rec.push(0.0, z, compiled.regime(z));

    let obs = &cfg.observe;
    let mut next_obs = 0;
    let mut observations = Vec::with_capacity(obs.len());
    let mut t = 0.0;
    let mut acc = 0.0;
    let mut hit_cap = false;

    loop {
        while next_obs < obs.len() && t >= obs[next_obs] {
            observations.push(Observation {
                t: obs[next_obs],
                z,
                cost: acc,
            });
            next_obs += 1;
        }
        if z >= r2 {
            break;
        }
        if t >= max_time {
            hit_cap = true;
            break;
        }
        let horizon = obs.get(next_obs).copied().unwrap_or(f64::INFINITY).min(max_time);
        let regime = compiled.regime(z);

        if regime == Regime::Tangential {
            let stop = compiled.tangential_until(z).min(r2);
            let to_stop = stop - z;
            let to_horizon = horizon - t;
            let span = to_stop.min(to_horizon);
            if rec.active() {
                let n = (span / dt).ceil().max(1.0) as u64;
                let mut prev = 0.0;
                for i in 1..=n {
                    let tau = if i == n { span } else { i as f64 * dt };
                    rec.rotate(0.0, tau - prev, (z + tau).sqrt());
                    rec.push(t + tau, z + tau, regime);
                    prev = tau;
                }
            }
            let lo = z.sqrt();
            let hi = (z + span).sqrt().min(radius);
            acc += 2.0 * cost.integral_sf(lo, hi)?;
            if to_stop <= to_horizon {
                z = stop;
                t += span;
            } else {
                z += span;
                t = horizon;
            }
            continue;
        }

        let lambda = regime.lambda();
        let to_horizon = horizon - t;
        let h = dt.min(to_horizon);
        let r = z.sqrt();
        let dw = h.sqrt() * rng.sample::<f64, _>(StandardNormal);
        let z_new = cfg.scheme.step(z, lambda, dw, h);
        let r_new = z_new.sqrt();
        let f_left = if z == 0.0 && cost.singular_at_origin() {
            cost.value(r_new.min(radius))
        } else {
            cost.value(r)
        };
        if lambda == 1.0 && r + dw < 0.0 {
            rec.theta += PI;
        }
        rec.rotate(lambda, h, r_new);

        if z_new >= r2 {
            let frac = ((radius - r) / (r_new - r)).clamp(0.0, 1.0);
            acc += f_left * frac * h;
            t += frac * h;
            z = r2;
            rec.push(t, z, regime);
            continue;
        }
        // The continuous path may have left the ball between grid points.
        let exponent = 2.0 * (radius - r) * (radius - r_new) / (lambda * lambda * h);
        if exponent < 40.0 && rng.random::<f64>() < (-exponent).exp() {
            acc += f_left * 0.5 * h;
            t += 0.5 * h;
            z = r2;
            rec.push(t, z, regime);
            continue;
        }
        acc += f_left * h;
        if h == to_horizon {
            t = horizon;
        } else {
            t += h;
        }
        z = z_new;
        rec.push(t, z, compiled.regime(z));
    }

    for &t_obs in &obs[next_obs..] {
        observations.push(Observation {
            t: t_obs,
            z,
            cost: acc,
        });
    }
    Ok(PathResult {
        exit_time: t,
        accumulated_cost: acc,
        hit_cap,
        trace: rec.trace,
        positions: rec.positions,
        observations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_z_examples() {
        assert!((step_z(0.25, Regime::Tangential, 0.3, 0.01) - 0.26).abs() < 1e-15);
        assert_eq!(step_z(0.0, Regime::Radial, 0.7, 1e-4), 1e-4);
        for (z, dw) in [(0.3, 0.01), (0.7, -0.02), (0.0, 0.5)] {
            assert_eq!(
                step_z(z, Regime::from_lambda(1.0), dw, 1e-3),
                step_z(z, Regime::Radial, dw, 1e-3)
            );
        }
    }

    #[test]
    fn completed_square_keeps_mean_increment() {
        // E[(sqrt z + l dW)^2 + (1 - l^2) h] = z + h.
        let z: f64 = 0.3;
        let h = 1e-3;
        let l = 0.5;
        let exact = z + l * l * h + (1.0 - l * l) * h;
        assert!((exact - (z + h)).abs() < 1e-15);
    }

    #[test]
    fn tangential_from_half_is_deterministic() {
        let cost = RadialCost::step_decreasing(0.5, 1.0).unwrap();
        let cfg = SimConfig {
            trace: true,
            ..SimConfig::default()
        };
        let p = simulate_path(&cost, &ControlPolicy::PureTangential, 0.5, &cfg, 0).unwrap();
        assert_eq!(p.exit_time, 0.75);
        assert!((p.accumulated_cost + 0.75).abs() < 1e-15);
        let trace = p.trace.unwrap();
        assert!(trace.len() > 7000);
        for pt in &trace {
            assert_eq!(pt.z, 0.25 + pt.t);
        }
    }

    #[test]
    fn tangential_at_origin_needs_delta() {
        let cost = RadialCost::step_decreasing(0.5, 1.0).unwrap();
        let cfg = SimConfig::default();
        let err = simulate_path(&cost, &ControlPolicy::PureTangential, 0.0, &cfg, 0);
        assert!(matches!(err, Err(Error::PolicyUndefinedAtOrigin)));
        let opt = ControlPolicy::optimal(&cost).unwrap();
        assert!(matches!(
            simulate_path(&cost, &opt, 0.0, &cfg, 0),
            Err(Error::PolicyUndefinedAtOrigin)
        ));
        let ok = simulate_path(&cost, &opt.with_origin_delta(0.01), 0.0, &cfg, 0).unwrap();
        assert!((ok.accumulated_cost + 0.75).abs() < 1e-12);
    }

    #[test]
    fn paths_are_reproducible() {
        let cost = RadialCost::sinusoid(2.0).unwrap();
        let cfg = SimConfig {
            dt: 1e-3,
            ..SimConfig::default()
        };
        let a = simulate_path(&cost, &ControlPolicy::PureRadial, 0.5, &cfg, 17).unwrap();
        let b = simulate_path(&cost, &ControlPolicy::PureRadial, 0.5, &cfg, 17).unwrap();
        let c = simulate_path(&cost, &ControlPolicy::PureRadial, 0.5, &cfg, 18).unwrap();
        assert_eq!(a.accumulated_cost.to_bits(), b.accumulated_cost.to_bits());
        assert_eq!(a.exit_time.to_bits(), b.exit_time.to_bits());
        assert_ne!(a.exit_time.to_bits(), c.exit_time.to_bits());
    }

    #[test]
    fn position_trace_stays_consistent_with_radius() {
        let cost = RadialCost::sinusoid(6.0).unwrap();
        let cfg = SimConfig {
            dt: 1e-2,
            trace: true,
            positions: true,
            ..SimConfig::default()
        };
        let policy = ControlPolicy::optimal(&cost).unwrap();
        let p = simulate_path(&cost, &policy, 1.0, &cfg, 3).unwrap();
        let trace = p.trace.unwrap();
        let pos = p.positions.unwrap();
        assert_eq!(trace.len(), pos.len());
        for (a, b) in trace.iter().zip(&pos) {
            assert!((a.z - (b.x1 * b.x1 + b.x2 * b.x2)).abs() < 1e-9 * (1.0 + a.z));
        }
        // Positions do not perturb the cost path.
        let plain = SimConfig { dt: 1e-2, ..SimConfig::default() };
        let q = simulate_path(&cost, &policy, 1.0, &plain, 3).unwrap();
        assert_eq!(p.accumulated_cost.to_bits(), q.accumulated_cost.to_bits());
    }

    #[test]
    fn observations_are_stopped_states() {
        let cost = RadialCost::step_decreasing(0.5, 1.0).unwrap();
        let cfg = SimConfig {
            observe: vec![0.1, 0.3, 0.5, 2.0],
            ..SimConfig::default()
        };
        let p = simulate_path(&cost, &ControlPolicy::PureTangential, 0.3, &cfg, 0).unwrap();
        let o = &p.observations;
        assert_eq!(o.len(), 4);
        assert!((o[0].z - 0.19).abs() < 1e-15);
        assert!((o[1].z - 0.39).abs() < 1e-15);
        assert!((o[1].cost + 0.14).abs() < 1e-12);
        assert_eq!(o[3].z, 1.0);
        assert!((o[3].cost - p.accumulated_cost).abs() < 1e-15);
    }

    #[test]
    fn policy_parsing() {
        let cost = RadialCost::sinusoid(6.0).unwrap();
        assert_eq!(ControlPolicy::parse("radial", &cost).unwrap(), ControlPolicy::PureRadial);
        assert_eq!(
            ControlPolicy::parse("lambda=0.5", &cost).unwrap(),
            ControlPolicy::ConstantLambda { lambda: 0.5 }
        );
        assert!(ControlPolicy::parse("bogus", &cost).is_err());
        let bad = ControlPolicy::ConstantLambda { lambda: 1.5 };
        assert!(bad.validate(&cost).is_err());
        let bad_delta = ControlPolicy::PureTangential.with_origin_delta(2.0);
        assert!(bad_delta.validate(&cost).is_err());
    }

    #[test]
    fn optimal_regimes_follow_bands() {
        let cost = RadialCost::sinusoid(6.0).unwrap();
        let policy = ControlPolicy::optimal(&cost).unwrap();
        assert_eq!(policy.regime(1.0), Regime::Radial);
        assert_eq!(policy.regime(9.0), Regime::Tangential);
        assert_eq!(policy.regime(25.0), Regime::Radial);
        let ControlPolicy::OptimalSwitch { schedule } = &policy else {
            unreachable!()
        };
        let s1 = schedule.points[1].value;
        assert_eq!(policy.regime(s1 * s1), Regime::Radial);
        assert_eq!(policy.regime(s1 * s1 * (1.0 - 1e-12)), Regime::Tangential);
    }
}
