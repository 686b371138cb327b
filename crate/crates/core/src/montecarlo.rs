//! Monte Carlo estimation and analytic oracles for the simulated policies.

use rayon::prelude::*;
use serde::Serialize;

use crate::cost::RadialCost;
use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::sim::{simulate_path, ControlPolicy, PathResult, Regime, SimConfig};
use crate::value::PiecewiseValue;

/// Allowance for discretisation bias in comparisons against analytic values.
pub const BIAS_ALLOWANCE: f64 = 5e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub ci95_halfwidth: f64,
    pub capped_fraction: f64,
}

/// Streaming mean and variance.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn finish(&self, capped_fraction: f64) -> CostEstimate {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        let se = (var / self.n as f64).sqrt();
        CostEstimate {
            mean: self.mean,
            std_error: se,
            n_paths: self.n,
            ci95_halfwidth: 1.96 * se,
            capped_fraction,
        }
    }
}

/// Summary of a batch of paths.
#[derive(Debug, Clone, Serialize)]
pub struct PathStatistics {
    pub cost: CostEstimate,
    pub exit_time: CostEstimate,
}

/// Simulate `cfg.n_paths` paths in parallel, returned in path order.
pub fn simulate_paths(
    cost: &RadialCost,
    policy: &ControlPolicy,
    x0: f64,
    cfg: &SimConfig,
) -> Result<Vec<PathResult>> {
    let mut cfg = cfg.clone();
    cfg.trace = false;
    cfg.positions = false;
    (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_path(cost, policy, x0, &cfg, i))
        .collect()
}

/// Cost and exit-time statistics over `cfg.n_paths` paths.
pub fn estimate(
    cost: &RadialCost,
    policy: &ControlPolicy,
    x0: f64,
    cfg: &SimConfig,
) -> Result<PathStatistics> {
    let paths = simulate_paths(cost, policy, x0, cfg)?;
    let mut c = Welford::default();
    let mut t = Welford::default();
    let mut capped = 0usize;
    for p in &paths {
        c.push(p.accumulated_cost);
        t.push(p.exit_time);
        capped += p.hit_cap as usize;
    }
    let frac = capped as f64 / paths.len() as f64;
    Ok(PathStatistics {
        cost: c.finish(frac),
        exit_time: t.finish(frac),
    })
}

pub fn estimate_cost(
    cost: &RadialCost,
    policy: &ControlPolicy,
    x0: f64,
    cfg: &SimConfig,
) -> Result<CostEstimate> {
    Ok(estimate(cost, policy, x0, cfg)?.cost)
}

fn signed_infinity(cost: &RadialCost) -> f64 {
    if cost.value(cost.radius() * 1e-9) < 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    }
}

/// Expected cost of pure radial motion from `x0`, from the Green's function of
/// Brownian motion reflected at 0 and killed at `R`.
pub fn radial_oracle(cost: &RadialCost, x0: f64) -> f64 {
    radial_oracle_on(cost, x0, cost.radius()).unwrap_or_else(|_| signed_infinity(cost))
}

/// Radial-motion cost until the radius first reaches `b`.
fn radial_oracle_on(cost: &RadialCost, x0: f64, b: f64) -> Result<f64> {
    let outer = 2.0 * (b * cost.integral_f(x0, b)? - cost.integral_sf(x0, b)?);
    let inner = if x0 > 0.0 {
        2.0 * (b - x0) * cost.integral_f(0.0, x0)?
    } else {
        0.0
    };
    Ok(outer + inner)
}

/// Expected cost of the constant-`lambda` control from `x0`, for `lambda` in
/// `(0, 1]`, from the regular solution of the radial generator equation.
pub fn lambda_oracle(cost: &RadialCost, lambda: f64, x0: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidConfig(format!("lambda must lie in (0, 1], got {lambda}")));
    }
    if lambda == 1.0 {
        return radial_oracle_on(cost, x0, cost.radius());
    }
    let radius = cost.radius();
    let k = (1.0 - lambda * lambda) / (lambda * lambda);
    let kinks = cost.kinks();
    let split = |lo: f64, hi: f64| {
        let mut cuts = vec![lo];
        cuts.extend(kinks.iter().copied().filter(|&c| c > lo && c < hi));
        cuts.push(hi);
        cuts
    };
    // r^{-k} ∫_0^r s^k f(s) ds = r ∫_0^1 u^k f(r u) du
    let integrand = |r: f64| -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let weighted = |u: f64| if u == 0.0 { 0.0 } else { u.powf(k) * cost.value(r * u) };
        let cuts: Vec<f64> = split(0.0, r).into_iter().map(|c| c / r).collect();
        r * cuts
            .windows(2)
            .map(|w| adaptive_simpson(weighted, w[0], w[1], 1e-13))
            .sum::<f64>()
    };
    let total: f64 = split(x0, radius)
        .windows(2)
        .map(|w| adaptive_simpson(integrand, w[0], w[1], 1e-10))
        .sum();
    Ok(2.0 / (lambda * lambda) * total)
}

/// `E(delta) = 2 ∫_0^delta (delta - 2y) f(y) dy`, the extra cost of running
/// radially inside `B_delta` before switching to tangential motion.
pub fn delta_error(cost: &RadialCost, delta: f64) -> Result<f64> {
    Ok(2.0 * delta * cost.integral_f(0.0, delta)? - 4.0 * cost.integral_sf(0.0, delta)?)
}

/// Analytic expected cost of `policy` from `x0`, where one is available.
pub fn policy_oracle(
    cost: &RadialCost,
    value: &PiecewiseValue,
    policy: &ControlPolicy,
    x0: f64,
) -> Option<f64> {
    let radius = cost.radius();
    match policy {
        ControlPolicy::PureRadial => Some(radial_oracle(cost, x0)),
        ControlPolicy::PureTangential => {
            if x0 > 0.0 {
                cost.integral_sf(x0, radius).ok().map(|i| 2.0 * i)
            } else {
                None
            }
        }
        ControlPolicy::ConstantLambda { lambda } => match Regime::from_lambda(*lambda) {
            Regime::Tangential => policy_oracle(cost, value, &ControlPolicy::PureTangential, x0),
            _ => lambda_oracle(cost, *lambda, x0).ok(),
        },
        ControlPolicy::OptimalSwitch { .. } => {
            if x0 == 0.0 && policy.undefined_at_origin() {
                None
            } else {
                value.eval(x0).ok()
            }
        }
        ControlPolicy::OriginDelta { delta, inner } => {
            if !inner.undefined_at_origin() || x0 >= *delta {
                policy_oracle(cost, value, inner, x0)
            } else {
                let patch = radial_oracle_on(cost, x0, *delta).ok()?;
                Some(patch + policy_oracle(cost, value, inner, *delta)?)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PolicyRow {
    pub policy: String,
    pub mean: f64,
    pub se: f64,
    pub n: usize,
    pub ci95: f64,
    pub capped_fraction: f64,
    pub analytic: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolicyComparison {
    pub x0: f64,
    pub value: Option<f64>,
    /// Ranked by estimated mean, best first.
    pub rows: Vec<PolicyRow>,
    /// The analytic value lies below every estimate plus its ci95.
    pub value_is_lower_bound: bool,
    /// The optimal estimate matches the analytic value within ci95 plus the
    /// bias allowance.
    pub optimal_matches_value: bool,
}

/// The four standard policies at `x0`, wrapped in a radial patch of radius
/// `delta` where they are undefined at the origin.
pub fn standard_policies(cost: &RadialCost, x0: f64, delta: f64) -> Result<Vec<ControlPolicy>> {
    let base = vec![
        ControlPolicy::optimal(cost)?,
        ControlPolicy::PureRadial,
        ControlPolicy::PureTangential,
        ControlPolicy::ConstantLambda { lambda: 0.5 },
    ];
    Ok(base
        .into_iter()
        .map(|p| {
            if x0 == 0.0 && p.undefined_at_origin() {
                p.with_origin_delta(delta)
            } else {
                p
            }
        })
        .collect())
}

pub fn compare_policies(
    cost: &RadialCost,
    value: &PiecewiseValue,
    x0: f64,
    cfg: &SimConfig,
    delta: f64,
) -> Result<PolicyComparison> {
    let v = value.eval(x0).ok();
    let mut rows = Vec::new();
    let mut optimal_matches_value = false;
    for policy in standard_policies(cost, x0, delta)? {
        let est = estimate_cost(cost, &policy, x0, cfg)?;
        if matches!(policy, ControlPolicy::OptimalSwitch { .. })
            || matches!(&policy, ControlPolicy::OriginDelta { inner, .. } if matches!(**inner, ControlPolicy::OptimalSwitch { .. }))
        {
            optimal_matches_value = v
                .map(|v| (est.mean - v).abs() <= est.ci95_halfwidth + BIAS_ALLOWANCE)
                .unwrap_or(false);
        }
        rows.push(PolicyRow {
            policy: policy.name(),
            mean: est.mean,
            se: est.std_error,
            n: est.n_paths,
            ci95: est.ci95_halfwidth,
            capped_fraction: est.capped_fraction,
            analytic: policy_oracle(cost, value, &policy, x0),
        });
    }
    rows.sort_by(|a, b| a.mean.total_cmp(&b.mean));
    let value_is_lower_bound = v
        .map(|v| rows.iter().all(|r| v <= r.mean + r.ci95))
        .unwrap_or(false);
    Ok(PolicyComparison {
        x0,
        value: v,
        rows,
        value_is_lower_bound,
        optimal_matches_value,
    })
}

/// Mean of `V(sqrt Z_{t∧τ}) + ∫_0^{t∧τ} f` at one observation time, and of
/// its increment since the previous time.
#[derive(Debug, Clone, Serialize)]
pub struct MartingalePoint {
    pub t: f64,
    pub level: CostEstimate,
    pub increment: CostEstimate,
}

pub fn martingale_profile(
    cost: &RadialCost,
    value: &PiecewiseValue,
    policy: &ControlPolicy,
    x0: f64,
    cfg: &SimConfig,
    times: &[f64],
) -> Result<Vec<MartingalePoint>> {
    let mut cfg = cfg.clone();
    cfg.observe = times.to_vec();
    let start = value.eval(x0)?;
    let paths = simulate_paths(cost, policy, x0, &cfg)?;
    let radius = cost.radius();
    let mut level = vec![Welford::default(); times.len()];
    let mut incr = vec![Welford::default(); times.len()];
    for p in &paths {
        let mut prev = start;
        for (i, o) in p.observations.iter().enumerate() {
            let m = value.eval(o.z.sqrt().min(radius))? + o.cost;
            level[i].push(m);
            incr[i].push(m - prev);
            prev = m;
        }
    }
    Ok(times
        .iter()
        .enumerate()
        .map(|(i, &t)| MartingalePoint {
            t,
            level: level[i].finish(0.0),
            increment: incr[i].finish(0.0),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::solve;

    #[test]
    fn radial_oracle_examples() {
        let step = RadialCost::step_decreasing(0.5, 1.0).unwrap();
        assert!((radial_oracle(&step, 0.0) + 0.25).abs() < 1e-12);
        let inc = RadialCost::step_increasing(0.5, 1.0).unwrap();
        assert!((radial_oracle(&inc, 0.0) + 0.75).abs() < 1e-12);
        let minus_one = RadialCost::polynomial(vec![], vec![vec![-1.0]], 1.0).unwrap();
        assert!((radial_oracle(&minus_one, 0.0) + 1.0).abs() < 1e-12);
        let divergent = RadialCost::power_law(1.2, -1.0, 1.0).unwrap();
        assert_eq!(radial_oracle(&divergent, 0.3), f64::NEG_INFINITY);
    }

    #[test]
    fn radial_oracle_matches_brute_force_quadrature() {
        let step = RadialCost::step_decreasing(0.5, 1.0).unwrap();
        let brute = 2.0 * adaptive_simpson(|y| (1.0 - y) * step.value(y), 0.5, 1.0, 1e-13);
        assert!((brute - radial_oracle(&step, 0.0)).abs() < 1e-10);
    }

    #[test]
    fn lambda_oracle_for_constant_cost_is_policy_free() {
        let c = RadialCost::polynomial(vec![], vec![vec![0.7]], 1.0).unwrap();
        for l in [0.3, 0.5, 0.9, 1.0] {
            for x0 in [0.0, 0.4] {
                let v = lambda_oracle(&c, l, x0).unwrap();
                assert!((v - 0.7 * (1.0 - x0 * x0)).abs() < 1e-8, "l={l} x0={x0}: {v}");
            }
        }
    }

    #[test]
    fn lambda_oracle_at_one_is_radial() {
        let sin = RadialCost::sinusoid(2.0).unwrap();
        let a = lambda_oracle(&sin, 1.0, 0.5).unwrap();
        let b = lambda_oracle(&sin, 1.0 - 1e-9, 0.5).unwrap();
        assert!((a - radial_oracle(&sin, 0.5)).abs() < 1e-12);
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn delta_error_for_root_cost() {
        let c = RadialCost::power_law(0.5, 1.0, 1.0).unwrap();
        for d in [0.1f64, 0.05, 0.025] {
            let e = delta_error(&c, d).unwrap();
            assert!((e - 4.0 / 3.0 * d.powf(1.5)).abs() < 1e-14);
        }
        let v = solve(&c).unwrap();
        let p = ControlPolicy::optimal(&c).unwrap().with_origin_delta(0.1);
        let o = policy_oracle(&c, &v, &p, 0.0).unwrap();
        assert!((o - v.eval(0.0).unwrap() - delta_error(&c, 0.1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn tangential_estimate_is_exact() {
        let sin = RadialCost::sinusoid(6.0).unwrap();
        let cfg = SimConfig {
            n_paths: 50,
            ..SimConfig::default()
        };
        let e = estimate_cost(&sin, &ControlPolicy::PureTangential, 1.0, &cfg).unwrap();
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.mean, 2.0 * sin.integral_sf(1.0, 6.0).unwrap());
    }

    #[test]
    fn small_radial_run_matches_exit_time() {
        let cost = RadialCost::sinusoid(1.0).unwrap();
        let cfg = SimConfig {
            n_paths: 4000,
            dt: 1e-3,
            ..SimConfig::default()
        };
        let s = estimate(&cost, &ControlPolicy::PureRadial, 0.4, &cfg).unwrap();
        assert!((s.exit_time.mean - 0.84).abs() < 4.0 * s.exit_time.std_error);
        assert!((s.cost.mean - radial_oracle(&cost, 0.4)).abs() < 4.0 * s.cost.std_error + 5e-3);
    }
}
