//! One planar path under the optimal control for `sin r`, written as CSV
//! (`t,x1,x2`) to stdout. Pipe it into any plotting tool.
//!
//! ```text
//! cargo run --release --example simulate_trajectory > path.csv
//! ```

use radial_control::{simulate_path, ControlPolicy, RadialCost, SimConfig};

fn main() -> radial_control::Result<()> {
    let cost = RadialCost::sinusoid(6.0)?;
    let policy = ControlPolicy::optimal(&cost)?;
    let cfg = SimConfig {
        dt: 1e-3,
        seed: 1,
        positions: true,
        trace: true,
        ..SimConfig::default()
    };
    let path = simulate_path(&cost, &policy, 1.0, &cfg, 0)?;

    let mut w = csv::Writer::from_writer(std::io::stdout());
    for p in path.positions.as_deref().unwrap_or_default() {
        w.serialize(p)?;
    }
    w.flush()?;

    let trace = path.trace.unwrap_or_default();
    let switches = trace.windows(2).filter(|w| w[0].regime != w[1].regime).count();
    eprintln!(
        "exit time {:.3}, cost {:.3}, {switches} regime changes",
        path.exit_time, path.accumulated_cost
    );
    Ok(())
}
