//! Monte Carlo comparison of the standard policies with the analytic value.
//!
//! ```text
//! cargo run --release --example estimate_policies
//! ```

use radial_control::montecarlo::compare_policies;
use radial_control::{solve, RadialCost, SimConfig};

fn main() -> radial_control::Result<()> {
    let cost = RadialCost::step_decreasing(0.5, 1.0)?;
    let value = solve(&cost)?;
    let cfg = SimConfig {
        n_paths: 20_000,
        ..SimConfig::default()
    };
    let table = compare_policies(&cost, &value, 0.0, &cfg, 0.01)?;

    println!("V(0) = {:.4}", table.value.unwrap_or(f64::NAN));
    println!("{:<22} {:>9} {:>9} {:>9}", "policy", "mean", "ci95", "exact");
    for row in &table.rows {
        let exact = row.analytic.map_or("-".into(), |a| format!("{a:.4}"));
        println!("{:<22} {:>9.4} {:>9.4} {exact:>9}", row.policy, row.mean, row.ci95);
    }
    println!(
        "value is a lower bound: {}, optimal matches value: {}",
        table.value_is_lower_bound, table.optimal_matches_value
    );
    Ok(())
}
