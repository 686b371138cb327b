//! Starting at the origin with a cost that is singular there. The optimal
//! control is undefined at 0, so it is patched with radial motion inside a
//! small ball, and the extra cost vanishes as the ball shrinks.

use radial_control::montecarlo::{delta_error, estimate_cost};
use radial_control::{solve, ControlPolicy, RadialCost, SimConfig};

fn main() -> radial_control::Result<()> {
    let cost = RadialCost::power_law(0.5, 1.0, 1.0)?;
    let v0 = solve(&cost)?.eval(0.0)?;
    let cfg = SimConfig {
        n_paths: 20_000,
        ..SimConfig::default()
    };
    println!("V(0) = {v0:.6}");
    for delta in [0.2, 0.1, 0.05, 0.025] {
        let policy = ControlPolicy::optimal(&cost)?.with_origin_delta(delta);
        let e = estimate_cost(&cost, &policy, 0.0, &cfg)?;
        println!(
            "delta={delta:<6} mean={:.5} excess={:.5} predicted={:.5}",
            e.mean,
            e.mean - v0,
            delta_error(&cost, delta)?
        );
    }
    Ok(())
}
