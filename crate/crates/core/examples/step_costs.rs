//! The two step costs have closed-form values and no switching points.

use radial_control::montecarlo::radial_oracle;
use radial_control::{solve, RadialCost};

fn main() -> radial_control::Result<()> {
    let rho = 0.5;
    let decreasing = RadialCost::step_decreasing(rho, 1.0)?;
    let increasing = RadialCost::step_increasing(rho, 1.0)?;
    let vd = solve(&decreasing)?;
    let vi = solve(&increasing)?;

    println!("{:>5} {:>14} {:>14} {:>14}", "r", "V decreasing", "V increasing", "radial only");
    for k in 0..=10 {
        let r = k as f64 / 10.0;
        println!(
            "{r:>5.2} {:>14.6} {:>14.6} {:>14.6}",
            vd.eval(r)?,
            vi.eval(r)?,
            radial_oracle(&increasing, r)
        );
    }

    // Tangential motion is optimal for the decreasing step, so its value has
    // a kink where the cost jumps.
    let kink = vd.check_fit();
    println!("\nderivative jump at rho: {:.3}", kink.at(rho).unwrap().derivative_gap);
    Ok(())
}
