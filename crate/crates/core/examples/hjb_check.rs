//! Finite-difference residuals of the constructed value, and what happens
//! when it is perturbed.

use radial_control::hjb::{self, HjbStatus};
use radial_control::{solve, RadialCost};

fn main() -> radial_control::Result<()> {
    let cost = RadialCost::sinusoid(6.0)?;
    let v = solve(&cost)?;
    let report = hjb::verify(&v, &cost)?;
    println!("constructed value: {} (max violation {:.2e})", report.status.as_str(), report.max_violation);

    let mut exclude = v.schedule().values();
    exclude.extend(cost.kinks());
    let bumped = hjb::verify_fn(|r| Ok(v.eval(r)? + 0.01 * (5.0 * r).sin()), &cost, &exclude, hjb::DEFAULT_TOL)?;
    println!("perturbed value:   {}", bumped.status.as_str());
    if bumped.status == HjbStatus::Fail {
        for p in &bumped.worst {
            println!(
                "  r={:.4} radial={:+.3e} tangential={:+.3e}",
                p.r, p.res_radial, p.res_tangential
            );
        }
    }
    Ok(())
}
