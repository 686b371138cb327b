//! Switching points and value function for `f(r) = sin r` on a ball of
//! radius 6.
//!
//! ```text
//! cargo run --example solve_sinusoid
//! ```

use radial_control::{solve, RadialCost, Side};

fn main() -> radial_control::Result<()> {
    let cost = RadialCost::sinusoid(6.0)?;
    let v = solve(&cost)?;

    println!("case {:?}", v.schedule().case);
    for p in &v.schedule().points {
        println!("  {:?} = {:.9}", p.label, p.value);
    }

    println!("\n{:>6} {:>12} {:>12}  branch", "r", "V", "V'");
    for k in 0..=12 {
        let r = 0.5 * k as f64;
        println!(
            "{r:>6.2} {:>12.6} {:>12.6}  {}",
            v.eval(r)?,
            v.derivative(r, Side::Right)?,
            v.branch_at(r).as_str()
        );
    }

    let fit = v.check_fit();
    for e in &fit.entries {
        println!(
            "fit at {} = {:.6}: |dV| = {:.1e}, |dV'| = {:.1e}",
            e.kind, e.point, e.value_gap, e.derivative_gap
        );
    }
    Ok(())
}
