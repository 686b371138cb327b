//! Finiteness of the value at the origin for power-law costs `±r^-alpha`.

use radial_control::{classify_origin, RadialCost};

fn main() -> radial_control::Result<()> {
    for (alpha, sign, d) in [
        (0.5, 1.0, 2),
        (0.5, -1.0, 2),
        (1.2, -1.0, 2),
        (1.5, 1.0, 2),
        (1.5, 1.0, 3),
        (2.5, 1.0, 2),
    ] {
        let cost = RadialCost::power_law(alpha, sign, 1.0)?.with_dimension(d)?;
        let c = classify_origin(&cost)?;
        let v0 = c.v0.map_or("-".to_string(), |v| format!("{v:.6}"));
        println!(
            "alpha={alpha:<4} sign={sign:+} d={d}  {:<24} v0={v0:<10} {:?}",
            format!("{:?}", c.regime),
            cost.origin_growth()
        );
    }
    Ok(())
}
