//! Behaviour of the value function at the origin for singular costs.

use serde::Serialize;

use crate::cost::{OriginGrowth, OriginMonotone, RadialCost};
use crate::error::{Error, Result};
use crate::value::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OriginRegime {
    /// The value is finite everywhere and equals the constructed function.
    FiniteEqualsV,
    /// The value is `-inf` on the whole ball.
    MinusInfinityEverywhere,
    /// The value is `+inf` at the origin and finite elsewhere.
    PlusInfinityAtOrigin,
    /// The weak value at the origin is finite; equality with the strong
    /// value there is not established.
    WeakFiniteStrongOpen,
}

#[derive(Debug, Clone, Serialize)]
pub struct OriginClassification {
    pub regime: OriginRegime,
    pub v0: Option<f64>,
    pub notes: String,
}

/// Regime from the declared metadata alone.
pub fn classify_declared(
    monotone: OriginMonotone,
    growth: OriginGrowth,
    dimension: usize,
) -> Result<OriginRegime> {
    use OriginGrowth::*;
    use OriginMonotone::*;
    use OriginRegime::*;
    match (monotone, growth) {
        (IncreasingNearZero, Bounded | IntegrableF) => Ok(FiniteEqualsV),
        (IncreasingNearZero, NegativeNonIntegrable) => Ok(MinusInfinityEverywhere),
        (DecreasingNearZero, Bounded | IntegrableF) => Ok(FiniteEqualsV),
        (DecreasingNearZero, NonIntegrableSF) => Ok(PlusInfinityAtOrigin),
        (DecreasingNearZero, IntegrableSFOnly) if dimension >= 3 => Ok(FiniteEqualsV),
        (DecreasingNearZero, IntegrableSFOnly) => Ok(WeakFiniteStrongOpen),
        (IncreasingNearZero, IntegrableSFOnly | NonIntegrableSF) => {
            Err(Error::InconsistentDeclaration(format!(
                "a cost increasing near 0 cannot have {growth:?} growth"
            )))
        }
        (DecreasingNearZero, NegativeNonIntegrable) => Err(Error::InconsistentDeclaration(
            "a cost decreasing near 0 cannot have a non-integrable negative singularity".into(),
        )),
    }
}

/// Classify the origin and attach `V(0)` where it is finite.
pub fn classify_origin(cost: &RadialCost) -> Result<OriginClassification> {
    let regime = classify_declared(cost.origin_monotone(), cost.origin_growth(), cost.dimension())?;
    let (v0, notes) = match regime {
        OriginRegime::FiniteEqualsV => {
            let v = solve(cost)?;
            (Some(v.eval(0.0)?), "value finite on the closed ball and equal to V".to_string())
        }
        OriginRegime::WeakFiniteStrongOpen => {
            let v = solve(cost)?;
            (
                Some(v.eval(0.0)?),
                "v0 is the weak value at the origin; the strong value there is not established in d = 2"
                    .to_string(),
            )
        }
        OriginRegime::MinusInfinityEverywhere => (
            None,
            "integral of the cost diverges to -inf at the origin; value is -inf everywhere".to_string(),
        ),
        OriginRegime::PlusInfinityAtOrigin => (
            None,
            "integral of s f(s) diverges at the origin; value is +inf at 0 and finite elsewhere"
                .to_string(),
        ),
    };
    Ok(OriginClassification { regime, v0, notes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_examples() {
        let c = classify_origin(&RadialCost::power_law(0.5, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(c.regime, OriginRegime::FiniteEqualsV);
        assert!((c.v0.unwrap() - 4.0 / 3.0).abs() < 1e-12);

        let c = classify_origin(&RadialCost::power_law(2.5, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(c.regime, OriginRegime::PlusInfinityAtOrigin);
        assert!(c.v0.is_none());

        let c = classify_origin(&RadialCost::power_law(1.2, -1.0, 1.0).unwrap()).unwrap();
        assert_eq!(c.regime, OriginRegime::MinusInfinityEverywhere);

        let c = classify_origin(&RadialCost::power_law(1.5, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(c.regime, OriginRegime::WeakFiniteStrongOpen);
        assert!((c.v0.unwrap() - 4.0).abs() < 1e-12);

        let cost = RadialCost::power_law(1.5, 1.0, 1.0).unwrap().with_dimension(3).unwrap();
        let c = classify_origin(&cost).unwrap();
        assert_eq!(c.regime, OriginRegime::FiniteEqualsV);
        assert!((c.v0.unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn table_is_total() {
        for m in [OriginMonotone::IncreasingNearZero, OriginMonotone::DecreasingNearZero] {
            for g in OriginGrowth::ALL {
                for d in [2, 3] {
                    let _ = classify_declared(m, g, d);
                }
            }
        }
    }

    #[test]
    fn json_shape() {
        let c = classify_origin(&RadialCost::power_law(2.5, 1.0, 1.0).unwrap()).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.starts_with(r#"{"regime":"PlusInfinityAtOrigin","v0":null"#));
    }
}
