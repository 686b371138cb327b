//! Explicit solutions for radially symmetric control of martingales with unit
//! quadratic variation in a ball.
//!
//! A [`RadialCost`] describes the running cost as a function of the radius.
//! [`build_schedule`] finds the radii where the optimal control switches
//! between radial and tangential motion, [`build_value`] turns that schedule
//! into the value function, and the [`sim`], [`montecarlo`] and [`hjb`]
//! modules check the result against simulation and the HJB equation.

pub mod cli;
pub mod cost;
pub mod error;
pub mod hjb;
pub mod montecarlo;
pub mod origin;
pub mod quadrature;
pub mod sim;
pub mod switching;
pub mod value;

pub use cost::{CostKind, CostSpec, OriginGrowth, OriginMonotone, RadialCost};
pub use error::{Error, Result};
pub use hjb::{verify, HjbReport, HjbStatus};
pub use montecarlo::{estimate, estimate_cost, radial_oracle, CostEstimate};
pub use origin::{classify_origin, OriginClassification, OriginRegime};
pub use sim::{simulate_path, ControlPolicy, PathResult, Regime, SimConfig};
pub use switching::{build_schedule, Case, PointLabel, SwitchPoint, SwitchingSchedule};
pub use value::{build_value, solve, Branch, PiecewiseValue, Side};
