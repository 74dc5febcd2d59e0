//! Stationary equilibria of a monetary-search economy with fractional-reserve
//! banking and unsecured credit.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregates;
pub mod banking;
pub mod calibration;
pub mod econometrics;
pub mod equilibrium;
pub mod error;
pub mod io;
pub mod model;
pub mod par;
pub mod policy;
pub mod preferences;
pub mod roots;
pub mod series;

pub use aggregates::{AggregateStats, OutputDef, WelfareReport, WelfareShare};
pub use banking::{BankAllocation, BankCostParams};
pub use equilibrium::{Equilibrium, MeetingOutcome, Regime, Thresholds};
pub use error::{Error, Result};
pub use model::Model;
pub use policy::{PolicyPoint, Sigma};
pub use preferences::{Preferences, TradeOutcome};
pub use par::Exec;
