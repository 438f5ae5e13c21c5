//! Flexibility of a zinc galvanizing furnace in Nordic reserve markets:
//! a thermal model of the furnace, its baseline hysteresis control, and
//! day-ahead bidding optimisers for frequency containment (FCR-D) and
//! manual frequency restoration (mFRR) reserves.

pub mod backtest;
pub mod control;
pub mod error;
pub mod estimation;
pub mod fcr;
pub mod frequency;
pub mod grid;
pub mod market_data;
pub mod mfrr;
pub mod par;
pub mod report;
pub mod thermal;

pub use error::{Error, Result};
pub use grid::{Zone, Zones};
pub use par::Execution;
pub use thermal::{FurnaceParameters, FurnaceState, LidSchedule, PowerInput, Setpoints};
pub use zincflex_solver as solver;
