//! Game of forecasting bounded variables.
//!
//! A perfect-information protocol between three players: Forecaster announces
//! an interval `[a, b]` and a mean price `mu`, Sceptic buys `M` tickets that
//! pay `x` and cost `mu`, Reality picks an outcome `x` in the interval. On top
//! of the protocol this crate provides:
//!
//! - the exponential wealth process `prod exp(h(x_n - mu_n) - h^2 (b_n - a_n)^2 / 8)`
//!   and the explicit hedge strategy that makes Sceptic's capital dominate it
//!   ([`strategies::hedge_tickets`]);
//! - checkable forms of every inequality used to establish that the process is
//!   a supermartingale ([`supermartingale`]);
//! - the resulting tail bound `exp(-2 N^2 t^2 / C)` on the upper probability of
//!   a mean deviation, with `C` the sum of squared interval widths ([`bounds`]);
//! - an exact backward-induction oracle that computes game-theoretic upper
//!   probabilities on small discretized games, used to cross-validate the bound
//!   and the strategy ([`oracle`]).

pub mod bounds;
pub mod config;
pub mod io;
pub mod oracle;
pub mod protocol;
pub mod strategies;
pub mod supermartingale;

pub use bounds::DeviationEvent;
pub use config::GameConfig;
pub use protocol::{CapitalLedger, Forecast, GameState, Round, Trace};
