//! Declarative game configuration shared by the library, the Monte Carlo
//! harness, and the CLI.
//!
//! Stochastic runs are reproducible by construction: the master seed is part
//! of the config, and replicate `i` of any parallel sweep uses the derived
//! seed `master_seed + i`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::DeviationEvent;
use crate::protocol::Forecast;
use crate::strategies::{RealityPolicy, StrategyError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("forecast schedule has {got} entries but horizon is {horizon}")]
    ScheduleLength { got: usize, horizon: usize },
    #[error("stochastic reality policy requires an explicit master seed")]
    MissingSeed,
}

/// Per-round forecast schedule: either one forecast repeated every round or
/// an explicit per-round list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForecastSchedule {
    Repeat { forecast: Forecast },
    Explicit { forecasts: Vec<Forecast> },
}

impl ForecastSchedule {
    pub fn forecast(&self, n: usize) -> Result<Forecast, StrategyError> {
        match self {
            ForecastSchedule::Repeat { forecast } => Ok(*forecast),
            ForecastSchedule::Explicit { forecasts } => forecasts
                .get(n)
                .copied()
                .ok_or(StrategyError::ReplayExhausted(forecasts.len())),
        }
    }

    /// Interval widths for rounds `0..horizon`.
    pub fn widths(&self, horizon: usize) -> Result<Vec<f64>, StrategyError> {
        (0..horizon).map(|n| Ok(self.forecast(n)?.width())).collect()
    }

    /// `C = sum of squared widths` over the horizon.
    pub fn c_total(&self, horizon: usize) -> Result<f64, StrategyError> {
        Ok(self.widths(horizon)?.iter().map(|w| w * w).sum())
    }
}

/// Sceptic's strategy spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScepticSpec {
    /// The exponential hedge with an explicit `h`.
    Hedge { h: f64 },
    /// The exponential hedge with `h = 4 N t / C` derived from the event.
    OptimalForEvent,
    /// Never bet.
    NoBet,
}

/// A full game description: horizon, forecast schedule, Reality policy,
/// Sceptic spec, optional deviation event, and the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub horizon: usize,
    pub forecasts: ForecastSchedule,
    pub reality: RealityPolicy,
    #[serde(default = "default_sceptic")]
    pub sceptic: ScepticSpec,
    #[serde(default)]
    pub event: Option<DeviationEvent>,
    #[serde(default)]
    pub master_seed: u64,
}

fn default_sceptic() -> ScepticSpec {
    ScepticSpec::Hedge { h: 0.0 }
}

/// Deterministic generator for a given seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

impl GameConfig {
    pub fn new(
        horizon: usize,
        forecasts: ForecastSchedule,
        reality: RealityPolicy,
        master_seed: u64,
    ) -> Self {
        GameConfig {
            horizon,
            forecasts,
            reality,
            sceptic: default_sceptic(),
            event: None,
            master_seed,
        }
    }

    /// Fixed-outcome game with the same forecast every round.
    pub fn replay(horizon: usize, forecast: Forecast, outcomes: Vec<f64>) -> Self {
        GameConfig::new(
            horizon,
            ForecastSchedule::Repeat { forecast },
            RealityPolicy::Replay { outcomes },
            0,
        )
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let ForecastSchedule::Explicit { forecasts } = &self.forecasts {
            if forecasts.len() != self.horizon {
                return Err(ConfigError::ScheduleLength {
                    got: forecasts.len(),
                    horizon: self.horizon,
                });
            }
        }
        Ok(())
    }

    pub fn rng(&self) -> ChaCha8Rng {
        seeded_rng(self.master_seed)
    }

    /// Generator for replicate `index` of a parallel sweep.
    pub fn replicate_rng(&self, index: u64) -> ChaCha8Rng {
        seeded_rng(self.master_seed.wrapping_add(index))
    }

    /// The hedge exponent this config's Sceptic uses.
    pub fn hedge_h(&self) -> Result<f64, StrategyError> {
        match &self.sceptic {
            ScepticSpec::Hedge { h } => Ok(*h),
            ScepticSpec::NoBet => Ok(0.0),
            ScepticSpec::OptimalForEvent => {
                let event = self.event.as_ref().expect("optimal_for_event requires an event");
                let c = self.forecasts.c_total(self.horizon)?;
                Ok(4.0 * event.horizon as f64 * event.threshold / c)
            }
        }
    }
}
