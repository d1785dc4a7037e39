//! Exact game-theoretic upper probabilities on small discretized games.
//!
//! Reality's move set is restricted to a finite grid inside each round's
//! interval, which makes the minimax definition computable by backward
//! induction. Restricting Reality can only shrink the upper probability, so
//! the oracle's value is a lower bound on the interval-game value; this is
//! the safe direction for the sandwich check
//! `upper_probability <= strategy_value(optimal h) <= tail bound`.
//!
//! The inner one-round problem — the cheapest superhedge of a payoff using
//! one ticket — is the minimum over `M` of a maximum of finitely many affine
//! functions of `M`. It is solved exactly at an intersection of two of the
//! lines, never by numeric line search.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{hoeffding_bound, optimal_h, BoundError, DeviationEvent};
use crate::protocol::Forecast;
use crate::strategies::hedge_tickets;

/// Horizon cap for exact state enumeration.
pub const MAX_HORIZON: usize = 6;
/// Per-round grid size cap.
pub const MAX_GRID_POINTS: usize = 9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("outcome grid is empty")]
    EmptyGrid,
    #[error("outcome grid needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("grid point {value} outside [{lower}, {upper}]")]
    GridPointOutOfRange { value: f64, lower: f64, upper: f64 },
    #[error("grid must contain both interval endpoints")]
    MissingEndpoint,
    #[error("game exceeds oracle caps (horizon <= {MAX_HORIZON}, grid <= {MAX_GRID_POINTS} points): horizon {horizon}, max grid {grid}")]
    StateExplosion { horizon: usize, grid: usize },
    #[error("{got} forecasts for {expected} rounds")]
    LengthMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Bound(#[from] BoundError),
}

/// A finite-horizon game with Reality restricted to per-round outcome grids.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedGame {
    forecasts: Vec<Forecast>,
    grids: Vec<Vec<f64>>,
}

impl DiscretizedGame {
    pub fn new(forecasts: Vec<Forecast>, grids: Vec<Vec<f64>>) -> Result<Self, OracleError> {
        if grids.len() != forecasts.len() {
            return Err(OracleError::LengthMismatch { got: grids.len(), expected: forecasts.len() });
        }
        for (f, grid) in forecasts.iter().zip(&grids) {
            validate_grid(grid, f)?;
        }
        Ok(DiscretizedGame { forecasts, grids })
    }

    /// Same forecast every round, `m` evenly spaced outcomes per round.
    pub fn uniform(forecast: Forecast, horizon: usize, m: usize) -> Result<Self, OracleError> {
        if m < 2 {
            return Err(OracleError::TooFewPoints(m));
        }
        let (a, b) = (forecast.lower(), forecast.upper());
        let grid: Vec<f64> = (0..m)
            .map(|i| a + (b - a) * i as f64 / (m - 1) as f64)
            .collect();
        DiscretizedGame::new(vec![forecast; horizon], vec![grid; horizon])
    }

    pub fn horizon(&self) -> usize {
        self.forecasts.len()
    }

    pub fn forecasts(&self) -> &[Forecast] {
        &self.forecasts
    }

    pub fn grids(&self) -> &[Vec<f64>] {
        &self.grids
    }

    /// `C = sum of squared widths`.
    pub fn c_total(&self) -> f64 {
        self.forecasts.iter().map(|f| f.width() * f.width()).sum()
    }

    fn check_caps(&self) -> Result<(), OracleError> {
        let grid = self.grids.iter().map(Vec::len).max().unwrap_or(0);
        if self.horizon() > MAX_HORIZON || grid > MAX_GRID_POINTS {
            return Err(OracleError::StateExplosion { horizon: self.horizon(), grid });
        }
        Ok(())
    }
}

fn validate_grid(grid: &[f64], forecast: &Forecast) -> Result<(), OracleError> {
    if grid.is_empty() {
        return Err(OracleError::EmptyGrid);
    }
    if grid.len() < 2 {
        return Err(OracleError::TooFewPoints(grid.len()));
    }
    for &x in grid {
        if !forecast.contains(x) {
            return Err(OracleError::GridPointOutOfRange {
                value: x,
                lower: forecast.lower(),
                upper: forecast.upper(),
            });
        }
    }
    let has = |v: f64| grid.contains(&v);
    if !has(forecast.lower()) || !has(forecast.upper()) {
        return Err(OracleError::MissingEndpoint);
    }
    Ok(())
}

/// Cheapest one-round superhedge: `inf over M of max over grid x of
/// [payoff(x) - M (x - mean)]`.
///
/// Each grid point contributes an affine function of `M`; their maximum is
/// convex piecewise-linear, so the infimum sits at a pairwise intersection
/// (or at `M = 0` when all slopes agree in sign, which a valid grid with the
/// mean strictly interior rules out).
pub fn one_round_upper_expectation(
    grid: &[f64],
    payoff: impl Fn(f64) -> f64,
    forecast: &Forecast,
) -> Result<f64, OracleError> {
    if grid.is_empty() {
        return Err(OracleError::EmptyGrid);
    }
    let lines: Vec<(f64, f64)> = grid
        .iter()
        .map(|&x| (payoff(x), x - forecast.mean()))
        .collect();
    let envelope = |m: f64| {
        lines
            .iter()
            .map(|&(p, d)| p - m * d)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut best = envelope(0.0);
    for (i, &(pi, di)) in lines.iter().enumerate() {
        for &(pj, dj) in &lines[i + 1..] {
            if di != dj {
                let m = (pi - pj) / (di - dj);
                if m.is_finite() {
                    best = best.min(envelope(m));
                }
            }
        }
    }
    Ok(best)
}

/// Keys backward-induction states. Centered sums are exact integer multiples
/// of a common step whenever the grids form an affine lattice (always true
/// for the uniform constructor); otherwise states are keyed by rounding the
/// sum to 12 decimal digits.
enum StateKeyer {
    Lattice { step: f64 },
    Rounded,
}

impl StateKeyer {
    fn for_game(game: &DiscretizedGame) -> StateKeyer {
        let mut values = Vec::new();
        for (f, grid) in game.forecasts.iter().zip(&game.grids) {
            for &x in grid {
                let c = x - f.mean();
                if c.abs() > 1e-12 {
                    values.push(c.abs());
                }
            }
        }
        match common_step(&values) {
            Some(step) => StateKeyer::Lattice { step },
            None => StateKeyer::Rounded,
        }
    }

    fn key(&self, sum: f64) -> i64 {
        match self {
            StateKeyer::Lattice { step } => (sum / step).round() as i64,
            StateKeyer::Rounded => (sum * 1e12).round() as i64,
        }
    }
}

/// Approximate gcd of a set of positive reals, when one exists above 1e-9.
fn common_step(values: &[f64]) -> Option<f64> {
    const TOL: f64 = 1e-9;
    let mut g = 0.0f64;
    for &v in values {
        g = float_gcd(g, v, TOL);
        if g < TOL {
            return None;
        }
    }
    if g < TOL {
        return None;
    }
    // every value must be an integer multiple of g
    for &v in values {
        let k = (v / g).round();
        if (v - k * g).abs() > TOL * v.max(1.0) {
            return None;
        }
    }
    Some(g)
}

fn float_gcd(a: f64, b: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b > tol {
        let r = a % b;
        a = b;
        b = if r < tol || b - r < tol { 0.0 } else { r };
    }
    a
}

fn forward_states(game: &DiscretizedGame, keyer: &StateKeyer) -> Vec<HashMap<i64, f64>> {
    let n = game.horizon();
    let mut stages: Vec<HashMap<i64, f64>> = Vec::with_capacity(n + 1);
    let mut current = HashMap::new();
    current.insert(keyer.key(0.0), 0.0);
    stages.push(current);
    for r in 0..n {
        let mean = game.forecasts[r].mean();
        let mut next: HashMap<i64, f64> = HashMap::new();
        for (&_, &sum) in &stages[r] {
            for &x in &game.grids[r] {
                let s = sum + (x - mean);
                next.entry(keyer.key(s)).or_insert(s);
            }
        }
        stages.push(next);
    }
    stages
}

fn event_eps(event: &DeviationEvent) -> f64 {
    1e-9 * (event.horizon as f64 * event.threshold).abs().max(1.0)
}

/// Exact upper probability of the deviation event in the discretized game:
/// final values are the event indicator on the realized centered sum, and
/// each earlier stage prices the continuation with
/// [`one_round_upper_expectation`].
pub fn upper_probability(
    game: &DiscretizedGame,
    event: &DeviationEvent,
) -> Result<f64, OracleError> {
    game.check_caps()?;
    let n = game.horizon();
    let keyer = StateKeyer::for_game(game);
    let stages = forward_states(game, &keyer);
    let threshold_sum = n as f64 * event.threshold;
    let eps = event_eps(event);

    let mut values: HashMap<i64, f64> = stages[n]
        .iter()
        .map(|(&k, &sum)| (k, f64::from(sum >= threshold_sum - eps)))
        .collect();

    for r in (0..n).rev() {
        let forecast = game.forecasts[r];
        let mean = forecast.mean();
        let grid = &game.grids[r];
        let entries: Vec<(i64, f64)> = stages[r].iter().map(|(&k, &s)| (k, s)).collect();
        values = entries
            .into_par_iter()
            .map(|(k, sum)| {
                let v = one_round_upper_expectation(
                    grid,
                    |x| values[&keyer.key(sum + (x - mean))],
                    &forecast,
                )
                .expect("grid validated at construction");
                // indicator payoffs keep values in [0, 1]; trim fp noise
                (k, v.clamp(0.0, 1.0))
            })
            .collect();
    }
    Ok(values[&keyer.key(0.0)])
}

/// Initial capital the fixed exponential hedge needs to reach 1 on the event
/// under worst-case grid play.
///
/// The hedge's capital is multiplicative: holding the strategy fixed, the
/// final capital is the initial capital times a product of per-round factors
/// determined by Reality's choices. The needed capital is therefore the
/// reciprocal of the smallest factor product over grid traces inside the
/// event (0 when the event is unreachable on the grid).
pub fn strategy_value(
    game: &DiscretizedGame,
    event: &DeviationEvent,
    h: f64,
) -> Result<f64, OracleError> {
    game.check_caps()?;
    let n = game.horizon();
    let keyer = StateKeyer::for_game(game);
    let stages = forward_states(game, &keyer);
    let threshold_sum = n as f64 * event.threshold;
    let eps = event_eps(event);

    // log of the per-round capital growth factor for each grid outcome
    let log_factors: Vec<Vec<f64>> = game
        .forecasts
        .iter()
        .zip(&game.grids)
        .map(|(f, grid)| {
            let m = hedge_tickets(1.0, f, h).expect("valid forecast");
            grid.iter().map(|&x| (1.0 + m * (x - f.mean())).ln()).collect()
        })
        .collect();

    // cost(state) = min log capital growth over continuations landing in the event
    let mut cost: HashMap<i64, f64> = stages[n]
        .iter()
        .map(|(&k, &sum)| {
            (k, if sum >= threshold_sum - eps { 0.0 } else { f64::INFINITY })
        })
        .collect();

    for r in (0..n).rev() {
        let mean = game.forecasts[r].mean();
        let grid = &game.grids[r];
        let mut next: HashMap<i64, f64> = HashMap::new();
        for (&k, &sum) in &stages[r] {
            let mut best = f64::INFINITY;
            for (i, &x) in grid.iter().enumerate() {
                let c = cost[&keyer.key(sum + (x - mean))];
                if c.is_finite() {
                    best = best.min(log_factors[r][i] + c);
                }
            }
            next.insert(k, best);
        }
        cost = next;
    }
    let c0 = cost[&keyer.key(0.0)];
    Ok(if c0.is_finite() { (-c0).exp() } else { 0.0 })
}

/// The three quantities of the sandwich check for one game and event.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SandwichReport {
    pub upper_probability: f64,
    /// Needed initial capital of the hedge at the bound-optimal `h`.
    pub strategy_value: f64,
    /// The closed-form tail bound for the game's `C`.
    pub hoeffding_bound: f64,
    pub optimal_h: f64,
    /// `upper_probability <= strategy_value <= hoeffding_bound` within `tol`.
    pub ordered: bool,
}

pub fn sandwich_report(
    game: &DiscretizedGame,
    event: &DeviationEvent,
    tol: f64,
) -> Result<SandwichReport, OracleError> {
    let c = game.c_total();
    let h = optimal_h(event, c)?;
    let up = upper_probability(game, event)?;
    let sv = strategy_value(game, event, h)?;
    let bound = hoeffding_bound(event, c)?.bound;
    Ok(SandwichReport {
        upper_probability: up,
        strategy_value: sv,
        hoeffding_bound: bound,
        optimal_h: h,
        ordered: up <= sv + tol && sv <= bound + tol,
    })
}
