//! The betting protocol as a validated state machine.
//!
//! Each round: Forecaster announces `[lower, upper]` and a mean price,
//! Sceptic announces a ticket count, Reality announces an outcome inside the
//! interval, and Sceptic's capital is updated by the affine rule
//! `K_n = K_{n-1} + tickets * (outcome - mean) - discard`, with a nonnegative
//! discard standing for the protocol's option to throw money away.
//!
//! Reality stepping outside the announced interval is a hard error here: the
//! interval constraint is part of the protocol, not a payoff branch. Interval
//! endpoints must satisfy `lower < mean < upper` strictly; degenerate
//! intervals are rejected because the hedge strategy divides by the width.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("invalid forecast: lower={lower}, upper={upper}, mean={mean} (need lower < mean < upper, all finite)")]
    InvalidForecast { lower: f64, upper: f64, mean: f64 },
    #[error("outcome {outcome} outside forecast interval [{lower}, {upper}]")]
    OutcomeOutOfRange { outcome: f64, lower: f64, upper: f64 },
    #[error("discard must be nonnegative and finite, got {0}")]
    NegativeDiscard(f64),
}

/// One round's Forecaster move: an interval and a mean price strictly inside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawForecast", into = "RawForecast")]
pub struct Forecast {
    lower: f64,
    upper: f64,
    mean: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawForecast {
    a: f64,
    b: f64,
    mu: f64,
}

impl TryFrom<RawForecast> for Forecast {
    type Error = ProtocolError;
    fn try_from(r: RawForecast) -> Result<Self, ProtocolError> {
        Forecast::new(r.a, r.b, r.mu)
    }
}

impl From<Forecast> for RawForecast {
    fn from(f: Forecast) -> Self {
        RawForecast { a: f.lower, b: f.upper, mu: f.mean }
    }
}

impl Forecast {
    pub fn new(lower: f64, upper: f64, mean: f64) -> Result<Self, ProtocolError> {
        let finite = lower.is_finite() && upper.is_finite() && mean.is_finite();
        if !finite || !(lower < upper) || !(lower < mean && mean < upper) {
            return Err(ProtocolError::InvalidForecast { lower, upper, mean });
        }
        Ok(Forecast { lower, upper, mean })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Interval width `upper - lower`; always positive.
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// A completed round: Forecaster's move plus Reality's in-interval outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Round {
    forecast: Forecast,
    outcome: f64,
}

impl Round {
    pub fn new(forecast: Forecast, outcome: f64) -> Result<Self, ProtocolError> {
        if !outcome.is_finite() || !forecast.contains(outcome) {
            return Err(ProtocolError::OutcomeOutOfRange {
                outcome,
                lower: forecast.lower,
                upper: forecast.upper,
            });
        }
        Ok(Round { forecast, outcome })
    }

    pub fn forecast(&self) -> &Forecast {
        &self.forecast
    }

    pub fn outcome(&self) -> f64 {
        self.outcome
    }

    /// Centered outcome `x - mu`, the per-ticket payoff of the round.
    pub fn deviation(&self) -> f64 {
        self.outcome - self.forecast.mean
    }
}

/// Ordered sequence of completed rounds; an element of the sample space.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    rounds: Vec<Round>,
}

impl Trace {
    pub fn new() -> Self {
        Trace::default()
    }

    pub fn from_rounds(rounds: Vec<Round>) -> Self {
        Trace { rounds }
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn push(&mut self, round: Round) {
        self.rounds.push(round);
    }

    /// Sum of centered outcomes over all rounds.
    pub fn deviation_sum(&self) -> f64 {
        self.rounds.iter().map(Round::deviation).sum()
    }
}

/// One ledger entry per round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub tickets: f64,
    pub capital_after: f64,
    pub discarded: f64,
}

/// Sceptic's capital path: initial capital plus per-round tickets, resulting
/// capital, and the amount thrown away.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapitalLedger {
    initial: f64,
    entries: Vec<LedgerEntry>,
}

impl CapitalLedger {
    pub fn new(initial: f64) -> Self {
        CapitalLedger { initial, entries: Vec::new() }
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    /// Capital after the last recorded round (the initial capital if none).
    pub fn capital(&self) -> f64 {
        self.entries.last().map_or(self.initial, |e| e.capital_after)
    }

    fn push(&mut self, tickets: f64, outcome_minus_mean: f64, discard: f64) {
        let capital_after = self.capital() + tickets * outcome_minus_mean - discard;
        self.entries.push(LedgerEntry { tickets, capital_after, discarded: discard });
    }

    /// Appends an entry with a pre-computed capital value (used when reading
    /// a ledger file back, so stored values survive unchanged).
    pub(crate) fn push_raw(&mut self, tickets: f64, capital_after: f64, discarded: f64) {
        self.entries.push(LedgerEntry { tickets, capital_after, discarded });
    }
}

/// Full game state: the trace so far and Sceptic's ledger. A pure value;
/// every operation returns a new state.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    trace: Trace,
    ledger: CapitalLedger,
}

/// Starts a game with the given initial capital. The protocol places no
/// restriction on the sign of the initial capital.
pub fn new_game(initial_capital: f64) -> GameState {
    GameState {
        trace: Trace::new(),
        ledger: CapitalLedger::new(initial_capital),
    }
}

/// Plays one full round: validates the moves, appends the round to the trace,
/// and applies the capital update.
pub fn play_round(
    state: GameState,
    forecast: Forecast,
    tickets: f64,
    outcome: f64,
    discard: f64,
) -> Result<GameState, ProtocolError> {
    if !(discard >= 0.0) || !discard.is_finite() {
        return Err(ProtocolError::NegativeDiscard(discard));
    }
    let round = Round::new(forecast, outcome)?;
    let mut state = state;
    state.ledger.push(tickets, round.deviation(), discard);
    state.trace.push(round);
    Ok(state)
}

impl GameState {
    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn ledger(&self) -> &CapitalLedger {
        &self.ledger
    }

    pub fn capital(&self) -> f64 {
        self.ledger.capital()
    }

    pub fn rounds_played(&self) -> usize {
        self.trace.len()
    }

    pub fn into_parts(self) -> (Trace, CapitalLedger) {
        (self.trace, self.ledger)
    }
}

/// Raw round data as it appears on the wire, before validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub a: f64,
    pub b: f64,
    pub mu: f64,
    pub x: f64,
}

impl From<&Round> for RoundRecord {
    fn from(r: &Round) -> Self {
        RoundRecord {
            a: r.forecast.lower,
            b: r.forecast.upper,
            mu: r.forecast.mean,
            x: r.outcome,
        }
    }
}

/// A single invariant violation found in a raw trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceViolation {
    /// 1-based round index.
    pub round: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonpositiveWidth,
    MeanNotInterior,
    OutcomeOutOfRange,
    NonFinite,
}

/// Checks every protocol invariant on raw round data. Violations are report
/// entries, not errors; an empty report means the trace is a legal
/// sample-space element.
pub fn validate_trace(records: &[RoundRecord]) -> Vec<TraceViolation> {
    let mut report = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let round = i + 1;
        if !(r.a.is_finite() && r.b.is_finite() && r.mu.is_finite() && r.x.is_finite()) {
            report.push(TraceViolation { round, kind: ViolationKind::NonFinite });
            continue;
        }
        if !(r.a < r.b) {
            report.push(TraceViolation { round, kind: ViolationKind::NonpositiveWidth });
        } else if !(r.a < r.mu && r.mu < r.b) {
            report.push(TraceViolation { round, kind: ViolationKind::MeanNotInterior });
        }
        if !(r.a <= r.x && r.x <= r.b) {
            report.push(TraceViolation { round, kind: ViolationKind::OutcomeOutOfRange });
        }
    }
    report
}

/// Builds a validated trace from raw records, failing on the first violation.
pub fn trace_from_records(records: &[RoundRecord]) -> Result<Trace, ProtocolError> {
    let mut trace = Trace::new();
    for r in records {
        let forecast = Forecast::new(r.a, r.b, r.mu)?;
        trace.push(Round::new(forecast, r.x)?);
    }
    Ok(trace)
}
